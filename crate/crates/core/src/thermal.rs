//! Preparation angles, inverse temperatures, and the diagonal thermal
//! ensemble built from averaging +theta/-theta coherent preparations.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// One qubit's preparation: rotation angle theta and energy gap omega.
/// Excited population p1 = sin^2(theta/2), so beta*omega = -ln(p1/p0).
/// theta > pi/2 means population inversion (negative beta).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitSpec {
    pub theta: f64,
    pub omega: f64,
}

impl QubitSpec {
    pub fn new(theta: f64, omega: f64) -> Self {
        QubitSpec { theta, omega }
    }

    /// Gap omega = 1, the default energy unit.
    pub fn with_unit_gap(theta: f64) -> Self {
        QubitSpec { theta, omega: 1.0 }
    }

    /// (ground, excited) populations.
    pub fn populations(&self) -> [f64; 2] {
        let p1 = (self.theta / 2.0).sin().powi(2);
        [1.0 - p1, p1]
    }

    /// beta * omega; infinite at theta = 0 or pi.
    pub fn beta_omega(&self) -> Result<f64> {
        theta_to_beta_omega(self.theta)
    }
}

/// beta*omega = -ln(sin^2(theta/2) / cos^2(theta/2)); errors on the boundary
/// where one population vanishes.
pub fn theta_to_beta_omega(theta: f64) -> Result<f64> {
    if !(0.0..=std::f64::consts::PI).contains(&theta)
        || theta == 0.0
        || theta == std::f64::consts::PI
    {
        return Err(Error::InfiniteBeta(theta));
    }
    let p1 = (theta / 2.0).sin().powi(2);
    Ok(((1.0 - p1) / p1).ln())
}

/// Inverse of [`theta_to_beta_omega`]: theta = 2 atan(e^(-bw/2)).
pub fn beta_omega_to_theta(beta_omega: f64) -> f64 {
    2.0 * (-beta_omega / 2.0).exp().atan()
}

/// Single-qubit Gibbs populations at the given beta*omega.
pub fn gibbs_populations(beta_omega: f64) -> [f64; 2] {
    let w = (-beta_omega).exp();
    [1.0 / (1.0 + w), w / (1.0 + w)]
}

/// The incoherent mixture of all 2^n sign choices {±theta_k}; its averaged
/// density matrix is exactly diagonal with product populations.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalEnsemble {
    specs: Vec<QubitSpec>,
}

impl DiagonalEnsemble {
    pub fn new(specs: Vec<QubitSpec>) -> Self {
        DiagonalEnsemble { specs }
    }

    pub fn specs(&self) -> &[QubitSpec] {
        &self.specs
    }

    pub fn qubit_count(&self) -> usize {
        self.specs.len()
    }

    /// Product of per-qubit (p0, p1); qubit 0 is the least significant bit.
    pub fn populations(&self) -> Vec<f64> {
        let mut p = vec![1.0];
        for spec in &self.specs {
            let [g, x] = spec.populations();
            let mut next = vec![0.0; 2 * p.len()];
            for (i, v) in p.iter().enumerate() {
                next[i] = v * g;
                next[i + p.len()] = v * x;
            }
            p = next;
        }
        p
    }

    /// All 2^n sign patterns; bit k of the pattern index flips qubit k.
    pub fn sign_patterns(&self) -> Vec<Vec<i8>> {
        let n = self.specs.len();
        (0..1usize << n)
            .map(|m| (0..n).map(|k| if (m >> k) & 1 == 1 { -1 } else { 1 }).collect())
            .collect()
    }

    /// Statevector of one coherent preparation: ⊗_k Ry(s_k * theta_k)|0>.
    /// Its basis populations are independent of the signs.
    pub fn coherent_preparation_state(&self, signs: &[i8]) -> Result<Vec<Complex64>> {
        if signs.len() != self.specs.len() {
            return Err(Error::DimensionMismatch(signs.len(), self.specs.len()));
        }
        let mut state = vec![Complex64::new(1.0, 0.0)];
        for (spec, &s) in self.specs.iter().zip(signs) {
            let half = f64::from(s) * spec.theta / 2.0;
            let (a, b) = (half.cos(), half.sin());
            let mut next = vec![Complex64::new(0.0, 0.0); 2 * state.len()];
            for (i, amp) in state.iter().enumerate() {
                next[i] = amp * a;
                next[i + state.len()] = amp * b;
            }
            state = next;
        }
        Ok(state)
    }

    /// Average of |psi><psi| over every sign pattern. Exposed for tests and
    /// diagnostics: its off-diagonal part cancels to machine precision.
    pub fn averaged_density(&self) -> Array2<Complex64> {
        let dim = 1usize << self.specs.len();
        let mut rho = Array2::from_elem((dim, dim), Complex64::new(0.0, 0.0));
        let patterns = self.sign_patterns();
        let weight = 1.0 / patterns.len() as f64;
        for signs in &patterns {
            let psi = self.coherent_preparation_state(signs).expect("lengths match");
            for i in 0..dim {
                for j in 0..dim {
                    rho[[i, j]] += psi[i] * psi[j].conj() * weight;
                }
            }
        }
        rho
    }
}
