//! Synthetic readout noise, confusion-matrix estimation, inverse
//! compensation, and finite-shot sampling.

use ndarray::Array2;
use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::QubitOrdering;

/// Entries of compensated vectors in (-NEG_TOL, 0) are clamped to zero;
/// anything more negative is a hard error.
pub const NEG_TOL: f64 = 1e-6;

/// Per-qubit confusion pairs: eps01 = P(read 1 | true 0), eps10 = P(read 0 | true 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutNoiseProfile {
    pairs: Vec<(f64, f64)>,
}

impl ReadoutNoiseProfile {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        for &(a, b) in &pairs {
            for e in [a, b] {
                if !(0.0..0.5).contains(&e) {
                    return Err(Error::ErrorRate(e));
                }
            }
        }
        Ok(ReadoutNoiseProfile { pairs })
    }

    /// Symmetric per-qubit rates.
    pub fn symmetric(rates: &[f64]) -> Result<Self> {
        Self::new(rates.iter().map(|&e| (e, e)).collect())
    }

    /// Noise-free profile on n qubits.
    pub fn noiseless(qubit_count: usize) -> Self {
        ReadoutNoiseProfile { pairs: vec![(0.0, 0.0); qubit_count] }
    }

    /// Error rates in the 0.07-0.2 band of the older 5-qubit processors.
    pub fn tenerife_like() -> Self {
        Self::symmetric(&[0.07, 0.12, 0.2]).expect("rates in range")
    }

    /// The ~0.015-0.045 band of the newer processor generation.
    pub fn yorktown_like() -> Self {
        Self::symmetric(&[0.015, 0.03, 0.045]).expect("rates in range")
    }

    pub fn qubit_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    /// Repeat the first rate pair cyclically up to `qubit_count` qubits.
    pub fn extended_to(&self, qubit_count: usize) -> Self {
        let pairs = (0..qubit_count).map(|k| self.pairs[k % self.pairs.len()]).collect();
        ReadoutNoiseProfile { pairs }
    }
}

/// Column-stochastic confusion matrix M: column j is the measured
/// distribution when the true state is basis state j. The inverse is
/// precomputed for compensation.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorMatrix {
    entries: Array2<f64>,
    inverse: Array2<f64>,
}

impl DetectorMatrix {
    /// Wrap an arbitrary (possibly correlated) column-stochastic matrix.
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        let dim = entries.nrows();
        if entries.ncols() != dim {
            return Err(Error::DimensionMismatch(entries.ncols(), dim));
        }
        for j in 0..dim {
            let sum: f64 = (0..dim).map(|i| entries[[i, j]]).sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::NotStochastic { column: j, sum });
            }
        }
        let inverse = invert(&entries).ok_or(Error::Singular)?;
        Ok(DetectorMatrix { entries, inverse })
    }

    pub fn identity(dim: usize) -> Self {
        DetectorMatrix { entries: Array2::eye(dim), inverse: Array2::eye(dim) }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn inverse(&self) -> &Array2<f64> {
        &self.inverse
    }

    /// Measured distribution for true populations p: M p.
    pub fn distort(&self, p: &[f64]) -> Vec<f64> {
        matvec(&self.entries, p)
    }

    /// Entrywise average of several estimates.
    pub fn average(estimates: &[DetectorMatrix]) -> Result<DetectorMatrix> {
        assert!(!estimates.is_empty(), "need at least one estimate");
        let dim = estimates[0].dim();
        let mut acc = Array2::<f64>::zeros((dim, dim));
        for m in estimates {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch(m.dim(), dim));
            }
            acc = acc + m.entries();
        }
        DetectorMatrix::new(acc / estimates.len() as f64)
    }

    /// Largest pairwise Frobenius distance between estimates: a drift
    /// indicator, reported rather than corrected.
    pub fn max_pairwise_distance(estimates: &[DetectorMatrix]) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in estimates.iter().enumerate() {
            for b in &estimates[i + 1..] {
                let mut acc = 0.0;
                for (x, y) in a.entries().iter().zip(b.entries().iter()) {
                    acc += (x - y) * (x - y);
                }
                worst = worst.max(acc.sqrt());
            }
        }
        worst
    }
}

/// M = tensor product of per-qubit 2x2 confusion matrices
/// [[1-eps01, eps10], [eps01, 1-eps10]]; qubit 0 varies fastest.
pub fn build_detector_matrix(profile: &ReadoutNoiseProfile) -> Result<DetectorMatrix> {
    let n = profile.qubit_count();
    let dim = 1usize << n;
    let mut entries = Array2::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            let mut v = 1.0;
            for (k, &(e01, e10)) in profile.pairs().iter().enumerate() {
                let read = (i >> k) & 1;
                let truth = (j >> k) & 1;
                v *= match (read, truth) {
                    (0, 0) => 1.0 - e01,
                    (1, 0) => e01,
                    (0, 1) => e10,
                    _ => 1.0 - e10,
                };
            }
            entries[[i, j]] = v;
        }
    }
    DetectorMatrix::new(entries)
}

/// Column j = empirical frequencies of the record taken with basis input j.
pub fn estimate_detector_matrix(calibration: &[ShotRecord]) -> Result<DetectorMatrix> {
    let dim = calibration.len();
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::MissingBasisState { got: dim, expected: dim.next_power_of_two().max(2) });
    }
    let mut entries = Array2::zeros((dim, dim));
    for (j, record) in calibration.iter().enumerate() {
        if record.counts.len() != dim {
            return Err(Error::MissingBasisState { got: record.counts.len(), expected: dim });
        }
        for (i, f) in record.frequencies().iter().enumerate() {
            entries[[i, j]] = *f;
        }
    }
    DetectorMatrix::new(entries)
}

/// Remove the detector response: M^{-1} * measured, then renormalize.
/// Small negative entries (artifacts of finite shots) are clamped to zero;
/// larger ones abort with the offending vector attached.
pub fn compensate(measured: &[f64], m: &DetectorMatrix) -> Result<Vec<f64>> {
    if measured.len() != m.dim() {
        return Err(Error::DimensionMismatch(measured.len(), m.dim()));
    }
    let mut p = matvec(m.inverse(), measured);
    for v in &mut p {
        if *v < 0.0 {
            if *v < -NEG_TOL {
                return Err(Error::NegativeProbability(p.clone()));
            }
            *v = 0.0;
        }
    }
    let sum: f64 = p.iter().sum();
    if sum <= 0.0 {
        return Err(Error::NegativeProbability(p));
    }
    for v in &mut p {
        *v /= sum;
    }
    Ok(p)
}

/// Preparation angle from an excited-state population: theta = 2 asin(sqrt p1).
pub fn recover_angle(p1: f64) -> f64 {
    2.0 * p1.clamp(0.0, 1.0).sqrt().asin()
}

/// Histogram of measurement outcomes with the bitstring labels of the register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub counts: Vec<u64>,
    pub shots: u64,
    pub labels: Vec<String>,
}

impl ShotRecord {
    pub fn frequencies(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.shots as f64).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Multinomial draw from M*p with an explicit generator. Same seed, same record.
pub fn sample_shots<R: Rng>(
    true_populations: &[f64],
    m: &DetectorMatrix,
    shots: u64,
    ordering: &QubitOrdering,
    rng: &mut R,
) -> Result<ShotRecord> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let sum: f64 = true_populations.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(sum));
    }
    let measured = m.distort(true_populations);
    let dist = WeightedIndex::new(&measured).expect("stochastic image of a distribution");
    let mut counts = vec![0u64; measured.len()];
    for _ in 0..shots {
        counts[dist.sample(rng)] += 1;
    }
    Ok(ShotRecord { counts, shots, labels: ordering.all_bitstrings() })
}

fn matvec(m: &Array2<f64>, v: &[f64]) -> Vec<f64> {
    let (rows, cols) = (m.nrows(), m.ncols());
    assert_eq!(cols, v.len());
    let mut out = vec![0.0; rows];
    for i in 0..rows {
        let mut acc = 0.0;
        for j in 0..cols {
            acc += m[[i, j]] * v[j];
        }
        out[i] = acc;
    }
    out
}

/// Gauss-Jordan inverse with partial pivoting; None when singular.
fn invert(m: &Array2<f64>) -> Option<Array2<f64>> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut inv = Array2::<f64>::eye(n);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[[i, col]].abs().partial_cmp(&a[[j, col]].abs()).expect("finite entries")
        })?;
        if a[[pivot, col]].abs() < 1e-12 {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                a.swap([pivot, j], [col, j]);
                inv.swap([pivot, j], [col, j]);
            }
        }
        let diag = a[[col, col]];
        for j in 0..n {
            a[[col, j]] /= diag;
            inv[[col, j]] /= diag;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[[row, col]];
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                let ac = a[[col, j]];
                let ic = inv[[col, j]];
                a[[row, j]] -= factor * ac;
                inv[[row, j]] -= factor * ic;
            }
        }
    }
    Some(inv)
}
