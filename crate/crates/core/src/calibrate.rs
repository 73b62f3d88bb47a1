//! Gate-miscalibration emulation and recovery: insert Ry corrections around
//! every two-qubit gate and minimize the distance between the predicted
//! detector-distorted transfer matrix and a measured one.
//!
//! Calibration is diagnostic only: detection statistics are always computed
//! from (synthetically) measured data, never from the fitted model.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::detector::{sample_shots, DetectorMatrix};
use crate::error::{Error, Result};
use crate::qcore::{assemble_unitary, transfer_matrix, Circuit, Gate, QubitOrdering, TransferMatrix};

/// A correction slot: insert Ry(phi) on `qubit` immediately before the base
/// gate at `position` (position = gate count means "after the last gate").
pub type Slot = (usize, usize);

#[derive(Debug, Clone)]
pub struct CalibrationProblem {
    base_circuit: Circuit,
    correction_slots: Vec<Slot>,
    t_exp: TransferMatrix,
    m: DetectorMatrix,
}

impl CalibrationProblem {
    pub fn new(
        base_circuit: Circuit,
        correction_slots: Vec<Slot>,
        t_exp: TransferMatrix,
        m: DetectorMatrix,
    ) -> Result<Self> {
        for &(pos, qubit) in &correction_slots {
            if pos > base_circuit.gates().len() {
                return Err(Error::QubitIndex { index: pos, qubit_count: base_circuit.gates().len() });
            }
            if qubit >= base_circuit.qubit_count() {
                return Err(Error::QubitIndex { index: qubit, qubit_count: base_circuit.qubit_count() });
            }
        }
        if t_exp.dim() != base_circuit.dim() {
            return Err(Error::DimensionMismatch(t_exp.dim(), base_circuit.dim()));
        }
        if m.dim() != base_circuit.dim() {
            return Err(Error::DimensionMismatch(m.dim(), base_circuit.dim()));
        }
        Ok(CalibrationProblem { base_circuit, correction_slots, t_exp, m })
    }

    pub fn slots(&self) -> &[Slot] {
        &self.correction_slots
    }

    pub fn base_circuit(&self) -> &Circuit {
        &self.base_circuit
    }

    pub fn t_exp(&self) -> &TransferMatrix {
        &self.t_exp
    }
}

/// One Ry per involved qubit immediately before and after every two-qubit
/// gate (the single-qubit pulses around each cross-resonance gate are where
/// the miscalibration lives). 12 slots for a three-CNOT circuit.
pub fn default_correction_slots(circuit: &Circuit) -> Vec<Slot> {
    let mut slots = Vec::new();
    for (k, gate) in circuit.gates().iter().enumerate() {
        let qubits = gate.qubits();
        if qubits.len() == 2 {
            for pos in [k, k + 1] {
                for &q in &qubits {
                    slots.push((pos, q));
                }
            }
        }
    }
    slots
}

/// Base circuit with Ry(angles[i]) inserted at each slot, in slot order.
pub fn apply_corrections(
    base: &Circuit,
    slots: &[Slot],
    angles: &[f64],
) -> Result<Circuit> {
    if angles.len() != slots.len() {
        return Err(Error::SlotCount { got: angles.len(), expected: slots.len() });
    }
    let mut out = Circuit::new(base.qubit_count())?;
    for pos in 0..=base.gates().len() {
        for (&(slot_pos, qubit), &angle) in slots.iter().zip(angles) {
            if slot_pos == pos {
                out.push(Gate::Ry { qubit, angle })?;
            }
        }
        if pos < base.gates().len() {
            out.push(base.gates()[pos])?;
        }
    }
    Ok(out)
}

/// Frobenius norm of M*T(U_fix(angles)) - T_exp.
pub fn objective(problem: &CalibrationProblem, angles: &[f64]) -> f64 {
    let circuit = apply_corrections(&problem.base_circuit, &problem.correction_slots, angles)
        .expect("angle count checked by caller");
    let t = transfer_matrix(&assemble_unitary(&circuit));
    let predicted = problem.m.entries().dot(t.entries());
    let mut acc = 0.0;
    for (a, b) in predicted.iter().zip(problem.t_exp.entries().iter()) {
        acc += (a - b) * (a - b);
    }
    acc.sqrt()
}

#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    /// Objective-evaluation budget per simplex run.
    pub max_evaluations: usize,
    /// Random restarts beyond the zero-angle start.
    pub restarts: usize,
    /// Restart angles are drawn uniformly from [-initial_range, initial_range].
    pub initial_range: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { max_evaluations: 2000, restarts: 10, initial_range: 0.3, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub angles: Vec<f64>,
    pub err_initial: f64,
    pub err_final: f64,
    /// err_final / ||T_exp||_F.
    pub relative_err: f64,
    /// The budget produced no improvement over the zero-angle start.
    pub stagnant: bool,
}

/// Multi-restart Nelder-Mead search for correction angles. The zero-angle
/// start is always included, so err_final <= err_initial; the best point is
/// polished with a finer simplex at the end.
pub fn calibrate(problem: &CalibrationProblem, config: &OptimizerConfig) -> CalibrationResult {
    let dim = problem.correction_slots.len();
    let mut evaluate = |x: &[f64]| objective(problem, x);
    let zeros = vec![0.0; dim];
    let err_initial = evaluate(&zeros);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best_angles = zeros.clone();
    let mut best_err = err_initial;
    for restart in 0..=config.restarts {
        let start: Vec<f64> = if restart == 0 {
            zeros.clone()
        } else {
            (0..dim)
                .map(|_| rng.random_range(-config.initial_range..config.initial_range))
                .collect()
        };
        let (x, fx) = nelder_mead(&mut evaluate, &start, 0.1, config.max_evaluations);
        if fx < best_err {
            best_err = fx;
            best_angles = x;
        }
    }
    let (x, fx) = nelder_mead(&mut evaluate, &best_angles, 0.02, config.max_evaluations);
    if fx < best_err {
        best_err = fx;
        best_angles = x;
    }

    let relative_err = best_err / problem.t_exp.frobenius_norm();
    CalibrationResult {
        angles: best_angles,
        err_initial,
        err_final: best_err,
        relative_err,
        stagnant: best_err >= err_initial - 1e-12,
    }
}

/// Correction angles are identifiable only up to slot merging: two Ry's in
/// the same (position, qubit) slot compose by angle addition. Returns the
/// per-slot sums keyed and sorted by slot.
pub fn merged_angles(slots: &[Slot], angles: &[f64]) -> Vec<(Slot, f64)> {
    assert_eq!(slots.len(), angles.len());
    let mut merged: Vec<(Slot, f64)> = Vec::new();
    for (&slot, &angle) in slots.iter().zip(angles) {
        match merged.iter_mut().find(|(s, _)| *s == slot) {
            Some((_, sum)) => *sum += angle,
            None => merged.push((slot, angle)),
        }
    }
    merged.sort_by_key(|&(s, _)| s);
    merged
}

/// Column j = sampled outcome frequencies of basis input j pushed through
/// the circuit and the detector. The expectation is M*T(U).
pub fn measure_transfer_matrix<R: Rng>(
    circuit: &Circuit,
    m: &DetectorMatrix,
    shots_per_column: u64,
    ordering: &QubitOrdering,
    rng: &mut R,
) -> Result<TransferMatrix> {
    let dim = circuit.dim();
    let mut entries = ndarray::Array2::zeros((dim, dim));
    for j in 0..dim {
        let mut basis = vec![0.0; dim];
        basis[j] = 1.0;
        let out = crate::qcore::propagate_populations(circuit, &basis);
        let record = sample_shots(&out, m, shots_per_column, ordering, rng)?;
        for (i, f) in record.frequencies().iter().enumerate() {
            entries[[i, j]] = *f;
        }
    }
    TransferMatrix::new(entries)
}

/// Downhill simplex with the dimension-adaptive coefficients; returns the
/// best point seen within the evaluation budget.
fn nelder_mead(
    f: &mut impl FnMut(&[f64]) -> f64,
    start: &[f64],
    step: f64,
    max_evaluations: usize,
) -> (Vec<f64>, f64) {
    let n = start.len();
    assert!(n >= 1);
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);

    let mut evals = 0usize;
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    points.push(start.to_vec());
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += step;
        points.push(p);
    }
    let mut values: Vec<f64> = points
        .iter()
        .map(|p| {
            evals += 1;
            f(p)
        })
        .collect();

    while evals < max_evaluations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite objective"));
        points = order.iter().map(|&i| points[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        if values[n] - values[0] < 1e-14 {
            break;
        }

        let mut centroid = vec![0.0; n];
        for p in &points[..n] {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x / nf;
            }
        }
        let combine = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&points[n])
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let reflected = combine(alpha);
        let fr = {
            evals += 1;
            f(&reflected)
        };
        if fr < values[0] {
            let expanded = combine(alpha * beta);
            let fe = {
                evals += 1;
                f(&expanded)
            };
            if fe < fr {
                points[n] = expanded;
                values[n] = fe;
            } else {
                points[n] = reflected;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            points[n] = reflected;
            values[n] = fr;
        } else {
            let contracted = if fr < values[n] { combine(alpha * gamma) } else { combine(-gamma) };
            let fc = {
                evals += 1;
                f(&contracted)
            };
            if fc < values[n].min(fr) {
                points[n] = contracted;
                values[n] = fc;
            } else {
                // shrink toward the best vertex
                for i in 1..=n {
                    points[i] = points[0]
                        .iter()
                        .zip(&points[i])
                        .map(|(b, x)| b + delta * (x - b))
                        .collect();
                    evals += 1;
                    values[i] = f(&points[i]);
                }
            }
        }
    }

    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite objective"))
        .map(|(i, _)| i)
        .expect("nonempty simplex");
    (points[best].clone(), values[best])
}
