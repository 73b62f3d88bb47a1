//! Finite-statistics execution protocol: repeated independent experiment
//! emulations (detector calibration, sign-pattern preparations, shot
//! sampling, compensation) and the confidence intervals built from them.

use ndarray::Array1;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::detector::{compensate, estimate_detector_matrix, sample_shots, DetectorMatrix, ShotRecord};
use crate::error::{Error, Result};
use crate::inequality::{
    delta_b_alpha, rt_statistic, AlphaSweep, ObservableB, RenyiForm, SpectrumFloor, SweepPoint,
};
use crate::qcore::{assemble_unitary, Circuit, QubitOrdering};
use crate::thermal::DiagonalEnsemble;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecutionProtocol {
    /// Independent repetitions; each yields one sample per statistic.
    pub executions: usize,
    pub shots_per_preparation: u64,
    /// Sign patterns averaged per ensemble; 2^n cancels all coherences.
    pub preparations_per_ensemble: usize,
}

impl ExecutionProtocol {
    pub fn standard(qubit_count: usize) -> Self {
        ExecutionProtocol {
            executions: 20,
            shots_per_preparation: 8192,
            preparations_per_ensemble: 1 << qubit_count,
        }
    }
}

/// Two-sided 99% interval: halfwidth = 2.576 * s / sqrt(N) with the
/// unbiased sample standard deviation s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub mean: f64,
    pub halfwidth: f64,
}

pub const Z_99: f64 = 2.576;

pub fn confidence_interval(samples: &[f64]) -> Result<ConfidenceInterval> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples(samples.len()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let variance = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Ok(ConfidenceInterval { mean, halfwidth: Z_99 * variance.sqrt() / n.sqrt() })
}

impl ConfidenceInterval {
    /// Detection claims require the whole interval below zero.
    pub fn detects(&self) -> bool {
        self.mean + self.halfwidth < 0.0
    }
}

/// Everything one emulated experiment produces: the detector estimate and
/// the raw / compensated basis distributions of both ensembles.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionOutcome {
    pub m_hat: DetectorMatrix,
    pub measured_initial: Vec<f64>,
    pub measured_final: Vec<f64>,
    pub compensated_initial: Vec<f64>,
    pub compensated_final: Vec<f64>,
}

/// Emulate `protocol.executions` independent experiments on `circuit` with
/// initial state `ensemble`, all shots distorted by `detector`. Each
/// execution re-estimates the detector from basis-state preparations (the
/// per-execution spread is the drift indicator); compensation uses the
/// average of all estimates, which keeps the inverted noise well above the
/// negativity tolerance. Seeding is hierarchical so executions are
/// independent streams but the whole protocol is reproducible from
/// `master_seed`.
pub fn run_protocol(
    circuit: &Circuit,
    ensemble: &DiagonalEnsemble,
    detector: &DetectorMatrix,
    protocol: &ExecutionProtocol,
    ordering: &QubitOrdering,
    master_seed: u64,
) -> Result<Vec<ExecutionOutcome>> {
    let dim = circuit.dim();
    if ensemble.qubit_count() != circuit.qubit_count() {
        return Err(Error::DimensionMismatch(ensemble.qubit_count(), circuit.qubit_count()));
    }
    if detector.dim() != dim {
        return Err(Error::DimensionMismatch(detector.dim(), dim));
    }
    if protocol.shots_per_preparation == 0 || protocol.preparations_per_ensemble == 0 {
        return Err(Error::ZeroShots);
    }

    let unitary = assemble_unitary(circuit);
    let patterns = ensemble.sign_patterns();

    struct RawExecution {
        m_hat: DetectorMatrix,
        measured_initial: Vec<f64>,
        measured_final: Vec<f64>,
    }

    let mut master = ChaCha8Rng::seed_from_u64(master_seed);
    let mut raw = Vec::with_capacity(protocol.executions);
    for _ in 0..protocol.executions {
        let mut rng = ChaCha8Rng::seed_from_u64(master.random());

        let calibration: Vec<ShotRecord> = (0..dim)
            .map(|j| {
                let mut basis = vec![0.0; dim];
                basis[j] = 1.0;
                sample_shots(&basis, detector, protocol.shots_per_preparation, ordering, &mut rng)
            })
            .collect::<Result<_>>()?;
        let m_hat = estimate_detector_matrix(&calibration)?;

        let mut counts_initial = vec![0u64; dim];
        let mut counts_final = vec![0u64; dim];
        for signs in patterns.iter().cycle().take(protocol.preparations_per_ensemble) {
            let psi = ensemble.coherent_preparation_state(signs)?;
            let p_initial: Vec<f64> = psi.iter().map(|a| a.norm_sqr()).collect();
            let phi = unitary.entries().dot(&Array1::<Complex64>::from_vec(psi));
            let p_final: Vec<f64> = phi.iter().map(|a| a.norm_sqr()).collect();
            let rec0 =
                sample_shots(&p_initial, detector, protocol.shots_per_preparation, ordering, &mut rng)?;
            let recf =
                sample_shots(&p_final, detector, protocol.shots_per_preparation, ordering, &mut rng)?;
            for i in 0..dim {
                counts_initial[i] += rec0.counts[i];
                counts_final[i] += recf.counts[i];
            }
        }
        let total =
            (protocol.shots_per_preparation * protocol.preparations_per_ensemble as u64) as f64;
        raw.push(RawExecution {
            m_hat,
            measured_initial: counts_initial.iter().map(|&c| c as f64 / total).collect(),
            measured_final: counts_final.iter().map(|&c| c as f64 / total).collect(),
        });
    }

    let estimates: Vec<DetectorMatrix> = raw.iter().map(|r| r.m_hat.clone()).collect();
    let averaged = DetectorMatrix::average(&estimates)?;
    raw.into_iter()
        .map(|r| {
            Ok(ExecutionOutcome {
                compensated_initial: compensate(&r.measured_initial, &averaged)?,
                compensated_final: compensate(&r.measured_final, &averaged)?,
                m_hat: r.m_hat,
                measured_initial: r.measured_initial,
                measured_final: r.measured_final,
            })
        })
        .collect()
}

/// Per-alpha confidence intervals over per-execution (initial, final)
/// distribution pairs; the pairs may live on any register `b` matches.
pub fn sweep_from_samples(
    b: &ObservableB,
    pairs: &[(Vec<f64>, Vec<f64>)],
    grid: &[f64],
    floor: SpectrumFloor,
) -> Result<AlphaSweep> {
    let mut points = Vec::with_capacity(grid.len());
    for &alpha in grid {
        let samples: Vec<f64> =
            pairs.iter().map(|(p0, pf)| delta_b_alpha(b, p0, pf, alpha, floor)).collect();
        let ci = confidence_interval(&samples)?;
        points.push(SweepPoint { alpha, value: ci.mean, ci_halfwidth: ci.halfwidth });
    }
    Ok(AlphaSweep { points })
}

/// Per-alpha confidence intervals over the per-execution statistics built
/// from compensated data.
pub fn sampled_sweep(
    b: &ObservableB,
    outcomes: &[ExecutionOutcome],
    grid: &[f64],
    floor: SpectrumFloor,
) -> Result<AlphaSweep> {
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = outcomes
        .iter()
        .map(|o| (o.compensated_initial.clone(), o.compensated_final.clone()))
        .collect();
    sweep_from_samples(b, &pairs, grid, floor)
}

/// Confidence-interval version of the free-energy monotone sweep, over
/// per-execution subsystem distribution pairs.
pub fn rt_sampled(
    pairs: &[(Vec<f64>, Vec<f64>)],
    reference: &[f64],
    grid: &[f64],
    form: RenyiForm,
) -> Result<AlphaSweep> {
    let mut points = Vec::with_capacity(grid.len());
    for &alpha_tilde in grid {
        let samples: Vec<f64> = pairs
            .iter()
            .map(|(p0, pf)| rt_statistic(p0, pf, reference, alpha_tilde, form))
            .collect();
        let ci = confidence_interval(&samples)?;
        points.push(SweepPoint { alpha: alpha_tilde, value: ci.mean, ci_halfwidth: ci.halfwidth });
    }
    Ok(AlphaSweep { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{build_detector_matrix, ReadoutNoiseProfile};
    use crate::inequality::default_alpha_grid;
    use crate::qcore::fig2b;
    use crate::thermal::QubitSpec;
    use approx::assert_abs_diff_eq;
    use rand_distr::StandardNormal;
    use std::f64::consts::PI;

    fn fig1a_ensemble() -> DiagonalEnsemble {
        DiagonalEnsemble::new(vec![
            QubitSpec::with_unit_gap(0.25 * PI),
            QubitSpec::with_unit_gap(0.4 * PI),
            QubitSpec::with_unit_gap(0.25 * PI),
        ])
    }

    #[test]
    fn interval_matches_the_hand_computation() {
        // ten zeros and ten ones: mean 1/2, s^2 = 10/19,
        // halfwidth = 2.576 sqrt(10/19)/sqrt(20)
        let mut samples = vec![0.0; 10];
        samples.extend(vec![1.0; 10]);
        let ci = confidence_interval(&samples).unwrap();
        assert_abs_diff_eq!(ci.mean, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ci.halfwidth, 0.2954874652252835, epsilon = 1e-12);
        assert!(!ci.detects());
    }

    #[test]
    fn interval_collapses_for_constant_samples() {
        let ci = confidence_interval(&[-0.3; 7]).unwrap();
        assert_eq!(ci.mean, -0.3);
        assert_eq!(ci.halfwidth, 0.0);
        assert!(ci.detects());
    }

    #[test]
    fn interval_needs_two_samples() {
        assert!(matches!(confidence_interval(&[]), Err(Error::TooFewSamples(0))));
        assert!(matches!(confidence_interval(&[1.0]), Err(Error::TooFewSamples(1))));
    }

    #[test]
    fn halfwidth_shrinks_like_root_n() {
        // quadrupling N should halve the halfwidth, within 30% on average
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut ratios = Vec::new();
        for _ in 0..100 {
            let small: Vec<f64> = (0..20).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let large: Vec<f64> = (0..80).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let hw_small = confidence_interval(&small).unwrap().halfwidth;
            let hw_large = confidence_interval(&large).unwrap().halfwidth;
            ratios.push(hw_small / hw_large);
        }
        let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!((mean_ratio - 2.0).abs() < 0.6, "mean ratio {mean_ratio}");
    }

    #[test]
    fn protocol_is_deterministic_in_the_master_seed() {
        let ensemble = fig1a_ensemble();
        // noiseless detector: at 256 shots a noisy estimate would push the
        // smallest populations negative, which is its own error path
        let detector = DetectorMatrix::identity(8);
        let protocol =
            ExecutionProtocol { executions: 3, shots_per_preparation: 256, preparations_per_ensemble: 8 };
        let ord = QubitOrdering::che();
        let a = run_protocol(&fig2b(), &ensemble, &detector, &protocol, &ord, 99).unwrap();
        let b = run_protocol(&fig2b(), &ensemble, &detector, &protocol, &ord, 99).unwrap();
        assert_eq!(a, b);
        let c = run_protocol(&fig2b(), &ensemble, &detector, &protocol, &ord, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn compensated_distributions_concentrate_on_the_truth() {
        let ensemble = fig1a_ensemble();
        let detector = build_detector_matrix(&ReadoutNoiseProfile::tenerife_like()).unwrap();
        let protocol = ExecutionProtocol::standard(3);
        let ord = QubitOrdering::che();
        let outcomes = run_protocol(&fig2b(), &ensemble, &detector, &protocol, &ord, 5).unwrap();
        assert_eq!(outcomes.len(), 20);

        let p0 = ensemble.populations();
        let pf = crate::qcore::propagate_populations(&fig2b(), &p0);
        for outcome in &outcomes {
            for i in 0..8 {
                assert!((outcome.compensated_initial[i] - p0[i]).abs() < 0.02);
                assert!((outcome.compensated_final[i] - pf[i]).abs() < 0.02);
            }
            // raw frequencies are visibly biased by the detector instead
            let distorted = detector.distort(&p0);
            for i in 0..8 {
                assert!((outcome.measured_initial[i] - distorted[i]).abs() < 0.02);
            }
        }
    }

    #[test]
    fn sampled_sweep_tracks_the_exact_one() {
        let ensemble = fig1a_ensemble();
        let detector = build_detector_matrix(&ReadoutNoiseProfile::tenerife_like()).unwrap();
        let protocol = ExecutionProtocol::standard(3);
        let ord = QubitOrdering::che();
        let outcomes = run_protocol(&fig2b(), &ensemble, &detector, &protocol, &ord, 5).unwrap();

        let b = ObservableB::build(ensemble.specs(), &["c", "h"], &ord).unwrap();
        let grid = default_alpha_grid();
        let sampled = sampled_sweep(&b, &outcomes, &grid, SpectrumFloor::default()).unwrap();

        let p0 = ensemble.populations();
        let pf = crate::qcore::propagate_populations(&fig2b(), &p0);
        let exact = AlphaSweep::exact(&b, &p0, &pf, &grid, SpectrumFloor::default());
        for (s, e) in sampled.points.iter().zip(&exact.points) {
            assert_eq!(s.alpha, e.alpha);
            assert!(s.ci_halfwidth > 0.0);
            assert!(
                (s.value - e.value).abs() < 0.02 + 3.0 * s.ci_halfwidth,
                "alpha {}: sampled {} vs exact {}",
                s.alpha,
                s.value,
                e.value
            );
        }
        // the sign-flip detections of the leak survive finite statistics
        assert!(sampled.points.iter().any(|p| p.detects() && p.alpha < 0.0));
    }

    #[test]
    fn repeated_pairs_collapse_both_sampled_sweeps() {
        let p0 = vec![0.7, 0.2, 0.1, 0.0];
        let pf = vec![0.4, 0.3, 0.2, 0.1];
        let pairs = vec![(p0.clone(), pf.clone()); 5];
        let b = ObservableB::from_weights(vec![1.0, 2.0]).unwrap();
        let sweep =
            sweep_from_samples(&b, &pairs, &[-1.0, 1.0], SpectrumFloor::default()).unwrap();
        for (point, alpha) in sweep.points.iter().zip([-1.0, 1.0]) {
            assert_eq!(point.ci_halfwidth, 0.0);
            assert_eq!(
                point.value,
                delta_b_alpha(&b, &p0, &pf, alpha, SpectrumFloor::default())
            );
        }

        let reference = vec![0.6, 0.4];
        let pairs1 = vec![(vec![0.8, 0.2], vec![0.7, 0.3]); 4];
        let rt = rt_sampled(&pairs1, &reference, &[0.5, 2.0], RenyiForm::Log).unwrap();
        for (point, alpha) in rt.points.iter().zip([0.5, 2.0]) {
            assert_eq!(point.ci_halfwidth, 0.0);
            assert_eq!(
                point.value,
                rt_statistic(&[0.8, 0.2], &[0.7, 0.3], &reference, alpha, RenyiForm::Log)
            );
        }
    }

    #[test]
    fn noiseless_protocol_still_estimates_an_identity_detector() {
        let ensemble = fig1a_ensemble();
        let protocol =
            ExecutionProtocol { executions: 2, shots_per_preparation: 512, preparations_per_ensemble: 8 };
        let ord = QubitOrdering::che();
        let outcomes =
            run_protocol(&fig2b(), &ensemble, &DetectorMatrix::identity(8), &protocol, &ord, 1)
                .unwrap();
        for outcome in &outcomes {
            // basis states pass the noiseless detector untouched, so the
            // estimate is exactly the identity and compensation is a no-op
            assert_eq!(outcome.m_hat.entries(), DetectorMatrix::identity(8).entries());
            assert_eq!(outcome.compensated_initial, outcome.measured_initial);
        }
    }
}
