//! End-to-end acceptance checks, one test per criterion. Each prints a
//! single PASS line on success (visible with --nocapture); a failed
//! assertion marks the criterion failed.

use std::time::Instant;

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use thermoleak_core::calibrate::{
    apply_corrections, calibrate, default_correction_slots, measure_transfer_matrix,
    CalibrationProblem, OptimizerConfig,
};
use thermoleak_core::detector::{
    build_detector_matrix, compensate, estimate_detector_matrix, recover_angle, sample_shots,
    ReadoutNoiseProfile,
};
use thermoleak_core::inequality::{
    default_alpha_grid, deform_passivity, detection_boundary, energy_conservation_defect,
    fluctuation_theorem, majorization_test, rt_grid, rt_test, scaleup_alpha_grid, AlphaSweep,
    ObservableB, RenyiForm, SpectrumFloor, TrajectoryEnsemble,
};
use thermoleak_core::qcore::{
    assemble_unitary, fig2b, fig2b_no_leak, marginal, propagate_populations,
    random_energy_conserving_unitary, reduced_populations, reduced_transfer_matrix,
    scaleup_circuit, swap_variant, transfer_matrix, Circuit, Gate, QubitOrdering, ScaleVariant,
    TransferMatrix,
};
use thermoleak_core::thermal::{gibbs_populations, theta_to_beta_omega, DiagonalEnsemble, QubitSpec};

use std::f64::consts::PI;

fn che_specs(theta_c: f64, theta_h: f64, theta_e: f64) -> Vec<QubitSpec> {
    vec![
        QubitSpec::with_unit_gap(theta_c),
        QubitSpec::with_unit_gap(theta_h),
        QubitSpec::with_unit_gap(theta_e),
    ]
}

fn populations(specs: &[QubitSpec]) -> Vec<f64> {
    DiagonalEnsemble::new(specs.to_vec()).populations()
}

#[test]
fn criterion_01_leak_detection_below_the_crossing() {
    let start = Instant::now();
    let specs = che_specs(0.25 * PI, 0.4 * PI, 0.25 * PI);
    let ord = QubitOrdering::che();
    let p0 = populations(&specs);
    let pf = propagate_populations(&fig2b(), &p0);
    let b = ObservableB::build(&specs, &["c", "h"], &ord).unwrap();
    let sweep = AlphaSweep::exact(&b, &p0, &pf, &default_alpha_grid(), SpectrumFloor::default());

    assert!(sweep.value_at(1.0).unwrap() > 0.0, "second law must stay blind");
    let crossing =
        detection_boundary(&b, &p0, &pf, SpectrumFloor::default(), 0.05, 1.0).unwrap();
    assert!(
        (0.2..=0.5).contains(&crossing),
        "detection boundary {crossing} outside the published ~0.35 window"
    );
    for point in &sweep.points {
        if point.alpha < 0.0 {
            assert!(point.value < 0.0, "alpha {} should detect", point.alpha);
        }
        if point.alpha > 0.0 && point.alpha < crossing {
            assert!(point.value < 0.0, "alpha {} below crossing should detect", point.alpha);
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "[criterion 1] PASS - leak circuit: alpha=1 blind, all alpha<0 and 0<alpha<{crossing:.3} detect, {elapsed:?}"
    );
}

#[test]
fn criterion_02_no_leak_circuit_never_detects() {
    let start = Instant::now();
    let specs = che_specs(0.25 * PI, 0.4 * PI, 0.25 * PI);
    let ord = QubitOrdering::che();
    let p0 = populations(&specs);
    let pf = propagate_populations(&fig2b_no_leak(), &p0);
    let b = ObservableB::build(&specs, &["c", "h"], &ord).unwrap();
    let sweep = AlphaSweep::exact(&b, &p0, &pf, &default_alpha_grid(), SpectrumFloor::default());
    assert!(sweep.is_nonnegative(1e-10), "false positive: min {}", sweep.min_value());
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("[criterion 2] PASS - no-leak circuit nonnegative at every alpha, {elapsed:?}");
}

#[test]
fn criterion_03_full_register_sweep_and_majorization() {
    let specs = che_specs(0.25 * PI, 0.4 * PI, 0.25 * PI);
    let ord = QubitOrdering::che();
    let p0 = populations(&specs);
    let pf = propagate_populations(&fig2b(), &p0);

    let b = ObservableB::build(&specs, &["c", "h", "e"], &ord).unwrap();
    let sweep = AlphaSweep::exact(&b, &p0, &pf, &default_alpha_grid(), SpectrumFloor::default());
    assert!(sweep.is_nonnegative(1e-10), "closed-setup sweep must be nonnegative");

    let outcome = majorization_test(&p0, &pf, 1e-9);
    assert!(outcome.majorizes);
    assert!(outcome.max_excess <= 1e-9);
    let dim = outcome.initial_curve.len();
    for k in 0..dim - 1 {
        assert!(
            outcome.final_curve[k] <= outcome.initial_curve[k] + 1e-9,
            "Lorenz curves cross at k={}",
            k + 1
        );
    }
    assert!((outcome.initial_curve[dim - 1] - 1.0).abs() <= 1e-9);
    assert!((outcome.final_curve[dim - 1] - 1.0).abs() <= 1e-9);
    println!("[criterion 3] PASS - full sweep nonnegative; Lorenz curves meet only at 1");
}

#[test]
fn criterion_04_deformed_observable_detects_at_alpha_one() {
    let specs = che_specs(0.25 * PI, 0.5 * PI, 0.25 * PI);
    let ord = QubitOrdering::che();
    let p0 = populations(&specs);
    let pf = propagate_populations(&fig2b(), &p0);

    let b = ObservableB::build(&specs, &["c", "h"], &ord).unwrap();
    let gp = AlphaSweep::exact(&b, &p0, &pf, &default_alpha_grid(), SpectrumFloor::default());
    assert!(gp.is_nonnegative(1e-10), "undeformed sweep should be blind here");

    let p0_ch = reduced_populations(&p0, &["c", "h"], &ord).unwrap();
    let pf_ch = reduced_populations(&pf, &["c", "h"], &ord).unwrap();

    // on the isolated (c,h) pair, the equalization move on the hot qubit's
    // zero weight recovers an observable proportional to H_c + H_h
    let b_pair =
        ObservableB::from_weights(vec![specs[0].beta_omega().unwrap(), specs[1].beta_omega().unwrap()])
            .unwrap();
    let candidates = deform_passivity(&b_pair, &p0_ch);
    assert!(candidates.iter().any(|d| {
        d.observable
            .weights()
            .map(|w| w[0] > 0.0 && (w[0] - w[1]).abs() < 1e-9)
            .unwrap_or(false)
    }));

    let deformed = ObservableB::from_weights(vec![1.0, 1.0]).unwrap();
    let pd =
        AlphaSweep::exact(&deformed, &p0_ch, &pf_ch, &default_alpha_grid(), SpectrumFloor::default());
    let at_one = pd.value_at(1.0).unwrap();
    assert!((at_one - (-0.25)).abs() < 1e-12);
    assert!(!pd.detecting_alphas().is_empty());
    assert!(pd.points.iter().all(|p| p.value < 0.0));
    println!("[criterion 4] PASS - deformed (H_c+H_h)^alpha detects everywhere, W(1) = {at_one}");
}

#[test]
fn criterion_05_renyi_bounds_blind_where_passivity_detects() {
    let specs = che_specs(0.25 * PI, 0.4 * PI, 0.35 * PI);
    let ord = QubitOrdering::che();
    let p0 = populations(&specs);
    let pf = propagate_populations(&swap_variant(), &p0);

    let p0_c = reduced_populations(&p0, &["c"], &ord).unwrap();
    let pf_c = reduced_populations(&pf, &["c"], &ord).unwrap();
    let ref_hot = gibbs_populations(theta_to_beta_omega(0.4 * PI).unwrap()).to_vec();
    let rt_c = rt_test(&p0_c, &pf_c, &ref_hot, &rt_grid(), RenyiForm::Log);
    assert!(rt_c.is_nonnegative(1e-9), "c-as-system Renyi sweep detected");

    let p0_h = reduced_populations(&p0, &["h"], &ord).unwrap();
    let pf_h = reduced_populations(&pf, &["h"], &ord).unwrap();
    let ref_cold = gibbs_populations(theta_to_beta_omega(0.25 * PI).unwrap()).to_vec();
    let rt_h = rt_test(&p0_h, &pf_h, &ref_cold, &rt_grid(), RenyiForm::Log);
    assert!(rt_h.is_nonnegative(1e-9), "h-as-system Renyi sweep detected");

    let b = ObservableB::build(&specs, &["c", "h"], &ord).unwrap();
    let gp = AlphaSweep::exact(&b, &p0, &pf, &default_alpha_grid(), SpectrumFloor::default());
    assert!(
        gp.detecting_alphas().iter().any(|&a| a < 0.4),
        "global passivity should detect below alpha = 0.4"
    );

    // the system part alone is a swap of equal gaps: zero energy defect
    let mut isolated = Circuit::new(2).unwrap();
    isolated.push(Gate::Swap { a: 1, b: 0 }).unwrap();
    let iso_specs = vec![QubitSpec::with_unit_gap(0.25 * PI), QubitSpec::with_unit_gap(0.4 * PI)];
    let iso_p0 = populations(&iso_specs);
    let iso_pf = propagate_populations(&isolated, &iso_p0);
    let defect =
        energy_conservation_defect(&iso_specs, &iso_p0, &iso_pf, &[vec![0], vec![1]]).unwrap();
    assert!(defect.total.abs() <= 1e-12);
    println!("[criterion 5] PASS - Renyi sweeps blind, passivity detects below 0.4, swap defect 0");
}

#[test]
fn criterion_06_thermal_operations_never_trip_the_renyi_bound() {
    let theta_bath = 0.25 * PI;
    let theta_h = 0.4 * PI;
    let specs = che_specs(theta_bath, theta_h, theta_bath);
    let p0 = populations(&specs);
    let p0_h = marginal(&p0, 3, &[1]);
    let reference = gibbs_populations(theta_to_beta_omega(theta_bath).unwrap()).to_vec();

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = f64::INFINITY;
    for instance in 0..100 {
        let u = random_energy_conserving_unitary(3, &mut rng);
        let t = transfer_matrix(&u);
        let pf = t.apply(&p0);
        let pf_h = marginal(&pf, 3, &[1]);
        let sweep = rt_test(&p0_h, &pf_h, &reference, &rt_grid(), RenyiForm::Log);
        worst = worst.min(sweep.min_value());
        assert!(
            sweep.is_nonnegative(1e-9),
            "instance {instance}: min {}",
            sweep.min_value()
        );
    }
    println!("[criterion 6] PASS - 100 random energy-conserving unitaries, worst margin {worst:.3e}");
}

#[test]
fn criterion_07_scaleup_defeats_fixed_alpha_but_not_the_sweep() {
    let theta = (0.25 * PI, 0.4 * PI, 0.05 * PI);
    let grid = scaleup_alpha_grid();

    let sweep_for = |n: usize| -> AlphaSweep {
        let ord = QubitOrdering::scaleup(n).unwrap();
        let specs: Vec<QubitSpec> = ord
            .labels()
            .iter()
            .map(|l| match l.as_bytes()[0] {
                b'c' => QubitSpec::with_unit_gap(theta.0),
                b'h' => QubitSpec::with_unit_gap(theta.1),
                _ => QubitSpec::with_unit_gap(theta.2),
            })
            .collect();
        let p0 = populations(&specs);
        let pf =
            propagate_populations(&scaleup_circuit(n, ScaleVariant::Chain).unwrap(), &p0);
        let system = ord.system_labels();
        let b = ObservableB::build(&specs, &system, &ord).unwrap();
        AlphaSweep::exact(&b, &p0, &pf, &grid, SpectrumFloor::default())
    };

    for n in 1..=4 {
        let sweep = sweep_for(n);
        let at_one = sweep.value_at(1.0).unwrap();
        if n == 1 {
            assert!(at_one < 0.0, "alpha = 1 must detect the single pair");
        } else {
            assert!(at_one >= 0.0, "alpha = 1 unexpectedly detects at n = {n}");
        }
        assert!(
            sweep.detecting_alphas().iter().any(|&a| a < 0.0),
            "no negative-alpha detection at n = {n}"
        );
    }

    let start = Instant::now();
    let sweep = sweep_for(5);
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "n = 5 sweep took {elapsed:?}");
    assert!(sweep.detecting_alphas().iter().any(|&a| a < 0.0));
    println!(
        "[criterion 7] PASS - alpha=1 detects only n=1; negative alphas detect n=1..5; n=5 in {elapsed:?}"
    );
}

#[test]
fn criterion_08_fluctuation_theorem_and_majorization_agree() {
    // isolated cold-hot CNOT: exact unit value
    let mut isolated = Circuit::new(2).unwrap();
    isolated.push(Gate::Cnot { control: 1, target: 0 }).unwrap();
    let iso_specs = vec![QubitSpec::with_unit_gap(0.25 * PI), QubitSpec::with_unit_gap(0.4 * PI)];
    let iso_p0 = populations(&iso_specs);
    let betas: Vec<f64> =
        iso_specs.iter().map(|s| s.beta_omega().unwrap() / s.omega).collect();
    let t_iso = transfer_matrix(&assemble_unitary(&isolated));
    let traj = TrajectoryEnsemble::new(&t_iso, &iso_p0, &[1.0, 1.0]).unwrap();
    let ft_isolated = fluctuation_theorem(&traj, &betas);
    assert!((ft_isolated - 1.0).abs() <= 1e-12, "isolated FT = {ft_isolated}");

    // leaky reduced channel: clear unit-value violation
    let specs = che_specs(0.25 * PI, 0.4 * PI, 0.25 * PI);
    let p0 = populations(&specs);
    let p0_ch = marginal(&p0, 3, &[0, 1]);
    let env = gibbs_populations(theta_to_beta_omega(0.25 * PI).unwrap());
    let t_leak = reduced_transfer_matrix(
        &transfer_matrix(&assemble_unitary(&fig2b())),
        3,
        &[0, 1],
        &env,
    )
    .unwrap();
    let traj_leak = TrajectoryEnsemble::new(&t_leak, &p0_ch, &[1.0, 1.0]).unwrap();
    let ft_leak = fluctuation_theorem(&traj_leak, &betas);
    assert!((ft_leak - 1.0).abs() > 1e-3, "leaky FT = {ft_leak}");

    // verdict agreement across random transfer matrices: both detectors
    // fire exactly on the non-bistochastic half
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dim = 4usize;
    let random_permutation_matrix = |rng: &mut ChaCha8Rng| -> Array2<f64> {
        let mut perm: Vec<usize> = (0..dim).collect();
        perm.shuffle(rng);
        let mut m = Array2::zeros((dim, dim));
        for (j, &i) in perm.iter().enumerate() {
            m[[i, j]] = 1.0;
        }
        m
    };
    for case in 0..500 {
        let bistochastic = case % 2 == 0;
        let t = if bistochastic {
            let mut weights = [0.0; 4];
            for w in &mut weights {
                *w = rng.random_range(0.05..1.0);
            }
            let total: f64 = weights.iter().sum();
            let mut m = Array2::zeros((dim, dim));
            for &w in &weights {
                m = m + random_permutation_matrix(&mut rng) * (w / total);
            }
            TransferMatrix::new(m).unwrap()
        } else {
            let mut m = Array2::zeros((dim, dim));
            for j in 0..dim {
                let col: Vec<f64> = (0..dim).map(|_| rng.random_range(0.01..1.0)).collect();
                let s: f64 = col.iter().sum();
                for i in 0..dim {
                    m[[i, j]] = col[i] / s;
                }
            }
            TransferMatrix::new(m).unwrap()
        };

        let mut gibbs_states = Vec::new();
        for _ in 0..8 {
            let tc = rng.random_range(0.1..0.9) * PI;
            let th = rng.random_range(0.1..0.9) * PI;
            let specs2 =
                vec![QubitSpec::with_unit_gap(tc), QubitSpec::with_unit_gap(th)];
            let p = populations(&specs2);
            let b2: Vec<f64> =
                specs2.iter().map(|s| s.beta_omega().unwrap() / s.omega).collect();
            gibbs_states.push((p, b2));
        }

        let mut majorization_detects = {
            let uniform = vec![1.0 / dim as f64; dim];
            !majorization_test(&uniform, &t.apply(&uniform), 1e-9).majorizes
        };
        let mut ft_detects = false;
        for (p, b2) in &gibbs_states {
            majorization_detects |= !majorization_test(p, &t.apply(p), 1e-9).majorizes;
            let traj2 = TrajectoryEnsemble::new(&t, p, &[1.0, 1.0]).unwrap();
            ft_detects |= (fluctuation_theorem(&traj2, b2) - 1.0).abs() > 1e-9;
        }
        assert_eq!(
            majorization_detects, ft_detects,
            "case {case}: verdicts disagree (bistochastic = {bistochastic})"
        );
        assert_eq!(ft_detects, !bistochastic, "case {case}: wrong verdict");
    }
    println!(
        "[criterion 8] PASS - FT = {ft_isolated} isolated, {ft_leak:.4} leaky; 500/500 verdicts agree"
    );
}

#[test]
fn criterion_09_no_false_positives_on_doubly_stochastic_dynamics() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let dim = 8usize;
    let grid = default_alpha_grid();
    let ord = QubitOrdering::che();
    let mut global_min = f64::INFINITY;
    for _ in 0..1000 {
        let mut m = Array2::zeros((dim, dim));
        let mut weights = [0.0; 4];
        for w in &mut weights {
            *w = rng.random_range(0.05..1.0);
        }
        let total: f64 = weights.iter().sum();
        for &w in &weights {
            let mut perm: Vec<usize> = (0..dim).collect();
            perm.shuffle(&mut rng);
            for (j, &i) in perm.iter().enumerate() {
                m[[i, j]] += w / total;
            }
        }
        let t = TransferMatrix::new(m).unwrap();

        // nonnegative inverse temperatures: theta in (0, pi/2]
        let specs: Vec<QubitSpec> = (0..3)
            .map(|_| QubitSpec::with_unit_gap(rng.random_range(0.05..0.5) * PI))
            .collect();
        let p0 = populations(&specs);
        let pf = t.apply(&p0);
        let b = ObservableB::build(&specs, &["c", "h", "e"], &ord).unwrap();
        let sweep = AlphaSweep::exact(&b, &p0, &pf, &grid, SpectrumFloor::default());
        global_min = global_min.min(sweep.min_value());
        assert!(sweep.is_nonnegative(1e-10), "violation: {}", sweep.min_value());
    }
    println!(
        "[criterion 9] PASS - 1000 doubly stochastic instances, global min {global_min:.3e}"
    );
}

#[test]
fn criterion_10_readout_bias_appears_and_compensates_away() {
    let truth = [0.25 * PI, 0.4 * PI, 0.25 * PI];
    let specs = che_specs(truth[0], truth[1], truth[2]);
    let ensemble = DiagonalEnsemble::new(specs);
    let ord = QubitOrdering::che();
    let detector = build_detector_matrix(&ReadoutNoiseProfile::tenerife_like()).unwrap();
    let shots = 8192u64;
    let mut rng = ChaCha8Rng::seed_from_u64(10);

    // one execution's calibration: a record per basis state
    let records: Vec<_> = (0..8)
        .map(|j| {
            let mut basis = vec![0.0; 8];
            basis[j] = 1.0;
            sample_shots(&basis, &detector, shots, &ord, &mut rng).unwrap()
        })
        .collect();
    let m_hat = estimate_detector_matrix(&records).unwrap();

    // 8 x 8192 preparation shots on the initial ensemble
    let mut counts = vec![0u64; 8];
    for signs in ensemble.sign_patterns() {
        let psi = ensemble.coherent_preparation_state(&signs).unwrap();
        let p: Vec<f64> = psi.iter().map(|a| a.norm_sqr()).collect();
        let record = sample_shots(&p, &detector, shots, &ord, &mut rng).unwrap();
        for (acc, c) in counts.iter_mut().zip(&record.counts) {
            *acc += c;
        }
    }
    let total = (shots * 8) as f64;
    let measured: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let compensated = compensate(&measured, &m_hat).unwrap();

    let angles = |p: &[f64]| -> Vec<f64> {
        (0..3).map(|k| recover_angle(marginal(p, 3, &[k])[1])).collect()
    };
    let raw_angles = angles(&measured);
    let fixed_angles = angles(&compensated);

    let raw_bias: Vec<f64> =
        raw_angles.iter().zip(&truth).map(|(a, t)| (a - t).abs() / PI).collect();
    let fixed_bias: Vec<f64> =
        fixed_angles.iter().zip(&truth).map(|(a, t)| (a - t).abs() / PI).collect();
    assert!(
        raw_bias.iter().any(|&b| b > 0.01),
        "uncompensated biases {raw_bias:?} all below 0.01 pi"
    );
    for (k, &b) in fixed_bias.iter().enumerate() {
        assert!(b <= 0.005, "qubit {k} compensated bias {b} pi");
    }
    println!(
        "[criterion 10] PASS - raw biases {:?} pi, compensated {:?} pi",
        raw_bias.iter().map(|b| (b * 1e4).round() / 1e4).collect::<Vec<_>>(),
        fixed_bias.iter().map(|b| (b * 1e4).round() / 1e4).collect::<Vec<_>>()
    );
}

#[test]
fn criterion_11_calibration_recovers_injected_miscalibration() {
    let base = fig2b();
    let slots = default_correction_slots(&base);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let truth: Vec<f64> = (0..slots.len()).map(|_| rng.random_range(-0.25..0.25)).collect();
    let perturbed = apply_corrections(&base, &slots, &truth).unwrap();

    // noiseless: exact recovery
    let m = build_detector_matrix(&ReadoutNoiseProfile::tenerife_like()).unwrap();
    let t_exact = TransferMatrix::new(
        m.entries().dot(transfer_matrix(&assemble_unitary(&perturbed)).entries()),
    )
    .unwrap();
    let problem = CalibrationProblem::new(base.clone(), slots.clone(), t_exact, m).unwrap();
    let clean = calibrate(&problem, &OptimizerConfig::default());
    assert!(clean.err_final < 1e-6, "noiseless err_final = {}", clean.err_final);

    // shot noise + readout noise: at least fourfold error reduction
    let m_noisy =
        build_detector_matrix(&ReadoutNoiseProfile::symmetric(&[0.1, 0.1, 0.1]).unwrap()).unwrap();
    let t_sampled = measure_transfer_matrix(
        &perturbed,
        &m_noisy,
        8192,
        &QubitOrdering::che(),
        &mut rng,
    )
    .unwrap();
    let noisy_problem = CalibrationProblem::new(base, slots, t_sampled, m_noisy).unwrap();
    let noisy = calibrate(&noisy_problem, &OptimizerConfig::default());
    let ratio = noisy.err_final / noisy.err_initial;
    assert!(noisy.err_final <= noisy.err_initial);
    assert!(ratio <= 0.25, "error ratio {ratio}");
    println!(
        "[criterion 11] PASS - noiseless err {:.2e}; noisy reduction x{:.1}",
        clean.err_final,
        1.0 / ratio
    );
}

#[test]
fn criterion_12_confidence_intervals_are_calibrated() {
    use thermoleak_core::stats::confidence_interval;

    let mut samples = vec![0.0; 10];
    samples.extend(vec![1.0; 10]);
    let ci = confidence_interval(&samples).unwrap();
    assert!((ci.halfwidth - 0.2955).abs() <= 1e-4, "halfwidth {}", ci.halfwidth);

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut ratios = Vec::new();
    for _ in 0..100 {
        let small: Vec<f64> =
            (0..20).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let large: Vec<f64> =
            (0..80).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        ratios.push(
            confidence_interval(&small).unwrap().halfwidth
                / confidence_interval(&large).unwrap().halfwidth,
        );
    }
    let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!(
        (mean_ratio - 2.0).abs() <= 0.6,
        "halfwidth ratio {mean_ratio} not within 30% of the 1/sqrt(N) prediction"
    );
    println!(
        "[criterion 12] PASS - hand halfwidth {:.6}; 20-vs-80 halfwidth ratio {mean_ratio:.3}",
        ci.halfwidth
    );
}
