//! Command-line driver: each subcommand reproduces one analysis pipeline as
//! CSV sweep files plus a JSON report. Exit code 0 means the tool ran;
//! detection verdicts live in the report, never in the exit code.

mod report;
mod scenario;

use std::error::Error;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use thermoleak_core::calibrate::{
    apply_corrections, calibrate, default_correction_slots, measure_transfer_matrix, merged_angles,
    objective, CalibrationProblem, CalibrationResult, OptimizerConfig, Slot,
};
use thermoleak_core::detector::build_detector_matrix;
use thermoleak_core::inequality::{
    alpha_grid, default_alpha_grid, fluctuation_theorem, majorization_test, rt_grid, rt_test,
    scaleup_alpha_grid, AlphaSweep, ObservableB, RenyiForm, SpectrumFloor, TrajectoryEnsemble,
};
use thermoleak_core::qcore::{
    assemble_unitary, propagate_populations, reduced_populations, reduced_transfer_matrix,
    transfer_matrix, TransferMatrix,
};
use thermoleak_core::stats::{rt_sampled, run_protocol, sweep_from_samples, ExecutionProtocol};
use thermoleak_core::thermal::gibbs_populations;

use report::{
    file_list, round12, round12_vec, write_atomic, write_json, DetectionReport, FluctuationVerdict,
    MajorizationVerdict, ScalarVerdict, ScenarioEcho, SubsystemVerdict, SweepVerdict,
    EXACT_DETECTION_TOL, SCHEMA_VERSION,
};
use scenario::{parse_angle, parse_noise_profile, Scenario, Variant};

const DEFAULT_SEED: u64 = 17;
const FT_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(
    name = "thermoleak",
    version,
    about = "Thermal-circuit heat-leak detection: sweeps, bounds and reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Infinite-statistics populations, bit-identical across runs.
    Exact,
    /// Finite-shot emulation with readout noise and compensation.
    Sampled,
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// fig2b | fig2b-no-leak | swap | scaleup{n,chain|swap}
    #[arg(long, default_value = "fig2b")]
    scenario: String,
    /// Cold-qubit preparation angle, radians or "0.25pi"
    #[arg(long, default_value = "0.25pi")]
    theta_c: String,
    /// Hot-qubit preparation angle
    #[arg(long, default_value = "0.4pi")]
    theta_h: String,
    /// Environment-qubit preparation angle
    #[arg(long, default_value = "0.25pi")]
    theta_e: String,
    #[arg(long)]
    alpha_min: Option<f64>,
    #[arg(long)]
    alpha_max: Option<f64>,
    /// Grid intervals between alpha-min and alpha-max (alpha = 0 is skipped)
    #[arg(long)]
    alpha_steps: Option<usize>,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    /// Shots per preparation (sampled mode)
    #[arg(long, default_value_t = 8192)]
    shots: u64,
    /// Independent experiment repetitions (sampled mode)
    #[arg(long, default_value_t = 20)]
    executions: usize,
    /// tenerife | yorktown | noiseless | comma-separated symmetric rates
    #[arg(long, default_value = "tenerife")]
    noise_profile: String,
    /// Master seed; THERMOLEAK_SEED is the fallback, then 17
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV and JSON files
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Global-passivity sweeps over {system} and the full register, with a
    /// detection report covering every framework
    Sweep(CommonArgs),
    /// Passivity-deformation pair: B^alpha and the deformed (sum of system
    /// excitations)^alpha
    Pd(CommonArgs),
    /// Resource-theory free-energy sweeps for each bath choice, with the
    /// global-passivity sweep for contrast
    Rt(CommonArgs),
    /// Integral fluctuation theorem of the reduced system channel plus the
    /// majorization check on the same data (exact mode)
    Ft(CommonArgs),
    /// Exact sweeps across register sizes 1..=n of a scaleup scenario
    Scaleup(CommonArgs),
    /// Inject a synthetic gate miscalibration and recover it from the
    /// (optionally sampled) transfer matrix
    Calibrate {
        #[command(flatten)]
        common: CommonArgs,
        /// Seed for the injected truth angles
        #[arg(long, default_value_t = 29)]
        perturbation_seed: u64,
        /// Truth angles are uniform in +-magnitude radians
        #[arg(long, default_value_t = 0.2)]
        perturbation_magnitude: f64,
    },
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Pd(args) => cmd_pd(&args),
        Command::Rt(args) => cmd_rt(&args),
        Command::Ft(args) => cmd_ft(&args),
        Command::Scaleup(args) => cmd_scaleup(&args),
        Command::Calibrate { common, perturbation_seed, perturbation_magnitude } => {
            cmd_calibrate(&common, perturbation_seed, perturbation_magnitude)
        }
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}

struct Resolved {
    scenario: Scenario,
    grid: Vec<f64>,
    mode: Mode,
    shots: u64,
    executions: usize,
    noise_profile: String,
    seed: u64,
    out: PathBuf,
}

impl Resolved {
    fn echo(&self) -> ScenarioEcho {
        ScenarioEcho {
            variant: self.scenario.variant.name(),
            theta_c: round12(self.scenario.theta_c),
            theta_h: round12(self.scenario.theta_h),
            theta_e: round12(self.scenario.theta_e),
            mode: match self.mode {
                Mode::Exact => "exact".into(),
                Mode::Sampled => "sampled".into(),
            },
            noise_profile: self.noise_profile.clone(),
            shots: self.shots,
            executions: self.executions,
            seed: self.seed,
        }
    }

    fn exact(&self) -> bool {
        self.mode == Mode::Exact
    }
}

fn resolve(args: &CommonArgs) -> Result<Resolved, Box<dyn Error>> {
    let variant: Variant = args.scenario.parse()?;
    let scenario = Scenario {
        variant,
        theta_c: parse_angle(&args.theta_c)?,
        theta_h: parse_angle(&args.theta_h)?,
        theta_e: parse_angle(&args.theta_e)?,
    };
    if let Variant::Scaleup { n, .. } = variant {
        if !(1..=5).contains(&n) {
            return Err(format!("scaleup size {n} outside 1..=5").into());
        }
    }

    // the wide default grid keeps the migrating scale-up detections on it
    let scaled = matches!(variant, Variant::Scaleup { .. });
    let grid = match (args.alpha_min, args.alpha_max, args.alpha_steps) {
        (None, None, None) if scaled => scaleup_alpha_grid(),
        (None, None, None) => default_alpha_grid(),
        (min, max, steps) => {
            let (dmin, dmax, dsteps) = if scaled { (-6.0, 2.0, 160) } else { (-2.0, 2.0, 80) };
            alpha_grid(min.unwrap_or(dmin), max.unwrap_or(dmax), steps.unwrap_or(dsteps))
        }
    };
    if grid.is_empty() {
        return Err("alpha grid is empty".into());
    }

    let seed = match args.seed {
        Some(s) => s,
        None => match std::env::var("THERMOLEAK_SEED") {
            Ok(v) => v.parse().map_err(|_| format!("bad THERMOLEAK_SEED `{v}`"))?,
            Err(_) => DEFAULT_SEED,
        },
    };

    fs::create_dir_all(&args.out)?;
    Ok(Resolved {
        scenario,
        grid,
        mode: args.mode,
        shots: args.shots,
        executions: args.executions,
        noise_profile: args.noise_profile.clone(),
        seed,
        out: args.out.clone(),
    })
}

/// Exact populations and per-execution compensated pairs share this shape;
/// exact mode is a single infinite-statistics "execution".
fn distribution_pairs(r: &Resolved) -> Result<Vec<(Vec<f64>, Vec<f64>)>, Box<dyn Error>> {
    match r.mode {
        Mode::Exact => {
            let p0 = r.scenario.ensemble().populations();
            let pf = propagate_populations(&r.scenario.circuit(), &p0);
            Ok(vec![(p0, pf)])
        }
        Mode::Sampled => {
            let profile = parse_noise_profile(&r.noise_profile, r.scenario.qubit_count())?;
            let detector = build_detector_matrix(&profile)?;
            let protocol = ExecutionProtocol {
                executions: r.executions,
                shots_per_preparation: r.shots,
                preparations_per_ensemble: 1 << r.scenario.qubit_count(),
            };
            let outcomes = run_protocol(
                &r.scenario.circuit(),
                &r.scenario.ensemble(),
                &detector,
                &protocol,
                &r.scenario.ordering(),
                r.seed,
            )?;
            Ok(outcomes
                .into_iter()
                .map(|o| (o.compensated_initial, o.compensated_final))
                .collect())
        }
    }
}

fn sweep_over(
    r: &Resolved,
    b: &ObservableB,
    pairs: &[(Vec<f64>, Vec<f64>)],
    grid: &[f64],
) -> Result<AlphaSweep, Box<dyn Error>> {
    if r.exact() {
        let (p0, pf) = &pairs[0];
        Ok(AlphaSweep::exact(b, p0, pf, grid, SpectrumFloor::default()))
    } else {
        Ok(sweep_from_samples(b, pairs, grid, SpectrumFloor::default())?)
    }
}

fn reduce_pairs(
    pairs: &[(Vec<f64>, Vec<f64>)],
    keep: &[&str],
    ordering: &thermoleak_core::qcore::QubitOrdering,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>, Box<dyn Error>> {
    pairs
        .iter()
        .map(|(p0, pf)| {
            Ok((reduced_populations(p0, keep, ordering)?, reduced_populations(pf, keep, ordering)?))
        })
        .collect()
}

/// The deformed observable counts system excitations with equal weight.
fn deformed_system_sweep(
    r: &Resolved,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> Result<AlphaSweep, Box<dyn Error>> {
    let ord = r.scenario.ordering();
    let system = ord.system_labels();
    let deformed = ObservableB::from_weights(vec![1.0; system.len()])?;
    let reduced = reduce_pairs(pairs, &system, &ord)?;
    sweep_over(r, &deformed, &reduced, &r.grid)
}

/// Reduced system channel over the environment's Gibbs state; the exact
/// trajectory ensemble behind the fluctuation theorem.
fn reduced_trajectories(r: &Resolved) -> Result<(TrajectoryEnsemble, Vec<f64>), Box<dyn Error>> {
    let specs = r.scenario.specs();
    let ord = r.scenario.ordering();
    let p0 = r.scenario.ensemble().populations();
    let system = ord.system_labels();
    let keep: Vec<usize> = system.iter().map(|l| ord.index_of(l).expect("own labels")).collect();
    let env_index = ord.index_of("e")?;
    let env = specs[env_index].populations().to_vec();
    let t_full = transfer_matrix(&assemble_unitary(&r.scenario.circuit()));
    let t_sys = reduced_transfer_matrix(&t_full, ord.len(), &keep, &env)?;
    let p0_sys = reduced_populations(&p0, &system, &ord)?;
    let omegas: Vec<f64> = keep.iter().map(|&k| specs[k].omega).collect();
    let betas: Vec<f64> =
        keep.iter().map(|&k| specs[k].beta_omega().map(|bw| bw / specs[k].omega)).collect::<thermoleak_core::Result<_>>()?;
    Ok((TrajectoryEnsemble::new(&t_sys, &p0_sys, &omegas)?, betas))
}

fn write_sweep_csv(path: &PathBuf, sweep: &AlphaSweep) -> Result<(), Box<dyn Error>> {
    write_atomic(path, &sweep.to_csv())?;
    Ok(())
}

fn cmd_sweep(args: &CommonArgs) -> Result<(), Box<dyn Error>> {
    let r = resolve(args)?;
    let ord = r.scenario.ordering();
    let specs = r.scenario.specs();
    let system = ord.system_labels();
    let all: Vec<&str> = ord.labels().iter().map(String::as_str).collect();

    let pairs = distribution_pairs(&r)?;
    let b_system = ObservableB::build(&specs, &system, &ord)?;
    let b_full = ObservableB::build(&specs, &all, &ord)?;
    let sweep_system = sweep_over(&r, &b_system, &pairs, &r.grid)?;
    let sweep_full = sweep_over(&r, &b_full, &pairs, &r.grid)?;
    let pd_sweep = deformed_system_sweep(&r, &pairs)?;

    let mut resource_theory = Vec::new();
    if r.scenario.qubit_count() == 3 {
        for (label, bath_theta) in [("c", r.scenario.theta_h), ("h", r.scenario.theta_c)] {
            let reference =
                gibbs_populations(thermoleak_core::thermal::theta_to_beta_omega(bath_theta)?)
                    .to_vec();
            let reduced = reduce_pairs(&pairs, &[label], &ord)?;
            let sweep = if r.exact() {
                rt_test(&reduced[0].0, &reduced[0].1, &reference, &rt_grid(), RenyiForm::Log)
            } else {
                rt_sampled(&reduced, &reference, &rt_grid(), RenyiForm::Log)?
            };
            resource_theory.push(SubsystemVerdict {
                subsystem: label.to_string(),
                verdict: SweepVerdict::from_sweep(&sweep, r.exact()),
            });
        }
    }

    // trajectory-level checks need exact transfer matrices
    let (fluctuation, majorization) = if r.exact() {
        let maj = {
            let (p0, pf) = &pairs[0];
            let outcome = majorization_test(p0, pf, 1e-9);
            MajorizationVerdict {
                majorizes: outcome.majorizes,
                max_excess: round12(outcome.max_excess),
                detected: !outcome.majorizes,
            }
        };
        let ft = if r.scenario.qubit_count() == 3 {
            let (trajectories, betas) = reduced_trajectories(&r)?;
            let value = fluctuation_theorem(&trajectories, &betas);
            Some(FluctuationVerdict {
                value: round12(value),
                deviation: round12((value - 1.0).abs()),
                detected: (value - 1.0).abs() > FT_TOL,
            })
        } else {
            None
        };
        (ft, Some(maj))
    } else {
        (None, None)
    };

    let csv_system = r.out.join("sweep_system.csv");
    let csv_full = r.out.join("sweep_full.csv");
    let report_path = r.out.join("sweep_report.json");
    write_sweep_csv(&csv_system, &sweep_system)?;
    write_sweep_csv(&csv_full, &sweep_full)?;

    let second_law_point = sweep_system
        .points
        .iter()
        .find(|p| (p.alpha - 1.0).abs() < 1e-12);
    let second_law = match second_law_point {
        Some(p) => ScalarVerdict {
            value: round12(p.value),
            detected: if r.exact() { p.value < -EXACT_DETECTION_TOL } else { p.detects() },
        },
        None => ScalarVerdict { value: f64::NAN, detected: false },
    };

    let report = DetectionReport {
        schema: SCHEMA_VERSION,
        scenario: r.echo(),
        second_law,
        global_passivity: SweepVerdict::from_sweep(&sweep_system, r.exact()),
        full_register: SweepVerdict::from_sweep(&sweep_full, r.exact()),
        passivity_deformation: SweepVerdict::from_sweep(&pd_sweep, r.exact()),
        resource_theory,
        fluctuation_theorem: fluctuation,
        majorization,
        files: file_list(&[csv_system, csv_full]),
    };
    write_json(&report_path, &report)?;
    println!("{}", report_path.display());
    Ok(())
}

#[derive(Serialize)]
struct PdReport {
    schema: u32,
    scenario: ScenarioEcho,
    global_passivity: SweepVerdict,
    passivity_deformation: SweepVerdict,
    files: Vec<String>,
}

fn cmd_pd(args: &CommonArgs) -> Result<(), Box<dyn Error>> {
    let r = resolve(args)?;
    let ord = r.scenario.ordering();
    let specs = r.scenario.specs();
    let system = ord.system_labels();

    let pairs = distribution_pairs(&r)?;
    let b_system = ObservableB::build(&specs, &system, &ord)?;
    let gp_sweep = sweep_over(&r, &b_system, &pairs, &r.grid)?;
    let pd_sweep = deformed_system_sweep(&r, &pairs)?;

    let csv_gp = r.out.join("pd_original.csv");
    let csv_pd = r.out.join("pd_deformed.csv");
    let report_path = r.out.join("pd_report.json");
    write_sweep_csv(&csv_gp, &gp_sweep)?;
    write_sweep_csv(&csv_pd, &pd_sweep)?;
    let report = PdReport {
        schema: SCHEMA_VERSION,
        scenario: r.echo(),
        global_passivity: SweepVerdict::from_sweep(&gp_sweep, r.exact()),
        passivity_deformation: SweepVerdict::from_sweep(&pd_sweep, r.exact()),
        files: file_list(&[csv_gp, csv_pd]),
    };
    write_json(&report_path, &report)?;
    println!("{}", report_path.display());
    Ok(())
}

#[derive(Serialize)]
struct RtReport {
    schema: u32,
    scenario: ScenarioEcho,
    resource_theory: Vec<SubsystemVerdict>,
    global_passivity: SweepVerdict,
    files: Vec<String>,
}

fn cmd_rt(args: &CommonArgs) -> Result<(), Box<dyn Error>> {
    let r = resolve(args)?;
    if r.scenario.qubit_count() != 3 {
        return Err("rt needs a three-qubit scenario (fig2b, fig2b-no-leak or swap)".into());
    }
    let ord = r.scenario.ordering();
    let specs = r.scenario.specs();
    let pairs = distribution_pairs(&r)?;

    let mut verdicts = Vec::new();
    let mut files = Vec::new();
    for (label, bath_theta) in [("c", r.scenario.theta_h), ("h", r.scenario.theta_c)] {
        let reference =
            gibbs_populations(thermoleak_core::thermal::theta_to_beta_omega(bath_theta)?).to_vec();
        let reduced = reduce_pairs(&pairs, &[label], &ord)?;
        let sweep = if r.exact() {
            rt_test(&reduced[0].0, &reduced[0].1, &reference, &rt_grid(), RenyiForm::Log)
        } else {
            rt_sampled(&reduced, &reference, &rt_grid(), RenyiForm::Log)?
        };
        let path = r.out.join(format!("rt_{label}.csv"));
        write_sweep_csv(&path, &sweep)?;
        files.push(path);
        verdicts.push(SubsystemVerdict {
            subsystem: label.to_string(),
            verdict: SweepVerdict::from_sweep(&sweep, r.exact()),
        });
    }

    let b_system = ObservableB::build(&specs, &ord.system_labels(), &ord)?;
    let gp_sweep = sweep_over(&r, &b_system, &pairs, &r.grid)?;
    let gp_path = r.out.join("rt_gp.csv");
    write_sweep_csv(&gp_path, &gp_sweep)?;
    files.push(gp_path);

    let report_path = r.out.join("rt_report.json");
    let report = RtReport {
        schema: SCHEMA_VERSION,
        scenario: r.echo(),
        resource_theory: verdicts,
        global_passivity: SweepVerdict::from_sweep(&gp_sweep, r.exact()),
        files: file_list(&files),
    };
    write_json(&report_path, &report)?;
    println!("{}", report_path.display());
    Ok(())
}

#[derive(Serialize)]
struct FtReport {
    schema: u32,
    scenario: ScenarioEcho,
    fluctuation_theorem: FluctuationVerdict,
    majorization: MajorizationVerdict,
    files: Vec<String>,
}

fn cmd_ft(args: &CommonArgs) -> Result<(), Box<dyn Error>> {
    let r = resolve(args)?;
    if !r.exact() {
        return Err("ft needs --mode exact: the trajectory table is a transfer-matrix object".into());
    }
    if r.scenario.qubit_count() != 3 {
        return Err("ft needs a three-qubit scenario (fig2b, fig2b-no-leak or swap)".into());
    }
    let (trajectories, betas) = reduced_trajectories(&r)?;
    let value = fluctuation_theorem(&trajectories, &betas);

    let ord = r.scenario.ordering();
    let system = ord.system_labels();
    let p0 = r.scenario.ensemble().populations();
    let pf = propagate_populations(&r.scenario.circuit(), &p0);
    let p0_sys = reduced_populations(&p0, &system, &ord)?;
    let pf_sys = reduced_populations(&pf, &system, &ord)?;
    let outcome = majorization_test(&p0_sys, &pf_sys, 1e-9);

    let csv_path = r.out.join("ft_trajectories.csv");
    write_atomic(&csv_path, &trajectories.to_csv(&betas))?;
    let report_path = r.out.join("ft_report.json");
    let report = FtReport {
        schema: SCHEMA_VERSION,
        scenario: r.echo(),
        fluctuation_theorem: FluctuationVerdict {
            value: round12(value),
            deviation: round12((value - 1.0).abs()),
            detected: (value - 1.0).abs() > FT_TOL,
        },
        majorization: MajorizationVerdict {
            majorizes: outcome.majorizes,
            max_excess: round12(outcome.max_excess),
            detected: !outcome.majorizes,
        },
        files: file_list(&[csv_path]),
    };
    write_json(&report_path, &report)?;
    println!("{}", report_path.display());
    Ok(())
}

#[derive(Serialize)]
struct ScaleupEntry {
    n: usize,
    qubit_count: usize,
    alpha_one_value: Option<f64>,
    alpha_one_detects: Option<bool>,
    first_detecting_alpha: Option<f64>,
    min_value: f64,
    file: String,
}

#[derive(Serialize)]
struct ScaleupReport {
    schema: u32,
    scenario: ScenarioEcho,
    sizes: Vec<ScaleupEntry>,
    files: Vec<String>,
}

fn cmd_scaleup(args: &CommonArgs) -> Result<(), Box<dyn Error>> {
    let r = resolve(args)?;
    if !r.exact() {
        return Err("scaleup needs --mode exact".into());
    }
    let Variant::Scaleup { n: max_n, variant } = r.scenario.variant else {
        return Err("scaleup needs --scenario scaleup{n,chain|swap}".into());
    };
    let variant_name = match variant {
        thermoleak_core::qcore::ScaleVariant::Chain => "chain",
        thermoleak_core::qcore::ScaleVariant::Swap => "swap",
    };

    let mut entries = Vec::new();
    let mut files = Vec::new();
    for n in 1..=max_n {
        let sub = Scenario { variant: Variant::Scaleup { n, variant }, ..r.scenario.clone() };
        let ord = sub.ordering();
        let specs = sub.specs();
        let p0 = sub.ensemble().populations();
        let pf = propagate_populations(&sub.circuit(), &p0);
        let b = ObservableB::build(&specs, &ord.system_labels(), &ord)?;
        let sweep = AlphaSweep::exact(&b, &p0, &pf, &r.grid, SpectrumFloor::default());

        let path = r.out.join(format!("scaleup_{variant_name}_n{n}.csv"));
        write_sweep_csv(&path, &sweep)?;
        let verdict = SweepVerdict::from_sweep(&sweep, true);
        let alpha_one = sweep.value_at(1.0);
        entries.push(ScaleupEntry {
            n,
            qubit_count: ord.len(),
            alpha_one_value: alpha_one.map(round12),
            alpha_one_detects: alpha_one.map(|v| v < -EXACT_DETECTION_TOL),
            first_detecting_alpha: verdict.detecting_alphas.first().copied(),
            min_value: verdict.min_value,
            file: path.display().to_string(),
        });
        files.push(path);
    }

    let report_path = r.out.join("scaleup_report.json");
    let report =
        ScaleupReport { schema: SCHEMA_VERSION, scenario: r.echo(), sizes: entries, files: file_list(&files) };
    write_json(&report_path, &report)?;
    println!("{}", report_path.display());
    Ok(())
}

#[derive(Serialize)]
struct PerturbationEcho {
    seed: u64,
    magnitude: f64,
    /// Identifiable truth: per-merged-slot angle sums.
    truth_merged: Vec<(Slot, f64)>,
}

#[derive(Serialize)]
struct CalibrationReport {
    schema: u32,
    scenario: ScenarioEcho,
    perturbation: PerturbationEcho,
    result: CalibrationResult,
    recovered_merged: Vec<(Slot, f64)>,
    error_ratio: f64,
}

fn cmd_calibrate(
    args: &CommonArgs,
    perturbation_seed: u64,
    perturbation_magnitude: f64,
) -> Result<(), Box<dyn Error>> {
    let r = resolve(args)?;
    if r.scenario.qubit_count() != 3 {
        return Err("calibrate needs a three-qubit scenario".into());
    }
    let base = r.scenario.circuit();
    let slots = default_correction_slots(&base);
    if slots.is_empty() {
        return Err("scenario circuit has no two-qubit gates to correct".into());
    }

    let mut perturbation_rng = ChaCha8Rng::seed_from_u64(perturbation_seed);
    let truth: Vec<f64> = (0..slots.len())
        .map(|_| perturbation_rng.random_range(-perturbation_magnitude..perturbation_magnitude))
        .collect();
    let perturbed = apply_corrections(&base, &slots, &truth)?;

    let profile = parse_noise_profile(&r.noise_profile, 3)?;
    let m = build_detector_matrix(&profile)?;
    let t_exp = match r.mode {
        Mode::Exact => TransferMatrix::new(
            m.entries().dot(transfer_matrix(&assemble_unitary(&perturbed)).entries()),
        )?,
        Mode::Sampled => {
            let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
            measure_transfer_matrix(&perturbed, &m, r.shots, &r.scenario.ordering(), &mut rng)?
        }
    };

    let problem = CalibrationProblem::new(base, slots.clone(), t_exp, m)?;
    let config = OptimizerConfig { seed: r.seed, ..OptimizerConfig::default() };
    let mut result = calibrate(&problem, &config);
    debug_assert!(objective(&problem, &result.angles) <= result.err_initial + 1e-12);

    let ratio = if result.err_initial > 0.0 { result.err_final / result.err_initial } else { 1.0 };
    let recovered_merged: Vec<(Slot, f64)> = merged_angles(&slots, &result.angles)
        .into_iter()
        .map(|(s, a)| (s, round12(a)))
        .collect();
    let truth_merged: Vec<(Slot, f64)> =
        merged_angles(&slots, &truth).into_iter().map(|(s, a)| (s, round12(a))).collect();
    result.angles = round12_vec(result.angles);
    result.err_initial = round12(result.err_initial);
    result.err_final = round12(result.err_final);
    result.relative_err = round12(result.relative_err);

    let report_path = r.out.join("calibration.json");
    let report = CalibrationReport {
        schema: SCHEMA_VERSION,
        scenario: r.echo(),
        perturbation: PerturbationEcho {
            seed: perturbation_seed,
            magnitude: perturbation_magnitude,
            truth_merged,
        },
        result,
        recovered_merged,
        error_ratio: round12(ratio),
    };
    write_json(&report_path, &report)?;
    println!("{}", report_path.display());
    Ok(())
}
