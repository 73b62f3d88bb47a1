//! Python bindings: circuits, thermal ensembles, sweep observables, readout
//! noise and calibration, mirroring the core API on plain lists and floats.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use thermoleak_core::calibrate as cal;
use thermoleak_core::detector::{build_detector_matrix, compensate, ReadoutNoiseProfile};
use thermoleak_core::inequality as ineq;
use thermoleak_core::inequality::{RenyiForm, SpectrumFloor};
use thermoleak_core::qcore as qc;
use thermoleak_core::thermal;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Gate list on a fixed-width register; LSB = qubit 0.
#[pyclass]
struct Circuit(qc::Circuit);

#[pymethods]
impl Circuit {
    #[new]
    fn new(qubit_count: usize) -> PyResult<Self> {
        Ok(Circuit(qc::Circuit::new(qubit_count).map_err(err)?))
    }

    /// CNOT(h->e), CNOT(e->h), CNOT(h->c) on the {c,h,e} register.
    #[staticmethod]
    fn fig2b() -> Self {
        Circuit(qc::fig2b())
    }

    /// Same system gates with the environment decoupled.
    #[staticmethod]
    fn fig2b_no_leak() -> Self {
        Circuit(qc::fig2b_no_leak())
    }

    /// Leak gates followed by a full system swap.
    #[staticmethod]
    fn swap_variant() -> Self {
        Circuit(qc::swap_variant())
    }

    /// Zigzag chain over n cold/hot pairs sharing one environment qubit.
    #[staticmethod]
    fn scaleup(n: usize, variant: &str) -> PyResult<Self> {
        let v = match variant {
            "chain" => qc::ScaleVariant::Chain,
            "swap" => qc::ScaleVariant::Swap,
            other => return Err(err(format!("unknown scaleup variant `{other}`"))),
        };
        Ok(Circuit(qc::scaleup_circuit(n, v).map_err(err)?))
    }

    fn ry(&mut self, qubit: usize, angle: f64) -> PyResult<()> {
        self.0.push(qc::Gate::Ry { qubit, angle }).map_err(err)
    }

    fn cnot(&mut self, control: usize, target: usize) -> PyResult<()> {
        self.0.push(qc::Gate::Cnot { control, target }).map_err(err)
    }

    fn swap(&mut self, a: usize, b: usize) -> PyResult<()> {
        self.0.push(qc::Gate::Swap { a, b }).map_err(err)
    }

    #[getter]
    fn qubit_count(&self) -> usize {
        self.0.qubit_count()
    }

    #[getter]
    fn gate_count(&self) -> usize {
        self.0.gates().len()
    }

    /// Classical transition matrix of the circuit, row-major.
    fn transfer_matrix(&self) -> Vec<Vec<f64>> {
        let t = qc::transfer_matrix(&qc::assemble_unitary(&self.0));
        t.entries().rows().into_iter().map(|r| r.to_vec()).collect()
    }

    fn __repr__(&self) -> String {
        format!("Circuit(qubits={}, gates={})", self.0.qubit_count(), self.0.gates().len())
    }
}

/// Product of single-qubit Gibbs states, all gaps 1.
#[pyclass]
struct Ensemble(thermal::DiagonalEnsemble);

#[pymethods]
impl Ensemble {
    #[new]
    fn new(thetas: Vec<f64>) -> Self {
        Ensemble(thermal::DiagonalEnsemble::new(
            thetas.into_iter().map(thermal::QubitSpec::with_unit_gap).collect(),
        ))
    }

    fn populations(&self) -> Vec<f64> {
        self.0.populations()
    }

    #[getter]
    fn qubit_count(&self) -> usize {
        self.0.qubit_count()
    }

    fn __repr__(&self) -> String {
        format!("Ensemble(qubits={})", self.0.qubit_count())
    }
}

/// Weighted excitation counter B = sum_k w_k n_k, floor-shifted per sweep.
#[pyclass]
struct Observable(ineq::ObservableB);

#[pymethods]
impl Observable {
    /// Weights beta_k * omega_k from preparation angles (the sweep default).
    #[staticmethod]
    fn thermal(thetas: Vec<f64>) -> PyResult<Self> {
        let weights: Vec<f64> = thetas
            .into_iter()
            .map(thermal::theta_to_beta_omega)
            .collect::<thermoleak_core::Result<_>>()
            .map_err(err)?;
        Ok(Observable(ineq::ObservableB::from_weights(weights).map_err(err)?))
    }

    /// Equal weights: the deformed observable counting excitations.
    #[staticmethod]
    fn uniform(qubit_count: usize) -> PyResult<Self> {
        Ok(Observable(ineq::ObservableB::from_weights(vec![1.0; qubit_count]).map_err(err)?))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn levels(&self) -> Vec<f64> {
        self.0.levels().to_vec()
    }
}

/// Alpha grid of sign(alpha) * Delta<(B+1)^alpha> values.
#[pyclass]
struct Sweep(ineq::AlphaSweep);

#[pymethods]
impl Sweep {
    /// (alpha, value, ci_halfwidth) triples.
    fn points(&self) -> Vec<(f64, f64, f64)> {
        self.0.points.iter().map(|p| (p.alpha, p.value, p.ci_halfwidth)).collect()
    }

    fn value_at(&self, alpha: f64) -> Option<f64> {
        self.0.value_at(alpha)
    }

    fn min_value(&self) -> f64 {
        self.0.min_value()
    }

    fn detecting_alphas(&self) -> Vec<f64> {
        self.0.detecting_alphas()
    }

    fn is_nonnegative(&self, tol: f64) -> bool {
        self.0.is_nonnegative(tol)
    }

    fn to_csv(&self) -> String {
        self.0.to_csv()
    }

    fn __len__(&self) -> usize {
        self.0.points.len()
    }
}

/// Per-qubit readout error rates and the induced detector matrix.
#[pyclass]
struct NoiseProfile(ReadoutNoiseProfile);

#[pymethods]
impl NoiseProfile {
    /// Asymmetric three-qubit rates of the noisier reference device.
    #[staticmethod]
    fn tenerife() -> Self {
        NoiseProfile(ReadoutNoiseProfile::tenerife_like())
    }

    /// Milder three-qubit rates.
    #[staticmethod]
    fn yorktown() -> Self {
        NoiseProfile(ReadoutNoiseProfile::yorktown_like())
    }

    #[staticmethod]
    fn symmetric(rates: Vec<f64>) -> PyResult<Self> {
        Ok(NoiseProfile(ReadoutNoiseProfile::symmetric(&rates).map_err(err)?))
    }

    #[staticmethod]
    fn noiseless(qubit_count: usize) -> Self {
        NoiseProfile(ReadoutNoiseProfile::noiseless(qubit_count))
    }

    #[getter]
    fn qubit_count(&self) -> usize {
        self.0.qubit_count()
    }

    /// Measured distribution M p for true populations p.
    fn distort(&self, populations: Vec<f64>) -> PyResult<Vec<f64>> {
        let m = build_detector_matrix(&self.0).map_err(err)?;
        if populations.len() != m.dim() {
            return Err(err(format!("expected {} populations", m.dim())));
        }
        Ok(m.distort(&populations))
    }

    /// Invert the detector matrix on a measured distribution.
    fn compensate(&self, measured: Vec<f64>) -> PyResult<Vec<f64>> {
        let m = build_detector_matrix(&self.0).map_err(err)?;
        compensate(&measured, &m).map_err(err)
    }
}

/// Populations after the circuit, exactly.
#[pyfunction]
fn propagate(circuit: &Circuit, populations: Vec<f64>) -> PyResult<Vec<f64>> {
    if populations.len() != 1 << circuit.0.qubit_count() {
        return Err(err("population vector does not match the register"));
    }
    Ok(qc::propagate_populations(&circuit.0, &populations))
}

/// Marginal over the kept qubit indices (LSB order).
#[pyfunction]
fn marginal(populations: Vec<f64>, qubit_count: usize, keep: Vec<usize>) -> PyResult<Vec<f64>> {
    if populations.len() != 1 << qubit_count {
        return Err(err("population vector does not match qubit_count"));
    }
    if keep.iter().any(|&k| k >= qubit_count) {
        return Err(err("kept qubit index out of range"));
    }
    Ok(qc::marginal(&populations, qubit_count, &keep))
}

#[pyfunction]
fn alpha_grid(min: f64, max: f64, steps: usize) -> Vec<f64> {
    ineq::alpha_grid(min, max, steps)
}

#[pyfunction]
fn default_alpha_grid() -> Vec<f64> {
    ineq::default_alpha_grid()
}

/// Exact global-passivity sweep of sign(alpha) * Delta<(B+1)^alpha>.
#[pyfunction]
fn exact_sweep(
    observable: &Observable,
    p0: Vec<f64>,
    pf: Vec<f64>,
    alphas: Vec<f64>,
) -> PyResult<Sweep> {
    if p0.len() != observable.0.dim() || pf.len() != observable.0.dim() {
        return Err(err("distributions do not match the observable register"));
    }
    Ok(Sweep(ineq::AlphaSweep::exact(&observable.0, &p0, &pf, &alphas, SpectrumFloor::default())))
}

/// Smallest positive alpha where detection stops, if the sweep detects at all.
#[pyfunction]
fn detection_boundary(
    observable: &Observable,
    p0: Vec<f64>,
    pf: Vec<f64>,
    lo: f64,
    hi: f64,
) -> Option<f64> {
    ineq::detection_boundary(&observable.0, &p0, &pf, SpectrumFloor::default(), lo, hi)
}

/// Renyi-divergence monotonicity sweep against a reference Gibbs state.
#[pyfunction]
fn rt_sweep(p0_sys: Vec<f64>, pf_sys: Vec<f64>, reference: Vec<f64>) -> PyResult<Sweep> {
    if p0_sys.len() != reference.len() || pf_sys.len() != reference.len() {
        return Err(err("distributions and reference differ in length"));
    }
    Ok(Sweep(ineq::rt_test(&p0_sys, &pf_sys, &reference, &ineq::rt_grid(), RenyiForm::Log)))
}

/// (majorizes, max_excess) of the final distribution under the initial one.
#[pyfunction]
fn majorization(p0: Vec<f64>, pf: Vec<f64>) -> PyResult<(bool, f64)> {
    if p0.len() != pf.len() {
        return Err(err("distributions differ in length"));
    }
    let outcome = ineq::majorization_test(&p0, &pf, 1e-9);
    Ok((outcome.majorizes, outcome.max_excess))
}

/// <exp(-sum beta_k q_k)> of the reduced system channel of a 3-qubit circuit
/// prepared at (theta_c, theta_h, theta_e); exactly 1 iff no hidden leak.
#[pyfunction]
fn fluctuation_theorem(
    circuit: &Circuit,
    theta_c: f64,
    theta_h: f64,
    theta_e: f64,
) -> PyResult<f64> {
    if circuit.0.qubit_count() != 3 {
        return Err(err("fluctuation theorem needs the 3-qubit register"));
    }
    let specs: Vec<thermal::QubitSpec> =
        [theta_c, theta_h, theta_e].into_iter().map(thermal::QubitSpec::with_unit_gap).collect();
    let p0 = thermal::DiagonalEnsemble::new(specs.clone()).populations();
    let t_full = qc::transfer_matrix(&qc::assemble_unitary(&circuit.0));
    let env = specs[2].populations().to_vec();
    let t_sys = qc::reduced_transfer_matrix(&t_full, 3, &[0, 1], &env).map_err(err)?;
    let p0_sys = qc::marginal(&p0, 3, &[0, 1]);
    let trajectories = ineq::TrajectoryEnsemble::new(&t_sys, &p0_sys, &[1.0, 1.0]).map_err(err)?;
    let betas: Vec<f64> = specs[..2]
        .iter()
        .map(|s| s.beta_omega())
        .collect::<thermoleak_core::Result<_>>()
        .map_err(err)?;
    Ok(ineq::fluctuation_theorem(&trajectories, &betas))
}

/// Ry correction slots bracketing every two-qubit gate: (position, qubit).
#[pyfunction]
fn default_correction_slots(circuit: &Circuit) -> Vec<(usize, usize)> {
    cal::default_correction_slots(&circuit.0)
}

#[pyfunction]
fn apply_corrections(
    circuit: &Circuit,
    slots: Vec<(usize, usize)>,
    angles: Vec<f64>,
) -> PyResult<Circuit> {
    Ok(Circuit(cal::apply_corrections(&circuit.0, &slots, &angles).map_err(err)?))
}

#[pyclass]
struct CalibrationOutcome {
    #[pyo3(get)]
    angles: Vec<f64>,
    #[pyo3(get)]
    err_initial: f64,
    #[pyo3(get)]
    err_final: f64,
    #[pyo3(get)]
    relative_err: f64,
    #[pyo3(get)]
    stagnant: bool,
}

/// Fit correction angles so the noisy transfer matrix of the corrected
/// circuit explains an experimental one measured at `shots` per column.
#[pyfunction]
#[pyo3(signature = (circuit, truth, noise, shots, seed = 7))]
fn calibrate(
    circuit: &Circuit,
    truth: Vec<f64>,
    noise: &NoiseProfile,
    shots: u64,
    seed: u64,
) -> PyResult<CalibrationOutcome> {
    let slots = cal::default_correction_slots(&circuit.0);
    let perturbed = cal::apply_corrections(&circuit.0, &slots, &truth).map_err(err)?;
    let m = build_detector_matrix(&noise.0).map_err(err)?;
    let labels: Vec<String> = (0..circuit.0.qubit_count()).map(|q| format!("q{q}")).collect();
    let ordering = qc::QubitOrdering::new(labels).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_exp =
        cal::measure_transfer_matrix(&perturbed, &m, shots, &ordering, &mut rng).map_err(err)?;
    let problem = cal::CalibrationProblem::new(circuit.0.clone(), slots, t_exp, m).map_err(err)?;
    let config = cal::OptimizerConfig { seed, ..cal::OptimizerConfig::default() };
    let result = cal::calibrate(&problem, &config);
    Ok(CalibrationOutcome {
        angles: result.angles,
        err_initial: result.err_initial,
        err_final: result.err_final,
        relative_err: result.relative_err,
        stagnant: result.stagnant,
    })
}

#[pymodule]
fn thermoleak_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Circuit>()?;
    m.add_class::<Ensemble>()?;
    m.add_class::<Observable>()?;
    m.add_class::<Sweep>()?;
    m.add_class::<NoiseProfile>()?;
    m.add_class::<CalibrationOutcome>()?;
    m.add_function(wrap_pyfunction!(propagate, m)?)?;
    m.add_function(wrap_pyfunction!(marginal, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_grid, m)?)?;
    m.add_function(wrap_pyfunction!(default_alpha_grid, m)?)?;
    m.add_function(wrap_pyfunction!(exact_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(detection_boundary, m)?)?;
    m.add_function(wrap_pyfunction!(rt_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(majorization, m)?)?;
    m.add_function(wrap_pyfunction!(fluctuation_theorem, m)?)?;
    m.add_function(wrap_pyfunction!(default_correction_slots, m)?)?;
    m.add_function(wrap_pyfunction!(apply_corrections, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    Ok(())
}
