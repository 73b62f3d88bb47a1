//! Detection statistics: global-passivity alpha sweeps, passivity
//! deformation, majorization, Renyi resource-theory bounds, the integral
//! fluctuation theorem, and energy-conservation bookkeeping.
//!
//! All of them consume exact population vectors (or sampled estimates of
//! them) and return signed statistics whose negativity certifies that the
//! dynamics on the measured register was not doubly stochastic.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::fmt::sig12;
use crate::qcore::{QubitOrdering, TransferMatrix, MAX_QUBITS};
use crate::thermal::QubitSpec;

/// Tie tolerance when comparing observable levels.
pub const LEVEL_TOL: f64 = 1e-12;

/// Default majorization tolerance in exact mode.
pub const MAJORIZATION_TOL: f64 = 1e-9;

/// How x^alpha treats the zero ground level that the min-shift in B forces.
///
/// For alpha < 0 the ground level is singular, so a convention is required.
/// `Shift(s)` maps every level x to (x+s)^alpha: the shift cancels exactly
/// at alpha = 1 and keeps the level map monotone increasing for every alpha,
/// which is what the doubly-stochastic bound needs. `ZeroPower` is the
/// literal 0^alpha := 0 reading; it breaks monotonicity across the ground
/// level for alpha < 0 (the ground level, the largest value of x^alpha,
/// is replaced by the smallest) and therefore produces false positives;
/// it is kept for sensitivity studies only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectrumFloor {
    Shift(f64),
    ZeroPower,
}

impl Default for SpectrumFloor {
    fn default() -> Self {
        SpectrumFloor::Shift(1.0)
    }
}

impl SpectrumFloor {
    pub fn powered(&self, level: f64, alpha: f64) -> f64 {
        match *self {
            SpectrumFloor::Shift(s) => (level + s).powf(alpha),
            SpectrumFloor::ZeroPower => {
                if level.abs() <= LEVEL_TOL {
                    0.0
                } else {
                    level.powf(alpha)
                }
            }
        }
    }
}

/// Diagonal observable over a register, shifted so the minimum level is 0.
///
/// The product form B = sum_k w_k n_k (w_k = beta_k * omega_k, n_k the
/// excited projector) keeps its per-qubit weights so deformation moves can
/// act on them; level-only observables (from splits) drop them.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableB {
    levels: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl ObservableB {
    /// B = sum_k w_k n_k - min, over a 2^len(w) register.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.len() > MAX_QUBITS {
            return Err(Error::TooManyQubits(weights.len()));
        }
        let dim = 1usize << weights.len();
        let mut levels = vec![0.0; dim];
        for (i, level) in levels.iter_mut().enumerate() {
            *level = weights.iter().enumerate().filter(|(k, _)| (i >> k) & 1 == 1).map(|(_, w)| w).sum();
        }
        Ok(ObservableB { levels: shift_to_zero(levels), weights: Some(weights) })
    }

    /// Arbitrary level assignment (loses the product structure).
    pub fn from_levels(levels: Vec<f64>) -> Self {
        ObservableB { levels: shift_to_zero(levels), weights: None }
    }

    /// Thermal B over the full register: weight beta_k*omega_k on the subset
    /// qubits, identity (weight 0) on the rest.
    pub fn build(specs: &[QubitSpec], subset: &[&str], ordering: &QubitOrdering) -> Result<Self> {
        if subset.is_empty() {
            return Err(Error::EmptySubset);
        }
        if specs.len() != ordering.len() {
            return Err(Error::DimensionMismatch(specs.len(), ordering.len()));
        }
        let mut weights = vec![0.0; specs.len()];
        for label in subset {
            let k = ordering.index_of(label)?;
            weights[k] = specs[k].beta_omega()?;
        }
        Self::from_weights(weights)
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn span(&self) -> f64 {
        let max = self.levels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.levels.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }
}

fn shift_to_zero(mut levels: Vec<f64>) -> Vec<f64> {
    let min = levels.iter().cloned().fold(f64::INFINITY, f64::min);
    for l in &mut levels {
        *l -= min;
    }
    levels
}

/// sign(alpha) * (<B^alpha>_f - <B^alpha>_0). Negative = detection.
/// alpha = 0 is defined as 0 (the grid skips it anyway).
pub fn delta_b_alpha(
    b: &ObservableB,
    p0: &[f64],
    pf: &[f64],
    alpha: f64,
    floor: SpectrumFloor,
) -> f64 {
    assert_eq!(p0.len(), b.dim(), "p0 register mismatch");
    assert_eq!(pf.len(), b.dim(), "pf register mismatch");
    if alpha == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for (i, level) in b.levels.iter().enumerate() {
        acc += (pf[i] - p0[i]) * floor.powered(*level, alpha);
    }
    alpha.signum() * acc
}

/// steps+1 equally spaced points from min to max; a point landing on zero is
/// dropped because the statistic is identically zero there.
pub fn alpha_grid(min: f64, max: f64, steps: usize) -> Vec<f64> {
    assert!(steps > 0 && max > min);
    (0..=steps)
        .map(|i| min + (max - min) * i as f64 / steps as f64)
        .filter(|a| a.abs() > LEVEL_TOL)
        .collect()
}

/// The visible range of the two-temperature sweeps: 81 points over [-2, 2]
/// minus zero.
pub fn default_alpha_grid() -> Vec<f64> {
    alpha_grid(-2.0, 2.0, 80)
}

/// Wider range for the scaled-up registers: the detecting window migrates to
/// more negative alpha as the register grows, leaving [-2, 2] by n = 3.
pub fn scaleup_alpha_grid() -> Vec<f64> {
    alpha_grid(-6.0, 2.0, 160)
}

/// One row of a sweep; ci_halfwidth is 0 in exact mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub alpha: f64,
    pub value: f64,
    pub ci_halfwidth: f64,
}

impl SweepPoint {
    /// Detection = the whole confidence band is below zero.
    pub fn detects(&self) -> bool {
        self.value + self.ci_halfwidth < 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSweep {
    pub points: Vec<SweepPoint>,
}

impl AlphaSweep {
    /// Exact sweep of sign(alpha)*Delta<B^alpha> over the grid.
    pub fn exact(
        b: &ObservableB,
        p0: &[f64],
        pf: &[f64],
        grid: &[f64],
        floor: SpectrumFloor,
    ) -> AlphaSweep {
        let points = grid
            .iter()
            .map(|&alpha| SweepPoint {
                alpha,
                value: delta_b_alpha(b, p0, pf, alpha, floor),
                ci_halfwidth: 0.0,
            })
            .collect();
        AlphaSweep { points }
    }

    pub fn min_value(&self) -> f64 {
        self.points.iter().map(|p| p.value).fold(f64::INFINITY, f64::min)
    }

    pub fn value_at(&self, alpha: f64) -> Option<f64> {
        self.points.iter().find(|p| (p.alpha - alpha).abs() <= LEVEL_TOL).map(|p| p.value)
    }

    pub fn detecting_alphas(&self) -> Vec<f64> {
        self.points.iter().filter(|p| p.detects()).map(|p| p.alpha).collect()
    }

    pub fn is_nonnegative(&self, tol: f64) -> bool {
        self.points.iter().all(|p| p.value >= -tol)
    }

    /// "alpha,value,ci_halfwidth" with 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,value,ci_halfwidth\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", sig12(p.alpha), sig12(p.value), sig12(p.ci_halfwidth)));
        }
        out
    }
}

/// Bisect for the alpha where the exact statistic changes sign; requires a
/// strict sign change between lo and hi (value(lo) < 0 < value(hi)).
pub fn detection_boundary(
    b: &ObservableB,
    p0: &[f64],
    pf: &[f64],
    floor: SpectrumFloor,
    mut lo: f64,
    mut hi: f64,
) -> Option<f64> {
    let value = |alpha: f64| delta_b_alpha(b, p0, pf, alpha, floor);
    if !(value(lo) < 0.0 && value(hi) > 0.0) {
        return None;
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if value(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Entropy-free second law: sum_k beta_k * q_k with q_k the energy change of
/// microbath k. Equals the alpha = 1 sweep value (the shift cancels in the
/// difference).
pub fn second_law(specs: &[QubitSpec], q: &[f64]) -> Result<f64> {
    if specs.len() != q.len() {
        return Err(Error::DimensionMismatch(specs.len(), q.len()));
    }
    let mut acc = 0.0;
    for (spec, &qk) in specs.iter().zip(q) {
        acc += spec.beta_omega()? / spec.omega * qk;
    }
    Ok(acc)
}

/// Per-qubit Delta<H_k> = omega_k * (excited weight after - before).
pub fn energy_changes(specs: &[QubitSpec], p0: &[f64], pf: &[f64]) -> Vec<f64> {
    let n = specs.len();
    assert_eq!(p0.len(), 1 << n);
    assert_eq!(pf.len(), 1 << n);
    (0..n)
        .map(|k| {
            let excited = |p: &[f64]| -> f64 {
                p.iter().enumerate().filter(|(i, _)| (i >> k) & 1 == 1).map(|(_, v)| v).sum()
            };
            specs[k].omega * (excited(pf) - excited(p0))
        })
        .collect()
}

/// True iff p is non-increasing wherever the levels increase (ties free):
/// exactly the condition under which Delta<B> >= 0 for every mixture of
/// permutations.
pub fn is_passive(p: &[f64], b: &ObservableB) -> bool {
    assert_eq!(p.len(), b.dim());
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&i, &j| b.levels[i].partial_cmp(&b.levels[j]).expect("finite levels"));
    let mut running_min = f64::INFINITY;
    let mut g = 0;
    while g < order.len() {
        let mut end = g + 1;
        while end < order.len() && b.levels[order[end]] - b.levels[order[g]] <= LEVEL_TOL {
            end += 1;
        }
        let group = &order[g..end];
        let max_p = group.iter().map(|&i| p[i]).fold(f64::NEG_INFINITY, f64::max);
        if max_p > running_min + LEVEL_TOL {
            return false;
        }
        running_min = running_min.min(group.iter().map(|&i| p[i]).fold(f64::INFINITY, f64::min));
        g = end;
    }
    true
}

/// A deformed observable together with the move that produced it.
#[derive(Debug, Clone)]
pub struct Deformation {
    pub label: String,
    pub observable: ObservableB,
}

/// Candidate deformed observables, all passive for p0 and with nonzero span.
///
/// Two move families: (1) pull one qubit's weight toward another's until two
/// previously distinct levels first meet (meets allowed, crossings not) —
/// available only while B keeps its product form; (2) split a degenerate
/// level group, assigning the lower sub-level to the larger initial
/// population.
pub fn deform_passivity(b: &ObservableB, p0: &[f64]) -> Vec<Deformation> {
    assert_eq!(p0.len(), b.dim());
    let mut out = Vec::new();

    if let Some(w) = b.weights() {
        let n = w.len();
        for j in 0..n {
            for k in 0..n {
                if j == k || (w[j] - w[k]).abs() <= LEVEL_TOL {
                    continue;
                }
                let t = first_meet_time(b, j, w[k] - w[j]);
                let mut moved = w.to_vec();
                moved[j] += t * (w[k] - w[j]);
                let observable = ObservableB::from_weights(moved).expect("register unchanged");
                out.push(Deformation {
                    label: format!("equalize w{j} -> w{k} (t = {})", sig12(t)),
                    observable,
                });
            }
        }
    }

    out.extend(split_candidates(b, p0));
    out.retain(|d| d.observable.span() > LEVEL_TOL && is_passive(p0, &d.observable));
    out
}

/// Smallest t in (0, 1] at which two levels that were distinct at t = 0
/// coincide while weight j moves with velocity v; 1 when none do.
fn first_meet_time(b: &ObservableB, j: usize, v: f64) -> f64 {
    let dim = b.dim();
    let mut t_star = 1.0f64;
    for a in 0..dim {
        for c in a + 1..dim {
            let gap = b.levels[c] - b.levels[a];
            if gap.abs() <= LEVEL_TOL {
                continue;
            }
            let rel = v * (((a >> j) & 1) as f64 - ((c >> j) & 1) as f64);
            if rel.abs() <= LEVEL_TOL {
                continue;
            }
            let t = gap / rel;
            if t > LEVEL_TOL && t < t_star {
                t_star = t;
            }
        }
    }
    t_star
}

fn split_candidates(b: &ObservableB, p0: &[f64]) -> Vec<Deformation> {
    let mut order: Vec<usize> = (0..b.dim()).collect();
    order.sort_by(|&i, &j| b.levels[i].partial_cmp(&b.levels[j]).expect("finite levels"));

    // smallest nonzero gap between adjacent distinct levels
    let mut min_gap = f64::INFINITY;
    for w in order.windows(2) {
        let gap = b.levels[w[1]] - b.levels[w[0]];
        if gap > LEVEL_TOL {
            min_gap = min_gap.min(gap);
        }
    }

    let mut out = Vec::new();
    let mut g = 0;
    while g < order.len() {
        let mut end = g + 1;
        while end < order.len() && b.levels[order[end]] - b.levels[order[g]] <= LEVEL_TOL {
            end += 1;
        }
        if end - g >= 2 {
            let mut group: Vec<usize> = order[g..end].to_vec();
            // larger initial population sinks to the lower sub-level
            group.sort_by(|&i, &j| p0[j].partial_cmp(&p0[i]).expect("finite populations"));
            let step = if min_gap.is_finite() {
                min_gap / (2.0 * (end - g - 1) as f64)
            } else {
                1.0 / (end - g - 1) as f64
            };
            let mut levels = b.levels.clone();
            for (rank, &idx) in group.iter().enumerate() {
                levels[idx] += rank as f64 * step;
            }
            out.push(Deformation {
                label: format!("split level {}", sig12(b.levels[order[g]])),
                observable: ObservableB::from_levels(levels),
            });
        }
        g = end;
    }
    out
}

/// Lorenz-curve comparison of two distributions. `majorizes` means the
/// initial curve stays on or above the final one everywhere, the necessary
/// condition for pf = T p0 with T doubly stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorizationOutcome {
    pub majorizes: bool,
    /// max_k (Cf_k - C0_k); a leak shows as a positive excess beyond tol.
    pub max_excess: f64,
    pub initial_curve: Vec<f64>,
    pub final_curve: Vec<f64>,
}

pub fn majorization_test(p0: &[f64], pf: &[f64], tol: f64) -> MajorizationOutcome {
    assert_eq!(p0.len(), pf.len());
    let curve = |p: &[f64]| -> Vec<f64> {
        let mut sorted = p.to_vec();
        sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite populations"));
        let mut acc = 0.0;
        sorted
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect()
    };
    let initial_curve = curve(p0);
    let final_curve = curve(pf);
    let max_excess = initial_curve
        .iter()
        .zip(&final_curve)
        .map(|(c0, cf)| cf - c0)
        .fold(f64::NEG_INFINITY, f64::max);
    MajorizationOutcome { majorizes: max_excess <= tol, max_excess, initial_curve, final_curve }
}

impl MajorizationOutcome {
    /// "k,c0_k,cf_k", k = 1..dim (top-k cumulative sums).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,c0_k,cf_k\n");
        for (k, (c0, cf)) in self.initial_curve.iter().zip(&self.final_curve).enumerate() {
            out.push_str(&format!("{},{},{}\n", k + 1, sig12(*c0), sig12(*cf)));
        }
        out
    }
}

/// Renyi divergence in the standard (log) form:
/// D_at(x||y) = ln(sum x^at y^(1-at)) / (at - 1), KL at at -> 1.
/// Support violations (y = 0 where it matters) return +infinity.
pub fn renyi_divergence(x: &[f64], y: &[f64], alpha_tilde: f64) -> f64 {
    assert_eq!(x.len(), y.len());
    debug_assert!(alpha_tilde > 0.0, "the test grid is alpha_tilde > 0");
    if (alpha_tilde - 1.0).abs() < 1e-6 {
        return kl_divergence(x, y);
    }
    let mut s = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        if xi == 0.0 {
            continue;
        }
        if yi == 0.0 {
            if alpha_tilde > 1.0 {
                return f64::INFINITY;
            }
            continue;
        }
        s += xi.powf(alpha_tilde) * yi.powf(1.0 - alpha_tilde);
    }
    s.ln() / (alpha_tilde - 1.0)
}

fn kl_divergence(x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        if xi == 0.0 {
            continue;
        }
        if yi == 0.0 {
            return f64::INFINITY;
        }
        s += xi * (xi / yi).ln();
    }
    s
}

/// Which functional the resource-theory difference uses. `Log` is the
/// standard divergence (the form with the monotonicity proof); `Sum` is the
/// same expression without the logarithm, kept for comparison because the
/// bound is usually quoted that way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenyiForm {
    Log,
    Sum,
}

/// D(p0||ref) - D(pf||ref); nonnegative for every exact thermal operation,
/// so a negative value certifies a heat leak.
pub fn rt_statistic(
    p0_sys: &[f64],
    pf_sys: &[f64],
    reference: &[f64],
    alpha_tilde: f64,
    form: RenyiForm,
) -> f64 {
    match form {
        RenyiForm::Log => {
            renyi_divergence(p0_sys, reference, alpha_tilde)
                - renyi_divergence(pf_sys, reference, alpha_tilde)
        }
        RenyiForm::Sum => {
            if (alpha_tilde - 1.0).abs() < 1e-6 {
                return kl_divergence(p0_sys, reference) - kl_divergence(pf_sys, reference);
            }
            let sum = |p: &[f64]| -> f64 {
                p.iter()
                    .zip(reference)
                    .filter(|(&pi, _)| pi > 0.0)
                    .map(|(&pi, &ri)| pi.powf(alpha_tilde) * ri.powf(1.0 - alpha_tilde))
                    .sum()
            };
            (sum(p0_sys) - sum(pf_sys)) / (alpha_tilde - 1.0)
        }
    }
}

/// Sweep of the resource-theory statistic over an alpha_tilde grid.
pub fn rt_test(
    p0_sys: &[f64],
    pf_sys: &[f64],
    reference: &[f64],
    grid: &[f64],
    form: RenyiForm,
) -> AlphaSweep {
    let points = grid
        .iter()
        .map(|&alpha| SweepPoint {
            alpha,
            value: rt_statistic(p0_sys, pf_sys, reference, alpha, form),
            ci_halfwidth: 0.0,
        })
        .collect();
    AlphaSweep { points }
}

/// Default resource-theory grid: (0, 3] in steps of 0.05.
pub fn rt_grid() -> Vec<f64> {
    (1..=60).map(|i| i as f64 * 0.05).collect()
}

/// Energy bookkeeping of a population change, grouped by microbath.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDefect {
    /// Delta<sum_{k in group} H_k> per partition group.
    pub per_group: Vec<f64>,
    /// Signed total over all qubits; 0 for excitation-conserving dynamics
    /// with equal gaps.
    pub total: f64,
    pub initial_energy: f64,
    /// |total| / initial energy; None flags a zero-energy initial state,
    /// in which case only the absolute defect is meaningful.
    pub relative: Option<f64>,
}

impl EnergyDefect {
    /// Relative defect when defined, absolute otherwise.
    pub fn value(&self) -> f64 {
        self.relative.unwrap_or_else(|| self.total.abs())
    }
}

pub fn energy_conservation_defect(
    specs: &[QubitSpec],
    p0: &[f64],
    pf: &[f64],
    partition: &[Vec<usize>],
) -> Result<EnergyDefect> {
    let n = specs.len();
    let mut seen = vec![0usize; n];
    for group in partition {
        for &k in group {
            if k >= n {
                return Err(Error::QubitIndex { index: k, qubit_count: n });
            }
            seen[k] += 1;
        }
    }
    if let Some(k) = seen.iter().position(|&c| c != 1) {
        return Err(Error::PartitionCoverage(k));
    }
    let changes = energy_changes(specs, p0, pf);
    let per_group: Vec<f64> =
        partition.iter().map(|group| group.iter().map(|&k| changes[k]).sum()).collect();
    let total: f64 = changes.iter().sum();
    let initial_energy: f64 = (0..n)
        .map(|k| {
            let excited: f64 =
                p0.iter().enumerate().filter(|(i, _)| (i >> k) & 1 == 1).map(|(_, v)| v).sum();
            specs[k].omega * excited
        })
        .sum();
    let relative = if initial_energy > 1e-12 { Some(total.abs() / initial_energy) } else { None };
    Ok(EnergyDefect { per_group, total, initial_energy, relative })
}

/// Joint distribution of (initial, final) basis states under a transfer
/// matrix: joint[f, i] = T[f, i] * p0[i]. Carries the per-qubit gaps so
/// trajectory energy changes are defined.
#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    joint: Array2<f64>,
    omegas: Vec<f64>,
}

impl TrajectoryEnsemble {
    pub fn new(t: &TransferMatrix, p0: &[f64], omegas: &[f64]) -> Result<Self> {
        let dim = 1usize << omegas.len();
        if t.dim() != dim || p0.len() != dim {
            return Err(Error::DimensionMismatch(t.dim(), dim));
        }
        let sum: f64 = p0.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(sum));
        }
        let mut joint = Array2::zeros((dim, dim));
        for i in 0..dim {
            for f in 0..dim {
                joint[[f, i]] = t.entries()[[f, i]] * p0[i];
            }
        }
        Ok(TrajectoryEnsemble { joint, omegas: omegas.to_vec() })
    }

    pub fn joint(&self) -> &Array2<f64> {
        &self.joint
    }

    pub fn qubit_count(&self) -> usize {
        self.omegas.len()
    }

    /// Energy change of qubit k along the trajectory i -> f.
    pub fn energy_change(&self, i: usize, f: usize, k: usize) -> f64 {
        self.omegas[k] * (((f >> k) & 1) as f64 - ((i >> k) & 1) as f64)
    }

    /// "initial,final,probability,weight" with weight = exp(-sum beta_k dE_k),
    /// so the fluctuation-theorem value is the probability-weighted sum of
    /// the last column.
    pub fn to_csv(&self, betas: &[f64]) -> String {
        let dim = self.joint.nrows();
        let mut out = String::from("initial,final,probability,weight\n");
        for i in 0..dim {
            for f in 0..dim {
                let exponent: f64 =
                    (0..self.omegas.len()).map(|k| -betas[k] * self.energy_change(i, f, k)).sum();
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    i,
                    f,
                    sig12(self.joint[[f, i]]),
                    sig12(exponent.exp())
                ));
            }
        }
        out
    }
}

/// Integral fluctuation theorem value <exp(-sum_k beta_k dE_k)> over the
/// trajectory ensemble. Exactly 1 whenever the transfer matrix is doubly
/// stochastic and p0 is the Gibbs product at those betas; deviations flag a
/// leak out of the measured register.
pub fn fluctuation_theorem(trajectories: &TrajectoryEnsemble, betas: &[f64]) -> f64 {
    assert_eq!(betas.len(), trajectories.qubit_count());
    let dim = trajectories.joint.nrows();
    let mut acc = 0.0;
    for i in 0..dim {
        for f in 0..dim {
            let p = trajectories.joint[[f, i]];
            if p == 0.0 {
                continue;
            }
            let exponent: f64 =
                (0..betas.len()).map(|k| -betas[k] * trajectories.energy_change(i, f, k)).sum();
            acc += p * exponent.exp();
        }
    }
    acc
}
