//! Dense gate/circuit algebra for small registers: unitaries, population
//! transfer matrices, marginals, and the circuit families under study.
//!
//! Bit convention, fixed once: qubit 0 is the least significant bit of a
//! computational-basis index, and |0> is the ground state. Everything else
//! in the crate inherits this through [`QubitOrdering`].

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Dense matrices cap out at 2^12; the largest register in use is 11 qubits.
pub const MAX_QUBITS: usize = 12;

/// Stochasticity checks on transfer/detector matrices use this tolerance.
pub const STOCHASTIC_TOL: f64 = 1e-9;

fn bit(index: usize, qubit: usize) -> usize {
    (index >> qubit) & 1
}

// ---------------------------------------------------------------------------
// gates and circuits
// ---------------------------------------------------------------------------

/// One gate of the supported set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Ry { qubit: usize, angle: f64 },
    Cnot { control: usize, target: usize },
    Swap { a: usize, b: usize },
}

impl Gate {
    /// Qubits the gate acts on.
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Ry { qubit, .. } => vec![qubit],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Swap { a, b } => vec![a, b],
        }
    }

    /// True for gates that permute computational-basis states.
    pub fn is_classical(&self) -> bool {
        !matches!(self, Gate::Ry { .. })
    }
}

/// An ordered gate list on a fixed-size register.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    qubit_count: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(qubit_count: usize) -> Result<Self> {
        if qubit_count == 0 || qubit_count > MAX_QUBITS {
            return Err(Error::TooManyQubits(qubit_count));
        }
        Ok(Circuit { qubit_count, gates: Vec::new() })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn dim(&self) -> usize {
        1 << self.qubit_count
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        for q in gate.qubits() {
            if q >= self.qubit_count {
                return Err(Error::QubitIndex { index: q, qubit_count: self.qubit_count });
            }
        }
        match gate {
            Gate::Cnot { control, target } if control == target => {
                return Err(Error::DegenerateGate(control));
            }
            Gate::Swap { a, b } if a == b => return Err(Error::DegenerateGate(a)),
            _ => {}
        }
        self.gates.push(gate);
        Ok(())
    }

    /// Insert a gate before position `at` (== gates().len() appends).
    pub fn insert(&mut self, at: usize, gate: Gate) -> Result<()> {
        self.push(gate)?; // validate indices
        let g = self.gates.pop().expect("just pushed");
        self.gates.insert(at.min(self.gates.len()), g);
        Ok(())
    }

    /// True when every gate is a basis-state permutation (no Ry).
    pub fn is_classical(&self) -> bool {
        self.gates.iter().all(Gate::is_classical)
    }

    /// The circuit with every gate touching `env` removed: the part of the
    /// dynamics the system would undergo if the environment were absent.
    pub fn system_part(&self, env: usize) -> Circuit {
        Circuit {
            qubit_count: self.qubit_count,
            gates: self
                .gates
                .iter()
                .copied()
                .filter(|g| !g.qubits().contains(&env))
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// qubit ordering / labels
// ---------------------------------------------------------------------------

/// Names for tensor slots. Slot k is bit k of the basis index; outputs are
/// labeled by name because raw indices depend on this convention.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitOrdering {
    labels: Vec<String>,
}

impl QubitOrdering {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() || labels.len() > MAX_QUBITS {
            return Err(Error::TooManyQubits(labels.len()));
        }
        Ok(QubitOrdering { labels })
    }

    /// The three-qubit register of the base experiment: cold, hot, environment.
    pub fn che() -> Self {
        QubitOrdering { labels: vec!["c".into(), "h".into(), "e".into()] }
    }

    /// Register for the scaled-up circuits: c1..cn, h1..hn, e.
    /// For n = 1 this is the plain c,h,e register.
    pub fn scaleup(n_sub: usize) -> Result<Self> {
        if n_sub == 1 {
            return Ok(Self::che());
        }
        if !(1..=5).contains(&n_sub) {
            return Err(Error::ScaleOutOfRange(n_sub));
        }
        let mut labels = Vec::with_capacity(2 * n_sub + 1);
        for i in 1..=n_sub {
            labels.push(format!("c{i}"));
        }
        for i in 1..=n_sub {
            labels.push(format!("h{i}"));
        }
        labels.push("e".into());
        Ok(QubitOrdering { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// All labels except the environment qubit "e".
    pub fn system_labels(&self) -> Vec<&str> {
        self.labels.iter().map(String::as_str).filter(|l| *l != "e").collect()
    }

    /// Bitstring for a basis index; character k is qubit k ('0' = ground).
    pub fn bitstring(&self, index: usize) -> String {
        (0..self.labels.len())
            .map(|k| if bit(index, k) == 1 { '1' } else { '0' })
            .collect()
    }

    /// Bitstring labels for every basis index, in index order.
    pub fn all_bitstrings(&self) -> Vec<String> {
        (0..1usize << self.labels.len()).map(|i| self.bitstring(i)).collect()
    }
}

// ---------------------------------------------------------------------------
// unitaries
// ---------------------------------------------------------------------------

/// Dense unitary on a power-of-two dimension.
#[derive(Debug, Clone)]
pub struct UnitaryMatrix {
    entries: Array2<Complex64>,
}

impl UnitaryMatrix {
    pub fn identity(qubit_count: usize) -> Self {
        UnitaryMatrix { entries: Array2::eye(1 << qubit_count) }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    /// Frobenius norm of U U† − I. Zero (to fp error) iff unitary.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                // (U U†)_{ij} = sum_k U_{ik} conj(U_{jk})
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    s += self.entries[[i, k]] * self.entries[[j, k]].conj();
                }
                let target = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                acc += (s - target).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// True when every row and column holds exactly one unit-modulus entry
    /// (all others below `tol`) — a relabeling of basis states.
    pub fn is_permutation_within(&self, tol: f64) -> bool {
        let d = self.dim();
        let mut col_hits = vec![0usize; d];
        for i in 0..d {
            let mut row_hits = 0;
            for j in 0..d {
                let m = self.entries[[i, j]].norm();
                if m > tol {
                    if (m - 1.0).abs() > tol {
                        return false;
                    }
                    row_hits += 1;
                    col_hits[j] += 1;
                }
            }
            if row_hits != 1 {
                return false;
            }
        }
        col_hits.iter().all(|&c| c == 1)
    }
}

/// Multiply the embedded gate into the accumulated unitary from the left
/// (rows transform).
fn apply_gate_rows(u: &mut Array2<Complex64>, qubit_count: usize, gate: &Gate) {
    let dim = 1usize << qubit_count;
    match *gate {
        Gate::Ry { qubit, angle } => {
            let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
            let mask = 1usize << qubit;
            for i0 in 0..dim {
                if i0 & mask != 0 {
                    continue;
                }
                let i1 = i0 | mask;
                for j in 0..dim {
                    let a = u[[i0, j]];
                    let b = u[[i1, j]];
                    u[[i0, j]] = a * c - b * s;
                    u[[i1, j]] = a * s + b * c;
                }
            }
        }
        Gate::Cnot { control, target } => {
            let cmask = 1usize << control;
            let tmask = 1usize << target;
            for i in 0..dim {
                // swap each row pair once
                if i & cmask != 0 && i & tmask == 0 {
                    swap_rows(u, i, i | tmask);
                }
            }
        }
        Gate::Swap { a, b } => {
            let (amask, bmask) = (1usize << a, 1usize << b);
            for i in 0..dim {
                if i & amask != 0 && i & bmask == 0 {
                    swap_rows(u, i, (i ^ amask) | bmask);
                }
            }
        }
    }
}

fn swap_rows(u: &mut Array2<Complex64>, i: usize, j: usize) {
    for col in 0..u.ncols() {
        let tmp = u[[i, col]];
        u[[i, col]] = u[[j, col]];
        u[[j, col]] = tmp;
    }
}

/// Product of the circuit's gate unitaries in listed order, each embedded by
/// tensor product with identities on untouched qubits.
pub fn assemble_unitary(circuit: &Circuit) -> UnitaryMatrix {
    let mut u = Array2::eye(circuit.dim());
    for gate in circuit.gates() {
        apply_gate_rows(&mut u, circuit.qubit_count(), gate);
    }
    UnitaryMatrix { entries: u }
}

/// A Haar-like random unitary that commutes with the total excitation number:
/// an independent random unitary block on every fixed-excitation sector.
/// With equal per-qubit gaps this conserves total energy exactly.
pub fn random_energy_conserving_unitary<R: Rng>(qubit_count: usize, rng: &mut R) -> UnitaryMatrix {
    let dim = 1usize << qubit_count;
    let mut sectors: Vec<Vec<usize>> = vec![Vec::new(); qubit_count + 1];
    for i in 0..dim {
        sectors[i.count_ones() as usize].push(i);
    }
    let mut u = Array2::from_elem((dim, dim), Complex64::new(0.0, 0.0));
    for sector in &sectors {
        let block = haar_unitary(sector.len(), rng);
        for (a, &ia) in sector.iter().enumerate() {
            for (b, &ib) in sector.iter().enumerate() {
                u[[ia, ib]] = block[[a, b]];
            }
        }
    }
    UnitaryMatrix { entries: u }
}

/// Complex Ginibre matrix orthonormalized by modified Gram-Schmidt; keeping
/// the R diagonal positive makes the result Haar-distributed.
fn haar_unitary<R: Rng>(n: usize, rng: &mut R) -> Array2<Complex64> {
    let mut g = Array2::from_shape_fn((n, n), |_| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    });
    for j in 0..n {
        for k in 0..j {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in 0..n {
                dot += g[[i, k]].conj() * g[[i, j]];
            }
            for i in 0..n {
                let prev = g[[i, k]];
                g[[i, j]] -= dot * prev;
            }
        }
        let norm = (0..n).map(|i| g[[i, j]].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            g[[i, j]] /= norm;
        }
    }
    g
}

// ---------------------------------------------------------------------------
// transfer matrices
// ---------------------------------------------------------------------------

/// Column-stochastic population map: p_f = T p_0. Doubly stochastic whenever
/// it comes from a unitary.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    entries: Array2<f64>,
}

impl TransferMatrix {
    /// Wrap a column-stochastic matrix, validating the column sums.
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        for j in 0..entries.ncols() {
            let sum: f64 = (0..entries.nrows()).map(|i| entries[[i, j]]).sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NotStochastic { column: j, sum });
            }
        }
        Ok(TransferMatrix { entries })
    }

    pub fn identity(dim: usize) -> Self {
        TransferMatrix { entries: Array2::eye(dim) }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        assert_eq!(p.len(), self.dim(), "population vector length");
        let mut out = vec![0.0; self.dim()];
        for j in 0..self.dim() {
            let pj = p[j];
            if pj == 0.0 {
                continue;
            }
            for i in 0..self.dim() {
                out[i] += self.entries[[i, j]] * pj;
            }
        }
        out
    }

    pub fn max_column_sum_error(&self) -> f64 {
        (0..self.dim())
            .map(|j| ((0..self.dim()).map(|i| self.entries[[i, j]]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.dim())
            .map(|i| ((0..self.dim()).map(|j| self.entries[[i, j]]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_doubly_stochastic(&self, tol: f64) -> bool {
        self.max_column_sum_error() <= tol && self.max_row_sum_error() <= tol
    }

    /// Frobenius distance to another transfer matrix.
    pub fn frobenius_distance(&self, other: &TransferMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim());
        let mut acc = 0.0;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let d = self.entries[[i, j]] - other.entries[[i, j]];
                acc += d * d;
            }
        }
        acc.sqrt()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for v in self.entries.iter() {
            acc += v * v;
        }
        acc.sqrt()
    }
}

/// T_ij = |U_ij|^2; doubly stochastic by unitarity.
pub fn transfer_matrix(u: &UnitaryMatrix) -> TransferMatrix {
    TransferMatrix { entries: u.entries().mapv(|z| z.norm_sqr()) }
}

/// Exact final populations of a diagonal initial ensemble.
///
/// Classical circuits (CNOT/SWAP only) are composed gate by gate as basis
/// permutations; anything with an Ry goes through the full |U|^2 map, which
/// is exact because the initial density matrix is diagonal.
pub fn propagate_populations(circuit: &Circuit, p0: &[f64]) -> Vec<f64> {
    assert_eq!(p0.len(), circuit.dim(), "population vector length");
    if circuit.is_classical() {
        let mut p = p0.to_vec();
        let mut q = vec![0.0; p.len()];
        for gate in circuit.gates() {
            q.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..p.len() {
                q[permute_index(i, gate)] += p[i];
            }
            std::mem::swap(&mut p, &mut q);
        }
        p
    } else {
        transfer_matrix(&assemble_unitary(circuit)).apply(p0)
    }
}

fn permute_index(i: usize, gate: &Gate) -> usize {
    match *gate {
        Gate::Cnot { control, target } => {
            if bit(i, control) == 1 {
                i ^ (1 << target)
            } else {
                i
            }
        }
        Gate::Swap { a, b } => {
            if bit(i, a) != bit(i, b) {
                i ^ (1 << a) ^ (1 << b)
            } else {
                i
            }
        }
        Gate::Ry { .. } => unreachable!("classical path only"),
    }
}

// ---------------------------------------------------------------------------
// marginals and reduced channels
// ---------------------------------------------------------------------------

/// Marginal of `p` over the qubits in `keep` (by index); bit k of the result
/// is keep[k].
pub fn marginal(p: &[f64], qubit_count: usize, keep: &[usize]) -> Vec<f64> {
    assert_eq!(p.len(), 1 << qubit_count);
    let mut out = vec![0.0; 1 << keep.len()];
    for (i, &pi) in p.iter().enumerate() {
        let mut j = 0usize;
        for (pos, &k) in keep.iter().enumerate() {
            j |= bit(i, k) << pos;
        }
        out[j] += pi;
    }
    out
}

/// Marginal over named qubits; checks normalization per the contract.
pub fn reduced_populations(
    p_full: &[f64],
    keep: &[&str],
    ordering: &QubitOrdering,
) -> Result<Vec<f64>> {
    if keep.is_empty() {
        return Err(Error::EmptySubset);
    }
    let sum: f64 = p_full.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(sum));
    }
    let idx: Vec<usize> = keep.iter().map(|l| ordering.index_of(l)).collect::<Result<_>>()?;
    Ok(marginal(p_full, ordering.len(), &idx))
}

/// Reduced population channel on the kept qubits, obtained by feeding the
/// traced-out qubits with fixed initial populations `env_populations`
/// (indexed by the dropped qubits in ascending qubit order) and summing over
/// their final state. Column-stochastic; doubly stochastic only when the
/// kept register is dynamically isolated.
pub fn reduced_transfer_matrix(
    t: &TransferMatrix,
    qubit_count: usize,
    keep: &[usize],
    env_populations: &[f64],
) -> Result<TransferMatrix> {
    if keep.is_empty() {
        return Err(Error::EmptySubset);
    }
    let env: Vec<usize> = (0..qubit_count).filter(|q| !keep.contains(q)).collect();
    if env_populations.len() != 1 << env.len() {
        return Err(Error::DimensionMismatch(env_populations.len(), 1 << env.len()));
    }
    let kd = 1usize << keep.len();
    let compose = |k_bits: usize, e_bits: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &q) in keep.iter().enumerate() {
            idx |= bit(k_bits, pos) << q;
        }
        for (pos, &q) in env.iter().enumerate() {
            idx |= bit(e_bits, pos) << q;
        }
        idx
    };
    let mut red = Array2::zeros((kd, kd));
    for col_k in 0..kd {
        for (e_in, &pe) in env_populations.iter().enumerate() {
            if pe == 0.0 {
                continue;
            }
            let col = compose(col_k, e_in);
            for row_k in 0..kd {
                for e_out in 0..1usize << env.len() {
                    red[[row_k, col_k]] += pe * t.entries()[[compose(row_k, e_out), col]];
                }
            }
        }
    }
    TransferMatrix::new(red)
}

// ---------------------------------------------------------------------------
// circuit families
// ---------------------------------------------------------------------------

/// Scale-up flavor: CNOT cascade or the energy-conserving SWAP version.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleVariant {
    Chain,
    Swap,
}

/// The three-CNOT heat-leak circuit: CNOT(h->e), CNOT(e->h), CNOT(h->c).
/// The first two CNOTs push the environment's population onto the hot qubit;
/// the third is the intended system interaction.
pub fn fig2b() -> Circuit {
    scaleup_circuit(1, ScaleVariant::Chain).expect("n=1 is in range")
}

/// The same system interaction with the leak removed: CNOT(h->c) alone.
pub fn fig2b_no_leak() -> Circuit {
    fig2b().system_part(2)
}

/// Heat-leak circuit with the system interaction replaced by an
/// energy-conserving SWAP(c,h).
pub fn swap_variant() -> Circuit {
    scaleup_circuit(1, ScaleVariant::Swap).expect("n=1 is in range")
}

/// Scaled register with n cold and n hot qubits and one environment qubit.
///
/// Gates: the leak pair CNOT(h1->e), CNOT(e->h1), then a cascade that
/// threads the whole system, pair by pair:
/// h1->c1, c1->h2, h2->c2, ..., hn->cn (CNOTs for `Chain`, SWAPs for `Swap`).
/// n = 1 reproduces the base circuits exactly.
pub fn scaleup_circuit(n_sub: usize, variant: ScaleVariant) -> Result<Circuit> {
    if !(1..=5).contains(&n_sub) {
        return Err(Error::ScaleOutOfRange(n_sub));
    }
    let qubits = 2 * n_sub + 1;
    let (c0, h0, e) = (0, n_sub, 2 * n_sub);
    let mut circuit = Circuit::new(qubits)?;
    circuit.push(Gate::Cnot { control: h0, target: e })?;
    circuit.push(Gate::Cnot { control: e, target: h0 })?;
    let couple = |x: usize, y: usize, circuit: &mut Circuit| match variant {
        ScaleVariant::Chain => circuit.push(Gate::Cnot { control: x, target: y }),
        ScaleVariant::Swap => circuit.push(Gate::Swap { a: x, b: y }),
    };
    couple(h0, c0, &mut circuit)?;
    for i in 1..n_sub {
        couple(c0 + i - 1, h0 + i, &mut circuit)?;
        couple(h0 + i, c0 + i, &mut circuit)?;
    }
    Ok(circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c64(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn empty_circuit_is_identity() {
        let u = assemble_unitary(&Circuit::new(2).unwrap());
        assert_eq!(u.dim(), 4);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(u.entries()[[i, j]], c64((i == j) as u8 as f64));
            }
        }
    }

    #[test]
    fn single_cnot_swaps_the_right_basis_states() {
        // control = qubit 0, target = qubit 1: |01> (index 1) <-> |11> (index 3)
        let mut c = Circuit::new(2).unwrap();
        c.push(Gate::Cnot { control: 0, target: 1 }).unwrap();
        let u = assemble_unitary(&c);
        let expect = [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(u.entries()[[i, j]], c64(expect[i][j] as f64), "({i},{j})");
            }
        }
    }

    #[test]
    fn ry_half_pi_transfer_is_uniform() {
        let mut c = Circuit::new(1).unwrap();
        c.push(Gate::Ry { qubit: 0, angle: std::f64::consts::FRAC_PI_2 }).unwrap();
        let t = transfer_matrix(&assemble_unitary(&c));
        for v in t.entries().iter() {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn fig2b_unitary_is_a_nonidentity_permutation() {
        let u = assemble_unitary(&fig2b());
        assert_eq!(u.dim(), 8);
        assert!(u.unitarity_defect() < 1e-10);
        assert!(u.is_permutation_within(1e-12));
        assert!((0..8).any(|i| u.entries()[[i, i]].norm() < 0.5));
        // hand-multiplied action: c' = c^e, h' = e, e' = h^e
        for i in 0..8usize {
            let (c, h, e) = (i & 1, (i >> 1) & 1, (i >> 2) & 1);
            let j = (c ^ e) | (e << 1) | ((h ^ e) << 2);
            assert_eq!(u.entries()[[j, i]], c64(1.0), "column {i}");
        }
    }

    #[test]
    fn swap_variant_final_bit_map() {
        // (c,h,e) -> (e, c, h^e)
        let u = assemble_unitary(&swap_variant());
        for i in 0..8usize {
            let (c, h, e) = (i & 1, (i >> 1) & 1, (i >> 2) & 1);
            let j = e | (c << 1) | ((h ^ e) << 2);
            assert_eq!(u.entries()[[j, i]], c64(1.0), "column {i}");
        }
    }

    #[test]
    fn classical_propagation_matches_full_transfer() {
        let circuit = scaleup_circuit(2, ScaleVariant::Chain).unwrap();
        let p0: Vec<f64> = (0..32).map(|i| (i + 1) as f64).collect();
        let norm: f64 = p0.iter().sum();
        let p0: Vec<f64> = p0.iter().map(|v| v / norm).collect();
        let fast = propagate_populations(&circuit, &p0);
        let slow = transfer_matrix(&assemble_unitary(&circuit)).apply(&p0);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn system_part_drops_exactly_the_leak_pair() {
        assert_eq!(fig2b_no_leak().gates(), &[Gate::Cnot { control: 1, target: 0 }]);
        let sw = swap_variant().system_part(2);
        assert_eq!(sw.gates(), &[Gate::Swap { a: 1, b: 0 }]);
    }

    #[test]
    fn scaleup_sizes_and_base_case() {
        assert_eq!(scaleup_circuit(1, ScaleVariant::Chain).unwrap(), fig2b());
        for n in 1..=5 {
            let c = scaleup_circuit(n, ScaleVariant::Chain).unwrap();
            assert_eq!(c.qubit_count(), 2 * n + 1);
            assert_eq!(c.gates().len(), 2 * n + 1);
        }
        assert!(scaleup_circuit(0, ScaleVariant::Chain).is_err());
        assert!(scaleup_circuit(6, ScaleVariant::Swap).is_err());
    }

    #[test]
    fn eleven_qubit_scaleup_unitary_is_a_permutation() {
        // permutation structure implies unitarity without the O(dim^3) product
        let u = assemble_unitary(&scaleup_circuit(5, ScaleVariant::Chain).unwrap());
        assert_eq!(u.dim(), 2048);
        assert!(u.is_permutation_within(1e-12));
    }

    #[test]
    fn marginals_of_products_factorize() {
        let pc = [0.8, 0.2];
        let ph = [0.6, 0.4];
        let pe = [0.9, 0.1];
        let mut p = vec![0.0; 8];
        for i in 0..8usize {
            p[i] = pc[i & 1] * ph[(i >> 1) & 1] * pe[(i >> 2) & 1];
        }
        let ord = QubitOrdering::che();
        let m = reduced_populations(&p, &["c", "h"], &ord).unwrap();
        for i in 0..4usize {
            assert!((m[i] - pc[i & 1] * ph[(i >> 1) & 1]).abs() < 1e-12);
        }
        let uniform = vec![0.125; 8];
        let mu = reduced_populations(&uniform, &["c", "h"], &ord).unwrap();
        assert!(mu.iter().all(|v| (v - 0.25).abs() < 1e-12));
        assert!(reduced_populations(&p, &[], &ord).is_err());
    }

    #[test]
    fn marginal_commutes_with_mixing() {
        let p: Vec<f64> = vec![0.3, 0.1, 0.2, 0.05, 0.05, 0.1, 0.15, 0.05];
        let q: Vec<f64> = vec![0.125; 8];
        let lam = 0.3;
        let mix: Vec<f64> = p.iter().zip(&q).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();
        let mm = marginal(&mix, 3, &[0, 2]);
        let mp = marginal(&p, 3, &[0, 2]);
        let mq = marginal(&q, 3, &[0, 2]);
        for i in 0..4 {
            assert!((mm[i] - (lam * mp[i] + (1.0 - lam) * mq[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn reduced_channel_of_fig2b_has_unbalanced_rows() {
        let t = transfer_matrix(&assemble_unitary(&fig2b()));
        let pe = [0.853553390593, 0.146446609407];
        let red = reduced_transfer_matrix(&t, 3, &[0, 1], &pe).unwrap();
        assert!(red.max_column_sum_error() < 1e-12);
        // row (a', b') sums to 2 p_e(b')
        assert!(red.max_row_sum_error() > 0.5);
        let row0: f64 = (0..4).map(|j| red.entries()[[0, j]]).sum();
        assert!((row0 - 2.0 * pe[0]).abs() < 1e-12);
    }

    #[test]
    fn energy_conserving_unitary_is_block_diagonal_and_unitary() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let u = random_energy_conserving_unitary(3, &mut rng);
        assert!(u.unitarity_defect() < 1e-10);
        for i in 0..8usize {
            for j in 0..8usize {
                if i.count_ones() != j.count_ones() {
                    assert_eq!(u.entries()[[i, j]], Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn gate_validation() {
        let mut c = Circuit::new(2).unwrap();
        assert!(c.push(Gate::Cnot { control: 0, target: 2 }).is_err());
        assert!(c.push(Gate::Cnot { control: 1, target: 1 }).is_err());
        assert!(c.push(Gate::Swap { a: 0, b: 0 }).is_err());
        assert!(c.push(Gate::Cnot { control: 1, target: 0 }).is_ok());
    }

    #[test]
    fn bitstring_labels_put_qubit_zero_first() {
        let ord = QubitOrdering::che();
        assert_eq!(ord.bitstring(0), "000");
        assert_eq!(ord.bitstring(1), "100"); // index 1 = c excited
        assert_eq!(ord.bitstring(4), "001"); // index 4 = e excited
        assert_eq!(ord.system_labels(), vec!["c", "h"]);
        let ord2 = QubitOrdering::scaleup(2).unwrap();
        assert_eq!(ord2.labels(), &["c1", "c2", "h1", "h2", "e"]);
    }

    proptest! {
        #[test]
        fn random_circuit_transfer_is_doubly_stochastic(
            seed in 0u64..1000,
            gate_count in 1usize..8,
            qubits in 1usize..4,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut c = Circuit::new(qubits).unwrap();
            for _ in 0..gate_count {
                let g = match rng.random_range(0..3) {
                    0 => Gate::Ry { qubit: rng.random_range(0..qubits), angle: rng.random_range(-3.0..3.0) },
                    1 if qubits >= 2 => {
                        let a = rng.random_range(0..qubits);
                        let b = (a + 1 + rng.random_range(0..qubits - 1)) % qubits;
                        Gate::Cnot { control: a, target: b }
                    }
                    _ if qubits >= 2 => {
                        let a = rng.random_range(0..qubits);
                        let b = (a + 1 + rng.random_range(0..qubits - 1)) % qubits;
                        Gate::Swap { a, b }
                    }
                    _ => Gate::Ry { qubit: 0, angle: rng.random_range(-3.0..3.0) },
                };
                c.push(g).unwrap();
            }
            let u = assemble_unitary(&c);
            prop_assert!(u.unitarity_defect() < 1e-10);
            let t = transfer_matrix(&u);
            prop_assert!(t.is_doubly_stochastic(1e-10));
        }

        #[test]
        fn classical_circuits_give_permutation_transfers(seed in 0u64..500) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let qubits = 3;
            let mut c = Circuit::new(qubits).unwrap();
            for _ in 0..6 {
                let a = rng.random_range(0..qubits);
                let b = (a + 1 + rng.random_range(0..qubits - 1)) % qubits;
                let g = if rng.random_range(0..2) == 0 {
                    Gate::Cnot { control: a, target: b }
                } else {
                    Gate::Swap { a, b }
                };
                c.push(g).unwrap();
            }
            let u = assemble_unitary(&c);
            prop_assert!(u.is_permutation_within(1e-12));
        }
    }
}
