//! Dense statevector engine; the ground-truth oracle for the other engines.
//!
//! Conventions (all cross-engine comparisons rely on these):
//! * qubit `q` is bit `q` of the amplitude index — qubit 0 is the least
//!   significant bit;
//! * a gate on `qubits = [q0, q1, ...]` indexes its matrix with `q0` as the
//!   most significant bit;
//! * measuring in the X basis applies H, in the Y basis S^dag then H, then
//!   reads out in Z; the post-measurement state is the corresponding
//!   eigenstate in the original frame.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{Basis, Event, GateProgram, StatePrep};
use crate::error::{Error, Result};
use crate::scalar::{creal, Scalar, C};

/// Default qubit budget for dense simulation; larger systems must use the
/// holographic engine.
pub const DEFAULT_MAX_QUBITS: usize = 26;

/// Groups below this size are processed serially.
const PAR_THRESHOLD: usize = 1 << 14;

/// Dense complex amplitude vector over `n` qubits, unit norm.
#[derive(Debug, Clone)]
pub struct StateVector<T: Scalar> {
    n_qubits: usize,
    amps: Vec<C<T>>,
}

impl<T: Scalar> StateVector<T> {
    /// |00...0>
    pub fn zero_state(n_qubits: usize) -> Self {
        let mut amps = vec![C::new(T::zero(), T::zero()); 1 << n_qubits];
        amps[0] = creal(T::one());
        Self { n_qubits, amps }
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<C<T>>) -> Result<Self> {
        if amps.len() != 1 << n_qubits {
            return Err(Error::Shape(format!(
                "expected {} amplitudes, got {}",
                1usize << n_qubits,
                amps.len()
            )));
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> C<T> {
        self.amps[index]
    }

    pub fn norm_sq(&self) -> T {
        par_sum(self.amps.len(), |i| self.amps[i].norm_sqr())
    }

    pub fn normalize(&mut self) {
        let inv = T::one() / self.norm_sq().sqrt();
        self.amps.iter_mut().for_each(|z| *z = *z * creal(inv));
    }

    /// Apply a dense gate; `qubits[0]` is the most significant bit of the
    /// matrix index. Deterministic and identical to serial execution for any
    /// worker count (groups are disjoint).
    pub fn apply_gate(&mut self, qubits: &[usize], matrix: &Array2<C<T>>) {
        apply_gate_raw(&mut self.amps, self.n_qubits, qubits, matrix);
    }

    /// Pauli-X on one qubit.
    pub fn apply_x(&mut self, qubit: usize) {
        let mask = 1usize << qubit;
        let half: Vec<usize> = (0..self.amps.len()).filter(|i| i & mask == 0).collect();
        for i in half {
            self.amps.swap(i, i | mask);
        }
    }

    /// Probability that `qubit` reads 1 in the computational basis.
    pub fn prob_one(&self, qubit: usize) -> T {
        let mask = 1usize << qubit;
        par_sum(self.amps.len(), |i| {
            if i & mask != 0 {
                self.amps[i].norm_sqr()
            } else {
                T::zero()
            }
        })
    }

    /// Project `qubit` onto `outcome` in the computational basis and
    /// renormalize. Returns the outcome probability.
    pub fn project_qubit(&mut self, qubit: usize, outcome: bool) -> T {
        let mask = 1usize << qubit;
        let p1 = self.prob_one(qubit);
        let p = if outcome { p1 } else { T::one() - p1 };
        let keep = if outcome { mask } else { 0 };
        let inv = T::one() / p.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a = if i & mask == keep { *a * creal(inv) } else { C::new(T::zero(), T::zero()) };
        }
        p
    }

    /// Measure `qubit` in `basis`, collapsing the state to the corresponding
    /// eigenstate in the original frame.
    pub fn measure_qubit<R: Rng>(&mut self, qubit: usize, basis: Basis, rng: &mut R) -> bool {
        if let Some(rot) = basis_rotation::<T>(basis) {
            self.apply_gate(&[qubit], &rot);
        }
        let p1 = self.prob_one(qubit).to_f64_lossy();
        let outcome = rng.gen::<f64>() < p1;
        self.project_qubit(qubit, outcome);
        if let Some(rot) = basis_rotation_inverse::<T>(basis) {
            self.apply_gate(&[qubit], &rot);
        }
        outcome
    }
}

/// Shared k-qubit dense gate kernel over a raw amplitude slice;
/// `qubits[0]` is the most significant bit of the matrix index.
pub(crate) fn apply_gate_raw<T: Scalar>(
    amps: &mut [C<T>],
    n_qubits: usize,
    qubits: &[usize],
    matrix: &Array2<C<T>>,
) {
    let k = qubits.len();
    debug_assert!(matrix.dim() == (1 << k, 1 << k));
    debug_assert!(qubits.iter().all(|&q| q < n_qubits));
    debug_assert!(amps.len() == 1 << n_qubits);
    let n_groups = 1usize << (n_qubits - k);

    // offset of each gate-basis pattern in the full index
    let mut offsets = vec![0usize; 1 << k];
    for (pattern, off) in offsets.iter_mut().enumerate() {
        for (t, &q) in qubits.iter().enumerate() {
            if (pattern >> (k - 1 - t)) & 1 == 1 {
                *off |= 1 << q;
            }
        }
    }
    let mut positions: Vec<usize> = qubits.to_vec();
    positions.sort_unstable();

    let flat: Vec<C<T>> = matrix.iter().copied().collect();
    let dim = 1 << k;

    let group_base = |g: usize| -> usize {
        let mut idx = g;
        for &p in &positions {
            let low = idx & ((1 << p) - 1);
            idx = ((idx >> p) << (p + 1)) | low;
        }
        idx
    };

    let body = |amps: &mut [C<T>], g: usize| {
        let base = group_base(g);
        let mut old = [C::new(T::zero(), T::zero()); 16];
        for (p, o) in old.iter_mut().enumerate().take(dim) {
            *o = amps[base | offsets[p]];
        }
        for row in 0..dim {
            let mut acc = C::new(T::zero(), T::zero());
            for (col, o) in old.iter().enumerate().take(dim) {
                acc = acc + flat[row * dim + col] * *o;
            }
            amps[base | offsets[row]] = acc;
        }
    };

    if k > 4 {
        // rare path: gates above 4 qubits use a heap buffer
        for g in 0..n_groups {
            let base = group_base(g);
            let old: Vec<C<T>> = (0..dim).map(|p| amps[base | offsets[p]]).collect();
            for row in 0..dim {
                let mut acc = C::new(T::zero(), T::zero());
                for (col, o) in old.iter().enumerate() {
                    acc = acc + flat[row * dim + col] * *o;
                }
                amps[base | offsets[row]] = acc;
            }
        }
    } else if n_groups < PAR_THRESHOLD {
        for g in 0..n_groups {
            body(amps, g);
        }
    } else {
        // Disjoint groups may be written from different workers; share the
        // buffer through a raw pointer as the group partition guarantees
        // exclusive access.
        struct SendPtr<T>(*mut T);
        unsafe impl<T: Send> Send for SendPtr<T> {}
        unsafe impl<T: Send> Sync for SendPtr<T> {}
        impl<T> SendPtr<T> {
            fn get(&self) -> *mut T {
                self.0
            }
        }
        let ptr = SendPtr(amps.as_mut_ptr());
        let len = amps.len();
        (0..n_groups).into_par_iter().for_each(|g| {
            let amps = unsafe { std::slice::from_raw_parts_mut(ptr.get(), len) };
            body(amps, g);
        });
    }
}

/// Rotation mapping `basis` eigenstates to Z eigenstates: H for X, H S^dag
/// for Y, nothing for Z.
pub fn basis_rotation<T: Scalar>(basis: Basis) -> Option<Array2<C<T>>> {
    let h = T::one() / T::from_f64_lossy(2.0).sqrt();
    match basis {
        Basis::Z => None,
        Basis::X => Some(Array2::from_shape_vec((2, 2), vec![creal(h), creal(h), creal(h), -creal(h)]).unwrap()),
        Basis::Y => {
            // H S^dag = (1/sqrt2) [[1, -i], [1, i]]
            let mi = C::new(T::zero(), -h);
            let pi = C::new(T::zero(), h);
            Some(Array2::from_shape_vec((2, 2), vec![creal(h), mi, creal(h), pi]).unwrap())
        }
    }
}

fn basis_rotation_inverse<T: Scalar>(basis: Basis) -> Option<Array2<C<T>>> {
    basis_rotation::<T>(basis).map(|m| {
        let mut inv = Array2::from_elem((2, 2), C::new(T::zero(), T::zero()));
        for i in 0..2 {
            for j in 0..2 {
                inv[(i, j)] = m[(j, i)].conj();
            }
        }
        inv
    })
}

fn apply_prep<T: Scalar>(state: &mut StateVector<T>, qubits: &[usize], prep: &StatePrep) {
    match prep {
        StatePrep::Zeros => {}
        StatePrep::Bits(bits) => {
            for (&q, &bit) in qubits.iter().zip(bits.iter()) {
                if bit {
                    state.apply_x(q);
                }
            }
        }
        StatePrep::Plus => {
            let h = basis_rotation::<T>(Basis::X).unwrap();
            for &q in qubits {
                state.apply_gate(&[q], &h);
            }
        }
    }
}

/// Execute a measurement-free program; deterministic. Fails on programs with
/// measure/reset events (use [`run_sampled`]) or beyond the qubit budget.
pub fn run<T: Scalar>(program: &GateProgram<T>) -> Result<StateVector<T>> {
    run_with_budget(program, DEFAULT_MAX_QUBITS)
}

pub fn run_with_budget<T: Scalar>(program: &GateProgram<T>, max_qubits: usize) -> Result<StateVector<T>> {
    if program.has_measurements() {
        return Err(Error::Validation(
            "program contains measure/reset events; use run_sampled".into(),
        ));
    }
    let (state, _) = execute(program, max_qubits, None)?;
    Ok(state)
}

/// One recorded mid-circuit measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasurementRecord {
    pub qubit: usize,
    pub basis: Basis,
    pub outcome: bool,
}

/// Execute a program containing measure/reset events, sampling outcomes from
/// the Born rule with a seeded RNG.
pub fn run_sampled<T: Scalar>(
    program: &GateProgram<T>,
    seed: u64,
) -> Result<(StateVector<T>, Vec<MeasurementRecord>)> {
    let rng = ChaCha12Rng::seed_from_u64(seed);
    execute(program, DEFAULT_MAX_QUBITS, Some(rng))
}

fn execute<T: Scalar>(
    program: &GateProgram<T>,
    max_qubits: usize,
    mut rng: Option<ChaCha12Rng>,
) -> Result<(StateVector<T>, Vec<MeasurementRecord>)> {
    if program.n_qubits > max_qubits {
        return Err(Error::Resource(format!(
            "program needs {} qubits, dense budget is {max_qubits}",
            program.n_qubits
        )));
    }
    let mut state = StateVector::zero_state(program.n_qubits);
    apply_prep(&mut state, &program.prep_qubits, &program.prep);
    let mut records = Vec::new();
    for ev in &program.events {
        match ev {
            Event::Unitary { qubits, gate } => state.apply_gate(qubits, &gate.matrix()),
            Event::Flip { qubit } => state.apply_x(*qubit),
            Event::Measure { qubit, basis } => {
                let rng = rng
                    .as_mut()
                    .ok_or_else(|| Error::Validation("measurement without RNG".into()))?;
                let outcome = state.measure_qubit(*qubit, *basis, rng);
                records.push(MeasurementRecord { qubit: *qubit, basis: *basis, outcome });
            }
            Event::Reset { qubit } => {
                let rng = rng
                    .as_mut()
                    .ok_or_else(|| Error::Validation("reset without RNG".into()))?;
                let outcome = state.measure_qubit(*qubit, Basis::Z, rng);
                if outcome {
                    state.apply_x(*qubit);
                }
            }
        }
    }
    let norm_dev = (state.norm_sq() - T::one()).abs().to_f64_lossy();
    if norm_dev > 1e-10 {
        return Err(Error::Consistency(format!("final norm deviates by {norm_dev:e}")));
    }
    Ok((state, records))
}

/// Single-qubit Pauli label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn basis(self) -> Basis {
        match self {
            Pauli::X => Basis::X,
            Pauli::Y => Basis::Y,
            Pauli::Z => Basis::Z,
        }
    }
}

/// Sparse Pauli string: a map qubit -> {X, Y, Z}, identity elsewhere.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PauliString {
    factors: BTreeMap<usize, Pauli>,
}

impl PauliString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, Pauli)>) -> Self {
        Self { factors: pairs.into_iter().collect() }
    }

    /// The same Pauli on every listed qubit.
    pub fn uniform(p: Pauli, qubits: impl IntoIterator<Item = usize>) -> Self {
        Self::from_pairs(qubits.into_iter().map(|q| (q, p)))
    }

    pub fn factors(&self) -> &BTreeMap<usize, Pauli> {
        &self.factors
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.factors.keys().copied()
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.factors.keys().next_back().copied()
    }
}

/// `<psi| P |psi>`; real for Hermitian P (the imaginary part is dropped
/// after a consistency check).
pub fn expect<T: Scalar>(state: &StateVector<T>, op: &PauliString) -> Result<T> {
    if let Some(q) = op.max_qubit() {
        if q >= state.n_qubits() {
            return Err(Error::Validation(format!("operator touches qubit {q} out of range")));
        }
    }
    let mut mxy = 0usize; // X or Y: flips the bit
    let mut mzy = 0usize; // Z or Y: contributes a sign
    let mut n_y = 0usize;
    for (&q, &p) in op.factors() {
        match p {
            Pauli::X => mxy |= 1 << q,
            Pauli::Y => {
                mxy |= 1 << q;
                mzy |= 1 << q;
                n_y += 1;
            }
            Pauli::Z => mzy |= 1 << q,
        }
    }
    // i^{n_y}
    let phase = match n_y % 4 {
        0 => C::new(T::one(), T::zero()),
        1 => C::new(T::zero(), T::one()),
        2 => C::new(-T::one(), T::zero()),
        _ => C::new(T::zero(), -T::one()),
    };
    let amps = state.amplitudes();
    let val = par_sum_complex(amps.len(), |b| {
        let sign = if (b & mzy).count_ones() % 2 == 0 { T::one() } else { -T::one() };
        amps[b ^ mxy].conj() * amps[b] * creal(sign)
    }) * phase;
    if val.im.abs().to_f64_lossy() > 1e-9 {
        return Err(Error::Consistency(format!(
            "expectation has imaginary part {:e}",
            val.im.to_f64_lossy()
        )));
    }
    Ok(val.re)
}

/// `<a|b>`
pub fn overlap<T: Scalar>(a: &StateVector<T>, b: &StateVector<T>) -> Result<C<T>> {
    if a.n_qubits() != b.n_qubits() {
        return Err(Error::Validation(format!(
            "qubit count mismatch: {} vs {}",
            a.n_qubits(),
            b.n_qubits()
        )));
    }
    Ok(par_sum_complex(a.amps.len(), |i| a.amps[i].conj() * b.amps[i]))
}

/// Exact Born probabilities of all bitstrings after rotating every qubit to
/// its measurement basis. Index b carries qubit q at bit q.
pub fn born_distribution<T: Scalar>(state: &StateVector<T>, bases: &[Basis]) -> Result<Vec<T>> {
    if bases.len() != state.n_qubits() {
        return Err(Error::Validation("one basis per qubit required".into()));
    }
    let mut rotated = state.clone();
    for (q, &b) in bases.iter().enumerate() {
        if let Some(rot) = basis_rotation::<T>(b) {
            rotated.apply_gate(&[q], &rot);
        }
    }
    Ok(rotated.amps.iter().map(|z| z.norm_sqr()).collect())
}

/// I.i.d. samples from the exact Born distribution in the rotated bases;
/// deterministic for a given seed. Bit `q` of each sample is qubit q.
pub fn born_sample<T: Scalar>(
    state: &StateVector<T>,
    bases: &[Basis],
    shots: usize,
    seed: u64,
) -> Result<Vec<Vec<bool>>> {
    if shots < 1 {
        return Err(Error::Validation("shots must be >= 1".into()));
    }
    let probs = born_distribution(state, bases)?;
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0_f64;
    for p in &probs {
        acc += p.to_f64_lossy();
        cdf.push(acc);
    }
    let total = acc;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n = state.n_qubits();
    Ok((0..shots)
        .map(|_| {
            let u = rng.gen::<f64>() * total;
            let idx = cdf.partition_point(|&c| c < u).min(probs.len() - 1);
            (0..n).map(|q| (idx >> q) & 1 == 1).collect()
        })
        .collect())
}

/// Deterministic parallel sum over `0..len` with order-fixed chunk reduction
/// (results are independent of the worker count).
fn par_sum<T: Scalar>(len: usize, f: impl Fn(usize) -> T + Sync) -> T {
    const CHUNK: usize = 1 << 16;
    if len <= CHUNK {
        return (0..len).map(f).fold(T::zero(), |a, b| a + b);
    }
    let n_chunks = len.div_ceil(CHUNK);
    let partials: Vec<T> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            (lo..hi).map(&f).fold(T::zero(), |a, b| a + b)
        })
        .collect();
    partials.into_iter().fold(T::zero(), |a, b| a + b)
}

fn par_sum_complex<T: Scalar>(len: usize, f: impl Fn(usize) -> C<T> + Sync) -> C<T> {
    const CHUNK: usize = 1 << 16;
    let zero = C::new(T::zero(), T::zero());
    if len <= CHUNK {
        return (0..len).map(f).fold(zero, |a, b| a + b);
    }
    let n_chunks = len.div_ceil(CHUNK);
    let partials: Vec<C<T>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            (lo..hi).map(&f).fold(zero, |a, b| a + b)
        })
        .collect();
    partials.into_iter().fold(zero, |a, b| a + b)
}
