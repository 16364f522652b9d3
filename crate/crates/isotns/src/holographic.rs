//! Holographic sequential measure-and-reset simulation.
//!
//! The sequential circuit is executed on a register holding only the live
//! boundary of the partially prepared state: after each anti-diagonal layer,
//! every qubit whose last gate has run is measured in its assigned basis
//! (sampling the exact conditional Born distribution given all earlier
//! outcomes), recorded, and released for reuse. Exact-dense mode keeps the
//! live register as a dense vector and is distributionally identical to Born
//! sampling of the full state; MPS mode stores it as a tensor train with
//! bond dimension capped at chi, tracking the discarded truncation weight.
//!
//! A "row" of a sample record is the group of qubits completed by one layer,
//! measured left-to-right along the rotated-frame frontier.

use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::circuit::{Basis, StatePrep};
use crate::error::{Error, Result};
use crate::lattice::{EdgeId, LatticeSpec, Vertex, VertexEdges};
use crate::scalar::{creal, Scalar, C};
use crate::statevector::{apply_gate_raw, basis_rotation, Pauli, PauliString};
use crate::tensor::w_set_path;
use crate::worldline::stream_seed;

/// Register representation for the boundary state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Dense amplitudes over the live qubits (exact).
    ExactDense,
    /// Boundary matrix-product state with bond dimension at most `chi`.
    Mps { chi: usize },
}

/// One sampled shot: outcomes grouped by layer, in frontier order.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotRecord {
    pub shot: u64,
    pub seed: u64,
    /// Measured bits per layer; `rows[s]` matches the layer's completed
    /// edge list.
    pub rows: Vec<Vec<bool>>,
    /// Cumulative truncation weight discarded by this shot (0 in exact mode).
    pub discarded_weight: f64,
    /// Number of truncation steps exceeding the per-step warning cap.
    pub truncation_warnings: usize,
    /// Peak number of simultaneously live register qubits.
    pub peak_live: usize,
}

/// A batch of shots with the shared experiment description.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub lattice: LatticeSpec,
    pub g: f64,
    pub mode_chi: Option<usize>,
    pub bases: Vec<Basis>,
    /// Edge ids measured in each row, shared by every shot.
    pub row_edges: Vec<Vec<EdgeId>>,
    pub seed: u64,
    pub shots: Vec<ShotRecord>,
}

/// Default per-step discarded-weight cap before a warning is recorded.
pub const TRUNCATION_WARN_CAP: f64 = 1e-8;

/// Live-register qubit count ceiling for exact-dense mode.
pub const DENSE_REGISTER_BUDGET: usize = 26;

/// Peak live register size for a lattice (boundary plus the outputs of the
/// widest layer before its measurements).
pub fn peak_live_qubits(lattice: &LatticeSpec) -> usize {
    let mut live = lattice.boundary_edges().len();
    let mut peak = live;
    for layer in lattice.schedule() {
        live += 2 * layer.gates.len();
        peak = peak.max(live);
        live -= layer.completed.len();
    }
    peak
}

/// Probabilities below this are treated as exactly zero: the path is
/// impossible and the walk stops with total probability 0.
const PROB_FLOOR: f64 = 1e-280;

trait Register<T: Scalar> {
    /// Add the vertex's output qubits in |0> and apply its 16x16 gate.
    fn apply_vertex(&mut self, edges: VertexEdges, gate: &Array2<C<T>>) -> Result<()>;
    fn flip(&mut self, edge: EdgeId) -> Result<()>;
    /// Measure and remove an edge qubit. `decide` maps the conditional
    /// probability of outcome 1 to the outcome; returns (outcome, its
    /// conditional probability). A forced outcome of probability zero
    /// returns `(outcome, 0.0)` with the register left unusable.
    fn measure(
        &mut self,
        edge: EdgeId,
        basis: Basis,
        decide: &mut dyn FnMut(f64) -> bool,
    ) -> Result<(bool, f64)>;
    fn live_count(&self) -> usize;
    fn discarded_weight(&self) -> f64;
    fn truncation_warnings(&self) -> usize;
}

// ---------------------------------------------------------------------------
// exact-dense register
// ---------------------------------------------------------------------------

struct DenseRegister<T: Scalar> {
    /// `sites[b]` is the edge stored at bit b.
    sites: Vec<EdgeId>,
    amps: Vec<C<T>>,
}

impl<T: Scalar> DenseRegister<T> {
    fn new(lattice: &LatticeSpec, prep: &StatePrep) -> Result<Self> {
        let boundary = lattice.boundary_edges();
        prep.validate(boundary.len())?;
        let mut reg = Self { sites: Vec::new(), amps: vec![creal(T::one())] };
        for (k, &e) in boundary.iter().enumerate() {
            reg.add_qubit(e);
            match prep {
                StatePrep::Zeros => {}
                StatePrep::Bits(bits) => {
                    if bits[k] {
                        let bit = reg.bit_of(e).unwrap();
                        apply_gate_raw(
                            &mut reg.amps,
                            reg.sites.len(),
                            &[bit],
                            &crate::circuit::ElemGate::<T>::X.matrix(),
                        );
                    }
                }
                StatePrep::Plus => {
                    let bit = reg.bit_of(e).unwrap();
                    apply_gate_raw(
                        &mut reg.amps,
                        reg.sites.len(),
                        &[bit],
                        &basis_rotation::<T>(Basis::X).unwrap(),
                    );
                }
            }
        }
        Ok(reg)
    }

    fn bit_of(&self, edge: EdgeId) -> Option<usize> {
        self.sites.iter().position(|&e| e == edge)
    }

    fn add_qubit(&mut self, edge: EdgeId) {
        // new qubit is the most significant bit, in state |0>
        self.sites.push(edge);
        self.amps.resize(self.amps.len() * 2, C::new(T::zero(), T::zero()));
    }
}

impl<T: Scalar> Register<T> for DenseRegister<T> {
    fn apply_vertex(&mut self, edges: VertexEdges, gate: &Array2<C<T>>) -> Result<()> {
        for e in [edges.right, edges.top] {
            if self.bit_of(e).is_some() {
                return Err(Error::Consistency(format!("output edge {e} already live")));
            }
            self.add_qubit(e);
            if self.sites.len() > DENSE_REGISTER_BUDGET {
                return Err(Error::Resource(format!(
                    "live register would exceed {DENSE_REGISTER_BUDGET} qubits; use Mode::Mps"
                )));
            }
        }
        let qubits: Vec<usize> = [edges.left, edges.bottom, edges.right, edges.top]
            .iter()
            .map(|&e| self.bit_of(e).ok_or_else(|| Error::Consistency(format!("edge {e} not live"))))
            .collect::<Result<_>>()?;
        apply_gate_raw(&mut self.amps, self.sites.len(), &qubits, gate);
        Ok(())
    }

    fn flip(&mut self, edge: EdgeId) -> Result<()> {
        let bit =
            self.bit_of(edge).ok_or_else(|| Error::Consistency(format!("edge {edge} not live")))?;
        apply_gate_raw(
            &mut self.amps,
            self.sites.len(),
            &[bit],
            &crate::circuit::ElemGate::<T>::X.matrix(),
        );
        Ok(())
    }

    fn measure(
        &mut self,
        edge: EdgeId,
        basis: Basis,
        decide: &mut dyn FnMut(f64) -> bool,
    ) -> Result<(bool, f64)> {
        let bit =
            self.bit_of(edge).ok_or_else(|| Error::Consistency(format!("edge {edge} not live")))?;
        if let Some(rot) = basis_rotation::<T>(basis) {
            apply_gate_raw(&mut self.amps, self.sites.len(), &[bit], &rot);
        }
        let mask = 1usize << bit;
        let mut p1 = T::zero();
        for (i, a) in self.amps.iter().enumerate() {
            if i & mask != 0 {
                p1 += a.norm_sqr();
            }
        }
        let p1 = p1.to_f64_lossy().clamp(0.0, 1.0);
        let outcome = decide(p1);
        let p = if outcome { p1 } else { 1.0 - p1 };
        if p < PROB_FLOOR {
            return Ok((outcome, 0.0));
        }
        // project onto the outcome and drop the qubit
        let keep = if outcome { mask } else { 0 };
        let inv = creal(T::from_f64_lossy(1.0 / p.sqrt()));
        let half = self.amps.len() / 2;
        let mut next = Vec::with_capacity(half);
        for (i, a) in self.amps.iter().enumerate() {
            if i & mask == keep {
                next.push(*a * inv);
            }
        }
        self.amps = next;
        self.sites.remove(bit);
        // removing bit `bit` shifts every higher bit down by one, which is
        // exactly what the filtered copy above produced when enumerating in
        // index order
        Ok((outcome, p))
    }

    fn live_count(&self) -> usize {
        self.sites.len()
    }

    fn discarded_weight(&self) -> f64 {
        0.0
    }

    fn truncation_warnings(&self) -> usize {
        0
    }
}

// ---------------------------------------------------------------------------
// boundary-MPS register
// ---------------------------------------------------------------------------

/// Boundary state as a tensor train over the live frontier, sites ordered by
/// rotated-frame position. Gates act on four contiguous sites; splitting
/// back truncates to the bond-dimension cap and records the discarded
/// weight.
pub struct MpsRegister<T: Scalar> {
    sites: Vec<EdgeId>,
    tensors: Vec<Array3<C<T>>>,
    chi: usize,
    discarded: f64,
    warnings: usize,
}

impl<T: Scalar> MpsRegister<T> {
    pub fn new(lattice: &LatticeSpec, prep: &StatePrep, chi: usize) -> Result<Self> {
        if chi < 1 {
            return Err(Error::Domain("chi must be >= 1".into()));
        }
        let boundary = lattice.boundary_edges();
        prep.validate(boundary.len())?;
        let h = T::one() / T::from_f64_lossy(2.0).sqrt();
        let tensors = boundary
            .iter()
            .enumerate()
            .map(|(k, _)| {
                let mut t = Array3::from_elem((1, 2, 1), C::new(T::zero(), T::zero()));
                match prep {
                    StatePrep::Zeros => t[(0, 0, 0)] = creal(T::one()),
                    StatePrep::Bits(bits) => t[(0, bits[k] as usize, 0)] = creal(T::one()),
                    StatePrep::Plus => {
                        t[(0, 0, 0)] = creal(h);
                        t[(0, 1, 0)] = creal(h);
                    }
                }
                t
            })
            .collect();
        Ok(Self { sites: boundary, tensors, chi, discarded: 0.0, warnings: 0 })
    }

    pub fn chi(&self) -> usize {
        self.chi
    }

    pub fn cumulative_discarded_weight(&self) -> f64 {
        self.discarded
    }

    pub fn max_bond_dimension(&self) -> usize {
        self.tensors.iter().map(|t| t.dim().2).max().unwrap_or(1)
    }

    fn pos_of(&self, edge: EdgeId) -> Option<usize> {
        self.sites.iter().position(|&e| e == edge)
    }

    /// Split a blob of `k` fused physical sites back into site tensors,
    /// truncating each cut to chi.
    fn split_blob(&mut self, start: usize, blob: Array3<C<T>>, k: usize) -> Result<()> {
        let mut rest = blob; // (bl, 2^k fused, br)
        for s in 0..k - 1 {
            let (bl, fused, br) = rest.dim();
            let rows = bl * 2;
            let cols = fused / 2 * br;
            let m = Array2::from_shape_fn((rows, cols), |(r, c)| {
                let a = r / 2;
                let p = r % 2;
                let q = c / br;
                let b = c % br;
                rest[(a, p * (fused / 2) + q, b)]
            });
            let (u, sv, vt) = crate::linalg::svd(&m)?;
            let total: f64 = sv.iter().map(|x| (x.to_f64_lossy()).powi(2)).sum();
            let keep = sv.len().min(self.chi);
            let kept: f64 = sv.iter().take(keep).map(|x| (x.to_f64_lossy()).powi(2)).sum();
            let lost = ((total - kept) / total.max(1e-300)).max(0.0);
            self.discarded += lost;
            if lost > TRUNCATION_WARN_CAP {
                self.warnings += 1;
            }
            if kept < 1e-300 {
                return Err(Error::Solver("norm underflow during truncation; resample".into()));
            }
            let renorm = T::from_f64_lossy(1.0 / (kept / total).sqrt());
            let site = Array3::from_shape_fn((bl, 2, keep), |(a, p, b)| u[(a * 2 + p, b)]);
            self.tensors[start + s] = site;
            let fused_next = fused / 2;
            let next = Array3::from_shape_fn((keep, fused_next, br), |(a, q, b)| {
                vt[(a, q * br + b)] * creal(sv[a] * renorm)
            });
            rest = next;
        }
        self.tensors[start + k - 1] = rest;
        Ok(())
    }

    /// Bring the chain to mixed-canonical form with the center at `pos`.
    fn canonicalize_at(&mut self, pos: usize) -> Result<()> {
        for i in 0..pos {
            let (bl, _, br) = self.tensors[i].dim();
            let m = Array2::from_shape_fn((bl * 2, br), |(r, c)| self.tensors[i][(r / 2, r % 2, c)]);
            let (u, sv, vt) = crate::linalg::svd(&m)?;
            let k = sv.len();
            self.tensors[i] = Array3::from_shape_fn((bl, 2, k), |(a, p, b)| u[(a * 2 + p, b)]);
            let (bl2, _, br2) = self.tensors[i + 1].dim();
            debug_assert_eq!(bl2, br);
            let next = Array3::from_shape_fn((k, 2, br2), |(a, p, b)| {
                let mut acc = C::new(T::zero(), T::zero());
                for c in 0..bl2 {
                    acc = acc + vt[(a, c)] * creal(sv[a]) * self.tensors[i + 1][(c, p, b)];
                }
                acc
            });
            self.tensors[i + 1] = next;
        }
        for i in (pos + 1..self.tensors.len()).rev() {
            let (bl, _, br) = self.tensors[i].dim();
            let m = Array2::from_shape_fn((bl, 2 * br), |(r, c)| self.tensors[i][(r, c / br, c % br)]);
            let (u, sv, vt) = crate::linalg::svd(&m)?;
            let k = sv.len();
            self.tensors[i] = Array3::from_shape_fn((k, 2, br), |(a, p, b)| vt[(a, p * br + b)]);
            let (bl2, _, br2) = self.tensors[i - 1].dim();
            debug_assert_eq!(br2, bl);
            let prev = Array3::from_shape_fn((bl2, 2, k), |(a, p, b)| {
                let mut acc = C::new(T::zero(), T::zero());
                for c in 0..bl {
                    acc = acc + self.tensors[i - 1][(a, p, c)] * u[(c, b)] * creal(sv[b])
                }
                acc
            });
            self.tensors[i - 1] = prev;
        }
        Ok(())
    }
}

impl<T: Scalar> Register<T> for MpsRegister<T> {
    fn apply_vertex(&mut self, edges: VertexEdges, gate: &Array2<C<T>>) -> Result<()> {
        let left = self
            .pos_of(edges.left)
            .ok_or_else(|| Error::Consistency("left input not live".into()))?;
        let bottom = self
            .pos_of(edges.bottom)
            .ok_or_else(|| Error::Consistency("bottom input not live".into()))?;
        if bottom != left + 1 {
            return Err(Error::Consistency(
                "gate inputs are not adjacent on the frontier".into(),
            ));
        }
        // insert top before left and right after bottom: window order
        // (top, left, bottom, right)
        let insert_zero = |dim: usize| {
            let mut t = Array3::from_elem((dim, 2, dim), C::new(T::zero(), T::zero()));
            for a in 0..dim {
                t[(a, 0, a)] = creal(T::one());
            }
            t
        };
        let bl = self.tensors[left].dim().0;
        self.sites.insert(left, edges.top);
        self.tensors.insert(left, insert_zero(bl));
        let bottom = bottom + 1;
        let br = self.tensors[bottom].dim().2;
        self.sites.insert(bottom + 1, edges.right);
        self.tensors.insert(bottom + 1, insert_zero(br));
        let w = left; // window start: [top, left, bottom, right]

        // fuse the four tensors
        let mut blob = self.tensors[w].clone(); // (bl, 2, x)
        for s in 1..4 {
            let (a, f, x) = blob.dim();
            let t = &self.tensors[w + s];
            let (x2, _, y) = t.dim();
            debug_assert_eq!(x, x2);
            let mut next = Array3::from_elem((a, f * 2, y), C::new(T::zero(), T::zero()));
            for ai in 0..a {
                for fi in 0..f {
                    for p in 0..2 {
                        for yi in 0..y {
                            let mut acc = C::new(T::zero(), T::zero());
                            for xi in 0..x {
                                acc = acc + blob[(ai, fi, xi)] * t[(xi, p, yi)];
                            }
                            next[(ai, fi * 2 + p, yi)] = acc;
                        }
                    }
                }
            }
            blob = next;
        }
        // window physical order is (top, left, bottom, right) but the gate is
        // defined on (left, bottom, right, top); permute its indices
        let roles = [3usize, 0, 1, 2]; // window slot -> gate slot
        let perm = |wi: usize| -> usize {
            let mut gi = 0usize;
            for (slot, &role) in roles.iter().enumerate() {
                let bit = (wi >> (3 - slot)) & 1;
                gi |= bit << (3 - role);
            }
            gi
        };
        let (a, f, y) = blob.dim();
        debug_assert_eq!(f, 16);
        let mut out = Array3::from_elem((a, 16, y), C::new(T::zero(), T::zero()));
        for ai in 0..a {
            for yi in 0..y {
                for row in 0..16 {
                    let mut acc = C::new(T::zero(), T::zero());
                    for col in 0..16 {
                        acc = acc + gate[(perm(row), perm(col))] * blob[(ai, col, yi)];
                    }
                    out[(ai, row, yi)] = acc;
                }
            }
        }
        self.split_blob(w, out, 4)
    }

    fn flip(&mut self, edge: EdgeId) -> Result<()> {
        let pos =
            self.pos_of(edge).ok_or_else(|| Error::Consistency("flip target not live".into()))?;
        let t = &mut self.tensors[pos];
        let (bl, _, br) = t.dim();
        for a in 0..bl {
            for b in 0..br {
                let tmp = t[(a, 0, b)];
                t[(a, 0, b)] = t[(a, 1, b)];
                t[(a, 1, b)] = tmp;
            }
        }
        Ok(())
    }

    fn measure(
        &mut self,
        edge: EdgeId,
        basis: Basis,
        decide: &mut dyn FnMut(f64) -> bool,
    ) -> Result<(bool, f64)> {
        let pos =
            self.pos_of(edge).ok_or_else(|| Error::Consistency("measure target not live".into()))?;
        if let Some(rot) = basis_rotation::<T>(basis) {
            let t = &mut self.tensors[pos];
            let (bl, _, br) = t.dim();
            let mut next = Array3::from_elem((bl, 2, br), C::new(T::zero(), T::zero()));
            for a in 0..bl {
                for b in 0..br {
                    for p in 0..2 {
                        next[(a, p, b)] =
                            rot[(p, 0)] * t[(a, 0, b)] + rot[(p, 1)] * t[(a, 1, b)];
                    }
                }
            }
            *t = next;
        }
        self.canonicalize_at(pos)?;
        let t = &self.tensors[pos];
        let (bl, _, br) = t.dim();
        let mut p1 = T::zero();
        let mut total = T::zero();
        for a in 0..bl {
            for b in 0..br {
                p1 += t[(a, 1, b)].norm_sqr();
                total += t[(a, 0, b)].norm_sqr() + t[(a, 1, b)].norm_sqr();
            }
        }
        let p1 = (p1 / total).to_f64_lossy().clamp(0.0, 1.0);
        let outcome = decide(p1);
        let p = if outcome { p1 } else { 1.0 - p1 };
        if p < PROB_FLOOR {
            return Ok((outcome, 0.0));
        }
        if total.to_f64_lossy() < PROB_FLOOR {
            return Err(Error::Solver("boundary state norm underflow; resample".into()));
        }
        let inv = creal(T::from_f64_lossy(1.0 / (p * total.to_f64_lossy()).sqrt()));
        let proj = Array2::from_shape_fn((bl, br), |(a, b)| t[(a, outcome as usize, b)] * inv);
        // absorb the projected matrix into a neighbour and drop the site
        if pos > 0 {
            let prev = &self.tensors[pos - 1];
            let (a0, _, _) = prev.dim();
            let next = Array3::from_shape_fn((a0, 2, br), |(a, p2, b)| {
                let mut acc = C::new(T::zero(), T::zero());
                for c in 0..bl {
                    acc = acc + prev[(a, p2, c)] * proj[(c, b)];
                }
                acc
            });
            self.tensors[pos - 1] = next;
        } else if self.tensors.len() > 1 {
            let nxt = &self.tensors[pos + 1];
            let (_, _, b1) = nxt.dim();
            let next = Array3::from_shape_fn((bl, 2, b1), |(a, p2, b)| {
                let mut acc = C::new(T::zero(), T::zero());
                for c in 0..br {
                    acc = acc + proj[(a, c)] * nxt[(c, p2, b)];
                }
                acc
            });
            self.tensors[pos + 1] = next;
        }
        self.sites.remove(pos);
        self.tensors.remove(pos);
        Ok((outcome, p))
    }

    fn live_count(&self) -> usize {
        self.sites.len()
    }

    fn discarded_weight(&self) -> f64 {
        self.discarded
    }

    fn truncation_warnings(&self) -> usize {
        self.warnings
    }
}

// ---------------------------------------------------------------------------
// protocol walker
// ---------------------------------------------------------------------------

struct ShotData {
    rows: Vec<Vec<bool>>,
    log_prob: f64,
    discarded: f64,
    warnings: usize,
    peak_live: usize,
}

fn run_protocol<T: Scalar, R: Register<T>>(
    lattice: &LatticeSpec,
    gate: &Array2<C<T>>,
    defects: &[Vertex],
    bases: &[Basis],
    register: &mut R,
    decide: &mut dyn FnMut(EdgeId, f64) -> bool,
) -> Result<ShotData> {
    let mut rows = Vec::with_capacity(lattice.n_layers());
    let mut log_prob = 0.0f64;
    let mut peak = register.live_count();
    for layer in lattice.schedule() {
        for v in &layer.gates {
            register.apply_vertex(lattice.vertex_edges(*v), gate)?;
            if defects.contains(v) {
                register.flip(lattice.vertex_edges(*v).top)?;
            }
        }
        peak = peak.max(register.live_count());
        let mut row = Vec::with_capacity(layer.completed.len());
        for &e in &layer.completed {
            let (outcome, p) = register.measure(e, bases[e], &mut |p1| decide(e, p1))?;
            if p == 0.0 {
                // impossible forced outcome: the whole path has probability 0
                rows.push(row);
                return Ok(ShotData {
                    rows,
                    log_prob: f64::NEG_INFINITY,
                    discarded: register.discarded_weight(),
                    warnings: register.truncation_warnings(),
                    peak_live: peak,
                });
            }
            log_prob += p.ln();
            row.push(outcome);
        }
        rows.push(row);
    }
    if register.live_count() != 0 {
        return Err(Error::Consistency("register not empty after the final layer".into()));
    }
    Ok(ShotData {
        rows,
        log_prob,
        discarded: register.discarded_weight(),
        warnings: register.truncation_warnings(),
        peak_live: peak,
    })
}

fn validate_inputs<T: Scalar>(lattice: &LatticeSpec, g: T, bases: &[Basis]) -> Result<Array2<C<T>>> {
    if bases.len() != lattice.n_edges() {
        return Err(Error::Validation(format!(
            "need one basis per physical site ({}), got {}",
            lattice.n_edges(),
            bases.len()
        )));
    }
    let w = w_set_path(g)?;
    Ok(crate::circuit::lift_vertex_gate(&w)?.matrix().clone())
}

fn shot_once<T: Scalar>(
    lattice: &LatticeSpec,
    gate: &Array2<C<T>>,
    defects: &[Vertex],
    prep: &StatePrep,
    bases: &[Basis],
    mode: Mode,
    shot_seed: u64,
) -> Result<ShotData> {
    let mut rng = ChaCha12Rng::seed_from_u64(shot_seed);
    let mut decide = |_e: EdgeId, p1: f64| rng.gen::<f64>() < p1;
    match mode {
        Mode::ExactDense => {
            if peak_live_qubits(lattice) > DENSE_REGISTER_BUDGET {
                return Err(Error::Resource(format!(
                    "peak live register {} exceeds {} qubits; use Mode::Mps",
                    peak_live_qubits(lattice),
                    DENSE_REGISTER_BUDGET
                )));
            }
            let mut reg = DenseRegister::<T>::new(lattice, prep)?;
            run_protocol(lattice, gate, defects, bases, &mut reg, &mut decide)
        }
        Mode::Mps { chi } => {
            let mut reg = MpsRegister::<T>::new(lattice, prep, chi)?;
            run_protocol(lattice, gate, defects, bases, &mut reg, &mut decide)
        }
    }
}

/// Sample `shots` measurement records of the full isoTNS via the sequential
/// measure-and-reset protocol. Shots are independent, parallelized, and
/// deterministic for a given seed regardless of worker count.
#[allow(clippy::too_many_arguments)]
pub fn holo_sample<T: Scalar>(
    lattice: &LatticeSpec,
    g: T,
    prep: &StatePrep,
    bases: &[Basis],
    shots: usize,
    seed: u64,
    mode: Mode,
    defects: &[Vertex],
) -> Result<SampleBatch> {
    if shots < 1 {
        return Err(Error::Validation("shots must be >= 1".into()));
    }
    let gate = validate_inputs(lattice, g, bases)?;
    let schedule = lattice.schedule();
    let shots_vec: Vec<Result<ShotRecord>> = (0..shots as u64)
        .into_par_iter()
        .map(|i| {
            let shot_seed = stream_seed(seed, i);
            let data = shot_once(lattice, &gate, defects, prep, bases, mode, shot_seed)?;
            Ok(ShotRecord {
                shot: i,
                seed: shot_seed,
                rows: data.rows,
                discarded_weight: data.discarded,
                truncation_warnings: data.warnings,
                peak_live: data.peak_live,
            })
        })
        .collect();
    let shots_vec: Vec<ShotRecord> = shots_vec.into_iter().collect::<Result<_>>()?;
    Ok(SampleBatch {
        lattice: *lattice,
        g: g.to_f64_lossy(),
        mode_chi: match mode {
            Mode::ExactDense => None,
            Mode::Mps { chi } => Some(chi),
        },
        bases: bases.to_vec(),
        row_edges: schedule.into_iter().map(|l| l.completed).collect(),
        seed,
        shots: shots_vec,
    })
}

/// Monte Carlo estimate of a tensor product of single-site Pauli operators.
#[derive(Debug, Clone, Copy)]
pub struct HoloEstimate {
    pub value: f64,
    pub stderr: f64,
    pub shots: usize,
}

/// Estimate `<O_1 O_2 ... >` for a product of single-site Paulis by running
/// the protocol with each site measured in its operator's eigenbasis; the
/// estimate is the mean of the per-shot outcome products and the standard
/// error is the sample standard deviation over sqrt(shots).
#[allow(clippy::too_many_arguments)]
pub fn holo_expect<T: Scalar>(
    lattice: &LatticeSpec,
    g: T,
    prep: &StatePrep,
    observable: &PauliString,
    shots: usize,
    seed: u64,
    mode: Mode,
    defects: &[Vertex],
) -> Result<HoloEstimate> {
    if let Some(q) = observable.max_qubit() {
        if q >= lattice.n_edges() {
            return Err(Error::Validation(format!("observable touches edge {q} out of range")));
        }
    }
    if observable.factors().is_empty() {
        return Ok(HoloEstimate { value: 1.0, stderr: 0.0, shots });
    }
    let mut bases = vec![Basis::Z; lattice.n_edges()];
    for (&q, &p) in observable.factors() {
        bases[q] = match p {
            Pauli::X => Basis::X,
            Pauli::Y => Basis::Y,
            Pauli::Z => Basis::Z,
        };
    }
    let batch = holo_sample(lattice, g, prep, &bases, shots, seed, mode, defects)?;
    // locate each support edge in the (row, position) layout
    let mut slots = Vec::new();
    for q in observable.support() {
        for (ri, row) in batch.row_edges.iter().enumerate() {
            if let Some(ci) = row.iter().position(|&e| e == q) {
                slots.push((ri, ci));
            }
        }
    }
    let mut sum = 0.0f64;
    let mut sum2 = 0.0f64;
    for shot in &batch.shots {
        let mut prod = 1.0f64;
        for &(ri, ci) in &slots {
            if shot.rows[ri][ci] {
                prod = -prod;
            }
        }
        sum += prod;
        sum2 += prod * prod;
    }
    let n = shots as f64;
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0);
    Ok(HoloEstimate { value: mean, stderr: (var / n.max(2.0)).sqrt(), shots })
}

/// Exact probability that the protocol produces the given full outcome
/// assignment (bit per edge id): the product of the conditional
/// probabilities along the measurement schedule. Used to verify
/// distributional exactness against the dense Born rule.
pub fn holo_outcome_probability<T: Scalar>(
    lattice: &LatticeSpec,
    g: T,
    prep: &StatePrep,
    bases: &[Basis],
    outcome: &[bool],
    mode: Mode,
    defects: &[Vertex],
) -> Result<f64> {
    if outcome.len() != lattice.n_edges() {
        return Err(Error::Validation("outcome length != edge count".into()));
    }
    let gate = validate_inputs(lattice, g, bases)?;
    let mut decide = |e: EdgeId, _p1: f64| outcome[e];
    let data = match mode {
        Mode::ExactDense => {
            let mut reg = DenseRegister::<T>::new(lattice, prep)?;
            run_protocol(lattice, &gate, defects, bases, &mut reg, &mut decide)
        }
        Mode::Mps { chi } => {
            let mut reg = MpsRegister::<T>::new(lattice, prep, chi)?;
            run_protocol(lattice, &gate, defects, bases, &mut reg, &mut decide)
        }
    }?;
    Ok(data.log_prob.exp())
}

/// Advance a boundary-MPS register by one full layer, conditioning the
/// completed qubits on the supplied outcomes (frontier order). Returns the
/// conditional probability of those outcomes; truncation weight accumulates
/// on the register.
pub fn mps_step_truncate<T: Scalar>(
    register: &mut MpsRegister<T>,
    lattice: &LatticeSpec,
    layer_index: usize,
    gate: &Array2<C<T>>,
    bases: &[Basis],
    outcomes: &[bool],
) -> Result<f64> {
    let schedule = lattice.schedule();
    let layer = schedule
        .get(layer_index)
        .ok_or_else(|| Error::Validation(format!("layer {layer_index} out of range")))?;
    if outcomes.len() != layer.completed.len() {
        return Err(Error::Validation(format!(
            "layer {layer_index} completes {} qubits, got {} outcomes",
            layer.completed.len(),
            outcomes.len()
        )));
    }
    for v in &layer.gates {
        register.apply_vertex(lattice.vertex_edges(*v), gate)?;
    }
    let mut prob = 1.0f64;
    for (&e, &o) in layer.completed.iter().zip(outcomes.iter()) {
        let (_, p) = register.measure(e, bases[e], &mut |_p1| o)?;
        prob *= p;
    }
    Ok(prob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{lift_vertex_gate, sequential_program};
    use crate::lattice::build_lattice;
    use crate::statevector::{born_distribution, run};
    use approx::assert_abs_diff_eq;

    fn all_z(lattice: &LatticeSpec) -> Vec<Basis> {
        vec![Basis::Z; lattice.n_edges()]
    }

    /// Total variation distance between the exact holographic outcome
    /// distribution and the dense Born distribution, by enumeration.
    fn tvd_vs_born(lattice: &LatticeSpec, g: f64, prep: &StatePrep, bases: &[Basis], mode: Mode) -> f64 {
        let program = sequential_program(lattice, g, prep.clone(), false).unwrap();
        let state = run(&program).unwrap();
        let born = born_distribution(&state, bases).unwrap();
        let mut tvd = 0.0;
        for idx in 0..born.len() {
            let outcome: Vec<bool> = (0..lattice.n_edges()).map(|e| (idx >> e) & 1 == 1).collect();
            let p_holo =
                holo_outcome_probability(lattice, g, prep, bases, &outcome, mode, &[]).unwrap();
            tvd += (p_holo - born[idx]).abs();
        }
        tvd / 2.0
    }

    #[test]
    fn exact_mode_matches_born_distribution_on_small_lattices() {
        let lattice = build_lattice(2, 1).unwrap();
        let bases: Vec<Basis> = (0..lattice.n_edges())
            .map(|e| [Basis::Z, Basis::X, Basis::Y][e % 3])
            .collect();
        for g in [-0.8, 0.0, 0.6, 1.0] {
            let tvd = tvd_vs_born(&lattice, g, &StatePrep::Plus, &bases, Mode::ExactDense);
            assert!(tvd < 1e-10, "g={g} tvd={tvd}");
        }
    }

    #[test]
    fn untruncated_mps_mode_matches_born_distribution() {
        let lattice = build_lattice(2, 1).unwrap();
        let bases = all_z(&lattice);
        for g in [0.6, -0.4] {
            let tvd = tvd_vs_born(&lattice, g, &StatePrep::Zeros, &bases, Mode::Mps { chi: 16 });
            assert!(tvd < 1e-10, "g={g} tvd={tvd}");
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let lattice = build_lattice(2, 2).unwrap();
        let bases = all_z(&lattice);
        let a = holo_sample(&lattice, 0.5, &StatePrep::Zeros, &bases, 20, 9, Mode::ExactDense, &[])
            .unwrap();
        let b = holo_sample(&lattice, 0.5, &StatePrep::Zeros, &bases, 20, 9, Mode::ExactDense, &[])
            .unwrap();
        for (x, y) in a.shots.iter().zip(b.shots.iter()) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn row_lengths_match_the_schedule() {
        let lattice = build_lattice(3, 2).unwrap();
        let bases = all_z(&lattice);
        let batch =
            holo_sample(&lattice, 0.3, &StatePrep::Zeros, &bases, 3, 1, Mode::ExactDense, &[])
                .unwrap();
        let schedule = lattice.schedule();
        for shot in &batch.shots {
            assert_eq!(shot.rows.len(), schedule.len());
            for (row, layer) in shot.rows.iter().zip(schedule.iter()) {
                assert_eq!(row.len(), layer.completed.len());
            }
        }
    }

    #[test]
    fn register_economy_stays_within_two_rows() {
        for (nx, ny) in [(2, 2), (3, 3), (4, 2)] {
            let lattice = build_lattice(nx, ny).unwrap();
            assert!(peak_live_qubits(&lattice) <= 2 * (nx + ny));
            let bases = all_z(&lattice);
            let batch =
                holo_sample(&lattice, 0.7, &StatePrep::Zeros, &bases, 2, 3, Mode::ExactDense, &[])
                    .unwrap();
            for shot in &batch.shots {
                assert!(shot.peak_live <= 2 * (nx + ny), "peak {}", shot.peak_live);
            }
        }
    }

    #[test]
    fn toric_code_samples_satisfy_closed_loop_constraints() {
        let lattice = build_lattice(3, 3).unwrap();
        let bases = all_z(&lattice);
        let batch =
            holo_sample(&lattice, 1.0, &StatePrep::Zeros, &bases, 50, 12, Mode::ExactDense, &[])
                .unwrap();
        // reassemble per-edge bits and check every vertex has even parity
        for shot in &batch.shots {
            let mut bits = vec![false; lattice.n_edges()];
            for (row, edges) in shot.rows.iter().zip(batch.row_edges.iter()) {
                for (&b, &e) in row.iter().zip(edges.iter()) {
                    bits[e] = b;
                }
            }
            for v in lattice.vertices() {
                let es = lattice.vertex_edges(v);
                let parity = es.as_array().iter().filter(|&&e| bits[e]).count() % 2;
                assert_eq!(parity, 0, "odd vertex parity in a toric-code sample");
            }
        }
    }

    #[test]
    fn plaquette_x_product_is_sharp_at_the_fixed_point() {
        let lattice = build_lattice(3, 3).unwrap();
        let face = crate::lattice::Face { px: 1, py: 1 };
        let obs = PauliString::uniform(Pauli::X, lattice.face_edges(face));
        let est = holo_expect(&lattice, 1.0, &StatePrep::Zeros, &obs, 64, 5, Mode::ExactDense, &[])
            .unwrap();
        assert_abs_diff_eq!(est.value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(est.stderr, 0.0, epsilon = 1e-12);
        // identity observable is exactly 1
        let id = holo_expect(
            &lattice,
            0.4,
            &StatePrep::Zeros,
            &PauliString::new(),
            8,
            5,
            Mode::ExactDense,
            &[],
        )
        .unwrap();
        assert_eq!(id.value, 1.0);
    }

    #[test]
    fn zz_expectation_matches_the_statevector_oracle() {
        let lattice = build_lattice(3, 3).unwrap();
        let g = 0.5;
        // two sites at distance 2 along the sequential direction
        let e1 = lattice.vertex_edges(crate::lattice::Vertex::new(0, 0)).top;
        let e2 = lattice.vertex_edges(crate::lattice::Vertex::new(0, 2)).top;
        let obs = PauliString::uniform(Pauli::Z, [e1, e2]);
        let program = sequential_program(&lattice, g, StatePrep::Zeros, false).unwrap();
        let exact = crate::statevector::expect(&run(&program).unwrap(), &obs).unwrap();
        let est = holo_expect(
            &lattice,
            g,
            &StatePrep::Zeros,
            &obs,
            6000,
            21,
            Mode::ExactDense,
            &[],
        )
        .unwrap();
        assert!(
            (est.value - exact).abs() < 3.0 * est.stderr.max(1e-3),
            "holo {} +- {} vs exact {exact}",
            est.value,
            est.stderr
        );
    }

    #[test]
    fn chi_one_is_exact_when_no_entanglement_is_generated() {
        // g = 0 with the all-zero boundary keeps the register in |0...0>
        let lattice = build_lattice(3, 3).unwrap();
        let bases = all_z(&lattice);
        let batch =
            holo_sample(&lattice, 0.0, &StatePrep::Zeros, &bases, 5, 2, Mode::Mps { chi: 1 }, &[])
                .unwrap();
        for shot in &batch.shots {
            assert_eq!(shot.discarded_weight, 0.0);
            assert!(shot.rows.iter().all(|row| row.iter().all(|&b| !b)));
        }
    }

    #[test]
    fn truncation_error_decreases_with_chi() {
        let lattice = build_lattice(3, 3).unwrap();
        let bases = all_z(&lattice);
        // fixed outcome path: compare conditional probabilities as chi grows
        let exact_batch =
            holo_sample(&lattice, 0.5, &StatePrep::Zeros, &bases, 1, 77, Mode::ExactDense, &[])
                .unwrap();
        let outcome_rows = &exact_batch.shots[0].rows;
        let mut outcome = vec![false; lattice.n_edges()];
        for (row, edges) in outcome_rows.iter().zip(exact_batch.row_edges.iter()) {
            for (&b, &e) in row.iter().zip(edges.iter()) {
                outcome[e] = b;
            }
        }
        let p_exact = holo_outcome_probability(
            &lattice,
            0.5,
            &StatePrep::Zeros,
            &bases,
            &outcome,
            Mode::ExactDense,
            &[],
        )
        .unwrap();
        let mut errs = Vec::new();
        let mut discarded = Vec::new();
        for chi in [2usize, 8, 64] {
            let mut reg = MpsRegister::<f64>::new(&lattice, &StatePrep::Zeros, chi).unwrap();
            let gate = lift_vertex_gate(&crate::tensor::w_set_path(0.5).unwrap()).unwrap();
            let mut p = 1.0;
            for (li, row) in outcome_rows.iter().enumerate() {
                p *= mps_step_truncate(&mut reg, &lattice, li, gate.matrix(), &bases, row).unwrap();
            }
            errs.push((p - p_exact).abs());
            discarded.push(reg.cumulative_discarded_weight());
        }
        assert!(discarded[0] >= discarded[1] && discarded[1] >= discarded[2]);
        assert!(discarded[2] < 1e-12, "chi=64 must be exact on (3,3)");
        assert!(errs[2] < 1e-10, "chi=64 probability error {}", errs[2]);
        assert!(errs[0] + 1e-12 >= errs[2]);
    }

    #[test]
    fn dense_budget_error_directs_to_mps_mode() {
        let lattice = build_lattice(16, 16).unwrap();
        let bases = all_z(&lattice);
        let err = holo_sample(&lattice, 0.5, &StatePrep::Zeros, &bases, 1, 0, Mode::ExactDense, &[]);
        match err {
            Err(Error::Resource(msg)) => assert!(msg.contains("Mps")),
            other => panic!("expected resource error, got {other:?}"),
        }
    }
}
