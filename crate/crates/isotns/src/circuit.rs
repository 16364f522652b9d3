//! Sequential gate programs for plumbed isoTNS paths.
//!
//! A vertex gate acts on (left, bottom, right, top) edge qubits and embeds
//! the isometry defined by a W-matrix:
//!
//! ```text
//! U |i j 0 0>  =  sum_{m,n} W_{ij,mn} |i j m n>
//! ```
//!
//! Only this action on the |ij00> subspace is contractual; the unitary
//! completion of the remaining twelve columns uses a fixed deterministic
//! orthonormalization so exported circuits are reproducible byte-for-byte.
//!
//! The elementary decomposition uses `A(g) = Ry(2 atan(sqrt|g|))` (so that
//! `A(g)|0> = sqrt(1/(1+|g|))|0> + sqrt(|g|/(1+|g|))|1>`), its partner
//! `B(g) = H A(g)^dag` as a controlled gate, CNOTs, and one CCZ that is
//! present only for `g < 0`.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, Vertex};
use crate::scalar::{creal, Scalar, C, EXACT_TOL};
use crate::tensor::{check_isometry_default, WMatrix};

/// Measurement basis for a single qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

/// Product-state preparation applied to the boundary input edges, in the
/// frontier order of [`LatticeSpec::boundary_edges`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatePrep {
    /// |00...0>
    Zeros,
    /// Z-basis product state with the given bits.
    Bits(Vec<bool>),
    /// |++...+>
    Plus,
}

impl StatePrep {
    pub fn validate(&self, n_boundary: usize) -> Result<()> {
        if let StatePrep::Bits(bits) = self {
            if bits.len() != n_boundary {
                return Err(Error::Validation(format!(
                    "boundary prep has {} bits but the lattice has {} boundary edges",
                    bits.len(),
                    n_boundary
                )));
            }
        }
        Ok(())
    }
}

/// Named elementary gates. In multi-qubit gates the first listed qubit is
/// the control (and the most significant bit of the matrix index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ElemGate<T> {
    X,
    H,
    Ry { theta: T },
    Cnot,
    CH,
    CRy { theta: T },
    Ccz,
}

impl<T: Scalar> ElemGate<T> {
    pub fn n_qubits(&self) -> usize {
        match self {
            ElemGate::X | ElemGate::H | ElemGate::Ry { .. } => 1,
            ElemGate::Cnot | ElemGate::CH | ElemGate::CRy { .. } => 2,
            ElemGate::Ccz => 3,
        }
    }

    /// Dense matrix; basis index uses the first listed qubit as MSB.
    pub fn matrix(&self) -> Array2<C<T>> {
        let zero = C::new(T::zero(), T::zero());
        let one = creal(T::one());
        let h = creal(T::one() / T::from_f64_lossy(2.0).sqrt());
        match self {
            ElemGate::X => {
                Array2::from_shape_vec((2, 2), vec![zero, one, one, zero]).unwrap()
            }
            ElemGate::H => {
                Array2::from_shape_vec((2, 2), vec![h, h, h, -h]).unwrap()
            }
            ElemGate::Ry { theta } => {
                let half = *theta / T::from_f64_lossy(2.0);
                let (s, c) = (creal(half.sin()), creal(half.cos()));
                Array2::from_shape_vec((2, 2), vec![c, -s, s, c]).unwrap()
            }
            ElemGate::Cnot => controlled(&ElemGate::X.matrix()),
            ElemGate::CH => controlled(&ElemGate::H.matrix()),
            ElemGate::CRy { theta } => controlled(&ElemGate::Ry { theta: *theta }.matrix()),
            ElemGate::Ccz => {
                let mut m = Array2::from_elem((8, 8), zero);
                for i in 0..8 {
                    m[(i, i)] = if i == 7 { -one } else { one };
                }
                m
            }
        }
    }
}

fn controlled<T: Scalar>(u: &Array2<C<T>>) -> Array2<C<T>> {
    let d = u.dim().0;
    let zero = C::new(T::zero(), T::zero());
    let mut m = Array2::from_elem((2 * d, 2 * d), zero);
    for i in 0..d {
        m[(i, i)] = creal(T::one());
        for j in 0..d {
            m[(d + i, d + j)] = u[(i, j)];
        }
    }
    m
}

/// A gate payload: either a dense matrix or a named elementary gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GateKind<T> {
    Dense { name: String, matrix: Array2<C<T>> },
    Elem(ElemGate<T>),
}

impl<T: Scalar> GateKind<T> {
    pub fn matrix(&self) -> Array2<C<T>> {
        match self {
            GateKind::Dense { matrix, .. } => matrix.clone(),
            GateKind::Elem(e) => e.matrix(),
        }
    }
}

/// One program event. Qubit lists order the matrix index with the first
/// qubit as the most significant bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Event<T> {
    Unitary { qubits: Vec<usize>, gate: GateKind<T> },
    /// Pauli-X flip (defect insertion).
    Flip { qubit: usize },
    Measure { qubit: usize, basis: Basis },
    Reset { qubit: usize },
}

/// Program metadata: the path parameter, lattice, and inserted defects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramMeta<T> {
    pub g: T,
    pub lattice: LatticeSpec,
    pub defects: Vec<Vertex>,
}

/// An executable sequential program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateProgram<T> {
    pub n_qubits: usize,
    /// Qubits receiving the boundary preparation, in frontier order.
    pub prep_qubits: Vec<usize>,
    pub prep: StatePrep,
    pub events: Vec<Event<T>>,
    pub meta: ProgramMeta<T>,
}

impl<T: Scalar> GateProgram<T> {
    /// Check qubit ranges and unitarity of every dense matrix (1e-12).
    pub fn validate(&self) -> Result<()> {
        self.prep.validate(self.prep_qubits.len())?;
        for q in &self.prep_qubits {
            if *q >= self.n_qubits {
                return Err(Error::Validation(format!("prep qubit {q} out of range")));
            }
        }
        for ev in &self.events {
            match ev {
                Event::Unitary { qubits, gate } => {
                    for q in qubits {
                        if *q >= self.n_qubits {
                            return Err(Error::Validation(format!("qubit {q} out of range")));
                        }
                    }
                    let m = gate.matrix();
                    let d = m.dim().0;
                    if d != 1 << qubits.len() || m.dim().1 != d {
                        return Err(Error::Shape(format!(
                            "gate on {} qubits has matrix shape {:?}",
                            qubits.len(),
                            m.dim()
                        )));
                    }
                    if unitarity_deviation(&m).to_f64_lossy() > EXACT_TOL {
                        return Err(Error::Validation("non-unitary gate matrix".into()));
                    }
                }
                Event::Flip { qubit } | Event::Measure { qubit, .. } | Event::Reset { qubit } => {
                    if *qubit >= self.n_qubits {
                        return Err(Error::Validation(format!("qubit {qubit} out of range")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn has_measurements(&self) -> bool {
        self.events.iter().any(|e| matches!(e, Event::Measure { .. } | Event::Reset { .. }))
    }
}

/// max |U^dag U - I|
pub fn unitarity_deviation<T: Scalar>(m: &Array2<C<T>>) -> T {
    let d = m.dim().0;
    let mut worst = T::zero();
    for i in 0..d {
        for j in 0..d {
            let mut acc = C::new(T::zero(), T::zero());
            for k in 0..d {
                acc = acc + m[(k, i)].conj() * m[(k, j)];
            }
            let expect = if i == j { T::one() } else { T::zero() };
            worst = worst.max((acc - creal(expect)).norm());
        }
    }
    worst
}

/// A lifted 4-qubit vertex gate.
#[derive(Debug, Clone)]
pub struct VertexGate<T: Scalar> {
    matrix: Array2<C<T>>,
}

impl<T: Scalar> VertexGate<T> {
    pub fn matrix(&self) -> &Array2<C<T>> {
        &self.matrix
    }
}

/// Lift an isometric D=2 W-matrix to its 16x16 unitary completion.
///
/// The four isometry columns are fixed by the embedding contract; the other
/// twelve are filled by Gram-Schmidt over standard basis vectors in index
/// order, each new column phase-fixed so its first nonzero entry is real
/// positive.
pub fn lift_vertex_gate<T: Scalar>(w: &WMatrix<T>) -> Result<VertexGate<T>> {
    if w.dim_virtual() != 2 {
        return Err(Error::Validation(format!(
            "vertex gates are defined for D=2, got D={}",
            w.dim_virtual()
        )));
    }
    let check = check_isometry_default(w);
    if !check.passed {
        return Err(Error::Validation(format!(
            "W is not isometric (row deviation {})",
            check.max_deviation
        )));
    }
    let zero = C::new(T::zero(), T::zero());
    let mut cols: Vec<Option<Vec<C<T>>>> = vec![None; 16];
    // contractual columns: input |i j 0 0>
    for i in 0..2usize {
        for j in 0..2usize {
            let mut col = vec![zero; 16];
            for m in 0..2usize {
                for n in 0..2usize {
                    col[(i << 3) | (j << 2) | (m << 1) | n] = w.entry(i, j, m, n);
                }
            }
            cols[(i << 3) | (j << 2)] = Some(col);
        }
    }
    // deterministic completion
    let mut candidates = (0..16usize).cycle();
    for idx in 0..16 {
        if cols[idx].is_some() {
            continue;
        }
        let mut tries = 0;
        let col = loop {
            tries += 1;
            if tries > 16 {
                return Err(Error::Consistency("unitary completion failed".into()));
            }
            let cand = candidates.next().unwrap();
            let mut v = vec![zero; 16];
            v[cand] = creal(T::one());
            for filled in cols.iter().flatten() {
                let overlap: C<T> =
                    filled.iter().zip(v.iter()).fold(zero, |acc, (a, b)| acc + a.conj() * *b);
                for (ve, fe) in v.iter_mut().zip(filled.iter()) {
                    *ve = *ve - overlap * *fe;
                }
            }
            let norm_sq: T = v.iter().map(|z| z.norm_sqr()).sum();
            if norm_sq.to_f64_lossy() > 1e-6 {
                let norm = norm_sq.sqrt();
                for ve in v.iter_mut() {
                    *ve = *ve / creal(norm);
                }
                // phase fix: first entry with non-negligible modulus made real positive
                let first = v
                    .iter()
                    .find(|z| z.norm().to_f64_lossy() > 1e-9)
                    .copied()
                    .expect("normalized column has a nonzero entry");
                let phase = first / creal(first.norm());
                for ve in v.iter_mut() {
                    *ve = *ve * phase.conj();
                }
                break v;
            }
        };
        cols[idx] = Some(col);
    }
    let mut matrix = Array2::from_elem((16, 16), zero);
    for (j, col) in cols.into_iter().enumerate() {
        for (i, v) in col.expect("all columns filled").into_iter().enumerate() {
            matrix[(i, j)] = v;
        }
    }
    Ok(VertexGate { matrix })
}

/// `A(g)` rotation angle: `A(g)|0> = sqrt(1/(1+|g|))|0> + sqrt(|g|/(1+|g|))|1>`.
pub fn vertex_gate_angle<T: Scalar>(g: T) -> T {
    let two = T::from_f64_lossy(2.0);
    two * g.abs().sqrt().atan()
}

/// Elementary-gate decomposition of the vertex gate on (l, b, r, t), valid on
/// the reachable |i j 0 0> subspace and validated against the dense gate by
/// the statevector oracle.
pub fn vertex_gate_decomposition<T: Scalar>(g: T, l: usize, b: usize, r: usize, t: usize) -> Vec<Event<T>> {
    let theta = vertex_gate_angle(g);
    let mut ev = vec![
        Event::Unitary { qubits: vec![r], gate: GateKind::Elem(ElemGate::Ry { theta }) },
        Event::Unitary { qubits: vec![l, t], gate: GateKind::Elem(ElemGate::Cnot) },
        Event::Unitary { qubits: vec![b, t], gate: GateKind::Elem(ElemGate::Cnot) },
        // controlled-B(g) with B = H A(g)^dag: apply A^dag then H, both controlled on t
        Event::Unitary { qubits: vec![t, r], gate: GateKind::Elem(ElemGate::CRy { theta: -theta }) },
        Event::Unitary { qubits: vec![t, r], gate: GateKind::Elem(ElemGate::CH) },
        Event::Unitary { qubits: vec![l, r], gate: GateKind::Elem(ElemGate::Cnot) },
        Event::Unitary { qubits: vec![r, t], gate: GateKind::Elem(ElemGate::Cnot) },
    ];
    if g < T::zero() {
        // phase -1 exactly on (l,b,r) = (0,0,1): CCZ conjugated by X on l,b
        ev.push(Event::Unitary { qubits: vec![l], gate: GateKind::Elem(ElemGate::X) });
        ev.push(Event::Unitary { qubits: vec![b], gate: GateKind::Elem(ElemGate::X) });
        ev.push(Event::Unitary { qubits: vec![l, b, r], gate: GateKind::Elem(ElemGate::Ccz) });
        ev.push(Event::Unitary { qubits: vec![b], gate: GateKind::Elem(ElemGate::X) });
        ev.push(Event::Unitary { qubits: vec![l], gate: GateKind::Elem(ElemGate::X) });
    }
    ev
}

/// Build the diagonal sequential program preparing the isoTNS at `g`.
///
/// Vertex gates are ordered by increasing anti-diagonal `x + y`, ties broken
/// by x; the program depth is `n_vx + n_vy - 1` layers. With `decomposed`
/// the vertex gates are emitted as elementary gates instead of dense
/// matrices.
pub fn sequential_program<T: Scalar>(
    lattice: &LatticeSpec,
    g: T,
    boundary: StatePrep,
    decomposed: bool,
) -> Result<GateProgram<T>> {
    boundary.validate(lattice.boundary_edges().len())?;
    let w = crate::tensor::w_set_path(g)?;
    let gate = lift_vertex_gate(&w)?;
    let mut events = Vec::new();
    for s in 0..lattice.n_layers() {
        for v in lattice.vertices_in_layer(s) {
            let e = lattice.vertex_edges(v);
            if decomposed {
                events.extend(vertex_gate_decomposition(g, e.left, e.bottom, e.right, e.top));
            } else {
                events.push(Event::Unitary {
                    qubits: vec![e.left, e.bottom, e.right, e.top],
                    gate: GateKind::Dense {
                        name: format!("vertex({},{})", v.x, v.y),
                        matrix: gate.matrix().clone(),
                    },
                });
            }
        }
    }
    Ok(GateProgram {
        n_qubits: lattice.n_edges(),
        prep_qubits: lattice.boundary_edges(),
        prep: boundary,
        events,
        meta: ProgramMeta { g, lattice: *lattice, defects: Vec::new() },
    })
}

/// Insert a vertex defect: an X flip on the vertex's top output edge,
/// immediately after its vertex gate. The resulting state carries a single
/// odd-parity vertex (an e anyon) and is orthogonal to the defect-free state.
pub fn insert_defect<T: Scalar>(program: &GateProgram<T>, vertex: Vertex) -> Result<GateProgram<T>> {
    let lattice = program.meta.lattice;
    if !lattice.contains_vertex(vertex) {
        return Err(Error::Domain(format!(
            "defect vertex ({}, {}) outside {}x{} lattice",
            vertex.x,
            vertex.y,
            lattice.n_vx(),
            lattice.n_vy()
        )));
    }
    let edges = lattice.vertex_edges(vertex);
    let target: Vec<usize> = edges.as_array().to_vec();
    // last event touching this vertex's qubits = its gate (dense form) or the
    // tail of its decomposition
    let pos = program
        .events
        .iter()
        .rposition(|ev| match ev {
            Event::Unitary { qubits, .. } => qubits.iter().all(|q| target.contains(q)),
            _ => false,
        })
        .ok_or_else(|| Error::Validation("program contains no gate for that vertex".into()))?;
    let mut out = program.clone();
    out.events.insert(pos + 1, Event::Flip { qubit: edges.top });
    out.meta.defects.push(vertex);
    Ok(out)
}

/// Program export format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Qasm3,
}

const PROGRAM_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ProgramFile<T> {
    version: u32,
    program: GateProgram<T>,
}

/// Serialize a program. JSON is lossless (dense matrices included); QASM3
/// requires an elementary-gate program and fails on dense gates.
pub fn export_program<T>(program: &GateProgram<T>, format: ExportFormat) -> Result<String>
where
    T: Scalar + Serialize,
{
    match format {
        ExportFormat::Json => Ok(serde_json::to_string_pretty(&ProgramFile {
            version: PROGRAM_SCHEMA_VERSION,
            program: program.clone(),
        })?),
        ExportFormat::Qasm3 => export_qasm3(program),
    }
}

/// Parse a program previously exported as JSON.
pub fn import_program<T>(text: &str) -> Result<GateProgram<T>>
where
    T: Scalar + serde::de::DeserializeOwned,
{
    let file: ProgramFile<T> = serde_json::from_str(text)?;
    if file.version != PROGRAM_SCHEMA_VERSION {
        return Err(Error::Validation(format!(
            "unsupported program schema version {}",
            file.version
        )));
    }
    Ok(file.program)
}

fn export_qasm3<T: Scalar>(program: &GateProgram<T>) -> Result<String> {
    let mut out = String::new();
    out.push_str("OPENQASM 3.0;\ninclude \"stdgates.inc\";\n");
    out.push_str(&format!("qubit[{}] q;\n", program.n_qubits));
    out.push_str(&format!("bit[{}] c;\n", program.n_qubits));
    match &program.prep {
        StatePrep::Zeros => {}
        StatePrep::Bits(bits) => {
            for (q, bit) in program.prep_qubits.iter().zip(bits.iter()) {
                if *bit {
                    out.push_str(&format!("x q[{q}];\n"));
                }
            }
        }
        StatePrep::Plus => {
            for q in &program.prep_qubits {
                out.push_str(&format!("h q[{q}];\n"));
            }
        }
    }
    for ev in &program.events {
        match ev {
            Event::Unitary { qubits, gate } => match gate {
                GateKind::Dense { name, .. } => {
                    return Err(Error::Export(format!(
                        "QASM3 export requires an elementary-gate program; found dense gate `{name}`"
                    )));
                }
                GateKind::Elem(e) => {
                    let q = qubits;
                    match e {
                        ElemGate::X => out.push_str(&format!("x q[{}];\n", q[0])),
                        ElemGate::H => out.push_str(&format!("h q[{}];\n", q[0])),
                        ElemGate::Ry { theta } => {
                            out.push_str(&format!("ry({}) q[{}];\n", theta.to_f64_lossy(), q[0]))
                        }
                        ElemGate::Cnot => out.push_str(&format!("cx q[{}], q[{}];\n", q[0], q[1])),
                        ElemGate::CH => out.push_str(&format!("ch q[{}], q[{}];\n", q[0], q[1])),
                        ElemGate::CRy { theta } => out.push_str(&format!(
                            "cry({}) q[{}], q[{}];\n",
                            theta.to_f64_lossy(),
                            q[0],
                            q[1]
                        )),
                        // ccz is not in stdgates.inc; lower to h-ccx-h
                        ElemGate::Ccz => out.push_str(&format!(
                            "h q[{2}];\nccx q[{0}], q[{1}], q[{2}];\nh q[{2}];\n",
                            q[0], q[1], q[2]
                        )),
                    }
                }
            },
            Event::Flip { qubit } => out.push_str(&format!("x q[{qubit}];\n")),
            Event::Measure { qubit, basis } => {
                match basis {
                    Basis::X => out.push_str(&format!("h q[{qubit}];\n")),
                    Basis::Y => out.push_str(&format!("sdg q[{qubit}];\nh q[{qubit}];\n")),
                    Basis::Z => {}
                }
                out.push_str(&format!("c[{qubit}] = measure q[{qubit}];\n"));
            }
            Event::Reset { qubit } => out.push_str(&format!("reset q[{qubit}];\n")),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;
    use crate::tensor::{w_set_path, w_toric_code};
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn random_isometric_w(seed: u64) -> WMatrix<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut m = Array2::from_elem((4, 4), creal(0.0));
        for i in 0..4 {
            let mut row: Vec<C<f64>> = (0..4)
                .map(|_| C::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let norm: f64 = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in row.iter_mut() {
                *z = *z / norm;
            }
            for (j, z) in row.into_iter().enumerate() {
                m[(i, j)] = z;
            }
        }
        WMatrix::new(m).unwrap()
    }

    #[test]
    fn toric_code_gate_prepares_the_bell_branch() {
        let u = lift_vertex_gate(&w_toric_code::<f64>()).unwrap();
        // U|0000> = |00> (x) (|00> + |11>)/sqrt(2)
        assert_abs_diff_eq!(u.matrix()[(0b0000, 0)].re, SQRT_HALF, epsilon = 1e-15);
        assert_abs_diff_eq!(u.matrix()[(0b0011, 0)].re, SQRT_HALF, epsilon = 1e-15);
        for i in 0..16 {
            if i != 0b0000 && i != 0b0011 {
                assert_abs_diff_eq!(u.matrix()[(i, 0)].norm(), 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn six_vertex_gate_fixes_the_vacuum() {
        let u = lift_vertex_gate(&w_set_path(0.0_f64).unwrap()).unwrap();
        assert_abs_diff_eq!(u.matrix()[(0, 0)].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn lifted_gates_are_unitary_and_satisfy_the_embedding_contract() {
        for seed in 0..8u64 {
            let w = random_isometric_w(seed);
            let u = lift_vertex_gate(&w).unwrap();
            assert!(unitarity_deviation(u.matrix()) < 1e-12, "seed {seed}");
            for i in 0..2usize {
                for j in 0..2usize {
                    for m in 0..2usize {
                        for n in 0..2usize {
                            let got = u.matrix()[((i << 3) | (j << 2) | (m << 1) | n, (i << 3) | (j << 2))];
                            assert_abs_diff_eq!(
                                (got - w.entry(i, j, m, n)).norm(),
                                0.0,
                                epsilon = 1e-13
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn lift_rejects_non_isometric_input() {
        let mut m = Array2::from_elem((4, 4), creal(0.0_f64));
        m[(0, 0)] = creal(0.7);
        let w = WMatrix::new(m).unwrap();
        assert!(matches!(lift_vertex_gate(&w), Err(Error::Validation(_))));
    }

    #[test]
    fn sequential_program_counts_gates_and_respects_depth() {
        let l1 = build_lattice(1, 1).unwrap();
        let p1 = sequential_program(&l1, 1.0_f64, StatePrep::Zeros, false).unwrap();
        assert_eq!(p1.events.len(), 1);
        p1.validate().unwrap();

        let l3 = build_lattice(3, 3).unwrap();
        let p3 = sequential_program(&l3, 0.4_f64, StatePrep::Zeros, false).unwrap();
        assert_eq!(p3.events.len(), 9);
        assert_eq!(l3.n_layers(), 5);
        p3.validate().unwrap();
    }

    #[test]
    fn boundary_prep_length_is_validated() {
        let l = build_lattice(2, 2).unwrap();
        let bad = sequential_program(&l, 0.2_f64, StatePrep::Bits(vec![true; 3]), false);
        assert!(matches!(bad, Err(Error::Validation(_))));
    }

    #[test]
    fn defect_insertion_places_a_flip_after_the_vertex_gate() {
        let l = build_lattice(3, 3).unwrap();
        let p = sequential_program(&l, 1.0_f64, StatePrep::Zeros, false).unwrap();
        let v = Vertex::new(1, 1);
        let d = insert_defect(&p, v).unwrap();
        assert_eq!(d.events.len(), p.events.len() + 1);
        assert_eq!(d.meta.defects, vec![v]);
        let top = l.vertex_edges(v).top;
        let flip_pos = d
            .events
            .iter()
            .position(|e| matches!(e, Event::Flip { qubit } if *qubit == top))
            .unwrap();
        // the event right before the flip is the (1,1) vertex gate
        match &d.events[flip_pos - 1] {
            Event::Unitary { qubits, .. } => {
                assert_eq!(qubits, &l.vertex_edges(v).as_array().to_vec())
            }
            _ => panic!("expected vertex gate before flip"),
        }
        assert!(insert_defect(&p, Vertex::new(7, 0)).is_err());
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let l = build_lattice(2, 2).unwrap();
        let p = insert_defect(
            &sequential_program(&l, -0.3_f64, StatePrep::Bits(vec![true, false, true, false]), false)
                .unwrap(),
            Vertex::new(0, 1),
        )
        .unwrap();
        let text = export_program(&p, ExportFormat::Json).unwrap();
        let back: GateProgram<f64> = import_program(&text).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn qasm_export_requires_elementary_gates_and_contains_ccz_for_negative_g() {
        let l = build_lattice(2, 2).unwrap();
        let dense = sequential_program(&l, -0.5_f64, StatePrep::Zeros, false).unwrap();
        assert!(matches!(export_program(&dense, ExportFormat::Qasm3), Err(Error::Export(_))));

        let elem = sequential_program(&l, -0.5_f64, StatePrep::Plus, true).unwrap();
        let qasm = export_program(&elem, ExportFormat::Qasm3).unwrap();
        assert!(qasm.contains("OPENQASM 3.0"));
        assert!(qasm.contains("ccx"), "g<0 program must contain the CCZ block");
        assert!(qasm.contains("cry"));

        let pos = sequential_program(&l, 0.5_f64, StatePrep::Zeros, true).unwrap();
        let qasm_pos = export_program(&pos, ExportFormat::Qasm3).unwrap();
        assert!(!qasm_pos.contains("ccx"), "g>0 program must not contain CCZ");
    }
}
