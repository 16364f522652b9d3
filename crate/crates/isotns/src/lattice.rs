//! Open-boundary square-lattice geometry with qubits on the edges.
//!
//! Vertices sit on an `n_vx x n_vy` grid; every vertex touches four edge
//! qubits (left, bottom, right, top). The left and bottom edges are the
//! incoming legs of the vertex gate, right and top the outgoing ones. The
//! boundary input edges are the left edges of column 0 and the bottom edges
//! of row 0 — exactly the edges never written as an output by any gate.
//!
//! Gates are scheduled by anti-diagonals `x + y = s`; an edge is *complete*
//! (safe to measure) after the layer of the unique gate that consumes it, or
//! after its producing layer if nothing ever reads it (the right edges of the
//! last column and top edges of the last row).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Edge-qubit index into a [`LatticeSpec`].
pub type EdgeId = usize;

/// Vertex grid coordinate, 0-indexed from the bottom-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Vertex {
    pub x: usize,
    pub y: usize,
}

impl Vertex {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

/// Plaquette (face) coordinate; face `(px, py)` has corner vertices
/// `(px, py) .. (px+1, py+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Face {
    pub px: usize,
    pub py: usize,
}

/// The four edges around a vertex, in gate order (left, bottom, right, top).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VertexEdges {
    pub left: EdgeId,
    pub bottom: EdgeId,
    pub right: EdgeId,
    pub top: EdgeId,
}

impl VertexEdges {
    pub fn as_array(&self) -> [EdgeId; 4] {
        [self.left, self.bottom, self.right, self.top]
    }
}

/// One anti-diagonal layer of the sequential schedule.
#[derive(Debug, Clone)]
pub struct Layer {
    /// Gates in this layer, ordered by increasing x.
    pub gates: Vec<Vertex>,
    /// Edges whose last use is this layer, ordered along the frontier.
    pub completed: Vec<EdgeId>,
}

/// Open-boundary lattice geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    n_vx: usize,
    n_vy: usize,
}

/// Build an `n_vx x n_vy` vertex grid.
pub fn build_lattice(n_vx: usize, n_vy: usize) -> Result<LatticeSpec> {
    if n_vx < 1 || n_vy < 1 {
        return Err(Error::Domain(format!(
            "lattice dimensions must be >= 1, got ({n_vx}, {n_vy})"
        )));
    }
    Ok(LatticeSpec { n_vx, n_vy })
}

impl LatticeSpec {
    pub fn n_vx(&self) -> usize {
        self.n_vx
    }

    pub fn n_vy(&self) -> usize {
        self.n_vy
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vx * self.n_vy
    }

    /// Total edge-qubit count: `2 n_vx n_vy + n_vx + n_vy`.
    pub fn n_edges(&self) -> usize {
        2 * self.n_vx * self.n_vy + self.n_vx + self.n_vy
    }

    /// Horizontal edge `x` in `0..=n_vx`, `y` in `0..n_vy`; `h(x,y)` is the
    /// left edge of vertex `(x,y)` and the right edge of `(x-1,y)`.
    pub fn h_edge(&self, x: usize, y: usize) -> EdgeId {
        debug_assert!(x <= self.n_vx && y < self.n_vy);
        y * (self.n_vx + 1) + x
    }

    /// Vertical edge `x` in `0..n_vx`, `y` in `0..=n_vy`; `v(x,y)` is the
    /// bottom edge of vertex `(x,y)` and the top edge of `(x,y-1)`.
    pub fn v_edge(&self, x: usize, y: usize) -> EdgeId {
        debug_assert!(x < self.n_vx && y <= self.n_vy);
        self.n_vy * (self.n_vx + 1) + y * self.n_vx + x
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.n_vy).flat_map(move |y| (0..self.n_vx).map(move |x| Vertex::new(x, y)))
    }

    pub fn contains_vertex(&self, v: Vertex) -> bool {
        v.x < self.n_vx && v.y < self.n_vy
    }

    pub fn vertex_edges(&self, v: Vertex) -> VertexEdges {
        VertexEdges {
            left: self.h_edge(v.x, v.y),
            bottom: self.v_edge(v.x, v.y),
            right: self.h_edge(v.x + 1, v.y),
            top: self.v_edge(v.x, v.y + 1),
        }
    }

    /// Interior faces, `(n_vx - 1) x (n_vy - 1)` of them.
    pub fn faces(&self) -> impl Iterator<Item = Face> + '_ {
        (0..self.n_vy.saturating_sub(1))
            .flat_map(move |py| (0..self.n_vx.saturating_sub(1)).map(move |px| Face { px, py }))
    }

    pub fn contains_face(&self, f: Face) -> bool {
        self.n_vx >= 1 && self.n_vy >= 1 && f.px + 1 < self.n_vx && f.py + 1 < self.n_vy
    }

    /// The four edges around a face: `[bottom, left, right, top]`.
    pub fn face_edges(&self, f: Face) -> [EdgeId; 4] {
        [
            self.h_edge(f.px + 1, f.py),
            self.v_edge(f.px, f.py + 1),
            self.v_edge(f.px + 1, f.py + 1),
            self.h_edge(f.px + 1, f.py + 1),
        ]
    }

    /// Boundary input edges (never written by a gate), ordered along the
    /// frontier: left edges top-down, then bottom edges left-to-right. This
    /// order matches ascending position along the rotated-frame boundary row
    /// and is the order in which boundary state preparations are applied.
    pub fn boundary_edges(&self) -> Vec<EdgeId> {
        let mut edges = Vec::with_capacity(self.n_vx + self.n_vy);
        for y in (0..self.n_vy).rev() {
            edges.push(self.h_edge(0, y));
        }
        for x in 0..self.n_vx {
            edges.push(self.v_edge(x, 0));
        }
        edges
    }

    /// Twice the rotated-frame position `u = x - y` of an edge; used to order
    /// measurements left-to-right along the frontier.
    pub fn edge_u2(&self, e: EdgeId) -> i64 {
        let nh = self.n_vy * (self.n_vx + 1);
        if e < nh {
            let y = (e / (self.n_vx + 1)) as i64;
            let x = (e % (self.n_vx + 1)) as i64;
            2 * (x - y) - 1
        } else {
            let r = e - nh;
            let y = (r / self.n_vx) as i64;
            let x = (r % self.n_vx) as i64;
            2 * (x - y) + 1
        }
    }

    /// Number of anti-diagonal layers: `n_vx + n_vy - 1`.
    pub fn n_layers(&self) -> usize {
        self.n_vx + self.n_vy - 1
    }

    /// Vertices on anti-diagonal `x + y = s`, ordered by increasing x.
    pub fn vertices_in_layer(&self, s: usize) -> Vec<Vertex> {
        let mut v = Vec::new();
        for x in 0..self.n_vx {
            if s >= x {
                let y = s - x;
                if y < self.n_vy {
                    v.push(Vertex::new(x, y));
                }
            }
        }
        v
    }

    /// The gate that reads this edge as an input, if any.
    pub fn consumer(&self, e: EdgeId) -> Option<Vertex> {
        let nh = self.n_vy * (self.n_vx + 1);
        if e < nh {
            let y = e / (self.n_vx + 1);
            let x = e % (self.n_vx + 1);
            (x < self.n_vx).then(|| Vertex::new(x, y))
        } else {
            let r = e - nh;
            let y = r / self.n_vx;
            let x = r % self.n_vx;
            (y < self.n_vy).then(|| Vertex::new(x, y))
        }
    }

    /// The gate that writes this edge as an output, if any (boundary inputs
    /// have none).
    pub fn producer(&self, e: EdgeId) -> Option<Vertex> {
        let nh = self.n_vy * (self.n_vx + 1);
        if e < nh {
            let y = e / (self.n_vx + 1);
            let x = e % (self.n_vx + 1);
            (x > 0).then(|| Vertex::new(x - 1, y))
        } else {
            let r = e - nh;
            let y = r / self.n_vx;
            let x = r % self.n_vx;
            (y > 0).then(|| Vertex::new(x, y - 1))
        }
    }

    /// Layer after which the edge is never touched again.
    pub fn complete_after(&self, e: EdgeId) -> usize {
        match self.consumer(e) {
            Some(v) => v.x + v.y,
            None => {
                let v = self.producer(e).expect("edge with neither consumer nor producer");
                v.x + v.y
            }
        }
    }

    /// The full sequential schedule: per layer, the gates to apply and the
    /// edges that complete once the layer has run.
    pub fn schedule(&self) -> Vec<Layer> {
        let mut layers: Vec<Layer> = (0..self.n_layers())
            .map(|s| Layer { gates: self.vertices_in_layer(s), completed: Vec::new() })
            .collect();
        for e in 0..self.n_edges() {
            layers[self.complete_after(e)].completed.push(e);
        }
        for layer in &mut layers {
            layer.completed.sort_by_key(|&e| self.edge_u2(e));
        }
        layers
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn edge_counts_match_hand_enumeration() {
        let cases = [((1, 1), 4, 1, 2), ((2, 2), 12, 4, 4), ((3, 3), 24, 9, 6), ((2, 3), 17, 6, 5)];
        for ((nx, ny), edges, vertices, boundary) in cases {
            let l = build_lattice(nx, ny).unwrap();
            assert_eq!(l.n_edges(), edges);
            assert_eq!(l.n_vertices(), vertices);
            assert_eq!(l.boundary_edges().len(), boundary);
        }
        assert!(build_lattice(0, 3).is_err());
    }

    #[test]
    fn every_edge_index_is_unique_and_every_vertex_touches_four() {
        let l = build_lattice(3, 4).unwrap();
        let mut seen = HashSet::new();
        for v in l.vertices() {
            let es = l.vertex_edges(v).as_array();
            assert_eq!(es.iter().collect::<HashSet<_>>().len(), 4);
            for e in es {
                assert!(e < l.n_edges());
                seen.insert(e);
            }
        }
        assert_eq!(seen.len(), l.n_edges());
    }

    #[test]
    fn boundary_edges_are_exactly_the_never_written_ones() {
        let l = build_lattice(3, 2).unwrap();
        let mut written = HashSet::new();
        for v in l.vertices() {
            let es = l.vertex_edges(v);
            written.insert(es.right);
            written.insert(es.top);
        }
        let boundary: HashSet<_> = l.boundary_edges().into_iter().collect();
        for e in 0..l.n_edges() {
            assert_eq!(boundary.contains(&e), !written.contains(&e), "edge {e}");
        }
    }

    #[test]
    fn shared_edges_connect_neighbours() {
        let l = build_lattice(3, 3).unwrap();
        let a = l.vertex_edges(Vertex::new(0, 0));
        let b = l.vertex_edges(Vertex::new(1, 0));
        let c = l.vertex_edges(Vertex::new(0, 1));
        assert_eq!(a.right, b.left);
        assert_eq!(a.top, c.bottom);
    }

    #[test]
    fn schedule_has_linear_depth_and_disjoint_layers() {
        for (nx, ny) in [(1, 1), (3, 3), (4, 2)] {
            let l = build_lattice(nx, ny).unwrap();
            let layers = l.schedule();
            assert_eq!(layers.len(), nx + ny - 1);
            let mut total_gates = 0;
            let mut total_completed = 0;
            for layer in &layers {
                let mut qubits = HashSet::new();
                for &g in &layer.gates {
                    for e in l.vertex_edges(g).as_array() {
                        assert!(qubits.insert(e), "layer gates overlap");
                    }
                }
                total_gates += layer.gates.len();
                total_completed += layer.completed.len();
            }
            assert_eq!(total_gates, l.n_vertices());
            assert_eq!(total_completed, l.n_edges());
        }
    }

    #[test]
    fn face_edges_are_distinct_and_interior() {
        let l = build_lattice(3, 3).unwrap();
        assert_eq!(l.faces().count(), 4);
        let boundary: HashSet<_> = l.boundary_edges().into_iter().collect();
        for f in l.faces() {
            let es = l.face_edges(f);
            assert_eq!(es.iter().collect::<HashSet<_>>().len(), 4);
            for e in es {
                assert!(!boundary.contains(&e), "face edge {e} is a boundary input");
            }
        }
    }
}
