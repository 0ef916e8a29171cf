//! Geometry and indexing of the discrete torus `T_n = (Z/nZ)²`.
//!
//! A vertex is a coordinate pair `(v1, v2)` with both entries reduced mod
//! `n`. The triangular structure enters only through the three classes of
//! unit lattice rhombi: every vertex anchors exactly one rhombus per class,
//! so the torus carries `3n²` rhombi. A rhombus is stored as `(class,
//! anchor)` together with a fixed four-point signed stencil; no geometric
//! embedding is kept.
//!
//! The identification of the torus with `(Z/nZ)²` maps the lattice
//! generator `1` to `(1, 0)` and `ω` to `(0, 1)`; all stencils below are
//! written in that chart and all index arithmetic wraps mod `n`.

use crate::{Error, Result};

/// One of the three orientations of unit rhombi on the triangular torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeClass {
    E0,
    E1,
    E2,
}

impl EdgeClass {
    pub const ALL: [EdgeClass; 3] = [EdgeClass::E0, EdgeClass::E1, EdgeClass::E2];

    pub fn index(self) -> usize {
        match self {
            EdgeClass::E0 => 0,
            EdgeClass::E1 => 1,
            EdgeClass::E2 => 2,
        }
    }

    pub fn from_index(i: usize) -> EdgeClass {
        Self::ALL[i]
    }
}

/// A vertex of `T_n`; both coordinates lie in `[0, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId {
    pub v1: usize,
    pub v2: usize,
}

impl VertexId {
    pub fn new(v1: usize, v2: usize) -> VertexId {
        VertexId { v1, v2 }
    }
}

/// Signed stencil offsets `(dv1, dv2, coefficient)` per class, relative to
/// the anchor vertex. The anchor is the stored corner of the rhombus; the
/// four coefficients of every class sum to zero, so constants are
/// annihilated.
const STENCILS: [[(usize, usize, i8); 4]; 3] = [
    // class 0
    [(0, 0, 1), (1, 0, -1), (1, 1, -1), (2, 1, 1)],
    // class 1
    [(0, 0, -1), (1, 0, 1), (0, 1, 1), (1, 1, -1)],
    // class 2
    [(0, 0, 1), (0, 1, -1), (1, 1, -1), (1, 2, 1)],
];

/// The discrete torus `T_n` with `n²` vertices and `3n²` rhombi.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusLattice {
    n: usize,
}

impl TorusLattice {
    /// Builds the torus of side `n ≥ 2`. At `n = 1` every rhombus
    /// degenerates (its four vertices collapse), hence the lower bound.
    pub fn new(n: usize) -> Result<TorusLattice> {
        if n < 2 {
            return Err(Error::InvalidSize(n));
        }
        Ok(TorusLattice { n })
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        self.n * self.n
    }

    pub const fn class_count(&self) -> usize {
        3
    }

    /// Total number of `(class, anchor)` pairs: `3n²`.
    pub fn rhombus_count(&self) -> usize {
        3 * self.vertex_count()
    }

    /// Reduces arbitrary integer coordinates mod `n`.
    pub fn vertex(&self, v1: i64, v2: i64) -> VertexId {
        let n = self.n as i64;
        VertexId::new((v1.rem_euclid(n)) as usize, (v2.rem_euclid(n)) as usize)
    }

    /// Flat row-major index (`v1` outer, `v2` inner).
    pub fn index(&self, v: VertexId) -> usize {
        v.v1 * self.n + v.v2
    }

    pub fn vertex_at(&self, index: usize) -> VertexId {
        VertexId::new(index / self.n, index % self.n)
    }

    /// Vertex translated by `(u1, u2)`, wrapping mod `n`.
    pub fn translate(&self, v: VertexId, u1: i64, u2: i64) -> VertexId {
        self.vertex(v.v1 as i64 + u1, v.v2 as i64 + u2)
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertex_count()).map(move |i| self.vertex_at(i))
    }

    /// All `(class, anchor)` pairs, class-major.
    pub fn rhombi(&self) -> impl Iterator<Item = (EdgeClass, VertexId)> + '_ {
        EdgeClass::ALL
            .into_iter()
            .flat_map(move |r| self.vertices().map(move |v| (r, v)))
    }

    /// The four signed vertices of the class-`r` stencil anchored at `v`.
    ///
    /// All index arithmetic is mod `n`; the coefficients sum to zero. For
    /// `n ≥ 2` the four vertices are pairwise distinct.
    pub fn rhombus_stencil(&self, r: EdgeClass, v: VertexId) -> [(VertexId, i8); 4] {
        let mut out = [(VertexId::new(0, 0), 0i8); 4];
        for (slot, &(d1, d2, c)) in out.iter_mut().zip(&STENCILS[r.index()]) {
            let w = self.vertex(v.v1 as i64 + d1 as i64, v.v2 as i64 + d2 as i64);
            *slot = (w, c);
        }
        out
    }

    /// Stencil entries as flat vertex indices, for constraint-row assembly.
    pub(crate) fn stencil_indices(&self, r: EdgeClass, v: VertexId) -> [u32; 4] {
        let st = self.rhombus_stencil(r, v);
        [
            self.index(st[0].0) as u32,
            self.index(st[1].0) as u32,
            self.index(st[2].0) as u32,
            self.index(st[3].0) as u32,
        ]
    }
}

/// The fixed ±1 coefficient pattern of class `r`, in stencil order.
pub fn stencil_signs(r: EdgeClass) -> [i8; 4] {
    let mut out = [0i8; 4];
    for (o, &(_, _, c)) in out.iter_mut().zip(&STENCILS[r.index()]) {
        *o = c;
    }
    out
}
