//! Discrete hessian evaluation and the sparse constraint system defining
//! the polytope of slack-bounded fields.
//!
//! For a field `x` and a class-`r` rhombus anchored at `v`, the hessian is
//! the alternating four-point sum of the stencil from [`crate::torus`]. A
//! field is feasible for slack `s` when every one of the `3n²` hessian
//! values is at most `s_r` for its class, together with one equality: zero
//! mean (the translation-invariant variant) or a pinned value `x(0) = 0`.

use crate::field::SurfaceField;
use crate::scalar::Scalar;
use crate::torus::{stencil_signs, EdgeClass, TorusLattice, VertexId};
use crate::{Error, Result};

/// Absolute tolerance on row slacks used by feasibility checks. Desk-scale
/// data is O(n²), far above round-off at this threshold.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Per-class upper bounds `(s0, s1, s2)` on the discrete hessian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlackVector<T> {
    values: [T; 3],
}

impl<T: Scalar> SlackVector<T> {
    /// Builds a slack vector; all entries must be nonnegative and finite.
    pub fn new(s0: T, s1: T, s2: T) -> Result<SlackVector<T>> {
        let values = [s0, s1, s2];
        if values.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::NegativeSlack);
        }
        Ok(SlackVector { values })
    }

    pub fn splat(s: T) -> Result<SlackVector<T>> {
        SlackVector::new(s, s, s)
    }

    pub fn get(&self, r: EdgeClass) -> T {
        self.values[r.index()]
    }

    pub fn as_array(&self) -> [T; 3] {
        self.values
    }

    pub fn min(&self) -> T {
        self.values[0].min(self.values[1]).min(self.values[2])
    }

    pub fn max(&self) -> T {
        self.values[0].max(self.values[1]).max(self.values[2])
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.values.iter().all(|v| *v > T::zero())
    }

    /// Canonical normalization used by several stated bounds:
    /// `s0 = 2` and `s0 ≤ s1 ≤ s2`.
    pub fn is_canonical(&self) -> bool {
        let two = T::from_f64_lit(2.0);
        self.values[0] == two
            && self.values[0] <= self.values[1]
            && self.values[1] <= self.values[2]
    }

    pub fn scaled(&self, factor: T) -> SlackVector<T> {
        SlackVector {
            values: [
                self.values[0] * factor,
                self.values[1] * factor,
                self.values[2] * factor,
            ],
        }
    }

    /// Slack with one class perturbed by `delta` (may not go negative).
    pub fn perturbed(&self, r: EdgeClass, delta: T) -> Result<SlackVector<T>> {
        let mut values = self.values;
        values[r.index()] = values[r.index()] + delta;
        SlackVector::new(values[0], values[1], values[2])
    }

    pub fn dot(&self, other: &SlackVector<T>) -> T {
        self.values[0] * other.values[0]
            + self.values[1] * other.values[1]
            + self.values[2] * other.values[2]
    }

    pub fn to_f64(&self) -> SlackVector<f64> {
        SlackVector {
            values: [
                self.values[0].to_f64_lossy(),
                self.values[1].to_f64_lossy(),
                self.values[2].to_f64_lossy(),
            ],
        }
    }
}

/// Discrete hessian of `x` on the class-`r` rhombus anchored at `v`.
pub fn hessian_edge<T: Scalar>(x: &SurfaceField<T>, r: EdgeClass, v: VertexId) -> T {
    let lat = TorusLattice::new(x.side()).expect("field side >= 2");
    let mut acc = T::zero();
    for (w, c) in lat.rhombus_stencil(r, v) {
        let coeff = T::from_f64_lit(c as f64);
        acc = acc + coeff * x.get(w);
    }
    acc
}

/// Table of all `3n²` hessian values of a field, class-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianTable<T> {
    n: usize,
    values: Vec<T>,
}

impl<T: Scalar> HessianTable<T> {
    pub fn side(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: EdgeClass, v: VertexId) -> T {
        self.values[r.index() * self.n * self.n + v.v1 * self.n + v.v2]
    }

    pub fn class_values(&self, r: EdgeClass) -> &[T] {
        let n2 = self.n * self.n;
        &self.values[r.index() * n2..(r.index() + 1) * n2]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    /// True when every entry is at most `s_r` for its class, within `tol`.
    pub fn dominated_by(&self, s: &SlackVector<T>, tol: T) -> bool {
        EdgeClass::ALL.into_iter().all(|r| {
            let bound = s.get(r) + tol;
            self.class_values(r).iter().all(|&h| h <= bound)
        })
    }
}

/// Evaluates the hessian on every rhombus; equals [`hessian_edge`]
/// pointwise.
pub fn hessian_all<T: Scalar>(x: &SurfaceField<T>) -> HessianTable<T> {
    let n = x.side();
    let lat = TorusLattice::new(n).expect("field side >= 2");
    let mut values = Vec::with_capacity(3 * n * n);
    for r in EdgeClass::ALL {
        for v in lat.vertices() {
            let mut acc = T::zero();
            for (w, c) in lat.rhombus_stencil(r, v) {
                acc = acc + T::from_f64_lit(c as f64) * x.get(w);
            }
            values.push(acc);
        }
    }
    HessianTable { n, values }
}

/// Equality constraint selecting which affine slice of field space the
/// polytope lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Fields whose entries sum to zero.
    MeanZero,
    /// Fields pinned by `x(0, 0) = 0`.
    Pinned,
}

/// The `3n²` sparse inequality rows plus the equality constraint.
///
/// Row `class·n² + anchor` has four ±1 entries (the class stencil at the
/// anchor) and right-hand side `s_class`. Rows are stored as precomputed
/// flat vertex indices; the signs per class are fixed. Each vertex appears
/// in exactly 12 rows (4 per class), recorded in per-vertex incidence
/// lists.
#[derive(Debug, Clone)]
pub struct ConstraintSystem<T> {
    lat: TorusLattice,
    slack: SlackVector<T>,
    variant: Variant,
    row_vertices: Vec<[u32; 4]>,
    incidence: Vec<Vec<(u32, i8)>>,
}

impl<T: Scalar> ConstraintSystem<T> {
    /// Builds the constraint system for side `n ≥ 2` and slack `s ≥ 0`.
    pub fn build(n: usize, slack: SlackVector<T>, variant: Variant) -> Result<ConstraintSystem<T>> {
        let lat = TorusLattice::new(n)?;
        let n2 = lat.vertex_count();
        let mut row_vertices = Vec::with_capacity(3 * n2);
        let mut incidence = vec![Vec::with_capacity(12); n2];
        for r in EdgeClass::ALL {
            let signs = stencil_signs(r);
            for v in lat.vertices() {
                let row_id = (r.index() * n2 + lat.index(v)) as u32;
                let idx = lat.stencil_indices(r, v);
                for (k, &vi) in idx.iter().enumerate() {
                    incidence[vi as usize].push((row_id, signs[k]));
                }
                row_vertices.push(idx);
            }
        }
        debug_assert!(incidence.iter().all(|l| l.len() == 12));
        Ok(ConstraintSystem {
            lat,
            slack,
            variant,
            row_vertices,
            incidence,
        })
    }

    pub fn side(&self) -> usize {
        self.lat.side()
    }

    pub fn lattice(&self) -> &TorusLattice {
        &self.lat
    }

    pub fn slack(&self) -> &SlackVector<T> {
        &self.slack
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn row_count(&self) -> usize {
        self.row_vertices.len()
    }

    pub fn row_class(&self, row: usize) -> EdgeClass {
        EdgeClass::from_index(row / self.lat.vertex_count())
    }

    pub fn row_rhs(&self, row: usize) -> T {
        self.slack.get(self.row_class(row))
    }

    /// The four `(flat vertex index, ±1)` entries of a row.
    pub fn row_entries(&self, row: usize) -> [(u32, i8); 4] {
        let signs = stencil_signs(self.row_class(row));
        let idx = self.row_vertices[row];
        [
            (idx[0], signs[0]),
            (idx[1], signs[1]),
            (idx[2], signs[2]),
            (idx[3], signs[3]),
        ]
    }

    /// Rows touching a given vertex, with the vertex's coefficient in each.
    pub fn vertex_incidence(&self, v: VertexId) -> &[(u32, i8)] {
        &self.incidence[self.lat.index(v)]
    }

    /// Sparse dot product of one row with a flat coefficient slice.
    #[inline]
    pub fn row_dot(&self, row: usize, values: &[T]) -> T {
        let idx = self.row_vertices[row];
        let signs = stencil_signs(self.row_class(row));
        let mut acc = T::zero();
        for k in 0..4 {
            let term = values[idx[k] as usize];
            acc = if signs[k] > 0 { acc + term } else { acc - term };
        }
        acc
    }

    /// Residual of the equality constraint for the system's variant.
    pub fn equality_residual(&self, x: &SurfaceField<T>) -> T {
        match self.variant {
            Variant::MeanZero => x.sum().abs(),
            Variant::Pinned => x.get(VertexId::new(0, 0)).abs(),
        }
    }

    /// Tolerance on row slacks: the 1e-9 absolute contract, widened to a
    /// few ULPs of the scalar type when its epsilon exceeds that (only
    /// relevant for `f32`).
    pub fn row_tolerance(&self) -> T {
        let ulps = T::epsilon()
            * T::from_f64_lit(64.0)
            * T::one().max(self.slack.max());
        T::from_f64_lit(FEASIBILITY_TOL).max(ulps)
    }

    /// Feasibility report: every row within `s_r + 1e-9` and the equality
    /// residual within `1e-9·n²`.
    pub fn membership(&self, x: &SurfaceField<T>) -> Result<MembershipReport<T>> {
        if x.len() != self.lat.vertex_count() {
            return Err(Error::DimensionMismatch {
                expected: self.lat.vertex_count(),
                got: x.len(),
            });
        }
        let tol = self.row_tolerance();
        let values = x.as_slice();
        let mut worst = T::neg_infinity();
        for row in 0..self.row_count() {
            let v = self.row_dot(row, values) - self.row_rhs(row);
            worst = worst.max(v);
        }
        let eq = self.equality_residual(x);
        let eq_tol = tol * T::from_f64_lit(self.lat.vertex_count() as f64);
        Ok(MembershipReport {
            feasible: worst <= tol && eq <= eq_tol,
            worst_violation: worst,
            equality_residual: eq,
        })
    }
}

/// Outcome of a membership test.
#[derive(Debug, Clone, Copy)]
pub struct MembershipReport<T> {
    pub feasible: bool,
    /// `max over rows of (lhs - rhs)`; nonpositive inside the polytope.
    pub worst_violation: T,
    pub equality_residual: T,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::VertexId as V;
    use proptest::prelude::*;

    fn window_field(n: usize, f: impl Fn(i64, i64) -> f64) -> SurfaceField<f64> {
        SurfaceField::from_fn(n, |v| f(v.v1 as i64, v.v2 as i64))
    }

    #[test]
    fn constant_fields_have_zero_hessian() {
        let x = SurfaceField::<f64>::from_fn(5, |_| 3.25);
        for (r, v) in TorusLattice::new(5).unwrap().rhombi() {
            assert_eq!(hessian_edge(&x, r, v), 0.0);
        }
    }

    #[test]
    fn product_monomial_class1_no_wrap() {
        // x = v1*v2 evaluated away from the wrap: class-1 hessian is -1.
        let x = window_field(7, |a, b| (a * b) as f64);
        assert_eq!(hessian_edge(&x, EdgeClass::E1, V::new(2, 2)), -1.0);
    }

    #[test]
    fn quadratic_form_gives_unit_hessian_in_all_classes() {
        // v1² - v1·v2 + v2² has hessian +1 for every class on anchors where
        // no stencil index wraps.
        let x = window_field(9, |a, b| (a * a - a * b + b * b) as f64);
        for r in EdgeClass::ALL {
            assert_eq!(hessian_edge(&x, r, V::new(3, 3)), 1.0, "{r:?}");
        }
    }

    #[test]
    fn hessian_all_matches_pointwise_and_zero_field() {
        let zero = SurfaceField::<f64>::zeros(4);
        assert!(hessian_all(&zero).as_slice().iter().all(|&h| h == 0.0));

        let x = window_field(4, |a, b| (a * a) as f64 - 0.5 * (b as f64));
        let table = hessian_all(&x);
        for (r, v) in TorusLattice::new(4).unwrap().rhombi() {
            assert_eq!(table.get(r, v), hessian_edge(&x, r, v));
        }
    }

    #[test]
    fn system_shape_and_row_structure() {
        let s = SlackVector::new(2.0, 2.5, 3.0).unwrap();
        let sys = ConstraintSystem::build(3, s, Variant::MeanZero).unwrap();
        assert_eq!(sys.row_count(), 27);
        let mut per_class = [0usize; 3];
        for row in 0..sys.row_count() {
            per_class[sys.row_class(row).index()] += 1;
            let entries = sys.row_entries(row);
            let total: i32 = entries.iter().map(|&(_, c)| c as i32).sum();
            assert_eq!(total, 0);
            assert_eq!(sys.row_rhs(row), s.get(sys.row_class(row)));
        }
        assert_eq!(per_class, [9, 9, 9]);
        for v in sys.lattice().vertices() {
            assert_eq!(sys.vertex_incidence(v).len(), 12);
        }
    }

    #[test]
    fn n2_rows_touch_all_four_vertices() {
        let s = SlackVector::splat(2.0f64).unwrap();
        let sys = ConstraintSystem::build(2, s, Variant::MeanZero).unwrap();
        assert_eq!(sys.row_count(), 12);
        for row in 0..12 {
            let mut verts: Vec<u32> = sys.row_entries(row).iter().map(|&(i, _)| i).collect();
            verts.sort_unstable();
            assert_eq!(verts, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn membership_zero_field_feasible() {
        let sys =
            ConstraintSystem::build(4, SlackVector::splat(2.0f64).unwrap(), Variant::MeanZero)
                .unwrap();
        let rep = sys.membership(&SurfaceField::zeros(4)).unwrap();
        assert!(rep.feasible);
        assert!(rep.worst_violation <= 0.0);
        assert_eq!(rep.equality_residual, 0.0);
    }

    #[test]
    fn membership_big_spike_infeasible() {
        // +M at (0,0) and -M at (1,0): the class-0 stencil anchored at
        // (0,0) carries +x(0,0) - x(1,0), so its row reads 2M > s0.
        let m = 4.0f64.powi(4) * 16.0; // n^4 with n = 4, comfortably large
        let mut x = SurfaceField::<f64>::zeros(4);
        x.set(V::new(0, 0), m);
        x.set(V::new(1, 0), -m);
        let x = x.centered();
        let sys =
            ConstraintSystem::build(4, SlackVector::splat(2.0f64).unwrap(), Variant::MeanZero)
                .unwrap();
        let rep = sys.membership(&x).unwrap();
        assert!(!rep.feasible);
        assert!(rep.worst_violation >= m);
        // direct evaluation of the straddling stencil
        assert!(hessian_edge(&x, EdgeClass::E0, V::new(0, 0)) >= 2.0 * m - 1e-6);
    }

    #[test]
    fn pinned_variant_accepts_unit_cube_corners() {
        // With the canonical slack every 0/1 field pinned at the origin is
        // feasible: a ±1 row over 0/1 values is at most 2 = s0 ≤ s_r.
        let s = SlackVector::new(2.0f64, 2.0, 3.0).unwrap();
        let sys = ConstraintSystem::build(3, s, Variant::Pinned).unwrap();
        assert!(sys
            .membership(&SurfaceField::zeros(3))
            .unwrap()
            .feasible);
        for pattern in [0b101010101usize, 0b011011010, 0b000000110, 0b111111110] {
            let x = SurfaceField::from_fn(3, |v| {
                let i = v.v1 * 3 + v.v2;
                if i == 0 {
                    0.0
                } else {
                    ((pattern >> i) & 1) as f64
                }
            });
            let rep = sys.membership(&x).unwrap();
            assert!(rep.feasible, "pattern {pattern:b}: {rep:?}");
        }
    }

    #[test]
    fn translation_permutes_hessian_table() {
        let x = window_field(5, |a, b| ((a * a * b) % 7) as f64 - 2.0);
        let t = hessian_all(&x);
        let shifted = hessian_all(&x.translated(2, 3));
        let lat = TorusLattice::new(5).unwrap();
        for (r, v) in lat.rhombi() {
            let tv = lat.translate(v, 2, 3);
            assert!((shifted.get(r, tv) - t.get(r, v)).abs() < 1e-12);
        }
    }

    #[test]
    fn feasible_translates_stay_feasible() {
        let s = SlackVector::splat(2.0f64).unwrap();
        let sys = ConstraintSystem::build(4, s, Variant::MeanZero).unwrap();
        // A modest feasible field: scaled spike kept within slack.
        let mut x = SurfaceField::<f64>::zeros(4);
        x.set(V::new(2, 1), 0.9);
        let x = x.centered();
        assert!(sys.membership(&x).unwrap().feasible);
        for (u1, u2) in [(1, 0), (3, 2), (0, 3)] {
            assert!(sys.membership(&x.translated(u1, u2)).unwrap().feasible);
        }
    }

    proptest! {
        #[test]
        fn hessian_is_linear(seed in 0u64..500) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = 4;
            let x = SurfaceField::<f64>::from_fn(n, |_| rng.gen_range(-1.0..1.0));
            let y = SurfaceField::<f64>::from_fn(n, |_| rng.gen_range(-1.0..1.0));
            let a: f64 = rng.gen_range(-2.0..2.0);
            let combo = SurfaceField::from_values(
                n,
                x.as_slice()
                    .iter()
                    .zip(y.as_slice())
                    .map(|(&u, &v)| a * u + v)
                    .collect(),
            )
            .unwrap();
            let hx = hessian_all(&x);
            let hy = hessian_all(&y);
            let hc = hessian_all(&combo);
            for (i, &h) in hc.as_slice().iter().enumerate() {
                let want = a * hx.as_slice()[i] + hy.as_slice()[i];
                prop_assert!((h - want).abs() < 1e-9);
            }
        }

        #[test]
        fn scaling_preserves_feasibility(lambda in 0.0f64..3.0) {
            let s = SlackVector::splat(2.0f64).unwrap();
            let sys = ConstraintSystem::build(3, s, Variant::MeanZero).unwrap();
            let mut x = SurfaceField::<f64>::zeros(3);
            x.set(V::new(1, 1), 0.8);
            let x = x.centered();
            prop_assume!(sys.membership(&x).unwrap().feasible);
            let scaled_sys = ConstraintSystem::build(
                3,
                s.scaled(lambda),
                Variant::MeanZero,
            )
            .unwrap();
            prop_assert!(scaled_sys.membership(&x.scaled(lambda)).unwrap().feasible);
        }
    }
}
