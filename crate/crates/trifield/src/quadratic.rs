//! The quadratic surface with prescribed constant hessian, its coarse
//! piecewise-linear interpolation, and the `ℓ∞` diameter witness built from
//! their gap.
//!
//! For slack `s` there is a unique quadratic
//! `q(v1, v2) = A·v1² + B·v1·v2 + C·v2² + a·v1 + b·v2`
//! whose hessian is exactly `-s_r` on every class-`r` rhombus and which
//! vanishes at `(0,0)`, `(n,0)` and `(0,n)`. Interpolating its values on
//! the scale-`n` sublattice linearly over the two big triangles of the
//! fundamental square yields `r ≤ q` (chords of a concave function lie
//! below it); the gap `q - r` is periodic, so it restricts to a field on
//! `V(T_n)`. Centering the negated gap produces a feasible field whose
//! `ℓ∞` norm certifies a diameter lower bound for the polytope.

use crate::field::SurfaceField;
use crate::hessian::SlackVector;
use crate::scalar::Scalar;
use crate::Result;

/// Coefficients of the prescribed-hessian quadratic at side `n`.
///
/// Identities built into the construction (exact on the coefficient
/// level): `2A + B = -s0`, `-B = -s1`, `B + 2C = -s2`, and
/// `q(0,0) = q(n,0) = q(0,n) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCoeffs<T> {
    /// Coefficient of `v1²`.
    pub v11: T,
    /// Coefficient of `v1·v2`.
    pub v12: T,
    /// Coefficient of `v2²`.
    pub v22: T,
    /// Linear coefficient of `v1`.
    pub l1: T,
    /// Linear coefficient of `v2`.
    pub l2: T,
    pub n: usize,
}

impl<T: Scalar> QuadraticCoeffs<T> {
    /// Value at an integer lattice point (no wrapping).
    pub fn eval(&self, v1: i64, v2: i64) -> T {
        let x = T::from_f64_lit(v1 as f64);
        let y = T::from_f64_lit(v2 as f64);
        self.v11 * x * x + self.v12 * x * y + self.v22 * y * y + self.l1 * x + self.l2 * y
    }
}

/// Closed-form quadratic with hessian `-s_r` per class, pinned at the three
/// scale-`n` corners.
pub fn fit_quadratic<T: Scalar>(n: usize, s: &SlackVector<T>) -> QuadraticCoeffs<T> {
    let [s0, s1, s2] = s.as_array();
    let half = T::from_f64_lit(0.5);
    let side = T::from_f64_lit(n as f64);
    QuadraticCoeffs {
        v11: -(s0 + s1) * half,
        v12: s1,
        v22: -(s1 + s2) * half,
        l1: (s0 + s1) * side * half,
        l2: (s1 + s2) * side * half,
        n,
    }
}

/// Piecewise-linear interpolation of `q`'s scale-`n` corner values,
/// evaluated at an integer point of the fundamental square `[0, n]²`.
///
/// The triangulation is the one induced by the convex hull of the sampled
/// points: since `q(n, n) = s1·n² ≥ 0`, the hull splits each square along
/// the `(0,0)-(n,n)` diagonal into `{(0,0), (n,0), (n,n)}` and
/// `{(0,0), (0,n), (n,n)}`. That choice is what makes the interpolation
/// concave, hence the gap one-signed and the witness feasible. The shared
/// diagonal is assigned to the lower-right triangle (the interpolated
/// values agree there, the choice only fixes determinism).
fn coarse_interpolation<T: Scalar>(q: &QuadraticCoeffs<T>, u1: usize, u2: usize) -> T {
    let n = q.n;
    let nf = T::from_f64_lit(n as f64);
    let x = T::from_f64_lit(u1 as f64);
    let y = T::from_f64_lit(u2 as f64);
    if u1 >= u2 {
        let w0 = (nf - x) / nf;
        let w1 = (x - y) / nf;
        let w2 = y / nf;
        w0 * q.eval(0, 0) + w1 * q.eval(n as i64, 0) + w2 * q.eval(n as i64, n as i64)
    } else {
        let w0 = (nf - y) / nf;
        let w1 = (y - x) / nf;
        let w2 = x / nf;
        w0 * q.eval(0, 0) + w1 * q.eval(0, n as i64) + w2 * q.eval(n as i64, n as i64)
    }
}

/// The gap `q - r` between the quadratic and its coarse piecewise-linear
/// interpolation, restricted to the fundamental domain `[0, n)²` and viewed
/// as a torus field.
///
/// The gap is nonnegative, vanishes at the scale-`n` lattice points, and is
/// unchanged when the linear part of `q` is altered (the interpolation
/// reproduces linear functions exactly).
pub fn envelope_gap<T: Scalar>(q: &QuadraticCoeffs<T>) -> SurfaceField<T> {
    SurfaceField::from_fn(q.n, |v| {
        q.eval(v.v1 as i64, v.v2 as i64) - coarse_interpolation(q, v.v1, v.v2)
    })
}

/// Mean-zero witness certifying the `ℓ∞` diameter lower bound
/// [`diameter_floor`]. Returns the field together with its `ℓ∞` norm.
///
/// The witness is the centered negated gap `(r - q) + κ`: its hessian is
/// `-s_r` plus the nonpositive kinks of the concave interpolation, so it is
/// feasible for `s`, and together with the zero field it spans `ℓ∞`
/// distance at least half the maximum gap.
pub fn diameter_witness<T: Scalar>(n: usize, s: &SlackVector<T>) -> Result<(SurfaceField<T>, T)> {
    if n < 2 {
        return Err(crate::Error::InvalidSize(n));
    }
    let gap = envelope_gap(&fit_quadratic(n, s));
    let witness = gap.scaled(-T::one()).centered();
    let linf = witness.norm_linf();
    Ok((witness, linf))
}

/// Quoted diameter lower bound `(s1 + s2)·⌊n/2⌋²/4`.
pub fn diameter_floor<T: Scalar>(n: usize, s: &SlackVector<T>) -> T {
    let [_, s1, s2] = s.as_array();
    let half_floor = T::from_f64_lit(((n / 2) * (n / 2)) as f64);
    (s1 + s2) * half_floor / T::from_f64_lit(4.0)
}
