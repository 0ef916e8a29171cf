//! The weighted second-difference operator `Δ`, its closed-form spectrum on
//! torus characters, the block-averaging operator `Φ`, and the averaged
//! norm floor check.
//!
//! `Δ` acts by convolution: twice its action on a field is the
//! weight-combination of pairs of shifted class stencils,
//!
//! ```text
//! 2(Δ∗f)(v) = w0·(D0 f(v−(1,1)) + D0 f(v−(1,0)))
//!           + w1·(D1 f(v)       + D1 f(v−(1,1)))
//!           + w2·(D2 f(v−(1,1)) + D2 f(v−(0,1)))
//! ```
//!
//! which rearranges to a seven-point stencil with coefficients
//! `alpha = -w0+w1+w2`, `beta = w0-w1+w2`, `gamma = w0+w1-w2` along the
//! three lattice axes. The characters `φ(i,j) = ω^(î·i + ĵ·j)` diagonalize
//! it with eigenvalues
//! `λ = -2·(alpha·sin²(π·ĵ/n) + beta·sin²(π·(î+ĵ)/n) + gamma·sin²(π·î/n))`.
//!
//! A fast-transform route computes the same convolution through the
//! spectrum; both paths must agree to 1e-9, which exercises the eigenvalue
//! formula end to end.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::field::SurfaceField;
use crate::hessian::{hessian_edge, ConstraintSystem, SlackVector, Variant};
use crate::scalar::Scalar;
use crate::torus::{EdgeClass, TorusLattice};
use crate::volume::FacetWeights;
use crate::{Error, Result};

/// Strictly positive per-class weights with the derived axis coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralWeights<T> {
    w: [T; 3],
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
}

impl<T: Scalar> SpectralWeights<T> {
    pub fn new(w0: T, w1: T, w2: T) -> Result<SpectralWeights<T>> {
        if !(w0 > T::zero() && w1 > T::zero() && w2 > T::zero()) {
            return Err(Error::InvalidParameter(
                "spectral weights must be strictly positive".into(),
            ));
        }
        Ok(SpectralWeights {
            w: [w0, w1, w2],
            alpha: -w0 + w1 + w2,
            beta: w0 - w1 + w2,
            gamma: w0 + w1 - w2,
        })
    }

    pub fn get(&self, r: EdgeClass) -> T {
        self.w[r.index()]
    }

    pub fn as_array(&self) -> [T; 3] {
        self.w
    }

    pub fn dot_slack(&self, s: &SlackVector<T>) -> T {
        let sv = s.as_array();
        self.w[0] * sv[0] + self.w[1] * sv[1] + self.w[2] * sv[2]
    }
}

impl SpectralWeights<f64> {
    pub fn from_facet_weights(fw: &FacetWeights) -> Result<SpectralWeights<f64>> {
        SpectralWeights::new(fw.w0, fw.w1, fw.w2)
    }
}

/// Frequency pair `(î, ĵ)` of a torus character, taken mod `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CharacterIndex {
    pub i_hat: usize,
    pub j_hat: usize,
}

/// Applies `Δ` by direct stencil convolution.
pub fn laplacian_apply<T: Scalar>(
    w: &SpectralWeights<T>,
    x: &SurfaceField<T>,
) -> SurfaceField<T> {
    let n = x.side();
    let lat = TorusLattice::new(n).expect("field side >= 2");
    let half = T::from_f64_lit(0.5);
    SurfaceField::from_fn(n, |v| {
        let v1 = v.v1 as i64;
        let v2 = v.v2 as i64;
        let d0 = hessian_edge(x, EdgeClass::E0, lat.vertex(v1 - 1, v2 - 1))
            + hessian_edge(x, EdgeClass::E0, lat.vertex(v1 - 1, v2));
        let d1 = hessian_edge(x, EdgeClass::E1, lat.vertex(v1, v2))
            + hessian_edge(x, EdgeClass::E1, lat.vertex(v1 - 1, v2 - 1));
        let d2 = hessian_edge(x, EdgeClass::E2, lat.vertex(v1 - 1, v2 - 1))
            + hessian_edge(x, EdgeClass::E2, lat.vertex(v1, v2 - 1));
        half * (w.get(EdgeClass::E0) * d0 + w.get(EdgeClass::E1) * d1 + w.get(EdgeClass::E2) * d2)
    })
}

/// Closed-form eigenvalue of `Δ` on the character `(î, ĵ)`.
pub fn laplacian_eigenvalue<T: Scalar>(
    w: &SpectralWeights<T>,
    n: usize,
    k: CharacterIndex,
) -> T {
    let pi_over_n = std::f64::consts::PI / n as f64;
    let sin2 = |f: usize| {
        let v = (pi_over_n * f as f64).sin();
        T::from_f64_lit(v * v)
    };
    let two = T::from_f64_lit(2.0);
    -two * (w.alpha * sin2(k.j_hat % n)
        + w.beta * sin2((k.i_hat + k.j_hat) % n)
        + w.gamma * sin2(k.i_hat % n))
}

/// Real and imaginary parts of the character `(î, ĵ)` as torus fields.
pub fn character_parts<T: Scalar>(
    n: usize,
    k: CharacterIndex,
) -> (SurfaceField<T>, SurfaceField<T>) {
    let base = 2.0 * std::f64::consts::PI / n as f64;
    let re = SurfaceField::from_fn(n, |v| {
        T::from_f64_lit((base * ((k.i_hat * v.v1 + k.j_hat * v.v2) as f64)).cos())
    });
    let im = SurfaceField::from_fn(n, |v| {
        T::from_f64_lit((base * ((k.i_hat * v.v1 + k.j_hat * v.v2) as f64)).sin())
    });
    (re, im)
}

/// Applies `Δ` through the two-dimensional discrete Fourier transform:
/// forward transform, multiply by the eigenvalues, inverse transform.
/// Internally `f64`; agrees with the direct stencil to 1e-9.
pub fn laplacian_apply_fft<T: Scalar>(
    w: &SpectralWeights<T>,
    x: &SurfaceField<T>,
) -> SurfaceField<T> {
    let n = x.side();
    let wf = SpectralWeights::<f64>::new(
        w.get(EdgeClass::E0).to_f64_lossy(),
        w.get(EdgeClass::E1).to_f64_lossy(),
        w.get(EdgeClass::E2).to_f64_lossy(),
    )
    .expect("weights already validated");

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);

    let mut grid: Vec<Complex<f64>> = x
        .as_slice()
        .iter()
        .map(|&v| Complex::new(v.to_f64_lossy(), 0.0))
        .collect();

    let fft_columns = |grid: &mut Vec<Complex<f64>>, plan: &std::sync::Arc<dyn rustfft::Fft<f64>>| {
        let mut scratch = vec![Complex::new(0.0, 0.0); n];
        for col in 0..n {
            for row in 0..n {
                scratch[row] = grid[row * n + col];
            }
            plan.process(&mut scratch);
            for row in 0..n {
                grid[row * n + col] = scratch[row];
            }
        }
    };

    // rows transform the v2 axis (frequency ĵ), columns the v1 axis (î)
    for row in 0..n {
        forward.process(&mut grid[row * n..(row + 1) * n]);
    }
    fft_columns(&mut grid, &forward);

    for i_hat in 0..n {
        for j_hat in 0..n {
            let lambda = laplacian_eigenvalue(&wf, n, CharacterIndex { i_hat, j_hat });
            grid[i_hat * n + j_hat] *= lambda;
        }
    }

    for row in 0..n {
        inverse.process(&mut grid[row * n..(row + 1) * n]);
    }
    fft_columns(&mut grid, &inverse);

    let scale = 1.0 / (n * n) as f64;
    SurfaceField::from_values(
        n,
        grid.iter().map(|c| T::from_f64_lit(c.re * scale)).collect(),
    )
    .expect("fft output is finite")
}

/// Block average over the centered `n1 x n1` square, divided by
/// `m = n1² - 1` (not `n1²`): `(Φ∗x)(v) = (1/m)·Σ_{‖δ‖∞ ≤ (n1-1)/2} x(v+δ)`.
///
/// `n1` must be odd with `3 ≤ n1 ≤ n`.
pub fn phi_apply<T: Scalar>(n1: usize, x: &SurfaceField<T>) -> Result<SurfaceField<T>> {
    let n = x.side();
    if n1 % 2 == 0 || n1 < 3 || n1 > n {
        return Err(Error::InvalidParameter(format!(
            "phi block side must be odd with 3 <= n1 <= {n}, got {n1}"
        )));
    }
    let h = (n1 as i64 - 1) / 2;
    let m = T::from_f64_lit((n1 * n1 - 1) as f64);
    Ok(SurfaceField::from_fn(n, |v| {
        let mut acc = T::zero();
        for a in -h..=h {
            for b in -h..=h {
                acc = acc + x.get_wrapped(v.v1 as i64 + a, v.v2 as i64 + b);
            }
        }
        acc / m
    }))
}

/// One `ℓ_p` comparison inside a [`PhiFloorReport`].
#[derive(Debug, Clone, Copy)]
pub struct PhiFloorEntry {
    /// `f64::INFINITY` encodes the sup norm.
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Outcome of the block-averaged norm floor check.
///
/// The floor states that `‖Φ∗x‖_p > (eps0·n²/2)·(eps0·n/(32·s2))^(2/p)`
/// for feasible `x` with `‖x‖∞ ≥ eps0·n²`, provided the block side is
/// small enough (`n1 < eps0·n/(64·s2)`). When a precondition fails the
/// report is marked inapplicable but the comparisons are still computed.
#[derive(Debug, Clone)]
pub struct PhiFloorReport {
    pub applicable: bool,
    pub feasible: bool,
    pub norm_precondition: bool,
    pub scale_precondition: bool,
    pub entries: Vec<PhiFloorEntry>,
}

pub fn phi_floor_report<T: Scalar>(
    x: &SurfaceField<T>,
    s: &SlackVector<T>,
    eps0: f64,
    n1: usize,
) -> Result<PhiFloorReport> {
    let n = x.side();
    let sys = ConstraintSystem::build(n, *s, Variant::MeanZero)?;
    let feasible = sys.membership(x)?.feasible;
    let norm_precondition = x.norm_linf().to_f64_lossy() >= eps0 * (n * n) as f64;
    let s2 = s.get(EdgeClass::E2).to_f64_lossy();
    let scale_precondition = (n1 as f64) < eps0 * n as f64 / (64.0 * s2);

    let averaged = phi_apply(n1, x)?;
    let base = eps0 * (n * n) as f64 / 2.0;
    let factor = eps0 * n as f64 / (32.0 * s2);
    let entries = [1.0, 2.0, f64::INFINITY]
        .into_iter()
        .map(|p| {
            let lhs = if p.is_infinite() {
                averaged.norm_linf().to_f64_lossy()
            } else {
                averaged.norm_lp(p).to_f64_lossy()
            };
            let rhs = if p.is_infinite() {
                base
            } else {
                base * factor.powf(2.0 / p)
            };
            PhiFloorEntry {
                p,
                lhs,
                rhs,
                holds: lhs > rhs,
            }
        })
        .collect();
    Ok(PhiFloorReport {
        applicable: feasible && norm_precondition && scale_precondition,
        feasible,
        norm_precondition,
        scale_precondition,
        entries,
    })
}

/// Spectrum dump rows `(î, ĵ, λ)` in row-major frequency order.
pub fn spectrum_rows(w: &SpectralWeights<f64>, n: usize) -> Vec<(usize, usize, f64)> {
    let mut rows = Vec::with_capacity(n * n);
    for i_hat in 0..n {
        for j_hat in 0..n {
            rows.push((
                i_hat,
                j_hat,
                // + 0.0 normalizes the zero mode's negative zero
                laplacian_eigenvalue(w, n, CharacterIndex { i_hat, j_hat }) + 0.0,
            ));
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_weights() -> SpectralWeights<f64> {
        SpectralWeights::new(1.0, 1.0, 1.0).unwrap()
    }

    fn random_field(n: usize, seed: u64) -> SurfaceField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SurfaceField::from_fn(n, |_| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn axis_coefficients() {
        let w = SpectralWeights::new(1.0, 2.0, 4.0).unwrap();
        assert_eq!((w.alpha, w.beta, w.gamma), (5.0, 3.0, -1.0));
        assert_eq!(w.alpha + w.beta + w.gamma, 7.0);
        assert!(SpectralWeights::new(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn constants_annihilated_and_output_mean_zero() {
        let w = unit_weights();
        let c = SurfaceField::from_fn(5, |_| 2.75);
        assert!(laplacian_apply(&w, &c)
            .as_slice()
            .iter()
            .all(|&v| v.abs() < 1e-12));
        let x = random_field(6, 3);
        let out = laplacian_apply(&w, &x);
        assert!(out.sum().abs() < 1e-9);
    }

    #[test]
    fn quoted_eigenvalue_and_character_action() {
        let w = unit_weights();
        let k = CharacterIndex { i_hat: 2, j_hat: 2 };
        let lambda = laplacian_eigenvalue(&w, 4, k);
        assert!((lambda + 4.0).abs() < 1e-12);
        let (re, _) = character_parts::<f64>(4, k);
        let out = laplacian_apply(&w, &re);
        for (o, r) in out.as_slice().iter().zip(re.as_slice()) {
            assert!((o - lambda * r).abs() < 1e-9);
        }
        assert_eq!(laplacian_eigenvalue(&w, 4, CharacterIndex { i_hat: 0, j_hat: 0 }), 0.0);
    }

    #[test]
    fn conjugate_symmetry() {
        let w = SpectralWeights::new(0.7f64, 1.3, 2.1).unwrap();
        let n = 7;
        for i in 0..n {
            for j in 0..n {
                let a = laplacian_eigenvalue(&w, n, CharacterIndex { i_hat: i, j_hat: j });
                let b = laplacian_eigenvalue(
                    &w,
                    n,
                    CharacterIndex {
                        i_hat: (n - i) % n,
                        j_hat: (n - j) % n,
                    },
                );
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn characters_are_eigenfields() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [3usize, 5, 8] {
            let w = SpectralWeights::new(
                rng.gen_range(0.1..2.0),
                rng.gen_range(0.1..2.0),
                rng.gen_range(0.1..2.0),
            )
            .unwrap();
            for i_hat in 0..n {
                for j_hat in 0..n {
                    let k = CharacterIndex { i_hat, j_hat };
                    let lambda = laplacian_eigenvalue(&w, n, k);
                    let (re, im) = character_parts::<f64>(n, k);
                    for part in [re, im] {
                        let out = laplacian_apply(&w, &part);
                        for (o, p) in out.as_slice().iter().zip(part.as_slice()) {
                            assert!((o - lambda * p).abs() < 1e-9, "n={n} k={k:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn self_adjoint() {
        let w = SpectralWeights::new(0.4, 1.1, 0.9).unwrap();
        let x = random_field(6, 11);
        let y = random_field(6, 12);
        let dx = laplacian_apply(&w, &x);
        let dy = laplacian_apply(&w, &y);
        let left: f64 = dx.as_slice().iter().zip(y.as_slice()).map(|(a, b)| a * b).sum();
        let right: f64 = x.as_slice().iter().zip(dy.as_slice()).map(|(a, b)| a * b).sum();
        assert!((left - right).abs() < 1e-9);
    }

    #[test]
    fn fft_path_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in [4usize, 6, 9] {
            let w = SpectralWeights::new(
                rng.gen_range(0.1..3.0),
                rng.gen_range(0.1..3.0),
                rng.gen_range(0.1..3.0),
            )
            .unwrap();
            let x = random_field(n, 100 + n as u64);
            let direct = laplacian_apply(&w, &x);
            let fast = laplacian_apply_fft(&w, &x);
            for (a, b) in direct.as_slice().iter().zip(fast.as_slice()) {
                assert!((a - b).abs() < 1e-9, "n={n}");
            }
        }
    }

    #[test]
    fn cone_weights_give_negative_spectrum_off_zero() {
        let w = SpectralWeights::new(1.0, 1.2, 1.5).unwrap();
        assert!(w.alpha > 0.0 && w.beta > 0.0 && w.gamma > 0.0);
        for n in [4usize, 7] {
            for (i, j, l) in spectrum_rows(&w, n) {
                if (i, j) != (0, 0) {
                    assert!(l < 0.0, "n={n} ({i},{j})");
                } else {
                    assert_eq!(l, 0.0);
                }
            }
        }
    }

    #[test]
    fn single_degenerate_axis_still_vanishes_only_at_zero() {
        // gamma = 0 at w2 = w0 + w1; the two active sin² terms vanish
        // together only at the zero frequency.
        let w = SpectralWeights::new(1.0, 1.0, 2.0).unwrap();
        assert_eq!(w.gamma, 0.0);
        let n = 6;
        for (i, j, l) in spectrum_rows(&w, n) {
            let active_zero = (j % n == 0) && ((i + j) % n == 0);
            if active_zero {
                assert!(l.abs() < 1e-12, "({i},{j})");
            } else {
                assert!(l < -1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn phi_constant_and_sum_scaling() {
        let n1 = 3;
        let m = (n1 * n1 - 1) as f64;
        let c = SurfaceField::from_fn(7, |_| 1.5);
        let out = phi_apply(n1, &c).unwrap();
        for &v in out.as_slice() {
            assert!((v - 1.5 * 9.0 / m).abs() < 1e-12);
        }
        let x = random_field(7, 9);
        let out = phi_apply(n1, &x).unwrap();
        assert!((out.sum() - x.sum() * 9.0 / m).abs() < 1e-9);
    }

    #[test]
    fn phi_commutes_with_laplacian() {
        let w = SpectralWeights::new(0.8, 1.4, 2.2).unwrap();
        let x = random_field(9, 33);
        let a = phi_apply(3, &laplacian_apply(&w, &x)).unwrap();
        let b = laplacian_apply(&w, &phi_apply(3, &x).unwrap());
        for (u, v) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn phi_rejects_bad_block_side() {
        let x = SurfaceField::<f64>::zeros(8);
        assert!(phi_apply(4, &x).is_err());
        assert!(phi_apply(1, &x).is_err());
        assert!(phi_apply(9, &x).is_err());
    }

    #[test]
    fn floor_report_zero_field_inapplicable() {
        let s = SlackVector::splat(2.0f64).unwrap();
        let x = SurfaceField::<f64>::zeros(8);
        let rep = phi_floor_report(&x, &s, 0.5, 3).unwrap();
        assert!(!rep.applicable);
        assert!(rep.feasible);
        assert!(!rep.norm_precondition);
    }

    #[test]
    fn floor_holds_for_witness_at_large_side() {
        // Direct evaluation on the diameter witness at n = 32 with eps0 at
        // its own sup-norm level: the block average keeps more than half
        // the peak, so the sup entry holds (the block-side precondition is
        // unattainable here and the report says so).
        let s = SlackVector::splat(2.0f64).unwrap();
        let (w, linf) = crate::quadratic::diameter_witness(32, &s).unwrap();
        let eps0 = linf / (32.0 * 32.0);
        let rep = phi_floor_report(&w, &s, eps0, 3).unwrap();
        assert!(rep.feasible && rep.norm_precondition);
        assert!(!rep.scale_precondition && !rep.applicable);
        let sup = rep.entries.iter().find(|e| e.p.is_infinite()).unwrap();
        assert!(sup.holds, "lhs {} rhs {}", sup.lhs, sup.rhs);
    }

    #[test]
    fn floor_report_sup_entry_reduces_to_half_norm() {
        let s = SlackVector::splat(2.0f64).unwrap();
        let x = SurfaceField::<f64>::zeros(8);
        let rep = phi_floor_report(&x, &s, 0.25, 3).unwrap();
        let sup = rep.entries.iter().find(|e| e.p.is_infinite()).unwrap();
        assert!((sup.rhs - 0.25 * 64.0 / 2.0).abs() < 1e-12);
    }
}
