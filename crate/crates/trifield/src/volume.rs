//! Volume of the slack polytope: an exact vertex-enumeration oracle at
//! `n = 2`, a multiphase Monte Carlo estimator for larger sides, facet
//! weights by central finite differences, and the weight-cone test.
//!
//! All volumes are the intrinsic `(n²-1)`-dimensional Lebesgue measure of
//! the polytope inside the mean-zero hyperplane, with the orthonormal
//! convention (the ambient Euclidean metric restricted to the hyperplane).
//!
//! The Monte Carlo estimator anneals over the bodies
//! `K_i = P ∩ B(0, r_i)` with radii growing geometrically by `2^(1/(n²-1))`
//! from a ball that is entirely inside the polytope up to one containing
//! it. Each ratio `|K_i|/|K_{i+1}|` is the acceptance fraction of
//! hit-and-run samples of `K_{i+1}` landing in `K_i`; only a membership
//! oracle is needed and the base volume is a closed-form ball volume.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::hessian::{ConstraintSystem, SlackVector, Variant};
use crate::sampler::{chord_unchecked, random_direction, ChainConfig};
use crate::torus::EdgeClass;
use crate::{Error, Result};

/// How a volume figure was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeMethod {
    Exact,
    Annealed,
}

/// Natural log of the `(n²-1)`-dimensional volume, with its standard
/// error (zero for the exact oracle).
#[derive(Debug, Clone, Copy)]
pub struct VolumeEstimate {
    pub log_volume: f64,
    pub stderr_log: f64,
    pub method: VolumeMethod,
}

/// Per-class facet weights `(1/n²)·∂|P_n(s)|/∂s_r` from central finite
/// differences of step `fd_step`.
#[derive(Debug, Clone, Copy)]
pub struct FacetWeights {
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
    pub n: usize,
    pub fd_step: f64,
}

impl FacetWeights {
    pub fn as_array(&self) -> [f64; 3] {
        [self.w0, self.w1, self.w2]
    }

    pub fn dot(&self, s: &SlackVector<f64>) -> f64 {
        let [s0, s1, s2] = s.as_array();
        self.w0 * s0 + self.w1 * s1 + self.w2 * s2
    }
}

/// Default finite-difference step: `0.05·min(s)`, balancing the O(δ²)
/// bias of the piecewise-polynomial volume against Monte Carlo noise.
pub fn default_fd_step(s: &SlackVector<f64>) -> f64 {
    0.05 * s.min()
}

/// `exp(log_volume/(n²-1))`: the per-dimension normalized volume.
pub fn normalized_f(est: &VolumeEstimate, n: usize) -> f64 {
    (est.log_volume / (n * n - 1) as f64).exp()
}

/// True when every component is positive and strictly less than the sum of
/// the other two.
pub fn cone_membership(w: &FacetWeights) -> bool {
    let [a, b, c] = w.as_array();
    a > 0.0 && b > 0.0 && c > 0.0 && a < b + c && b < a + c && c < a + b
}

// ---------------------------------------------------------------------------
// exact oracle at n = 2
// ---------------------------------------------------------------------------

/// Orthonormal basis of the mean-zero hyperplane of R⁴, vertex order
/// (0,0), (0,1), (1,0), (1,1).
const N2_BASIS: [[f64; 4]; 3] = [
    [0.5, 0.5, -0.5, -0.5],
    [0.5, -0.5, -0.5, 0.5],
    [0.5, -0.5, 0.5, -0.5],
];

fn n2_rows(s: &SlackVector<f64>) -> Vec<([f64; 3], f64)> {
    let sys = ConstraintSystem::build(2, *s, Variant::MeanZero).expect("n = 2 system");
    let mut rows = Vec::with_capacity(sys.row_count());
    for row in 0..sys.row_count() {
        let mut coeff = [0.0f64; 4];
        for (idx, sign) in sys.row_entries(row) {
            coeff[idx as usize] += sign as f64;
        }
        let mut a = [0.0f64; 3];
        for (j, basis) in N2_BASIS.iter().enumerate() {
            a[j] = coeff.iter().zip(basis).map(|(c, b)| c * b).sum();
        }
        rows.push((a, sys.row_rhs(row)));
    }
    rows
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Vertices of `P_2(s)` in the orthonormal hyperplane coordinates, from
/// enumeration of all triples of active rows.
pub fn vertices_n2(s: &SlackVector<f64>) -> Vec<[f64; 3]> {
    let rows = n2_rows(s);
    let mut found: Vec<[f64; 3]> = Vec::new();
    let m = rows.len();
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                let mat = [rows[i].0, rows[j].0, rows[k].0];
                let d = det3(&mat);
                if d.abs() < 1e-9 {
                    continue;
                }
                let rhs = [rows[i].1, rows[j].1, rows[k].1];
                let mut y = [0.0f64; 3];
                for c in 0..3 {
                    let mut mc = mat;
                    for r in 0..3 {
                        mc[r][c] = rhs[r];
                    }
                    y[c] = det3(&mc) / d;
                }
                let feasible = rows.iter().all(|(a, b)| {
                    a[0] * y[0] + a[1] * y[1] + a[2] * y[2] <= b + 1e-9
                });
                if feasible
                    && !found
                        .iter()
                        .any(|v| v.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-7))
                {
                    found.push(y);
                }
            }
        }
    }
    found
}

/// Exact volume of `P_2(s)` by vertex enumeration and a centroid fan of
/// tetrahedra over the facet polygons. Exact up to linear-algebra
/// round-off; degenerate slacks yield volume zero.
pub fn exact_volume_n2(s: &SlackVector<f64>) -> VolumeEstimate {
    let verts = vertices_n2(s);
    let vol = if verts.len() < 4 {
        0.0
    } else {
        let mut c = [0.0f64; 3];
        for v in &verts {
            for k in 0..3 {
                c[k] += v[k] / verts.len() as f64;
            }
        }
        // unique facet planes (rows repeat at n = 2)
        let mut planes: Vec<([f64; 3], f64)> = Vec::new();
        for (a, b) in n2_rows(s) {
            let norm = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
            if norm < 1e-12 {
                continue;
            }
            let unit = [a[0] / norm, a[1] / norm, a[2] / norm];
            let off = b / norm;
            if !planes.iter().any(|(u, o)| {
                (o - off).abs() < 1e-9 && u.iter().zip(&unit).all(|(x, y)| (x - y).abs() < 1e-9)
            }) {
                planes.push((unit, off));
            }
        }
        let mut total = 0.0;
        for (unit, off) in planes {
            let on_plane: Vec<[f64; 3]> = verts
                .iter()
                .copied()
                .filter(|v| (v[0] * unit[0] + v[1] * unit[1] + v[2] * unit[2] - off).abs() < 1e-6)
                .collect();
            if on_plane.len() < 3 {
                continue;
            }
            // orthonormal basis of the facet plane
            let pick = if unit[0].abs() < 0.9 {
                [1.0, 0.0, 0.0]
            } else {
                [0.0, 1.0, 0.0]
            };
            let dot = pick[0] * unit[0] + pick[1] * unit[1] + pick[2] * unit[2];
            let mut t1 = [
                pick[0] - dot * unit[0],
                pick[1] - dot * unit[1],
                pick[2] - dot * unit[2],
            ];
            let t1n = (t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2]).sqrt();
            for v in t1.iter_mut() {
                *v /= t1n;
            }
            let t2 = [
                unit[1] * t1[2] - unit[2] * t1[1],
                unit[2] * t1[0] - unit[0] * t1[2],
                unit[0] * t1[1] - unit[1] * t1[0],
            ];
            let fc = on_plane.iter().fold([0.0f64; 3], |mut acc, v| {
                for k in 0..3 {
                    acc[k] += v[k] / on_plane.len() as f64;
                }
                acc
            });
            let mut pts: Vec<(f64, f64, f64)> = on_plane
                .iter()
                .map(|v| {
                    let rel = [v[0] - fc[0], v[1] - fc[1], v[2] - fc[2]];
                    let u = rel[0] * t1[0] + rel[1] * t1[1] + rel[2] * t1[2];
                    let w = rel[0] * t2[0] + rel[1] * t2[1] + rel[2] * t2[2];
                    (w.atan2(u), u, w)
                })
                .collect();
            pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut area = 0.0;
            for i in 0..pts.len() {
                let (_, x1, y1) = pts[i];
                let (_, x2, y2) = pts[(i + 1) % pts.len()];
                area += x1 * y2 - x2 * y1;
            }
            let area = area.abs() / 2.0;
            let height = off - (c[0] * unit[0] + c[1] * unit[1] + c[2] * unit[2]);
            total += area * height / 3.0;
        }
        total
    };
    VolumeEstimate {
        log_volume: if vol > 0.0 { vol.ln() } else { f64::NEG_INFINITY },
        stderr_log: 0.0,
        method: VolumeMethod::Exact,
    }
}

// ---------------------------------------------------------------------------
// multiphase Monte Carlo estimator
// ---------------------------------------------------------------------------

fn ball_log_volume(dim: usize, radius: f64) -> f64 {
    let d = dim as f64;
    0.5 * d * std::f64::consts::PI.ln() + d * radius.ln() - ln_gamma(0.5 * d + 1.0)
}

struct BallChain {
    rng: ChaCha8Rng,
    x: Vec<f64>,
}

impl BallChain {
    fn new(len: usize, seed: u64, stream: u64) -> BallChain {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        BallChain {
            rng,
            x: vec![0.0; len],
        }
    }

    /// One hit-and-run step inside `P ∩ B(0, radius)`.
    fn step(&mut self, sys: &ConstraintSystem<f64>, radius: f64) {
        let d = random_direction::<f64, _>(Variant::MeanZero, self.x.len(), &mut self.rng);
        let (mut lo, mut hi) = chord_unchecked(sys, &self.x, &d);
        // clip to the ball: ‖x + t·d‖ = radius with ‖d‖ = 1
        let xd: f64 = self.x.iter().zip(&d).map(|(a, b)| a * b).sum();
        let xx: f64 = self.x.iter().map(|a| a * a).sum();
        let disc = (xd * xd - (xx - radius * radius)).max(0.0);
        lo = lo.max(-xd - disc.sqrt());
        hi = hi.min(-xd + disc.sqrt());
        if hi < lo {
            return; // round-off corner; keep the current point
        }
        let t = lo + (hi - lo) * self.rng.gen::<f64>();
        for (xi, di) in self.x.iter_mut().zip(&d) {
            *xi += t * di;
        }
        let mean = self.x.iter().sum::<f64>() / self.x.len() as f64;
        for xi in self.x.iter_mut() {
            *xi -= mean;
        }
    }

    fn norm(&self) -> f64 {
        self.x.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

/// Multiphase Monte Carlo estimate of `log |P_n(s)|`.
///
/// `target_rel_err` sets the aimed-for standard deviation of the log
/// volume (roughly the relative error of the volume). Requires strictly
/// positive slack. Phase reductions are deterministic given the seed and
/// chain count.
pub fn estimate_volume(
    n: usize,
    s: &SlackVector<f64>,
    target_rel_err: f64,
    cfg: &ChainConfig,
) -> Result<VolumeEstimate> {
    if !s.is_strictly_positive() {
        return Err(Error::EmptyInterior(s.as_array()));
    }
    if !(target_rel_err > 0.0 && target_rel_err < 1.0) {
        return Err(Error::InvalidParameter(
            "target_rel_err must lie in (0, 1)".into(),
        ));
    }
    let sys = ConstraintSystem::build(n, *s, Variant::MeanZero)?;
    let dim = n * n - 1;
    // Inner radius: every row has Euclidean norm 2, so the Euclidean ball
    // of radius min(s)/2 sits inside the polytope; stay slightly inside.
    let r0 = 0.499 * s.min() / 2.0;
    // Outer radius from the Lipschitz ceiling ‖x‖∞ ≤ 4n²·max(s).
    let outer = 4.0 * (n as f64).powi(3) * s.max();
    let phases = ((dim as f64) * (outer / r0).log2()).ceil() as usize;
    let ratio = 2.0f64.powf(1.0 / dim as f64);
    let per_phase = ((0.35 * phases as f64 / (target_rel_err * target_rel_err)).ceil() as usize)
        .clamp(400, 400_000);

    let chains = cfg.chains.max(1);
    let mut states: Vec<BallChain> = (0..chains)
        .map(|c| BallChain::new(n * n, cfg.seed, c as u64))
        .collect();
    let burn = 2 * dim + 8;
    let thin = 2;

    let mut log_volume = ball_log_volume(dim, r0);
    let mut variance = 0.0;
    let mut r_lo = r0;
    for _ in 0..phases {
        let r_hi = r_lo * ratio;
        let quota = per_phase / chains + 1;
        let results: Vec<(usize, usize)> = states
            .par_iter_mut()
            .map(|chain| {
                for _ in 0..burn {
                    chain.step(&sys, r_hi);
                }
                let mut hits = 0usize;
                for _ in 0..quota {
                    for _ in 0..thin {
                        chain.step(&sys, r_hi);
                    }
                    if chain.norm() <= r_lo {
                        hits += 1;
                    }
                }
                (hits, quota)
            })
            .collect();
        let hits: usize = results.iter().map(|r| r.0).sum();
        let kept: usize = results.iter().map(|r| r.1).sum();
        let p = (hits as f64 / kept as f64).max(0.5 / kept as f64);
        log_volume += -p.ln();
        variance += (1.0 - p) / (p * kept as f64);
        r_lo = r_hi;
    }
    Ok(VolumeEstimate {
        log_volume,
        stderr_log: variance.sqrt(),
        method: VolumeMethod::Annealed,
    })
}

/// Facet weights by central finite differences. At `n = 2` the exact
/// oracle backs the differences; otherwise the ± volume estimates share
/// the configured seed so that most Monte Carlo noise cancels.
pub fn facet_weights_fd(
    n: usize,
    s: &SlackVector<f64>,
    delta: f64,
    cfg: &ChainConfig,
) -> Result<FacetWeights> {
    if !delta.is_finite() || delta <= 0.0 || delta >= s.min() {
        return Err(Error::InvalidParameter(format!(
            "fd step {delta} must be positive and below min(s) = {}",
            s.min()
        )));
    }
    let mut w = [0.0f64; 3];
    for r in EdgeClass::ALL {
        let plus = s.perturbed(r, delta)?;
        let minus = s.perturbed(r, -delta)?;
        let (vp, vm) = if n == 2 {
            (
                exact_volume_n2(&plus).log_volume.exp(),
                exact_volume_n2(&minus).log_volume.exp(),
            )
        } else {
            let ep = estimate_volume(n, &plus, 0.05, cfg)?;
            let em = estimate_volume(n, &minus, 0.05, cfg)?;
            (ep.log_volume.exp(), em.log_volume.exp())
        };
        w[r.index()] = (vp - vm) / (2.0 * delta * (n * n) as f64);
    }
    Ok(FacetWeights {
        w0: w[0],
        w1: w[1],
        w2: w[2],
        n,
        fd_step: delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slack(s: [f64; 3]) -> SlackVector<f64> {
        SlackVector::new(s[0], s[1], s[2]).unwrap()
    }

    #[test]
    fn exact_volume_is_product_of_slacks() {
        // At n = 2 the polytope is a linear image of the box
        // [-s0,s0]×[-s1,s1]×[-s2,s2] with Jacobian 1/8, so |P_2(s)| =
        // s0·s1·s2. The enumeration oracle must reproduce that.
        for s in [[2.0, 2.0, 2.0], [2.0, 3.0, 5.0], [1.0, 1.0, 4.0]] {
            let est = exact_volume_n2(&slack(s));
            let want = s[0] * s[1] * s[2];
            assert!(
                (est.log_volume.exp() - want).abs() < 1e-9 * want,
                "s={s:?} got {}",
                est.log_volume.exp()
            );
            assert_eq!(est.stderr_log, 0.0);
        }
    }

    #[test]
    fn exact_volume_degenerate_class_is_zero() {
        let est = exact_volume_n2(&slack([0.0, 2.0, 3.0]));
        assert!(est.log_volume == f64::NEG_INFINITY || est.log_volume.exp() < 1e-9);
    }

    #[test]
    fn exact_volume_homogeneity() {
        let a = exact_volume_n2(&slack([2.0, 2.5, 3.0]));
        let b = exact_volume_n2(&slack([4.0, 5.0, 6.0]));
        assert!((b.log_volume - a.log_volume - 3.0 * 2.0f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn vertices_form_the_expected_box() {
        // Rows read 2·y_r ≤ s_r in the orthonormal hyperplane basis, so the
        // vertices sit at (±s0/2, ±s1/2, ±s2/2).
        let verts = vertices_n2(&slack([2.0, 3.0, 5.0]));
        assert_eq!(verts.len(), 8);
        for v in verts {
            for (c, s) in v.iter().zip([2.0, 3.0, 5.0]) {
                assert!((c.abs() - s / 2.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn normalized_f_basics() {
        let est = VolumeEstimate {
            log_volume: 0.0,
            stderr_log: 0.0,
            method: VolumeMethod::Exact,
        };
        assert_eq!(normalized_f(&est, 3), 1.0);
        let est = exact_volume_n2(&slack([2.0, 2.0, 2.0]));
        assert!((normalized_f(&est, 2) - 2.0).abs() < 1e-9); // 8^(1/3)
    }

    #[test]
    fn cone_membership_cases() {
        let mk = |w: [f64; 3]| FacetWeights {
            w0: w[0],
            w1: w[1],
            w2: w[2],
            n: 2,
            fd_step: 0.1,
        };
        assert!(cone_membership(&mk([1.0, 1.0, 1.0])));
        assert!(!cone_membership(&mk([1.0, 2.0, 3.0])));
        assert!(cone_membership(&mk([2.0, 3.0, 4.0])));
        assert!(!cone_membership(&mk([0.0, 1.0, 1.0])));
    }

    #[test]
    fn exact_weights_at_n2() {
        let s = slack([2.0, 2.0, 2.0]);
        let w = facet_weights_fd(2, &s, 0.1, &ChainConfig::default_for(2, 1)).unwrap();
        // |P_2| = s0·s1·s2 is multilinear, so central differences are exact:
        // each weight is s_j·s_k/4 = 1.
        assert!((w.w0 - 1.0).abs() < 1e-9);
        assert!((w.w0 - w.w1).abs() < 1e-9);
        assert!((w.w1 - w.w2).abs() < 1e-9);

        // Euler identity: (1 - 1/n²)⁻¹ Σ s_r·w_r = |P|.
        let total = (1.0 - 0.25f64).recip() * w.dot(&s);
        assert!((total - 8.0).abs() < 1e-9);
    }

    #[test]
    fn anisotropic_weights_lie_in_cone() {
        let s = slack([2.0, 2.0, 4.0]);
        let w = facet_weights_fd(2, &s, 0.1, &ChainConfig::default_for(2, 1)).unwrap();
        assert!((w.w0 - 2.0).abs() < 1e-9);
        assert!((w.w1 - 2.0).abs() < 1e-9);
        assert!((w.w2 - 1.0).abs() < 1e-9);
        assert!(cone_membership(&w));
    }

    #[test]
    fn fd_step_validation() {
        let s = slack([2.0, 2.0, 2.0]);
        assert!(facet_weights_fd(2, &s, 2.0, &ChainConfig::default_for(2, 1)).is_err());
        assert!(facet_weights_fd(2, &s, 0.0, &ChainConfig::default_for(2, 1)).is_err());
    }

    #[test]
    fn estimator_rejects_degenerate_slack() {
        let cfg = ChainConfig::default_for(3, 5);
        assert!(matches!(
            estimate_volume(3, &slack([0.0, 1.0, 1.0]), 0.1, &cfg),
            Err(Error::EmptyInterior(_))
        ));
    }

    /// Soft stabilization diagnostic: |f_{n+1} - f_n| shrinks over
    /// n = 2..6 within combined Monte Carlo error. Minutes of runtime, so
    /// ignored by default: run with
    /// `cargo test -p trifield --release normalized_volume_stabilizes -- --ignored`.
    #[test]
    #[ignore = "long-running diagnostic"]
    fn normalized_volume_stabilizes() {
        let s = slack([2.0, 2.0, 2.0]);
        let mut fs = Vec::new();
        for n in 2..=6usize {
            let est = estimate_volume(n, &s, 0.04, &ChainConfig::default_for(n, 60 + n as u64))
                .unwrap();
            let d = (n * n - 1) as f64;
            let f = normalized_f(&est, n);
            fs.push((f, f * est.stderr_log / d));
        }
        let mut prev_gap = f64::INFINITY;
        for k in 0..fs.len() - 1 {
            let gap = (fs[k + 1].0 - fs[k].0).abs();
            let sigma = 3.0 * (fs[k].1.powi(2) + fs[k + 1].1.powi(2)).sqrt();
            assert!(
                gap <= prev_gap + sigma,
                "gap {gap} after {prev_gap} (3σ = {sigma}) at step {k}"
            );
            prev_gap = gap;
        }
    }

    #[test]
    fn estimator_matches_exact_oracle_at_n2() {
        let s = slack([2.0, 2.0, 2.0]);
        let cfg = ChainConfig::default_for(2, 77);
        let est = estimate_volume(2, &s, 0.05, &cfg).unwrap();
        let rel = (est.log_volume.exp() - 8.0) / 8.0;
        assert!(
            rel.abs() < 0.15,
            "relative error {rel} stderr {}",
            est.stderr_log
        );
    }
}
