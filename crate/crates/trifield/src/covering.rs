//! Covering-polytope machinery: scale selection, boundary vertex sets,
//! quantized identifiers, per-block height fields, and the anisotropic
//! surface statistics built from them.
//!
//! A far-out feasible point is covered by the preimage of a quantized slab
//! around its values on a sparse "boundary" vertex set. The number of
//! distinct identifiers `(offset, quantized boundary values)` is what makes
//! the cover useful: it grows like `n^{O(n)}` while the slab preimages
//! shrink much faster. At desk scale this module computes the identifiers,
//! the block heights `h = s_r - D_r x` on an `n1`-grid of blocks inside an
//! `n2 x n2` window, the per-block surface functional `S/m`, and two
//! aggregate statistics whose stated bounds are checked against a measured
//! dot-product excess `eps2`.

use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::SurfaceField;
use crate::hessian::{hessian_all, ConstraintSystem, SlackVector, Variant};
use crate::sampler::{chord_unchecked, random_direction, ChainConfig};
use crate::scalar::Scalar;
use crate::spectral::{laplacian_apply, SpectralWeights};
use crate::torus::{EdgeClass, TorusLattice, VertexId};
use crate::volume::{default_fd_step, estimate_volume, facet_weights_fd, FacetWeights};
use crate::{Error, Result};

/// Derived cover scales: `k = ⌊eps1⁻¹⌋ + 1`, `n2` the largest `k·odd ≤ n`,
/// `n1 = n2/k` (odd by construction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverScales {
    pub n: usize,
    pub eps1: f64,
    pub k: usize,
    pub n2: usize,
    pub n1: usize,
}

impl CoverScales {
    /// Blocks per window side: `n2/n1 = k`.
    pub fn blocks_per_side(&self) -> usize {
        self.k
    }

    /// `m = n1² - 1`, the block normalizer.
    pub fn m(&self) -> usize {
        self.n1 * self.n1 - 1
    }
}

/// Deterministic scale selection. Requires `0 < eps1 < 1` and a torus big
/// enough to hold three blocks per side (`n ≥ 3·(⌊eps1⁻¹⌋+1)`).
pub fn choose_scales(n: usize, eps1: f64) -> Result<CoverScales> {
    if !(eps1 > 0.0 && eps1 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps1 must lie in (0, 1), got {eps1}"
        )));
    }
    let k = (1.0 / eps1 + 1e-9).floor() as usize + 1;
    if n < 3 * k {
        return Err(Error::NoCoverScales(format!(
            "n = {n} admits no odd multiple of k = {k} with at least three blocks"
        )));
    }
    let mut n1 = n / k;
    if n1 % 2 == 0 {
        n1 -= 1;
    }
    let n2 = k * n1;
    debug_assert!(n2 + 2 * (k - 1) + 1 >= n);
    Ok(CoverScales {
        n,
        eps1,
        k,
        n2,
        n1,
    })
}

/// Boundary vertex set for offset `o`: the two-row/two-column grid lines of
/// the `n1`-blocking inside the `[0, n2)²` window, united with the window
/// complement, then translated by `o`. Returned sorted.
pub fn boundary_set(scales: &CoverScales, o: VertexId) -> Vec<VertexId> {
    let n = scales.n;
    let n1 = scales.n1;
    let n2 = scales.n2;
    let lat = TorusLattice::new(n).expect("scales checked");
    let mut out = Vec::new();
    for v1 in 0..n {
        for v2 in 0..n {
            let in_window = v1 < n2 && v2 < n2;
            let on_grid_lines = in_window && (v1 % n1 < 2 || v2 % n1 < 2);
            if on_grid_lines || !in_window {
                out.push(lat.vertex(v1 as i64 + o.v1 as i64, v2 as i64 + o.v2 as i64));
            }
        }
    }
    out.sort_unstable();
    out
}

/// Quantization step: values are rounded to integer multiples of
/// `1/(2n⁶)`; ties round to the even multiple.
pub fn quantum(n: usize) -> f64 {
    0.5 / (n as f64).powi(6)
}

/// Rounds the boundary values of `x` to the quantization grid, returning
/// scaled integers in the order of the (sorted) boundary set.
pub fn quantize_boundary<T: Scalar>(x: &SurfaceField<T>, boundary: &[VertexId]) -> Vec<i64> {
    let scale = 1.0 / quantum(x.side());
    boundary
        .iter()
        .map(|&v| (x.get(v).to_f64_lossy() * scale).round_ties_even() as i64)
        .collect()
}

/// Identifier of a covering polytope: the offset plus the quantized
/// boundary values of the defining point.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoverId {
    pub offset: VertexId,
    pub quantized: Vec<i64>,
}

/// How the offset of a cover identifier is chosen.
#[derive(Debug, Clone, Copy)]
pub enum OffsetStrategy {
    /// Offset fixed at the origin; the counting and surface statistics are
    /// offset-uniform, so experiments default to this.
    FixedZero,
    /// Fixed-budget Monte Carlo proxy for the minimum-volume offset: short
    /// hit-and-run runs inside each offset's slab preimage, scored by mean
    /// log chord length, lowest score wins (ties to the row-major first).
    McMin { budget: usize, seed: u64 },
}

/// Builds the cover identifier of a feasible point.
pub fn cover_id<T: Scalar>(
    x: &SurfaceField<T>,
    scales: &CoverScales,
    s: &SlackVector<T>,
    strategy: OffsetStrategy,
) -> Result<CoverId> {
    match strategy {
        OffsetStrategy::FixedZero => {
            let o = VertexId::new(0, 0);
            let boundary = boundary_set(scales, o);
            Ok(CoverId {
                offset: o,
                quantized: quantize_boundary(x, &boundary),
            })
        }
        OffsetStrategy::McMin { budget, seed } => {
            let xf = SurfaceField::from_values(
                x.side(),
                x.as_slice().iter().map(|v| v.to_f64_lossy()).collect(),
            )?;
            let sf = s.to_f64();
            let sys = ConstraintSystem::build(x.side(), sf, Variant::MeanZero)?;
            let lat = *sys.lattice();
            let mut best: Option<(f64, VertexId)> = None;
            for idx in 0..lat.vertex_count() {
                let o = lat.vertex_at(idx);
                let boundary = boundary_set(scales, o);
                let score = slab_chord_score(&sys, &xf, &boundary, budget, seed ^ idx as u64);
                let better = match best {
                    None => true,
                    Some((b, _)) => score < b,
                };
                if better {
                    best = Some((score, o));
                }
            }
            let (_, o) = best.expect("at least one offset");
            let boundary = boundary_set(scales, o);
            Ok(CoverId {
                offset: o,
                quantized: quantize_boundary(x, &boundary),
            })
        }
    }
}

/// Mean log chord length of a short hit-and-run run inside the slab
/// preimage around `x`'s quantized boundary values.
fn slab_chord_score(
    sys: &ConstraintSystem<f64>,
    x: &SurfaceField<f64>,
    boundary: &[VertexId],
    budget: usize,
    seed: u64,
) -> f64 {
    let n = x.side();
    let lat = TorusLattice::new(n).expect("valid side");
    let half = quantum(n);
    let centers: Vec<f64> = quantize_boundary(x, boundary)
        .iter()
        .map(|&q| q as f64 * half)
        .collect();
    let b_idx: Vec<usize> = boundary.iter().map(|&v| lat.index(v)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y: Vec<f64> = x.as_slice().to_vec();
    let mut acc = 0.0;
    let steps = budget.max(8);
    for _ in 0..steps {
        let d = random_direction::<f64, _>(Variant::MeanZero, y.len(), &mut rng);
        let (mut lo, mut hi) = chord_unchecked(sys, &y, &d);
        for (pos, &vi) in b_idx.iter().enumerate() {
            let dv = d[vi];
            if dv.abs() <= 1e-14 {
                continue;
            }
            let lo_v = (centers[pos] - half - y[vi]) / dv;
            let hi_v = (centers[pos] + half - y[vi]) / dv;
            let (a, b) = if lo_v <= hi_v { (lo_v, hi_v) } else { (hi_v, lo_v) };
            lo = lo.max(a);
            hi = hi.min(b);
        }
        if hi < lo {
            acc += (1e-300f64).ln();
            continue;
        }
        acc += (hi - lo).max(1e-300).ln();
        let t = lo + (hi - lo) * rng.gen::<f64>();
        for (yi, di) in y.iter_mut().zip(&d) {
            *yi += t * di;
        }
    }
    acc / steps as f64
}

/// Checks that `x` lies in the slab of its own cover identifier: every
/// boundary value within half a quantum (plus round-off) of its quantized
/// center, on top of polytope feasibility.
pub fn slab_contains<T: Scalar>(
    x: &SurfaceField<T>,
    scales: &CoverScales,
    id: &CoverId,
) -> bool {
    let boundary = boundary_set(scales, id.offset);
    let half = quantum(x.side());
    boundary.iter().zip(&id.quantized).all(|(&v, &q)| {
        (x.get(v).to_f64_lossy() - q as f64 * half).abs() <= half + 1e-15
    })
}

/// Log2 of the quoted ceiling on the number of distinct identifiers:
/// `n^(9·(8/eps1)·n + 2)`.
pub fn census_log2_bound(n: usize, eps1: f64) -> f64 {
    (9.0 * (8.0 / eps1) * n as f64 + 2.0) * (n as f64).ln() / LN_2
}

// ---------------------------------------------------------------------------
// block heights and surface statistics
// ---------------------------------------------------------------------------

/// Per-cell residual slacks `h = s_r - D_r x` over every block of the
/// `n1`-grid inside the window, for one offset.
///
/// Cells are indexed `1 ≤ k, ℓ ≤ n1` relative to the block origin; cells
/// with `k` or `ℓ` in `{n1-1, n1}` are wrap cells, whose stated pointwise
/// bounds carry an extra `2n⁻⁶` allowance.
#[derive(Debug, Clone)]
pub struct BlockHeights<T> {
    pub n1: usize,
    pub per_side: usize,
    pub offset: VertexId,
    values: Vec<T>,
}

impl<T: Scalar> BlockHeights<T> {
    fn slot(&self, bi: usize, bj: usize, r: EdgeClass, k: usize, l: usize) -> usize {
        debug_assert!((1..=self.n1).contains(&k) && (1..=self.n1).contains(&l));
        (((bi * self.per_side + bj) * 3 + r.index()) * self.n1 + (k - 1)) * self.n1 + (l - 1)
    }

    pub fn get(&self, bi: usize, bj: usize, r: EdgeClass, k: usize, l: usize) -> T {
        self.values[self.slot(bi, bj, r, k, l)]
    }

    /// True for the cells whose constraints may wrap around the window.
    pub fn is_wrap_cell(&self, k: usize, l: usize) -> bool {
        k >= self.n1 - 1 || l >= self.n1 - 1
    }

    pub fn min(&self) -> T {
        self.values
            .iter()
            .fold(T::infinity(), |acc, &v| acc.min(v))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }
}

/// Computes the height field of `x` for slack `s` at offset `o`.
pub fn block_heights<T: Scalar>(
    x: &SurfaceField<T>,
    scales: &CoverScales,
    s: &SlackVector<T>,
    o: VertexId,
) -> BlockHeights<T> {
    let table = hessian_all(x);
    let lat = TorusLattice::new(x.side()).expect("valid side");
    let n1 = scales.n1;
    let per_side = scales.blocks_per_side();
    let mut values = Vec::with_capacity(per_side * per_side * 3 * n1 * n1);
    for bi in 0..per_side {
        for bj in 0..per_side {
            for r in EdgeClass::ALL {
                let sr = s.get(r);
                for k in 1..=n1 {
                    for l in 1..=n1 {
                        let anchor = lat.vertex(
                            (o.v1 + bi * n1 + k) as i64,
                            (o.v2 + bj * n1 + l) as i64,
                        );
                        values.push(sr - table.get(r, anchor));
                    }
                }
            }
        }
    }
    BlockHeights {
        n1,
        per_side,
        offset: o,
        values,
    }
}

/// Per-block surface functional `S/m = (1/m)·Σ_r w_r·Σ_{k,ℓ} h_{kℓ}^r`,
/// row-major over blocks.
pub fn block_surface<T: Scalar>(h: &BlockHeights<T>, w: &SpectralWeights<T>) -> Vec<T> {
    let m = T::from_f64_lit((h.n1 * h.n1 - 1) as f64);
    let mut out = Vec::with_capacity(h.per_side * h.per_side);
    for bi in 0..h.per_side {
        for bj in 0..h.per_side {
            let mut acc = T::zero();
            for r in EdgeClass::ALL {
                let mut class_sum = T::zero();
                for k in 1..=h.n1 {
                    for l in 1..=h.n1 {
                        class_sum = class_sum + h.get(bi, bj, r, k, l);
                    }
                }
                acc = acc + w.get(r) * class_sum;
            }
            out.push(acc / m);
        }
    }
    out
}

/// Measured dot-product excess `eps2 = (n1²/m)·(w·s) - 1`: the slope `w`
/// rescaled to the per-dimension normalization, dotted with the slack.
/// Nonnegative values certify `w` as a usable surrogate slope; values
/// above 0.5 leave the regime the stated bounds are meant for.
pub fn measured_dot_excess<T: Scalar>(
    scales: &CoverScales,
    s: &SlackVector<T>,
    w: &SpectralWeights<T>,
) -> f64 {
    let n1 = scales.n1 as f64;
    let m = scales.m() as f64;
    (n1 * n1 / m) * w.dot_slack(s).to_f64_lossy() - 1.0
}

fn applicable_excess(eps2: f64) -> bool {
    (0.0..=0.5).contains(&eps2)
}

/// Two-dimensional wrapped prefix sums for O(1) box sums mod `n`.
struct WrappedSums {
    n: usize,
    prefix: Vec<f64>,
}

impl WrappedSums {
    fn new(n: usize, values: &[f64]) -> WrappedSums {
        let stride = n + 1;
        let mut prefix = vec![0.0; stride * stride];
        for i in 0..n {
            for j in 0..n {
                prefix[(i + 1) * stride + j + 1] = values[i * n + j]
                    + prefix[i * stride + j + 1]
                    + prefix[(i + 1) * stride + j]
                    - prefix[i * stride + j];
            }
        }
        WrappedSums { n, prefix }
    }

    fn rect(&self, i0: usize, j0: usize, i1: usize, j1: usize) -> f64 {
        let s = self.n + 1;
        self.prefix[i1 * s + j1] - self.prefix[i0 * s + j1] - self.prefix[i1 * s + j0]
            + self.prefix[i0 * s + j0]
    }

    /// Sum over the `h x w` box whose top-left corner is `(r0, c0)` mod `n`.
    fn box_sum(&self, r0: i64, c0: i64, h: usize, w: usize) -> f64 {
        debug_assert!(h <= self.n && w <= self.n);
        let n = self.n as i64;
        let a = r0.rem_euclid(n) as usize;
        let b = c0.rem_euclid(n) as usize;
        let rows = [(a, (a + h).min(self.n)), (0, (a + h).saturating_sub(self.n))];
        let cols = [(b, (b + w).min(self.n)), (0, (b + w).saturating_sub(self.n))];
        let mut acc = 0.0;
        for &(r_lo, r_hi) in &rows {
            if r_hi <= r_lo {
                continue;
            }
            for &(c_lo, c_hi) in &cols {
                if c_hi <= c_lo {
                    continue;
                }
                acc += self.rect(r_lo, c_lo, r_hi, c_hi);
            }
        }
        acc
    }
}

/// Aggregate surface statistic: the average of `S/m` over all offsets and
/// blocks, compared against `1 + 2·eps2` (plus the wrap allowance).
#[derive(Debug, Clone, Copy)]
pub struct SurfaceMeanReport {
    pub lhs_avg: f64,
    pub bound: f64,
    pub eps2: f64,
    pub holds: bool,
    /// False when the measured excess falls outside `[0, 0.5]`; the bound
    /// is then reported but not meaningful.
    pub applicable: bool,
}

/// Computes the mean surface statistic of a feasible field.
pub fn surface_mean_report<T: Scalar>(
    x: &SurfaceField<T>,
    scales: &CoverScales,
    s: &SlackVector<T>,
    w: &SpectralWeights<T>,
) -> SurfaceMeanReport {
    let n = x.side();
    let n1 = scales.n1;
    let per_side = scales.blocks_per_side();
    let m = scales.m() as f64;
    let table = hessian_all(x);
    let sums: Vec<WrappedSums> = EdgeClass::ALL
        .into_iter()
        .map(|r| {
            let vals: Vec<f64> = table
                .class_values(r)
                .iter()
                .map(|v| v.to_f64_lossy())
                .collect();
            WrappedSums::new(n, &vals)
        })
        .collect();
    let wf: Vec<f64> = EdgeClass::ALL
        .into_iter()
        .map(|r| w.get(r).to_f64_lossy())
        .collect();
    let sf: Vec<f64> = EdgeClass::ALL
        .into_iter()
        .map(|r| s.get(r).to_f64_lossy())
        .collect();

    let mut total = 0.0;
    for o1 in 0..n {
        for o2 in 0..n {
            for bi in 0..per_side {
                for bj in 0..per_side {
                    let r0 = (o1 + bi * n1 + 1) as i64;
                    let c0 = (o2 + bj * n1 + 1) as i64;
                    let mut s_over_m = 0.0;
                    for r in 0..3 {
                        let hsum =
                            (n1 * n1) as f64 * sf[r] - sums[r].box_sum(r0, c0, n1, n1);
                        s_over_m += wf[r] * hsum / m;
                    }
                    total += s_over_m;
                }
            }
        }
    }
    let count = (n * n * per_side * per_side) as f64;
    let lhs_avg = total / count;
    let eps2 = measured_dot_excess(scales, s, w);
    let wrap_slack =
        2.0 / (n as f64).powi(6) * ((n1 * n1) as f64 / m) * (wf[0] + wf[1] + wf[2]);
    let bound = 1.0 + 2.0 * eps2 + wrap_slack;
    SurfaceMeanReport {
        lhs_avg,
        bound,
        eps2,
        holds: lhs_avg <= bound,
        applicable: applicable_excess(eps2),
    }
}

/// Positive-part surface statistic: the normalized sum of
/// `|S/m - 1 + (Φ∗Δ∗x)(block center)|₊` over all offsets and blocks,
/// compared against `(1/n1)·(1 + 3·eps2)` (the surrogate slope is the
/// slack itself, so the `w·(s - t)` term vanishes).
#[derive(Debug, Clone, Copy)]
pub struct SurfaceExcessReport {
    pub avg_plus: f64,
    pub bound: f64,
    pub eps2: f64,
    pub holds: bool,
    pub applicable: bool,
}

pub fn surface_excess_report<T: Scalar>(
    x: &SurfaceField<T>,
    scales: &CoverScales,
    s: &SlackVector<T>,
    w: &SpectralWeights<T>,
) -> SurfaceExcessReport {
    let n = x.side();
    let n1 = scales.n1;
    let per_side = scales.blocks_per_side();
    let m = scales.m() as f64;
    let table = hessian_all(x);
    let sums: Vec<WrappedSums> = EdgeClass::ALL
        .into_iter()
        .map(|r| {
            let vals: Vec<f64> = table
                .class_values(r)
                .iter()
                .map(|v| v.to_f64_lossy())
                .collect();
            WrappedSums::new(n, &vals)
        })
        .collect();
    let convolved = laplacian_apply(w, x);
    let conv_sums = WrappedSums::new(
        n,
        &convolved
            .as_slice()
            .iter()
            .map(|v| v.to_f64_lossy())
            .collect::<Vec<_>>(),
    );
    let wf: Vec<f64> = EdgeClass::ALL
        .into_iter()
        .map(|r| w.get(r).to_f64_lossy())
        .collect();
    let sf: Vec<f64> = EdgeClass::ALL
        .into_iter()
        .map(|r| s.get(r).to_f64_lossy())
        .collect();

    let mut total_plus = 0.0;
    for o1 in 0..n {
        for o2 in 0..n {
            for bi in 0..per_side {
                for bj in 0..per_side {
                    let r0 = (o1 + bi * n1 + 1) as i64;
                    let c0 = (o2 + bj * n1 + 1) as i64;
                    let mut s_over_m = 0.0;
                    for r in 0..3 {
                        let hsum =
                            (n1 * n1) as f64 * sf[r] - sums[r].box_sum(r0, c0, n1, n1);
                        s_over_m += wf[r] * hsum / m;
                    }
                    // (Φ∗Δ∗x) at the block center averages Δ∗x over the
                    // block's own cells
                    let smoothing = conv_sums.box_sum(r0, c0, n1, n1) / m;
                    let term = s_over_m - 1.0 + smoothing;
                    if term > 0.0 {
                        total_plus += term;
                    }
                }
            }
        }
    }
    let count = (n * n * per_side * per_side) as f64;
    let avg_plus = total_plus / count;
    let eps2 = measured_dot_excess(scales, s, w);
    let bound = (1.0 + 3.0 * eps2) / n1 as f64;
    SurfaceExcessReport {
        avg_plus,
        bound,
        eps2,
        holds: avg_plus <= bound,
        applicable: applicable_excess(eps2),
    }
}

/// Sum of `(Φ∗Δ∗x)(block center)` over all offsets and blocks; exactly
/// zero for mean-zero fields up to round-off.
pub fn smoothing_center_sum<T: Scalar>(
    x: &SurfaceField<T>,
    scales: &CoverScales,
    w: &SpectralWeights<T>,
) -> f64 {
    let n = x.side();
    let n1 = scales.n1;
    let per_side = scales.blocks_per_side();
    let m = scales.m() as f64;
    let convolved = laplacian_apply(w, x);
    let conv_sums = WrappedSums::new(
        n,
        &convolved
            .as_slice()
            .iter()
            .map(|v| v.to_f64_lossy())
            .collect::<Vec<_>>(),
    );
    let mut total = 0.0;
    for o1 in 0..n {
        for o2 in 0..n {
            for bi in 0..per_side {
                for bj in 0..per_side {
                    let r0 = (o1 + bi * n1 + 1) as i64;
                    let c0 = (o2 + bj * n1 + 1) as i64;
                    total += conv_sums.box_sum(r0, c0, n1, n1) / m;
                }
            }
        }
    }
    total
}

// ---------------------------------------------------------------------------
// block-scale surrogate slope
// ---------------------------------------------------------------------------

/// Slack rescaled to the unit-volume normalization at block scale, with
/// facet weights transported to the rescaled point and the measured
/// excess.
#[derive(Debug, Clone)]
pub struct SurrogateScale {
    /// Rescaled slack `t` (proportional to the input slack).
    pub slack: SlackVector<f64>,
    /// Facet weights at `t`, obtained from the raw-scale weights through
    /// degree-(m-1) homogeneity.
    pub facet: FacetWeights,
    pub weights: SpectralWeights<f64>,
    /// Measured dot-product excess at the rescaled point.
    pub eps2: f64,
    /// Log volume of the block-scale polytope at the raw slack.
    pub block_log_volume: f64,
}

/// Builds the block-scale surrogate slope for the surface statistics.
///
/// The statistics are stated on the normalization where the block-scale
/// polytope has unit volume; the slack direction is kept and only its
/// length changes. `target_excess` overshoots the unit level set slightly
/// (volume `1 + target_excess` instead of 1) so that the measured `eps2`
/// stays positive under estimator noise.
pub fn surrogate_scale(
    n1: usize,
    s_raw: &SlackVector<f64>,
    target_excess: f64,
    vol_target: f64,
    cfg: &ChainConfig,
) -> Result<SurrogateScale> {
    if !(0.0..0.5).contains(&target_excess) {
        return Err(Error::InvalidParameter(
            "target_excess must lie in [0, 0.5)".into(),
        ));
    }
    let m = (n1 * n1 - 1) as f64;
    let est = estimate_volume(n1, s_raw, vol_target, cfg)?;
    let lambda = ((1.0 + target_excess).ln() / m - est.log_volume / m).exp();
    let t = s_raw.scaled(lambda);
    let raw_weights = facet_weights_fd(n1, s_raw, default_fd_step(s_raw), cfg)?;
    // w is homogeneous of degree m-1 in the slack
    let transport = lambda.powf(m - 1.0);
    let facet = FacetWeights {
        w0: raw_weights.w0 * transport,
        w1: raw_weights.w1 * transport,
        w2: raw_weights.w2 * transport,
        n: n1,
        fd_step: raw_weights.fd_step * lambda,
    };
    let weights = SpectralWeights::from_facet_weights(&facet).map_err(|_| {
        Error::Inapplicable(
            "estimated facet weights are not strictly positive at this noise level".into(),
        )
    })?;
    let n1f = n1 as f64;
    let eps2 = (n1f * n1f / m) * facet.dot(&t) - 1.0;
    Ok(SurrogateScale {
        slack: t,
        facet,
        weights,
        eps2,
        block_log_volume: est.log_volume,
    })
}
