//! Uniform sampling from the slack polytope by hit-and-run in its affine
//! slice.
//!
//! From the current interior point, draw an isotropic direction inside the
//! slice (mean-zero hyperplane, or the `x(0) = 0` slice for the pinned
//! variant), intersect the line with all `3n²` rows to get the exact
//! chord, and jump to a uniform point on it. Chords are exact and cheap
//! because every row has four ±1 entries, so no step-size tuning is
//! needed and every iterate is feasible.
//!
//! Chains are independent and reproducible: chain `c` of a run owns the
//! ChaCha stream `c` of the configured seed, and merged output is ordered
//! by chain index.

use rand::distributions::{Distribution, Standard};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::field::SurfaceField;
use crate::hessian::{ConstraintSystem, Variant, FEASIBILITY_TOL};
use crate::scalar::Scalar;
use crate::{Error, Result};

/// Settings for a hit-and-run run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainConfig {
    /// Discarded steps before the first kept sample, per chain.
    pub burn_in: usize,
    /// Steps between kept samples (at least 1).
    pub thin: usize,
    pub seed: u64,
    /// Parallel chain count (at least 1).
    pub chains: usize,
}

impl ChainConfig {
    /// Dimension-proportional defaults: `burn_in = 50·n²`, `thin = n²`,
    /// four chains.
    pub fn default_for(n: usize, seed: u64) -> ChainConfig {
        ChainConfig {
            burn_in: 50 * n * n,
            thin: n * n,
            seed,
            chains: 4,
        }
    }

    pub fn with_chains(mut self, chains: usize) -> ChainConfig {
        self.chains = chains;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::InvalidParameter("thin must be >= 1".into()));
        }
        if self.chains == 0 {
            return Err(Error::InvalidParameter("chains must be >= 1".into()));
        }
        Ok(())
    }
}

/// Draws an isotropic unit direction in the system's affine slice:
/// i.i.d. standard normals projected onto the slice, then normalized.
pub fn random_direction<T, R>(variant: Variant, len: usize, rng: &mut R) -> Vec<T>
where
    T: Scalar,
    R: Rng + ?Sized,
    StandardNormal: Distribution<T>,
{
    loop {
        let mut d: Vec<T> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        match variant {
            Variant::MeanZero => {
                let mean = d.iter().copied().sum::<T>() / T::from_f64_lit(len as f64);
                for v in d.iter_mut() {
                    *v = *v - mean;
                }
            }
            Variant::Pinned => d[0] = T::zero(),
        }
        let norm = d.iter().map(|&v| v * v).sum::<T>().sqrt();
        if norm > T::from_f64_lit(1e-12) {
            for v in d.iter_mut() {
                *v = *v / norm;
            }
            return d;
        }
    }
}

/// Exact feasible interval of `t ↦ x + t·d`: the largest `[t_lo, t_hi]`
/// with `t_lo ≤ 0 ≤ t_hi` such that every row stays within its bound.
///
/// `x` must be feasible and `d` must lie in the system's slice (mean-zero
/// entries, or a zero pinned coordinate) with positive norm. Rows with
/// `row·d = 0` are ignored.
pub fn chord<T: Scalar>(
    sys: &ConstraintSystem<T>,
    x: &SurfaceField<T>,
    d: &[T],
) -> Result<(T, T)> {
    let report = sys.membership(x)?;
    if !report.feasible {
        return Err(Error::Infeasible(report.worst_violation.to_f64_lossy()));
    }
    if d.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: d.len(),
        });
    }
    let norm = d.iter().map(|&v| v * v).sum::<T>().sqrt();
    if norm <= T::from_f64_lit(1e-12) {
        return Err(Error::InvalidDirection("zero direction"));
    }
    let slice_tol = T::from_f64_lit(FEASIBILITY_TOL) * T::from_f64_lit(d.len() as f64) * norm;
    let in_slice = match sys.variant() {
        Variant::MeanZero => d.iter().copied().sum::<T>().abs() <= slice_tol,
        Variant::Pinned => d[0].abs() <= slice_tol,
    };
    if !in_slice {
        return Err(Error::InvalidDirection("direction leaves the affine slice"));
    }
    Ok(chord_unchecked(sys, x.as_slice(), d))
}

/// Chord computation without the validity checks; used inside the chains
/// where feasibility is maintained by construction.
pub(crate) fn chord_unchecked<T: Scalar>(
    sys: &ConstraintSystem<T>,
    x: &[T],
    d: &[T],
) -> (T, T) {
    let g_tol = T::epsilon() * T::from_f64_lit(64.0);
    let mut lo = T::neg_infinity();
    let mut hi = T::infinity();
    for row in 0..sys.row_count() {
        let g = sys.row_dot(row, d);
        if g.abs() <= g_tol {
            continue;
        }
        let slack = (sys.row_rhs(row) - sys.row_dot(row, x)).max(T::zero());
        let t = slack / g;
        if g > T::zero() {
            hi = hi.min(t);
        } else {
            lo = lo.max(t);
        }
    }
    (lo, hi)
}

pub(crate) struct Chain<'a, T> {
    sys: &'a ConstraintSystem<T>,
    pub x: Vec<T>,
    rng: ChaCha8Rng,
    steps: usize,
}

impl<'a, T> Chain<'a, T>
where
    T: Scalar,
    Standard: Distribution<T>,
    StandardNormal: Distribution<T>,
{
    pub fn from_start(
        sys: &'a ConstraintSystem<T>,
        start: Vec<T>,
        seed: u64,
        stream: u64,
    ) -> Chain<'a, T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Chain {
            sys,
            x: start,
            rng,
            steps: 0,
        }
    }

    pub fn step(&mut self) {
        let d = random_direction(self.sys.variant(), self.x.len(), &mut self.rng);
        let (lo, hi) = chord_unchecked(self.sys, &self.x, &d);
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return; // keep the current point on a degenerate chord
        }
        let u: T = self.rng.gen();
        let t = lo + (hi - lo) * u;
        for (xi, di) in self.x.iter_mut().zip(&d) {
            *xi = *xi + t * *di;
        }
        self.steps += 1;
        if self.steps % 64 == 0 {
            self.recenter();
        }
    }

    /// Removes accumulated drift off the affine slice.
    fn recenter(&mut self) {
        match self.sys.variant() {
            Variant::MeanZero => {
                let mean = self.x.iter().copied().sum::<T>()
                    / T::from_f64_lit(self.x.len() as f64);
                for v in self.x.iter_mut() {
                    *v = *v - mean;
                }
            }
            Variant::Pinned => self.x[0] = T::zero(),
        }
    }
}

/// Draws `count` approximately uniform samples after burn-in and thinning,
/// starting every chain at the origin (interior whenever the slack is
/// strictly positive).
///
/// Deterministic in `(seed, chain index)`; the requested count is split
/// across chains and merged in chain order.
pub fn sample_uniform<T>(
    sys: &ConstraintSystem<T>,
    count: usize,
    cfg: &ChainConfig,
) -> Result<Vec<SurfaceField<T>>>
where
    T: Scalar,
    Standard: Distribution<T>,
    StandardNormal: Distribution<T>,
{
    let start = SurfaceField::zeros(sys.side());
    sample_uniform_from(sys, &start, count, cfg)
}

/// [`sample_uniform`] with an explicit (feasible) start point, shared by
/// all chains. Used by mixing diagnostics that compare runs started from
/// different corners of the polytope.
///
/// A start on the boundary traps hit-and-run: with several active rows,
/// almost every direction yields the degenerate chord `[0, 0]`. The start
/// is therefore pulled toward the origin (interior for strictly positive
/// slack) by a factor `1e-3`, which leaves every row a positive slack.
pub fn sample_uniform_from<T>(
    sys: &ConstraintSystem<T>,
    start: &SurfaceField<T>,
    count: usize,
    cfg: &ChainConfig,
) -> Result<Vec<SurfaceField<T>>>
where
    T: Scalar,
    Standard: Distribution<T>,
    StandardNormal: Distribution<T>,
{
    cfg.validate()?;
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    if !sys.slack().is_strictly_positive() {
        return Err(Error::EmptyInterior(sys.slack().to_f64().as_array()));
    }
    let report = sys.membership(start)?;
    if !report.feasible {
        return Err(Error::Infeasible(report.worst_violation.to_f64_lossy()));
    }
    let interior_pull = T::one() - T::from_f64_lit(1e-3);
    let start = start.scaled(interior_pull);
    let chains = cfg.chains.min(count);
    let quotas: Vec<usize> = (0..chains)
        .map(|c| count / chains + usize::from(c < count % chains))
        .collect();
    let per_chain: Vec<Vec<SurfaceField<T>>> = quotas
        .par_iter()
        .enumerate()
        .map(|(c, &quota)| {
            let n = sys.side();
            let mut chain = Chain::from_start(sys, start.as_slice().to_vec(), cfg.seed, c as u64);
            for _ in 0..cfg.burn_in {
                chain.step();
            }
            let mut out = Vec::with_capacity(quota);
            for _ in 0..quota {
                for _ in 0..cfg.thin {
                    chain.step();
                }
                out.push(
                    SurfaceField::from_values(n, chain.x.clone())
                        .expect("chain state is a valid field"),
                );
            }
            out
        })
        .collect();
    Ok(per_chain.into_iter().flatten().collect())
}

/// Fraction estimate with its binomial standard error.
#[derive(Debug, Clone, Copy)]
pub struct FractionEstimate {
    pub fraction: f64,
    pub stderr: f64,
    pub count: usize,
}

/// Fraction of samples with `‖x‖∞ > eps0·n²`.
pub fn estimate_p<T: Scalar>(samples: &[SurfaceField<T>], eps0: f64) -> Result<FractionEstimate> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if !eps0.is_finite() || eps0 <= 0.0 {
        return Err(Error::InvalidParameter("eps0 must be positive".into()));
    }
    let n = samples[0].side();
    let threshold = eps0 * (n * n) as f64;
    let hits = samples
        .iter()
        .filter(|x| x.norm_linf().to_f64_lossy() > threshold)
        .count();
    let count = samples.len();
    let p = hits as f64 / count as f64;
    Ok(FractionEstimate {
        fraction: p,
        stderr: (p * (1.0 - p) / count as f64).sqrt(),
        count,
    })
}

/// Mean and batch-means standard error of a correlated scalar series.
/// Used by diagnostics that compare chain outputs at a stated sigma level.
pub fn batch_mean_stderr(values: &[f64], batches: usize) -> (f64, f64) {
    assert!(!values.is_empty() && batches >= 2);
    let b = batches.min(values.len());
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let size = values.len() / b;
    let mut means = Vec::with_capacity(b);
    for k in 0..b {
        let chunk = &values[k * size..(k + 1) * size];
        means.push(chunk.iter().sum::<f64>() / chunk.len() as f64);
    }
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>()
        / (means.len() as f64 - 1.0);
    (mean, (var / means.len() as f64).sqrt())
}
