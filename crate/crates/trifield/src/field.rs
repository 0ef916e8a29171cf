//! Real-valued fields on the vertices of `T_n`, with norms and CSV
//! serialization.

use std::io::{BufRead, BufReader, Read, Write};

use crate::scalar::Scalar;
use crate::torus::{TorusLattice, VertexId};
use crate::{Error, Result};

/// A function from `V(T_n)` to the reals, stored row-major (`v1` outer,
/// `v2` inner).
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceField<T> {
    n: usize,
    values: Vec<T>,
}

impl<T: Scalar> SurfaceField<T> {
    pub fn zeros(n: usize) -> SurfaceField<T> {
        SurfaceField {
            n,
            values: vec![T::zero(); n * n],
        }
    }

    /// Wraps a flat value vector; the length must be `n²` and every entry
    /// finite.
    pub fn from_values(n: usize, values: Vec<T>) -> Result<SurfaceField<T>> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite field entry".into()));
        }
        Ok(SurfaceField { n, values })
    }

    /// Builds a field by evaluating `f` at every vertex.
    pub fn from_fn(n: usize, mut f: impl FnMut(VertexId) -> T) -> SurfaceField<T> {
        let lat = TorusLattice::new(n).expect("n >= 2");
        let values = (0..n * n).map(|i| f(lat.vertex_at(i))).collect();
        SurfaceField { n, values }
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, v: VertexId) -> T {
        self.values[v.v1 * self.n + v.v2]
    }

    /// Value at arbitrary integer coordinates, wrapped mod `n`.
    pub fn get_wrapped(&self, v1: i64, v2: i64) -> T {
        let n = self.n as i64;
        let a = v1.rem_euclid(n) as usize;
        let b = v2.rem_euclid(n) as usize;
        self.values[a * self.n + b]
    }

    pub fn set(&mut self, v: VertexId, value: T) {
        self.values[v.v1 * self.n + v.v2] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn sum(&self) -> T {
        self.values.iter().copied().sum()
    }

    pub fn mean(&self) -> T {
        self.sum() / T::from_f64_lit(self.len() as f64)
    }

    /// Returns the field shifted so its mean is zero.
    pub fn centered(&self) -> SurfaceField<T> {
        let m = self.mean();
        let values = self.values.iter().map(|&v| v - m).collect();
        SurfaceField { n: self.n, values }
    }

    /// Field translated by `(u1, u2)` on the torus: `out(v) = self(v - u)`.
    pub fn translated(&self, u1: i64, u2: i64) -> SurfaceField<T> {
        SurfaceField::from_fn(self.n, |v| {
            self.get_wrapped(v.v1 as i64 - u1, v.v2 as i64 - u2)
        })
    }

    pub fn scaled(&self, factor: T) -> SurfaceField<T> {
        let values = self.values.iter().map(|&v| v * factor).collect();
        SurfaceField { n: self.n, values }
    }

    pub fn norm_linf(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    /// `ℓ_p` norm for finite `p ≥ 1`.
    pub fn norm_lp(&self, p: f64) -> T {
        let p = T::from_f64_lit(p);
        let total: T = self.values.iter().map(|&v| v.abs().powf(p)).sum();
        total.powf(p.recip())
    }

    pub fn norm_l2(&self) -> T {
        let total: T = self.values.iter().map(|&v| v * v).sum();
        total.sqrt()
    }

    /// Writes the flat CSV form: a `n,<n>` header line followed by the `n²`
    /// values one per line, row-major (`v1` outer, `v2` inner), full
    /// precision.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,{}", self.n)?;
        for v in &self.values {
            writeln!(w, "{:.16e}", v.to_f64_lossy())?;
        }
        Ok(())
    }

    /// Reads the format produced by [`SurfaceField::write_csv`].
    pub fn read_csv<R: Read>(r: R) -> Result<SurfaceField<T>> {
        let mut lines = BufReader::new(r).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty field file".into()))?
            .map_err(Error::Io)?;
        let n: usize = header
            .strip_prefix("n,")
            .ok_or_else(|| Error::Parse(format!("bad header {header:?}")))?
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("bad side length: {e}")))?;
        let mut values = Vec::with_capacity(n * n);
        for line in lines {
            let line = line.map_err(Error::Io)?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let x: f64 = t
                .parse()
                .map_err(|e| Error::Parse(format!("bad value {t:?}: {e}")))?;
            values.push(T::from_f64_lit(x));
        }
        SurfaceField::from_values(n, values)
    }
}

/// Floor that the `ℓ_p` norm of a feasible field must clear once its `ℓ∞`
/// norm reaches `eps0·n²`, under the canonical slack normalization
/// (`s0 = 2 ≤ s1 ≤ s2`):
///
/// `(√3·eps0·n / (8·s2))^(2/p) · eps0·n²/2`.
pub fn lp_floor(eps0: f64, n: usize, s2: f64, p: f64) -> f64 {
    let n = n as f64;
    let base = 3.0f64.sqrt() * eps0 * n / (8.0 * s2);
    base.powf(2.0 / p) * eps0 * n * n / 2.0
}

/// Checks the `ℓ_p` floor for one field; returns `(lhs, rhs, holds)`.
pub fn lp_floor_check<T: Scalar>(x: &SurfaceField<T>, eps0: f64, s2: f64, p: f64) -> (f64, f64, bool) {
    let lhs = x.norm_lp(p).to_f64_lossy();
    let rhs = lp_floor(eps0, x.side(), s2, p);
    (lhs, rhs, lhs >= rhs)
}
