//! Clamped B-spline bases on the rescaled time axis `[0, 1]`.
//!
//! Every coefficient function of the count models is a linear combination of
//! these basis functions. Knots are equidistant; the two boundary knots carry
//! multiplicity `degree + 1`, so the basis interpolates at both endpoints and
//! forms a partition of unity on the whole interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default polynomial degree (cubic).
pub const DEFAULT_DEGREE: usize = 3;
/// Default number of distinct equidistant knots, endpoints included.
pub const DEFAULT_KNOTS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisParams", into = "BasisParams")]
pub struct SplineBasis {
    degree: usize,
    knot_count: usize,
    knots: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct BasisParams {
    degree: usize,
    knots: usize,
}

impl TryFrom<BasisParams> for SplineBasis {
    type Error = Error;

    fn try_from(p: BasisParams) -> Result<Self> {
        SplineBasis::new(p.degree, p.knots)
    }
}

impl From<SplineBasis> for BasisParams {
    fn from(b: SplineBasis) -> Self {
        BasisParams {
            degree: b.degree,
            knots: b.knot_count,
        }
    }
}

impl Default for SplineBasis {
    fn default() -> Self {
        SplineBasis::new(DEFAULT_DEGREE, DEFAULT_KNOTS).expect("default basis is valid")
    }
}

impl SplineBasis {
    /// Builds a clamped basis of the given degree over `knot_count`
    /// equidistant knots spanning `[0, 1]` (endpoints included).
    ///
    /// The basis has `knot_count - 2 + degree + 1` functions.
    pub fn new(degree: usize, knot_count: usize) -> Result<Self> {
        if knot_count < 2 {
            return Err(Error::InvalidBasis(format!(
                "need at least 2 knots to span [0, 1], got {knot_count}"
            )));
        }
        if degree > 20 {
            return Err(Error::InvalidBasis(format!("degree {degree} is unreasonably high")));
        }
        let cells = knot_count - 1;
        let mut knots = Vec::with_capacity(knot_count + 2 * degree);
        knots.extend(std::iter::repeat_n(0.0, degree + 1));
        knots.extend((1..cells).map(|i| i as f64 / cells as f64));
        knots.extend(std::iter::repeat_n(1.0, degree + 1));
        Ok(SplineBasis {
            degree,
            knot_count,
            knots,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of distinct knots, endpoints included.
    pub fn knot_count(&self) -> usize {
        self.knot_count
    }

    /// The full clamped knot vector.
    pub fn knot_vector(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions.
    pub fn len(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index `m` of the knot span with `t[m] <= x < t[m + 1]`; the right
    /// endpoint belongs to the last non-degenerate span.
    fn span(&self, x: f64) -> usize {
        let n = self.len();
        if x >= self.knots[n] {
            return n - 1;
        }
        // First knot strictly greater than x, minus one.
        let upper = self.knots.partition_point(|&k| k <= x);
        upper - 1
    }

    fn check_domain(x: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfDomain(x));
        }
        Ok(())
    }

    /// Values of all basis functions at `x`.
    pub fn eval(&self, x: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(x, &mut out)?;
        Ok(out)
    }

    /// Writes all basis values at `x` into `out` (length `len()`).
    pub fn eval_into(&self, x: f64, out: &mut [f64]) -> Result<()> {
        Self::check_domain(x)?;
        assert_eq!(out.len(), self.len(), "output buffer has wrong length");
        out.fill(0.0);
        let span = self.span(x);
        let local = self.local_derivatives(span, x, 0);
        out[span - self.degree..=span].copy_from_slice(&local[0]);
        Ok(())
    }

    /// Derivatives of the given order of all basis functions at `x`.
    /// Orders above the degree give the zero vector.
    pub fn eval_derivative(&self, x: f64, order: usize) -> Result<Vec<f64>> {
        Self::check_domain(x)?;
        let mut out = vec![0.0; self.len()];
        if order > self.degree {
            return Ok(out);
        }
        let span = self.span(x);
        let local = self.local_derivatives(span, x, order);
        out[span - self.degree..=span].copy_from_slice(&local[order]);
        Ok(out)
    }

    /// Nonzero basis functions on `span` and their derivatives up to
    /// `max_order`, from the triangular table of the Cox–de Boor recursion.
    /// Row `k` holds the `k`-th derivatives of `B_{span-degree..=span}`.
    fn local_derivatives(&self, span: usize, x: f64, max_order: usize) -> Vec<Vec<f64>> {
        let p = self.degree;
        let t = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                // Lower triangle stores knot differences.
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }

        let n = max_order.min(p);
        let mut ders = vec![vec![0.0; p + 1]; n + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = [vec![0.0; p + 1], vec![0.0; p + 1]];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=n {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    let rk = rk as usize;
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                    d = a[s2][0] * ndu[rk][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if (r as isize - 1) <= pk as isize { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = p as f64;
        for k in 1..=n {
            for v in ders[k].iter_mut() {
                *v *= factor;
            }
            factor *= (p - k) as f64;
        }
        ders
    }

    /// Basis values at every point of `grid`, row-major `grid.len() x len()`.
    pub fn design_matrix(&self, grid: &[f64]) -> Result<Vec<f64>> {
        let k = self.len();
        let mut out = vec![0.0; grid.len() * k];
        for (row, &x) in out.chunks_mut(k).zip(grid) {
            self.eval_into(x, row)?;
        }
        Ok(out)
    }
}
