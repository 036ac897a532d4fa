//! Size-dependent feature-extraction cost curves.
//!
//! A [`CostPolynomial`] maps an item size `n` to an extraction cost in
//! abstract milliseconds. Costs of a feature set are coefficient-wise sums of
//! member costs, so every curve the pipeline handles has nonnegative
//! coefficients and is nondecreasing on `n >= 0`.

mod fit;
pub(crate) mod roots;

pub use fit::{fit, quantile, CostSample};
pub(crate) use fit::per_size_quantile;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on polynomial degree.
pub const DEFAULT_MAX_DEGREE: usize = 4;
/// Default upper end of the size domain used for root isolation and dominance.
pub const DEFAULT_N_MAX: f64 = 1e6;
/// Absolute tolerance for intersection points; closer roots are coalesced.
pub const ROOT_TOLERANCE: f64 = 1e-9;

/// Nonnegative-coefficient polynomial in the item size; `coeffs[i]` is the
/// coefficient of `n^i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolynomial")]
pub struct CostPolynomial {
    coeffs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawPolynomial {
    coeffs: Vec<f64>,
}

impl TryFrom<RawPolynomial> for CostPolynomial {
    type Error = Error;

    fn try_from(raw: RawPolynomial) -> Result<Self> {
        Self::new(raw.coeffs)
    }
}

impl CostPolynomial {
    /// Builds a cost curve, rejecting negative or non-finite coefficients.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::InvalidPolynomial(format!(
                "coefficient {c} is negative or not finite"
            )));
        }
        Ok(Self { coeffs })
    }

    /// Like [`CostPolynomial::new`] but also enforces `degree() <= max_degree`.
    pub fn with_max_degree(coeffs: Vec<f64>, max_degree: usize) -> Result<Self> {
        let p = Self::new(coeffs)?;
        if p.degree() > max_degree {
            return Err(Error::InvalidPolynomial(format!(
                "degree {} exceeds the maximum of {max_degree}",
                p.degree()
            )));
        }
        Ok(p)
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Degree ignoring trailing zero coefficients; the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|&c| c != 0.0)
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Cost at size `n`.
    pub fn eval(&self, n: f64) -> f64 {
        roots::horner(&self.coeffs, n)
    }

    /// Coefficient-wise sum; the empty sum is the zero polynomial.
    pub fn sum<'a, I>(polys: I) -> Self
    where
        I: IntoIterator<Item = &'a CostPolynomial>,
    {
        let mut coeffs: Vec<f64> = Vec::new();
        for p in polys {
            if p.coeffs.len() > coeffs.len() {
                coeffs.resize(p.coeffs.len(), 0.0);
            }
            for (acc, c) in coeffs.iter_mut().zip(&p.coeffs) {
                *acc += c;
            }
        }
        Self { coeffs }
    }

    /// `self - other` as a plain coefficient vector.
    fn difference(&self, other: &Self) -> Vec<f64> {
        let len = self.coeffs.len().max(other.coeffs.len());
        (0..len)
            .map(|i| {
                self.coeffs.get(i).copied().unwrap_or(0.0)
                    - other.coeffs.get(i).copied().unwrap_or(0.0)
            })
            .collect()
    }

    /// Lexicographic comparison of coefficient vectors, lowest order first.
    /// This is the cost order of two curves just above `n = 0`.
    pub fn cmp_coeffs(&self, other: &Self) -> std::cmp::Ordering {
        let len = self.coeffs.len().max(other.coeffs.len());
        for i in 0..len {
            let a = self.coeffs.get(i).copied().unwrap_or(0.0);
            let b = other.coeffs.get(i).copied().unwrap_or(0.0);
            match a.total_cmp(&b) {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        std::cmp::Ordering::Equal
    }
}

/// Sizes `n > 0` where the two curves have equal cost, ascending.
pub fn intersections(p: &CostPolynomial, q: &CostPolynomial) -> Result<Vec<f64>> {
    intersections_within(p, q, DEFAULT_N_MAX)
}

/// [`intersections`] restricted to `(0, n_max]`.
pub fn intersections_within(p: &CostPolynomial, q: &CostPolynomial, n_max: f64) -> Result<Vec<f64>> {
    let diff = p.difference(q);
    if diff.iter().all(|&c| c == 0.0) {
        return Err(Error::IdenticalCurves);
    }
    Ok(roots::real_roots(&diff, 0.0, n_max, ROOT_TOLERANCE))
}

/// True iff `p(n) <= q(n)` for every `n` in `[0, N_MAX]` (weak dominance).
pub fn cost_dominates(p: &CostPolynomial, q: &CostPolynomial) -> bool {
    cost_dominates_within(p, q, DEFAULT_N_MAX)
}

/// [`cost_dominates`] on `[0, n_max]`.
pub fn cost_dominates_within(p: &CostPolynomial, q: &CostPolynomial, n_max: f64) -> bool {
    let gap = q.difference(p);
    if gap.iter().all(|&c| c >= 0.0) {
        return true;
    }
    if roots::horner(&gap, 0.0) < 0.0 || roots::horner(&gap, n_max) < 0.0 {
        return false;
    }
    // q - p is nonnegative at both ends; it stays so iff it is nonnegative
    // between every pair of consecutive roots.
    let rs = roots::real_roots(&gap, 0.0, n_max, ROOT_TOLERANCE);
    let mut prev = 0.0;
    for r in rs.iter().copied().chain(std::iter::once(n_max)) {
        if r > prev && roots::horner(&gap, 0.5 * (prev + r)) < 0.0 {
            return false;
        }
        prev = r;
    }
    true
}
