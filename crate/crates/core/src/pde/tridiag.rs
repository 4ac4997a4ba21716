//! Tridiagonal solves by twisted (two-ended) elimination.
//!
//! Eliminating from both ends towards the middle makes the solver commute
//! bitwise with reversal: if the matrix is persymmetric and the right-hand
//! side is reversed, the solution is exactly reversed. The momentum steps rely
//! on this for exact `(q, p) -> (-q, -p)` equivariance.

use crate::error::{Error, Result};

/// Factorisation of a tridiagonal matrix with rows
/// `lower[j] x[j-1] + diag[j] x[j] + upper[j] x[j+1]`.
#[derive(Debug, Clone)]
pub struct TwistedFactor {
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Normalised super-diagonal of the top half.
    cu: Vec<f64>,
    /// Normalised sub-diagonal of the bottom half.
    cl: Vec<f64>,
    inv_den: Vec<f64>,
}

impl TwistedFactor {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        assert!(n >= 2 && lower.len() == n && upper.len() == n);
        let mut cu = vec![0.0; n];
        let mut cl = vec![0.0; n];
        let mut inv_den = vec![0.0; n];
        let half = n / 2;
        let check = |den: f64, row: usize| {
            if den.is_finite() && den > 0.0 {
                Ok(1.0 / den)
            } else {
                Err(Error::TridiagonalSolve { row })
            }
        };
        for j in 0..half {
            let den = if j == 0 { diag[0] } else { diag[j] - lower[j] * cu[j - 1] };
            inv_den[j] = check(den, j)?;
            cu[j] = upper[j] * inv_den[j];
        }
        for j in (n - half..n).rev() {
            let den = if j == n - 1 {
                diag[j]
            } else {
                diag[j] - upper[j] * cl[j + 1]
            };
            inv_den[j] = check(den, j)?;
            cl[j] = lower[j] * inv_den[j];
        }
        if n % 2 == 1 {
            let k = half;
            let den = diag[k] - (lower[k] * cu[k - 1] + upper[k] * cl[k + 1]);
            inv_den[k] = check(den, k)?;
        } else {
            let den = 1.0 - cu[half - 1] * cl[half];
            if !(den.is_finite() && den > 0.0) {
                return Err(Error::TridiagonalSolve { row: half });
            }
        }
        Ok(TwistedFactor {
            lower,
            upper,
            cu,
            cl,
            inv_den,
        })
    }

    pub fn len(&self) -> usize {
        self.inv_den.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_den.is_empty()
    }

    /// Overwrites the right-hand side `x` with the solution.
    pub fn solve(&self, x: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(x.len(), n);
        let half = n / 2;
        x[0] *= self.inv_den[0];
        for j in 1..half {
            x[j] = (x[j] - self.lower[j] * x[j - 1]) * self.inv_den[j];
        }
        x[n - 1] *= self.inv_den[n - 1];
        for j in (n - half..n - 1).rev() {
            x[j] = (x[j] - self.upper[j] * x[j + 1]) * self.inv_den[j];
        }
        if n % 2 == 1 {
            let k = half;
            x[k] = (x[k] - (self.lower[k] * x[k - 1] + self.upper[k] * x[k + 1])) * self.inv_den[k];
        } else {
            let (a, b) = (half - 1, half);
            let (ra, rb) = (x[a], x[b]);
            let (ca, cb) = (self.cu[a], self.cl[b]);
            let den = 1.0 - ca * cb;
            x[a] = (ra - ca * rb) / den;
            x[b] = (rb - cb * ra) / den;
        }
        let top_start = if n % 2 == 1 { half } else { half - 1 };
        for j in (0..top_start).rev() {
            x[j] -= self.cu[j] * x[j + 1];
        }
        for j in half + 1..n {
            x[j] -= self.cl[j] * x[j - 1];
        }
    }
}
