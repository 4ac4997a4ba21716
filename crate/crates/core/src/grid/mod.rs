//! Truncated phase-space grid and discrete densities for one space dimension.
//!
//! A [`PhaseGrid`] is a uniform cell-centred grid on `[q_min, q_max] x
//! [p_min, p_max]`. A [`PhaseDensity`] stores one non-negative value per cell,
//! laid out row-major in `q` (`values[i * n_p + j]` is the cell at `q_i, p_j`),
//! so each `q`-column is a contiguous run of `n_p` momentum values. Every
//! constructor renormalises to unit discrete mass `sum values * dq * dp = 1`.

mod snapshot;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use snapshot::{read_snapshot, write_csv, write_snapshot, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};

/// Minimum number of cells per direction.
pub const MIN_CELLS: usize = 8;

/// Fraction of mass in the outer two cell layers above which runs warn.
pub const BOUNDARY_MASS_WARNING: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub n_q: usize,
    pub n_p: usize,
}

impl PhaseGrid {
    pub fn new(q_min: f64, q_max: f64, p_min: f64, p_max: f64, n_q: usize, n_p: usize) -> Result<Self> {
        let finite = [q_min, q_max, p_min, p_max].iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if q_min >= q_max || p_min >= p_max {
            return Err(Error::InvalidGrid(format!(
                "empty domain [{q_min}, {q_max}] x [{p_min}, {p_max}]"
            )));
        }
        if n_q < MIN_CELLS || n_p < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_CELLS} cells per direction, got {n_q} x {n_p}"
            )));
        }
        if n_q > u32::MAX as usize || n_p > u32::MAX as usize {
            return Err(Error::InvalidGrid("too many cells".into()));
        }
        Ok(PhaseGrid {
            q_min,
            q_max,
            p_min,
            p_max,
            n_q,
            n_p,
        })
    }

    /// `[-h, h] x [-h, h]` with `n x n` cells.
    pub fn square(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, -half_width, half_width, n, n)
    }

    /// `[-6, 6] x [-6, 6]` with `n x n` cells.
    pub fn standard(n: usize) -> Result<Self> {
        Self::square(6.0, n)
    }

    #[inline]
    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / self.n_q as f64
    }

    #[inline]
    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / self.n_p as f64
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.dq() * self.dp()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_q * self.n_p
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_p + j
    }

    /// Centre of the `i`-th cell in `q`. Measured from the domain midpoint so
    /// that nodes of a symmetric grid are exact negatives of each other.
    #[inline]
    pub fn q(&self, i: usize) -> f64 {
        0.5 * (self.q_min + self.q_max) + (i as f64 + 0.5 - 0.5 * self.n_q as f64) * self.dq()
    }

    #[inline]
    pub fn p(&self, j: usize) -> f64 {
        0.5 * (self.p_min + self.p_max) + (j as f64 + 0.5 - 0.5 * self.n_p as f64) * self.dp()
    }

    pub fn q_nodes(&self) -> Vec<f64> {
        (0..self.n_q).map(|i| self.q(i)).collect()
    }

    pub fn p_nodes(&self) -> Vec<f64> {
        (0..self.n_p).map(|j| self.p(j)).collect()
    }

    /// Whether `(q, p) -> (-q, -p)` maps the grid onto itself.
    pub fn is_reflection_symmetric(&self) -> bool {
        let tol = 1e-12 * (1.0 + self.q_max.abs() + self.p_max.abs());
        (self.q_min + self.q_max).abs() <= tol && (self.p_min + self.p_max).abs() <= tol
    }
}

/// Cell values of a probability density on a [`PhaseGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDensity {
    grid: PhaseGrid,
    values: Vec<f64>,
}

impl PhaseDensity {
    /// Samples `f` at the cell centres and renormalises.
    pub fn from_function(grid: PhaseGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let q = grid.q_nodes();
        let p = grid.p_nodes();
        let mut values = Vec::with_capacity(grid.len());
        for &qi in &q {
            for &pj in &p {
                values.push(f(qi, pj));
            }
        }
        Self::from_values(grid, values)
    }

    /// Takes ownership of raw cell values, validates and renormalises them.
    pub fn from_values(grid: PhaseGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidDensity(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidDensity(format!(
                "value {} at cell {k} is negative or not finite",
                values[k]
            )));
        }
        let mut rho = PhaseDensity { grid, values };
        let mass = rho.mass();
        if !mass.is_finite() || mass <= 0.0 {
            return Err(Error::InvalidDensity("density vanishes on the grid".into()));
        }
        rho.scale(1.0 / mass);
        Ok(rho)
    }

    /// All mass in the single cell `(i, j)`.
    pub fn point_mass(grid: PhaseGrid, i: usize, j: usize) -> Result<Self> {
        if i >= grid.n_q || j >= grid.n_p {
            return Err(Error::InvalidDensity(format!("cell ({i}, {j}) outside the grid")));
        }
        let mut values = vec![0.0; grid.len()];
        values[grid.index(i, j)] = 1.0;
        Self::from_values(grid, values)
    }

    /// Product Gaussian with the given means and variances in `q` and `p`.
    pub fn gaussian(grid: PhaseGrid, mean_q: f64, var_q: f64, mean_p: f64, var_p: f64) -> Result<Self> {
        crate::error::positive("var_q", var_q)?;
        crate::error::positive("var_p", var_p)?;
        Self::from_function(grid, |q, p| {
            (-(q - mean_q).powi(2) / (2.0 * var_q) - (p - mean_p).powi(2) / (2.0 * var_p)).exp()
        })
    }

    pub(crate) fn from_parts_unchecked(grid: PhaseGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        PhaseDensity { grid, values }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Momentum profile of the `i`-th `q`-column.
    pub fn column(&self, i: usize) -> &[f64] {
        &self.values[i * self.grid.n_p..(i + 1) * self.grid.n_p]
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// Rescales to unit mass. Returns the mass before rescaling.
    pub fn renormalize(&mut self) -> f64 {
        let m = self.mass();
        self.scale(1.0 / m);
        m
    }

    /// Mass of each `q`-column, `sum_j rho_ij dq dp`.
    pub fn q_marginal(&self) -> Vec<f64> {
        let area = self.grid.cell_area();
        self.values
            .chunks_exact(self.grid.n_p)
            .map(|c| mirrored_sum(c) * area)
            .collect()
    }

    /// Mass of each `p`-row, `sum_i rho_ij dq dp`.
    pub fn p_marginal(&self) -> Vec<f64> {
        let area = self.grid.cell_area();
        let (n_q, n_p) = (self.grid.n_q, self.grid.n_p);
        let mut out = vec![0.0; n_p];
        for i in 0..n_q / 2 {
            let (a, b) = (self.column(i), self.column(n_q - 1 - i));
            for (o, (x, y)) in out.iter_mut().zip(a.iter().zip(b)) {
                *o += x + y;
            }
        }
        if n_q % 2 == 1 {
            for (o, x) in out.iter_mut().zip(self.column(n_q / 2)) {
                *o += x;
            }
        }
        out.iter_mut().for_each(|o| *o *= area);
        out
    }

    /// `M_k = sum q_i^k rho_ij dq dp` for `k = 0..=k_max`.
    pub fn q_moments(&self, k_max: usize) -> Vec<f64> {
        moments(&self.grid.q_nodes(), &self.q_marginal(), k_max)
    }

    /// Moments of the `q`-marginal about its mean `c`; returns `(c, moments)`.
    pub fn central_q_moments(&self, k_max: usize) -> (f64, Vec<f64>) {
        let w = self.q_marginal();
        let q = self.grid.q_nodes();
        let m = moments(&q, &w, 1);
        let c = m[1] / m[0];
        let shifted: Vec<f64> = q.iter().map(|q| q - c).collect();
        (c, moments(&shifted, &w, k_max))
    }

    pub fn p_moments(&self, k_max: usize) -> Vec<f64> {
        moments(&self.grid.p_nodes(), &self.p_marginal(), k_max)
    }

    pub fn p_moment(&self, k: usize) -> f64 {
        self.p_moments(k)[k]
    }

    /// `sum |q_i|^order rho_ij dq dp`.
    pub fn abs_q_moment(&self, order: u32) -> f64 {
        self.grid
            .q_nodes()
            .iter()
            .zip(self.q_marginal())
            .map(|(q, w)| q.abs().powi(order as i32) * w)
            .sum()
    }

    /// Discrete entropy `-sum rho log rho dq dp` with `0 log 0 = 0`.
    pub fn entropy(&self) -> f64 {
        -self.values.iter().map(|&v| xlogx(v)).sum::<f64>() * self.grid.cell_area()
    }

    /// `sum |a - b| dq dp`.
    pub fn l1_distance(&self, other: &PhaseDensity) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.grid.cell_area())
    }

    /// Fraction of mass in the outermost two layers of cells.
    pub fn boundary_mass(&self) -> f64 {
        let g = &self.grid;
        let layers = 2.min(g.n_q / 2).min(g.n_p / 2);
        let mut sum = 0.0;
        for i in 0..g.n_q {
            let edge_q = i < layers || i >= g.n_q - layers;
            for j in 0..g.n_p {
                if edge_q || j < layers || j >= g.n_p - layers {
                    sum += self.values[g.index(i, j)];
                }
            }
        }
        sum * g.cell_area()
    }

    /// `max |rho(q, p) - rho(-q, -p)|` on a reflection-symmetric grid.
    pub fn reflection_asymmetry(&self) -> f64 {
        let n = self.values.len();
        (0..n / 2 + 1)
            .map(|k| (self.values[k] - self.values[n - 1 - k]).abs())
            .fold(0.0, f64::max)
    }

    /// Image under `(q, p) -> (-q, -p)`; meaningful on symmetric grids.
    pub fn reflected(&self) -> PhaseDensity {
        let mut values = self.values.clone();
        values.reverse();
        PhaseDensity {
            grid: self.grid,
            values,
        }
    }

    /// `(1 - t) self + t other` on a shared grid.
    pub fn mix(&self, other: &PhaseDensity, t: f64) -> Result<PhaseDensity> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect();
        PhaseDensity::from_values(self.grid, values)
    }
}

#[inline]
pub(crate) fn xlogx(v: f64) -> f64 {
    if v > 0.0 {
        v * v.ln()
    } else {
        0.0
    }
}

/// Sum taken in mirrored pairs `(x_k + x_{n-1-k})`, so a reversed slice sums
/// to the bitwise-identical value.
pub(crate) fn mirrored_sum(x: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for k in 0..n / 2 {
        s += x[k] + x[n - 1 - k];
    }
    if n % 2 == 1 {
        s += x[n / 2];
    }
    s
}

/// Weighted power sums, pairing mirrored nodes so that symmetric data gives
/// odd moments that are exactly zero.
fn moments(nodes: &[f64], weights: &[f64], k_max: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut out = vec![0.0; k_max + 1];
    for k in 0..n / 2 {
        let (x, y) = (nodes[k], nodes[n - 1 - k]);
        let (mut a, mut b) = (weights[k], weights[n - 1 - k]);
        for m in out.iter_mut() {
            *m += a + b;
            a *= x;
            b *= y;
        }
    }
    if n % 2 == 1 {
        let x = nodes[n / 2];
        let mut a = weights[n / 2];
        for m in out.iter_mut() {
            *m += a;
            a *= x;
        }
    }
    out
}
