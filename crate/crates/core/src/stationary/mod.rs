//! Invariant probabilities.
//!
//! A stationary density is a fixed point of the Gibbs map
//! `T(rho) ∝ exp(-(p²/2 + V + F * rho)/λ)`. On the grid it is found by
//! damped iteration. For quadratic `F = α x²/2` the convolution is
//! `α (q - m)²/2` plus a constant, so stationarity reduces to the scalar
//! equation `m = Φ(m)`, where `Φ(m)` is the mean of the tilted law
//! `∝ exp(-(V(q) + α (q - m)²/2)/λ)`. Its roots are enumerated by a
//! sign-change scan, and the critical temperature where the number of roots
//! changes is bracketed by bisection on the root count.

mod quadrature;

use std::io::Write;

use log::debug;
use rayon::prelude::*;
use serde::Serialize;

pub use quadrature::integrate;

use crate::error::{positive, Error, Result};
use crate::field::EffectivePotentialField;
use crate::grid::{PhaseDensity, PhaseGrid};
use crate::model::{ConfiningPotential, InteractionPotential, Polynomial};
use crate::pde::gibbs_state;

/// Half-width of the scalar quadrature interval.
pub const DEFAULT_HALF_WIDTH: f64 = 12.0;
/// Absolute quadrature tolerance (the integrand is scaled to peak at 1).
pub const QUADRATURE_TOL: f64 = 1e-12;
/// Largest admissible integrand mass beyond the interval, relative to the
/// total.
pub const TAIL_TOL: f64 = 1e-14;
pub const SCAN_NODES: usize = 2048;
pub const ROOT_TOL: f64 = 1e-10;
/// Roots closer than this are merged.
pub const DEDUP_TOL: f64 = 1e-8;

/// `T(rho)`: the Gibbs state of the effective potential of `rho`.
pub fn gibbs_map(
    rho: &PhaseDensity,
    v: &ConfiningPotential,
    f: &InteractionPotential,
    lambda: f64,
) -> Result<PhaseDensity> {
    positive("lambda", lambda)?;
    let field = EffectivePotentialField::from_density(rho, v, f)?;
    gibbs_state(rho.grid(), &field.w, lambda)
}

#[derive(Debug, Clone, PartialEq)]
pub enum BranchKind {
    Scalar { m: f64 },
    Full(PhaseDensity),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryBranch {
    pub lambda: f64,
    pub kind: BranchKind,
    /// `l1(rho, T(rho))` for a density, `|m - Φ(m)|` for a scalar root.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl StationaryBranch {
    /// Mean position of the branch.
    pub fn m1(&self) -> f64 {
        match &self.kind {
            BranchKind::Scalar { m } => *m,
            BranchKind::Full(rho) => rho.q_moments(1)[1],
        }
    }

    pub fn density(&self) -> Option<&PhaseDensity> {
        match &self.kind {
            BranchKind::Full(rho) => Some(rho),
            BranchKind::Scalar { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    /// Damping: `rho <- (1 - θ) rho + θ T(rho)`.
    pub theta: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            theta: 0.5,
            tol: 1e-12,
            max_iter: 10_000,
        }
    }
}

/// Damped fixed-point iteration from `rho0`. Running out of iterations is not
/// an error: the branch comes back with `converged == false` and the last
/// residual. Which branch is reached depends on `rho0`.
pub fn fixed_point(
    rho0: &PhaseDensity,
    v: &ConfiningPotential,
    f: &InteractionPotential,
    lambda: f64,
    opts: FixedPointOptions,
) -> Result<StationaryBranch> {
    if !(opts.theta > 0.0 && opts.theta <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "theta",
            reason: format!("must lie in (0, 1], got {}", opts.theta),
        });
    }
    positive("tol", opts.tol)?;
    let mut rho = rho0.clone();
    let mut residual = f64::INFINITY;
    for it in 0..=opts.max_iter {
        let image = gibbs_map(&rho, v, f, lambda)?;
        residual = rho.l1_distance(&image)?;
        if residual <= opts.tol {
            debug!("fixed point at lambda = {lambda} after {it} iterations");
            return Ok(StationaryBranch {
                lambda,
                kind: BranchKind::Full(rho),
                residual,
                iterations: it,
                converged: true,
            });
        }
        if it < opts.max_iter {
            rho = rho.mix(&image, opts.theta)?;
        }
    }
    Ok(StationaryBranch {
        lambda,
        kind: BranchKind::Full(rho),
        residual,
        iterations: opts.max_iter,
        converged: false,
    })
}

/// Moments of the tilted law `∝ exp(-(V(q) + α (q - m)²/2)/λ)` on
/// `[-L, L]`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Tilted {
    mean: f64,
    variance: f64,
}

fn tilted(m: f64, v: &ConfiningPotential, alpha: f64, lambda: f64, half_width: f64, with_variance: bool) -> Result<Tilted> {
    positive("lambda", lambda)?;
    let mut c = v.coeffs().to_vec();
    c.resize(c.len().max(3), 0.0);
    c[0] += 0.5 * alpha * m * m;
    c[1] -= alpha * m;
    c[2] += 0.5 * alpha;
    let u = Polynomial::new(c);
    let (_, u_min) = u.min_on(-half_width, half_width);
    let weight = |x: f64| (-(u.eval(x) - u_min) / lambda).exp();
    let (lo, hi) = (-half_width, half_width);
    let mut points = vec![lo];
    points.extend(u.derivative().real_roots_in(lo, hi));
    points.push(hi);
    let z = integrate(weight, &points, QUADRATURE_TOL)?;
    let tail = integrate(weight, &[hi, 2.0 * hi], QUADRATURE_TOL * 1e-3)?
        + integrate(weight, &[2.0 * lo, lo], QUADRATURE_TOL * 1e-3)?;
    if tail > TAIL_TOL * z {
        return Err(Error::Quadrature {
            lo,
            hi,
            error: tail / z,
        });
    }
    let mean = integrate(|x| x * weight(x), &points, QUADRATURE_TOL)? / z;
    let variance = if with_variance {
        integrate(|x| (x - mean).powi(2) * weight(x), &points, QUADRATURE_TOL)? / z
    } else {
        f64::NAN
    };
    Ok(Tilted { mean, variance })
}

/// `Φ(m)`: mean of `∝ exp(-(V(q) + α (q - m)²/2)/λ)`.
pub fn scalar_self_consistency(m: f64, v: &ConfiningPotential, alpha: f64, lambda: f64) -> Result<f64> {
    Ok(tilted(m, v, alpha, lambda, DEFAULT_HALF_WIDTH, false)?.mean)
}

/// `Var(q)` under `ν₀ ∝ exp(-(V + α q²/2)/λ)`. Since `Φ'(0) = (α/λ) Var`,
/// the symmetric branch loses stability where `α Var = λ`.
pub fn tilted_variance(v: &ConfiningPotential, alpha: f64, lambda: f64) -> Result<f64> {
    Ok(tilted(0.0, v, alpha, lambda, DEFAULT_HALF_WIDTH, true)?.variance)
}

/// Default scan half-width: the largest `|critical point|` of `V` plus 2.
pub fn default_m_max(v: &ConfiningPotential) -> f64 {
    v.critical_points().iter().fold(0.0f64, |a, x| a.max(x.abs())) + 2.0
}

/// All roots of `m = Φ(m)` in `[-m_max, m_max]`, ascending, each with
/// `|m - Φ(m)| <= tol`. For even `V` the set is exactly symmetric.
pub fn find_branches(
    v: &ConfiningPotential,
    alpha: f64,
    lambda: f64,
    m_max: Option<f64>,
    tol: f64,
) -> Result<Vec<f64>> {
    let m_max = m_max.unwrap_or_else(|| default_m_max(v));
    positive("m_max", m_max)?;
    positive("tol", tol)?;
    let g = |m: f64| scalar_self_consistency(m, v, alpha, lambda).map(|phi| m - phi);
    let step = 2.0 * m_max / (SCAN_NODES - 1) as f64;
    let node = |k: usize| -m_max + k as f64 * step;
    let even = v.is_even();
    let half = SCAN_NODES / 2;
    let mut values = vec![0.0; SCAN_NODES];
    let computed: Vec<(usize, f64)> = (if even { half..SCAN_NODES } else { 0..SCAN_NODES })
        .into_par_iter()
        .map(|k| {
            // mirror-exact nodes for the symmetric scan
            let m = if even { (k as f64 + 0.5 - half as f64) * step } else { node(k) };
            g(m).map(|val| (k, val))
        })
        .collect::<Result<_>>()?;
    for (k, val) in computed {
        values[k] = val;
        if even {
            values[SCAN_NODES - 1 - k] = -val;
        }
    }
    let at = |k: usize| if even { (k as f64 + 0.5 - half as f64) * step } else { node(k) };

    let mut roots = Vec::new();
    let first = if even { half - 1 } else { 0 };
    for k in first..SCAN_NODES - 1 {
        let (a, b) = (values[k], values[k + 1]);
        if even && k == half - 1 {
            // the interval straddling 0: g is odd, so 0 is a root
            if a != 0.0 || b != 0.0 {
                roots.push(0.0);
            }
            continue;
        }
        if a == 0.0 {
            roots.push(at(k));
        } else if a * b < 0.0 {
            roots.push(bisect(&g, at(k), at(k + 1), a, tol)?);
        }
    }
    if values[SCAN_NODES - 1] == 0.0 {
        roots.push(at(SCAN_NODES - 1));
    }
    if even {
        let positive: Vec<f64> = roots.iter().copied().filter(|m| *m > 0.0).collect();
        roots.extend(positive.iter().map(|m| -m));
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < DEDUP_TOL);
    Ok(roots)
}

fn bisect(g: &impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, g_lo: f64, tol: f64) -> Result<f64> {
    let lo_sign = g_lo.signum();
    loop {
        let mid = 0.5 * (lo + hi);
        let val = g(mid)?;
        if val.abs() <= tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        if val.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Roots of the scalar equation at one temperature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub lambda: f64,
    pub roots: Vec<f64>,
}

impl ScanPoint {
    pub fn branch_count(&self) -> usize {
        self.roots.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseScanResult {
    pub grid: Vec<ScanPoint>,
    /// `[λ_lo, λ_hi]` with different branch counts at the two ends.
    pub bracket: (f64, f64),
    pub width: f64,
    /// Midpoint of the bracket.
    pub lambda_c: f64,
    /// Root of `α Var_ν₀(q) = λ` in the scanned range, when one exists.
    pub bifurcation_lambda: Option<f64>,
}

impl PhaseScanResult {
    /// Whether the bifurcation condition falls inside the bracket.
    pub fn consistent(&self) -> bool {
        self.bifurcation_lambda
            .is_some_and(|l| l >= self.bracket.0 - 1e-9 && l <= self.bracket.1 + 1e-9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub width_tol: f64,
    /// Points of the reported `λ` grid.
    pub grid_points: usize,
    pub root_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            width_tol: 1e-3,
            grid_points: 20,
            root_tol: ROOT_TOL,
        }
    }
}

/// Brackets the temperature where the number of branches changes.
pub fn phase_scan(
    v: &ConfiningPotential,
    alpha: f64,
    lambda_lo: f64,
    lambda_hi: f64,
    opts: ScanOptions,
) -> Result<PhaseScanResult> {
    positive("lambda_lo", lambda_lo)?;
    positive("width_tol", opts.width_tol)?;
    if lambda_hi.partial_cmp(&lambda_lo) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::InvalidParameter {
            name: "lambda_hi",
            reason: format!("must exceed lambda_lo = {lambda_lo}, got {lambda_hi}"),
        });
    }
    let count = |l: f64| find_branches(v, alpha, l, None, opts.root_tol).map(|r| r.len());
    let (lo_count, hi_count) = (count(lambda_lo)?, count(lambda_hi)?);
    if lo_count == hi_count {
        return Err(Error::NoTransition { lo_count, hi_count });
    }
    let (mut lo, mut hi) = (lambda_lo, lambda_hi);
    while hi - lo > opts.width_tol {
        let mid = 0.5 * (lo + hi);
        if count(mid)? == lo_count {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let n = opts.grid_points.max(2);
    let grid = (0..n)
        .into_par_iter()
        .map(|k| {
            let lambda = lambda_lo + (lambda_hi - lambda_lo) * k as f64 / (n - 1) as f64;
            find_branches(v, alpha, lambda, None, opts.root_tol).map(|roots| ScanPoint { lambda, roots })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseScanResult {
        grid,
        bracket: (lo, hi),
        width: hi - lo,
        lambda_c: 0.5 * (lo + hi),
        bifurcation_lambda: bifurcation_lambda(v, alpha, lambda_lo, lambda_hi)?,
    })
}

/// Root of `α Var_ν₀(q) - λ` in `[lo, hi]` by bisection, if it changes sign.
pub fn bifurcation_lambda(v: &ConfiningPotential, alpha: f64, lo: f64, hi: f64) -> Result<Option<f64>> {
    let h = |l: f64| tilted_variance(v, alpha, l).map(|var| alpha * var - l);
    let (mut a, mut b) = (lo, hi);
    let ha = h(a)?;
    if ha * h(b)? > 0.0 {
        return Ok(None);
    }
    while b - a > 1e-13 * b {
        let mid = 0.5 * (a + b);
        if h(mid)?.signum() == ha.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(Some(0.5 * (a + b)))
}

/// The grid density of the scalar branch `m`: the Gibbs state of
/// `V + α (q - m)²/2`.
pub fn branch_density(grid: &PhaseGrid, v: &ConfiningPotential, alpha: f64, lambda: f64, m: f64) -> Result<PhaseDensity> {
    positive("lambda", lambda)?;
    let w: Vec<f64> = grid.q_nodes().iter().map(|&q| v.eval(q) + 0.5 * alpha * (q - m).powi(2)).collect();
    gibbs_state(grid, &w, lambda)
}

/// Writes `lambda,branch_count,m_roots` with the roots joined by `;`.
pub fn write_scan_csv<W: Write>(points: &[ScanPoint], mut out: W) -> Result<()> {
    writeln!(out, "lambda,branch_count,m_roots")?;
    for p in points {
        let roots: Vec<String> = p.roots.iter().map(|r| r.to_string()).collect();
        writeln!(out, "{},{},{}", p.lambda, p.branch_count(), roots.join(";"))?;
    }
    Ok(())
}
