//! Phase-space transport steps.
//!
//! [`HamiltonianTransport`] advances `∂_t rho = -p ∂_q rho + W'(q) ∂_p rho`
//! for a frozen field `W`. It is a continuous-time jump process on the
//! cells whose rates are exponentially fitted so that the discrete Gibbs
//! state `exp(-(p_j²/2 + W(q_i))/λ)` is an exact null vector of the
//! generator. Explicit sub-cycling with `dt·outflow <= cfl < 1` then makes
//! every sub-step a Markov kernel that fixes the Gibbs state: non-negative,
//! mass-conserving and non-increasing in relative entropy.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fokker_planck::{bernoulli, momentum_weights};
use crate::error::{Error, Result};
use crate::field::EffectivePotentialField;
use crate::grid::{PhaseDensity, PhaseGrid};

/// Reconstruction used by [`HamiltonianTransport`].
///
/// `Upwind` is linear and first order: every sub-step is a Markov kernel, so
/// the free energy cannot increase. `Muscl` adds a minmod-limited slope of
/// `u = rho / rho_gibbs` on the upwind side of each face. It is second order
/// in smooth regions, keeps the Gibbs state stationary and stays
/// non-negative under a 1.5x tighter sub-step bound, but it is not a Markov
/// kernel, so the free-energy decrease holds only up to a small
/// discretisation error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transport {
    #[default]
    Upwind,
    Muscl,
}

impl Transport {
    /// Factor by which the admissible sub-step shrinks.
    fn stiffness(self) -> f64 {
        match self {
            Transport::Upwind => 1.0,
            Transport::Muscl => 1.5,
        }
    }
}

// branch-free: the signs of the two slopes are unpredictable
#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    0.5 * (a.signum() + b.signum()) * a.abs().min(b.abs())
}

/// Field-independent part of the Hamiltonian transport: the momentum
/// weights and the fitted velocities `p̂_j`.
#[derive(Debug, Clone)]
pub struct HamiltonianTransport {
    grid: PhaseGrid,
    lambda: f64,
    up: Vec<f64>,
    down: Vec<f64>,
    /// `max(p̂_j, 0) / Δq` and `max(-p̂_j, 0) / Δq`.
    right: Vec<f64>,
    left: Vec<f64>,
    /// Rows `..neg_end` move left, rows `pos_start..` move right.
    neg_end: usize,
    pos_start: usize,
    /// Upstream weight ratios for the limited `p`-fluxes.
    kp: Vec<f64>,
    kn: Vec<f64>,
}

/// Field-dependent rates for one sub-step.
struct FieldRates {
    /// `B(-δ_i)`: weight of a jump `i -> i+1` (zero at the right wall).
    ap: Vec<f64>,
    /// `B(δ_{i-1})`: weight of a jump `i -> i-1` (zero at the left wall).
    am: Vec<f64>,
    /// Positive and negative parts of the fitted momentum velocity `c_i`.
    cpos: Vec<f64>,
    cneg: Vec<f64>,
}

impl HamiltonianTransport {
    pub fn new(grid: &PhaseGrid, lambda: f64) -> Self {
        let (up, down) = momentum_weights(grid, lambda, 0.0);
        let scale = lambda / (grid.dp() * grid.dq());
        let mut right = vec![0.0; grid.n_p];
        let mut left = vec![0.0; grid.n_p];
        for j in 0..grid.n_p {
            // p̂_j / Δq = -(λ / (Δp Δq)) (up_j - down_j)
            let v = scale * (down[j] - up[j]);
            right[j] = v.max(0.0);
            left[j] = (-v).max(0.0);
        }
        let n = grid.n_p;
        let neg_end = left.iter().take_while(|v| **v > 0.0).count();
        let pos_start = n - right.iter().rev().take_while(|v| **v > 0.0).count();
        assert!(
            neg_end <= pos_start && (neg_end..pos_start).all(|j| left[j] == 0.0 && right[j] == 0.0),
            "fitted velocities must be monotone in p"
        );
        let mut kp = vec![0.0; n];
        let mut kn = vec![0.0; n];
        for j in 1..n - 1 {
            kp[j] = up[j - 1] * (up[j] / down[j]);
            kn[j - 1] = down[j + 1] * (down[j] / up[j]);
        }
        HamiltonianTransport {
            grid: *grid,
            lambda,
            up,
            down,
            right,
            left,
            neg_end,
            pos_start,
            kp,
            kn,
        }
    }

    /// The fitted `q`-velocity of each momentum row (≈ `p_j`).
    pub fn fitted_velocity(&self) -> Vec<f64> {
        let dq = self.grid.dq();
        self.right.iter().zip(&self.left).map(|(r, l)| (r - l) * dq).collect()
    }

    fn field_rates(&self, w: &[f64]) -> FieldRates {
        let n = self.grid.n_q;
        let mut ap = vec![0.0; n];
        let mut am = vec![0.0; n];
        for i in 0..n - 1 {
            let delta = -(w[i + 1] - w[i]) / self.lambda;
            ap[i] = bernoulli(-delta);
            am[i + 1] = bernoulli(delta);
        }
        let scale = self.lambda / (self.grid.dq() * self.grid.dp());
        let mut cpos = vec![0.0; n];
        let mut cneg = vec![0.0; n];
        for i in 0..n {
            let c = scale * (ap[i] - am[i]);
            cpos[i] = c.max(0.0);
            cneg[i] = (-c).max(0.0);
        }
        FieldRates { ap, am, cpos, cneg }
    }

    /// Largest total outflow rate of any cell in the columns `cols`.
    fn max_outflow(&self, r: &FieldRates, cols: Range<usize>) -> f64 {
        let rows = self.right.iter().zip(&self.left).zip(self.up.iter().zip(&self.down));
        cols.map(|i| {
            let (ap, am, cp, cn) = (r.ap[i], r.am[i], r.cpos[i], r.cneg[i]);
            rows.clone()
                .map(|((rr, rl), (u, d))| rr * ap + rl * am + cp * u + cn * d)
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
    }

    /// Advances `rho` by `dt` with sub-cycling. Returns the number of
    /// sub-steps used.
    ///
    /// Empty cells have no outflow, and mass spreads by at most one column
    /// per sub-step, so the step size only has to resolve the outflow rates
    /// of the occupied columns widened by the number of sub-steps; the far
    /// columns, where `|W'|` is largest, are usually empty.
    #[allow(clippy::too_many_arguments)]
    pub fn apply(
        &self,
        rho: &mut PhaseDensity,
        dt: f64,
        field: &EffectivePotentialField,
        scheme: Transport,
        cfl: f64,
        max_substeps: usize,
        scratch: &mut Vec<f64>,
    ) -> Result<usize> {
        let (n_q, n_p) = (self.grid.n_q, self.grid.n_p);
        let occupied = |i: &usize| rho.column(*i).iter().any(|v| *v != 0.0);
        let Some(first) = (0..n_q).find(occupied) else {
            return Ok(0);
        };
        let last = (0..n_q).rev().find(occupied).unwrap_or(first);
        let rates = self.field_rates(&field.w);
        let widened = |k: usize| first.saturating_sub(k)..(last + k + 1).min(n_q);
        let mut k = 1;
        loop {
            let max_out = self.max_outflow(&rates, widened(k)) * scheme.stiffness();
            let needed = (dt * max_out / cfl).ceil().max(1.0);
            if needed > max_substeps as f64 {
                return Err(Error::Cfl {
                    dt,
                    admissible: cfl * max_substeps as f64 / max_out,
                });
            }
            if needed as usize <= k {
                break;
            }
            k = needed as usize;
        }
        let cols = widened(k);
        let h = dt / k as f64;
        let faces_q = (n_q + 1) * n_p;
        let faces_p = n_q * (n_p + 1);
        scratch.clear();
        scratch.resize(faces_q + faces_p, 0.0);
        let (fq, fp) = scratch.split_at_mut(faces_q);
        let limited = scheme == Transport::Muscl;
        for _ in 0..k {
            self.q_fluxes(rho.values(), fq, &rates, limited, &cols);
            self.p_fluxes(rho.values(), fp, &rates, limited, &cols);
            update(rho.values_mut(), fq, fp, n_p, h, &cols);
        }
        Ok(k)
    }

    /// Fluxes through the `q`-faces; `fq[f * n_p + j]` is the flux from cell
    /// `f - 1` to cell `f` in row `j`, zero through the walls.
    ///
    /// On a face with upwind cell `k` and downwind cell `i` the flux is
    /// `A u_k`, plus `A minmod(u_k - u_up, u_i - u_k) / 2` when limited, where
    /// `A` is the Gibbs-state flux through the face and `u = rho / rho_gibbs`.
    /// Every term is a cell value times a finite rate, so `u` itself (which
    /// overflows where the Gibbs state underflows) is never formed.
    ///
    /// Faces outside `cols` (plus its two boundary faces) carry no flux and
    /// are left at zero.
    fn q_fluxes(&self, src: &[f64], fq: &mut [f64], r: &FieldRates, limited: bool, cols: &Range<usize>) {
        let (n_q, n_p) = (self.grid.n_q, self.grid.n_p);
        let (neg, pos) = (self.neg_end, self.pos_start);
        let row = |i: usize| &src[i * n_p..(i + 1) * n_p];
        fq.par_chunks_mut(n_p).enumerate().for_each(|(f, out)| {
            if f == 0 || f == n_q || f < cols.start || f > cols.end {
                return;
            }
            out.fill(0.0);
            let i = f - 1;
            let (a, b) = (row(i), row(i + 1));
            let (ap, am) = (r.ap[i], r.am[i + 1]);
            // right-moving rows: upwind cell i, upstream cell i - 1
            let rr = &self.right[pos..];
            let out_r = &mut out[pos..];
            if limited && i >= 1 {
                let k = r.ap[i - 1] * (ap / r.am[i]);
                let c = &row(i - 1)[pos..];
                for ((((o, &v), &x), &y), &z) in out_r.iter_mut().zip(rr).zip(&a[pos..]).zip(&b[pos..]).zip(c) {
                    let fwd = x * v * ap;
                    let down = y * v * am - fwd;
                    let up = fwd - z * v * k;
                    *o = fwd + 0.5 * minmod(up, down);
                }
            } else {
                for ((o, &v), &x) in out_r.iter_mut().zip(rr).zip(&a[pos..]) {
                    *o = x * v * ap;
                }
            }
            // left-moving rows: upwind cell i + 1, upstream cell i + 2
            let rl = &self.left[..neg];
            let out_l = &mut out[..neg];
            if limited && i + 2 < n_q {
                let k = r.am[i + 2] * (am / r.ap[i + 1]);
                let c = &row(i + 2)[..neg];
                for ((((o, &v), &x), &y), &z) in out_l.iter_mut().zip(rl).zip(&b[..neg]).zip(&a[..neg]).zip(c) {
                    let bwd = x * v * am;
                    let down = y * v * ap - bwd;
                    let up = bwd - z * v * k;
                    *o = -(bwd + 0.5 * minmod(up, down));
                }
            } else {
                for ((o, &v), &x) in out_l.iter_mut().zip(rl).zip(&b[..neg]) {
                    *o = -(x * v * am);
                }
            }
        });
    }

    /// Fluxes through the `p`-faces; `fp[i * (n_p + 1) + f]` is the flux from
    /// `f - 1` to `f` in column `i`.
    fn p_fluxes(&self, src: &[f64], fp: &mut [f64], r: &FieldRates, limited: bool, cols: &Range<usize>) {
        let n_p = self.grid.n_p;
        let (up, down) = (&self.up[..n_p - 1], &self.down[1..]);
        fp.par_chunks_mut(n_p + 1).enumerate().for_each(|(i, out)| {
            if !cols.contains(&i) {
                return;
            }
            let col = &src[i * n_p..(i + 1) * n_p];
            let (cp, cn) = (r.cpos[i], r.cneg[i]);
            out.fill(0.0);
            // face f (1..n_p) lies between cells f - 1 and f
            if cp > 0.0 {
                out[1] = col[0] * cp * up[0];
                let faces = &mut out[2..n_p];
                let (x, y, z) = (&col[1..n_p - 1], &col[2..], &col[..n_p - 2]);
                let (u, d, k) = (&up[1..], &down[1..], &self.kp[1..n_p - 1]);
                if limited {
                    let it = faces.iter_mut().zip(x).zip(y).zip(z).zip(u).zip(d).zip(k);
                    for ((((((o, &x), &y), &z), &u), &d), &k) in it {
                        let fwd = x * cp * u;
                        let down = y * cp * d - fwd;
                        let back = fwd - z * cp * k;
                        *o = fwd + 0.5 * minmod(back, down);
                    }
                } else {
                    for ((o, &x), &u) in faces.iter_mut().zip(x).zip(u) {
                        *o = x * cp * u;
                    }
                }
            } else if cn > 0.0 {
                out[n_p - 1] = -(col[n_p - 1] * cn * down[n_p - 2]);
                let faces = &mut out[1..n_p - 1];
                let (x, y, z) = (&col[1..n_p - 1], &col[..n_p - 2], &col[2..]);
                let (d, u, k) = (&down[..n_p - 2], &up[..n_p - 2], &self.kn[..n_p - 2]);
                if limited {
                    let it = faces.iter_mut().zip(x).zip(y).zip(z).zip(d).zip(u).zip(k);
                    for ((((((o, &x), &y), &z), &d), &u), &k) in it {
                        let bwd = x * cn * d;
                        let down = y * cn * u - bwd;
                        let back = bwd - z * cn * k;
                        *o = -(bwd + 0.5 * minmod(back, down));
                    }
                } else {
                    for ((o, &x), &d) in faces.iter_mut().zip(x).zip(d) {
                        *o = -(x * cn * d);
                    }
                }
            }
        });
    }
}

fn update(values: &mut [f64], fq: &[f64], fp: &[f64], n_p: usize, h: f64, cols: &Range<usize>) {
    values.par_chunks_mut(n_p).enumerate().for_each(|(i, cells)| {
        if !cols.contains(&i) {
            return;
        }
        let q_in = &fq[i * n_p..(i + 1) * n_p];
        let q_out = &fq[(i + 1) * n_p..(i + 2) * n_p];
        let p = &fp[i * (n_p + 1)..(i + 1) * (n_p + 1)];
        for j in 0..n_p {
            cells[j] += h * ((q_in[j] - q_out[j]) + (p[j] - p[j + 1]));
        }
    });
}

/// First-order upwind step for `∂_t rho = -p ∂_q rho` in each momentum row,
/// with closed walls in `q`. Requires `dt·max|p| <= Δq`.
pub fn transport_q(rho: &mut PhaseDensity, dt: f64) -> Result<()> {
    let g = *rho.grid();
    let dq = g.dq();
    let p = g.p_nodes();
    let p_max = p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if dt * p_max > dq * (1.0 + 1e-12) {
        return Err(Error::Cfl {
            dt,
            admissible: dq / p_max,
        });
    }
    let (n_q, n_p) = (g.n_q, g.n_p);
    let src = rho.values().to_vec();
    let nu: Vec<f64> = p.iter().map(|p| (dt * p / dq).clamp(-1.0, 1.0)).collect();
    let dst = rho.values_mut();
    for i in 0..n_q {
        for (j, &c) in nu.iter().enumerate() {
            let k = i * n_p + j;
            let stay = if c > 0.0 && i + 1 < n_q || c < 0.0 && i > 0 { 1.0 - c.abs() } else { 1.0 };
            let mut v = src[k] * stay;
            if c > 0.0 && i > 0 {
                v += c * src[k - n_p];
            }
            if c < 0.0 && i + 1 < n_q {
                v -= c * src[k + n_p];
            }
            dst[k] = v;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ConfiningPotential, InteractionPotential};

    fn gibbs(g: PhaseGrid, field: &EffectivePotentialField, lambda: f64) -> PhaseDensity {
        let p = g.p_nodes();
        let mut values = vec![0.0; g.len()];
        let wmin = field.w.iter().cloned().fold(f64::INFINITY, f64::min);
        for i in 0..g.n_q {
            for j in 0..g.n_p {
                values[g.index(i, j)] = (-(0.5 * p[j] * p[j] + field.w[i] - wmin) / lambda).exp();
            }
        }
        PhaseDensity::from_values(g, values).unwrap()
    }

    #[test]
    fn gibbs_state_is_stationary() {
        let lambda = 0.3;
        let g = PhaseGrid::standard(64).unwrap();
        let v = ConfiningPotential::double_well();
        let seed = PhaseDensity::gaussian(g, 0.4, 0.3, 0.0, 0.3).unwrap();
        let field = EffectivePotentialField::from_density(&seed, &v, &InteractionPotential::quadratic(1.0)).unwrap();
        let eq = gibbs(g, &field, lambda);
        let mut rho = eq.clone();
        let t = HamiltonianTransport::new(&g, lambda);
        let mut scratch = Vec::new();
        let k = t.apply(&mut rho, 0.01, &field, Transport::Upwind, 0.9, 1000, &mut scratch).unwrap();
        assert!(k >= 1);
        let d = eq.l1_distance(&rho).unwrap();
        assert!(d < 1e-13, "{d}");
    }

    #[test]
    fn muscl_keeps_gibbs_state_and_positivity() {
        let lambda = 0.3;
        let g = PhaseGrid::standard(64).unwrap();
        let v = ConfiningPotential::double_well();
        let seed = PhaseDensity::gaussian(g, 0.4, 0.3, 0.0, 0.3).unwrap();
        let field = EffectivePotentialField::from_density(&seed, &v, &InteractionPotential::quadratic(1.0)).unwrap();
        let eq = gibbs(g, &field, lambda);
        let t = HamiltonianTransport::new(&g, lambda);
        let mut rho = eq.clone();
        t.apply(&mut rho, 0.01, &field, Transport::Muscl, 0.9, 1000, &mut Vec::new()).unwrap();
        assert!(eq.l1_distance(&rho).unwrap() < 1e-12);

        let mut rho = PhaseDensity::point_mass(g, 30, 40).unwrap();
        for _ in 0..20 {
            t.apply(&mut rho, 0.01, &field, Transport::Muscl, 0.9, 1000, &mut Vec::new()).unwrap();
            assert!(rho.values().iter().all(|x| *x >= 0.0));
        }
        assert!((rho.mass() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn fitted_velocity_approximates_momentum() {
        let g = PhaseGrid::standard(256).unwrap();
        let t = HamiltonianTransport::new(&g, 0.3);
        let v = t.fitted_velocity();
        for (j, &vj) in v.iter().enumerate().take(g.n_p - 10).skip(10) {
            assert!((vj - g.p(j)).abs() < 0.05 * (1.0 + g.p(j).abs()), "{} vs {}", vj, g.p(j));
        }
    }

    #[test]
    fn markov_properties() {
        let lambda = 0.5;
        let g = PhaseGrid::standard(48).unwrap();
        let v = ConfiningPotential::double_well();
        let mut rho = PhaseDensity::gaussian(g, 1.5, 0.2, -1.0, 0.3).unwrap();
        let field = EffectivePotentialField::from_density(&rho, &v, &InteractionPotential::quadratic(1.0)).unwrap();
        let t = HamiltonianTransport::new(&g, lambda);
        let mut scratch = Vec::new();
        let m1_before = rho.q_moments(1)[1];
        t.apply(&mut rho, 0.05, &field, Transport::Upwind, 0.9, 1000, &mut scratch).unwrap();
        assert!((rho.mass() - 1.0).abs() < 1e-13);
        assert!(rho.values().iter().all(|x| *x >= 0.0));
        // negative momentum pulls mass towards smaller q
        assert!(rho.q_moments(1)[1] < m1_before);
    }

    #[test]
    fn cfl_rejection_reports_admissible_step() {
        let g = PhaseGrid::standard(64).unwrap();
        let v = ConfiningPotential::double_well();
        let mut rho = PhaseDensity::gaussian(g, 0.0, 1.0, 0.0, 1.0).unwrap();
        let field = EffectivePotentialField::from_density(&rho, &v, &InteractionPotential::none()).unwrap();
        let t = HamiltonianTransport::new(&g, 0.3);
        let err = t.apply(&mut rho, 1.0, &field, Transport::Upwind, 0.9, 2, &mut Vec::new()).unwrap_err();
        match err {
            Error::Cfl { dt, admissible } => {
                assert_eq!(dt, 1.0);
                assert!(admissible < 1.0 && admissible > 0.0);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn upwind_moves_one_cell_at_unit_cfl() {
        let g = PhaseGrid::standard(32).unwrap();
        let (i0, j0) = (10, 25);
        let p0 = g.p(j0);
        assert!(p0 > 0.0);
        let mut rho = PhaseDensity::point_mass(g, i0, j0).unwrap();
        // unit CFL for this row exceeds the bound set by |p_max|, so use a
        // grid whose top row is the one being moved
        let g2 = PhaseGrid::new(-6.0, 6.0, -p0 - 0.5 * g.dp(), p0 + 0.5 * g.dp(), 32, 8).unwrap();
        let mut rho2 = PhaseDensity::point_mass(g2, i0, 7).unwrap();
        let dt = g2.dq() / g2.p(7);
        transport_q(&mut rho2, dt).unwrap();
        assert!((rho2.at(i0 + 1, 7) * g2.cell_area() - 1.0).abs() < 1e-12);
        assert!(rho2.at(i0, 7) * g2.cell_area() < 1e-12);
        // and with a smaller step on the original grid the mass still moves right
        transport_q(&mut rho, 0.5 * g.dq() / 6.0).unwrap();
        assert!(rho.at(i0 + 1, j0) > 0.0);
    }

    #[test]
    fn zero_momentum_row_is_unchanged() {
        let g = PhaseGrid::new(-6.0, 6.0, -6.0, 6.0, 32, 33).unwrap();
        assert_eq!(g.p(16), 0.0);
        let rho0 = PhaseDensity::gaussian(g, 0.5, 1.0, 0.0, 1.0).unwrap();
        let mut rho = rho0.clone();
        transport_q(&mut rho, 0.01).unwrap();
        for i in 0..g.n_q {
            assert_eq!(rho.at(i, 16), rho0.at(i, 16));
        }
        // the fitted scheme also leaves the p = 0 row at rest in q
        let t = HamiltonianTransport::new(&g, 0.5);
        assert_eq!(t.fitted_velocity()[16], 0.0);
    }

    #[test]
    fn upwind_preserves_reflection_symmetry() {
        let g = PhaseGrid::standard(32).unwrap();
        let mut rho = PhaseDensity::from_function(g, |q, p| (-(q - p).powi(2) - 0.5 * q * q - 0.1 * p * p).exp()).unwrap();
        assert_eq!(rho.reflection_asymmetry(), 0.0);
        for _ in 0..10 {
            transport_q(&mut rho, 0.01).unwrap();
        }
        assert!(rho.reflection_asymmetry() < 1e-15);
        assert!((rho.mass() - 1.0).abs() < 1e-13);
    }
}
