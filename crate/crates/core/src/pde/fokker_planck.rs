//! Implicit Chang-Cooper steps in the momentum direction.

use rayon::prelude::*;

use super::tridiag::TwistedFactor;
use crate::error::Result;
use crate::field::EffectivePotentialField;
use crate::grid::{PhaseDensity, PhaseGrid};

/// `B(x) = x / (e^x - 1)`, the exponential-fitting weight.
#[inline]
pub fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-10 {
        1.0 - 0.5 * x
    } else {
        x / x.exp_m1()
    }
}

/// Up/down jump weights `B(w_{j+1/2})`, `B(-w_{j-1/2})` for the Péclet
/// numbers `w_{j+1/2} = ((p_{j+1}² - p_j²)/2 + Δp·shift) / λ`; zero through
/// the walls.
pub(crate) fn momentum_weights(grid: &PhaseGrid, lambda: f64, shift: f64) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n_p;
    let dp = grid.dp();
    let p = grid.p_nodes();
    let mut up = vec![0.0; n];
    let mut down = vec![0.0; n];
    for j in 0..n - 1 {
        let w = (0.5 * (p[j + 1] * p[j + 1] - p[j] * p[j]) + dp * shift) / lambda;
        up[j] = bernoulli(w);
        down[j + 1] = bernoulli(-w);
    }
    (up, down)
}

/// `I - dt·L` for the generator with jump rates `κ·up`, `κ·down`.
fn implicit_factor(up: &[f64], down: &[f64], kappa_dt: f64) -> Result<TwistedFactor> {
    let n = up.len();
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut diag = vec![0.0; n];
    for j in 0..n {
        diag[j] = 1.0 + kappa_dt * (up[j] + down[j]);
        if j > 0 {
            lower[j] = -kappa_dt * up[j - 1];
        }
        if j + 1 < n {
            upper[j] = -kappa_dt * down[j + 1];
        }
    }
    TwistedFactor::new(lower, diag, upper)
}

/// Implicit Euler for `∂_t rho = ∂_p (p rho + λ ∂_p rho)` in every column.
///
/// The matrix is shared by all columns and factorised once. The discrete
/// Maxwellian `exp(-p_j²/(2λ))` is an exact null vector of the generator, the
/// step is a Markov kernel (non-negative, mass-preserving), and column masses
/// — hence the `q`-marginal — are unchanged.
#[derive(Debug, Clone)]
pub struct OrnsteinUhlenbeckStep {
    factor: TwistedFactor,
}

impl OrnsteinUhlenbeckStep {
    pub fn new(grid: &PhaseGrid, dt: f64, lambda: f64) -> Result<Self> {
        let (up, down) = momentum_weights(grid, lambda, 0.0);
        let kappa = lambda / (grid.dp() * grid.dp());
        Ok(OrnsteinUhlenbeckStep {
            factor: implicit_factor(&up, &down, kappa * dt)?,
        })
    }

    pub fn apply(&self, rho: &mut PhaseDensity) {
        let n_p = rho.grid().n_p;
        rho.values_mut()
            .par_chunks_mut(n_p)
            .for_each(|col| self.factor.solve(col));
    }
}

/// Chang-Cooper step for the full momentum drift `W'(q_i) + p` with
/// diffusion `λ`, implicit in time, no flux through the walls. Each column's
/// discrete equilibrium `∝ exp(-(p²/2 + p·W'(q_i))/λ)` is stationary.
pub fn fokker_planck_p(rho: &mut PhaseDensity, dt: f64, lambda: f64, field: &EffectivePotentialField) -> Result<()> {
    let grid = *rho.grid();
    let kappa_dt = lambda / (grid.dp() * grid.dp()) * dt;
    let factors = field
        .dw
        .par_iter()
        .map(|&shift| {
            let (up, down) = momentum_weights(&grid, lambda, shift);
            implicit_factor(&up, &down, kappa_dt)
        })
        .collect::<Result<Vec<_>>>()?;
    rho.values_mut()
        .par_chunks_mut(grid.n_p)
        .zip(factors.par_iter())
        .for_each(|(col, f)| f.solve(col));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ConfiningPotential, InteractionPotential};

    #[test]
    fn bernoulli_identities() {
        assert_eq!(bernoulli(0.0), 1.0);
        for x in [1e-12, 1e-6, 0.3, 2.0, 40.0, 800.0] {
            // B(-x) = B(x) + x
            assert!((bernoulli(-x) - bernoulli(x) - x).abs() < 1e-12 * (1.0 + x));
        }
        assert_eq!(bernoulli(1000.0), 0.0);
        assert_eq!(bernoulli(-1000.0), 1000.0);
    }

    #[test]
    fn maxwellian_columns_are_stationary() {
        let lambda = 0.7;
        let g = PhaseGrid::standard(64).unwrap();
        let rho0 = PhaseDensity::from_function(g, |q, p| (-p * p / (2.0 * lambda) - (q - 0.5).powi(2)).exp()).unwrap();
        let mut rho = rho0.clone();
        let step = OrnsteinUhlenbeckStep::new(&g, 0.01, lambda).unwrap();
        step.apply(&mut rho);
        let field = EffectivePotentialField::external(&rho0, &ConfiningPotential::new(vec![0.0, 0.0, 0.0, 0.0, 1.0]).unwrap());
        let mut zero = field.clone();
        zero.dw.iter_mut().for_each(|x| *x = 0.0);
        let mut rho2 = rho0.clone();
        fokker_planck_p(&mut rho2, 0.01, lambda, &zero).unwrap();
        for (a, (b, c)) in rho0.values().iter().zip(rho.values().iter().zip(rho2.values())) {
            assert!((a - b).abs() <= 1e-13 * a.max(1e-300) + 1e-15);
            assert!((a - c).abs() <= 1e-13 * a.max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn shifted_equilibrium_is_stationary() {
        let lambda = 0.4;
        let g = PhaseGrid::new(-2.0, 2.0, -6.0, 6.0, 32, 32).unwrap();
        let v = ConfiningPotential::double_well();
        let rho0 = PhaseDensity::gaussian(g, 0.3, 0.5, 0.0, 1.0).unwrap();
        let field = EffectivePotentialField::from_density(&rho0, &v, &InteractionPotential::none()).unwrap();
        let p = g.p_nodes();
        let mut values = vec![0.0; g.len()];
        for i in 0..g.n_q {
            for j in 0..g.n_p {
                values[g.index(i, j)] =
                    (-(p[j] + field.dw[i]).powi(2) / (2.0 * lambda)).exp() * (-(g.q(i) - 0.3).powi(2)).exp();
            }
        }
        let eq = PhaseDensity::from_values(g, values).unwrap();
        let mut rho = eq.clone();
        fokker_planck_p(&mut rho, 0.05, lambda, &field).unwrap();
        let rel = eq
            .values()
            .iter()
            .zip(rho.values())
            .map(|(a, b)| if *a > 1e-250 { (a - b).abs() / a } else { 0.0 })
            .fold(0.0, f64::max);
        assert!(rel < 1e-12, "{rel}");
    }

    #[test]
    fn mass_is_conserved() {
        let g = PhaseGrid::standard(48).unwrap();
        let v = ConfiningPotential::double_well();
        let rho0 = PhaseDensity::gaussian(g, 1.0, 0.3, 2.0, 0.2).unwrap();
        let field = EffectivePotentialField::from_density(&rho0, &v, &InteractionPotential::quadratic(1.0)).unwrap();
        let mut rho = rho0.clone();
        fokker_planck_p(&mut rho, 0.01, 0.3, &field).unwrap();
        assert!((rho.mass() - 1.0).abs() < 1e-12);
        let mut rho = rho0.clone();
        OrnsteinUhlenbeckStep::new(&g, 0.01, 0.3).unwrap().apply(&mut rho);
        assert!((rho.mass() - 1.0).abs() < 1e-12);
        assert!(rho.values().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn point_mass_relaxes_to_variance_lambda() {
        // Ornstein-Uhlenbeck oracle: stationary variance λ, reached from a point
        // mass with variance λ(1 - exp(-2t))
        let lambda = 1.0;
        let g = PhaseGrid::new(-1.0, 1.0, -8.0, 8.0, 8, 256).unwrap();
        let j0 = g.n_p / 2;
        let mut rho = PhaseDensity::point_mass(g, 3, j0).unwrap();
        let dt = 0.01;
        let step = OrnsteinUhlenbeckStep::new(&g, dt, lambda).unwrap();
        for _ in 0..1000 {
            step.apply(&mut rho);
        }
        let m = rho.p_moments(2);
        let var = m[2] - m[1] * m[1];
        assert!((var - lambda).abs() < 0.02 * lambda, "{var}");
    }
}
