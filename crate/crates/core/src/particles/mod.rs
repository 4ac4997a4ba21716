//! Interacting particle approximation of the kinetic equation.
//!
//! Each particle follows the underdamped Langevin dynamics
//! `dQ = P dt`, `dP = -(V'(Q) + (F' * ρ̂)(Q) + P) dt + √(2λ) dB`, where `ρ̂`
//! is the empirical measure of the ensemble. Because `F` is a polynomial
//! the mean-field force is expanded in empirical moments, which costs
//! `O(N · deg F)` per evaluation instead of `O(N²)`.
//!
//! All reductions are summed in fixed-size chunks in a fixed order, and the
//! normal variates are drawn sequentially in particle order, so a run is
//! bit-reproducible for a given seed whatever the number of worker threads.

mod io;
mod kde;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use io::{read_ensemble, write_ensemble, write_stats_csv, ENSEMBLE_MAGIC, ENSEMBLE_VERSION, STATS_HEADER};
pub use kde::{kde_entropy, Bandwidth};

use crate::error::{positive, Error, Result};
use crate::grid::PhaseDensity;
use crate::model::{ConfiningPotential, InteractionPotential};

/// Reduction chunk; fixed so that sums do not depend on the thread count.
const CHUNK: usize = 4096;

/// Law of the initial particle positions.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialLaw {
    /// Independent normals in `q` and `p`.
    Gaussian { mean_q: f64, var_q: f64, mean_p: f64, var_p: f64 },
    /// Atoms at `a` and `b`, with probability `weight_a` for `a`.
    TwoPoint { a: (f64, f64), b: (f64, f64), weight_a: f64 },
    /// Cell drawn by mass, then a uniform point inside the cell.
    Density(PhaseDensity),
}

#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    q: Vec<f64>,
    p: Vec<f64>,
    t: f64,
    seed: u64,
    rng: ChaCha8Rng,
}

impl PartialEq for ParticleEnsemble {
    fn eq(&self, other: &Self) -> bool {
        self.q == other.q && self.p == other.p && self.t == other.t && self.seed == other.seed
    }
}

impl ParticleEnsemble {
    /// Builds an ensemble from coordinates. Its noise stream is derived from
    /// `seed` but is distinct from the one [`init_ensemble`] continues with,
    /// so a reloaded snapshot does not replay the draws of its own past.
    pub fn new(q: Vec<f64>, p: Vec<f64>, t: f64, seed: u64) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::InvalidParameter {
                name: "p",
                reason: format!("{} momenta for {} positions", p.len(), q.len()),
            });
        }
        if q.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: format!("need at least 2 particles, got {}", q.len()),
            });
        }
        if !t.is_finite() {
            return Err(Error::InvalidParameter {
                name: "t",
                reason: format!("must be finite, got {t}"),
            });
        }
        if let Some(index) = first_non_finite(&q, &p) {
            return Err(Error::NonFinite { index, t });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Ok(ParticleEnsemble { q, p, t, seed, rng })
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Empirical `[1, E q, E q², ...]` up to `k_max`.
    pub fn q_moments(&self, k_max: usize) -> Vec<f64> {
        mean_powers(&self.q, 0.0, k_max)
    }

    pub fn p_moments(&self, k_max: usize) -> Vec<f64> {
        mean_powers(&self.p, 0.0, k_max)
    }

    /// First and second moments of both coordinates at the current time.
    pub fn stats(&self) -> ParticleStats {
        let q = self.q_moments(2);
        let p = self.p_moments(2);
        ParticleStats {
            t: self.t,
            m1_q: q[1],
            m2_q: q[2],
            m1_p: p[1],
            m2_p: p[2],
            kde_entropy: None,
        }
    }

    /// Standard errors of the empirical `E q` and `E q²`, treating the
    /// particles as independent.
    pub fn q_standard_errors(&self) -> (f64, f64) {
        let m = self.q_moments(4);
        let n = self.len() as f64;
        let var1 = (m[2] - m[1] * m[1]).max(0.0);
        let var2 = (m[4] - m[2] * m[2]).max(0.0);
        ((var1 / n).sqrt(), (var2 / n).sqrt())
    }

    fn check_finite(&self) -> Result<()> {
        match first_non_finite(&self.q, &self.p) {
            Some(index) => Err(Error::NonFinite { index, t: self.t }),
            None => Ok(()),
        }
    }
}

fn first_non_finite(q: &[f64], p: &[f64]) -> Option<usize> {
    q.iter().zip(p).position(|(a, b)| !a.is_finite() || !b.is_finite())
}

/// `[1, mean (x - shift), mean (x - shift)², ...]`, summed chunk-wise in a
/// fixed order.
fn mean_powers(x: &[f64], shift: f64, k_max: usize) -> Vec<f64> {
    let partial: Vec<Vec<f64>> = x
        .par_chunks(CHUNK)
        .map(|c| {
            let mut s = vec![0.0; k_max + 1];
            for &v in c {
                let y = v - shift;
                let mut a = 1.0;
                for m in s.iter_mut() {
                    *m += a;
                    a *= y;
                }
            }
            s
        })
        .collect();
    let mut total = vec![0.0; k_max + 1];
    for s in partial {
        for (t, v) in total.iter_mut().zip(s) {
            *t += v;
        }
    }
    let n = x.len() as f64;
    total.iter_mut().for_each(|t| *t /= n);
    total
}

/// One row of the particle statistics series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParticleStats {
    pub t: f64,
    pub m1_q: f64,
    pub m2_q: f64,
    pub m1_p: f64,
    pub m2_p: f64,
    pub kde_entropy: Option<f64>,
}

/// Draws `n` independent particles from `law`.
pub fn init_ensemble(law: &InitialLaw, n: usize, seed: u64) -> Result<ParticleEnsemble> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = Vec::with_capacity(n);
    let mut p = Vec::with_capacity(n);
    match law {
        InitialLaw::Gaussian { mean_q, var_q, mean_p, var_p } => {
            positive("var_q", *var_q)?;
            positive("var_p", *var_p)?;
            let (sq, sp) = (var_q.sqrt(), var_p.sqrt());
            for _ in 0..n {
                let zq: f64 = rng.sample(StandardNormal);
                let zp: f64 = rng.sample(StandardNormal);
                q.push(mean_q + sq * zq);
                p.push(mean_p + sp * zp);
            }
        }
        InitialLaw::TwoPoint { a, b, weight_a } => {
            if !(0.0..=1.0).contains(weight_a) {
                return Err(Error::InvalidParameter {
                    name: "weight_a",
                    reason: format!("must lie in [0, 1], got {weight_a}"),
                });
            }
            for _ in 0..n {
                let (x, y) = if rng.gen::<f64>() < *weight_a { a } else { b };
                q.push(*x);
                p.push(*y);
            }
        }
        InitialLaw::Density(rho) => {
            let g = *rho.grid();
            let cells = WeightedIndex::new(rho.values())
                .map_err(|e| Error::InvalidDensity(format!("cannot sample: {e}")))?;
            for _ in 0..n {
                let k = cells.sample(&mut rng);
                let (i, j) = (k / g.n_p, k % g.n_p);
                let u: f64 = rng.gen::<f64>() - 0.5;
                let v: f64 = rng.gen::<f64>() - 0.5;
                q.push(g.q(i) + u * g.dq());
                p.push(g.p(j) + v * g.dp());
            }
        }
    }
    let mut ens = ParticleEnsemble::new(q, p, 0.0, seed)?;
    // keep drawing from the same stream
    ens.rng = rng;
    Ok(ens)
}

/// `(F' * ρ̂)(q_i)` for every particle, by moment expansion about the
/// empirical mean.
pub fn mean_field_force(q: &[f64], f: &InteractionPotential) -> Result<Vec<f64>> {
    f.ensure_even()?;
    if f.is_zero() || q.is_empty() {
        return Ok(vec![0.0; q.len()]);
    }
    let center = mean_powers(q, 0.0, 1)[1];
    let moments = mean_powers(q, center, f.degree());
    let force = f.convolve(&moments)?.derivative();
    Ok(q.par_iter().map(|&x| force.eval(x - center)).collect())
}

/// The same force by direct `O(N²)` summation of `F'(q_i - q_j) / N`.
pub fn pairwise_force(q: &[f64], f: &InteractionPotential) -> Vec<f64> {
    let n = q.len() as f64;
    q.iter()
        .map(|&x| q.iter().map(|&y| f.grad(x - y)).sum::<f64>() / n)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Kick, drift, exact Ornstein-Uhlenbeck, drift, kick.
    #[default]
    Baoab,
    EulerMaruyama,
}

/// Potentials, temperature and step of a particle run.
#[derive(Debug, Clone)]
pub struct ParticleDynamics {
    pub v: ConfiningPotential,
    pub f: InteractionPotential,
    pub lambda: f64,
    pub dt: f64,
    pub integrator: Integrator,
}

impl ParticleDynamics {
    pub fn new(v: ConfiningPotential, f: InteractionPotential, lambda: f64, dt: f64) -> Result<Self> {
        positive("dt", dt)?;
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("must be finite and >= 0, got {lambda}"),
            });
        }
        f.ensure_even()?;
        Ok(ParticleDynamics {
            v,
            f,
            lambda,
            dt,
            integrator: Integrator::default(),
        })
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    /// `-V'(q_i) - (F' * ρ̂)(q_i)`.
    pub fn force(&self, q: &[f64]) -> Result<Vec<f64>> {
        let mut force = mean_field_force(q, &self.f)?;
        force.par_iter_mut().zip(q).for_each(|(f, &x)| *f = -self.v.grad(x) - *f);
        Ok(force)
    }

    /// Advances the ensemble by one step, consuming exactly `N` normal
    /// variates (also when `λ = 0`, to keep streams aligned).
    pub fn step(&self, ens: &mut ParticleEnsemble) -> Result<()> {
        let dt = self.dt;
        let noise: Vec<f64> = (0..ens.len()).map(|_| ens.rng.sample(StandardNormal)).collect();
        match self.integrator {
            Integrator::Baoab => {
                let h = 0.5 * dt;
                let damp = (-dt).exp();
                let sigma = (-self.lambda * (-2.0 * dt).exp_m1()).sqrt();
                let force = self.force(&ens.q)?;
                kick(&mut ens.p, &force, h);
                drift(&mut ens.q, &ens.p, h);
                ens.p.par_iter_mut().zip(&noise).for_each(|(p, z)| *p = damp * *p + sigma * z);
                drift(&mut ens.q, &ens.p, h);
                let force = self.force(&ens.q)?;
                kick(&mut ens.p, &force, h);
            }
            Integrator::EulerMaruyama => {
                let sigma = (2.0 * self.lambda * dt).sqrt();
                let force = self.force(&ens.q)?;
                (&mut ens.q, &mut ens.p, &force, &noise)
                    .into_par_iter()
                    .for_each(|(q, p, f, z)| {
                        let p0 = *p;
                        *q += dt * p0;
                        *p = p0 + dt * (f - p0) + sigma * z;
                    });
            }
        }
        ens.t += dt;
        ens.check_finite()
    }

    /// Number of whole steps that fit in `duration`.
    pub fn steps_for(&self, duration: f64) -> usize {
        (duration / self.dt * (1.0 + 1e-12)).floor() as usize
    }

    /// Steps for `duration`, recording statistics every `stride` steps (and
    /// once before the first step).
    pub fn run(
        &self,
        ens: &mut ParticleEnsemble,
        duration: f64,
        stride: usize,
        mut observer: impl FnMut(&ParticleEnsemble),
    ) -> Result<Vec<ParticleStats>> {
        if stride == 0 {
            return Err(Error::InvalidParameter {
                name: "stride",
                reason: "must be at least 1".into(),
            });
        }
        let mut series = vec![ens.stats()];
        let t0 = ens.t;
        for k in 1..=self.steps_for(duration) {
            self.step(ens)?;
            // no drift from summing dt
            ens.t = t0 + k as f64 * self.dt;
            if k % stride == 0 {
                observer(ens);
                series.push(ens.stats());
            }
        }
        Ok(series)
    }
}

fn kick(p: &mut [f64], force: &[f64], h: f64) {
    p.par_iter_mut().zip(force).for_each(|(p, f)| *p += h * f);
}

fn drift(q: &mut [f64], p: &[f64], h: f64) {
    q.par_iter_mut().zip(p).for_each(|(q, p)| *q += h * p);
}

/// One BAOAB step of the ensemble.
pub fn step_particles(
    ens: &mut ParticleEnsemble,
    v: &ConfiningPotential,
    f: &InteractionPotential,
    lambda: f64,
    dt: f64,
) -> Result<()> {
    ParticleDynamics::new(v.clone(), f.clone(), lambda, dt)?.step(ens)
}
