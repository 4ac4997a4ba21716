//! Time stepping of the kinetic equation on a [`PhaseDensity`].
//!
//! The default [`Splitting::Hamiltonian`] scheme is a Strang composition of
//! a half step of the Hamiltonian transport `-p ∂_q + W' ∂_p`, a full
//! implicit Ornstein-Uhlenbeck step `∂_p (p · + λ ∂_p ·)`, and another half
//! transport step, with `W = V + F * rho` recomputed from the moments before
//! each transport half step. Each piece is a Markov kernel fixing the
//! discrete Gibbs state of its frozen field, so the discrete free energy is
//! non-increasing (exactly, up to round-off, for quadratic `F`) and the
//! self-consistent Gibbs states are discrete steady states.
//!
//! [`Splitting::Classic`] is the textbook alternative: upwind `q`-advection
//! plus a Chang-Cooper step for the full momentum drift `W' + p`. It is kept
//! for comparison; its steady states differ from the Gibbs states by the
//! splitting error.

mod fokker_planck;
mod transport;
mod tridiag;

use std::io::Write;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

pub use fokker_planck::{bernoulli, fokker_planck_p, OrnsteinUhlenbeckStep};
pub(crate) use fokker_planck::momentum_weights;
pub use transport::{transport_q, HamiltonianTransport, Transport};
pub use tridiag::TwistedFactor;

use crate::diagnostics::{free_energy_with_field, FreeEnergyReport};
use crate::error::{positive, Error, Result};
use crate::field::EffectivePotentialField;
use crate::grid::{PhaseDensity, PhaseGrid, BOUNDARY_MASS_WARNING};
use crate::model::{ConfiningPotential, InteractionPotential};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitting {
    #[default]
    Hamiltonian,
    Classic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    /// Diagnostics are sampled every `stride` steps.
    pub stride: usize,
    pub lambda: f64,
    pub splitting: Splitting,
    pub transport: Transport,
    /// Explicit sub-steps satisfy `h · outflow <= cfl`.
    pub cfl: f64,
    /// Upper limit on explicit sub-steps per transport half step; beyond it
    /// the step is rejected as a CFL violation.
    pub max_substeps: usize,
}

impl SolverConfig {
    pub fn new(dt: f64, lambda: f64) -> Self {
        SolverConfig {
            dt,
            stride: 1,
            lambda,
            splitting: Splitting::default(),
            transport: Transport::default(),
            cfl: 0.9,
            max_substeps: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("dt", self.dt)?;
        positive("lambda", self.lambda)?;
        if self.stride == 0 {
            return Err(Error::InvalidParameter {
                name: "stride",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::InvalidParameter {
                name: "cfl",
                reason: format!("must lie in (0, 1), got {}", self.cfl),
            });
        }
        if self.max_substeps == 0 {
            return Err(Error::InvalidParameter {
                name: "max_substeps",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// One row of the diagnostic time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticSample {
    pub t: f64,
    pub energy: FreeEnergyReport,
    pub mass: f64,
    pub m1: f64,
    pub m2: f64,
    pub boundary_mass: f64,
}

pub const SERIES_HEADER: &str =
    "t,free_energy,kinetic,confinement,interaction,entropy,dissipation,mass,M1,M2,boundary_mass";

/// Writes the series as CSV. The `entropy` column is the weighted term
/// `λ ∬ rho log rho`, so the four energy columns add up to `free_energy`.
pub fn write_series_csv<W: Write>(series: &[DiagnosticSample], mut out: W) -> Result<()> {
    writeln!(out, "{SERIES_HEADER}")?;
    for s in series {
        let e = &s.energy;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            s.t,
            e.total,
            e.kinetic,
            e.confinement,
            e.interaction,
            e.entropy_term,
            e.dissipation,
            s.mass,
            s.m1,
            s.m2,
            s.boundary_mass
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub density: PhaseDensity,
    /// Diagnostics of the initial density (not part of `series`).
    pub initial: DiagnosticSample,
    pub series: Vec<DiagnosticSample>,
    pub steps: usize,
    /// Total mass removed by clipping negative values.
    pub clipped: f64,
}

#[derive(Debug, Clone)]
pub struct Solver {
    grid: PhaseGrid,
    v: ConfiningPotential,
    f: InteractionPotential,
    cfg: SolverConfig,
    transport: HamiltonianTransport,
    ou: OrnsteinUhlenbeckStep,
    scratch: Vec<f64>,
    last_substeps: usize,
}

impl Solver {
    pub fn new(grid: PhaseGrid, v: ConfiningPotential, f: InteractionPotential, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        f.ensure_even()?;
        Ok(Solver {
            transport: HamiltonianTransport::new(&grid, cfg.lambda),
            ou: OrnsteinUhlenbeckStep::new(&grid, cfg.dt, cfg.lambda)?,
            grid,
            v,
            f,
            cfg,
            scratch: Vec::new(),
            last_substeps: 0,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    /// Explicit sub-steps used by the last transport half step.
    pub fn last_substeps(&self) -> usize {
        self.last_substeps
    }

    pub fn field(&self, rho: &PhaseDensity) -> Result<EffectivePotentialField> {
        EffectivePotentialField::from_density(rho, &self.v, &self.f)
    }

    /// One full step. Returns the mass removed by clipping (normally zero).
    pub fn step(&mut self, rho: &mut PhaseDensity) -> Result<f64> {
        if rho.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let dt = self.cfg.dt;
        match self.cfg.splitting {
            Splitting::Hamiltonian => {
                self.half_transport(rho)?;
                self.ou.apply(rho);
                self.half_transport(rho)?;
            }
            Splitting::Classic => {
                let p_max = self.grid.p_max.abs().max(self.grid.p_min.abs());
                let admissible = self.cfg.cfl * self.grid.dq() / p_max;
                if dt > admissible {
                    return Err(Error::Cfl { dt, admissible });
                }
                transport_q(rho, 0.5 * dt)?;
                let field = self.field(rho)?;
                fokker_planck_p(rho, dt, self.cfg.lambda, &field)?;
                transport_q(rho, 0.5 * dt)?;
            }
        }
        Ok(clip_negative(rho))
    }

    fn half_transport(&mut self, rho: &mut PhaseDensity) -> Result<()> {
        let field = self.field(rho)?;
        let k = self
            .transport
            .apply(
                rho,
                0.5 * self.cfg.dt,
                &field,
                self.cfg.transport,
                self.cfg.cfl,
                self.cfg.max_substeps,
                &mut self.scratch,
            )
            .map_err(|e| match e {
                // report the admissible full step
                Error::Cfl { admissible, .. } => Error::Cfl {
                    dt: self.cfg.dt,
                    admissible: 2.0 * admissible,
                },
                e => e,
            })?;
        self.last_substeps = k;
        Ok(())
    }

    pub fn sample(&self, rho: &PhaseDensity, t: f64) -> Result<DiagnosticSample> {
        let field = self.field(rho)?;
        let energy = free_energy_with_field(rho, &self.v, &field, self.cfg.lambda);
        let m = rho.q_moments(2);
        Ok(DiagnosticSample {
            t,
            energy,
            mass: rho.mass(),
            m1: m[1],
            m2: m[2],
            boundary_mass: rho.boundary_mass(),
        })
    }

    /// Number of whole steps that fit in `t_end`.
    pub fn steps_for(&self, t_end: f64) -> usize {
        (t_end / self.cfg.dt * (1.0 + 1e-12)).floor() as usize
    }

    /// Steps to `t_end`, sampling every `stride` steps and handing each
    /// sample to `observer`.
    pub fn run(
        &mut self,
        rho0: PhaseDensity,
        t_end: f64,
        mut observer: impl FnMut(&DiagnosticSample),
    ) -> Result<RunOutput> {
        if t_end.is_nan() || t_end < 0.0 {
            return Err(Error::InvalidParameter {
                name: "t_end",
                reason: format!("must be >= 0, got {t_end}"),
            });
        }
        let mut rho = rho0;
        let initial = self.sample(&rho, 0.0)?;
        let steps = self.steps_for(t_end);
        let mut series = Vec::with_capacity(steps / self.cfg.stride);
        let mut clipped = 0.0;
        let mut warned = false;
        for k in 1..=steps {
            let c = self.step(&mut rho)?;
            if c > 1e-10 {
                warn!("clipped {c:e} of negative mass in step {k}");
            }
            clipped += c;
            if k % self.cfg.stride == 0 {
                let s = self.sample(&rho, k as f64 * self.cfg.dt)?;
                if !warned && s.boundary_mass > BOUNDARY_MASS_WARNING {
                    warn!("boundary mass {:e} at t = {} exceeds {BOUNDARY_MASS_WARNING:e}", s.boundary_mass, s.t);
                    warned = true;
                }
                observer(&s);
                series.push(s);
            }
        }
        debug!("{steps} steps, last transport half step used {} sub-steps", self.last_substeps);
        Ok(RunOutput {
            density: rho,
            initial,
            series,
            steps,
            clipped,
        })
    }
}

/// Values below this are flushed to zero after every step. The far tails of
/// a relaxing density otherwise decay through the subnormal range, where
/// floating-point arithmetic is many times slower.
pub const FLUSH_BELOW: f64 = 1e-200;

/// Sets negative values to zero and rescales to the pre-clip mass, then
/// flushes values below [`FLUSH_BELOW`]. Returns the clipped negative mass.
fn clip_negative(rho: &mut PhaseDensity) -> f64 {
    let area = rho.grid().cell_area();
    let negative: f64 = rho.values().iter().filter(|v| **v < 0.0).map(|v| -v).sum::<f64>() * area;
    if negative > 0.0 {
        let before = rho.mass();
        rho.values_mut().iter_mut().for_each(|v| *v = v.max(0.0));
        let after = rho.mass();
        rho.scale(before / after);
    }
    for v in rho.values_mut() {
        if *v < FLUSH_BELOW {
            *v = 0.0;
        }
    }
    negative
}

/// `∝ exp(-(p²/2 + W(q))/λ)` for a given field: the discrete Gibbs state the
/// scheme leaves invariant.
pub fn gibbs_state(grid: &PhaseGrid, w: &[f64], lambda: f64) -> Result<PhaseDensity> {
    let wmin = w.iter().cloned().fold(f64::INFINITY, f64::min);
    let p = grid.p_nodes();
    let h: Vec<f64> = p.iter().map(|p| (-0.5 * p * p / lambda).exp()).collect();
    let mut values = Vec::with_capacity(grid.len());
    for wi in w {
        let g = (-(wi - wmin) / lambda).exp();
        values.extend(h.iter().map(|h| g * h));
    }
    PhaseDensity::from_values(*grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn benchmark(n: usize, lambda: f64, dt: f64) -> (Solver, PhaseDensity) {
        let g = PhaseGrid::standard(n).unwrap();
        let cfg = SolverConfig::new(dt, lambda);
        let s = Solver::new(g, ConfiningPotential::double_well(), InteractionPotential::quadratic(1.0), cfg).unwrap();
        let rho = PhaseDensity::gaussian(g, 0.0, 1.0, 0.0, 1.0).unwrap();
        (s, rho)
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(0.0, 1.0).validate().is_err());
        assert!(SolverConfig::new(1e-3, -1.0).validate().is_err());
        let mut c = SolverConfig::new(1e-3, 1.0);
        c.stride = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_length_run_is_a_no_op() {
        let (mut s, rho) = benchmark(32, 0.5, 1e-2);
        let out = s.run(rho.clone(), 0.0, |_| {}).unwrap();
        assert!(out.series.is_empty());
        assert_eq!(out.density, rho);
        let out = s.run(rho.clone(), 0.5e-2, |_| {}).unwrap();
        assert_eq!(out.steps, 0);
    }

    #[test]
    fn mass_and_free_energy_over_a_short_run() {
        let (mut s, rho) = benchmark(48, 0.5, 1e-2);
        let mut seen = 0;
        let out = s.run(rho, 0.5, |_| seen += 1).unwrap();
        assert_eq!(seen, 50);
        let mut prev = out.initial.energy.total;
        for smp in &out.series {
            assert!((smp.mass - 1.0).abs() < 1e-12);
            assert!(smp.energy.total <= prev + 1e-12);
            prev = smp.energy.total;
        }
        assert_eq!(out.clipped, 0.0);
    }

    #[test]
    fn symmetric_data_stays_symmetric() {
        let cases = [
            (Splitting::Hamiltonian, Transport::Upwind),
            (Splitting::Hamiltonian, Transport::Muscl),
            (Splitting::Classic, Transport::Upwind),
        ];
        for (splitting, transport) in cases {
            let (mut s, _) = benchmark(32, 1.0, 1e-2);
            s.cfg.splitting = splitting;
            s.cfg.transport = transport;
            let g = *s.grid();
            let mut rho = PhaseDensity::from_function(g, |q, p| (-(q * q - 1.0).powi(2) - (p - 0.5 * q).powi(2)).exp())
                .unwrap();
            for _ in 0..50 {
                s.step(&mut rho).unwrap();
            }
            assert_eq!(rho.reflection_asymmetry(), 0.0, "{splitting:?} {transport:?}");
        }
    }

    #[test]
    fn gibbs_state_of_frozen_free_problem_is_fixed() {
        let g = PhaseGrid::standard(64).unwrap();
        let cfg = SolverConfig::new(1e-2, 1.0);
        let mut s = Solver::new(g, ConfiningPotential::harmonic(), InteractionPotential::none(), cfg).unwrap();
        let w: Vec<f64> = g.q_nodes().iter().map(|q| 0.5 * q * q).collect();
        let eq = gibbs_state(&g, &w, 1.0).unwrap();
        let mut rho = eq.clone();
        for _ in 0..100 {
            s.step(&mut rho).unwrap();
        }
        assert!(eq.l1_distance(&rho).unwrap() < 1e-12);
    }

    #[test]
    fn series_csv_header_and_rows() {
        let (mut s, rho) = benchmark(32, 0.5, 1e-2);
        s.cfg.stride = 5;
        let out = s.run(rho, 0.1, |_| {}).unwrap();
        let mut buf = Vec::new();
        write_series_csv(&out.series, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(SERIES_HEADER));
        assert_eq!(lines.count(), 2);
    }
}
