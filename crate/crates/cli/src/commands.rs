use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context as _, Result};
use log::{debug, info};
use serde::Serialize;
use vfp_core::diagnostics::{entropy_split, free_energy, lower_bound, moment_report};
use vfp_core::grid::write_snapshot;
use vfp_core::model::check_coefficients;
use vfp_core::particles::{init_ensemble, kde_entropy, write_ensemble, write_stats_csv, ParticleDynamics};
use vfp_core::pde::{write_series_csv, Solver};
use vfp_core::stationary::{find_branches, fixed_point, phase_scan, scalar_self_consistency, write_scan_csv};

use crate::config::{read_density, Loaded};
use crate::exit::{Code, Failure};
use crate::provenance::Provenance;

pub struct Context {
    pub loaded: Loaded,
    pub command: &'static str,
    pub out: PathBuf,
    started: Instant,
}

impl Context {
    pub fn new(loaded: Loaded, command: &'static str, out: PathBuf) -> Self {
        Context {
            loaded,
            command,
            out,
            started: Instant::now(),
        }
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(file))
    }

    fn write_json(&self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// Writes `<command>.provenance.json` listing `outputs`.
    fn finish(&self, outputs: &[&str]) -> Result<()> {
        let record = Provenance::new(self.command, &self.loaded.path, &self.loaded.bytes, &self.loaded.config)
            .finish(outputs, self.started.elapsed());
        self.write_json(&format!("{}.provenance.json", self.command), &record)?;
        info!("wrote {} to {}", outputs.join(", "), self.out.display());
        Ok(())
    }
}

/// Prints the assumption report; exit 2 when a condition on the potentials
/// fails. The initial data is checked only when an `[initial]` block exists.
pub fn check(loaded: &Loaded) -> Result<Code> {
    loaded.lambda()?;
    let rho0 = match loaded.config.initial {
        Some(_) => Some(loaded.initial_density()?),
        None => None,
    };
    let report = check_coefficients(&loaded.config.v, &loaded.config.g, rho0.as_ref());
    println!("{report}");
    Ok(if report.potentials_admissible() {
        Code::Ok
    } else {
        Code::Assumptions
    })
}

#[derive(Serialize)]
struct PdeSummary {
    steps: usize,
    t_final: f64,
    clipped_mass: f64,
    /// Largest step-to-step increase of the free energy over the samples.
    max_free_energy_increase: f64,
    initial_free_energy: f64,
    final_free_energy: f64,
    final_moments: vfp_core::diagnostics::MomentReport,
}

pub fn simulate_pde(ctx: &Context) -> Result<()> {
    let l = &ctx.loaded;
    let (v, f) = l.potentials()?;
    let (block, cfg) = l.pde()?;
    let rho0 = l.initial_density()?;
    let mut solver = Solver::new(*rho0.grid(), v, f, cfg)?;
    info!("simulating to t = {} with dt = {}", block.t_end, cfg.dt);
    let run = solver.run(rho0, block.t_end, |s| debug!("t = {:.4} free energy = {:.12}", s.t, s.energy.total))?;

    let mut w = ctx.create("series.csv")?;
    write_series_csv(&run.series, &mut w)?;
    w.flush()?;
    let mut w = ctx.create("density.vfpd")?;
    write_snapshot(&run.density, &mut w)?;
    w.flush()?;

    let energies: Vec<f64> = std::iter::once(&run.initial)
        .chain(&run.series)
        .map(|s| s.energy.total)
        .collect();
    let summary = PdeSummary {
        steps: run.steps,
        t_final: run.series.last().map_or(0.0, |s| s.t),
        clipped_mass: run.clipped,
        max_free_energy_increase: energies.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max),
        initial_free_energy: run.initial.energy.total,
        final_free_energy: *energies.last().expect("initial sample"),
        final_moments: moment_report(&run.density),
    };
    ctx.write_json("summary.json", &summary)?;
    ctx.finish(&["series.csv", "density.vfpd", "summary.json"])
}

pub fn simulate_particles(ctx: &Context) -> Result<()> {
    let l = &ctx.loaded;
    let lambda = l.lambda()?;
    let (v, f) = l.potentials()?;
    let block = l.particles()?;
    let law = l.initial_law()?;
    let dynamics = ParticleDynamics::new(v, f, lambda, block.dt)?.with_integrator(block.integrator);
    let mut ens = init_ensemble(&law, block.n, block.seed)?;
    info!("{} particles to t = {} with dt = {}, seed {}", block.n, block.t_end, block.dt, block.seed);

    let mut entropies = Vec::new();
    let mut kde_error = None;
    let mut estimate = |e: &vfp_core::particles::ParticleEnsemble| {
        if block.kde && kde_error.is_none() {
            match kde_entropy(e, block.bandwidth) {
                Ok(h) => entropies.push(h),
                Err(err) => kde_error = Some(err),
            }
        }
    };
    estimate(&ens);
    let mut series = dynamics.run(&mut ens, block.t_end, block.stride, &mut estimate)?;
    if let Some(err) = kde_error {
        return Err(err).context("kernel entropy estimate");
    }
    for (s, h) in series.iter_mut().zip(entropies) {
        s.kde_entropy = Some(h);
    }

    let mut w = ctx.create("stats.csv")?;
    write_stats_csv(&series, &mut w)?;
    w.flush()?;
    let mut w = ctx.create("ensemble.vfpe")?;
    write_ensemble(&ens, &mut w)?;
    w.flush()?;
    ctx.finish(&["stats.csv", "ensemble.vfpe"])
}

pub fn stationary(ctx: &Context) -> Result<()> {
    let l = &ctx.loaded;
    let lambda = l.lambda()?;
    let (v, f) = l.potentials()?;
    let (block, opts) = l.stationary()?;
    let rho0 = l.initial_density()?;

    let mut csv = String::from("kind,lambda,m,residual,iterations,converged\n");
    if let Some(alpha) = f.quadratic_strength() {
        for m in find_branches(&v, alpha, lambda, block.m_max, block.root_tol)? {
            let residual = (m - scalar_self_consistency(m, &v, alpha, lambda)?).abs();
            csv += &format!("scalar,{lambda},{m},{residual},0,true\n");
        }
    }
    let branch = fixed_point(&rho0, &v, &f, lambda, opts)?;
    csv += &format!(
        "full,{lambda},{},{},{},{}\n",
        branch.m1(),
        branch.residual,
        branch.iterations,
        branch.converged
    );

    let mut w = ctx.create("branches.csv")?;
    w.write_all(csv.as_bytes())?;
    w.flush()?;
    let mut w = ctx.create("stationary.vfpd")?;
    write_snapshot(branch.density().expect("fixed_point returns a density"), &mut w)?;
    w.flush()?;
    ctx.finish(&["branches.csv", "stationary.vfpd"])?;
    if !branch.converged {
        return Err(Failure::new(
            Code::NonConvergence,
            format!(
                "fixed-point iteration stopped after {} iterations; final residual {:e}",
                branch.iterations, branch.residual
            ),
        )
        .into());
    }
    Ok(())
}

#[derive(Serialize)]
struct ScanSummary {
    alpha: f64,
    bracket: (f64, f64),
    width: f64,
    lambda_c: f64,
    bifurcation_lambda: Option<f64>,
    consistent: bool,
}

pub fn phase_scan_cmd(ctx: &Context) -> Result<()> {
    let l = &ctx.loaded;
    let (v, f) = l.potentials()?;
    let alpha = l.alpha(&f)?;
    let (block, opts) = l.scan()?;
    let result = phase_scan(&v, alpha, block.lambda_lo, block.lambda_hi, opts)?;
    let mut w = ctx.create("scan.csv")?;
    write_scan_csv(&result.grid, &mut w)?;
    w.flush()?;
    let summary = ScanSummary {
        alpha,
        bracket: result.bracket,
        width: result.width,
        lambda_c: result.lambda_c,
        bifurcation_lambda: result.bifurcation_lambda,
        consistent: result.consistent(),
    };
    ctx.write_json("scan_summary.json", &summary)?;
    ctx.finish(&["scan.csv", "scan_summary.json"])
}

/// One-shot diagnostics of a density snapshot, printed and written to
/// `free_energy.json`.
pub fn free_energy_cmd(ctx: &Context, snapshot: &Path) -> Result<()> {
    let l = &ctx.loaded;
    let lambda = l.lambda()?;
    let (v, f) = l.potentials()?;
    let rho = read_density(snapshot)?;
    let energy = free_energy(&rho, &v, &f, lambda)?;
    let bound = lower_bound(&v, lambda, rho.grid());
    let report = serde_json::json!({
        "snapshot": snapshot.display().to_string(),
        "lambda": lambda,
        "free_energy": energy,
        "lower_bound": bound,
        "above_lower_bound": energy.total >= bound.xi,
        "moments": moment_report(&rho),
        "entropy_split": entropy_split(&rho),
        "mass": rho.mass(),
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    ctx.write_json("free_energy.json", &report)?;
    ctx.finish(&["free_energy.json"])
}
