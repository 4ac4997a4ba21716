//! The TOML run configuration.
//!
//! Potentials, `lambda`, the grid and the initial data are shared; each
//! command reads its own block (`[pde]`, `[particles]`, `[stationary]`,
//! `[scan]`) and ignores the others.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vfp_core::grid::{read_snapshot, PhaseDensity, PhaseGrid};
use vfp_core::model::{ConfiningPotential, InteractionPotential};
use vfp_core::particles::{Bandwidth, InitialLaw, Integrator};
use vfp_core::pde::{SolverConfig, Splitting, Transport};
use vfp_core::stationary::{FixedPointOptions, ScanOptions, ROOT_TOL};

use crate::exit::Failure;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Coefficients `c_0..c_K` of `V(q) = Σ c_k q^k`.
    #[serde(rename = "V")]
    pub v: Vec<f64>,
    /// Coefficients of the even polynomial `G`; empty means no interaction.
    #[serde(rename = "G", default)]
    pub g: Vec<f64>,
    pub lambda: Option<f64>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridSpec,
    pub initial: Option<InitialSpec>,
    pub pde: Option<PdeBlock>,
    pub particles: Option<ParticleBlock>,
    pub stationary: Option<StationaryBlock>,
    pub scan: Option<ScanBlock>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub n_q: usize,
    pub n_p: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            q_min: -6.0,
            q_max: 6.0,
            p_min: -6.0,
            p_max: 6.0,
            n_q: 128,
            n_p: 128,
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Gaussian {
        #[serde(default)]
        mean_q: f64,
        #[serde(default = "one")]
        var_q: f64,
        #[serde(default)]
        mean_p: f64,
        #[serde(default = "one")]
        var_p: f64,
    },
    /// Particles only.
    TwoPoint { a: [f64; 2], b: [f64; 2], weight_a: f64 },
    /// A `VFPD` density snapshot; relative paths resolve against the config
    /// file's directory.
    Snapshot { path: PathBuf },
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Gaussian {
            mean_q: 0.0,
            var_q: 1.0,
            mean_p: 0.0,
            var_p: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeBlock {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub transport: Transport,
    #[serde(default)]
    pub splitting: Splitting,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_max_substeps")]
    pub max_substeps: usize,
}

fn default_stride() -> usize {
    1
}
fn default_cfl() -> f64 {
    0.9
}
fn default_max_substeps() -> usize {
    64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleBlock {
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub integrator: Integrator,
    /// Add the kernel entropy estimate to every recorded row.
    #[serde(default)]
    pub kde: bool,
    #[serde(default)]
    pub bandwidth: Bandwidth,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryBlock {
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Half-width of the scalar root scan; derived from `V` when absent.
    pub m_max: Option<f64>,
    #[serde(default = "default_root_tol")]
    pub root_tol: f64,
}

fn default_theta() -> f64 {
    FixedPointOptions::default().theta
}
fn default_tol() -> f64 {
    FixedPointOptions::default().tol
}
fn default_max_iter() -> usize {
    FixedPointOptions::default().max_iter
}
fn default_root_tol() -> f64 {
    ROOT_TOL
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    #[serde(default = "default_width_tol")]
    pub width_tol: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_root_tol")]
    pub root_tol: f64,
}

fn default_width_tol() -> f64 {
    ScanOptions::default().width_tol
}
fn default_grid_points() -> usize {
    ScanOptions::default().grid_points
}

/// A parsed configuration together with where it came from.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub path: PathBuf,
    /// Raw file contents, hashed into the provenance record.
    pub bytes: Vec<u8>,
}

impl Loaded {
    pub fn read(path: &Path) -> Result<Self, Failure> {
        let bytes = std::fs::read(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        let config: RunConfig = toml::from_str(text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        if config.lambda.is_none() {
            return Err(Failure::config(format!("{}: field lambda required", path.display())));
        }
        Ok(Loaded {
            config,
            path: path.to_path_buf(),
            bytes,
        })
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        match self.path.parent() {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn lambda(&self) -> Result<f64, Failure> {
        let l = self.config.lambda.ok_or_else(|| Failure::config("field lambda required"))?;
        if !(l.is_finite() && l > 0.0) {
            return Err(Failure::config(format!("lambda must be finite and > 0, got {l}")));
        }
        Ok(l)
    }

    /// `V` and `F`; a potential that cannot be built fails the assumptions.
    pub fn potentials(&self) -> Result<(ConfiningPotential, InteractionPotential), Failure> {
        let v = ConfiningPotential::new(self.config.v.clone()).map_err(Failure::assumptions)?;
        let f = InteractionPotential::new(self.config.g.clone()).map_err(Failure::assumptions)?;
        f.ensure_even().map_err(Failure::assumptions)?;
        Ok((v, f))
    }

    /// Strength `α` of a quadratic interaction `α x²/2`.
    pub fn alpha(&self, f: &InteractionPotential) -> Result<f64, Failure> {
        f.quadratic_strength()
            .ok_or_else(|| Failure::config("this command needs a quadratic interaction G = [0, 0, alpha/2]"))
    }

    pub fn grid(&self) -> Result<PhaseGrid, Failure> {
        let g = self.config.grid;
        PhaseGrid::new(g.q_min, g.q_max, g.p_min, g.p_max, g.n_q, g.n_p).map_err(Failure::config)
    }

    pub fn initial_spec(&self) -> InitialSpec {
        self.config.initial.clone().unwrap_or_default()
    }

    /// The initial data as a grid density. A snapshot brings its own grid.
    pub fn initial_density(&self) -> Result<PhaseDensity, Failure> {
        match self.initial_spec() {
            InitialSpec::Gaussian {
                mean_q,
                var_q,
                mean_p,
                var_p,
            } => PhaseDensity::gaussian(self.grid()?, mean_q, var_q, mean_p, var_p).map_err(Failure::config),
            InitialSpec::Snapshot { path } => read_density(&self.resolve(&path)),
            InitialSpec::TwoPoint { .. } => Err(Failure::config("initial kind two_point is only available for particles")),
        }
    }

    pub fn initial_law(&self) -> Result<InitialLaw, Failure> {
        Ok(match self.initial_spec() {
            InitialSpec::Gaussian {
                mean_q,
                var_q,
                mean_p,
                var_p,
            } => InitialLaw::Gaussian {
                mean_q,
                var_q,
                mean_p,
                var_p,
            },
            InitialSpec::TwoPoint { a, b, weight_a } => InitialLaw::TwoPoint {
                a: (a[0], a[1]),
                b: (b[0], b[1]),
                weight_a,
            },
            InitialSpec::Snapshot { path } => InitialLaw::Density(read_density(&self.resolve(&path))?),
        })
    }

    pub fn pde(&self) -> Result<(&PdeBlock, SolverConfig), Failure> {
        let block = self.config.pde.as_ref().ok_or_else(|| Failure::config("missing [pde] block"))?;
        let cfg = SolverConfig {
            dt: block.dt,
            stride: block.stride,
            lambda: self.lambda()?,
            splitting: block.splitting,
            transport: block.transport,
            cfl: block.cfl,
            max_substeps: block.max_substeps,
        };
        cfg.validate().map_err(Failure::config)?;
        if !(block.t_end.is_finite() && block.t_end >= 0.0) {
            return Err(Failure::config(format!("pde.t_end must be finite and >= 0, got {}", block.t_end)));
        }
        Ok((block, cfg))
    }

    pub fn particles(&self) -> Result<&ParticleBlock, Failure> {
        let block = self
            .config
            .particles
            .as_ref()
            .ok_or_else(|| Failure::config("missing [particles] block"))?;
        if block.n == 0 {
            return Err(Failure::config("particles.n must be at least 1"));
        }
        if block.stride == 0 {
            return Err(Failure::config("particles.stride must be at least 1"));
        }
        if !(block.t_end.is_finite() && block.t_end >= 0.0) {
            return Err(Failure::config(format!("particles.t_end must be finite and >= 0, got {}", block.t_end)));
        }
        Ok(block)
    }

    pub fn stationary(&self) -> Result<(&StationaryBlock, FixedPointOptions), Failure> {
        let block = self
            .config
            .stationary
            .as_ref()
            .ok_or_else(|| Failure::config("missing [stationary] block"))?;
        if !(block.theta > 0.0 && block.theta <= 1.0) {
            return Err(Failure::config(format!("stationary.theta must lie in (0, 1], got {}", block.theta)));
        }
        for (name, x) in [("stationary.tol", block.tol), ("stationary.root_tol", block.root_tol)] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Failure::config(format!("{name} must be finite and > 0, got {x}")));
            }
        }
        let opts = FixedPointOptions {
            theta: block.theta,
            tol: block.tol,
            max_iter: block.max_iter,
        };
        Ok((block, opts))
    }

    pub fn scan(&self) -> Result<(&ScanBlock, ScanOptions), Failure> {
        let block = self.config.scan.as_ref().ok_or_else(|| Failure::config("missing [scan] block"))?;
        if !(block.lambda_lo > 0.0 && block.lambda_hi > block.lambda_lo && block.lambda_hi.is_finite()) {
            return Err(Failure::config(format!(
                "scan needs 0 < lambda_lo < lambda_hi, got [{}, {}]",
                block.lambda_lo, block.lambda_hi
            )));
        }
        let opts = ScanOptions {
            width_tol: block.width_tol,
            grid_points: block.grid_points,
            root_tol: block.root_tol,
        };
        Ok((block, opts))
    }
}

pub fn read_density(path: &Path) -> Result<PhaseDensity, Failure> {
    let file = std::fs::File::open(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    read_snapshot(std::io::BufReader::new(file)).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> RunConfig {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn defaults_fill_optional_blocks() {
        let c = parse("V = [0, 0, -0.5, 0, 0.25]\nG = [0, 0, 0.5]\nlambda = 0.3\n[pde]\ndt = 1e-3\nt_end = 1\n");
        assert_eq!(c.grid.n_q, 128);
        let pde = c.pde.unwrap();
        assert_eq!(pde.stride, 1);
        assert_eq!(pde.transport, Transport::Upwind);
        assert!(c.initial.is_none());
    }

    #[test]
    fn initial_kinds() {
        let c = parse("V = [0, 0, 0.5]\nlambda = 1\n[initial]\nkind = \"gaussian\"\nmean_q = 1.0\n");
        assert!(matches!(c.initial, Some(InitialSpec::Gaussian { mean_q, var_q, .. }) if mean_q == 1.0 && var_q == 1.0));
        let c = parse("V = [0, 0, 0.5]\nlambda = 1\n[initial]\nkind = \"two_point\"\na = [1, 0]\nb = [-1, 0]\nweight_a = 0.5\n");
        assert!(matches!(c.initial, Some(InitialSpec::TwoPoint { .. })));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(toml::from_str::<RunConfig>("V = [0, 0, 0.5]\nlambda = 1\nlamda = 2\n").is_err());
        assert!(toml::from_str::<RunConfig>("V = [0, 0, 0.5]\nlambda = 1\n[pde]\ndt = 1\nt_end = 1\nsteps = 3\n").is_err());
    }

    #[test]
    fn bandwidth_and_integrator_parse() {
        let c = parse(
            "V = [0, 0, 0.5]\nlambda = 1\n[particles]\nn = 10\ndt = 0.01\nt_end = 1\nintegrator = \"euler_maruyama\"\nbandwidth = { fixed = { q = 0.1, p = 0.2 } }\n",
        );
        let p = c.particles.unwrap();
        assert_eq!(p.integrator, Integrator::EulerMaruyama);
        assert_eq!(p.bandwidth, Bandwidth::Fixed { q: 0.1, p: 0.2 });
    }
}
