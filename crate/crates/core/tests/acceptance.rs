//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs as a plain binary (`harness = false`).

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vfp_core::diagnostics::{free_energy, lower_bound};
use vfp_core::grid::{PhaseDensity, PhaseGrid};
use vfp_core::model::{ConfiningPotential, InteractionPotential};
use vfp_core::particles::{init_ensemble, mean_field_force, pairwise_force, InitialLaw, ParticleDynamics};
use vfp_core::pde::{DiagnosticSample, Solver, SolverConfig, Transport};
use vfp_core::stationary::{find_branches, fixed_point, phase_scan, FixedPointOptions, ScanOptions, ROOT_TOL};

// Oracles computed independently (mpmath, 50 digits) and frozen here.
const LAMBDA_C: f64 = 0.4569465810444634;
const M_PLUS_01: f64 = 0.9410911404346909;

const LAMBDA: f64 = 0.3;
const DT: f64 = 1e-3;
const T_END: f64 = 20.0;
/// Benchmark initial data: a Gaussian in the right well.
const INITIAL: (f64, f64, f64, f64) = (1.0, 0.25, 0.0, 1.0);

struct Outcome {
    id: u8,
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn minutes(m: f64) -> Duration {
    Duration::from_secs_f64(60.0 * m)
}

fn double_well() -> (ConfiningPotential, InteractionPotential) {
    (ConfiningPotential::double_well(), InteractionPotential::quadratic(1.0))
}

struct BenchmarkRun {
    series: Vec<DiagnosticSample>,
    elapsed: Duration,
}

fn benchmark(n: usize) -> BenchmarkRun {
    let start = Instant::now();
    let grid = PhaseGrid::square(6.0, n).unwrap();
    let (v, f) = double_well();
    let mut cfg = SolverConfig::new(DT, LAMBDA);
    cfg.transport = Transport::Muscl;
    let mut solver = Solver::new(grid, v, f, cfg).unwrap();
    let (mq, vq, mp, vp) = INITIAL;
    let rho0 = PhaseDensity::gaussian(grid, mq, vq, mp, vp).unwrap();
    let out = solver.run(rho0, T_END, |_| {}).unwrap();
    let mut series = vec![out.initial];
    series.extend(out.series);
    BenchmarkRun {
        series,
        elapsed: start.elapsed(),
    }
}

/// Largest per-step increase of the free energy (0 if it never increases).
fn max_increase(series: &[DiagnosticSample]) -> f64 {
    series
        .windows(2)
        .map(|w| w[1].energy.total - w[0].energy.total)
        .fold(0.0, f64::max)
}

fn criterion_1(fine: &BenchmarkRun, coarse: &BenchmarkRun) -> Outcome {
    let (vf, vc) = (max_increase(&fine.series), max_increase(&coarse.series));
    let elapsed = fine.elapsed + coarse.elapsed;
    // no violations on either grid counts as shrinking
    let shrinks = vf == 0.0 || vf <= 0.5 * vc;
    Outcome {
        id: 1,
        name: "discrete H-theorem",
        pass: vf <= 1e-8 && shrinks && fine.elapsed <= minutes(5.0),
        detail: format!(
            "max per-step increase {vf:.3e} (256²) vs {vc:.3e} (128²), {} steps; 256² run {:.1} s",
            fine.series.len() - 1,
            fine.elapsed.as_secs_f64()
        ),
        elapsed,
    }
}

/// Worst relative mismatch between the per-step free-energy drop and the
/// trapezoidal integral of the dissipation over that step, for `t >= 1`.
fn dissipation_mismatch(series: &[DiagnosticSample]) -> (f64, f64) {
    let start = series.iter().position(|s| s.t >= 1.0 - 1e-9).unwrap();
    series[start..].windows(2).fold((0.0, 0.0), |worst, w| {
        let rate = (w[0].energy.total - w[1].energy.total) / (w[1].t - w[0].t);
        let d = 0.5 * (w[0].energy.dissipation + w[1].energy.dissipation);
        let rel = (rate - d).abs() / d;
        if rel > worst.0 {
            (rel, w[0].t)
        } else {
            worst
        }
    })
}

fn criterion_2(fine: &BenchmarkRun) -> Outcome {
    let start = Instant::now();
    let (rel, at) = dissipation_mismatch(&fine.series);
    Outcome {
        id: 2,
        name: "dissipation identity",
        pass: rel <= 0.02,
        detail: format!("worst per-step relative mismatch {:.3}% for t >= 1 (at t = {at:.3})", 100.0 * rel),
        elapsed: start.elapsed(),
    }
}

fn random_mixture(grid: PhaseGrid, rng: &mut ChaCha8Rng) -> PhaseDensity {
    let parts: Vec<[f64; 5]> = (0..rng.gen_range(1..=5))
        .map(|_| {
            [
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(0.05..2.0),
                rng.gen_range(0.05..2.0),
                rng.gen_range(0.1..1.0),
            ]
        })
        .collect();
    PhaseDensity::from_function(grid, |q, p| {
        parts
            .iter()
            .map(|[mq, mp, sq, sp, w]| w * (-(q - mq).powi(2) / (2.0 * sq * sq) - (p - mp).powi(2) / (2.0 * sp * sp)).exp())
            .sum()
    })
    .unwrap()
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let grid = PhaseGrid::square(6.0, 256).unwrap();
    let (v, f) = double_well();
    let bound = lower_bound(&v, LAMBDA, &grid);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violations = 0;
    let mut margin = f64::INFINITY;
    for _ in 0..100 {
        let rho = random_mixture(grid, &mut rng);
        let e = free_energy(&rho, &v, &f, LAMBDA).unwrap().total;
        if e < bound.xi {
            violations += 1;
        }
        margin = margin.min(e - bound.xi);
    }
    let elapsed = start.elapsed();
    Outcome {
        id: 3,
        name: "lower bound",
        pass: violations == 0 && elapsed <= minutes(1.0),
        detail: format!("{violations} violations in 100 mixtures; Xi = {:.4}, smallest margin {margin:.4}", bound.xi),
        elapsed,
    }
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let grid = PhaseGrid::square(6.0, 256).unwrap();
    let (v, f) = double_well();
    let rho0 = PhaseDensity::gaussian(grid, 0.0, 1.0, 0.0, 1.0).unwrap();
    let branch = fixed_point(&rho0, &v, &f, 1.0, FixedPointOptions::default()).unwrap();
    let rho_star = branch.density().unwrap().clone();
    let mut cfg = SolverConfig::new(DT, 1.0);
    cfg.transport = Transport::Muscl;
    let mut solver = Solver::new(grid, v, f, cfg).unwrap();
    let mut rho = rho_star.clone();
    for _ in 0..100 {
        solver.step(&mut rho).unwrap();
    }
    let moved = rho.l1_distance(&rho_star).unwrap();
    let elapsed = start.elapsed();
    Outcome {
        id: 4,
        name: "stationarity closure",
        pass: branch.converged && moved <= 1e-6 && elapsed <= minutes(2.0),
        detail: format!(
            "fixed point (residual {:.1e}, M1 = {:.1e}) moved by l1 = {moved:.3e} in 100 steps",
            branch.residual,
            branch.m1()
        ),
        elapsed,
    }
}

/// `α Var(q) - λ` under `exp(-(V + α q²/2)/λ)` by composite Simpson on
/// `[-12, 12]`, independent of the library's adaptive quadrature.
fn bifurcation_gap(lambda: f64) -> f64 {
    let n = 200_000;
    let h = 24.0 / n as f64;
    let u = |q: f64| (q.powi(4) / 4.0 - q * q / 2.0 + q * q / 2.0) / lambda;
    let (mut z, mut s2) = (0.0, 0.0);
    for k in 0..=n {
        let q = -12.0 + k as f64 * h;
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let e = w * (-u(q)).exp();
        z += e;
        s2 += e * q * q;
    }
    s2 / z - lambda
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let v = ConfiningPotential::double_well();
    let high = find_branches(&v, 1.0, 1.0, None, ROOT_TOL).unwrap();
    let low = find_branches(&v, 1.0, 0.05, None, ROOT_TOL).unwrap();
    let scan = phase_scan(&v, 1.0, 0.05, 1.0, ScanOptions::default()).unwrap();
    let (mut a, mut b) = (0.05, 1.0);
    while b - a > 1e-12 {
        let mid = 0.5 * (a + b);
        if bifurcation_gap(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let oracle = 0.5 * (a + b);
    let (lo, hi) = scan.bracket;
    let elapsed = start.elapsed();
    Outcome {
        id: 5,
        name: "phase transition",
        pass: high.len() == 1
            && low.len() == 3
            && scan.width <= 1e-3
            && lo <= oracle
            && oracle <= hi
            && (oracle - LAMBDA_C).abs() < 1e-8
            && elapsed <= minutes(1.0),
        detail: format!(
            "{} branch(es) at λ = 1, {} at λ = 0.05; bracket [{lo:.6}, {hi:.6}] (width {:.1e}) vs oracle λ_c = {oracle:.10}",
            high.len(),
            low.len(),
            scan.width
        ),
        elapsed,
    }
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    // convex: V = q²/2, F = 0, λ = 1; Gibbs state exp(-(q² + p²)/2) / 2π
    let grid = PhaseGrid::square(6.0, 128).unwrap();
    let cfg = SolverConfig::new(1e-2, 1.0);
    let mut solver = Solver::new(grid, ConfiningPotential::harmonic(), InteractionPotential::none(), cfg).unwrap();
    let rho0 = PhaseDensity::gaussian(grid, 1.5, 0.5, 0.5, 1.0).unwrap();
    let out = solver.run(rho0, 50.0, |_| {}).unwrap();
    let mut l1 = 0.0;
    for i in 0..grid.n_q {
        for j in 0..grid.n_p {
            let (q, p) = (grid.q(i), grid.p(j));
            let exact = (-(q * q + p * p) / 2.0).exp() / (2.0 * std::f64::consts::PI);
            l1 += (out.density.at(i, j) - exact).abs();
        }
    }
    l1 *= grid.cell_area();

    // non-convex: λ = 0.1, data biased to the right well
    let grid = PhaseGrid::square(3.0, 128).unwrap();
    let (v, f) = double_well();
    let mut cfg = SolverConfig::new(5e-3, 0.1);
    cfg.transport = Transport::Muscl;
    let mut solver = Solver::new(grid, v, f, cfg).unwrap();
    let rho0 = PhaseDensity::gaussian(grid, 1.0, 0.1, 0.0, 0.1).unwrap();
    let out = solver.run(rho0, 30.0, |_| {}).unwrap();
    let m1 = out.density.q_moments(1)[1];
    let elapsed = start.elapsed();
    Outcome {
        id: 6,
        name: "dynamics to equilibrium",
        pass: l1 <= 5e-3 && (m1 - M_PLUS_01).abs() <= 1e-2 && elapsed <= minutes(5.0),
        detail: format!("convex: l1 to Gibbs {l1:.2e} at t = 50; λ = 0.1: M1 = {m1:.5} vs m₊ = {M_PLUS_01:.5}"),
        elapsed,
    }
}

fn criterion_7(fine: &BenchmarkRun) -> Outcome {
    let start = Instant::now();
    let pde = fine.series.iter().find(|s| (s.t - 10.0).abs() < 1e-9).expect("sample at t = 10");
    let (v, f) = double_well();
    let dynamics = ParticleDynamics::new(v, f, LAMBDA, 0.01).unwrap();
    let (mq, vq, mp, vp) = INITIAL;
    let law = InitialLaw::Gaussian { mean_q: mq, var_q: vq, mean_p: mp, var_p: vp };
    // The slow mean-field mode amplifies sampling noise well beyond the i.i.d.
    // standard error, so the standard error is taken from independent replicas.
    const REPLICAS: u64 = 8;
    let mut m1 = Vec::new();
    let mut m2 = Vec::new();
    let mut iid = (0.0, 0.0);
    for seed in 1..=REPLICAS {
        let mut ens = init_ensemble(&law, 100_000, seed).unwrap();
        dynamics.run(&mut ens, 10.0, 1000, |_| {}).unwrap();
        let s = ens.stats();
        m1.push(s.m1_q);
        m2.push(s.m2_q);
        iid = ens.q_standard_errors();
    }
    let r = REPLICAS as f64;
    let mean_sd = |x: &[f64]| {
        let mean = x.iter().sum::<f64>() / r;
        let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0)).sqrt();
        (mean, sd / r.sqrt())
    };
    let ((a1, se1), (a2, se2)) = (mean_sd(&m1), mean_sd(&m2));
    let (z1, z2) = ((a1 - pde.m1).abs() / se1, (a2 - pde.m2).abs() / se2);
    let elapsed = start.elapsed();
    Outcome {
        id: 7,
        name: "particle/PDE cross-validation",
        pass: z1 <= 3.0 && z2 <= 3.0 && elapsed <= minutes(3.0),
        detail: format!(
            "M1 {a1:.5} ± {se1:.5} vs PDE {:.5} ({z1:.2} SE); M2 {a2:.5} ± {se2:.5} vs PDE {:.5} ({z2:.2} SE); \
             {REPLICAS} replicas of N = 1e5 (i.i.d. SE per run {:.5}, {:.5})",
            pde.m1, pde.m2, iid.0, iid.1
        ),
        elapsed,
    }
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=32);
        let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let half_degree = rng.gen_range(1..=4);
        let mut g = vec![0.0; 2 * half_degree + 1];
        for k in 0..=half_degree {
            g[2 * k] = rng.gen_range(0.0..1.0);
        }
        g[2 * half_degree] += 0.1;
        let f = InteractionPotential::new(g).unwrap();
        let a = mean_field_force(&q, &f).unwrap();
        let b = pairwise_force(&q, &f);
        let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let err = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        worst = worst.max(err / scale);
    }
    let elapsed = start.elapsed();
    Outcome {
        id: 8,
        name: "oracle equivalence",
        pass: worst <= 1e-12 && elapsed <= Duration::from_secs(30),
        detail: format!("worst relative deviation {worst:.2e} over 1000 ensembles"),
        elapsed,
    }
}

fn main() -> ExitCode {
    let fine = benchmark(256);
    let coarse = benchmark(128);
    let outcomes = [
        criterion_1(&fine, &coarse),
        criterion_2(&fine),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(&fine),
        criterion_8(),
    ];
    for o in &outcomes {
        println!(
            "criterion {} ({}): {} — {} [{:.1} s]",
            o.id,
            o.name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            o.elapsed.as_secs_f64()
        );
    }
    if outcomes.iter().all(|o| o.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
