//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p riseff-cli --test acceptance`.

use std::f64::consts::{LN_2, PI};
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use riseff_cli::{parse_spec_str, run, run_all, ExperimentSpec, RunMode};
use riseff_core::channel::{complex_gaussian_matrix, make_random_unitary};
use riseff_core::linalg::{identity, lambda_max, CMat, CVec};
use riseff_core::phase::{compute_a, phase_objective};
use riseff_core::power::waterfill_with_multiplier;
use riseff_core::rng::stream;
use riseff_core::{
    assemble_q, bcd_phase, de_fixed_point, de_rate, dinkelbach, ergodic_se, maximize, mm_phase,
    rate_c, sample_h1, synthesize_stats, BcdOptions, DeOptions, DinkelbachOptions, MmOptions,
    OptimizerOptions, PhaseVector, PowerAllocation, RisBsChannel, SystemConfig, UtChannelStats,
};

type Outcome = Result<String, String>;

struct Criterion {
    id: usize,
    name: &'static str,
    budget_s: f64,
    check: fn() -> Outcome,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn instance(k: usize, nk: usize, m: usize, nr: usize, p_max_dbm: f64, seed: u64) -> (SystemConfig, RisBsChannel, Vec<UtChannelStats>) {
    let cfg = SystemConfig::uniform(k, nk, m, nr, p_max_dbm);
    let h1 = sample_h1(&cfg, &mut stream(seed, 0));
    let stats = synthesize_stats(&cfg, 0.5, -120.0, &mut stream(seed, 1)).expect("valid stats");
    (cfg, h1, stats)
}

fn random_phases<R: Rng>(n: usize, rng: &mut R) -> PhaseVector {
    let theta: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
    PhaseVector::from_angles(&theta)
}

fn random_psd<R: Rng>(n: usize, rank: usize, rng: &mut R) -> CMat {
    let g = complex_gaussian_matrix(n, rank, rng);
    &g * g.adjoint()
}

fn non_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0))
}

fn de_accuracy() -> Outcome {
    let mut worst: f64 = 0.0;
    for (case, (nr, m, k)) in [(16, 8, 4), (32, 16, 6), (24, 12, 4)].into_iter().enumerate() {
        for p in [0.0, 10.0, 20.0, 30.0] {
            let (cfg, h1, stats) = instance(k, 2, m, nr, p, 10 + case as u64);
            let phi = random_phases(nr, &mut stream(10 + case as u64, 2));
            let alloc = PowerAllocation::uniform(&cfg.ut_antennas, &cfg.p_max);
            let state = de_fixed_point(&h1, &phi, &stats, &alloc, cfg.sigma2, DeOptions::default()).map_err(|e| e.to_string())?;
            let de = de_rate(&state, &alloc, &stats).map_err(|e| e.to_string())?;
            let mc = ergodic_se(&h1, &phi, &assemble_q(&stats, &alloc), &stats, cfg.sigma2, 2000, 77).map_err(|e| e.to_string())?;
            let rel = (de - mc.mean).abs() / mc.mean;
            ensure(rel <= 0.03, || format!("N_R={nr} M={m} K={k} at {p} dBm: DE {de:.4} MC {:.4} ({:.2}%)", mc.mean, 100.0 * rel))?;
            worst = worst.max(rel);
        }
    }
    Ok(format!("12 points, worst |DE-MC|/MC = {:.3}% (limit 3%)", 100.0 * worst))
}

fn ao_monotonicity() -> Outcome {
    let sizes = [(2, 2, 4, 8), (3, 2, 4, 8), (4, 2, 8, 16), (2, 1, 4, 6)];
    let powers = [0.0, 10.0, 20.0, 30.0, 40.0];
    let mut max_iters = 0;
    for seed in 0..20u64 {
        let (k, nk, m, nr) = sizes[seed as usize % sizes.len()];
        let p = powers[seed as usize % powers.len()];
        let (cfg, h1, stats) = instance(k, nk, m, nr, p, 100 + seed);
        let sol = maximize(&cfg, &h1, &stats, &OptimizerOptions::default()).map_err(|e| e.to_string())?;
        let gee: Vec<f64> = sol.trace.iter().map(|r| r.gee).collect();
        ensure(non_decreasing(&gee), || format!("seed {seed}: GEE trace {gee:?}"))?;
        ensure(sol.converged && sol.outer_iterations() <= 100, || format!("seed {seed}: not converged in 100 iterations"))?;
        max_iters = max_iters.max(sol.outer_iterations());
    }
    Ok(format!("20 instances monotone, at most {max_iters} outer iterations"))
}

fn scalar_system(p_max_dbm: f64) -> (SystemConfig, RisBsChannel, Vec<UtChannelStats>) {
    let cfg = SystemConfig::uniform(1, 1, 1, 1, p_max_dbm);
    let h1 = RisBsChannel { h1: CMat::from_element(1, 1, num_complex::Complex64::new(0.8, -0.6)) };
    let stats = vec![UtChannelStats {
        u2: identity(1),
        v2: identity(1),
        omega: DMatrix::from_element(1, 1, 1e-12),
    }];
    (cfg, h1, stats)
}

fn scalar_gee(cfg: &SystemConfig, h1: &RisBsChannel, stats: &[UtChannelStats], lambda: f64) -> f64 {
    let alloc = PowerAllocation { lambda: vec![vec![lambda]] };
    let state = de_fixed_point(h1, &PhaseVector::ones(1), stats, &alloc, cfg.sigma2, DeOptions::default()).expect("scalar DE");
    let rate = de_rate(&state, &alloc, stats).expect("converged");
    cfg.bandwidth * rate / (cfg.xi[0] * lambda + cfg.static_power())
}

fn dinkelbach_checks() -> Outcome {
    for seed in 0..20u64 {
        let p = [0.0, 10.0, 20.0, 30.0][seed as usize % 4];
        let (cfg, h1, stats) = instance(2 + seed as usize % 3, 2, 4, 8, p, 200 + seed);
        let phi = random_phases(8, &mut stream(200 + seed, 2));
        let dk = dinkelbach(&h1, &phi, &stats, &cfg, &DinkelbachOptions::default()).map_err(|e| e.to_string())?;
        ensure(non_decreasing(&dk.trace), || format!("seed {seed}: eta trace {:?}", dk.trace))?;
    }
    let mut report = Vec::new();
    for p in [40.0, 20.0] {
        let (cfg, h1, stats) = scalar_system(p);
        let p_max = cfg.p_max[0];
        let dk = dinkelbach(&h1, &PhaseVector::ones(1), &stats, &cfg, &DinkelbachOptions::default()).map_err(|e| e.to_string())?;
        let steps = 100_000;
        let (best_lambda, best) = (0..=steps)
            .map(|i| p_max * i as f64 / steps as f64)
            .map(|l| (l, scalar_gee(&cfg, &h1, &stats, l)))
            .fold((0.0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
        let rel = (dk.eta_star - best).abs() / best;
        ensure(rel <= 1e-3, || format!("scalar at {p} dBm: eta* {:.6e} grid {best:.6e}", dk.eta_star))?;
        report.push(format!("{p} dBm: lambda* {best_lambda:.4} W, rel gap {rel:.1e}"));
    }
    Ok(format!("20 eta traces monotone; scalar grid {}", report.join("; ")))
}

fn waterfill_kkt() -> Outcome {
    let mut rng = stream(400, 0);
    let mut worst: f64 = 0.0;
    for draw in 0..1000 {
        let n = 1 + draw % 6;
        let g: Vec<f64> = (0..n).map(|i| if (draw + i) % 7 == 0 { 0.0 } else { 10.0 * rng.random::<f64>() }).collect();
        let eta = if draw % 5 == 0 { 0.0 } else { 2.0 * rng.random::<f64>() };
        let xi = 1.0 + 3.0 * rng.random::<f64>();
        let p_max = 0.01 + 10.0 * rng.random::<f64>();
        let wf = waterfill_with_multiplier(&g, eta, xi, p_max);
        let level = eta * xi + wf.mu;
        let total: f64 = wf.power.iter().sum();
        ensure(total <= p_max + 1e-9, || format!("draw {draw}: budget {total} > {p_max}"))?;
        ensure(wf.power.iter().all(|&l| l >= 0.0), || format!("draw {draw}: negative power"))?;
        if wf.mu > 0.0 {
            worst = worst.max((total - p_max).abs() / p_max);
        }
        for (&gn, &l) in g.iter().zip(&wf.power) {
            let residual = if l > 0.0 {
                (gn / ((1.0 + gn * l) * LN_2) - level).abs()
            } else {
                (gn / LN_2 - level).max(0.0)
            };
            worst = worst.max(residual);
        }
        ensure(worst <= 1e-8, || format!("draw {draw}: KKT residual {worst:e}"))?;
    }

    let g = [2.0, 1.0];
    let price = 0.5 / LN_2;
    let got = waterfill_with_multiplier(&g, price, 1.0, 10.0).power;
    let objective = |a: f64, b: f64| (1.0 + g[0] * a).log2() + (1.0 + g[1] * b).log2() - price * (a + b);
    let steps = 10_000;
    let mut best = (f64::MIN, 0.0, 0.0);
    for i in 0..=steps {
        let a = 10.0 * i as f64 / steps as f64;
        for j in 0..=(steps - i) {
            let b = 10.0 * j as f64 / steps as f64;
            let v = objective(a, b);
            if v > best.0 {
                best = (v, a, b);
            }
        }
    }
    let gap = (got[0] - best.1).abs().max((got[1] - best.2).abs());
    ensure(gap <= 2e-3, || format!("2-D grid ({}, {}) vs waterfill {got:?}", best.1, best.2))?;
    Ok(format!("1000 draws, worst KKT residual {worst:.1e}; 2-D grid gap {gap:.1e}"))
}

fn surrogate(s: &CMat, l: f64, cvec: &CVec, phi: &CVec, phi0: &CVec) -> f64 {
    let diff = identity(s.nrows()).scale(l) - s;
    l * phi.norm_squared() - 2.0 * phi.dotc(&(&diff * phi0)).re + phi0.dotc(&(&diff * phi0)).re
        - 2.0 * phi.dotc(&cvec.conjugate()).re
}

fn mm_bcd_descent() -> Outcome {
    let mut rng = stream(500, 0);
    for draw in 0..1000 {
        let n = 1 + draw % 8;
        let s = random_psd(n, 1 + draw % 3, &mut rng);
        let l = lambda_max(&s);
        let phi = random_phases(n, &mut rng).phi;
        let phi0 = random_phases(n, &mut rng).phi;
        let lhs = phi.dotc(&(&s * &phi)).re;
        let rhs = surrogate(&s, l, &CVec::zeros(n), &phi, &phi0);
        ensure(lhs <= rhs + 1e-9 * (1.0 + rhs.abs()), || format!("majorization draw {draw}: {lhs} > {rhs}"))?;
    }

    let n = 6;
    for trial in 0..20 {
        let s = random_psd(n, 3, &mut rng);
        let l = lambda_max(&s);
        let cvec = complex_gaussian_matrix(n, 1, &mut rng).column(0).into_owned();
        let theta0: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
        let phi0 = PhaseVector::from_angles(&theta0).phi;
        let g0 = phase_objective(&s, &cvec, &phi0);
        ensure((g0 - surrogate(&s, l, &cvec, &phi0, &phi0)).abs() <= 1e-9 * (1.0 + g0.abs()), || format!("trial {trial}: surrogate not tight"))?;
        for _ in 0..100 {
            let p = random_phases(n, &mut rng).phi;
            let (g, gt) = (phase_objective(&s, &cvec, &p), surrogate(&s, l, &cvec, &p, &phi0));
            ensure(g <= gt + 1e-9 * (1.0 + gt.abs()), || format!("trial {trial}: surrogate below objective"))?;
        }
        let h = 1e-6;
        for k in 0..n {
            let at = |dt: f64, f: &dyn Fn(&CVec) -> f64| {
                let mut t = theta0.clone();
                t[k] += dt;
                f(&PhaseVector::from_angles(&t).phi)
            };
            let g = |p: &CVec| phase_objective(&s, &cvec, p);
            let gt = |p: &CVec| surrogate(&s, l, &cvec, p, &phi0);
            let (dg, dgt) = ((at(h, &g) - at(-h, &g)) / (2.0 * h), (at(h, &gt) - at(-h, &gt)) / (2.0 * h));
            ensure((dg - dgt).abs() <= 1e-4 * dg.abs().max(dgt.abs()).max(1.0), || format!("trial {trial}: gradient {dg} vs {dgt}"))?;
        }

        let a = random_psd(n, 3, &mut rng);
        let b = random_psd(n, 4, &mut rng);
        let mm = mm_phase(&a, &b, &cvec, &random_phases(n, &mut rng), MmOptions::default()).map_err(|e| e.to_string())?;
        ensure(mm.trace.windows(2).all(|w| w[1] <= w[0] + 1e-9 * (1.0 + w[0].abs())), || format!("trial {trial}: g trace rises"))?;
    }

    for seed in 0..10u64 {
        let (cfg, h1, stats) = instance(3, 2, 4, 8, 20.0, 510 + seed);
        let alloc = PowerAllocation::uniform(&cfg.ut_antennas, &cfg.p_max);
        let phi0 = random_phases(8, &mut stream(510 + seed, 2));
        let state = de_fixed_point(&h1, &phi0, &stats, &alloc, cfg.sigma2, DeOptions::default()).map_err(|e| e.to_string())?;
        let a = compute_a(&stats, &state.psi).map_err(|e| e.to_string())?;
        let before = rate_c(&phi0, &h1.h1, &a, cfg.sigma2).map_err(|e| e.to_string())?;
        let r = bcd_phase(&h1.h1, &a, cfg.sigma2, &phi0, BcdOptions::default()).map_err(|e| e.to_string())?;
        let after = rate_c(&r.phi, &h1.h1, &a, cfg.sigma2).map_err(|e| e.to_string())?;
        ensure(r.h_trace.windows(2).all(|w| w[1] <= w[0] + 1e-9 * (1.0 + w[0].abs())), || format!("seed {seed}: h trace rises"))?;
        ensure(after >= before - 1e-9, || format!("seed {seed}: C {before} -> {after}"))?;
    }
    Ok("majorization bound on 1000 draws; surrogate tight/upper/tangent on 20; g, h and C monotone".into())
}

fn grid_best(h1: &CMat, a: &CMat, sigma2: f64) -> f64 {
    (0..1024)
        .map(|i| PhaseVector::from_angles(&[0.0, 2.0 * PI * i as f64 / 1024.0]))
        .map(|phi| rate_c(&phi, h1, a, sigma2).expect("rate"))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn small_phase_optimality() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let mut rng = stream(600 + seed, 0);
        let h1 = complex_gaussian_matrix(2, 2, &mut rng);
        let a = random_psd(2, 2, &mut rng).scale(0.5);
        let sigma2 = 0.5;
        let r = bcd_phase(&h1, &a, sigma2, &PhaseVector::ones(2), BcdOptions::default()).map_err(|e| e.to_string())?;
        let got = rate_c(&r.phi, &h1, &a, sigma2).map_err(|e| e.to_string())?;
        let best = grid_best(&h1, &a, sigma2);
        ensure(got >= best - 1e-3, || format!("seed {seed}: BCD {got:.6} grid {best:.6}"))?;
        worst = worst.max(best - got);
    }
    Ok(format!("10 seeds, worst shortfall vs 1024-point grid {worst:.1e} bits/s/Hz"))
}

fn eigenbasis_dominance() -> Outcome {
    let cfg = SystemConfig::uniform(1, 2, 2, 4, 10.0);
    let h1 = sample_h1(&cfg, &mut stream(700, 0));
    let stats = synthesize_stats(&cfg, 0.5, -120.0, &mut stream(700, 1)).map_err(|e| e.to_string())?;
    let se_cfg = SystemConfig { xi: vec![0.0], ..cfg.clone() };
    let phi = PhaseVector::ones(4);
    let dk = dinkelbach(&h1, &phi, &stats, &se_cfg, &DinkelbachOptions::default()).map_err(|e| e.to_string())?;
    let lambda = dk.alloc.lambda[0].clone();
    let (samples, seed) = (4000, 701);
    let mc = |q: CMat| ergodic_se(&h1, &phi, &[q], &stats, cfg.sigma2, samples, seed).map(|e| e.mean);
    let diag = CMat::from_diagonal(&CVec::from_iterator(2, lambda.iter().map(|&l| num_complex::Complex64::new(l, 0.0))));
    let at_v2 = mc(&stats[0].v2 * &diag * stats[0].v2.adjoint()).map_err(|e| e.to_string())?;
    let mut rng = stream(702, 0);
    let mut best_other = f64::MIN;
    for trial in 0..200 {
        let v = make_random_unitary(2, &mut rng);
        let rate = mc(&v * &diag * v.adjoint()).map_err(|e| e.to_string())?;
        ensure(rate <= at_v2, || format!("basis {trial}: {rate:.6} > {at_v2:.6}"))?;
        best_other = best_other.max(rate);
    }
    Ok(format!("lambda = [{:.3}, {:.3}] W; V2 rate {at_v2:.5}, best of 200 random bases {best_other:.5}", lambda[0], lambda[1]))
}

const SCALED: &str = include_str!("../specs/scaled.conf");

fn scaled_spec(out: &Path, modes: &str, seed: u64) -> ExperimentSpec {
    let body: String = SCALED
        .lines()
        .filter(|l| !["modes", "output_dir", "mc_samples", "master_seed"].iter().any(|k| l.starts_with(k)))
        .map(|l| format!("{l}\n"))
        .collect();
    let text = format!("{body}modes = {modes}\nmc_samples = 0\nmaster_seed = {seed}\noutput_dir = {}\n", out.display());
    parse_spec_str(&text).expect("scaled spec parses")
}

fn column(results: &[riseff_cli::RunResult], mode: RunMode) -> Vec<(f64, f64, f64)> {
    results.iter().filter(|r| r.job.mode == mode).map(|r| (r.job.p_max_dbm, r.gee, r.se)).collect()
}

fn curve_shapes() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = scaled_spec(dir.path(), "gee, se", 1);
    let results = run_all(&spec).map_err(|e| e.to_string())?;
    let gee_mode = column(&results, RunMode::Gee);
    let se_mode = column(&results, RunMode::Se);
    let gee: Vec<f64> = gee_mode.iter().map(|x| x.1).collect();
    let peak = gee.iter().cloned().fold(f64::MIN, f64::max);
    let at = gee.iter().position(|&g| g == peak).unwrap();
    ensure(gee[at..].iter().all(|&g| g >= 0.99 * peak), || format!("GEE-mode curve not flat after peak: {gee:?}"))?;
    let (g25, g40) = (gee_mode[5].1, gee_mode[8].1);
    ensure((g40 - g25).abs() <= 0.01 * g25, || format!("GEE at 25 dBm {g25:e} vs 40 dBm {g40:e}"))?;
    let se: Vec<f64> = se_mode.iter().map(|x| x.2).collect();
    ensure(se.windows(2).all(|w| w[1] > w[0]), || format!("SE-mode SE not increasing: {se:?}"))?;
    let low = (gee_mode[0].1 - se_mode[0].1).abs() / gee_mode[0].1;
    ensure(low <= 0.02, || format!("GEE vs SE mode at 0 dBm differ by {:.2}%", 100.0 * low))?;
    ensure(se_mode[8].1 < gee_mode[8].1, || format!("SE-mode GEE {:e} not below GEE-mode {:e} at 40 dBm", se_mode[8].1, gee_mode[8].1))?;
    Ok(format!(
        "GEE peak {peak:.4e} at {} dBm, flat after; SE {:.2} -> {:.2}; 0 dBm gap {:.3}%; 40 dBm GEE {:.3e} (SE mode) < {:.3e}",
        gee_mode[at].0,
        se[0],
        se[se.len() - 1],
        100.0 * low,
        se_mode[8].1,
        gee_mode[8].1
    ))
}

fn baseline_dominance() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut worst = f64::MAX;
    for seed in 1..=20u64 {
        let mut spec = scaled_spec(dir.path(), "gee, fixed_phi_baseline", seed);
        spec.sweep_dbm = vec![0.0, 10.0, 20.0, 30.0, 40.0];
        let results = run_all(&spec).map_err(|e| e.to_string())?;
        let opt = column(&results, RunMode::Gee);
        let base = column(&results, RunMode::FixedPhiBaseline);
        for (o, b) in opt.iter().zip(&base) {
            ensure(o.1 >= b.1 - 1e-9 * b.1, || format!("seed {seed} at {} dBm: {:e} < baseline {:e}", o.0, o.1, b.1))?;
            worst = worst.min(o.1 / b.1);
        }
    }
    Ok(format!("20 seeds x 5 points, smallest optimized/baseline ratio {worst:.5}"))
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .expect("output dir")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).expect("readable")))
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get()).max(4);
    let mut snaps = Vec::new();
    for (i, n) in [1, 1, threads, threads].into_iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let mut spec = scaled_spec(&out, "gee, se, fixed_phi_baseline", 1);
        spec.mc_samples = 200;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| e.to_string())?;
        pool.install(|| run(&spec)).map_err(|e| e.to_string())?;
        snaps.push(snapshot(&out));
    }
    ensure(snaps[0].len() == 1 + 27, || format!("expected 28 CSV files, got {}", snaps[0].len()))?;
    ensure(snaps.iter().all(|s| *s == snaps[0]), || "CSV outputs differ between runs".into())?;
    Ok(format!("28 CSVs byte-identical over 2 runs at 1 thread and 2 at {threads} threads"))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "DE accuracy vs Monte Carlo", budget_s: 300.0, check: de_accuracy },
        Criterion { id: 2, name: "AO monotonicity", budget_s: 300.0, check: ao_monotonicity },
        Criterion { id: 3, name: "Dinkelbach monotonicity and optimality", budget_s: 60.0, check: dinkelbach_checks },
        Criterion { id: 4, name: "water-filling KKT", budget_s: 60.0, check: waterfill_kkt },
        Criterion { id: 5, name: "MM/BCD descent and bounds", budget_s: 120.0, check: mm_bcd_descent },
        Criterion { id: 6, name: "small-instance phase optimality", budget_s: 60.0, check: small_phase_optimality },
        Criterion { id: 7, name: "eigenbasis dominance", budget_s: 120.0, check: eigenbasis_dominance },
        Criterion { id: 8, name: "GEE saturation and GEE/SE shapes", budget_s: 600.0, check: curve_shapes },
        Criterion { id: 9, name: "fixed-phase baseline dominance", budget_s: 300.0, check: baseline_dominance },
        Criterion { id: 10, name: "determinism", budget_s: 600.0, check: determinism },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.check)();
        let secs = start.elapsed().as_secs_f64();
        let outcome = match outcome {
            Ok(detail) if secs > c.budget_s => Err(format!("{detail}; over the {:.0} s budget", c.budget_s)),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {:>2} {}: {detail} [{secs:.1} s]", c.id, c.name),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {}: {detail} [{secs:.1} s]", c.id, c.name);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
