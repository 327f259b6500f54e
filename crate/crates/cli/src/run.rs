//! Sweep execution and CSV/JSON output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use riseff_core::rng::stream;
use riseff_core::{
    assemble_q, dinkelbach, ergodic_se, evaluate, maximize, sample_h1, synthesize_stats,
    DinkelbachOptions, McEstimate, OptimizerOptions, PhaseVector, PowerAllocation, RisBsChannel,
    TraceRecord, UtChannelStats,
};

use crate::error::CliError;
use crate::spec::{ExperimentSpec, RunMode};

pub const RESULTS_HEADER: &str = "scenario,mode,p_max_dbm,gee_bits_per_joule,se_bits_s_hz,mc_se_mean,mc_se_stderr,outer_iters,eta_final,wall_time_s";
pub const TRACE_HEADER: &str = "iteration,gee_bits_per_joule,se_bits_s_hz,eta_bits_per_joule,dinkelbach_iters,bcd_iters,wall_time_s";

/// Channel statistics shared by every sweep point of a run.
#[derive(Debug, Clone)]
pub struct Instance {
    pub h1: RisBsChannel,
    pub stats: Vec<UtChannelStats>,
}

pub fn build_instance(spec: &ExperimentSpec) -> Result<Instance, CliError> {
    let seeds = spec.seeds();
    let cfg = spec.system_config(spec.sweep_dbm[0]);
    let h1 = sample_h1(&cfg, &mut stream(seeds.h1, 0));
    let stats = synthesize_stats(&cfg, spec.corr, spec.pathloss_db, &mut stream(seeds.stats, 0))
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(Instance { h1, stats })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub mode: RunMode,
    pub p_max_dbm: f64,
}

/// Mode-major, then ascending power.
pub fn jobs(spec: &ExperimentSpec) -> Vec<Job> {
    spec.modes
        .iter()
        .flat_map(|&mode| spec.sweep_dbm.iter().map(move |&p_max_dbm| Job { mode, p_max_dbm }))
        .collect()
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub job: Job,
    pub gee: f64,
    pub se: f64,
    pub mc: Option<McEstimate>,
    pub outer_iters: usize,
    pub eta_final: f64,
    pub wall_time: f64,
    pub trace: Vec<TraceRecord>,
    pub alloc: PowerAllocation,
    pub phi: PhaseVector,
}

fn numerical(job: &Job, source: riseff_core::Error) -> CliError {
    CliError::Numerical {
        context: format!("{} at {} dBm", job.mode, job.p_max_dbm),
        source,
    }
}

fn optimizer_options(spec: &ExperimentSpec, mode: RunMode) -> OptimizerOptions {
    OptimizerOptions {
        tol_outer: spec.tol_outer,
        max_outer: spec.max_outer,
        phase_refresh_cycles: spec.phase_refresh_cycles,
        ..OptimizerOptions::with_mode(mode.optimizer_mode())
    }
}

/// Power optimized by Dinkelbach with the phases held at `φ = 1`.
fn fixed_phi_baseline(
    spec: &ExperimentSpec,
    instance: &Instance,
    job: &Job,
) -> Result<(PowerAllocation, PhaseVector, Vec<TraceRecord>, f64), riseff_core::Error> {
    let cfg = spec.system_config(job.p_max_dbm);
    let phi = PhaseVector::ones(cfg.ris_elements);
    let start = Instant::now();
    let uniform = PowerAllocation::uniform(&cfg.ut_antennas, &cfg.p_max);
    let (gee0, se0) = evaluate(&cfg, &instance.h1, &instance.stats, &uniform, &phi)?;
    let dk = dinkelbach(&instance.h1, &phi, &instance.stats, &cfg, &DinkelbachOptions::default())?;
    let (gee1, se1) = evaluate(&cfg, &instance.h1, &instance.stats, &dk.alloc, &phi)?;
    let (alloc, gee, se) = if gee1 >= gee0 { (dk.alloc, gee1, se1) } else { (uniform, gee0, se0) };
    let trace = vec![
        TraceRecord {
            iteration: 0,
            gee: gee0,
            se: se0,
            eta: gee0,
            dinkelbach_iters: 0,
            bcd_iters: 0,
            wall_time: 0.0,
        },
        TraceRecord {
            iteration: 1,
            gee,
            se,
            eta: dk.eta_star,
            dinkelbach_iters: dk.iterations,
            bcd_iters: 0,
            wall_time: start.elapsed().as_secs_f64(),
        },
    ];
    Ok((alloc, phi, trace, dk.eta_star))
}

pub fn run_job(spec: &ExperimentSpec, instance: &Instance, job: Job) -> Result<RunResult, CliError> {
    let start = Instant::now();
    let cfg = spec.system_config(job.p_max_dbm);
    let (alloc, phi, trace, gee, se, eta_final) = match job.mode {
        RunMode::FixedPhiBaseline => {
            let (alloc, phi, trace, eta) =
                fixed_phi_baseline(spec, instance, &job).map_err(|e| numerical(&job, e))?;
            let last = trace.last().expect("baseline trace has two records");
            let (gee, se) = (last.gee, last.se);
            (alloc, phi, trace, gee, se, eta)
        }
        RunMode::Gee | RunMode::Se => {
            let sol = maximize(&cfg, &instance.h1, &instance.stats, &optimizer_options(spec, job.mode))
                .map_err(|e| numerical(&job, e))?;
            let eta = sol.eta_final();
            (sol.alloc, sol.phi, sol.trace, sol.gee, sol.se, eta)
        }
    };
    let mc = if spec.mc_samples > 0 {
        let q = assemble_q(&instance.stats, &alloc);
        Some(
            ergodic_se(
                &instance.h1,
                &phi,
                &q,
                &instance.stats,
                cfg.sigma2,
                spec.mc_samples,
                spec.seeds().monte_carlo,
            )
            .map_err(|e| numerical(&job, e))?,
        )
    } else {
        None
    };
    Ok(RunResult {
        job,
        gee,
        se,
        mc,
        outer_iters: trace.last().map_or(0, |r| r.iteration),
        eta_final,
        wall_time: start.elapsed().as_secs_f64(),
        trace,
        alloc,
        phi,
    })
}

/// Runs every job on the current rayon pool; results come back in job order.
pub fn run_all(spec: &ExperimentSpec) -> Result<Vec<RunResult>, CliError> {
    let instance = build_instance(spec)?;
    jobs(spec)
        .into_par_iter()
        .map(|job| run_job(spec, &instance, job))
        .collect()
}

fn time_field(spec: &ExperimentSpec, t: f64) -> f64 {
    if spec.record_timing {
        t
    } else {
        0.0
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<(), CliError> {
    if values.iter().all(|v| v.is_finite()) {
        return Ok(());
    }
    Err(CliError::Numerical {
        context: what.to_string(),
        source: riseff_core::Error::Divergence {
            stage: "CSV output",
            iteration: 0,
        },
    })
}

pub fn results_csv(spec: &ExperimentSpec, results: &[RunResult]) -> Result<String, CliError> {
    let mut out = String::new();
    writeln!(out, "{RESULTS_HEADER}").unwrap();
    for r in results {
        let (mc_mean, mc_stderr) = r.mc.map_or((0.0, 0.0), |m| (m.mean, m.stderr));
        let wall = time_field(spec, r.wall_time);
        check_finite(
            &[r.job.p_max_dbm, r.gee, r.se, mc_mean, mc_stderr, r.eta_final, wall],
            &format!("results row {} at {} dBm", r.job.mode, r.job.p_max_dbm),
        )?;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            spec.scenario,
            r.job.mode,
            r.job.p_max_dbm,
            r.gee,
            r.se,
            mc_mean,
            mc_stderr,
            r.outer_iters,
            r.eta_final,
            wall
        )
        .unwrap();
    }
    Ok(out)
}

pub fn trace_csv(spec: &ExperimentSpec, result: &RunResult) -> Result<String, CliError> {
    let mut out = String::new();
    writeln!(out, "{TRACE_HEADER}").unwrap();
    for t in &result.trace {
        let wall = time_field(spec, t.wall_time);
        check_finite(&[t.gee, t.se, t.eta, wall], "trace")?;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            t.iteration, t.gee, t.se, t.eta, t.dinkelbach_iters, t.bcd_iters, wall
        )
        .unwrap();
    }
    Ok(out)
}

pub fn trace_file_name(result: &RunResult) -> String {
    format!("trace_{}_{}.csv", result.job.mode, result.job.p_max_dbm)
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs the sweep and writes `results.csv`, one trace per run and
/// `spec_resolved.json` into `spec.output_dir`.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<RunResult>, CliError> {
    let dir = &spec.output_dir;
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    let resolved = serde_json::to_string_pretty(&spec.resolved()).expect("spec serializes");
    write(&dir.join("spec_resolved.json"), &(resolved + "\n"))?;

    let results = run_all(spec)?;
    write(&dir.join("results.csv"), &results_csv(spec, &results)?)?;
    for r in &results {
        write(&dir.join(trace_file_name(r)), &trace_csv(spec, r)?)?;
    }
    Ok(results)
}
