//! Outer alternating optimization of power allocation and RIS phases.
//!
//! Each outer iteration runs Dinkelbach at the current phases, then a few
//! rounds of (DE refresh, BCD phase step). Every candidate is re-evaluated
//! with a fresh DE solve and kept only if the objective does not drop, so
//! the recorded trace is monotone by construction.

use std::time::Instant;

use crate::channel::{check_dimensions, RisBsChannel, SystemConfig, UtChannelStats};
use crate::de::{de_fixed_point_from, de_rate, DeOptions, DeState, PhaseVector, PowerAllocation};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::phase::{bcd_phase, compute_a, BcdOptions};
use crate::power::{assemble_q, dinkelbach, gee_value, DinkelbachOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Maximize bits/Joule.
    Gee,
    /// Maximize bits/s/Hz (power-amplifier cost ignored by the optimizer).
    Se,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Gee => "gee",
            Mode::Se => "se",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    pub mode: Mode,
    /// On `|ΔGEE| / W` in GEE mode, on `|ΔSE|` in SE mode.
    pub tol_outer: f64,
    pub max_outer: usize,
    pub phase_refresh_cycles: usize,
    pub dinkelbach: DinkelbachOptions,
    pub bcd: BcdOptions,
    pub de: DeOptions,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            mode: Mode::Gee,
            tol_outer: 1e-4,
            max_outer: 100,
            phase_refresh_cycles: 3,
            dinkelbach: DinkelbachOptions::default(),
            bcd: BcdOptions::default(),
            de: DeOptions::default(),
        }
    }
}

impl OptimizerOptions {
    pub fn with_mode(mode: Mode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// 0 is the starting point.
    pub iteration: usize,
    pub gee: f64,
    pub se: f64,
    /// Dinkelbach ratio of this iteration in bits/Joule (the starting GEE for
    /// iteration 0).
    pub eta: f64,
    pub dinkelbach_iters: usize,
    pub bcd_iters: usize,
    /// Seconds since the start of `maximize`.
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub alloc: PowerAllocation,
    pub phi: PhaseVector,
    pub q: Vec<CMat>,
    /// bits/Joule, with the true amplifier efficiencies.
    pub gee: f64,
    /// bits/s/Hz.
    pub se: f64,
    pub trace: Vec<TraceRecord>,
    pub converged: bool,
}

impl Solution {
    pub fn outer_iterations(&self) -> usize {
        self.trace.last().map_or(0, |r| r.iteration)
    }

    pub fn eta_final(&self) -> f64 {
        self.trace.last().map_or(0.0, |r| r.eta)
    }
}

#[derive(Debug, Clone, Copy)]
struct Point {
    gee: f64,
    se: f64,
}

impl Point {
    fn objective(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Gee => self.gee,
            Mode::Se => self.se,
        }
    }
}

fn evaluate_with_state(
    config: &SystemConfig,
    h1: &RisBsChannel,
    stats: &[UtChannelStats],
    alloc: &PowerAllocation,
    phi: &PhaseVector,
    de: DeOptions,
    warm: Option<&DeState>,
) -> Result<(Point, DeState)> {
    let state = de_fixed_point_from(h1, phi, stats, alloc, config.sigma2, de, warm.map(|s| s.psi.as_slice()))?;
    let se = de_rate(&state, alloc, stats)?;
    let gee = gee_value(se, alloc, config)?.gee;
    Ok((Point { gee, se }, state))
}

/// DE-based `(GEE, SE)` at an arbitrary operating point.
pub fn evaluate(
    config: &SystemConfig,
    h1: &RisBsChannel,
    stats: &[UtChannelStats],
    alloc: &PowerAllocation,
    phi: &PhaseVector,
) -> Result<(f64, f64)> {
    config.validate()?;
    check_dimensions(config, h1, stats)?;
    phi.check()?;
    alloc.check_feasible(&config.p_max)?;
    let (p, _) = evaluate_with_state(config, h1, stats, alloc, phi, DeOptions::default(), None)?;
    Ok((p.gee, p.se))
}

/// Alternating optimization from uniform full power and `φ = 1`.
pub fn maximize(
    config: &SystemConfig,
    h1: &RisBsChannel,
    stats: &[UtChannelStats],
    options: &OptimizerOptions,
) -> Result<Solution> {
    config.validate()?;
    check_dimensions(config, h1, stats)?;
    if !(options.tol_outer > 0.0) {
        return Err(Error::InvalidConfig("tol_outer must be positive".into()));
    }
    let mode = options.mode;
    let power_config = match mode {
        Mode::Gee => config.clone(),
        Mode::Se => SystemConfig {
            xi: vec![0.0; config.users()],
            ..config.clone()
        },
    };
    let de = options.de;
    let start = Instant::now();

    let mut alloc = PowerAllocation::uniform(&config.ut_antennas, &config.p_max);
    let mut phi = PhaseVector::ones(config.ris_elements);
    let (mut point, mut state) = evaluate_with_state(config, h1, stats, &alloc, &phi, de, None)?;
    let mut trace = vec![TraceRecord {
        iteration: 0,
        gee: point.gee,
        se: point.se,
        eta: point.gee,
        dinkelbach_iters: 0,
        bcd_iters: 0,
        wall_time: start.elapsed().as_secs_f64(),
    }];
    let mut converged = false;

    for t in 1..=options.max_outer {
        let wrap = |e: Error| Error::Outer {
            iteration: t,
            source: Box::new(e),
        };
        let previous = point;

        let dk = dinkelbach(h1, &phi, stats, &power_config, &options.dinkelbach).map_err(wrap)?;
        let cand = Point {
            gee: gee_value(dk.rate, &dk.alloc, config).map_err(wrap)?.gee,
            se: dk.rate,
        };
        if cand.objective(mode) >= point.objective(mode) {
            alloc = dk.alloc;
            point = cand;
            state = dk.state;
        }

        let mut bcd_iters = 0;
        for _ in 0..options.phase_refresh_cycles {
            let a = compute_a(stats, &state.psi).map_err(wrap)?;
            let bcd = bcd_phase(&h1.h1, &a, config.sigma2, &phi, options.bcd).map_err(wrap)?;
            bcd_iters += bcd.iterations;
            let (cand, cand_state) =
                evaluate_with_state(config, h1, stats, &alloc, &bcd.phi, de, Some(&state)).map_err(wrap)?;
            if cand.objective(mode) < point.objective(mode) {
                break;
            }
            phi = bcd.phi;
            point = cand;
            state = cand_state;
        }

        trace.push(TraceRecord {
            iteration: t,
            gee: point.gee,
            se: point.se,
            eta: dk.eta_star,
            dinkelbach_iters: dk.iterations,
            bcd_iters,
            wall_time: start.elapsed().as_secs_f64(),
        });

        let change = match mode {
            Mode::Gee => (point.gee - previous.gee).abs() / config.bandwidth,
            Mode::Se => (point.se - previous.se).abs(),
        };
        if change <= options.tol_outer {
            converged = true;
            break;
        }
    }

    Ok(Solution {
        q: assemble_q(stats, &alloc),
        alloc,
        phi,
        gee: point.gee,
        se: point.se,
        trace,
        converged,
    })
}
