//! Transmit covariance design for fixed RIS phases.
//!
//! The eigenvectors of each `Qₖ` are the UT-side channel eigenbasis `V₂ₖ`, so
//! only the diagonal powers `Λₖ` are optimized. The global energy efficiency
//! `R̄(Λ) / P_tot(Λ)` is maximized with Dinkelbach's method; each parametric
//! subproblem `max R̄(Λ) − η P_tot(Λ)` is solved by alternating per-UT
//! water-filling over `diag(Γₖ)` with a DE refresh, which is exact at
//! convergence because `R̄` is stationary in its auxiliaries.

use std::f64::consts::LN_2;

use crate::channel::{RisBsChannel, SystemConfig, UtChannelStats};
use crate::de::{de_fixed_point_from, de_rate, DeOptions, DeState, PhaseVector, PowerAllocation};
use crate::error::{Error, Result};
use crate::linalg::{hermitize, scale_columns, CMat};

/// Rate, consumed power and their ratio at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeeBreakdown {
    /// bits/s/Hz.
    pub rate: f64,
    /// watts.
    pub total_power: f64,
    /// bits/Joule.
    pub gee: f64,
}

/// `Σₖ(ξₖ tr Λₖ + P_c,ₖ) + P_BS + N_R P_s`.
pub fn total_power(alloc: &PowerAllocation, config: &SystemConfig) -> f64 {
    amplifier_power(alloc, config) + config.static_power()
}

pub fn gee_value(rate: f64, alloc: &PowerAllocation, config: &SystemConfig) -> Result<GeeBreakdown> {
    let total_power = total_power(alloc, config);
    if !(total_power > 0.0) {
        return Err(Error::DegeneratePowerModel);
    }
    Ok(GeeBreakdown {
        rate,
        total_power,
        gee: config.bandwidth * rate / total_power,
    })
}

/// `Qₖ = V₂ₖ diag(λₖ) V₂ₖᴴ`.
pub fn assemble_q(stats: &[UtChannelStats], alloc: &PowerAllocation) -> Vec<CMat> {
    stats
        .iter()
        .zip(&alloc.lambda)
        .map(|(s, l)| hermitize(&(scale_columns(&s.v2, l) * s.v2.adjoint())))
        .collect()
}

/// Water-filling solution together with its budget multiplier `μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waterfill {
    pub power: Vec<f64>,
    pub mu: f64,
}

/// `argmax Σₙ log₂(1 + gₙ λₙ) − η ξ Σₙ λₙ` s.t. `Σₙ λₙ ≤ p_max`, `λ ≥ 0`.
pub fn waterfill(g: &[f64], eta: f64, xi: f64, p_max: f64) -> Vec<f64> {
    waterfill_with_multiplier(g, eta, xi, p_max).power
}

/// KKT form: `λₙ = max(0, L − 1/gₙ)` with water level `L = 1/((ηξ + μ) ln 2)`.
/// The level is found exactly from the sorted active set; `μ = 0` unless
/// the budget binds.
pub fn waterfill_with_multiplier(g: &[f64], eta: f64, xi: f64, p_max: f64) -> Waterfill {
    let price = (eta * xi).max(0.0);
    let n = g.len();
    let zero = Waterfill { power: vec![0.0; n], mu: 0.0 };
    let gmax = g.iter().copied().fold(0.0, f64::max);
    if gmax <= 0.0 {
        return zero;
    }
    let fill = |level: f64| -> Vec<f64> {
        g.iter()
            .map(|&gn| if gn > 0.0 { (level - 1.0 / gn).max(0.0) } else { 0.0 })
            .collect()
    };
    if price > 0.0 {
        let free = fill(1.0 / (price * LN_2));
        if free.iter().sum::<f64>() <= p_max {
            return Waterfill { power: free, mu: 0.0 };
        }
    }
    if p_max <= 0.0 {
        return Waterfill {
            power: vec![0.0; n],
            mu: (gmax / LN_2 - price).max(0.0),
        };
    }
    // Budget binds: Σ max(0, L − aₙ) = p_max with aₙ = 1/gₙ ascending.
    let mut inv: Vec<f64> = g.iter().filter(|&&gn| gn > 0.0).map(|&gn| 1.0 / gn).collect();
    inv.sort_by(f64::total_cmp);
    let mut level = inv[0] + p_max;
    let mut prefix = 0.0;
    for (j, &a) in inv.iter().enumerate() {
        prefix += a;
        let candidate = (p_max + prefix) / (j + 1) as f64;
        let next_ok = inv.get(j + 1).is_none_or(|&next| candidate <= next);
        if candidate > a && next_ok {
            level = candidate;
            break;
        }
    }
    let mu = (1.0 / (level * LN_2) - price).max(0.0);
    Waterfill { power: fill(level), mu }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DinkelbachOptions {
    /// Stopping tolerance on `η = R̄ / P_tot` (bits/s/Hz per watt).
    pub tol: f64,
    pub max_iter: usize,
    /// Relative change in `Λ` that ends the water-filling/DE alternation.
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    pub de: DeOptions,
}

impl Default for DinkelbachOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            inner_tol: 1e-6,
            inner_max_iter: 50,
            de: DeOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DinkelbachResult {
    pub alloc: PowerAllocation,
    /// Final `W · R̄ / P_tot`, bits/Joule.
    pub eta_star: f64,
    /// `W · η⁽ℓ⁾` for every accepted iterate, starting from the uniform
    /// full-power initialization.
    pub trace: Vec<f64>,
    /// bits/s/Hz at the returned allocation.
    pub rate: f64,
    /// Converged DE solution at the returned allocation.
    pub state: DeState,
    pub iterations: usize,
    pub inner_iterations: usize,
    /// Set when an update lowered `η` and the previous iterate was kept.
    pub non_monotone: bool,
}

/// Converged DE state and rate at `alloc`, optionally warm-started.
pub(crate) fn solve_de(
    h1: &RisBsChannel,
    phi: &PhaseVector,
    stats: &[UtChannelStats],
    alloc: &PowerAllocation,
    sigma2: f64,
    de: DeOptions,
    warm: Option<&DeState>,
) -> Result<(DeState, f64)> {
    let state = de_fixed_point_from(h1, phi, stats, alloc, sigma2, de, warm.map(|s| s.psi.as_slice()))?;
    let rate = de_rate(&state, alloc, stats)?;
    Ok((state, rate))
}

fn amplifier_power(alloc: &PowerAllocation, config: &SystemConfig) -> f64 {
    alloc.traces().iter().zip(&config.xi).map(|(t, xi)| xi * t).sum()
}

/// `(1 − β)·a + β·b`; feasible whenever both ends are.
fn blend(a: &PowerAllocation, b: &PowerAllocation, beta: f64) -> PowerAllocation {
    PowerAllocation {
        lambda: a
            .lambda
            .iter()
            .zip(&b.lambda)
            .map(|(x, y)| x.iter().zip(y).map(|(u, v)| (1.0 - beta) * u + beta * v).collect())
            .collect(),
    }
}

/// Step halvings tried before the subproblem solve gives up on a direction.
const MAX_HALVINGS: usize = 10;

struct Iterate {
    alloc: PowerAllocation,
    state: DeState,
    rate: f64,
}

/// Maximizes `R̄(Λ) − η Σₖ ξₖ tr Λₖ` starting from `start`.
///
/// Each step water-fills over the current `diag(Γₖ)`. The water-filling
/// solution is an ascent direction of the (concave) objective, and a step
/// along it is halved until the objective does not decrease, which removes
/// the two-cycles plain alternation can fall into at high SNR.
fn solve_subproblem(
    h1: &RisBsChannel,
    phi: &PhaseVector,
    stats: &[UtChannelStats],
    config: &SystemConfig,
    eta: f64,
    start: &Iterate,
    opts: &DinkelbachOptions,
) -> Result<(Iterate, usize)> {
    let objective = |rate: f64, alloc: &PowerAllocation| rate - eta * amplifier_power(alloc, config);
    let mut cur = Iterate {
        alloc: start.alloc.clone(),
        state: start.state.clone(),
        rate: start.rate,
    };
    let mut f = objective(cur.rate, &cur.alloc);
    let mut steps = 0;
    for _ in 0..opts.inner_max_iter {
        steps += 1;
        let target = PowerAllocation {
            lambda: cur
                .state
                .gamma_diag
                .iter()
                .enumerate()
                .map(|(k, g)| waterfill(g, eta, config.xi[k], config.p_max[k]))
                .collect(),
        };
        if target.max_abs_diff(&cur.alloc) <= opts.inner_tol * (1.0 + target.max_entry()) {
            break;
        }
        let mut beta = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand = blend(&cur.alloc, &target, beta);
            let (state, rate) = solve_de(h1, phi, stats, &cand, config.sigma2, opts.de, Some(&cur.state))?;
            let fc = objective(rate, &cand);
            if fc >= f {
                accepted = Some((Iterate { alloc: cand, state, rate }, fc));
                break;
            }
            beta *= 0.5;
        }
        match accepted {
            Some((next, fc)) => {
                cur = next;
                f = fc;
            }
            None => break,
        }
    }
    Ok((cur, steps))
}

/// Dinkelbach iteration for the power allocation at fixed `φ`.
///
/// With every `ξₖ = 0` the objective is just `R̄` and a single pass is made.
pub fn dinkelbach(
    h1: &RisBsChannel,
    phi: &PhaseVector,
    stats: &[UtChannelStats],
    config: &SystemConfig,
    opts: &DinkelbachOptions,
) -> Result<DinkelbachResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidConfig("Dinkelbach tolerance must be positive".into()));
    }
    let se_mode = config.xi.iter().all(|&x| x == 0.0);
    let w = config.bandwidth;

    let alloc = PowerAllocation::uniform(&config.ut_antennas, &config.p_max);
    let (state, rate) = solve_de(h1, phi, stats, &alloc, config.sigma2, opts.de, None)?;
    let mut cur = Iterate { alloc, state, rate };
    let mut eta = cur.rate / gee_value(cur.rate, &cur.alloc, config)?.total_power;
    let mut trace = vec![w * eta];
    let mut iterations = 0;
    let mut inner_iterations = 0;
    let mut non_monotone = false;

    for _ in 0..opts.max_iter {
        iterations += 1;
        let (cand, steps) = solve_subproblem(h1, phi, stats, config, eta, &cur, opts)?;
        inner_iterations += steps;
        let cand_eta = cand.rate / gee_value(cand.rate, &cand.alloc, config)?.total_power;

        if se_mode {
            // The ratio has a constant denominator: keep the better rate.
            if cand.rate >= cur.rate {
                cur = cand;
                eta = cand_eta;
                trace.push(w * eta);
            }
            break;
        }
        if cand_eta < eta {
            if eta - cand_eta > 1e-9 * eta.abs() {
                log::warn!(
                    "Dinkelbach ratio decreased ({eta:e} -> {cand_eta:e}); keeping previous iterate"
                );
                non_monotone = true;
            }
            break;
        }
        let delta = cand_eta - eta;
        cur = cand;
        eta = cand_eta;
        trace.push(w * eta);
        if delta <= opts.tol {
            break;
        }
    }

    Ok(DinkelbachResult {
        alloc: cur.alloc,
        eta_star: w * eta,
        trace,
        rate: cur.rate,
        state: cur.state,
        iterations,
        inner_iterations,
        non_monotone,
    })
}
