//! Deterministic equivalent of the ergodic sum rate.
//!
//! For fixed phases `φ` and power allocation `Λ`, the auxiliaries `(γ, ψ)`
//! solve the coupled fixed-point equations
//!
//! ```text
//! γₖ,ₘ = (1/σ²) u_{Gₖ,m}ᴴ (I + Ψ)⁻¹ u_{Gₖ,m},        U_{Gₖ} = H₁ diag(φ) U₂ₖ
//! ψₖ,ₙ = λₖ,ₙ / (1 + gₖ,ₙ λₖ,ₙ),                     gₖ = Ωₖᵀ γₖ
//! Ψ    = (1/σ²) Σₖ U_{Gₖ} diag(Ωₖ ψₖ) U_{Gₖ}ᴴ
//! ```
//!
//! and the rate approximation is
//! `R̄ = [Σₖ Σₙ ln(1 + gₖ,ₙ λₖ,ₙ) + ln det(I + Ψ) − Σₖ γₖᵀ Ωₖ ψₖ] / ln 2`.
//! The expression is stationary in `(γ, ψ)` at the fixed point, which is
//! what lets the power and phase steps treat the auxiliaries as frozen.

use num_complex::Complex64;

use crate::channel::{RisBsChannel, UtChannelStats};
use crate::error::{Error, Result};
use crate::linalg::{hermitize, hpd_inverse, identity, ln_det_hpd, scale_columns, CMat, CVec};

/// Per-UT diagonal power allocations `diag(Λₖ)`, watts.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub lambda: Vec<Vec<f64>>,
}

impl PowerAllocation {
    pub fn zeros(ut_antennas: &[usize]) -> Self {
        Self {
            lambda: ut_antennas.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// Budget split evenly over each UT's antennas.
    pub fn uniform(ut_antennas: &[usize], p_max: &[f64]) -> Self {
        Self {
            lambda: ut_antennas
                .iter()
                .zip(p_max)
                .map(|(&n, &p)| vec![p / n as f64; n])
                .collect(),
        }
    }

    /// `tr Λₖ` for each UT.
    pub fn traces(&self) -> Vec<f64> {
        self.lambda.iter().map(|l| l.iter().sum()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.lambda.iter().flatten().all(|&v| v == 0.0)
    }

    /// Entries non-negative and each UT within its budget (+1e-9).
    pub fn check_feasible(&self, p_max: &[f64]) -> Result<()> {
        if self.lambda.len() != p_max.len() {
            return Err(Error::Dimension("allocation/user count mismatch".into()));
        }
        for (k, (l, &p)) in self.lambda.iter().zip(p_max).enumerate() {
            if l.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidConfig(format!("negative power for UT {k}")));
            }
            let total: f64 = l.iter().sum();
            if total > p + 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "UT {k} uses {total} W over its {p} W budget"
                )));
            }
        }
        Ok(())
    }

    /// Sup-norm distance between two allocations of the same shape.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.lambda
            .iter()
            .flatten()
            .zip(other.lambda.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_entry(&self) -> f64 {
        self.lambda.iter().flatten().fold(0.0, |m, &v| m.max(v.abs()))
    }
}

/// RIS reflection coefficients, one unit-modulus entry per element.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    pub phi: CVec,
}

impl PhaseVector {
    /// `Φ = I`.
    pub fn ones(n: usize) -> Self {
        Self {
            phi: CVec::from_element(n, Complex64::new(1.0, 0.0)),
        }
    }

    pub fn from_angles(theta: &[f64]) -> Self {
        Self {
            phi: CVec::from_iterator(theta.len(), theta.iter().map(|&t| Complex64::from_polar(1.0, t))),
        }
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// Largest `| |φₙ| − 1 |`.
    pub fn modulus_error(&self) -> f64 {
        self.phi.iter().map(|p| (p.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn check(&self) -> Result<()> {
        let err = self.modulus_error();
        if !(err < 1e-10) {
            return Err(Error::InvalidConfig(format!(
                "phase vector violates unit modulus by {err:e}"
            )));
        }
        Ok(())
    }
}

/// Auxiliary quantities at (or near) the DE fixed point.
#[derive(Debug, Clone)]
pub struct DeState {
    /// `γₖ`, length `N_R` each.
    pub gamma: Vec<Vec<f64>>,
    /// `ψₖ`, length `Nₖ` each.
    pub psi: Vec<Vec<f64>>,
    /// Diagonals of `Γₖ = diag(Ωₖᵀ γₖ)`.
    pub gamma_diag: Vec<Vec<f64>>,
    /// `Ψ = Σₖ Ψₖ`, `M × M`.
    pub psi_matrix: CMat,
    pub converged: bool,
    pub iterations: usize,
    /// Relative sup-norm change of `(γ, ψ)` in the last sweep.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
        }
    }
}

/// `U_{Gₖ} = H₁ diag(φ) U₂ₖ` for every UT.
pub fn effective_bases(h1: &RisBsChannel, phi: &PhaseVector, stats: &[UtChannelStats]) -> Vec<CMat> {
    let h1_phi = crate::linalg::scale_columns_complex(&h1.h1, &phi.phi);
    stats.iter().map(|s| &h1_phi * &s.u2).collect()
}

fn omega_times(stats: &UtChannelStats, psi: &[f64]) -> Vec<f64> {
    let w = &stats.omega;
    (0..w.nrows())
        .map(|n| (0..w.ncols()).map(|m| w[(n, m)] * psi[m]).sum())
        .collect()
}

fn omega_t_times(stats: &UtChannelStats, gamma: &[f64]) -> Vec<f64> {
    let w = &stats.omega;
    (0..w.ncols())
        .map(|m| (0..w.nrows()).map(|n| w[(n, m)] * gamma[n]).sum())
        .collect()
}

fn build_psi_matrix(bases: &[CMat], stats: &[UtChannelStats], psi: &[Vec<f64>], sigma2: f64, m: usize) -> CMat {
    let mut total = CMat::zeros(m, m);
    for ((ug, s), p) in bases.iter().zip(stats).zip(psi) {
        let weights = omega_times(s, p);
        let scaled = scale_columns(ug, &weights);
        total += scaled * ug.adjoint();
    }
    hermitize(&total.unscale(sigma2))
}

/// Squared extrapolation over three consecutive sweeps `x0, F(x0), F²(x0)`,
/// projected back onto `0 ≤ ψ ≤ λ` where every fixed point lives.
fn squarem(h: &[Vec<f64>], lambda: &[Vec<f64>]) -> Vec<f64> {
    let (x0, x1, x2) = (&h[0], &h[1], &h[2]);
    let r: Vec<f64> = x1.iter().zip(x0).map(|(a, b)| a - b).collect();
    let v: Vec<f64> = x2.iter().zip(x1).zip(&r).map(|((a, b), r)| a - b - r).collect();
    let (rn, vn) = (r.iter().map(|x| x * x).sum::<f64>().sqrt(), v.iter().map(|x| x * x).sum::<f64>().sqrt());
    if !(vn > 0.0) || !rn.is_finite() {
        return x2.clone();
    }
    let alpha = (-rn / vn).min(-1.0);
    let caps = lambda.iter().flatten();
    let out: Vec<f64> = x0
        .iter()
        .zip(&r)
        .zip(&v)
        .zip(caps)
        .map(|(((x, r), v), &cap)| (x - 2.0 * alpha * r + alpha * alpha * v).clamp(0.0, cap))
        .collect();
    if out.iter().all(|v| v.is_finite()) {
        out
    } else {
        x2.clone()
    }
}

fn unflatten(x: &[f64], like: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut it = x.iter().copied();
    like.iter().map(|l| it.by_ref().take(l.len()).collect()).collect()
}

fn relative_sup_change(old: &[Vec<f64>], new: &[Vec<f64>]) -> f64 {
    let scale = new.iter().flatten().chain(old.iter().flatten()).fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let diff = old
        .iter()
        .flatten()
        .zip(new.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    diff / scale
}

fn check_inputs(h1: &RisBsChannel, phi: &PhaseVector, stats: &[UtChannelStats], alloc: &PowerAllocation) -> Result<()> {
    let nr = h1.h1.ncols();
    if phi.len() != nr {
        return Err(Error::Dimension(format!("phase vector length {} != N_R {nr}", phi.len())));
    }
    if stats.len() != alloc.lambda.len() {
        return Err(Error::Dimension("stats/allocation user count mismatch".into()));
    }
    for (k, (s, l)) in stats.iter().zip(&alloc.lambda).enumerate() {
        if s.ris_elements() != nr || s.antennas() != l.len() {
            return Err(Error::Dimension(format!("UT {k} dimensions inconsistent")));
        }
    }
    Ok(())
}

/// Solves the DE fixed point by joint sweeps over all UTs.
///
/// Returns `converged = false` when `max_iter` sweeps do not reach `tol`;
/// non-finite intermediates are reported as [`Error::Divergence`].
pub fn de_fixed_point(
    h1: &RisBsChannel,
    phi: &PhaseVector,
    stats: &[UtChannelStats],
    alloc: &PowerAllocation,
    sigma2: f64,
    opts: DeOptions,
) -> Result<DeState> {
    de_fixed_point_from(h1, phi, stats, alloc, sigma2, opts, None)
}

/// [`de_fixed_point`] started from `psi0` instead of `λ / (1 + λ)`, e.g. the
/// solution at a nearby operating point.
pub fn de_fixed_point_from(
    h1: &RisBsChannel,
    phi: &PhaseVector,
    stats: &[UtChannelStats],
    alloc: &PowerAllocation,
    sigma2: f64,
    opts: DeOptions,
    psi0: Option<&[Vec<f64>]>,
) -> Result<DeState> {
    check_inputs(h1, phi, stats, alloc)?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidConfig("DE tolerance must be positive".into()));
    }
    let m = h1.h1.nrows();
    let bases = effective_bases(h1, phi, stats);

    let mut psi: Vec<Vec<f64>> = match psi0 {
        Some(init) => {
            let shape_ok = init.len() == alloc.lambda.len()
                && init.iter().zip(&alloc.lambda).all(|(p, l)| p.len() == l.len());
            if !shape_ok || init.iter().flatten().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(Error::Dimension("DE warm start does not match the allocation".into()));
            }
            init.to_vec()
        }
        None => alloc
            .lambda
            .iter()
            .map(|l| l.iter().map(|&x| x / (1.0 + x)).collect())
            .collect(),
    };
    let mut psi_matrix = build_psi_matrix(&bases, stats, &psi, sigma2, m);
    let mut gamma: Vec<Vec<f64>> = stats.iter().map(|s| vec![0.0; s.ris_elements()]).collect();
    let mut gamma_diag: Vec<Vec<f64>> = alloc.lambda.iter().map(|l| vec![0.0; l.len()]).collect();

    let mut residual = f64::INFINITY;
    let mut prev_residual = f64::INFINITY;
    let mut rises = 0usize;
    let mut damping = 1.0;
    let mut history: Vec<Vec<f64>> = vec![psi.concat()];

    for iter in 1..=opts.max_iter {
        let inv = hpd_inverse(&(identity(m) + &psi_matrix))
            .map_err(|_| Error::Divergence { stage: "DE fixed point", iteration: iter })?;

        let new_gamma: Vec<Vec<f64>> = bases
            .iter()
            .map(|ug| {
                let x = &inv * ug;
                (0..ug.ncols())
                    .map(|col| (ug.column(col).dotc(&x.column(col))).re.max(0.0) / sigma2)
                    .collect()
            })
            .collect();
        let new_gdiag: Vec<Vec<f64>> = stats.iter().zip(&new_gamma).map(|(s, g)| omega_t_times(s, g)).collect();
        let new_psi: Vec<Vec<f64>> = alloc
            .lambda
            .iter()
            .zip(&new_gdiag)
            .zip(&psi)
            .map(|((l, g), old)| {
                l.iter()
                    .zip(g)
                    .zip(old)
                    .map(|((&lam, &gg), &o)| {
                        let target = lam / (1.0 + gg * lam);
                        damping * target + (1.0 - damping) * o
                    })
                    .collect()
            })
            .collect();

        let finite = new_gamma.iter().chain(&new_psi).flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Divergence { stage: "DE fixed point", iteration: iter });
        }

        residual = if iter == 1 {
            f64::INFINITY
        } else {
            relative_sup_change(&gamma, &new_gamma).max(relative_sup_change(&psi, &new_psi))
        };
        gamma = new_gamma;
        gamma_diag = new_gdiag;
        psi = new_psi;
        if damping == 1.0 {
            history.push(psi.concat());
            if history.len() == 3 {
                let x = squarem(&history, &alloc.lambda);
                psi = unflatten(&x, &alloc.lambda);
                history = vec![x];
            }
        } else {
            history = vec![psi.concat()];
        }
        psi_matrix = build_psi_matrix(&bases, stats, &psi, sigma2, m);

        if residual <= opts.tol {
            return Ok(DeState {
                gamma,
                psi,
                gamma_diag,
                psi_matrix,
                converged: true,
                iterations: iter,
                residual,
            });
        }
        if residual.is_finite() && prev_residual.is_finite() && residual > prev_residual {
            rises += 1;
            if rises >= 2 && damping == 1.0 {
                log::debug!("DE oscillation detected at sweep {iter}; damping ψ updates");
                damping = 0.5;
            }
        } else {
            rises = 0;
        }
        prev_residual = residual;
    }

    Ok(DeState {
        gamma,
        psi,
        gamma_diag,
        psi_matrix,
        converged: false,
        iterations: opts.max_iter,
        residual,
    })
}

/// DE of the ergodic sum rate in bits/s/Hz at a converged state.
pub fn de_rate(state: &DeState, alloc: &PowerAllocation, stats: &[UtChannelStats]) -> Result<f64> {
    if !state.converged {
        return Err(Error::NotConverged {
            stage: "DE fixed point",
            max_iter: state.iterations,
            residual: state.residual,
        });
    }
    let per_ut: f64 = state
        .gamma_diag
        .iter()
        .zip(&alloc.lambda)
        .flat_map(|(g, l)| g.iter().zip(l).map(|(gg, lam)| (gg * lam).ln_1p()))
        .sum();
    let m = state.psi_matrix.nrows();
    let joint = ln_det_hpd(&(identity(m) + &state.psi_matrix))?;
    let coupling: f64 = stats
        .iter()
        .zip(&state.gamma)
        .zip(&state.psi)
        .map(|((s, g), p)| g.iter().zip(omega_times(s, p)).map(|(a, b)| a * b).sum::<f64>())
        .sum();
    Ok(((per_ut + joint - coupling) / std::f64::consts::LN_2).max(0.0))
}

/// `R̄` after solving the fixed point with default options.
pub fn de_sum_rate(
    h1: &RisBsChannel,
    phi: &PhaseVector,
    stats: &[UtChannelStats],
    alloc: &PowerAllocation,
    sigma2: f64,
) -> Result<f64> {
    let state = de_fixed_point(h1, phi, stats, alloc, sigma2, DeOptions::default())?;
    de_rate(&state, alloc, stats)
}
