//! RIS phase optimization at fixed transmit covariances.
//!
//! Maximizing `C(Φ) = log₂ det(I + H₁ΦAΦᴴH₁ᴴ/σ²)` is recast as a weighted
//! MSE minimization over `(W, U, φ)`. `W` and `U` have closed forms; the
//! unit-modulus `φ` step minimizes `g(φ) = φᴴSφ − 2Re{φᴴc*}` by
//! majorization-minimization with the bound `L = λ_max(S)·I`.

use crate::channel::UtChannelStats;
use crate::de::PhaseVector;
use crate::error::{Error, Result};
use crate::linalg::{
    hadamard, hermitian_eigenvalues, hermitize, hpd_inverse, hpd_solve, identity, lambda_max,
    ln_det_hpd, log2_det_hpd, psd_sqrt, scale_columns, scale_columns_complex, CMat, CVec,
};

/// Condition number above which `E` is ridge-regularized before inversion.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcdOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub mm: MmOptions,
}

impl Default for BcdOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 200,
            mm: MmOptions::default(),
        }
    }
}

/// Working matrices of one BCD pass.
#[derive(Debug, Clone)]
pub struct MsePack {
    pub a: CMat,
    pub a_half: CMat,
    pub w: CMat,
    pub u: CMat,
    pub e: CMat,
}

#[derive(Debug, Clone)]
pub struct MmResult {
    pub phi: PhaseVector,
    /// `g(φ⁽ⁱ⁾)`, starting at the input phases.
    pub trace: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct BcdResult {
    pub phi: PhaseVector,
    /// `h = tr(WE) − ln det W` after every sweep, starting at the input phases.
    pub h_trace: Vec<f64>,
    pub iterations: usize,
    pub mm_iterations: usize,
    /// Some `W` update needed the ridge.
    pub regularized: bool,
}

/// `A = Σₖ U₂ₖ diag(Ωₖ ψₖ) U₂ₖᴴ`.
pub fn compute_a(stats: &[UtChannelStats], psi: &[Vec<f64>]) -> Result<CMat> {
    if stats.len() != psi.len() {
        return Err(Error::Dimension("stats/psi user count mismatch".into()));
    }
    let nr = stats.first().map_or(0, |s| s.ris_elements());
    let mut a = CMat::zeros(nr, nr);
    for (k, (s, p)) in stats.iter().zip(psi).enumerate() {
        if p.len() != s.antennas() || s.ris_elements() != nr {
            return Err(Error::Dimension(format!("psi of UT {k} has wrong length")));
        }
        let weights: Vec<f64> = (0..nr)
            .map(|n| (0..p.len()).map(|m| s.omega[(n, m)] * p[m]).sum())
            .collect();
        a += scale_columns(&s.u2, &weights) * s.u2.adjoint();
    }
    Ok(hermitize(&a))
}

fn h1_phi(h1: &CMat, phi: &PhaseVector) -> CMat {
    scale_columns_complex(h1, &phi.phi)
}

/// `E = (UᴴH₁ΦA^{1/2} − I)(·)ᴴ + σ²UᴴU`.
pub fn mse_matrix(u: &CMat, h1: &CMat, phi: &PhaseVector, a_half: &CMat, sigma2: f64) -> CMat {
    let n = a_half.nrows();
    let resid = u.adjoint() * h1_phi(h1, phi) * a_half - identity(n);
    let e = &resid * resid.adjoint() + (u.adjoint() * u).scale(sigma2);
    hermitize(&e)
}

/// `W = E⁻¹`, with a ridge when `E` is nearly singular. The flag reports
/// whether the ridge was applied.
pub fn bcd_update_w(e: &CMat) -> Result<(CMat, bool)> {
    let n = e.nrows();
    if n == 0 {
        return Ok((CMat::zeros(0, 0), false));
    }
    // ‖E‖_F ‖E⁻¹‖_F bounds the spectral condition number from above, so the
    // eigenvalues are only needed when the bound is inconclusive.
    if let Ok(w) = hpd_inverse(e) {
        if e.norm() * w.norm() <= MAX_CONDITION {
            return Ok((w, false));
        }
    }
    let values = hermitian_eigenvalues(e);
    let (lo, hi) = (values[0], values[n - 1]);
    if !hi.is_finite() || hi <= 0.0 {
        return Err(Error::NotPositiveDefinite);
    }
    if lo > 0.0 && hi / lo <= MAX_CONDITION {
        return Ok((hpd_inverse(e)?, false));
    }
    let delta = 1e-12 * e.trace().re / n as f64;
    let ridged = e + identity(n).scale(delta);
    log::debug!("MSE matrix ill-conditioned (cond {:e}); ridge {delta:e}", hi / lo);
    Ok((hpd_inverse(&ridged)?, true))
}

/// `U = (σ²I + H₁ΦAΦᴴH₁ᴴ)⁻¹ H₁ΦA^{1/2}`.
pub fn bcd_update_u(h1: &CMat, phi: &PhaseVector, a: &CMat, a_half: &CMat, sigma2: f64) -> Result<CMat> {
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidConfig("noise power must be positive".into()));
    }
    let hp = h1_phi(h1, phi);
    let cov = identity(h1.nrows()).scale(sigma2) + &hp * a * hp.adjoint();
    hpd_solve(&cov, &(hp * a_half))
}

/// `tr(WE) − ln det W`.
pub fn mse_objective(w: &CMat, e: &CMat) -> Result<f64> {
    Ok((w * e).trace().re - ln_det_hpd(w)?)
}

/// `S = B ⊙ Aᵀ`.
pub fn hadamard_s(b: &CMat, a: &CMat) -> CMat {
    hermitize(&hadamard(b, &a.transpose()))
}

/// `g(φ) = φᴴSφ − 2Re{φᴴc*}`.
pub fn phase_objective(s: &CMat, cvec: &CVec, phi: &CVec) -> f64 {
    let quad = phi.dotc(&(s * phi)).re;
    let lin = phi.dotc(&cvec.conjugate()).re;
    quad - 2.0 * lin
}

/// `B = H₁ᴴUWUᴴH₁` and `c = diag(A^{1/2}WUᴴH₁)`.
pub fn phase_coefficients(h1: &CMat, pack: &MsePack) -> (CMat, CVec) {
    let uh_h1 = pack.u.adjoint() * h1;
    let b = hermitize(&(uh_h1.adjoint() * &pack.w * &uh_h1));
    let cm = &pack.a_half * &pack.w * uh_h1;
    let cvec = CVec::from_iterator(cm.nrows(), (0..cm.nrows()).map(|i| cm[(i, i)]));
    (b, cvec)
}

/// MM iterations on `g(φ)`: `φₙ ← e^{j arg αₙ}` with
/// `α = (λ_max I − S)φ + c*`.
pub fn mm_phase(a: &CMat, b: &CMat, cvec: &CVec, phi0: &PhaseVector, opts: MmOptions) -> Result<MmResult> {
    let n = phi0.len();
    if a.shape() != (n, n) || b.shape() != (n, n) || cvec.len() != n {
        return Err(Error::Dimension("MM inputs do not match the phase vector".into()));
    }
    phi0.check()?;
    let s = hadamard_s(b, a);
    let lmax = lambda_max(&s).max(0.0);
    let shifted = identity(n).scale(lmax) - &s;
    let cconj = cvec.conjugate();

    let mut phi = phi0.phi.clone();
    let mut g = phase_objective(&s, cvec, &phi);
    let mut trace = vec![g];
    let mut iterations = 0;
    for i in 0..opts.max_iter {
        iterations += 1;
        let alpha = &shifted * &phi + &cconj;
        let mut next = phi.clone();
        for (k, al) in alpha.iter().enumerate() {
            if !(al.re.is_finite() && al.im.is_finite()) {
                return Err(Error::Divergence {
                    stage: "MM phase",
                    iteration: i,
                });
            }
            let r = al.norm();
            if r > 0.0 {
                next[k] = al / r;
            }
        }
        let g_next = phase_objective(&s, cvec, &next);
        phi = next;
        trace.push(g_next);
        let delta = (g - g_next).abs();
        g = g_next;
        if delta <= opts.tol {
            break;
        }
    }
    Ok(MmResult {
        phi: PhaseVector { phi },
        trace,
        iterations,
    })
}

/// Block coordinate descent over `(W, U, φ)` starting from `phi0`.
///
/// With `U`, `W` fixed, `tr(WE) = g(φ) + tr W + σ² tr(UWUᴴ)`, so the `h`
/// value after the phase step is read off the MM trace.
pub fn bcd_phase(h1: &CMat, a: &CMat, sigma2: f64, phi0: &PhaseVector, opts: BcdOptions) -> Result<BcdResult> {
    let n = phi0.len();
    if h1.ncols() != n || a.shape() != (n, n) {
        return Err(Error::Dimension("BCD inputs do not match the phase vector".into()));
    }
    phi0.check()?;
    let a_half = psd_sqrt(a)?;
    let mut phi = phi0.clone();
    let mut h_trace = Vec::new();
    let mut h = f64::INFINITY;
    let mut iterations = 0;
    let mut mm_iterations = 0;
    let mut regularized = false;

    for s in 0..opts.max_iter {
        iterations += 1;
        // G = H₁ΦA^{1/2}; the MMSE receiver is (σ²I + GGᴴ)⁻¹G.
        let g = h1_phi(h1, &phi) * &a_half;
        let cov = identity(h1.nrows()).scale(sigma2) + &g * g.adjoint();
        let u = hpd_solve(&cov, &g)?;
        let resid = u.adjoint() * &g - identity(n);
        let e = hermitize(&(&resid * resid.adjoint() + (u.adjoint() * &u).scale(sigma2)));
        let (w, ridged) = bcd_update_w(&e)?;
        regularized |= ridged;
        if s == 0 {
            h = mse_objective(&w, &e)?;
            h_trace.push(h);
        }

        let v = &w * u.adjoint();
        let z = &u * &v;
        let b = hermitize(&(h1.adjoint() * &z * h1));
        let t = &a_half * &v;
        let cvec = CVec::from_iterator(n, (0..n).map(|i| t.row(i).transpose().dot(&h1.column(i))));
        let kappa = w.trace().re + sigma2 * z.trace().re - ln_det_hpd(&w)?;

        let mm = mm_phase(a, &b, &cvec, &phi, opts.mm)?;
        mm_iterations += mm.iterations;
        phi = mm.phi;
        let h_next = mm.trace.last().copied().unwrap_or(f64::NAN) + kappa;
        if !h_next.is_finite() {
            return Err(Error::Divergence {
                stage: "BCD phase",
                iteration: s,
            });
        }
        h_trace.push(h_next);
        let delta = (h - h_next).abs();
        h = h_next;
        if delta <= opts.tol {
            break;
        }
    }
    Ok(BcdResult {
        phi,
        h_trace,
        iterations,
        mm_iterations,
        regularized,
    })
}

/// `C(Φ) = log₂ det(I + (1/σ²) H₁ΦAΦᴴH₁ᴴ)`.
pub fn rate_c(phi: &PhaseVector, h1: &CMat, a: &CMat, sigma2: f64) -> Result<f64> {
    if phi.len() != h1.ncols() || a.shape() != (phi.len(), phi.len()) {
        return Err(Error::Dimension("rate inputs do not match the phase vector".into()));
    }
    let hp = h1_phi(h1, phi);
    let m = identity(h1.nrows()) + (&hp * a * hp.adjoint()).unscale(sigma2);
    Ok(log2_det_hpd(&m)?.max(0.0))
}
