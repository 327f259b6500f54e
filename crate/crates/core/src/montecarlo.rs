//! Monte Carlo estimate of the ergodic sum rate, the independent check on
//! the deterministic equivalent.
//!
//! Draw `d` uses stream `d` of the supplied seed, so the estimate does not
//! depend on how draws are scheduled across threads. Per-draw values are
//! collected in draw order and reduced sequentially.

use rayon::prelude::*;

use crate::channel::{sample_inner, RisBsChannel, UtChannelStats};
use crate::de::PhaseVector;
use crate::error::{Error, Result};
use crate::linalg::{identity, log2_det_hpd, min_eigenvalue, psd_sqrt, scale_columns_complex, CMat};
use crate::rng::stream;

pub const DEFAULT_SAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    /// bits/s/Hz.
    pub mean: f64,
    /// Sample standard deviation over `√n`.
    pub stderr: f64,
    pub n_samples: usize,
}

/// Welford accumulation over values in the given order.
fn summarize(values: &[f64]) -> McEstimate {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &v) in values.iter().enumerate() {
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let n = values.len();
    let var = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
    McEstimate {
        mean,
        stderr: (var.max(0.0) / n as f64).sqrt(),
        n_samples: n,
    }
}

struct Prepared {
    /// `H₁ Φ U₂ₖ`.
    left: Vec<CMat>,
    /// `V₂ₖᴴ Qₖ^{1/2}`.
    right: Vec<CMat>,
    m: usize,
    width: usize,
    sigma2: f64,
}

impl Prepared {
    fn new(
        h1: &RisBsChannel,
        phi: &PhaseVector,
        q: &[CMat],
        stats: &[UtChannelStats],
        sigma2: f64,
    ) -> Result<Self> {
        if q.len() != stats.len() {
            return Err(Error::Dimension("covariance/stats count mismatch".into()));
        }
        if phi.len() != h1.h1.ncols() {
            return Err(Error::Dimension("phase vector does not match H1".into()));
        }
        let h1_phi = scale_columns_complex(&h1.h1, &phi.phi);
        let mut left = Vec::with_capacity(q.len());
        let mut right = Vec::with_capacity(q.len());
        for (k, (qk, s)) in q.iter().zip(stats).enumerate() {
            if qk.shape() != (s.antennas(), s.antennas()) {
                return Err(Error::Dimension(format!("Q of UT {k} has shape {:?}", qk.shape())));
            }
            if qk.norm() > 0.0 {
                let min = min_eigenvalue(qk);
                if min < -1e-8 {
                    return Err(Error::NotPsd(min));
                }
            }
            left.push(&h1_phi * &s.u2);
            right.push(s.v2.adjoint() * psd_sqrt(qk)?);
        }
        Ok(Self {
            left,
            right,
            m: h1.h1.nrows(),
            width: stats.iter().map(|s| s.antennas()).sum(),
            sigma2,
        })
    }

    fn draw(&self, stats: &[UtChannelStats], seed: u64, index: usize) -> Result<f64> {
        let mut rng = stream(seed, index as u64);
        let mut g = CMat::zeros(self.m, self.width);
        let mut col = 0;
        for ((s, l), r) in stats.iter().zip(&self.left).zip(&self.right) {
            let inner = sample_inner(&s.omega, &mut rng);
            let block = l * inner * r;
            g.columns_mut(col, block.ncols()).copy_from(&block);
            col += block.ncols();
        }
        let gram = identity(self.m) + (&g * g.adjoint()).unscale(self.sigma2);
        Ok(log2_det_hpd(&gram)?.max(0.0))
    }
}

/// Sample mean and standard error of
/// `log₂ det(I + (1/σ²) Σₖ H₁ Φ H₂ₖ Qₖ H₂ₖᴴ Φᴴ H₁ᴴ)` over `n_samples` draws.
pub fn ergodic_se(
    h1: &RisBsChannel,
    phi: &PhaseVector,
    q: &[CMat],
    stats: &[UtChannelStats],
    sigma2: f64,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_samples < 2 {
        return Err(Error::InvalidConfig("Monte Carlo needs at least 2 samples".into()));
    }
    let prep = Prepared::new(h1, phi, q, stats, sigma2)?;
    let values = (0..n_samples)
        .into_par_iter()
        .map(|d| prep.draw(stats, seed, d))
        .collect::<Result<Vec<f64>>>()?;
    Ok(summarize(&values))
}

/// Same estimate computed on the calling thread only.
pub fn ergodic_se_sequential(
    h1: &RisBsChannel,
    phi: &PhaseVector,
    q: &[CMat],
    stats: &[UtChannelStats],
    sigma2: f64,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_samples < 2 {
        return Err(Error::InvalidConfig("Monte Carlo needs at least 2 samples".into()));
    }
    let prep = Prepared::new(h1, phi, q, stats, sigma2)?;
    let values = (0..n_samples)
        .map(|d| prep.draw(stats, seed, d))
        .collect::<Result<Vec<f64>>>()?;
    Ok(summarize(&values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_h1, synthesize_stats, SystemConfig};
    use crate::de::{de_sum_rate, PowerAllocation};
    use crate::power::assemble_q;
    use nalgebra::DMatrix;

    fn instance() -> (SystemConfig, RisBsChannel, Vec<UtChannelStats>) {
        let cfg = SystemConfig::uniform(2, 2, 4, 6, 20.0);
        let h1 = sample_h1(&cfg, &mut stream(21, 0));
        let stats = synthesize_stats(&cfg, 0.4, -120.0, &mut stream(21, 1)).unwrap();
        (cfg, h1, stats)
    }

    #[test]
    fn zero_covariance_gives_zero() {
        let (cfg, h1, stats) = instance();
        let q: Vec<CMat> = stats.iter().map(|s| CMat::zeros(s.antennas(), s.antennas())).collect();
        let est = ergodic_se(&h1, &PhaseVector::ones(6), &q, &stats, cfg.sigma2, 50, 1).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn zero_coupling_gives_zero() {
        let (cfg, h1, mut stats) = instance();
        for s in &mut stats {
            s.omega = DMatrix::zeros(6, 2);
        }
        let alloc = PowerAllocation::uniform(&cfg.ut_antennas, &cfg.p_max);
        let q = assemble_q(&stats, &alloc);
        let est = ergodic_se(&h1, &PhaseVector::ones(6), &q, &stats, cfg.sigma2, 50, 1).unwrap();
        assert_eq!((est.mean, est.stderr), (0.0, 0.0));
    }

    #[test]
    fn parallel_matches_sequential_exactly() {
        let (cfg, h1, stats) = instance();
        let alloc = PowerAllocation::uniform(&cfg.ut_antennas, &cfg.p_max);
        let q = assemble_q(&stats, &alloc);
        let phi = PhaseVector::ones(6);
        let a = ergodic_se(&h1, &phi, &q, &stats, cfg.sigma2, 300, 9).unwrap();
        let b = ergodic_se_sequential(&h1, &phi, &q, &stats, cfg.sigma2, 300, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.mean > 0.0);
    }

    #[test]
    fn rejects_indefinite_covariance() {
        let (cfg, h1, stats) = instance();
        let mut q: Vec<CMat> = stats.iter().map(|s| CMat::identity(s.antennas(), s.antennas())).collect();
        q[0][(1, 1)] = num_complex::Complex64::new(-1.0, 0.0);
        let err = ergodic_se(&h1, &PhaseVector::ones(6), &q, &stats, cfg.sigma2, 10, 1).unwrap_err();
        assert!(matches!(err, Error::NotPsd(_)));
    }

    #[test]
    fn stderr_shrinks_with_more_samples() {
        let (cfg, h1, stats) = instance();
        let alloc = PowerAllocation::uniform(&cfg.ut_antennas, &cfg.p_max);
        let q = assemble_q(&stats, &alloc);
        let phi = PhaseVector::ones(6);
        let mut ratios = Vec::new();
        for seed in 0..4 {
            let small = ergodic_se(&h1, &phi, &q, &stats, cfg.sigma2, 1000, seed).unwrap();
            let big = ergodic_se(&h1, &phi, &q, &stats, cfg.sigma2, 2000, seed + 100).unwrap();
            ratios.push(big.stderr / small.stderr);
        }
        let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let target = std::f64::consts::FRAC_1_SQRT_2;
        assert!((mean_ratio - target).abs() <= 0.2 * target, "ratio {mean_ratio}");
    }

    #[test]
    fn de_tracks_monte_carlo_on_small_instance() {
        let (cfg, h1, stats) = instance();
        let alloc = PowerAllocation::uniform(&cfg.ut_antennas, &cfg.p_max);
        let q = assemble_q(&stats, &alloc);
        let phi = PhaseVector::ones(6);
        let mc = ergodic_se(&h1, &phi, &q, &stats, cfg.sigma2, 2000, 3).unwrap();
        let de = de_sum_rate(&h1, &phi, &stats, &alloc, cfg.sigma2).unwrap();
        assert!((de - mc.mean).abs() / mc.mean < 0.05, "de {de} mc {}", mc.mean);
    }
}
