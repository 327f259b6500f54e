//! System configuration and the statistical channel model.
//!
//! The UT-to-RIS channel of user `k` is `H₂ₖ = U₂ₖ (G ⊙ √Ωₖ) V₂ₖᴴ` with `G`
//! i.i.d. standard complex Gaussian. Only `(U₂ₖ, V₂ₖ, Ωₖ)` are visible to the
//! optimizers; realizations are drawn for Monte Carlo checks only. The
//! RIS-to-BS channel `H₁` is known instantaneously and has unit-variance
//! entries; all path loss lives in `Ω`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, unitarity_error, CMat};

/// Dimensions, powers (watts) and efficiencies of the uplink.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Antennas per UT; its length is the number of UTs `K`.
    pub ut_antennas: Vec<usize>,
    pub bs_antennas: usize,
    pub ris_elements: usize,
    /// Hz.
    pub bandwidth: f64,
    /// Noise power at the BS, watts.
    pub sigma2: f64,
    /// Amplifier inefficiency `ξₖ = 1/ρₖ`.
    pub xi: Vec<f64>,
    /// Static circuit power per UT, watts.
    pub p_circuit: Vec<f64>,
    pub p_bs: f64,
    /// Static power per RIS element, watts.
    pub p_ris_element: f64,
    /// Transmit power budget per UT, watts.
    pub p_max: Vec<f64>,
}

/// `10^((dBm − 30)/10)`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl SystemConfig {
    /// Homogeneous configuration with the numerical-section defaults for the
    /// power model: W = 10 MHz, σ² = −96 dBm, ξ = 1/0.3, P_c = 20 dBm,
    /// P_BS = 39 dBm, P_s = 10 dBm.
    pub fn uniform(
        users: usize,
        ut_antennas: usize,
        bs_antennas: usize,
        ris_elements: usize,
        p_max_dbm: f64,
    ) -> Self {
        Self {
            ut_antennas: vec![ut_antennas; users],
            bs_antennas,
            ris_elements,
            bandwidth: 10e6,
            sigma2: dbm_to_watts(-96.0),
            xi: vec![1.0 / 0.3; users],
            p_circuit: vec![dbm_to_watts(20.0); users],
            p_bs: dbm_to_watts(39.0),
            p_ris_element: dbm_to_watts(10.0),
            p_max: vec![dbm_to_watts(p_max_dbm); users],
        }
    }

    pub fn users(&self) -> usize {
        self.ut_antennas.len()
    }

    /// Same configuration with every UT budget set to `p_max` watts.
    pub fn with_p_max(&self, p_max: f64) -> Self {
        Self {
            p_max: vec![p_max; self.users()],
            ..self.clone()
        }
    }

    /// Power consumed regardless of the transmit covariances.
    pub fn static_power(&self) -> f64 {
        self.p_circuit.iter().sum::<f64>()
            + self.p_bs
            + self.ris_elements as f64 * self.p_ris_element
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.users();
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if k == 0 {
            return bad("at least one UT is required".into());
        }
        if self.ut_antennas.iter().any(|&n| n == 0) || self.bs_antennas == 0 || self.ris_elements == 0
        {
            return bad("antenna and element counts must be >= 1".into());
        }
        for (name, len) in [
            ("xi", self.xi.len()),
            ("p_circuit", self.p_circuit.len()),
            ("p_max", self.p_max.len()),
        ] {
            if len != k {
                return bad(format!("{name} has length {len}, expected {k}"));
            }
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return bad(format!("sigma2 must be positive, got {}", self.sigma2));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return bad(format!("bandwidth must be positive, got {}", self.bandwidth));
        }
        let powers = self
            .xi
            .iter()
            .chain(&self.p_circuit)
            .chain(&self.p_max)
            .chain([&self.p_bs, &self.p_ris_element]);
        for &p in powers {
            if !(p >= 0.0 && p.is_finite()) {
                return bad(format!("powers and efficiencies must be finite and >= 0, got {p}"));
            }
        }
        Ok(())
    }
}

/// Statistical CSI of one UT-to-RIS link.
#[derive(Debug, Clone, PartialEq)]
pub struct UtChannelStats {
    /// Receive eigenbasis at the RIS, `N_R × N_R` unitary.
    pub u2: CMat,
    /// Transmit eigenbasis at the UT, `Nₖ × Nₖ` unitary.
    pub v2: CMat,
    /// Eigenmode coupling matrix, `N_R × Nₖ`, entries ≥ 0 (watts gain).
    pub omega: DMatrix<f64>,
}

impl UtChannelStats {
    pub fn ris_elements(&self) -> usize {
        self.u2.nrows()
    }

    pub fn antennas(&self) -> usize {
        self.v2.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let (nr, nk) = (self.u2.nrows(), self.v2.nrows());
        if !self.u2.is_square() || !self.v2.is_square() || self.omega.shape() != (nr, nk) {
            return Err(Error::Dimension(format!(
                "stats shapes U2 {:?}, V2 {:?}, Omega {:?}",
                self.u2.shape(),
                self.v2.shape(),
                self.omega.shape()
            )));
        }
        if unitarity_error(&self.u2) > 1e-10 || unitarity_error(&self.v2) > 1e-10 {
            return Err(Error::InvalidConfig("eigenbases must be unitary".into()));
        }
        if self.omega.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidConfig("Omega entries must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Instantaneous RIS-to-BS channel, `M × N_R`.
#[derive(Debug, Clone, PartialEq)]
pub struct RisBsChannel {
    pub h1: CMat,
}

/// One joint draw of all UT-to-RIS channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h2: Vec<CMat>,
}

/// Checks that `h1` and `stats` agree with `config`.
pub fn check_dimensions(
    config: &SystemConfig,
    h1: &RisBsChannel,
    stats: &[UtChannelStats],
) -> Result<()> {
    if h1.h1.shape() != (config.bs_antennas, config.ris_elements) {
        return Err(Error::Dimension(format!(
            "H1 is {:?}, expected ({}, {})",
            h1.h1.shape(),
            config.bs_antennas,
            config.ris_elements
        )));
    }
    if stats.len() != config.users() {
        return Err(Error::Dimension(format!(
            "{} stats for {} users",
            stats.len(),
            config.users()
        )));
    }
    for (k, s) in stats.iter().enumerate() {
        if s.ris_elements() != config.ris_elements || s.antennas() != config.ut_antennas[k] {
            return Err(Error::Dimension(format!("stats of UT {k} do not match config")));
        }
    }
    Ok(())
}

/// Circularly-symmetric complex Gaussian with unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    // Column-major fill order keeps draws reproducible across nalgebra versions.
    let mut m = CMat::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_gaussian(rng);
        }
    }
    m
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases
/// of `diag(R)` moved into `Q`.
pub fn make_random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let z = complex_gaussian_matrix(dim, dim, rng);
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let n = d.norm();
        let phase = if n > 0.0 { d / n } else { Complex64::new(1.0, 0.0) };
        q.column_mut(j).iter_mut().for_each(|x| *x *= phase);
    }
    q
}

/// Eigenvalues (descending) of the exponential correlation matrix
/// `[R]ᵢⱼ = corr^|i−j|`.
fn exponential_profile(dim: usize, corr: f64) -> Vec<f64> {
    let r = CMat::from_fn(dim, dim, |i, j| {
        Complex64::new(corr.powi((i as i32 - j as i32).abs()), 0.0)
    });
    let (values, _) = hermitian_eigen(&r);
    values.iter().rev().map(|v| v.max(0.0)).collect()
}

/// Deterministic part of the coupling profile: outer product of the
/// receive- and transmit-side correlation spectra. Flat when `corr = 0`.
pub fn coupling_profile(ris_elements: usize, antennas: usize, corr: f64) -> DMatrix<f64> {
    let rx = exponential_profile(ris_elements, corr);
    let tx = exponential_profile(antennas, corr);
    DMatrix::from_fn(ris_elements, antennas, |n, m| rx[n] * tx[m])
}

/// Synthetic statistical CSI for every UT.
///
/// `Ωₖ` is the coupling profile times U[0.5, 1.5] jitter, scaled so its
/// entries sum to `N_R · Nₖ · 10^(pathloss_db/10)`.
pub fn synthesize_stats<R: Rng + ?Sized>(
    config: &SystemConfig,
    corr: f64,
    pathloss_db: f64,
    rng: &mut R,
) -> Result<Vec<UtChannelStats>> {
    if !(0.0..1.0).contains(&corr) {
        return Err(Error::InvalidConfig(format!("corr must lie in [0, 1), got {corr}")));
    }
    let nr = config.ris_elements;
    let gain = db_to_linear(pathloss_db);
    let mut out = Vec::with_capacity(config.users());
    for &nk in &config.ut_antennas {
        let u2 = make_random_unitary(nr, rng);
        let v2 = make_random_unitary(nk, rng);
        let profile = coupling_profile(nr, nk, corr);
        let mut omega = DMatrix::from_fn(nr, nk, |n, m| profile[(n, m)]);
        for j in 0..nk {
            for i in 0..nr {
                omega[(i, j)] *= rng.random_range(0.5..1.5);
            }
        }
        let total: f64 = omega.iter().sum();
        let target = (nr * nk) as f64 * gain;
        if total > 0.0 {
            omega *= target / total;
        }
        out.push(UtChannelStats { u2, v2, omega });
    }
    Ok(out)
}

/// Inner matrix `G ⊙ √Ω` with `G` i.i.d. standard complex Gaussian.
pub fn sample_inner<R: Rng + ?Sized>(omega: &DMatrix<f64>, rng: &mut R) -> CMat {
    let (rows, cols) = omega.shape();
    let mut g = complex_gaussian_matrix(rows, cols, rng);
    for j in 0..cols {
        for i in 0..rows {
            g[(i, j)] *= omega[(i, j)].sqrt();
        }
    }
    g
}

/// One draw of `H₂ = U₂ (G ⊙ √Ω) V₂ᴴ`.
pub fn sample_ut_channel<R: Rng + ?Sized>(stats: &UtChannelStats, rng: &mut R) -> CMat {
    let inner = sample_inner(&stats.omega, rng);
    &stats.u2 * inner * stats.v2.adjoint()
}

/// Joint draw of all UT channels, in UT order.
pub fn sample_realization<R: Rng + ?Sized>(
    stats: &[UtChannelStats],
    rng: &mut R,
) -> ChannelRealization {
    ChannelRealization {
        h2: stats.iter().map(|s| sample_ut_channel(s, rng)).collect(),
    }
}

/// `M × N_R` RIS-to-BS channel with unit-variance entries.
pub fn sample_h1<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> RisBsChannel {
    RisBsChannel {
        h1: complex_gaussian_matrix(config.bs_antennas, config.ris_elements, rng),
    }
}
