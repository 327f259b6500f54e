//! Flat `key = value` experiment files.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. Powers are
//! given in dBm and bandwidth in MHz; [`ExperimentSpec::system_config`]
//! converts to SI units.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use riseff_core::channel::dbm_to_watts;
use riseff_core::rng::derive_seed;
use riseff_core::{Mode, SystemConfig};
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Gee,
    Se,
    FixedPhiBaseline,
}

impl RunMode {
    pub fn name(self) -> &'static str {
        match self {
            RunMode::Gee => "gee",
            RunMode::Se => "se",
            RunMode::FixedPhiBaseline => "fixed_phi_baseline",
        }
    }

    pub fn optimizer_mode(self) -> Mode {
        match self {
            RunMode::Se => Mode::Se,
            RunMode::Gee | RunMode::FixedPhiBaseline => Mode::Gee,
        }
    }
}

impl FromStr for RunMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gee" => Ok(RunMode::Gee),
            "se" => Ok(RunMode::Se),
            "fixed_phi_baseline" => Ok(RunMode::FixedPhiBaseline),
            other => Err(format!("unknown mode `{other}` (expected gee, se or fixed_phi_baseline)")),
        }
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub scenario: String,
    pub k_users: usize,
    pub n_ut_antennas: usize,
    pub m_bs_antennas: usize,
    pub n_ris: usize,
    pub bandwidth_mhz: f64,
    pub sigma2_dbm: f64,
    /// Power-amplifier efficiency; `ξ = 1 / pa_efficiency`.
    pub pa_efficiency: f64,
    pub p_c_dbm: f64,
    pub p_bs_dbm: f64,
    pub p_s_dbm: f64,
    /// Average UT-to-RIS channel gain; `-inf` switches the links off.
    #[serde(serialize_with = "finite_or_string")]
    pub pathloss_db: f64,
    pub corr: f64,
    pub sweep_dbm: Vec<f64>,
    pub modes: Vec<RunMode>,
    /// 0 disables the Monte Carlo cross-check.
    pub mc_samples: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub tol_outer: f64,
    pub max_outer: usize,
    pub phase_refresh_cycles: usize,
    /// Write measured run times; off by default so outputs are reproducible
    /// byte for byte.
    pub record_timing: bool,
}

const REQUIRED: [&str; 6] = [
    "scenario",
    "k_users",
    "n_ut_antennas",
    "m_bs_antennas",
    "n_ris",
    "sweep_dbm",
];

const OPTIONAL: [&str; 17] = [
    "bandwidth_mhz",
    "sigma2_dbm",
    "pa_efficiency",
    "p_c_dbm",
    "p_bs_dbm",
    "p_s_dbm",
    "pathloss_db",
    "corr",
    "modes",
    "mc_samples",
    "master_seed",
    "output_dir",
    "tol_outer",
    "max_outer",
    "phase_refresh_cycles",
    "record_timing",
    "description",
];

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            scenario: String::new(),
            k_users: 0,
            n_ut_antennas: 0,
            m_bs_antennas: 0,
            n_ris: 0,
            bandwidth_mhz: 10.0,
            sigma2_dbm: -96.0,
            pa_efficiency: 0.3,
            p_c_dbm: 20.0,
            p_bs_dbm: 39.0,
            p_s_dbm: 10.0,
            pathloss_db: -120.0,
            corr: 0.5,
            sweep_dbm: Vec::new(),
            modes: vec![RunMode::Gee, RunMode::Se, RunMode::FixedPhiBaseline],
            mc_samples: 0,
            master_seed: 1,
            output_dir: PathBuf::from("results"),
            tol_outer: 1e-4,
            max_outer: 100,
            phase_refresh_cycles: 3,
            record_timing: false,
        }
    }
}

/// JSON has no infinities; write them as strings.
fn finite_or_string<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&v.to_string())
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    raw.parse::<T>()
        .map_err(|e| CliError::config(line, format!("cannot parse `{key}` from `{raw}`: {e}")))
}

fn parse_list<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<Vec<T>, CliError>
where
    T::Err: fmt::Display,
{
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| parse_value(line, key, item))
        .collect()
}

/// Parses the text of an experiment file.
pub fn parse_spec_str(text: &str) -> Result<ExperimentSpec, CliError> {
    let mut spec = ExperimentSpec::default();
    let mut seen: Vec<(&str, usize)> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| CliError::config(line, format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let Some(known) = REQUIRED.iter().chain(OPTIONAL.iter()).find(|k| **k == key) else {
            return Err(CliError::config(line, format!("unknown key `{key}`")));
        };
        if let Some((_, first)) = seen.iter().find(|(k, _)| k == known) {
            return Err(CliError::config(line, format!("duplicate key `{key}` (first set on line {first})")));
        }
        seen.push((known, line));

        match key {
            "scenario" => {
                if value.is_empty() || value.contains(',') {
                    return Err(CliError::config(line, "scenario must be non-empty and contain no commas"));
                }
                spec.scenario = value.to_string();
            }
            "description" => {}
            "k_users" => spec.k_users = parse_value(line, key, value)?,
            "n_ut_antennas" => spec.n_ut_antennas = parse_value(line, key, value)?,
            "m_bs_antennas" => spec.m_bs_antennas = parse_value(line, key, value)?,
            "n_ris" => spec.n_ris = parse_value(line, key, value)?,
            "bandwidth_mhz" => spec.bandwidth_mhz = parse_value(line, key, value)?,
            "sigma2_dbm" => spec.sigma2_dbm = parse_value(line, key, value)?,
            "pa_efficiency" => spec.pa_efficiency = parse_value(line, key, value)?,
            "p_c_dbm" => spec.p_c_dbm = parse_value(line, key, value)?,
            "p_bs_dbm" => spec.p_bs_dbm = parse_value(line, key, value)?,
            "p_s_dbm" => spec.p_s_dbm = parse_value(line, key, value)?,
            "pathloss_db" => spec.pathloss_db = parse_value(line, key, value)?,
            "corr" => spec.corr = parse_value(line, key, value)?,
            "sweep_dbm" => spec.sweep_dbm = parse_list(line, key, value)?,
            "modes" => spec.modes = parse_list(line, key, value)?,
            "mc_samples" => spec.mc_samples = parse_value(line, key, value)?,
            "master_seed" => spec.master_seed = parse_value(line, key, value)?,
            "output_dir" => spec.output_dir = PathBuf::from(value),
            "tol_outer" => spec.tol_outer = parse_value(line, key, value)?,
            "max_outer" => spec.max_outer = parse_value(line, key, value)?,
            "phase_refresh_cycles" => spec.phase_refresh_cycles = parse_value(line, key, value)?,
            "record_timing" => spec.record_timing = parse_value(line, key, value)?,
            _ => unreachable!("key list and match arms disagree"),
        }
    }

    for key in REQUIRED {
        if !seen.iter().any(|(k, _)| *k == key) {
            return Err(CliError::Config(format!("missing required key `{key}`")));
        }
    }
    let line_of = |key: &str| seen.iter().find(|(k, _)| *k == key).map(|(_, l)| *l);
    spec.check(line_of)?;
    Ok(spec)
}

/// Reads and parses an experiment file.
pub fn parse_spec(path: &Path) -> Result<ExperimentSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_spec_str(&text)
}

impl ExperimentSpec {
    fn check(&self, line_of: impl Fn(&str) -> Option<usize>) -> Result<(), CliError> {
        let fail = |key: &str, msg: String| match line_of(key) {
            Some(line) => Err(CliError::config(line, msg)),
            None => Err(CliError::Config(msg)),
        };
        for (key, v) in [
            ("k_users", self.k_users),
            ("n_ut_antennas", self.n_ut_antennas),
            ("m_bs_antennas", self.m_bs_antennas),
            ("n_ris", self.n_ris),
        ] {
            if v == 0 {
                return fail(key, format!("`{key}` must be at least 1"));
            }
        }
        if self.sweep_dbm.is_empty() {
            return fail("sweep_dbm", "`sweep_dbm` must list at least one value".into());
        }
        if self.sweep_dbm.iter().any(|p| !p.is_finite()) {
            return fail("sweep_dbm", "`sweep_dbm` values must be finite".into());
        }
        if self.sweep_dbm.windows(2).any(|w| w[1] <= w[0]) {
            return fail("sweep_dbm", "`sweep_dbm` must be strictly increasing".into());
        }
        if self.modes.is_empty() {
            return fail("modes", "`modes` must name at least one mode".into());
        }
        for (i, m) in self.modes.iter().enumerate() {
            if self.modes[..i].contains(m) {
                return fail("modes", format!("mode `{m}` listed twice"));
            }
        }
        if self.mc_samples == 1 {
            return fail("mc_samples", "`mc_samples` must be 0 (disabled) or at least 2".into());
        }
        if !(self.bandwidth_mhz > 0.0 && self.bandwidth_mhz.is_finite()) {
            return fail("bandwidth_mhz", "`bandwidth_mhz` must be positive".into());
        }
        if !(self.pa_efficiency > 0.0 && self.pa_efficiency <= 1.0) {
            return fail("pa_efficiency", "`pa_efficiency` must lie in (0, 1]".into());
        }
        for (key, v) in [
            ("sigma2_dbm", self.sigma2_dbm),
            ("p_c_dbm", self.p_c_dbm),
            ("p_bs_dbm", self.p_bs_dbm),
            ("p_s_dbm", self.p_s_dbm),
        ] {
            if !v.is_finite() {
                return fail(key, format!("`{key}` must be finite"));
            }
        }
        if self.pathloss_db.is_nan() || self.pathloss_db == f64::INFINITY {
            return fail("pathloss_db", "`pathloss_db` must be finite or -inf".into());
        }
        if !(0.0..1.0).contains(&self.corr) {
            return fail("corr", "`corr` must lie in [0, 1)".into());
        }
        if !(self.tol_outer > 0.0 && self.tol_outer.is_finite()) {
            return fail("tol_outer", "`tol_outer` must be positive".into());
        }
        if self.max_outer == 0 {
            return fail("max_outer", "`max_outer` must be at least 1".into());
        }
        Ok(())
    }

    /// Physical configuration at one sweep point, in SI units.
    pub fn system_config(&self, p_max_dbm: f64) -> SystemConfig {
        let k = self.k_users;
        SystemConfig {
            ut_antennas: vec![self.n_ut_antennas; k],
            bs_antennas: self.m_bs_antennas,
            ris_elements: self.n_ris,
            bandwidth: self.bandwidth_mhz * 1e6,
            sigma2: dbm_to_watts(self.sigma2_dbm),
            xi: vec![1.0 / self.pa_efficiency; k],
            p_circuit: vec![dbm_to_watts(self.p_c_dbm); k],
            p_bs: dbm_to_watts(self.p_bs_dbm),
            p_ris_element: dbm_to_watts(self.p_s_dbm),
            p_max: vec![dbm_to_watts(p_max_dbm); k],
        }
    }

    pub fn seeds(&self) -> Seeds {
        Seeds {
            master: self.master_seed,
            h1: derive_seed(self.master_seed, 0),
            stats: derive_seed(self.master_seed, 1),
            monte_carlo: derive_seed(self.master_seed, 2),
        }
    }

    /// Fully resolved configuration, echoed to `spec_resolved.json`.
    pub fn resolved(&self) -> Resolved<'_> {
        let base = self.system_config(self.sweep_dbm[0]);
        Resolved {
            spec: self,
            bandwidth_hz: base.bandwidth,
            sigma2_w: base.sigma2,
            xi: base.xi[0],
            p_c_w: base.p_circuit[0],
            p_bs_w: base.p_bs,
            p_s_w: base.p_ris_element,
            static_power_w: base.static_power(),
            sweep_w: self.sweep_dbm.iter().map(|&p| dbm_to_watts(p)).collect(),
            seeds: self.seeds(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Seeds {
    pub master: u64,
    pub h1: u64,
    pub stats: u64,
    pub monte_carlo: u64,
}

#[derive(Debug, Serialize)]
pub struct Resolved<'a> {
    pub spec: &'a ExperimentSpec,
    pub bandwidth_hz: f64,
    pub sigma2_w: f64,
    pub xi: f64,
    pub p_c_w: f64,
    pub p_bs_w: f64,
    pub p_s_w: f64,
    pub static_power_w: f64,
    pub sweep_w: Vec<f64>,
    pub seeds: Seeds,
}
