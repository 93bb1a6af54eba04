//! `key = value` configuration files.
//!
//! One entry per line, `#` starts a comment, values may be double-quoted.
//! Frequencies are f/2π in MHz, times in µs:
//!
//! ```text
//! j_mhz = 10
//! kappa_mhz = 25          # κ_1 = κ_2
//! g_ef_mhz = 30
//! tau_p_us = 0.5
//! sweep.axis1 = "kappa1_over_j: 0.5, 5, 30"
//! sweep.axis2 = "kappa2_over_j: 0.5, 5, 30"
//! sweep.outputs = "C, upsilon"
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use qswitch_core::units::mhz;
use qswitch_core::{DeviceParams, Pulse, SimulationOptions, SpectraMode, SpectralGrid};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::sweep::{Axis, Optimize, Output, SweepSpec, MAX_GRID_POINTS};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {msg}")]
    Value { line: usize, key: String, msg: String },
    #[error("missing required parameter `{0}`")]
    Missing(&'static str),
    #[error("conflicting parameters: {0}")]
    Conflict(String),
    #[error("invalid sweep: {0}")]
    Sweep(String),
    #[error("invalid parameters: {0}")]
    Invalid(String),
}

/// Scalar parameters that can be set in a config file or swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParamKey {
    OmegaR,
    OmegaGe,
    GEf,
    GGe,
    J,
    Kappa1,
    Kappa2,
    Kappa,
    Kappa1OverJ,
    Kappa2OverJ,
    KappaOverJ,
    NRes,
    GammaRes,
    TauCoh,
    Omega0,
    TauP,
}

impl ParamKey {
    pub const ALL: [ParamKey; 16] = [
        ParamKey::OmegaR,
        ParamKey::OmegaGe,
        ParamKey::GEf,
        ParamKey::GGe,
        ParamKey::J,
        ParamKey::Kappa1,
        ParamKey::Kappa2,
        ParamKey::Kappa,
        ParamKey::Kappa1OverJ,
        ParamKey::Kappa2OverJ,
        ParamKey::KappaOverJ,
        ParamKey::NRes,
        ParamKey::GammaRes,
        ParamKey::TauCoh,
        ParamKey::Omega0,
        ParamKey::TauP,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamKey::OmegaR => "omega_r_mhz",
            ParamKey::OmegaGe => "omega_ge_mhz",
            ParamKey::GEf => "g_ef_mhz",
            ParamKey::GGe => "g_ge_mhz",
            ParamKey::J => "j_mhz",
            ParamKey::Kappa1 => "kappa1_mhz",
            ParamKey::Kappa2 => "kappa2_mhz",
            ParamKey::Kappa => "kappa_mhz",
            ParamKey::Kappa1OverJ => "kappa1_over_j",
            ParamKey::Kappa2OverJ => "kappa2_over_j",
            ParamKey::KappaOverJ => "kappa_over_j",
            ParamKey::NRes => "n_res",
            ParamKey::GammaRes => "gamma_res_mhz",
            ParamKey::TauCoh => "tau_coh_us",
            ParamKey::Omega0 => "omega0_mhz",
            ParamKey::TauP => "tau_p_us",
        }
    }

    fn touches_kappa(self) -> (bool, bool) {
        match self {
            ParamKey::Kappa | ParamKey::KappaOverJ => (true, true),
            ParamKey::Kappa1 | ParamKey::Kappa1OverJ => (true, false),
            ParamKey::Kappa2 | ParamKey::Kappa2OverJ => (false, true),
            _ => (false, false),
        }
    }
}

impl fmt::Display for ParamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParamKey {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        ParamKey::ALL.into_iter().find(|k| k.name() == s).ok_or(())
    }
}

/// A terminal coupling, either absolute or relative to J.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Rate {
    Mhz(f64),
    PerJ(f64),
}

impl Rate {
    fn resolve(self, j_mhz: f64) -> f64 {
        match self {
            Rate::Mhz(v) => v,
            Rate::PerJ(r) => r * j_mhz,
        }
    }
}

/// One parameter point in config units, possibly incomplete.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSpec {
    omega_r_mhz: f64,
    omega_ge_mhz: f64,
    g_ef_mhz: Option<f64>,
    g_ge_mhz: Option<f64>,
    j_mhz: Option<f64>,
    kappa_1: Option<Rate>,
    kappa_2: Option<Rate>,
    n_res: f64,
    gamma_res_mhz: f64,
    tau_coh_us: f64,
    omega0_mhz: Option<f64>,
    tau_p_us: Option<f64>,
}

impl Default for PointSpec {
    fn default() -> Self {
        Self {
            omega_r_mhz: 7000.0,
            omega_ge_mhz: 7360.0,
            g_ef_mhz: None,
            g_ge_mhz: None,
            j_mhz: None,
            kappa_1: None,
            kappa_2: None,
            n_res: 7.0,
            gamma_res_mhz: 0.0,
            tau_coh_us: 100.0,
            omega0_mhz: None,
            tau_p_us: None,
        }
    }
}

impl PointSpec {
    /// Complete point with the common defaults and κ_1 = κ_2 = `kappa_mhz`.
    pub fn new(j_mhz: f64, kappa_mhz: f64, g_ef_mhz: f64, tau_p_us: f64) -> Self {
        Self {
            g_ef_mhz: Some(g_ef_mhz),
            j_mhz: Some(j_mhz),
            kappa_1: Some(Rate::Mhz(kappa_mhz)),
            kappa_2: Some(Rate::Mhz(kappa_mhz)),
            tau_p_us: Some(tau_p_us),
            ..Self::default()
        }
    }

    pub fn with(mut self, key: ParamKey, value: f64) -> Self {
        self.set(key, value);
        self
    }

    pub fn set(&mut self, key: ParamKey, v: f64) {
        match key {
            ParamKey::OmegaR => self.omega_r_mhz = v,
            ParamKey::OmegaGe => self.omega_ge_mhz = v,
            ParamKey::GEf => self.g_ef_mhz = Some(v),
            ParamKey::GGe => self.g_ge_mhz = Some(v),
            ParamKey::J => self.j_mhz = Some(v),
            ParamKey::Kappa1 => self.kappa_1 = Some(Rate::Mhz(v)),
            ParamKey::Kappa2 => self.kappa_2 = Some(Rate::Mhz(v)),
            ParamKey::Kappa => {
                self.kappa_1 = Some(Rate::Mhz(v));
                self.kappa_2 = Some(Rate::Mhz(v));
            }
            ParamKey::Kappa1OverJ => self.kappa_1 = Some(Rate::PerJ(v)),
            ParamKey::Kappa2OverJ => self.kappa_2 = Some(Rate::PerJ(v)),
            ParamKey::KappaOverJ => {
                self.kappa_1 = Some(Rate::PerJ(v));
                self.kappa_2 = Some(Rate::PerJ(v));
            }
            ParamKey::NRes => self.n_res = v,
            ParamKey::GammaRes => self.gamma_res_mhz = v,
            ParamKey::TauCoh => self.tau_coh_us = v,
            ParamKey::Omega0 => self.omega0_mhz = Some(v),
            ParamKey::TauP => self.tau_p_us = Some(v),
        }
    }

    pub fn j_mhz(&self) -> Option<f64> {
        self.j_mhz
    }

    pub fn tau_p_us(&self) -> Option<f64> {
        self.tau_p_us
    }

    /// κ_1/2π, κ_2/2π in MHz once J is known.
    pub fn kappas_mhz(&self) -> Option<(f64, f64)> {
        let j = self.j_mhz?;
        Some((self.kappa_1?.resolve(j), self.kappa_2?.resolve(j)))
    }

    pub fn device(&self) -> Result<DeviceParams, ConfigError> {
        let g_ef = self.g_ef_mhz.ok_or(ConfigError::Missing("g_ef_mhz"))?;
        let j = self.j_mhz.ok_or(ConfigError::Missing("j_mhz"))?;
        let k1 = self.kappa_1.ok_or(ConfigError::Missing("kappa1_mhz"))?.resolve(j);
        let k2 = self.kappa_2.ok_or(ConfigError::Missing("kappa2_mhz"))?.resolve(j);
        let n = self.n_res;
        if !(n.is_finite() && n >= 0.0 && n.fract() == 0.0) {
            return Err(ConfigError::Invalid(format!("n_res must be a whole number, got {n}")));
        }
        Ok(DeviceParams {
            omega_r: mhz(self.omega_r_mhz),
            omega_ge: mhz(self.omega_ge_mhz),
            g_ef: mhz(g_ef),
            g_ge: self.g_ge_mhz.map(mhz),
            hopping: mhz(j),
            kappa_1: mhz(k1),
            kappa_2: mhz(k2),
            n_res: n as usize,
            gamma_res: mhz(self.gamma_res_mhz),
            tau_coh: self.tau_coh_us,
        })
    }

    /// Pulse centred at `omega0_mhz`, or at ω_r when unset.
    pub fn pulse(&self) -> Result<Pulse, ConfigError> {
        let tau_p = self.tau_p_us.ok_or(ConfigError::Missing("tau_p_us"))?;
        let omega_0 = mhz(self.omega0_mhz.unwrap_or(self.omega_r_mhz));
        Pulse::new(omega_0, tau_p).map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

/// Parsed configuration file.
#[derive(Debug, Clone)]
pub struct Config {
    pub point: PointSpec,
    pub options: SimulationOptions,
    /// `spectra` given explicitly; otherwise chosen from the requested outputs.
    pub spectra: Option<SpectraMode>,
    pub axes: Vec<Axis>,
    pub outputs: Vec<Output>,
    pub optimize: Option<Optimize>,
    /// SHA-256 of the normalised entries (comments and layout do not count).
    pub hash: String,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        text.parse()
    }

    /// The single point described by the fixed parameters.
    pub fn device(&self) -> Result<DeviceParams, ConfigError> {
        self.point.device()
    }

    pub fn pulse(&self) -> Result<Pulse, ConfigError> {
        self.point.pulse()
    }

    /// Options for a single `run`: full spectra unless overridden.
    pub fn run_options(&self) -> SimulationOptions {
        SimulationOptions { spectra: self.spectra.unwrap_or(SpectraMode::Full), ..self.options }
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec, ConfigError> {
        let spec = SweepSpec {
            base: self.point,
            axes: self.axes.clone(),
            outputs: self.outputs.clone(),
            optimize: self.optimize,
            options: SimulationOptions {
                spectra: self.spectra.unwrap_or_else(|| Output::spectra_needed(&self.outputs)),
                ..self.options
            },
        };
        spec.validate().map_err(ConfigError::Sweep)?;
        // The first grid point must be complete (κ comes from the optimizer).
        let mut first = spec.point_at(0);
        if let Some(range) = &spec.optimize {
            first.set(ParamKey::KappaOverJ, range.min_over_j);
        }
        first.device()?;
        first.pulse()?;
        Ok(spec)
    }
}

struct Entry {
    line: usize,
    value: String,
}

fn parse_f64(key: &str, e: &Entry) -> Result<f64, ConfigError> {
    e.value.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| ConfigError::Value {
        line: e.line,
        key: key.into(),
        msg: format!("expected a finite number, got `{}`", e.value),
    })
}

fn parse_bool(key: &str, e: &Entry) -> Result<bool, ConfigError> {
    match e.value.as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        v => Err(ConfigError::Value { line: e.line, key: key.into(), msg: format!("expected true/false, got `{v}`") }),
    }
}

fn value_error(key: &str, e: &Entry, msg: impl Into<String>) -> ConfigError {
    ConfigError::Value { line: e.line, key: key.into(), msg: msg.into() }
}

fn strip_quotes(s: &str) -> &str {
    s.strip_prefix('"').and_then(|v| v.strip_suffix('"')).unwrap_or(s)
}

impl FromStr for Config {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
        let mut order = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = strip_comment(raw).trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                msg: format!("expected `key = value`, got `{body}`"),
            })?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(ConfigError::Syntax { line, msg: "empty key".into() });
            }
            let value = strip_quotes(value.trim()).trim().to_string();
            if entries.contains_key(&key) {
                return Err(ConfigError::Duplicate { line, key });
            }
            order.push(key.clone());
            entries.insert(key, Entry { line, value });
        }

        let mut hasher = Sha256::new();
        for (k, e) in &entries {
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(e.value.as_bytes());
            hasher.update(b"\n");
        }
        let hash = format!("{:x}", hasher.finalize());

        let mut point = PointSpec::default();
        let mut options = SimulationOptions { convergence_guard: true, ..SimulationOptions::default() };
        let mut grid = SpectralGrid::default();
        let mut spectra = None;
        let mut axes: Vec<(usize, Axis)> = Vec::new();
        let mut outputs = vec![Output::Contrast, Output::Upsilon, Output::TransmissionG, Output::TransmissionE];
        let mut optimize = false;
        let mut optimize_range = Optimize::default();
        let mut kappa_seen = (false, false);

        // File order matters only for the κ conflict check; values are applied in key order.
        for key in &order {
            let e = &entries[key];
            if let Ok(pk) = key.parse::<ParamKey>() {
                let v = parse_f64(key, e)?;
                let (a, b) = pk.touches_kappa();
                if (a && kappa_seen.0) || (b && kappa_seen.1) {
                    return Err(ConfigError::Conflict(format!(
                        "line {}: `{key}` sets a terminal coupling that is already given",
                        e.line
                    )));
                }
                kappa_seen = (kappa_seen.0 || a, kappa_seen.1 || b);
                point.set(pk, v);
                if pk == ParamKey::GGe {
                    log::info!("g_ge overridden: {v} MHz instead of g_ef/sqrt(2)");
                }
                continue;
            }
            match key.as_str() {
                "grid_halfwidth" => grid.halfwidth = parse_f64(key, e)?,
                "grid_points" => {
                    grid.points = e.value.parse().map_err(|_| value_error(key, e, "expected an integer"))?
                }
                "t_inf_factor" => options.t_inf_factor = parse_f64(key, e)?,
                "convergence_guard" => options.convergence_guard = parse_bool(key, e)?,
                "guard_tolerance" => options.guard_tolerance = parse_f64(key, e)?,
                "rtol" => options.integration.rtol = parse_f64(key, e)?,
                "spectra" => {
                    spectra = Some(match e.value.as_str() {
                        "off" => SpectraMode::Off,
                        "standard" => SpectraMode::Standard,
                        "full" => SpectraMode::Full,
                        v => return Err(value_error(key, e, format!("expected off|standard|full, got `{v}`"))),
                    })
                }
                "sweep.axis1" | "sweep.axis2" => {
                    let axis: Axis = e.value.parse().map_err(|m: String| value_error(key, e, m))?;
                    let slot = if key.ends_with('1') { 0 } else { 1 };
                    axes.push((slot, axis));
                }
                "sweep.outputs" | "outputs" => {
                    outputs = e
                        .value
                        .split(',')
                        .map(|s| s.trim().parse::<Output>())
                        .collect::<Result<_, _>>()
                        .map_err(|m: String| value_error(key, e, m))?;
                    if outputs.is_empty() {
                        return Err(value_error(key, e, "no outputs requested"));
                    }
                }
                "sweep.optimize" | "optimize" => optimize = parse_bool(key, e)?,
                "sweep.optimize_range" => {
                    optimize_range = e.value.parse().map_err(|m: String| value_error(key, e, m))?
                }
                _ => return Err(ConfigError::UnknownKey { line: e.line, key: key.clone() }),
            }
        }

        axes.sort_by_key(|(slot, _)| *slot);
        if axes.len() == 1 && axes[0].0 == 1 {
            return Err(ConfigError::Sweep("sweep.axis2 given without sweep.axis1".into()));
        }
        let axes: Vec<Axis> = axes.into_iter().map(|(_, a)| a).collect();
        let total: f64 = axes.iter().map(|a| a.points as f64).product();
        if total > MAX_GRID_POINTS as f64 {
            return Err(ConfigError::Sweep(format!("{total} grid points exceed the limit of {MAX_GRID_POINTS}")));
        }
        grid.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        options.grid = grid;

        Ok(Config {
            point,
            options,
            spectra,
            axes,
            outputs,
            optimize: optimize.then_some(optimize_range),
            hash,
        })
    }
}

fn strip_comment(line: &str) -> &str {
    // A `#` inside a quoted value is kept.
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "j_mhz = 10\nkappa_mhz = 25\ng_ef_mhz = 30\ntau_p_us = 0.5\n";

    #[test]
    fn parses_point() {
        let c: Config = BASE.parse().unwrap();
        let p = c.device().unwrap();
        assert_eq!(p.hopping, mhz(10.0));
        assert_eq!(p.kappa_1, mhz(25.0));
        assert_eq!(p.kappa_2, mhz(25.0));
        assert_eq!(p.n_res, 7);
        assert_eq!(c.pulse().unwrap().omega_0(), mhz(7000.0));
    }

    #[test]
    fn comments_and_layout_do_not_change_hash() {
        let a: Config = BASE.parse().unwrap();
        let b: Config = format!("# header\n\n{}  # trailing\n", BASE.replace(" = ", "=")).parse().unwrap();
        assert_eq!(a.hash, b.hash);
        let c: Config = BASE.replace("25", "26").parse().unwrap();
        assert_ne!(a.hash, c.hash);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!("foo = 1".parse::<Config>(), Err(ConfigError::UnknownKey { line: 1, .. })));
        assert!(matches!("j_mhz 10".parse::<Config>(), Err(ConfigError::Syntax { .. })));
        assert!(matches!("j_mhz = 1\nj_mhz = 2".parse::<Config>(), Err(ConfigError::Duplicate { line: 2, .. })));
        assert!(matches!("j_mhz = x".parse::<Config>(), Err(ConfigError::Value { .. })));
        assert!(matches!("kappa_mhz = 1\nkappa1_mhz = 2".parse::<Config>(), Err(ConfigError::Conflict(_))));
        let c: Config = "j_mhz = 10".parse().unwrap();
        assert!(matches!(c.device(), Err(ConfigError::Missing("g_ef_mhz"))));
    }

    #[test]
    fn ratio_keys_follow_j() {
        let c: Config = "j_mhz = 12\nkappa1_over_j = 2\nkappa2_mhz = 5\ng_ef_mhz = 30\ntau_p_us = 0.3"
            .parse()
            .unwrap();
        let p = c.device().unwrap();
        assert!((p.kappa_1 - mhz(24.0)).abs() < 1e-12);
        assert_eq!(p.kappa_2, mhz(5.0));
    }

    #[test]
    fn sweep_axes() {
        let text = format!("{BASE}sweep.axis2 = \"kappa2_over_j: 1, 2, 3\"\nsweep.axis1 = \"kappa1_over_j: 0.5, 5, 4\"\n");
        let c: Config = text.parse().unwrap();
        let spec = c.sweep_spec().unwrap();
        assert_eq!(spec.axes[0].key, ParamKey::Kappa1OverJ);
        assert_eq!(spec.axes[1].values(), vec![1.0, 1.5, 2.0]);
        assert!("sweep.axis1 = \"kappa_mhz: 1, 2, 1000001\"".parse::<Config>().is_err());
        assert!("sweep.axis2 = \"kappa_mhz: 1, 2, 3\"".parse::<Config>().is_err());
    }
}
