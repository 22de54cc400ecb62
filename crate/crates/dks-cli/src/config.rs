//! Flat `key = value` run configuration.
//!
//! One assignment per line; `#` starts a comment. Every key has a fixed
//! unit (see `docs/config.md`); unknown or repeated keys are errors that
//! name the offending line.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use deltakick::gain_formulas::tau_opt;
use deltakick::meanfield::{PhysicalParams, PulseType};
use deltakick::scan::ScanAxis;
use deltakick::sequence::{FormulaInputs, Mode, ProtocolSpec, Readout};

/// Where a configuration problem was found.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    /// 1-based line in the config file, if the problem is tied to one.
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn new(line: Option<usize>, key: Option<&str>, message: impl Into<String>) -> Self {
        ConfigError { line, key: key.map(str::to_string), message: message.into() }
    }

    /// An error about a key that is not tied to a particular line.
    pub fn for_key(key: &str, message: impl Into<String>) -> Self {
        Self::new(None, Some(key), message)
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("config error")?;
        if let Some(line) = self.line {
            write!(f, " at line {line}")?;
        }
        if let Some(key) = &self.key {
            write!(f, " (key '{key}')")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

/// `tau = auto` or an explicit twist.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TauSetting {
    Auto,
    Value(f64),
}

/// `lo:hi:n`, inclusive, evenly spaced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn axis(&self, name: &str) -> ScanAxis {
        ScanAxis::linspace(name, self.lo, self.hi, self.n).expect("grid validated at parse time")
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", format_number(self.lo), format_number(self.hi), self.n)
    }
}

/// Every setting a run can take. Defaults follow the library defaults,
/// with one atom number `N` shared by the formula and protocol commands.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads for scans; 0 lets the runtime decide.
    pub threads: usize,
    pub out: Option<PathBuf>,

    pub mode: Mode,
    pub n: u64,
    pub tau: TauSetting,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub tau_ai: f64,
    pub delta_n: f64,
    pub engine_cap: usize,

    pub pulse_type: PulseType,
    pub pulse_types: Option<Vec<PulseType>>,
    pub readout: Readout,
    pub mass: f64,
    pub scattering_length: f64,
    pub wavenumber: f64,
    /// Trap frequencies in Hz (not rad/s).
    pub f_initial: [f64; 3],
    pub f_dks1: [f64; 3],
    pub f_dks2: [f64; 3],
    pub t0: f64,
    pub t_exp: f64,
    pub dt1: f64,
    pub t_tau_prime: f64,
    pub t_theta: f64,
    pub t_exp2: f64,
    pub dt2: f64,
    pub t_tau2_prime: f64,
    pub dt_max: f64,
    pub refine: bool,
    pub collimate_before_bs2: bool,
    pub tau2_from_dks2: bool,
    pub tune_linear: bool,
    pub t_tau_prime_bracket: (f64, f64),
    pub dt2_bracket: (f64, f64),

    pub t_exp_grid: Option<Grid>,
    pub dt1_grid: Option<Grid>,
    pub delta_n_grid: Option<Grid>,
}

/// Hz from rad/s, rounded to 12 significant digits so that defaults such as
/// `2π·500` read back as `500`.
fn to_hz(omega: [f64; 3]) -> [f64; 3] {
    omega.map(|w| format!("{:.11e}", w / (2.0 * std::f64::consts::PI)).parse().unwrap_or(f64::NAN))
}

/// Shortest round-tripping text, in exponent form for very small or large
/// magnitudes.
fn format_number(x: f64) -> String {
    if x != 0.0 && !(1e-4..1e6).contains(&x.abs()) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn to_rad(f: [f64; 3]) -> [f64; 3] {
    f.map(|x| 2.0 * std::f64::consts::PI * x)
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = ProtocolSpec::default();
        RunConfig {
            seed: 0,
            threads: 0,
            out: None,
            mode: Mode::Linear,
            n: p.params.n,
            tau: TauSetting::Auto,
            tau1: None,
            tau2: None,
            tau_ai: 0.0,
            delta_n: 0.0,
            engine_cap: p.engine_cap,
            pulse_type: p.params.pulse_type,
            pulse_types: None,
            readout: p.readout,
            mass: p.params.mass,
            scattering_length: p.params.scattering_length,
            wavenumber: p.params.wavenumber,
            f_initial: to_hz(p.omega_initial),
            f_dks1: to_hz(p.omega_dks1),
            f_dks2: to_hz(p.omega_dks2),
            t0: p.t0,
            t_exp: p.t_exp,
            dt1: p.dt1,
            t_tau_prime: p.t_tau_prime,
            t_theta: p.t_theta,
            t_exp2: p.t_exp2,
            dt2: p.dt2,
            t_tau2_prime: p.t_tau2_prime,
            dt_max: p.dt_max,
            refine: p.refine,
            collimate_before_bs2: p.collimate_before_bs2,
            tau2_from_dks2: p.tau2_from_dks2,
            tune_linear: false,
            t_tau_prime_bracket: p.t_tau_prime_bracket,
            dt2_bracket: p.dt2_bracket,
            t_exp_grid: None,
            dt1_grid: None,
            delta_n_grid: None,
        }
    }
}

/// Every recognised key with its unit, in the order `--dump-config`
/// writes them.
pub const KEYS: &[(&str, &str)] = &[
    ("seed", "integer"),
    ("threads", "integer, 0 = all cores"),
    ("out", "path"),
    ("mode", "linear | echo | perturbative"),
    ("N", "atoms"),
    ("tau", "dimensionless or auto"),
    ("tau1", "dimensionless"),
    ("tau2", "dimensionless"),
    ("tau_ai", "dimensionless"),
    ("delta_n", "atoms"),
    ("engine_cap", "atoms"),
    ("pulse_type", "bragg | raman"),
    ("pulse_types", "comma list of bragg | raman"),
    ("readout", "linear | echo"),
    ("mass", "kg"),
    ("scattering_length", "m"),
    ("wavenumber", "1/m"),
    ("f_initial", "Hz, one value or fx,fy,fz"),
    ("f_dks1", "Hz, one value or fx,fy,fz"),
    ("f_dks2", "Hz, one value or fx,fy,fz"),
    ("T0", "s"),
    ("t_exp", "s"),
    ("dt1", "s"),
    ("T_tau_prime", "s"),
    ("T_theta", "s"),
    ("t_exp2", "s"),
    ("dt2", "s"),
    ("T_tau2_prime", "s"),
    ("dt_max", "s"),
    ("refine", "true | false"),
    ("collimate_before_bs2", "true | false"),
    ("tau2_from_dks2", "true | false"),
    ("tune_linear", "true | false"),
    ("T_tau_prime_bracket", "s, lo:hi"),
    ("dt2_bracket", "s, lo:hi"),
    ("t_exp_grid", "s, lo:hi:n"),
    ("dt1_grid", "s, lo:hi:n"),
    ("delta_n_grid", "atoms, lo:hi:n"),
];

fn number(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("'{v}' is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("'{v}' is not finite"))
    }
}

fn duration(v: &str) -> Result<f64, String> {
    let x = number(v)?;
    if x < 0.0 {
        return Err(format!("duration {x} is negative"));
    }
    Ok(x)
}

fn positive(v: &str) -> Result<f64, String> {
    let x = number(v)?;
    if x <= 0.0 {
        return Err(format!("{x} must be positive"));
    }
    Ok(x)
}

fn integer<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("'{v}' is not a non-negative integer"))
}

fn boolean(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("'{v}' is not a boolean (true|false)")),
    }
}

fn triple(v: &str) -> Result<[f64; 3], String> {
    let parts = v.split(',').map(|s| number(s.trim())).collect::<Result<Vec<_>, _>>()?;
    let t = match parts[..] {
        [f] => [f; 3],
        [a, b, c] => [a, b, c],
        _ => return Err(format!("expected one or three frequencies, got {}", parts.len())),
    };
    if t.iter().any(|&f| f < 0.0) {
        return Err("frequencies must be non-negative".into());
    }
    Ok(t)
}

fn bracket(v: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = v.split(':').collect();
    let [lo, hi] = parts[..] else {
        return Err(format!("expected lo:hi, got '{v}'"));
    };
    let (lo, hi) = (duration(lo.trim())?, duration(hi.trim())?);
    if hi <= lo {
        return Err(format!("bracket [{lo}, {hi}] is empty"));
    }
    Ok((lo, hi))
}

fn grid(v: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    let [lo, hi, n] = parts[..] else {
        return Err(format!("expected lo:hi:n, got '{v}'"));
    };
    let (lo, hi) = (number(lo)?, number(hi)?);
    let n: usize = integer(n)?;
    if n == 0 {
        return Err("grid has zero points".into());
    }
    if n > 1 && hi == lo {
        return Err(format!("grid with {n} points needs lo != hi"));
    }
    Ok(Grid { lo, hi, n })
}

fn parsed<T: FromStr<Err = deltakick::Error>>(v: &str) -> Result<T, String> {
    v.parse().map_err(|e: deltakick::Error| e.to_string())
}

impl RunConfig {
    /// Parses a config document on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        cfg.apply(text, |i| Some(i + 1))?;
        Ok(cfg)
    }

    /// Applies `key=value` assignments from the command line; they may
    /// override keys already set by a file.
    pub fn apply_overrides(&mut self, assignments: &[String]) -> Result<(), ConfigError> {
        self.apply(&assignments.join("\n"), |_| None)
    }

    fn apply(&mut self, text: &str, line_no: impl Fn(usize) -> Option<usize>) -> Result<(), ConfigError> {
        let mut seen: Vec<&str> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = line_no(i);
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::new(at, None, format!("expected 'key = value', got '{line}'")));
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.iter().any(|(k, _)| *k == key) {
                return Err(ConfigError::new(at, Some(key), "unknown key"));
            }
            if seen.contains(&key) {
                return Err(ConfigError::new(at, Some(key), "key given more than once"));
            }
            seen.push(key);
            self.set(key, value).map_err(|m| ConfigError::new(at, Some(key), m))?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "seed" => self.seed = integer(v)?,
            "threads" => self.threads = integer(v)?,
            "out" => self.out = (!v.is_empty()).then(|| PathBuf::from(v)),
            "mode" => self.mode = parsed(v)?,
            "N" => {
                let n: u64 = integer(v)?;
                if n < 2 {
                    return Err(format!("N must be at least 2, got {n}"));
                }
                self.n = n;
            }
            "tau" => {
                self.tau = if v.eq_ignore_ascii_case("auto") { TauSetting::Auto } else { TauSetting::Value(number(v)?) }
            }
            "tau1" => self.tau1 = Some(number(v)?),
            "tau2" => self.tau2 = Some(number(v)?),
            "tau_ai" => self.tau_ai = number(v)?,
            "delta_n" => {
                let x = number(v)?;
                if x < 0.0 {
                    return Err(format!("detection noise {x} is negative"));
                }
                self.delta_n = x;
            }
            "engine_cap" => self.engine_cap = integer(v)?,
            "pulse_type" => self.pulse_type = parsed(v)?,
            "pulse_types" => {
                let list = v.split(',').map(|s| parsed(s.trim())).collect::<Result<Vec<PulseType>, _>>()?;
                self.pulse_types = Some(list);
            }
            "readout" => self.readout = parsed(v)?,
            "mass" => self.mass = positive(v)?,
            "scattering_length" => self.scattering_length = duration(v)?,
            "wavenumber" => self.wavenumber = positive(v)?,
            "f_initial" => self.f_initial = triple(v)?,
            "f_dks1" => self.f_dks1 = triple(v)?,
            "f_dks2" => self.f_dks2 = triple(v)?,
            "T0" => self.t0 = duration(v)?,
            "t_exp" => self.t_exp = duration(v)?,
            "dt1" => self.dt1 = duration(v)?,
            "T_tau_prime" => self.t_tau_prime = duration(v)?,
            "T_theta" => self.t_theta = duration(v)?,
            "t_exp2" => self.t_exp2 = duration(v)?,
            "dt2" => self.dt2 = duration(v)?,
            "T_tau2_prime" => self.t_tau2_prime = duration(v)?,
            "dt_max" => self.dt_max = positive(v)?,
            "refine" => self.refine = boolean(v)?,
            "collimate_before_bs2" => self.collimate_before_bs2 = boolean(v)?,
            "tau2_from_dks2" => self.tau2_from_dks2 = boolean(v)?,
            "tune_linear" => self.tune_linear = boolean(v)?,
            "T_tau_prime_bracket" => self.t_tau_prime_bracket = bracket(v)?,
            "dt2_bracket" => self.dt2_bracket = bracket(v)?,
            "t_exp_grid" => self.t_exp_grid = Some(grid(v)?),
            "dt1_grid" => self.dt1_grid = Some(grid(v)?),
            "delta_n_grid" => self.delta_n_grid = Some(grid(v)?),
            _ => unreachable!("key list and setter disagree on '{key}'"),
        }
        Ok(())
    }

    fn value_of(&self, key: &str) -> Option<String> {
        let f = |x: f64| Some(format_number(x));
        let tri = |t: [f64; 3]| {
            Some(if t[0] == t[1] && t[1] == t[2] { format_number(t[0]) } else { t.map(format_number).join(",") })
        };
        let br = |b: (f64, f64)| Some(format!("{}:{}", format_number(b.0), format_number(b.1)));
        match key {
            "seed" => Some(self.seed.to_string()),
            "threads" => Some(self.threads.to_string()),
            "out" => self.out.as_ref().map(|p| p.display().to_string()),
            "mode" => Some(self.mode.to_string()),
            "N" => Some(self.n.to_string()),
            "tau" => Some(match self.tau {
                TauSetting::Auto => "auto".to_string(),
                TauSetting::Value(x) => x.to_string(),
            }),
            "tau1" => self.tau1.and_then(f),
            "tau2" => self.tau2.and_then(f),
            "tau_ai" => f(self.tau_ai),
            "delta_n" => f(self.delta_n),
            "engine_cap" => Some(self.engine_cap.to_string()),
            "pulse_type" => Some(self.pulse_type.to_string()),
            "pulse_types" => {
                self.pulse_types.as_ref().map(|l| l.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(","))
            }
            "readout" => Some(self.readout.to_string()),
            "mass" => f(self.mass),
            "scattering_length" => f(self.scattering_length),
            "wavenumber" => f(self.wavenumber),
            "f_initial" => tri(self.f_initial),
            "f_dks1" => tri(self.f_dks1),
            "f_dks2" => tri(self.f_dks2),
            "T0" => f(self.t0),
            "t_exp" => f(self.t_exp),
            "dt1" => f(self.dt1),
            "T_tau_prime" => f(self.t_tau_prime),
            "T_theta" => f(self.t_theta),
            "t_exp2" => f(self.t_exp2),
            "dt2" => f(self.dt2),
            "T_tau2_prime" => f(self.t_tau2_prime),
            "dt_max" => f(self.dt_max),
            "refine" => Some(self.refine.to_string()),
            "collimate_before_bs2" => Some(self.collimate_before_bs2.to_string()),
            "tau2_from_dks2" => Some(self.tau2_from_dks2.to_string()),
            "tune_linear" => Some(self.tune_linear.to_string()),
            "T_tau_prime_bracket" => br(self.t_tau_prime_bracket),
            "dt2_bracket" => br(self.dt2_bracket),
            "t_exp_grid" => self.t_exp_grid.map(|g| g.to_string()),
            "dt1_grid" => self.dt1_grid.map(|g| g.to_string()),
            "delta_n_grid" => self.delta_n_grid.map(|g| g.to_string()),
            _ => None,
        }
    }

    /// The full configuration as a document [`RunConfig::parse`] reads
    /// back to an equal value. Unset optional keys appear commented out.
    pub fn dump(&self) -> String {
        let mut out = String::from("# dks run configuration\n");
        for (key, unit) in KEYS {
            match self.value_of(key) {
                Some(v) => out.push_str(&format!("{key} = {v}  # {unit}\n")),
                None => out.push_str(&format!("# {key} =  ({unit}, unset)\n")),
            }
        }
        out
    }

    pub fn resolved_tau(&self) -> f64 {
        match self.tau {
            TauSetting::Auto => tau_opt(self.n),
            TauSetting::Value(t) => t,
        }
    }

    /// Inputs for the formula-level commands. `tau` fills `tau1` and
    /// `tau2 = -tau` unless those are given explicitly.
    pub fn formula(&self) -> FormulaInputs {
        let tau = self.resolved_tau();
        FormulaInputs {
            mode: self.mode,
            n: self.n,
            tau1: self.tau1.unwrap_or(tau),
            tau2: self.tau2.unwrap_or(-tau),
            tau_ai: self.tau_ai,
            delta_n: self.delta_n,
            engine_cap: self.engine_cap,
        }
    }

    /// Protocol for the mean-field commands, with `pulse_type` applied.
    pub fn protocol(&self) -> Result<ProtocolSpec, ConfigError> {
        let spec = ProtocolSpec {
            params: PhysicalParams {
                n: self.n,
                mass: self.mass,
                scattering_length: self.scattering_length,
                wavenumber: self.wavenumber,
                pulse_type: self.pulse_type,
            },
            omega_initial: to_rad(self.f_initial),
            omega_dks1: to_rad(self.f_dks1),
            omega_dks2: to_rad(self.f_dks2),
            t0: self.t0,
            t_exp: self.t_exp,
            dt1: self.dt1,
            t_tau_prime: self.t_tau_prime,
            t_theta: self.t_theta,
            t_exp2: self.t_exp2,
            dt2: self.dt2,
            t_tau2_prime: self.t_tau2_prime,
            readout: self.readout,
            collimate_before_bs2: self.collimate_before_bs2,
            tau2_from_dks2: self.tau2_from_dks2,
            delta_n: self.delta_n,
            dt_max: self.dt_max,
            refine: self.refine,
            t_tau_prime_bracket: self.t_tau_prime_bracket,
            dt2_bracket: self.dt2_bracket,
            engine_cap: self.engine_cap,
        };
        spec.validate().map_err(|e| ConfigError::new(None, None, e.to_string()))?;
        if self.f_initial.iter().any(|&f| f <= 0.0) {
            return Err(ConfigError::for_key("f_initial", "the initial trap needs positive frequencies"));
        }
        Ok(spec)
    }

    /// Pulse types a preparation scan covers.
    pub fn scan_pulse_types(&self) -> Vec<PulseType> {
        self.pulse_types.clone().unwrap_or_else(|| vec![self.pulse_type])
    }
}
