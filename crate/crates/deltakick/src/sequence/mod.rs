//! The full interferometer protocol: timeline, twists, tuning and gain.
//!
//! Times are measured from the trap release. The default protocol reads
//!
//! ```text
//! release ─ T0 ─ BS1 ─ t_exp ─ DKS1(dt1) ─ M ─ (T_tau + T'_tau) ─ M ─ T'_tau ─ BS2
//!         ─ T_theta ─ M ─ T_theta ─ BS3
//!         [echo: ─ t_exp2 ─ DKS2(dt2) ─ M ─ (T_tau2 + T'_tau2) ─ M ─ T'_tau2 ─ BS4]
//! ```
//!
//! with `T_tau = t_exp + dt1` and `T_tau2 = t_exp2 + dt2`. The drift between
//! the two preparation mirrors lasts `T_tau + T'_tau` so that the arms meet
//! again at BS2 when there is no trap in between. The twists are
//! accumulated over `[BS1, BS2]` (`tau1`), `[BS2, BS3]` (`tau_ai`) and from
//! BS3 to the end (`tau2`).

use std::fmt;
use std::str::FromStr;

use crate::collective_spin::{Engine, DEFAULT_ENGINE_CAP};
use crate::error::{Error, Result};
use crate::gain_formulas::{
    gain_echo, gain_echo_perturbative, gain_linear, gain_to_db, tau_opt, Branch, EchoGainInputs, LinearGainInputs,
};
use crate::meanfield::{
    accumulate_tau, chi_trace, ChiTrace, PhysicalParams, PulseEvent, PulseKind, PulseType, SegmentLabel, Timeline,
    TrapSegment,
};
use crate::numeric::{bisect_secant, golden_section_max};

/// How the final population difference is read out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Readout {
    /// Opportune rotation before BS2, direct measurement.
    Linear,
    /// A second twist of opposite sign after BS3.
    Echo,
}

impl FromStr for Readout {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(Readout::Linear),
            "echo" => Ok(Readout::Echo),
            other => Err(Error::InvalidArgument(format!("unknown readout '{other}' (linear|echo)"))),
        }
    }
}

impl fmt::Display for Readout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Mode::from(*self).fmt(f)
    }
}

/// Evaluator family recorded in a [`GainReport`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Linear,
    Echo,
    Perturbative,
}

impl From<Readout> for Mode {
    fn from(r: Readout) -> Self {
        match r {
            Readout::Linear => Mode::Linear,
            Readout::Echo => Mode::Echo,
        }
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(Mode::Linear),
            "echo" => Ok(Mode::Echo),
            "perturbative" => Ok(Mode::Perturbative),
            other => Err(Error::InvalidArgument(format!("unknown mode '{other}' (linear|echo|perturbative)"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Linear => "linear",
            Mode::Echo => "echo",
            Mode::Perturbative => "perturbative",
        })
    }
}

/// Anything a scan can vary by name and evaluate to a gain.
pub trait ParamSet: Clone + Send + Sync {
    /// Sets a numeric field by its configuration key.
    fn set_param(&mut self, key: &str, value: f64) -> Result<()>;
    /// Keys accepted by [`ParamSet::set_param`].
    fn param_keys() -> &'static [&'static str];
    fn evaluate(&self) -> Result<GainReport>;
}

fn unknown_key(key: &str, known: &[&str]) -> Error {
    Error::InvalidArgument(format!("unknown parameter '{key}' (expected one of: {})", known.join(", ")))
}

fn atom_number(value: f64) -> Result<u64> {
    if value.is_finite() && value >= 2.0 && value.fract() == 0.0 && value < 9.0e15 {
        Ok(value as u64)
    } else {
        Err(Error::InvalidArgument(format!("N must be an integer >= 2, got {value}")))
    }
}

/// Result of one gain evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainReport {
    pub tau1: f64,
    pub tau_ai: f64,
    pub tau2: f64,
    pub gain: f64,
    pub gain_db: f64,
    /// Phase uncertainty `1/(sqrt(N) gain)` in rad.
    pub delta_theta: f64,
    pub mode: Mode,
    pub branch: Branch,
    pub delta_n: f64,
}

impl GainReport {
    pub const CSV_HEADER: [&'static str; 8] =
        ["tau1", "tau_ai", "tau2", "mode", "branch", "delta_n", "gain", "gain_db"];

    fn new(n: u64, taus: Taus, gain: f64, mode: Mode, branch: Branch, delta_n: f64) -> Self {
        GainReport {
            tau1: taus.tau1,
            tau_ai: taus.tau_ai,
            tau2: taus.tau2,
            gain,
            gain_db: gain_to_db(gain),
            delta_theta: 1.0 / ((n as f64).sqrt() * gain),
            mode,
            branch,
            delta_n,
        }
    }

    /// Fields in [`GainReport::CSV_HEADER`] order.
    pub fn csv_record(&self) -> [String; 8] {
        [
            format!("{:e}", self.tau1),
            format!("{:e}", self.tau_ai),
            format!("{:e}", self.tau2),
            self.mode.to_string(),
            self.branch.to_string(),
            format!("{}", self.delta_n),
            format!("{}", self.gain),
            format!("{}", self.gain_db),
        ]
    }
}

/// Accumulated twists of the three windows.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Taus {
    pub tau1: f64,
    pub tau_ai: f64,
    pub tau2: f64,
}

/// Direct closed-form or engine evaluation from given twists, with no
/// mean-field stage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormulaInputs {
    pub mode: Mode,
    pub n: u64,
    pub tau1: f64,
    /// Ignored in perturbative mode, where `tau2 = -tau1`.
    pub tau2: f64,
    /// Residual interferometer twist. The linear-readout closed form has no
    /// term for it, so linear mode ignores it.
    pub tau_ai: f64,
    pub delta_n: f64,
    pub engine_cap: usize,
}

impl Default for FormulaInputs {
    fn default() -> Self {
        FormulaInputs {
            mode: Mode::Linear,
            n: 1000,
            tau1: 0.0,
            tau2: 0.0,
            tau_ai: 0.0,
            delta_n: 0.0,
            engine_cap: DEFAULT_ENGINE_CAP,
        }
    }
}

impl FormulaInputs {
    /// Twist that maximises the linear gain, used for `tau = auto`.
    pub fn auto_tau(&self) -> f64 {
        tau_opt(self.n)
    }
}

const FORMULA_KEYS: &[&str] = &["N", "tau", "tau1", "tau2", "tau_ai", "delta_n"];

impl ParamSet for FormulaInputs {
    /// `tau` sets `tau1` and mirrors it into `tau2 = -tau`; `tau1` alone
    /// leaves `tau2` untouched.
    fn set_param(&mut self, key: &str, value: f64) -> Result<()> {
        match key {
            "N" => self.n = atom_number(value)?,
            "tau" => {
                self.tau1 = value;
                self.tau2 = -value;
            }
            "tau1" => self.tau1 = value,
            "tau2" => self.tau2 = value,
            "tau_ai" => self.tau_ai = value,
            "delta_n" => self.delta_n = value,
            _ => return Err(unknown_key(key, FORMULA_KEYS)),
        }
        Ok(())
    }

    fn param_keys() -> &'static [&'static str] {
        FORMULA_KEYS
    }

    fn evaluate(&self) -> Result<GainReport> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!("N must be at least 2, got {}", self.n)));
        }
        if !(self.delta_n >= 0.0) {
            return Err(Error::InvalidArgument(format!("delta_n must be non-negative, got {}", self.delta_n)));
        }
        let taus = Taus { tau1: self.tau1, tau_ai: self.tau_ai, tau2: self.tau2 };
        match self.mode {
            Mode::Linear => {
                let g = gain_linear(&LinearGainInputs { n: self.n, tau: self.tau1, delta_n: self.delta_n });
                let taus = Taus { tau_ai: 0.0, tau2: 0.0, ..taus };
                Ok(GainReport::new(self.n, taus, g, Mode::Linear, Branch::ClosedForm, self.delta_n))
            }
            Mode::Echo => {
                let inputs = EchoGainInputs {
                    n: self.n,
                    tau1: self.tau1,
                    tau2: self.tau2,
                    tau_ai: self.tau_ai,
                    delta_n: self.delta_n,
                };
                let (g, branch) = gain_echo(&inputs, &Engine::with_cap(self.engine_cap))?;
                Ok(GainReport::new(self.n, taus, g, Mode::Echo, branch, self.delta_n))
            }
            Mode::Perturbative => {
                let nf = self.n as f64;
                let q = gain_echo_perturbative(self.n, self.tau1, self.tau_ai);
                let g = q * (0.25 * nf / (0.25 * nf + self.delta_n * self.delta_n)).sqrt();
                let taus = Taus { tau2: -self.tau1, ..taus };
                Ok(GainReport::new(self.n, taus, g, Mode::Perturbative, Branch::Perturbative, self.delta_n))
            }
        }
    }
}

/// Everything needed to run the mean-field protocol and evaluate its gain.
///
/// Durations are in seconds and trap frequencies in rad/s.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolSpec {
    pub params: PhysicalParams,
    /// Trap holding the condensate before release; sets the initial radii.
    pub omega_initial: [f64; 3],
    pub omega_dks1: [f64; 3],
    pub omega_dks2: [f64; 3],
    pub t0: f64,
    pub t_exp: f64,
    pub dt1: f64,
    pub t_tau_prime: f64,
    pub t_theta: f64,
    pub t_exp2: f64,
    pub dt2: f64,
    pub t_tau2_prime: f64,
    pub readout: Readout,
    /// Stop the expansion at BS2 with a collimation kick.
    pub collimate_before_bs2: bool,
    /// Start the `tau2` window at DKS2 instead of BS3.
    pub tau2_from_dks2: bool,
    pub delta_n: f64,
    /// Largest integrator step in s.
    pub dt_max: f64,
    /// Halve `dt_max` until the twists change by less than 1e-6 relative.
    pub refine: bool,
    pub t_tau_prime_bracket: (f64, f64),
    pub dt2_bracket: (f64, f64),
    pub engine_cap: usize,
}

fn hz(f: f64) -> f64 {
    2.0 * std::f64::consts::PI * f
}

impl Default for ProtocolSpec {
    /// A dilute 4000-atom Rb-87-like cloud: released from a 100 Hz trap,
    /// expanded for 50 ms, then kicked by 500 Hz traps. With these numbers
    /// the twist without a kick is negligible and a 15 µs kick gives about
    /// 0.6 of the optimal linear-readout twist.
    fn default() -> Self {
        ProtocolSpec {
            params: PhysicalParams { n: 4000, ..PhysicalParams::default() },
            omega_initial: [hz(100.0); 3],
            omega_dks1: [hz(500.0); 3],
            omega_dks2: [hz(500.0); 3],
            t0: 50e-3,
            t_exp: 5e-3,
            dt1: 15e-6,
            t_tau_prime: 5.25e-3,
            t_theta: 10e-3,
            t_exp2: 0.0,
            dt2: 0.0,
            t_tau2_prime: 1e-3,
            readout: Readout::Linear,
            collimate_before_bs2: false,
            tau2_from_dks2: false,
            delta_n: 0.0,
            dt_max: 1e-4,
            refine: true,
            t_tau_prime_bracket: (0.0, 0.2),
            dt2_bracket: (0.0, 5e-3),
            engine_cap: DEFAULT_ENGINE_CAP,
        }
    }
}

const PROTOCOL_KEYS: &[&str] = &[
    "N",
    "mass",
    "scattering_length",
    "wavenumber",
    "T0",
    "t_exp",
    "dt1",
    "T_tau_prime",
    "T_theta",
    "t_exp2",
    "dt2",
    "T_tau2_prime",
    "delta_n",
    "dt_max",
];

/// Absolute times of the landmarks the twist windows refer to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Landmarks {
    pub bs1: f64,
    pub bs2: f64,
    pub bs3: f64,
    pub dks2: Option<f64>,
    pub end: f64,
}

impl ProtocolSpec {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let durations = [
            ("T0", self.t0),
            ("t_exp", self.t_exp),
            ("dt1", self.dt1),
            ("T_tau_prime", self.t_tau_prime),
            ("T_theta", self.t_theta),
            ("t_exp2", self.t_exp2),
            ("dt2", self.dt2),
            ("T_tau2_prime", self.t_tau2_prime),
        ];
        for (name, d) in durations {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be a non-negative duration, got {d}")));
            }
        }
        if !(self.delta_n >= 0.0) {
            return Err(Error::InvalidArgument(format!("delta_n must be non-negative, got {}", self.delta_n)));
        }
        if !(self.dt_max > 0.0) {
            return Err(Error::InvalidArgument(format!("dt_max must be positive, got {}", self.dt_max)));
        }
        for (name, (lo, hi)) in [("T_tau_prime_bracket", self.t_tau_prime_bracket), ("dt2_bracket", self.dt2_bracket)] {
            if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must satisfy 0 <= lo < hi, got [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Echo readout with anything but Bragg pulses cannot reach `tau2 < 0`.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.readout == Readout::Echo && self.params.pulse_type != PulseType::Bragg {
            out.push("echo readout with Raman pulses: the echo twist cannot become negative".to_string());
        }
        out
    }

    fn t_tau(&self) -> f64 {
        self.t_exp + self.dt1
    }

    fn t_tau2(&self) -> f64 {
        self.t_exp2 + self.dt2
    }

    pub fn landmarks(&self) -> Landmarks {
        let bs1 = self.t0;
        let bs2 = bs1 + 2.0 * self.t_tau() + 2.0 * self.t_tau_prime;
        let bs3 = bs2 + 2.0 * self.t_theta;
        match self.readout {
            Readout::Linear => Landmarks { bs1, bs2, bs3, dks2: None, end: bs3 },
            Readout::Echo => Landmarks {
                bs1,
                bs2,
                bs3,
                dks2: Some(bs3 + self.t_exp2),
                end: bs3 + 2.0 * self.t_tau2() + 2.0 * self.t_tau2_prime,
            },
        }
    }
}

impl ParamSet for ProtocolSpec {
    fn set_param(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = match key {
            "N" => {
                self.params.n = atom_number(value)?;
                return Ok(());
            }
            "mass" => &mut self.params.mass,
            "scattering_length" => &mut self.params.scattering_length,
            "wavenumber" => &mut self.params.wavenumber,
            "T0" => &mut self.t0,
            "t_exp" => &mut self.t_exp,
            "dt1" => &mut self.dt1,
            "T_tau_prime" => &mut self.t_tau_prime,
            "T_theta" => &mut self.t_theta,
            "t_exp2" => &mut self.t_exp2,
            "dt2" => &mut self.dt2,
            "T_tau2_prime" => &mut self.t_tau2_prime,
            "delta_n" => &mut self.delta_n,
            "dt_max" => &mut self.dt_max,
            _ => return Err(unknown_key(key, PROTOCOL_KEYS)),
        };
        *slot = value;
        Ok(())
    }

    fn param_keys() -> &'static [&'static str] {
        PROTOCOL_KEYS
    }

    fn evaluate(&self) -> Result<GainReport> {
        evaluate(self)
    }
}

/// Lays out trap segments and pulses for `spec`.
pub fn build_timeline(spec: &ProtocolSpec) -> Result<Timeline> {
    spec.validate()?;
    let free = |d: f64| TrapSegment::free(d);
    let mut segments = vec![
        TrapSegment { duration: spec.t0, omega: [0.0; 3], label: SegmentLabel::PreExpansion },
        free(spec.t_exp),
        TrapSegment { duration: spec.dt1, omega: spec.omega_dks1, label: SegmentLabel::Dks1 },
        free(spec.t_tau() + spec.t_tau_prime),
        free(spec.t_tau_prime),
        free(spec.t_theta),
        free(spec.t_theta),
    ];
    let lm = spec.landmarks();
    let pulse = |time: f64, kind: PulseKind| PulseEvent { time, kind };
    let mut events = vec![
        pulse(lm.bs1, PulseKind::BeamSplitter),
        pulse(lm.bs1 + spec.t_tau(), PulseKind::Mirror),
        pulse(lm.bs1 + 2.0 * spec.t_tau() + spec.t_tau_prime, PulseKind::Mirror),
    ];
    if spec.collimate_before_bs2 {
        events.push(pulse(lm.bs2, PulseKind::Collimate));
    }
    events.push(pulse(lm.bs2, PulseKind::BeamSplitter));
    events.push(pulse(lm.bs2 + spec.t_theta, PulseKind::Mirror));
    events.push(pulse(lm.bs3, PulseKind::BeamSplitter));
    if spec.readout == Readout::Echo {
        segments.push(free(spec.t_exp2));
        segments.push(TrapSegment { duration: spec.dt2, omega: spec.omega_dks2, label: SegmentLabel::Dks2 });
        segments.push(free(spec.t_tau2() + spec.t_tau2_prime));
        segments.push(free(spec.t_tau2_prime));
        events.push(pulse(lm.bs3 + spec.t_tau2(), PulseKind::Mirror));
        events.push(pulse(lm.bs3 + 2.0 * spec.t_tau2() + spec.t_tau2_prime, PulseKind::Mirror));
        events.push(pulse(lm.end, PulseKind::BeamSplitter));
    }
    Timeline::new(segments, events)
}

/// Mean-field trace of `spec` at its `dt_max`.
pub fn protocol_trace(spec: &ProtocolSpec) -> Result<ChiTrace> {
    let timeline = build_timeline(spec)?;
    chi_trace(&timeline, &spec.params, spec.omega_initial, spec.dt_max)
}

fn taus_at(spec: &ProtocolSpec, dt_max: f64) -> Result<Taus> {
    let timeline = build_timeline(spec)?;
    let trace = chi_trace(&timeline, &spec.params, spec.omega_initial, dt_max)?;
    let lm = spec.landmarks();
    let tau2 = match (spec.readout, lm.dks2) {
        (Readout::Echo, Some(dks2)) => {
            let start = if spec.tau2_from_dks2 { dks2 } else { lm.bs3 };
            accumulate_tau(&trace, (start, lm.end))
        }
        _ => 0.0,
    };
    Ok(Taus { tau1: accumulate_tau(&trace, (lm.bs1, lm.bs2)), tau_ai: accumulate_tau(&trace, (lm.bs2, lm.bs3)), tau2 })
}

/// Twists of the three windows. With `refine` set, `dt_max` is halved until
/// no twist changes by more than 1e-6 of the largest one (at most 8 times).
pub fn compute_taus(spec: &ProtocolSpec) -> Result<Taus> {
    let mut dt = spec.dt_max;
    let mut taus = taus_at(spec, dt)?;
    if !spec.refine {
        return Ok(taus);
    }
    for _ in 0..8 {
        dt *= 0.5;
        let next = taus_at(spec, dt)?;
        let scale = next.tau1.abs().max(next.tau_ai.abs()).max(next.tau2.abs());
        let change =
            (next.tau1 - taus.tau1).abs().max((next.tau_ai - taus.tau_ai).abs()).max((next.tau2 - taus.tau2).abs());
        taus = next;
        if change <= 1e-6 * scale {
            break;
        }
    }
    Ok(taus)
}

/// Scans `f` on a uniform grid over `[lo, hi]` and root-finds inside the
/// first cell where it changes sign. Grid points where `f` fails are
/// skipped. Returns the root, or the range of finite values seen.
fn first_crossing(
    f: &mut impl FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    cells: usize,
    xtol: f64,
) -> std::result::Result<f64, (f64, f64, Option<Error>)> {
    let mut prev: Option<(f64, f64)> = None;
    let mut range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut last_err = None;
    for i in 0..=cells {
        let x = lo + (hi - lo) * i as f64 / cells as f64;
        let fx = match f(x) {
            Ok(v) if v.is_finite() => v,
            Ok(_) => continue,
            Err(e) => {
                last_err = Some(e);
                prev = None;
                continue;
            }
        };
        range = (range.0.min(fx), range.1.max(fx));
        if fx == 0.0 {
            return Ok(x);
        }
        if let Some((px, pf)) = prev {
            if pf.signum() != fx.signum() {
                return bisect_secant(f, px, x, 0.0, xtol).map_err(|e| (range.0, range.1, Some(e)));
            }
        }
        prev = Some((x, fx));
    }
    Err((range.0, range.1, last_err))
}

/// Mirror spacing `T'_tau` that cancels the interferometer twist,
/// `|tau_ai| < 1e-4 |tau1|`. If the lower end of the bracket already meets
/// the condition (for instance without interactions) it is returned.
pub fn tune_linear_condition(spec: &ProtocolSpec) -> Result<f64> {
    spec.validate()?;
    let (lo, hi) = spec.t_tau_prime_bracket;
    let at = |t: f64| -> Result<Taus> {
        let mut s = spec.clone();
        s.t_tau_prime = t;
        s.readout = Readout::Linear;
        compute_taus(&s)
    };
    let ok = |t: &Taus| t.tau_ai.abs() < 1e-4 * t.tau1.abs() || (t.tau_ai == 0.0 && t.tau1 == 0.0);
    if ok(&at(lo)?) {
        return Ok(lo);
    }
    let mut f = |t: f64| at(t).map(|x| x.tau_ai / x.tau1.abs().max(f64::MIN_POSITIVE));
    let root = first_crossing(&mut f, lo, hi, 40, 1e-13).map_err(|(min, max, err)| Error::NoRoot {
        lo,
        hi,
        detail: format!(
            "tau_ai/|tau1| stays within [{min:.4e}, {max:.4e}] over the bracket{}",
            err.map(|e| format!("; last failure: {e}")).unwrap_or_default()
        ),
    })?;
    let check = at(root)?;
    if ok(&check) {
        Ok(root)
    } else {
        Err(Error::NoRoot {
            lo,
            hi,
            detail: format!(
                "converged to T'_tau = {root:.9e} s with tau_ai = {:.3e}, tau1 = {:.3e}; the twist jumps across zero",
                check.tau_ai, check.tau1
            ),
        })
    }
}

/// DKS2 duration that undoes the preparation twist, `|tau2 + tau1| <
/// 1e-3 |tau1|`. Needs Bragg pulses; returns 0 when `tau1 = 0`.
///
/// A coarse scan of the bracket catches broad crossings. Reaching a negative
/// `tau2` usually requires the refocused cloud to pass its focus right as
/// the arms recombine, which happens in a narrow window just below the
/// duration at which `tau2` turns positive. If the scan misses, each such
/// sign change of `tau2` is located, the dip to its left is minimised, and
/// the root is taken on the dip's left flank.
pub fn tune_untwist(spec: &ProtocolSpec) -> Result<f64> {
    spec.validate()?;
    if spec.params.pulse_type != PulseType::Bragg {
        return Err(Error::InvalidArgument("un-twisting needs Bragg pulses to reach a negative twist".into()));
    }
    let mut echo = spec.clone();
    echo.readout = Readout::Echo;
    let tau1 = compute_taus(&echo)?.tau1;
    if tau1 == 0.0 {
        return Ok(0.0);
    }
    let (lo, hi) = spec.dt2_bracket;
    let tau2_at = |dt2: f64| -> Result<f64> {
        let mut s = echo.clone();
        s.dt2 = dt2;
        compute_taus(&s).map(|t| t.tau2)
    };
    let scale = tau1.abs();
    let mut residual = |dt2: f64| tau2_at(dt2).map(|t2| (t2 + tau1) / scale);

    let cells = 50;
    let grid: Vec<(f64, Option<f64>)> = (0..=cells)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / cells as f64;
            (x, tau2_at(x).ok().filter(|v| v.is_finite()))
        })
        .collect();
    let finite: Vec<f64> = grid.iter().filter_map(|g| g.1).collect();
    let mut range = (
        finite.iter().copied().fold(f64::INFINITY, f64::min),
        finite.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let mut root = None;
    for w in grid.windows(2) {
        if let ((a, Some(ta)), (b, Some(tb))) = (w[0], w[1]) {
            if ((ta + tau1) / scale).signum() != ((tb + tau1) / scale).signum() {
                root = Some(bisect_secant(&mut residual, a, b, 0.0, 1e-13)?);
                break;
            }
        }
    }
    if root.is_none() && tau1 > 0.0 {
        for w in grid.windows(2) {
            let ((a, Some(ta)), (b, Some(tb))) = (w[0], w[1]) else {
                continue;
            };
            if !(ta < 0.0 && tb > 0.0) {
                continue;
            }
            let mut t2 = |x: f64| tau2_at(x);
            let turn = bisect_secant(&mut t2, a, b, 0.0, 1e-13)?;
            let depth = |x: f64| tau2_at(x).map(|v| -v).unwrap_or(f64::NEG_INFINITY);
            let (x_min, neg_min) = golden_section_max(depth, a, turn, 1e-13);
            range.0 = range.0.min(-neg_min);
            if -neg_min + tau1 < 0.0 {
                root = Some(bisect_secant(&mut residual, a, x_min, 0.0, 1e-13)?);
                break;
            }
        }
    }
    let root = root.ok_or_else(|| Error::NoRoot {
        lo,
        hi,
        detail: format!("target tau2 = {:.4e}, but tau2 ranges over [{:.4e}, {:.4e}]", -tau1, range.0, range.1),
    })?;
    let mut s = echo.clone();
    s.dt2 = root;
    let t = compute_taus(&s)?;
    if (t.tau2 + t.tau1).abs() < 1e-3 * t.tau1.abs() {
        Ok(root)
    } else {
        Err(Error::NoRoot {
            lo,
            hi,
            detail: format!("converged to dt2 = {root:.9e} s with tau1 + tau2 = {:.3e}", t.tau1 + t.tau2),
        })
    }
}

/// Runs the mean-field protocol and converts its twists into a gain.
///
/// Linear readout assumes the linear condition holds and uses `tau1` with
/// the detection noise; echo readout dispatches `(tau1, tau_ai, tau2)` to
/// the echo evaluators and reports a capacity error when none applies.
pub fn evaluate(spec: &ProtocolSpec) -> Result<GainReport> {
    let taus = compute_taus(spec)?;
    let n = spec.params.n;
    match spec.readout {
        Readout::Linear => {
            let g = gain_linear(&LinearGainInputs { n, tau: taus.tau1, delta_n: spec.delta_n });
            Ok(GainReport::new(n, taus, g, Mode::Linear, Branch::ClosedForm, spec.delta_n))
        }
        Readout::Echo => {
            let inputs =
                EchoGainInputs { n, tau1: taus.tau1, tau2: taus.tau2, tau_ai: taus.tau_ai, delta_n: spec.delta_n };
            let (g, branch) = gain_echo(&inputs, &Engine::with_cap(spec.engine_cap))?;
            Ok(GainReport::new(n, taus, g, Mode::Echo, branch, spec.delta_n))
        }
    }
}
