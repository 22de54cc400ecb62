//! Thomas–Fermi scaling dynamics of the condensate and the resulting
//! twisting rates.
//!
//! The cloud is an inverted parabola whose radii follow `R_i(t) = λ_i(t) R0_i`,
//! with `λ` obeying the Castin–Dum equations
//! `λ̈_i = ω0_i² / (λ_i λ_x λ_y λ_z) - ω_i(t)² λ_i`.
//! Both interferometer arms share this envelope; they differ only by a
//! displacement along `z`, which sets the cross-phase term.
//!
//! Rates are returned in s⁻¹ so that `τ = ∫ χ dt` is dimensionless.

mod ode;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
pub(crate) use ode::{integrate, Tolerances};

pub const HBAR: f64 = 1.054_571_817e-34;

/// Relative tolerance of the scaling-equation integrator.
pub const SCALING_RTOL: f64 = 1e-10;

/// Below this scaling factor the cloud is treated as having hit a focus.
pub const FOCUS_LIMIT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PulseType {
    Raman,
    Bragg,
}

impl FromStr for PulseType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "raman" => Ok(PulseType::Raman),
            "bragg" => Ok(PulseType::Bragg),
            other => Err(Error::InvalidArgument(format!("unknown pulse type '{other}' (raman|bragg)"))),
        }
    }
}

impl fmt::Display for PulseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PulseType::Raman => "raman",
            PulseType::Bragg => "bragg",
        })
    }
}

/// Species and coupling parameters. Intra- and inter-state scattering
/// lengths are taken equal, so a single `g = 4πħ²a/m` describes both.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams {
    pub n: u64,
    /// Atomic mass in kg.
    pub mass: f64,
    /// s-wave scattering length in m.
    pub scattering_length: f64,
    /// Optical wavenumber of the pulses in 1/m; the recoil splitting is `2ħk/m`.
    pub wavenumber: f64,
    pub pulse_type: PulseType,
}

impl Default for PhysicalParams {
    /// Rubidium-87-like numbers with 10⁵ atoms and Bragg pulses at 780 nm.
    fn default() -> Self {
        PhysicalParams {
            n: 100_000,
            mass: 1.443_160_648e-25,
            scattering_length: 5.2e-9,
            wavenumber: 2.0 * std::f64::consts::PI / 780e-9,
            pulse_type: PulseType::Bragg,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{what} must be positive, got {v}")))
            }
        };
        positive(self.mass, "mass")?;
        positive(self.wavenumber, "wavenumber")?;
        if !(self.scattering_length >= 0.0 && self.scattering_length.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "scattering length must be non-negative, got {}",
                self.scattering_length
            )));
        }
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 atoms, got {}", self.n)));
        }
        Ok(())
    }

    /// Coupling `g/ħ = 4πħa/m` in m³/s.
    pub fn g_over_hbar(&self) -> f64 {
        4.0 * std::f64::consts::PI * HBAR * self.scattering_length / self.mass
    }

    /// Relative velocity `2ħk/m` of the two arms after a splitting pulse.
    pub fn recoil_velocity(&self) -> f64 {
        2.0 * HBAR * self.wavenumber / self.mass
    }
}

/// Scaling factors and their rates at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingState {
    pub lambda: [f64; 3],
    pub lambda_dot: [f64; 3],
    pub r0: [f64; 3],
    pub t: f64,
}

impl ScalingState {
    /// The stationary cloud in its initial trap.
    pub fn at_rest(r0: [f64; 3]) -> Self {
        ScalingState { lambda: [1.0; 3], lambda_dot: [0.0; 3], r0, t: 0.0 }
    }

    pub fn radii(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| self.lambda[i] * self.r0[i])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SegmentLabel {
    PreExpansion,
    Dks1,
    Free,
    Dks2,
    Hold,
}

impl fmt::Display for SegmentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SegmentLabel::PreExpansion => "pre_expansion",
            SegmentLabel::Dks1 => "dks1",
            SegmentLabel::Free => "free",
            SegmentLabel::Dks2 => "dks2",
            SegmentLabel::Hold => "hold",
        })
    }
}

/// A stretch of constant trap frequencies; zero frequency means free flight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrapSegment {
    pub duration: f64,
    /// Angular frequencies in rad/s.
    pub omega: [f64; 3],
    pub label: SegmentLabel,
}

impl TrapSegment {
    pub fn free(duration: f64) -> Self {
        TrapSegment { duration, omega: [0.0; 3], label: SegmentLabel::Free }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidArgument(format!("{} segment has duration {}", self.label, self.duration)));
        }
        if self.omega.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "{} segment has trap frequencies {:?}",
                self.label, self.omega
            )));
        }
        Ok(())
    }
}

/// Instantaneous operations on the cloud.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PulseKind {
    /// Starts (or restarts) the arm separation: relative position 0,
    /// relative velocity `+2ħk/m`.
    BeamSplitter,
    /// Reverses the relative velocity.
    Mirror,
    /// Delta-kick collimation: stops the expansion, `λ̇ = 0`.
    Collimate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseEvent {
    pub time: f64,
    pub kind: PulseKind,
}

/// Back-to-back trap segments starting at release (`t = 0`) and the pulses
/// applied along the way.
#[derive(Clone, Debug, PartialEq)]
pub struct Timeline {
    segments: Vec<TrapSegment>,
    events: Vec<PulseEvent>,
}

impl Timeline {
    pub fn new(segments: Vec<TrapSegment>, events: Vec<PulseEvent>) -> Result<Self> {
        for s in &segments {
            s.validate()?;
        }
        let end: f64 = segments.iter().map(|s| s.duration).sum();
        for (i, e) in events.iter().enumerate() {
            if !(e.time >= 0.0 && e.time <= end * (1.0 + 1e-12)) {
                return Err(Error::InvalidArgument(format!(
                    "pulse {:?} at t = {} s lies outside [0, {end}]",
                    e.kind, e.time
                )));
            }
            if i > 0 && e.time < events[i - 1].time {
                return Err(Error::InvalidArgument(format!(
                    "pulse {:?} at t = {} s comes before the previous pulse at {} s",
                    e.kind,
                    e.time,
                    events[i - 1].time
                )));
            }
        }
        Ok(Timeline { segments, events })
    }

    pub fn segments(&self) -> &[TrapSegment] {
        &self.segments
    }

    pub fn events(&self) -> &[PulseEvent] {
        &self.events
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Start time of the first segment carrying `label`.
    pub fn segment_start(&self, label: SegmentLabel) -> Option<f64> {
        let mut t = 0.0;
        for s in &self.segments {
            if s.label == label {
                return Some(t);
            }
            t += s.duration;
        }
        None
    }

    pub fn pulse_times(&self, kind: PulseKind) -> Vec<f64> {
        self.events.iter().filter(|e| e.kind == kind).map(|e| e.time).collect()
    }

    /// Constant-trap intervals with every pulse sitting on an interval
    /// boundary. Pulses are reported with the interval they precede; the
    /// trailing list holds pulses at the very end.
    fn intervals(&self) -> (Vec<Interval>, Vec<PulseKind>) {
        let mut out = Vec::new();
        let mut next = 0;
        let mut t = 0.0;
        for seg in &self.segments {
            let end = t + seg.duration;
            let mut start = t;
            loop {
                let mut pulses = Vec::new();
                while next < self.events.len() && self.events[next].time <= start {
                    pulses.push(self.events[next].kind);
                    next += 1;
                }
                let stop = match self.events.get(next) {
                    Some(e) if e.time < end => e.time,
                    _ => end,
                };
                out.push(Interval { start, end: stop, omega: seg.omega, pulses });
                if stop >= end {
                    break;
                }
                start = stop;
            }
            t = end;
        }
        let tail = self.events[next..].iter().map(|e| e.kind).collect();
        (out, tail)
    }
}

struct Interval {
    start: f64,
    end: f64,
    omega: [f64; 3],
    pulses: Vec<PulseKind>,
}

/// Thomas–Fermi radii of `params.n` atoms in a trap with angular
/// frequencies `omega0`.
pub fn initial_tf_radii(params: &PhysicalParams, omega0: [f64; 3]) -> Result<[f64; 3]> {
    params.validate()?;
    if omega0.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidArgument(format!("initial trap frequencies must be positive, got {omega0:?}")));
    }
    let omega_bar = (omega0[0] * omega0[1] * omega0[2]).cbrt();
    let a_bar = (HBAR / (params.mass * omega_bar)).sqrt();
    let mu = 0.5 * HBAR * omega_bar * (15.0 * params.n as f64 * params.scattering_length / a_bar).powf(0.4);
    Ok(omega0.map(|w| (2.0 * mu / (params.mass * w * w)).sqrt()))
}

/// Integrates the scaling equations across one segment. The returned
/// trajectory starts with `state` and has spacing at most `dt_max`.
pub fn evolve_scaling(
    state: &ScalingState,
    segment: &TrapSegment,
    omega0: [f64; 3],
    dt_max: f64,
) -> Result<Vec<ScalingState>> {
    let path = scaling_path(state, 0.0, segment, omega0, dt_max, |_, _| 0.0)?;
    Ok(path.into_iter().map(|(s, _)| s).collect())
}

/// Scaling equations plus a running twist `τ' = rate(t, radii)`, so that the
/// twist inherits the integrator's error control.
fn scaling_path(
    state: &ScalingState,
    tau0: f64,
    segment: &TrapSegment,
    omega0: [f64; 3],
    dt_max: f64,
    rate: impl Fn(f64, [f64; 3]) -> f64,
) -> Result<Vec<(ScalingState, f64)>> {
    segment.validate()?;
    if !(dt_max > 0.0) {
        return Err(Error::InvalidArgument(format!("dt_max must be positive, got {dt_max}")));
    }
    if state.lambda.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::InvalidArgument(format!("scaling factors must be positive, got {:?}", state.lambda)));
    }
    let w0sq = omega0.map(|w| w * w);
    let wsq = segment.omega.map(|w| w * w);
    let r0 = state.r0;
    let rhs = |t: f64, y: &[f64; 7]| {
        let vol = y[0] * y[1] * y[2];
        [
            y[3],
            y[4],
            y[5],
            w0sq[0] / (y[0] * vol) - wsq[0] * y[0],
            w0sq[1] / (y[1] * vol) - wsq[1] * y[1],
            w0sq[2] / (y[2] * vol) - wsq[2] * y[2],
            rate(t, [y[0] * r0[0], y[1] * r0[1], y[2] * r0[2]]),
        ]
    };
    let check = |t: f64, y: &[f64; 7]| match (0..3).find(|&i| !(y[i] >= FOCUS_LIMIT)) {
        Some(axis) => Err(Error::FocusSingularity { time: t, axis }),
        None => Ok(()),
    };
    let [l0, l1, l2] = state.lambda;
    let [v0, v1, v2] = state.lambda_dot;
    let tol = Tolerances { rtol: SCALING_RTOL, atol: 1e-12, h_max: dt_max };
    let path = integrate(rhs, check, state.t, [l0, l1, l2, v0, v1, v2, tau0], state.t + segment.duration, tol)?;
    Ok(path
        .into_iter()
        .map(|(t, y)| {
            let s = ScalingState { lambda: [y[0], y[1], y[2]], lambda_dot: [y[3], y[4], y[5]], r0, t };
            (s, y[6])
        })
        .collect())
}

/// Self-phase rate `g∫n² d³r / ħ` of a unit-normalised Thomas–Fermi cloud.
///
/// Without interactions (`a = 0`) the Thomas–Fermi radii collapse to zero;
/// the rate is then 0 rather than `0/0`.
pub fn chi_self(radii: [f64; 3], params: &PhysicalParams) -> f64 {
    if params.scattering_length == 0.0 {
        return 0.0;
    }
    15.0 * params.g_over_hbar() / (14.0 * std::f64::consts::PI * radii[0] * radii[1] * radii[2])
}

// Gauss–Legendre nodes and weights on [-1, 1]; five nodes integrate the
// degree-6 overlap polynomial exactly.
const GL_NODES: [f64; 5] =
    [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

/// Cross-phase rate `g∫n(r) n(r - d ẑ) d³r / ħ` of two identical
/// Thomas–Fermi clouds displaced by `separation_z` along `z`.
///
/// After integrating the transverse plane analytically, the remaining
/// integrand along `z` is a polynomial on the overlap interval, which the
/// quadrature above handles exactly.
pub fn chi_cross(radii: [f64; 3], separation_z: f64, params: &PhysicalParams) -> f64 {
    let d = separation_z.abs() / radii[2];
    if params.scattering_length == 0.0 || d >= 2.0 {
        return 0.0;
    }
    let (lo, hi) = (0.5 * d, 1.0);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let integral: f64 = GL_NODES
        .iter()
        .zip(GL_WEIGHTS)
        .map(|(x, w)| {
            let z = mid + half * x;
            let alpha = 1.0 - z * z;
            let beta = 1.0 - (z - d) * (z - d);
            w * (0.5 * alpha * alpha * beta - alpha * alpha * alpha / 6.0)
        })
        .sum::<f64>()
        * half;
    let norm = 15.0 / (8.0 * std::f64::consts::PI);
    let value =
        params.g_over_hbar() * norm * norm / (radii[0] * radii[1] * radii[2]) * 2.0 * std::f64::consts::PI * integral;
    // Exact at d = 0, where it must reproduce the self term bit for bit.
    if d == 0.0 {
        chi_self(radii, params)
    } else {
        value.max(0.0)
    }
}

/// Net one-axis-twisting rate for the chosen pulse type.
pub fn chi_effective(pulse_type: PulseType, chi_s: f64, chi_c: f64) -> f64 {
    match pulse_type {
        PulseType::Raman => chi_s - chi_c,
        PulseType::Bragg => chi_s - 2.0 * chi_c,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Relative {
    z: f64,
    v: f64,
}

impl Relative {
    fn advance(self, dt: f64, omega_z: f64) -> Relative {
        if omega_z > 0.0 {
            let (s, c) = (omega_z * dt).sin_cos();
            Relative { z: self.z * c + self.v / omega_z * s, v: self.v * c - self.z * omega_z * s }
        } else {
            Relative { z: self.z + self.v * dt, v: self.v }
        }
    }
}

/// Arm separation `|z_rel(t)|` at the requested (ascending) times. Before
/// the first beam splitter there is a single cloud and the separation is 0.
/// A time that coincides with a pulse is reported after the pulse.
pub fn relative_separation(timeline: &Timeline, params: &PhysicalParams, times: &[f64]) -> Result<Vec<f64>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("query times must be ascending".into()));
    }
    let v0 = params.recoil_velocity();
    let (intervals, tail) = timeline.intervals();
    let mut rel: Option<Relative> = None;
    let mut out = Vec::with_capacity(times.len());
    let mut q = 0;
    for iv in &intervals {
        for p in &iv.pulses {
            apply_relative(&mut rel, *p, v0);
        }
        while q < times.len() && times[q] < iv.end {
            let d = rel.map_or(0.0, |r| r.advance(times[q] - iv.start, iv.omega[2]).z.abs());
            out.push(d);
            q += 1;
        }
        rel = rel.map(|r| r.advance(iv.end - iv.start, iv.omega[2]));
    }
    for p in &tail {
        apply_relative(&mut rel, *p, v0);
    }
    while q < times.len() {
        if times[q] > timeline.duration() * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!("query time {} s is past the end of the timeline", times[q])));
        }
        out.push(rel.map_or(0.0, |r| r.z.abs()));
        q += 1;
    }
    Ok(out)
}

fn apply_relative(rel: &mut Option<Relative>, pulse: PulseKind, v0: f64) {
    match pulse {
        PulseKind::BeamSplitter => *rel = Some(Relative { z: 0.0, v: v0 }),
        PulseKind::Mirror => {
            if let Some(r) = rel.as_mut() {
                r.v = -r.v;
            }
        }
        PulseKind::Collimate => {}
    }
}

/// Sampled twisting rates along a timeline.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChiTrace {
    pub times: Vec<f64>,
    pub radii: Vec<[f64; 3]>,
    pub chi_self: Vec<f64>,
    pub chi_cross: Vec<f64>,
    pub chi_eff: Vec<f64>,
    pub separation: Vec<f64>,
    /// Running `∫ χ_eff dt` from release, integrated alongside the
    /// scaling equations. May be left empty for hand-built traces.
    pub tau: Vec<f64>,
}

impl ChiTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, t: f64, radii: [f64; 3], separation: f64, tau: f64, params: &PhysicalParams) {
        let s = chi_self(radii, params);
        let c = chi_cross(radii, separation, params);
        self.times.push(t);
        self.radii.push(radii);
        self.chi_self.push(s);
        self.chi_cross.push(c);
        self.chi_eff.push(chi_effective(params.pulse_type, s, c));
        self.separation.push(separation);
        self.tau.push(tau);
    }
}

/// Runs the scaling dynamics through the whole timeline, starting from the
/// ground state of the trap `omega0`, and samples the twisting rates on the
/// integrator grid (spacing at most `dt_max`). Pulses produce two samples
/// at the same time, before and after.
pub fn chi_trace(timeline: &Timeline, params: &PhysicalParams, omega0: [f64; 3], dt_max: f64) -> Result<ChiTrace> {
    let r0 = initial_tf_radii(params, omega0)?;
    let v0 = params.recoil_velocity();
    let (intervals, _) = timeline.intervals();
    let mut state = ScalingState::at_rest(r0);
    let mut rel: Option<Relative> = None;
    let mut trace = ChiTrace::default();
    let mut tau = 0.0;
    for iv in &intervals {
        for p in &iv.pulses {
            apply_relative(&mut rel, *p, v0);
            if *p == PulseKind::Collimate {
                state.lambda_dot = [0.0; 3];
            }
        }
        let seg = TrapSegment { duration: iv.end - iv.start, omega: iv.omega, label: SegmentLabel::Free };
        state.t = iv.start;
        let separation = |t: f64| rel.map_or(0.0, |r| r.advance(t - iv.start, iv.omega[2]).z.abs());
        let rate = |t: f64, radii: [f64; 3]| {
            chi_effective(params.pulse_type, chi_self(radii, params), chi_cross(radii, separation(t), params))
        };
        let path = scaling_path(&state, tau, &seg, omega0, dt_max, rate)?;
        for (s, tau_s) in &path {
            trace.push(s.t, s.radii(), separation(s.t), *tau_s, params);
        }
        let (last, last_tau) = *path.last().expect("trajectory holds its start point");
        state = last;
        tau = last_tau;
        rel = rel.map(|r| r.advance(iv.end - iv.start, iv.omega[2]));
    }
    Ok(trace)
}

/// `∫ χ_eff dt` over `window`, clipped to the trace; an empty window gives 0.
///
/// Whole steps inside the window use the running integral when the trace
/// carries one, and the trapezoidal rule otherwise. Steps cut by a window
/// edge always use the trapezoidal rule on the cut part.
pub fn accumulate_tau(trace: &ChiTrace, window: (f64, f64)) -> f64 {
    let (a, b) = window;
    if !(b > a) || trace.len() < 2 {
        return 0.0;
    }
    let t = &trace.times;
    let y = &trace.chi_eff;
    let running = trace.tau.len() == t.len();
    let mut total = 0.0;
    for i in 0..t.len() - 1 {
        let (t0, t1) = (t[i], t[i + 1]);
        if t1 <= t0 {
            continue;
        }
        let lo = t0.max(a);
        let hi = t1.min(b);
        if hi <= lo {
            continue;
        }
        if running && lo == t0 && hi == t1 {
            total += trace.tau[i + 1] - trace.tau[i];
        } else {
            let at = |x: f64| y[i] + (y[i + 1] - y[i]) * (x - t0) / (t1 - t0);
            total += 0.5 * (at(lo) + at(hi)) * (hi - lo);
        }
    }
    total
}
