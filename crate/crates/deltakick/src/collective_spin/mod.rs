//! Exact collective-spin dynamics in the Dicke basis.
//!
//! States live in the symmetric subspace of `N` two-level atoms, spanned by
//! `|S, m⟩` with `S = N/2`. Amplitudes are stored in order of decreasing `m`,
//! so index `k` holds `m = S - k`.
//!
//! Conventions used throughout the crate:
//!
//! * twisting is `exp(-i τ S_z²)`;
//! * a rotation by `angle` about `axis` is `exp(+i·angle·S_axis)`, so the
//!   interferometer phase `exp(i θ S_y)` is `rotation(Y, θ)` and turns the
//!   x-polarised coherent state towards `+z`;
//! * the interferometer block with a residual twist is
//!   `exp(i θ S_y) exp(-i τ_AI S_y²)`, the same sign as the preparation twist.

mod chebyshev;

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use chebyshev::Generator;

/// Default largest atom number the exact engine accepts.
pub const DEFAULT_ENGINE_CAP: usize = 4096;

/// Default finite-difference step for [`slope_at_zero`].
pub const DEFAULT_SLOPE_STEP: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::InvalidArgument(format!("unknown rotation axis `{other}`"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// A rotation `exp(i·angle·S_axis)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    pub axis: Axis,
    pub angle: f64,
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation { axis: Axis::Z, angle: 0.0 };

    pub fn new(axis: Axis, angle: f64) -> Self {
        Rotation { axis, angle }
    }
}

/// Symmetric-subspace state of `N` atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct DickeState {
    amps: Vec<Complex64>,
}

impl DickeState {
    /// Wraps raw amplitudes ordered by decreasing `m`. The vector must have
    /// length `N + 1` with `N >= 1` and unit norm.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::InvalidArgument("a Dicke state needs at least two amplitudes".into()));
        }
        let norm: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("amplitudes have norm² {norm}, expected 1")));
        }
        Ok(DickeState { amps })
    }

    pub fn atom_number(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn spin(&self) -> f64 {
        self.atom_number() as f64 / 2.0
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Magnetic quantum number stored at index `k`.
    pub fn m_at(&self, k: usize) -> f64 {
        self.spin() - k as f64
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &DickeState) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    fn with_phases(&self, phase: impl Fn(f64) -> f64) -> DickeState {
        let s = self.spin();
        let amps =
            self.amps.iter().enumerate().map(|(k, c)| c * Complex64::from_polar(1.0, phase(s - k as f64))).collect();
        DickeState { amps }
    }
}

/// Coherent spin state polarised along `+x`: `c_{S-n} = 2^{-S} sqrt(binom(N, n))`.
///
/// Construction works in log space and is valid for very large `N`; only the
/// dynamical operations are subject to the engine cap.
pub fn coherent_state(n: usize) -> Result<DickeState> {
    if n == 0 {
        return Err(Error::InvalidArgument("atom number must be positive".into()));
    }
    let half_ln2 = 0.5 * n as f64 * std::f64::consts::LN_2;
    let mut ln_binom = 0.0;
    let mut amps = Vec::with_capacity(n + 1);
    for k in 0..=n {
        if k > 0 {
            ln_binom += ((n + 1 - k) as f64).ln() - (k as f64).ln();
        }
        amps.push(Complex64::new((0.5 * ln_binom - half_ln2).exp(), 0.0));
    }
    // Summing logs over many orders leaves a tiny drift; renormalise.
    let norm = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in &mut amps {
        *c /= norm;
    }
    Ok(DickeState { amps })
}

/// One-axis twisting `exp(-i τ S_z²)`.
pub fn apply_twist(state: &DickeState, tau: f64) -> DickeState {
    state.with_phases(|m| -tau * m * m)
}

/// First and second moments of the collective spin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinMoments {
    pub mean_x: f64,
    pub mean_y: f64,
    pub mean_z: f64,
    /// Symmetrised `½⟨S_i S_j + S_j S_i⟩`, indices ordered x, y, z.
    pub second: [[f64; 3]; 3],
    pub variance_z: f64,
    pub variance_y: f64,
}

/// Exact moments via ladder-operator action.
pub fn moments(state: &DickeState) -> SpinMoments {
    let n = state.atom_number();
    let psi = state.amplitudes();
    let a = chebyshev::ladder_coefficients(n);
    let s = state.spin();
    let zero = Complex64::new(0.0, 0.0);
    let mut sx = vec![zero; n + 1];
    let mut sy = vec![zero; n + 1];
    let mut sz = vec![zero; n + 1];
    for j in 0..=n {
        let up = if j < n { psi[j + 1] * a[j + 1] } else { zero };
        let down = if j > 0 { psi[j - 1] * a[j] } else { zero };
        sx[j] = (up + down) * 0.5;
        let d = up - down;
        sy[j] = Complex64::new(d.im, -d.re) * 0.5;
        sz[j] = psi[j] * (s - j as f64);
    }
    let dot = |u: &[Complex64], v: &[Complex64]| -> f64 { u.iter().zip(v).map(|(p, q)| (p.conj() * q).re).sum() };
    let vecs = [&sx, &sy, &sz];
    let mean = [dot(psi, &sx), dot(psi, &sy), dot(psi, &sz)];
    let mut second = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let v = dot(vecs[i], vecs[j]);
            second[i][j] = v;
            second[j][i] = v;
        }
    }
    SpinMoments {
        mean_x: mean[0],
        mean_y: mean[1],
        mean_z: mean[2],
        second,
        variance_z: (second[2][2] - mean[2] * mean[2]).max(0.0),
        variance_y: (second[1][1] - mean[1] * mean[1]).max(0.0),
    }
}

/// Twist, phase and readout settings of a (possibly echoed) Ramsey sequence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EchoSpec {
    pub tau1: f64,
    pub theta: f64,
    pub tau_ai: f64,
    pub tau2: f64,
    pub pre_rotation: Rotation,
    pub final_rotation: Rotation,
}

impl EchoSpec {
    /// Linear readout: twist, rotate the squeezed ellipse about `x` by
    /// `pre_angle`, apply the phase and count `S_z`.
    pub fn linear(tau: f64, pre_angle: f64) -> Self {
        EchoSpec {
            tau1: tau,
            theta: 0.0,
            tau_ai: 0.0,
            tau2: 0.0,
            pre_rotation: Rotation::new(Axis::X, pre_angle),
            final_rotation: Rotation::IDENTITY,
        }
    }

    /// Interaction-based readout: twist, phase (with residual twist), second
    /// twist, then a quarter turn about `x` so that counting `S_z` measures
    /// the `S_y` component of the echoed state.
    pub fn echo(tau1: f64, tau_ai: f64, tau2: f64) -> Self {
        EchoSpec {
            tau1,
            theta: 0.0,
            tau_ai,
            tau2,
            pre_rotation: Rotation::IDENTITY,
            final_rotation: Rotation::new(Axis::X, -FRAC_PI_2),
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    fn validate(&self) -> Result<()> {
        let all = [self.tau1, self.theta, self.tau_ai, self.tau2, self.pre_rotation.angle, self.final_rotation.angle];
        if all.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("non-finite echo parameter in {self:?}")))
        }
    }
}

/// Exact engine with an upper bound on the atom number.
///
/// Rotations about `x` and `y` cost `O(N²)` per call, so the cap keeps the
/// engine in its role as a desk-scale reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Engine {
    cap: usize,
}

impl Default for Engine {
    fn default() -> Self {
        Engine { cap: DEFAULT_ENGINE_CAP }
    }
}

impl Engine {
    pub fn with_cap(cap: usize) -> Self {
        Engine { cap }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    fn check(&self, n: usize) -> Result<()> {
        if n > self.cap {
            Err(Error::Capacity { n, cap: self.cap })
        } else {
            Ok(())
        }
    }

    pub fn rotate(&self, state: &DickeState, rotation: Rotation) -> Result<DickeState> {
        self.check(state.atom_number())?;
        if !rotation.angle.is_finite() {
            return Err(Error::InvalidArgument("rotation angle must be finite".into()));
        }
        if rotation.angle == 0.0 {
            return Ok(state.clone());
        }
        let amps = match rotation.axis {
            // exp(i φ S_z) with m ordered as stored
            Axis::Z => return Ok(state.with_phases(|m| rotation.angle * m)),
            Axis::X => chebyshev::rotate(state.amplitudes(), Generator::X, rotation.angle),
            Axis::Y => chebyshev::rotate(state.amplitudes(), Generator::Y, rotation.angle),
        };
        Ok(DickeState { amps })
    }

    /// `exp(i θ S_y) exp(-i τ_AI S_y²)`, applied exactly by conjugating a
    /// diagonal phase with the quarter turn about `x` that maps `S_z` to `S_y`.
    pub fn phase_block(&self, state: &DickeState, theta: f64, tau_ai: f64) -> Result<DickeState> {
        if tau_ai == 0.0 {
            return self.rotate(state, Rotation::new(Axis::Y, theta));
        }
        // R = exp(-i π/2 S_x) satisfies R† S_z R = S_y.
        let rotated = self.rotate(state, Rotation::new(Axis::X, -FRAC_PI_2))?;
        let phased = rotated.with_phases(|m| theta * m - tau_ai * m * m);
        self.rotate(&phased, Rotation::new(Axis::X, FRAC_PI_2))
    }

    /// Output state of the sequence described by `spec`, starting from the
    /// x-polarised coherent state.
    pub fn echo_state(&self, n: usize, spec: &EchoSpec) -> Result<DickeState> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("echo sequence needs N >= 2, got {n}")));
        }
        self.check(n)?;
        spec.validate()?;
        let psi = apply_twist(&coherent_state(n)?, spec.tau1);
        let psi = self.rotate(&psi, spec.pre_rotation)?;
        let psi = self.phase_block(&psi, spec.theta, spec.tau_ai)?;
        let psi = apply_twist(&psi, spec.tau2);
        self.rotate(&psi, spec.final_rotation)
    }

    pub fn run_echo(&self, n: usize, spec: &EchoSpec) -> Result<SpinMoments> {
        Ok(moments(&self.echo_state(n, spec)?))
    }

    /// `d⟨S_z⟩/dθ` at `spec.theta` by a central difference with one
    /// Richardson extrapolation step.
    pub fn slope_at_zero(&self, n: usize, spec: &EchoSpec, step: f64) -> Result<f64> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {step}")));
        }
        let mean_z =
            |offset: f64| -> Result<f64> { Ok(self.run_echo(n, &spec.with_theta(spec.theta + offset))?.mean_z) };
        let central = |h: f64| -> Result<f64> { Ok((mean_z(h)? - mean_z(-h)?) / (2.0 * h)) };
        let coarse = central(step)?;
        let fine = central(0.5 * step)?;
        Ok((4.0 * fine - coarse) / 3.0)
    }

    /// Phase uncertainty and gain of the sequence, evaluated at `spec.theta`.
    pub fn echo_sensitivity(&self, n: usize, spec: &EchoSpec, delta_n: f64) -> Result<(f64, f64)> {
        let m = self.run_echo(n, spec)?;
        let slope = self.slope_at_zero(n, spec, DEFAULT_SLOPE_STEP)?;
        sensitivity(&m, slope, n, delta_n)
    }
}

/// Rotation with the default engine.
pub fn apply_rotation(state: &DickeState, axis: Axis, angle: f64) -> Result<DickeState> {
    Engine::default().rotate(state, Rotation::new(axis, angle))
}

/// Output moments of an echo sequence with the default engine.
pub fn run_echo(n: usize, spec: &EchoSpec) -> Result<SpinMoments> {
    Engine::default().run_echo(n, spec)
}

/// Signal slope with the default engine.
pub fn slope_at_zero(n: usize, spec: &EchoSpec, step: f64) -> Result<f64> {
    Engine::default().slope_at_zero(n, spec, step)
}

/// Error propagation with Gaussian detection noise of standard deviation
/// `delta_n` added to the measured `S_z`:
/// `Δθ² = (Var S_z + Δn²) / slope²` and `gain = 1 / (sqrt(N) Δθ)`.
pub fn sensitivity(moments: &SpinMoments, slope: f64, n: usize, delta_n: f64) -> Result<(f64, f64)> {
    if !(delta_n >= 0.0) {
        return Err(Error::InvalidArgument(format!("detection noise must be non-negative, got {delta_n}")));
    }
    if slope == 0.0 || !slope.is_finite() {
        return Err(Error::DivergentSensitivity);
    }
    let delta_theta = (moments.variance_z + delta_n * delta_n).sqrt() / slope.abs();
    let gain = 1.0 / ((n as f64).sqrt() * delta_theta);
    Ok((delta_theta, gain))
}
