//! Closed-form phase-sensitivity gains, valid at any atom number.
//!
//! All powers of cosines are evaluated through `ln|cos|` so that expressions
//! such as `cos(τ)^(N-1)` stay accurate at `N = 10⁶`.

mod identities;

use std::fmt;

pub(crate) use identities::{cos_pow, ln_abs_cos};
pub use identities::{grouped_ids, operator_word, supplemental_identity, table_ids, Factor};

use crate::collective_spin::{EchoSpec, Engine};
use crate::error::{Error, Result};
use crate::numeric::golden_section_max;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearGainInputs {
    pub n: u64,
    pub tau: f64,
    pub delta_n: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EchoGainInputs {
    pub n: u64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau_ai: f64,
    pub delta_n: f64,
}

impl EchoGainInputs {
    /// Perfect echo `τ₂ = -τ₁` without residual twist.
    pub fn symmetric(n: u64, tau: f64, delta_n: f64) -> Self {
        EchoGainInputs { n, tau1: tau, tau2: -tau, tau_ai: 0.0, delta_n }
    }

    fn is_symmetric(&self) -> bool {
        (self.tau1 + self.tau2).abs() <= 1e-12 * self.tau1.abs().max(self.tau2.abs())
    }
}

/// Which evaluator produced a gain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    ClosedForm,
    Perturbative,
    ExactEngine,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::ClosedForm => "closed_form",
            Branch::Perturbative => "perturbative",
            Branch::ExactEngine => "exact_engine",
        })
    }
}

/// Variance gain in dB, `20 log₁₀ G`.
pub fn gain_to_db(gain: f64) -> f64 {
    20.0 * gain.log10()
}

pub fn db_to_gain(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// `A = 1 - cos(2τ)^(N-2)` and `B = 4 sin τ cos(τ)^(N-2)` of the linear readout.
fn linear_terms(n: f64, tau: f64) -> (f64, f64) {
    let a = if (2.0 * tau).cos() > 0.0 {
        -((n - 2.0) * ln_abs_cos(2.0 * tau)).exp_m1()
    } else {
        1.0 - cos_pow(2.0 * tau, n - 2.0)
    };
    let b = 4.0 * tau.sin() * cos_pow(tau, n - 2.0);
    (a, b)
}

/// Minimal variance of the squeezed quadrature after the best rotation about `x`:
/// `σ² = N [4 + (N-1)(A - sqrt(A² + B²))] / 16`.
pub fn linear_min_variance(n: u64, tau: f64) -> f64 {
    let nf = n as f64;
    let (a, b) = linear_terms(nf, tau);
    let r = a.hypot(b);
    // A - r rewritten to avoid cancellation when B is small against A.
    let diff = if r == 0.0 { 0.0 } else { -b * b / (a + r) };
    nf * (4.0 + (nf - 1.0) * diff) / 16.0
}

/// Rotation angle about `x` that aligns the squeezed axis with `S_z`,
/// `ν = ½ atan2(B, A)`.
pub fn opportune_rotation(n: u64, tau: f64) -> f64 {
    let (a, b) = linear_terms(n as f64, tau);
    0.5 * b.atan2(a)
}

/// Linear-readout gain over the standard quantum limit with optimal
/// pre-rotation and Gaussian detection noise `delta_n`.
///
/// At `delta_n = 0` this is
/// `G = 2 cos(τ)^(N-1) / sqrt(4 + (N-1)(A - sqrt(A² + B²)))`.
pub fn gain_linear(inputs: &LinearGainInputs) -> f64 {
    let nf = inputs.n as f64;
    let slope = 0.5 * nf * cos_pow(inputs.tau, nf - 1.0);
    let var = linear_min_variance(inputs.n, inputs.tau);
    slope.abs() / (nf.sqrt() * (var + inputs.delta_n * inputs.delta_n).sqrt())
}

/// Echo gain for a perfect echo, `τ₂ = -τ₁` and no residual twist.
///
/// The echoed state at `θ = 0` is the coherent state again, so the measured
/// variance is `N/4` and `Q = |slope| / (sqrt(N) sqrt(N/4 + Δn²))` with
/// `slope = S(2S-1) sin τ cos(τ)^(2S-2)`.
pub fn gain_echo_exact(inputs: &EchoGainInputs) -> Result<f64> {
    if !inputs.is_symmetric() || inputs.tau_ai != 0.0 {
        return Err(Error::BranchMismatch(format!(
            "needs tau2 = -tau1 and tau_ai = 0, got tau1 = {}, tau2 = {}, tau_ai = {}",
            inputs.tau1, inputs.tau2, inputs.tau_ai
        )));
    }
    let nf = inputs.n as f64;
    let s = 0.5 * nf;
    let slope = s * (2.0 * s - 1.0) * inputs.tau1.sin() * cos_pow(inputs.tau1, 2.0 * s - 2.0);
    Ok(slope.abs() / (nf.sqrt() * (0.25 * nf + inputs.delta_n * inputs.delta_n).sqrt()))
}

/// First-order coefficient of `Q²` in the residual twist.
///
/// Expanding the interferometer block as `exp(i θ S_y)(1 + i η S_y²)`,
/// `Q² = (2S-1)² sin²τ cos(τ)^(4S-4) + 𝒜 η + O(η²)` with
///
/// ```text
/// 𝒜 = ¼(2S-1)² sin τ cos(τ)^(2S-2) { cos(3τ)^(2S-3) [S cos 4τ + (2S-1) cos 2τ - 3(S-1)]
///                                   + cos(τ)^(2S-3)  [3(S-1) cos 4τ - (2S-1) cos 2τ - S] }
///     + 4(S-1)(2S-1)³ sin³τ cos(τ)^(4S-3) cos(2τ)^(2S-3).
/// ```
///
/// The library's residual twist enters as `exp(-i τ_AI S_y²)`, so
/// `η = -τ_AI`.
pub fn first_order_coefficient(n: u64, tau: f64) -> f64 {
    let s = n as f64 / 2.0;
    let (st, c2, c4) = (tau.sin(), (2.0 * tau).cos(), (4.0 * tau).cos());
    let bracket = cos_pow(3.0 * tau, 2.0 * s - 3.0) * (s * c4 + (2.0 * s - 1.0) * c2 - 3.0 * (s - 1.0))
        + cos_pow(tau, 2.0 * s - 3.0) * (3.0 * (s - 1.0) * c4 - (2.0 * s - 1.0) * c2 - s);
    0.25 * (2.0 * s - 1.0).powi(2) * st * cos_pow(tau, 2.0 * s - 2.0) * bracket
        + 4.0
            * (s - 1.0)
            * (2.0 * s - 1.0).powi(3)
            * st.powi(3)
            * cos_pow(tau, 4.0 * s - 3.0)
            * cos_pow(2.0 * tau, 2.0 * s - 3.0)
}

/// Echo gain to first order in the residual twist, for `τ₁ = -τ₂ = tau`.
///
/// Intended for `|τ| ≲ 0.1 τ_opt` and `|τ_AI| ≲ 0.2 |τ|`; the `cos(3τ)`
/// powers change sign beyond `τ = π/6`, where the expansion is meaningless.
pub fn gain_echo_perturbative(n: u64, tau: f64, tau_ai: f64) -> f64 {
    let s = n as f64 / 2.0;
    let q0 = (2.0 * s - 1.0) * tau.sin() * cos_pow(tau, 2.0 * s - 2.0);
    (q0 * q0 - first_order_coefficient(n, tau) * tau_ai).max(0.0).sqrt()
}

/// Lowest-order small-angle form `Q² = ¼[(4τ - 3τ_AI)(N/2) - (2τ - τ_AI)]²`.
///
/// At `τ_AI = 0` it reduces to `Q = |τ(N-1)|`. For a non-zero residual twist
/// it is a rough guide only: the exact dynamics has no term linear in both
/// `τ` and `τ_AI`, which this form contains.
pub fn gain_echo_small_angle(n: u64, tau: f64, tau_ai: f64) -> f64 {
    let s = n as f64 / 2.0;
    0.5 * ((4.0 * tau - 3.0 * tau_ai) * s - (2.0 * tau - tau_ai)).abs()
}

/// Twist that maximises [`gain_linear`] at zero detection noise.
///
/// The maximiser follows `τ ≈ 1.2 N^(-2/3)` closely for large `N`. A log grid
/// around that law brackets the peak, and a golden-section search refines it.
pub fn tau_opt(n: u64) -> f64 {
    let nf = n.max(3) as f64;
    let g = |tau: f64| gain_linear(&LinearGainInputs { n, tau, delta_n: 0.0 });
    let centre = 1.2 * nf.powf(-2.0 / 3.0);
    let lo = centre / 50.0;
    let hi = (centre * 50.0).min(std::f64::consts::FRAC_PI_4);
    let steps: usize = 200;
    let ratio = (hi / lo).powf(1.0 / steps as f64);
    let grid: Vec<f64> = (0..=steps).map(|i| lo * ratio.powi(i as i32)).collect();
    let best = grid.iter().enumerate().max_by(|a, b| g(*a.1).total_cmp(&g(*b.1))).map(|(i, _)| i).unwrap_or(0);
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(steps)];
    golden_section_max(g, a, b, 1e-13 * centre).0
}

/// Echo gain for arbitrary `(τ₁, τ_AI, τ₂)`, choosing an evaluator.
///
/// Order of preference: the exact closed form when it applies; the exact
/// engine when `N` is within its cap; the first-order expansion for a near-
/// perfect echo at weak twist. Anything else is a capacity error rather than
/// a silent approximation.
pub fn gain_echo(inputs: &EchoGainInputs, engine: &Engine) -> Result<(f64, Branch)> {
    if inputs.is_symmetric() && inputs.tau_ai == 0.0 {
        return Ok((gain_echo_exact(inputs)?, Branch::ClosedForm));
    }
    let n = usize::try_from(inputs.n).unwrap_or(usize::MAX);
    if n <= engine.cap() {
        let spec = EchoSpec::echo(inputs.tau1, inputs.tau_ai, inputs.tau2);
        let (_, gain) = engine.echo_sensitivity(n, &spec, inputs.delta_n)?;
        return Ok((gain, Branch::ExactEngine));
    }
    let weak = inputs.tau1.abs() <= 0.1 * tau_opt(inputs.n) && inputs.tau_ai.abs() <= 0.2 * inputs.tau1.abs();
    if inputs.is_symmetric() && weak {
        let nf = inputs.n as f64;
        let q = gain_echo_perturbative(inputs.n, inputs.tau1, inputs.tau_ai);
        // The echoed state is close to the coherent state; add noise to its N/4.
        let noise = (0.25 * nf / (0.25 * nf + inputs.delta_n * inputs.delta_n)).sqrt();
        return Ok((q * noise, Branch::Perturbative));
    }
    Err(Error::Capacity { n, cap: engine.cap() })
}
