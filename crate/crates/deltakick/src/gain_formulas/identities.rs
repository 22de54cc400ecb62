//! Closed-form expectation values in the x-polarised coherent state.
//!
//! Every entry is `⟨ψ₀| O |ψ₀⟩` for an operator word built from `S_±`, `S_z`
//! and the twisting shorthands
//!
//! ```text
//! W = exp[iτ(2S_z + 1)],   V = W² e^{2iτ} = exp[4iτ(S_z + 1)],
//! ```
//!
//! which arise from `U† S_+ U = S_+ W` with `U = exp(-iτ S_z²)`. The five
//! commutator entries are the building blocks of the echo slope and its
//! residual-twist correction; for those, `U` itself appears in the id.
//!
//! `⟨[S_y², U†S_yU]⟩` vanishes identically: the coherent state is invariant
//! under a half turn about `x`, and that turn flips the sign of the commutator.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

/// One factor of an operator word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    Raise(u32),
    Lower(u32),
    Sz(u32),
    W,
    WDag,
    V,
    VDag,
}

fn e(x: f64) -> C {
    C::from_polar(1.0, x)
}

fn re(x: f64) -> C {
    C::new(x, 0.0)
}

fn im(x: f64) -> C {
    C::new(0.0, x)
}

/// `cos(θ)^p` for integer-valued `p`, keeping the sign of odd powers.
pub(crate) fn cos_pow(theta: f64, p: f64) -> f64 {
    if p == 0.0 {
        return 1.0;
    }
    let c = theta.cos();
    if c == 0.0 {
        return if p > 0.0 { 0.0 } else { f64::INFINITY };
    }
    let odd = (p.rem_euclid(2.0) - 1.0).abs() < 0.5;
    let sign = if c < 0.0 && odd { -1.0 } else { 1.0 };
    sign * (p * ln_abs_cos(theta)).exp()
}

/// `ln|cos θ|` without cancellation near `cos θ = ±1`.
pub(crate) fn ln_abs_cos(theta: f64) -> f64 {
    if theta.cos() >= 0.0 {
        let h = (0.5 * theta).sin();
        (-2.0 * h * h).ln_1p()
    } else {
        let h = (0.5 * theta).cos();
        (-2.0 * h * h).ln_1p()
    }
}

type Eval = fn(f64, f64) -> C;

/// Expectation-value table. Ids are operator words read left to right.
const TABLE: &[(&str, Eval)] = &[
    ("S+ W", |s, t| re(s * cos_pow(t, 2.0 * s - 1.0))),
    ("S+^2 W", |s, t| e(-t) * (s / 2.0 * (2.0 * s - 1.0) * cos_pow(t, 2.0 * s - 2.0))),
    ("S+^3 W", |s, t| e(-2.0 * t) * (s / 2.0 * (2.0 * s - 1.0) * (s - 1.0) * cos_pow(t, 2.0 * s - 3.0))),
    ("S+ W†", |s, t| re(s * cos_pow(t, 2.0 * s - 1.0))),
    ("S+ W Sz", |s, t| {
        C::new(-s / 2.0 * cos_pow(t, 2.0 * s - 1.0), s / 2.0 * (2.0 * s - 1.0) * t.sin() * cos_pow(t, 2.0 * s - 2.0))
    }),
    ("S+ W† Sz", |s, t| {
        C::new(-s / 2.0 * cos_pow(t, 2.0 * s - 1.0), -s / 2.0 * (2.0 * s - 1.0) * t.sin() * cos_pow(t, 2.0 * s - 2.0))
    }),
    ("Sz W", |s, t| im(s * t.sin() * cos_pow(t, 2.0 * s - 1.0)) * e(t)),
    ("S+ W S-", |s, t| {
        re(s * cos_pow(t, 2.0 * s - 1.0)) + e(-t) * (s / 2.0 * (2.0 * s - 1.0) * cos_pow(t, 2.0 * s - 2.0))
    }),
    ("S+^2 W† S-", |s, t| {
        e(t) * (s * (2.0 * s - 1.0) * cos_pow(t, 2.0 * s - 2.0))
            + e(2.0 * t) * (s / 2.0 * (2.0 * s - 1.0) * (s - 1.0) * cos_pow(t, 2.0 * s - 3.0))
    }),
    ("Sz^2 W", |s, t| e(t) * (s / 2.0 * cos_pow(t, 2.0 * s - 2.0) * (1.0 - s + s * (2.0 * t).cos()))),
    ("S+^2 Sz W", |s, t| (re(s - 2.0) - e(-2.0 * t) * s) * (s / 4.0 * (2.0 * s - 1.0) * cos_pow(t, 2.0 * s - 3.0))),
    ("S+ Sz W S-", |s, t| {
        (re(1.0 + s * (2.0 * s - 5.0)) + e(2.0 * t) * (s - 1.0) - e(-2.0 * t) * (2.0 * s * s))
            * (s / 4.0 * cos_pow(t, 2.0 * s - 3.0))
    }),
    ("S+^2 Sz V W", |s, t| {
        (e(2.0 * t) * (s - 2.0) - e(-4.0 * t) * s) * (s / 4.0 * (2.0 * s - 1.0) * cos_pow(3.0 * t, 2.0 * s - 3.0))
    }),
    ("S+^4 V W", |s, t| {
        e(-7.0 * t) * (s / 4.0 * (2.0 * s - 1.0) * (s - 1.0) * (2.0 * s - 3.0) * cos_pow(3.0 * t, 2.0 * s - 4.0))
    }),
    ("S+^2 V W† S-^2", |s, t| {
        (e(3.0 * t) + e(-t) * (s * (2.0 * s - 1.0)) + e(t) * (4.0 * s - 2.0))
            * (s / 4.0 * (2.0 * s - 1.0) * cos_pow(t, 2.0 * s - 4.0))
    }),
    ("S+^3 V W S-", |s, t| {
        (e(-t) * 3.0 + e(-7.0 * t) * (2.0 * s))
            * (s / 4.0 * (2.0 * s - 1.0) * (s - 1.0) * cos_pow(3.0 * t, 2.0 * s - 4.0))
    }),
    ("S+^3 V W† S-", |s, t| {
        (e(t) * 3.0 + e(-t) * (2.0 * s)) * (s / 4.0 * (2.0 * s - 1.0) * (s - 1.0) * cos_pow(t, 2.0 * s - 4.0))
    }),
    ("S+^2 Sz V W†", |s, t| {
        (e(2.0 * t) * (s - 2.0) - re(s)) * (s / 4.0 * (2.0 * s - 1.0) * cos_pow(t, 2.0 * s - 3.0))
    }),
    ("S+^2 V W†", |s, t| e(t) * (s / 2.0 * (2.0 * s - 1.0) * cos_pow(t, 2.0 * s - 2.0))),
    ("S+ Sz V† W S-", |s, t| {
        let inner = re(1.0) - (re(5.0) + (e(2.0 * t) - 1.0) * (2.0 * s)) * s;
        (re(s - 1.0) + e(2.0 * t) * inner) * e(-4.0 * t) * (s / 4.0 * cos_pow(t, 2.0 * s - 3.0))
    }),
    ("S+ V† W S-", |s, t| (e(-t) * (2.0 * s) + e(-3.0 * t)) * (s / 2.0 * cos_pow(t, 2.0 * s - 2.0))),
    ("Sz^2 V† W", |s, t| e(-3.0 * t) * (s / 2.0 * (1.0 - s + s * (2.0 * t).cos()) * cos_pow(t, 2.0 * s - 2.0))),
    ("Sz V† W", |s, t| im(-s * t.sin() * cos_pow(t, 2.0 * s - 1.0)) * e(-3.0 * t)),
    ("S+^2 V W", |s, t| e(-t) * (s / 2.0 * (2.0 * s - 1.0) * cos_pow(3.0 * t, 2.0 * s - 2.0))),
    ("S+^3 W S-", |s, t| {
        (e(-3.0 * t) * (2.0 * s) + e(-t) * 3.0) * (s / 4.0 * (2.0 * s - 1.0) * (s - 1.0) * cos_pow(t, 2.0 * s - 4.0))
    }),
    ("S+^2 W S-^2", |s, t| {
        (e(t) + e(-3.0 * t) * (s * (2.0 * s - 1.0)) + e(-t) * (4.0 * s - 2.0))
            * (s / 4.0 * (2.0 * s - 1.0) * cos_pow(t, 2.0 * s - 4.0))
    }),
    ("S+", |s, _| re(s)),
    ("S+^2", |s, _| re(s / 2.0 * (2.0 * s - 1.0))),
    ("S+ V", |s, t| e(2.0 * t) * (s * cos_pow(2.0 * t, 2.0 * s - 1.0))),
    ("S+^2 V", |s, t| re(s / 2.0 * (2.0 * s - 1.0) * cos_pow(2.0 * t, 2.0 * s - 2.0))),
    ("S+^3 V", |s, t| e(-2.0 * t) * (s / 2.0 * (2.0 * s - 1.0) * (s - 1.0) * cos_pow(2.0 * t, 2.0 * s - 3.0))),
    ("S+^4 V", |s, t| {
        e(-4.0 * t) * (s / 4.0 * (2.0 * s - 1.0) * (s - 1.0) * (2.0 * s - 3.0) * cos_pow(2.0 * t, 2.0 * s - 4.0))
    }),
    ("S+ Sz", |s, _| re(-s / 2.0)),
    ("S+^2 Sz", |s, _| re(-s / 2.0 * (2.0 * s - 1.0))),
    ("Sz V", |s, t| im(s * (2.0 * t).sin() * cos_pow(2.0 * t, 2.0 * s - 1.0)) * e(4.0 * t)),
    ("Sz^2 V", |s, t| e(4.0 * t) * (s / 2.0 * (s * (4.0 * t).cos() - (s - 1.0)) * cos_pow(2.0 * t, 2.0 * s - 2.0))),
    ("S+ Sz V", |s, t| {
        let c = cos_pow(2.0 * t, 2.0 * s - 2.0);
        e(4.0 * t) * (-s / 2.0 * c) + im(s * s * (2.0 * t).sin() * c) * e(2.0 * t)
    }),
    ("S+^2 Sz V", |s, t| {
        C::new(
            -s / 2.0 * (2.0 * s - 1.0) * cos_pow(2.0 * t, 2.0 * s - 2.0),
            s / 2.0 * (2.0 * s - 1.0) * (s - 1.0) * (2.0 * t).sin() * cos_pow(2.0 * t, 2.0 * s - 3.0),
        )
    }),
    ("S+^2 V S-", |s, t| {
        (re(s) + e(4.0 * t)) * e(-2.0 * t) * (s / 2.0 * (2.0 * s - 1.0) * cos_pow(2.0 * t, 2.0 * s - 3.0))
    }),
    ("S+^2 V S-^2", |s, t| {
        (e(4.0 * t) + re(2.0 * (2.0 * s - 1.0)) + e(-4.0 * t) * (s * (2.0 * s - 1.0)))
            * (s / 4.0 * (2.0 * s - 1.0) * cos_pow(2.0 * t, 2.0 * s - 4.0))
    }),
    ("S+ Sz S-", |s, _| re(-s * s)),
    ("S+ Sz V S-", |s, t| {
        (e(6.0 * t) * (s - 1.0) + e(2.0 * t) * (1.0 - 5.0 * s) + im(4.0 * s * s * (2.0 * t).sin()))
            * (s / 4.0 * cos_pow(2.0 * t, 2.0 * s - 3.0))
    }),
    ("S+ V S-", |s, t| {
        re(s / 2.0 * (2.0 * s - 1.0) * cos_pow(2.0 * t, 2.0 * s - 2.0))
            + e(2.0 * t) * (s * cos_pow(2.0 * t, 2.0 * s - 1.0))
    }),
];

/// Commutator and product expectations used by the echo readout.
const GROUPED: &[(&str, Eval)] = &[
    ("[Sy, U† Sy U]", |s, t| im(s * (2.0 * s - 1.0) * t.sin() * cos_pow(t, 2.0 * s - 2.0))),
    ("[Sy^2, U† Sy U]", |_, _| re(0.0)),
    ("[Sy, U† Sy^2 U]", |_, _| re(0.0)),
    ("[Sy^2, U† Sy^2 U]", |s, t| {
        im(s * (s - 1.0) * (2.0 * s - 1.0) * (2.0 * t).sin() * cos_pow(2.0 * t, 2.0 * s - 3.0))
    }),
    ("U† Sy U Sy U† Sy^2 U + U† Sy^2 U Sy U† Sy U", |s, t| {
        let a = -s / 8.0
            * (2.0 * s - 1.0)
            * cos_pow(3.0 * t, 2.0 * s - 3.0)
            * ((2.0 * s - 1.0) * (2.0 * t).cos() + s * (4.0 * t).cos());
        let b = s / 8.0
            * cos_pow(t, 2.0 * s - 3.0)
            * (1.0 - 4.0 * s + 8.0 * s * s + (-1.0 + 2.0 * s + 4.0 * s * s) * (2.0 * t).cos()
                - 3.0 * (s - 1.0) * (2.0 * s - 1.0) * (4.0 * t).cos());
        re(a + b)
    }),
];

/// Ids of the plain expectation-value table, in table order.
pub fn table_ids() -> impl Iterator<Item = &'static str> {
    TABLE.iter().map(|(id, _)| *id)
}

/// Ids of the five grouped commutator/product results.
pub fn grouped_ids() -> impl Iterator<Item = &'static str> {
    GROUPED.iter().map(|(id, _)| *id)
}

/// Evaluates the closed form registered under `id` at spin `s` and twist `tau`.
pub fn supplemental_identity(id: &str, s: f64, tau: f64) -> Result<C> {
    if !(s > 0.0) || (2.0 * s).fract() != 0.0 {
        return Err(Error::InvalidArgument(format!("spin must be a positive half-integer, got {s}")));
    }
    TABLE
        .iter()
        .chain(GROUPED)
        .find(|(key, _)| *key == id)
        .map(|(_, f)| f(s, tau))
        .ok_or_else(|| Error::InvalidArgument(format!("unknown identity `{id}`")))
}

/// Parses a table id into its factors, left to right.
///
/// Grouped ids are not operator words and return an error.
pub fn operator_word(id: &str) -> Result<Vec<Factor>> {
    if !TABLE.iter().any(|(key, _)| *key == id) {
        return Err(Error::InvalidArgument(format!("`{id}` is not a plain operator word")));
    }
    id.split_whitespace()
        .map(|tok| {
            let (head, power) = match tok.split_once('^') {
                Some((h, p)) => (h, p.parse::<u32>().map_err(|_| Error::InvalidArgument(tok.into()))?),
                None => (tok, 1),
            };
            Ok(match head {
                "S+" => Factor::Raise(power),
                "S-" => Factor::Lower(power),
                "Sz" => Factor::Sz(power),
                "W" => Factor::W,
                "W†" => Factor::WDag,
                "V" => Factor::V,
                "V†" => Factor::VDag,
                _ => return Err(Error::InvalidArgument(format!("bad factor `{tok}`"))),
            })
        })
        .collect()
}
