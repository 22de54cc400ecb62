//! Simulation of delta-kick squeezing in free-fall atom interferometry.
//!
//! * [`collective_spin`]: exact Dicke-basis engine for twisting, rotations and
//!   echo sequences, with error-propagation sensitivities.
//! * [`gain_formulas`]: closed-form gains for linear and echo readout at any
//!   atom number, plus the expectation-value table they are built from.
//! * [`meanfield`]: Thomas–Fermi scaling dynamics and the twisting rates
//!   they produce along a trap and pulse timeline.
//! * [`sequence`]: the complete protocol, from trap timings to twists, tuned
//!   timings and the final gain.
//! * [`scan`]: parallel parameter grids and a seeded box maximiser over any
//!   [`sequence::ParamSet`].

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod collective_spin;
pub mod error;
pub mod gain_formulas;
pub mod meanfield;
mod numeric;
pub mod scan;
pub mod sequence;

pub use error::{Error, Result};

/// The user guide's Rust examples, compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/spin-engine.md")]
    struct SpinEngine;
    #[doc = include_str!("../../../book/src/gain-formulas.md")]
    struct GainFormulas;
    #[doc = include_str!("../../../book/src/meanfield.md")]
    struct Meanfield;
    #[doc = include_str!("../../../book/src/protocol.md")]
    struct Protocol;
    #[doc = include_str!("../../../book/src/scans.md")]
    struct Scans;
    #[doc = include_str!("../../../book/src/numerics.md")]
    struct Numerics;
}
