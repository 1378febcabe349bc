//! Simulation and analysis of a covert helper-assisted countermeasure against
//! a reactive jammer: slot models, decoders, closed-form error bounds, the
//! adversary's detectors, alpha selection and the experiment harness.
//!
//! The numerical core is generic over [`Real`]; the aliases below fix it to
//! `f64`.

pub mod adversary;
pub mod bounds;
pub mod channel;
pub mod config;
pub mod decoders;
mod error;
pub mod harness;
pub mod numerics;
pub mod optimizer;
mod real;
pub mod schemes;

pub use error::{Error, Result};
pub use real::Real;

pub type Sample = num_complex::Complex<f64>;
pub type Params = schemes::SchemeParams<f64>;
pub type Crossover = schemes::CrossoverProbs<f64>;
pub type Breakdown = bounds::BoundBreakdown<f64>;
pub type Fading = channel::FadingDraw<f64>;
pub type Frame = schemes::TwoSlotFrame<f64>;
pub type Model = schemes::FrameModel<f64>;
pub type Qconst = numerics::QApproxConstants<f64>;
