//! Effective capacity and statistical delay analysis of a two-user downlink
//! NOMA pair operating with short packets.
//!
//! The crate is organised bottom-up:
//!
//! * [`specfun`] and [`quad`]: special functions and adaptive quadrature.
//! * [`channel`]: ordered Rayleigh power gains and the NOMA SINR/SNR maps.
//! * [`fblrate`]: the finite-blocklength rate and the effective-capacity kernel.
//! * [`eccalc`]: Monte-Carlo, quadrature and closed-form effective capacity.
//! * [`delay`]: queueing-delay violation probability.
//! * [`queuesim`]: a block-fading fluid queue simulator used to check the
//!   analytical tail and delay laws empirically.
//!
//! Rates and effective capacities are reported in bits per channel use and QoS
//! exponents are per bit.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod channel;
pub mod delay;
pub mod eccalc;
mod error;
pub mod fblrate;
pub mod quad;
pub mod queuesim;
pub mod specfun;
pub mod sum;

pub use channel::{GainSample, Role, SystemConfig, UserParams};
pub use error::{Error, Result};

pub use fblrate::{KernelParams, KernelVariant};
pub use eccalc::{Diagnostics, EcResult, EvalControls, Method};
