//! Capacities and optimal power allocations for arbitrarily varying channels:
//! double water filling for Gaussian product and colored-noise channels,
//! min-max capacity and symmetrizability analysis for discrete AVCs with
//! fixed parameters, and Monte Carlo jamming simulation.
//!
//! Capacities are reported in bits per channel use throughout; convert to
//! nats at the reporting layer with [`LogBase`].

pub mod discrete;
pub mod error;
pub mod fading;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod opt;
pub mod random;
pub mod sim;
pub mod spectral;
pub mod waterfill;

pub use error::{Error, Result};
pub use model::{
    load_spec, spec_from_json, spec_to_json, ChannelSpec, Constraints, DiscreteAvcSpec,
    FadingSpec, ParallelGaussianSpec, Psd, SpecKind, SpectralSpec,
};

/// Unit for reported information quantities. All internal computation is in
/// bits; nats are a fixed rescaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogBase {
    Bits,
    Nats,
}

impl LogBase {
    /// Convert a value computed in bits into this base.
    pub fn from_bits(self, bits: f64) -> f64 {
        match self {
            LogBase::Bits => bits,
            LogBase::Nats => bits * std::f64::consts::LN_2,
        }
    }
}
