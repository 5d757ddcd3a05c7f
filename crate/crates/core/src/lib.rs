//! Secret-key rates of Gaussian-modulated coherent-state CV-QKD over the
//! canonical forms of single-mode Gaussian channels.
//!
//! Units are shot-noise units (vacuum variance 1); rates are in bits per use.

pub mod canonical;
pub mod closed_form;
pub mod composable;
pub mod engine;
pub mod error;
pub mod estimation;
pub mod gaussian;
pub mod montecarlo;
pub mod numfmt;
pub mod protocol;

pub use canonical::{CanonicalForm, ChannelSpec, Dilation, EnvNoise, FormClass};
pub use composable::{ComposableConfig, ComposableResult, LogBase};
pub use engine::{asymptotic_rate, RateBreakdown};
pub use error::{Error, Result};
pub use estimation::{ChannelParams, PeConfig};
pub use protocol::{Detection, Direction, ProtocolConfig, Variant};
