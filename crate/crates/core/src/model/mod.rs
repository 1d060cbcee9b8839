//! Problem instances: constellations, channels, precoders and joint-symbol
//! enumeration.

mod channel;
mod constellation;
mod joint;
pub mod json;
mod scenario;

pub use channel::{difference_vector, effective_channel, interference_difference_vector, EffectiveChannel};
pub use constellation::{Constellation, ConstellationKind};
pub use joint::{EnumerationCap, JointSymbolTable};
pub use scenario::{ChannelSet, PrecoderSet, Scenario, ScenarioParts, POWER_SLACK};
