pub mod channel;
pub mod error;
pub mod geometry;
pub mod sdp;
pub mod codebook;
pub mod benchmarks;
pub mod eval;
pub mod oracle;
pub mod config;
pub mod experiments;
pub mod persist;

pub use channel::{Direction, ReflectionCouplings, ReflectionPattern, Responder, C64};
pub use codebook::{AoConfig, Aggregation, Codebook, CodebookKind, SectorSpec};
pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use experiments::{run_experiment, ExperimentContext, ExperimentKind, ExperimentResult};
pub use geometry::{build_geometry, RadomeConfig, RadomeGeometry};
pub use sdp::SdpOptions;
