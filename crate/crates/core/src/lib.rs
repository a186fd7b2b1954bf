//! Streaming inference for causal 1-D convolutional networks.
//!
//! * [`graph`]: layer lists, their text format, validation and the
//!   strided-cloned / time-shift rewrites.
//! * [`plan`]: the per-layer period, phase and lag schedule a graph encodes.
//! * [`oracle`]: whole-sequence reference evaluation.
//! * [`stream`]: frame-by-frame execution with cached partial states.
//! * [`meter`]: analytic and measured multiply-accumulate accounting.

mod error;
pub mod graph;
pub mod meter;
pub mod oracle;
pub mod plan;
pub mod series;
pub mod stream;
pub mod weights;

pub use error::{Error, Result};
pub use graph::{ActivationKind, GraphSpec, LayerKind, LayerSpec, Reconstruction};
pub use plan::{PlanMode, SoiPlan};
pub use series::Series;
pub use stream::{init_stream, PrecomputeReceipt, StepResult, StreamState};
pub use meter::MacReport;
pub use weights::WeightStore;
