//! Joint constructions placing two sampling schemes on one probability space.

mod screening;
mod urns;

pub use screening::{
    perturbed_value, rescreen_value, screen_stream, screening_coupling, ExtendableStream,
    ScreeningRecord, Screener,
};
pub use urns::{coupled_samples, polya_coupling, CoupledUrns, UrnStep, UrnTrace, TRACE_STEP_LIMIT};
