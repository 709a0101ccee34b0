//! Pointwise membrane-geometry kernel: metric, frames, causality, wave
//! operator in coordinate and null-frame form, and the rescaled-chart metric.

mod frame;
mod jet;
mod metric;
mod rescaled;
mod wave;

pub use frame::{frame_bundle, FrameBundle};
pub use jet::{Chart, Mat, SpacetimeJet, Ten3, Vect, MAX_DIM};
pub use metric::{
    causal_class, metric_from_jet, CausalClass, CausalVerdict, MembraneMetric, CAUSAL_TOL,
    DEGENERACY_THRESHOLD,
};
pub use rescaled::{g_tptp, g_up_tptp, rescaled_metric, to_null_chart};
pub use wave::{christoffels, wave_operator_coord, wave_operator_frame};
