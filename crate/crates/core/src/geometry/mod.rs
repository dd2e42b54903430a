//! Mutually-labelling balls and covers, margin super-level sets,
//! boundary expansions, dimension and content estimators, and the
//! mistake-bound formulas built from them.

mod bound;
pub(crate) use bound::nan_from_null;
mod cover;
mod dimension;
mod expansion;
mod ml;

pub use bound::{
    deviation_term, mistake_bound, rate_bound, BoundCurve, ClosedFormBound, ClosedFormConstants,
    CoverPoint, EmpiricalBound, RateBoundInputs,
};
pub use cover::{greedy_ml_cover, BallIndex, CoverOptions, CoverReport, LayerCount};
pub use dimension::{
    boundary_dim, box_counting_dim, fit_line, greedy_cover_count, minkowski_content,
    DimensionEstimate, LineFit, MinkowskiEstimate,
};
pub use expansion::{expansion_mass, low_margin_mass, segment_tube_in_box};
pub use ml::{mistakes_in_balls, ml_ball, post_visit_mistakes, verify_pairs, MLBall, PairCheck};
