//! Choosing the number of blocks.

mod heuristic;
mod lambert;
mod lepski;
mod radii;

pub use heuristic::{derive_bounds_from_heuristic, heuristic_q, heuristic_trace};
pub use lambert::{lambert_w0, lambert_w0_exp};
pub use lepski::{
    build_ladder, lepski_index, lepski_select, rung_diagrams, CurvePoint, LepskiConfig, Pipeline, Rung, RungDistance,
    SelectionTrace,
};
pub use radii::{
    delta_max, radius_f, radius_f_violations, radius_g, radius_g_violations, radius_h, radius_p, StandardCondition,
};
