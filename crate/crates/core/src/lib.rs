// Negated comparisons such as `!(x > 0.0)` deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod geometry;
pub mod laser;
pub mod mesh;
pub mod poseest;
pub mod scaling;
pub mod simulate;
