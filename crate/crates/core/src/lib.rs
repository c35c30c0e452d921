// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geom;
pub mod synthgen;
pub mod votes;
pub mod cluster;
pub mod perimeter;
pub mod assembly;
pub mod metrics;
pub mod io;
pub mod render;
pub mod cli;
pub mod pipeline;
