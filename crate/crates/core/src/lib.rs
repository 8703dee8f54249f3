#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::large_enum_variant
)]

pub mod cli;
pub mod config;
pub mod data;
pub mod dual;
pub mod error;
pub mod estimates;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod level;
pub mod mollifier;
pub mod multiplier;
pub mod norms;
pub mod picard;
pub mod quadrature;
pub mod solver;
