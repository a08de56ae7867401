#![allow(dead_code, clippy::needless_range_loop)]

pub mod fixtures;
pub mod grid_oracle;
pub mod lp_oracle;
pub mod placement_oracle;
