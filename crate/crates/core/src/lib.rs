// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Dense linear algebra reads better with explicit indices.
#![allow(clippy::needless_range_loop)]

pub mod ara;
pub mod chain;
pub mod cli;
pub mod error;
pub mod formulation;
pub mod harness;
pub mod hura;
pub mod lp;
pub mod milp;
pub mod mining;
pub mod model;

pub use error::{Error, Result};

// Book chapters, compiled so their snippets stay in sync with the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/placement-model.md")]
    mod placement_model {}
    #[doc = include_str!("../../../book/src/lp.md")]
    mod lp {}
    #[doc = include_str!("../../../book/src/exact.md")]
    mod exact {}
    #[doc = include_str!("../../../book/src/ara.md")]
    mod ara {}
    #[doc = include_str!("../../../book/src/hura.md")]
    mod hura {}
    #[doc = include_str!("../../../book/src/mining.md")]
    mod mining {}
    #[doc = include_str!("../../../book/src/workflow.md")]
    mod workflow {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
