// `!(x > 0.0)` is used deliberately so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bergman;
pub mod domain;
pub mod error;
pub mod identity;
pub mod metric;
pub mod oracle;
pub mod parallel;
pub mod sampling;
pub mod specfn;
