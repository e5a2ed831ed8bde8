//! Two-time-scale system identification.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod filsub;
pub mod filtering;
pub mod par;
pub mod pfe;
pub mod poly;
pub mod signals;
pub mod tf;
pub mod zoh;

pub use dataset::TimeSeriesDataset;
pub use error::{Error, Result};
pub use tf::{TimeDomain, TransferFunction, TransferMatrix};
