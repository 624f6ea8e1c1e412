//! Covering numbers, submeasure classification, entropy inequalities and
//! concentration-of-measure experiments on finite Boolean set algebras.

pub mod algebra;
pub mod conclab;
pub mod covnum;
pub mod entropy;
pub mod error;
pub mod exact;
pub mod json;
pub mod metric;
pub mod submeasure;

pub use algebra::{AtomSet, Cover, GroundSet, Partition};
pub use error::{Error, Result};
pub use exact::Exact;
pub use submeasure::{AtomMeasure, Submeasure};
