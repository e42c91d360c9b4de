//! Certifiers for δ-tolerant transitivity, mixing and hypercyclicity on
//! rotations, capped identities and weighted backward shifts.
//!
//! Arithmetic is exact over `ℚ`; every verdict records whether it holds
//! analytically, up to a finite horizon, or for a rational approximant.

pub mod certify;
pub mod criterion;
pub mod error;
pub mod exact;
pub mod metric;
pub mod rotation;
pub mod sampling;
pub mod scenario;
pub mod shifts;
pub mod sparse;
pub mod systems;
pub mod verdict;

pub use error::{Error, Result};
pub use exact::Q;
pub use metric::{Pt, Space};
pub use sparse::SparseVec;
pub use systems::SystemDef;
pub use verdict::{Scope, Status, Verdict};
