//! Bayes factors for informative hypotheses on regression coefficients,
//! evidence synthesis across studies, and the simulation harness that
//! exercises both.

pub mod bf;
pub mod dist;
pub mod glm;
pub mod hypothesis;
pub mod io;
pub mod linalg;
pub mod rng;
pub mod sim;
pub mod simgen;
pub mod synthesis;

pub use bf::{EvidenceRecord, FractionSpec};
pub use dist::CoefDistribution;
pub use glm::{Dataset, Family, FitResult};
pub use hypothesis::{Alternative, ConstraintSystem, HypothesisSet};
pub use synthesis::SynthesisState;
