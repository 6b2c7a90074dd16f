//! Brute-force oracles tying the quadrature reading to the actual model:
//! exact logit decomposition, actual quadrature errors, clock and pizza
//! regressions, the identity component, the doubled-frequency term and
//! multi-seed aggregation.

pub mod actual;
pub mod decomposition;
pub mod identity;
pub mod regression;
pub mod secondary;
pub mod summary;

pub use actual::{actual_quadrature_error, component_errors, ActualError};
pub use decomposition::{logit_parts, LogitParts};
pub use identity::{identity_component, IdentityCoefficients, IdentityComponentFit};
pub use regression::{regress_logits, RegressionResult, Scope, Target};
pub use secondary::{secondary_contribution, SecondaryFit, SecondaryTerm};
pub use summary::{multi_seed_summary, seed_summary, MultiSeedSummary, SeedSummary};
