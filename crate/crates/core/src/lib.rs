//! Exact symbolic toolkit for quotients by rank-one foliations in positive
//! characteristic: sparse Laurent polynomial arithmetic over F_p, derivations
//! with restricted p-th powers, blow-up chart pullbacks, degree-truncated
//! invariant kernels, and exact-rational discrepancy ledgers.
//!
//! Everything is immutable and pure: values can be shared and evaluated
//! concurrently with no coordination.

pub mod blowup;
pub mod derivation;
pub mod error;
pub mod fp;
pub mod ledger;
pub mod parse;
pub mod quotient;
pub mod ring;

pub use blowup::{standard_chart, weighted_chart, ChartMap, DivisorEntry, DivisorSpec};
pub use derivation::{Derivation, Multiplicativity, Saturation};
pub use error::{Error, Result};
pub use ledger::{
    char3_cascade, classify_quadratic_quotient, family_cascade, image_divisor_coefficient,
    quotient_discrepancy, stable_volume, stable_volume_ample, Cascade, DiscrepancyRecord, Rat,
    SingClass, Verdict,
};
pub use parse::{parse_poly, parse_poly_any};
pub use quotient::{
    lift_invariant, mprimary_image_check, subalgebra_hilbert_match, truncated_kernel, KernelBasis,
    LiftOutcome, MPrimary,
};
pub use ring::{Ctx, Monomial, Poly, RingCtx};
