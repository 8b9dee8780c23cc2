//! Continuous orbit equivalence and conjugacy of products of odometers and
//! finite cyclic actions.
//!
//! * [`supernatural`]: finitely supported supernatural numbers.
//! * [`intmat`]: integer matrices, Smith normal form, finite abelian groups.
//! * [`dynamics`]: product systems and their finite truncations.
//! * [`cocycle`]: locally constant maps, cocycles and their verification.
//! * [`decide`]: decision procedures and invariants.
//! * [`witness`]: explicit orbit equivalences and conjugacies.
//! * [`cert`]: JSON certificates.
//! * [`corpus`]: seeded random instances for cross-checks.

pub mod cert;
pub mod cocycle;
pub mod corpus;
pub mod decide;
pub mod dynamics;
pub mod intmat;
pub mod par;
pub mod supernatural;
pub mod witness;

pub use dynamics::{Factor, GroupDesc, GroupElement, Point, SystemSpec};
pub use supernatural::{Exponent, Supernatural};
