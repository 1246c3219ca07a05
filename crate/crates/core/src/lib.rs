//! alab-core: an exact-arithmetic laboratory for abelian group computations.
//!
//! The crate provides, over arbitrary-precision integers and rationals:
//!
//! - integer matrix normal forms (Smith, Hermite) with unimodular transforms
//!   and integer linear-system solving ([`linalg`]);
//! - finitely generated abelian groups in invariant-factor form, subgroups,
//!   purity decisions with certificates, pure closures and divisible hulls
//!   ([`fg`]);
//! - height sequences, characteristics, types and rank-one groups
//!   ([`charac`]);
//! - finite formal direct sums of the standard atoms `Z`, `Z/n`, `Q`,
//!   Prüfer `Z(p^∞)`, the localization `Z_(p)` and a truncated-completion
//!   proxy, with element arithmetic and divisibility calculus
//!   ([`structured`]);
//! - Galois-type equality oracles over a base subgroup ([`gtype`]);
//! - linear equation systems over represented groups, streaming systems and
//!   an algebraic-compactness probe with re-verifiable certificates
//!   ([`systems`]);
//! - finite-stage limit-chain simulation with invariant tracking
//!   ([`chains`]);
//! - completely decomposable groups, witnessed Butler subgroups, the
//!   divisible-base amalgamation pushout and the instability demo
//!   ([`butler`]).
//!
//! All values are immutable after construction and all operations are pure
//! functions; everything is safe to move across threads. There is no
//! floating point anywhere: results are exact and deterministic.
//!
//! The [`oracle`] module holds independent brute-force reference
//! implementations (determinant-divisor invariant factors, bounded
//! exhaustive solvers, span intersection) used by the test suites to
//! cross-check the production algorithms; [`sampling`] provides the seeded
//! random instance generators those suites share.

pub mod butler;
pub mod cert;
pub mod chains;
pub mod charac;
pub mod fg;
pub mod gtype;
pub mod linalg;
pub mod matrix;
pub mod oracle;
pub mod primes;
pub mod sampling;
pub mod structured;
pub mod systems;

pub(crate) mod jsonutil;

/// Production integer scalar: arbitrary precision, no overflow ever.
pub type Int = num_bigint::BigInt;

/// Production rational scalar.
pub type Rat = num_rational::BigRational;

/// Integer matrix over the production scalar.
pub type IntMatrix = matrix::Matrix<Int>;

pub use linalg::{hermite_normal_form, smith_normal_form, solve_integer_system, SmithForm};

/// Handle to a group from any family supported by the height and equation
/// machinery.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupHandle {
    Fg(fg::FgGroup),
    RankOne(charac::RankOneGroup),
    Structured(structured::StructuredGroup),
}

/// An element paired with the family it lives in; coordinates for the
/// finitely generated family, a rational for rank-one groups, a structured
/// element otherwise.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementHandle {
    Coords(#[serde(with = "jsonutil::int_vec_serde")] Vec<Int>),
    Rational(#[serde(with = "jsonutil::rat_serde")] Rat),
    Structured(structured::GroupElement),
}
