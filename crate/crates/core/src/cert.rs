//! Machine-checkable evidence objects.
//!
//! Every decision procedure in this crate that answers "pure / not pure",
//! "solvable / not solvable" or "equal / not equal" returns evidence that a
//! verifier can re-check without trusting the producer. The verifiers live
//! next to the machinery they need: [`crate::fg`] re-checks purity over
//! finitely generated ambients, [`crate::structured`] re-checks embedding
//! purity, [`crate::systems`] re-checks non-solvability certificates.

use serde::{Deserialize, Serialize};

use crate::linalg::Obstruction;
use crate::{ElementHandle, Int};

/// Evidence that a subgroup or embedding is pure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PurityCertificate {
    #[serde(flatten)]
    pub kind: PurityCertKind,
    /// The moduli `n` that were explicitly verified.
    #[serde(with = "crate::jsonutil::int_vec_serde")]
    pub checked: Vec<Int>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PurityCertKind {
    /// Exact decision over a finitely generated ambient: purity for every n
    /// reduces to the listed prime powers (derived from the two torsion
    /// exponents), all of which were checked.
    FgExact {
        #[serde(with = "crate::jsonutil::int_serde")]
        ambient_exponent: Int,
        #[serde(with = "crate::jsonutil::int_serde")]
        quotient_exponent: Int,
    },
    /// The image is a direct summand (fresh-coordinate inclusion), which is
    /// pure outright; `checked` holds spot-verified moduli.
    DirectSummand,
    /// The subgroup is the intersection of the ambient with a rational
    /// subspace, which is pure outright; `checked` holds spot-verified
    /// moduli.
    SpanIntersection,
    /// Structured-embedding calculus: purity at `exact_primes` is decided
    /// exactly by per-atom divisibility, the remaining moduli are verified
    /// up to `bounded_up_to` only.
    AtomCalculus {
        #[serde(with = "crate::jsonutil::int_vec_serde")]
        exact_primes: Vec<Int>,
        #[serde(with = "crate::jsonutil::int_serde")]
        bounded_up_to: Int,
    },
}

impl PurityCertificate {
    /// Whether the certificate claims an exact (unbounded) decision rather
    /// than verification up to a bound.
    pub fn is_exact(&self) -> bool {
        !matches!(self.kind, PurityCertKind::AtomCalculus { .. })
    }
}

/// Witness that `H` is not pure: an element `h ∈ nG ∩ H` with `h ∉ nH`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonPurityWitness {
    #[serde(with = "crate::jsonutil::int_serde")]
    pub n: Int,
    pub element: ElementHandle,
}

/// Evidence that a streamed equation system has no global solution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NonSolvabilityCertificate {
    /// Some finite prefix is already unsolvable; the Smith-row obstruction
    /// is carried verbatim.
    ModulusObstruction {
        prefix_len: usize,
        obstruction: Obstruction,
    },
    /// Back-substitution forces the support of any solution's lead variable
    /// to contain `n` designated coordinates after `n` equations, while no
    /// element of the group has support beyond `support_bound`.
    SupportGrowth {
        #[serde(with = "crate::jsonutil::int_serde")]
        p: Int,
        /// Prefix depths 1..=demonstrated were shown solvable.
        demonstrated: usize,
        /// Coordinate (atom index in the ambient) forced nonzero on the
        /// lead variable by equation n.
        forced_coords: Vec<usize>,
        /// Number of coordinates any single group element can occupy.
        support_bound: usize,
    },
    /// The stream pins the lead variable modulo `p^n` for every `n` up to
    /// `demonstrated`; the pinned residues are incompatible with every
    /// candidate of bounded size.
    HeightDemand {
        #[serde(with = "crate::jsonutil::int_serde")]
        p: Int,
        demonstrated: usize,
        #[serde(with = "crate::jsonutil::int_vec_serde")]
        residues: Vec<Int>,
        #[serde(with = "crate::jsonutil::int_serde")]
        size_bound: Int,
    },
}

/// Witness distinguishing two Galois types: a probe element whose p-height
/// differs between the two sides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeInequalityWitness {
    #[serde(with = "crate::jsonutil::int_serde")]
    pub prime: Int,
    /// Index into the deterministic probe set; 0 is the tuple element
    /// itself.
    pub probe_index: usize,
    pub height_a: crate::charac::Height,
    pub height_b: crate::charac::Height,
}

/// Union of every certificate kind the crate emits, for uniform
/// serialization through the CLI `verify` surface.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "certificate", rename_all = "kebab-case")]
pub enum Certificate {
    Purity(PurityCertificate),
    NonPurity(NonPurityWitness),
    NonSolvability(NonSolvabilityCertificate),
    TypeInequality(TypeInequalityWitness),
}
