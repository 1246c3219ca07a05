//! Heights, characteristics, types and rank-one torsion-free groups.
//!
//! The characteristic of an element is its height sequence over all primes.
//! Here it is represented as an eventually-constant sequence: a default in
//! {0, ∞} plus finitely many exceptions. That covers every atom this crate
//! builds groups from (Z, Z/n, Q, Z(p^∞), Z_(p), completion proxies and
//! their finite sums) and keeps type equivalence decidable.
//!
//! Two characteristics are equivalent as types when they differ at finitely
//! many primes and every difference is between finite values.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

use crate::primes::{first_primes, is_prime, prime_divisors, valuation};
use crate::structured::StructuredGroup;
use crate::{ElementHandle, GroupHandle, Int, Rat};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CharError {
    #[error("{0} is not prime")]
    NotPrime(Int),
    #[error("element does not belong to the group")]
    NotMember,
    #[error("characteristic of 0 is not defined by this operation")]
    ZeroElement,
    #[error("element and group handles come from different families")]
    FamilyMismatch,
}

/// A p-height: finite or infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Height {
    Finite(u64),
    Infinite,
}

impl fmt::Display for Height {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Height::Finite(n) => write!(f, "{n}"),
            Height::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Height {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Height::Finite(n) => serializer.serialize_u64(*n),
            Height::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Height {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(deserializer)?;
        match &v {
            Value::Number(n) => n
                .as_u64()
                .map(Height::Finite)
                .ok_or_else(|| D::Error::custom("height must be a natural number")),
            Value::String(s) if s == "inf" => Ok(Height::Infinite),
            other => Err(D::Error::custom(format!("bad height value {other}"))),
        }
    }
}

impl Height {
    pub fn plus(self, delta: u64) -> Height {
        match self {
            Height::Finite(n) => Height::Finite(n + delta),
            Height::Infinite => Height::Infinite,
        }
    }
}

/// Default value of an eventually-constant height sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeightDefault {
    Zero,
    Infinity,
}

impl HeightDefault {
    pub fn height(self) -> Height {
        match self {
            HeightDefault::Zero => Height::Finite(0),
            HeightDefault::Infinity => Height::Infinite,
        }
    }
}

/// Height sequence over all primes, eventually equal to `default`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Characteristic {
    default: HeightDefault,
    exceptions: BTreeMap<Int, Height>,
}

impl Characteristic {
    /// Builds a characteristic, dropping exceptions equal to the default.
    pub fn new(default: HeightDefault, exceptions: BTreeMap<Int, Height>) -> Self {
        let exceptions = exceptions
            .into_iter()
            .filter(|(_, h)| *h != default.height())
            .collect();
        Characteristic {
            default,
            exceptions,
        }
    }

    /// All-zero characteristic (that of 1 in Z).
    pub fn zero() -> Self {
        Characteristic::new(HeightDefault::Zero, BTreeMap::new())
    }

    /// All-infinite characteristic (that of any nonzero rational in Q).
    pub fn divisible() -> Self {
        Characteristic::new(HeightDefault::Infinity, BTreeMap::new())
    }

    pub fn default_value(&self) -> HeightDefault {
        self.default
    }

    pub fn exceptions(&self) -> &BTreeMap<Int, Height> {
        &self.exceptions
    }

    pub fn value_at(&self, p: &Int) -> Height {
        self.exceptions
            .get(p)
            .copied()
            .unwrap_or_else(|| self.default.height())
    }

    /// Primes where this characteristic and `other` take different values.
    /// `None` means they differ at cofinitely many primes.
    pub fn difference_support(&self, other: &Characteristic) -> Option<Vec<Int>> {
        if self.default != other.default {
            return None;
        }
        let mut out = Vec::new();
        for p in self.exceptions.keys().chain(other.exceptions.keys()) {
            if self.value_at(p) != other.value_at(p) && !out.contains(p) {
                out.push(p.clone());
            }
        }
        out.sort();
        Some(out)
    }
}

impl Serialize for Characteristic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("Characteristic", 2)?;
        let default = match self.default {
            HeightDefault::Zero => "zero",
            HeightDefault::Infinity => "infinity",
        };
        s.serialize_field("default", default)?;
        let exceptions: BTreeMap<String, Height> = self
            .exceptions
            .iter()
            .map(|(p, h)| (p.to_string(), *h))
            .collect();
        s.serialize_field("exceptions", &exceptions)?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for Characteristic {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            default: HeightDefault,
            #[serde(default)]
            exceptions: BTreeMap<String, Height>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let mut exceptions = BTreeMap::new();
        for (k, h) in raw.exceptions {
            let p: Int = k
                .parse()
                .map_err(|e| D::Error::custom(format!("bad prime key {k:?}: {e}")))?;
            if !is_prime(&p) {
                return Err(D::Error::custom(format!("exception key {p} is not prime")));
            }
            exceptions.insert(p, h);
        }
        Ok(Characteristic::new(raw.default, exceptions))
    }
}

/// Equivalence class of characteristics under the finite-finite-difference
/// relation; equality of [`TypeClass`] values is type equivalence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TypeClass {
    pub representative: Characteristic,
}

impl PartialEq for TypeClass {
    fn eq(&self, other: &Self) -> bool {
        type_equiv(&self.representative, &other.representative)
    }
}

impl Eq for TypeClass {}

/// Whether two characteristics are equivalent as types: they differ at
/// finitely many primes and every difference is between finite heights.
pub fn type_equiv(s: &Characteristic, t: &Characteristic) -> bool {
    match s.difference_support(t) {
        // different defaults differ at cofinitely many primes
        None => false,
        Some(diff) => diff.iter().all(|p| {
            matches!(s.value_at(p), Height::Finite(_)) && matches!(t.value_at(p), Height::Finite(_))
        }),
    }
}

/// The rank-one group `G_χ = { q ∈ Q : v_p(q) >= -χ(p) for all p }`.
///
/// `G_χ` always contains 1 and is determined up to isomorphism by the type
/// of χ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankOneGroup {
    pub chi: Characteristic,
}

impl RankOneGroup {
    pub fn new(chi: Characteristic) -> Self {
        RankOneGroup { chi }
    }

    /// The integers: χ identically zero.
    pub fn integers() -> Self {
        RankOneGroup::new(Characteristic::zero())
    }

    /// Membership: every prime in the denominator must be allowed by χ.
    pub fn member(&self, q: &Rat) -> bool {
        for p in prime_divisors(q.denom()) {
            let v = valuation(q.denom(), &p).expect("denominator is nonzero") as u64;
            match self.chi.value_at(&p) {
                Height::Infinite => {}
                Height::Finite(cap) => {
                    if v > cap {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// p-height of a member.
    pub fn p_height(&self, q: &Rat, p: &Int) -> Result<Height, CharError> {
        if !is_prime(p) {
            return Err(CharError::NotPrime(p.clone()));
        }
        if !self.member(q) {
            return Err(CharError::NotMember);
        }
        if q.is_zero() {
            return Ok(Height::Infinite);
        }
        match self.chi.value_at(p) {
            Height::Infinite => Ok(Height::Infinite),
            Height::Finite(cap) => {
                let vnum = valuation(q.numer(), p).expect("nonzero") as i64;
                let vden = valuation(q.denom(), p).expect("nonzero") as i64;
                let v = vnum - vden;
                let h = cap as i64 + v;
                debug_assert!(h >= 0, "members satisfy v_p >= -χ(p)");
                Ok(Height::Finite(h as u64))
            }
        }
    }
}

/// p-height of an element in any supported family.
pub fn p_height(a: &ElementHandle, g: &GroupHandle, p: &Int) -> Result<Height, CharError> {
    if !is_prime(p) {
        return Err(CharError::NotPrime(p.clone()));
    }
    match (a, g) {
        (ElementHandle::Coords(x), GroupHandle::Fg(group)) => {
            let x = group.reduce(x).map_err(|_| CharError::NotMember)?;
            Ok(fg_height(group, &x, p))
        }
        (ElementHandle::Rational(q), GroupHandle::RankOne(group)) => group.p_height(q, p),
        (ElementHandle::Structured(el), GroupHandle::Structured(group)) => {
            if el.group() != group {
                return Err(CharError::NotMember);
            }
            Ok(el.p_height(p))
        }
        _ => Err(CharError::FamilyMismatch),
    }
}

fn fg_height(group: &crate::fg::FgGroup, x: &[Int], p: &Int) -> Height {
    let mut min = Height::Infinite;
    for (i, c) in x.iter().enumerate() {
        let h = if i < group.free_rank() {
            match valuation(c, p) {
                None => Height::Infinite,
                Some(v) => Height::Finite(v as u64),
            }
        } else {
            let d = &group.invariant_factors()[i - group.free_rank()];
            let vp_d = valuation(d, p).unwrap_or(0);
            if c.is_multiple_of(&p.pow(vp_d)) {
                Height::Infinite
            } else {
                Height::Finite(valuation(c, p).expect("nonzero here") as u64)
            }
        };
        if h < min {
            min = h;
        }
    }
    min
}

/// Assembles the full characteristic of a nonzero element from finitely
/// many height computations plus the structurally determined default.
pub fn characteristic_of(a: &ElementHandle, g: &GroupHandle) -> Result<Characteristic, CharError> {
    let (default, candidates) = match (a, g) {
        (ElementHandle::Coords(x), GroupHandle::Fg(group)) => {
            let x = group.reduce(x).map_err(|_| CharError::NotMember)?;
            if x.iter().all(Int::is_zero) {
                return Err(CharError::ZeroElement);
            }
            let free_nonzero = x[..group.free_rank()].iter().any(|c| !c.is_zero());
            let default = if free_nonzero {
                HeightDefault::Zero
            } else {
                HeightDefault::Infinity
            };
            let mut candidates: Vec<Int> = Vec::new();
            for c in &x[..group.free_rank()] {
                candidates.extend(prime_divisors(c));
            }
            for d in group.invariant_factors() {
                candidates.extend(prime_divisors(d));
            }
            (default, candidates)
        }
        (ElementHandle::Rational(q), GroupHandle::RankOne(group)) => {
            if !group.member(q) {
                return Err(CharError::NotMember);
            }
            if q.is_zero() {
                return Err(CharError::ZeroElement);
            }
            let mut candidates: Vec<Int> = group.chi.exceptions().keys().cloned().collect();
            candidates.extend(prime_divisors(q.numer()));
            candidates.extend(prime_divisors(q.denom()));
            (group.chi.default_value(), candidates)
        }
        (ElementHandle::Structured(el), GroupHandle::Structured(group)) => {
            if el.group() != group {
                return Err(CharError::NotMember);
            }
            if el.is_zero() {
                return Err(CharError::ZeroElement);
            }
            (structured_default(el), structured_candidates(group, el))
        }
        _ => return Err(CharError::FamilyMismatch),
    };

    let mut candidates = candidates;
    candidates.sort();
    candidates.dedup();
    let mut exceptions = BTreeMap::new();
    for p in candidates {
        let h = p_height(a, g, &p)?;
        if h != default.height() {
            exceptions.insert(p, h);
        }
    }
    Ok(Characteristic::new(default, exceptions))
}

fn structured_default(el: &crate::structured::GroupElement) -> HeightDefault {
    use crate::structured::{Atom, Component};
    for (atom, comp) in el.group().atoms().iter().zip(el.components()) {
        if let (Atom::Z, Component::Z(x)) = (atom, comp) {
            if !x.is_zero() {
                return HeightDefault::Zero;
            }
        }
    }
    HeightDefault::Infinity
}

fn structured_candidates(
    group: &StructuredGroup,
    el: &crate::structured::GroupElement,
) -> Vec<Int> {
    use crate::structured::{Atom, Component};
    let mut out = Vec::new();
    for (atom, comp) in group.atoms().iter().zip(el.components()) {
        match (atom, comp) {
            (Atom::Z, Component::Z(x)) => out.extend(prime_divisors(x)),
            (Atom::Zmod { n }, _) => out.extend(prime_divisors(n)),
            (Atom::Loc { p }, _) | (Atom::Completion { p, .. }, _) => out.push(p.clone()),
            (Atom::Q, _) | (Atom::Pruefer { .. }, _) => {}
            _ => unreachable!(),
        }
    }
    out
}

/// `n` pairwise type-inequivalent characteristics, deterministic in the
/// seed: 0/∞ patterns over distinct finite prime supports, a finite slice
/// of the classical continuum-size family.
pub fn distinct_type_family(n: usize, seed: u64) -> Vec<Characteristic> {
    assert!(n >= 1, "need at least one characteristic");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool: Vec<Int> = first_primes((2 * n).max(8)).into_iter().map(Int::from).collect();
    let mut seen: Vec<Vec<Int>> = Vec::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut support: Vec<Int> = pool
            .iter()
            .filter(|_| rng.gen_bool(0.5))
            .cloned()
            .collect();
        // keep supports small but nonempty most of the time
        if support.len() > 6 {
            support.shuffle(&mut rng);
            support.truncate(6);
            support.sort();
        }
        if seen.contains(&support) {
            continue;
        }
        seen.push(support.clone());
        let exceptions = support
            .into_iter()
            .map(|p| (p, Height::Infinite))
            .collect();
        out.push(Characteristic::new(HeightDefault::Zero, exceptions));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fg::FgGroup;

    fn p(n: i64) -> Int {
        Int::from(n)
    }

    #[test]
    fn heights_in_fg_groups() {
        // a = 4 in Z at p = 2 has height 2
        let z = FgGroup::free(1);
        let h = p_height(
            &ElementHandle::Coords(vec![p(4)]),
            &GroupHandle::Fg(z),
            &p(2),
        )
        .unwrap();
        assert_eq!(h, Height::Finite(2));

        // Z/4: height of 2 at 2 is 1, height of 1 at 3 is infinite
        let z4 = FgGroup::from_invariants(0, vec![p(4)]).unwrap();
        let g = GroupHandle::Fg(z4);
        assert_eq!(
            p_height(&ElementHandle::Coords(vec![p(2)]), &g, &p(2)).unwrap(),
            Height::Finite(1)
        );
        assert_eq!(
            p_height(&ElementHandle::Coords(vec![p(1)]), &g, &p(3)).unwrap(),
            Height::Infinite
        );
    }

    #[test]
    fn heights_in_rank_one_groups() {
        // 1 in Z_(2)-like χ: only the 2-entry is 0, others infinite
        let mut ex = BTreeMap::new();
        ex.insert(p(2), Height::Finite(0));
        let chi = Characteristic::new(HeightDefault::Infinity, ex);
        let g = RankOneGroup::new(chi);
        assert_eq!(g.p_height(&Rat::one(), &p(3)).unwrap(), Height::Infinite);
        assert_eq!(g.p_height(&Rat::one(), &p(2)).unwrap(), Height::Finite(0));

        // 1/9 where χ(3) = ∞
        let mut ex = BTreeMap::new();
        ex.insert(p(3), Height::Infinite);
        let g = RankOneGroup::new(Characteristic::new(HeightDefault::Zero, ex));
        let ninth = Rat::new(Int::one(), p(9));
        assert!(g.member(&ninth));
        assert_eq!(g.p_height(&ninth, &p(3)).unwrap(), Height::Infinite);
    }

    #[test]
    fn characteristic_frozen_examples() {
        let z = GroupHandle::Fg(FgGroup::free(1));
        let chi = characteristic_of(&ElementHandle::Coords(vec![p(1)]), &z).unwrap();
        assert_eq!(chi, Characteristic::zero());

        let chi6 = characteristic_of(&ElementHandle::Coords(vec![p(6)]), &z).unwrap();
        assert_eq!(chi6.value_at(&p(2)), Height::Finite(1));
        assert_eq!(chi6.value_at(&p(3)), Height::Finite(1));
        assert_eq!(chi6.value_at(&p(5)), Height::Finite(0));
        assert_eq!(chi6.exceptions().len(), 2);

        // 1 in the Z_(2) rank-one group: default infinity, exception 2 ↦ 0
        let mut ex = BTreeMap::new();
        ex.insert(p(2), Height::Finite(0));
        let chi = Characteristic::new(HeightDefault::Infinity, ex.clone());
        let g = GroupHandle::RankOne(RankOneGroup::new(chi.clone()));
        let got = characteristic_of(&ElementHandle::Rational(Rat::one()), &g).unwrap();
        assert_eq!(got, chi);

        // zero element is rejected
        assert_eq!(
            characteristic_of(&ElementHandle::Coords(vec![p(0)]), &z),
            Err(CharError::ZeroElement)
        );
    }

    #[test]
    fn recovers_chi_from_one() {
        let mut ex = BTreeMap::new();
        ex.insert(p(2), Height::Infinite);
        ex.insert(p(5), Height::Finite(3));
        let chi = Characteristic::new(HeightDefault::Zero, ex);
        let g = GroupHandle::RankOne(RankOneGroup::new(chi.clone()));
        let got = characteristic_of(&ElementHandle::Rational(Rat::one()), &g).unwrap();
        assert_eq!(got, chi);
    }

    #[test]
    fn type_equivalence_frozen_examples() {
        let inf_at = |q: i64| {
            let mut ex = BTreeMap::new();
            ex.insert(p(q), Height::Infinite);
            Characteristic::new(HeightDefault::Zero, ex)
        };
        // infinite entries at different primes: inequivalent
        assert!(!type_equiv(&inf_at(2), &inf_at(3)));

        // one finite difference: equivalent
        let mut ex = BTreeMap::new();
        ex.insert(p(2), Height::Finite(5));
        let t = Characteristic::new(HeightDefault::Zero, ex);
        assert!(type_equiv(&Characteristic::zero(), &t));

        // different defaults differ at every prime
        assert!(!type_equiv(&Characteristic::divisible(), &Characteristic::zero()));
    }

    #[test]
    fn member_frozen_examples() {
        let mut ex = BTreeMap::new();
        ex.insert(p(2), Height::Infinite);
        let z_half = RankOneGroup::new(Characteristic::new(HeightDefault::Zero, ex));
        assert!(z_half.member(&Rat::new(Int::one(), p(8))));
        assert!(!z_half.member(&Rat::new(Int::one(), p(3))));

        let q = RankOneGroup::new(Characteristic::divisible());
        assert!(q.member(&Rat::new(p(5), p(6))));
    }

    #[test]
    fn member_closed_under_addition_and_negation() {
        let mut ex = BTreeMap::new();
        ex.insert(p(2), Height::Finite(3));
        ex.insert(p(5), Height::Infinite);
        let g = RankOneGroup::new(Characteristic::new(HeightDefault::Zero, ex));
        let xs = [
            Rat::new(p(3), p(8)),
            Rat::new(p(7), p(25)),
            Rat::new(p(-1), p(40)),
        ];
        for x in &xs {
            assert!(g.member(x));
            assert!(g.member(&-x.clone()));
            for y in &xs {
                assert!(g.member(&(x + y)));
            }
        }
    }

    #[test]
    fn distinct_family_is_pairwise_inequivalent() {
        let family = distinct_type_family(24, 7);
        assert_eq!(family.len(), 24);
        for i in 0..family.len() {
            for j in (i + 1)..family.len() {
                assert!(
                    !type_equiv(&family[i], &family[j]),
                    "family members {i} and {j} must be type-inequivalent"
                );
            }
        }
        // deterministic in the seed
        assert_eq!(distinct_type_family(24, 7), family);
        assert_ne!(distinct_type_family(24, 8), family);
    }

    #[test]
    fn characteristic_json_shape() {
        let mut ex = BTreeMap::new();
        ex.insert(p(2), Height::Finite(3));
        ex.insert(p(5), Height::Infinite);
        let chi = Characteristic::new(HeightDefault::Zero, ex);
        let text = serde_json::to_string(&chi).unwrap();
        assert_eq!(
            text,
            r#"{"default":"zero","exceptions":{"2":3,"5":"inf"}}"#
        );
        let back: Characteristic = serde_json::from_str(&text).unwrap();
        assert_eq!(back, chi);
        // exceptions equal to the default are normalized away
        let redundant: Characteristic =
            serde_json::from_str(r#"{"default":"zero","exceptions":{"3":0}}"#).unwrap();
        assert_eq!(redundant, Characteristic::zero());
    }
}
