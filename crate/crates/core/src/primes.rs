//! Small prime utilities: primality, enumeration, factorization and p-adic
//! valuation over arbitrary-precision integers.
//!
//! Everything here is trial-division based. The library operates at desk
//! scale where moduli and invariant factors stay tiny, so no probabilistic
//! primality or fast factoring is warranted.

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::Int;

/// Trial-division primality test.
pub fn is_prime(n: &Int) -> bool {
    if *n < Int::from(2) {
        return false;
    }
    let two = Int::from(2);
    let three = Int::from(3);
    if *n == two || *n == three {
        return true;
    }
    if n.is_multiple_of(&two) || n.is_multiple_of(&three) {
        return false;
    }
    let mut d = Int::from(5);
    while &d * &d <= *n {
        if n.is_multiple_of(&d) || n.is_multiple_of(&(&d + 2)) {
            return false;
        }
        d += 6;
    }
    true
}

/// Primes `<= bound`, ascending.
pub fn primes_up_to(bound: u64) -> Vec<u64> {
    if bound < 2 {
        return Vec::new();
    }
    let mut sieve = vec![true; (bound + 1) as usize];
    sieve[0] = false;
    sieve[1] = false;
    let mut p = 2usize;
    while p * p <= bound as usize {
        if sieve[p] {
            let mut q = p * p;
            while q <= bound as usize {
                sieve[q] = false;
                q += p;
            }
        }
        p += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| if b { Some(i as u64) } else { None })
        .collect()
}

/// First `count` primes, ascending.
pub fn first_primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut candidate = Int::from(2);
    while out.len() < count {
        if is_prime(&candidate) {
            out.push(candidate.to_u64().expect("desk-scale prime"));
        }
        candidate += 1;
    }
    out
}

/// Prime factorization of `|n|` as (prime, exponent) pairs, ascending primes.
///
/// `factor(0)` and `factor(±1)` return an empty list.
pub fn factor(n: &Int) -> Vec<(Int, u32)> {
    let mut m = n.abs();
    let mut out = Vec::new();
    if m <= Int::one() {
        return out;
    }
    let mut p = Int::from(2);
    while &p * &p <= m {
        if m.is_multiple_of(&p) {
            let mut e = 0u32;
            while m.is_multiple_of(&p) {
                m /= &p;
                e += 1;
            }
            out.push((p.clone(), e));
        }
        p += 1;
    }
    if m > Int::one() {
        out.push((m, 1));
    }
    out
}

/// p-adic valuation of a nonzero integer. Returns `None` for 0 (valuation is
/// infinite there).
pub fn valuation(n: &Int, p: &Int) -> Option<u32> {
    if n.is_zero() {
        return None;
    }
    let mut m = n.abs();
    let mut v = 0u32;
    while m.is_multiple_of(p) {
        m /= p;
        v += 1;
    }
    Some(v)
}

/// Distinct prime divisors of `|n|`.
pub fn prime_divisors(n: &Int) -> Vec<Int> {
    factor(n).into_iter().map(|(p, _)| p).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality_small() {
        let primes: Vec<i64> = (0..60)
            .filter(|&n| is_prime(&Int::from(n)))
            .collect();
        assert_eq!(
            primes,
            vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]
        );
    }

    #[test]
    fn sieve_matches_trial_division() {
        let sieved = primes_up_to(200);
        let trial: Vec<u64> = (0..=200u64)
            .filter(|&n| is_prime(&Int::from(n)))
            .collect();
        assert_eq!(sieved, trial);
    }

    #[test]
    fn factorization_roundtrip() {
        for n in 2..400i64 {
            let f = factor(&Int::from(n));
            let back: Int = f
                .iter()
                .map(|(p, e)| p.pow(*e))
                .product();
            assert_eq!(back, Int::from(n));
        }
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(valuation(&Int::from(48), &Int::from(2)), Some(4));
        assert_eq!(valuation(&Int::from(48), &Int::from(3)), Some(1));
        assert_eq!(valuation(&Int::from(48), &Int::from(5)), Some(0));
        assert_eq!(valuation(&Int::zero(), &Int::from(2)), None);
    }
}
