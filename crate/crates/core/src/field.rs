//! Modular arithmetic over word-sized primes, deterministic primality, and
//! discovery of `(p, q, a)` triples where `a` generates the order-`q`
//! subgroup of `F_p^*`.
//!
//! All moduli are capped at [`MAX_MODULUS`] so that every product of two
//! residues fits in a `u128` intermediate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::FieldError;

/// Largest modulus accepted anywhere in the crate (2^62).
pub const MAX_MODULUS: u64 = 1 << 62;

#[inline]
pub fn mod_mul(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

#[inline]
pub fn mod_add(a: u64, b: u64, m: u64) -> u64 {
    let s = a + b;
    if s >= m {
        s - m
    } else {
        s
    }
}

#[inline]
pub fn mod_sub(a: u64, b: u64, m: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + m - b
    }
}

/// `base^exponent mod m` by square-and-multiply.
pub fn mod_pow(base: u64, mut exponent: u64, m: u64) -> u64 {
    debug_assert!(m >= 2);
    let mut result = 1 % m;
    let mut acc = base % m;
    while exponent > 0 {
        if exponent & 1 == 1 {
            result = mod_mul(result, acc, m);
        }
        acc = mod_mul(acc, acc, m);
        exponent >>= 1;
    }
    result
}

/// Multiplicative inverse modulo a prime `m`.
pub fn mod_inv(x: u64, m: u64) -> Result<u64, FieldError> {
    let x = x % m;
    if x == 0 {
        return Err(FieldError::ZeroInverse);
    }
    // Extended Euclid on signed 128-bit values; works for any modulus
    // coprime to x, not just primes.
    let (mut r0, mut r1) = (m as i128, x as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let quot = r0 / r1;
        (r0, r1) = (r1, r0 - quot * r1);
        (t0, t1) = (t1, t0 - quot * t1);
    }
    if r0 != 1 {
        return Err(FieldError::ZeroInverse);
    }
    Ok(t0.rem_euclid(m as i128) as u64)
}

// Witnesses 2..=37 make Miller-Rabin deterministic for n < 3.3 * 10^24.
const MR_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic primality test, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &w in &MR_WITNESSES {
        if n == w {
            return true;
        }
        if n % w == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &w in &MR_WITNESSES {
        let mut x = mod_pow(w, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mod_mul(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime `>= n`, or `None` past [`MAX_MODULUS`].
pub fn next_prime(n: u64) -> Option<u64> {
    let mut c = n.max(2);
    while c <= MAX_MODULUS {
        if is_prime(c) {
            return Some(c);
        }
        c += 1;
    }
    None
}

/// Two primes with `q | p - 1`, before a subgroup element is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimePair {
    pub p: u64,
    pub q: u64,
}

/// Smallest prime `q >= q_min` together with the smallest prime `p = m*q + 1`.
pub fn generate_prime_pair(q_min: u64) -> Result<PrimePair, FieldError> {
    let q = next_prime(q_min.max(2)).ok_or(FieldError::SearchExhausted)?;
    let mut p = q.checked_add(1).ok_or(FieldError::SearchExhausted)?;
    while p <= MAX_MODULUS {
        if is_prime(p) {
            return Ok(PrimePair { p, q });
        }
        p += q;
    }
    Err(FieldError::SearchExhausted)
}

/// Returns `h^((p-1)/q) mod p` for seeded random candidates `h` until the
/// result differs from 1. Such an element has order exactly `q`.
pub fn find_subgroup_element(p: u64, q: u64, seed: u64) -> Result<u64, FieldError> {
    check_pair(p, q)?;
    let cofactor = (p - 1) / q;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // For small p a deterministic sweep guarantees termination; for large p a
    // random candidate fails with probability 1/q.
    if p <= 1 << 16 {
        let start = rng.random_range(2..p.max(3));
        for off in 0..p {
            let h = 2 + (start - 2 + off) % (p - 2).max(1);
            let a = mod_pow(h, cofactor, p);
            if a != 1 {
                return Ok(a);
            }
        }
        unreachable!("F_p^* always has an element of order q when q | p - 1");
    }
    loop {
        let h = rng.random_range(2..p);
        let a = mod_pow(h, cofactor, p);
        if a != 1 {
            return Ok(a);
        }
    }
}

fn check_pair(p: u64, q: u64) -> Result<(), FieldError> {
    if p > MAX_MODULUS || q > MAX_MODULUS {
        return Err(FieldError::ModulusTooLarge);
    }
    if !is_prime(p) {
        return Err(FieldError::NotPrime(p));
    }
    if !is_prime(q) {
        return Err(FieldError::NotPrime(q));
    }
    if (p - 1) % q != 0 {
        return Err(FieldError::NotDivisor { p, q });
    }
    Ok(())
}

/// The algebraic query context: primes `p`, `q` with `q | p - 1` and an
/// element `a` of multiplicative order `q` in `F_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldParams {
    p: u64,
    q: u64,
    a: u64,
}

impl FieldParams {
    pub fn new(p: u64, q: u64, a: u64) -> Result<Self, FieldError> {
        check_pair(p, q)?;
        if a >= p || a == 1 || a == 0 || mod_pow(a, q, p) != 1 {
            return Err(FieldError::BadSubgroupElement { a, q });
        }
        Ok(FieldParams { p, q, a })
    }

    /// Smallest valid pair with `q >= q_min` and a seeded order-`q` element.
    pub fn generate(q_min: u64, seed: u64) -> Result<Self, FieldError> {
        let PrimePair { p, q } = generate_prime_pair(q_min)?;
        let a = find_subgroup_element(p, q, seed)?;
        Ok(FieldParams { p, q, a })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    /// Same `(p, q)` with a different generator of the subgroup.
    pub fn with_generator(&self, a: u64) -> Result<Self, FieldError> {
        FieldParams::new(self.p, self.q, a)
    }

    /// `a^j mod p`; uniform `j` in `[0, q)` gives a uniform subgroup element.
    pub fn subgroup_element(&self, j: u64) -> u64 {
        mod_pow(self.a, j % self.q, self.p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    fn brute_order(a: u64, p: u64) -> u64 {
        let mut x = a % p;
        let mut k = 1;
        while x != 1 {
            x = x * a % p;
            k += 1;
        }
        k
    }

    #[test]
    fn mod_pow_examples() {
        assert_eq!(mod_pow(2, 11, 23), 1);
        assert_eq!(mod_pow(17, 0, 23), 1);
        assert_eq!(mod_pow(0, 0, 5), 1);
        assert_eq!(mod_pow(5, 1, 7), 5);
    }

    #[test]
    fn mod_pow_near_cap_does_not_overflow() {
        let m = next_prime(1 << 61).unwrap();
        let x = m - 1;
        assert_eq!(mod_pow(x, 2, m), 1);
        assert_eq!(mod_pow(x, m - 1, m), 1);
    }

    #[test]
    fn mod_inv_examples() {
        assert_eq!(mod_inv(5, 7).unwrap(), 3);
        assert_eq!(mod_inv(1, 10007).unwrap(), 1);
        assert_eq!(mod_inv(2, 11).unwrap(), 6);
        assert_eq!(mod_inv(0, 11), Err(FieldError::ZeroInverse));
    }

    #[test]
    fn mod_inv_is_involution_exhaustively() {
        for m in (2..1000u64).filter(|&m| trial_division(m)) {
            for x in 1..m {
                let y = mod_inv(x, m).unwrap();
                assert_eq!(x * y % m, 1);
                assert_eq!(mod_inv(y, m).unwrap(), x);
            }
        }
    }

    #[test]
    fn is_prime_matches_trial_division() {
        assert!(is_prime(23));
        assert!(!is_prime(1));
        assert!(!is_prime(0));
        assert!(is_prime(10007));
        for n in 0..20_000u64 {
            assert_eq!(is_prime(n), trial_division(n), "n = {n}");
        }
        // Strong pseudoprimes to several small bases.
        for n in [3_215_031_751u64, 2_152_302_898_747, 3_474_749_660_383, 341_550_071_728_321] {
            assert!(!is_prime(n));
        }
        assert!(is_prime((1u64 << 61) - 1));
    }

    #[test]
    fn prime_pair_examples() {
        assert_eq!(generate_prime_pair(11).unwrap(), PrimePair { p: 23, q: 11 });
        assert_eq!(generate_prime_pair(3).unwrap(), PrimePair { p: 7, q: 3 });
        assert_eq!(generate_prime_pair(9).unwrap(), PrimePair { p: 23, q: 11 });
        assert_eq!(generate_prime_pair(10007).unwrap(), PrimePair { p: 240_169, q: 10007 });
    }

    #[test]
    fn prime_pair_matches_brute_force() {
        for q_min in 3..300 {
            let q = (q_min..).find(|&c| trial_division(c)).unwrap();
            let p = (1..).map(|m| m * q + 1).find(|&c| trial_division(c)).unwrap();
            assert_eq!(generate_prime_pair(q_min).unwrap(), PrimePair { p, q });
        }
    }

    #[test]
    fn subgroup_element_examples() {
        for seed in 0..20 {
            let a = find_subgroup_element(23, 11, seed).unwrap();
            assert_eq!(brute_order(a, 23), 11);
            let b = find_subgroup_element(7, 3, seed).unwrap();
            assert!(b == 2 || b == 4);
        }
        assert!(FieldParams::new(23, 11, 2).is_ok());
        assert!(FieldParams::new(23, 11, 1).is_err());
        assert!(FieldParams::new(23, 11, 5).is_err());
        assert!(FieldParams::new(23, 7, 2).is_err());
    }

    #[test]
    fn generated_params_have_exact_order() {
        let mut q_min = 3;
        while q_min < 10_000 {
            let params = FieldParams::generate(q_min, q_min).unwrap();
            assert_eq!(brute_order(params.a(), params.p()), params.q());
            q_min = params.q() * 2;
        }
    }

    #[test]
    fn exponent_consistency_law() {
        let params = FieldParams::generate(10007, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let (p, q, a) = (params.p(), params.q(), params.a());
        for _ in 0..10_000 {
            let x = rng.random_range(0..q);
            let y = rng.random_range(0..q);
            let lhs = mod_pow(a, (x + y) % q, p);
            let rhs = mod_mul(mod_pow(a, x, p), mod_pow(a, y, p), p);
            assert_eq!(lhs, rhs);
        }
    }
}
