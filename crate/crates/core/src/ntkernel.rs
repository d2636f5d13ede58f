//! Arbitrary-precision number-theory primitives.
//!
//! Everything here is a pure function of its inputs: modular exponentiation,
//! the Jacobi symbol, the strong (Miller-Rabin) probable-prime test, Lucas
//! sequence evaluation by a binary ladder, Selfridge "Method A" parameter
//! selection and a primality oracle used to certify construction factors.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::lucasprobe::{strong_lucas, StrongLucas};

/// Largest |D| tried before the Selfridge search gives up.
pub const SELFRIDGE_D_LIMIT: i64 = 1_000_000;

/// Below this bound the first twelve prime bases decide primality exactly.
pub const DETERMINISTIC_MR_BOUND: u128 = 3_317_044_064_679_887_385_961_981;

const DETERMINISTIC_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

const ORACLE_BASES: [u64; 20] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
];

const TRIAL_PRIMES: [u64; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97,
];

/// An odd integer of at least 3.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OddInteger(BigUint);

impl OddInteger {
    pub fn new(value: BigUint) -> Result<Self> {
        if value < BigUint::from(3u8) || value.is_even() {
            return Err(Error::NotOddInteger(value));
        }
        Ok(OddInteger(value))
    }

    pub fn from_u64(value: u64) -> Result<Self> {
        Self::new(BigUint::from(value))
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn into_inner(self) -> BigUint {
        self.0
    }
}

impl std::fmt::Display for OddInteger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// `base^exponent mod modulus`.
pub fn mod_pow(base: &BigUint, exponent: &BigUint, modulus: &BigUint) -> Result<BigUint> {
    if modulus < &BigUint::from(2u8) {
        return Err(Error::ModulusTooSmall(modulus.clone()));
    }
    Ok(base.modpow(exponent, modulus))
}

#[inline]
pub fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod_u64(acc, base, m);
        }
        base = mul_mod_u64(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Jacobi symbol `(a / n)` for odd `n >= 1`.
pub fn jacobi(a: &BigInt, n: &BigUint) -> Result<i8> {
    if n.is_zero() || n.is_even() {
        return Err(Error::EvenJacobiModulus(n.clone()));
    }
    let (sign, magnitude) = (a.sign(), a.magnitude());
    let mut result = jacobi_unsigned(magnitude, n);
    if sign == Sign::Minus && n_mod(n, 4) == 3 {
        result = -result;
    }
    Ok(result)
}

/// Jacobi symbol for a machine-word numerator, the common case in parameter
/// selection.
pub fn jacobi_i64(a: i64, n: &BigUint) -> Result<i8> {
    if n.is_zero() || n.is_even() {
        return Err(Error::EvenJacobiModulus(n.clone()));
    }
    let mut result = jacobi_unsigned(&BigUint::from(a.unsigned_abs()), n);
    if a < 0 && n_mod(n, 4) == 3 {
        result = -result;
    }
    Ok(result)
}

fn n_mod(n: &BigUint, m: u32) -> u32 {
    (n % m).to_u32().unwrap_or(0)
}

fn jacobi_unsigned(a: &BigUint, n: &BigUint) -> i8 {
    let mut a = a % n;
    let mut n = n.clone();
    let mut result = 1i8;
    loop {
        if let (Some(a64), Some(n64)) = (a.to_u64(), n.to_u64()) {
            return result * jacobi_u64(a64, n64);
        }
        if a.is_zero() {
            return if n.is_one() { result } else { 0 };
        }
        let twos = a.trailing_zeros().unwrap_or(0);
        a >>= twos as usize;
        let n8 = n_mod(&n, 8);
        if twos % 2 == 1 && (n8 == 3 || n8 == 5) {
            result = -result;
        }
        if n_mod(&a, 4) == 3 && n8 % 4 == 3 {
            result = -result;
        }
        std::mem::swap(&mut a, &mut n);
        a %= &n;
    }
}

/// Jacobi symbol on machine words; `n` must be odd.
pub fn jacobi_u64(mut a: u64, mut n: u64) -> i8 {
    debug_assert!(n % 2 == 1);
    a %= n;
    let mut result = 1i8;
    while a != 0 {
        let twos = a.trailing_zeros();
        a >>= twos;
        if twos % 2 == 1 && (n % 8 == 3 || n % 8 == 5) {
            result = -result;
        }
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrVerdict {
    ProbablePrime,
    CompositeWitnessed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MrOutcome {
    pub verdict: MrVerdict,
    pub base: u64,
}

/// Precomputed `n - 1 = m * 2^t` decomposition, reusable across bases.
#[derive(Debug, Clone)]
pub struct StrongProbe {
    n: BigUint,
    n_minus_one: BigUint,
    odd_part: BigUint,
    twos: u64,
}

impl StrongProbe {
    pub fn new(n: &OddInteger) -> Self {
        let n = n.value().clone();
        let n_minus_one = &n - 1u32;
        let twos = n_minus_one.trailing_zeros().unwrap_or(0);
        let odd_part = &n_minus_one >> twos as usize;
        StrongProbe {
            n,
            n_minus_one,
            odd_part,
            twos,
        }
    }

    pub fn n(&self) -> &BigUint {
        &self.n
    }

    /// Strong probable-prime test for `base`, with no range check.
    pub fn passes(&self, base: &BigUint) -> bool {
        let mut x = base.modpow(&self.odd_part, &self.n);
        if x.is_one() || x == self.n_minus_one {
            return true;
        }
        for _ in 1..self.twos {
            x = (&x * &x) % &self.n;
            if x == self.n_minus_one {
                return true;
            }
            if x.is_one() {
                return false;
            }
        }
        false
    }

    pub fn test(&self, base: u64) -> Result<MrOutcome> {
        if base < 2 || BigUint::from(base) >= self.n {
            return Err(Error::BaseOutOfRange {
                base,
                n: self.n.clone(),
            });
        }
        let verdict = if self.passes(&BigUint::from(base)) {
            MrVerdict::ProbablePrime
        } else {
            MrVerdict::CompositeWitnessed
        };
        Ok(MrOutcome { verdict, base })
    }
}

/// Strong probable-prime test of `n` to `base`.
pub fn miller_rabin(n: &OddInteger, base: u64) -> Result<MrOutcome> {
    StrongProbe::new(n).test(base)
}

fn strong_probe_u64(n: u64, base: u64) -> bool {
    let n_minus_one = n - 1;
    let twos = n_minus_one.trailing_zeros();
    let odd_part = n_minus_one >> twos;
    let mut x = pow_mod_u64(base, odd_part, n);
    if x == 1 || x == n_minus_one {
        return true;
    }
    for _ in 1..twos {
        x = mul_mod_u64(x, x, n);
        if x == n_minus_one {
            return true;
        }
        if x == 1 {
            return false;
        }
    }
    false
}

/// Exact primality for machine words.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &TRIAL_PRIMES {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    if n < 97 * 97 {
        return true;
    }
    DETERMINISTIC_BASES.iter().all(|&a| strong_probe_u64(n, a))
}

/// Base-2 strong test used to discard most composites before the full oracle.
pub fn quick_composite_screen(n: &BigUint) -> bool {
    if let Some(v) = n.to_u64() {
        return v < 2 || (v > 2 && v % 2 == 0) || (v > 3 && !strong_probe_u64(v, 2));
    }
    if n.is_even() {
        return true;
    }
    let probe = StrongProbe::new(&OddInteger(n.clone()));
    !probe.passes(&BigUint::from(2u8))
}

/// Primality oracle for construction factors.
///
/// Exact below [`DETERMINISTIC_MR_BOUND`]. Above it, twenty prime bases plus a
/// strong Lucas round; adequate for certifying candidate factors but never
/// used to classify the engineered composites themselves.
pub fn is_prime_oracle(n: &BigUint) -> bool {
    if let Some(v) = n.to_u64() {
        return is_prime_u64(v);
    }
    for &p in &TRIAL_PRIMES {
        if (n % p).is_zero() {
            return false;
        }
    }
    let odd = OddInteger(n.clone());
    let probe = StrongProbe::new(&odd);
    let below_bound = n.to_u128().is_some_and(|v| v < DETERMINISTIC_MR_BOUND);
    if below_bound {
        return DETERMINISTIC_BASES
            .iter()
            .all(|&a| probe.passes(&BigUint::from(a)));
    }
    if !ORACLE_BASES.iter().all(|&a| probe.passes(&BigUint::from(a))) {
        return false;
    }
    match selfridge_d(&odd) {
        Ok(Selfridge::Params(params)) => match strong_lucas(&odd, &params) {
            StrongLucas::Evaluated(outcome) => outcome.pass,
            StrongLucas::CompositeByGcd(_) => false,
        },
        _ => false,
    }
}

/// `x * c mod n` for a residue `x` and a small signed multiplier.
fn mul_signed(x: &BigUint, c: i64, n: &BigUint) -> BigUint {
    let r = (x * c.unsigned_abs()) % n;
    if c < 0 && !r.is_zero() {
        n - r
    } else {
        r
    }
}

fn sub_mod(a: &BigUint, b: &BigUint, n: &BigUint) -> BigUint {
    if a >= b {
        a - b
    } else {
        n - (b - a)
    }
}

/// Lucas terms `(U_k mod n, V_k mod n, Q^k mod n)` for parameters `(P, Q)`.
///
/// Left-to-right ladder over the pair `(U_m, U_{m+1})`:
/// `U_2m = U_m (2 U_{m+1} - P U_m)`, `U_2m+1 = U_{m+1}^2 - Q U_m^2`,
/// `U_2m+2 = U_{m+1} (P U_{m+1} - 2 Q U_m)`. No halving is needed, so any
/// modulus `n >= 2` works. `V_k = 2 U_{k+1} - P U_k`.
pub fn lucas_uvq(p: i64, q: i64, k: &BigUint, n: &BigUint) -> Result<(BigUint, BigUint, BigUint)> {
    if n < &BigUint::from(2u8) {
        return Err(Error::ModulusTooSmall(n.clone()));
    }
    let mut u_lo = BigUint::zero();
    let mut u_hi = BigUint::one() % n;
    let mut q_pow = BigUint::one() % n;
    let two_q = q.checked_mul(2).expect("Q fits after doubling");
    for i in (0..k.bits()).rev() {
        let a = (&u_lo * &u_lo) % n;
        let b = (&u_hi * &u_hi) % n;
        let c = (&u_lo * &u_hi) % n;
        q_pow = (&q_pow * &q_pow) % n;
        let qa = mul_signed(&a, q, n);
        let odd = sub_mod(&b, &qa, n);
        if k.bit(i) {
            let pb = mul_signed(&b, p, n);
            let qc = mul_signed(&c, two_q, n);
            u_lo = odd;
            u_hi = sub_mod(&pb, &qc, n);
            q_pow = mul_signed(&q_pow, q, n);
        } else {
            let two_c = (&c << 1usize) % n;
            let pa = mul_signed(&a, p, n);
            u_lo = sub_mod(&two_c, &pa, n);
            u_hi = odd;
        }
    }
    let v = sub_mod(&((&u_hi << 1usize) % n), &mul_signed(&u_lo, p, n), n);
    Ok((u_lo, v, q_pow))
}

/// `(U_k mod n, V_k mod n)` for the Lucas sequences with parameters `(P, Q)`.
pub fn lucas_uv(p: i64, q: i64, k: &BigUint, n: &BigUint) -> Result<(BigUint, BigUint)> {
    lucas_uvq(p, q, k, n).map(|(u, v, _)| (u, v))
}

/// Parameters of the Lucas sequence chosen for `n`, plus `n + 1 = d * 2^s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LucasParams {
    pub discriminant: i64,
    pub p: i64,
    pub q: i64,
    pub odd_part: BigUint,
    pub twos: u32,
}

impl LucasParams {
    pub fn for_discriminant(n: &OddInteger, discriminant: i64) -> Self {
        let n_plus_one = n.value() + 1u32;
        let twos = n_plus_one.trailing_zeros().unwrap_or(0);
        LucasParams {
            discriminant,
            p: 1,
            q: (1 - discriminant) / 4,
            odd_part: n_plus_one >> twos as usize,
            twos: twos as u32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selfridge {
    Params(LucasParams),
    PerfectSquare,
    CompositeByGcd { factor: BigUint, discriminant: i64 },
}

pub fn is_perfect_square(n: &BigUint) -> bool {
    let r = n.sqrt();
    &(&r * &r) == n
}

/// Selfridge Method A: first `D` in 5, -7, 9, -11, ... with `(D/n) = -1`.
pub fn selfridge_d(n: &OddInteger) -> Result<Selfridge> {
    if is_perfect_square(n.value()) {
        return Ok(Selfridge::PerfectSquare);
    }
    let mut d: i64 = 5;
    loop {
        if d.abs() > SELFRIDGE_D_LIMIT {
            return Err(Error::DiscriminantSearchExhausted {
                n: n.value().clone(),
                limit: SELFRIDGE_D_LIMIT,
            });
        }
        match jacobi_i64(d, n.value())? {
            -1 => return Ok(Selfridge::Params(LucasParams::for_discriminant(n, d))),
            0 => {
                let g = BigUint::from(d.unsigned_abs()).gcd(n.value());
                if !g.is_one() && &g != n.value() {
                    return Ok(Selfridge::CompositeByGcd {
                        factor: g,
                        discriminant: d,
                    });
                }
            }
            _ => {}
        }
        d = if d > 0 { -(d + 2) } else { -d + 2 };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residue_of_signed(c: i64, n: &BigUint) -> BigUint {
        let r = BigUint::from(c.unsigned_abs()) % n;
        if c < 0 && !r.is_zero() {
            n - r
        } else {
            r
        }
    }

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn mod_pow_examples() {
        assert_eq!(mod_pow(&big(2), &big(0), &big(7)).unwrap(), big(1));
        assert_eq!(mod_pow(&big(2), &big(10), &big(1000)).unwrap(), big(24));
        assert_eq!(mod_pow(&big(2), &big(35), &big(561)).unwrap(), big(263));
        assert!(matches!(
            mod_pow(&big(2), &big(3), &big(1)),
            Err(Error::ModulusTooSmall(_))
        ));
    }

    #[test]
    fn jacobi_examples() {
        let j = |a: i64, n: u64| jacobi(&BigInt::from(a), &big(n)).unwrap();
        assert_eq!(j(1, 9), 1);
        assert_eq!(j(3, 9), 0);
        assert_eq!(j(5, 11), 1);
        assert_eq!(j(2, 15), 1);
        assert_eq!(j(-1, 7), -1);
        assert_eq!(j(-1, 13), 1);
        assert!(jacobi(&BigInt::from(3), &big(10)).is_err());
        assert!(jacobi(&BigInt::from(3), &big(0)).is_err());
    }

    #[test]
    fn jacobi_big_path_matches_word_path() {
        // 2^89 - 1 is prime; compare the multi-limb loop against Euler's criterion.
        let p = (BigUint::one() << 89usize) - 1u32;
        let e = (&p - 1u32) >> 1usize;
        for a in [2i64, 3, 5, -7, 10, -11, 12345] {
            let euler = residue_of_signed(a, &p).modpow(&e, &p);
            let expected = if euler.is_one() { 1 } else { -1 };
            assert_eq!(jacobi_i64(a, &p).unwrap(), expected, "a = {a}");
        }
    }

    #[test]
    fn miller_rabin_examples() {
        let mr = |n: u64, a: u64| miller_rabin(&OddInteger::from_u64(n).unwrap(), a).unwrap();
        assert_eq!(mr(7, 2).verdict, MrVerdict::ProbablePrime);
        assert_eq!(mr(561, 2).verdict, MrVerdict::CompositeWitnessed);
        assert_eq!(mr(2047, 2).verdict, MrVerdict::ProbablePrime);
        assert_eq!(mr(9, 3).verdict, MrVerdict::CompositeWitnessed);
        let n = OddInteger::from_u64(7).unwrap();
        assert!(matches!(miller_rabin(&n, 7), Err(Error::BaseOutOfRange { .. })));
        assert!(matches!(miller_rabin(&n, 1), Err(Error::BaseOutOfRange { .. })));
    }

    #[test]
    fn odd_integer_rejects_even_and_small() {
        assert!(OddInteger::from_u64(1).is_err());
        assert!(OddInteger::from_u64(10).is_err());
        assert!(OddInteger::from_u64(3).is_ok());
    }

    #[test]
    fn oracle_examples() {
        assert!(is_prime_oracle(&big(2)));
        assert!(!is_prime_oracle(&big(561)));
        assert!(!is_prime_oracle(&big(1541)));
        assert!(!is_prime_oracle(&big(0)));
        assert!(!is_prime_oracle(&big(1)));
        // Mersenne primes on both sides of the deterministic bound.
        assert!(is_prime_oracle(&((BigUint::one() << 61usize) - 1u32)));
        assert!(is_prime_oracle(&((BigUint::one() << 89usize) - 1u32)));
        assert!(is_prime_oracle(&((BigUint::one() << 127usize) - 1u32)));
        assert!(!is_prime_oracle(&((BigUint::one() << 67usize) - 1u32)));
        // 3825123056546413051 is a strong pseudoprime to bases 2..23.
        assert!(!is_prime_oracle(&big(3_825_123_056_546_413_051)));
    }

    #[test]
    fn lucas_uv_examples() {
        let uv = |k: u64, n: u64| lucas_uv(1, -1, &big(k), &big(n)).unwrap();
        assert_eq!(uv(0, 100), (big(0), big(2)));
        assert_eq!(uv(10, 1000), (big(55), big(123)));
        assert_eq!(uv(11, 703), (big(89), big(199)));
        assert!(lucas_uv(1, -1, &big(3), &big(1)).is_err());
    }

    #[test]
    fn lucas_q_power_tracks_ladder() {
        let (_, _, qk) = lucas_uvq(1, -3, &big(37), &big(1009)).unwrap();
        let expected = residue_of_signed(-3, &big(1009)).modpow(&big(37), &big(1009));
        assert_eq!(qk, expected);
    }

    #[test]
    fn selfridge_examples() {
        let s = |n: u64| selfridge_d(&OddInteger::from_u64(n).unwrap()).unwrap();
        assert_eq!(s(25), Selfridge::PerfectSquare);
        match s(13) {
            Selfridge::Params(p) => {
                assert_eq!((p.discriminant, p.p, p.q), (5, 1, -1));
                assert_eq!((p.odd_part.clone(), p.twos), (big(7), 1));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            s(561),
            Selfridge::CompositeByGcd {
                factor: big(3),
                discriminant: 9
            }
        );
        // n = 5 divides D = 5 itself; the search moves on to -7.
        match s(5) {
            Selfridge::Params(p) => assert_eq!(p.discriminant, -7),
            other => panic!("unexpected {other:?}"),
        }
    }
}
