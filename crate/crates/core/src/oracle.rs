//! Slow reference implementations on machine words. Nothing here calls into
//! the big-integer kernel; the verification suites compare the two.

/// Deterministic trial division.
pub fn is_prime_trial(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Smallest-prime-factor table for `0..limit` (entries 0 and 1 are 0).
pub fn spf_sieve(limit: usize) -> Vec<u32> {
    let mut spf = vec![0u32; limit];
    for i in 2..limit {
        if spf[i] == 0 {
            let mut j = i;
            while j < limit {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    spf
}

/// Prime factorization with multiplicity, `(p, e)` pairs in increasing order.
pub fn factorize(mut n: u64, spf: &[u32]) -> Vec<(u64, u32)> {
    let mut out: Vec<(u64, u32)> = Vec::new();
    while n > 1 {
        let p = if (n as usize) < spf.len() {
            spf[n as usize] as u64
        } else {
            (2..).find(|d| d * d > n || n.is_multiple_of(*d)).filter(|d| n.is_multiple_of(*d)).unwrap_or(n)
        };
        n /= p;
        match out.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => out.push((p, 1)),
        }
    }
    out
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod(base: u64, exp: u64, m: u64) -> u64 {
    // Right-to-left square and multiply.
    let mut result = 1 % m;
    let mut b = base % m;
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            result = mulmod(result, b, m);
        }
        b = mulmod(b, b, m);
        e >>= 1;
    }
    result
}

/// Legendre symbol by Euler's criterion.
pub fn legendre_euler(a: i64, p: u64) -> i8 {
    let r = a.rem_euclid(p as i64) as u64;
    if r == 0 {
        return 0;
    }
    if p == 2 {
        return 1;
    }
    match powmod(r, (p - 1) / 2, p) {
        1 => 1,
        x if x == p - 1 => -1,
        _ => unreachable!("{p} is not prime"),
    }
}

/// Jacobi symbol as a product of Legendre symbols over the factorization.
pub fn jacobi_naive(a: i64, n: u64, spf: &[u32]) -> i8 {
    assert!(n % 2 == 1, "Jacobi modulus must be odd");
    factorize(n, spf)
        .into_iter()
        .map(|(p, e)| legendre_euler(a, p).pow(e))
        .product()
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Outcome of the naive Selfridge search on an odd n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaiveSelfridge {
    D(i64),
    Square,
    /// Some earlier D had symbol 0 with |D| != n.
    Divisor(i64),
}

pub fn selfridge_naive(n: u64, spf: &[u32]) -> NaiveSelfridge {
    let r = isqrt(n);
    if r * r == n {
        return NaiveSelfridge::Square;
    }
    let mut d: i64 = 5;
    loop {
        match jacobi_naive(d, n, spf) {
            -1 => return NaiveSelfridge::D(d),
            0 if d.unsigned_abs() != n => return NaiveSelfridge::Divisor(d),
            _ => {}
        }
        d = if d > 0 { -(d + 2) } else { -d + 2 };
    }
}

/// `(U_k, V_k) mod n` by stepping the recurrence k times.
pub fn lucas_naive(p: i64, q: i64, k: u64, n: u64) -> (u64, u64) {
    let nn = n as i128;
    let (p, q) = (p as i128, q as i128);
    let (mut u0, mut u1) = (0i128, 1 % nn);
    let (mut v0, mut v1) = (2 % nn, p.rem_euclid(nn));
    for _ in 0..k {
        let u2 = (p * u1 - q * u0).rem_euclid(nn);
        let v2 = (p * v1 - q * v0).rem_euclid(nn);
        u0 = u1;
        u1 = u2;
        v0 = v1;
        v1 = v2;
    }
    (u0 as u64, v0 as u64)
}

/// Strong Lucas test with Selfridge parameters, by full recurrence.
/// `n` must be odd and greater than 1.
pub fn strong_lucas_naive(n: u64, spf: &[u32]) -> bool {
    let d = match selfridge_naive(n, spf) {
        NaiveSelfridge::D(d) => d,
        _ => return false,
    };
    let p = 1i64;
    let q = (1 - d) / 4;
    let (mut odd, mut s) = (n + 1, 0u32);
    while odd % 2 == 0 {
        odd /= 2;
        s += 1;
    }
    // Walk the whole sequence once and read off the indices we need.
    let nn = n as i128;
    let (pp, qq) = (p as i128, q as i128);
    let (mut u0, mut u1) = (0i128, 1 % nn);
    let (mut v0, mut v1) = (2 % nn, pp.rem_euclid(nn));
    let mut target = odd;
    let mut r = 0u32;
    let mut idx = 0u64;
    loop {
        if idx == target {
            if r == 0 && u0 == 0 {
                return true;
            }
            if v0 == 0 {
                return true;
            }
            r += 1;
            if r >= s {
                return false;
            }
            target *= 2;
        }
        let u2 = (pp * u1 - qq * u0).rem_euclid(nn);
        let v2 = (pp * v1 - qq * v0).rem_euclid(nn);
        u0 = u1;
        u1 = u2;
        v0 = v1;
        v1 = v2;
        idx += 1;
    }
}

/// Strong probable-prime test to base `a` for odd `n > 2`.
pub fn strong_probable_prime_naive(n: u64, a: u64) -> bool {
    let a = a % n;
    if a == 0 {
        return true;
    }
    let (mut d, mut s) = (n - 1, 0u32);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let mut x = powmod(a, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    for _ in 1..s {
        x = mulmod(x, x, n);
        if x == n - 1 {
            return true;
        }
    }
    false
}

/// Odd composites below `limit` that pass every base in `bases`.
pub fn strong_pseudoprimes_below(limit: u64, bases: &[u64]) -> Vec<u64> {
    (9..limit)
        .step_by(2)
        .filter(|&n| !is_prime_trial(n))
        .filter(|&n| {
            bases
                .iter()
                .filter(|&&a| a % n != 0)
                .all(|&a| strong_probable_prime_naive(n, a))
        })
        .collect()
}

/// Korselt's criterion from the factorization.
pub fn is_carmichael_naive(n: u64, spf: &[u32]) -> bool {
    if n < 3 || n.is_multiple_of(2) {
        return false;
    }
    let f = factorize(n, spf);
    f.len() >= 2 && f.iter().all(|&(p, e)| e == 1 && (n - 1).is_multiple_of(p - 1))
}

pub fn carmichaels_below(limit: u64) -> Vec<u64> {
    let spf = spf_sieve(limit as usize);
    (3..limit)
        .step_by(2)
        .filter(|&n| is_carmichael_naive(n, &spf))
        .collect()
}
