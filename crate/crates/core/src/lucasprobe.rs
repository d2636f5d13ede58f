//! Strong Lucas probable-prime testing and the U-bit collapse metric.
//!
//! The collapse of a composite `n` is `bitlen(n) - bitlen(U_d mod n)` where
//! `n + 1 = d * 2^s`. For a residue spread uniformly over `[0, n)` it is small
//! and geometrically distributed; a strong Lucas pseudoprime would need
//! `U_d = 0`, i.e. a collapse equal to the full bit length.

use std::path::Path;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::forge::CompositeRecord;
use crate::ntkernel::{
    is_prime_oracle, lucas_uvq, selfridge_d, LucasParams, OddInteger, Selfridge,
};

/// Bit length; zero for zero.
pub fn bitlen(x: &BigUint) -> u64 {
    x.bits()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrongLucasOutcome {
    pub pass: bool,
    pub u_d: BigUint,
    pub v_zero_round: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrongLucas {
    Evaluated(StrongLucasOutcome),
    /// `gcd(n, 2QD)` exposed a proper factor before any sequence work.
    CompositeByGcd(BigUint),
}

/// Strong Lucas test: passes if `U_d = 0` or `V_{d 2^r} = 0` for some `r < s`.
pub fn strong_lucas(n: &OddInteger, params: &LucasParams) -> StrongLucas {
    let modulus = n.value();
    let guard = BigUint::from(2u32)
        * BigUint::from(params.q.unsigned_abs())
        * BigUint::from(params.discriminant.unsigned_abs());
    let g = guard.gcd(modulus);
    if !g.is_one() && &g != modulus {
        return StrongLucas::CompositeByGcd(g);
    }

    let (u_d, mut v, mut q_pow) = lucas_uvq(params.p, params.q, &params.odd_part, modulus)
        .expect("odd modulus >= 3");
    let mut v_zero_round = None;
    for r in 0..params.twos {
        if v.is_zero() {
            v_zero_round = Some(r);
            break;
        }
        let two_q = (&q_pow << 1usize) % modulus;
        let sq = (&v * &v) % modulus;
        v = if sq >= two_q {
            sq - two_q
        } else {
            modulus - (two_q - sq)
        };
        q_pow = (&q_pow * &q_pow) % modulus;
    }
    StrongLucas::Evaluated(StrongLucasOutcome {
        pass: u_d.is_zero() || v_zero_round.is_some(),
        u_d,
        v_zero_round,
    })
}

/// Outcome of probing one composite.
///
/// `delta`, `u_residue` and `u_residue_bits` are absent when a factor was
/// found before the sequence was evaluated (gcd with the discriminant or
/// `Q`, or a perfect square, in which case the square root is recorded).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollapseMeasurement {
    pub discriminant: Option<i64>,
    pub d_bits: u64,
    pub s: u32,
    pub u_residue: Option<BigUint>,
    pub u_residue_bits: Option<u64>,
    pub n_bits: u64,
    pub delta: Option<u64>,
    pub strong_lucas_pass: bool,
    /// `U_d = 0`: the composite is a strong Lucas pseudoprime by the U condition.
    pub lucas_pseudoprime: bool,
    pub v_zero_round: Option<u32>,
    pub gcd_shortcut: Option<BigUint>,
}

impl CollapseMeasurement {
    /// True when the strong Lucas test was actually run and reported composite.
    pub fn failed_strong_lucas(&self) -> bool {
        self.gcd_shortcut.is_none() && !self.strong_lucas_pass
    }
}

fn measure_odd(n: &OddInteger) -> Result<CollapseMeasurement> {
    let n_bits = bitlen(n.value());
    let n_plus_one = n.value() + 1u32;
    let s = n_plus_one.trailing_zeros().unwrap_or(0) as u32;
    let d_bits = bitlen(&(n_plus_one >> s as usize));
    let shortcut = |factor: BigUint, discriminant: Option<i64>| CollapseMeasurement {
        discriminant,
        d_bits,
        s,
        u_residue: None,
        u_residue_bits: None,
        n_bits,
        delta: None,
        strong_lucas_pass: false,
        lucas_pseudoprime: false,
        v_zero_round: None,
        gcd_shortcut: Some(factor),
    };
    let params = match selfridge_d(n)? {
        Selfridge::Params(p) => p,
        Selfridge::PerfectSquare => return Ok(shortcut(n.value().sqrt(), None)),
        Selfridge::CompositeByGcd {
            factor,
            discriminant,
        } => return Ok(shortcut(factor, Some(discriminant))),
    };
    match strong_lucas(n, &params) {
        StrongLucas::CompositeByGcd(factor) => Ok(shortcut(factor, Some(params.discriminant))),
        StrongLucas::Evaluated(outcome) => {
            let u_bits = bitlen(&outcome.u_d);
            let pseudoprime = outcome.u_d.is_zero();
            let delta = if pseudoprime { n_bits } else { n_bits - u_bits };
            Ok(CollapseMeasurement {
                discriminant: Some(params.discriminant),
                d_bits,
                s,
                u_residue: Some(outcome.u_d),
                u_residue_bits: Some(u_bits),
                n_bits,
                delta: Some(delta),
                strong_lucas_pass: outcome.pass,
                lucas_pseudoprime: pseudoprime,
                v_zero_round: outcome.v_zero_round,
                gcd_shortcut: None,
            })
        }
    }
}

/// Collapse of a forged composite. The record's factorisation is the proof of
/// compositeness, so no probable-prime test is run on `n`.
pub fn measure_collapse(record: &CompositeRecord) -> Result<CollapseMeasurement> {
    let two = BigUint::from(2u8);
    if record.p1 < two || record.p2 < two || record.p3 < two {
        return Err(Error::NotComposite(format!(
            "factor below 2 in record n = {}",
            record.n
        )));
    }
    if &(&record.p1 * &record.p2) * &record.p3 != record.n {
        return Err(Error::NotComposite(format!(
            "n = {} is not p1*p2*p3",
            record.n
        )));
    }
    let n = OddInteger::new(record.n.clone())?;
    measure_odd(&n)
}

/// Collapse of an arbitrary odd composite; primes are rejected.
pub fn measure_composite(n: &BigUint) -> Result<CollapseMeasurement> {
    if is_prime_oracle(n) {
        return Err(Error::PrimeInput(n.clone()));
    }
    measure_odd(&OddInteger::new(n.clone())?)
}

/// Measures a record and enforces the failure guard: a Miller-Rabin resistant
/// composite that passes the strong Lucas test would be a Baillie-PSW
/// counterexample, so it is serialized to `witness_path` and reported as an
/// error instead of being filed quietly.
pub fn probe_guarded(record: &CompositeRecord, witness_path: &Path) -> Result<CollapseMeasurement> {
    let m = measure_collapse(record)?;
    guard_measurement(record, &m, witness_path)?;
    Ok(m)
}

/// The failure guard on its own, for measurements obtained elsewhere.
pub fn guard_measurement(
    record: &CompositeRecord,
    m: &CollapseMeasurement,
    witness_path: &Path,
) -> Result<()> {
    if m.strong_lucas_pass && record.is_mr_resistant() {
        let mut witness = record.clone();
        witness.lucas = Some(m.clone());
        let body = serde_json::to_string_pretty(&crate::dataset::record_to_json(&witness))?;
        std::fs::write(witness_path, body)?;
        eprintln!("!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!");
        eprintln!("!! composite passing Miller-Rabin AND strong Lucas: n = {}", record.n);
        eprintln!("!! witness: {}", witness_path.display());
        eprintln!("!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!!");
        return Err(Error::LucasPseudoprime {
            n: record.n.clone(),
            witness: witness_path.display().to_string(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge::build_triple;

    fn odd(n: u64) -> OddInteger {
        OddInteger::from_u64(n).unwrap()
    }

    fn params(n: u64) -> LucasParams {
        match selfridge_d(&odd(n)).unwrap() {
            Selfridge::Params(p) => p,
            other => panic!("no params for {n}: {other:?}"),
        }
    }

    #[test]
    fn bitlen_examples() {
        assert_eq!(bitlen(&BigUint::zero()), 0);
        assert_eq!(bitlen(&BigUint::one()), 1);
        assert_eq!(bitlen(&BigUint::from(703u32)), 10);
    }

    #[test]
    fn strong_lucas_prime_13() {
        let p = params(13);
        assert_eq!(p.discriminant, 5);
        match strong_lucas(&odd(13), &p) {
            StrongLucas::Evaluated(o) => assert!(o.pass),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn strong_lucas_703_fails() {
        let p = params(703);
        assert_eq!((p.discriminant, p.twos), (5, 6));
        assert_eq!(p.odd_part, BigUint::from(11u32));
        match strong_lucas(&odd(703), &p) {
            StrongLucas::Evaluated(o) => {
                assert!(!o.pass);
                assert_eq!(o.u_d, BigUint::from(89u32));
                assert_eq!(o.v_zero_round, None);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn strong_lucas_5459_passes() {
        let p = params(5459);
        match strong_lucas(&odd(5459), &p) {
            StrongLucas::Evaluated(o) => assert!(o.pass),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn measure_703() {
        let m = measure_composite(&BigUint::from(703u32)).unwrap();
        assert_eq!(m.discriminant, Some(5));
        assert_eq!(m.s, 6);
        assert_eq!(m.u_residue_bits, Some(7));
        assert_eq!(m.delta, Some(3));
        assert!(!m.strong_lucas_pass);
        assert!(m.failed_strong_lucas());
    }

    #[test]
    fn measure_2821_takes_gcd_shortcut() {
        let (p2, p3, n) = build_triple(&BigUint::from(7u32), 2, 5);
        let record = CompositeRecord::new(BigUint::from(7u32), p2, p3, n, 2, 5);
        let m = measure_collapse(&record).unwrap();
        assert_eq!(m.gcd_shortcut, Some(BigUint::from(7u32)));
        assert_eq!(m.discriminant, Some(-7));
        assert_eq!(m.delta, None);
    }

    #[test]
    fn measure_rejects_primes_and_bad_records() {
        assert!(matches!(
            measure_composite(&BigUint::from(13u32)),
            Err(Error::PrimeInput(_))
        ));
        let mut record = CompositeRecord::new(
            BigUint::from(7u32),
            BigUint::from(13u32),
            BigUint::from(31u32),
            BigUint::from(2821u32),
            2,
            5,
        );
        record.n = BigUint::from(2823u32);
        assert!(matches!(
            measure_collapse(&record),
            Err(Error::NotComposite(_))
        ));
    }

    #[test]
    fn pseudoprime_sentinel_sets_full_delta() {
        // 5777 = 53 * 109 has U_d = 0 under Selfridge parameters.
        let m = measure_composite(&BigUint::from(5777u32)).unwrap();
        assert!(m.strong_lucas_pass);
        if m.lucas_pseudoprime {
            assert_eq!(m.delta, Some(m.n_bits));
            assert_eq!(m.u_residue_bits, Some(0));
        }
    }

    #[test]
    fn guard_writes_witness_for_resistant_pass() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("witness.json");
        let (p2, p3, n) = build_triple(&BigUint::from(7u32), 3, 11);
        let mut record = CompositeRecord::new(BigUint::from(7u32), p2, p3, n, 3, 11);
        record.mr_passed = vec![2];
        record.mr_first_fail = None;
        let mut m = measure_composite(&BigUint::from(703u32)).unwrap();
        assert!(guard_measurement(&record, &m, &path).is_ok());
        m.strong_lucas_pass = true;
        let err = guard_measurement(&record, &m, &path).unwrap_err();
        assert!(matches!(err, Error::LucasPseudoprime { .. }));
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"8911\""));
    }
}
