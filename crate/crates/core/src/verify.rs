//! Self-verification suites: each compares the kernel against the slow
//! reference code in [`crate::oracle`] or against hand-computed values.

use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint};

use crate::analyzer::{histogram, pattern_table, pearson, residue_decomposition, summarize};
use crate::dataset::{parse_dataset, to_json_string, DatasetFile, DatasetMeta, LoadMode};
use crate::forge::{build_triple, Budget, CompositeRecord, ForgeMode, SweepConfig};
use crate::lucasprobe::{measure_collapse, strong_lucas, StrongLucas};
use crate::ntkernel::{
    jacobi, lucas_uv, selfridge_d, MrVerdict, OddInteger, Selfridge, StrongProbe,
};
use crate::oracle;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checked: u64,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        SuiteReport {
            name,
            checked: 0,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok && self.failures.len() < 20 {
            self.failures.push(what());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checked > 0
    }

    pub fn line(&self) -> String {
        if self.passed() {
            format!("PASS {} ({} checks)", self.name, self.checked)
        } else {
            format!(
                "FAIL {} ({} checks): {}",
                self.name,
                self.checked,
                self.failures.join("; ")
            )
        }
    }
}

pub const BATTERY: [u64; 5] = [2, 3, 5, 7, 11];

/// Odd `n` in `[3, limit)`: the kernel battery finds a witness exactly when
/// `n` is composite and not a strong pseudoprime to every base.
pub fn mr_battery_suite(limit: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("miller-rabin battery vs trial division");
    let exceptions: BTreeSet<u64> = oracle::strong_pseudoprimes_below(limit, &BATTERY)
        .into_iter()
        .collect();
    for n in (3..limit).step_by(2) {
        let odd = OddInteger::from_u64(n).expect("odd");
        let probe = StrongProbe::new(&odd);
        let witnessed = BATTERY.iter().filter(|&&a| a < n - 1).any(|&a| {
            matches!(probe.test(a), Ok(o) if o.verdict == MrVerdict::CompositeWitnessed)
        });
        let composite = !oracle::is_prime_trial(n);
        let expected = composite && !exceptions.contains(&n);
        rep.check(witnessed == expected, || {
            format!("n = {n}: witnessed {witnessed}, expected {expected}")
        });
    }
    rep
}

/// The kernel's verdict: Selfridge parameters, then the strong test.
pub fn kernel_strong_lucas(n: u64) -> bool {
    let odd = OddInteger::from_u64(n).expect("odd");
    match selfridge_d(&odd) {
        Ok(Selfridge::Params(p)) => match strong_lucas(&odd, &p) {
            StrongLucas::Evaluated(o) => o.pass,
            StrongLucas::CompositeByGcd(_) => false,
        },
        _ => false,
    }
}

/// Strong Lucas pseudoprimes below `limit` according to the naive oracle.
pub fn oracle_lucas_pseudoprimes(limit: u64) -> Vec<u64> {
    let spf = oracle::spf_sieve(limit as usize);
    (9..limit)
        .step_by(2)
        .filter(|&n| spf[n as usize] as u64 != n && oracle::strong_lucas_naive(n, &spf))
        .collect()
}

pub fn strong_lucas_suite(limit: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("strong lucas vs naive recurrence");
    let expected: BTreeSet<u64> = oracle_lucas_pseudoprimes(limit).into_iter().collect();
    let spf = oracle::spf_sieve(limit as usize);
    for n in (9..limit).step_by(2) {
        if spf[n as usize] as u64 == n {
            continue;
        }
        let got = kernel_strong_lucas(n);
        rep.check(got == expected.contains(&n), || {
            format!("n = {n}: kernel {got}, oracle {}", expected.contains(&n))
        });
    }
    rep
}

pub fn prime_transparency_suite(lo: u64, hi: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("primes pass strong lucas");
    for p in (lo | 1..hi).step_by(2).filter(|&p| oracle::is_prime_trial(p)) {
        rep.check(kernel_strong_lucas(p), || format!("prime {p} failed"));
    }
    rep
}

pub fn jacobi_suite(limit: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("jacobi vs euler criterion");
    let spf = oracle::spf_sieve(limit as usize);
    for n in (3..limit).step_by(2) {
        let nb = BigUint::from(n);
        for a in -(n as i64)..(2 * n as i64) {
            let got = jacobi(&BigInt::from(a), &nb).expect("odd modulus");
            let want = oracle::jacobi_naive(a, n, &spf);
            rep.check(got == want, || format!("({a}/{n}): {got} vs {want}"));
        }
    }
    rep
}

pub fn lucas_ladder_suite() -> SuiteReport {
    let mut rep = SuiteReport::new("lucas ladder vs recurrence");
    for &n in &[3u64, 15, 101, 703, 5459, 65537] {
        for &(p, q) in &[(1i64, -1i64), (1, 2), (3, -5), (1, -3), (2, 1)] {
            for k in [0u64, 1, 2, 7, 64, 100, 511] {
                let got = lucas_uv(p, q, &BigUint::from(k), &BigUint::from(n)).expect("n >= 2");
                let (u, v) = oracle::lucas_naive(p, q, k, n);
                rep.check(got == (BigUint::from(u), BigUint::from(v)), || {
                    format!("P={p} Q={q} k={k} n={n}")
                });
            }
        }
    }
    rep
}

/// Carmichaels produced by an all-Carmichael sweep with `target_bits`
/// over coprime cells up to `max_multiplier`, each checked against a
/// Korselt scan below `2^20`.
pub fn korselt_soundness(target_bits: u32, max_multiplier: u64) -> (SuiteReport, BTreeSet<u64>) {
    let mut rep = SuiteReport::new("forge emits only carmichael numbers");
    let known: BTreeSet<u64> = oracle::carmichaels_below(1 << 20).into_iter().collect();
    let mut cfg = SweepConfig::new((2, max_multiplier), (2, max_multiplier), target_bits);
    cfg.mode = ForgeMode::AllCarmichael;
    cfg.bias = false;
    cfg.seed = 1;
    cfg.budget = Budget::records(u64::MAX);
    cfg.cell_quota = 1 << 16;
    let mut emitted = BTreeSet::new();
    match crate::forge::forge_sweep(&cfg) {
        Ok(out) => {
            for r in out.records {
                let n = u64::try_from(&r.n).unwrap_or(u64::MAX);
                rep.check(known.contains(&n), || format!("{} is not a Carmichael number < 2^20", r.n));
                emitted.insert(n);
            }
        }
        Err(e) => rep.check(false, || format!("sweep failed: {e}")),
    }
    (rep, emitted)
}

pub fn analyzer_suite() -> SuiteReport {
    let mut rep = SuiteReport::new("analyzer hand-computed examples");
    let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
    match summarize(&[0, 1, 2, 3]) {
        Ok(s) => {
            rep.check(close(s.mean, 1.5) && close(s.median, 1.5), || "mean/median".into());
            rep.check(close(s.q1, 0.75) && close(s.q3, 2.25), || "quartiles".into());
            rep.check(close(s.zero_fraction, 0.25), || "zero fraction".into());
        }
        Err(e) => rep.check(false, || e.to_string()),
    }
    match summarize(&[5]) {
        Ok(s) => rep.check(s.mean == 5.0 && s.std == 0.0 && !s.std_defined, || "singleton".into()),
        Err(e) => rep.check(false, || e.to_string()),
    }
    let x = [1.0, 2.0, 3.0];
    let p = |ys: &[f64]| pearson(&x, ys).ok();
    rep.check(p(&[2.0, 4.0, 6.0]).is_some_and(|r| close(r, 1.0)), || "pearson +1".into());
    rep.check(p(&[6.0, 4.0, 2.0]).is_some_and(|r| close(r, -1.0)), || "pearson -1".into());
    rep.check(
        p(&[1.0, 1.0, 2.0]).is_some_and(|r| close(r, 0.75f64.sqrt())),
        || "pearson 0.866".into(),
    );
    rep.check(p(&[1.0, 1.0, 1.0]).is_none(), || "constant series".into());
    rep.check(histogram(&[0, 0, 1], 1) == vec![(0, 2), (1, 1)], || "histogram".into());
    rep.check(residue_decomposition(23).ok() == Some((3, 2)), || "23 mod 35".into());
    rep.check(residue_decomposition(8).ok() == Some((3, 1)), || "8 mod 35".into());
    let rec = |p1: u64, k, m| {
        let p1 = BigUint::from(p1);
        let (p2, p3, n) = build_triple(&p1, k, m);
        CompositeRecord::new(p1, p2, p3, n, k, m)
    };
    let t = pattern_table(&[rec(7, 2, 5), rec(7, 2, 5)]);
    rep.check(
        t.entries.len() == 1 && t.entries[0].pattern == [7, 13, 31] && t.entries[0].count == 2,
        || "pattern table".into(),
    );
    rep
}

pub fn collapse_suite() -> SuiteReport {
    let mut rep = SuiteReport::new("collapse measurement examples");
    let rec = |p1: u64, k, m| {
        let p1 = BigUint::from(p1);
        let (p2, p3, n) = build_triple(&p1, k, m);
        CompositeRecord::new(p1, p2, p3, n, k, m)
    };
    match measure_collapse(&rec(7, 3, 11)) {
        Ok(m) => {
            let ok = match (m.delta, m.u_residue_bits) {
                (Some(d), Some(u)) => d == m.n_bits - u,
                (None, None) => m.gcd_shortcut.is_some(),
                _ => false,
            };
            rep.check(ok, || format!("8911 measurement inconsistent: {m:?}"));
        }
        Err(e) => rep.check(false, || e.to_string()),
    }
    match measure_collapse(&rec(7, 2, 5)) {
        Ok(m) => rep.check(
            m.gcd_shortcut == Some(BigUint::from(7u32)),
            || format!("2821 gcd shortcut: {:?}", m.gcd_shortcut),
        ),
        Err(e) => rep.check(false, || e.to_string()),
    }
    rep
}

pub fn dataset_suite() -> SuiteReport {
    let mut rep = SuiteReport::new("dataset round trip");
    let p1 = BigUint::from(7u32);
    let (p2, p3, n) = build_triple(&p1, 2, 5);
    let mut r = CompositeRecord::new(p1, p2, p3, n, 2, 5);
    r.lucas = measure_collapse(&r).ok();
    let data = DatasetFile::new(
        DatasetMeta::new(42, BATTERY.to_vec(), "1970-01-01T00:00:00Z".into(), serde_json::json!({})),
        vec![r],
    );
    match to_json_string(&data).and_then(|s| {
        let back = parse_dataset(&s, LoadMode::Strict)?;
        Ok((s, back))
    }) {
        Ok((s, back)) => {
            rep.check(back.records == data.records, || "records differ".into());
            rep.check(
                to_json_string(&back).is_ok_and(|t| t == s),
                || "bytes differ".into(),
            );
        }
        Err(e) => rep.check(false, || e.to_string()),
    }
    rep
}

/// Sizes for [`run_all`].
#[derive(Debug, Clone, Copy)]
pub struct VerifyLimits {
    pub mr_limit: u64,
    pub lucas_limit: u64,
    pub prime_limit: u64,
    pub jacobi_limit: u64,
}

impl Default for VerifyLimits {
    fn default() -> Self {
        VerifyLimits {
            mr_limit: 100_000,
            lucas_limit: 100_000,
            prime_limit: 100_000,
            jacobi_limit: 300,
        }
    }
}

pub fn run_all(limits: VerifyLimits) -> Vec<SuiteReport> {
    let (korselt, emitted) = korselt_soundness(11, 50);
    let mut korselt = korselt;
    for n in [2821u64, 8911] {
        korselt.check(emitted.contains(&n), || format!("{n} not emitted"));
    }
    vec![
        jacobi_suite(limits.jacobi_limit),
        lucas_ladder_suite(),
        mr_battery_suite(limits.mr_limit),
        strong_lucas_suite(limits.lucas_limit),
        prime_transparency_suite(100, limits.prime_limit),
        collapse_suite(),
        korselt,
        analyzer_suite(),
        dataset_suite(),
    ]
}
