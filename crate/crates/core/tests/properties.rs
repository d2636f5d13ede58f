use collapse_core::analyzer::{histogram, pattern_table, pearson, residue_decomposition, summarize};
use collapse_core::dataset::{parse_dataset, to_json_string, DatasetFile, DatasetMeta, LoadMode};
use collapse_core::forge::{build_triple, crt_merge, korselt_congruence, CompositeRecord};
use collapse_core::lucasprobe::measure_composite;
use collapse_core::ntkernel::{jacobi, lucas_uv, lucas_uvq, OddInteger, StrongProbe};
use collapse_core::oracle;
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use proptest::prelude::*;

fn odd_modulus() -> impl Strategy<Value = u64> {
    (1u64..500_000).prop_map(|x| 2 * x + 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn jacobi_matches_euler_product(n in odd_modulus(), a in -1_000_000i64..1_000_000) {
        let spf = oracle::spf_sieve(0);
        let got = jacobi(&BigInt::from(a), &BigUint::from(n)).unwrap();
        prop_assert_eq!(got, oracle::jacobi_naive(a, n, &spf));
    }

    #[test]
    fn jacobi_is_multiplicative(n in odd_modulus(), a in -5000i64..5000, b in -5000i64..5000) {
        let nb = BigUint::from(n);
        let ja = jacobi(&BigInt::from(a), &nb).unwrap();
        let jb = jacobi(&BigInt::from(b), &nb).unwrap();
        let jab = jacobi(&BigInt::from(a * b), &nb).unwrap();
        prop_assert_eq!(jab, ja * jb);
    }

    #[test]
    fn primes_pass_every_base(start in 1100u64..50_000_000, base in 2u64..1000) {
        let p = (start..).find(|&x| oracle::is_prime_trial(x)).unwrap();
        let probe = StrongProbe::new(&OddInteger::from_u64(p).unwrap());
        prop_assert!(probe.passes(&BigUint::from(base)));
    }

    #[test]
    fn strong_probe_agrees_with_naive(n in odd_modulus(), base in 2u64..100) {
        prop_assume!(n > base + 1);
        let probe = StrongProbe::new(&OddInteger::from_u64(n).unwrap());
        prop_assert_eq!(
            probe.passes(&BigUint::from(base)),
            oracle::strong_probable_prime_naive(n, base)
        );
    }

    #[test]
    fn ladder_matches_recurrence(
        p in -20i64..20,
        q in -20i64..20,
        k in 0u64..3000,
        n in 2u64..1_000_000,
    ) {
        let (u, v) = lucas_uv(p, q, &BigUint::from(k), &BigUint::from(n)).unwrap();
        let (nu, nv) = oracle::lucas_naive(p, q, k, n);
        prop_assert_eq!((u, v), (BigUint::from(nu), BigUint::from(nv)));
    }

    #[test]
    fn lucas_doubling_identities(p in -3i64..=3, q in -3i64..=3, k in 0u64..40) {
        let n: BigUint = (BigUint::from(1u32) << 127usize) - 1u32;
        let (uk, vk, qk) = lucas_uvq(p, q, &BigUint::from(k), &n).unwrap();
        let (u2k, v2k) = lucas_uv(p, q, &BigUint::from(2 * k), &n).unwrap();
        prop_assert_eq!(&u2k, &((&uk * &vk) % &n));
        let two_qk = (&qk * 2u32) % &n;
        let sq = (&vk * &vk) % &n;
        prop_assert_eq!(v2k, (sq + &n - two_qk) % &n);
    }

    #[test]
    fn crt_round_trip(m1 in 1u64..2000, m2 in 1u64..2000, r1 in 0u64..2000, r2 in 0u64..2000) {
        let (r1, r2) = (r1 % m1, r2 % m2);
        match crt_merge(r1, m1, r2, m2) {
            Some((x, l)) => {
                prop_assert_eq!(l, m1.lcm(&m2));
                prop_assert_eq!(x % m1, r1);
                prop_assert_eq!(x % m2, r2);
            }
            None => prop_assert_ne!(r1 % m1.gcd(&m2), r2 % m1.gcd(&m2)),
        }
    }

    #[test]
    fn korselt_class_divisibility(k in 2u64..300, m in 2u64..300, j in 0u64..50) {
        prop_assume!(k != m && k.gcd(&m) == 1);
        let class = korselt_congruence(k, m).unwrap();
        let p1 = class.residue + j * class.modulus;
        prop_assert_eq!((m * p1 + 1) % k, 0);
        prop_assert_eq!((k * p1 + 1) % m, 0);
    }

    #[test]
    fn delta_is_bit_difference(a in 1u64..1_000_000, b in 1u64..1_000_000) {
        let n = BigUint::from(2 * a + 1) * BigUint::from(2 * b + 1);
        let m = measure_composite(&n).unwrap();
        if let (Some(delta), Some(u_bits)) = (m.delta, m.u_residue_bits) {
            prop_assert!(delta <= m.n_bits);
            prop_assert_eq!(delta, m.n_bits - u_bits);
        } else {
            prop_assert!(m.gcd_shortcut.is_some());
        }
    }

    #[test]
    fn pearson_symmetric_scaled_bounded(
        xs in prop::collection::vec(-100.0f64..100.0, 3..40),
        seed in any::<u64>(),
        a in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0],
        b in -50.0f64..50.0,
    ) {
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| x * 0.3 + ((seed.rotate_left(i as u32) % 97) as f64))
            .collect();
        if let (Ok(r), Ok(r_sym)) = (pearson(&xs, &ys), pearson(&ys, &xs)) {
            prop_assert!((-1.0..=1.0).contains(&r));
            prop_assert!((r - r_sym).abs() < 1e-9);
            let scaled: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let r_scaled = pearson(&scaled, &ys).unwrap();
            prop_assert!((r_scaled - a.signum() * r).abs() < 1e-6);
        }
    }

    #[test]
    fn summary_is_ordered(ds in prop::collection::vec(0u64..40, 1..200)) {
        let s = summarize(&ds).unwrap();
        prop_assert!(s.min as f64 <= s.q1 && s.q1 <= s.median);
        prop_assert!(s.median <= s.q3 && s.q3 <= s.max as f64);
        prop_assert!((0.0..=1.0).contains(&s.zero_fraction));
        if ds.len() == 1 {
            prop_assert_eq!(s.mean, ds[0] as f64);
            prop_assert_eq!(s.median, ds[0] as f64);
        }
    }

    #[test]
    fn histogram_accounts_for_every_value(ds in prop::collection::vec(0u64..60, 0..200)) {
        let h = histogram(&ds, 1);
        prop_assert_eq!(h.iter().map(|&(_, c)| c).sum::<u64>(), ds.len() as u64);
        for w in h.windows(2) {
            prop_assert_eq!(w[1].0, w[0].0 + 1);
        }
    }

    #[test]
    fn pattern_shares_sum_to_one(cells in prop::collection::vec((0usize..6, 0u64..5), 1..60)) {
        let triples = [(7u64, 2u64, 5u64), (7, 3, 11), (13, 2, 5), (31, 2, 3), (3, 2, 5), (41, 3, 5)];
        let records: Vec<CompositeRecord> = cells
            .iter()
            .map(|&(i, _)| {
                let (p1, k, m) = triples[i];
                let p1 = BigUint::from(p1);
                let (p2, p3, n) = build_triple(&p1, k, m);
                CompositeRecord::new(p1, p2, p3, n, k, m)
            })
            .collect();
        let t = pattern_table(&records);
        let total: f64 = t.entries.iter().map(|e| e.share).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for w in t.entries.windows(2) {
            prop_assert!(w[0].count > w[1].count || (w[0].count == w[1].count && w[0].pattern < w[1].pattern));
        }
    }
}

#[test]
fn residue_decomposition_round_trips() {
    for r in 0..35u64 {
        let (a, b) = residue_decomposition(r).unwrap();
        let back = (0..35u64).find(|x| x % 5 == a as u64 && x % 7 == b as u64);
        assert_eq!(back, Some(r));
    }
}

#[test]
fn forged_dataset_round_trips() {
    use collapse_core::forge::{Budget, ForgeMode, SweepConfig};
    use collapse_core::lucasprobe::measure_collapse;
    let mut cfg = SweepConfig::new((2, 30), (2, 60), 64);
    cfg.mode = ForgeMode::AllCarmichael;
    cfg.bias = false;
    cfg.seed = 5;
    cfg.budget = Budget::records(40);
    let mut records = collapse_core::forge::forge_sweep(&cfg).unwrap().records;
    for r in records.iter_mut().step_by(2) {
        r.lucas = Some(measure_collapse(r).unwrap());
    }
    let data = DatasetFile::new(
        DatasetMeta::new(5, vec![2, 3, 5, 7, 11], "2024-01-01T00:00:00Z".into(), serde_json::json!({})),
        records,
    );
    let text = to_json_string(&data).unwrap();
    let back = parse_dataset(&text, LoadMode::Strict).unwrap();
    assert_eq!(back.records, data.records);
    assert_eq!(to_json_string(&back).unwrap(), text);
}
