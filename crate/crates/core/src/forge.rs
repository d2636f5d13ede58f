//! Construction of three-prime Carmichael numbers
//! `n = p1 * (k (p1 - 1) + 1) * (M (p1 - 1) + 1)` and Miller-Rabin filtering.
//!
//! With `h = p1 - 1`, Korselt's criterion for this shape reduces to
//! `k | M p1 + 1` and `M | k p1 + 1` once all three factors are prime, so each
//! `(k, M)` cell is an arithmetic progression of admissible `p1`. Candidates
//! are sieved against small primes for all three factors at once and only
//! then handed to the primality oracle.
//!
//! In biased mode the progression is further restricted, per prime factor
//! `q` of the base set, to classes of `p1 mod 4q` (mod 8 for `q = 2`) on which
//! the quadratic characters of `q` at `p1`, `p2` and `p3` coincide. With all
//! three factors `= 3 mod 4` that makes every Carmichael number of the cell a
//! strong pseudoprime to every base built from those primes.

use std::collections::{HashSet, VecDeque};
use std::time::{Duration, Instant};

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lucasprobe::CollapseMeasurement;
use crate::ntkernel::{
    is_prime_oracle, jacobi_u64, quick_composite_screen, OddInteger, StrongProbe,
};
use crate::parallel::{Executor, Strategy};

/// Default Miller-Rabin battery: the prime bases through 11.
pub const DEFAULT_BASES: [u64; 5] = [2, 3, 5, 7, 11];

/// Bits below / above the target that an emitted composite may have.
pub const BITS_BELOW_TARGET: u32 = 8;
pub const BITS_ABOVE_TARGET: u32 = 9;

const WINDOW: u64 = 4096;
const SIEVE_LIMIT: u32 = 4096;
const MAX_SHUFFLED_WINDOWS: u64 = 1 << 16;
const BATCH_CELLS: usize = 32;
const MATERIALIZE_GRID_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForgeMode {
    AllCarmichael,
    MrResistant,
}

/// Run limits. Whichever is reached first stops the run; `None` means
/// unlimited on that axis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Budget {
    pub records: Option<u64>,
    pub candidates: Option<u64>,
    pub duration: Option<Duration>,
}

impl Budget {
    pub fn records(n: u64) -> Self {
        Budget {
            records: Some(n),
            ..Budget::default()
        }
    }

    pub fn candidates(n: u64) -> Self {
        Budget {
            candidates: Some(n),
            ..Budget::default()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.records == Some(0) || self.candidates == Some(0) || self.duration == Some(Duration::ZERO)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructionParams {
    pub k: u64,
    pub m: u64,
    pub target_bits: u32,
    pub bases: Vec<u64>,
    pub seed: u64,
    pub budget: Budget,
    pub bias: bool,
}

impl ConstructionParams {
    pub fn new(k: u64, m: u64, target_bits: u32) -> Self {
        ConstructionParams {
            k,
            m,
            target_bits,
            bases: DEFAULT_BASES.to_vec(),
            seed: 0,
            budget: Budget::default(),
            bias: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.m < 2 {
            return Err(Error::InvalidParams(format!(
                "k and M must be >= 2 (k = {}, M = {})",
                self.k, self.m
            )));
        }
        if self.k == self.m {
            return Err(Error::InvalidParams(format!("k = M = {}", self.k)));
        }
        if self.target_bits < 4 {
            return Err(Error::InvalidParams(format!(
                "target_bits = {} is too small",
                self.target_bits
            )));
        }
        if self.bases.is_empty() || self.bases.iter().any(|&b| b < 2) {
            return Err(Error::InvalidParams(
                "bases must be non-empty and each >= 2".into(),
            ));
        }
        Ok(())
    }

    pub fn bit_window(&self) -> (u32, u32) {
        (
            self.target_bits.saturating_sub(BITS_BELOW_TARGET).max(3),
            self.target_bits + BITS_ABOVE_TARGET,
        )
    }
}

/// One engineered composite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositeRecord {
    pub p1: BigUint,
    pub p2: BigUint,
    pub p3: BigUint,
    pub n: BigUint,
    pub n_bits: u64,
    pub k: u64,
    pub m: u64,
    pub residues_mod35: [u8; 3],
    pub mr_passed: Vec<u64>,
    pub mr_first_fail: Option<u64>,
    pub lucas: Option<CollapseMeasurement>,
}

impl CompositeRecord {
    pub fn new(p1: BigUint, p2: BigUint, p3: BigUint, n: BigUint, k: u64, m: u64) -> Self {
        let r = |p: &BigUint| (p % 35u32).to_u8().expect("residue below 35");
        let residues_mod35 = [r(&p1), r(&p2), r(&p3)];
        CompositeRecord {
            n_bits: n.bits(),
            p1,
            p2,
            p3,
            n,
            k,
            m,
            residues_mod35,
            mr_passed: Vec::new(),
            mr_first_fail: None,
            lucas: None,
        }
    }

    /// Passed a non-empty Miller-Rabin battery without a witness.
    pub fn is_mr_resistant(&self) -> bool {
        self.mr_first_fail.is_none() && !self.mr_passed.is_empty()
    }

    pub fn delta(&self) -> Option<u64> {
        self.lucas.as_ref().and_then(|m| m.delta)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ThroughputStats {
    /// Korselt-valid composites seen, whether or not they were emitted.
    pub carmichaels_emitted: u64,
    pub mr_resistant_emitted: u64,
    /// Sieve survivors handed to the primality tests.
    pub candidates_examined: u64,
    pub elapsed: Duration,
}

impl ThroughputStats {
    pub fn carmichael_rate(&self) -> f64 {
        let secs = self.elapsed.as_secs_f64();
        if secs == 0.0 {
            0.0
        } else {
            self.carmichaels_emitted as f64 * 60.0 / secs
        }
    }

    pub fn resistant_rate_per_hour(&self) -> f64 {
        let secs = self.elapsed.as_secs_f64();
        if secs == 0.0 {
            0.0
        } else {
            self.mr_resistant_emitted as f64 * 3600.0 / secs
        }
    }

    pub fn resistance_yield(&self) -> Option<f64> {
        (self.carmichaels_emitted > 0)
            .then(|| self.mr_resistant_emitted as f64 / self.carmichaels_emitted as f64)
    }

    /// Sums counters; elapsed time is the caller's to set.
    pub fn absorb(&mut self, other: &ThroughputStats) {
        self.carmichaels_emitted += other.carmichaels_emitted;
        self.mr_resistant_emitted += other.mr_resistant_emitted;
        self.candidates_examined += other.candidates_examined;
    }
}

/// Residue class `p1 = residue (mod modulus)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KorseltClass {
    pub residue: u64,
    pub modulus: u64,
}

fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let ext = (a as i128).extended_gcd(&(m as i128));
    (ext.gcd == 1).then(|| ext.x.rem_euclid(m as i128) as u64)
}

/// Combines `x = r1 (mod m1)` and `x = r2 (mod m2)`; `None` if incompatible.
pub fn crt_merge(r1: u64, m1: u64, r2: u64, m2: u64) -> Option<(u64, u64)> {
    let g = m1.gcd(&m2);
    if r1 % g != r2 % g {
        return None;
    }
    let lcm = (m1 / g) as u128 * m2 as u128;
    let lcm_u64 = u64::try_from(lcm).ok()?;
    // x = r1 + m1 * t with m1 * t = r2 - r1 (mod m2)
    let m2g = m2 / g;
    let diff = ((r2 as i128 - r1 as i128) / g as i128).rem_euclid(m2g.max(1) as i128) as u64;
    let inv = mod_inverse((m1 / g) % m2g.max(1), m2g.max(1))?;
    let t = (diff as u128 * inv as u128) % m2g.max(1) as u128;
    let x = (r1 as u128 + m1 as u128 * t) % lcm;
    Some((x as u64, lcm_u64))
}

/// The class of `p1` making `p1 (k h + 1)(M h + 1)`, `h = p1 - 1`, satisfy
/// Korselt's divisibility conditions: `M p1 = -1 (mod k)` and `k p1 = -1 (mod M)`.
pub fn korselt_congruence(k: u64, m: u64) -> Result<KorseltClass> {
    if k < 2 || m < 2 || k == m {
        return Err(Error::InvalidParams(format!(
            "korselt_congruence needs k, M >= 2 and k != M (k = {k}, M = {m})"
        )));
    }
    if k.gcd(&m) != 1 {
        return Err(Error::NoKorseltSolution { k, m });
    }
    let inv_m = mod_inverse(m % k, k).expect("coprime");
    let inv_k = mod_inverse(k % m, m).expect("coprime");
    let r_k = (k - inv_m) % k;
    let r_m = (m - inv_k) % m;
    let (residue, modulus) = crt_merge(r_k, k, r_m, m).expect("coprime moduli");
    Ok(KorseltClass { residue, modulus })
}

/// `(p2, p3, n)` with `p2 = k (p1 - 1) + 1`, `p3 = M (p1 - 1) + 1`, `n = p1 p2 p3`.
pub fn build_triple(p1: &BigUint, k: u64, m: u64) -> (BigUint, BigUint, BigUint) {
    let h = p1 - 1u32;
    let p2 = &h * k + 1u32;
    let p3 = &h * m + 1u32;
    let n = &(p1 * &p2) * &p3;
    (p2, p3, n)
}

/// Korselt's criterion for a product of three distinct primes.
pub fn korselt_check(p1: &BigUint, p2: &BigUint, p3: &BigUint) -> bool {
    if p1 == p2 || p1 == p3 || p2 == p3 {
        return false;
    }
    let factors = [p1, p2, p3];
    if !factors.iter().all(|p| is_prime_oracle(p)) {
        return false;
    }
    let n_minus_one = &(&(p1 * p2) * p3) - 1u32;
    factors
        .iter()
        .all(|p| (&n_minus_one % (*p - 1u32)).is_zero())
}

/// Runs the bases in order and stops at the first witness.
///
/// Bases `>= n - 1` carry no information for `n` and are skipped.
pub fn mr_filter(n: &OddInteger, bases: &[u64]) -> (Vec<u64>, Option<u64>) {
    let probe = StrongProbe::new(n);
    let mut passed = Vec::with_capacity(bases.len());
    for &base in bases {
        if BigUint::from(base) >= n.value() - 1u32 {
            continue;
        }
        if probe.passes(&BigUint::from(base)) {
            passed.push(base);
        } else {
            return (passed, Some(base));
        }
    }
    (passed, None)
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn cell_seed(seed: u64, k: u64, m: u64, pass: u64) -> u64 {
    splitmix(splitmix(splitmix(seed ^ k.rotate_left(17)) ^ m.rotate_left(41)) ^ pass)
}

fn small_primes(limit: u32) -> Vec<u32> {
    let mut composite = vec![false; limit as usize + 1];
    let mut out = Vec::new();
    for i in 2..=limit as usize {
        if !composite[i] {
            out.push(i as u32);
            let mut j = i * i;
            while j <= limit as usize {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

fn prime_factors(mut v: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2;
    while f * f <= v {
        if v.is_multiple_of(f) {
            out.push(f);
            while v.is_multiple_of(f) {
                v /= f;
            }
        }
        f += 1;
    }
    if v > 1 {
        out.push(v);
    }
    out
}

/// Residue class for `p1` after the optional Miller-Rabin bias. `aligned`
/// is true when every prime factor of the bases got a class on which the
/// three quadratic characters agree.
fn progression(
    params: &ConstructionParams,
    rng: &mut ChaCha8Rng,
) -> Result<(u64, u64, bool)> {
    let class = korselt_congruence(params.k, params.m)?;
    let (mut r, mut l) = crt_merge(class.residue, class.modulus, 1, 2)
        .expect("Korselt class of p1 is compatible with p1 odd");
    let mut aligned = params.bias && params.k % 2 == 1 && params.m % 2 == 1;
    if !params.bias {
        return Ok((r, l, false));
    }
    if let Some(merged) = crt_merge(r, l, 3, 4) {
        (r, l) = merged;
    } else {
        aligned = false;
    }
    let mut primes: Vec<u64> = params.bases.iter().flat_map(|&b| prime_factors(b)).collect();
    primes.sort_unstable();
    primes.dedup();
    for q in primes {
        let mq = if q == 2 { 8 } else { 4 * q };
        let g = l.gcd(&mq);
        let admissible: Vec<u64> = (1..mq)
            .step_by(2)
            .filter(|c| c % g == r % g)
            .collect();
        let first = |c: u64| jacobi_u64(q, c);
        let follow = |c: u64, mult: u64| {
            let shifted = ((mult % mq) * (c + mq - 1) + 1) % mq;
            jacobi_u64(q, shifted)
        };
        let preferred: Vec<u64> = if aligned {
            admissible
                .iter()
                .copied()
                .filter(|&c| {
                    let s = first(c);
                    s != 0 && follow(c, params.k) == s && follow(c, params.m) == s
                })
                .collect()
        } else {
            Vec::new()
        };
        let basic: Vec<u64> = admissible.iter().copied().filter(|&c| first(c) == -1).collect();
        let pool = if !preferred.is_empty() {
            preferred
        } else {
            aligned = false;
            basic
        };
        if let Some(&c) = pool.choose(rng) {
            if let Some(merged) = crt_merge(r, l, c, mq) {
                (r, l) = merged;
            }
        }
    }
    Ok((r, l, aligned))
}

/// `p1 (k (p1 - 1) + 1)(M (p1 - 1) + 1)`.
fn triple_product(p1: &BigUint, k: u64, m: u64) -> BigUint {
    build_triple(p1, k, m).2
}

/// Smallest `p1 >= 1` with `n(p1) >= bound`.
fn first_p1_reaching(bound: &BigUint, k: u64, m: u64) -> BigUint {
    let mut lo = BigUint::one();
    let mut hi = BigUint::one() << (bound.bits() / 3 + 2) as usize;
    while lo < hi {
        let mid: BigUint = (&lo + &hi) >> 1usize;
        if &triple_product(&mid, k, m) >= bound {
            hi = mid;
        } else {
            lo = mid + 1u32;
        }
    }
    lo
}

#[derive(Debug, Clone)]
struct SievePrime {
    q: u32,
    /// `L^{-1} mod q`.
    stride_inv: u32,
    forbidden: Vec<u32>,
}

#[derive(Debug, Clone)]
enum WindowOrder {
    Shuffled { order: Vec<u32>, next: usize },
    Random,
}

#[derive(Debug, Clone)]
struct Binade {
    bits: u32,
    /// First progression index in this binade.
    j_lo: BigUint,
    /// Number of progression indices in this binade.
    count: BigUint,
    order: WindowOrder,
}

/// Sieved `p1` candidates for one `(k, M)` cell.
///
/// The progression is split by the bit length of the resulting `n`; each
/// draw picks a binade uniformly and then a window of consecutive progression
/// terms, either from a seeded permutation of all windows (small binades) or
/// at a seeded random offset (large ones). Every surviving term is yielded.
#[derive(Debug, Clone)]
pub struct CandidateStream {
    k: u64,
    m: u64,
    residue: u64,
    modulus: u64,
    aligned: bool,
    binades: Vec<Binade>,
    sieve: Vec<SievePrime>,
    rng: ChaCha8Rng,
    pending: VecDeque<BigUint>,
    marks: Vec<bool>,
}

impl CandidateStream {
    pub fn class(&self) -> (u64, u64) {
        (self.residue, self.modulus)
    }

    /// All bias classes achieved agreement of the quadratic characters.
    pub fn aligned(&self) -> bool {
        self.aligned
    }

    pub fn is_exhausted(&self) -> bool {
        self.pending.is_empty() && self.binades.is_empty()
    }

    fn build(params: &ConstructionParams, pass: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(params.seed, params.k, params.m, pass));
        let (residue, modulus, aligned) = progression(params, &mut rng)?;
        let (k, m) = (params.k, params.m);
        let (lo_bits, hi_bits) = params.bit_window();
        let five = BigUint::from(5u32);
        let res_big = BigUint::from(residue);
        let mut binades = Vec::new();
        let mut floor: Option<BigUint> = None;
        for bits in lo_bits..=hi_bits {
            let lo = first_p1_reaching(&(BigUint::one() << (bits - 1) as usize), k, m).max(five.clone());
            let hi_excl = first_p1_reaching(&(BigUint::one() << bits as usize), k, m);
            if hi_excl <= lo || hi_excl <= res_big {
                continue;
            }
            let hi = hi_excl - 1u32;
            let j_lo = if lo > res_big {
                (&lo - &res_big).div_ceil(&BigUint::from(modulus))
            } else {
                BigUint::zero()
            };
            let j_hi = (&hi - &res_big) / modulus;
            if j_hi < j_lo {
                continue;
            }
            let count = &j_hi - &j_lo + 1u32;
            let p1_first = &res_big + &j_lo * modulus;
            floor = Some(match floor {
                Some(f) if f <= p1_first => f,
                _ => p1_first,
            });
            let windows = count.div_ceil(&BigUint::from(WINDOW));
            let order = match windows.to_u64() {
                Some(w) if w <= MAX_SHUFFLED_WINDOWS => {
                    let mut order: Vec<u32> = (0..w as u32).collect();
                    order.shuffle(&mut rng);
                    WindowOrder::Shuffled { order, next: 0 }
                }
                _ => WindowOrder::Random,
            };
            binades.push(Binade {
                bits,
                j_lo,
                count,
                order,
            });
        }

        let floor = floor.unwrap_or_default();
        let mut sieve = Vec::new();
        let mut degenerate = false;
        for q in small_primes(SIEVE_LIMIT) {
            let q64 = q as u64;
            if BigUint::from(q) >= floor {
                break;
            }
            let r1 = residue % q64;
            if modulus % q64 == 0 {
                // Every candidate shares this residue; a zero kills the cell.
                let r2 = (k % q64 * ((r1 + q64 - 1) % q64) + 1) % q64;
                let r3 = (m % q64 * ((r1 + q64 - 1) % q64) + 1) % q64;
                if r1 == 0 || r2 == 0 || r3 == 0 {
                    degenerate = true;
                    break;
                }
                continue;
            }
            let stride_inv = mod_inverse(modulus % q64, q64).expect("q does not divide L") as u32;
            let mut forbidden = vec![0u32];
            for mult in [k, m] {
                if mult % q64 != 0 {
                    let inv = mod_inverse(mult % q64, q64).expect("prime modulus");
                    forbidden.push(((1 + q64 - inv) % q64) as u32);
                }
            }
            forbidden.sort_unstable();
            forbidden.dedup();
            sieve.push(SievePrime {
                q,
                stride_inv,
                forbidden,
            });
        }
        if degenerate {
            binades.clear();
        }
        Ok(CandidateStream {
            k,
            m,
            residue,
            modulus,
            aligned,
            binades,
            sieve,
            rng,
            pending: VecDeque::new(),
            marks: vec![false; WINDOW as usize],
        })
    }

    /// Sieves the next window into `pending`. Returns false once no binade
    /// has windows left.
    fn refill(&mut self) -> bool {
        while self.pending.is_empty() {
            if self.binades.is_empty() {
                return false;
            }
            let pick = self.rng.gen_range(0..self.binades.len());
            let start = {
                let binade = &mut self.binades[pick];
                match &mut binade.order {
                    WindowOrder::Shuffled { order, next } => {
                        let w = order[*next];
                        *next += 1;
                        BigUint::from(w as u64 * WINDOW)
                    }
                    WindowOrder::Random => self.rng.gen_biguint_below(&binade.count),
                }
            };
            let binade = &self.binades[pick];
            let remaining = &binade.count - &start;
            let len = remaining.to_u64().map_or(WINDOW, |r| r.min(WINDOW)) as usize;
            let j0 = &binade.j_lo + &start;
            let p1_base = BigUint::from(self.residue) + &j0 * self.modulus;
            self.sieve_window(&p1_base, len);
            let exhausted = matches!(&self.binades[pick].order, WindowOrder::Shuffled { order, next } if *next >= order.len());
            if exhausted {
                self.binades.swap_remove(pick);
            }
        }
        true
    }

    fn sieve_window(&mut self, p1_base: &BigUint, len: usize) {
        let marks = &mut self.marks[..len];
        marks.iter_mut().for_each(|x| *x = false);
        for sp in &self.sieve {
            let q = sp.q as u64;
            let r0 = (p1_base % q).to_u64().expect("small");
            for &f in &sp.forbidden {
                let mut j = ((f as u64 + q - r0) % q * sp.stride_inv as u64 % q) as usize;
                while j < len {
                    marks[j] = true;
                    j += q as usize;
                }
            }
        }
        for (j, &dead) in marks.iter().enumerate() {
            if !dead {
                self.pending.push_back(p1_base + BigUint::from(j as u64 * self.modulus));
            }
        }
    }

    /// Bit lengths `n` may take in this cell.
    pub fn binade_bits(&self) -> Vec<u32> {
        self.binades.iter().map(|b| b.bits).collect()
    }

    pub fn multipliers(&self) -> (u64, u64) {
        (self.k, self.m)
    }
}

impl Iterator for CandidateStream {
    type Item = BigUint;

    fn next(&mut self) -> Option<BigUint> {
        if self.pending.is_empty() && !self.refill() {
            return None;
        }
        self.pending.pop_front()
    }
}

/// Seeded stream of `p1` candidates for one cell.
pub fn candidate_stream(params: &ConstructionParams) -> Result<CandidateStream> {
    CandidateStream::build(params, 0)
}

/// Forge for a single `(k, M)` cell. Iterating yields records; stats cover
/// every Korselt-valid composite seen.
#[derive(Debug)]
pub struct CellForge {
    stream: CandidateStream,
    params: ConstructionParams,
    mode: ForgeMode,
    stats: ThroughputStats,
    emitted: u64,
    started: Instant,
    deadline: Option<Instant>,
    stopped: bool,
}

impl CellForge {
    fn new(params: &ConstructionParams, mode: ForgeMode, pass: u64, deadline: Option<Instant>) -> Result<Self> {
        let stream = CandidateStream::build(params, pass)?;
        params.validate()?;
        let started = Instant::now();
        let own_deadline = params.budget.duration.map(|d| started + d);
        let deadline = match (deadline, own_deadline) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Ok(CellForge {
            stream,
            params: params.clone(),
            mode,
            stats: ThroughputStats::default(),
            emitted: 0,
            started,
            deadline,
            stopped: params.budget.is_zero(),
        })
    }

    pub fn stats(&self) -> ThroughputStats {
        let mut s = self.stats;
        s.elapsed = self.started.elapsed();
        s
    }

    pub fn stream(&self) -> &CandidateStream {
        &self.stream
    }

    /// True once the candidate stream has nothing left.
    pub fn exhausted(&self) -> bool {
        self.stream.is_exhausted()
    }

    fn out_of_budget(&self) -> bool {
        let b = &self.params.budget;
        b.records.is_some_and(|r| self.emitted >= r)
            || b.candidates.is_some_and(|c| self.stats.candidates_examined >= c)
            || self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn evaluate(&mut self, p1: BigUint) -> Option<CompositeRecord> {
        self.stats.candidates_examined += 1;
        let (k, m) = (self.params.k, self.params.m);
        if quick_composite_screen(&p1) {
            return None;
        }
        let (p2, p3, n) = build_triple(&p1, k, m);
        if quick_composite_screen(&p2) || quick_composite_screen(&p3) {
            return None;
        }
        if !(is_prime_oracle(&p1) && is_prime_oracle(&p2) && is_prime_oracle(&p3)) {
            return None;
        }
        let n_minus_one = &n - 1u32;
        for p in [&p1, &p2, &p3] {
            assert!(
                (&n_minus_one % (p - 1u32)).is_zero(),
                "Korselt class violated for k = {k}, M = {m}, p1 = {p1}"
            );
        }
        let mut record = CompositeRecord::new(p1, p2, p3, n, k, m);
        let odd = OddInteger::new(record.n.clone()).expect("product of odd primes");
        let (passed, first_fail) = mr_filter(&odd, &self.params.bases);
        record.mr_passed = passed;
        record.mr_first_fail = first_fail;
        self.stats.carmichaels_emitted += 1;
        let resistant = record.is_mr_resistant();
        if resistant {
            self.stats.mr_resistant_emitted += 1;
        }
        match self.mode {
            ForgeMode::AllCarmichael => Some(record),
            ForgeMode::MrResistant if resistant => Some(record),
            ForgeMode::MrResistant => None,
        }
    }
}

impl Iterator for CellForge {
    type Item = CompositeRecord;

    fn next(&mut self) -> Option<CompositeRecord> {
        while !self.stopped {
            if self.out_of_budget() {
                self.stopped = true;
                break;
            }
            let Some(p1) = self.stream.next() else {
                self.stopped = true;
                break;
            };
            if let Some(record) = self.evaluate(p1) {
                self.emitted += 1;
                return Some(record);
            }
        }
        None
    }
}

/// Forges composites for one `(k, M)` cell until its budget runs out or the
/// candidate stream is exhausted.
pub fn forge_run(params: &ConstructionParams, mode: ForgeMode) -> Result<CellForge> {
    CellForge::new(params, mode, 0, None)
}

/// Parameter sweep over a `(k, M)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub k_range: (u64, u64),
    pub m_range: (u64, u64),
    pub target_bits: u32,
    pub bases: Vec<u64>,
    pub seed: u64,
    pub bias: bool,
    pub mode: ForgeMode,
    /// Only `records` and `duration` apply to the sweep as a whole.
    pub budget: Budget,
    /// Candidates examined per cell visit before moving on.
    pub cell_quota: u64,
    pub strategy: Strategy,
}

impl SweepConfig {
    pub fn new(k_range: (u64, u64), m_range: (u64, u64), target_bits: u32) -> Self {
        SweepConfig {
            k_range,
            m_range,
            target_bits,
            bases: DEFAULT_BASES.to_vec(),
            seed: 0,
            bias: true,
            mode: ForgeMode::MrResistant,
            budget: Budget::records(200),
            cell_quota: 4096,
            strategy: Strategy::Sequential,
        }
    }

    fn cell_params(&self, k: u64, m: u64) -> ConstructionParams {
        ConstructionParams {
            k,
            m,
            target_bits: self.target_bits,
            bases: self.bases.clone(),
            seed: self.seed,
            budget: Budget::candidates(self.cell_quota),
            bias: self.bias,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub records: Vec<CompositeRecord>,
    pub stats: ThroughputStats,
    pub cells_visited: u64,
}

fn valid_cell(k: u64, m: u64) -> bool {
    k >= 2 && m >= 2 && k != m && k.gcd(&m) == 1
}

enum Grid {
    Listed { cells: Vec<(u64, u64)>, done: HashSet<(u64, u64)>, cursor: usize, pass: u64 },
    Sampled { rng: Box<ChaCha8Rng>, k_range: (u64, u64), m_range: (u64, u64), draws: u64 },
}

impl Grid {
    fn new(cfg: &SweepConfig) -> Result<Self> {
        let (k0, k1) = cfg.k_range;
        let (m0, m1) = cfg.m_range;
        if k0 > k1 || m0 > m1 {
            return Err(Error::InvalidParams("empty k or M range".into()));
        }
        let size = (k1 - k0 + 1).saturating_mul(m1 - m0 + 1);
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(cfg.seed ^ 0x6772_6964));
        if size > MATERIALIZE_GRID_LIMIT {
            return Ok(Grid::Sampled {
                rng: Box::new(rng),
                k_range: cfg.k_range,
                m_range: cfg.m_range,
                draws: 0,
            });
        }
        let mut cells: Vec<(u64, u64)> = (k0..=k1)
            .flat_map(|k| (m0..=m1).map(move |m| (k, m)))
            .filter(|&(k, m)| valid_cell(k, m))
            .collect();
        if cells.is_empty() {
            return Err(Error::InvalidParams("no coprime (k, M) pair in the grid".into()));
        }
        cells.shuffle(&mut rng);
        // Stable: odd-odd cells first, shuffled order otherwise kept.
        cells.sort_by_key(|&(k, m)| !(k % 2 == 1 && m % 2 == 1));
        Ok(Grid::Listed {
            cells,
            done: HashSet::new(),
            cursor: 0,
            pass: 0,
        })
    }

    /// Next batch of `(k, M, pass)`; empty once every listed cell is exhausted.
    fn next_batch(&mut self, n: usize) -> Vec<(u64, u64, u64)> {
        let mut out = Vec::with_capacity(n);
        match self {
            Grid::Listed { cells, done, cursor, pass } => {
                if done.len() == cells.len() {
                    return out;
                }
                while out.len() < n {
                    if *cursor == cells.len() {
                        *cursor = 0;
                        *pass += 1;
                        if !out.is_empty() {
                            break;
                        }
                    }
                    let cell = cells[*cursor];
                    *cursor += 1;
                    if !done.contains(&cell) {
                        out.push((cell.0, cell.1, *pass));
                    }
                }
            }
            Grid::Sampled { rng, k_range, m_range, draws } => {
                while out.len() < n {
                    let odd_only = rng.gen_bool(0.75);
                    let k = rng.gen_range(k_range.0..=k_range.1);
                    let m = rng.gen_range(m_range.0..=m_range.1);
                    if odd_only && (k % 2 == 0 || m % 2 == 0) {
                        continue;
                    }
                    if valid_cell(k, m) {
                        *draws += 1;
                        out.push((k, m, *draws));
                    }
                }
            }
        }
        out
    }

    fn mark_done(&mut self, k: u64, m: u64) {
        if let Grid::Listed { done, .. } = self {
            done.insert((k, m));
        }
    }
}

struct CellOutput {
    records: Vec<CompositeRecord>,
    stats: ThroughputStats,
    exhausted: bool,
}

fn run_cell(cfg: &SweepConfig, k: u64, m: u64, pass: u64, deadline: Option<Instant>) -> Result<CellOutput> {
    let params = cfg.cell_params(k, m);
    let mut forge = CellForge::new(&params, cfg.mode, pass, deadline)?;
    if cfg.bias && cfg.mode == ForgeMode::MrResistant && !forge.stream.aligned() {
        // Characters cannot all agree here; resistant composites would be
        // accidents, so the quota is better spent elsewhere.
        return Ok(CellOutput {
            records: Vec::new(),
            stats: ThroughputStats::default(),
            exhausted: true,
        });
    }
    let records: Vec<CompositeRecord> = forge.by_ref().collect();
    Ok(CellOutput {
        records,
        stats: forge.stats(),
        exhausted: forge.exhausted(),
    })
}

/// Sweeps the `(k, M)` grid in seeded order, giving each cell a fixed
/// candidate quota per visit. Cells are processed in fixed-size batches whose
/// results are merged in grid order, so the output depends only on the
/// configuration, not on the number of workers.
pub fn forge_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    if cfg.budget.records.is_none() && cfg.budget.duration.is_none() {
        return Err(Error::InvalidParams(
            "a sweep needs a record count or a duration budget".into(),
        ));
    }
    if cfg.cell_quota == 0 {
        return Err(Error::InvalidParams("cell quota must be positive".into()));
    }
    let started = Instant::now();
    let mut out = SweepOutput {
        records: Vec::new(),
        stats: ThroughputStats::default(),
        cells_visited: 0,
    };
    if cfg.budget.is_zero() {
        return Ok(out);
    }
    let deadline = cfg.budget.duration.map(|d| started + d);
    let executor = Executor::new(cfg.strategy)?;
    let mut grid = Grid::new(cfg)?;
    let mut seen: HashSet<BigUint> = HashSet::new();
    loop {
        let batch = grid.next_batch(BATCH_CELLS);
        if batch.is_empty() {
            break;
        }
        let results = executor.map(&batch, |&(k, m, pass)| run_cell(cfg, k, m, pass, deadline));
        for (&(k, m, _), result) in batch.iter().zip(results) {
            let cell = result?;
            out.cells_visited += 1;
            out.stats.absorb(&cell.stats);
            if cell.exhausted {
                grid.mark_done(k, m);
            }
            for record in cell.records {
                if seen.insert(record.n.clone()) {
                    out.records.push(record);
                }
            }
        }
        if let Some(limit) = cfg.budget.records {
            if out.records.len() as u64 >= limit {
                out.records.truncate(limit as usize);
                break;
            }
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
    }
    out.stats.elapsed = started.elapsed();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn korselt_congruence_examples() {
        assert_eq!(
            korselt_congruence(2, 5).unwrap(),
            KorseltClass { residue: 7, modulus: 10 }
        );
        assert_eq!(
            korselt_congruence(3, 11).unwrap(),
            KorseltClass { residue: 7, modulus: 33 }
        );
        assert!(matches!(
            korselt_congruence(4, 6),
            Err(Error::NoKorseltSolution { k: 4, m: 6 })
        ));
    }

    #[test]
    fn build_triple_examples() {
        assert_eq!(build_triple(&big(7), 2, 5), (big(13), big(31), big(2821)));
        assert_eq!(build_triple(&big(7), 3, 11), (big(19), big(67), big(8911)));
        assert_eq!(build_triple(&big(7), 3, 5), (big(19), big(31), big(4123)));
        assert!(!korselt_check(&big(7), &big(19), &big(31)));
        assert!(korselt_check(&big(7), &big(13), &big(31)));
        assert!(korselt_check(&big(7), &big(19), &big(67)));
    }

    #[test]
    fn korselt_check_examples() {
        assert!(korselt_check(&big(3), &big(11), &big(17)));
        assert!(!korselt_check(&big(3), &big(5), &big(7)));
        assert!(!korselt_check(&big(3), &big(11), &big(11)));
    }

    #[test]
    fn mr_filter_examples() {
        let odd = |n: u64| OddInteger::from_u64(n).unwrap();
        assert_eq!(mr_filter(&odd(2047), &[2]), (vec![2], None));
        assert_eq!(mr_filter(&odd(561), &DEFAULT_BASES), (vec![], Some(2)));
        assert_eq!(mr_filter(&odd(9), &[2]), (vec![], Some(2)));
    }

    #[test]
    fn crt_merge_handles_shared_factors() {
        assert_eq!(crt_merge(1, 4, 2, 6), None);
        assert_eq!(crt_merge(1, 4, 3, 6), Some((9, 12)));
        assert_eq!(crt_merge(1, 4, 1, 6), Some((1, 12)));
        assert_eq!(crt_merge(2, 3, 3, 5), Some((8, 15)));
        assert_eq!(crt_merge(7, 10, 1, 2), Some((7, 10)));
    }

    #[test]
    fn candidate_stream_contains_small_examples() {
        let mut p = ConstructionParams::new(2, 5, 12);
        p.seed = 9;
        let all: Vec<BigUint> = candidate_stream(&p).unwrap().collect();
        assert!(all.contains(&big(7)));
        assert!(all.iter().all(|c| c % 10u32 == big(7)));
        let p = ConstructionParams::new(3, 11, 14);
        assert!(candidate_stream(&p).unwrap().any(|c| c == big(7)));
        assert!(matches!(
            candidate_stream(&ConstructionParams::new(4, 6, 20)),
            Err(Error::NoKorseltSolution { .. })
        ));
    }

    #[test]
    fn forge_run_finds_2821() {
        let p = ConstructionParams::new(2, 5, 12);
        let records: Vec<_> = forge_run(&p, ForgeMode::AllCarmichael).unwrap().collect();
        let r = records.iter().find(|r| r.n == big(2821)).expect("2821 emitted");
        assert_eq!(r.residues_mod35, [7, 13, 31]);
        assert_eq!(r.n_bits, 12);
    }

    #[test]
    fn zero_budget_is_empty() {
        let mut p = ConstructionParams::new(2, 5, 12);
        p.budget = Budget::records(0);
        let mut f = forge_run(&p, ForgeMode::AllCarmichael).unwrap();
        assert!(f.next().is_none());
        assert_eq!(f.stats().carmichaels_emitted, 0);
        assert!(matches!(
            forge_run(&ConstructionParams::new(4, 6, 20), ForgeMode::AllCarmichael),
            Err(Error::NoKorseltSolution { .. })
        ));
    }

    #[test]
    fn biased_cell_is_fully_resistant() {
        // Base 2 can only be aligned when k = M = 1 (mod 4).
        for (k, m) in [(5u64, 9u64), (5, 13), (9, 13), (5, 17), (13, 17), (9, 17), (5, 21)] {
            let mut p = ConstructionParams::new(k, m, 90);
            p.bias = true;
            p.budget = Budget::records(10);
            for seed in 0..20 {
                p.seed = seed;
                let mut forge = forge_run(&p, ForgeMode::AllCarmichael).unwrap();
                if !forge.stream().aligned() {
                    continue;
                }
                let records: Vec<_> = forge.by_ref().collect();
                assert!(!records.is_empty());
                assert!(records.iter().all(|r| r.is_mr_resistant()), "({k}, {m}) seed {seed}");
                return;
            }
        }
        panic!("no aligned class found");
    }

    #[test]
    fn sweep_needs_a_budget() {
        let mut cfg = SweepConfig::new((3, 5), (5, 7), 40);
        cfg.budget = Budget::default();
        assert!(forge_sweep(&cfg).is_err());
    }
}
