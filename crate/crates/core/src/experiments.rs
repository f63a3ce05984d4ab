//! Seeded measurement runs shared by the command-line driver and the
//! acceptance tests. Every run is a pure function of its arguments.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitString;
use crate::hashing::sub_seed;
use crate::pm_fixed::{ceil_log2, Constants, Decrement, Mode, ParamSet, PmError, PrefixMatcher};
use crate::unknown_size::{filter_length, gen_core_sequence, DynamicFilter};

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(seed, stream))
}

fn universe_mask(u_bits: u32) -> u64 {
    u64::MAX >> (64 - u_bits)
}

/// `n` distinct keys below `2^u_bits`.
pub fn distinct_keys(u_bits: u32, n: usize, seed: u64) -> Vec<u64> {
    assert!(u_bits == 64 || (n as u64) <= 1 << u_bits);
    let mut r = rng(seed, 100);
    let mut seen = HashSet::with_capacity(n);
    let mut keys = Vec::with_capacity(n);
    while keys.len() < n {
        let k = r.gen::<u64>() & universe_mask(u_bits);
        if seen.insert(k) {
            keys.push(k);
        }
    }
    keys
}

/// Inserts `keys` into a fresh filter, stopping at the first failure.
pub fn build_filter(u_bits: u32, eps_log2: u32, keys: &[u64], seed: u64, consts: Constants) -> DynamicFilter {
    let mut f = DynamicFilter::with_constants(u_bits, eps_log2, sub_seed(seed, 101), consts);
    for &k in keys {
        if f.insert(k).is_err() {
            break;
        }
    }
    f
}

#[derive(Debug, Clone, PartialEq)]
pub struct FprRow {
    pub n: usize,
    pub queries: usize,
    pub fp_count: usize,
    pub fpr: f64,
    pub epsilon: f64,
    pub failed: bool,
}

/// False-positive rate over `queries` keys that were never inserted.
pub fn fpr_trial(u_bits: u32, eps_log2: u32, n: usize, queries: usize, seed: u64, consts: Constants) -> FprRow {
    let keys = distinct_keys(u_bits, n, seed);
    let f = build_filter(u_bits, eps_log2, &keys, seed, consts);
    let inserted: HashSet<u64> = keys.into_iter().collect();
    let mut r = rng(seed, 102);
    let mut fp_count = 0;
    let mut asked = 0;
    while asked < queries {
        let k = r.gen::<u64>() & universe_mask(u_bits);
        if inserted.contains(&k) {
            continue;
        }
        asked += 1;
        fp_count += usize::from(f.contains(k));
    }
    FprRow {
        n,
        queries,
        fp_count,
        fpr: fp_count as f64 / queries.max(1) as f64,
        epsilon: (-(eps_log2 as f64)).exp2(),
        failed: f.failed(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceRow {
    pub n: usize,
    pub bits_total: u64,
    pub bits_per_key: f64,
    pub budget_bits_per_key: f64,
    /// The filter failed before reaching `n` keys; the reading is stale.
    pub failed: bool,
}

/// Per-key allowance `⌈log₂1/ε⌉ + ⌈log₂log₂n⌉ + 24`.
pub fn space_budget_per_key(eps_log2: u32, n: usize) -> f64 {
    let lg = ceil_log2(n.max(2) as u64);
    (eps_log2 + ceil_log2(lg as u64) + 24) as f64
}

/// Filter space after each checkpoint in `sizes` (ascending) of one run.
pub fn space_curve(u_bits: u32, eps_log2: u32, sizes: &[usize], seed: u64, consts: Constants) -> Vec<SpaceRow> {
    let total = sizes.iter().copied().max().unwrap_or(0);
    let keys = distinct_keys(u_bits, total, seed);
    let mut f = DynamicFilter::with_constants(u_bits, eps_log2, sub_seed(seed, 101), consts);
    let mut rows = Vec::new();
    let mut done = 0;
    for &n in sizes {
        for &k in &keys[done..n] {
            let _ = f.insert(k);
        }
        done = n;
        let bits = f.space_bits();
        rows.push(SpaceRow {
            n,
            bits_total: bits,
            bits_per_key: bits as f64 / n.max(1) as f64,
            budget_bits_per_key: space_budget_per_key(eps_log2, n),
            failed: f.failed(),
        });
    }
    rows
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub n: usize,
    pub op: &'static str,
    pub max_probes: u64,
    pub mean_probes: f64,
}

#[derive(Default)]
struct ProbeTally {
    max: u64,
    sum: u64,
    count: u64,
}

impl ProbeTally {
    fn add(&mut self, p: u64) {
        self.max = self.max.max(p);
        self.sum += p;
        self.count += 1;
    }

    fn row(&self, n: usize, op: &'static str) -> ProbeRow {
        ProbeRow {
            n,
            op,
            max_probes: self.max,
            mean_probes: self.sum as f64 / self.count.max(1) as f64,
        }
    }
}

/// The fixed-capacity matcher a filter uses once it holds `n` keys.
pub fn stage_matcher(u_bits: u32, eps_log2: u32, n: usize, consts: Constants) -> PrefixMatcher {
    let m = (n.max(1) as u64).next_power_of_two();
    let ell = filter_length(ceil_log2(m), eps_log2, u_bits);
    let params = ParamSet::new(u_bits, m, ell, consts).expect("valid parameters");
    PrefixMatcher::ready(params, Mode::Prefix)
}

/// Word probes per operation on a fixed-capacity matcher filled with `n`
/// random filter-length strings, then drained.
pub fn probe_profile(u_bits: u32, eps_log2: u32, n: usize, seed: u64, consts: Constants) -> Vec<ProbeRow> {
    let mut d = stage_matcher(u_bits, eps_log2, n, consts);
    let ell = d.params().ell as usize;
    let mut r = rng(seed, 103);
    let draw = |r: &mut ChaCha8Rng| BitString::from_u64(r.gen::<u64>() >> (64 - ell), ell);
    let (mut ins, mut hit, mut miss, mut dec) = Default::default();
    let tally = |t: &mut ProbeTally, d: &PrefixMatcher, before: u64| t.add(d.probes() - before);
    let mut stored = Vec::with_capacity(n);
    while stored.len() < n && !d.failed() {
        let x = draw(&mut r);
        let before = d.probes();
        match d.insert(&x) {
            Ok(()) => stored.push(x),
            Err(PmError::NotPrefixFree | PmError::Duplicate) => {}
            Err(_) => break,
        }
        tally(&mut ins, &d, before);
    }
    for x in &stored {
        let before = d.probes();
        let _ = d.query(x);
        tally(&mut hit, &d, before);
        let y = draw(&mut r);
        let before = d.probes();
        let _ = d.query(&y);
        tally(&mut miss, &d, before);
    }
    loop {
        let before = d.probes();
        let step = d.decrement();
        tally(&mut dec, &d, before);
        if !matches!(step, Ok(Decrement::Item(_) | Decrement::Empty)) {
            break;
        }
    }
    let ins: ProbeTally = ins;
    let mut query = ProbeTally::default();
    let (hit, miss): (ProbeTally, ProbeTally) = (hit, miss);
    query.max = hit.max.max(miss.max);
    query.sum = hit.sum + miss.sum;
    query.count = hit.count + miss.count;
    vec![
        ins.row(n, "insert"),
        query.row(n, "query"),
        hit.row(n, "query_hit"),
        miss.row(n, "query_miss"),
        dec.row(n, "decrement"),
    ]
}

/// Whether a filter of `n` random keys reports a failure.
pub fn failure_trial(u_bits: u32, eps_log2: u32, n: usize, seed: u64, consts: Constants) -> bool {
    let keys = distinct_keys(u_bits, n, seed);
    build_filter(u_bits, eps_log2, &keys, seed, consts).failed()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzRow {
    pub seq_len: usize,
    pub queries: usize,
    pub mismatches: usize,
    pub failed: bool,
    /// First disagreement, for reproduction.
    pub first_mismatch: Option<String>,
}

/// Replays a shuffled core-set sequence into a fixed-capacity matcher,
/// querying after every insertion and comparing with a set of the stored
/// strings checked prefix by prefix.
pub fn fuzz_sequence(u_bits: u32, eps_log2: u32, n: usize, queries: usize, seed: u64, consts: Constants) -> FuzzRow {
    let seq = gen_core_sequence(u_bits, eps_log2, n, seed);
    let mut d = stage_matcher(u_bits, eps_log2, n, consts);
    let ell = d.params().ell as usize;
    let min_len = d.params().lg as usize + 1;
    let mut r = rng(seed, 104);
    let mut stored: HashSet<BitString> = HashSet::new();
    let mut row = FuzzRow {
        seq_len: seq.len(),
        queries: 0,
        mismatches: 0,
        failed: false,
        first_mismatch: None,
    };
    let per_insert = queries.div_ceil(seq.len().max(1));
    let check = |d: &PrefixMatcher, stored: &HashSet<BitString>, q: &BitString, row: &mut FuzzRow| {
        let expect = (0..=q.len()).any(|k| stored.contains(&q.prefix(k)));
        let got = d.query(q).unwrap_or(false);
        row.queries += 1;
        if got != expect {
            row.mismatches += 1;
            row.first_mismatch.get_or_insert_with(|| format!("after {} inserts, query {q}: got {got}", stored.len()));
        }
    };
    let list: Vec<&BitString> = seq.iter().collect();
    for (a, x) in seq.iter().enumerate() {
        if let Err(e) = d.insert(x) {
            if let PmError::Failed(_) = e {
                row.failed = true;
            } else {
                row.mismatches += 1;
                row.first_mismatch.get_or_insert_with(|| format!("insert {x} rejected: {e}"));
            }
            break;
        }
        stored.insert(x.clone());
        check(&d, &stored, x, &mut row);
        for _ in 0..per_insert {
            let q = match r.gen_range(0..3) {
                // An extension of a stored string.
                0 => {
                    let mut q = list[r.gen_range(0..=a)].clone();
                    for _ in 0..r.gen_range(0..4) {
                        q.push(r.gen());
                    }
                    q
                }
                // A stored string with its last bit flipped.
                1 => {
                    let y = list[r.gen_range(0..=a)];
                    let mut q = y.prefix(y.len() - 1);
                    q.push(!y.get(y.len() - 1));
                    q
                }
                _ => {
                    let len = r.gen_range(min_len..=ell);
                    BitString::from_bits((0..len).map(|_| r.gen::<bool>()))
                }
            };
            check(&d, &stored, &q, &mut row);
        }
    }
    row
}
