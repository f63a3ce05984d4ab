use super::{stage_of, StageStats, ROUNDS_PER_INSERT};
use crate::bits::BitString;
use crate::hashing::{sub_seed, FeistelPerm, KWiseHash};
use crate::pm_fixed::{Constants, Decrement, Entry, Failure, Mode, ParamSet, PmError, PrefixMatcher};

/// Width of the hashed rest that fingerprints are cut from.
pub const TAG_BITS: u32 = 48;

/// Key layout for one stage: `key ↦ π_f(key) = st ∘ tail`,
/// `tail ↦ π_g(tail) = bucket ∘ rest`.
#[derive(Debug)]
struct Level {
    d: PrefixMatcher,
    f: FeistelPerm,
    g: FeistelPerm,
}

impl Level {
    fn new(stage: u32, u_bits: u32, value_bits: u32, consts: Constants, seed: u64, identity: bool) -> Self {
        let mut params = ParamSet::new(u_bits, 1 << stage, u_bits, consts).expect("valid stage parameters");
        params.value_bits = value_bits;
        let st = params.st_bits;
        let bb = params.bucket_bits();
        let rest = params.rest_len() as u32;
        let k = (consts.c1 * u_bits) as usize;
        let s = |j: u64| sub_seed(seed, 3 * stage as u64 + j);
        let (f, g) = if identity {
            (FeistelPerm::identity(st, u_bits - st), FeistelPerm::identity(bb, rest))
        } else {
            (FeistelPerm::random(st, u_bits - st, k, s(0)), FeistelPerm::random(bb, rest, k, s(1)))
        };
        let tag = KWiseHash::new(k, rest, TAG_BITS, s(2));
        Self {
            d: PrefixMatcher::new(params, Mode::Dictionary { tag }),
            f,
            g,
        }
    }

    fn entry(&self, key: u64, value: u64) -> Entry {
        let tail_bits = self.f.right_bits();
        let rest_bits = self.g.right_bits();
        let y = self.f.apply(key);
        let tail = y & mask(tail_bits);
        let z = self.g.apply(tail);
        Entry {
            st: y.checked_shr(tail_bits).unwrap_or(0) as usize,
            bucket: z.checked_shr(rest_bits).unwrap_or(0) as usize,
            rest: BitString::from_u64(z & mask(rest_bits), rest_bits as usize),
            value,
        }
    }

    fn key(&self, e: &Entry) -> u64 {
        let tail_bits = self.f.right_bits();
        let rest_bits = self.g.right_bits();
        let z = (e.bucket as u64).checked_shl(rest_bits).unwrap_or(0) | e.rest.to_u64();
        let tail = self.g.apply(z);
        self.f.apply((e.st as u64).checked_shl(tail_bits).unwrap_or(0) | tail)
    }

    fn get(&self, key: u64) -> Option<u64> {
        if !self.d.is_ready() {
            return None;
        }
        let e = self.entry(key, 0);
        self.d.dict_get(e.st, e.bucket, &e.rest).ok().flatten()
    }
}

fn mask(bits: u32) -> u64 {
    u64::MAX.checked_shr(64 - bits).unwrap_or(0)
}

/// Exact key-value store over `u_bits`-bit keys.
#[derive(Debug)]
pub struct DynamicDictionary {
    u_bits: u32,
    value_bits: u32,
    consts: Constants,
    seed: u64,
    identity: bool,
    stage: u32,
    n: u64,
    prev: Option<Level>,
    cur: Level,
    next: Level,
    failure: Option<Failure>,
    retired_probes: u64,
    stats: StageStats,
}

impl DynamicDictionary {
    pub fn new(u_bits: u32, value_bits: u32, seed: u64) -> Self {
        Self::build(u_bits, value_bits, seed, Constants::default(), false)
    }

    pub fn with_constants(u_bits: u32, value_bits: u32, seed: u64, consts: Constants) -> Self {
        Self::build(u_bits, value_bits, seed, consts, false)
    }

    /// A dictionary whose key permutations are identities.
    pub fn unpermuted(u_bits: u32, value_bits: u32, seed: u64) -> Self {
        Self::build(u_bits, value_bits, seed, Constants::default(), true)
    }

    fn build(u_bits: u32, value_bits: u32, seed: u64, consts: Constants, identity: bool) -> Self {
        assert!((2..=64).contains(&u_bits));
        let mut cur = Level::new(0, u_bits, value_bits, consts, seed, identity);
        while !cur.d.init_step() {}
        Self {
            u_bits,
            value_bits,
            consts,
            seed,
            identity,
            stage: 0,
            n: 0,
            prev: None,
            cur,
            next: Level::new(1, u_bits, value_bits, consts, seed, identity),
            failure: None,
            retired_probes: 0,
            stats: StageStats {
                max_live: 2,
                ..StageStats::default()
            },
        }
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn stage(&self) -> u32 {
        self.stage
    }

    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    pub fn failure(&self) -> Option<Failure> {
        self.failure
    }

    pub fn stats(&self) -> StageStats {
        self.stats
    }

    pub fn space_bits(&self) -> u64 {
        self.prev.as_ref().map_or(0, |p| p.d.space_bits()) + self.cur.d.space_bits() + self.next.d.space_bits()
    }

    pub fn probes(&self) -> u64 {
        self.retired_probes
            + self.prev.as_ref().map_or(0, |p| p.d.probes())
            + self.cur.d.probes()
            + self.next.d.probes()
    }

    pub fn get(&self, key: u64) -> Option<u64> {
        self.cur.get(key).or_else(|| self.prev.as_ref().and_then(|p| p.get(key)))
    }

    fn fail(&mut self, e: PmError) -> PmError {
        if let PmError::Failed(f) = e {
            self.failure.get_or_insert(f);
        }
        e
    }

    /// Stores `value` under `key`; an already present key is rejected.
    pub fn insert(&mut self, key: u64, value: u64) -> Result<(), PmError> {
        if let Some(f) = self.failure {
            return Err(PmError::Failed(f));
        }
        assert!(self.u_bits == 64 || key >> self.u_bits == 0, "key outside the universe");
        assert!(self.value_bits == 64 || value >> self.value_bits == 0, "value too wide");
        if self.get(key).is_some() {
            return Err(PmError::Duplicate);
        }
        if stage_of(self.n + 1) > self.stage {
            self.advance();
        }
        let e = self.cur.entry(key, value);
        if let Err(err) = self.cur.d.dict_insert(&e) {
            if self.cur.d.failure() == Some(Failure::FingerprintBudget) {
                self.n += 1;
            }
            return Err(self.fail(err));
        }
        self.n += 1;
        for _ in 0..ROUNDS_PER_INSERT {
            self.maintain();
        }
        Ok(())
    }

    fn advance(&mut self) {
        let mut forced = false;
        while self.prev.is_some() {
            forced = true;
            self.migrate_step();
        }
        while !self.next.d.is_ready() {
            forced = true;
            self.next.d.init_step();
        }
        self.stats.forced += u32::from(forced);
        self.stats.transitions += 1;
        self.stage += 1;
        let next = Level::new(
            self.stage + 1,
            self.u_bits,
            self.value_bits,
            self.consts,
            self.seed,
            self.identity,
        );
        let cur = std::mem::replace(&mut self.next, next);
        self.prev = Some(std::mem::replace(&mut self.cur, cur));
        self.stats.max_live = self.stats.max_live.max(3);
    }

    fn maintain(&mut self) {
        if self.prev.is_some() {
            self.migrate_step();
        }
        self.next.d.init_step();
    }

    fn migrate_step(&mut self) {
        let Some(p) = self.prev.as_mut() else {
            return;
        };
        let moved = match p.d.decrement() {
            Ok(Decrement::Item(e)) => Some((p.key(&e), e.value)),
            Ok(Decrement::Empty) => None,
            Ok(Decrement::Exhausted) | Err(_) => {
                if p.d.destroy_step() {
                    let p = self.prev.take().expect("checked above");
                    self.retired_probes += p.d.probes();
                }
                None
            }
        };
        if let Some((key, value)) = moved {
            let e = self.cur.entry(key, value);
            if let Err(err) = self.cur.d.dict_insert(&e) {
                self.fail(err);
            }
        }
    }
}
