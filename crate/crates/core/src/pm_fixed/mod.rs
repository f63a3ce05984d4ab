//! Prefix matching with a known capacity `m` and a maximum string length.
//!
//! Strings are routed by their leading bits to one of `m / 2^⌈log₂L⌉`
//! subtables through a main table. A subtable keeps adaptive fingerprints of
//! its strings, a per-fingerprint indicator (static, under construction,
//! under reorganization), navigators naming the block of every static
//! string, and a list of fixed-size data blocks. New strings are appended to
//! a block under construction; a full block is sorted in the background, a
//! bounded number of steps per insertion.
//!
//! The same machinery stores `(rest, value)` pairs keyed by a hashed tag in
//! [`Mode::Dictionary`].

mod audit;
mod block;
mod drain;
mod params;
mod subtable;


use thiserror::Error;

pub use block::Layout;
pub use params::{ceil_log2, Constants, ParamError, ParamSet};
use subtable::{record_cap_bits, Phase, Subtable, BUILDING, REORG, STATIC};

use crate::adaptive_prefixes::PrefixError;
use crate::bits::BitString;
use crate::hashing::KWiseHash;
use crate::memory::{ArrayCollection, Handle, MemoryError};
use crate::wordram::Broadword;

#[derive(Debug, Clone)]
pub enum Mode {
    /// Stores bit strings and answers prefix queries.
    Prefix,
    /// Stores fixed-length rests with values; fingerprints are built from a
    /// hash of the rest.
    Dictionary { tag: KWiseHash },
}

/// Why a matcher failed. Failures are sticky.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    SubtableLoad,
    ClassLoad,
    FingerprintBudget,
    TagCollision,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PmError {
    #[error("structure is not ready")]
    NotReady,
    #[error("structure failed: {0:?}")]
    Failed(Failure),
    #[error("string of {len} bits outside the accepted lengths")]
    BadLength { len: usize },
    #[error("string is a prefix of, or prefixed by, a stored string")]
    NotPrefixFree,
    #[error("key already stored")]
    Duplicate,
    #[error("inserts are closed once draining starts")]
    Draining,
    #[error("operation needs the other mode")]
    WrongMode,
    #[error(transparent)]
    Memory(#[from] MemoryError),
}

/// A stored item split into its routing fields.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Entry {
    pub st: usize,
    pub bucket: usize,
    pub rest: BitString,
    pub value: u64,
}

/// Result of one drain call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decrement {
    Item(Entry),
    Empty,
    Exhausted,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub init_steps: u64,
    pub destroy_steps: u64,
    pub reorgs: u64,
    /// Most steps any single reorganization took.
    pub max_reorg_steps: u64,
    /// Reorganizations that had to be finished early because the next block
    /// filled up first.
    pub forced_finishes: u64,
    pub empty_decrements: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Lifecycle {
    Init,
    Ready,
    Destroying,
    Destroyed,
}

/// Drain position: every item of a subtable before `sub`, and every item of
/// `sub` at or after (`block`, `remaining`), is gone.
#[derive(Debug, Clone, Copy, Default)]
struct DrainCursor {
    sub: usize,
    active: bool,
    block: usize,
    remaining: usize,
}

struct CachedBlock {
    index: usize,
    bits: BitString,
    dirty: bool,
}

type Cache = Vec<CachedBlock>;

pub struct PrefixMatcher {
    params: ParamSet,
    layout: Layout,
    mode: Mode,
    mem: ArrayCollection,
    bw: Broadword,
    main: Option<Handle>,
    lifecycle: Lifecycle,
    record_cap: usize,
    block_bits: usize,
    len: usize,
    failure: Option<Failure>,
    drain: DrainCursor,
    stats: Stats,
}

impl std::fmt::Debug for PrefixMatcher {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PrefixMatcher")
            .field("capacity", &self.params.capacity)
            .field("ell", &self.params.ell)
            .field("len", &self.len)
            .field("lifecycle", &self.lifecycle)
            .field("failure", &self.failure)
            .finish()
    }
}

impl PrefixMatcher {
    /// A matcher that still needs [`init_step`](Self::init_step) calls.
    pub fn new(params: ParamSet, mode: Mode) -> Self {
        Self {
            layout: Layout::new(&params),
            record_cap: record_cap_bits(&params),
            block_bits: params.block_bits(),
            params,
            mode,
            mem: ArrayCollection::new(),
            bw: Broadword::new(),
            main: None,
            lifecycle: Lifecycle::Init,
            len: 0,
            failure: None,
            drain: DrainCursor::default(),
            stats: Stats::default(),
        }
    }

    /// Builds and initializes in one go.
    pub fn ready(params: ParamSet, mode: Mode) -> Self {
        let mut pm = Self::new(params, mode);
        while !pm.init_step() {}
        pm
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_ready(&self) -> bool {
        self.lifecycle == Lifecycle::Ready
    }

    pub fn is_destroyed(&self) -> bool {
        self.lifecycle == Lifecycle::Destroyed
    }

    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    pub fn failure(&self) -> Option<Failure> {
        self.failure
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    pub fn space_bits(&self) -> u64 {
        self.mem.space_bits()
    }

    pub fn peak_bits(&self) -> u64 {
        self.mem.peak_bits()
    }

    /// Word probes spent so far.
    pub fn probes(&self) -> u64 {
        self.mem.probes().total()
    }

    /// Table lookups spent by broadword operations so far.
    pub fn table_probes(&self) -> u64 {
        self.bw.probes()
    }

    /// One unit of initialization work. Returns true once ready.
    pub fn init_step(&mut self) -> bool {
        if self.lifecycle != Lifecycle::Init {
            return self.lifecycle == Lifecycle::Ready;
        }
        self.stats.init_steps += 1;
        match self.main {
            None => {
                self.main = Some(self.mem.create(self.params.handle_bits() as usize).expect("valid width"));
            }
            Some(h) => {
                self.mem.grow(h).expect("live array");
            }
        }
        let h = self.main.expect("created");
        if self.mem.len(h).expect("live array") == self.params.subtables() {
            self.lifecycle = Lifecycle::Ready;
        }
        self.is_ready()
    }

    fn check_ready(&self) -> Result<(), PmError> {
        if self.is_ready() {
            Ok(())
        } else {
            Err(PmError::NotReady)
        }
    }

    fn fail(&mut self, f: Failure) -> Result<(), PmError> {
        self.failure.get_or_insert(f);
        Err(PmError::Failed(f))
    }

    /// Splits a string into subtable, bucket and rest.
    pub fn split(&self, x: &BitString) -> (usize, usize, BitString) {
        let st_bits = self.params.st_bits as usize;
        let bb = self.params.bucket_bits() as usize;
        let st = x.extract(0, st_bits) as usize;
        let bucket = x.extract(st_bits, bb) as usize;
        (st, bucket, x.suffix_from(st_bits + bb))
    }

    /// Inverse of [`split`](Self::split).
    pub fn join(&self, e: &Entry) -> BitString {
        let mut x = BitString::from_u64(e.st as u64, self.params.st_bits as usize);
        x.push_bits(e.bucket as u64, self.params.bucket_bits() as usize);
        x.append(&e.rest);
        x
    }

    /// The string whose adaptive fingerprint is stored for an item.
    fn source(&self, bucket: usize, rest: &BitString) -> BitString {
        let mut s = BitString::from_u64(bucket as u64, self.params.bucket_bits() as usize);
        match &self.mode {
            Mode::Prefix => s.append(rest),
            Mode::Dictionary { tag } => {
                s.push_bits(tag.eval(rest.to_u64()), tag.range_bits() as usize);
            }
        }
        s
    }

    fn main_handle(&self) -> Handle {
        self.main.expect("ready structure has a main table")
    }

    fn record_handle(&self, st: usize) -> Option<Handle> {
        let v = self.mem.read(self.main_handle(), st + 1).expect("slot exists");
        (v != 0).then(|| Handle::from_index(v as usize - 1))
    }

    fn create_subtable(&mut self, st: usize) -> Result<Handle, PmError> {
        let rec = self.mem.create(1)?;
        let blocks = self.mem.create(1)?;
        let s = Subtable::new(&self.params, blocks);
        self.store(rec, &s)?;
        self.mem.write(self.main_handle(), st + 1, rec.index() as u64 + 1)?;
        Ok(rec)
    }

    fn load(&self, rec: Handle) -> Subtable {
        self.mem.probes().charge_window(self.record_cap);
        let n = self.mem.bit_len(rec).expect("live record");
        let bits = self.mem.peek_bits(rec, 0, n).expect("in range");
        Subtable::decode(&bits, &self.params)
    }

    fn store(&mut self, rec: Handle, s: &Subtable) -> Result<(), PmError> {
        let bits = s.encode(&self.params);
        debug_assert!(bits.len() <= self.record_cap);
        self.mem.probes().charge_window(self.record_cap);
        self.mem.set_len(rec, bits.len())?;
        self.mem.poke_bits(rec, 0, &bits)?;
        Ok(())
    }

    /// Position of block `k` in `cache`, reading it on first use.
    fn fetch(&self, cache: &mut Cache, h: Handle, k: usize) -> usize {
        if let Some(i) = cache.iter().position(|c| c.index == k) {
            return i;
        }
        self.mem.probes().charge_window(self.block_bits);
        let start = k * self.block_bits;
        let avail = self.mem.bit_len(h).expect("live blocks").saturating_sub(start);
        let bits = self
            .mem
            .peek_bits(h, start, avail.min(self.block_bits))
            .expect("in range");
        cache.push(CachedBlock {
            index: k,
            bits,
            dirty: false,
        });
        cache.len() - 1
    }

    fn flush(&mut self, cache: Cache, h: Handle) -> Result<(), PmError> {
        for c in cache.into_iter().filter(|c| c.dirty) {
            self.mem.probes().charge_window(self.block_bits);
            let start = c.index * self.block_bits;
            let end = start + c.bits.len();
            if self.mem.bit_len(h)? < end {
                self.mem.set_len(h, end)?;
            }
            self.mem.poke_bits(h, start, &c.bits)?;
        }
        Ok(())
    }

    fn deleted(&self, st: usize, block: usize, slot: usize) -> bool {
        let d = &self.drain;
        st < d.sub || (st == d.sub && d.active && (block > d.block || (block == d.block && slot >= d.remaining)))
    }

    /// Block and slot of the item with rank `j`, or `None` once drained.
    fn locate(&self, st: usize, s: &Subtable, j: usize, bucket: usize, cache: &mut Cache) -> Option<(usize, usize)> {
        let bw = &self.bw;
        let (k, known) = match s.ind.get(j - 1) {
            STATIC => {
                let ni = s.nav_index(bw, j);
                (s.nav.get(ni - 1) as usize, None)
            }
            BUILDING => (s.blocks - 1, Some(s.bu.get(s.rank_within(bw, j) - 1) as usize)),
            REORG => (s.reorg_block, Some(s.br.get(s.rank_within(bw, j) - 1) as usize)),
            v => unreachable!("indicator {v}"),
        };
        let d = &self.drain;
        if st < d.sub || (st == d.sub && d.active && k > d.block) {
            return None;
        }
        let ci = self.fetch(cache, s.blocks_handle, k);
        let slot = match known {
            Some(slot) => slot,
            None => {
                let lb = s.fp.lowerbound(bucket);
                let lo = s.nav_index(bw, lb - 1);
                let hi = s.nav_index(bw, j);
                let kth = bw.packed_count(&s.nav, k as u64, lo, hi);
                let hs_bits = self.params.hs_bits;
                let hd = bucket >> hs_bits;
                let hs = (bucket & ((1 << hs_bits) - 1)) as u64;
                self.layout
                    .find(bw, &cache[ci].bits, hd, hs, kth)
                    .expect("navigated block holds the item")
            }
        };
        if self.deleted(st, k, slot) {
            return None;
        }
        Some((k, slot))
    }

    fn read_slot(&self, cache: &mut Cache, h: Handle, k: usize, slot: usize) -> (BitString, u64) {
        let ci = self.fetch(cache, h, k);
        self.layout.decode_slot(&self.bw, &self.layout.slot(&cache[ci].bits, slot))
    }

    /// Rest and value of the item whose fingerprint prefixes `source`.
    fn find_item(&self, st: usize, bucket: usize, source: &BitString) -> Option<(BitString, u64)> {
        let rec = self.record_handle(st)?;
        let s = self.load(rec);
        let j = s.fp.lookup(source)?;
        let mut cache = Cache::new();
        let (k, slot) = self.locate(st, &s, j, bucket, &mut cache)?;
        Some(self.read_slot(&mut cache, s.blocks_handle, k, slot))
    }

    /// Whether a stored string prefixes `x`.
    pub fn query(&self, x: &BitString) -> Result<bool, PmError> {
        self.check_ready()?;
        if !matches!(self.mode, Mode::Prefix) {
            return Err(PmError::WrongMode);
        }
        if x.len() <= self.params.lg as usize {
            return Ok(false);
        }
        let (st, bucket, rest) = self.split(x);
        let source = self.source(bucket, &rest);
        Ok(self
            .find_item(st, bucket, &source)
            .is_some_and(|(rt, _)| rt.is_prefix_of(&rest)))
    }

    /// The stored string with rank `rank` in subtable `st`.
    pub fn retrieve(&self, st: usize, rank: usize) -> Result<Option<Entry>, PmError> {
        self.check_ready()?;
        let Some(rec) = self.record_handle(st) else {
            return Ok(None);
        };
        let s = self.load(rec);
        if rank == 0 || rank > s.len() {
            return Ok(None);
        }
        let bucket = s.fp.bucket_of(rank);
        let mut cache = Cache::new();
        Ok(self.locate(st, &s, rank, bucket, &mut cache).map(|(k, slot)| {
            let (rest, value) = self.read_slot(&mut cache, s.blocks_handle, k, slot);
            Entry { st, bucket, rest, value }
        }))
    }

    /// Inserts a string; no stored string may prefix it or be prefixed by it.
    pub fn insert(&mut self, x: &BitString) -> Result<(), PmError> {
        if !matches!(self.mode, Mode::Prefix) {
            return Err(PmError::WrongMode);
        }
        let lg = self.params.lg as usize;
        if x.len() <= lg || x.len() > self.params.ell as usize {
            return Err(PmError::BadLength { len: x.len() });
        }
        let (st, bucket, rest) = self.split(x);
        self.insert_entry(&Entry {
            st,
            bucket,
            rest,
            value: 0,
        })
    }

    /// Stores `e.value` under the key `(e.st, e.bucket, e.rest)`.
    pub fn dict_insert(&mut self, e: &Entry) -> Result<(), PmError> {
        if !matches!(self.mode, Mode::Dictionary { .. }) {
            return Err(PmError::WrongMode);
        }
        if e.rest.len() != self.params.rest_len() {
            return Err(PmError::BadLength { len: e.rest.len() });
        }
        self.insert_entry(e)
    }

    pub fn dict_get(&self, st: usize, bucket: usize, rest: &BitString) -> Result<Option<u64>, PmError> {
        self.check_ready()?;
        if !matches!(self.mode, Mode::Dictionary { .. }) {
            return Err(PmError::WrongMode);
        }
        let source = self.source(bucket, rest);
        Ok(self
            .find_item(st, bucket, &source)
            .and_then(|(rt, v)| (rt == *rest).then_some(v)))
    }

    fn insert_entry(&mut self, e: &Entry) -> Result<(), PmError> {
        self.check_ready()?;
        if let Some(f) = self.failure {
            return Err(PmError::Failed(f));
        }
        if self.drain.active || self.drain.sub > 0 {
            return Err(PmError::Draining);
        }
        let dict = matches!(self.mode, Mode::Dictionary { .. });
        let (st, bucket) = (e.st, e.bucket);
        let rec = match self.record_handle(st) {
            Some(h) => h,
            None => self.create_subtable(st)?,
        };
        let mut s = self.load(rec);
        if s.len() >= self.params.subtable_cap() {
            return self.fail(Failure::SubtableLoad);
        }
        if s.fp.bucket_len(bucket) >= self.params.class_cap() {
            return self.fail(Failure::ClassLoad);
        }

        let source = self.source(bucket, &e.rest);
        let mut cache = Cache::new();
        let colliding = match s.fp.lookup(&source) {
            Some(r) => {
                let (k, slot) = self.locate(st, &s, r, bucket, &mut cache).expect("not draining");
                let (rt, _) = self.read_slot(&mut cache, s.blocks_handle, k, slot);
                if dict && rt == e.rest {
                    return Err(PmError::Duplicate);
                }
                if !dict && (rt.is_prefix_of(&e.rest) || e.rest.is_prefix_of(&rt)) {
                    return Err(PmError::NotPrefixFree);
                }
                Some(self.source(bucket, &rt))
            }
            None => None,
        };
        let mut budget_hit = false;
        let j = match s.fp.insert(&source, colliding.as_ref()) {
            Ok(j) => j,
            Err(PrefixError::BudgetExceeded { .. }) => {
                budget_hit = true;
                s.fp.lookup(&source).expect("just inserted")
            }
            Err(PrefixError::Collision | PrefixError::PrefixOfStored) if dict => {
                return self.fail(Failure::TagCollision);
            }
            Err(PrefixError::Collision | PrefixError::PrefixOfStored) => return Err(PmError::NotPrefixFree),
            Err(PrefixError::TooShort(len)) => return Err(PmError::BadLength { len }),
        };

        s.ind.insert(j - 1, BUILDING);
        if j <= s.p {
            s.p += 1;
        }
        if !s.building {
            cache.push(CachedBlock {
                index: s.blocks,
                bits: self.layout.empty(),
                dirty: true,
            });
            s.blocks += 1;
            s.building = true;
        }
        let ci = self.fetch(&mut cache, s.blocks_handle, s.blocks - 1);
        let n = s.bu.len();
        let hs_bits = self.params.hs_bits;
        {
            let b = &mut cache[ci];
            self.layout.header_insert(&self.bw, &mut b.bits, bucket >> hs_bits);
            self.layout.set_id(&mut b.bits, n, (bucket & ((1 << hs_bits) - 1)) as u64);
            b.bits.append(&self.layout.encode_slot(&e.rest, e.value));
            b.dirty = true;
        }
        let jp = self.bw.packed_count(&s.ind, BUILDING, 0, j);
        s.bu.insert(jp - 1, n as u64);

        if s.bu.len() == self.params.block_len {
            if s.phase != Phase::Idle {
                self.stats.forced_finishes += 1;
                while s.phase != Phase::Idle {
                    self.reorg_step(&mut s, &mut cache);
                }
            }
            self.bw.packed_set(&mut s.ind, BUILDING, REORG);
            s.br = s.bu.clone();
            s.bu.clear();
            s.p = s.len() + 1;
            s.reorg_block = s.blocks - 1;
            s.building = false;
            s.phase = Phase::NavInit;
            s.reorg_steps = 0;
        }
        for _ in 0..self.params.consts.reorg_steps {
            self.reorg_step(&mut s, &mut cache);
        }

        self.flush(cache, s.blocks_handle)?;
        self.store(rec, &s)?;
        self.len += 1;
        if budget_hit {
            return self.fail(Failure::FingerprintBudget);
        }
        Ok(())
    }

    /// One unit of background sorting for the block under reorganization.
    fn reorg_step(&mut self, s: &mut Subtable, cache: &mut Cache) {
        match s.phase {
            Phase::Idle => return,
            Phase::NavInit => {
                s.qp = s.nav.len();
                for _ in 0..self.params.block_len {
                    s.nav.push(self.params.nav_sentinel());
                }
                s.q = s.nav.len();
                s.phase = Phase::Nav;
            }
            Phase::Nav => {
                if !s.nav_iteration(&self.bw, self.params.nav_run, self.params.nav_sentinel()) {
                    s.phase = Phase::Sort;
                    s.sort_t = 0;
                }
            }
            Phase::Sort => {
                let t = s.sort_t;
                let slot = s.br.get(t) as usize;
                if slot != t {
                    let ci = self.fetch(cache, s.blocks_handle, s.reorg_block);
                    self.layout.swap(&mut cache[ci].bits, t, slot);
                    cache[ci].dirty = true;
                    let u = self.bw.packed_select(&s.br, t as u64, 1).expect("slot is owned") - 1;
                    s.br.set(u, slot as u64);
                    s.br.set(t, t as u64);
                }
                s.sort_t += 1;
                if s.sort_t == self.params.block_len {
                    s.phase = Phase::Flip;
                }
            }
            Phase::Flip => {
                self.bw.packed_set(&mut s.ind, REORG, STATIC);
                s.br.clear();
                s.phase = Phase::Idle;
            }
        }
        s.reorg_steps += 1;
        if s.phase == Phase::Idle {
            self.stats.reorgs += 1;
            self.stats.max_reorg_steps = self.stats.max_reorg_steps.max(s.reorg_steps as u64);
        }
    }
}
