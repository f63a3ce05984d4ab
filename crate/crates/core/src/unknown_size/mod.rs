//! Structures whose size follows the number of insertions.
//!
//! Insertions `2^{i−1}+1 … 2^i` form stage `i`. During stage `i` the
//! structures sized for stage `i − 1` are drained into those for stage `i`,
//! and the ones for stage `i + 1` are set up, a fixed amount of work per
//! insertion, so no operation ever pauses to rebuild.

mod core_seq;
mod dictionary;
mod filter;

pub use core_seq::{core_set, gen_core_sequence};
pub use dictionary::DynamicDictionary;
pub use filter::DynamicFilter;

use crate::bits::BitString;
use crate::pm_fixed::{ceil_log2, Constants, Decrement, Failure, Mode, ParamSet, PmError, PrefixMatcher};
use crate::truth_table::{Drained, TruthTable};

/// Maintenance rounds run after every insertion.
pub const ROUNDS_PER_INSERT: usize = 10;

/// Stage of the `n`-th insertion (`n ≥ 1`).
pub fn stage_of(n: u64) -> u32 {
    ceil_log2(n.max(1))
}

/// Maximum stored string length per stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lengths {
    /// Strings of at most this many bits at every stage.
    Fixed(u32),
    /// Hash prefixes for a filter with false-positive rate `2^{−eps_log2}`.
    Filter { eps_log2: u32 },
}

impl Lengths {
    /// Maximum length at stage `i` in a universe of `2^u_bits` keys.
    pub fn ell(self, i: u32, u_bits: u32) -> u32 {
        match self {
            Lengths::Fixed(ell) => ell.max(i + 1),
            Lengths::Filter { eps_log2 } => filter_length(i, eps_log2, u_bits),
        }
    }
}

/// `i + log(1/ε) + ⌈log₂ i⌉ + ⌈log₂⌈log₂⌈log₂u⌉⌉⌉ + 2`.
pub fn filter_length(i: u32, eps_log2: u32, u_bits: u32) -> u32 {
    let log_i = if i == 0 { 0 } else { ceil_log2(i as u64) };
    let lll = ceil_log2(ceil_log2(u_bits as u64).max(1) as u64);
    i + eps_log2 + log_i + lll + 2
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StageStats {
    /// Stage changes so far.
    pub transitions: u32,
    /// Stage changes at which leftover migration or setup work had to be
    /// finished on the spot. Zero when the per-insert work suffices.
    pub forced: u32,
    /// Most matchers alive at once.
    pub max_live: usize,
}

/// A matcher and, for short strings, a truth table sized for one stage.
#[derive(Debug)]
struct Level {
    stage: u32,
    d: PrefixMatcher,
    t: Option<TruthTable>,
}

impl Level {
    fn new(stage: u32, u_bits: u32, lengths: Lengths, consts: Constants, tables: bool) -> Self {
        let params = ParamSet::new(u_bits, 1 << stage, lengths.ell(stage, u_bits), consts).expect("valid stage parameters");
        Self {
            stage,
            d: PrefixMatcher::new(params, Mode::Prefix),
            t: tables.then(|| TruthTable::new(stage as usize)),
        }
    }

    fn init_step(&mut self) -> bool {
        let t = self.t.as_mut().is_none_or(TruthTable::init_step);
        self.d.init_step() && t
    }

    fn is_ready(&self) -> bool {
        self.d.is_ready() && self.t.as_ref().is_none_or(TruthTable::is_ready)
    }

    fn space_bits(&self) -> u64 {
        self.d.space_bits() + self.t.as_ref().map_or(0, TruthTable::space_bits)
    }

    fn probes(&self) -> u64 {
        self.d.probes() + self.t.as_ref().map_or(0, TruthTable::probes)
    }

    fn query(&self, x: &BitString) -> bool {
        let in_table = self.t.as_ref().is_some_and(|t| {
            let w = self.stage as usize;
            x.len() >= w && t.query(&x.prefix(w)).unwrap_or(false)
        });
        in_table || (self.d.is_ready() && self.d.query(x).unwrap_or(false))
    }
}

/// Prefix matching without a size bound.
#[derive(Debug)]
pub struct PrefixMatcherUnbounded {
    u_bits: u32,
    lengths: Lengths,
    consts: Constants,
    tables: bool,
    stage: u32,
    n: u64,
    prev: Option<Level>,
    cur: Level,
    next: Level,
    failure: Option<Failure>,
    retired_probes: u64,
    stats: StageStats,
}

impl PrefixMatcherUnbounded {
    /// Truth tables are kept only for fixed lengths, where new strings may be
    /// as short as the stage index.
    pub fn new(u_bits: u32, lengths: Lengths, consts: Constants) -> Self {
        let tables = matches!(lengths, Lengths::Fixed(_));
        let mut cur = Level::new(0, u_bits, lengths, consts, tables);
        while !cur.init_step() {}
        Self {
            u_bits,
            lengths,
            consts,
            tables,
            stage: 0,
            n: 0,
            prev: None,
            cur,
            next: Level::new(1, u_bits, lengths, consts, tables),
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

    pub fn u_bits(&self) -> u32 {
        self.u_bits
    }

    pub fn lengths(&self) -> Lengths {
        self.lengths
    }

    /// Length bound for the next insertion.
    pub fn next_ell(&self) -> u32 {
        self.lengths.ell(stage_of(self.n + 1), self.u_bits)
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

    /// Matchers currently holding memory.
    pub fn live_matchers(&self) -> usize {
        let prev = self.prev.as_ref().map_or(0, |p| usize::from(!p.d.is_destroyed()));
        prev + 2
    }

    pub fn space_bits(&self) -> u64 {
        self.prev.as_ref().map_or(0, Level::space_bits) + self.cur.space_bits() + self.next.space_bits()
    }

    pub fn probes(&self) -> u64 {
        self.retired_probes
            + self.prev.as_ref().map_or(0, Level::probes)
            + self.cur.probes()
            + self.next.probes()
    }

    /// Whether a stored string prefixes `x`. Exact for `|x|` of at least the
    /// current stage index: shorter stored strings live on only as their
    /// extensions in the truth tables.
    pub fn query(&self, x: &BitString) -> bool {
        self.cur.query(x) || self.prev.as_ref().is_some_and(|p| p.query(x))
    }

    fn fail(&mut self, e: PmError) -> PmError {
        if let PmError::Failed(f) = e {
            self.failure.get_or_insert(f);
        }
        e
    }

    /// Inserts `x`; the caller keeps the inserted set prefix-free. Strings
    /// must be at least as long as the stage index and at most
    /// [`next_ell`](Self::next_ell) bits.
    pub fn insert(&mut self, x: &BitString) -> Result<(), PmError> {
        if let Some(f) = self.failure {
            return Err(PmError::Failed(f));
        }
        let i = stage_of(self.n + 1);
        if i > self.stage {
            self.advance();
        }
        let w = i as usize;
        if x.len() < w || (x.len() == w && !self.tables) {
            return Err(PmError::BadLength { len: x.len() });
        }
        if x.len() == w {
            let t = self.cur.t.as_mut().expect("tables kept");
            t.insert(x).expect("ready table of the stage width");
        } else {
            match self.cur.d.insert(x) {
                Ok(()) => {}
                Err(e @ PmError::Failed(_)) => {
                    // The string is stored unless a load cap refused it.
                    let stored = self.cur.d.failure() == Some(Failure::FingerprintBudget);
                    if stored {
                        self.n += 1;
                    }
                    return Err(self.fail(e));
                }
                Err(e) => return Err(e),
            }
        }
        self.n += 1;
        for _ in 0..ROUNDS_PER_INSERT {
            self.maintain();
        }
        Ok(())
    }

    /// Moves to the next stage: the current structures become the ones
    /// being drained and the prepared ones take new insertions.
    fn advance(&mut self) {
        let mut forced = false;
        while self.prev.is_some() {
            forced = true;
            self.migrate_step();
        }
        while !self.next.is_ready() {
            forced = true;
            self.next.init_step();
        }
        self.stats.forced += u32::from(forced);
        self.stats.transitions += 1;
        self.stage += 1;
        let next = Level::new(self.stage + 1, self.u_bits, self.lengths, self.consts, self.tables);
        let cur = std::mem::replace(&mut self.next, next);
        self.prev = Some(std::mem::replace(&mut self.cur, cur));
        self.stats.max_live = self.stats.max_live.max(self.live_matchers() + 1);
    }

    fn maintain(&mut self) {
        if self.prev.is_some() {
            self.migrate_step();
        }
        self.next.init_step();
    }

    /// One unit of draining or teardown of each previous-stage structure.
    fn migrate_step(&mut self) {
        let Some(p) = self.prev.as_mut() else {
            return;
        };
        let mut table_done = true;
        if let Some(t) = p.t.as_mut() {
            table_done = false;
            match t.decrement() {
                Drained::Item(y) => {
                    let ct = self.cur.t.as_mut().expect("tables kept");
                    for bit in [false, true] {
                        let mut z = y.clone();
                        z.push(bit);
                        ct.insert(&z).expect("ready table of the stage width");
                    }
                }
                Drained::Empty => {}
                Drained::Exhausted => table_done = t.destroy_step(),
            }
        }
        let mut matcher_done = false;
        let mut moved = None;
        if p.d.is_destroyed() {
            matcher_done = true;
        } else {
            match p.d.decrement() {
                Ok(Decrement::Item(e)) => moved = Some(p.d.join(&e)),
                Ok(Decrement::Empty) => {}
                Ok(Decrement::Exhausted) | Err(_) => matcher_done = p.d.destroy_step(),
            }
        }
        if table_done && matcher_done {
            let p = self.prev.take().expect("checked above");
            self.retired_probes += p.probes();
        }
        let Some(x) = moved else {
            return;
        };
        let short = x.len() == self.cur.stage as usize;
        let r = match self.cur.t.as_mut() {
            Some(t) if short => t.insert(&x).map_err(|_| PmError::BadLength { len: x.len() }),
            // Without tables a string that fell to the stage index is
            // replaced by its two one-bit extensions.
            None if short => [false, true].into_iter().try_for_each(|bit| {
                let mut z = x.clone();
                z.push(bit);
                self.cur.d.insert(&z)
            }),
            _ => self.cur.d.insert(&x),
        };
        if let Err(e) = r {
            self.fail(e);
        }
    }
}
