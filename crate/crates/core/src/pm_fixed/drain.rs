//! Draining and teardown.

use super::subtable::{Phase, Subtable, BUILDING};
use super::{Cache, Decrement, Entry, Lifecycle, PmError, PrefixMatcher};
use crate::memory::Handle;

impl PrefixMatcher {
    /// Removes and returns one stored item: subtables in increasing order,
    /// blocks from the last, slots from the last. Empty subtables cost one
    /// [`Decrement::Empty`] call each.
    pub fn decrement(&mut self) -> Result<Decrement, PmError> {
        self.check_ready()?;
        let st = self.drain.sub;
        if st >= self.params.subtables() {
            return Ok(Decrement::Exhausted);
        }
        let Some(rec) = self.record_handle(st) else {
            self.drain.sub += 1;
            self.stats.empty_decrements += 1;
            return Ok(Decrement::Empty);
        };
        let mut s = self.load(rec);
        if !self.drain.active {
            if s.phase != Phase::Idle {
                let mut cache = Cache::new();
                while s.phase != Phase::Idle {
                    self.reorg_step(&mut s, &mut cache);
                }
                self.flush(cache, s.blocks_handle)?;
                self.store(rec, &s)?;
            }
            if s.blocks == 0 {
                self.teardown(st, rec, s.blocks_handle)?;
                self.stats.empty_decrements += 1;
                return Ok(Decrement::Empty);
            }
            self.drain.active = true;
            self.drain.block = s.blocks - 1;
            self.drain.remaining = if s.building {
                s.bu.len()
            } else {
                self.params.block_len
            };
        }

        let (k, slot) = (self.drain.block, self.drain.remaining - 1);
        let mut cache = Cache::new();
        let ci = self.fetch(&mut cache, s.blocks_handle, k);
        let block = &cache[ci].bits;
        let bucket = if s.building && k == s.blocks - 1 {
            self.building_bucket(&s, slot)
        } else {
            let hd = self.layout.hd_at(&self.bw, block, slot);
            hd << self.params.hs_bits | self.layout.id(block, slot) as usize
        };
        let (rest, value) = self.layout.decode_slot(&self.bw, &self.layout.slot(block, slot));

        let base = k * self.block_bits;
        self.mem.probes().charge(1);
        if slot > 0 {
            self.mem.set_len(s.blocks_handle, base + self.layout.bits_for(slot))?;
            self.drain.remaining = slot;
        } else {
            self.mem.set_len(s.blocks_handle, base)?;
            if k == 0 {
                self.teardown(st, rec, s.blocks_handle)?;
            } else {
                self.drain.block = k - 1;
                self.drain.remaining = self.params.block_len;
            }
        }
        self.len -= 1;
        Ok(Decrement::Item(Entry {
            st,
            bucket,
            rest,
            value,
        }))
    }

    /// Bucket of the item at `slot` of the block under construction, found
    /// through its buffer entry and indicator rank.
    fn building_bucket(&self, s: &Subtable, slot: usize) -> usize {
        let t = self.bw.packed_select(&s.bu, slot as u64, 1).expect("slot is buffered");
        let j = self.bw.packed_select(&s.ind, BUILDING, t).expect("indicator exists");
        s.fp.bucket_of(j)
    }

    /// Frees both arrays of subtable `st` and clears its main slot.
    fn teardown(&mut self, st: usize, rec: Handle, blocks: Handle) -> Result<(), PmError> {
        self.mem.set_len(blocks, 0)?;
        self.mem.destroy(blocks)?;
        self.mem.set_len(rec, 0)?;
        self.mem.destroy(rec)?;
        self.mem.write(self.main_handle(), st + 1, 0)?;
        if st == self.drain.sub {
            self.drain.sub += 1;
            self.drain.active = false;
        }
        Ok(())
    }

    /// One unit of teardown work. Returns true once everything is freed.
    pub fn destroy_step(&mut self) -> bool {
        if self.lifecycle == Lifecycle::Destroyed {
            return true;
        }
        self.lifecycle = Lifecycle::Destroying;
        self.stats.destroy_steps += 1;
        let Some(main) = self.main else {
            self.lifecycle = Lifecycle::Destroyed;
            return true;
        };
        let n = self.mem.len(main).expect("live main table");
        if n == 0 {
            self.mem.destroy(main).expect("empty main table");
            self.main = None;
            self.len = 0;
            self.lifecycle = Lifecycle::Destroyed;
            return true;
        }
        let v = self.mem.read(main, n).expect("slot exists");
        if v != 0 {
            let rec = Handle::from_index(v as usize - 1);
            let bits = self.mem.bit_len(rec).expect("live record");
            let s = Subtable::decode(&self.mem.peek_bits(rec, 0, bits).expect("in range"), &self.params);
            self.teardown(n - 1, rec, s.blocks_handle).expect("live arrays");
        } else {
            self.mem.shrink(main).expect("non-empty");
        }
        false
    }
}
