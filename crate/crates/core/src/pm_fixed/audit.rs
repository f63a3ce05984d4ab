//! Consistency checks and a text dump, for tests and debugging.

use std::fmt::Write;

use super::subtable::{Phase, Subtable, BUILDING, REORG, STATIC};
use super::{Cache, PrefixMatcher};
use crate::memory::Handle;

impl PrefixMatcher {
    fn subtables_in_use(&self) -> Vec<(usize, Subtable)> {
        let Some(main) = self.main else {
            return Vec::new();
        };
        let n = self.mem.len(main).unwrap_or(0);
        (0..n)
            .filter_map(|st| {
                let v = self.mem.read(main, st + 1).ok()?;
                (v != 0).then(|| {
                    let rec = Handle::from_index(v as usize - 1);
                    let bits = self.mem.bit_len(rec).expect("live record");
                    let raw = self.mem.peek_bits(rec, 0, bits).expect("in range");
                    (st, Subtable::decode(&raw, &self.params))
                })
            })
            .collect()
    }

    /// Checks the bookkeeping invariants of every subtable; returns the first
    /// violation found.
    pub fn audit(&self) -> Result<(), String> {
        let bw = &self.bw;
        let k = self.params.block_len;
        let mut total = 0;
        for (st, s) in self.subtables_in_use() {
            let err = |m: String| Err(format!("subtable {st}: {m}"));
            let ones = bw.packed_popcount(&s.ind, STATIC);
            let twos = bw.packed_popcount(&s.ind, BUILDING);
            let threes = bw.packed_popcount(&s.ind, REORG);
            total += s.len();
            if s.ind.len() != s.fp.len() {
                return err(format!("{} indicators for {} fingerprints", s.ind.len(), s.fp.len()));
            }
            if s.bu.len() != twos || s.br.len() != threes {
                return err("buffer lengths disagree with indicators".into());
            }
            if s.building != (twos > 0) {
                return err("construction flag disagrees with indicators".into());
            }
            let sealed = s.blocks - usize::from(s.building);
            if sealed * k != ones + threes {
                return err(format!("{sealed} sealed blocks for {} items", ones + threes));
            }
            if s.phase == Phase::Idle {
                if s.nav.len() != ones || threes != 0 {
                    return err("navigators out of step after reorganization".into());
                }
                if s.sentinel_count(self.params.nav_sentinel()) != 0 {
                    return err("leftover empty navigators".into());
                }
            }
            if self.drain.sub <= st && !(self.drain.active && self.drain.sub == st) {
                let expect = sealed * self.block_bits + if s.building { self.layout.bits_for(twos) } else { 0 };
                let got = self.mem.bit_len(s.blocks_handle).map_err(|e| e.to_string())?;
                if got != expect {
                    return err(format!("blocks span {got} bits, expected {expect}"));
                }
            }
            let mut cache = Cache::new();
            for j in 1..=s.len() {
                let bucket = s.fp.bucket_of(j);
                let Some((b, slot)) = self.locate(st, &s, j, bucket, &mut cache) else {
                    continue;
                };
                let (rest, _) = self.read_slot(&mut cache, s.blocks_handle, b, slot);
                if !s.fp.fingerprint(j).is_prefix_of(&self.source(bucket, &rest)) {
                    return err(format!("rank {j} retrieves an item its fingerprint does not prefix"));
                }
            }
        }
        if self.drain.sub == 0 && !self.drain.active && total != self.len {
            return Err(format!("{total} items in subtables, {} counted", self.len));
        }
        Ok(())
    }

    /// Per-subtable fingerprints, indicators, navigators and block contents.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (st, s) in self.subtables_in_use() {
            let _ = writeln!(out, "subtable {st}: {} items, {} blocks, phase {:?}", s.len(), s.blocks, s.phase);
            let fps: Vec<String> = s.fp.fingerprints().iter().map(|f| f.to_string()).collect();
            let _ = writeln!(out, "  fingerprints {}", fps.join(" "));
            let _ = writeln!(out, "  indicators {:?}", s.ind.to_vec());
            let _ = writeln!(out, "  navigators {:?}", s.nav.to_vec());
            let _ = writeln!(out, "  buffers {:?} {:?}", s.bu.to_vec(), s.br.to_vec());
            let mut cache = Cache::new();
            for b in 0..s.blocks {
                let ci = self.fetch(&mut cache, s.blocks_handle, b);
                let bits = &cache[ci].bits;
                let n = (bits.len().saturating_sub(self.layout.prefix_bits())) / self.layout.slot_bits();
                let rests: Vec<String> = (0..n)
                    .map(|i| {
                        let (rt, v) = self.layout.decode_slot(&self.bw, &self.layout.slot(bits, i));
                        format!("{}:{}/{}", self.layout.id(bits, i), rt, v)
                    })
                    .collect();
                let _ = writeln!(
                    out,
                    "  block {b} header {} [{}]",
                    bits.slice(0, self.layout.header),
                    rests.join(" ")
                );
            }
        }
        out
    }
}
