//! Data block layout: a header bitmap, `block_len` identities and one
//! fixed-width rest slot per string.
//!
//! ```text
//! [ header: 2^hd_bits + block_len ][ identities: block_len × hs_bits ][ rests … ]
//! ```
//!
//! The header is the run string `0 1^{n₀} 0 1^{n₁} …` of per-`hd` counts,
//! zero-padded to its reserved size. Rest slots hold `PFC(rt) ∘ value` where
//! `PFC(rt) = 1^{rest_len − |rt|} 0 rt`.

use super::params::ParamSet;
use crate::bits::BitString;
use crate::wordram::{Broadword, PackedArray};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub header: usize,
    pub hs_bits: usize,
    pub block_len: usize,
    pub rest_len: usize,
    pub value_bits: usize,
}

impl Layout {
    pub fn new(p: &ParamSet) -> Self {
        Self {
            header: p.header_bits(),
            hs_bits: p.hs_bits as usize,
            block_len: p.block_len,
            rest_len: p.rest_len(),
            value_bits: p.value_bits as usize,
        }
    }

    /// Bits before the first rest slot.
    pub fn prefix_bits(&self) -> usize {
        self.header + self.block_len * self.hs_bits
    }

    pub fn slot_bits(&self) -> usize {
        self.rest_len + 1 + self.value_bits
    }

    /// Bits of a block holding `n` strings.
    pub fn bits_for(&self, n: usize) -> usize {
        self.prefix_bits() + n * self.slot_bits()
    }

    pub fn full_bits(&self) -> usize {
        self.bits_for(self.block_len)
    }

    pub fn empty(&self) -> BitString {
        BitString::zeros(self.prefix_bits())
    }

    fn header_of(&self, block: &BitString) -> BitString {
        block.slice(0, self.header)
    }

    /// Counts one more string in class `hd`.
    pub fn header_insert(&self, bw: &Broadword, block: &mut BitString, hd: usize) {
        let mut h = self.header_of(block);
        let pos = bw.select_zero(&h, hd + 1).expect("class exists");
        h.insert(pos, &BitString::ones(1));
        h.truncate(self.header);
        block.splice(0, self.header, &h);
    }

    /// Class of the string at slot `idx` (0-based) of a sorted block.
    pub fn hd_at(&self, bw: &Broadword, block: &BitString, idx: usize) -> usize {
        let h = self.header_of(block);
        let pos = bw.select(&h, idx + 1).expect("slot exists");
        pos - 1 - idx - 1
    }

    /// Slots `b1..b2` holding class `hd`.
    pub fn class_range(&self, bw: &Broadword, block: &BitString, hd: usize) -> (usize, usize) {
        let h = self.header_of(block);
        let a1 = bw.select_zero(&h, hd + 1).expect("class exists");
        let b1 = bw.rank(&h, a1);
        let b2 = match bw.select_zero(&h, hd + 2) {
            Some(a2) => bw.rank(&h, a2),
            None => bw.popcount(&h),
        };
        (b1, b2)
    }

    pub fn id(&self, block: &BitString, idx: usize) -> u64 {
        block.extract(self.header + idx * self.hs_bits, self.hs_bits)
    }

    pub fn set_id(&self, block: &mut BitString, idx: usize, hs: u64) {
        block.write(self.header + idx * self.hs_bits, self.hs_bits, hs);
    }

    fn slot_start(&self, idx: usize) -> usize {
        self.prefix_bits() + idx * self.slot_bits()
    }

    pub fn slot(&self, block: &BitString, idx: usize) -> BitString {
        let s = self.slot_start(idx);
        block.slice(s, s + self.slot_bits())
    }

    pub fn set_slot(&self, block: &mut BitString, idx: usize, slot: &BitString) {
        let s = self.slot_start(idx);
        block.splice(s, s + self.slot_bits(), slot);
    }

    pub fn encode_slot(&self, rt: &BitString, value: u64) -> BitString {
        debug_assert!(rt.len() <= self.rest_len);
        let mut s = BitString::ones(self.rest_len - rt.len());
        s.push(false);
        s.append(rt);
        s.push_bits(value, self.value_bits);
        s
    }

    pub fn decode_slot(&self, bw: &Broadword, slot: &BitString) -> (BitString, u64) {
        let code = slot.prefix(self.rest_len + 1);
        let pad = bw.select_zero(&code, 1).expect("codeword has a zero") - 1;
        let rt = code.suffix_from(pad + 1);
        let value = slot.extract(self.rest_len + 1, self.value_bits);
        (rt, value)
    }

    /// Slot of the `kth` (1-based) string with identity `hs` in class `hd`.
    pub fn find(&self, bw: &Broadword, block: &BitString, hd: usize, hs: u64, kth: usize) -> Option<usize> {
        let (b1, b2) = self.class_range(bw, block, hd);
        if self.hs_bits == 0 {
            return (b1 + kth <= b2).then(|| b1 + kth - 1);
        }
        let ids = PackedArray::from_values(self.hs_bits, &(b1..b2).map(|i| self.id(block, i)).collect::<Vec<_>>());
        bw.packed_select(&ids, hs, kth).map(|t| b1 + t - 1)
    }

    pub fn swap(&self, block: &mut BitString, a: usize, b: usize) {
        let (ia, ib) = (self.id(block, a), self.id(block, b));
        self.set_id(block, a, ib);
        self.set_id(block, b, ia);
        let (sa, sb) = (self.slot(block, a), self.slot(block, b));
        self.set_slot(block, a, &sb);
        self.set_slot(block, b, &sa);
    }
}
