//! The per-subtable record: fingerprints, indicators, navigators, buffers
//! and reorganization cursors. It lives in one metered array and is decoded
//! into this struct for the duration of an operation.

use super::params::{ceil_log2, ParamSet};
use crate::adaptive_prefixes::PrefixCollection;
use crate::bits::BitString;
use crate::memory::Handle;
use crate::wordram::{Broadword, PackedArray, TernaryList};

/// Indicator values.
pub const STATIC: u64 = 1;
pub const BUILDING: u64 = 2;
pub const REORG: u64 = 3;

/// Widths of the fixed record fields, in encoding order: indicator count,
/// body symbols, navigator count, the two buffer lengths, `p`, `q`, `qp`,
/// phase, sort cursor, blocks with the building flag, reorganized block,
/// reorganization steps, blocks handle. Only the counts depend on the
/// capacity, so a record spans the same number of words at every size.
fn field_widths(p: &ParamSet) -> [usize; 14] {
    let count = ceil_log2((p.subtable_cap() + p.block_len + 2) as u64) as usize;
    let body = ceil_log2(4 * p.fingerprint_budget() as u64 + 4) as usize;
    let buf = ceil_log2(p.block_len as u64 + 1) as usize;
    let block = ceil_log2(p.max_blocks() as u64 + 1) as usize;
    [count, body, count, buf, buf, count, count, count, 3, count, block + 1, block, 8, 32]
}

/// Bits of the fixed part of a record.
pub fn header_bits(p: &ParamSet) -> usize {
    field_widths(p).iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Idle,
    NavInit,
    Nav,
    Sort,
    Flip,
}

impl Phase {
    fn code(self) -> u64 {
        self as u64
    }

    fn from_code(c: u64) -> Self {
        match c {
            0 => Phase::Idle,
            1 => Phase::NavInit,
            2 => Phase::Nav,
            3 => Phase::Sort,
            _ => Phase::Flip,
        }
    }
}

#[derive(Debug)]
pub struct Subtable {
    pub blocks_handle: Handle,
    pub fp: PrefixCollection,
    pub ind: PackedArray,
    pub nav: PackedArray,
    /// In-block slot of each string of the block under construction, in
    /// rank order.
    pub bu: PackedArray,
    /// The same for the block under reorganization.
    pub br: PackedArray,
    pub p: usize,
    pub q: usize,
    pub qp: usize,
    pub phase: Phase,
    pub sort_t: usize,
    /// Blocks in the blocks array, including one under construction.
    pub blocks: usize,
    pub building: bool,
    pub reorg_block: usize,
    /// Steps spent on the current reorganization.
    pub reorg_steps: usize,
}

/// Upper bound on the encoded size of a record.
pub fn record_cap_bits(p: &ParamSet) -> usize {
    let cap = p.subtable_cap();
    header_bits(p)
        + p.fingerprint_budget()
        + 2 * cap
        + p.nav_bits as usize * (cap + p.block_len)
        + 2 * p.block_len * p.buf_bits as usize
}

fn pack(a: &PackedArray, out: &mut BitString) {
    for i in 0..a.len() {
        out.push_bits(a.get(i), a.width());
    }
}

fn unpack(width: usize, src: &BitString, pos: &mut usize, len: usize) -> PackedArray {
    let mut a = PackedArray::new(width);
    for _ in 0..len {
        a.push(src.extract(*pos, width));
        *pos += width;
    }
    a
}

impl Subtable {
    pub fn new(p: &ParamSet, blocks_handle: Handle) -> Self {
        Self {
            blocks_handle,
            fp: PrefixCollection::new(p.bucket_bits() as usize, p.fingerprint_budget()),
            ind: PackedArray::new(2),
            nav: PackedArray::new(p.nav_bits as usize),
            bu: PackedArray::new(p.buf_bits as usize),
            br: PackedArray::new(p.buf_bits as usize),
            p: 1,
            q: 1,
            qp: 0,
            phase: Phase::Idle,
            sort_t: 0,
            blocks: 0,
            building: false,
            reorg_block: 0,
            reorg_steps: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.ind.len()
    }

    pub fn encode(&self, p: &ParamSet) -> BitString {
        let mut out = BitString::new();
        let fields = [
            self.ind.len(),
            self.fp.bd().len(),
            self.nav.len(),
            self.bu.len(),
            self.br.len(),
            self.p,
            self.q,
            self.qp,
            self.phase.code() as usize,
            self.sort_t,
            self.blocks << 1 | self.building as usize,
            self.reorg_block,
            self.reorg_steps.min(255),
            self.blocks_handle.index(),
        ];
        for (f, w) in fields.into_iter().zip(field_widths(p)) {
            assert!(f < 1 << w, "record field {f} exceeds {w} bits");
            out.push_bits(f as u64, w);
        }
        out.append(self.fp.hd());
        out.append(self.fp.bd().encoding());
        pack(&self.ind, &mut out);
        pack(&self.nav, &mut out);
        pack(&self.bu, &mut out);
        pack(&self.br, &mut out);
        out
    }

    pub fn decode(src: &BitString, p: &ParamSet) -> Self {
        let mut pos = 0;
        let mut fields = [0usize; 14];
        for (f, w) in fields.iter_mut().zip(field_widths(p)) {
            *f = src.extract(pos, w) as usize;
            pos += w;
        }
        let f = |i: usize| fields[i];
        let count = f(0);
        let bd_len = f(1);
        let blocks_handle = Handle::from_index(f(13));
        let bb = p.bucket_bits() as usize;
        let hd_len = (1 << bb) + 1 + count;
        let hd = src.slice(pos, pos + hd_len);
        pos += hd_len;
        let bd = TernaryList::from_encoding(src.slice(pos, pos + 2 * bd_len)).expect("valid body list");
        pos += 2 * bd_len;
        let fp = PrefixCollection::from_parts(bb, p.fingerprint_budget(), hd, bd);
        let ind = unpack(2, src, &mut pos, count);
        let nav = unpack(p.nav_bits as usize, src, &mut pos, f(2));
        let bu = unpack(p.buf_bits as usize, src, &mut pos, f(3));
        let br = unpack(p.buf_bits as usize, src, &mut pos, f(4));
        Self {
            blocks_handle,
            fp,
            ind,
            nav,
            bu,
            br,
            p: f(5),
            q: f(6),
            qp: f(7),
            phase: Phase::from_code(f(8) as u64),
            sort_t: f(9),
            blocks: f(10) >> 1,
            building: f(10) & 1 == 1,
            reorg_block: f(11),
            reorg_steps: f(12),
        }
    }

    /// Position (1-based) in the navigator list of the navigator for rank
    /// `j`; 0 when no static string precedes it.
    pub fn nav_index(&self, bw: &Broadword, j: usize) -> usize {
        if j == 0 {
            return 0;
        }
        let ones = bw.packed_count(&self.ind, STATIC, 0, j);
        if self.p > j {
            ones
        } else {
            ones + bw.packed_count(&self.ind, REORG, 0, j)
        }
    }

    /// Rank among strings with the same indicator.
    pub fn rank_within(&self, bw: &Broadword, j: usize) -> usize {
        let v = self.ind.get(j - 1);
        bw.packed_count(&self.ind, v, 0, j)
    }

    /// Moves navigators `[qp − l, qp)` to `[q − l, q)`, blanking the source.
    pub fn move_navigators(&mut self, l: usize, sentinel: u64) {
        let vals: Vec<u64> = (self.qp - l..self.qp).map(|i| self.nav.get(i)).collect();
        for i in self.qp - l..self.qp {
            self.nav.set(i, sentinel);
        }
        for (t, v) in vals.into_iter().enumerate() {
            self.nav.set(self.q - l + t, v);
        }
    }

    /// One navigator-update iteration. Returns false once every navigator
    /// of the reorganized block is in place.
    pub fn nav_iteration(&mut self, bw: &Broadword, run: usize, sentinel: u64) -> bool {
        let head = self.ind.slice(0, self.p - 1);
        let Some(last3) = bw.packed_rselect(&head, REORG, 1) else {
            self.p = 1;
            self.q = 1;
            return false;
        };
        let l = bw.packed_count(&self.ind, STATIC, last3, self.p - 1);
        if l <= run {
            self.move_navigators(l, sentinel);
            self.nav.set(self.q - l - 1, self.reorg_block as u64);
            self.p = last3;
            self.qp -= l;
            self.q -= l + 1;
        } else {
            let tail = self.ind.slice(last3, self.p - 1);
            let cut = last3 + bw.packed_rselect(&tail, STATIC, run).expect("enough static entries");
            self.move_navigators(run, sentinel);
            self.p = cut;
            self.qp -= run;
            self.q -= run;
        }
        true
    }

    /// Navigators holding the empty marker.
    pub fn sentinel_count(&self, sentinel: u64) -> usize {
        (0..self.nav.len()).filter(|&i| self.nav.get(i) == sentinel).count()
    }
}
