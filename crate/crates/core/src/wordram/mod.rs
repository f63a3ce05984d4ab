//! Broadword operations on bit strings, ternary lists and packed arrays.
//!
//! Every operation walks its input one 8-bit chunk at a time and resolves each
//! chunk with a single lookup into a precomputed table. [`Broadword`] counts
//! those lookups so callers can check that an operation on a `W`-bit input
//! costs at most `⌈W/8⌉ + 1` table probes.

use std::cell::Cell;

use thiserror::Error;

use crate::bits::BitString;

pub mod naive;
mod packed;
mod tables;
mod ternary;

pub use packed::PackedArray;
pub use ternary::{Symbol, TernaryList};

pub(crate) use packed::{add, and, mul_small, replicate, shift_right, xor};
use tables::{tables, CHUNK, SYM_BOT, SYM_END, SYM_ONE, SYM_ZERO};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordRamError {
    #[error("expected an even number of bits, got {0}")]
    OddLength(usize),
    #[error("symbol {0} is not one of 0, 1, ⊥")]
    InvalidSymbol(usize),
    #[error("list does not start with ⊥")]
    MalformedList,
}

/// Chunk `c` of `a`, zero-padded past the end.
#[inline]
fn chunk(a: &BitString, c: usize) -> u8 {
    let w = c / 8;
    (a.words()[w] >> (56 - 8 * (c % 8))) as u8
}

#[inline]
fn chunks(bits: usize) -> usize {
    bits.div_ceil(CHUNK)
}

/// Table-driven word-RAM primitives with a running probe counter.
#[derive(Debug, Default)]
pub struct Broadword {
    probes: Cell<u64>,
}

impl Broadword {
    pub fn new() -> Self {
        Self::default()
    }

    /// Table lookups performed so far.
    pub fn probes(&self) -> u64 {
        self.probes.get()
    }

    pub fn reset_probes(&self) {
        self.probes.set(0);
    }

    #[inline]
    fn probe(&self) {
        self.probes.set(self.probes.get() + 1);
    }

    fn chunk_counts(&self, a: &BitString) -> Vec<u8> {
        let t = tables();
        (0..chunks(a.len()))
            .map(|c| {
                self.probe();
                t.popcount[chunk(a, c) as usize]
            })
            .collect()
    }

    fn select_in(&self, a: &BitString, counts: &[u8], k: usize) -> Option<usize> {
        if k == 0 {
            return None;
        }
        let mut seen = 0;
        for (c, &n) in counts.iter().enumerate() {
            let n = n as usize;
            if seen + n >= k {
                self.probe();
                let pos = tables().select[chunk(a, c) as usize][k - seen - 1] as usize;
                return Some(c * CHUNK + pos + 1);
            }
            seen += n;
        }
        None
    }

    pub fn popcount(&self, a: &BitString) -> usize {
        self.chunk_counts(a).iter().map(|&n| n as usize).sum()
    }

    /// Ones among the first `n` bits.
    pub fn rank(&self, a: &BitString, n: usize) -> usize {
        let t = tables();
        let n = n.min(a.len());
        let mut total = 0;
        for c in 0..chunks(n) {
            let mut b = chunk(a, c);
            let valid = n - c * CHUNK;
            if valid < CHUNK {
                b &= !(0xffu8 >> valid);
            }
            self.probe();
            total += t.popcount[b as usize] as usize;
        }
        total
    }

    /// 1-based position of the `k`-th one.
    pub fn select(&self, a: &BitString, k: usize) -> Option<usize> {
        if k == 0 {
            return None;
        }
        let t = tables();
        let mut seen = 0;
        for c in 0..chunks(a.len()) {
            let b = chunk(a, c) as usize;
            self.probe();
            let n = t.popcount[b] as usize;
            if seen + n >= k {
                self.probe();
                return Some(c * CHUNK + t.select[b][k - seen - 1] as usize + 1);
            }
            seen += n;
        }
        None
    }

    /// 1-based position of the `k`-th zero.
    pub fn select_zero(&self, a: &BitString, k: usize) -> Option<usize> {
        self.select(&a.complement(), k)
    }

    /// Shortest prefix of `x` that is not a prefix of `y`, or `x` when `x ≼ y`.
    pub fn extend(&self, x: &BitString, y: &BitString) -> BitString {
        let n = x.len().min(y.len());
        for c in 0..chunks(n) {
            let mut d = chunk(x, c) ^ chunk(y, c);
            let valid = n - c * CHUNK;
            if valid < CHUNK {
                d &= !(0xffu8 >> valid);
            }
            if d != 0 {
                self.probe();
                let l = c * CHUNK + tables().leading_zeros[d as usize] as usize;
                return x.prefix(l + 1);
            }
        }
        if x.len() <= y.len() {
            x.clone()
        } else {
            x.prefix(y.len() + 1)
        }
    }

    /// `x₁x₂… ↦ 0x₁0x₂…`
    pub fn double(&self, x: &BitString) -> BitString {
        let t = tables();
        let mut out = BitString::with_capacity(2 * x.len());
        for c in 0..chunks(x.len()) {
            self.probe();
            let d = t.double[chunk(x, c) as usize] as u64;
            let valid = (x.len() - c * CHUNK).min(CHUNK);
            out.push_bits(d >> (16 - 2 * valid), 2 * valid);
        }
        out
    }

    /// Inverse of [`double`](Self::double): keeps every second bit.
    pub fn rdouble(&self, x: &BitString) -> Result<BitString, WordRamError> {
        if !x.len().is_multiple_of(2) {
            return Err(WordRamError::OddLength(x.len()));
        }
        let t = tables();
        let mut out = BitString::with_capacity(x.len() / 2);
        for c in 0..chunks(x.len()) {
            self.probe();
            let r = t.rdouble[chunk(x, c) as usize] as u64;
            let valid = (x.len() - c * CHUNK).min(CHUNK) / 2;
            out.push_bits(r >> (4 - valid), valid);
        }
        Ok(out)
    }

    /// Number of strings `aᵢ ≼ x` in a sorted list `⊥ a₁ ⊥ a₂ …`; for sorted
    /// input this is the largest such index, 0 when there is none.
    pub fn pred(&self, list: &TernaryList, x: &BitString) -> Result<usize, WordRamError> {
        let s = list.len();
        if s == 0 {
            return Ok(0);
        }
        if list.symbol(0) != Symbol::Bot {
            return Err(WordRamError::MalformedList);
        }
        let t = tables();
        let code = list.encoding();
        let mut query = 0usize;
        for i in 0..4 {
            let sym = match (i < x.len()).then(|| x.get(i)) {
                Some(false) => SYM_ZERO,
                Some(true) => SYM_ONE,
                None => SYM_BOT,
            };
            query = (query << 2) | sym as usize;
        }
        let mut count = 0;
        let mut bots = Vec::new();
        for c in 0..s.div_ceil(4) {
            let mut b = chunk(code, c);
            let valid = s - 4 * c;
            for i in valid.min(4)..4 {
                let shift = 6 - 2 * i;
                b = (b & !(3 << shift)) | (SYM_END << shift);
            }
            self.probe();
            let e = t.pred[(b as usize) << 8 | query];
            count += (e & 0xf) as usize;
            let mask = e >> 4;
            for i in 0..4 {
                if mask & (8 >> i) != 0 {
                    bots.push(4 * c + i);
                }
            }
        }
        // Strings whose body crosses a chunk boundary are compared directly.
        for (i, &start) in bots.iter().enumerate() {
            let end = bots.get(i + 1).copied().unwrap_or(s);
            if start / 4 != end / 4 && list.bits_between(start + 1, end) <= *x {
                count += 1;
            }
        }
        Ok(count)
    }

    /// 0-based symbol index of the `k`-th `⊥` of `list`.
    pub fn bot_select(&self, list: &TernaryList, k: usize) -> Option<usize> {
        if k == 0 {
            return None;
        }
        let t = tables();
        let code = list.encoding();
        let mut seen = 0;
        for c in 0..list.len().div_ceil(4) {
            self.probe();
            let e = t.bottoms[chunk(code, c) as usize];
            let n = (e >> 4) as usize;
            if seen + n >= k {
                self.probe();
                let mask = (e & 0xf) << 4;
                return Some(4 * c + t.select[mask as usize][k - seen - 1] as usize);
            }
            seen += n;
        }
        None
    }

    /// Guard-bit mask marking the fields of `a` equal to `k`.
    fn matches(a: &PackedArray, k: u64) -> BitString {
        let f = a.field_bits();
        let n = a.len();
        let flipped = xor(a.payload(), &replicate(!k & a.max_value(), f, n));
        let guards = replicate(1 << a.width(), f, n);
        and(&guards, &add(&flipped, &replicate(1, f, n)))
    }

    fn field_of(a: &PackedArray, bit_pos: usize) -> usize {
        (bit_pos - 1) / a.field_bits() + 1
    }

    /// Number of elements equal to `k`.
    pub fn packed_popcount(&self, a: &PackedArray, k: u64) -> usize {
        self.popcount(&Self::matches(a, k))
    }

    /// Number of elements equal to `k` among elements `start..end` (0-based).
    pub fn packed_count(&self, a: &PackedArray, k: u64, start: usize, end: usize) -> usize {
        if start >= end {
            return 0;
        }
        self.packed_popcount(&a.slice(start, end), k)
    }

    /// 1-based index of the `l`-th element equal to `k`.
    pub fn packed_select(&self, a: &PackedArray, k: u64, l: usize) -> Option<usize> {
        self.select(&Self::matches(a, k), l).map(|p| Self::field_of(a, p))
    }

    /// 1-based index of the `l`-th element equal to `k`, counting from the end.
    pub fn packed_rselect(&self, a: &PackedArray, k: u64, l: usize) -> Option<usize> {
        let z = Self::matches(a, k);
        let counts = self.chunk_counts(&z);
        let total: usize = counts.iter().map(|&n| n as usize).sum();
        if l == 0 || l > total {
            return None;
        }
        self.select_in(&z, &counts, total - l + 1)
            .map(|p| Self::field_of(a, p))
    }

    /// Replaces every element equal to `k` with `l`.
    pub fn packed_set(&self, a: &mut PackedArray, k: u64, l: u64) {
        let z = Self::matches(a, k);
        let delta = mul_small(&shift_right(&z, a.width()), k ^ l);
        let updated = xor(a.payload(), &delta);
        *a.payload_mut() = updated;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;
    use proptest::prelude::*;

    fn all_strings(max_len: usize) -> Vec<BitString> {
        let mut out = Vec::new();
        for len in 0..=max_len {
            for v in 0..(1u64 << len) {
                out.push(BitString::from_u64(v, len));
            }
        }
        out
    }

    fn bound(bits: usize) -> u64 {
        bits.div_ceil(CHUNK) as u64 + 1
    }

    #[test]
    fn bit_ops_match_oracle_exhaustively() {
        let bw = Broadword::new();
        for a in all_strings(12) {
            bw.reset_probes();
            assert_eq!(bw.popcount(&a), naive::popcount(&a));
            assert!(bw.probes() <= bound(a.len()));
            for k in 0..=a.len() + 1 {
                bw.reset_probes();
                assert_eq!(bw.select(&a, k), naive::select(&a, k), "{a:?} {k}");
                assert!(bw.probes() <= bound(a.len()));
                assert_eq!(bw.rank(&a, k), naive::popcount(&a.prefix(k)));
            }
            bw.reset_probes();
            assert_eq!(bw.double(&a), naive::double(&a));
            assert!(bw.probes() <= bound(2 * a.len()));
            bw.reset_probes();
            assert_eq!(bw.rdouble(&a), naive::rdouble(&a));
            assert!(bw.probes() <= bound(a.len()));
        }
    }

    #[test]
    fn extend_matches_oracle_exhaustively() {
        let bw = Broadword::new();
        let strings = all_strings(7);
        for x in &strings {
            for y in &strings {
                bw.reset_probes();
                assert_eq!(bw.extend(x, y), naive::extend(x, y), "{x:?} {y:?}");
                assert!(bw.probes() <= bound(x.len().max(y.len())));
            }
        }
    }

    #[test]
    fn pred_on_small_sorted_lists() {
        let bw = Broadword::new();
        let pool = all_strings(3);
        // Every sorted subset of size up to 3 of the strings of length <= 3.
        let n = pool.len();
        let mut checked = 0;
        for i in 0..n {
            for j in i..=n {
                for k in j..=n {
                    let mut set: Vec<&BitString> = vec![&pool[i]];
                    if j > i && j < n {
                        set.push(&pool[j]);
                    }
                    if k > j && k < n {
                        set.push(&pool[k]);
                    }
                    set.sort();
                    set.dedup();
                    let list = TernaryList::from_strings(set.iter().copied());
                    for x in all_strings(4) {
                        bw.reset_probes();
                        assert_eq!(
                            bw.pred(&list, &x),
                            naive::pred(&list, &x),
                            "{list:?} {x:?}"
                        );
                        assert!(bw.probes() <= bound(list.encoding().len()));
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked > 1000);
    }

    #[test]
    fn pred_edge_cases() {
        let bw = Broadword::new();
        assert_eq!(bw.pred(&TernaryList::new(), &bits("1")), Ok(0));
        let bad = TernaryList::from_encoding(bits("0011")).unwrap();
        assert_eq!(bw.pred(&bad, &bits("1")), Err(WordRamError::MalformedList));
        let l = TernaryList::from_strings(&[bits(""), bits("0"), bits("0110110"), bits("1")]);
        assert_eq!(bw.pred(&l, &bits("")), Ok(1));
        assert_eq!(bw.pred(&l, &bits("0110")), Ok(2));
        assert_eq!(bw.pred(&l, &bits("0110111")), Ok(3));
        assert_eq!(bw.pred(&l, &bits("11")), Ok(4));
    }

    #[test]
    fn bot_select_finds_separators() {
        let bw = Broadword::new();
        let l = TernaryList::from_strings(&[bits("0101"), bits(""), bits("11"), bits("0")]);
        assert_eq!(bw.bot_select(&l, 1), Some(0));
        assert_eq!(bw.bot_select(&l, 2), Some(5));
        assert_eq!(bw.bot_select(&l, 3), Some(6));
        assert_eq!(bw.bot_select(&l, 4), Some(9));
        assert_eq!(bw.bot_select(&l, 5), None);
    }

    #[test]
    fn packed_ops_match_oracle_exhaustively() {
        let bw = Broadword::new();
        // All arrays of length <= 6 over width 2.
        for len in 0..=6u32 {
            for code in 0..4u64.pow(len) {
                let vals: Vec<u64> = (0..len).map(|i| (code >> (2 * i)) & 3).collect();
                let a = PackedArray::from_values(2, &vals);
                let w = a.payload().len();
                for k in 0..4 {
                    bw.reset_probes();
                    assert_eq!(bw.packed_popcount(&a, k), naive::packed_popcount(&vals, k));
                    assert!(bw.probes() <= bound(w));
                    for l in 0..=vals.len() + 1 {
                        bw.reset_probes();
                        assert_eq!(bw.packed_select(&a, k, l), naive::packed_select(&vals, k, l));
                        assert!(bw.probes() <= bound(w));
                        bw.reset_probes();
                        assert_eq!(bw.packed_rselect(&a, k, l), naive::packed_rselect(&vals, k, l));
                        assert!(bw.probes() <= bound(w));
                    }
                    for l in 0..4 {
                        let mut b = a.clone();
                        bw.packed_set(&mut b, k, l);
                        assert_eq!(b.to_vec(), naive::packed_set(&vals, k, l));
                    }
                }
            }
        }
    }

    #[test]
    fn worked_examples() {
        let bw = Broadword::new();
        assert_eq!(bw.popcount(&bits("10110")), 3);
        assert_eq!(bw.popcount(&bits("")), 0);
        assert_eq!(bw.select(&bits("00101"), 2), Some(5));
        assert_eq!(bw.select(&bits("00101"), 3), None);
        assert_eq!(bw.extend(&bits("1011"), &bits("1000")), bits("101"));
        assert_eq!(bw.extend(&bits("10"), &bits("1011")), bits("10"));
        assert_eq!(bw.double(&bits("101")), bits("010001"));
        assert_eq!(bw.rdouble(&bits("010001")), Ok(bits("101")));
        assert_eq!(bw.rdouble(&bits("011")), Err(WordRamError::OddLength(3)));
        let l = TernaryList::from_strings(&[bits("001"), bits("01"), bits("100")]);
        assert_eq!(bw.pred(&l, &bits("011")), Ok(2));
        assert_eq!(bw.pred(&TernaryList::from_strings(&[bits("1")]), &bits("0")), Ok(0));

        let a = PackedArray::from_values(2, &[3, 1, 3, 2]);
        assert_eq!(bw.packed_popcount(&a, 3), 2);
        assert_eq!(bw.packed_popcount(&PackedArray::new(2), 1), 0);
        let mut b = a.clone();
        bw.packed_set(&mut b, 3, 0);
        assert_eq!(b.to_vec(), vec![0, 1, 0, 2]);
        bw.packed_set(&mut b, 1, 1);
        assert_eq!(b.to_vec(), vec![0, 1, 0, 2]);
        let c = PackedArray::from_values(2, &[2, 1, 2, 2]);
        assert_eq!(bw.packed_select(&c, 2, 3), Some(4));
        assert_eq!(bw.packed_select(&c, 0, 1), None);
        assert_eq!(bw.packed_rselect(&c, 2, 1), Some(4));
        assert_eq!(bw.packed_rselect(&c, 2, 4), None);
    }

    #[test]
    fn doubled_string_is_a_width_one_layout() {
        let bw = Broadword::new();
        let x = bits("1101001");
        let a = PackedArray::from_payload(1, bw.double(&x));
        assert_eq!(a.to_vec(), x.iter().map(u64::from).collect::<Vec<_>>());
    }

    proptest! {
        #[test]
        fn pred_is_monotone(strings in proptest::collection::btree_set(proptest::collection::vec(any::<bool>(), 0..10), 1..12),
                            x in proptest::collection::vec(any::<bool>(), 0..12),
                            y in proptest::collection::vec(any::<bool>(), 0..12)) {
            let list: Vec<BitString> = strings.into_iter().map(BitString::from_bits).collect();
            let l = TernaryList::from_strings(&list);
            let (x, y) = (BitString::from_bits(x), BitString::from_bits(y));
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            let bw = Broadword::new();
            prop_assert!(bw.pred(&l, &lo).unwrap() <= bw.pred(&l, &hi).unwrap());
        }

        #[test]
        fn select_of_popcount_is_last_one(v in proptest::collection::vec(any::<bool>(), 1..200)) {
            let a = BitString::from_bits(v.iter().copied());
            let bw = Broadword::new();
            let n = bw.popcount(&a);
            if n > 0 {
                prop_assert_eq!(bw.select(&a, n), v.iter().rposition(|&b| b).map(|p| p + 1));
            }
        }

        #[test]
        fn packed_set_clears_old_value(vals in proptest::collection::vec(0u64..8, 0..40), k in 0u64..8, l in 0u64..8) {
            prop_assume!(k != l);
            let bw = Broadword::new();
            let mut a = PackedArray::from_values(3, &vals);
            bw.packed_set(&mut a, k, l);
            prop_assert_eq!(bw.packed_popcount(&a, k), 0);
        }

        #[test]
        fn packed_ops_wide(width in 1usize..10, vals in proptest::collection::vec(0u64..1024, 0..60), k in 0u64..1024, l in 0u64..1024) {
            let m = (1u64 << width) - 1;
            let vals: Vec<u64> = vals.iter().map(|v| v & m).collect();
            let (k, l) = (k & m, l & m);
            let bw = Broadword::new();
            let mut a = PackedArray::from_values(width, &vals);
            prop_assert_eq!(bw.packed_popcount(&a, k), naive::packed_popcount(&vals, k));
            for r in 1..=3 {
                prop_assert_eq!(bw.packed_select(&a, k, r), naive::packed_select(&vals, k, r));
                prop_assert_eq!(bw.packed_rselect(&a, k, r), naive::packed_rselect(&vals, k, r));
            }
            bw.packed_set(&mut a, k, l);
            prop_assert_eq!(a.to_vec(), naive::packed_set(&vals, k, l));
        }

        #[test]
        fn pred_sorted_random(mut strings in proptest::collection::btree_set(proptest::collection::vec(any::<bool>(), 0..12), 0..20),
                              x in proptest::collection::vec(any::<bool>(), 0..14)) {
            let list: Vec<BitString> = std::mem::take(&mut strings).into_iter().map(BitString::from_bits).collect();
            let l = TernaryList::from_strings(&list);
            let x = BitString::from_bits(x);
            let bw = Broadword::new();
            prop_assert_eq!(bw.pred(&l, &x), naive::pred(&l, &x));
            prop_assert!(bw.probes() <= bound(l.encoding().len()));
        }

        #[test]
        fn bit_ops_long(v in proptest::collection::vec(any::<bool>(), 0..300), k in 0usize..300) {
            let a = BitString::from_bits(v);
            let bw = Broadword::new();
            prop_assert_eq!(bw.select(&a, k), naive::select(&a, k));
            prop_assert_eq!(bw.select_zero(&a, k), naive::select(&a.complement(), k));
            prop_assert_eq!(bw.rdouble(&bw.double(&a)).unwrap(), a);
        }
    }
}
