//! Extendable arrays with bit-exact space metering and word-probe counting.
//!
//! Every structure in the crate keeps its state in an [`ArrayCollection`].
//! Space is the sum of `len · width` over live arrays plus a fixed overhead of
//! [`ARRAY_OVERHEAD_BITS`] per array. A probe is one aligned 64-bit word read
//! or written.

use std::cell::Cell;

use thiserror::Error;

use crate::bits::BitString;

mod allocfree;

pub use allocfree::AllocFreeArray;

/// Machine word size.
pub const WORD_BITS: usize = 64;
/// Per-array overhead: a length and a width register.
pub const ARRAY_OVERHEAD_BITS: u64 = 2 * WORD_BITS as u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MemoryError {
    #[error("no live array with handle {0:?}")]
    UnknownHandle(Handle),
    #[error("index {index} outside 1..={len}")]
    OutOfRange { index: usize, len: usize },
    #[error("cannot destroy an array of length {0}")]
    NotEmpty(usize),
    #[error("cannot shrink an empty array")]
    ShrinkEmpty,
    #[error("element width {0} outside 1..=64")]
    BadWidth(usize),
    #[error("growing to {needed} bits exceeds the budget of {budget} bits")]
    BudgetExceeded { needed: u64, budget: u64 },
}

/// Opaque identifier of an array inside a collection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Handle(u32);

impl Handle {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(i: usize) -> Self {
        Handle(i as u32)
    }
}

/// Current and peak space in bits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SpaceMeter {
    current: u64,
    peak: u64,
}

impl SpaceMeter {
    pub fn current(&self) -> u64 {
        self.current
    }

    pub fn peak(&self) -> u64 {
        self.peak
    }

    pub fn reset_peak(&mut self) {
        self.peak = self.current;
    }

    fn add(&mut self, bits: u64) {
        self.current += bits;
        self.peak = self.peak.max(self.current);
    }

    fn sub(&mut self, bits: u64) {
        self.current -= bits;
    }
}

/// Running count of word probes. Windows are marks into the running total,
/// so they nest and add up without extra bookkeeping.
#[derive(Debug, Default)]
pub struct ProbeMeter {
    total: Cell<u64>,
}

/// Start of a probe window.
#[derive(Debug, Clone, Copy)]
pub struct ProbeMark(u64);

impl ProbeMeter {
    pub fn total(&self) -> u64 {
        self.total.get()
    }

    pub fn mark(&self) -> ProbeMark {
        ProbeMark(self.total.get())
    }

    pub fn since(&self, mark: ProbeMark) -> u64 {
        self.total.get() - mark.0
    }

    pub fn charge(&self, probes: u64) {
        self.total.set(self.total.get() + probes);
    }

    /// Charges the words overlapped by bits `start..start + n`.
    pub fn charge_bits(&self, start: usize, n: usize) {
        self.charge(words_spanned(start, n));
    }

    /// Charges a window of `bits` bits at an arbitrary alignment.
    pub fn charge_window(&self, bits: usize) {
        self.charge(bits.div_ceil(WORD_BITS) as u64 + 1);
    }
}

/// Aligned words overlapped by bits `start..start + n`; at least one.
pub fn words_spanned(start: usize, n: usize) -> u64 {
    if n == 0 {
        return 1;
    }
    ((start + n - 1) / WORD_BITS - start / WORD_BITS + 1) as u64
}

/// The array operations shared by the metered arrays and the allocate-free
/// emulation. Indices are 1-based.
pub trait Extendable {
    fn width(&self) -> usize;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn read(&self, i: usize) -> Result<u64, MemoryError>;
    fn write(&mut self, i: usize, v: u64) -> Result<(), MemoryError>;
    fn grow(&mut self) -> Result<(), MemoryError>;
    fn shrink(&mut self) -> Result<(), MemoryError>;
}

/// A single extendable array, stored contiguously. New elements read as zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtArray {
    width: usize,
    len: usize,
    data: BitString,
}

impl ExtArray {
    pub fn new(width: usize) -> Result<Self, MemoryError> {
        if !(1..=WORD_BITS).contains(&width) {
            return Err(MemoryError::BadWidth(width));
        }
        Ok(Self {
            width,
            len: 0,
            data: BitString::new(),
        })
    }

    fn check(&self, i: usize) -> Result<usize, MemoryError> {
        if i == 0 || i > self.len {
            return Err(MemoryError::OutOfRange {
                index: i,
                len: self.len,
            });
        }
        Ok((i - 1) * self.width)
    }

    pub fn data(&self) -> &BitString {
        &self.data
    }

    pub fn bits(&self) -> u64 {
        self.data.len() as u64
    }
}

impl Extendable for ExtArray {
    fn width(&self) -> usize {
        self.width
    }

    fn len(&self) -> usize {
        self.len
    }

    fn read(&self, i: usize) -> Result<u64, MemoryError> {
        let start = self.check(i)?;
        Ok(self.data.extract(start, self.width))
    }

    fn write(&mut self, i: usize, v: u64) -> Result<(), MemoryError> {
        let start = self.check(i)?;
        self.data.write(start, self.width, v);
        Ok(())
    }

    fn grow(&mut self) -> Result<(), MemoryError> {
        self.data.push_bits(0, self.width);
        self.len += 1;
        Ok(())
    }

    fn shrink(&mut self) -> Result<(), MemoryError> {
        if self.len == 0 {
            return Err(MemoryError::ShrinkEmpty);
        }
        self.len -= 1;
        self.data.truncate(self.len * self.width);
        Ok(())
    }
}

/// All arrays of one structure, with their space and probe meters.
#[derive(Debug, Default)]
pub struct ArrayCollection {
    slots: Vec<Option<ExtArray>>,
    free: Vec<u32>,
    live: usize,
    space: SpaceMeter,
    probes: ProbeMeter,
}

impl ArrayCollection {
    pub fn new() -> Self {
        Self::default()
    }

    fn get(&self, h: Handle) -> Result<&ExtArray, MemoryError> {
        self.slots
            .get(h.0 as usize)
            .and_then(Option::as_ref)
            .ok_or(MemoryError::UnknownHandle(h))
    }

    fn get_mut(&mut self, h: Handle) -> Result<&mut ExtArray, MemoryError> {
        self.slots
            .get_mut(h.0 as usize)
            .and_then(Option::as_mut)
            .ok_or(MemoryError::UnknownHandle(h))
    }

    pub fn create(&mut self, width: usize) -> Result<Handle, MemoryError> {
        let a = ExtArray::new(width)?;
        let h = match self.free.pop() {
            Some(i) => {
                self.slots[i as usize] = Some(a);
                Handle(i)
            }
            None => {
                self.slots.push(Some(a));
                Handle(self.slots.len() as u32 - 1)
            }
        };
        self.live += 1;
        self.space.add(ARRAY_OVERHEAD_BITS);
        self.probes.charge(1);
        Ok(h)
    }

    pub fn destroy(&mut self, h: Handle) -> Result<(), MemoryError> {
        let len = self.get(h)?.len;
        if len != 0 {
            return Err(MemoryError::NotEmpty(len));
        }
        self.slots[h.0 as usize] = None;
        self.free.push(h.0);
        self.live -= 1;
        self.space.sub(ARRAY_OVERHEAD_BITS);
        self.probes.charge(1);
        Ok(())
    }

    pub fn len(&self, h: Handle) -> Result<usize, MemoryError> {
        Ok(self.get(h)?.len)
    }

    pub fn width(&self, h: Handle) -> Result<usize, MemoryError> {
        Ok(self.get(h)?.width)
    }

    /// Number of live arrays.
    pub fn live_arrays(&self) -> usize {
        self.live
    }

    pub fn read(&self, h: Handle, i: usize) -> Result<u64, MemoryError> {
        let a = self.get(h)?;
        let v = a.read(i)?;
        self.probes.charge_bits((i - 1) * a.width, a.width);
        Ok(v)
    }

    pub fn write(&mut self, h: Handle, i: usize, v: u64) -> Result<(), MemoryError> {
        let a = self.get_mut(h)?;
        a.write(i, v)?;
        let w = a.width;
        self.probes.charge_bits((i - 1) * w, w);
        Ok(())
    }

    pub fn grow(&mut self, h: Handle) -> Result<(), MemoryError> {
        self.grow_by(h, 1)
    }

    pub fn shrink(&mut self, h: Handle) -> Result<(), MemoryError> {
        self.shrink_by(h, 1)
    }

    /// Appends `n` zero elements. Charges one probe per word of new storage.
    pub fn grow_by(&mut self, h: Handle, n: usize) -> Result<(), MemoryError> {
        let a = self.get_mut(h)?;
        let start = a.len * a.width;
        for _ in 0..n {
            a.grow()?;
        }
        let bits = n * a.width;
        self.space.add(bits as u64);
        self.probes.charge_bits(start, bits);
        Ok(())
    }

    /// Removes the last `n` elements.
    pub fn shrink_by(&mut self, h: Handle, n: usize) -> Result<(), MemoryError> {
        let a = self.get_mut(h)?;
        if n > a.len {
            return Err(MemoryError::ShrinkEmpty);
        }
        let new_len = a.len - n;
        a.len = new_len;
        a.data.truncate(new_len * a.width);
        let bits = n * a.width;
        self.space.sub(bits as u64);
        self.probes.charge(1);
        Ok(())
    }

    /// Grows or shrinks to `len` elements without charging probes; callers
    /// charge the enclosing window themselves.
    pub fn set_len(&mut self, h: Handle, len: usize) -> Result<(), MemoryError> {
        let a = self.get_mut(h)?;
        let old = a.len;
        if len >= old {
            for _ in old..len {
                a.grow()?;
            }
            let bits = ((len - old) * a.width) as u64;
            self.space.add(bits);
        } else {
            a.len = len;
            a.data.truncate(len * a.width);
            let bits = ((old - len) * a.width) as u64;
            self.space.sub(bits);
        }
        Ok(())
    }

    /// Total bits stored in array `h`.
    pub fn bit_len(&self, h: Handle) -> Result<usize, MemoryError> {
        Ok(self.get(h)?.data.len())
    }

    /// Reads `n <= 64` bits at bit offset `start` of the array's storage.
    pub fn read_bits(&self, h: Handle, start: usize, n: usize) -> Result<u64, MemoryError> {
        let a = self.get(h)?;
        check_bits(a, start, n)?;
        self.probes.charge_bits(start, n);
        Ok(a.data.extract(start, n))
    }

    /// Writes `n <= 64` bits at bit offset `start` of the array's storage.
    pub fn write_bits(&mut self, h: Handle, start: usize, n: usize, v: u64) -> Result<(), MemoryError> {
        let a = self.get_mut(h)?;
        check_bits(a, start, n)?;
        a.data.write(start, n, v);
        self.probes.charge_bits(start, n);
        Ok(())
    }

    /// Copies bits `start..start + n` without charging; callers charge the
    /// enclosing window themselves.
    pub fn peek_bits(&self, h: Handle, start: usize, n: usize) -> Result<BitString, MemoryError> {
        let a = self.get(h)?;
        check_bits(a, start, n)?;
        Ok(a.data.slice(start, start + n))
    }

    /// Overwrites bits starting at `start` without charging.
    pub fn poke_bits(&mut self, h: Handle, start: usize, bits: &BitString) -> Result<(), MemoryError> {
        let a = self.get_mut(h)?;
        check_bits(a, start, bits.len())?;
        let mut i = 0;
        while i < bits.len() {
            let n = (bits.len() - i).min(64);
            a.data.write(start + i, n, bits.extract(i, n));
            i += n;
        }
        Ok(())
    }

    pub fn space(&self) -> &SpaceMeter {
        &self.space
    }

    pub fn space_bits(&self) -> u64 {
        self.space.current
    }

    pub fn peak_bits(&self) -> u64 {
        self.space.peak
    }

    pub fn reset_peak(&mut self) {
        self.space.reset_peak();
    }

    pub fn probes(&self) -> &ProbeMeter {
        &self.probes
    }

    /// Space recomputed from the registry.
    pub fn recount_bits(&self) -> u64 {
        self.slots
            .iter()
            .flatten()
            .map(|a| a.bits() + ARRAY_OVERHEAD_BITS)
            .sum()
    }
}

fn check_bits(a: &ExtArray, start: usize, n: usize) -> Result<(), MemoryError> {
    if start + n > a.data.len() {
        return Err(MemoryError::OutOfRange {
            index: start + n,
            len: a.data.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_lifecycle() {
        let mut c = ArrayCollection::new();
        assert_eq!(c.space_bits(), 0);
        let h = c.create(3).unwrap();
        c.grow(h).unwrap();
        c.write(h, 1, 5).unwrap();
        assert_eq!(c.read(h, 1), Ok(5));
        assert_eq!(c.destroy(h), Err(MemoryError::NotEmpty(1)));
        c.shrink(h).unwrap();
        assert_eq!(c.read(h, 1), Err(MemoryError::OutOfRange { index: 1, len: 0 }));
        c.destroy(h).unwrap();
        assert_eq!(c.space_bits(), 0);
        assert_eq!(c.read(h, 1), Err(MemoryError::UnknownHandle(h)));
        let h = c.create(3).unwrap();
        c.destroy(h).unwrap();
    }

    #[test]
    fn space_is_elements_plus_overhead() {
        let mut c = ArrayCollection::new();
        let h = c.create(7).unwrap();
        assert_eq!(c.space_bits(), ARRAY_OVERHEAD_BITS);
        c.grow_by(h, 10).unwrap();
        assert_eq!(c.space_bits(), 70 + ARRAY_OVERHEAD_BITS);
        for k in 1..=10 {
            c.shrink(h).unwrap();
            assert_eq!(c.space_bits(), 70 - 7 * k + ARRAY_OVERHEAD_BITS);
        }
        assert_eq!(c.shrink(h), Err(MemoryError::ShrinkEmpty));
        assert_eq!(c.peak_bits(), 70 + ARRAY_OVERHEAD_BITS);
    }

    #[test]
    fn grow_reads_zero() {
        let mut c = ArrayCollection::new();
        let h = c.create(64).unwrap();
        c.grow(h).unwrap();
        c.write(h, 1, u64::MAX).unwrap();
        c.shrink(h).unwrap();
        c.grow(h).unwrap();
        assert_eq!(c.read(h, 1), Ok(0));
    }

    #[test]
    fn probe_windows_nest() {
        let mut c = ArrayCollection::new();
        let h = c.create(64).unwrap();
        c.grow_by(h, 4).unwrap();
        let outer = c.probes().mark();
        c.read(h, 1).unwrap();
        let inner = c.probes().mark();
        c.read(h, 2).unwrap();
        c.write(h, 3, 1).unwrap();
        assert_eq!(c.probes().since(inner), 2);
        assert_eq!(c.probes().since(outer), 3);
        // A 10-bit read straddling a word boundary touches two words.
        let m = c.probes().mark();
        c.read_bits(h, 60, 10).unwrap();
        assert_eq!(c.probes().since(m), 2);
    }

    #[derive(Debug, Clone)]
    enum Op {
        Create(usize),
        Destroy(usize),
        Grow(usize),
        Shrink(usize),
        Write(usize, usize, u64),
        Read(usize, usize),
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            (1usize..=64).prop_map(Op::Create),
            any::<usize>().prop_map(Op::Destroy),
            any::<usize>().prop_map(Op::Grow),
            any::<usize>().prop_map(Op::Shrink),
            (any::<usize>(), any::<usize>(), any::<u64>()).prop_map(|(a, i, v)| Op::Write(a, i, v)),
            (any::<usize>(), any::<usize>()).prop_map(|(a, i)| Op::Read(a, i)),
        ]
    }

    proptest! {
        #[test]
        fn matches_list_oracle(ops in proptest::collection::vec(op(), 1..200)) {
            let mut c = ArrayCollection::new();
            let mut model: Vec<(Handle, usize, Vec<u64>)> = Vec::new();
            for op in ops {
                match op {
                    Op::Create(w) => {
                        let h = c.create(w).unwrap();
                        model.push((h, w, Vec::new()));
                    }
                    Op::Destroy(a) if !model.is_empty() => {
                        let a = a % model.len();
                        let (h, _, ref v) = model[a];
                        let r = c.destroy(h);
                        if v.is_empty() {
                            prop_assert!(r.is_ok());
                            model.remove(a);
                        } else {
                            prop_assert_eq!(r, Err(MemoryError::NotEmpty(v.len())));
                        }
                    }
                    Op::Grow(a) if !model.is_empty() => {
                        let a = a % model.len();
                        c.grow(model[a].0).unwrap();
                        model[a].2.push(0);
                    }
                    Op::Shrink(a) if !model.is_empty() => {
                        let a = a % model.len();
                        let r = c.shrink(model[a].0);
                        prop_assert_eq!(r.is_ok(), model[a].2.pop().is_some());
                    }
                    Op::Write(a, i, v) if !model.is_empty() => {
                        let a = a % model.len();
                        let (h, w, ref mut vals) = model[a];
                        let v = if w == 64 { v } else { v & ((1 << w) - 1) };
                        let i = i % (vals.len() + 1) + 1;
                        let r = c.write(h, i, v);
                        if i <= vals.len() {
                            prop_assert!(r.is_ok());
                            vals[i - 1] = v;
                        } else {
                            prop_assert!(r.is_err());
                        }
                    }
                    Op::Read(a, i) if !model.is_empty() => {
                        let a = a % model.len();
                        let (h, _, ref vals) = model[a];
                        let i = i % (vals.len() + 1) + 1;
                        prop_assert_eq!(c.read(h, i).ok(), vals.get(i - 1).copied());
                    }
                    _ => {}
                }
                prop_assert_eq!(c.space_bits(), c.recount_bits());
                let expect: u64 = model.iter().map(|(_, w, v)| (w * v.len()) as u64 + ARRAY_OVERHEAD_BITS).sum();
                prop_assert_eq!(c.space_bits(), expect);
            }
        }
    }
}
