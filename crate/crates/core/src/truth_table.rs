//! A bitmap over all strings of one fixed length, with step-wise setup,
//! teardown and drain.

use thiserror::Error;

use crate::bits::BitString;
use crate::memory::{ArrayCollection, Handle};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("expected a string of {expected} bits, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("table is not ready")]
    NotReady,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Drained {
    Item(BitString),
    Empty,
    Exhausted,
}

#[derive(Debug)]
pub struct TruthTable {
    width: usize,
    mem: ArrayCollection,
    bits: Option<Handle>,
    ready: bool,
    destroying: bool,
    /// Next position the drain looks at (1-based).
    cursor: usize,
    len: usize,
}

impl TruthTable {
    /// A table for strings of exactly `width` bits; call
    /// [`init_step`](Self::init_step) until it reports ready.
    pub fn new(width: usize) -> Self {
        assert!(width < 40, "table of 2^{width} bits");
        Self {
            width,
            mem: ArrayCollection::new(),
            bits: None,
            ready: false,
            destroying: false,
            cursor: 1,
            len: 0,
        }
    }

    pub fn ready(width: usize) -> Self {
        let mut t = Self::new(width);
        while !t.init_step() {}
        t
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn size(&self) -> usize {
        1 << self.width
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_ready(&self) -> bool {
        self.ready && !self.destroying
    }

    pub fn is_destroyed(&self) -> bool {
        self.destroying && self.bits.is_none()
    }

    pub fn space_bits(&self) -> u64 {
        self.mem.space_bits()
    }

    pub fn probes(&self) -> u64 {
        self.mem.probes().total()
    }

    /// Appends one bit of the table. Returns true once all `2^width` exist.
    pub fn init_step(&mut self) -> bool {
        if self.ready || self.destroying {
            return self.is_ready();
        }
        let h = match self.bits {
            Some(h) => h,
            None => {
                let h = self.mem.create(1).expect("valid width");
                self.bits = Some(h);
                h
            }
        };
        self.mem.grow(h).expect("live array");
        self.ready = self.mem.len(h).expect("live array") == self.size();
        self.ready
    }

    /// Drops one bit of the table. Returns true once everything is freed.
    pub fn destroy_step(&mut self) -> bool {
        self.destroying = true;
        let Some(h) = self.bits else {
            return true;
        };
        if self.mem.len(h).expect("live array") == 0 {
            self.mem.destroy(h).expect("empty array");
            self.bits = None;
            self.len = 0;
            return true;
        }
        self.mem.shrink(h).expect("non-empty");
        false
    }

    fn position(&self, x: &BitString) -> Result<usize, TableError> {
        if !self.is_ready() {
            return Err(TableError::NotReady);
        }
        if x.len() != self.width {
            return Err(TableError::LengthMismatch {
                expected: self.width,
                got: x.len(),
            });
        }
        Ok(x.extract(0, self.width) as usize + 1)
    }

    pub fn insert(&mut self, x: &BitString) -> Result<(), TableError> {
        let i = self.position(x)?;
        let h = self.bits.expect("ready");
        if self.mem.read(h, i).expect("in range") == 0 {
            self.mem.write(h, i, 1).expect("in range");
            self.len += 1;
        }
        Ok(())
    }

    pub fn query(&self, x: &BitString) -> Result<bool, TableError> {
        let i = self.position(x)?;
        Ok(self.mem.read(self.bits.expect("ready"), i).expect("in range") == 1)
    }

    /// Clears and returns the next set position, or reports an empty step.
    pub fn decrement(&mut self) -> Drained {
        let Some(h) = self.bits.filter(|_| self.is_ready()) else {
            return Drained::Exhausted;
        };
        if self.cursor > self.size() {
            return Drained::Exhausted;
        }
        let i = self.cursor;
        self.cursor += 1;
        if self.mem.read(h, i).expect("in range") == 1 {
            self.mem.write(h, i, 0).expect("in range");
            self.len -= 1;
            Drained::Item(BitString::from_u64(i as u64 - 1, self.width))
        } else {
            Drained::Empty
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use proptest::prelude::*;

    use super::*;
    use crate::bits::bits;

    #[test]
    fn set_and_test() {
        let mut t = TruthTable::ready(4);
        t.insert(&bits("0101")).unwrap();
        assert!(t.query(&bits("0101")).unwrap());
        assert!(!t.query(&bits("0100")).unwrap());
        assert_eq!(
            t.insert(&bits("010")),
            Err(TableError::LengthMismatch { expected: 4, got: 3 })
        );
    }

    #[test]
    fn lifecycle_costs() {
        let mut t = TruthTable::new(6);
        let mut steps = 1;
        while !t.init_step() {
            steps += 1;
        }
        assert_eq!(steps, 64);
        assert_eq!(t.space_bits(), 64 + crate::memory::ARRAY_OVERHEAD_BITS);
        while !t.destroy_step() {}
        assert_eq!(t.space_bits(), 0);
        assert!(t.is_destroyed());
        assert_eq!(t.query(&bits("000000")), Err(TableError::NotReady));
    }

    #[test]
    fn zero_width_table() {
        let mut t = TruthTable::ready(0);
        t.insert(&BitString::new()).unwrap();
        assert_eq!(t.decrement(), Drained::Item(BitString::new()));
        assert_eq!(t.decrement(), Drained::Exhausted);
    }

    proptest! {
        #[test]
        fn matches_a_set(width in 1usize..8, xs in prop::collection::vec(any::<u64>(), 0..40)) {
            let mut t = TruthTable::ready(width);
            let mut oracle = BTreeSet::new();
            for x in xs {
                let x = x & ((1 << width) - 1);
                t.insert(&BitString::from_u64(x, width)).unwrap();
                oracle.insert(x);
            }
            for x in 0..1u64 << width {
                prop_assert_eq!(t.query(&BitString::from_u64(x, width)).unwrap(), oracle.contains(&x));
            }
            let mut drained = Vec::new();
            let mut empty = 0;
            loop {
                match t.decrement() {
                    Drained::Item(x) => drained.push(x.to_u64()),
                    Drained::Empty => empty += 1,
                    Drained::Exhausted => break,
                }
            }
            prop_assert_eq!(drained, oracle.iter().copied().collect::<Vec<_>>());
            prop_assert!(empty <= 1 << width);
            prop_assert!(t.is_empty());
        }
    }
}
