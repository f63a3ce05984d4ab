use super::{Extendable, MemoryError, WORD_BITS};

fn ceil_sqrt(x: u64) -> u64 {
    let r = x.isqrt();
    if r * r == x {
        r
    } else {
        r + 1
    }
}

/// An extendable array emulated on fixed-size memory blocks, for a memory
/// model that only hands out and takes back blocks.
///
/// With a budget of `s` bits the directory has `⌈√(s/w)⌉` slots and each
/// block holds `⌈√(s·w)⌉` bits. Blocks are acquired when the array grows
/// into them and zeroed before being released.
#[derive(Debug, Clone)]
pub struct AllocFreeArray {
    width: usize,
    len: usize,
    budget: u64,
    block_bits: usize,
    directory: Vec<Option<Box<[u64]>>>,
    released: usize,
}

impl AllocFreeArray {
    pub fn new(width: usize, budget: u64) -> Result<Self, MemoryError> {
        if !(1..=WORD_BITS).contains(&width) {
            return Err(MemoryError::BadWidth(width));
        }
        assert!(budget > 0, "budget must be positive");
        let w = WORD_BITS as u64;
        let slots = ceil_sqrt(budget.div_ceil(w)) as usize;
        let block_bits = ceil_sqrt(budget * w) as usize;
        Ok(Self {
            width,
            len: 0,
            budget,
            block_bits,
            directory: vec![None; slots],
            released: 0,
        })
    }

    pub fn slots(&self) -> usize {
        self.directory.len()
    }

    pub fn block_bits(&self) -> usize {
        self.block_bits
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    /// Blocks currently held.
    pub fn blocks(&self) -> usize {
        self.directory.iter().filter(|b| b.is_some()).count()
    }

    /// Blocks released so far (each zeroed first).
    pub fn released_blocks(&self) -> usize {
        self.released
    }

    /// Directory plus held blocks, in bits.
    pub fn space_bits(&self) -> u64 {
        (self.directory.len() * WORD_BITS + self.blocks() * self.block_bits) as u64
    }

    /// Space beyond the elements themselves.
    pub fn waste_bits(&self) -> u64 {
        self.space_bits() - (self.len * self.width) as u64
    }

    fn blocks_for(&self, len: usize) -> usize {
        (len * self.width).div_ceil(self.block_bits)
    }

    fn bit(&self, pos: usize) -> bool {
        let b = self.directory[pos / self.block_bits].as_ref().expect("block held");
        let off = pos % self.block_bits;
        (b[off / 64] >> (63 - off % 64)) & 1 == 1
    }

    fn set_bit(&mut self, pos: usize, v: bool) {
        let bb = self.block_bits;
        let b = self.directory[pos / bb].as_mut().expect("block held");
        let off = pos % bb;
        let m = 1u64 << (63 - off % 64);
        if v {
            b[off / 64] |= m;
        } else {
            b[off / 64] &= !m;
        }
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
}

impl Extendable for AllocFreeArray {
    fn width(&self) -> usize {
        self.width
    }

    fn len(&self) -> usize {
        self.len
    }

    fn read(&self, i: usize) -> Result<u64, MemoryError> {
        let start = self.check(i)?;
        Ok((0..self.width).fold(0, |acc, t| (acc << 1) | self.bit(start + t) as u64))
    }

    fn write(&mut self, i: usize, v: u64) -> Result<(), MemoryError> {
        let start = self.check(i)?;
        for t in 0..self.width {
            self.set_bit(start + t, (v >> (self.width - 1 - t)) & 1 == 1);
        }
        Ok(())
    }

    fn grow(&mut self) -> Result<(), MemoryError> {
        let needed = ((self.len + 1) * self.width) as u64;
        if needed > self.budget {
            return Err(MemoryError::BudgetExceeded {
                needed,
                budget: self.budget,
            });
        }
        let have = self.blocks_for(self.len);
        let want = self.blocks_for(self.len + 1);
        for k in have..want {
            self.directory[k] = Some(vec![0u64; self.block_bits.div_ceil(64)].into_boxed_slice());
        }
        self.len += 1;
        // Fresh elements read as zero even if a held block has stale bits.
        let i = self.len;
        self.write(i, 0)
    }

    fn shrink(&mut self) -> Result<(), MemoryError> {
        if self.len == 0 {
            return Err(MemoryError::ShrinkEmpty);
        }
        let i = self.len;
        self.write(i, 0)?;
        let have = self.blocks_for(self.len);
        self.len -= 1;
        let want = self.blocks_for(self.len);
        for k in want..have {
            let mut b = self.directory[k].take().expect("block held");
            b.fill(0);
            debug_assert!(b.iter().all(|&w| w == 0));
            self.released += 1;
        }
        Ok(())
    }
}
