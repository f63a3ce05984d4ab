//! Variable-length bit strings stored most-significant-bit first.
//!
//! Bit `0` is the leftmost symbol of the string. Word `k` of the backing
//! storage holds bits `64k .. 64k + 63`, with bit `64k` in the word's most
//! significant position, so comparing two equal-length strings as left-aligned
//! integers agrees with lexicographic order. Bits past `len` are always zero.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

/// A finite sequence of bits with explicit length.
///
/// Ordering pads the shorter string with a symbol smaller than both `0` and
/// `1`, so a proper prefix sorts before all of its extensions.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

#[inline]
fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(words_for(bits)),
            len: 0,
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut s = Self {
            words: vec![u64::MAX; words_for(len)],
            len,
        };
        s.clear_tail();
        s
    }

    /// The `len` low bits of `value`, most significant first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64, "from_u64 takes at most 64 bits");
        let mut s = Self::with_capacity(len);
        s.push_bits(value, len);
        s
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut s = Self::new();
        for b in bits {
            s.push(b);
        }
        s
    }

    /// Builds a string from raw words; bits past `len` are cleared.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        words.resize(words_for(len), 0);
        let mut s = Self { words, len };
        s.clear_tail();
        s
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Backing words; the last one is zero-padded.
    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    fn clear_tail(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(w) = self.words.last_mut() {
                *w &= !(u64::MAX >> r);
            }
        }
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len, "bit {i} out of range {}", self.len);
        (self.words[i / 64] >> (63 - i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        debug_assert!(i < self.len);
        let m = 1u64 << (63 - i % 64);
        if bit {
            self.words[i / 64] |= m;
        } else {
            self.words[i / 64] &= !m;
        }
    }

    pub fn push(&mut self, bit: bool) {
        self.push_bits(bit as u64, 1);
    }

    /// Appends the `n` low bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, n: usize) {
        debug_assert!(n <= 64);
        if n == 0 {
            return;
        }
        let value = value & low_mask(n);
        let off = self.len % 64;
        if off == 0 {
            self.words.push(value << (64 - n));
        } else {
            let free = 64 - off;
            let last = self.words.last_mut().unwrap();
            if n <= free {
                *last |= value << (free - n);
            } else {
                *last |= value >> (n - free);
                self.words.push(value << (64 - (n - free)));
            }
        }
        self.len += n;
    }

    /// Reads `n <= 64` bits starting at `start`, right-aligned in the result.
    #[inline]
    pub fn extract(&self, start: usize, n: usize) -> u64 {
        debug_assert!(n <= 64 && start + n <= self.len);
        if n == 0 {
            return 0;
        }
        let w = start / 64;
        let off = start % 64;
        let hi = self.words[w] << off;
        let v = if off != 0 && off + n > 64 {
            hi | (self.words[w + 1] >> (64 - off))
        } else {
            hi
        };
        v >> (64 - n)
    }

    /// Overwrites `n <= 64` bits at `start` with the low bits of `value`.
    pub fn write(&mut self, start: usize, n: usize, value: u64) {
        debug_assert!(n <= 64 && start + n <= self.len);
        if n == 0 {
            return;
        }
        let value = value & low_mask(n);
        let w = start / 64;
        let off = start % 64;
        if off + n <= 64 {
            let shift = 64 - off - n;
            let mask = low_mask(n) << shift;
            self.words[w] = (self.words[w] & !mask) | (value << shift);
        } else {
            let first = 64 - off;
            let rest = n - first;
            let mask = low_mask(first);
            self.words[w] = (self.words[w] & !mask) | (value >> rest);
            let shift = 64 - rest;
            let mask = low_mask(rest) << shift;
            self.words[w + 1] = (self.words[w + 1] & !mask) | ((value & low_mask(rest)) << shift);
        }
    }

    /// Appends bits `start..end` of `other`.
    pub fn append_range(&mut self, other: &BitString, start: usize, end: usize) {
        debug_assert!(start <= end && end <= other.len);
        let mut i = start;
        while i < end {
            let n = (end - i).min(64);
            self.push_bits(other.extract(i, n), n);
            i += n;
        }
    }

    pub fn append(&mut self, other: &BitString) {
        self.append_range(other, 0, other.len);
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut s = BitString::with_capacity(self.len + other.len);
        s.append(self);
        s.append(other);
        s
    }

    pub fn slice(&self, start: usize, end: usize) -> BitString {
        let mut s = BitString::with_capacity(end - start);
        s.append_range(self, start, end);
        s
    }

    pub fn prefix(&self, n: usize) -> BitString {
        self.slice(0, n.min(self.len))
    }

    pub fn suffix_from(&self, start: usize) -> BitString {
        self.slice(start, self.len)
    }

    pub fn truncate(&mut self, n: usize) {
        if n < self.len {
            self.len = n;
            self.words.truncate(words_for(n));
            self.clear_tail();
        }
    }

    /// Replaces bits `start..end` with `with`.
    pub fn splice(&mut self, start: usize, end: usize, with: &BitString) {
        debug_assert!(start <= end && end <= self.len);
        let mut out = BitString::with_capacity(self.len - (end - start) + with.len);
        out.append_range(self, 0, start);
        out.append(with);
        out.append_range(self, end, self.len);
        *self = out;
    }

    pub fn insert(&mut self, pos: usize, with: &BitString) {
        self.splice(pos, pos, with);
    }

    pub fn remove(&mut self, start: usize, end: usize) {
        self.splice(start, end, &BitString::new());
    }

    /// Bitwise complement over the string's length.
    pub fn complement(&self) -> BitString {
        let mut s = BitString {
            words: self.words.iter().map(|w| !w).collect(),
            len: self.len,
        };
        s.clear_tail();
        s
    }

    /// Length of the longest common prefix.
    pub fn lcp(&self, other: &BitString) -> usize {
        let n = self.len.min(other.len);
        let mut i = 0;
        for (a, b) in self.words.iter().zip(other.words.iter()) {
            let x = a ^ b;
            if x != 0 {
                return (i + x.leading_zeros() as usize).min(n);
            }
            i += 64;
            if i >= n {
                break;
            }
        }
        n
    }

    /// True when `self` is a prefix of `other` (including equality).
    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        self.len <= other.len && other.lcp(self) == self.len
    }

    /// The value of a string of at most 64 bits.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= 64);
        self.extract(0, self.len)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        let l = self.lcp(other);
        if l == self.len || l == other.len {
            self.len.cmp(&other.len)
        } else if self.get(l) {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseBitStringError(pub char);

impl fmt::Display for ParseBitStringError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid bit character {:?}", self.0)
    }
}

impl std::error::Error for ParseBitStringError {}

impl FromStr for BitString {
    type Err = ParseBitStringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = BitString::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                other => return Err(ParseBitStringError(other)),
            }
        }
        Ok(out)
    }
}

/// Parses a literal bit string; panics on invalid input. Test helper.
pub fn bits(s: &str) -> BitString {
    s.parse().expect("valid bit literal")
}
