use crate::bits::BitString;

/// An array of `width`-bit elements laid out as `0 ∘ a₁ ∘ 0 ∘ a₂ ∘ …`,
/// one guard bit in front of every element.
///
/// Element indices passed to the accessors are 0-based; the broadword
/// queries in [`super::Broadword`] report 1-based positions.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PackedArray {
    width: usize,
    len: usize,
    payload: BitString,
}

impl PackedArray {
    pub fn new(width: usize) -> Self {
        assert!((1..=62).contains(&width), "element width {width} out of range");
        Self {
            width,
            len: 0,
            payload: BitString::new(),
        }
    }

    pub fn from_values(width: usize, values: &[u64]) -> Self {
        let mut a = Self::new(width);
        for &v in values {
            a.push(v);
        }
        a
    }

    /// Rebuilds an array from its guarded payload.
    pub fn from_payload(width: usize, payload: BitString) -> Self {
        assert_eq!(payload.len() % (width + 1), 0, "payload is not a whole number of fields");
        Self {
            width,
            len: payload.len() / (width + 1),
            payload,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn field_bits(&self) -> usize {
        self.width + 1
    }

    pub fn payload(&self) -> &BitString {
        &self.payload
    }

    pub(crate) fn payload_mut(&mut self) -> &mut BitString {
        &mut self.payload
    }

    /// Largest storable value.
    pub fn max_value(&self) -> u64 {
        (1u64 << self.width) - 1
    }

    #[inline]
    pub fn get(&self, i: usize) -> u64 {
        debug_assert!(i < self.len);
        self.payload.extract(i * (self.width + 1) + 1, self.width)
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: u64) {
        debug_assert!(i < self.len && v <= self.max_value());
        self.payload.write(i * (self.width + 1) + 1, self.width, v);
    }

    pub fn push(&mut self, v: u64) {
        debug_assert!(v <= self.max_value());
        self.payload.push_bits(v, self.width + 1);
        self.len += 1;
    }

    pub fn insert(&mut self, i: usize, v: u64) {
        debug_assert!(i <= self.len);
        let f = BitString::from_u64(v & self.max_value(), self.width + 1);
        self.payload.insert(i * (self.width + 1), &f);
        self.len += 1;
    }

    pub fn remove(&mut self, i: usize) -> u64 {
        let v = self.get(i);
        let f = self.width + 1;
        self.payload.remove(i * f, (i + 1) * f);
        self.len -= 1;
        v
    }

    pub fn truncate(&mut self, n: usize) {
        if n < self.len {
            self.payload.truncate(n * (self.width + 1));
            self.len = n;
        }
    }

    pub fn clear(&mut self) {
        self.truncate(0);
    }

    /// Elements `start..end` as a new array.
    pub fn slice(&self, start: usize, end: usize) -> PackedArray {
        let f = self.width + 1;
        PackedArray {
            width: self.width,
            len: end - start,
            payload: self.payload.slice(start * f, end * f),
        }
    }

    /// Replaces elements `start..end` with those of `with`.
    pub fn splice(&mut self, start: usize, end: usize, with: &PackedArray) {
        assert_eq!(with.width, self.width);
        let f = self.width + 1;
        self.payload.splice(start * f, end * f, &with.payload);
        self.len = self.len - (end - start) + with.len;
    }

    pub fn to_vec(&self) -> Vec<u64> {
        (0..self.len).map(|i| self.get(i)).collect()
    }
}

impl std::fmt::Debug for PackedArray {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.to_vec()).finish()
    }
}

/// `pattern` (the low `field` bits) repeated `count` times.
pub(crate) fn replicate(pattern: u64, field: usize, count: usize) -> BitString {
    let mut s = BitString::with_capacity(field * count);
    for _ in 0..count {
        s.push_bits(pattern, field);
    }
    s
}

pub(crate) fn xor(a: &BitString, b: &BitString) -> BitString {
    debug_assert_eq!(a.len(), b.len());
    let words = a.words().iter().zip(b.words()).map(|(x, y)| x ^ y).collect();
    BitString::from_words(words, a.len())
}

pub(crate) fn and(a: &BitString, b: &BitString) -> BitString {
    debug_assert_eq!(a.len(), b.len());
    let words = a.words().iter().zip(b.words()).map(|(x, y)| x & y).collect();
    BitString::from_words(words, a.len())
}

/// Sum of two equal-length strings read as big-endian integers, modulo `2^len`.
pub(crate) fn add(a: &BitString, b: &BitString) -> BitString {
    debug_assert_eq!(a.len(), b.len());
    // Both operands carry the same zero padding below the least significant
    // bit, so adding the padded words adds the values.
    let n = a.words().len();
    let mut out = vec![0u64; n];
    let mut carry = 0u64;
    for i in (0..n).rev() {
        let (s1, c1) = a.words()[i].overflowing_add(b.words()[i]);
        let (s2, c2) = s1.overflowing_add(carry);
        out[i] = s2;
        carry = (c1 | c2) as u64;
    }
    BitString::from_words(out, a.len())
}

/// Moves every bit `shift` places towards the least significant end.
pub(crate) fn shift_right(a: &BitString, shift: usize) -> BitString {
    let mut s = BitString::zeros(shift.min(a.len()));
    if shift < a.len() {
        s.append_range(a, 0, a.len() - shift);
    }
    s
}

/// Product with a small factor, modulo `2^len`.
pub(crate) fn mul_small(a: &BitString, factor: u64) -> BitString {
    let n = a.words().len();
    let mut out = vec![0u64; n];
    let mut carry = 0u128;
    // Padding below the least significant bit is zero, so the padded product
    // is the product shifted by the padding.
    for i in (0..n).rev() {
        let p = a.words()[i] as u128 * factor as u128 + carry;
        out[i] = p as u64;
        carry = p >> 64;
    }
    BitString::from_words(out, a.len())
}
