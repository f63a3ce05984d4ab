//! Bounded-independence hashing and Feistel permutations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The Mersenne prime `2^61 − 1`.
pub const PRIME: u64 = (1 << 61) - 1;

/// Upper limit on the independence degree.
pub const MAX_DEGREE: usize = 64;

#[inline]
fn reduce(x: u128) -> u64 {
    let lo = (x as u64) & PRIME;
    let hi = (x >> 61) as u64;
    let s = lo + hi;
    // `hi` can exceed PRIME only when x ≥ 2^122, which products of two
    // reduced values never reach.
    if s >= PRIME {
        s - PRIME
    } else {
        s
    }
}

#[inline]
fn mul_mod(a: u64, b: u64) -> u64 {
    reduce(a as u128 * b as u128)
}

/// Splitmix64 step; used to expand one master seed into independent sub-seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The `index`-th sub-seed of `master`.
pub fn sub_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// A random polynomial of degree `k − 1` over `GF(2^61 − 1)`, which is a
/// `k`-wise independent hash family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KWiseHash {
    coefficients: Vec<u64>,
    domain_bits: u32,
    range_bits: u32,
}

impl KWiseHash {
    pub fn new(k: usize, domain_bits: u32, range_bits: u32, seed: u64) -> Self {
        let k = k.clamp(1, MAX_DEGREE);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coefficients = (0..k).map(|_| rng.gen_range(0..PRIME)).collect();
        Self::from_coefficients(coefficients, domain_bits, range_bits)
    }

    /// Coefficients from the leading one down to the constant term.
    pub fn from_coefficients(coefficients: Vec<u64>, domain_bits: u32, range_bits: u32) -> Self {
        assert!(!coefficients.is_empty());
        assert!(domain_bits <= 64 && range_bits <= 61, "range is limited to 61 bits");
        Self {
            coefficients: coefficients.into_iter().map(|c| c % PRIME).collect(),
            domain_bits,
            range_bits,
        }
    }

    /// The function that maps everything to zero.
    pub fn zero(domain_bits: u32, range_bits: u32) -> Self {
        Self::from_coefficients(vec![0], domain_bits, range_bits)
    }

    pub fn k(&self) -> usize {
        self.coefficients.len()
    }

    pub fn domain_bits(&self) -> u32 {
        self.domain_bits
    }

    pub fn range_bits(&self) -> u32 {
        self.range_bits
    }

    /// Horner evaluation; the output is the top `range_bits` of the 61-bit
    /// field element.
    pub fn eval(&self, x: u64) -> u64 {
        debug_assert!(self.domain_bits == 64 || x >> self.domain_bits == 0);
        let x = x % PRIME;
        let mut acc = 0u64;
        for &c in &self.coefficients {
            acc = mul_mod(acc, x) + c;
            if acc >= PRIME {
                acc -= PRIME;
            }
        }
        if self.range_bits == 0 {
            0
        } else {
            acc >> (61 - self.range_bits)
        }
    }
}

/// `x_L ∘ x_R ↦ (x_L ⊕ f(x_R)) ∘ x_R`, an involution on
/// `left_bits + right_bits`-bit values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeistelPerm {
    left_bits: u32,
    right_bits: u32,
    f: KWiseHash,
}

impl FeistelPerm {
    pub fn new(left_bits: u32, right_bits: u32, f: KWiseHash) -> Self {
        assert!(left_bits + right_bits <= 64);
        assert_eq!(f.range_bits(), left_bits);
        Self {
            left_bits,
            right_bits,
            f,
        }
    }

    pub fn random(left_bits: u32, right_bits: u32, k: usize, seed: u64) -> Self {
        Self::new(left_bits, right_bits, KWiseHash::new(k, right_bits, left_bits, seed))
    }

    pub fn identity(left_bits: u32, right_bits: u32) -> Self {
        Self::new(left_bits, right_bits, KWiseHash::zero(right_bits, left_bits))
    }

    pub fn left_bits(&self) -> u32 {
        self.left_bits
    }

    pub fn right_bits(&self) -> u32 {
        self.right_bits
    }

    /// The round function applied to a right part.
    pub fn round(&self, right: u64) -> u64 {
        self.f.eval(right)
    }

    pub fn apply(&self, x: u64) -> u64 {
        let r = self.right_bits;
        let right = x & u64::MAX.checked_shr(64 - r).unwrap_or(0);
        let left = x.checked_shr(r).unwrap_or(0) ^ self.f.eval(right);
        left.checked_shl(r).unwrap_or(0) | right
    }
}
