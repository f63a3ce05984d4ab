//! Per-symbol reference implementations of the broadword operations.
//!
//! These are deliberately simple loops with no tables; tests use them as
//! oracles for [`super::Broadword`].

use super::{TernaryList, WordRamError};
use crate::bits::BitString;

pub fn popcount(a: &BitString) -> usize {
    a.iter().filter(|&b| b).count()
}

/// 1-based position of the `k`-th one.
pub fn select(a: &BitString, k: usize) -> Option<usize> {
    if k == 0 {
        return None;
    }
    let mut seen = 0;
    for (i, b) in a.iter().enumerate() {
        if b {
            seen += 1;
            if seen == k {
                return Some(i + 1);
            }
        }
    }
    None
}

/// Shortest prefix of `x` that is not a prefix of `y`; `x` itself when it is.
pub fn extend(x: &BitString, y: &BitString) -> BitString {
    for l in 0..=x.len() {
        let p = x.prefix(l);
        if !p.is_prefix_of(y) {
            return p;
        }
    }
    x.clone()
}

pub fn double(x: &BitString) -> BitString {
    let mut out = BitString::with_capacity(2 * x.len());
    for b in x.iter() {
        out.push(false);
        out.push(b);
    }
    out
}

pub fn rdouble(x: &BitString) -> Result<BitString, WordRamError> {
    if !x.len().is_multiple_of(2) {
        return Err(WordRamError::OddLength(x.len()));
    }
    Ok(BitString::from_bits((0..x.len() / 2).map(|i| x.get(2 * i + 1))))
}

/// Largest `i` with `aᵢ ≼ x`, 0 if none.
pub fn pred(list: &TernaryList, x: &BitString) -> Result<usize, WordRamError> {
    let strings = list.parse()?;
    Ok(strings
        .iter()
        .enumerate()
        .filter(|(_, s)| *s <= x)
        .map(|(i, _)| i + 1)
        .max()
        .unwrap_or(0))
}

pub fn packed_popcount(a: &[u64], k: u64) -> usize {
    a.iter().filter(|&&v| v == k).count()
}

pub fn packed_select(a: &[u64], k: u64, l: usize) -> Option<usize> {
    if l == 0 {
        return None;
    }
    a.iter()
        .enumerate()
        .filter(|(_, &v)| v == k)
        .nth(l - 1)
        .map(|(i, _)| i + 1)
}

pub fn packed_rselect(a: &[u64], k: u64, l: usize) -> Option<usize> {
    if l == 0 {
        return None;
    }
    a.iter()
        .enumerate()
        .rev()
        .filter(|(_, &v)| v == k)
        .nth(l - 1)
        .map(|(i, _)| i + 1)
}

pub fn packed_set(a: &[u64], k: u64, l: u64) -> Vec<u64> {
    a.iter().map(|&v| if v == k { l } else { v }).collect()
}
