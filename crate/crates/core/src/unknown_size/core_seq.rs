use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::filter::HASH_BITS;
use super::{filter_length, stage_of};
use crate::bits::BitString;
use crate::hashing::{sub_seed, KWiseHash};

/// Distinct strings of `strings` that no other of them prefixes, in order of
/// first appearance.
pub fn core_set(strings: &[BitString]) -> Vec<BitString> {
    let all: HashSet<&BitString> = strings.iter().collect();
    let mut seen = HashSet::new();
    strings
        .iter()
        .filter(|x| (0..x.len()).all(|k| !all.contains(&x.prefix(k))))
        .filter(|x| seen.insert(*x))
        .cloned()
        .collect()
}

/// A shuffled core set of `n` hashed keys: the `j`-th key's hash is cut to
/// the filter length of stage `⌈log₂ j⌉`.
pub fn gen_core_sequence(u_bits: u32, eps_log2: u32, n: usize, seed: u64) -> Vec<BitString> {
    let h = KWiseHash::new(2 * u_bits as usize, 64, HASH_BITS, sub_seed(seed, 1));
    let stream: Vec<BitString> = (1..=n as u64)
        .map(|j| {
            let ell = filter_length(stage_of(j), eps_log2, u_bits) as usize;
            BitString::from_u64(h.eval(j), HASH_BITS as usize).prefix(ell.min(HASH_BITS as usize))
        })
        .collect();
    let mut core = core_set(&stream);
    core.shuffle(&mut ChaCha8Rng::seed_from_u64(sub_seed(seed, 2)));
    core
}
