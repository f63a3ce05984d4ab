use super::{stage_of, Lengths, PrefixMatcherUnbounded, StageStats};
use crate::bits::BitString;
use crate::hashing::{sub_seed, KWiseHash};
use crate::pm_fixed::{Constants, Failure, PmError};

/// Bits of the hashed key; every stage's prefix length must fit.
pub const HASH_BITS: u32 = 60;

/// Approximate membership with false-positive rate at most `2^{−eps_log2}`
/// and no false negatives. Stores, for each key, a prefix of its hash whose
/// length grows slowly with the number of keys.
#[derive(Debug)]
pub struct DynamicFilter {
    hash: KWiseHash,
    pm: PrefixMatcherUnbounded,
    eps_log2: u32,
    keys: u64,
}

impl DynamicFilter {
    pub fn new(u_bits: u32, eps_log2: u32, seed: u64) -> Self {
        Self::with_constants(u_bits, eps_log2, seed, Constants::default())
    }

    pub fn with_constants(u_bits: u32, eps_log2: u32, seed: u64, consts: Constants) -> Self {
        assert!((1..=64).contains(&u_bits));
        let k = (consts.c1 * u_bits) as usize;
        Self {
            hash: KWiseHash::new(k, u_bits, HASH_BITS, sub_seed(seed, 0)),
            pm: PrefixMatcherUnbounded::new(u_bits, Lengths::Filter { eps_log2 }, consts),
            eps_log2,
            keys: 0,
        }
    }

    pub fn eps_log2(&self) -> u32 {
        self.eps_log2
    }

    /// Keys inserted, counting repeats and absorbed keys.
    pub fn keys(&self) -> u64 {
        self.keys
    }

    /// Hash prefixes actually stored.
    pub fn stored(&self) -> u64 {
        self.pm.len()
    }

    pub fn failed(&self) -> bool {
        self.pm.failed()
    }

    pub fn failure(&self) -> Option<Failure> {
        self.pm.failure()
    }

    pub fn space_bits(&self) -> u64 {
        self.pm.space_bits()
    }

    pub fn probes(&self) -> u64 {
        self.pm.probes()
    }

    pub fn stats(&self) -> StageStats {
        self.pm.stats()
    }

    pub fn matcher(&self) -> &PrefixMatcherUnbounded {
        &self.pm
    }

    fn hashed(&self, key: u64) -> BitString {
        BitString::from_u64(self.hash.eval(key), HASH_BITS as usize)
    }

    pub fn insert(&mut self, key: u64) -> Result<(), PmError> {
        let h = self.hashed(key);
        self.keys += 1;
        if self.pm.query(&h) {
            return Ok(());
        }
        let ell = self.pm.lengths().ell(stage_of(self.pm.len() + 1), self.pm.u_bits());
        assert!(ell <= HASH_BITS, "stage length {ell} exceeds the hash width");
        self.pm.insert(&h.prefix(ell as usize))
    }

    pub fn contains(&self, key: u64) -> bool {
        self.pm.query(&self.hashed(key))
    }
}
