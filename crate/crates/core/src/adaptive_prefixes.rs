//! Adaptive fingerprints: for each stored string, its shortest prefix of at
//! least `bucket_bits` bits that prefixes no other stored string.
//!
//! The first `bucket_bits` bits select a bucket. Bucket sizes are kept as a
//! unary run string `0 1^{K₀} 0 1^{K₁} … 0`; the remaining bits ("bodies")
//! are kept bucket by bucket, sorted, as a `⊥`-delimited ternary list.

use thiserror::Error;

use crate::bits::BitString;
use crate::memory::ProbeMeter;
use crate::wordram::{Broadword, TernaryList};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrefixError {
    #[error("string of {0} bits is shorter than the bucket index")]
    TooShort(usize),
    #[error("colliding fingerprint cannot be extended past the new string")]
    Collision,
    #[error("new string is a prefix of a stored fingerprint")]
    PrefixOfStored,
    #[error("representation of {size} bits exceeds the budget of {budget} bits")]
    BudgetExceeded { size: usize, budget: usize },
}

#[derive(Debug)]
pub struct PrefixCollection {
    bucket_bits: usize,
    budget_bits: usize,
    hd: BitString,
    bd: TernaryList,
    count: usize,
    failed: bool,
    bw: Broadword,
    probes: ProbeMeter,
}

/// The bodies of one bucket: a slice of `bd` plus the rank offset of its
/// first fingerprint.
struct Bucket {
    /// Fingerprints in earlier buckets.
    before: usize,
    /// Fingerprints in this bucket.
    len: usize,
    /// Position in `hd` of the zero closing this bucket (0-based).
    close: usize,
    /// Symbol range of the bucket inside `bd`.
    start: usize,
    end: usize,
    list: TernaryList,
}

impl PrefixCollection {
    pub fn new(bucket_bits: usize, budget_bits: usize) -> Self {
        assert!(bucket_bits < 32);
        Self {
            bucket_bits,
            budget_bits,
            hd: BitString::zeros((1 << bucket_bits) + 1),
            bd: TernaryList::new(),
            count: 0,
            failed: false,
            bw: Broadword::new(),
            probes: ProbeMeter::default(),
        }
    }

    /// Rebuilds a collection from its two strings.
    pub fn from_parts(bucket_bits: usize, budget_bits: usize, hd: BitString, bd: TernaryList) -> Self {
        let mut c = Self::new(bucket_bits, budget_bits);
        c.count = hd.len() - ((1 << bucket_bits) + 1);
        c.hd = hd;
        c.bd = bd;
        c
    }

    pub fn bucket_bits(&self) -> usize {
        self.bucket_bits
    }

    pub fn budget_bits(&self) -> usize {
        self.budget_bits
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn hd(&self) -> &BitString {
        &self.hd
    }

    pub fn bd(&self) -> &TernaryList {
        &self.bd
    }

    pub fn failed(&self) -> bool {
        self.failed
    }

    /// `|hd| + 2·|bd|`.
    pub fn size_bits(&self) -> usize {
        self.hd.len() + self.bd.encoding().len()
    }

    /// Lookup-table probes spent so far.
    pub fn table_probes(&self) -> u64 {
        self.bw.probes()
    }

    /// Word probes: each operation reads (and an insert rewrites) a window
    /// of the budgeted size.
    pub fn probes(&self) -> &ProbeMeter {
        &self.probes
    }

    fn charge(&self) {
        self.probes.charge_window(self.budget_bits);
    }

    fn bucket(&self, index: usize) -> Bucket {
        let bw = &self.bw;
        let open = bw.select_zero(&self.hd, index + 1).expect("bucket exists");
        let close = bw.select_zero(&self.hd, index + 2).expect("bucket exists");
        let before = bw.rank(&self.hd, open);
        let through = bw.rank(&self.hd, close);
        let start = bw.bot_select(&self.bd, before + 1).unwrap_or(self.bd.len());
        let end = bw.bot_select(&self.bd, through + 1).unwrap_or(self.bd.len());
        Bucket {
            before,
            len: through - before,
            close: close - 1,
            start,
            end,
            list: self.bd.slice(start, end),
        }
    }

    /// Body `j` (1-based) of a bucket list, with its symbol range.
    fn body(&self, list: &TernaryList, j: usize) -> (usize, usize, BitString) {
        let k = self.bw.bot_select(list, j).expect("body exists");
        let k2 = self.bw.bot_select(list, j + 1).unwrap_or(list.len());
        let code = list.encoding().slice(2 * (k + 1), 2 * k2);
        let body = self.bw.rdouble(&code).expect("even length");
        (k, k2, body)
    }

    fn split(&self, x: &BitString) -> Result<(usize, BitString), PrefixError> {
        if x.len() < self.bucket_bits {
            return Err(PrefixError::TooShort(x.len()));
        }
        Ok((
            x.extract(0, self.bucket_bits) as usize,
            x.suffix_from(self.bucket_bits),
        ))
    }

    /// Rank of the fingerprint that prefixes `x`, if any.
    pub fn lookup(&self, x: &BitString) -> Option<usize> {
        self.charge();
        let (index, rest) = self.split(x).ok()?;
        let b = self.bucket(index);
        let j = self.bw.pred(&b.list, &rest).expect("well-formed bucket");
        if j == 0 {
            return None;
        }
        let (_, _, body) = self.body(&b.list, j);
        body.is_prefix_of(&rest).then_some(b.before + j)
    }

    /// Rank the first fingerprint of bucket `index` has or would have.
    pub fn lowerbound(&self, index: usize) -> usize {
        self.charge();
        let open = self.bw.select_zero(&self.hd, index + 1).expect("bucket exists");
        open - index
    }

    /// Fingerprints stored in bucket `index`.
    pub fn bucket_len(&self, index: usize) -> usize {
        let next = if index + 1 < 1 << self.bucket_bits {
            self.lowerbound(index + 1)
        } else {
            self.count + 1
        };
        next - self.lowerbound(index)
    }

    /// Bucket of the fingerprint with rank `rank`.
    pub fn bucket_of(&self, rank: usize) -> usize {
        self.charge();
        let p = self.bw.select(&self.hd, rank).expect("rank exists");
        p - rank - 1
    }

    /// The fingerprint of rank `rank`, bucket bits included.
    pub fn fingerprint(&self, rank: usize) -> BitString {
        let index = self.bucket_of(rank);
        let b = self.bucket(index);
        let (_, _, body) = self.body(&b.list, rank - b.before);
        let mut out = BitString::from_u64(index as u64, self.bucket_bits);
        out.append(&body);
        out
    }

    /// All fingerprints in rank order.
    pub fn fingerprints(&self) -> Vec<BitString> {
        (1..=self.count).map(|r| self.fingerprint(r)).collect()
    }

    /// Inserts the fingerprint of `x` and returns its rank.
    ///
    /// When a stored fingerprint prefixes `x`, `colliding` must hold the
    /// full string that fingerprint belongs to; the fingerprint is then
    /// extended until it no longer prefixes `x`.
    pub fn insert(&mut self, x: &BitString, colliding: Option<&BitString>) -> Result<usize, PrefixError> {
        self.charge();
        let (index, rest) = self.split(x)?;
        let mut b = self.bucket(index);

        if let Some(y) = colliding {
            let (yi, yrest) = self.split(y)?;
            debug_assert_eq!(yi, index);
            let j = self.bw.pred(&b.list, &rest).expect("well-formed bucket");
            if j == 0 {
                return Err(PrefixError::Collision);
            }
            let (k, k2, body) = self.body(&b.list, j);
            if !body.is_prefix_of(&rest) || !body.is_prefix_of(&yrest) {
                return Err(PrefixError::Collision);
            }
            let extended = self.bw.extend(&yrest, &rest);
            if extended.is_prefix_of(&rest) {
                return Err(PrefixError::Collision);
            }
            let mut replacement = TernaryList::new();
            replacement.push_string(&extended);
            b.list.splice(k, k2, &replacement);
        }

        let j = self.bw.pred(&b.list, &rest).expect("well-formed bucket");
        let n = b.len;
        let mut len = 0;
        for nb in [j, j + 1] {
            if nb == 0 || nb > n {
                continue;
            }
            let (_, _, body) = self.body(&b.list, nb);
            if nb == j && body.is_prefix_of(&rest) {
                return Err(PrefixError::Collision);
            }
            let e = self.bw.extend(&rest, &body);
            if e.is_prefix_of(&body) {
                return Err(PrefixError::PrefixOfStored);
            }
            len = len.max(e.len());
        }
        let mut piece = TernaryList::new();
        piece.push_string(&rest.prefix(len));
        let at = if j == 0 {
            0
        } else {
            self.bw.bot_select(&b.list, j + 1).unwrap_or(b.list.len())
        };
        b.list.splice(at, at, &piece);

        self.bd.splice(b.start, b.end, &b.list);
        self.hd.insert(b.close, &BitString::ones(1));
        self.count += 1;

        let size = self.size_bits();
        if size > self.budget_bits {
            self.failed = true;
            return Err(PrefixError::BudgetExceeded {
                size,
                budget: self.budget_bits,
            });
        }
        Ok(b.before + j + 1)
    }
}

/// Fingerprints straight from the definition, sorted: each string's shortest
/// prefix of at least `bucket_bits` bits that prefixes no other string.
pub fn definition_fingerprints(strings: &[BitString], bucket_bits: usize) -> Vec<BitString> {
    let mut sorted = strings.to_vec();
    sorted.sort();
    let mut out = Vec::with_capacity(sorted.len());
    for (i, x) in sorted.iter().enumerate() {
        let mut len = bucket_bits;
        for (k, z) in sorted.iter().enumerate() {
            if k != i {
                len = len.max(x.lcp(z) + 1);
            }
        }
        out.push(x.prefix(len));
    }
    out
}
