use thiserror::Error;

/// `⌈log₂ x⌉` for `x ≥ 1`.
pub fn ceil_log2(x: u64) -> u32 {
    assert!(x >= 1);
    64 - (x - 1).leading_zeros()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("capacity {0} is not a power of two")]
    CapacityNotPowerOfTwo(u64),
    #[error("string length {ell} must exceed log2 capacity {lg} by 1 to 62 bits")]
    BadLength { ell: u32, lg: u32 },
    #[error("unknown parameter {0:?}")]
    UnknownParam(String),
    #[error("bad value for parameter {0:?}")]
    BadValue(String),
}

/// Tunable constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Constants {
    /// Fingerprint budget per subtable, in units of `⌈log₂u⌉` bits.
    pub c2: u32,
    /// Subtable capacity, in units of `⌈log₂u⌉` strings.
    pub c3: u32,
    /// Capacity of one `hd ∘ hs` class, in units of the block size.
    pub c4: u32,
    /// Hash independence, in units of `⌈log₂u⌉`.
    pub c1: u32,
    /// Reorganization steps run per insertion.
    pub reorg_steps: u32,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            c2: 16,
            c3: 4,
            c4: 3,
            c1: 2,
            reorg_steps: 10,
        }
    }
}

impl Constants {
    /// Applies a `name=value` override.
    pub fn set(&mut self, name: &str, value: &str) -> Result<(), ParamError> {
        let v: u32 = value.parse().map_err(|_| ParamError::BadValue(name.into()))?;
        if v == 0 {
            return Err(ParamError::BadValue(name.into()));
        }
        match name {
            "c1" => self.c1 = v,
            "c2" => self.c2 = v,
            "c3" => self.c3 = v,
            "c4" => self.c4 = v,
            "reorg_steps" => self.reorg_steps = v,
            _ => return Err(ParamError::UnknownParam(name.into())),
        }
        Ok(())
    }
}

/// Field widths and caps of one fixed-capacity matcher.
///
/// A string is split as `st ∘ hd ∘ hs ∘ rt`: `st` picks the subtable, `hd ∘ hs`
/// picks the fingerprint bucket (and `hd` the class inside a data block), and
/// `rt` is the rest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSet {
    pub u_bits: u32,
    pub capacity: u64,
    /// `log₂ capacity`.
    pub lg: u32,
    /// Maximum string length.
    pub ell: u32,
    pub consts: Constants,
    pub st_bits: u32,
    pub hd_bits: u32,
    pub hs_bits: u32,
    /// Strings per data block.
    pub block_len: usize,
    pub nav_bits: u32,
    pub buf_bits: u32,
    /// Navigators moved per reorganization step.
    pub nav_run: usize,
    /// Extra bits stored next to each rest (dictionary values).
    pub value_bits: u32,
}

impl ParamSet {
    pub fn new(u_bits: u32, capacity: u64, ell: u32, consts: Constants) -> Result<Self, ParamError> {
        if !capacity.is_power_of_two() {
            return Err(ParamError::CapacityNotPowerOfTwo(capacity));
        }
        let lg = capacity.trailing_zeros();
        if ell <= lg || ell - lg > 62 {
            return Err(ParamError::BadLength { ell, lg });
        }
        let l = u_bits as u64;
        let base = ceil_log2(l);
        let hs_full = ceil_log2(base as u64);
        let (st_bits, hd_bits, hs_bits) = if lg >= base {
            (lg - base, base - hs_full, hs_full)
        } else {
            let hs = hs_full.min(lg);
            (0, lg - hs, hs)
        };
        let block_len = 1usize << ceil_log2(l.div_ceil(base as u64));
        let nav_bits = ceil_log2(consts.c3 as u64 * base as u64 + 1);
        let buf_bits = ceil_log2(block_len as u64).max(1);
        Ok(Self {
            u_bits,
            capacity,
            lg,
            ell,
            consts,
            st_bits,
            hd_bits,
            hs_bits,
            block_len,
            nav_bits,
            buf_bits,
            nav_run: 64 / (nav_bits as usize + 1),
            value_bits: 0,
        })
    }

    pub fn with_defaults(u_bits: u32, capacity: u64, ell: u32) -> Result<Self, ParamError> {
        Self::new(u_bits, capacity, ell, Constants::default())
    }

    /// Bits of the fingerprint bucket index, `hd ∘ hs`.
    pub fn bucket_bits(&self) -> u32 {
        self.hd_bits + self.hs_bits
    }

    pub fn subtables(&self) -> usize {
        1 << self.st_bits
    }

    /// Strings a subtable may hold.
    pub fn subtable_cap(&self) -> usize {
        (self.consts.c3 * self.u_bits) as usize
    }

    /// Strings one `hd ∘ hs` class may hold.
    pub fn class_cap(&self) -> usize {
        self.consts.c4 as usize * self.block_len
    }

    pub fn fingerprint_budget(&self) -> usize {
        (self.consts.c2 * self.u_bits) as usize
    }

    /// Largest rest length, `ℓ − log₂m`.
    pub fn rest_len(&self) -> usize {
        (self.ell - self.lg) as usize
    }

    /// Bits per stored rest: the prefix-free codeword plus the value.
    pub fn rest_slot_bits(&self) -> usize {
        self.rest_len() + 1 + self.value_bits as usize
    }

    /// Header bitmap bits reserved per block.
    pub fn header_bits(&self) -> usize {
        (1 << self.hd_bits) + self.block_len
    }

    /// Bits of a full block.
    pub fn block_bits(&self) -> usize {
        self.header_bits() + self.block_len * (self.hs_bits as usize + self.rest_slot_bits())
    }

    /// Most blocks a subtable can own: enough static blocks for its cap plus
    /// one under construction.
    pub fn max_blocks(&self) -> usize {
        self.subtable_cap().div_ceil(self.block_len) + 1
    }

    /// Width of an array handle, and of a main-table slot holding one plus
    /// one: the main table and two arrays per subtable are live at most.
    pub fn handle_bits(&self) -> u32 {
        ceil_log2(2 * self.subtables() as u64 + 2)
    }

    /// Navigator value reserved as the empty marker.
    pub fn nav_sentinel(&self) -> u64 {
        (1 << self.nav_bits) - 1
    }
}
