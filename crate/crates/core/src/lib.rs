//! Dynamic succinct prefix matching, filters and dictionaries on a simulated
//! word RAM.

pub mod adaptive_prefixes;
pub mod bits;
pub mod experiments;
pub mod hashing;
pub mod memory;
pub mod pm_fixed;
pub mod truth_table;
pub mod unknown_size;
pub mod wordram;

pub use bits::BitString;
pub use hashing::{FeistelPerm, KWiseHash};
pub use memory::{ArrayCollection, Extendable, Handle, MemoryError, ProbeMeter, SpaceMeter};
pub use wordram::{Broadword, PackedArray, Symbol, TernaryList, WordRamError};
pub use pm_fixed::{Constants, Decrement, Entry, Failure, Mode, ParamSet, PmError, PrefixMatcher};
pub use truth_table::TruthTable;
pub use unknown_size::{gen_core_sequence, DynamicDictionary, DynamicFilter, Lengths, PrefixMatcherUnbounded};
