use super::tables::{SYM_BOT, SYM_END, SYM_ONE, SYM_ZERO};
use super::WordRamError;
use crate::bits::BitString;

/// One symbol of the `{0, 1, ⊥}` alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    Zero,
    One,
    Bot,
}

impl Symbol {
    fn code(self) -> u64 {
        match self {
            Symbol::Zero => SYM_ZERO as u64,
            Symbol::One => SYM_ONE as u64,
            Symbol::Bot => SYM_BOT as u64,
        }
    }
}

/// A list over `{0, 1, ⊥}` encoded with two bits per symbol
/// (`00` = 0, `01` = 1, `11` = ⊥).
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct TernaryList {
    code: BitString,
}

impl TernaryList {
    pub fn new() -> Self {
        Self::default()
    }

    /// `⊥ s₁ ⊥ s₂ ⊥ …`
    pub fn from_strings<'a, I: IntoIterator<Item = &'a BitString>>(strings: I) -> Self {
        let mut l = Self::new();
        for s in strings {
            l.push_string(s);
        }
        l
    }

    pub fn from_encoding(code: BitString) -> Result<Self, WordRamError> {
        if !code.len().is_multiple_of(2) {
            return Err(WordRamError::OddLength(code.len()));
        }
        for i in 0..code.len() / 2 {
            if code.extract(2 * i, 2) as u8 == SYM_END {
                return Err(WordRamError::InvalidSymbol(i));
            }
        }
        Ok(Self { code })
    }

    pub fn encoding(&self) -> &BitString {
        &self.code
    }

    pub fn into_encoding(self) -> BitString {
        self.code
    }

    /// Number of symbols.
    pub fn len(&self) -> usize {
        self.code.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.code.is_empty()
    }

    pub fn symbol(&self, i: usize) -> Symbol {
        match self.code.extract(2 * i, 2) as u8 {
            SYM_ZERO => Symbol::Zero,
            SYM_ONE => Symbol::One,
            _ => Symbol::Bot,
        }
    }

    pub fn push(&mut self, s: Symbol) {
        self.code.push_bits(s.code(), 2);
    }

    /// Appends `⊥ ∘ s`.
    pub fn push_string(&mut self, s: &BitString) {
        self.push(Symbol::Bot);
        self.code.append(&crate::wordram::naive::double(s));
    }

    /// Symbols `start..end` as a new list.
    pub fn slice(&self, start: usize, end: usize) -> TernaryList {
        TernaryList {
            code: self.code.slice(2 * start, 2 * end),
        }
    }

    /// Replaces symbols `start..end` with `with`.
    pub fn splice(&mut self, start: usize, end: usize, with: &TernaryList) {
        self.code.splice(2 * start, 2 * end, &with.code);
    }

    /// The bit string spelled by symbols `start..end`, which must all be bits.
    pub fn bits_between(&self, start: usize, end: usize) -> BitString {
        let mut out = BitString::with_capacity(end - start);
        for i in start..end {
            match self.symbol(i) {
                Symbol::Zero => out.push(false),
                Symbol::One => out.push(true),
                Symbol::Bot => panic!("⊥ inside a body at symbol {i}"),
            }
        }
        out
    }

    /// Splits `⊥ s₁ ⊥ s₂ …` back into its strings.
    pub fn parse(&self) -> Result<Vec<BitString>, WordRamError> {
        let mut out: Vec<BitString> = Vec::new();
        for i in 0..self.len() {
            match self.symbol(i) {
                Symbol::Bot => out.push(BitString::new()),
                s => match out.last_mut() {
                    Some(cur) => cur.push(s == Symbol::One),
                    None => return Err(WordRamError::MalformedList),
                },
            }
        }
        Ok(out)
    }
}

impl std::fmt::Debug for TernaryList {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("[")?;
        for i in 0..self.len() {
            f.write_str(match self.symbol(i) {
                Symbol::Zero => "0",
                Symbol::One => "1",
                Symbol::Bot => "⊥",
            })?;
        }
        f.write_str("]")
    }
}
