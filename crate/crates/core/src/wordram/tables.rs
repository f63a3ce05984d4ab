//! Precomputed 8-bit chunk tables.

use std::sync::OnceLock;

pub(crate) const CHUNK: usize = 8;

/// Two-bit symbol codes inside a ternary chunk.
pub(crate) const SYM_ZERO: u8 = 0b00;
pub(crate) const SYM_ONE: u8 = 0b01;
pub(crate) const SYM_END: u8 = 0b10;
pub(crate) const SYM_BOT: u8 = 0b11;

pub(crate) struct Tables {
    pub popcount: [u8; 256],
    /// `select[b][k]`: position (0 = most significant) of the `k+1`-th one of `b`.
    pub select: [[u8; 8]; 256],
    pub leading_zeros: [u8; 256],
    pub double: [u16; 256],
    /// Even-position bits (2nd, 4th, 6th, 8th) of a byte, packed into 4 bits.
    pub rdouble: [u8; 256],
    /// Low nibble: bitmask (first symbol most significant) of the `⊥` symbols
    /// in a ternary chunk; high nibble: their count.
    pub bottoms: [u8; 256],
    /// Indexed by `chunk << 8 | query`. Low nibble: number of strings lying
    /// wholly inside the chunk that precede or equal the query prefix; high
    /// nibble: the chunk's `⊥` mask.
    pub pred: Vec<u8>,
}

static TABLES: OnceLock<Tables> = OnceLock::new();

pub(crate) fn tables() -> &'static Tables {
    TABLES.get_or_init(build)
}

fn symbols(chunk: u8) -> [u8; 4] {
    [
        (chunk >> 6) & 3,
        (chunk >> 4) & 3,
        (chunk >> 2) & 3,
        chunk & 3,
    ]
}

/// Order key with `⊥ < 0 < 1`; end markers behave like `⊥` padding.
fn order_key(sym: u8) -> u8 {
    match sym {
        SYM_ZERO => 1,
        SYM_ONE => 2,
        _ => 0,
    }
}

fn pred_entry(chunk: u8, query: u8) -> u8 {
    let syms = symbols(chunk);
    let q = symbols(query);
    let mut count = 0u8;
    for t in 0..4 {
        if syms[t] != SYM_BOT {
            continue;
        }
        let Some(end) = (t + 1..4).find(|&u| syms[u] == SYM_BOT || syms[u] == SYM_END) else {
            continue;
        };
        let mut body = [0u8; 4];
        for (slot, &s) in body.iter_mut().zip(&syms[t + 1..end]) {
            *slot = order_key(s);
        }
        let qk = q.map(order_key);
        if body <= qk {
            count += 1;
        }
    }
    count
}

fn build() -> Tables {
    let mut t = Tables {
        popcount: [0; 256],
        select: [[0; 8]; 256],
        leading_zeros: [0; 256],
        double: [0; 256],
        rdouble: [0; 256],
        bottoms: [0; 256],
        pred: vec![0; 1 << 16],
    };
    for b in 0..256usize {
        let byte = b as u8;
        t.popcount[b] = byte.count_ones() as u8;
        t.leading_zeros[b] = byte.leading_zeros() as u8;
        let mut k = 0;
        for pos in 0..8 {
            if (byte >> (7 - pos)) & 1 == 1 {
                t.select[b][k] = pos as u8;
                k += 1;
            }
        }
        let mut d = 0u16;
        for pos in 0..8 {
            d = (d << 2) | ((byte >> (7 - pos)) & 1) as u16;
        }
        t.double[b] = d;
        let mut r = 0u8;
        for pos in [1, 3, 5, 7] {
            r = (r << 1) | ((byte >> (7 - pos)) & 1);
        }
        t.rdouble[b] = r;
        let mut m = 0u8;
        for s in symbols(byte) {
            m = (m << 1) | (s == SYM_BOT) as u8;
        }
        t.bottoms[b] = m | (m.count_ones() as u8) << 4;
        for q in 0..256usize {
            t.pred[(b << 8) | q] = pred_entry(byte, q as u8) | m << 4;
        }
    }
    t
}
