//! GOST R 34.11-94 hash function.
//!
//! A 256-bit hash built around the GOST 28147-89 block cipher: each
//! 256-bit message block is folded into the state by encrypting the four
//! state quarters under keys derived from state and message, followed by
//! an LFSR-style mixing step. The finalization absorbs the message bit
//! length and a running 256-bit checksum of all blocks.
//!
//! Two substitution-box parameter sets are supported: the test parameters
//! published with the original standard (RFC 5831) and the CryptoPro set
//! (RFC 4357). Digest bytes are produced in the conventional order used by
//! those RFCs' test vectors.

// ---------------------------------------------------------------------------
// Parameter sets
// ---------------------------------------------------------------------------

/// Eight 4-bit substitution rows; row 0 substitutes the lowest nibble.
pub type SboxTable = [[u8; 16]; 8];

/// Substitution-box parameter set selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GostParamSet {
    /// Test parameters from the original standard (RFC 5831).
    TestParamSet,
    /// CryptoPro parameters (RFC 4357), the set in common production use.
    CryptoProParamSet,
}

impl GostParamSet {
    /// The substitution table for this parameter set.
    pub fn sbox(self) -> &'static SboxTable {
        match self {
            GostParamSet::TestParamSet => &TEST_PARAM_SBOX,
            GostParamSet::CryptoProParamSet => &CRYPTO_PRO_SBOX,
        }
    }

    /// Stable lowercase name, used by the CLI and in reports.
    pub fn name(self) -> &'static str {
        match self {
            GostParamSet::TestParamSet => "test",
            GostParamSet::CryptoProParamSet => "cryptopro",
        }
    }
}

const TEST_PARAM_SBOX: SboxTable = [
    [4, 10, 9, 2, 13, 8, 0, 14, 6, 11, 1, 12, 7, 15, 5, 3],
    [14, 11, 4, 12, 6, 13, 15, 10, 2, 3, 8, 1, 0, 7, 5, 9],
    [5, 8, 1, 13, 10, 3, 4, 2, 14, 15, 12, 7, 6, 0, 9, 11],
    [7, 13, 10, 1, 0, 8, 9, 15, 14, 4, 6, 12, 11, 2, 5, 3],
    [6, 12, 7, 1, 5, 15, 13, 8, 4, 10, 9, 14, 0, 3, 11, 2],
    [4, 11, 10, 0, 7, 2, 1, 13, 3, 6, 8, 5, 9, 12, 15, 14],
    [13, 11, 4, 1, 3, 15, 5, 9, 0, 10, 14, 7, 6, 8, 2, 12],
    [1, 15, 13, 0, 5, 7, 10, 4, 9, 2, 3, 14, 6, 11, 8, 12],
];

const CRYPTO_PRO_SBOX: SboxTable = [
    [10, 4, 5, 6, 8, 1, 3, 7, 13, 12, 14, 0, 9, 2, 11, 15],
    [5, 15, 4, 0, 2, 13, 11, 9, 1, 7, 6, 3, 12, 14, 10, 8],
    [7, 15, 12, 14, 9, 4, 1, 0, 3, 11, 5, 2, 6, 10, 8, 13],
    [4, 10, 7, 12, 0, 15, 2, 8, 14, 1, 6, 5, 13, 11, 9, 3],
    [7, 6, 4, 11, 9, 12, 2, 10, 1, 8, 0, 14, 15, 13, 3, 5],
    [7, 6, 2, 4, 13, 9, 15, 0, 10, 1, 5, 11, 8, 14, 12, 3],
    [13, 14, 4, 1, 7, 0, 5, 10, 3, 12, 8, 15, 6, 2, 9, 11],
    [1, 3, 10, 9, 5, 11, 4, 15, 8, 6, 7, 14, 13, 0, 2, 12],
];

// ---------------------------------------------------------------------------
// GOST 28147-89 block cipher (encryption direction only)
// ---------------------------------------------------------------------------

/// Round function: modular key addition, nibble substitution, rotate by 11.
fn round_fn(x: u32, sbox: &SboxTable) -> u32 {
    let mut y = 0u32;
    for (i, row) in sbox.iter().enumerate() {
        let nibble = (x >> (4 * i)) & 0xF;
        y |= u32::from(row[nibble as usize]) << (4 * i);
    }
    y.rotate_left(11)
}

/// Encrypt one 64-bit block: 24 rounds with the subkeys cycling forward,
/// then 8 rounds with the subkeys in reverse. Words are little-endian and
/// the halves are written back swapped, per the standard.
fn encrypt_block(key: &[u8; 32], block: &[u8; 8], sbox: &SboxTable) -> [u8; 8] {
    let mut subkeys = [0u32; 8];
    for (i, chunk) in key.chunks_exact(4).enumerate() {
        subkeys[i] = u32::from_le_bytes(chunk.try_into().unwrap());
    }
    let mut n1 = u32::from_le_bytes(block[0..4].try_into().unwrap());
    let mut n2 = u32::from_le_bytes(block[4..8].try_into().unwrap());

    for round in 0..32 {
        let k = if round < 24 {
            subkeys[round % 8]
        } else {
            subkeys[7 - (round - 24)]
        };
        if round % 2 == 0 {
            n2 ^= round_fn(n1.wrapping_add(k), sbox);
        } else {
            n1 ^= round_fn(n2.wrapping_add(k), sbox);
        }
    }

    let mut out = [0u8; 8];
    out[0..4].copy_from_slice(&n2.to_le_bytes());
    out[4..8].copy_from_slice(&n1.to_le_bytes());
    out
}

// ---------------------------------------------------------------------------
// Compression function
// ---------------------------------------------------------------------------

type Block = [u8; 32];

/// Constant mixed into the third round key (all-ones bytes at fixed
/// positions, zero elsewhere).
const MIX_CONST: Block = {
    let positions = [1, 3, 5, 7, 8, 10, 12, 14, 17, 18, 20, 23, 24, 28, 29, 31];
    let mut c = [0u8; 32];
    let mut i = 0;
    while i < positions.len() {
        c[positions[i]] = 0xFF;
        i += 1;
    }
    c
};

fn xor_block(a: &Block, b: &Block) -> Block {
    let mut out = [0u8; 32];
    for i in 0..32 {
        out[i] = a[i] ^ b[i];
    }
    out
}

/// A-transform: drop the low 64-bit word, append (w0 xor w1).
fn a_transform(y: &Block) -> Block {
    let mut out = [0u8; 32];
    out[0..24].copy_from_slice(&y[8..32]);
    for i in 0..8 {
        out[24 + i] = y[i] ^ y[8 + i];
    }
    out
}

/// P-transform: byte transposition spreading each 8-byte word across the
/// four key words.
fn p_transform(y: &Block) -> Block {
    let mut out = [0u8; 32];
    for i in 0..4 {
        for j in 0..8 {
            out[i + 4 * j] = y[8 * i + j];
        }
    }
    out
}

/// One step of the 16-bit-word LFSR: shift out the low word, shift in the
/// xor of taps 1, 2, 3, 4, 13, 16.
fn psi(y: &Block) -> Block {
    let mut out = [0u8; 32];
    out[0..30].copy_from_slice(&y[2..32]);
    out[30] = y[0] ^ y[2] ^ y[4] ^ y[6] ^ y[24] ^ y[30];
    out[31] = y[1] ^ y[3] ^ y[5] ^ y[7] ^ y[25] ^ y[31];
    out
}

/// Fold one message block into the state.
fn compress(h: &Block, m: &Block, sbox: &SboxTable) -> Block {
    // Round keys: K1 = P(h xor m), then two interleaved A-chains with the
    // mixing constant entering the third key.
    let mut u = *h;
    let mut v = *m;
    let mut keys = [[0u8; 32]; 4];
    keys[0] = p_transform(&xor_block(&u, &v));
    for (round, key) in keys.iter_mut().enumerate().skip(1) {
        u = a_transform(&u);
        if round == 2 {
            u = xor_block(&u, &MIX_CONST);
        }
        v = a_transform(&a_transform(&v));
        *key = p_transform(&xor_block(&u, &v));
    }

    // Encrypt each state quarter under its round key.
    let mut s = [0u8; 32];
    for i in 0..4 {
        let quarter: [u8; 8] = h[8 * i..8 * i + 8].try_into().unwrap();
        s[8 * i..8 * i + 8].copy_from_slice(&encrypt_block(&keys[i], &quarter, sbox));
    }

    // Output transformation: psi^61(h xor psi(m xor psi^12(s))).
    for _ in 0..12 {
        s = psi(&s);
    }
    s = psi(&xor_block(&s, m));
    s = xor_block(&s, h);
    for _ in 0..61 {
        s = psi(&s);
    }
    s
}

// ---------------------------------------------------------------------------
// Chaining, padding, and checksum
// ---------------------------------------------------------------------------

/// Incremental GOST R 34.11-94 hasher.
#[derive(Clone)]
pub struct Gost94 {
    state: Block,
    checksum: Block,
    bit_len: u128,
    buf: Block,
    buf_len: usize,
    sbox: &'static SboxTable,
}

impl Gost94 {
    pub fn new(params: GostParamSet) -> Self {
        Gost94 {
            state: [0u8; 32],
            checksum: [0u8; 32],
            bit_len: 0,
            buf: [0u8; 32],
            buf_len: 0,
            sbox: params.sbox(),
        }
    }

    /// Add `block` into the running little-endian 256-bit checksum.
    fn absorb_checksum(&mut self, block: &Block) {
        let mut carry = 0u16;
        for i in 0..32 {
            let sum = u16::from(self.checksum[i]) + u16::from(block[i]) + carry;
            self.checksum[i] = sum as u8;
            carry = sum >> 8;
        }
    }

    fn absorb_block(&mut self, block: &Block) {
        self.state = compress(&self.state, block, self.sbox);
        self.absorb_checksum(block);
    }

    pub fn update(&mut self, mut data: &[u8]) {
        self.bit_len += 8 * data.len() as u128;
        if self.buf_len > 0 {
            let take = (32 - self.buf_len).min(data.len());
            self.buf[self.buf_len..self.buf_len + take].copy_from_slice(&data[..take]);
            self.buf_len += take;
            data = &data[take..];
            if self.buf_len == 32 {
                let block = self.buf;
                self.absorb_block(&block);
                self.buf_len = 0;
            }
        }
        while data.len() >= 32 {
            let block: Block = data[..32].try_into().unwrap();
            self.absorb_block(&block);
            data = &data[32..];
        }
        if !data.is_empty() {
            self.buf[..data.len()].copy_from_slice(data);
            self.buf_len = data.len();
        }
    }

    pub fn finalize(mut self) -> [u8; 32] {
        // Zero-pad and absorb any partial block.
        if self.buf_len > 0 {
            for b in &mut self.buf[self.buf_len..] {
                *b = 0;
            }
            let block = self.buf;
            self.absorb_block(&block);
            self.buf_len = 0;
        }
        // Absorb the bit length, then the checksum (neither feeds the
        // checksum itself).
        let mut len_block = [0u8; 32];
        len_block[0..16].copy_from_slice(&self.bit_len.to_le_bytes());
        self.state = compress(&self.state, &len_block, self.sbox);
        self.state = compress(&self.state, &self.checksum.clone(), self.sbox);
        self.state
    }
}

/// One-shot digest of `data` under the given parameter set.
pub fn gost94_digest(params: GostParamSet, data: &[u8]) -> [u8; 32] {
    let mut hasher = Gost94::new(params);
    hasher.update(data);
    hasher.finalize()
}

// ---------------------------------------------------------------------------
