//! Counter-based random numbers and seed derivation.
//!
//! All randomness in the crate comes from [`Philox4x32`], the Philox 4x32-10
//! generator of Salmon et al. (Random123). Its output is a pure function of
//! (key, counter), so a stream is fully described by its 64-bit key and the
//! results are identical on every platform.
//!
//! Independent streams are keyed with [`derive_seed`]:
//!
//! ```text
//! digest = SHA-256( "wavelab-seed-v1"
//!                   || master as u64 little-endian
//!                   || len(label) as u64 little-endian || label (UTF-8)
//!                   || index as u64 little-endian )
//! seed   = first 8 bytes of digest, read little-endian
//! ```
//!
//! The mapping is part of the reproducibility contract and must not change.

use sha2::{Digest, Sha256};

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;
const PHILOX_ROUNDS: usize = 10;

const SEED_DOMAIN: &[u8] = b"wavelab-seed-v1";

/// Number of draws handled by one derived stream in chunked parallel loops.
///
/// Fixed so that the partition of work into streams never depends on the
/// number of worker threads.
pub const CHUNK_LEN: usize = 1 << 16;

/// Stable hash of (master, label, index) into a new 64-bit seed.
pub fn derive_seed(master: u64, label: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(SEED_DOMAIN);
    hasher.update(master.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(head)
}

/// One Philox 4x32-10 block: 10 rounds of the bijection keyed by `key`.
pub fn philox4x32_10(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut ctr = counter;
    let mut key = key;
    for round in 0..PHILOX_ROUNDS {
        if round > 0 {
            key[0] = key[0].wrapping_add(PHILOX_W0);
            key[1] = key[1].wrapping_add(PHILOX_W1);
        }
        let p0 = u64::from(PHILOX_M0) * u64::from(ctr[0]);
        let p1 = u64::from(PHILOX_M1) * u64::from(ctr[2]);
        let (hi0, lo0) = ((p0 >> 32) as u32, p0 as u32);
        let (hi1, lo1) = ((p1 >> 32) as u32, p1 as u32);
        ctr = [hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0];
    }
    ctr
}

/// Sequential stream over the Philox counter space for a fixed key.
#[derive(Debug, Clone)]
pub struct Philox4x32 {
    key: [u32; 2],
    counter: u128,
    block: [u32; 4],
    used: usize,
}

impl Philox4x32 {
    pub fn new(seed: u64) -> Self {
        Self {
            key: [seed as u32, (seed >> 32) as u32],
            counter: 0,
            block: [0; 4],
            used: 4,
        }
    }

    /// Stream keyed by `derive_seed(master, label, index)`.
    pub fn derived(master: u64, label: &str, index: u64) -> Self {
        Self::new(derive_seed(master, label, index))
    }

    fn refill(&mut self) {
        let c = self.counter;
        let words = [c as u32, (c >> 32) as u32, (c >> 64) as u32, (c >> 96) as u32];
        self.block = philox4x32_10(words, self.key);
        self.counter = self.counter.wrapping_add(1);
        self.used = 0;
    }

    pub fn next_u32(&mut self) -> u32 {
        if self.used == 4 {
            self.refill();
        }
        let out = self.block[self.used];
        self.used += 1;
        out
    }

    pub fn next_u64(&mut self) -> u64 {
        let lo = u64::from(self.next_u32());
        let hi = u64::from(self.next_u32());
        lo | (hi << 32)
    }

    /// Uniform double in [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n` (Lemire's multiply-shift with rejection).
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "empty range");
        let n = n as u64;
        let mut m = u128::from(self.next_u64()) * u128::from(n);
        if (m as u64) < n {
            let threshold = n.wrapping_neg() % n;
            while (m as u64) < threshold {
                m = u128::from(self.next_u64()) * u128::from(n);
            }
        }
        (m >> 64) as usize
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

/// Splits `n` draws into fixed-size chunks: `(chunk_index, chunk_len)`.
pub fn chunks(n: usize) -> impl Iterator<Item = (u64, usize)> + Clone {
    let full = n / CHUNK_LEN;
    let rest = n % CHUNK_LEN;
    (0..full)
        .map(|i| (i as u64, CHUNK_LEN))
        .chain((rest > 0).then_some((full as u64, rest)))
}
