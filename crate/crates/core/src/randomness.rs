//! The public coin shared by both simulated parties.

use rand::{Error as RandError, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A reproducible stream of public random bits.
///
/// Both parties read the same stream, so any value drawn from it is known to
/// both of them without communication. The stream is addressed by bit
/// position: equal `(seed, position)` pairs yield equal continuations.
#[derive(Clone, Debug)]
pub struct SharedRandomness {
    seed: u64,
    rng: ChaCha8Rng,
    buf: u64,
    buffered: u32,
}

impl SharedRandomness {
    pub fn new(seed: u64) -> Self {
        SharedRandomness {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            buf: 0,
            buffered: 0,
        }
    }

    /// A stream positioned `bit_position` bits after the start of `seed`'s stream.
    pub fn at_position(seed: u64, bit_position: u128) -> Self {
        let mut r = SharedRandomness::new(seed);
        r.rng.set_word_pos(2 * (bit_position / 64));
        let skip = (bit_position % 64) as u32;
        if skip > 0 {
            r.next_bits(skip);
        }
        r
    }

    /// An independent stream for trial `index` of an experiment seeded with `seed`.
    pub fn for_trial(seed: u64, index: u64) -> Self {
        SharedRandomness::new(mix_seed(seed, index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of bits consumed so far.
    pub fn position(&self) -> u128 {
        (self.rng.get_word_pos() / 2) * 64 - self.buffered as u128
    }

    /// The next `k` bits (1 ≤ k ≤ 64) as the low bits of a word.
    #[inline]
    pub fn next_bits(&mut self, k: u32) -> u64 {
        debug_assert!((1..=64).contains(&k));
        if k <= self.buffered {
            let out = if k == 64 { self.buf } else { self.buf & ((1u64 << k) - 1) };
            self.buf = if k == 64 { 0 } else { self.buf >> k };
            self.buffered -= k;
            return out;
        }
        let have = self.buffered;
        let low = self.buf;
        let fresh = self.rng.next_u64();
        let need = k - have;
        let take = if need == 64 { fresh } else { fresh & ((1u64 << need) - 1) };
        self.buf = if need == 64 { 0 } else { fresh >> need };
        self.buffered = 64 - need;
        if have == 0 {
            take
        } else {
            low | (take << have)
        }
    }

    #[inline]
    pub fn next_bit(&mut self) -> bool {
        self.next_bits(1) == 1
    }

    /// Uniform value in `0..n`, by rejection on `⌈log2 n⌉`-bit draws
    /// (fewer than two draws on average).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        if n == 1 {
            return 0;
        }
        let bits = 64 - (n - 1).leading_zeros();
        loop {
            let v = self.next_bits(bits);
            if v < n {
                return v;
            }
        }
    }
}

impl RngCore for SharedRandomness {
    fn next_u32(&mut self) -> u32 {
        self.next_bits(32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next_bits(64)
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for b in dest {
            *b = self.next_bits(8) as u8;
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), RandError> {
        self.fill_bytes(dest);
        Ok(())
    }
}

/// SplitMix64 finalizer over `seed` and `index`; used to derive per-trial seeds.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
