//! Deterministic random streams for routing decisions.
//!
//! Every randomized step (pin/net assignment, strap sizing) draws from its
//! own xorshift64* stream, keyed by the run seed, a purpose tag, and the
//! testcell name. Streams are therefore independent of testcell processing
//! order, which keeps parallel runs byte-identical to serial ones.

/// SplitMix64 finalizer; used to spread seed material over the state space.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over bytes; stable name hashing for stream scoping.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xCBF2_9CE4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}

/// What a stream is consumed for; part of the stream key so the draws of
/// one purpose never perturb another's.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamPurpose {
    PinAssign,
    Straps,
}

impl StreamPurpose {
    fn tag(self) -> u64 {
        match self {
            StreamPurpose::PinAssign => 1,
            StreamPurpose::Straps => 2,
        }
    }
}

/// xorshift64* generator.
#[derive(Clone, Debug)]
pub struct Stream {
    state: u64,
}

impl Stream {
    /// Derive the stream for (seed, purpose, scope). `scope` is typically
    /// the testcell name.
    pub fn new(seed: u64, purpose: StreamPurpose, scope: &str) -> Stream {
        let mixed = splitmix64(seed ^ splitmix64(purpose.tag()) ^ fnv1a64(scope.as_bytes()));
        // xorshift state must be nonzero; remap the (vanishingly rare) zero
        Stream { state: if mixed == 0 { 0x9E37_79B9_7F4A_7C15 } else { mixed } }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform draw in `[0, n)`.
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        self.next_u64() % n
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
