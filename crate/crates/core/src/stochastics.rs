//! Seedable random streams and the samplers the Brownian stepper uses.
//!
//! Two generators are provided so that engine comparisons can swap the
//! random source: 64-bit Mersenne Twister (MT19937-64) and the 48-bit LCG
//! of `java.util.Random`. Both produce bit-identical sequences on every
//! platform for a given seed.
//!
//! Normal deviates use the ziggurat sampler of `rand_distr` driven by the
//! stream's own generator, so they inherit its determinism. A call normally
//! consumes one 64-bit draw; the rare wedge and tail cases consume more.

use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::geometry::{RngKind, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("sphere radius must be positive and finite (got {0})")]
    NonPositiveRadius(f64),
}

const NN: usize = 312;
const MM: usize = 156;
const MATRIX_A: u64 = 0xB502_6F5A_A966_19E9;
const UPPER_MASK: u64 = 0xFFFF_FFFF_8000_0000;
const LOWER_MASK: u64 = 0x7FFF_FFFF;

/// MT19937-64 (Matsumoto & Nishimura, 2004 reference implementation).
#[derive(Clone)]
pub struct Mt19937_64 {
    mt: Box<[u64; NN]>,
    index: usize,
}

impl Mt19937_64 {
    pub fn new(seed: u64) -> Self {
        let mut mt = Box::new([0u64; NN]);
        mt[0] = seed;
        for i in 1..NN {
            mt[i] = 6_364_136_223_846_793_005u64
                .wrapping_mul(mt[i - 1] ^ (mt[i - 1] >> 62))
                .wrapping_add(i as u64);
        }
        Mt19937_64 { mt, index: NN }
    }

    fn twist(&mut self) {
        let mag01 = [0u64, MATRIX_A];
        let mt = &mut self.mt;
        for i in 0..NN - MM {
            let x = (mt[i] & UPPER_MASK) | (mt[i + 1] & LOWER_MASK);
            mt[i] = mt[i + MM] ^ (x >> 1) ^ mag01[(x & 1) as usize];
        }
        for i in NN - MM..NN - 1 {
            let x = (mt[i] & UPPER_MASK) | (mt[i + 1] & LOWER_MASK);
            mt[i] = mt[i + MM - NN] ^ (x >> 1) ^ mag01[(x & 1) as usize];
        }
        let x = (mt[NN - 1] & UPPER_MASK) | (mt[0] & LOWER_MASK);
        mt[NN - 1] = mt[MM - 1] ^ (x >> 1) ^ mag01[(x & 1) as usize];
        self.index = 0;
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        if self.index >= NN {
            self.twist();
        }
        let mut x = self.mt[self.index];
        self.index += 1;
        x ^= (x >> 29) & 0x5555_5555_5555_5555;
        x ^= (x << 17) & 0x71D6_7FFF_EDA6_0000;
        x ^= (x << 37) & 0xFFF7_EEE0_0000_0000;
        x ^= x >> 43;
        x
    }

    /// 53-bit resolution double in [0, 1) (`genrand64_res53`).
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }
}

const LCG_MULTIPLIER: u64 = 0x5_DEEC_E66D;
const LCG_ADDEND: u64 = 0xB;
const LCG_MASK: u64 = (1 << 48) - 1;

/// The linear congruential generator behind `java.util.Random`.
#[derive(Clone)]
pub struct JavaLcg {
    state: u64,
}

impl JavaLcg {
    pub fn new(seed: u64) -> Self {
        JavaLcg {
            state: (seed ^ LCG_MULTIPLIER) & LCG_MASK,
        }
    }

    #[inline]
    fn next_bits(&mut self, bits: u32) -> u32 {
        self.state = self
            .state
            .wrapping_mul(LCG_MULTIPLIER)
            .wrapping_add(LCG_ADDEND)
            & LCG_MASK;
        (self.state >> (48 - bits)) as u32
    }

    /// `Random.nextInt()`.
    pub fn next_i32(&mut self) -> i32 {
        self.next_bits(32) as i32
    }

    /// `Random.nextDouble()`: 26 + 27 bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        let hi = (self.next_bits(26) as u64) << 27;
        let lo = self.next_bits(27) as u64;
        (hi + lo) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for Mt19937_64 {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }
    fn next_u64(&mut self) -> u64 {
        Mt19937_64::next_u64(self)
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        rand_core::impls::fill_bytes_via_next(self, dst)
    }
}

impl RngCore for JavaLcg {
    fn next_u32(&mut self) -> u32 {
        self.next_bits(32)
    }
    /// `Random.nextLong()`.
    fn next_u64(&mut self) -> u64 {
        let hi = (self.next_bits(32) as i32 as i64) << 32;
        let lo = self.next_bits(32) as i32 as i64;
        hi.wrapping_add(lo) as u64
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        rand_core::impls::fill_bytes_via_next(self, dst)
    }
}

#[derive(Clone)]
enum Generator {
    Mt(Mt19937_64),
    Lcg(JavaLcg),
}

/// A single-owner random stream; the sequence is fully determined by
/// `(kind, seed)`.
#[derive(Clone)]
pub struct RandomStream {
    kind: RngKind,
    seed: u64,
    gen: Generator,
}

impl RandomStream {
    pub fn new(kind: RngKind, seed: u64) -> Self {
        let gen = match kind {
            RngKind::MersenneTwister => Generator::Mt(Mt19937_64::new(seed)),
            RngKind::BaselineLcg => Generator::Lcg(JavaLcg::new(seed)),
        };
        RandomStream {
            kind,
            seed,
            gen,
        }
    }

    pub fn kind(&self) -> RngKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform in [0, 1); advances the generator by exactly one draw.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        match &mut self.gen {
            Generator::Mt(g) => g.next_f64(),
            Generator::Lcg(g) => g.next_f64(),
        }
    }

    #[inline]
    pub fn next_standard_normal(&mut self) -> f64 {
        match &mut self.gen {
            Generator::Mt(g) => StandardNormal.sample(g),
            Generator::Lcg(g) => StandardNormal.sample(g),
        }
    }

    pub fn next_normal_vec3(&mut self) -> Vec3 {
        let x = self.next_standard_normal();
        let y = self.next_standard_normal();
        let z = self.next_standard_normal();
        Vec3::new(x, y, z)
    }
}

impl std::fmt::Debug for RandomStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RandomStream")
            .field("kind", &self.kind)
            .field("seed", &self.seed)
            .finish_non_exhaustive()
    }
}

/// Uniform point on the sphere of the given radius, from a normalized
/// triple of standard normals.
pub fn sample_uniform_on_sphere(stream: &mut RandomStream, radius: f64) -> Result<Vec3, SamplingError> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(SamplingError::NonPositiveRadius(radius));
    }
    loop {
        let v = stream.next_normal_vec3();
        let n = v.norm();
        // A zero-length normal triple has probability zero; redraw if seen.
        if n > 0.0 {
            return Ok(v.scale(radius / n));
        }
    }
}

/// splitmix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed for replication `index` under `master_seed`.
pub fn replication_seed(master_seed: u64, index: u64) -> u64 {
    mix64(master_seed ^ mix64(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Independent, reproducible stream for one replication.
pub fn derive_replication_stream(master_seed: u64, index: u64, kind: RngKind) -> RandomStream {
    RandomStream::new(kind, replication_seed(master_seed, index))
}
