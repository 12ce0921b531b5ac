//! Counter-based randomness.
//!
//! Every random quantity of a run is a pure function of the master seed and a
//! key naming what is drawn: a stack entry of a site, the clock gaps of a
//! level, or the step stream of one particle. Nothing here carries state
//! except [`ParticleStream`], which is itself seeded from such a key.

use crate::lattice::{Direction, Site};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

const DOMAIN_STACK: u64 = 0x5354_4143_4b00_0001;
const DOMAIN_CLOCK: u64 = 0x434c_4f43_4b00_0002;
const DOMAIN_STREAM: u64 = 0x5354_5245_414d_0003;
const DOMAIN_AUX: u64 = 0x4155_5800_0000_0004;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn key2(seed: u64, domain: u64, a: u64, b: u64) -> u64 {
    let h = mix64(seed.wrapping_add(GOLDEN) ^ domain);
    let h = mix64(h ^ a.wrapping_mul(GOLDEN));
    mix64(h ^ b.wrapping_add(0xD1B5_4A32_D192_ED03))
}

#[inline]
fn site_bits(site: Site) -> u64 {
    (site.x as u32 as u64) | ((site.y as u32 as u64) << 32)
}

/// Uniform on `(0, 1]`, never zero so that `-ln(u)` is finite.
#[inline]
pub fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Keyed uniform in `(0, 1]` for auxiliary draws (bootstrap, permutations).
pub fn aux_uniform(seed: u64, a: u64, b: u64) -> f64 {
    open_unit(key2(seed, DOMAIN_AUX, a, b))
}

/// How walkers draw their steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RandomSource {
    /// Per-site direction stacks: the `k`-th visit of a walker to a site reads
    /// entry `k` of that site's stack, whichever walker it is.
    #[default]
    Stacks,
    /// One independent step stream per particle, keyed by (level, index).
    Streams,
}

impl RandomSource {
    pub fn name(self) -> &'static str {
        match self {
            RandomSource::Stacks => "stacks",
            RandomSource::Streams => "streams",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "stacks" => Some(RandomSource::Stacks),
            "streams" => Some(RandomSource::Streams),
            _ => None,
        }
    }
}

/// Entry `k` of the direction stack at `site` under `seed`.
#[inline]
pub fn stack_direction(seed: u64, site: Site, k: u32) -> Direction {
    Direction::from_bits(stack_block(seed, site, k >> 5) >> (2 * (k & 31)))
}

/// Block `b` of the stack at `site`: entries `32b .. 32b + 31`, two bits each,
/// lowest bits first.
#[inline]
pub fn stack_block(seed: u64, site: Site, b: u32) -> u64 {
    key2(seed, DOMAIN_STACK, site_bits(site), b as u64)
}

/// The clock of one level: a rate-1 Poisson point process on `[0, inf)`
/// realized by exponential gaps drawn through inversion.
#[derive(Clone, Debug)]
pub struct LevelClock {
    seed: u64,
    level: i32,
    next: u64,
    time: f64,
}

impl LevelClock {
    pub fn new(seed: u64, level: i32) -> Self {
        LevelClock {
            seed,
            level,
            next: 0,
            time: 0.0,
        }
    }

    /// All arrival times in `(0, horizon]`, increasing.
    pub fn arrivals_until(seed: u64, level: i32, horizon: f64) -> Vec<f64> {
        LevelClock::new(seed, level)
            .take_while(|&t| t <= horizon)
            .collect()
    }
}

impl Iterator for LevelClock {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let u = open_unit(key2(
            self.seed,
            DOMAIN_CLOCK,
            self.level as i64 as u64,
            self.next,
        ));
        self.next += 1;
        self.time += -u.ln();
        Some(self.time)
    }
}

/// Number of arrivals of the level clock in `[0, horizon]`; Poisson with
/// mean `horizon`.
pub fn level_count(seed: u64, level: i32, horizon: f64) -> u32 {
    LevelClock::new(seed, level)
        .take_while(|&t| t <= horizon)
        .count() as u32
}

/// Step stream of a single particle (the `index`-th particle, 1-based, from
/// `level`).
#[derive(Clone, Debug)]
pub struct ParticleStream {
    state: u64,
    buf: u64,
    left: u32,
}

impl ParticleStream {
    pub fn new(seed: u64, level: i32, index: u32) -> Self {
        ParticleStream {
            state: key2(seed, DOMAIN_STREAM, level as i64 as u64, index as u64),
            buf: 0,
            left: 0,
        }
    }

    #[inline]
    pub fn next_direction(&mut self) -> Direction {
        if self.left == 0 {
            self.state = self.state.wrapping_add(GOLDEN);
            self.buf = mix64(self.state);
            self.left = 32;
        }
        let d = Direction::from_bits(self.buf);
        self.buf >>= 2;
        self.left -= 1;
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stack_entries_are_pure() {
        let s = Site::new(0, 0);
        assert_eq!(stack_direction(7, s, 0), stack_direction(7, s, 0));
        for k in 0..100 {
            assert_eq!(stack_direction(3, s, k), stack_direction(3, s, k));
        }
    }

    #[test]
    fn seeds_differ_somewhere() {
        let differs = (0..64).any(|k| {
            stack_direction(7, Site::ORIGIN, k) != stack_direction(8, Site::ORIGIN, k)
        });
        assert!(differs);
    }

    #[test]
    fn clock_is_increasing_and_keyed() {
        let a = LevelClock::arrivals_until(5, -3, 50.0);
        let b = LevelClock::arrivals_until(5, -3, 50.0);
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(level_count(5, -3, 50.0) as usize, a.len());
        // Counts are nested in the horizon.
        assert!(level_count(5, -3, 10.0) <= level_count(5, -3, 20.0));
    }

    #[test]
    fn open_unit_range() {
        assert!(open_unit(0) > 0.0);
        assert!(open_unit(u64::MAX) <= 1.0);
    }

    #[test]
    fn streams_are_per_particle() {
        let mut a = ParticleStream::new(1, 0, 1);
        let mut b = ParticleStream::new(1, 0, 1);
        let mut c = ParticleStream::new(1, 0, 2);
        let va: Vec<_> = (0..100).map(|_| a.next_direction()).collect();
        let vb: Vec<_> = (0..100).map(|_| b.next_direction()).collect();
        let vc: Vec<_> = (0..100).map(|_| c.next_direction()).collect();
        assert_eq!(va, vb);
        assert_ne!(va, vc);
    }
}
