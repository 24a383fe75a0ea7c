//! Counter-based pseudorandom values.
//!
//! Every random quantity in the laboratory is a pure function of a master
//! seed, a trial index, a stream tag and a key. Nothing carries state between
//! draws, so results do not depend on the order in which workers run.

/// Stream tags separate independent random fields that share a key space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Edge = 0x45_44_47_45,
    Ghost = 0x47_48_4f_53,
    Walk = 0x57_41_4c_4b,
    Aux = 0x41_55_58_00,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Stafford's variant 13 finalizer (the splitmix64 output function).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Incremental keyed hash. Each absorbed word passes through two rounds of
/// mixing, which is plenty for Monte Carlo purposes (this is not a
/// cryptographic PRF).
#[derive(Clone, Copy, Debug)]
pub struct Prf {
    state: u64,
}

impl Prf {
    #[inline]
    pub fn new(seed: u64, trial: u64, stream: Stream) -> Self {
        let mut prf = Prf { state: mix64(seed ^ GOLDEN) };
        prf.absorb(stream as u64);
        prf.absorb(trial);
        prf
    }

    #[inline]
    pub fn absorb(&mut self, word: u64) {
        self.state = mix64(self.state.wrapping_add(GOLDEN) ^ mix64(word.wrapping_add(0x632b_e59b_d9b4_e019)));
    }

    #[inline]
    pub fn absorb_bytes(&mut self, bytes: &[u8]) {
        self.absorb(bytes.len() as u64);
        for chunk in bytes.chunks(8) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            self.absorb(u64::from_le_bytes(buf));
        }
    }

    #[inline]
    pub fn finish(&self) -> u64 {
        mix64(self.state ^ 0xd6e8_feb8_6659_fd93)
    }

    /// Uniform value in [0, 1) with 53 bits of resolution.
    #[inline]
    pub fn uniform(&self) -> f64 {
        to_unit(self.finish())
    }
}

#[inline]
pub fn to_unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sequential generator built on the same mixer: the n-th output is
/// `mix64(key + n * GOLDEN)`, so any position can be computed directly.
#[derive(Clone, Debug)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64, trial: u64, stream: Stream) -> Self {
        CounterRng { key: Prf::new(seed, trial, stream).finish(), counter: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        to_unit(self.next_u64())
    }

    /// Uniform index in `0..n` (Lemire's multiply-shift; bias below 2^-32 for our sizes).
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prf_is_deterministic_and_separates_inputs() {
        let a = Prf::new(1, 2, Stream::Edge);
        let b = Prf::new(1, 2, Stream::Edge);
        assert_eq!(a.finish(), b.finish());
        assert_ne!(a.finish(), Prf::new(1, 3, Stream::Edge).finish());
        assert_ne!(a.finish(), Prf::new(2, 2, Stream::Edge).finish());
        assert_ne!(a.finish(), Prf::new(1, 2, Stream::Ghost).finish());
    }

    #[test]
    fn uniforms_look_uniform() {
        let n = 200_000;
        let mut buckets = [0usize; 10];
        let mut sum = 0.0;
        for i in 0..n {
            let mut prf = Prf::new(7, 0, Stream::Edge);
            prf.absorb(i);
            let u = prf.uniform();
            assert!((0.0..1.0).contains(&u));
            sum += u;
            buckets[(u * 10.0) as usize] += 1;
        }
        assert!((sum / n as f64 - 0.5).abs() < 0.005);
        let expected = n as f64 / 10.0;
        let chi2: f64 = buckets.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 9 degrees of freedom, 99.9% quantile is 27.9
        assert!(chi2 < 27.9, "chi2 = {chi2}");
    }

    #[test]
    fn counter_rng_below_in_range() {
        let mut rng = CounterRng::new(3, 4, Stream::Aux);
        let mut seen = [false; 5];
        for _ in 0..1000 {
            let k = rng.below(5);
            seen[k] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }
}
