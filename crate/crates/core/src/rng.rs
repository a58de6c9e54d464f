//! Counter-based random numbers: sample `i` under seed `s` is a pure
//! function of `(s, i)`, so parallel sampling is order independent.

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed: mix(seed ^ 0x9e37_79b9_7f4a_7c15) }
    }

    /// Raw 64-bit word `k` of stream `index`.
    #[inline]
    pub fn word(&self, index: u64, k: u64) -> u64 {
        mix(self.seed ^ mix(index.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ k.wrapping_add(0x632b_e59b_d9b4_e019)))
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn unit(&self, index: u64, k: u64) -> f64 {
        (self.word(index, k) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    #[inline]
    pub fn uniform(&self, index: u64, k: u64, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit(index, k)
    }

    /// Fills `out` with the point for sample `index` in the box `[lo_i, hi_i)`.
    #[inline]
    pub fn point_in_box(&self, index: u64, lo: &[f64], hi: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.uniform(index, k as u64, lo[k], hi[k]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_seed_dependent() {
        let a = CounterRng::new(7);
        let b = CounterRng::new(7);
        let c = CounterRng::new(8);
        assert_eq!(a.word(3, 1), b.word(3, 1));
        assert_ne!(a.word(3, 1), c.word(3, 1));
        assert_ne!(a.word(3, 1), a.word(3, 2));
        assert_ne!(a.word(3, 1), a.word(4, 1));
    }

    #[test]
    fn roughly_uniform() {
        let r = CounterRng::new(1);
        let m = 200_000u64;
        let mean = (0..m).map(|i| r.unit(i, 0)).sum::<f64>() / m as f64;
        assert!((mean - 0.5).abs() < 0.005);
        let below = (0..m).filter(|&i| r.unit(i, 1) < 0.1).count() as f64 / m as f64;
        assert!((below - 0.1).abs() < 0.005);
    }
}
