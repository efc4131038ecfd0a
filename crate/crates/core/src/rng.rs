//! Counter-based random number streams.
//!
//! Every draw in the estimators must be a pure function of a `(seed, indices)`
//! key so that work can be distributed over any number of threads without
//! changing a single bit of the output. We use the SplitMix64 finalizer both
//! to derive stream keys (`fold`) and as the sequential generator within a
//! stream. Normal variates come from the Box-Muller transform, which keeps
//! the sampler portable and pinned (no dependence on an external ziggurat
//! implementation changing between versions).

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child stream key from `key` and an index or tag.
///
/// Chained fold-ins separate sub-streams: `fold(fold(seed, i), j)` and
/// `fold(fold(seed, j), i)` land in unrelated parts of the key space.
#[inline]
pub fn fold(key: u64, data: u64) -> u64 {
    mix64(key ^ mix64(data.wrapping_add(GOLDEN)))
}

/// A small sequential generator over a derived key.
#[derive(Debug, Clone)]
pub struct Stream {
    state: u64,
}

impl Stream {
    pub fn new(key: u64) -> Self {
        Stream { state: key }
    }

    /// Stream for the path `seed / data[0] / data[1] / ...`.
    pub fn from_path(seed: u64, path: &[u64]) -> Self {
        let mut key = seed;
        for &p in path {
            key = fold(key, p);
        }
        Stream::new(key)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform in [0, 1) with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in (0, 1]; used where a logarithm of the draw is taken.
    #[inline]
    fn next_f64_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `[0, n)` via the widening-multiply reduction.
    #[inline]
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// One standard normal variate (Box-Muller, cosine branch).
    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.next_f64_open();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Fills `out` with standard normal variates.
    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.next_normal();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_pure_functions_of_their_path() {
        let a: Vec<u64> = {
            let mut s = Stream::from_path(42, &[3, 7]);
            (0..8).map(|_| s.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut s = Stream::from_path(42, &[3, 7]);
            (0..8).map(|_| s.next_u64()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn sibling_streams_differ() {
        let mut a = Stream::from_path(42, &[3, 7]);
        let mut b = Stream::from_path(42, &[3, 8]);
        let mut c = Stream::from_path(42, &[7, 3]);
        let x = a.next_u64();
        assert_ne!(x, b.next_u64());
        assert_ne!(x, c.next_u64());
    }

    #[test]
    fn uniform_range_and_moments() {
        let mut s = Stream::from_path(1, &[0]);
        let n = 200_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = s.next_f64();
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        let mean = sum / n as f64;
        // SE of the mean is ~0.00065; allow 5 sigma.
        assert!((mean - 0.5).abs() < 3.3e-3, "mean {mean}");
    }

    #[test]
    fn normal_moments() {
        let mut s = Stream::from_path(2, &[0]);
        let n = 400_000;
        let (mut m1, mut m2, mut m4) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let z = s.next_normal();
            m1 += z;
            m2 += z * z;
            m4 += z * z * z * z;
        }
        m1 /= n as f64;
        m2 /= n as f64;
        m4 /= n as f64;
        assert!(m1.abs() < 0.01, "mean {m1}");
        assert!((m2 - 1.0).abs() < 0.02, "var {m2}");
        assert!((m4 - 3.0).abs() < 0.1, "kurt {m4}");
    }

    #[test]
    fn index_draws_cover_range_uniformly() {
        let mut s = Stream::from_path(3, &[0]);
        let mut counts = [0usize; 7];
        for _ in 0..70_000 {
            counts[s.next_index(7)] += 1;
        }
        for &c in &counts {
            assert!((c as f64 - 10_000.0).abs() < 500.0, "counts {counts:?}");
        }
    }
}
