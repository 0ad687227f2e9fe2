//! Counter-based random streams.
//!
//! Draw `i` of a run is a pure function of `(seed, i)`: a ChaCha8 stream
//! whose stream id is the draw index. Results never depend on how work is
//! split across threads.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::accum::NeumaierSum;
use crate::phase::PhasePoint;

/// Draws per contiguous chunk in parallel reductions.
pub const CHUNK: usize = 1024;

#[derive(Debug, Clone)]
pub struct CounterRng {
    base: ChaCha8Rng,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent generator for draw `index`.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng.set_word_pos(0);
        rng
    }

    /// Uniform `f64` in `[0, 1)` values for draw `index`.
    pub fn uniforms<const K: usize>(&self, index: u64) -> [f64; K] {
        let mut rng = self.stream(index);
        std::array::from_fn(|_| unit_f64(rng.next_u64()))
    }

    pub fn point(&self, index: u64) -> PhasePoint {
        let [x, y] = self.uniforms::<2>(index);
        PhasePoint { x, y }
    }
}

#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Streaming mean and variance (Welford), mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        let d = v - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (v - self.mean);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Evaluates `f(i)` for `i in 0..count` in parallel and reduces the moments
/// chunk by chunk in index order.
pub fn chunked_moments<F, E>(count: u64, f: F) -> Result<Moments, E>
where
    F: Fn(u64) -> Result<f64, E> + Sync,
    E: Send,
{
    let chunks = count.div_ceil(CHUNK as u64);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut m = Moments::default();
            let lo = c * CHUNK as u64;
            let hi = (lo + CHUNK as u64).min(count);
            for i in lo..hi {
                m.push(f(i)?);
            }
            Ok(m)
        })
        .collect::<Result<_, E>>()?;
    let mut total = Moments::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}

/// Compensated sum of `f(i)` over `0..count`, chunked like [`chunked_moments`].
pub fn chunked_sum<F>(count: u64, f: F) -> f64
where
    F: Fn(u64) -> f64 + Sync,
{
    let chunks = count.div_ceil(CHUNK as u64);
    let parts: Vec<NeumaierSum> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK as u64;
            let hi = (lo + CHUNK as u64).min(count);
            (lo..hi).map(&f).collect()
        })
        .collect();
    let mut total = NeumaierSum::default();
    for p in &parts {
        total.merge(p);
    }
    total.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_depend_only_on_seed_and_index() {
        let a = CounterRng::new(7);
        let b = CounterRng::new(7);
        assert_eq!(a.point(12345), b.point(12345));
        assert_ne!(a.point(1), a.point(2));
        assert_ne!(CounterRng::new(8).point(1), a.point(1));
        // asking in a different order changes nothing
        let fwd: Vec<_> = (0..50).map(|i| a.point(i)).collect();
        let rev: Vec<_> = (0..50).rev().map(|i| a.point(i)).collect();
        assert!(fwd.iter().eq(rev.iter().rev()));
    }

    #[test]
    fn uniforms_look_uniform() {
        let rng = CounterRng::new(1);
        let m = chunked_moments::<_, ()>(200_000, |i| Ok(rng.point(i).x)).unwrap();
        assert!((m.mean - 0.5).abs() < 0.005);
        assert!((m.variance() - 1.0 / 12.0).abs() < 0.002);
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..5000).map(|i| ((i * 7919) % 1000) as f64 / 7.0).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&v| whole.push(v));
        let chunked = chunked_moments::<_, ()>(xs.len() as u64, |i| Ok(xs[i as usize])).unwrap();
        assert!((whole.mean - chunked.mean).abs() < 1e-10);
        assert!((whole.variance() - chunked.variance()).abs() < 1e-8);
    }

    #[test]
    fn constant_values_have_zero_error() {
        let m = chunked_moments::<_, ()>(3000, |_| Ok(4.0)).unwrap();
        assert_eq!(m.mean, 4.0);
        assert_eq!(m.std_error(), 0.0);
    }
}
