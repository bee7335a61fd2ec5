//! Seeded random source shared by every generator.
//!
//! The stream is ChaCha8 (`rand_chacha` 0.3), keyed through
//! `rand_core` 0.6 `SeedableRng::seed_from_u64`. ChaCha is a counter-based
//! cipher, so the stream is identical on every platform. Floating-point
//! conversions and transcendental functions are done here (via `libm`)
//! rather than through `rand_distr` so that the mapping from bits to values
//! is pinned as well.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Name and version of the pinned generator, recorded in outputs.
pub const ALGORITHM: &str = "chacha8/rand_chacha-0.3/seed_from_u64";

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1]`.
    fn uniform_open0(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.uniform()
    }

    /// Standard normal variate (Box-Muller, both halves used).
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform_open0();
        let u2 = self.uniform();
        let radius = libm::sqrt(-2.0 * libm::log(u1));
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(radius * libm::sin(theta));
        radius * libm::cos(theta)
    }

    /// Uniform angle on `[0, 2π)` returned as `(cos, sin)`.
    pub fn unit_circle(&mut self) -> (f64, f64) {
        let theta = 2.0 * std::f64::consts::PI * self.uniform();
        (libm::cos(theta), libm::sin(theta))
    }

    /// Uniform point in the unit ball of dimension `d`.
    pub fn unit_ball(&mut self, d: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..d).map(|_| self.standard_normal()).collect();
        let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        let radius = libm::pow(self.uniform(), 1.0 / d as f64);
        let scale = if norm > 0.0 { radius / norm } else { 0.0 };
        v.iter_mut().for_each(|x| *x *= scale);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = SeededRng::new(42);
        let mut b = SeededRng::new(42);
        for _ in 0..100 {
            assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
    }

    #[test]
    fn pinned_first_values() {
        // Guards against silent changes of the underlying stream.
        let mut rng = SeededRng::new(0);
        assert_eq!(rng.next_u64(), 13080132717333068652);
        assert_eq!(rng.next_u64(), 8594738769458413623);
    }

    #[test]
    fn uniform_in_range() {
        let mut rng = SeededRng::new(7);
        for _ in 0..10_000 {
            let u = rng.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn normal_moments_are_plausible() {
        let mut rng = SeededRng::new(11);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn unit_ball_points_inside() {
        let mut rng = SeededRng::new(3);
        for d in 1..5 {
            for _ in 0..1000 {
                let p = rng.unit_ball(d);
                assert!(p.iter().map(|x| x * x).sum::<f64>() <= 1.0 + 1e-12);
            }
        }
    }
}
