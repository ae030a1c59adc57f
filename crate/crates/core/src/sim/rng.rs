use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Seeded noise source: ChaCha20 keyed by `seed_from_u64(seed)`, uniforms
/// `(u >> 11 + 0.5) * 2^-53` in (0, 1), and Box–Muller pairs for Gaussians
/// (cosine branch first, sine branch on the next call).
#[derive(Debug, Clone)]
pub struct NoiseRng {
    inner: ChaCha20Rng,
    spare: Option<f64>,
}

impl NoiseRng {
    pub fn new(seed: u64) -> Self {
        NoiseRng { inner: ChaCha20Rng::seed_from_u64(seed), spare: None }
    }

    pub fn uniform(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (u1, u2) = (self.uniform(), self.uniform());
        let r = (-2.0 * u1.ln()).sqrt();
        let a = std::f64::consts::TAU * u2;
        self.spare = Some(r * a.sin());
        r * a.cos()
    }

    pub fn gaussian(&mut self, mean: f64, variance: f64) -> f64 {
        if variance == 0.0 {
            return mean;
        }
        mean + variance.sqrt() * self.standard_normal()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let a: Vec<f64> = { let mut r = NoiseRng::new(7); (0..10).map(|_| r.standard_normal()).collect() };
        let b: Vec<f64> = { let mut r = NoiseRng::new(7); (0..10).map(|_| r.standard_normal()).collect() };
        assert_eq!(a, b);
        let mut c = NoiseRng::new(8);
        assert_ne!(a[0], c.standard_normal());
    }

    #[test]
    fn uniform_open_interval() {
        let mut r = NoiseRng::new(1);
        assert!((0..10_000).map(|_| r.uniform()).all(|u| u > 0.0 && u < 1.0));
    }

    #[test]
    fn zero_variance_is_exact() {
        let mut r = NoiseRng::new(1);
        assert_eq!(r.gaussian(2.5, 0.0), 2.5);
    }
}
