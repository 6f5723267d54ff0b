//! Random member points and unitaries for property checks.
//!
//! `z` is drawn from a standard complex Gaussian (`E|zᵢ|² = 1`) and `w̃`
//! uniformly from the ball of radius 0.95, then `w = exp(-μ‖z‖²/2) w̃`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::domain::{DomainParams, DomainPoint, C64};

pub const DEFAULT_W_RADIUS: f64 = 0.95;

#[derive(Debug, Clone, Copy)]
pub struct MemberSampler {
    params: DomainParams,
    w_radius: f64,
    z_scale: f64,
}

impl MemberSampler {
    pub fn new(params: DomainParams) -> Self {
        Self { params, w_radius: DEFAULT_W_RADIUS, z_scale: 1.0 }
    }

    /// Radius of the ball `w̃` is drawn from; clamped into `(0, 0.95]`.
    pub fn with_w_radius(mut self, radius: f64) -> Self {
        self.w_radius = radius.clamp(f64::MIN_POSITIVE, DEFAULT_W_RADIUS);
        self
    }

    /// Multiplies the Gaussian `z` draw by `scale`.
    pub fn with_z_scale(mut self, scale: f64) -> Self {
        self.z_scale = scale;
        self
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DomainPoint {
        let z = self.sample_z(rng);
        let dim = 2 * self.params.m();
        let radius = self.w_radius * rng.random::<f64>().powf(1.0 / dim as f64);
        let w_tilde = scale_to(unit_direction(rng, self.params.m()), radius);
        self.params
            .point_from_reduced(z, w_tilde)
            .expect("|w~| <= 0.95 lies inside the domain")
    }

    /// A point with random `z` and a uniformly random direction for `w̃`, with
    /// `‖w̃‖² = reduced_norm_sq` (which must be below 1).
    pub fn sample_with_reduced_norm_sq<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        reduced_norm_sq: f64,
    ) -> DomainPoint {
        let z = self.sample_z(rng);
        let w_tilde = scale_to(unit_direction(rng, self.params.m()), reduced_norm_sq.sqrt());
        self.params
            .point_from_reduced(z, w_tilde)
            .expect("reduced norm below 1")
    }

    fn sample_z<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<C64> {
        complex_gaussian(rng, self.params.n())
            .into_iter()
            .map(|c| c * self.z_scale)
            .collect()
    }
}

/// Standard complex Gaussian vector, `E|vᵢ|² = 1`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(s * re, s * im)
        })
        .collect()
}

/// Unitary from the QR factorisation of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DMatrix<C64> {
    let g = DMatrix::from_vec(dim, dim, complex_gaussian(rng, dim * dim));
    g.qr().q()
}

fn unit_direction<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<C64> {
    loop {
        let v = complex_gaussian(rng, len);
        let norm = crate::domain::norm_sq(&v).sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

fn scale_to(v: Vec<C64>, radius: f64) -> Vec<C64> {
    v.into_iter().map(|c| c * radius).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::unitary_residual;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_are_members_within_radius() {
        let params = DomainParams::new(2, 3, 1.7, 0.4).unwrap();
        let sampler = MemberSampler::new(params);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let pt = sampler.sample(&mut rng);
            assert!(pt.reduced_norm_sq() <= 0.95 * 0.95 + 1e-12);
        }
    }

    #[test]
    fn fixed_reduced_norm() {
        let params = DomainParams::new(1, 2, 1.0, 0.0).unwrap();
        let sampler = MemberSampler::new(params);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pt = sampler.sample_with_reduced_norm_sq(&mut rng, 0.6);
        assert!((pt.reduced_norm_sq() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn random_unitaries_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for dim in 1..=5 {
            assert!(unitary_residual(&random_unitary(&mut rng, dim)) < 1e-13);
        }
    }
}
