//! Complex Hessian `g_{ij̄} = ∂²Φ/∂Z_i∂Z̄_j` of the potential, its closed-form
//! determinant, and automorphism-invariance residuals.
//!
//! Matrices are indexed by the coordinates `(Z_1, …, Z_{n+m}) = (z, w)`, with
//! entry `(i, j)` holding `∂²Φ/∂Z_i∂Z̄_j`. Under a holomorphic map `F` with
//! Jacobian `J[k][i] = ∂F_k/∂Z_i` this transforms as `Jᵀ H(F) J̄`.

use nalgebra::DMatrix;

use crate::domain::{DomainPoint, C64};
use crate::error::{Error, Result};

/// Pivot tolerance of the Hermitian Cholesky test, relative to the largest
/// diagonal entry.
pub const CHOLESKY_PIVOT_TOL: f64 = 1e-12;

/// Default finite-difference step, in `z` units and in `w̃` units.
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(DMatrix<C64>);

impl HermitianMatrix {
    pub fn from_matrix(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    /// `max |H_ij - conj(H_ji)|`.
    pub fn hermitian_residual(&self) -> f64 {
        max_abs(&(&self.0 - self.0.adjoint()))
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }

    pub fn max_abs_diff(&self, other: &HermitianMatrix) -> f64 {
        max_abs(&(&self.0 - &other.0))
    }

    /// Determinant via LU; the imaginary part is rounding noise for a
    /// Hermitian matrix and is dropped.
    pub fn determinant(&self) -> f64 {
        self.0.clone().determinant().re
    }

    /// Lower-triangular `L` with `H = L Lᴴ`, or `None` when a pivot falls
    /// below `pivot_tol` times the largest diagonal entry.
    pub fn cholesky(&self, pivot_tol: f64) -> Option<DMatrix<C64>> {
        let n = self.dim();
        let a = &self.0;
        let scale = (0..n).fold(0.0f64, |s, i| s.max(a[(i, i)].re.abs())).max(f64::MIN_POSITIVE);
        let mut l = DMatrix::<C64>::zeros(n, n);
        for j in 0..n {
            let mut pivot = a[(j, j)].re;
            for k in 0..j {
                pivot -= l[(j, k)].norm_sqr();
            }
            if !(pivot > pivot_tol * scale) {
                return None;
            }
            let d = pivot.sqrt();
            l[(j, j)] = C64::new(d, 0.0);
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / d;
            }
        }
        Some(l)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky(CHOLESKY_PIVOT_TOL).is_some()
    }
}

/// Analytic Hessian of `Φ = νμ‖z‖² - ln ρ`, `ρ = exp(-μ‖z‖²) - ‖w‖²`.
///
/// With `T = ‖w̃‖²`, `s = 1/(1-T)` and `E = exp(μ‖z‖²)`:
///
/// ```text
/// ∂²Φ/∂zᵢ∂z̄ⱼ = μ(ν + s)δᵢⱼ + μ² z̄ᵢ zⱼ T s²
/// ∂²Φ/∂zᵢ∂w̄ⱼ = μ z̄ᵢ wⱼ E s²
/// ∂²Φ/∂wᵢ∂w̄ⱼ = E s δᵢⱼ + w̄ᵢ wⱼ E² s²
/// ```
pub fn hessian(point: &DomainPoint) -> HermitianMatrix {
    let p = point.params();
    let (n, m, mu, nu) = (p.n(), p.m(), p.mu(), p.nu());
    let (z, w) = (point.z(), point.w());
    let t = point.reduced_norm_sq();
    let s = 1.0 / (1.0 - t);
    let e = (mu * point.z_norm_sq()).exp();

    let mut h = DMatrix::<C64>::zeros(n + m, n + m);
    for i in 0..n {
        for j in 0..n {
            let mut v = mu * mu * t * s * s * z[i].conj() * z[j];
            if i == j {
                v += mu * (nu + s);
            }
            h[(i, j)] = v;
        }
        for j in 0..m {
            let v = mu * e * s * s * z[i].conj() * w[j];
            h[(i, n + j)] = v;
            h[(n + j, i)] = v.conj();
        }
    }
    for i in 0..m {
        for j in 0..m {
            let mut v = e * e * s * s * w[i].conj() * w[j];
            if i == j {
                v += e * s;
            }
            h[(n + i, n + j)] = v;
        }
    }
    HermitianMatrix(h)
}

/// Central-difference Hessian from [`DomainPoint::potential`] in the real
/// coordinates, combined into Wirtinger derivatives
/// `∂²/∂Zᵢ∂Z̄ⱼ = ¼(∂xᵢ∂xⱼ + ∂yᵢ∂yⱼ) + (i/4)(∂xᵢ∂yⱼ - ∂yᵢ∂xⱼ)`.
///
/// `step` is taken literally in the `z` directions and in `w̃` units in the
/// `w` directions (`step · exp(-μ‖z‖²/2)`), so the stencil scales with the
/// fiber. Fails when `1 - ‖w̃‖ ≤ 2·step` or any stencil point leaves the
/// domain.
pub fn hessian_fd(point: &DomainPoint, step: f64) -> Result<HermitianMatrix> {
    let p = point.params();
    if !(step > 0.0) || 1.0 - point.reduced_norm_sq().sqrt() <= 2.0 * step {
        return Err(Error::StepTooLarge(step));
    }
    let (n, dim) = (p.n(), p.dim());
    let fiber = (-0.5 * p.mu() * point.z_norm_sq()).exp();
    let base: Vec<f64> = point.coordinates().iter().flat_map(|c| [c.re, c.im]).collect();
    let steps: Vec<f64> = (0..2 * dim)
        .map(|r| if r / 2 < n { step } else { step * fiber })
        .collect();

    let eval = |shifts: &[(usize, f64)]| -> Result<f64> {
        let mut x = base.clone();
        for &(r, d) in shifts {
            x[r] += d;
        }
        let coords: Vec<C64> = x.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
        let (z, w) = coords.split_at(n);
        p.point(z.to_vec(), w.to_vec())
            .map(|pt| pt.potential())
            .map_err(|_| Error::StepTooLarge(step))
    };

    let f0 = eval(&[])?;
    let nr = 2 * dim;
    let mut d2 = vec![0.0; nr * nr];
    for r in 0..nr {
        let h = steps[r];
        d2[r * nr + r] = (eval(&[(r, h)])? - 2.0 * f0 + eval(&[(r, -h)])?) / (h * h);
        for s in (r + 1)..nr {
            let k = steps[s];
            let v = (eval(&[(r, h), (s, k)])? - eval(&[(r, h), (s, -k)])?
                - eval(&[(r, -h), (s, k)])?
                + eval(&[(r, -h), (s, -k)])?)
                / (4.0 * h * k);
            d2[r * nr + s] = v;
            d2[s * nr + r] = v;
        }
    }

    let at = |r: usize, s: usize| d2[r * nr + s];
    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let (xi, yi, xj, yj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
            let re = 0.25 * (at(xi, xj) + at(yi, yj));
            let im = 0.25 * (at(xi, yj) - at(yi, xj));
            h[(i, j)] = C64::new(re, im);
        }
    }
    Ok(HermitianMatrix(h))
}

/// Richardson extrapolation of [`hessian_fd`] at `step` and `step / 2`,
/// cancelling the `O(step²)` term.
pub fn hessian_fd_richardson(point: &DomainPoint, step: f64) -> Result<HermitianMatrix> {
    let coarse = hessian_fd(point, step)?.0;
    let fine = hessian_fd(point, 0.5 * step)?.0;
    Ok(HermitianMatrix((fine * C64::new(4.0, 0.0) - coarse) / C64::new(3.0, 0.0)))
}

/// Closed-form determinant
/// `μⁿ [ν + (1-T)⁻¹]ⁿ (1-T)^{-(m+1)} exp(mμ‖z‖²)`, `T = ‖w̃‖²`.
pub fn metric_det(point: &DomainPoint) -> f64 {
    let p = point.params();
    let s = 1.0 / (1.0 - point.reduced_norm_sq());
    let (n, m) = (p.n() as i32, p.m() as i32);
    p.mu().powi(n) * (p.nu() + s).powi(n) * s.powi(m + 1) * (m as f64 * p.mu() * point.z_norm_sq()).exp()
}

/// Pull-back `Jᵀ H J̄` of a Hessian through a holomorphic map with Jacobian `J`.
pub fn pull_back(h_image: &HermitianMatrix, jacobian: &DMatrix<C64>) -> HermitianMatrix {
    HermitianMatrix(jacobian.transpose() * &h_image.0 * jacobian.conjugate())
}

/// Max-norm residual of `H(p) - Jᵀ H(φ_a(p)) J̄` for the translation `φ_a`.
pub fn check_invariance(point: &DomainPoint, a: &[C64]) -> Result<f64> {
    let image = point.apply_translation(a)?;
    let jac = point.translation_jacobian(a)?;
    Ok(hessian(point).max_abs_diff(&pull_back(&hessian(&image), &jac)))
}

/// Max-norm residual of `H(p) - Jᵀ H(φ(p)) J̄` for `φ = φ_U ∘ φ_V`, whose
/// Jacobian is `diag(U, V)`.
pub fn check_unitary_invariance(
    point: &DomainPoint,
    u: &DMatrix<C64>,
    v: &DMatrix<C64>,
) -> Result<f64> {
    let image = point.apply_unitary_z(u)?.apply_unitary_w(v)?;
    let (n, m) = (point.params().n(), point.params().m());
    let mut jac = DMatrix::<C64>::zeros(n + m, n + m);
    jac.view_mut((0, 0), (n, n)).copy_from(u);
    jac.view_mut((n, n), (m, m)).copy_from(v);
    Ok(hessian(point).max_abs_diff(&pull_back(&hessian(&image), &jac)))
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, c| acc.max(c.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainParams;
    use crate::sampling::{complex_gaussian, random_unitary, MemberSampler};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn origin_hessian_is_block_identity() {
        let p = DomainParams::new(2, 3, 1.7, 0.4).unwrap();
        let h = hessian(&p.origin());
        let expected = DMatrix::from_fn(5, 5, |i, j| match (i == j, i < 2) {
            (true, true) => c(1.7 * 1.4, 0.0),
            (true, false) => c(1.0, 0.0),
            _ => c(0.0, 0.0),
        });
        assert!(max_abs(&(h.as_matrix() - expected)) < 1e-15);
    }

    #[test]
    fn fiber_block_at_zero_base_point() {
        let p = DomainParams::new(1, 2, 1.0, 0.5).unwrap();
        let w0 = vec![c(0.3, 0.2), c(-0.1, 0.4)];
        let pt = p.point(vec![c(0.0, 0.0)], w0.clone()).unwrap();
        let h = hessian(&pt);
        let t = pt.reduced_norm_sq();
        for i in 0..2 {
            for j in 0..2 {
                let mut expected = w0[i].conj() * w0[j] / ((1.0 - t) * (1.0 - t));
                if i == j {
                    expected += 1.0 / (1.0 - t);
                }
                assert!((h.entry(1 + i, 1 + j) - expected).norm() < 1e-14);
            }
        }
        assert!((h.entry(0, 0).re - (0.5 + 1.0 / (1.0 - t))).abs() < 1e-14);
    }

    #[test]
    fn metric_det_examples() {
        let p = DomainParams::new(1, 1, 2.0, 0.0).unwrap();
        assert!((metric_det(&p.origin()) - 2.0).abs() < 1e-15);
        let p = DomainParams::new(1, 1, 1.0, 0.0).unwrap();
        let pt = p.point(vec![c(0.0, 0.0)], vec![c(0.5f64.sqrt(), 0.0)]).unwrap();
        assert!((metric_det(&pt) - 8.0).abs() < 1e-12);
        assert!((hessian(&pt).determinant() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn metric_det_scales_with_base_point() {
        let p = DomainParams::new(2, 2, 0.9, 0.3).unwrap();
        let wt = vec![c(0.2, 0.1), c(0.4, -0.3)];
        let z = vec![c(0.7, -0.2), c(0.1, 1.1)];
        let at_zero = p.point_from_reduced(vec![c(0.0, 0.0); 2], wt.clone()).unwrap();
        let moved = p.point_from_reduced(z, wt).unwrap();
        let ratio = metric_det(&moved) / metric_det(&at_zero);
        let expected = (2.0 * 0.9 * moved.z_norm_sq()).exp();
        assert!((ratio / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn determinant_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &(n, m, nu) in &[(1, 1, 0.0), (2, 1, -0.5), (1, 3, 2.0), (3, 2, -0.9)] {
            let p = DomainParams::new(n, m, 1.3, nu).unwrap();
            let sampler = MemberSampler::new(p);
            for _ in 0..200 {
                let pt = sampler.sample(&mut rng);
                let rel = hessian(&pt).determinant() / metric_det(&pt) - 1.0;
                assert!(rel.abs() < 1e-8, "rel {rel:e}");
            }
        }
    }

    #[test]
    fn analytic_hessian_is_hermitian_positive_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for nu in [-0.9, -0.5, 0.0, 1.0, 10.0] {
            let p = DomainParams::new(2, 2, 0.8, nu).unwrap();
            let sampler = MemberSampler::new(p);
            for _ in 0..100 {
                let h = hessian(&sampler.sample(&mut rng));
                assert!(h.hermitian_residual() <= 1e-12 * h.max_abs().max(1.0));
                assert!(h.is_positive_definite());
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 2.0), c(0.0, -2.0), c(1.0, 0.0)]);
        assert!(!HermitianMatrix::from_matrix(m).is_positive_definite());
        let l = HermitianMatrix::from_matrix(DMatrix::identity(3, 3)).cholesky(1e-12).unwrap();
        assert_eq!(l, DMatrix::identity(3, 3));
    }

    #[test]
    fn finite_differences_at_origin() {
        let p = DomainParams::new(2, 1, 1.5, 0.5).unwrap();
        let fd = hessian_fd(&p.origin(), FD_STEP).unwrap();
        for i in 0..2 {
            assert!((fd.entry(i, i).re - 2.25).abs() < 1e-6);
        }
        assert!(fd.hermitian_residual() < 1e-8);
    }

    #[test]
    fn finite_differences_track_analytic_hessian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = DomainParams::new(2, 2, 1.0, 0.3).unwrap();
        let sampler = MemberSampler::new(p);
        for _ in 0..20 {
            let pt = sampler.sample(&mut rng);
            let h = hessian(&pt);
            let fd = hessian_fd_richardson(&pt, FD_STEP).unwrap();
            assert!(fd.hermitian_residual() <= 1e-8 * h.max_abs().max(1.0));
            let err = fd.max_abs_diff(&h) / h.max_abs().max(1.0);
            assert!(err < 1e-5, "err {err:e}");
        }
    }

    #[test]
    fn finite_difference_step_too_large() {
        let p = DomainParams::new(1, 1, 1.0, 0.0).unwrap();
        let pt = p.point(vec![c(0.0, 0.0)], vec![c(0.9, 0.0)]).unwrap();
        assert_eq!(hessian_fd(&pt, 0.06), Err(Error::StepTooLarge(0.06)));
        assert!(hessian_fd(&pt, 0.01).is_ok());
    }

    #[test]
    fn translation_invariance_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = DomainParams::new(2, 2, 1.1, -0.4).unwrap();
        let sampler = MemberSampler::new(p);
        assert_eq!(check_invariance(&p.origin(), &[c(0.0, 0.0); 2]).unwrap(), 0.0);
        for _ in 0..50 {
            let pt = sampler.sample(&mut rng);
            let a = complex_gaussian(&mut rng, 2);
            assert!(check_invariance(&pt, &a).unwrap() < 1e-6);
            // |det J|² carries the determinant across the map
            let img = pt.apply_translation(&a).unwrap();
            let jac = pt.translation_jacobian_det(&a).unwrap().norm_sqr();
            assert!((metric_det(&pt) / (jac * metric_det(&img)) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn unitary_invariance_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = DomainParams::new(3, 2, 0.7, 1.0).unwrap();
        let sampler = MemberSampler::new(p);
        for _ in 0..50 {
            let pt = sampler.sample(&mut rng);
            let u = random_unitary(&mut rng, 3);
            let v = random_unitary(&mut rng, 2);
            let r = check_unitary_invariance(&pt, &u, &v).unwrap();
            assert!(r <= 1e-10 * hessian(&pt).max_abs().max(1.0), "residual {r:e}");
        }
    }
}
