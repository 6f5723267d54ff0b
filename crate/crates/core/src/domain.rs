//! The domain `D_{n,m}(μ) = {(z, w) ∈ Cⁿ × Cᵐ : ‖w‖² < exp(-μ‖z‖²)}`, its
//! Kähler potential and the three explicit automorphism families.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Points with `1 - ‖w̃‖²` at or below this margin are rejected by
/// [`DomainParams::point`].
pub const BOUNDARY_MARGIN: f64 = 1e-14;

/// Operator-norm tolerance for `UᴴU = I`.
pub const UNITARY_TOL: f64 = 1e-12;

/// The tuple `(n, m, μ, ν)` fixing the domain and the metric `g(μ; ν)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainParams {
    n: usize,
    m: usize,
    mu: f64,
    nu: f64,
}

impl DomainParams {
    /// Requires `n, m ≥ 1`, `μ > 0` and `ν > -1`; below `ν = -1` the
    /// potential is no longer strictly plurisubharmonic.
    pub fn new(n: usize, m: usize, mu: f64, nu: f64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidParams(format!(
                "dimensions must be positive (n = {n}, m = {m})"
            )));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParams(format!("mu must be positive, got {mu}")));
        }
        if !(nu > -1.0) || !nu.is_finite() {
            return Err(Error::InvalidParams(format!("nu must exceed -1, got {nu}")));
        }
        Ok(Self { n, m, mu, nu })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Complex dimension `n + m`.
    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    /// Strict membership test `‖w‖² < exp(-μ‖z‖²)`.
    pub fn contains(&self, z: &[C64], w: &[C64]) -> Result<bool> {
        self.check_dims(z, w)?;
        Ok(norm_sq(w) < (-self.mu * norm_sq(z)).exp())
    }

    /// Builds a member point, rejecting anything outside the domain or within
    /// [`BOUNDARY_MARGIN`] of its boundary (in `1 - ‖w̃‖²`).
    pub fn point(&self, z: Vec<C64>, w: Vec<C64>) -> Result<DomainPoint> {
        self.check_dims(&z, &w)?;
        let reduced_norm_sq = (self.mu * norm_sq(&z)).exp() * norm_sq(&w);
        let inside = self.contains(&z, &w)? && 1.0 - reduced_norm_sq > BOUNDARY_MARGIN;
        if !inside {
            return Err(Error::NotInDomain { reduced_norm_sq });
        }
        Ok(DomainPoint { params: *self, z, w })
    }

    /// Builds the point with the given `z` and reduced fiber coordinate `w̃`,
    /// i.e. `w = exp(-μ‖z‖²/2) w̃`.
    pub fn point_from_reduced(&self, z: Vec<C64>, w_tilde: Vec<C64>) -> Result<DomainPoint> {
        let scale = (-0.5 * self.mu * norm_sq(&z)).exp();
        let w = w_tilde.into_iter().map(|c| c * scale).collect();
        self.point(z, w)
    }

    pub fn origin(&self) -> DomainPoint {
        DomainPoint {
            params: *self,
            z: vec![C64::new(0.0, 0.0); self.n],
            w: vec![C64::new(0.0, 0.0); self.m],
        }
    }

    fn check_dims(&self, z: &[C64], w: &[C64]) -> Result<()> {
        if z.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: z.len() });
        }
        if w.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: w.len() });
        }
        Ok(())
    }
}

/// A point `(z, w)` certified to lie in the domain of its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainPoint {
    params: DomainParams,
    z: Vec<C64>,
    w: Vec<C64>,
}

/// The fiber coordinate `w̃ = exp(μ‖z‖²/2) w`, which lies in the open unit ball.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedCoordinate(Vec<C64>);

impl ReducedCoordinate {
    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.0)
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.0
    }
}

impl DomainPoint {
    pub fn params(&self) -> &DomainParams {
        &self.params
    }

    pub fn z(&self) -> &[C64] {
        &self.z
    }

    pub fn w(&self) -> &[C64] {
        &self.w
    }

    pub fn z_norm_sq(&self) -> f64 {
        norm_sq(&self.z)
    }

    pub fn w_norm_sq(&self) -> f64 {
        norm_sq(&self.w)
    }

    /// All coordinates `(z, w)` as one vector of length `n + m`.
    pub fn coordinates(&self) -> Vec<C64> {
        self.z.iter().chain(&self.w).copied().collect()
    }

    pub fn reduced_w(&self) -> ReducedCoordinate {
        let scale = (0.5 * self.params.mu * self.z_norm_sq()).exp();
        ReducedCoordinate(self.w.iter().map(|c| c * scale).collect())
    }

    /// `‖w̃‖² = exp(μ‖z‖²) ‖w‖²`.
    pub fn reduced_norm_sq(&self) -> f64 {
        (self.params.mu * self.z_norm_sq()).exp() * self.w_norm_sq()
    }

    /// `Φ = μ(ν+1)‖z‖² - ln(1 - ‖w̃‖²)`.
    pub fn potential(&self) -> f64 {
        let p = &self.params;
        p.mu * (p.nu + 1.0) * self.z_norm_sq() - (-self.reduced_norm_sq()).ln_1p()
    }

    /// `Φ = νμ‖z‖² - ln(exp(-μ‖z‖²) - ‖w‖²)`, evaluated literally.
    pub fn potential_direct(&self) -> f64 {
        let p = &self.params;
        let zz = self.z_norm_sq();
        p.nu * p.mu * zz - ((-p.mu * zz).exp() - self.w_norm_sq()).ln()
    }

    /// `(z, w) ↦ (Uz, w)` for unitary `U ∈ U(n)`.
    pub fn apply_unitary_z(&self, u: &DMatrix<C64>) -> Result<DomainPoint> {
        check_unitary(u, self.params.n)?;
        let z = mat_vec(u, &self.z);
        self.params.point(z, self.w.clone())
    }

    /// `(z, w) ↦ (z, Vw)` for unitary `V ∈ U(m)`.
    pub fn apply_unitary_w(&self, v: &DMatrix<C64>) -> Result<DomainPoint> {
        check_unitary(v, self.params.m)?;
        let w = mat_vec(v, &self.w);
        self.params.point(self.z.clone(), w)
    }

    /// `(z, w) ↦ (z - a, exp(μ⟨z,a⟩ - μ‖a‖²/2) w)` with `⟨z,a⟩ = Σ zᵢ āᵢ`.
    pub fn apply_translation(&self, a: &[C64]) -> Result<DomainPoint> {
        let factor = self.translation_factor(a)?;
        let z = self.z.iter().zip(a).map(|(zi, ai)| zi - ai).collect();
        let w = self.w.iter().map(|wi| wi * factor).collect();
        self.params.point(z, w)
    }

    /// Holomorphic Jacobian determinant of the translation automorphism at
    /// this point: `exp(mμ⟨z,a⟩ - mμ‖a‖²/2)`.
    pub fn translation_jacobian_det(&self, a: &[C64]) -> Result<C64> {
        let factor = self.translation_factor(a)?;
        Ok(factor.powu(self.params.m as u32))
    }

    /// Holomorphic Jacobian `J[k][i] = ∂F_k/∂Z_i` of the translation
    /// automorphism at this point.
    pub fn translation_jacobian(&self, a: &[C64]) -> Result<DMatrix<C64>> {
        let (n, m) = (self.params.n, self.params.m);
        let factor = self.translation_factor(a)?;
        let mu = self.params.mu;
        let mut jac = DMatrix::zeros(n + m, n + m);
        for i in 0..n {
            jac[(i, i)] = C64::new(1.0, 0.0);
        }
        for k in 0..m {
            for i in 0..n {
                jac[(n + k, i)] = mu * a[i].conj() * factor * self.w[k];
            }
            jac[(n + k, n + k)] = factor;
        }
        Ok(jac)
    }

    fn translation_factor(&self, a: &[C64]) -> Result<C64> {
        if a.len() != self.params.n {
            return Err(Error::DimensionMismatch { expected: self.params.n, got: a.len() });
        }
        let mu = self.params.mu;
        Ok((mu * hermitian_inner(&self.z, a) - 0.5 * mu * norm_sq(a)).exp())
    }
}

/// Writes `φ_a ∘ φ_b` as a single translation followed by a fiber rotation:
/// returns `(a + b, θ)` with `φ_a ∘ φ_b = R_θ ∘ φ_{a+b}` and
/// `R_θ(z, w) = (z, e^{iθ} w)`, where `θ = -μ Im⟨b, a⟩`.
pub fn compose_translations(mu: f64, a: &[C64], b: &[C64]) -> (Vec<C64>, f64) {
    let sum = a.iter().zip(b).map(|(x, y)| x + y).collect();
    (sum, -mu * hermitian_inner(b, a).im)
}

/// `⟨u, v⟩ = Σ uᵢ v̄ᵢ`.
pub fn hermitian_inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(x, y)| x * y.conj()).sum()
}

pub fn norm_sq(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// Operator-norm residual `‖UᴴU - I‖₂`.
pub fn unitary_residual(u: &DMatrix<C64>) -> f64 {
    let k = u.nrows();
    let gram = u.adjoint() * u - DMatrix::<C64>::identity(k, k);
    gram.symmetric_eigenvalues().iter().fold(0.0, |acc: f64, e| acc.max(e.abs()))
}

fn check_unitary(u: &DMatrix<C64>, dim: usize) -> Result<()> {
    if u.nrows() != dim || u.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: u.nrows().max(u.ncols()) });
    }
    let residual = unitary_residual(u);
    if residual > UNITARY_TOL || !residual.is_finite() {
        return Err(Error::NotUnitary(residual));
    }
    Ok(())
}

fn mat_vec(u: &DMatrix<C64>, v: &[C64]) -> Vec<C64> {
    (0..u.nrows())
        .map(|i| (0..u.ncols()).map(|j| u[(i, j)] * v[j]).sum())
        .collect()
}
