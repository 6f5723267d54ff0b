//! Independent Monte Carlo checks of the closed-form Gamma formulas.
//!
//! Monomial norms are reduced analytically to a Gamma integral over the base
//! times a Dirichlet integral over the standard simplex, so sampling only ever
//! happens on the simplex. Uniform simplex points come from normalised
//! exponential spacings.
//!
//! Every batch draws from its own ChaCha stream keyed by `(seed, batch)` and
//! batch statistics are merged in batch order, so estimates are bit-identical
//! across backends and thread counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::bergman::{multi_indices, MultiIndex, WeightedSpace};
use crate::domain::{DomainParams, DomainPoint};
use crate::error::{Error, Result};
use crate::parallel::Backend;
use crate::specfn::{binomial, log_gamma};

pub const MIN_SAMPLES: u64 = 1_000;

/// Default upper limit on the batch size.
const DEFAULT_BATCH: u64 = 8_192;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    samples: u64,
    seed: u64,
    batch: u64,
    backend: Backend,
}

impl McConfig {
    pub fn new(samples: u64, seed: u64, batch: u64) -> Result<Self> {
        if samples < MIN_SAMPLES {
            return Err(Error::McConfig(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
        }
        if batch == 0 || !samples.is_multiple_of(batch) {
            return Err(Error::McConfig(format!("batch {batch} must divide samples {samples}")));
        }
        Ok(Self { samples, seed, batch, backend: Backend::default() })
    }

    /// Uses the largest batch size up to 8192 that divides `samples`.
    pub fn with_samples(samples: u64, seed: u64) -> Result<Self> {
        let batch = (1..=DEFAULT_BATCH.min(samples.max(1))).rev().find(|b| samples.is_multiple_of(*b)).unwrap_or(1);
        Self::new(samples, seed, batch)
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    /// Same stream layout with `factor` times as many samples.
    pub fn scaled(&self, factor: u64) -> Result<Self> {
        Ok(Self::new(self.samples * factor, self.seed, self.batch)?.with_backend(self.backend))
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn batch(&self) -> u64 {
        self.batch
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl McEstimate {
    /// `(mean - exact) / std_error`.
    pub fn z_score(&self, exact: f64) -> f64 {
        (self.mean - exact) / self.std_error
    }

    /// Whether `exact` lies within `k` standard errors of the mean.
    pub fn within(&self, exact: f64, k: f64) -> bool {
        (self.mean - exact).abs() <= k * self.std_error
    }

    fn scale(self, factor: f64) -> Self {
        Self { mean: self.mean * factor, std_error: self.std_error * factor.abs(), ..self }
    }
}

/// Running count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if self.count == 0 {
            return other;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let weight = other.count as f64 / count as f64;
        Self {
            count,
            mean: self.mean + delta * weight,
            m2: self.m2 + other.m2 + delta * delta * self.count as f64 * weight,
        }
    }

    fn estimate(self) -> McEstimate {
        let variance = self.m2 / (self.count - 1) as f64;
        McEstimate { mean: self.mean, std_error: (variance / self.count as f64).sqrt(), samples: self.count }
    }
}

/// `∫_Δ f` over the standard `m`-simplex. `f` receives the coordinates and
/// the remainder `1 - Σxᵢ`, drawn without cancellation.
pub fn simplex_mc<F>(m: usize, cfg: &McConfig, f: F) -> Result<McEstimate>
where
    F: Fn(&[f64], f64) -> f64 + Sync + Send,
{
    if m == 0 {
        return Err(Error::InvalidParams("simplex dimension must be positive".into()));
    }
    let batches = (cfg.samples / cfg.batch) as usize;
    let per_batch = cfg.batch;
    let moments = cfg.backend.map(batches, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(b as u64);
        let mut spacings = vec![0.0; m + 1];
        let mut x = vec![0.0; m];
        let mut acc = Moments::default();
        for _ in 0..per_batch {
            for e in spacings.iter_mut() {
                *e = rng.sample(Exp1);
            }
            let total: f64 = spacings.iter().sum();
            for (xi, e) in x.iter_mut().zip(&spacings) {
                *xi = e / total;
            }
            acc.push(f(&x, spacings[m] / total));
        }
        acc
    });
    let merged = moments.into_iter().fold(Moments::default(), Moments::merge);
    let volume = (-log_gamma(m as f64 + 1.0)?).exp();
    Ok(merged.estimate().scale(volume))
}

fn check_dirichlet(q: &[f64], alpha: f64, k: u32) -> Result<()> {
    if q.is_empty() {
        return Err(Error::InvalidParams("q must have at least one component".into()));
    }
    if let Some(&bad) = q.iter().find(|&&v| !(v >= 0.0)) {
        return Err(Error::InvalidParams(format!("exponents must be nonnegative, got {bad}")));
    }
    let bound = q.len() as f64 + k as f64 - 1.0;
    if !(alpha > bound) {
        return Err(Error::Divergent(format!("alpha = {alpha} must exceed {bound}")));
    }
    Ok(())
}

/// `∫_Δ (1 - Σxᵢ)^{α-m-k} ∏ xᵢ^{qᵢ} dx = ∏Γ(qᵢ+1) Γ(α-m-k+1) / Γ(α+|q|-k+1)`.
pub fn dirichlet_closed_form(q: &[f64], alpha: f64, k: u32) -> Result<f64> {
    check_dirichlet(q, alpha, k)?;
    let m = q.len() as f64;
    let qsum: f64 = q.iter().sum();
    let mut ln = log_gamma(alpha - m - k as f64 + 1.0)? - log_gamma(alpha + qsum - k as f64 + 1.0)?;
    for &qi in q {
        ln += log_gamma(qi + 1.0)?;
    }
    Ok(ln.exp())
}

/// Monte Carlo estimate of the same simplex integral.
pub fn dirichlet_simplex_mc(q: &[f64], alpha: f64, k: u32, cfg: &McConfig) -> Result<McEstimate> {
    check_dirichlet(q, alpha, k)?;
    let exponent = alpha - q.len() as f64 - k as f64;
    simplex_mc(q.len(), cfg, |x, rest| {
        x.iter().zip(q).map(|(xi, qi)| xi.powf(*qi)).product::<f64>() * rest.powf(exponent)
    })
}

/// Monte Carlo estimate of `‖z^p w^q‖²`.
///
/// Integrating out the base directions leaves
/// `∏Γ(pᵢ+1) / (μ^{|p|} c^{|p|+n}) · Σ_d C(n,d) ν^{n-d} ∫_Δ ∏ tᵢ^{qᵢ} (1-Σt)^{α-m-1-d}`
/// with `c = (ν+1)α + |q|`; only the simplex integral is sampled.
pub fn monomial_norm_mc(
    params: &DomainParams,
    alpha: f64,
    p: &MultiIndex,
    q: &MultiIndex,
    cfg: &McConfig,
) -> Result<McEstimate> {
    let (n, m, mu, nu) = (params.n(), params.m(), params.mu(), params.nu());
    if !(alpha > (n + m) as f64) {
        return Err(Error::TrivialSpace { alpha, bound: n + m });
    }
    if p.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.len() });
    }
    if q.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: q.len() });
    }
    let qdeg = q.degree() as f64;
    let c = (nu + 1.0) * alpha + qdeg;
    let mut ln_prefactor = -(p.degree() as f64) * mu.ln() - (p.degree() as f64 + n as f64) * c.ln();
    for &e in p.as_slice() {
        ln_prefactor += log_gamma(e as f64 + 1.0)?;
    }
    let weights: Vec<(f64, f64)> = (0..=n as u64)
        .map(|d| {
            let w = binomial(n as u64, d).expect("d <= n") as f64 * nu.powi((n as u64 - d) as i32);
            (w, alpha - m as f64 - 1.0 - d as f64)
        })
        .filter(|(w, _)| *w != 0.0)
        .collect();
    let qs: Vec<f64> = q.as_slice().iter().map(|&e| e as f64).collect();
    let estimate = simplex_mc(m, cfg, |x, rest| {
        let monomial: f64 = x.iter().zip(&qs).map(|(xi, qi)| xi.powf(*qi)).product();
        monomial * weights.iter().map(|(w, e)| w * rest.powf(*e)).sum::<f64>()
    })?;
    Ok(estimate.scale(ln_prefactor.exp()))
}

/// Closed-form norms along a sequence of weights.
pub fn divergence_probe(params: &DomainParams, alphas: &[f64], p: &MultiIndex, q: &MultiIndex) -> Result<Vec<f64>> {
    alphas
        .iter()
        .map(|&alpha| WeightedSpace::new(*params, alpha)?.monomial_norm_sq(p, q))
        .collect()
}

/// Partial sum of the orthonormal expansion `Σ |z^p|² |w^q|² / ‖z^p w^q‖²`
/// over `|p| ≤ max_p_degree`, `|q| ≤ max_q_degree`, summed term by term in
/// the original coordinates.
pub fn orthonormal_expansion_kernel(
    space: &WeightedSpace,
    point: &DomainPoint,
    max_p_degree: u32,
    max_q_degree: u32,
) -> Result<f64> {
    let params = space.params();
    let ps = multi_indices(params.n(), max_p_degree);
    let qs = multi_indices(params.m(), max_q_degree);
    let ln_abs = |v: &[crate::domain::C64]| v.iter().map(|c| c.norm_sqr().ln()).collect::<Vec<f64>>();
    let (ln_z, ln_w) = (ln_abs(point.z()), ln_abs(point.w()));
    let ln_power = |ln_base: &[f64], idx: &MultiIndex| -> f64 {
        idx.as_slice()
            .iter()
            .zip(ln_base)
            .map(|(&e, &l)| if e == 0 { 0.0 } else { e as f64 * l })
            .sum()
    };
    let mut total = 0.0;
    for q in &qs {
        let ln_wq = ln_power(&ln_w, q);
        let mut inner = 0.0;
        for p in &ps {
            inner += (ln_power(&ln_z, p) + ln_wq - space.ln_monomial_norm_sq(p, q)?).exp();
        }
        total += inner;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bergman::TruncationPolicy;
    use crate::domain::C64;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn config_validation() {
        assert!(McConfig::new(999, 0, 1).is_err());
        assert!(McConfig::new(10_000, 0, 3).is_err());
        assert!(McConfig::new(10_000, 0, 0).is_err());
        let cfg = McConfig::with_samples(1_000_000, 0).unwrap();
        assert_eq!(1_000_000 % cfg.batch(), 0);
        assert!(cfg.batch() <= 8_192);
    }

    #[test]
    fn dirichlet_closed_form_examples() {
        assert!(rel(dirichlet_closed_form(&[1.0], 2.0, 0).unwrap(), 1.0 / 6.0) < 1e-14);
        assert!(rel(dirichlet_closed_form(&[1.0, 1.0], 5.0, 1).unwrap(), 2.0 / 720.0) < 1e-13);
        // m = 1: Beta(q + 1, c + 1) with c = α - 1 - k
        let (q, alpha) = (2.5, 4.25);
        let c = alpha - 1.0;
        let beta = (log_gamma(q + 1.0).unwrap() + log_gamma(c + 1.0).unwrap() - log_gamma(q + c + 2.0).unwrap()).exp();
        assert!(rel(dirichlet_closed_form(&[q], alpha, 0).unwrap(), beta) < 1e-13);
        assert!(matches!(dirichlet_closed_form(&[1.0, 1.0], 2.0, 1), Err(Error::Divergent(_))));
    }

    #[test]
    fn simplex_volume() {
        let cfg = McConfig::with_samples(10_000, 3).unwrap();
        let est = dirichlet_simplex_mc(&[0.0, 0.0, 0.0], 3.0, 0, &cfg).unwrap();
        assert!(rel(est.mean, 1.0 / 6.0) < 1e-14);
        assert!(est.std_error < 1e-15);
    }

    #[test]
    fn dirichlet_mc_examples() {
        let cfg = McConfig::with_samples(1_000_000, 42).unwrap();
        let est = dirichlet_simplex_mc(&[1.0], 2.0, 0, &cfg).unwrap();
        assert!(est.within(1.0 / 6.0, 3.0), "{est:?}");
        let est = dirichlet_simplex_mc(&[1.0, 1.0], 5.0, 1, &cfg).unwrap();
        assert!(est.within(2.0 / 720.0, 3.0), "{est:?}");
    }

    #[test]
    fn seed_determinism_and_backend_equality() {
        let cfg = McConfig::new(64_000, 7, 4_000).unwrap();
        let a = dirichlet_simplex_mc(&[1.5, 0.5], 4.0, 1, &cfg.with_backend(Backend::Sequential)).unwrap();
        let b = dirichlet_simplex_mc(&[1.5, 0.5], 4.0, 1, &cfg.with_backend(Backend::Parallel)).unwrap();
        let c = dirichlet_simplex_mc(&[1.5, 0.5], 4.0, 1, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        let other = McConfig::new(64_000, 8, 4_000).unwrap();
        assert_ne!(a, dirichlet_simplex_mc(&[1.5, 0.5], 4.0, 1, &other).unwrap());
    }

    #[test]
    fn std_error_scaling() {
        let cfg = McConfig::with_samples(100_000, 11).unwrap();
        let small = dirichlet_simplex_mc(&[1.0, 2.0], 5.0, 0, &cfg).unwrap();
        let large = dirichlet_simplex_mc(&[1.0, 2.0], 5.0, 0, &cfg.scaled(4).unwrap()).unwrap();
        let ratio = small.std_error / large.std_error;
        assert!((ratio / 2.0 - 1.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn monomial_norm_mc_examples() {
        let params = DomainParams::new(1, 1, 1.0, 0.0).unwrap();
        let cfg = McConfig::with_samples(1_000_000, 5).unwrap();
        for (p, q, exact) in [(0, 0, 1.0 / 8.0), (0, 1, 1.0 / 30.0), (1, 0, 1.0 / 32.0)] {
            let est = monomial_norm_mc(&params, 4.0, &vec![p].into(), &vec![q].into(), &cfg).unwrap();
            assert!(est.within(exact, 3.0), "p={p} q={q} {est:?}");
        }
        assert!(monomial_norm_mc(&params, 2.0, &vec![0].into(), &vec![0].into(), &cfg).is_err());
    }

    #[test]
    fn divergence_probe_examples() {
        let params = DomainParams::new(1, 1, 1.0, 0.0).unwrap();
        let zero = || MultiIndex::zeros(1);
        let norms = divergence_probe(&params, &[3.0, 2.1, 2.01], &zero(), &zero()).unwrap();
        assert!(rel(norms[0], 1.0 / 3.0) < 1e-14);
        assert!(norms.windows(2).all(|w| w[1] > w[0]));
        // ν = 0 and α = m + n + 1: the simplex integrand is constant
        let cfg = McConfig::with_samples(200_000, 1).unwrap();
        let est = monomial_norm_mc(&params, 3.0, &zero(), &zero(), &cfg).unwrap();
        assert!(rel(est.mean, 1.0 / 3.0) < 1e-12);
    }

    #[test]
    fn expansion_matches_grouped_series() {
        let space = WeightedSpace::new(DomainParams::new(1, 1, 1.0, 0.3).unwrap(), 3.5).unwrap();
        let point = space.params().point(vec![C64::new(0.2, 0.1)], vec![C64::new(0.3, -0.2)]).unwrap();
        let grouped = space.kernel_diag(&point, &TruncationPolicy::default()).unwrap().value;
        let expansion = orthonormal_expansion_kernel(&space, &point, 60, 200).unwrap();
        assert!(rel(expansion, grouped) < 1e-10, "{expansion} vs {grouped}");
    }
}
