//! Weighted Bergman space `H_α` with weight `exp(-αΦ)`: monomial norms, the
//! diagonal Bergman kernel and the ε-function `exp(-αΦ) K_α`.
//!
//! On the diagonal everything reduces to the single series
//!
//! ```text
//! S(T) = Σ_t ψ(α, t) (α)_t / t! · Tᵗ,    T = ‖w̃‖²,
//! ```
//!
//! obtained by grouping the multi-index sum over `q ∈ Nᵐ` by `t = |q|` with
//! `Σ_{|q|=t} ∏ xᵢ^{qᵢ}/qᵢ! = (Σ xᵢ)ᵗ / t!`. Truncation is certified: the
//! remaining terms are bounded by `sup ψ` times a geometric tail.

use std::sync::OnceLock;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::domain::{DomainParams, DomainPoint};
use crate::error::{Error, Result};
use crate::identity::{Rational, RationalPolynomial};
use crate::parallel::Backend;
use crate::specfn::{binomial, log_gamma, pochhammer};

/// Largest `‖w̃‖²` at which kernel and ε evaluations are certified.
pub const MAX_REDUCED_NORM_SQ: f64 = 0.95;

/// Monotonicity crossovers beyond this are not tabulated.
const MAX_CROSSOVER: u64 = 10_000_000;

/// Headroom on tabulated ψ suprema for rounding in their evaluation.
const SUP_SLACK: f64 = 1.0 + 1e-12;

/// Exponent vector of a monomial `z^p` or `w^q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self(exponents)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `|q| = Σ qⱼ`.
    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&e| e as u64).sum()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

/// All multi-indices of length `len` with total degree at most `max_degree`,
/// in graded order.
pub fn multi_indices(len: usize, max_degree: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for total in 0..=max_degree {
        let mut current = vec![0u32; len];
        compositions(&mut current, 0, total, &mut out);
    }
    out
}

fn compositions(current: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for k in (0..=remaining).rev() {
        current[pos] = k;
        compositions(current, pos + 1, remaining - k, out);
    }
}

/// When to stop summing a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    max_degree: usize,
    tail_tol: f64,
}

impl TruncationPolicy {
    pub fn new(max_degree: usize, tail_tol: f64) -> Result<Self> {
        if max_degree == 0 {
            return Err(Error::InvalidParams("max_degree must be at least 1".into()));
        }
        if !(tail_tol > 0.0) || !tail_tol.is_finite() {
            return Err(Error::InvalidParams(format!("tail_tol must be positive, got {tail_tol}")));
        }
        Ok(Self { max_degree, tail_tol })
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Relative tolerance on the certified tail.
    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { max_degree: 2000, tail_tol: 1e-10 }
    }
}

/// A truncated series value with its truncation certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncated {
    pub value: f64,
    /// Highest degree included.
    pub degree: usize,
    /// Certified bound on the omitted tail, relative to `value`.
    pub tail_bound: f64,
}

/// `H_α ≠ {0}` exactly when `α > m + n`.
pub fn is_nontrivial(params: &DomainParams, alpha: f64) -> bool {
    alpha > params.dim() as f64
}

/// The weighted space `H_α` over a domain, for `α > m + n`.
#[derive(Debug, Clone)]
pub struct WeightedSpace {
    params: DomainParams,
    alpha: f64,
    envelope: OnceLock<std::result::Result<PsiEnvelope, Error>>,
}

impl WeightedSpace {
    pub fn new(params: DomainParams, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || !is_nontrivial(&params, alpha) {
            return Err(Error::TrivialSpace { alpha, bound: params.dim() });
        }
        Ok(Self { params, alpha, envelope: OnceLock::new() })
    }

    pub fn params(&self) -> &DomainParams {
        &self.params
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `(α - m - n)_{m+n}`, the constant value of ε in the balanced case.
    pub fn leading_constant(&self) -> f64 {
        let dim = self.params.dim();
        pochhammer(self.alpha - dim as f64, dim as u64)
    }

    /// `ln Σ_d C(n,d) ν^{n-d} Γ(α-m-d) / Γ(α-d+t)`, the denominator of χ.
    /// The sum is positive for `ν > -1`; mixed-sign terms are combined with a
    /// signed log-sum-exp.
    fn ln_chi_denominator(&self, t: f64) -> f64 {
        let (n, m, nu, alpha) = self.unpack();
        let mut logs = Vec::with_capacity(n as usize + 1);
        for d in 0..=n {
            let power = n - d;
            if nu == 0.0 && power > 0 {
                continue;
            }
            let df = d as f64;
            let ln_abs = (binomial(n, d).expect("d <= n") as f64).ln()
                + power as f64 * nu.abs().ln().max(f64::MIN) * (power > 0) as u8 as f64
                + lg(alpha - m as f64 - df)
                - lg(alpha - df + t);
            let negative = nu < 0.0 && power % 2 == 1;
            logs.push((ln_abs, negative));
        }
        let max = logs.iter().map(|(l, _)| *l).fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logs
            .iter()
            .map(|&(l, neg)| if neg { -(l - max).exp() } else { (l - max).exp() })
            .sum();
        sum.ln() + max
    }

    /// `ln χ(α, t)`.
    pub fn ln_chi(&self, t: f64) -> f64 {
        let (n, _, nu, alpha) = self.unpack();
        n as f64 * ((nu + 1.0) * alpha + t).ln() - self.ln_chi_denominator(t)
    }

    /// `χ(α, t) = [(ν+1)α + t]ⁿ / Σ_d C(n,d) ν^{n-d} Γ(α-m-d)/Γ(α-d+t)`.
    pub fn chi(&self, qdeg: u64) -> f64 {
        self.ln_chi(qdeg as f64).exp()
    }

    /// `ψ(α, t)` in product form
    /// `[(ν+1)α + t]ⁿ / Σ_d C(n,d) ν^{n-d} (α-m-n)_{n-d} (α-d+t)_d`.
    pub fn psi(&self, qdeg: u64) -> f64 {
        self.psi_real(qdeg as f64)
    }

    fn psi_real(&self, t: f64) -> f64 {
        let (n, m, nu, alpha) = self.unpack();
        let base = alpha - (m + n) as f64;
        let numerator = ((nu + 1.0) * alpha + t).powi(n as i32);
        let denominator: f64 = (0..=n)
            .map(|d| {
                binomial(n, d).expect("d <= n") as f64
                    * nu.powi((n - d) as i32)
                    * pochhammer(base, n - d)
                    * pochhammer(alpha - d as f64 + t, d)
            })
            .sum();
        numerator / denominator
    }

    /// `ψ(α, t) = Γ(α-m-n) χ(α, t) / Γ(α+t)` evaluated through `ln Γ`.
    pub fn psi_gamma_form(&self, qdeg: u64) -> f64 {
        let (n, m, _, alpha) = self.unpack();
        let t = qdeg as f64;
        (lg(alpha - (m + n) as f64) + self.ln_chi(t) - lg(alpha + t)).exp()
    }

    /// `ln ‖z^p w^q‖²`.
    pub fn ln_monomial_norm_sq(&self, p: &MultiIndex, q: &MultiIndex) -> Result<f64> {
        self.check_indices(p, q)?;
        let (_, _, nu, alpha) = self.unpack();
        let qdeg = q.degree() as f64;
        let factorials: f64 = p.as_slice().iter().chain(q.as_slice()).map(|&e| lg(e as f64 + 1.0)).sum();
        let rate = self.params.mu() * ((nu + 1.0) * alpha + qdeg);
        Ok(factorials - p.degree() as f64 * rate.ln() - self.ln_chi(qdeg))
    }

    /// `‖z^p w^q‖² = ∏Γ(pᵢ+1) ∏Γ(qⱼ+1) / ([μ((ν+1)α + |q|)]^{|p|} χ(α, |q|))`.
    pub fn monomial_norm_sq(&self, p: &MultiIndex, q: &MultiIndex) -> Result<f64> {
        Ok(self.ln_monomial_norm_sq(p, q)?.exp())
    }

    /// The series `S(T) = Σ_t ψ(α,t) (α)_t/t! Tᵗ`, truncated once the last
    /// term and the certified tail are both below `tail_tol · S`.
    pub fn reduced_series(&self, reduced_norm_sq: f64, policy: &TruncationPolicy) -> Result<Truncated> {
        check_region(reduced_norm_sq)?;
        let envelope = self.envelope()?;
        let alpha = self.alpha;
        let t = reduced_norm_sq;
        let mut coeff = 1.0;
        let mut sum = 0.0;
        let mut tail = f64::INFINITY;
        for k in 0..=policy.max_degree {
            let term = self.psi(k as u64) * coeff;
            sum += term;
            let next = coeff * (k as f64 + alpha) / (k as f64 + 1.0) * t;
            tail = envelope.sup_beyond(k as u64, |j| self.psi(j)) * geometric_tail(next, k + 1, alpha, t);
            if term <= policy.tail_tol * sum && tail <= policy.tail_tol * sum {
                return Ok(Truncated { value: sum, degree: k, tail_bound: tail / sum });
            }
            coeff = next;
        }
        Err(Error::TruncationExhausted { degree: policy.max_degree, bound: tail / sum })
    }

    /// The first `count` terms `ψ(α,t) (α)_t/t! Tᵗ` of [`Self::reduced_series`].
    pub fn series_terms(&self, reduced_norm_sq: f64, count: usize) -> Vec<f64> {
        let mut coeff = 1.0;
        (0..count)
            .map(|k| {
                let term = self.psi(k as u64) * coeff;
                coeff *= (k as f64 + self.alpha) / (k as f64 + 1.0) * reduced_norm_sq;
                term
            })
            .collect()
    }

    /// `K_α` on the diagonal:
    /// `(α-m-n)_{m+n} exp(μ(ν+1)α‖z‖²) S(‖w̃‖²)`.
    pub fn kernel_diag(&self, point: &DomainPoint, policy: &TruncationPolicy) -> Result<Truncated> {
        self.check_point(point)?;
        let series = self.reduced_series(point.reduced_norm_sq(), policy)?;
        let p = &self.params;
        let growth = (p.mu() * (p.nu() + 1.0) * self.alpha * point.z_norm_sq()).exp();
        Ok(Truncated { value: self.leading_constant() * growth * series.value, ..series })
    }

    /// Rawnsley's ε-function `exp(-αΦ) K_α`, which depends only on `‖w̃‖²`.
    pub fn epsilon(&self, point: &DomainPoint, policy: &TruncationPolicy) -> Result<Truncated> {
        self.check_point(point)?;
        self.epsilon_reduced(point.reduced_norm_sq(), policy)
    }

    /// `ε = (α-m-n)_{m+n} (1-T)^α S(T)` as a function of `T = ‖w̃‖²`.
    pub fn epsilon_reduced(&self, reduced_norm_sq: f64, policy: &TruncationPolicy) -> Result<Truncated> {
        let series = self.reduced_series(reduced_norm_sq, policy)?;
        let damping = (self.alpha * (-reduced_norm_sq).ln_1p()).exp();
        Ok(Truncated { value: self.leading_constant() * damping * series.value, ..series })
    }

    /// [`Self::epsilon_reduced`] over a grid of `‖w̃‖²` values.
    pub fn epsilon_grid(
        &self,
        grid: &[f64],
        policy: &TruncationPolicy,
        backend: Backend,
    ) -> Result<Vec<Truncated>> {
        grid.iter().try_for_each(|&t| check_region(t))?;
        self.envelope()?;
        backend.map(grid.len(), |i| self.epsilon_reduced(grid[i], policy)).into_iter().collect()
    }

    /// Integer `t` beyond which ψ is monotone in `t`.
    pub fn psi_crossover(&self) -> Result<u64> {
        Ok(self.envelope()?.crossover)
    }

    fn envelope(&self) -> Result<&PsiEnvelope> {
        self.envelope
            .get_or_init(|| PsiEnvelope::build(self))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn unpack(&self) -> (u64, u64, f64, f64) {
        (self.params.n() as u64, self.params.m() as u64, self.params.nu(), self.alpha)
    }

    fn check_indices(&self, p: &MultiIndex, q: &MultiIndex) -> Result<()> {
        if p.len() != self.params.n() {
            return Err(Error::DimensionMismatch { expected: self.params.n(), got: p.len() });
        }
        if q.len() != self.params.m() {
            return Err(Error::DimensionMismatch { expected: self.params.m(), got: q.len() });
        }
        Ok(())
    }

    fn check_point(&self, point: &DomainPoint) -> Result<()> {
        if point.params() != &self.params {
            return Err(Error::InvalidParams("point belongs to a different domain".into()));
        }
        Ok(())
    }
}

fn lg(x: f64) -> f64 {
    log_gamma(x).expect("Γ arguments stay positive for α > m + n")
}

fn check_region(reduced_norm_sq: f64) -> Result<()> {
    if (0.0..=MAX_REDUCED_NORM_SQ).contains(&reduced_norm_sq) {
        Ok(())
    } else {
        Err(Error::OutOfRegion(reduced_norm_sq))
    }
}

/// Upper bound on `Σ_{j ≥ from} c_j` given `c_from = first` and
/// `c_{j+1}/c_j = T (j + a)/(j + 1)`.
fn geometric_tail(first: f64, from: usize, a: f64, t: f64) -> f64 {
    if first == 0.0 {
        return 0.0;
    }
    let ratio = if a >= 1.0 { t * (from as f64 + a) / (from as f64 + 1.0) } else { t };
    if ratio < 1.0 {
        first / (1.0 - ratio)
    } else {
        f64::INFINITY
    }
}

/// Suprema of ψ over integer tails `{t' > t}`.
///
/// `ψ = P/Q` with `P(t) = ((ν+1)α + t)ⁿ` and `Q` the product-form denominator,
/// both positive on `t ≥ 0`. Beyond every real root of `W = P'Q - PQ'` ψ is
/// monotone and tends to 1, so its supremum there is `max(ψ(c), 1)` with `c`
/// the crossover. The coefficients of `W` are computed exactly from the
/// binary values of `α` and `ν`; the crossover is the Fujiwara root bound.
#[derive(Debug, Clone)]
struct PsiEnvelope {
    crossover: u64,
    /// `suffix[k] = sup_{t ≥ k} ψ(t)` for `k ≤ crossover`.
    suffix: Vec<f64>,
}

impl PsiEnvelope {
    fn build(space: &WeightedSpace) -> Result<Self> {
        let exact = |v: f64| {
            BigRational::from_float(v).ok_or_else(|| Error::InvalidParams(format!("non-finite {v}")))
        };
        let (n, m, nu, alpha) = space.unpack();
        let (nu_r, alpha_r) = (exact(nu)?, exact(alpha)?);
        let t = RationalPolynomial::x();
        let constant = |c: Rational| RationalPolynomial::constant(c);
        let int = |v: i64| Rational::from_integer(v.into());

        let p = (&t + &constant((&nu_r + int(1)) * &alpha_r)).pow(n as u32);
        let base = constant(&alpha_r - int((m + n) as i64));
        let mut q = RationalPolynomial::zero();
        for d in 0..=n {
            let weight = num_traits::pow(nu_r.clone(), (n - d) as usize)
                * int(binomial(n, d).expect("d <= n") as i64);
            if weight.is_zero() {
                continue;
            }
            let shifted = &t + &constant(&alpha_r - int(d as i64));
            let term = &base.rising((n - d) as u32) * &shifted.rising(d as u32);
            q = &q + &term.scale(&weight);
        }
        let w = &(&p.derivative_x() * &q) - &(&p * &q.derivative_x());
        let coeffs = w.x_coefficients().expect("polynomial in t only");
        let bound = fujiwara_bound(&coeffs);
        if bound > MAX_CROSSOVER as f64 {
            return Err(Error::InvalidParams(format!(
                "psi monotonicity crossover {bound:e} is too large to tabulate"
            )));
        }
        let crossover = bound.ceil() as u64;
        let mut suffix = vec![0.0; crossover as usize + 1];
        let mut running = space.psi(crossover).max(1.0);
        for k in (0..=crossover).rev() {
            running = running.max(space.psi(k));
            suffix[k as usize] = running * SUP_SLACK;
        }
        Ok(Self { crossover, suffix })
    }

    /// `sup_{t' > t} ψ(t')`.
    fn sup_beyond(&self, t: u64, psi: impl Fn(u64) -> f64) -> f64 {
        let next = t + 1;
        if next <= self.crossover {
            self.suffix[next as usize]
        } else {
            psi(next).max(1.0) * SUP_SLACK
        }
    }
}

/// Fujiwara's bound `2 max_k |c_k / c_K|^{1/(K-k)}` on the moduli of the
/// roots of `Σ c_k t^k`; zero for constant polynomials.
fn fujiwara_bound(coeffs: &[Rational]) -> f64 {
    let Some(lead) = coeffs.iter().rposition(|c| !c.is_zero()) else {
        return 0.0;
    };
    let lead_value = &coeffs[lead];
    let mut bound: f64 = 0.0;
    for (k, c) in coeffs.iter().enumerate().take(lead) {
        if c.is_zero() {
            continue;
        }
        let ratio = (c / lead_value).to_f64().unwrap_or(f64::INFINITY).abs();
        bound = bound.max(ratio.powf(1.0 / (lead - k) as f64));
    }
    // One part in 10⁹ of headroom for the float conversion.
    2.0 * bound * (1.0 + 1e-9)
}

/// Truncated multinomial sum
/// `Σ_{q ∈ Nᵐ} Γ(|q|+s) / (Γ(s) ∏Γ(qᵢ+1)) x^{2q}`, which equals
/// `(1 - ‖x‖²)^{-s}` for `‖x‖ < 1`.
///
/// Degree-`t` slices `Σ_{|q|=t} ∏ yᵢ^{qᵢ}/qᵢ!` (with `yᵢ = xᵢ²`) are built
/// coordinate by coordinate as a binomial convolution in log space, not from
/// the closed form. The tail certificate uses the closed form of the slices
/// as a bound.
pub fn dangelo_sum(x: &[f64], s: f64, policy: &TruncationPolicy) -> Result<Truncated> {
    if x.is_empty() {
        return Err(Error::InvalidParams("x must have at least one component".into()));
    }
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidParams(format!("s must be positive, got {s}")));
    }
    let y: Vec<f64> = x.iter().map(|v| v * v).collect();
    let total: f64 = y.iter().sum();
    if !(total < 1.0) {
        return Err(Error::InvalidParams(format!("|x|^2 = {total} must be below 1")));
    }
    let ln_y: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let max_degree = policy.max_degree;

    // ln t!
    let mut ln_fact = vec![0.0; max_degree + 2];
    for t in 1..ln_fact.len() {
        ln_fact[t] = ln_fact[t - 1] + (t as f64).ln();
    }
    // stages[j][t] = ln( t! Σ_{|q|=t} ∏_{i≤j} yᵢ^{qᵢ}/qᵢ! )
    let mut stages: Vec<Vec<f64>> = vec![Vec::with_capacity(max_degree + 1); y.len()];
    let mut ln_rising_over_fact = 0.0; // ln (s)_t / t!
    let mut sum = 0.0;
    let mut tail = f64::INFINITY;
    for t in 0..=max_degree {
        if t > 0 {
            ln_rising_over_fact += ((t - 1) as f64 + s).ln() - (t as f64).ln();
        }
        let first = if t == 0 { 0.0 } else { t as f64 * ln_y[0] };
        stages[0].push(first);
        for j in 1..y.len() {
            let (done, rest) = stages.split_at_mut(j);
            let prev = &done[j - 1];
            let mut logs = vec![prev[t]];
            if y[j] > 0.0 {
                for k in 1..=t {
                    logs.push(ln_fact[t] - ln_fact[k] - ln_fact[t - k] + k as f64 * ln_y[j] + prev[t - k]);
                }
            }
            rest[0].push(log_sum_exp(&logs));
        }
        let slice = stages[y.len() - 1][t];
        let term = (ln_rising_over_fact + slice).exp();
        sum += term;

        let next = (ln_rising_over_fact + ((t as f64 + s) / (t as f64 + 1.0)).ln()
            + (t + 1) as f64 * total.ln())
        .exp();
        tail = geometric_tail(next, t + 1, s, total);
        if term <= policy.tail_tol * sum && tail <= policy.tail_tol * sum {
            return Ok(Truncated { value: sum, degree: t, tail_bound: tail / sum });
        }
    }
    Err(Error::TruncationExhausted { degree: max_degree, bound: tail / sum })
}

fn log_sum_exp(logs: &[f64]) -> f64 {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::C64;
    use crate::sampling::MemberSampler;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn space(n: usize, m: usize, mu: f64, nu: f64, alpha: f64) -> WeightedSpace {
        WeightedSpace::new(DomainParams::new(n, m, mu, nu).unwrap(), alpha).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn nontriviality_is_strict() {
        let p11 = DomainParams::new(1, 1, 1.0, 0.0).unwrap();
        assert!(!is_nontrivial(&p11, 2.0));
        assert!(is_nontrivial(&p11, 2.01));
        let p23 = DomainParams::new(2, 3, 1.0, 0.0).unwrap();
        assert!(!is_nontrivial(&p23, 5.0));
        assert!(matches!(WeightedSpace::new(p11, 2.0), Err(Error::TrivialSpace { .. })));
    }

    #[test]
    fn chi_examples() {
        let s = space(1, 1, 1.0, 0.0, 4.0);
        assert!(rel(s.chi(0), 8.0) < 1e-14);
        assert!(rel(s.chi(1), 30.0) < 1e-14);
        // ν = -1/2: χ = Γ(α+t)/Γ(α-2)
        let s = space(1, 1, 1.0, -0.5, 4.0);
        for t in 0..30u64 {
            let expected = (lg(4.0 + t as f64) - lg(2.0)).exp();
            assert!(rel(s.chi(t), expected) < 1e-12, "t={t}");
        }
    }

    #[test]
    fn psi_examples() {
        let s = space(1, 1, 1.0, 0.0, 4.0);
        assert!(rel(s.psi(0), 4.0 / 3.0) < 1e-15);
        assert!(rel(s.psi_gamma_form(0), 4.0 / 3.0) < 1e-13);
        let s = space(1, 1, 1.0, -0.5, 4.0);
        for t in 0..=50 {
            assert!((s.psi(t) - 1.0).abs() < 1e-12);
            assert!((s.psi_gamma_form(t) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn psi_tends_to_one() {
        for (n, m, nu) in [(1, 1, 0.0), (2, 3, 1.0), (3, 1, -0.5)] {
            let s = space(n, m, 1.0, nu, (n + m) as f64 + 2.5);
            assert!((s.psi(10_000) - 1.0).abs() < 1e-2);
            assert!((s.psi_gamma_form(10_000) - 1.0).abs() < 1e-2);
        }
    }

    #[test]
    fn monomial_norm_examples() {
        let s = space(1, 1, 1.0, 0.0, 4.0);
        let norm = |p: u32, q: u32| s.monomial_norm_sq(&vec![p].into(), &vec![q].into()).unwrap();
        assert!(rel(norm(0, 0), 1.0 / 8.0) < 1e-14);
        assert!(rel(norm(1, 0), 1.0 / 32.0) < 1e-14);
        assert!(rel(norm(0, 1), 1.0 / 30.0) < 1e-14);
        let s3 = space(1, 1, 1.0, 0.0, 3.0);
        let n3 = s3.monomial_norm_sq(&vec![0].into(), &vec![0].into()).unwrap();
        assert!(rel(n3, 1.0 / 3.0) < 1e-14);
        assert!(s.monomial_norm_sq(&vec![0, 0].into(), &vec![0].into()).is_err());
    }

    #[test]
    fn multi_index_enumeration() {
        let all = multi_indices(3, 4);
        // C(4 + 3, 3)
        assert_eq!(all.len(), 35);
        assert!(all.windows(2).all(|w| w[0].degree() <= w[1].degree()));
        assert_eq!(all[0], MultiIndex::zeros(3));
    }

    #[test]
    fn kernel_at_zero_fiber_is_single_term() {
        let s = space(2, 1, 0.7, 0.3, 5.0);
        let p = *s.params();
        let z = vec![C64::new(0.3, -0.4), C64::new(0.1, 0.2)];
        let pt = p.point(z, vec![C64::new(0.0, 0.0)]).unwrap();
        let k = s.kernel_diag(&pt, &TruncationPolicy::default()).unwrap();
        let expected = s.leading_constant() * s.psi(0) * (0.7 * 1.3 * 5.0 * pt.z_norm_sq()).exp();
        assert!(rel(k.value, expected) < 1e-14);
        assert_eq!(k.tail_bound, 0.0);
    }

    #[test]
    fn balanced_kernel_closed_form() {
        let s = space(1, 1, 1.0, -0.5, 4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sampler = MemberSampler::new(*s.params()).with_z_scale(0.5);
        for _ in 0..20 {
            let pt = sampler.sample(&mut rng);
            let k = s.kernel_diag(&pt, &TruncationPolicy::default()).unwrap();
            let t = pt.reduced_norm_sq();
            let expected = 6.0 * (2.0 * pt.z_norm_sq()).exp() * (1.0 - t).powi(-4);
            assert!(rel(k.value, expected) < 1e-9);
        }
    }

    #[test]
    fn epsilon_examples() {
        let policy = TruncationPolicy::default();
        let s = space(1, 1, 1.0, -0.5, 4.0);
        for t in [0.0, 0.3, 0.9, 0.95] {
            assert!(rel(s.epsilon_reduced(t, &policy).unwrap().value, 6.0) < 1e-9);
        }
        let s = space(1, 2, 1.0, -1.0 / 3.0, 5.0);
        for t in [0.0, 0.5, 0.95] {
            assert!(rel(s.epsilon_reduced(t, &policy).unwrap().value, 24.0) < 1e-9);
        }
        // ν = 0: ε(T) = 6 + 2(1 - T) in closed form
        let s = space(1, 1, 1.0, 0.0, 4.0);
        for t in [0.0, 0.2, 0.5, 0.9] {
            let e = s.epsilon_reduced(t, &policy).unwrap();
            assert!(rel(e.value, 6.0 + 2.0 * (1.0 - t)) < 1e-9, "t={t}");
        }
    }

    #[test]
    fn epsilon_equals_damped_kernel() {
        let s = space(2, 2, 0.8, 0.7, 6.5);
        let policy = TruncationPolicy::default();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let sampler = MemberSampler::new(*s.params()).with_z_scale(0.6);
        for _ in 0..20 {
            let pt = sampler.sample(&mut rng);
            let k = s.kernel_diag(&pt, &policy).unwrap().value;
            let e = s.epsilon(&pt, &policy).unwrap().value;
            assert!(rel((-s.alpha() * pt.potential()).exp() * k, e) < 1e-10);
        }
    }

    #[test]
    fn out_of_region_is_reported() {
        let s = space(1, 1, 1.0, 0.0, 4.0);
        let policy = TruncationPolicy::default();
        assert_eq!(s.epsilon_reduced(0.96, &policy), Err(Error::OutOfRegion(0.96)));
        assert!(s.epsilon_reduced(-0.1, &policy).is_err());
    }

    #[test]
    fn exhausted_policy_is_reported() {
        let s = space(1, 1, 1.0, 0.0, 4.0);
        let tight = TruncationPolicy::new(5, 1e-10).unwrap();
        assert!(matches!(s.epsilon_reduced(0.9, &tight), Err(Error::TruncationExhausted { degree: 5, .. })));
    }

    #[test]
    fn series_terms_are_positive() {
        let s = space(2, 1, 1.0, -0.7, 3.2);
        let terms = s.series_terms(0.9, 300);
        assert!(terms.iter().all(|&t| t > 0.0));
    }

    #[test]
    fn crossover_is_small_for_moderate_params() {
        assert_eq!(space(1, 1, 1.0, -0.5, 4.0).psi_crossover().unwrap(), 0);
        for (n, m, nu, alpha) in [(1, 1, 0.0, 4.0), (3, 3, 2.5, 16.0), (2, 1, -0.9, 3.5)] {
            let c = space(n, m, 1.0, nu, alpha).psi_crossover().unwrap();
            assert!(c < 10_000, "crossover {c}");
        }
    }

    #[test]
    fn dangelo_examples() {
        let policy = TruncationPolicy::default();
        assert_eq!(dangelo_sum(&[0.0, 0.0], 2.5, &policy).unwrap().value, 1.0);
        let v = dangelo_sum(&[0.5f64.sqrt()], 1.0, &policy).unwrap().value;
        assert!(rel(v, 2.0) < 1e-10);
        let x = [0.2f64.sqrt(), 0.1f64.sqrt()];
        let v = dangelo_sum(&x, 3.5, &policy).unwrap().value;
        assert!(rel(v, 0.7f64.powf(-3.5)) < 1e-10);
        assert!(dangelo_sum(&[0.8, 0.8], 1.0, &policy).is_err());
    }

    #[test]
    fn backends_agree_on_grids() {
        let s = space(2, 2, 1.0, 0.5, 7.0);
        let grid: Vec<f64> = (0..20).map(|i| i as f64 / 20.0).collect();
        let policy = TruncationPolicy::default();
        let a = s.epsilon_grid(&grid, &policy, Backend::Sequential).unwrap();
        let b = s.epsilon_grid(&grid, &policy, Backend::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
