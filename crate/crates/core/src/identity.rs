//! Exact verification of the balancedness criterion through the polynomial
//! identity
//!
//! ```text
//! [(ν+1)x + y]ⁿ = Σ_{d=0}^{n} C(n,d) ν^{n-d} (x - m - n)_{n-d} (x - d + y)_d
//! ```
//!
//! compared coefficientwise over the rationals.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::bergman::is_nontrivial;
use crate::domain::DomainParams;
use crate::specfn::binomial;

pub type Rational = BigRational;

/// Floating `ν` closer than this to a rational with small denominator is
/// snapped to it before exact checking.
pub const SNAP_TOL: f64 = 1e-12;
pub const SNAP_MAX_DENOMINATOR: u64 = 1_000_000;

/// Polynomial in `(x, y)` with exact rational coefficients; zero coefficients
/// are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RationalPolynomial {
    terms: BTreeMap<(u32, u32), Rational>,
}

impl RationalPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::monomial(c, 0, 0)
    }

    pub fn x() -> Self {
        Self::monomial(Rational::one(), 1, 0)
    }

    pub fn y() -> Self {
        Self::monomial(Rational::one(), 0, 1)
    }

    /// `c · x^i y^j`.
    pub fn monomial(c: Rational, i: u32, j: u32) -> Self {
        let mut p = Self::zero();
        p.add_term((i, j), c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of `x^i y^j`.
    pub fn coefficient(&self, i: u32, j: u32) -> Rational {
        self.terms.get(&(i, j)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &Rational)> {
        self.terms.iter()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|(i, j)| i + j).max()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { terms: self.terms.iter().map(|(k, v)| (*k, v * c)).collect() }
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::one(), |acc, _| &acc * self)
    }

    /// Rising factorial `(self)_k = self (self+1) ⋯ (self+k-1)`.
    pub fn rising(&self, k: u32) -> Self {
        (0..k).fold(Self::one(), |acc, j| {
            &acc * &(self + &Self::constant(Rational::from_integer(j.into())))
        })
    }

    pub fn derivative_x(&self) -> Self {
        let mut out = Self::zero();
        for (&(i, j), c) in &self.terms {
            if i > 0 {
                out.add_term((i - 1, j), c * Rational::from_integer(i.into()));
            }
        }
        out
    }

    /// Substitutes `y := replacement`.
    pub fn substitute_y(&self, replacement: &RationalPolynomial) -> Self {
        let mut out = Self::zero();
        for (&(i, j), c) in &self.terms {
            let term = &Self::monomial(c.clone(), i, 0) * &replacement.pow(j);
            out = &out + &term;
        }
        out
    }

    pub fn eval(&self, x: &Rational, y: &Rational) -> Rational {
        self.terms.iter().fold(Rational::zero(), |acc, (&(i, j), c)| {
            acc + c * num_traits::pow(x.clone(), i as usize) * num_traits::pow(y.clone(), j as usize)
        })
    }

    /// Coefficients of a polynomial in `x` alone, constant term first.
    /// `None` if any term involves `y`.
    pub fn x_coefficients(&self) -> Option<Vec<Rational>> {
        if self.terms.keys().any(|&(_, j)| j > 0) {
            return None;
        }
        let deg = self.degree().unwrap_or(0) as usize;
        let mut out = vec![Rational::zero(); deg + 1];
        for (&(i, _), c) in &self.terms {
            out[i as usize] = c.clone();
        }
        Some(out)
    }

    fn add_term(&mut self, key: (u32, u32), c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(key).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }
}

impl Add for &RationalPolynomial {
    type Output = RationalPolynomial;

    fn add(self, rhs: Self) -> RationalPolynomial {
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term(*k, c.clone());
        }
        out
    }
}

impl Neg for &RationalPolynomial {
    type Output = RationalPolynomial;

    fn neg(self) -> RationalPolynomial {
        RationalPolynomial { terms: self.terms.iter().map(|(k, v)| (*k, -v)).collect() }
    }
}

impl Sub for &RationalPolynomial {
    type Output = RationalPolynomial;

    fn sub(self, rhs: Self) -> RationalPolynomial {
        self + &(-rhs)
    }
}

impl Mul for &RationalPolynomial {
    type Output = RationalPolynomial;

    fn mul(self, rhs: Self) -> RationalPolynomial {
        let mut out = RationalPolynomial::zero();
        for (&(i1, j1), c1) in &self.terms {
            for (&(i2, j2), c2) in &rhs.terms {
                out.add_term((i1 + i2, j1 + j2), c1 * c2);
            }
        }
        out
    }
}

impl fmt::Display for RationalPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        // Highest total degree first.
        let mut keys: Vec<_> = self.terms.keys().copied().collect();
        keys.sort_by_key(|k| std::cmp::Reverse((k.0 + k.1, k.0)));
        for (idx, key) in keys.iter().enumerate() {
            let c = &self.terms[key];
            let mag = c.abs();
            if idx == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if c.is_negative() { '-' } else { '+' })?;
            }
            let vars = match key {
                (0, 0) => String::new(),
                (i, 0) => power("x", *i),
                (0, j) => power("y", *j),
                (i, j) => format!("{}*{}", power("x", *i), power("y", *j)),
            };
            match (mag.is_one(), vars.is_empty()) {
                (true, false) => write!(f, "{vars}")?,
                (_, true) => write!(f, "{mag}")?,
                (false, false) => write!(f, "{mag}*{vars}")?,
            }
        }
        Ok(())
    }
}

fn power(var: &str, k: u32) -> String {
    if k == 1 {
        var.to_string()
    } else {
        format!("{var}^{k}")
    }
}

fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

fn rational_pow(base: &Rational, k: u32) -> Rational {
    num_traits::pow(base.clone(), k as usize)
}

/// `[(ν+1)x + y]ⁿ`.
pub fn expand_lhs(n: u32, nu: &Rational) -> RationalPolynomial {
    let linear = &RationalPolynomial::x().scale(&(nu + Rational::one())) + &RationalPolynomial::y();
    linear.pow(n)
}

/// `Σ_d C(n,d) ν^{n-d} (x - m - n)_{n-d} (x - d + y)_d`.
pub fn expand_rhs(n: u32, m: u32, nu: &Rational) -> RationalPolynomial {
    let x = RationalPolynomial::x();
    let y = RationalPolynomial::y();
    let shifted_x = &x + &RationalPolynomial::constant(int(-(m as i64) - n as i64));
    let mut out = RationalPolynomial::zero();
    for d in 0..=n {
        let weight = rational_pow(nu, n - d)
            * Rational::from_integer(BigInt::from(binomial(n as u64, d as u64).expect("d <= n")));
        if weight.is_zero() {
            continue;
        }
        let fiber = &(&x + &y) + &RationalPolynomial::constant(int(-(d as i64)));
        let term = &shifted_x.rising(n - d) * &fiber.rising(d);
        out = &out + &term.scale(&weight);
    }
    out
}

/// Whether both sides agree coefficientwise.
pub fn identity_holds(n: u32, m: u32, nu: &Rational) -> bool {
    expand_lhs(n, nu) == expand_rhs(n, m, nu)
}

/// The unique `ν` making the identity hold, if any.
///
/// For `n = 1` the difference of the two sides is affine in `ν`, so it is
/// solved exactly from two evaluations and then confirmed. For `n ≥ 2` the
/// restriction to `x + y = 1` demands `(x + 1/ν)ⁿ = ∏ⱼ (x - m - j)`, whose
/// right side has distinct roots, so no `ν` exists.
pub fn solve_balanced_nu(n: u32, m: u32) -> Option<Rational> {
    if n != 1 {
        return None;
    }
    let diff = |nu: &Rational| &expand_lhs(n, nu) - &expand_rhs(n, m, nu);
    let d0 = diff(&Rational::zero());
    let d1 = diff(&Rational::one());
    let slope = &d1 - &d0;
    let mut candidate: Option<Rational> = None;
    for (&(i, j), s) in slope.terms() {
        let nu = -d0.coefficient(i, j) / s;
        match &candidate {
            Some(prev) if *prev != nu => return None,
            _ => candidate = Some(nu),
        }
    }
    // Terms of d0 with zero slope must vanish on their own.
    let nu = candidate?;
    identity_holds(n, m, &nu).then_some(nu)
}

/// Best rational approximation of `x` with denominator at most
/// `max_denominator`, provided it lies within `tol` of `x`.
pub fn snap_rational(x: f64, max_denominator: u64, tol: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let (mut h_prev, mut h) = (0i128, 1i128);
    let (mut k_prev, mut k) = (1i128, 0i128);
    let mut rest = x;
    let mut best = None;
    for _ in 0..64 {
        let a = rest.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let h_next = ai * h + h_prev;
        let k_next = ai * k + k_prev;
        if k_next > max_denominator as i128 {
            break;
        }
        (h_prev, h, k_prev, k) = (h, h_next, k, k_next);
        let approx = h as f64 / k as f64;
        if (approx - x).abs() <= tol {
            best = Some(Rational::new(BigInt::from(h), BigInt::from(k)));
            break;
        }
        let frac = rest - a;
        if frac == 0.0 {
            break;
        }
        rest = 1.0 / frac;
    }
    best
}

/// Exact `ν` for a floating-point input, per [`SNAP_TOL`] and
/// [`SNAP_MAX_DENOMINATOR`].
pub fn snap_nu(nu: f64) -> Option<Rational> {
    snap_rational(nu, SNAP_MAX_DENOMINATOR, SNAP_TOL)
}

/// The three conditions of the balancedness criterion, plus the verdict of
/// the exact identity check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalanceVerdict {
    /// `α > m + n`.
    pub alpha_condition: bool,
    /// `n = 1`.
    pub n_condition: bool,
    /// `ν = -1/(m+1)`, compared exactly.
    pub nu_condition: bool,
    /// The polynomial identity holds for `(n, m, ν)`.
    pub identity_holds: bool,
}

impl BalanceVerdict {
    pub fn balanced(&self) -> bool {
        self.alpha_condition && self.identity_holds
    }
}

pub fn balance_verdict_exact(n: u32, m: u32, nu: &Rational, alpha: f64) -> BalanceVerdict {
    let target = -Rational::new(BigInt::one(), BigInt::from(m + 1));
    BalanceVerdict {
        alpha_condition: alpha > (m + n) as f64,
        n_condition: n == 1,
        nu_condition: *nu == target,
        identity_holds: identity_holds(n, m, nu),
    }
}

/// Verdict for floating parameters. A `ν` that does not snap to a small
/// rational fails the `ν` and identity conditions.
pub fn balance_verdict(params: &DomainParams, alpha: f64) -> BalanceVerdict {
    let (n, m) = (params.n() as u32, params.m() as u32);
    match snap_nu(params.nu()) {
        Some(nu) => balance_verdict_exact(n, m, &nu, alpha),
        None => BalanceVerdict {
            alpha_condition: is_nontrivial(params, alpha),
            n_condition: n == 1,
            nu_condition: false,
            identity_holds: false,
        },
    }
}

pub fn is_balanced(params: &DomainParams, alpha: f64) -> bool {
    balance_verdict(params, alpha).balanced()
}

pub fn is_balanced_exact(n: u32, m: u32, nu: &Rational, alpha: f64) -> bool {
    balance_verdict_exact(n, m, nu, alpha).balanced()
}

/// `ν` as a float, for handing exact values to the numerical modules.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
