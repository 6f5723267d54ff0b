//! Verification suites. Each check reports its worst residual against a
//! tolerance together with the case that produced it.

use hartogs::bergman::{multi_indices, MultiIndex, WeightedSpace};
use hartogs::domain::{DomainParams, DomainPoint};
use hartogs::identity::{identity_holds, solve_balanced_nu, Rational};
use hartogs::metric::{check_invariance, check_unitary_invariance, hessian, hessian_fd_richardson, metric_det, FD_STEP};
use hartogs::oracle::{dirichlet_closed_form, dirichlet_simplex_mc, monomial_norm_mc, McConfig};
use hartogs::sampling::{complex_gaussian, random_unitary, MemberSampler};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::commands::judge;
use crate::report::Table;
use crate::{Failure, RunConfig, Suite};

const INVARIANCE_POINTS: usize = 100;
const FD_POINTS: usize = 20;
const ORACLE_RANDOM_CASES: usize = 10;

/// Worst residual of one check.
struct Check {
    suite: &'static str,
    name: String,
    cases: usize,
    worst: f64,
    worst_case: String,
    tolerance: f64,
    passed: Option<bool>,
}

impl Check {
    fn new(suite: &'static str, name: impl Into<String>, tolerance: f64) -> Self {
        Self { suite, name: name.into(), cases: 0, worst: 0.0, worst_case: String::new(), tolerance, passed: None }
    }

    fn record(&mut self, residual: f64, case: impl FnOnce() -> String) {
        self.cases += 1;
        if residual > self.worst || residual.is_nan() || self.worst_case.is_empty() {
            self.worst = residual;
            self.worst_case = case();
        }
    }

    fn passed(&self) -> bool {
        self.passed.unwrap_or(self.worst <= self.tolerance)
    }
}

pub fn run(cfg: &RunConfig, suite: Suite) -> Result<Table, Failure> {
    let mut checks = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Identity {
        identity(&mut checks);
    }
    if all || suite == Suite::Psi {
        psi(&mut checks)?;
    }
    if all || suite == Suite::Invariance {
        invariance(cfg, &mut checks)?;
    }
    if all || suite == Suite::Oracle {
        oracle(cfg, &mut checks)?;
    }
    finish(&checks)
}

fn finish(checks: &[Check]) -> Result<Table, Failure> {
    let mut table = Table::new(&["suite", "check", "cases", "max_residual", "tolerance", "passed", "worst_case"]);
    let mut ok = true;
    for c in checks {
        ok &= c.passed();
        table.push(vec![
            c.suite.into(),
            c.name.clone().into(),
            c.cases.into(),
            c.worst.into(),
            c.tolerance.into(),
            c.passed().into(),
            c.worst_case.clone().into(),
        ]);
    }
    if ok {
        Ok(table)
    } else {
        Err(Failure::Verification(table))
    }
}

fn describe_params(p: &DomainParams, alpha: f64) -> String {
    format!("n={} m={} mu={} nu={} alpha={alpha}", p.n(), p.m(), p.mu(), p.nu())
}

fn describe_point(seed: u64, pt: &DomainPoint, alpha: f64) -> String {
    let fmt = |v: &[hartogs::domain::C64]| v.iter().map(|c| format!("{c}")).collect::<Vec<_>>().join(" ");
    format!("seed={seed} {} z=[{}] w=[{}]", describe_params(pt.params(), alpha), fmt(pt.z()), fmt(pt.w()))
}

/// Truth table of the balancing identity: it holds for `n = 1` exactly at
/// `ν = -1/(m+1)` and never for `n ≥ 2`. Residuals count mismatches.
fn identity(checks: &mut Vec<Check>) {
    let mut sweep: Vec<Rational> = (2..=13).map(|k| Rational::new((-1).into(), k.into())).collect();
    for den in 1..=6i64 {
        for num in (1 - den)..=(3 * den) {
            sweep.push(Rational::new(num.into(), den.into()));
        }
    }
    sweep.sort();
    sweep.dedup();
    for m in 1..=12u32 {
        let mut check = Check::new("identity", format!("m={m}"), 0.0);
        let critical = Rational::new((-1).into(), (m as i64 + 1).into());
        let mut mismatches = Vec::new();
        let mut cases = sweep.len() + 1;
        for nu in &sweep {
            if identity_holds(1, m, nu) != (*nu == critical) {
                mismatches.push(format!("n=1 nu={nu}"));
            }
        }
        if solve_balanced_nu(1, m) != Some(critical.clone()) {
            mismatches.push("n=1 solver".into());
        }
        if m <= 6 {
            cases += 3 * (sweep.len() + 1);
            for n in 2..=4 {
                for nu in &sweep {
                    if identity_holds(n, m, nu) {
                        mismatches.push(format!("n={n} nu={nu}"));
                    }
                }
                if solve_balanced_nu(n, m).is_some() {
                    mismatches.push(format!("n={n} solver"));
                }
            }
        }
        check.record(mismatches.len() as f64, || mismatches.join("; "));
        check.cases = cases;
        checks.push(check);
    }
}

fn psi(checks: &mut Vec<Check>) -> Result<(), Failure> {
    let mut dual = Check::new("psi", "product form vs gamma form (relative)", 1e-12);
    let mut limit = Check::new("psi", "|psi(alpha, 10^4) - 1|", 1e-2);
    for n in 1..=3 {
        for m in 1..=3 {
            for nu in [-0.5, -0.25, 0.0, 0.5, 1.0, 2.5] {
                let p = DomainParams::new(n, m, 1.0, nu)?;
                for k in 1..=20 {
                    let alpha = (n + m) as f64 + 0.5 * k as f64;
                    let space = WeightedSpace::new(p, alpha)?;
                    for t in 0..=100u64 {
                        let a = space.psi(t);
                        let residual = (space.psi_gamma_form(t) - a).abs() / a;
                        dual.record(residual, || format!("{} qdeg={t}", describe_params(&p, alpha)));
                    }
                    let residual = (space.psi(10_000) - 1.0).abs().max((space.psi_gamma_form(10_000) - 1.0).abs());
                    limit.record(residual, || describe_params(&p, alpha));
                }
            }
        }
    }
    checks.push(dual);
    checks.push(limit);
    Ok(())
}

fn invariance(cfg: &RunConfig, checks: &mut Vec<Check>) -> Result<(), Failure> {
    let p = cfg.params;
    let alpha = cfg.alpha.unwrap_or(p.dim() as f64 + 2.0);
    let space = WeightedSpace::new(p, alpha)?;
    let seed = cfg.mc.seed();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = MemberSampler::new(p);
    let tail_tol = cfg.truncation.tail_tol();
    let mut det = Check::new("invariance", "hessian determinant vs closed form (relative)", 1e-8);
    let mut fd = Check::new("invariance", "finite-difference hessian (relative to scale)", 1e-5);
    let mut translation = Check::new("invariance", "translation pull-back residual", 1e-6);
    let mut unitary = Check::new("invariance", "unitary pull-back residual", 1e-6);
    let mut eps = Check::new("invariance", "epsilon under automorphisms (relative)", 10.0 * tail_tol);
    for i in 0..INVARIANCE_POINTS {
        let pt = sampler.sample(&mut rng);
        let case = || describe_point(seed, &pt, alpha);
        let h = hessian(&pt);
        let closed = metric_det(&pt);
        det.record((h.determinant() - closed).abs() / closed, case);
        if i < FD_POINTS {
            let approx = hessian_fd_richardson(&pt, FD_STEP)?;
            fd.record(approx.max_abs_diff(&h) / h.max_abs().max(1.0), case);
        }
        let a = complex_gaussian(&mut rng, p.n());
        translation.record(check_invariance(&pt, &a)?, case);
        let (u, v) = (random_unitary(&mut rng, p.n()), random_unitary(&mut rng, p.m()));
        unitary.record(check_unitary_invariance(&pt, &u, &v)?, case);
        let base = space.epsilon(&pt, &cfg.truncation)?.value;
        for image in [pt.apply_translation(&a)?, pt.apply_unitary_z(&u)?.apply_unitary_w(&v)?] {
            let moved = space.epsilon(&image, &cfg.truncation)?.value;
            eps.record((moved - base).abs() / base, case);
        }
    }
    checks.extend([det, fd, translation, unitary, eps]);
    Ok(())
}

fn oracle(cfg: &RunConfig, checks: &mut Vec<Check>) -> Result<(), Failure> {
    let seed = cfg.mc.seed();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mc = |offset: u64| -> Result<McConfig, Failure> {
        Ok(McConfig::new(cfg.mc.samples(), seed.wrapping_add(offset), cfg.mc.batch())?)
    };

    let mut exact = Check::new("oracle", "closed-form norms 1/8, 1/32, 1/30 (relative)", 1e-12);
    let reference = WeightedSpace::new(DomainParams::new(1, 1, 1.0, 0.0)?, 4.0)?;
    for (p, q, value) in [(0, 0, 1.0 / 8.0), (1, 0, 1.0 / 32.0), (0, 1, 1.0 / 30.0)] {
        let v = reference.monomial_norm_sq(&vec![p].into(), &vec![q].into())?;
        exact.record((v - value).abs() / value, || format!("n=1 m=1 mu=1 nu=0 alpha=4 p={p} q={q}"));
    }

    let mut dirichlet = Check::new("oracle", "dirichlet closed form vs MC (|z|)", 3.0);
    let mut cases: Vec<(Vec<f64>, f64, u32)> = vec![(vec![1.0], 2.0, 0), (vec![1.0, 1.0], 5.0, 1)];
    while cases.len() < 2 + ORACLE_RANDOM_CASES {
        let m = rng.random_range(1..=3usize);
        let k = rng.random_range(0..=2u32);
        let q = (0..m).map(|_| rng.random_range(0..=3) as f64).collect();
        cases.push((q, (m as u32 + k) as f64 + rng.random_range(0.0..3.0), k));
    }
    for (i, (q, alpha, k)) in cases.iter().enumerate() {
        let value = dirichlet_closed_form(q, *alpha, *k)?;
        let base = mc(i as u64)?;
        let (est, _) = judge(value, |f| Ok(dirichlet_simplex_mc(q, *alpha, *k, &base.scaled(f)?)?))?;
        dirichlet.record(est.z_score(value).abs(), || {
            format!("seed={} q={q:?} alpha={alpha} k={k}", base.seed())
        });
    }

    let mut norms = Check::new("oracle", "monomial norm closed form vs MC (|z|)", 3.0);
    let mut settings: Vec<(DomainParams, f64, MultiIndex, MultiIndex)> = [(0, 0), (1, 0), (0, 1)]
        .iter()
        .map(|&(p, q)| (*reference.params(), 4.0, vec![p].into(), vec![q].into()))
        .collect();
    while settings.len() < 3 + ORACLE_RANDOM_CASES {
        let (n, m) = (rng.random_range(1..=3usize), rng.random_range(1..=3usize));
        let params = DomainParams::new(n, m, rng.random_range(0.5..2.0), rng.random_range(-0.5..2.0))?;
        let alpha = (n + m) as f64 + rng.random_range(1.0..4.0);
        let ps = multi_indices(n, 2);
        let qs = multi_indices(m, 2);
        let p = ps[rng.random_range(0..ps.len())].clone();
        let q = qs[rng.random_range(0..qs.len())].clone();
        settings.push((params, alpha, p, q));
    }
    for (i, (params, alpha, p, q)) in settings.iter().enumerate() {
        let value = WeightedSpace::new(*params, *alpha)?.monomial_norm_sq(p, q)?;
        let base = mc(100 + i as u64)?;
        let (est, _) = judge(value, |f| Ok(monomial_norm_mc(params, *alpha, p, q, &base.scaled(f)?)?))?;
        norms.record(est.z_score(value).abs(), || {
            format!("seed={} {} p={:?} q={:?}", base.seed(), describe_params(params, *alpha), p.as_slice(), q.as_slice())
        });
    }
    checks.extend([exact, dirichlet, norms]);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Format;

    #[test]
    fn failing_check_serializes_its_case() {
        let mut good = Check::new("psi", "fine", 1.0);
        good.record(0.5, || "a".into());
        let mut bad = Check::new("oracle", "broken", 1e-3);
        bad.record(1e-4, || "seed=1 first".into());
        bad.record(0.2, || "seed=1 worst".into());
        bad.record(0.1, || "seed=1 later".into());
        let Err(Failure::Verification(table)) = finish(&[good, bad]) else {
            panic!("expected a verification failure");
        };
        let mut buf = Vec::new();
        table.write(Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("oracle,broken,3,2.0000000000000001e-1,1.0000000000000000e-3,false,seed=1 worst"));
        assert!(text.contains("psi,fine,1,5.0000000000000000e-1,1.0000000000000000e0,true,a"));
    }

    #[test]
    fn identity_rows_count_their_cases() {
        let mut checks = Vec::new();
        identity(&mut checks);
        assert_eq!(checks.len(), 12);
        assert!(checks.iter().all(Check::passed));
        assert!(checks[0].cases > checks[11].cases);
    }
}
