use hartogs::bergman::{multi_indices, MultiIndex, WeightedSpace};
use hartogs::domain::{DomainPoint, C64};
use hartogs::identity::balance_verdict;
use hartogs::metric::{hessian, metric_det};
use hartogs::oracle::{monomial_norm_mc, McEstimate};
use hartogs::parallel::Backend;

use crate::report::{Cell, Table};
use crate::{Failure, PointArgs, RunConfig};

pub fn check_balanced(cfg: &RunConfig) -> Result<Table, Failure> {
    let alpha = cfg.alpha()?;
    let p = &cfg.params;
    let verdict = balance_verdict(p, alpha);
    let mut failed = Vec::new();
    if !verdict.alpha_condition {
        failed.push("alpha condition");
    }
    if !verdict.n_condition {
        failed.push("n condition");
    }
    if !verdict.nu_condition {
        failed.push("nu condition");
    }
    let epsilon = verdict
        .balanced()
        .then(|| WeightedSpace::new(*p, alpha).map(|s| s.leading_constant()))
        .transpose()?;
    let mut table = Table::new(&[
        "n",
        "m",
        "mu",
        "nu",
        "alpha",
        "balanced",
        "alpha_condition",
        "n_condition",
        "nu_condition",
        "identity_holds",
        "epsilon",
        "failed_conditions",
    ]);
    table.push(vec![
        p.n().into(),
        p.m().into(),
        p.mu().into(),
        p.nu().into(),
        alpha.into(),
        verdict.balanced().into(),
        verdict.alpha_condition.into(),
        verdict.n_condition.into(),
        verdict.nu_condition.into(),
        verdict.identity_holds.into(),
        epsilon.into(),
        failed.join("; ").into(),
    ]);
    Ok(table)
}

pub fn epsilon_grid(cfg: &RunConfig, grid: &[f64]) -> Result<Table, Failure> {
    let space = WeightedSpace::new(cfg.params, cfg.alpha()?)?;
    let values = space.epsilon_grid(grid, &cfg.truncation, Backend::default())?;
    let mut table = Table::new(&["w_tilde_sq", "epsilon", "degree", "tail_bound"]);
    for (t, v) in grid.iter().zip(values) {
        table.push(vec![(*t).into(), v.value.into(), v.degree.into(), v.tail_bound.into()]);
    }
    Ok(table)
}

fn join(index: &MultiIndex) -> String {
    index.as_slice().iter().map(u32::to_string).collect::<Vec<_>>().join(" ")
}

pub fn norm(cfg: &RunConfig, p: &[u32], q: &[u32], oracle: bool) -> Result<Table, Failure> {
    let alpha = cfg.alpha()?;
    let space = WeightedSpace::new(cfg.params, alpha)?;
    let (p, q) = (MultiIndex::new(p.to_vec()), MultiIndex::new(q.to_vec()));
    let value = space.monomial_norm_sq(&p, &q)?;
    if !oracle {
        let mut table = Table::new(&["p", "q", "norm_sq"]);
        table.push(vec![join(&p).into(), join(&q).into(), value.into()]);
        return Ok(table);
    }
    let est = monomial_norm_mc(&cfg.params, alpha, &p, &q, &cfg.mc)?;
    let mut table = Table::new(&["p", "q", "norm_sq", "mc_mean", "mc_std_error", "z_score", "within_3se", "samples"]);
    table.push(vec![
        join(&p).into(),
        join(&q).into(),
        value.into(),
        est.mean.into(),
        est.std_error.into(),
        est.z_score(value).into(),
        est.within(value, 3.0).into(),
        est.samples.into(),
    ]);
    Ok(table)
}

pub fn point(cfg: &RunConfig, args: &PointArgs) -> Result<DomainPoint, Failure> {
    let p = &cfg.params;
    if args.at_origin {
        return Ok(p.origin());
    }
    let z = if args.z.is_empty() { vec![C64::new(0.0, 0.0); p.n()] } else { args.z.clone() };
    match args.w_tilde_sq {
        Some(t) => {
            if !(0.0..1.0).contains(&t) {
                return Err(Failure::Usage(format!("--w-tilde-sq must lie in [0, 1), got {t}")));
            }
            let mut w_tilde = vec![C64::new(0.0, 0.0); p.m()];
            w_tilde[0] = C64::new(t.sqrt(), 0.0);
            Ok(p.point_from_reduced(z, w_tilde)?)
        }
        None => {
            let w = if args.w.is_empty() { vec![C64::new(0.0, 0.0); p.m()] } else { args.w.clone() };
            Ok(p.point(z, w)?)
        }
    }
}

pub fn det(cfg: &RunConfig, args: &PointArgs) -> Result<Table, Failure> {
    let pt = point(cfg, args)?;
    let closed = metric_det(&pt);
    let numeric = hessian(&pt).determinant();
    let mut table = Table::new(&["z_norm_sq", "w_tilde_sq", "det", "det_hessian", "relative_difference"]);
    table.push(vec![
        pt.z_norm_sq().into(),
        pt.reduced_norm_sq().into(),
        closed.into(),
        numeric.into(),
        ((numeric - closed).abs() / closed).into(),
    ]);
    Ok(table)
}

pub fn kernel(cfg: &RunConfig, args: &PointArgs) -> Result<Table, Failure> {
    let space = WeightedSpace::new(cfg.params, cfg.alpha()?)?;
    let pt = point(cfg, args)?;
    let k = space.kernel_diag(&pt, &cfg.truncation)?;
    let eps = space.epsilon(&pt, &cfg.truncation)?;
    let mut table = Table::new(&["z_norm_sq", "w_tilde_sq", "kernel", "epsilon", "degree", "tail_bound"]);
    table.push(vec![
        pt.z_norm_sq().into(),
        pt.reduced_norm_sq().into(),
        k.value.into(),
        eps.value.into(),
        k.degree.into(),
        k.tail_bound.into(),
    ]);
    Ok(table)
}

/// Estimate within three standard errors, rerunning once at four times the
/// samples. Returns the estimate that decided and whether a rerun happened.
pub fn judge(exact: f64, estimate: impl Fn(u64) -> Result<McEstimate, Failure>) -> Result<(McEstimate, bool), Failure> {
    let first = estimate(1)?;
    if first.within(exact, 3.0) {
        return Ok((first, false));
    }
    Ok((estimate(4)?, true))
}

pub fn oracle_compare(cfg: &RunConfig, degree: u32) -> Result<Table, Failure> {
    let alpha = cfg.alpha()?;
    let space = WeightedSpace::new(cfg.params, alpha)?;
    let mut table = Table::new(&[
        "p", "q", "closed_form", "mc_mean", "mc_std_error", "z_score", "within_3se", "rerun", "samples",
    ]);
    let mut all_ok = true;
    for p in multi_indices(cfg.params.n(), degree) {
        for q in multi_indices(cfg.params.m(), degree) {
            let exact = space.monomial_norm_sq(&p, &q)?;
            let (est, rerun) = judge(exact, |k| {
                Ok(monomial_norm_mc(&cfg.params, alpha, &p, &q, &cfg.mc.scaled(k)?)?)
            })?;
            let ok = est.within(exact, 3.0);
            all_ok &= ok;
            table.push(vec![
                join(&p).into(),
                join(&q).into(),
                exact.into(),
                est.mean.into(),
                est.std_error.into(),
                est.z_score(exact).into(),
                ok.into(),
                rerun.into(),
                Cell::from(est.samples),
            ]);
        }
    }
    if all_ok {
        Ok(table)
    } else {
        Err(Failure::Verification(table))
    }
}
