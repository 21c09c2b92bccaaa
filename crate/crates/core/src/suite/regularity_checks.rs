use super::{loglog_slope, Outcome, RunConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::ConvexDomain;
use crate::seminorm::{
    bump_family, equivalence_ratio, multiplier_decay_check, regularity_sweep, SeminormOptions, SweepPlan, SweepRow, SweepTerm,
    VelocityMeasure,
};

pub(super) fn multiplier_decay(cfg: &RunConfig) -> Result<Outcome> {
    let r = multiplier_decay_check(cfg.collision.nu0, &cfg.orders.multiplier_xi)?;
    let mut out = Outcome {
        constant: Some(r.scaled[0]),
        ..Default::default()
    };
    out.require(r.max_rel_dev > 1e-8);
    out.require((r.nu0_exponent + 1.0 / 3.0).abs() > 1e-6);
    out.detail("xi", &r.xi);
    out.detail("scaled", &r.scaled);
    out.detail("expected", r.expected);
    out.detail("max_rel_dev", r.max_rel_dev);
    out.detail("nu0_exponent", r.nu0_exponent);
    Ok(out)
}

/// Ratios over the bump family at the configured grid fix a bracket widened
/// by 2%; at the doubled grid every ratio must stay inside it and the first
/// bump's ratio must move by less than 2%.
pub(super) fn sobolev_equivalence(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let dom = cfg.domain()?;
    let s = cfg.orders.equivalence_s;
    let n = cfg.scaled(cfg.budgets.seminorm_samples, 16);
    let grid = cfg.budgets.grid;
    let fam = bump_family(&dom);
    let mut coarse = Vec::new();
    let mut fine = Vec::new();
    let mut alias = false;
    let mut unresolved = 0;
    for (k, f) in fam.iter().enumerate() {
        let seed = cfg.seed.wrapping_add(k as u64);
        let a = equivalence_ratio(&dom, f, s, n, grid, seed, exec)?;
        let b = equivalence_ratio(&dom, f, s, n, 2 * grid, seed, exec)?;
        alias |= b.alias_warning;
        // too few samples to close the sub-floor fit: no ratio for this member
        if !(a.seminorm.is_finite() && b.seminorm.is_finite()) {
            unresolved += 1;
            continue;
        }
        coarse.push(a.ratio);
        fine.push(b.ratio);
    }
    let mut out = Outcome::default();
    out.detail("unresolved", unresolved);
    if coarse.is_empty() {
        out.flagged = true;
        return Ok(out);
    }
    let lo = 0.98 * coarse.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = 1.02 * coarse.iter().cloned().fold(0.0, f64::max);
    for r in &fine {
        out.require(!(lo..=hi).contains(r));
    }
    let drift = (fine[0] - coarse[0]).abs() / coarse[0];
    out.require(!(drift < 0.02));
    out.flagged = alias || unresolved > 0;
    out.constant = Some(hi / lo);
    out.detail("s", s);
    out.detail("bracket", [lo, hi]);
    out.detail("ratios", &coarse);
    out.detail("ratios_fine", &fine);
    out.detail("resolution_drift", drift);
    Ok(out)
}

fn sweep_options(cfg: &RunConfig) -> SeminormOptions {
    SeminormOptions {
        velocity: VelocityMeasure::Gaussian {
            sigma: cfg.budgets.sweep_sigma,
        },
        floor_exponent: cfg.budgets.floor_exponent,
        ..Default::default()
    }
}

/// The configured domain scaled to unit diameter.
pub(super) fn unit_diameter(dom: &ConvexDomain) -> Result<ConvexDomain> {
    dom.scaled(1.0 / dom.diameter())
}

pub(super) fn sweep_rows(cfg: &RunConfig, plan: &[SweepPlan], orders: &[f64], exec: Execution) -> Result<Vec<SweepRow>> {
    let setup = cfg.sweep_setup(unit_diameter(&cfg.domain()?)?)?;
    regularity_sweep(
        &setup,
        &cfg.boundary_data()?,
        plan,
        orders,
        cfg.budgets.node_budget,
        cfg.seed,
        &sweep_options(cfg),
        exec,
    )
}

/// `g_0` and `g_1` across the configured orders: finite, nondecreasing in `s`.
pub(super) fn regularity(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let n = cfg.scaled(cfg.budgets.sweep_samples, 16);
    let plan = [SweepTerm::G0, SweepTerm::G1].map(|term| SweepPlan { term, samples: n });
    let orders = &cfg.orders.sweep_s;
    let rows = sweep_rows(cfg, &plan, orders, exec)?;
    let mut out = Outcome::default();
    let mut growth = Vec::new();
    for p in &plan {
        let r: Vec<&SweepRow> = rows.iter().filter(|r| r.term == p.term).collect();
        for row in &r {
            out.require(!row.value.is_finite());
            out.flagged |= row.flagged;
        }
        for w in r.windows(2) {
            out.require(w[1].value < w[0].value);
        }
        let total: Vec<f64> = r.iter().map(|x| x.value + x.subfloor).collect();
        let gap: Vec<f64> = orders.iter().map(|s| 1.0 - s).collect();
        growth.push(loglog_slope(&gap, &total));
        out.detail(p.term.name(), r.iter().map(|x| x.value).collect::<Vec<_>>());
        out.detail(&format!("{}_stderr", p.term.name()), r.iter().map(|x| x.stderr).collect::<Vec<_>>());
        out.detail(&format!("{}_flagged", p.term.name()), r.iter().map(|x| x.flagged).collect::<Vec<_>>());
    }
    out.constant = growth.last().copied();
    out.detail("s", orders);
    out.detail("samples", n);
    out.detail("growth_vs_one_minus_s", &growth);
    Ok(out)
}

/// `sqrt(value) * sqrt(1/2 - s)` for the zero-extended double composition
/// must stay within a factor 2 across the configured orders.
pub(super) fn zero_extension_trend(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let orders = &cfg.orders.zero_extension_s;
    if orders.iter().any(|&s| !(s < 0.5)) {
        return Err(Error::InvalidParameter("zero-extension orders must lie below 1/2".into()));
    }
    let n = cfg.scaled(cfg.budgets.zero_extension_samples, 16);
    let plan = [SweepPlan {
        term: SweepTerm::ZeroExtension,
        samples: n,
    }];
    let rows = sweep_rows(cfg, &plan, orders, exec)?;
    let norms: Vec<f64> = rows.iter().map(|r| (r.value + r.subfloor).sqrt()).collect();
    let trend: Vec<f64> = norms.iter().zip(orders).map(|(v, s)| v * (0.5 - s).sqrt()).collect();
    let mut out = Outcome::default();
    for (r, t) in rows.iter().zip(&trend) {
        out.require(!t.is_finite());
        out.flagged |= r.flagged;
    }
    let hi = trend.iter().cloned().fold(0.0, f64::max);
    let lo = trend.iter().cloned().fold(f64::INFINITY, f64::min);
    out.require(!(hi <= 2.0 * lo));
    let gap: Vec<f64> = orders.iter().map(|s| 0.5 - s).collect();
    out.constant = Some(hi);
    out.detail("s", orders);
    out.detail("samples", n);
    out.detail("values", rows.iter().map(|r| r.value).collect::<Vec<_>>());
    out.detail("stderr", rows.iter().map(|r| r.stderr).collect::<Vec<_>>());
    out.detail("trend", &trend);
    out.detail("trend_spread", hi / lo);
    out.detail("norm_slope_vs_half_minus_s", loglog_slope(&gap, &norms));
    Ok(out)
}
