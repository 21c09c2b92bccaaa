use nalgebra::Vector3;

use super::{Outcome, RunConfig};
use crate::error::Result;
use crate::exec::Execution;
use crate::seminorm::smooth_bump;
use crate::transport::{change_of_variable_check, cone_jacobian, sk_square_bound_check, CovVariant};

/// Round trips of the inverse maps must close to this absolute tolerance.
const ROUND_TRIP_TOL: f64 = 1e-10;

/// Speeds sampled for `v` in the squared-bound check.
const SK_VMAX: f64 = 4.0;

pub(super) fn sk_square(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let setup = cfg.sweep_setup(cfg.domain()?)?;
    let h = smooth_bump(&setup.domain);
    let n = cfg.scaled(cfg.budgets.sk_samples, 1);
    let r = sk_square_bound_check(&setup, h.as_ref(), n, SK_VMAX, cfg.seed, exec)?;
    let mut out = Outcome {
        constant: Some(r.constant.max(r.constant_ks)),
        violations: r.violations,
        ..Default::default()
    };
    out.detail("samples", r.samples);
    out.detail("skipped", r.skipped);
    out.detail("constant_sk", r.constant);
    out.detail("constant_ks", r.constant_ks);
    out.detail("theory_constant", r.theory_constant);
    Ok(out)
}

pub(super) fn cov(cfg: &RunConfig, variant: CovVariant, exec: Execution) -> Result<Outcome> {
    let dom = cfg.domain()?;
    let n = cfg.scaled(cfg.budgets.cov_samples, 2);
    let r = change_of_variable_check(&dom, variant, n, cfg.seed, exec)?;
    let mut out = Outcome {
        violations: r.membership_violations,
        constant: Some(r.lhs.value),
        ..Default::default()
    };
    out.require(r.round_trip_max > ROUND_TRIP_TOL);
    out.require(!(r.z_score <= 3.0));
    out.detail("tuples", r.tuples);
    out.detail("round_trip_max", r.round_trip_max);
    out.detail("lhs", r.lhs);
    out.detail("rhs", r.rhs);
    out.detail("z_score", r.z_score);
    if let Some(t) = r.first_violation {
        out.detail("first_violation", t);
    }
    Ok(out)
}

pub(super) fn cone(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let dom = cfg.domain()?;
    let offset = Vector3::new(0.2, -0.1, 0.3) * dom.bounding_radius();
    let x = if dom.contains(&(dom.center() + offset)) { dom.center() + offset } else { dom.center() };
    let n = cfg.scaled(cfg.budgets.cov_samples, 2);
    let r = cone_jacobian(&dom, &x, n, cfg.seed, exec)?;
    let mut out = Outcome {
        violations: r.membership_violations,
        constant: Some(r.rhs.value),
        ..Default::default()
    };
    out.require(r.round_trip_max > ROUND_TRIP_TOL);
    out.require(!(r.z_score <= 3.0));
    out.detail("tuples", r.tuples);
    out.detail("round_trip_max", r.round_trip_max);
    out.detail("exact", r.exact);
    out.detail("lhs", r.lhs);
    out.detail("rhs", r.rhs);
    out.detail("z_score", r.z_score);
    Ok(out)
}
