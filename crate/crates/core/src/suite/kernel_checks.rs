use std::f64::consts::PI;

use nalgebra::Vector3;

use super::{Outcome, RunConfig};
use crate::error::Result;
use crate::exec::Execution;
use crate::field::ClosedForm;
use crate::kernel::{apply_k, caflisch_integral, inverse_square_moment, kernel_moment, schur_test, VelocityQuadrature, VelocityScheme, TAIL_TOL};
use crate::quadrature::Adaptive;

const SPEEDS: [f64; 5] = [0.0, 1.0, 2.0, 4.0, 8.0];

fn radial(f: impl FnMut(f64) -> f64) -> Result<f64> {
    Adaptive {
        rel_tol: 1e-12,
        ..Default::default()
    }
    .integrate(0.0, 40.0, f)
}

fn along(speed: f64) -> Vector3<f64> {
    Vector3::new(1.0, 2.0, 2.0) * (speed / 3.0)
}

/// Moment at `v = 0` against the radial closed form, `(1 + |v|)`-weighted
/// boundedness over a speed sweep, and stability under node doubling.
pub(super) fn kernel_moment_check(cfg: &RunConfig, power: u32) -> Result<Outcome> {
    let model = cfg.model()?;
    let rule = cfg.moment_rule();
    let (g, ck) = (model.gamma, model.kernel_scale);
    // at v = 0 the exponent is -r^2 / 4 and |v - v*| = r
    let exact = if power == 1 {
        4.0 * PI * ck * radial(|r| r * (1.0 + r).powf(g - 1.0) * (-r * r / 4.0).exp())?
    } else {
        4.0 * PI * ck * ck * radial(|r| (1.0 + r).powf(2.0 * (g - 1.0)) * (-r * r / 2.0).exp())?
    };
    let weight_exp = if power == 1 { 2.0 - g } else { 3.0 - 2.0 * g };
    let mut out = Outcome::default();
    let mut ratios = Vec::new();
    let mut drift = 0.0f64;
    let mut tail = 0.0f64;
    for &s in &SPEEDS {
        let m = kernel_moment(&model, &along(s), power, &rule)?;
        let fine = kernel_moment(&model, &along(s), power, &rule.refined())?;
        if s == 0.0 {
            let rel = (m.value - exact).abs() / exact;
            out.require(rel > 1e-3);
            out.detail("origin_value", m.value);
            out.detail("origin_exact", exact);
        }
        let r = m.value * (1.0 + s).powf(weight_exp);
        out.require(!r.is_finite());
        ratios.push(r);
        drift = drift.max((fine.value - m.value).abs() / m.value);
        tail = tail.max(m.tail_fraction);
    }
    out.require(drift > 1e-4);
    out.flagged = tail > TAIL_TOL;
    out.constant = Some(ratios.iter().cloned().fold(0.0, f64::max));
    out.detail("speeds", SPEEDS);
    out.detail("weighted", &ratios);
    out.detail("refinement_drift", drift);
    out.detail("tail_fraction", tail);
    Ok(out)
}

pub(super) fn caflisch(cfg: &RunConfig) -> Result<Outcome> {
    let rule = cfg.moment_rule();
    let mut out = Outcome::default();
    let origin = caflisch_integral(&Vector3::zeros(), 1.0, 1.0, 1.0, &rule)?;
    let exact = 4.0 * PI * (PI / 8.0).sqrt();
    out.require((origin.value - exact).abs() > 1e-3 * exact);
    let speeds = [0.0, 1.0, 2.0, 4.0];
    let mut weighted = Vec::new();
    for &s in &speeds {
        let v = caflisch_integral(&along(s), 1.0, 1.0, 1.0, &rule)?.value * (1.0 + s);
        out.require(!v.is_finite());
        weighted.push(v);
    }
    out.constant = Some(weighted.iter().cloned().fold(0.0, f64::max));
    out.detail("origin_value", origin.value);
    out.detail("origin_exact", exact);
    out.detail("weighted", &weighted);
    Ok(out)
}

pub(super) fn inverse_vsq(cfg: &RunConfig) -> Result<Outcome> {
    let model = cfg.model()?;
    let rule = cfg.moment_rule();
    let mut out = Outcome::default();
    let exact = 4.0 * PI * model.kernel_scale * radial(|r| (1.0 + r).powf(model.gamma - 1.0) * (-r * r / 4.0).exp())?;
    let mut values = Vec::new();
    for &s in &SPEEDS {
        let m = inverse_square_moment(&model, &along(s), 1.0, &rule)?;
        out.require(!m.value.is_finite());
        if s == 0.0 {
            out.require((m.value - exact).abs() > 1e-3 * exact);
        }
        values.push(m.value);
    }
    out.constant = Some(values.iter().cloned().fold(0.0, f64::max));
    out.detail("origin_exact", exact);
    out.detail("values", &values);
    Ok(out)
}

/// `sup_{|v| <= 7} K(exp(-a |.|^2))(v) exp(a |v|^2)` for each rate, stable
/// within 2% when every node count doubles.
pub fn maxwellian_sup(cfg: &RunConfig, a: f64, quad: &VelocityQuadrature, exec: Execution) -> Result<f64> {
    let model = cfg.model()?;
    let h = ClosedForm::whole_space(move |_, w| (-a * w.norm_squared()).exp());
    let x = Vector3::zeros();
    let vals = exec.try_map(15, |i| -> Result<f64> {
        let s = 0.5 * i as f64;
        let v = along(s);
        Ok(apply_k(&model, quad, h.as_ref(), &x, &v)? * (a * s * s).exp())
    })?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

pub(super) fn maxwellian_preserve(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let quad = cfg.velocity_rule()?;
    let fine = quad.refined()?;
    let mut out = Outcome::default();
    let mut sups = Vec::new();
    let mut changes = Vec::new();
    for &a in &cfg.orders.maxwellian_rates {
        let c = maxwellian_sup(cfg, a, &quad, exec)?;
        let f = maxwellian_sup(cfg, a, &fine, exec)?;
        let change = (f - c).abs() / c;
        out.require(!c.is_finite() || change > 0.02);
        sups.push(c);
        changes.push(change);
    }
    out.constant = Some(sups.iter().cloned().fold(0.0, f64::max));
    out.detail("rates", &cfg.orders.maxwellian_rates);
    out.detail("sup", &sups);
    out.detail("doubling_change", &changes);
    Ok(out)
}

pub(super) fn schur_klp(cfg: &RunConfig) -> Result<Outcome> {
    let model = cfg.model()?;
    let [a, b, c] = cfg.budgets.schur_nodes;
    let quad = VelocityQuadrature::new(VelocityScheme::PolarAboutOrigin, cfg.collision.vmax, a, b, c)?;
    let r = schur_test(&model, &quad, &cfg.moment_rule())?;
    let mut out = Outcome::default();
    out.require(r.spectral_norm > r.discrete_bound * (1.0 + 1e-9));
    out.constant = Some(r.spectral_norm / r.continuous_bound);
    out.detail("spectral_norm", r.spectral_norm);
    out.detail("discrete_bound", r.discrete_bound);
    out.detail("continuous_bound", r.continuous_bound);
    out.detail("nodes", r.nodes);
    Ok(out)
}
