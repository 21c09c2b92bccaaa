use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{loglog_slope, sample_map, Outcome, RunConfig};
use crate::error::{Error, Result};
use crate::exec::{mc_mean, task_tag, Execution};
use crate::geometry::{planar, random_unit, ConvexDomain, DomainKind, ExitRecord, Vec3};

/// Absolute slack on the exit-geometry inequalities.
const GEOMETRY_TOL: f64 = 1e-8;

/// Uniform interior point and unit direction with a non-grazing exit record.
/// Returns the number of rejected draws as well.
fn interior_ray(dom: &ConvexDomain, rng: &mut ChaCha8Rng) -> Result<(Vec3, Vec3, ExitRecord, usize)> {
    let mut rejected = 0;
    loop {
        let x = dom.sample_interior(rng);
        let v = random_unit(rng);
        match dom.exit_record(&x, &v) {
            Ok(r) => return Ok((x, v, r, rejected)),
            Err(Error::RayDegenerate(_)) => rejected += 1,
            Err(e) => return Err(e),
        }
    }
}

fn ball_radius(dom: &ConvexDomain) -> Option<f64> {
    (dom.spec().kind == DomainKind::Ball).then(|| dom.spec().params[0])
}

/// `|x - q_-| N_- >= d_x`: the tangent plane at `q_-` separates `x` from the outside.
pub(super) fn proj_distance(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let dom = cfg.domain()?;
    let n = cfg.scaled(cfg.budgets.geometry_samples, 1);
    let rows = sample_map(exec, n, cfg.seed, "proj_distance", 1024, |rng| {
        let (x, _, r, rej) = interior_ray(&dom, rng)?;
        let d = dom.distance_to_boundary(&x)?;
        let len = (x - Vec3::from(r.q_minus)).norm();
        Ok((len, d.value / r.n_minus, d.fallback, rej))
    })?;
    let mut out = Outcome::default();
    let mut worst = f64::INFINITY;
    for &(len, bound, _, _) in &rows {
        out.require(len < bound - GEOMETRY_TOL);
        worst = worst.min(len / bound);
    }
    out.constant = Some(worst);
    out.detail("samples", n);
    out.detail("distance_fallbacks", rows.iter().filter(|r| r.2).count());
    out.detail("grazing_rejections", rows.iter().map(|r| r.3).sum::<usize>());
    Ok(out)
}

/// Pairs `x, y` with a shared velocity ordered so `|x - q_-(x)| <= |y - q_-(y)|`.
pub(super) fn proj_distance2(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let dom = cfg.domain()?;
    let diam = dom.diameter();
    let n = cfg.scaled(cfg.budgets.geometry_samples, 1);
    let rows = sample_map(exec, n, cfg.seed, "proj_distance2", 1024, |rng| -> Result<[f64; 4]> {
        loop {
            let (x, v, rx, _) = interior_ray(&dom, rng)?;
            // separation log-uniform in [1e-4, 1] diam
            let sep = diam * 10f64.powf(-4.0 * rng.random::<f64>());
            let y = x + random_unit(rng) * sep;
            if !dom.contains(&y) {
                continue;
            }
            let ry = match dom.exit_record(&y, &v) {
                Ok(r) => r,
                Err(Error::RayDegenerate(_)) => continue,
                Err(e) => return Err(e),
            };
            let (qx, qy) = (Vec3::from(rx.q_minus), Vec3::from(ry.q_minus));
            let (lx, ly) = ((x - qx).norm(), (y - qy).norm());
            // the shorter backward segment carries the normal component
            let n_short = if lx <= ly { rx.n_minus } else { ry.n_minus };
            let xy = (x - y).norm();
            return Ok([(qx - qy).norm(), xy / n_short, (lx - ly).abs(), 2.0 * xy / n_short]);
        }
    })?;
    let mut out = Outcome::default();
    let (mut c1, mut c2) = (0.0f64, 0.0f64);
    for r in &rows {
        out.require(r[0] > r[1] + GEOMETRY_TOL);
        out.require(r[2] > r[3] + GEOMETRY_TOL);
        c1 = c1.max(r[0] / r[1]);
        c2 = c2.max(r[2] / r[3]);
    }
    out.constant = Some(c1.max(c2));
    out.detail("samples", n);
    out.detail("endpoint_ratio_max", c1);
    out.detail("length_ratio_max", c2);
    Ok(out)
}

/// `|q_- - q_+| <= 2 R_1 N_-` with `R_1` from the rolling radii.
pub(super) fn chord_bound(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let dom = cfg.domain()?;
    let mut out = Outcome::default();
    // an exit point the root finder left off the surface counts as a violation
    let radii = match dom.rolling_radii(cfg.scaled(cfg.budgets.rolling_samples, 100)) {
        Ok(r) => r,
        Err(e @ Error::NotOnSurface { .. }) => {
            out.require(true);
            out.detail("rolling_radii_error", e.to_string());
            return Ok(out);
        }
        Err(e) => return Err(e),
    };
    let c = 2.0 * radii.outer;
    let n = cfg.scaled(cfg.budgets.geometry_samples, 1);
    let rows = sample_map(exec, n, cfg.seed, "chord_bound", 1024, |rng| {
        match interior_ray(&dom, rng) {
            Ok((_, _, r, _)) => Ok(Some(((Vec3::from(r.q_minus) - Vec3::from(r.q_plus)).norm(), r.n_minus))),
            Err(Error::NotOnSurface { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    })?;
    let mut worst = 0.0f64;
    let mut equality = 0.0f64;
    let mut off_surface = 0;
    let ball = ball_radius(&dom);
    for row in &rows {
        let Some((chord, nm)) = *row else {
            off_surface += 1;
            continue;
        };
        out.require(chord > c * nm + GEOMETRY_TOL);
        worst = worst.max(chord / nm);
        if let Some(r) = ball {
            equality = equality.max((chord - 2.0 * r * nm).abs());
        }
    }
    out.violations += off_surface;
    out.constant = Some(worst);
    out.detail("samples", n);
    out.detail("off_surface", off_surface);
    out.detail("outer_radius", radii.outer);
    out.detail("inner_radius", radii.inner);
    if ball.is_some() {
        // a ball's chord is exactly 2 R N_-
        out.require(equality > 1e-9);
        out.detail("ball_equality_max_dev", equality);
    }
    Ok(out)
}

pub(super) fn distance_comparison(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let n = cfg.scaled(cfg.budgets.planar_samples, 1);
    let r = planar::distance_comparison(n, cfg.seed, exec);
    let mut out = Outcome {
        constant: Some(r.constant),
        violations: r.violations,
        ..Default::default()
    };
    out.detail("samples", r.samples);
    out.detail("skipped", r.skipped);
    Ok(out)
}

pub(super) fn curvature_2d(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let dom = cfg.domain()?;
    let n = cfg.scaled(cfg.budgets.planar_samples, 1);
    let r = planar::curvature_sections(&dom, n, cfg.seed, exec)?;
    let mut out = Outcome {
        constant: Some(r.constant),
        violations: r.violations,
        ..Default::default()
    };
    out.detail("samples", r.samples);
    out.detail("skipped", r.skipped);
    Ok(out)
}

/// Interior base point and direction of a random chord.
fn random_chord(dom: &ConvexDomain, rng: &mut ChaCha8Rng) -> (Vec3, Vec3) {
    (dom.sample_interior(rng), random_unit(rng))
}

/// Diametric chord of the unit ball at `s = 1/2`, exactly 4.
pub fn diametric_ball_value() -> Result<f64> {
    let b = ConvexDomain::from_spec(&crate::geometry::DomainSpec::ball(1.0))?;
    b.chord_frac_integral(&Vector3::new(-1.0, 0.0, 0.0), &Vector3::x(), 0.5)
}

/// The chord integral at `s = 1/2` is bounded over random chords.
pub(super) fn frac_chord_1(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let dom = cfg.domain()?;
    let n = cfg.scaled(cfg.budgets.chord_samples, 1);
    let vals = sample_map(exec, n, cfg.seed, "frac_chord_1", 64, |rng| {
        let (y, w) = random_chord(&dom, rng);
        dom.chord_frac_integral(&y, &w, 0.5)
    })?;
    let mut out = Outcome::default();
    for v in &vals {
        out.require(!v.is_finite());
    }
    let diam = diametric_ball_value()?;
    out.require((diam - 4.0).abs() > 1e-6);
    out.constant = Some(vals.iter().cloned().fold(0.0, f64::max));
    out.detail("samples", n);
    out.detail("mean", vals.iter().sum::<f64>() / n as f64);
    out.detail("diametric_ball", diam);
    Ok(out)
}

/// Per-order supremum of `eps * I(1 - eps) * d_y^(1/2 - eps)` over common chords.
pub fn frac_chord_trend(dom: &ConvexDomain, eps: &[f64], n: usize, seed: u64, exec: Execution) -> Result<Vec<f64>> {
    let rows = sample_map(exec, n, seed, "frac_chord_2", 16, |rng| -> Result<Vec<f64>> {
        let (y, w) = random_chord(dom, rng);
        let d = dom.distance_to_boundary(&y)?.value;
        eps.iter()
            .map(|&e| Ok(e * dom.chord_frac_integral(&y, &w, 1.0 - e)? * d.powf(0.5 - e)))
            .collect()
    })?;
    Ok((0..eps.len())
        .map(|k| rows.iter().map(|r| r[k]).fold(0.0, f64::max))
        .collect())
}

/// Log-log slope of the supremum in `eps` must be `0 +- 0.15`.
pub(super) fn frac_chord_2(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let dom = cfg.domain()?;
    let eps = &cfg.orders.frac_chord_eps;
    let n = cfg.scaled(cfg.budgets.trend_chord_samples, 1);
    let sup = frac_chord_trend(&dom, eps, n, cfg.seed, exec)?;
    let slope = loglog_slope(eps, &sup);
    let mut out = Outcome::default();
    out.require(!(slope.abs() <= 0.15));
    out.constant = Some(sup.iter().cloned().fold(0.0, f64::max));
    out.detail("samples", n);
    out.detail("eps", eps);
    out.detail("sup", &sup);
    out.detail("slope", slope);
    Ok(out)
}

/// `int_ball d_x^(eps - 1) dx` for the ball of radius `r`.
pub fn ball_distance_integral(r: f64, eps: f64) -> f64 {
    8.0 * PI * r.powf(2.0 + eps) / (eps * (1.0 + eps) * (2.0 + eps))
}

/// Monte Carlo `int d_x^(eps - 1) dx` in polar coordinates about the center,
/// with the boundary gap `u = 1 - t` drawn from the density `eps u^(eps - 1)`.
const NEAR_BOUNDARY: f64 = 1e-6;

pub fn distance_integral_mc(dom: &ConvexDomain, eps: f64, n: usize, seed: u64, exec: Execution) -> Result<crate::geometry::Estimate> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside (0, 1]")));
    }
    let c = dom.center();
    let tag = task_tag(&format!("distance_integral/{eps}"));
    mc_mean(exec, n, seed, tag, |rng| {
        let w = random_unit(rng);
        let len = dom.forward_distance(&c, &w)?;
        let u = (1.0 - rng.random::<f64>()).powf(1.0 / eps);
        let t = 1.0 - u;
        if t <= 0.0 || u <= 0.0 {
            return Ok(0.0);
        }
        // d / u, taken from the supporting plane at the exit point when the
        // sample sits too close to the boundary to resolve d directly
        let ratio = if u < NEAR_BOUNDARY {
            len * w.dot(&dom.normal(&(c + w * len))?)
        } else {
            match dom.distance_to_boundary(&(c + w * (t * len))) {
                Ok(d) => d.value / u,
                Err(Error::NotInterior { .. }) => return Ok(0.0),
                Err(e) => return Err(e),
            }
        };
        Ok(4.0 * PI * len.powi(3) * t * t * ratio.powf(eps - 1.0) / eps)
    })
}

pub(super) fn distance_integral(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let dom = cfg.domain()?;
    let eps = &cfg.orders.distance_eps;
    let n = cfg.scaled(cfg.budgets.distance_samples, 2);
    let mut out = Outcome::default();
    let mut values = Vec::new();
    let mut errs = Vec::new();
    let mut z = Vec::new();
    let ball = ball_radius(&dom);
    for &e in eps {
        let est = distance_integral_mc(&dom, e, n, cfg.seed, exec)?;
        out.require(!est.value.is_finite());
        if let Some(r) = ball {
            let zz = (est.value - ball_distance_integral(r, e)) / est.stderr.max(1e-300);
            out.require(zz.abs() > 3.0);
            z.push(zz);
        }
        values.push(est.value);
        errs.push(est.stderr);
    }
    let slope = loglog_slope(eps, &values);
    // eps * integral stays bounded as eps -> 0
    out.constant = Some(eps.iter().zip(&values).map(|(e, v)| e * v).fold(0.0, f64::max));
    out.detail("samples", n);
    out.detail("eps", eps);
    out.detail("values", &values);
    out.detail("stderr", &errs);
    out.detail("slope", slope);
    if ball.is_some() {
        out.detail("z_scores", &z);
    }
    Ok(out)
}

/// `C` fitted on the two shallowest depths with a 25% margin; every depth must
/// stay below `C (|log d_x| + 1)`.
pub(super) fn surface_integral(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let dom = cfg.domain()?;
    let n = cfg.scaled(cfg.budgets.surface_samples, 4);
    let c = dom.center();
    let center = dom.surface_singular_integral(&c, n, cfg.seed, exec)?;
    let mut out = Outcome::default();
    if ball_radius(&dom).is_some() {
        out.require((center.value - 4.0 * PI).abs() > 5e-3 * 4.0 * PI);
    }
    let axis = Vector3::z();
    let q = c + axis * dom.forward_distance(&c, &axis)?;
    let normal = dom.normal(&q)?;
    let mut depths = Vec::new();
    let mut ratios = Vec::new();
    let mut values = Vec::new();
    for &d in &cfg.orders.surface_depths {
        let x = q - normal * d;
        let dx = dom.distance_to_boundary(&x)?.value;
        let e = dom.surface_singular_integral(&x, n, cfg.seed, exec)?;
        depths.push(dx);
        values.push(e.value);
        ratios.push(e.value / (dx.ln().abs() + 1.0));
    }
    let fit = 1.25 * ratios.iter().take(2).cloned().fold(0.0, f64::max);
    for r in &ratios {
        out.require(!(r <= &fit));
    }
    out.constant = Some(ratios.iter().cloned().fold(0.0, f64::max));
    out.detail("center", center.value);
    out.detail("center_stderr", center.stderr);
    out.detail("depths", &depths);
    out.detail("values", &values);
    out.detail("fitted_c", fit);
    Ok(out)
}
