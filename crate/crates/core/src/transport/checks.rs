//! Numerical certificates for the transport-side estimates: the squared
//! `S_Omega K` bound and the three changes of variables.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{chunk_rng, chunk_sizes, mc_mean, task_tag, Execution};
use crate::field::PhaseFunction;
use crate::geometry::{random_unit, ConvexDomain, Estimate, Vec3};
use crate::kernel::{CollisionModel, VelocityQuadrature, VelocityScheme};
use crate::quadrature::Adaptive;

use super::operators::TransportSetup;

const CHUNK: usize = 64;

/// Velocity nodes with `weight * k(v, v*)` folded in.
fn weighted_kernel(model: &CollisionModel, quad: &VelocityQuadrature, v: &Vec3) -> Result<Vec<(Vec3, f64)>> {
    let speed = v.norm();
    quad.nodes(v)
        .into_iter()
        .map(|n| {
            let k = match quad.scheme() {
                VelocityScheme::PolarAboutQuery => {
                    model.kernel_polar_times_r(speed, v.dot(&n.omega), n.r, n.vstar.norm()) / n.r
                }
                VelocityScheme::PolarAboutOrigin => model.kernel(v, &n.vstar)?,
            };
            Ok((n.vstar, n.weight * k))
        })
        .collect()
}

/// Velocity `|v| <= vmax` uniform in the ball, bounded away from zero.
fn sample_velocity(rng: &mut ChaCha8Rng, vmax: f64) -> Vec3 {
    let r = vmax * rng.random::<f64>().cbrt();
    random_unit(rng) * r.max(1e-3 * vmax)
}

/// Gaussian velocity with density `pi^(-3/2) exp(-|v|^2)`.
fn gaussian_velocity(rng: &mut ChaCha8Rng) -> Vec3 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Vector3::new(
        rng.sample::<f64, _>(StandardNormal) * s,
        rng.sample::<f64, _>(StandardNormal) * s,
        rng.sample::<f64, _>(StandardNormal) * s,
    )
}

fn uniform_in_box(rng: &mut ChaCha8Rng, lo: &Vec3, hi: &Vec3) -> Vec3 {
    Vector3::from_fn(|i, _| lo[i] + (hi[i] - lo[i]) * rng.random::<f64>())
}

fn box_volume(lo: &Vec3, hi: &Vec3) -> f64 {
    (hi - lo).iter().product()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkSquareReport {
    pub samples: usize,
    /// Samples where both sides vanish.
    pub skipped: usize,
    /// Largest `|S K h|^2 / rhs` observed: the fitted constant.
    pub constant: f64,
    /// Same for `|K S h|^2`.
    pub constant_ks: f64,
    /// Samples exceeding the per-sample discrete Cauchy-Schwarz bound.
    pub violations: usize,
    /// `sup_v m1(v) / (2 nu0)` over the sampled velocities, with `m1` the
    /// discrete kernel `L^1` moment.
    pub theory_constant: f64,
    pub max_lhs: f64,
    pub max_rhs: f64,
}

/// Evaluates both sides of the squared bounds for `S_Omega K h` and
/// `K S_Omega h` at sampled `(y, v)`, using one discrete rule on both sides so
/// the discrete Cauchy-Schwarz bound holds exactly.
pub fn sk_square_bound_check(
    setup: &TransportSetup,
    h: &dyn PhaseFunction,
    samples: usize,
    vmax: f64,
    seed: u64,
    exec: Execution,
) -> Result<SkSquareReport> {
    let dom = &setup.domain;
    let model = &setup.model;
    let tag = task_tag("sk_square");
    let sizes = chunk_sizes(samples, CHUNK);
    let rows = exec.try_map(sizes.len(), |c| -> Result<Vec<[f64; 6]>> {
        let mut rng = chunk_rng(seed, tag, c as u64);
        let mut out = Vec::with_capacity(sizes[c]);
        for _ in 0..sizes[c] {
            let y = dom.sample_interior(&mut rng);
            let v = sample_velocity(&mut rng, vmax);
            let nodes = weighted_kernel(model, &setup.velocity, &v)?;
            let m1: f64 = nodes.iter().map(|n| n.1.abs()).sum();

            // |S_Omega K h(y, v)|^2 against int_0^tau int |k| |h|^2
            let nu = model.nu(&v);
            let tau = dom.backward_exit(&y, &v)?.tau;
            let chord = setup.chord.nodes(0.0, tau);
            let (mut sk, mut rhs1, mut damp) = (0.0, 0.0, 0.0);
            for &(s, w) in &chord {
                let p = y - v * s;
                let (mut kh, mut kh2) = (0.0, 0.0);
                for &(vs, wk) in &nodes {
                    let hv = h.eval(&p, &vs)?;
                    kh += wk * hv;
                    kh2 += wk.abs() * hv * hv;
                }
                sk += w * (-nu * s).exp() * kh;
                rhs1 += w * kh2;
                damp += w * (-2.0 * nu * s).exp();
            }
            let lhs1 = sk * sk;

            // |K S_Omega h(y, v)|^2 against int |k| int_0^tau(v*) |h|^2
            let (mut ks, mut rhs2, mut damp_max) = (0.0, 0.0, 0.0f64);
            for &(vs, wk) in &nodes {
                if vs.norm() < 1e-12 {
                    continue;
                }
                let nus = model.nu(&vs);
                let t = dom.backward_exit(&y, &vs)?.tau;
                let (mut sh, mut sh2, mut a) = (0.0, 0.0, 0.0);
                for (s, w) in setup.chord.nodes(0.0, t) {
                    let hv = h.eval(&(y - vs * s), &vs)?;
                    sh += w * (-nus * s).exp() * hv;
                    sh2 += w * hv * hv;
                    a += w * (-2.0 * nus * s).exp();
                }
                ks += wk * sh;
                rhs2 += wk.abs() * sh2;
                damp_max = damp_max.max(a);
            }
            let lhs2 = ks * ks;
            out.push([lhs1, rhs1, damp * m1, lhs2, rhs2, damp_max * m1]);
        }
        Ok(out)
    })?;
    let mut report = SkSquareReport {
        samples,
        skipped: 0,
        constant: 0.0,
        constant_ks: 0.0,
        violations: 0,
        theory_constant: 0.0,
        max_lhs: 0.0,
        max_rhs: 0.0,
    };
    let slack = 1.0 + 1e-10;
    for r in rows.iter().flatten() {
        let [lhs1, rhs1, b1, lhs2, rhs2, b2] = *r;
        report.max_lhs = report.max_lhs.max(lhs1);
        report.max_rhs = report.max_rhs.max(rhs1);
        report.theory_constant = report.theory_constant.max(b1.max(b2));
        for (lhs, rhs, bound, slot) in [(lhs1, rhs1, b1, 0), (lhs2, rhs2, b2, 1)] {
            if rhs == 0.0 {
                if lhs != 0.0 {
                    report.violations += 1;
                } else if slot == 0 {
                    report.skipped += 1;
                }
                continue;
            }
            let ratio = lhs / rhs;
            if ratio > bound * slack {
                report.violations += 1;
            }
            if slot == 0 {
                report.constant = report.constant.max(ratio);
            } else {
                report.constant_ks = report.constant_ks.max(ratio);
            }
        }
    }
    Ok(report)
}

/// `sup_v m1(v) / (2 nu0)` for the discrete rule, scanned over speeds.
pub fn sk_square_theory_constant(setup: &TransportSetup, vmax: f64) -> Result<f64> {
    let mut best = 0.0f64;
    for k in 0..=32 {
        let v = Vector3::new(vmax * k as f64 / 32.0, 0.0, 0.0);
        let m1: f64 = weighted_kernel(&setup.model, &setup.velocity, &v)?
            .iter()
            .map(|n| n.1.abs())
            .sum();
        best = best.max(m1 / (2.0 * setup.model.nu0));
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovVariant {
    Cov1,
    Cov2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovReport {
    pub variant: CovVariant,
    /// Tuples pushed through the forward and inverse maps.
    pub tuples: usize,
    pub round_trip_max: f64,
    pub membership_violations: usize,
    pub first_violation: Option<Vec<f64>>,
    pub lhs: Estimate,
    pub rhs: Estimate,
    /// `|lhs - rhs| / sqrt(se_lhs^2 + se_rhs^2)`
    pub z_score: f64,
}

/// `(t0, t1)` of the line through `p` along `d`; `p` is expected inside.
fn chord_through(dom: &ConvexDomain, p: &Vec3, d: &Vec3) -> Result<(f64, f64)> {
    dom.line_interval(p, d)?
        .ok_or_else(|| Error::RayDegenerate(format!("line through {p:?} misses the domain")))
}

fn inside(dom: &ConvexDomain, p: &Vec3, tol: f64) -> bool {
    dom.contains(p) || dom.level_distance(p) <= tol
}

fn cov1_test_fn(v: &Vec3, y: &Vec3, r: f64) -> f64 {
    (-v.norm_squared()).exp() * (-r).exp() * (1.5 + (y[0] + 2.0 * y[1] - r + v[2]).cos())
}

fn cov2_test_fn(v: &Vec3, y: &Vec3, x: &Vec3, r: f64) -> f64 {
    (-v.norm_squared()).exp() * (-r).exp() * (1.5 + (x[0] - y[1] + 0.5 * x[2] + r - v[0]).cos())
}

struct Membership {
    tuples: usize,
    round_trip: f64,
    violations: usize,
    first: Option<Vec<f64>>,
}

impl Membership {
    fn merge(parts: Vec<Membership>) -> Membership {
        let mut out = Membership {
            tuples: 0,
            round_trip: 0.0,
            violations: 0,
            first: None,
        };
        for p in parts {
            out.tuples += p.tuples;
            out.round_trip = out.round_trip.max(p.round_trip);
            out.violations += p.violations;
            if out.first.is_none() {
                out.first = p.first;
            }
        }
        out
    }

    fn fail(&mut self, tuple: Vec<f64>) {
        self.violations += 1;
        if self.first.is_none() {
            self.first = Some(tuple);
        }
    }
}

fn flat(parts: &[&Vec3], tail: &[f64]) -> Vec<f64> {
    parts.iter().flat_map(|p| p.iter().copied()).chain(tail.iter().copied()).collect()
}

/// Bijection, membership and integral checks for the two changes of variables
/// `(v, y, r) -> (v, y - r v^, r)` and `(v, y, x, r) -> (v, y - r v^, x - r v^, r)`.
pub fn change_of_variable_check(
    dom: &ConvexDomain,
    variant: CovVariant,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<CovReport> {
    let tol = 1e-9 * dom.diameter();
    let (mem, lhs, rhs) = match variant {
        CovVariant::Cov1 => cov1(dom, samples, seed, exec, tol)?,
        CovVariant::Cov2 => cov2(dom, samples, seed, exec, tol)?,
    };
    let se = (lhs.stderr.powi(2) + rhs.stderr.powi(2)).sqrt();
    Ok(CovReport {
        variant,
        tuples: mem.tuples,
        round_trip_max: mem.round_trip,
        membership_violations: mem.violations,
        first_violation: mem.first,
        lhs,
        rhs,
        z_score: if se > 0.0 { (lhs.value - rhs.value).abs() / se } else { 0.0 },
    })
}

fn cov1(dom: &ConvexDomain, samples: usize, seed: u64, exec: Execution, tol: f64) -> Result<(Membership, Estimate, Estimate)> {
    let (lo, hi) = dom.bounding_box();
    let vol = box_volume(&lo, &hi);
    let norm = PI.powf(1.5);

    // Left side: (v, y, r) in A, y uniform in the box, r uniform on the backward chord.
    let lhs = mc_mean(exec, samples, seed, task_tag("cov1_lhs"), |rng| {
        let v = gaussian_velocity(rng);
        let y = uniform_in_box(rng, &lo, &hi);
        let u: f64 = rng.random();
        if !dom.contains(&y) {
            return Ok(0.0);
        }
        let d = v.normalize();
        let len = -chord_through(dom, &y, &d)?.0;
        let r = u * len;
        Ok(vol * norm * len * cov1_test_fn(&v, &y, r) * (v.norm_squared()).exp())
    })?;
    let rhs = mc_mean(exec, samples, seed, task_tag("cov1_rhs"), |rng| {
        let v = gaussian_velocity(rng);
        let y = uniform_in_box(rng, &lo, &hi);
        let u: f64 = rng.random();
        if !dom.contains(&y) {
            return Ok(0.0);
        }
        let d = v.normalize();
        let len = chord_through(dom, &y, &d)?.1;
        let r = u * len;
        Ok(vol * norm * len * cov1_test_fn(&v, &(y + d * r), r) * (v.norm_squared()).exp())
    })?;

    // Membership and round trips in both directions.
    let tag = task_tag("cov1_maps");
    let sizes = chunk_sizes(samples, CHUNK);
    let parts = exec.try_map(sizes.len(), |c| -> Result<Membership> {
        let mut rng = chunk_rng(seed, tag, c as u64);
        let mut m = Membership {
            tuples: 0,
            round_trip: 0.0,
            violations: 0,
            first: None,
        };
        for _ in 0..sizes[c] {
            let v = gaussian_velocity(&mut rng);
            let d = v.normalize();
            // A -> B
            let y = dom.sample_interior(&mut rng);
            let r = rng.random::<f64>() * -chord_through(dom, &y, &d)?.0;
            let yp = y - d * r;
            let ok = inside(dom, &yp, tol)
                && dom
                    .line_interval(&yp, &d)?
                    .is_some_and(|(_, t1)| r <= t1 + tol);
            if !ok {
                m.fail(flat(&[&v, &y], &[r]));
            }
            m.round_trip = m.round_trip.max((yp + d * r - y).amax());
            // B -> A
            let y2 = dom.sample_interior(&mut rng);
            let r2 = rng.random::<f64>() * chord_through(dom, &y2, &d)?.1;
            let back = y2 + d * r2;
            let ok = inside(dom, &back, tol)
                && dom
                    .line_interval(&back, &d)?
                    .is_some_and(|(t0, _)| r2 <= -t0 + tol);
            if !ok {
                m.fail(flat(&[&v, &y2], &[r2]));
            }
            m.round_trip = m.round_trip.max((back - d * r2 - y2).amax());
            m.tuples += 2;
        }
        Ok(m)
    })?;
    Ok((Membership::merge(parts), lhs, rhs))
}

/// `Omega_{v, y}` data for an exterior `x`: `(t1, t2)` with `0 < t1 < t2`,
/// or `None` when the forward ray misses.
fn reentry(dom: &ConvexDomain, x: &Vec3, d: &Vec3) -> Result<Option<(f64, f64)>> {
    Ok(dom.line_interval(x, d)?.filter(|&(t1, _)| t1 > 0.0))
}

fn cov2(dom: &ConvexDomain, samples: usize, seed: u64, exec: Execution, tol: f64) -> Result<(Membership, Estimate, Estimate)> {
    let (lo, hi) = dom.bounding_box();
    let vol = box_volume(&lo, &hi);
    let pad = Vector3::repeat(dom.diameter());
    let (elo, ehi) = (lo - pad, hi + pad);
    let evol = box_volume(&elo, &ehi);
    let norm = PI.powf(1.5);

    // Left side on D1: draw an unordered pair and order it by backward chord length.
    let lhs = mc_mean(exec, samples, seed, task_tag("cov2_lhs"), |rng| {
        let v = gaussian_velocity(rng);
        let a = uniform_in_box(rng, &lo, &hi);
        let b = uniform_in_box(rng, &lo, &hi);
        let u: f64 = rng.random();
        if !dom.contains(&a) || !dom.contains(&b) {
            return Ok(0.0);
        }
        let d = v.normalize();
        let la = -chord_through(dom, &a, &d)?.0;
        let lb = -chord_through(dom, &b, &d)?.0;
        let ((x, lx), (y, ly)) = if la <= lb { ((a, la), (b, lb)) } else { ((b, lb), (a, la)) };
        let r = lx + u * (ly - lx);
        // pair density on D1 is 2 / vol^2
        Ok(0.5 * vol * vol * norm * (ly - lx) * cov2_test_fn(&v, &y, &x, r) * v.norm_squared().exp())
    })?;
    let rhs = mc_mean(exec, samples, seed, task_tag("cov2_rhs"), |rng| {
        let v = gaussian_velocity(rng);
        let y = uniform_in_box(rng, &lo, &hi);
        let x = uniform_in_box(rng, &elo, &ehi);
        let u: f64 = rng.random();
        if !dom.contains(&y) || dom.contains(&x) {
            return Ok(0.0);
        }
        let d = v.normalize();
        let lp = chord_through(dom, &y, &d)?.1;
        let Some((t1, t2)) = reentry(dom, &x, &d)? else {
            return Ok(0.0);
        };
        let top = t2.min(lp);
        if t1 >= lp || top <= t1 {
            return Ok(0.0);
        }
        let r = t1 + u * (top - t1);
        Ok(vol * evol * norm * (top - t1) * cov2_test_fn(&v, &(y + d * r), &(x + d * r), r) * v.norm_squared().exp())
    })?;

    let tag = task_tag("cov2_maps");
    let sizes = chunk_sizes(samples, CHUNK);
    let parts = exec.try_map(sizes.len(), |c| -> Result<Membership> {
        let mut rng = chunk_rng(seed, tag, c as u64);
        let mut m = Membership {
            tuples: 0,
            round_trip: 0.0,
            violations: 0,
            first: None,
        };
        for _ in 0..sizes[c] {
            let v = gaussian_velocity(&mut rng);
            let d = v.normalize();
            // forward map on a tuple of the left domain
            let a = dom.sample_interior(&mut rng);
            let b = dom.sample_interior(&mut rng);
            let la = -chord_through(dom, &a, &d)?.0;
            let lb = -chord_through(dom, &b, &d)?.0;
            let ((x, lx), (y, ly)) = if la <= lb { ((a, la), (b, lb)) } else { ((b, lb), (a, la)) };
            let r = lx + rng.random::<f64>() * (ly - lx);
            let (yp, xp) = (y - d * r, x - d * r);
            let mut ok = inside(dom, &yp, tol) && (!dom.contains(&xp) || dom.level_distance(&xp) <= tol);
            if ok {
                let lp = dom.line_interval(&yp, &d)?.map_or(0.0, |(_, t1)| t1);
                ok = match reentry(dom, &xp, &d)? {
                    Some((t1, t2)) => t1 < lp + tol && r + tol >= t1 && r <= t2.min(lp) + tol,
                    // an exterior start exactly on the surface re-enters at t = 0
                    None => dom.level_distance(&xp) <= tol,
                };
            }
            if !ok {
                m.fail(flat(&[&v, &y, &x], &[r]));
            }
            m.round_trip = m.round_trip.max((yp + d * r - y).amax().max((xp + d * r - x).amax()));

            // inverse map: by the alternative description of Omega_{v, y},
            // x2 = z - t v^ with z inside and 0 < t < |y2 - q_+(y2)|, kept when exterior
            m.tuples += 2;
            let (y2, lp, x2) = loop {
                let y2 = dom.sample_interior(&mut rng);
                let lp = chord_through(dom, &y2, &d)?.1;
                let z = dom.sample_interior(&mut rng);
                let x2 = z - d * (rng.random::<f64>() * lp);
                if !dom.contains(&x2) {
                    break (y2, lp, x2);
                }
            };
            let Some((t1, t2)) = reentry(dom, &x2, &d)?.filter(|&(t1, _)| t1 < lp) else {
                m.fail(flat(&[&v, &y2, &x2], &[]));
                continue;
            };
            let top = t2.min(lp);
            let r2 = t1 + rng.random::<f64>() * (top - t1);
            let (ya, xa) = (y2 + d * r2, x2 + d * r2);
            let mut ok = inside(dom, &ya, tol) && inside(dom, &xa, tol);
            if ok {
                let lxa = dom.line_interval(&xa, &d)?.map_or(0.0, |(t0, _)| -t0);
                let lya = dom.line_interval(&ya, &d)?.map_or(0.0, |(t0, _)| -t0);
                ok = lxa <= lya + tol && lxa <= r2 + tol && r2 <= lya + tol;
            }
            if !ok {
                m.fail(flat(&[&v, &y2, &x2], &[r2]));
            }
            m.round_trip = m.round_trip.max((ya - d * r2 - y2).amax().max((xa - d * r2 - x2).amax()));
        }
        Ok(m)
    })?;
    Ok((Membership::merge(parts), lhs, rhs))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub tuples: usize,
    pub round_trip_max: f64,
    pub membership_violations: usize,
    /// `int h dv` for `h = exp(-|v - v0|^2)`, exactly `pi^(3/2)`.
    pub exact: f64,
    /// The same integral on a velocity quadrature.
    pub lhs: f64,
    /// Surface-cone form, Monte Carlo over boundary points.
    pub rhs: Estimate,
    pub z_score: f64,
}

/// Checks `int h(v) dv = int_{boundary} int_0^inf h((x - z) l) l^2 |(x - z).n(z)| dl dS(z)`
/// from the interior point `x`, together with the inverse map
/// `v -> (q_-(x, v), |v| / |x - q_-(x, v)|)`.
pub fn cone_jacobian(dom: &ConvexDomain, x: &Vec3, samples: usize, seed: u64, exec: Execution) -> Result<ConeReport> {
    if !dom.contains(x) {
        return Err(Error::NotInterior { phi: dom.phi(x) });
    }
    let v0 = Vector3::new(0.5, 0.0, 0.0);
    let h = |v: &Vec3| (-(v - v0).norm_squared()).exp();
    let c = dom.center();
    let quad = Adaptive {
        rel_tol: 1e-11,
        ..Default::default()
    };
    let rhs = mc_mean(exec, samples, seed, task_tag("cone_jacobian"), |rng| {
        let w = random_unit(rng);
        let rho = dom.forward_distance(&c, &w)?;
        let z = c + w * rho;
        let n = dom.normal(&z)?;
        let area = rho * rho / n.dot(&w).abs();
        let dvec = x - z;
        let dn = dvec.dot(&n).abs();
        let len = dvec.norm();
        let centre = dvec.dot(&v0) / (len * len);
        let (a, b) = ((centre - 7.0 / len).max(0.0), centre + 7.0 / len);
        if b <= 0.0 {
            return Ok(0.0);
        }
        let inner = quad.integrate(a, b, |l| h(&(dvec * l)) * l * l)?;
        Ok(4.0 * PI * area * dn * inner)
    })?;
    let vq = VelocityQuadrature::new(VelocityScheme::PolarAboutOrigin, 8.0, 48, 16, 16)?;
    let lhs: f64 = vq.nodes(&Vector3::zeros()).iter().map(|n| n.weight * h(&n.vstar)).sum();

    let tag = task_tag("cone_jacobian_maps");
    let sizes = chunk_sizes(samples, CHUNK);
    let parts = exec.try_map(sizes.len(), |ch| -> Result<(usize, f64, usize)> {
        let mut rng = chunk_rng(seed, tag, ch as u64);
        let (mut bad, mut worst) = (0, 0.0f64);
        for _ in 0..sizes[ch] {
            let w = random_unit(&mut rng);
            let z = c + w * dom.forward_distance(&c, &w)?;
            let len = (x - z).norm();
            let l = (0.05 + 4.0 * rng.random::<f64>()) / len;
            let v = (x - z) * l;
            if dom.normal(&z)?.dot(&v) >= 0.0 {
                bad += 1;
            }
            let back = dom.backward_exit(x, &v)?;
            let l_back = v.norm() / (x - back.point).norm();
            worst = worst.max((back.point - z).amax()).max(((l_back - l) / l).abs());
        }
        Ok((sizes[ch], worst, bad))
    })?;
    let exact = PI.powf(1.5);
    Ok(ConeReport {
        tuples: parts.iter().map(|p| p.0).sum(),
        round_trip_max: parts.iter().fold(0.0, |a, p| a.max(p.1)),
        membership_violations: parts.iter().map(|p| p.2).sum(),
        exact,
        lhs,
        rhs,
        z_score: (rhs.value - exact).abs() / rhs.stderr.max(1e-300),
    })
}
