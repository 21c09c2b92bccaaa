//! Planar constructions: the circle distance comparison and the curvature
//! bound for convex arcs leaving a tangent disk, the latter instantiated on
//! normal sections of a three-dimensional domain.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{Vector2, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{random_unit, ConvexDomain, Vec3};
use crate::error::Result;
use crate::exec::{chunk_rng, chunk_sizes, task_tag, Execution};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarReport {
    pub samples: usize,
    /// Samples for which the construction does not occur (e.g. no exit point).
    pub skipped: usize,
    pub violations: usize,
    /// Worst observed value of the ratio the statement bounds.
    pub constant: f64,
}

const CHUNK: usize = 256;

/// Circle of radius `r` about the origin, chord `AB`, `Y` on `AM` or `BM`:
/// checks `dist(Y, circle) >= |Z - Y| / sqrt 2`. The reported constant is the
/// smallest observed `dist(Y, circle) / |Z - Y|`.
pub fn distance_comparison(samples: usize, seed: u64, exec: Execution) -> PlanarReport {
    let tag = task_tag("distance_comparison");
    let sizes = chunk_sizes(samples, CHUNK);
    let parts = exec.map(sizes.len(), |c| {
        let mut rng = chunk_rng(seed, tag, c as u64);
        let mut viol = 0;
        let mut worst = f64::INFINITY;
        for _ in 0..sizes[c] {
            let r = 0.1 + 9.9 * rng.random::<f64>();
            let a0 = 2.0 * PI * rng.random::<f64>();
            let sep = PI * (1e-3 + (1.0 - 2e-3) * rng.random::<f64>());
            let a = Vector2::new(a0.cos(), a0.sin()) * r;
            let b = Vector2::new((a0 + sep).cos(), (a0 + sep).sin()) * r;
            let m = (a + b) * 0.5;
            let n = m.normalize() * r;
            let t: f64 = rng.random();
            // Y on AM or BM, Z on the matching side AN or BN
            let (end, y) = if rng.random::<bool>() {
                (a, a + (m - a) * t)
            } else {
                (b, b + (m - b) * t)
            };
            let up = (n - m).normalize();
            // Z = Y + s up lies on the segment end -> N
            let e = n - end;
            let det = up.x * (-e.y) - up.y * (-e.x);
            let rhs = end - y;
            let s = (rhs.x * (-e.y) - rhs.y * (-e.x)) / det;
            let zy = s.abs();
            let dist = r - y.norm();
            if zy > 0.0 {
                worst = worst.min(dist / zy);
            }
            if dist < FRAC_1_SQRT_2 * zy - 1e-12 * r {
                viol += 1;
            }
        }
        (viol, worst)
    });
    PlanarReport {
        samples,
        skipped: 0,
        violations: parts.iter().map(|p| p.0).sum(),
        constant: parts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
    }
}

/// Normal sections of the domain through a random boundary point `A`: a disk
/// of radius `r > 1/k(A)` tangent at `A` from inside is followed until the
/// section leaves it at `B`; some point of the arc `AB` must have curvature
/// at most `1/r`. The reported constant is the largest observed
/// `r * min_{arc} k`.
pub fn curvature_sections(domain: &ConvexDomain, samples: usize, seed: u64, exec: Execution) -> Result<PlanarReport> {
    let tag = task_tag("curvature_2d");
    let sizes = chunk_sizes(samples, 64);
    let parts = exec.try_map(sizes.len(), |c| -> Result<(usize, usize, f64)> {
        let mut rng = chunk_rng(seed, tag, c as u64);
        let (mut skipped, mut viol, mut worst) = (0usize, 0usize, 0.0f64);
        for _ in 0..sizes[c] {
            match section_sample(domain, &mut rng)? {
                None => skipped += 1,
                Some(ratio) => {
                    worst = worst.max(ratio);
                    if ratio > 1.0 + 1e-6 {
                        viol += 1;
                    }
                }
            }
        }
        Ok((skipped, viol, worst))
    })?;
    Ok(PlanarReport {
        samples,
        skipped: parts.iter().map(|p| p.0).sum(),
        violations: parts.iter().map(|p| p.1).sum(),
        constant: parts.iter().map(|p| p.2).fold(0.0, f64::max),
    })
}

fn section_sample<R: Rng + ?Sized>(domain: &ConvexDomain, rng: &mut R) -> Result<Option<f64>> {
    let c = domain.center();
    let dir = random_unit(rng);
    let a = c + dir * domain.forward_distance(&c, &dir)?;
    let n = domain.normal(&a)?;
    let (t1, t2) = super::tangent_basis(&n);
    let ang = 2.0 * PI * rng.random::<f64>();
    let t = t1 * ang.cos() + t2 * ang.sin();
    let m = n.cross(&t);
    let ka = section_curvature(domain, &a, &m)?;
    let r = 1.0 / (ka * (0.2 + 0.75 * rng.random::<f64>()));
    let disk = a - n * r;
    // walk along the section from A towards +t, rays from an interior pivot
    let h = 0.25 * domain.diameter().min(r);
    let pivot = a - n * h;
    if !domain.contains(&pivot) {
        return Ok(None);
    }
    let point = |theta: f64| -> Result<Vec3> {
        let d = n * theta.cos() + t * theta.sin();
        Ok(pivot + d * domain.forward_distance(&pivot, &d)?)
    };
    // relative slack so the return to A at a full turn is not read as an exit
    let outside = |p: &Vec3| (p - disk).norm() > r * (1.0 + 1e-9);
    let steps = 2048;
    let mut exit = None;
    for k in 1..=steps {
        let th = 2.0 * PI * k as f64 / steps as f64;
        if outside(&point(th)?) {
            let (mut lo, mut hi) = (2.0 * PI * (k - 1) as f64 / steps as f64, th);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if outside(&point(mid)?) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            exit = Some(hi);
            break;
        }
    }
    let Some(theta_b) = exit else {
        return Ok(None);
    };
    // the arc must stay in the segment cut off by the minor arc: B may not lie
    // more than half a turn around the disk from A in the direction of travel
    let b = point(theta_b)?;
    let rel = b - disk;
    if rel.dot(&t) < 0.0 {
        return Ok(None);
    }
    let mut kmin = f64::INFINITY;
    let arc = 1024;
    for k in 1..=arc {
        let p = point(theta_b * k as f64 / arc as f64)?;
        kmin = kmin.min(section_curvature(domain, &p, &m)?);
    }
    Ok(Some(kmin * r))
}

/// Curvature of the planar curve `boundary ∩ plane` at `p`, for the plane
/// through `p` with unit normal `m`.
fn section_curvature(domain: &ConvexDomain, p: &Vec3, m: &Vec3) -> Result<f64> {
    let g = domain.grad(p);
    let gn = g.norm();
    let nrm = g / gn;
    let tangent = m.cross(&nrm).normalize();
    let kn = tangent.dot(&(domain.hessian(p) * tangent)) / gn;
    let in_plane_normal: Vector3<f64> = m.cross(&tangent);
    Ok(kn / nrm.dot(&in_plane_normal).abs())
}

#[cfg(test)]
mod tests {
    use super::super::DomainSpec;
    use super::*;

    #[test]
    fn circle_comparison_holds() {
        let r = distance_comparison(10_000, 5, Execution::Sequential);
        assert_eq!(r.violations, 0);
        assert!(r.constant >= FRAC_1_SQRT_2 - 1e-9);
    }

    #[test]
    fn ellipsoid_sections_obey_curvature_bound() {
        let d = ConvexDomain::from_spec(&DomainSpec::ellipsoid(2.0, 1.0, 0.8)).unwrap();
        let r = curvature_sections(&d, 200, 9, Execution::Sequential).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.skipped < r.samples);
    }

    #[test]
    fn section_curvature_of_ball_is_one() {
        let d = ConvexDomain::from_spec(&DomainSpec::ball(1.0)).unwrap();
        let p = Vector3::new(0.0, 0.0, 1.0);
        let k = section_curvature(&d, &p, &Vector3::new(0.0, 1.0, 0.0)).unwrap();
        assert!((k - 1.0).abs() < 1e-12);
    }
}
