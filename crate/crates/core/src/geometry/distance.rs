use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};

use super::{ConvexDomain, Vec3};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct Distance {
    pub value: f64,
    pub foot: Vec3,
    /// The constrained Newton solve failed from every seed and the value is
    /// the best ray hit of the 26-direction fallback.
    pub fallback: bool,
}

impl ConvexDomain {
    /// Euclidean distance from an interior point to the boundary.
    pub fn distance_to_boundary(&self, x: &Vec3) -> Result<Distance> {
        let phi = self.phi(x);
        if !(phi < 0.0) {
            return Err(Error::NotInterior { phi });
        }
        let mut hits: Vec<Vec3> = Vec::with_capacity(5);
        let g = self.grad(x);
        if g.norm() > 0.0 {
            let d = g.normalize();
            hits.push(x + d * self.forward_distance(x, &d)?);
        }
        let rel = x - self.center;
        for i in 0..3 {
            let signs: &[f64] = if rel[i] > 0.0 {
                &[1.0]
            } else if rel[i] < 0.0 {
                &[-1.0]
            } else {
                &[1.0, -1.0]
            };
            for &s in signs {
                let d = Vector3::from_fn(|j, _| if j == i { s } else { 0.0 });
                hits.push(x + d * self.forward_distance(x, &d)?);
            }
        }
        let mut best = self.best_candidate(x, &hits);
        if best.is_none() {
            let dirs = cube_directions();
            let mut more = Vec::with_capacity(dirs.len());
            for d in &dirs {
                more.push(x + d * self.forward_distance(x, d)?);
            }
            best = self.best_candidate(x, &more);
            hits.extend(more);
            if best.is_none() {
                let foot = hits
                    .iter()
                    .min_by(|a, b| (*a - x).norm().total_cmp(&(*b - x).norm()))
                    .copied()
                    .expect("at least 26 fallback hits");
                return Ok(Distance {
                    value: (foot - x).norm(),
                    foot,
                    fallback: true,
                });
            }
        }
        let (mut value, mut foot) = best.expect("checked above");
        // a seed hit can only overestimate; keep whichever is smaller
        for h in &hits {
            let d = (h - x).norm();
            if d < value {
                value = d;
                foot = *h;
            }
        }
        Ok(Distance {
            value,
            foot,
            fallback: false,
        })
    }

    fn best_candidate(&self, x: &Vec3, seeds: &[Vec3]) -> Option<(f64, Vec3)> {
        seeds
            .iter()
            .filter_map(|s| self.lagrange_newton(x, s))
            .map(|q| ((q - x).norm(), q))
            .min_by(|a, b| a.0.total_cmp(&b.0))
    }

    /// Newton on the optimality system `q - x + lambda grad phi(q) = 0,
    /// phi(q) = 0`. Returns the foot only for a converged local minimum.
    fn lagrange_newton(&self, x: &Vec3, seed: &Vec3) -> Option<Vec3> {
        let mut q = *seed;
        let g0 = self.grad(&q);
        let mut lam = -(q - x).dot(&g0) / g0.norm_squared();
        let scale = self.bounding_radius;
        for _ in 0..60 {
            let g = self.grad(&q);
            let h = self.hessian(&q);
            let r = q - x + g * lam;
            let f = Vector4::new(r[0], r[1], r[2], self.phi(&q));
            let top = Matrix3::identity() + h * lam;
            let mut jac = Matrix4::zeros();
            jac.fixed_view_mut::<3, 3>(0, 0).copy_from(&top);
            jac.fixed_view_mut::<3, 1>(0, 3).copy_from(&g);
            jac.fixed_view_mut::<1, 3>(3, 0).copy_from(&g.transpose());
            let step = jac.lu().solve(&(-f))?;
            let dq = Vector3::new(step[0], step[1], step[2]);
            q += dq;
            lam += step[3];
            if !q.iter().all(|c| c.is_finite()) {
                return None;
            }
            if dq.norm() <= 1e-15 * scale {
                break;
            }
        }
        let g = self.grad(&q);
        let res = (q - x + g * lam).norm();
        if self.level_distance(&q) > 1e-12 * scale || res > 1e-10 * scale {
            return None;
        }
        // second-order condition: I + lambda H positive semidefinite on the tangent plane
        let n = g.normalize();
        let (t1, t2) = super::tangent_basis(&n);
        let m = Matrix3::identity() + self.hessian(&q) * lam;
        let a = t1.dot(&(m * t1));
        let b = t1.dot(&(m * t2));
        let c = t2.dot(&(m * t2));
        let lo = 0.5 * (a + c) - (0.25 * (a - c).powi(2) + b * b).sqrt();
        if lo < -1e-9 {
            return None;
        }
        Some(q)
    }
}

fn cube_directions() -> Vec<Vec3> {
    let mut out = Vec::with_capacity(26);
    for i in -1i32..=1 {
        for j in -1i32..=1 {
            for k in -1i32..=1 {
                if (i, j, k) != (0, 0, 0) {
                    out.push(Vector3::new(i as f64, j as f64, k as f64).normalize());
                }
            }
        }
    }
    out
}
