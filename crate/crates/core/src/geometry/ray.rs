use serde::{Deserialize, Serialize};

use super::{ConvexDomain, Vec3};
use crate::error::{Error, Result};

/// Backward and forward exit data of the ray `x + t v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitRecord {
    pub tau_minus: f64,
    pub q_minus: [f64; 3],
    /// `|n(q_-) . v/|v||`
    pub n_minus: f64,
    pub tau_plus: f64,
    pub q_plus: [f64; 3],
    pub n_plus: f64,
}

/// Backward exit only; what the transport operators need.
#[derive(Clone, Copy, Debug)]
pub struct BackwardExit {
    pub tau: f64,
    pub point: Vec3,
    pub normal_component: f64,
}

const MAX_BISECTIONS: usize = 200;

impl ConvexDomain {
    /// Refine a sign change of `g` on `[lo, hi]` (`g(lo) < 0 <= g(hi)` when
    /// `rising`, the reverse otherwise). Bisection runs until the bracket is
    /// narrower than `tol_root * max(|lo|, |hi|)`, then one Newton step from
    /// the midpoint polishes the root.
    fn refine_root(&self, origin: &Vec3, dir: &Vec3, mut lo: f64, mut hi: f64, rising: bool) -> Result<f64> {
        let g = |t: f64| self.phi(&(origin + dir * t));
        let neg_side = |val: f64| if rising { val < 0.0 } else { val >= 0.0 };
        let mut iters = 0;
        while (hi - lo) > self.tol.root * lo.abs().max(hi.abs()).max(1e-300) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if neg_side(g(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
            iters += 1;
            if iters > MAX_BISECTIONS {
                return Err(Error::NoConvergence(format!("bracket [{lo}, {hi}] did not shrink")));
            }
        }
        let mid = 0.5 * (lo + hi);
        let p = origin + dir * mid;
        let slope = self.grad(&p).dot(dir);
        let val = self.phi(&p);
        if slope != 0.0 && slope.is_finite() {
            let t = mid - val / slope;
            if t >= lo && t <= hi {
                return Ok(t);
            }
        }
        Ok(mid)
    }

    /// Distance from an interior point along unit direction `dir` to the boundary.
    pub fn forward_distance(&self, x: &Vec3, dir: &Vec3) -> Result<f64> {
        let h = self.bounding_radius / 64.0;
        let reach = 2.0 * self.bounding_radius + (x - self.center).norm();
        let steps = (reach / h).ceil() as usize + 2;
        let mut prev = 0.0;
        for k in 1..=steps {
            let t = k as f64 * h;
            if self.phi(&(x + dir * t)) >= 0.0 {
                return self.refine_root(x, dir, prev, t, true);
            }
            prev = t;
        }
        Err(Error::NoConvergence("ray never left the bounding ball".into()))
    }

    fn check_query(&self, x: &Vec3) -> Result<()> {
        let phi = self.phi(x);
        if !(phi < 0.0) {
            return Err(Error::NotInterior { phi });
        }
        if self.level_distance(x) < self.surface_tol() {
            return Err(Error::RayDegenerate(format!(
                "query lies within {:e} of the boundary",
                self.surface_tol()
            )));
        }
        Ok(())
    }

    /// Backward exit time, point and normal component without the grazing check.
    pub fn backward_exit(&self, x: &Vec3, v: &Vec3) -> Result<BackwardExit> {
        let speed = v.norm();
        if speed == 0.0 {
            return Err(Error::ZeroVelocity);
        }
        let phi = self.phi(x);
        if !(phi < 0.0) {
            return Err(Error::NotInterior { phi });
        }
        let dir = -v / speed;
        let t = self.forward_distance(x, &dir)?;
        let point = x + dir * t;
        let n = self.normal(&point)?;
        Ok(BackwardExit {
            tau: t / speed,
            point,
            normal_component: n.dot(&dir).abs(),
        })
    }

    /// Strict exit record. Rejects queries on the surface and grazing exits.
    pub fn exit_record(&self, x: &Vec3, v: &Vec3) -> Result<ExitRecord> {
        let speed = v.norm();
        if speed == 0.0 {
            return Err(Error::ZeroVelocity);
        }
        self.check_query(x)?;
        let rec = self.trace(x, v)?;
        if rec.n_minus < self.tol.grazing || rec.n_plus < self.tol.grazing {
            return Err(Error::RayDegenerate(format!(
                "grazing exit (normal components {:e}, {:e})",
                rec.n_minus, rec.n_plus
            )));
        }
        Ok(rec)
    }

    /// Exit record without the surface and grazing checks.
    pub fn trace(&self, x: &Vec3, v: &Vec3) -> Result<ExitRecord> {
        let speed = v.norm();
        if speed == 0.0 {
            return Err(Error::ZeroVelocity);
        }
        let phi = self.phi(x);
        if !(phi < 0.0) {
            return Err(Error::NotInterior { phi });
        }
        let d = v / speed;
        let tm = self.forward_distance(x, &(-d))?;
        let tp = self.forward_distance(x, &d)?;
        let qm = x - d * tm;
        let qp = x + d * tp;
        let nm = self.normal(&qm)?.dot(&d).abs();
        let np = self.normal(&qp)?.dot(&d).abs();
        Ok(ExitRecord {
            tau_minus: tm / speed,
            q_minus: qm.into(),
            n_minus: nm,
            tau_plus: tp / speed,
            q_plus: qp.into(),
            n_plus: np,
        })
    }

    /// Parameter interval `(t0, t1)` on which `p + t dir` lies in the domain,
    /// for any base point `p` and unit `dir`. `None` if the line misses or
    /// only touches the closure.
    pub fn line_interval(&self, p: &Vec3, dir: &Vec3) -> Result<Option<(f64, f64)>> {
        // clip against a slightly inflated bounding ball
        let r = self.bounding_radius * (1.0 + 1e-9);
        let w = p - self.center;
        let b = w.dot(dir);
        let c = w.norm_squared() - r * r;
        let disc = b * b - c;
        if disc <= 0.0 {
            return Ok(None);
        }
        let sq = disc.sqrt();
        let (mut a, mut z) = (-b - sq, -b + sq);
        let gp = |t: f64| self.grad(&(p + dir * t)).dot(dir);
        if gp(a) >= 0.0 || gp(z) <= 0.0 {
            return Ok(None);
        }
        // minimize the convex restriction: g'(t) = 0 by bisection + Newton
        let (ta, tz) = (a, z);
        let mut tmin = 0.5 * (a + z);
        for _ in 0..200 {
            let d1 = gp(tmin);
            let d2 = dir.dot(&(self.hessian(&(p + dir * tmin)) * dir));
            if d1 == 0.0 || (d2 > 0.0 && (d1 / d2).abs() < 1e-15 * self.bounding_radius) {
                break;
            }
            if d1 < 0.0 {
                a = tmin;
            } else {
                z = tmin;
            }
            let newton = tmin - d1 / d2;
            tmin = if d2 > 0.0 && newton > a && newton < z {
                newton
            } else {
                0.5 * (a + z)
            };
            if (z - a) < 1e-15 * self.bounding_radius {
                break;
            }
        }
        if self.phi(&(p + dir * tmin)) >= 0.0 {
            return Ok(None);
        }
        let t0 = self.refine_root(p, dir, ta, tmin, false)?;
        let t1 = self.refine_root(p, dir, tmin, tz, true)?;
        Ok(Some((t0, t1)))
    }
}

#[cfg(test)]
mod tests {
    use super::super::DomainSpec;
    use super::*;
    use nalgebra::Vector3;

    fn ball() -> ConvexDomain {
        ConvexDomain::from_spec(&DomainSpec::ball(1.0)).unwrap()
    }

    #[test]
    fn ball_center_exits() {
        let r = ball()
            .exit_record(&Vector3::zeros(), &Vector3::new(1.0, 0.0, 0.0))
            .unwrap();
        assert!((r.tau_minus - 1.0).abs() < 1e-12);
        assert!((r.tau_plus - 1.0).abs() < 1e-12);
        assert!((r.q_minus[0] + 1.0).abs() < 1e-12);
        assert!((r.n_minus - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ellipsoid_off_center() {
        let d = ConvexDomain::from_spec(&DomainSpec::ellipsoid(2.0, 1.0, 1.0)).unwrap();
        let r = d
            .exit_record(&Vector3::new(0.5, 0.0, 0.0), &Vector3::new(0.0, 1.0, 0.0))
            .unwrap();
        let expect = (1.0f64 - 0.0625).sqrt();
        assert!((r.tau_minus - expect).abs() < 1e-12);
        assert!((r.tau_plus - expect).abs() < 1e-12);
    }

    #[test]
    fn speed_scales_times() {
        let r = ball()
            .exit_record(&Vector3::zeros(), &Vector3::new(2.0, 0.0, 0.0))
            .unwrap();
        assert!((r.tau_minus - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_surface_and_exterior() {
        let b = ball();
        let v = Vector3::new(1.0, 0.0, 0.0);
        assert!(matches!(
            b.exit_record(&Vector3::new(1.0, 0.0, 0.0), &v),
            Err(Error::NotInterior { .. })
        ));
        assert!(matches!(
            b.exit_record(&Vector3::new(1.0 - 1e-13, 0.0, 0.0), &v),
            Err(Error::RayDegenerate(_))
        ));
        assert!(matches!(
            b.exit_record(&Vector3::zeros(), &Vector3::zeros()),
            Err(Error::ZeroVelocity)
        ));
    }

    #[test]
    fn line_interval_through_exterior_point() {
        let b = ball();
        let (t0, t1) = b
            .line_interval(&Vector3::new(-3.0, 0.5, 0.0), &Vector3::new(1.0, 0.0, 0.0))
            .unwrap()
            .unwrap();
        let h = (1.0f64 - 0.25).sqrt();
        assert!((t0 - (3.0 - h)).abs() < 1e-12);
        assert!((t1 - (3.0 + h)).abs() < 1e-12);
        assert!(b
            .line_interval(&Vector3::new(-3.0, 1.5, 0.0), &Vector3::new(1.0, 0.0, 0.0))
            .unwrap()
            .is_none());
    }

    #[test]
    fn loose_root_tolerance_degrades_accuracy() {
        let tol = super::super::Tolerances {
            root: 1e-2,
            ..Default::default()
        };
        let b = ConvexDomain::with_tolerances(&DomainSpec::ball(1.0), tol).unwrap();
        let x = Vector3::new(0.3, 0.1, -0.2);
        let v = Vector3::new(0.4, -0.7, 0.2);
        let r = b.exit_record(&x, &v).unwrap();
        let d = v.normalize();
        let bb = x.dot(&d);
        let exact = bb + (bb * bb - x.norm_squared() + 1.0).sqrt();
        assert!((r.tau_minus * v.norm() - exact).abs() > 1e-9);
    }
}
