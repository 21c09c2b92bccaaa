use serde::{Deserialize, Serialize};

use super::{fibonacci_sphere, tangent_basis, ConvexDomain, Vec3};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RollingRadii {
    /// Radius of the enclosing ball that touches the boundary from outside (`1 / min k1`).
    pub outer: f64,
    /// Radius of the inscribed ball that touches the boundary from inside (`1 / max k2`).
    pub inner: f64,
    pub min_curvature: f64,
    pub max_curvature: f64,
}

impl ConvexDomain {
    /// Principal curvatures `(k1, k2)`, `k1 <= k2`, at a boundary point.
    pub fn principal_curvatures(&self, q: &Vec3) -> Result<(f64, f64)> {
        if self.level_distance(q) > 1e3 * self.surface_tol() {
            return Err(Error::NotOnSurface { phi: self.phi(q) });
        }
        let g = self.grad(q);
        let gn = g.norm();
        if gn < self.tol.gradient {
            return Err(Error::DegenerateGradient);
        }
        let n = g / gn;
        let (t1, t2) = tangent_basis(&n);
        let h = self.hessian(q) / gn;
        let a = t1.dot(&(h * t1));
        let b = t1.dot(&(h * t2));
        let c = t2.dot(&(h * t2));
        let mid = 0.5 * (a + c);
        let rad = (0.25 * (a - c).powi(2) + b * b).sqrt();
        Ok((mid - rad, mid + rad))
    }

    /// Rolling radii from `samples` boundary points (Fibonacci lattice seen from the center).
    pub fn rolling_radii(&self, samples: usize) -> Result<RollingRadii> {
        if samples < 100 {
            return Err(Error::InvalidParameter(
                "rolling radii need at least 100 boundary samples".into(),
            ));
        }
        let mut kmin = f64::INFINITY;
        let mut kmax: f64 = 0.0;
        // axis directions catch the extremal curvatures of axis-aligned shapes
        let mut dirs = fibonacci_sphere(samples);
        for i in 0..3 {
            for s in [1.0, -1.0] {
                dirs.push(nalgebra::Vector3::from_fn(|j, _| if j == i { s } else { 0.0 }));
            }
        }
        for d in dirs {
            let t = self.forward_distance(&self.center, &d)?;
            let (k1, k2) = self.principal_curvatures(&(self.center + d * t))?;
            if k1 <= 0.0 {
                return Err(Error::CurvatureDegenerate(k1));
            }
            kmin = kmin.min(k1);
            kmax = kmax.max(k2);
        }
        Ok(RollingRadii {
            outer: 1.0 / kmin,
            inner: 1.0 / kmax,
            min_curvature: kmin,
            max_curvature: kmax,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::DomainSpec;
    use super::*;
    use nalgebra::Vector3;

    /// Curvature of the normal section in the direction `t` by finite differences
    /// of the surface height over the tangent plane.
    fn section_curvature(d: &ConvexDomain, q: &Vec3, t: &Vec3) -> f64 {
        let n = d.normal(q).unwrap();
        let h = 1e-4;
        let height = |s: f64| {
            // surface point above q + s t along -n
            let base = q + t * s;
            let (t0, _) = d.line_interval(&(base + n * 0.5), &(-n)).unwrap().unwrap();
            0.5 - t0
        };
        -(height(h) - 2.0 * height(0.0) + height(-h)) / (h * h)
    }

    #[test]
    fn ball_curvature() {
        let d = ConvexDomain::from_spec(&DomainSpec::ball(2.0)).unwrap();
        let (k1, k2) = d.principal_curvatures(&Vector3::new(0.0, 2.0, 0.0)).unwrap();
        assert!((k1 - 0.5).abs() < 1e-12 && (k2 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ellipsoid_tip_matches_finite_differences() {
        let d = ConvexDomain::from_spec(&DomainSpec::ellipsoid(2.0, 1.0, 1.0)).unwrap();
        let q = Vector3::new(2.0, 0.0, 0.0);
        let (k1, k2) = d.principal_curvatures(&q).unwrap();
        // a^2/b^2 / a = 2 at the long tip
        assert!((k1 - 2.0).abs() < 1e-12 && (k2 - 2.0).abs() < 1e-12);
        let fd = section_curvature(&d, &q, &Vector3::new(0.0, 1.0, 0.0));
        assert!((fd - 2.0).abs() < 1e-3, "fd={fd}");
    }

    #[test]
    fn ellipsoid_equator_matches_finite_differences() {
        let d = ConvexDomain::from_spec(&DomainSpec::ellipsoid(2.0, 1.0, 0.5)).unwrap();
        let q = Vector3::new(0.0, 1.0, 0.0);
        let (k1, k2) = d.principal_curvatures(&q).unwrap();
        let ka = section_curvature(&d, &q, &Vector3::new(1.0, 0.0, 0.0));
        let kc = section_curvature(&d, &q, &Vector3::new(0.0, 0.0, 1.0));
        assert!((k1 - ka.min(kc)).abs() < 1e-3);
        assert!((k2 - ka.max(kc)).abs() < 1e-3);
    }

    #[test]
    fn rolling_radii_of_ellipsoid() {
        let d = ConvexDomain::from_spec(&DomainSpec::ellipsoid(2.0, 1.0, 1.0)).unwrap();
        let r = d.rolling_radii(4000).unwrap();
        assert!((r.outer - 4.0).abs() < 1e-2, "{r:?}");
        assert!((r.inner - 0.5).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn superellipsoid_is_strictly_convex() {
        let d = ConvexDomain::from_spec(&DomainSpec::superellipsoid(1.0, 1.0, 1.0, 1.5)).unwrap();
        let r = d.rolling_radii(2000).unwrap();
        assert!(r.min_curvature > 0.0 && r.outer.is_finite());
    }

    #[test]
    fn off_surface_is_rejected() {
        let d = ConvexDomain::from_spec(&DomainSpec::ball(1.0)).unwrap();
        assert!(matches!(
            d.principal_curvatures(&Vector3::new(0.5, 0.0, 0.0)),
            Err(Error::NotOnSurface { .. })
        ));
    }
}
