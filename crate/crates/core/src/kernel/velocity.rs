use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{tangent_basis, Vec3};
use crate::quadrature::GaussLegendre;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityScheme {
    /// Spherical rule centered on the query velocity with its polar axis along it.
    PolarAboutQuery,
    /// Spherical rule centered on the origin.
    PolarAboutOrigin,
}

/// Product rule: Gauss-Legendre in radius and polar cosine, uniform in azimuth.
#[derive(Clone, Debug)]
pub struct VelocityQuadrature {
    scheme: VelocityScheme,
    vmax: f64,
    dims: [usize; 3],
    radial: Vec<(f64, f64)>,
    /// Local unit vectors (polar axis = e3) with angular weights.
    angular: Vec<(Vec3, f64)>,
}

/// One node of a velocity rule evaluated at a query velocity.
#[derive(Clone, Copy, Debug)]
pub struct VelocityNode {
    pub vstar: Vec3,
    /// Weight including the `r^2` Jacobian.
    pub weight: f64,
    /// Distance from the rule center.
    pub r: f64,
    /// Unit direction from the rule center.
    pub omega: Vec3,
}

impl VelocityQuadrature {
    pub fn new(scheme: VelocityScheme, vmax: f64, n_r: usize, n_theta: usize, n_phi: usize) -> Result<Self> {
        if !(vmax > 0.0) || n_r == 0 || n_theta == 0 || n_phi == 0 {
            return Err(Error::InvalidParameter(
                "velocity rule needs vmax > 0 and positive node counts".into(),
            ));
        }
        let radial = GaussLegendre::new(n_r).on(0.0, vmax).collect();
        let ct = GaussLegendre::new(n_theta);
        let mut angular = Vec::with_capacity(n_theta * n_phi);
        for (&c, &wc) in ct.nodes().iter().zip(ct.weights()) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for j in 0..n_phi {
                let ph = 2.0 * PI * (j as f64 + 0.5) / n_phi as f64;
                angular.push((
                    Vector3::new(s * ph.cos(), s * ph.sin(), c),
                    wc * 2.0 * PI / n_phi as f64,
                ));
            }
        }
        Ok(VelocityQuadrature {
            scheme,
            vmax,
            dims: [n_r, n_theta, n_phi],
            radial,
            angular,
        })
    }

    pub fn scheme(&self) -> VelocityScheme {
        self.scheme
    }

    pub fn vmax(&self) -> f64 {
        self.vmax
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.radial.len() * self.angular.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Same rule with every node count doubled.
    pub fn refined(&self) -> Result<Self> {
        let [a, b, c] = self.dims;
        Self::new(self.scheme, self.vmax, 2 * a, 2 * b, 2 * c)
    }

    /// Nodes placed around `v` (query-centered) or the origin.
    pub fn nodes(&self, v: &Vec3) -> Vec<VelocityNode> {
        let (center, frame) = match self.scheme {
            VelocityScheme::PolarAboutQuery => (*v, frame_along(v)),
            VelocityScheme::PolarAboutOrigin => (Vector3::zeros(), frame_along(&Vector3::zeros())),
        };
        let mut out = Vec::with_capacity(self.len());
        for &(r, wr) in &self.radial {
            for (loc, wa) in &self.angular {
                let omega = frame.0 * loc[0] + frame.1 * loc[1] + frame.2 * loc[2];
                out.push(VelocityNode {
                    vstar: center + omega * r,
                    weight: wr * r * r * wa,
                    r,
                    omega,
                });
            }
        }
        out
    }

    /// Sum of weights; the volume of the truncation ball up to rounding.
    pub fn total_weight(&self) -> f64 {
        self.nodes(&Vector3::zeros()).iter().map(|n| n.weight).sum()
    }
}

/// Orthonormal frame `(e1, e2, e3)` with `e3` along `v` (or the z axis for `v = 0`).
pub(crate) fn frame_along(v: &Vec3) -> (Vec3, Vec3, Vec3) {
    let n = v.norm();
    if n == 0.0 {
        return (Vector3::x(), Vector3::y(), Vector3::z());
    }
    let e3 = v / n;
    let (e1, e2) = tangent_basis(&e3);
    (e1, e2, e3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_ball_volume() {
        let q = VelocityQuadrature::new(VelocityScheme::PolarAboutOrigin, 8.0, 4, 3, 5).unwrap();
        let vol = 4.0 / 3.0 * PI * 512.0;
        assert!((q.total_weight() - vol).abs() < 1e-8 * vol);
    }

    #[test]
    fn query_centered_nodes_stay_in_ball() {
        let q = VelocityQuadrature::new(VelocityScheme::PolarAboutQuery, 3.0, 5, 4, 4).unwrap();
        let v = Vector3::new(1.0, -2.0, 0.5);
        for n in q.nodes(&v) {
            assert!((n.vstar - v).norm() <= 3.0 + 1e-12);
            assert!(n.r > 0.0);
        }
    }

    #[test]
    fn integrates_gaussian_moment() {
        let q = VelocityQuadrature::new(VelocityScheme::PolarAboutOrigin, 8.0, 48, 8, 8).unwrap();
        let s: f64 = q
            .nodes(&Vector3::zeros())
            .iter()
            .map(|n| n.weight * (-n.vstar.norm_squared()).exp())
            .sum();
        assert!((s - PI.powf(1.5)).abs() < 1e-10);
    }
}
