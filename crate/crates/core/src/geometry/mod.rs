//! Convex domains given by a smooth defining function, ray exits, distance
//! to the boundary, curvature, and the singular chord and surface integrals.

mod chord;
mod curvature;
mod distance;
mod domain;
pub mod planar;
mod ray;
mod surface;

pub use curvature::RollingRadii;
pub use distance::Distance;
pub use domain::{ConvexDomain, DomainKind, DomainSpec, Tolerances};
pub use ray::{BackwardExit, ExitRecord};
pub use surface::Estimate;

use nalgebra::Vector3;
use rand::Rng;

pub type Vec3 = Vector3<f64>;

/// Orthonormal pair completing `n` to a right-handed frame.
pub fn tangent_basis(n: &Vec3) -> (Vec3, Vec3) {
    let a = n.iamin();
    let axis = Vector3::from_fn(|i, _| if i == a { 1.0 } else { 0.0 });
    let t1 = n.cross(&axis).normalize();
    let t2 = n.cross(&t1);
    (t1, t2)
}

/// Near-uniform unit vectors on a Fibonacci lattice.
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            Vector3::new(r * t.cos(), r * t.sin(), z)
        })
        .collect()
}

pub fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let t: f64 = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vector3::new(r * t.cos(), r * t.sin(), z)
}

impl ConvexDomain {
    /// Uniform point in the domain by rejection from the bounding box.
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        let (lo, hi) = self.bounding_box();
        loop {
            let x = Vector3::from_fn(|i, _| lo[i] + (hi[i] - lo[i]) * rng.random::<f64>());
            if self.contains(&x) {
                return x;
            }
        }
    }
}
