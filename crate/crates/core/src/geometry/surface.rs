use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ConvexDomain, Vec3};
use crate::error::Result;
use crate::exec::{chunk_rng, task_tag, Execution};

/// Monte Carlo value with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl ConvexDomain {
    /// `int_{boundary} 1 / |x - q|^2 dS(q)`, written as the solid-angle
    /// integral of `1 / N(omega)` seen from `x`, with stratified sampling
    /// (two jittered directions per equal-area stratum).
    pub fn surface_singular_integral(&self, x: &Vec3, samples: usize, seed: u64, exec: Execution) -> Result<Estimate> {
        let n_theta = ((samples as f64 / 4.0).sqrt().floor() as usize).max(1);
        let n_phi = 2 * n_theta;
        let area = 4.0 * PI / (n_theta * n_phi) as f64;
        let tag = task_tag("surface_singular_integral");
        let rows = exec.try_map(n_theta, |i| -> Result<(f64, f64)> {
            let mut rng = chunk_rng(seed, tag, i as u64);
            let mut sum = 0.0;
            let mut var = 0.0;
            for j in 0..n_phi {
                let mut pair = [0.0; 2];
                for p in pair.iter_mut() {
                    let c = -1.0 + 2.0 * (i as f64 + rng.random::<f64>()) / n_theta as f64;
                    let ph = 2.0 * PI * (j as f64 + rng.random::<f64>()) / n_phi as f64;
                    let st = (1.0 - c * c).max(0.0).sqrt();
                    let w = Vector3::new(st * ph.cos(), st * ph.sin(), c);
                    let t = self.forward_distance(x, &w)?;
                    let n = self.normal(&(x + w * t))?.dot(&w).abs();
                    *p = 1.0 / n;
                }
                sum += area * 0.5 * (pair[0] + pair[1]);
                let s2 = 0.5 * (pair[0] - pair[1]).powi(2);
                var += area * area * s2 / 2.0;
            }
            Ok((sum, var))
        })?;
        let value: f64 = rows.iter().map(|r| r.0).sum();
        let var: f64 = rows.iter().map(|r| r.1).sum();
        Ok(Estimate {
            value,
            stderr: var.sqrt(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::DomainSpec;
    use super::*;

    #[test]
    fn ball_center_is_four_pi() {
        let d = ConvexDomain::from_spec(&DomainSpec::ball(1.0)).unwrap();
        let e = d
            .surface_singular_integral(&Vector3::zeros(), 4000, 1, Execution::Sequential)
            .unwrap();
        assert!((e.value - 4.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn ball_off_center_closed_form() {
        let d = ConvexDomain::from_spec(&DomainSpec::ball(1.0)).unwrap();
        let a: f64 = 0.9;
        let e = d
            .surface_singular_integral(&Vector3::new(a, 0.0, 0.0), 40_000, 3, Execution::Sequential)
            .unwrap();
        let exact = 2.0 * PI / a * ((1.0 + a) / (1.0 - a)).ln();
        assert!((e.value - exact).abs() < 4.0 * e.stderr + 1e-3 * exact, "{e:?} vs {exact}");
    }
}
