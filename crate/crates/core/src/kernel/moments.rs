use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{CollisionModel, VelocityQuadrature, VelocityScheme};
use crate::error::{Error, Result};
use crate::field::PhaseFunction;
use crate::geometry::Vec3;

/// Quadrature value with the estimated fraction of mass beyond the truncation radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub tail_fraction: f64,
}

pub const TAIL_TOL: f64 = 1e-5;

impl MomentEstimate {
    pub fn truncation_warning(&self, tail_tol: f64) -> Option<String> {
        (self.tail_fraction > tail_tol).then(|| {
            format!(
                "estimated tail mass {:.3e} beyond vmax exceeds {tail_tol:e}",
                self.tail_fraction
            )
        })
    }
}

/// Axisymmetric rule for moments: radius `[0, vmax]` and polar cosine, both
/// composite Gauss-Legendre with 16-node panels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRule {
    pub vmax: f64,
    pub radial_panels: usize,
    pub angular_panels: usize,
}

impl Default for MomentRule {
    fn default() -> Self {
        MomentRule {
            vmax: 8.0,
            radial_panels: 6,
            angular_panels: 8,
        }
    }
}

impl MomentRule {
    pub fn refined(&self) -> Self {
        MomentRule {
            radial_panels: 2 * self.radial_panels,
            angular_panels: 2 * self.angular_panels,
            ..*self
        }
    }

    fn nodes(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let g = crate::quadrature::gl16();
        let h = (b - a) / panels as f64;
        (0..panels)
            .flat_map(|k| g.on(a + k as f64 * h, a + (k + 1) as f64 * h).collect::<Vec<_>>())
            .collect()
    }
}

/// `K f (x, v) = int k(v, v*) f(x, v*) dv*` on the given rule.
pub fn apply_k(model: &CollisionModel, quad: &VelocityQuadrature, f: &dyn PhaseFunction, x: &Vec3, v: &Vec3) -> Result<f64> {
    let speed = v.norm();
    let mut sum = 0.0;
    for node in quad.nodes(v) {
        let val = f.eval(x, &node.vstar)?;
        if val == 0.0 {
            continue;
        }
        let k = match quad.scheme() {
            VelocityScheme::PolarAboutQuery => {
                model.kernel_polar_times_r(speed, v.dot(&node.omega), node.r, node.vstar.norm()) / node.r
            }
            VelocityScheme::PolarAboutOrigin => model.kernel(v, &node.vstar)?,
        };
        sum += node.weight * k * val;
    }
    Ok(sum)
}

/// Fraction of `int |k(v, .)|` that a query-centered rule of radius `vmax` misses,
/// estimated on the shell `[vmax, 2 vmax]`.
pub fn kernel_tail_fraction(model: &CollisionModel, v: &Vec3, vmax: f64) -> f64 {
    let rule = MomentRule {
        vmax,
        ..Default::default()
    };
    let inner = polar_moment(model, v, 1.0, 0.0, vmax, &rule);
    let outer = polar_moment(model, v, 1.0, vmax, 2.0 * vmax, &rule);
    outer / inner
}

/// `int_{a < |v* - v| < b} |k(v, v*)|^power dv*` in polar coordinates about `v`.
fn polar_moment(model: &CollisionModel, v: &Vec3, power: f64, a: f64, b: f64, rule: &MomentRule) -> f64 {
    let speed = v.norm();
    let rs = MomentRule::nodes(a, b, rule.radial_panels);
    let cs = MomentRule::nodes(-1.0, 1.0, rule.angular_panels);
    let mut sum = 0.0;
    for &(r, wr) in &rs {
        for &(c, wc) in &cs {
            let star = (speed * speed + 2.0 * r * speed * c + r * r).max(0.0).sqrt();
            let rk = model.kernel_polar_times_r(speed, speed * c, r, star);
            // |k|^p r^2 = (r k)^p r^(2 - p)
            sum += wr * wc * rk.powf(power) * r.powf(2.0 - power);
        }
    }
    2.0 * PI * sum
}

/// `int |k(v, v*)|^power dv*` for power 1 or 2.
pub fn kernel_moment(model: &CollisionModel, v: &Vec3, power: u32, rule: &MomentRule) -> Result<MomentEstimate> {
    if !(power == 1 || power == 2) {
        return Err(Error::InvalidParameter(format!("moment power {power} not in {{1, 2}}")));
    }
    let p = power as f64;
    let value = polar_moment(model, v, p, 0.0, rule.vmax, rule);
    let tail = polar_moment(model, v, p, rule.vmax, 2.0 * rule.vmax, rule);
    Ok(MomentEstimate {
        value,
        tail_fraction: tail / value,
    })
}

/// `int |v - v*|^-(3 - eps) exp(-a1 |v - v*|^2 - a2 (|v|^2 - |v*|^2)^2 / |v - v*|^2) dv*`.
/// Radial substitution `u = r^eps` removes the singular weight.
pub fn caflisch_integral(v: &Vec3, a1: f64, a2: f64, eps: f64, rule: &MomentRule) -> Result<MomentEstimate> {
    if !(a1 > 0.0 && a2 > 0.0 && eps > 0.0) {
        return Err(Error::InvalidParameter("a1, a2 and eps must be positive".into()));
    }
    let speed = v.norm();
    let cs = MomentRule::nodes(-1.0, 1.0, rule.angular_panels);
    let shell = |lo: f64, hi: f64| {
        let us = MomentRule::nodes(lo.powf(eps), hi.powf(eps), rule.radial_panels);
        let mut sum = 0.0;
        for &(u, wu) in &us {
            let r = u.powf(1.0 / eps);
            for &(c, wc) in &cs {
                let q = 2.0 * speed * c + r;
                sum += wu * wc * (-a1 * r * r - a2 * q * q).exp() / eps;
            }
        }
        2.0 * PI * sum
    };
    let value = shell(0.0, rule.vmax);
    let tail = shell(rule.vmax, 2.0 * rule.vmax);
    Ok(MomentEstimate {
        value,
        tail_fraction: tail / value,
    })
}

/// `int |v*|^-(2 - eps) |k(v, v*)| dv*`, split into `|v*| <= |v - v*|`
/// (polar about the origin) and `|v*| > |v - v*|` (polar about `v`).
pub fn inverse_square_moment(model: &CollisionModel, v: &Vec3, eps: f64, rule: &MomentRule) -> Result<MomentEstimate> {
    if !(eps > 0.0 && eps < 2.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside (0, 2)")));
    }
    let speed = v.norm();
    let half_neg = MomentRule::nodes(-1.0, 0.0, rule.angular_panels / 2 + 1);
    let half_pos = MomentRule::nodes(0.0, 1.0, rule.angular_panels / 2 + 1);
    let region = |limit: f64| -> f64 {
        let mut sum = 0.0;
        // A: v* = rho w, rho <= |v| / (2 cos) when cos > 0
        for &(c, wc) in half_neg.iter().chain(&half_pos) {
            let mut top = limit;
            if c > 0.0 && speed > 0.0 {
                top = top.min(speed / (2.0 * c));
            }
            let us = MomentRule::nodes(0.0, top.powf(eps), rule.radial_panels);
            for &(u, wu) in &us {
                let rho = u.powf(1.0 / eps);
                let rel = (speed * speed - 2.0 * rho * speed * c + rho * rho).max(0.0).sqrt();
                if rel == 0.0 {
                    continue;
                }
                // rho^(eps - 2) |k| rho^2 drho = rho |k| du / eps
                let k = model.kernel_raw(speed, rho, rel);
                sum += wu * wc * rho * k / eps;
            }
        }
        2.0 * PI * sum
    };
    let region_b = |limit: f64| -> f64 {
        if speed == 0.0 {
            return 0.0;
        }
        let mut sum = 0.0;
        for &(c, wc) in half_neg.iter().chain(&half_pos) {
            let mut top = limit;
            if c < 0.0 {
                top = top.min(speed / (2.0 * -c));
            }
            let rs = MomentRule::nodes(0.0, top, rule.radial_panels);
            for &(r, wr) in &rs {
                let star = (speed * speed + 2.0 * r * speed * c + r * r).max(0.0).sqrt();
                let rk = model.kernel_polar_times_r(speed, speed * c, r, star);
                sum += wr * wc * star.powf(-2.0 + eps) * rk * r;
            }
        }
        2.0 * PI * sum
    };
    let value = region(speed + rule.vmax) + region_b(rule.vmax);
    let tail = region(speed + 2.0 * rule.vmax) + region_b(2.0 * rule.vmax) - value;
    Ok(MomentEstimate {
        value,
        tail_fraction: tail.abs() / value,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchurReport {
    /// Spectral norm of the symmetrized discrete operator `sqrt(w_i) |k_ij| sqrt(w_j)`.
    pub spectral_norm: f64,
    /// Discrete Schur bound `sqrt(max row sum * max column sum)`.
    pub discrete_bound: f64,
    /// `sup_v int |k(v, .)|` over the rule's nodes.
    pub continuous_bound: f64,
    pub nodes: usize,
}

/// Operator norm of `K` on `L^2_v` restricted to an origin-centered rule, against
/// the Schur-test bound.
pub fn schur_test(model: &CollisionModel, quad: &VelocityQuadrature, rule: &MomentRule) -> Result<SchurReport> {
    let zero = Vec3::zeros();
    let nodes = quad.nodes(&zero);
    let n = nodes.len();
    let sw: Vec<f64> = nodes.iter().map(|p| p.weight.sqrt()).collect();
    let mut mat = nalgebra::DMatrix::<f64>::zeros(n, n);
    let mut row = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let r = (nodes[i].vstar - nodes[j].vstar).norm();
            if r < 1e-14 {
                continue;
            }
            let k = model.kernel_raw(nodes[i].vstar.norm(), nodes[j].vstar.norm(), r).abs();
            mat[(i, j)] = sw[i] * k * sw[j];
            row[i] += k * nodes[j].weight;
        }
    }
    // symmetric kernel: row and column sums coincide
    let max_row = row.iter().cloned().fold(0.0, f64::max);
    let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..500 {
        let y = &mat * &x;
        let nrm = y.norm();
        if nrm == 0.0 {
            break;
        }
        let done = (nrm - lambda).abs() <= 1e-12 * nrm;
        lambda = nrm;
        x = y / nrm;
        if done {
            break;
        }
    }
    let mut cont: f64 = 0.0;
    let mut speeds: Vec<f64> = nodes.iter().map(|p| p.vstar.norm()).collect();
    speeds.push(0.0);
    speeds.sort_by(f64::total_cmp);
    speeds.dedup();
    for s in speeds {
        let m = kernel_moment(model, &Vec3::new(0.0, 0.0, s), 1, rule)?;
        cont = cont.max(m.value);
    }
    Ok(SchurReport {
        spectral_norm: lambda,
        discrete_bound: max_row,
        continuous_bound: cont,
        nodes: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ClosedForm;
    use nalgebra::Vector3;

    fn hard() -> CollisionModel {
        CollisionModel::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn moments_at_origin() {
        let r = MomentRule::default();
        let m1 = kernel_moment(&hard(), &Vector3::zeros(), 1, &r).unwrap();
        let m2 = kernel_moment(&hard(), &Vector3::zeros(), 2, &r).unwrap();
        // truncation at vmax = 8 costs exp(-16) of the mass
        assert!((m1.value - 8.0 * PI).abs() < 1e-6 * 8.0 * PI, "{m1:?}");
        let exact2 = 4.0 * PI * (PI / 2.0).sqrt();
        assert!((m2.value - exact2).abs() < 1e-9 * exact2, "{m2:?}");
        assert!(m1.truncation_warning(TAIL_TOL).is_none());
    }

    #[test]
    fn apply_k_of_one_at_origin() {
        let q = VelocityQuadrature::new(VelocityScheme::PolarAboutQuery, 8.0, 48, 8, 4).unwrap();
        let one = ClosedForm::omega(|_, _| 1.0);
        let v = apply_k(&hard(), &q, one.as_ref(), &Vector3::zeros(), &Vector3::zeros()).unwrap();
        assert!((v - 8.0 * PI).abs() < 1e-6 * 8.0 * PI, "{v}");
        let zero = ClosedForm::omega(|_, _| 0.0);
        assert_eq!(apply_k(&hard(), &q, zero.as_ref(), &Vector3::zeros(), &Vector3::zeros()).unwrap(), 0.0);
    }

    #[test]
    fn caflisch_at_origin() {
        let c = caflisch_integral(&Vector3::zeros(), 1.0, 1.0, 1.0, &MomentRule::default()).unwrap();
        let exact = 4.0 * PI * (PI / 8.0).sqrt();
        assert!((c.value - exact).abs() < 1e-9 * exact, "{c:?}");
    }

    #[test]
    fn caflisch_decreases_in_a2() {
        let v = Vector3::new(1.5, 0.0, 0.0);
        let r = MomentRule::default();
        let mut last = f64::INFINITY;
        for a2 in [0.1, 0.5, 1.0, 4.0, 16.0] {
            let c = caflisch_integral(&v, 1.0, a2, 3.0, &r).unwrap().value;
            assert!(c < last);
            last = c;
        }
    }

    #[test]
    fn inverse_square_at_origin() {
        let m = inverse_square_moment(&hard(), &Vector3::zeros(), 1.0, &MomentRule::default()).unwrap();
        let exact = 4.0 * PI * PI.sqrt();
        assert!((m.value - exact).abs() < 1e-6 * exact, "{m:?}");
    }

    #[test]
    fn inverse_square_split_matches_unsplit_rule() {
        // away from the origin the integrand is bounded near v* = 0 for eps = 1.5,
        // so a plain polar rule about v with many nodes is an independent check
        let v = Vector3::new(0.0, 0.0, 2.0);
        let eps = 1.5;
        let split = inverse_square_moment(&hard(), &v, eps, &MomentRule::default()).unwrap().value;
        let rs = MomentRule::nodes(0.0, 10.0, 200);
        let cs = MomentRule::nodes(-1.0, 1.0, 200);
        let mut direct = 0.0;
        for &(r, wr) in &rs {
            for &(c, wc) in &cs {
                let star = (4.0 + 4.0 * r * c + r * r).sqrt();
                let rk = hard().kernel_polar_times_r(2.0, 2.0 * c, r, star);
                direct += 2.0 * PI * wr * wc * star.powf(eps - 2.0) * rk * r;
            }
        }
        assert!((split - direct).abs() < 1e-5 * direct, "{split} vs {direct}");
    }

    #[test]
    fn moment_rule_is_converged() {
        let r = MomentRule::default();
        for s in [0.0, 1.0, 4.0, 8.0] {
            let v = Vector3::new(s, 0.0, 0.0);
            for p in [1, 2] {
                let a = kernel_moment(&hard(), &v, p, &r).unwrap().value;
                let b = kernel_moment(&hard(), &v, p, &r.refined()).unwrap().value;
                assert!((a - b).abs() < 1e-4 * b, "s={s} p={p}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn schur_bound_holds() {
        let q = VelocityQuadrature::new(VelocityScheme::PolarAboutOrigin, 6.0, 6, 4, 6).unwrap();
        let rep = schur_test(&hard(), &q, &MomentRule::default()).unwrap();
        assert!(rep.spectral_norm <= rep.discrete_bound * (1.0 + 1e-9));
        assert!(rep.spectral_norm > 0.0);
    }
}
