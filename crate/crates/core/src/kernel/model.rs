use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Collision frequency and kernel envelope.
///
/// `nu(v) = nu0 (1 + |v|)^frequency_exponent`; the frequency exponent equals
/// `gamma` unless set explicitly (e.g. to 0 for a constant frequency paired
/// with a hard-sphere kernel).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionModel {
    pub gamma: f64,
    pub nu0: f64,
    pub nu1: f64,
    pub kernel_scale: f64,
    pub decay_rate: f64,
    pub frequency_exponent: f64,
}

pub const DECAY_RATE: f64 = 0.125;
const COINCIDENT: f64 = 1e-14;

impl CollisionModel {
    pub fn new(gamma: f64, nu0: f64, kernel_scale: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidParameter(format!("gamma = {gamma} outside [0, 1]")));
        }
        if !(nu0 > 0.0 && nu0.is_finite()) {
            return Err(Error::InvalidParameter(format!("nu0 = {nu0} must be positive")));
        }
        if !(kernel_scale > 0.0 && kernel_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kernel_scale = {kernel_scale} must be positive"
            )));
        }
        Ok(CollisionModel {
            gamma,
            nu0,
            nu1: nu0,
            kernel_scale,
            decay_rate: DECAY_RATE,
            frequency_exponent: gamma,
        })
    }

    pub fn with_frequency_exponent(mut self, e: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::InvalidParameter(format!("frequency exponent {e} outside [0, 1]")));
        }
        self.frequency_exponent = e;
        Ok(self)
    }

    pub fn nu(&self, v: &Vec3) -> f64 {
        self.nu_speed(v.norm())
    }

    pub fn nu_speed(&self, speed: f64) -> f64 {
        if self.frequency_exponent == 0.0 {
            return self.nu0;
        }
        self.nu0 * (1.0 + speed).powf(self.frequency_exponent)
    }

    /// `C |v - v*|^-1 (1 + |v| + |v*|)^-(1 - gamma) exp(-(|v - v*|^2 + (|v|^2 - |v*|^2)^2 / |v - v*|^2) / 8)`
    pub fn kernel(&self, v: &Vec3, vstar: &Vec3) -> Result<f64> {
        let r = (v - vstar).norm();
        if r < COINCIDENT {
            return Err(Error::CoincidentVelocities);
        }
        Ok(self.kernel_raw(v.norm(), vstar.norm(), r))
    }

    /// Kernel from the speeds and the relative speed. Written in terms of
    /// `(|v| - |v*|)(|v| + |v*|)` so it is exactly symmetric.
    pub(crate) fn kernel_raw(&self, a: f64, b: f64, r: f64) -> f64 {
        let q = (a - b) * (a + b) / r;
        self.kernel_scale / r
            * self.speed_factor(a + b)
            * (-self.decay_rate * (r * r + q * q)).exp()
    }

    /// Kernel at `v* = v + r omega` in the cancellation-free polar form:
    /// `(|v|^2 - |v*|^2) / r = -(2 v.omega + r)`. Returns `r * k` so the
    /// caller can combine it with an `r^2 dr` Jacobian.
    pub(crate) fn kernel_polar_times_r(&self, speed: f64, v_dot_omega: f64, r: f64, star_speed: f64) -> f64 {
        let q = 2.0 * v_dot_omega + r;
        self.kernel_scale * self.speed_factor(speed + star_speed) * (-self.decay_rate * (r * r + q * q)).exp()
    }

    fn speed_factor(&self, sum: f64) -> f64 {
        if self.gamma == 1.0 {
            1.0
        } else {
            (1.0 + sum).powf(-(1.0 - self.gamma))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use proptest::prelude::*;

    #[test]
    fn frequency_examples() {
        let m = CollisionModel::new(1.0, 1.0, 1.0).unwrap();
        assert_eq!(m.nu(&Vector3::zeros()), 1.0);
        assert_eq!(m.nu(&Vector3::new(3.0, 0.0, 0.0)), 4.0);
        let maxwell = CollisionModel::new(0.0, 2.5, 1.0).unwrap();
        assert_eq!(maxwell.nu(&Vector3::new(7.0, 1.0, 0.0)), 2.5);
    }

    #[test]
    fn kernel_examples() {
        let m = CollisionModel::new(1.0, 1.0, 1.0).unwrap();
        let k = m.kernel(&Vector3::zeros(), &Vector3::new(1.0, 0.0, 0.0)).unwrap();
        assert!((k - (-0.25f64).exp()).abs() < 1e-15);
        assert!(matches!(
            m.kernel(&Vector3::zeros(), &Vector3::zeros()),
            Err(Error::CoincidentVelocities)
        ));
    }

    #[test]
    fn equal_speeds_drop_quotient_term() {
        let m = CollisionModel::new(0.5, 1.0, 2.0).unwrap();
        let v = Vector3::new(1.0, 0.0, 0.0);
        let w = Vector3::new(0.0, 1.0, 0.0);
        let r = 2f64.sqrt();
        let expect = 2.0 / r * 3f64.powf(-0.5) * (-r * r / 8.0).exp();
        assert!((m.kernel(&v, &w).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn polar_form_matches_direct() {
        let m = CollisionModel::new(0.3, 1.0, 1.0).unwrap();
        let v = Vector3::new(0.4, -1.2, 2.0);
        let om = Vector3::new(1.0, 2.0, -0.5).normalize();
        let r = 0.7;
        let vs = v + om * r;
        let direct = m.kernel(&v, &vs).unwrap() * r;
        let polar = m.kernel_polar_times_r(v.norm(), v.dot(&om), r, vs.norm());
        assert!((direct - polar).abs() < 1e-13 * direct);
    }

    proptest! {
        #[test]
        fn kernel_is_symmetric(
            v in prop::array::uniform3(-6.0f64..6.0),
            w in prop::array::uniform3(-6.0f64..6.0),
            gamma in 0.0f64..=1.0,
        ) {
            let m = CollisionModel::new(gamma, 1.0, 1.0).unwrap();
            let (v, w) = (Vector3::from(v), Vector3::from(w));
            prop_assume!((v - w).norm() > 1e-6);
            prop_assert_eq!(m.kernel(&v, &w).unwrap().to_bits(), m.kernel(&w, &v).unwrap().to_bits());
        }
    }
}
