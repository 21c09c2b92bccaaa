use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::Adaptive;

/// `M(|xi|) = int_R (nu0^2 + |xi|^2 t^2)^(-2/3) dt`, integrated directly in `t`:
/// adaptive quadrature on `[0, T]` plus the binomial series of the tail.
pub fn multiplier_integral(nu0: f64, xi: f64) -> Result<f64> {
    if !(nu0 > 0.0 && xi > 0.0) {
        return Err(Error::InvalidParameter("nu0 and |xi| must be positive".into()));
    }
    let t_cut = 10.0 * nu0 / xi;
    let q = Adaptive {
        rel_tol: 1e-14,
        ..Default::default()
    };
    let body = q.integrate(0.0, t_cut, |t| (nu0 * nu0 + xi * xi * t * t).powf(-2.0 / 3.0))?;
    // (xi t)^(-4/3) (1 + (nu0 / xi t)^2)^(-2/3) = sum_k c_k xi^(-4/3) (nu0/xi)^(2k) t^(-4/3 - 2k)
    let a = (nu0 / xi).powi(2);
    let mut c = 1.0;
    let mut tail = 0.0;
    for k in 0..40 {
        let p = 1.0 / 3.0 + 2.0 * k as f64;
        let term = c * a.powi(k) * t_cut.powf(-p) / p;
        tail += term;
        if term.abs() < 1e-18 * tail.abs() {
            break;
        }
        // binomial coefficient of (1 + z)^(-2/3)
        c *= (-2.0 / 3.0 - k as f64) / (k as f64 + 1.0);
    }
    tail *= xi.powf(-4.0 / 3.0);
    Ok(2.0 * (body + tail))
}

/// `int_R (1 + u^2)^(-2/3) du = sqrt(pi) Gamma(1/6) / Gamma(2/3)`.
pub fn multiplier_constant() -> f64 {
    std::f64::consts::PI.sqrt() * gamma(1.0 / 6.0) / gamma(2.0 / 3.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplierReport {
    pub nu0: f64,
    pub xi: Vec<f64>,
    pub m: Vec<f64>,
    /// `|xi| M(|xi|)` for each entry.
    pub scaled: Vec<f64>,
    /// `nu0^(-1/3) int (1 + u^2)^(-2/3) du`
    pub expected: f64,
    /// `max |scaled - expected| / expected`
    pub max_rel_dev: f64,
    /// `log(M(8 nu0) / M(nu0)) / log 8` at the first `|xi|`.
    pub nu0_exponent: f64,
}

pub fn multiplier_decay_check(nu0: f64, xi: &[f64]) -> Result<MultiplierReport> {
    if xi.is_empty() {
        return Err(Error::InvalidParameter("need at least one |xi|".into()));
    }
    let m = xi.iter().map(|&x| multiplier_integral(nu0, x)).collect::<Result<Vec<_>>>()?;
    let scaled: Vec<f64> = xi.iter().zip(&m).map(|(x, m)| x * m).collect();
    let expected = nu0.powf(-1.0 / 3.0) * multiplier_constant();
    let max_rel_dev = scaled.iter().map(|v| ((v - expected) / expected).abs()).fold(0.0, f64::max);
    let m8 = multiplier_integral(8.0 * nu0, xi[0])?;
    Ok(MultiplierReport {
        nu0,
        xi: xi.to_vec(),
        m: m.clone(),
        scaled,
        expected,
        max_rel_dev,
        nu0_exponent: (m8 / m[0]).ln() / 8f64.ln(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_case_matches_gamma_closed_form() {
        let m = multiplier_integral(1.0, 1.0).unwrap();
        assert!((m - multiplier_constant()).abs() < 1e-10 * m, "{m}");
    }

    #[test]
    fn doubling_xi_halves_m() {
        let a = multiplier_integral(1.0, 3.0).unwrap();
        let b = multiplier_integral(1.0, 6.0).unwrap();
        assert!((a / b - 2.0).abs() < 1e-8);
    }

    #[test]
    fn nu0_scaling() {
        let r = multiplier_decay_check(1.0, &[1.0, 2.0, 4.0, 8.0, 16.0]).unwrap();
        assert!(r.max_rel_dev < 1e-8, "{r:?}");
        assert!((r.nu0_exponent + 1.0 / 3.0).abs() < 1e-6);
    }
}
