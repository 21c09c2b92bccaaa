use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field::PhaseFunction;
use crate::geometry::Vec3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierNorm {
    pub s: f64,
    /// `int (1 + |xi|^2)^s |F f(xi, v)|^2 dxi`, reduced over the velocity nodes.
    pub value: f64,
    /// Share of the spectral energy in the top octave `|k|_inf > N/4`.
    pub top_octave_fraction: f64,
    pub alias_warning: bool,
}

/// Energy share above which the grid is considered too coarse.
pub const ALIAS_THRESHOLD: f64 = 0.01;

/// In-place 3D FFT of an `n^3` array (x fastest).
fn fft3(data: &mut [Complex<f64>], n: usize) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut line = vec![Complex::new(0.0, 0.0); n];
    for axis in 0..3 {
        let stride = n.pow(axis as u32);
        for a in 0..n {
            for b in 0..n {
                let base = match axis {
                    0 => (a * n + b) * n,
                    1 => a * n * n + b,
                    _ => a * n + b,
                };
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + k * stride];
                }
                fft.process(&mut line);
                for (k, slot) in line.iter().enumerate() {
                    data[base + k * stride] = *slot;
                }
            }
        }
    }
}

/// Spectral estimate of `||f||^2` in the Fourier-defined space of order `s`
/// on a periodic box of side `box_len` centered at `center`, with `grid^3`
/// points, for each velocity node `(v, weight)`.
///
/// Uses the unitary transform, so `s = 0` is the `L^2` norm (Parseval).
pub fn fourier_fractional_norm(
    f: &dyn PhaseFunction,
    s: f64,
    grid: usize,
    box_len: f64,
    center: &Vec3,
    velocities: &[(Vec3, f64)],
    exec: Execution,
) -> Result<FourierNorm> {
    if !grid.is_power_of_two() || grid < 4 {
        return Err(Error::InvalidParameter(format!("grid {grid} must be a power of two >= 4")));
    }
    if !(s >= 0.0 && box_len > 0.0) {
        return Err(Error::InvalidParameter("need s >= 0 and a positive box".into()));
    }
    let n = grid;
    let h = box_len / n as f64;
    let freq = |k: usize| -> (f64, bool) {
        let kk = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
        (2.0 * PI * kk / box_len, kk.abs() > (n / 4) as f64)
    };
    let per_node = exec.try_map(velocities.len(), |iv| -> Result<(f64, f64, f64)> {
        let (v, _) = velocities[iv];
        let mut data = vec![Complex::new(0.0, 0.0); n * n * n];
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let x = center
                        + Vec3::new(
                            -0.5 * box_len + i as f64 * h,
                            -0.5 * box_len + j as f64 * h,
                            -0.5 * box_len + k as f64 * h,
                        );
                    data[(k * n + j) * n + i] = Complex::new(f.eval(&x, &v)?, 0.0);
                }
            }
        }
        fft3(&mut data, n);
        let (mut weighted, mut total, mut top) = (0.0, 0.0, 0.0);
        for k in 0..n {
            let (zk, tk) = freq(k);
            for j in 0..n {
                let (yj, tj) = freq(j);
                for i in 0..n {
                    let (xi, ti) = freq(i);
                    let e = data[(k * n + j) * n + i].norm_sqr();
                    let m2 = xi * xi + yj * yj + zk * zk;
                    weighted += (1.0 + m2).powf(s) * e;
                    total += e;
                    if ti || tj || tk {
                        top += e;
                    }
                }
            }
        }
        // discrete Parseval: h^3 sum |f|^2 = h^3 / n^3 sum |F|^2
        let scale = h.powi(3) / (n * n * n) as f64;
        Ok((weighted * scale, total * scale, top * scale))
    })?;
    let value: f64 = per_node.iter().zip(velocities).map(|(p, (_, w))| w * p.0).sum();
    let total: f64 = per_node.iter().zip(velocities).map(|(p, (_, w))| w * p.1).sum();
    let top: f64 = per_node.iter().zip(velocities).map(|(p, (_, w))| w * p.2).sum();
    let frac = if total > 0.0 { top / total } else { 0.0 };
    Ok(FourierNorm {
        s,
        value,
        top_octave_fraction: frac,
        alias_warning: frac > ALIAS_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ClosedForm;
    use crate::quadrature::Adaptive;
    use nalgebra::Vector3;

    fn one_velocity() -> Vec<(Vec3, f64)> {
        vec![(Vector3::zeros(), 1.0)]
    }

    #[test]
    fn zero_function() {
        let f = ClosedForm::whole_space(|_, _| 0.0);
        let r = fourier_fractional_norm(f.as_ref(), 0.5, 8, 4.0, &Vector3::zeros(), &one_velocity(), Execution::Sequential)
            .unwrap();
        assert_eq!(r.value, 0.0);
        assert!(!r.alias_warning);
    }

    #[test]
    fn parseval_at_order_zero() {
        // compact C^infinity bump; the grid sum is spectrally accurate for it
        let bump = |x: &Vec3| {
            let r2 = x.norm_squared();
            if r2 < 1.0 {
                (-1.0 / (1.0 - r2)).exp()
            } else {
                0.0
            }
        };
        let f = ClosedForm::whole_space(move |x, _| bump(x));
        let r = fourier_fractional_norm(f.as_ref(), 0.0, 64, 3.0, &Vector3::zeros(), &one_velocity(), Execution::Sequential)
            .unwrap();
        // direct radial quadrature
        let q = Adaptive {
            rel_tol: 1e-13,
            ..Default::default()
        };
        let l2 = q
            .integrate(0.0, 1.0, |r| 4.0 * PI * r * r * (-2.0 / (1.0 - r * r)).exp())
            .unwrap();
        assert!((r.value - l2).abs() < 1e-7 * l2, "{} vs {l2}", r.value);
    }

    #[test]
    fn gaussian_matches_radial_spectrum() {
        let sigma: f64 = 0.3;
        let f = ClosedForm::whole_space(move |x, _| (-x.norm_squared() / (2.0 * sigma * sigma)).exp());
        let r = fourier_fractional_norm(f.as_ref(), 0.5, 128, 12.0, &Vector3::zeros(), &one_velocity(), Execution::Sequential)
            .unwrap();
        let q = Adaptive {
            rel_tol: 1e-13,
            ..Default::default()
        };
        let exact = sigma.powi(6)
            * 4.0
            * PI
            * q.integrate(0.0, 12.0 / sigma, |k| (1.0 + k * k).sqrt() * (-sigma * sigma * k * k).exp() * k * k)
                .unwrap();
        assert!((r.value - exact).abs() < 1e-8 * exact, "{} vs {exact}", r.value);
        assert!(!r.alias_warning);
    }

    #[test]
    fn coarse_grid_warns() {
        let f = ClosedForm::whole_space(|x, _| if x.norm() < 0.5 { 1.0 } else { 0.0 });
        let r = fourier_fractional_norm(f.as_ref(), 0.5, 8, 4.0, &Vector3::zeros(), &one_velocity(), Execution::Sequential)
            .unwrap();
        assert!(r.alias_warning);
    }
}
