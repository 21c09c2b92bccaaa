use std::f64::consts::{LN_2, PI};

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{chunk_rng, chunk_sizes, task_tag, Execution};
use crate::field::PhaseFunction;
use crate::geometry::{random_unit, ConvexDomain, Vec3};

/// Velocity measure of the outer `dv` integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityMeasure {
    /// Integrate over all velocities, sampling `v ~ N(0, sigma^2 I)`.
    Gaussian { sigma: f64 },
    /// No velocity integral: the seminorm at one fixed velocity.
    Point { v: [f64; 3] },
}

/// Region of the two spatial integrals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeminormRegion {
    /// `x, y` in the domain.
    Domain,
    /// `x, y` in all of space; the function must vanish outside the
    /// domain's bounding box.
    WholeSpace,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormOptions {
    pub region: SeminormRegion,
    pub velocity: VelocityMeasure,
    /// Innermost shell is `[2^-floor_exponent, 2^(1 - floor_exponent)] * R`.
    pub floor_exponent: u32,
    /// Shells used in the geometric fit of the sub-floor remainder.
    pub fit_shells: usize,
    /// Flag when the extrapolated remainder exceeds this fraction of the value.
    pub flag_fraction: f64,
}

impl Default for SeminormOptions {
    fn default() -> Self {
        SeminormOptions {
            region: SeminormRegion::Domain,
            velocity: VelocityMeasure::Gaussian { sigma: 1.0 },
            floor_exponent: 16,
            fit_shells: 6,
            flag_fraction: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormEstimate {
    pub s: f64,
    /// Estimate of the shell-truncated double integral.
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
    /// Per-shell contributions, outermost first; sums to `value`.
    pub shell_profile: Vec<f64>,
    /// Radial bounds of each profile entry (`f64::INFINITY` for the far field).
    pub shell_bounds: Vec<(f64, f64)>,
    /// Geometric extrapolation of the part below the innermost shell.
    pub subfloor: f64,
    /// Fitted per-shell decay ratio used for `subfloor`.
    pub decay_ratio: f64,
    /// The sub-floor remainder exceeds the configured fraction of `value`.
    pub flagged: bool,
    /// `int int |f|^2 dx dv` from the same `x, v` draws.
    pub l2: f64,
}

impl SeminormEstimate {
    /// `value + subfloor`.
    pub fn extrapolated(&self) -> f64 {
        self.value + self.subfloor
    }
}

const CHUNK: usize = 128;

fn sample_velocity(rng: &mut ChaCha8Rng, measure: &VelocityMeasure) -> (Vec3, f64) {
    match *measure {
        VelocityMeasure::Point { v } => (Vector3::from(v), 1.0),
        VelocityMeasure::Gaussian { sigma } => {
            let z = Vector3::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            );
            // 1 / density
            let w = (2.0 * PI * sigma * sigma).powf(1.5) * (0.5 * z.norm_squared()).exp();
            (z * sigma, w)
        }
    }
}

/// Per-draw data shared across orders: squared difference times all
/// `s`-independent weights, and the radius.
struct Draw {
    shell: usize,
    weight: f64,
    rho: f64,
    l2: f64,
}

/// Monte Carlo estimate of
/// `int int int |f(x, v) - f(y, v)|^2 / |x - y|^(3 + 2s) dx dy dv`
/// for several orders at once from one set of draws (common random numbers).
///
/// `x` is uniform in the bounding box (weight `|box|` times an indicator),
/// `y = x + rho omega` with `rho` log-uniform within dyadic shells of the
/// outer radius `R` and the draws split evenly over the shells. `R` is the
/// domain diameter; in whole-space mode it is the box diagonal and the
/// far field `|x - y| > R` is added in closed form.
pub fn slobodeckij_multi(
    domain: &ConvexDomain,
    f: &dyn PhaseFunction,
    orders: &[f64],
    samples: usize,
    seed: u64,
    opts: &SeminormOptions,
    exec: Execution,
) -> Result<Vec<SeminormEstimate>> {
    if orders.is_empty() || orders.iter().any(|&s| !(s > 0.0 && s < 1.0)) {
        return Err(Error::InvalidParameter("orders must lie in (0, 1)".into()));
    }
    let shells = opts.floor_exponent.max(1) as usize;
    let per_shell = (samples / shells).max(2);
    let (lo, hi) = domain.bounding_box();
    let box_vol: f64 = (hi - lo).iter().product();
    let whole = opts.region == SeminormRegion::WholeSpace;
    let outer = if whole { (hi - lo).norm() } else { domain.diameter() };
    let in_box = |p: &Vec3| (0..3).all(|i| p[i] >= lo[i] && p[i] <= hi[i]);
    let tag = task_tag("slobodeckij");

    let chunks = chunk_sizes(per_shell, CHUNK);
    let jobs = shells * chunks.len();
    let draws = exec.try_map(jobs, |job| -> Result<Vec<Draw>> {
        let (shell, c) = (job / chunks.len(), job % chunks.len());
        let mut rng = chunk_rng(seed, tag, ((shell as u64) << 32) | c as u64);
        let (r_hi, r_lo) = (outer * 0.5f64.powi(shell as i32), outer * 0.5f64.powi(shell as i32 + 1));
        let mut out = Vec::with_capacity(chunks[c]);
        for _ in 0..chunks[c] {
            let x = Vector3::from_fn(|i, _| lo[i] + (hi[i] - lo[i]) * rng.random::<f64>());
            let rho = r_lo * (r_hi / r_lo).powf(rng.random::<f64>());
            let y = x + random_unit(&mut rng) * rho;
            let (v, vw) = sample_velocity(&mut rng, &opts.velocity);
            // `x` weight |box|; `y` weight 4 pi rho^3 ln 2 / rho^3 leaves rho^-2s
            let base = box_vol * 4.0 * PI * LN_2 * vw;
            let (fx, fy, pair) = if whole {
                let fx = f.eval(&x, &v)?;
                // y outside the box: f(y) = 0 and the pair counts twice
                if in_box(&y) {
                    (fx, f.eval(&y, &v)?, 1.0)
                } else {
                    (fx, 0.0, 2.0)
                }
            } else if domain.contains(&x) && domain.contains(&y) {
                (f.eval(&x, &v)?, f.eval(&y, &v)?, 1.0)
            } else {
                let fx = if domain.contains(&x) { f.eval(&x, &v)? } else { 0.0 };
                out.push(Draw {
                    shell,
                    weight: 0.0,
                    rho,
                    l2: box_vol * vw * fx * fx,
                });
                continue;
            };
            let d = fx - fy;
            out.push(Draw {
                shell,
                weight: base * pair * d * d,
                rho,
                l2: box_vol * vw * fx * fx,
            });
        }
        Ok(out)
    })?;

    let n_total = (per_shell * shells) as f64;
    let l2 = draws.iter().flatten().map(|d| d.l2).sum::<f64>() / n_total;
    let mut out = Vec::with_capacity(orders.len());
    for &s in orders {
        let mut sum = vec![0.0; shells];
        let mut sum2 = vec![0.0; shells];
        for d in draws.iter().flatten() {
            let w = d.weight * d.rho.powf(-2.0 * s);
            sum[d.shell] += w;
            sum2[d.shell] += w * w;
        }
        let n = per_shell as f64;
        let mut profile = Vec::with_capacity(shells + 1);
        let mut bounds = Vec::with_capacity(shells + 1);
        let mut var = 0.0;
        let mut rel = Vec::with_capacity(shells);
        if whole {
            // |x - y| > R: one point lies outside the box, the pair counts twice
            profile.push(2.0 * l2 * 4.0 * PI * outer.powf(-2.0 * s) / (2.0 * s));
            bounds.push((outer, f64::INFINITY));
        }
        for j in 0..shells {
            let mean = sum[j] / n;
            let vj = ((sum2[j] / n - mean * mean) * n / (n - 1.0)).max(0.0) / n;
            var += vj;
            rel.push(if mean > 0.0 { vj.sqrt() / mean } else { f64::INFINITY });
            profile.push(mean);
            bounds.push((outer * 0.5f64.powi(j as i32 + 1), outer * 0.5f64.powi(j as i32)));
        }
        let value: f64 = profile.iter().sum();
        let shell_part = &profile[profile.len() - shells..];
        let (subfloor, ratio) = extrapolate_subfloor_resolved(shell_part, &rel, opts.fit_shells);
        out.push(SeminormEstimate {
            s,
            value,
            stderr: var.sqrt(),
            samples: per_shell * shells,
            seed,
            shell_profile: profile,
            shell_bounds: bounds,
            subfloor,
            decay_ratio: ratio,
            flagged: !(subfloor <= opts.flag_fraction * value) && value > 0.0,
            l2,
        });
    }
    Ok(out)
}

pub fn slobodeckij_seminorm(
    domain: &ConvexDomain,
    f: &dyn PhaseFunction,
    s: f64,
    samples: usize,
    seed: u64,
    opts: &SeminormOptions,
    exec: Execution,
) -> Result<SeminormEstimate> {
    Ok(slobodeckij_multi(domain, f, &[s], samples, seed, opts, exec)?.remove(0))
}

/// Least-squares geometric fit `c q^j` to the last `m` shells and the tail
/// sum below the floor. Returns `(remainder, q)`; infinite remainder when the
/// shells do not decay.
pub fn extrapolate_subfloor(shells: &[f64], m: usize) -> (f64, f64) {
    extrapolate_subfloor_resolved(shells, &vec![0.0; shells.len()], m)
}

/// Relative standard error above which a shell is left out of the fit.
pub const FIT_MAX_REL_ERR: f64 = 0.5;

/// As [`extrapolate_subfloor`], but fits only the last `m` shells that are
/// resolved (positive with relative error below [`FIT_MAX_REL_ERR`]), using
/// their true indices. Deep shells of a discontinuous function are hit by
/// few straddling pairs and would otherwise read as zero.
pub fn extrapolate_subfloor_resolved(shells: &[f64], rel_err: &[f64], m: usize) -> (f64, f64) {
    if shells.iter().all(|&v| v == 0.0) {
        return (0.0, 0.0);
    }
    let m = m.max(2);
    let mut picked: Vec<(f64, f64)> = shells
        .iter()
        .zip(rel_err)
        .enumerate()
        .rev()
        .filter(|(_, (&v, &e))| v > 0.0 && e < FIT_MAX_REL_ERR)
        .take(m)
        .map(|(j, (&v, _))| (j as f64, v.ln()))
        .collect();
    if picked.len() < 2 {
        return (f64::INFINITY, f64::INFINITY);
    }
    picked.reverse();
    let n = picked.len() as f64;
    let xm = picked.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = picked.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y) in &picked {
        sxy += (x - xm) * (y - ym);
        sxx += (x - xm) * (x - xm);
    }
    let slope = sxy / sxx;
    let q = slope.exp();
    if q >= 1.0 {
        return (f64::INFINITY, q);
    }
    let last = (ym + slope * (shells.len() as f64 - 1.0 - xm)).exp();
    (last * q / (1.0 - q), q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ClosedForm;
    use crate::geometry::DomainSpec;
    use crate::quadrature::{Adaptive, GaussLegendre};

    fn ball() -> ConvexDomain {
        ConvexDomain::from_spec(&DomainSpec::ball(1.0)).unwrap()
    }

    fn point() -> SeminormOptions {
        SeminormOptions {
            velocity: VelocityMeasure::Point { v: [0.0, 0.0, 1.0] },
            ..Default::default()
        }
    }

    #[test]
    fn constant_has_zero_seminorm() {
        let f = ClosedForm::omega(|_, _| 3.0);
        let e = slobodeckij_seminorm(&ball(), f.as_ref(), 0.4, 2000, 1, &SeminormOptions::default(), Execution::Sequential)
            .unwrap();
        assert_eq!(e.value, 0.0);
        assert!(!e.flagged);
        assert!((e.shell_profile.iter().sum::<f64>() - e.value).abs() == 0.0);
    }

    /// `2 int_{|x| < a} int_{a < |y| < 1} |x - y|^(-3 - 2s)` by the radial reduction
    /// with the inner integral in closed form.
    fn indicator_oracle(a: f64, s: f64) -> f64 {
        let p = 1.0 - 2.0 * s;
        let inner = |r: f64| {
            let minus = |t: f64| t.powf(p) / p - r * t.powf(-2.0 * s) / (2.0 * s);
            let plus = |t: f64| t.powf(p) / p + r * t.powf(-2.0 * s) / (2.0 * s);
            (minus(1.0 - r) - minus(a - r)) - (plus(1.0 + r) - plus(a + r))
        };
        // r = a - u^(1/p) removes the endpoint singularity
        let q = Adaptive {
            rel_tol: 1e-12,
            ..Default::default()
        };
        let k = 1.0 / p;
        let outer = q
            .integrate(0.0, a.powf(p), |u| {
                let r = a - u.powf(k);
                k * u.powf(k - 1.0) * r * inner(r)
            })
            .unwrap();
        16.0 * PI * PI / (1.0 + 2.0 * s) * outer
    }

    #[test]
    fn indicator_matches_radial_oracle_and_flags_above_half() {
        let f = ClosedForm::omega(|x, _| if x.norm() < 0.5 { 1.0 } else { 0.0 });
        let est = slobodeckij_multi(&ball(), f.as_ref(), &[0.25, 0.75], 64_000, 3, &point(), Execution::Sequential).unwrap();
        let low = &est[0];
        let exact = indicator_oracle(0.5, 0.25);
        assert!(!low.flagged, "{low:?}");
        let total = low.extrapolated();
        assert!((total - exact).abs() < 3.0 * low.stderr + 0.01 * exact, "{total} vs {exact} ({})", low.stderr);
        assert!(est[1].flagged);
    }

    #[test]
    fn linear_function_matches_distance_density_oracle() {
        // |f(x) - f(y)|^2 = (x1 - y1)^2 e^{-2|v|^2}; the ball average of
        // (x1 - y1)^2 / |x - y|^4 is one third of E|x - y|^-2.
        let f = ClosedForm::omega(|x, v| x[0] * (-v.norm_squared()).exp());
        let opts = SeminormOptions {
            velocity: VelocityMeasure::Gaussian { sigma: 0.6 },
            ..Default::default()
        };
        let e = slobodeckij_seminorm(&ball(), f.as_ref(), 0.5, 64_000, 11, &opts, Execution::Sequential).unwrap();
        let g = GaussLegendre::new(40);
        let mean_inv_sq = g.integrate(0.0, 2.0, |d| 3.0 * (d - 2.0).powi(2) * (d + 4.0) / 16.0);
        let vol = 4.0 * PI / 3.0;
        let exact = vol * vol * mean_inv_sq / 3.0 * (PI / 2.0).powf(1.5);
        let total = e.extrapolated();
        assert!((total - exact).abs() < 3.0 * e.stderr + 2e-3 * exact, "{total} vs {exact} ({})", e.stderr);
    }

    #[test]
    fn monotone_in_order_with_common_draws() {
        let d = ball().scaled(0.5).unwrap();
        let f = ClosedForm::omega(|x, v| (3.0 * x[0] + x[1] * x[2]).sin() * (-v.norm_squared()).exp());
        let est = slobodeckij_multi(&d, f.as_ref(), &[0.2, 0.4, 0.6, 0.8], 4000, 5, &SeminormOptions::default(), Execution::Sequential)
            .unwrap();
        for w in est.windows(2) {
            assert!(w[1].value >= w[0].value);
        }
    }

    #[test]
    fn stderr_scales_with_samples() {
        let f = ClosedForm::omega(|x, v| x[0] * x[0] * (-v.norm_squared()).exp());
        let o = SeminormOptions::default();
        let a = slobodeckij_seminorm(&ball(), f.as_ref(), 0.5, 8000, 2, &o, Execution::Sequential).unwrap();
        let b = slobodeckij_seminorm(&ball(), f.as_ref(), 0.5, 32_000, 2, &o, Execution::Sequential).unwrap();
        let r = a.stderr / b.stderr;
        assert!(r > 2.0 / 1.5 && r < 2.0 * 1.5, "{r}");
    }

    #[test]
    fn worker_count_does_not_change_profile() {
        let f = ClosedForm::omega(|x, v| x.norm_squared() * (-v.norm_squared()).exp());
        let o = SeminormOptions::default();
        let a = slobodeckij_seminorm(&ball(), f.as_ref(), 0.3, 3000, 8, &o, Execution::Sequential).unwrap();
        let b = slobodeckij_seminorm(&ball(), f.as_ref(), 0.3, 3000, 8, &o, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn geometric_tail_fit() {
        let shells: Vec<f64> = (0..10).map(|j| 0.5f64.powi(j)).collect();
        let (rest, q) = extrapolate_subfloor(&shells, 5);
        assert!((q - 0.5).abs() < 1e-12);
        assert!((rest - 0.5f64.powi(9)).abs() < 1e-12);
        let mut gappy = shells.clone();
        gappy[8] = 0.0;
        let (rest2, _) = extrapolate_subfloor_resolved(&gappy, &[0.1; 10], 5);
        assert!((rest2 - rest).abs() < 1e-12);
        let flat = vec![1.0; 6];
        assert!(extrapolate_subfloor(&flat, 4).0.is_infinite());
    }
}
