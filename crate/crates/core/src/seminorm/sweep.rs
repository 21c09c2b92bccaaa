use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field::{ClosedForm, Field};
use crate::geometry::{ConvexDomain, Vec3};
use crate::transport::{iterate_field, nested_cost, picard_field, zero_extension, BoundaryData, TransportSetup};

use super::fourier::fourier_fractional_norm;
use super::slobodeckij::{slobodeckij_multi, SeminormOptions, SeminormRegion, VelocityMeasure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepTerm {
    G0,
    G1,
    G2,
    /// Zero extension of `(S_Omega K)^2` applied to a smooth bump.
    ZeroExtension,
}

impl SweepTerm {
    pub fn name(self) -> &'static str {
        match self {
            SweepTerm::G0 => "g0",
            SweepTerm::G1 => "g1",
            SweepTerm::G2 => "g2",
            SweepTerm::ZeroExtension => "zero_extension",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub term: SweepTerm,
    pub s: f64,
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub flagged: bool,
    pub subfloor: f64,
    pub shell_profile: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub term: SweepTerm,
    pub samples: usize,
}

/// Smooth bump `(1 - |x - c|^2 / r^2)^3_+ exp(-|v|^2)` inside the domain.
pub fn smooth_bump(domain: &ConvexDomain) -> Field {
    let c = domain.center();
    let r = 0.45 * domain.diameter();
    ClosedForm::omega(move |x: &Vec3, v: &Vec3| {
        let t = 1.0 - (x - c).norm_squared() / (r * r);
        if t > 0.0 {
            t.powi(3) * (-v.norm_squared()).exp()
        } else {
            0.0
        }
    })
}

/// Slobodeckij estimates of each planned term at every order, all orders of
/// one term sharing the same draws.
pub fn regularity_sweep(
    setup: &TransportSetup,
    data: &BoundaryData,
    plan: &[SweepPlan],
    orders: &[f64],
    budget: f64,
    seed: u64,
    opts: &SeminormOptions,
    exec: Execution,
) -> Result<Vec<SweepRow>> {
    if setup.domain.diameter() > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "sweep domain has diameter {} > 1; rescale it first",
            setup.domain.diameter()
        )));
    }
    if orders.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("orders must be strictly increasing".into()));
    }
    let mut rows = Vec::new();
    for (k, p) in plan.iter().enumerate() {
        let (field, region): (Field, SeminormRegion) = match p.term {
            SweepTerm::G0 => (picard_field(setup, data, 0, budget)?, SeminormRegion::Domain),
            SweepTerm::G1 => (picard_field(setup, data, 1, budget)?, SeminormRegion::Domain),
            SweepTerm::G2 => (picard_field(setup, data, 2, budget)?, SeminormRegion::Domain),
            SweepTerm::ZeroExtension => {
                let needed = nested_cost(setup, 2);
                if needed > budget {
                    return Err(Error::BudgetExceeded { depth: 2, needed, budget });
                }
                let inner = iterate_field(setup, &smooth_bump(&setup.domain), 2);
                (zero_extension(&setup.domain, &inner), SeminormRegion::WholeSpace)
            }
        };
        let o = SeminormOptions { region, ..*opts };
        let est = slobodeckij_multi(&setup.domain, field.as_ref(), orders, p.samples, seed.wrapping_add(k as u64), &o, exec)?;
        rows.extend(est.into_iter().map(|e| SweepRow {
            term: p.term,
            s: e.s,
            value: e.value,
            stderr: e.stderr,
            samples: e.samples,
            flagged: e.flagged,
            subfloor: e.subfloor,
            shell_profile: e.shell_profile,
        }));
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub s: f64,
    /// Fourier-side squared norm.
    pub fourier: f64,
    pub l2: f64,
    pub seminorm: f64,
    pub seminorm_stderr: f64,
    /// `fourier / (l2 + seminorm)`
    pub ratio: f64,
    pub alias_warning: bool,
}

/// Ratio of the Fourier-defined squared norm to `L^2 + Slobodeckij` (whole
/// space) for a function of `x` supported inside `support`. The periodic box
/// has side `4 diam` around the support's center.
pub fn equivalence_ratio(
    support: &ConvexDomain,
    f: &Field,
    s: f64,
    samples: usize,
    grid: usize,
    seed: u64,
    exec: Execution,
) -> Result<EquivalenceReport> {
    let v = [(Vec3::zeros(), 1.0)];
    let box_len = 4.0 * support.diameter();
    let four = fourier_fractional_norm(f.as_ref(), s, grid, box_len, &support.center(), &v, exec)?;
    let l2 = fourier_fractional_norm(f.as_ref(), 0.0, grid, box_len, &support.center(), &v, exec)?.value;
    let opts = SeminormOptions {
        region: SeminormRegion::WholeSpace,
        velocity: VelocityMeasure::Point { v: [0.0; 3] },
        ..Default::default()
    };
    let semi = slobodeckij_multi(support, f.as_ref(), &[s], samples, seed, &opts, exec)?.remove(0);
    let total = semi.extrapolated();
    Ok(EquivalenceReport {
        s,
        fourier: four.value,
        l2,
        seminorm: total,
        seminorm_stderr: semi.stderr,
        ratio: four.value / (l2 + total),
        alias_warning: four.alias_warning,
    })
}

/// Family of smooth compactly supported test functions in `x` (independent
/// of `v`) used for the equivalence bracket.
pub fn bump_family(support: &ConvexDomain) -> Vec<Field> {
    let c = support.center();
    let r = 0.5 * support.diameter();
    let mut out: Vec<Field> = Vec::new();
    for (k, (width, shift, power)) in [
        (1.0, [0.0, 0.0, 0.0], 3),
        (0.7, [0.2, 0.0, 0.0], 3),
        (0.5, [0.0, -0.3, 0.1], 4),
        (0.8, [0.1, 0.1, 0.0], 2),
        (0.6, [-0.2, 0.2, -0.1], 5),
    ]
    .into_iter()
    .enumerate()
    {
        let center = c + Vec3::from(shift) * r;
        let rad = width * r * (1.0 - Vec3::from(shift).norm());
        let tilt = 1.0 + 0.1 * k as f64;
        out.push(ClosedForm::whole_space(move |x: &Vec3, _: &Vec3| {
            let t = 1.0 - (x - center).norm_squared() / (rad * rad);
            if t > 0.0 {
                t.powi(power) * (1.0 + 0.3 * ((x[0] - center[0]) * tilt / rad).sin())
            } else {
                0.0
            }
        }));
    }
    out
}
