use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{fibonacci_sphere, Vec3};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Ball,
    Ellipsoid,
    Superellipsoid,
}

/// Serializable description of a domain.
///
/// `params` is `[R]` for a ball, `[a, b, c]` for an ellipsoid and
/// `[a, b, c, p]` or `[a, b, c, p, delta]` for a smoothed superellipsoid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub params: Vec<f64>,
    #[serde(default)]
    pub center: [f64; 3],
}

impl DomainSpec {
    pub fn ball(r: f64) -> Self {
        DomainSpec {
            kind: DomainKind::Ball,
            params: vec![r],
            center: [0.0; 3],
        }
    }

    pub fn ellipsoid(a: f64, b: f64, c: f64) -> Self {
        DomainSpec {
            kind: DomainKind::Ellipsoid,
            params: vec![a, b, c],
            center: [0.0; 3],
        }
    }

    pub fn superellipsoid(a: f64, b: f64, c: f64, p: f64) -> Self {
        DomainSpec {
            kind: DomainKind::Superellipsoid,
            params: vec![a, b, c, p],
            center: [0.0; 3],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative bracket width at which bisection hands over to the final Newton step.
    pub root: f64,
    /// Absolute distance (as a multiple of the bounding radius) treated as "on the surface".
    pub surface: f64,
    /// Smallest admissible gradient norm of the defining function.
    pub gradient: f64,
    /// Normal component below which an exit is considered grazing.
    pub grazing: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            root: 1e-12,
            surface: 1e-10,
            gradient: 1e-12,
            grazing: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
enum Shape {
    Ellipsoid {
        axes: [f64; 3],
    },
    Superellipsoid {
        axes: [f64; 3],
        p: f64,
        delta: f64,
        level: f64,
    },
}

/// Bounded, smooth, strictly convex domain `{phi < 0}`.
#[derive(Clone, Debug)]
pub struct ConvexDomain {
    pub(super) spec: DomainSpec,
    shape: Shape,
    pub(super) center: Vec3,
    pub(super) bounding_radius: f64,
    pub(super) diameter: f64,
    pub(super) tol: Tolerances,
}

const DEFAULT_DELTA: f64 = 0.1;

impl ConvexDomain {
    pub fn from_spec(spec: &DomainSpec) -> Result<Self> {
        Self::with_tolerances(spec, Tolerances::default())
    }

    pub fn with_tolerances(spec: &DomainSpec, tol: Tolerances) -> Result<Self> {
        let bad = |m: &str| Error::InvalidParameter(format!("{:?}: {m}", spec.kind));
        let p = &spec.params;
        if p.iter().any(|x| !x.is_finite()) || spec.center.iter().any(|x| !x.is_finite()) {
            return Err(bad("non-finite parameter"));
        }
        let shape = match spec.kind {
            DomainKind::Ball => {
                if p.len() != 1 || p[0] <= 0.0 {
                    return Err(bad("expected [R] with R > 0"));
                }
                Shape::Ellipsoid { axes: [p[0]; 3] }
            }
            DomainKind::Ellipsoid => {
                if p.len() != 3 || p.iter().any(|&a| a <= 0.0) {
                    return Err(bad("expected three positive semi-axes"));
                }
                Shape::Ellipsoid {
                    axes: [p[0], p[1], p[2]],
                }
            }
            DomainKind::Superellipsoid => {
                if !(p.len() == 4 || p.len() == 5) || p[..3].iter().any(|&a| a <= 0.0) {
                    return Err(bad("expected [a, b, c, p] or [a, b, c, p, delta]"));
                }
                let e = p[3];
                if !(e > 1.0 && e <= 2.0) {
                    return Err(bad("exponent must lie in (1, 2]"));
                }
                let delta = p.get(4).copied().unwrap_or(DEFAULT_DELTA);
                if delta <= 0.0 {
                    return Err(bad("smoothing delta must be positive"));
                }
                let level = (1.0 + delta * delta).powf(e / 2.0) + 2.0 * delta.powf(e);
                Shape::Superellipsoid {
                    axes: [p[0], p[1], p[2]],
                    p: e,
                    delta,
                    level,
                }
            }
        };
        if !(tol.root > 0.0 && tol.surface > 0.0 && tol.grazing > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        let bounding_radius = match &shape {
            Shape::Ellipsoid { axes } => axes.iter().cloned().fold(0.0, f64::max),
            Shape::Superellipsoid { axes, .. } => axes.iter().map(|a| a * a).sum::<f64>().sqrt(),
        };
        let mut dom = ConvexDomain {
            spec: spec.clone(),
            shape,
            center: Vector3::from(spec.center),
            bounding_radius,
            diameter: 0.0,
            tol,
        };
        dom.diameter = dom.compute_diameter()?;
        Ok(dom)
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Absolute surface tolerance.
    pub fn surface_tol(&self) -> f64 {
        self.tol.surface * self.bounding_radius
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let half = match &self.shape {
            Shape::Ellipsoid { axes } | Shape::Superellipsoid { axes, .. } => Vector3::from(*axes),
        };
        (self.center - half, self.center + half)
    }

    pub fn volume(&self) -> Option<f64> {
        match &self.shape {
            Shape::Ellipsoid { axes } => {
                Some(4.0 / 3.0 * std::f64::consts::PI * axes[0] * axes[1] * axes[2])
            }
            Shape::Superellipsoid { .. } => None,
        }
    }

    /// Same shape scaled about its center by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mut spec = self.spec.clone();
        let n = match spec.kind {
            DomainKind::Ball => 1,
            _ => 3,
        };
        for a in spec.params.iter_mut().take(n) {
            *a *= factor;
        }
        Self::with_tolerances(&spec, self.tol)
    }

    pub fn phi(&self, x: &Vec3) -> f64 {
        let y = x - self.center;
        match &self.shape {
            Shape::Ellipsoid { axes } => {
                (0..3).map(|i| (y[i] / axes[i]).powi(2)).sum::<f64>() - 1.0
            }
            Shape::Superellipsoid {
                axes,
                p,
                delta,
                level,
            } => {
                let d2 = delta * delta;
                (0..3)
                    .map(|i| ((y[i] / axes[i]).powi(2) + d2).powf(p / 2.0))
                    .sum::<f64>()
                    - level
            }
        }
    }

    pub fn grad(&self, x: &Vec3) -> Vec3 {
        let y = x - self.center;
        match &self.shape {
            Shape::Ellipsoid { axes } => {
                Vector3::from_fn(|i, _| 2.0 * y[i] / (axes[i] * axes[i]))
            }
            Shape::Superellipsoid { axes, p, delta, .. } => {
                let d2 = delta * delta;
                Vector3::from_fn(|i, _| {
                    let t = y[i] / axes[i];
                    p * (t * t + d2).powf(p / 2.0 - 1.0) * t / axes[i]
                })
            }
        }
    }

    pub fn hessian(&self, x: &Vec3) -> Matrix3<f64> {
        let y = x - self.center;
        match &self.shape {
            Shape::Ellipsoid { axes } => {
                Matrix3::from_diagonal(&Vector3::from_fn(|i, _| 2.0 / (axes[i] * axes[i])))
            }
            Shape::Superellipsoid { axes, p, delta, .. } => {
                let d2 = delta * delta;
                Matrix3::from_diagonal(&Vector3::from_fn(|i, _| {
                    let t = y[i] / axes[i];
                    let u = t * t + d2;
                    p / (axes[i] * axes[i]) * u.powf(p / 2.0 - 2.0) * ((p - 1.0) * t * t + d2)
                }))
            }
        }
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        self.phi(x) < 0.0
    }

    /// First-order estimate of the distance from `x` to the zero level set.
    pub fn level_distance(&self, x: &Vec3) -> f64 {
        let g = self.grad(x).norm();
        if g == 0.0 {
            return f64::INFINITY;
        }
        self.phi(x).abs() / g
    }

    /// Outward unit normal at (or near) a boundary point.
    pub fn normal(&self, q: &Vec3) -> Result<Vec3> {
        let g = self.grad(q);
        let n = g.norm();
        if n < self.tol.gradient {
            return Err(Error::DegenerateGradient);
        }
        Ok(g / n)
    }

    fn compute_diameter(&self) -> Result<f64> {
        match &self.shape {
            Shape::Ellipsoid { axes } => Ok(2.0 * axes.iter().cloned().fold(0.0, f64::max)),
            Shape::Superellipsoid { .. } => {
                // centrally symmetric: diameter is twice the largest radius
                let mut best: f64 = 0.0;
                let mut dirs = fibonacci_sphere(4096);
                for i in 0..3 {
                    dirs.push(Vector3::from_fn(|j, _| if i == j { 1.0 } else { 0.0 }));
                }
                for d in dirs {
                    let t = self.forward_distance(&self.center, &d)?;
                    best = best.max(t);
                }
                Ok(2.0 * best)
            }
        }
    }
}
