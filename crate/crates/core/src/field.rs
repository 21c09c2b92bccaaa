//! Phase-space functions `f(x, v)` shared by the operator and seminorm code.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    /// Defined on the domain only; callers must not query outside it.
    Omega,
    WholeSpace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    OperatorComposition,
    Tabulated,
}

/// Where a function can be nonzero along the half-line `x + t dir`, `t >= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RaySupport {
    Unbounded,
    /// Parameter interval in distance along `dir`.
    Interval(f64, f64),
    Empty,
}

pub trait PhaseFunction: Send + Sync {
    fn eval(&self, x: &Vec3, v: &Vec3) -> Result<f64>;

    fn support(&self) -> Support;

    fn provenance(&self) -> Provenance {
        Provenance::ClosedForm
    }

    fn ray_support(&self, _x: &Vec3, _dir: &Vec3) -> Result<RaySupport> {
        Ok(RaySupport::Unbounded)
    }
}

pub type Field = Arc<dyn PhaseFunction>;

/// Function given by a closure.
pub struct ClosedForm<F> {
    f: F,
    support: Support,
}

impl<F> ClosedForm<F>
where
    F: Fn(&Vec3, &Vec3) -> f64 + Send + Sync + 'static,
{
    pub fn omega(f: F) -> Field {
        Arc::new(ClosedForm {
            f,
            support: Support::Omega,
        })
    }

    pub fn whole_space(f: F) -> Field {
        Arc::new(ClosedForm {
            f,
            support: Support::WholeSpace,
        })
    }
}

impl<F> PhaseFunction for ClosedForm<F>
where
    F: Fn(&Vec3, &Vec3) -> f64 + Send + Sync,
{
    fn eval(&self, x: &Vec3, v: &Vec3) -> Result<f64> {
        Ok((self.f)(x, v))
    }

    fn support(&self) -> Support {
        self.support
    }
}

/// `a f + b g`.
pub struct Combination {
    pub a: f64,
    pub f: Field,
    pub b: f64,
    pub g: Field,
}

impl PhaseFunction for Combination {
    fn eval(&self, x: &Vec3, v: &Vec3) -> Result<f64> {
        Ok(self.a * self.f.eval(x, v)? + self.b * self.g.eval(x, v)?)
    }

    fn support(&self) -> Support {
        match (self.f.support(), self.g.support()) {
            (Support::WholeSpace, Support::WholeSpace) => Support::WholeSpace,
            _ => Support::Omega,
        }
    }

    fn provenance(&self) -> Provenance {
        Provenance::OperatorComposition
    }
}

pub fn combine(a: f64, f: &Field, b: f64, g: &Field) -> Field {
    Arc::new(Combination {
        a,
        f: f.clone(),
        b,
        g: g.clone(),
    })
}
