use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{chunk_rng, task_tag};
use crate::geometry::{random_unit, ConvexDomain, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Constant,
    Gaussian,
    LipschitzBump,
}

/// Config block `{"kind": ..., "a": ..., "C": ...}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub kind: BoundaryKind,
    #[serde(default = "default_rate")]
    pub a: f64,
    #[serde(rename = "C", default = "default_scale")]
    pub c: f64,
}

fn default_rate() -> f64 {
    0.1
}

fn default_scale() -> f64 {
    1.0
}

/// Incoming boundary data `g(q, v)` on the incoming phase boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryData {
    kind: BoundaryKind,
    rate: f64,
    scale: f64,
}

impl BoundaryData {
    pub fn new(spec: &BoundarySpec) -> Result<Self> {
        if !spec.c.is_finite() {
            return Err(Error::InvalidParameter("boundary scale must be finite".into()));
        }
        let rate = match spec.kind {
            BoundaryKind::Constant => 0.0,
            _ => {
                if !(spec.a >= 0.0 && spec.a < 0.25) {
                    return Err(Error::InvalidParameter(format!(
                        "gaussian rate a = {} must lie in [0, 1/4)",
                        spec.a
                    )));
                }
                spec.a
            }
        };
        Ok(BoundaryData {
            kind: spec.kind,
            rate,
            scale: spec.c,
        })
    }

    pub fn constant(c: f64) -> Self {
        BoundaryData {
            kind: BoundaryKind::Constant,
            rate: 0.0,
            scale: c,
        }
    }

    pub fn kind(&self) -> BoundaryKind {
        self.kind
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_zero(&self) -> bool {
        self.scale == 0.0
    }

    pub fn eval(&self, q: &Vec3, v: &Vec3) -> f64 {
        match self.kind {
            BoundaryKind::Constant => self.scale,
            BoundaryKind::Gaussian => self.scale * (-self.rate * v.norm_squared()).exp(),
            BoundaryKind::LipschitzBump => {
                self.scale
                    * (-self.rate * v.norm_squared()).exp()
                    * (2.0 + (q[0] + 2.0 * q[1] - q[2]).sin())
                    / 3.0
            }
        }
    }

    /// Constant in `|g(q1, v) - g(q2, v)| <= L |q1 - q2|`.
    pub fn lipschitz_constant(&self) -> f64 {
        match self.kind {
            BoundaryKind::Constant | BoundaryKind::Gaussian => 0.0,
            BoundaryKind::LipschitzBump => self.scale.abs() * 6f64.sqrt() / 3.0,
        }
    }

    /// Samples boundary points and velocities; counts violations of the
    /// Gaussian envelope and the Lipschitz bound.
    pub fn check_assumptions(&self, domain: &ConvexDomain, samples: usize, seed: u64) -> Result<(usize, usize)> {
        let mut rng = chunk_rng(seed, task_tag("boundary_assumptions"), 0);
        let c = domain.center();
        let boundary = |rng: &mut rand_chacha::ChaCha8Rng| -> Result<Vec3> {
            let d = random_unit(rng);
            Ok(c + d * domain.forward_distance(&c, &d)?)
        };
        let (mut env, mut lip) = (0, 0);
        for _ in 0..samples {
            let q1 = boundary(&mut rng)?;
            let q2 = boundary(&mut rng)?;
            let v = random_unit(&mut rng) * (8.0 * rng.random::<f64>());
            let bound = self.scale.abs() * (-self.rate * v.norm_squared()).exp();
            if self.eval(&q1, &v).abs() > bound * (1.0 + 1e-12) {
                env += 1;
            }
            let diff = (self.eval(&q1, &v) - self.eval(&q2, &v)).abs();
            if diff > self.lipschitz_constant() * (q1 - q2).norm() * (1.0 + 1e-12) + 1e-15 {
                lip += 1;
            }
        }
        Ok((env, lip))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;

    #[test]
    fn rejects_fast_decay() {
        let spec = BoundarySpec {
            kind: BoundaryKind::Gaussian,
            a: 0.3,
            c: 1.0,
        };
        assert!(BoundaryData::new(&spec).is_err());
    }

    #[test]
    fn bump_obeys_assumptions() {
        let d = ConvexDomain::from_spec(&DomainSpec::ellipsoid(2.0, 1.0, 1.0)).unwrap();
        let g = BoundaryData::new(&BoundarySpec {
            kind: BoundaryKind::LipschitzBump,
            a: 0.1,
            c: 1.5,
        })
        .unwrap();
        assert_eq!(g.check_assumptions(&d, 2000, 1).unwrap(), (0, 0));
    }

    #[test]
    fn config_block_parses() {
        let s: BoundarySpec = serde_json::from_str(r#"{"kind":"lipschitz_bump","a":0.2,"C":2}"#).unwrap();
        assert_eq!(s.kind, BoundaryKind::LipschitzBump);
        assert_eq!(s.c, 2.0);
    }
}
