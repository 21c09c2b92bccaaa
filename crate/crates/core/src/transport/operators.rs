use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Field, PhaseFunction, Provenance, RaySupport, Support};
use crate::geometry::{ConvexDomain, Vec3};
use crate::kernel::{apply_k, CollisionModel, VelocityQuadrature};
use crate::quadrature::{Adaptive, GaussLegendre};

use super::BoundaryData;

/// Quadrature along backward characteristics.
#[derive(Clone, Debug)]
pub enum ChordRule {
    Adaptive(Adaptive),
    /// Composite Gauss-Legendre with a fixed node set. Results are smooth in
    /// the endpoints, which the seminorm estimators need.
    Fixed { panels: usize, rule: Arc<GaussLegendre> },
}

impl ChordRule {
    pub fn adaptive() -> Self {
        ChordRule::Adaptive(Adaptive::default())
    }

    pub fn fixed(panels: usize, order: usize) -> Self {
        ChordRule::Fixed {
            panels: panels.max(1),
            rule: Arc::new(GaussLegendre::new(order.max(1))),
        }
    }

    /// Nodes per chord (for budgets; the adaptive rule is counted at its first pass).
    pub fn nominal_nodes(&self) -> usize {
        match self {
            ChordRule::Adaptive(_) => 48,
            ChordRule::Fixed { panels, rule } => panels * rule.len(),
        }
    }

    /// Explicit node set on `[a, b]`. The adaptive rule is represented by
    /// its first pass (four 16-point panels).
    pub fn nodes(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let (panels, rule) = match self {
            ChordRule::Adaptive(_) => (4, crate::quadrature::gl16()),
            ChordRule::Fixed { panels, rule } => (*panels, rule.as_ref()),
        };
        let h = (b - a) / panels as f64;
        (0..panels)
            .flat_map(|k| rule.on(a + k as f64 * h, a + (k + 1) as f64 * h).collect::<Vec<_>>())
            .collect()
    }

    /// Integrate a fallible integrand; the first error wins.
    pub fn integrate<F>(&self, a: f64, b: f64, mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let mut failure = None;
        let mut g = |t: f64| match f(t) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        };
        let value = match self {
            ChordRule::Adaptive(q) => q.integrate(a, b, &mut g)?,
            ChordRule::Fixed { panels, rule } => rule.composite(a, b, *panels, &mut g),
        };
        match failure {
            Some(e) => Err(e),
            None => Ok(value),
        }
    }
}

/// Everything an operator evaluation needs.
#[derive(Clone, Debug)]
pub struct TransportSetup {
    pub domain: Arc<ConvexDomain>,
    pub model: CollisionModel,
    pub velocity: Arc<VelocityQuadrature>,
    pub chord: ChordRule,
}

impl TransportSetup {
    pub fn new(domain: ConvexDomain, model: CollisionModel, velocity: VelocityQuadrature, chord: ChordRule) -> Self {
        TransportSetup {
            domain: Arc::new(domain),
            model,
            velocity: Arc::new(velocity),
            chord,
        }
    }
}

/// `J g (x, v) = exp(-nu(v) tau_-(x, v)) g(q_-(x, v), v)`; zero at `v = 0` (limit).
pub fn apply_j(setup: &TransportSetup, data: &BoundaryData, x: &Vec3, v: &Vec3) -> Result<f64> {
    if data.is_zero() || v.norm() == 0.0 {
        return Ok(0.0);
    }
    let exit = setup.domain.backward_exit(x, v)?;
    Ok((-setup.model.nu(v) * exit.tau).exp() * data.eval(&exit.point, v))
}

/// `S_Omega h (x, v) = int_0^tau_- exp(-nu s) h(x - s v, v) ds`; `h(x, 0) / nu` at `v = 0`.
pub fn apply_s_omega(setup: &TransportSetup, h: &dyn PhaseFunction, x: &Vec3, v: &Vec3) -> Result<f64> {
    let nu = setup.model.nu(v);
    if v.norm() == 0.0 {
        if !setup.domain.contains(x) {
            return Err(Error::NotInterior { phi: setup.domain.phi(x) });
        }
        return Ok(h.eval(x, v)? / nu);
    }
    let exit = setup.domain.backward_exit(x, v)?;
    setup
        .chord
        .integrate(0.0, exit.tau, |s| Ok((-nu * s).exp() * h.eval(&(x - v * s), v)?))
}

/// `S h (x, v) = int_0^inf exp(-nu t) h(x - v t, v) dt` for whole-space `h`.
pub fn apply_s_wholespace(model: &CollisionModel, chord: &ChordRule, h: &dyn PhaseFunction, x: &Vec3, v: &Vec3) -> Result<f64> {
    let nu = model.nu(v);
    let speed = v.norm();
    if speed == 0.0 {
        return Ok(h.eval(x, v)? / nu);
    }
    let back = -v / speed;
    match h.ray_support(x, &back)? {
        RaySupport::Empty => Ok(0.0),
        RaySupport::Interval(a, b) => {
            let (a, b) = (a.max(0.0) / speed, b.max(0.0) / speed);
            if b <= a {
                return Ok(0.0);
            }
            chord.integrate(a, b, |t| Ok((-nu * t).exp() * h.eval(&(x - v * t), v)?))
        }
        RaySupport::Unbounded => chord.integrate(0.0, 1.0, |u| {
            if u == 0.0 {
                return Ok(0.0);
            }
            let t = -u.ln() / nu;
            Ok(h.eval(&(x - v * t), v)? / nu)
        }),
    }
}

pub struct JField {
    pub setup: TransportSetup,
    pub data: BoundaryData,
}

impl PhaseFunction for JField {
    fn eval(&self, x: &Vec3, v: &Vec3) -> Result<f64> {
        apply_j(&self.setup, &self.data, x, v)
    }
    fn support(&self) -> Support {
        Support::Omega
    }
    fn provenance(&self) -> Provenance {
        Provenance::OperatorComposition
    }
}

pub struct SOmegaField {
    pub setup: TransportSetup,
    pub inner: Field,
}

impl PhaseFunction for SOmegaField {
    fn eval(&self, x: &Vec3, v: &Vec3) -> Result<f64> {
        apply_s_omega(&self.setup, self.inner.as_ref(), x, v)
    }
    fn support(&self) -> Support {
        Support::Omega
    }
    fn provenance(&self) -> Provenance {
        Provenance::OperatorComposition
    }
}

pub struct KField {
    pub setup: TransportSetup,
    pub inner: Field,
}

impl PhaseFunction for KField {
    fn eval(&self, x: &Vec3, v: &Vec3) -> Result<f64> {
        apply_k(&self.setup.model, &self.setup.velocity, self.inner.as_ref(), x, v)
    }
    fn support(&self) -> Support {
        self.inner.support()
    }
    fn provenance(&self) -> Provenance {
        Provenance::OperatorComposition
    }
}

/// Extension by zero outside the domain.
pub struct ZeroExtension {
    pub domain: Arc<ConvexDomain>,
    pub inner: Field,
}

impl PhaseFunction for ZeroExtension {
    fn eval(&self, x: &Vec3, v: &Vec3) -> Result<f64> {
        if self.domain.contains(x) {
            self.inner.eval(x, v)
        } else {
            Ok(0.0)
        }
    }
    fn support(&self) -> Support {
        Support::WholeSpace
    }
    fn provenance(&self) -> Provenance {
        self.inner.provenance()
    }
    fn ray_support(&self, x: &Vec3, dir: &Vec3) -> Result<RaySupport> {
        Ok(match self.domain.line_interval(x, dir)? {
            Some((a, b)) if b > 0.0 => RaySupport::Interval(a.max(0.0), b),
            _ => RaySupport::Empty,
        })
    }
}

/// Whole-space `S` applied to a whole-space field.
pub struct WholeSpaceS {
    pub model: CollisionModel,
    pub chord: ChordRule,
    pub inner: Field,
}

impl PhaseFunction for WholeSpaceS {
    fn eval(&self, x: &Vec3, v: &Vec3) -> Result<f64> {
        apply_s_wholespace(&self.model, &self.chord, self.inner.as_ref(), x, v)
    }
    fn support(&self) -> Support {
        Support::WholeSpace
    }
    fn provenance(&self) -> Provenance {
        Provenance::OperatorComposition
    }
}

pub fn j_field(setup: &TransportSetup, data: &BoundaryData) -> Field {
    Arc::new(JField {
        setup: setup.clone(),
        data: *data,
    })
}

/// `S_Omega K f`.
pub fn sk_field(setup: &TransportSetup, f: &Field) -> Field {
    let k: Field = Arc::new(KField {
        setup: setup.clone(),
        inner: f.clone(),
    });
    Arc::new(SOmegaField {
        setup: setup.clone(),
        inner: k,
    })
}

pub fn zero_extension(domain: &Arc<ConvexDomain>, f: &Field) -> Field {
    Arc::new(ZeroExtension {
        domain: domain.clone(),
        inner: f.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ClosedForm;
    use crate::geometry::DomainSpec;
    use crate::kernel::VelocityScheme;
    use nalgebra::Vector3;

    fn setup(freq: f64) -> TransportSetup {
        let d = ConvexDomain::from_spec(&DomainSpec::ball(1.0)).unwrap();
        let m = CollisionModel::new(1.0, 1.0, 1.0)
            .unwrap()
            .with_frequency_exponent(freq)
            .unwrap();
        let q = VelocityQuadrature::new(VelocityScheme::PolarAboutQuery, 8.0, 24, 8, 4).unwrap();
        TransportSetup::new(d, m, q, ChordRule::adaptive())
    }

    #[test]
    fn j_examples() {
        let s = setup(0.0);
        let x = Vector3::zeros();
        let j = apply_j(&s, &BoundaryData::constant(1.0), &x, &Vector3::new(2.0, 0.0, 0.0)).unwrap();
        assert!((j - (-0.5f64).exp()).abs() < 1e-13);
        let j0 = apply_j(&s, &BoundaryData::constant(0.0), &x, &Vector3::new(2.0, 0.0, 0.0)).unwrap();
        assert_eq!(j0, 0.0);
        let s1 = setup(1.0);
        let g = BoundaryData::new(&super::super::BoundarySpec {
            kind: super::super::BoundaryKind::Gaussian,
            a: 0.1,
            c: 1.0,
        })
        .unwrap();
        let j = apply_j(&s1, &g, &x, &Vector3::new(1.0, 0.0, 0.0)).unwrap();
        assert!((j - (-2.1f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn s_omega_examples() {
        let s = setup(0.0);
        let one = ClosedForm::omega(|_, _| 1.0);
        let x = Vector3::zeros();
        let v = Vector3::new(1.0, 0.0, 0.0);
        let a = apply_s_omega(&s, one.as_ref(), &x, &v).unwrap();
        assert!((a - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        let lin = ClosedForm::omega(|x, _| x[0]);
        let b = apply_s_omega(&s, lin.as_ref(), &x, &v).unwrap();
        assert!((b - (2.0 * (-1.0f64).exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn restriction_identity_for_indicator() {
        let s = setup(1.0);
        let one = ClosedForm::omega(|_, _| 1.0);
        let ext = zero_extension(&s.domain, &one);
        for (x, v) in [
            (Vector3::new(0.2, -0.3, 0.1), Vector3::new(0.5, 1.0, -0.2)),
            (Vector3::new(-0.7, 0.1, 0.5), Vector3::new(-2.0, 0.1, 0.3)),
        ] {
            let a = apply_s_omega(&s, one.as_ref(), &x, &v).unwrap();
            let b = apply_s_wholespace(&s.model, &s.chord, ext.as_ref(), &x, &v).unwrap();
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn whole_space_gaussian_matches_dense_quadrature() {
        let s = setup(1.0);
        let h = ClosedForm::whole_space(|x, _| (-x.norm_squared()).exp());
        let x = Vector3::new(0.3, 0.2, -0.1);
        let v = Vector3::new(0.8, -0.4, 0.2);
        let got = apply_s_wholespace(&s.model, &s.chord, h.as_ref(), &x, &v).unwrap();
        let nu = s.model.nu(&v);
        let n = 400_000;
        let tmax = 40.0;
        let dense: f64 = (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) * tmax / n as f64;
                (-nu * t).exp() * (-(x - v * t).norm_squared()).exp() * tmax / n as f64
            })
            .sum();
        assert!((got - dense).abs() < 1e-8, "{got} vs {dense}");
    }

    #[test]
    fn zero_velocity_limits() {
        let s = setup(1.0);
        let h = ClosedForm::omega(|_, _| 3.0);
        let x = Vector3::zeros();
        assert_eq!(apply_s_omega(&s, h.as_ref(), &x, &Vector3::zeros()).unwrap(), 3.0);
        assert_eq!(apply_j(&s, &BoundaryData::constant(1.0), &x, &Vector3::zeros()).unwrap(), 0.0);
    }

    #[test]
    fn s_omega_contraction_envelope() {
        let s = setup(1.0);
        let h = ClosedForm::omega(|x, v| (x[0] * 3.0 + v[1]).sin());
        for k in 0..20 {
            let t = k as f64 * 0.37;
            let x = Vector3::new(0.5 * t.sin(), 0.3 * t.cos(), 0.1);
            let v = Vector3::new(t.cos(), 1.0 - t.sin(), 0.2 * t);
            let val = apply_s_omega(&s, h.as_ref(), &x, &v).unwrap();
            assert!(val.abs() <= 1.0 / s.model.nu0 + 1e-12);
        }
    }
}
