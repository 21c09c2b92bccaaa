use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, DomainSpec, Tolerances};
use crate::kernel::{CollisionModel, MomentRule, VelocityQuadrature, VelocityScheme};
use crate::transport::{BoundaryData, BoundaryKind, BoundarySpec, ChordRule, TransportSetup};

/// `"collision": {"gamma": .., "nu0": .., "kernel_scale": .., "vmax": ..}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollisionSpec {
    pub gamma: f64,
    pub nu0: f64,
    pub kernel_scale: f64,
    pub vmax: f64,
    /// Exponent of the collision frequency; `gamma` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency_exponent: Option<f64>,
}

impl Default for CollisionSpec {
    fn default() -> Self {
        CollisionSpec {
            gamma: 1.0,
            nu0: 1.0,
            kernel_scale: 1.0,
            vmax: 12.0,
            frequency_exponent: None,
        }
    }
}

impl CollisionSpec {
    pub fn model(&self) -> Result<CollisionModel> {
        let m = CollisionModel::new(self.gamma, self.nu0, self.kernel_scale)?;
        match self.frequency_exponent {
            Some(e) => m.with_frequency_exponent(e),
            None => Ok(m),
        }
    }
}

/// Sample counts and resolutions. Counts are multiplied by `budget_scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budgets {
    /// Exit-record checks (`proj_distance`, `proj_distance2`, `chord_bound`).
    pub geometry_samples: usize,
    /// `distance_comparison` and `curvature_2d`.
    pub planar_samples: usize,
    pub chord_samples: usize,
    /// Chords per order in `frac_chord_2`.
    pub trend_chord_samples: usize,
    pub distance_samples: usize,
    pub surface_samples: usize,
    pub rolling_samples: usize,
    pub moment_rule: MomentRule,
    /// `[radial, polar, azimuthal]` nodes of the velocity rule for `K`.
    pub velocity_nodes: [usize; 3],
    /// Origin-centered rule whose dense matrix the Schur test inspects.
    pub schur_nodes: [usize; 3],
    pub sk_samples: usize,
    pub cov_samples: usize,
    pub seminorm_samples: usize,
    pub sweep_samples: usize,
    pub zero_extension_samples: usize,
    /// Dyadic shells below the outer radius in the seminorm estimator.
    pub floor_exponent: u32,
    pub grid: usize,
    /// Velocity rule and fixed chord rule `[panels, order]` inside nested compositions.
    pub sweep_velocity_nodes: [usize; 3],
    pub sweep_chord: [usize; 2],
    /// Standard deviation of the Gaussian velocity sampling in seminorms.
    pub sweep_sigma: f64,
    /// Cap on base evaluations behind one nested value.
    pub node_budget: f64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            geometry_samples: 100_000,
            planar_samples: 10_000,
            chord_samples: 10_000,
            trend_chord_samples: 2_000,
            distance_samples: 200_000,
            surface_samples: 40_000,
            rolling_samples: 2_000,
            moment_rule: MomentRule::default(),
            velocity_nodes: [24, 12, 12],
            schur_nodes: [12, 6, 8],
            sk_samples: 1_000,
            cov_samples: 10_000,
            seminorm_samples: 40_000,
            sweep_samples: 48_000,
            zero_extension_samples: 48_000,
            floor_exponent: 24,
            grid: 64,
            sweep_velocity_nodes: [4, 4, 2],
            sweep_chord: [1, 4],
            sweep_sigma: 2.0,
            node_budget: 1e8,
        }
    }
}

/// Orders and exponents used by the trend checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Orders {
    pub frac_chord_eps: Vec<f64>,
    pub distance_eps: Vec<f64>,
    pub surface_depths: Vec<f64>,
    pub maxwellian_rates: Vec<f64>,
    pub multiplier_xi: Vec<f64>,
    pub equivalence_s: f64,
    pub sweep_s: Vec<f64>,
    pub zero_extension_s: Vec<f64>,
}

impl Default for Orders {
    fn default() -> Self {
        Orders {
            frac_chord_eps: vec![0.2, 0.1, 0.05, 0.025],
            distance_eps: vec![1.0, 0.5, 0.2, 0.1],
            surface_depths: vec![0.3, 0.1, 0.03, 0.01],
            maxwellian_rates: vec![0.05, 0.1, 0.2],
            multiplier_xi: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            equivalence_s: 0.5,
            sweep_s: vec![0.3, 0.5, 0.7, 0.9],
            zero_extension_s: vec![0.3, 0.4, 0.45],
        }
    }
}

fn default_boundary() -> BoundarySpec {
    BoundarySpec {
        kind: BoundaryKind::LipschitzBump,
        a: 0.1,
        c: 1.0,
    }
}

fn default_domain() -> DomainSpec {
    DomainSpec::ball(1.0)
}

fn default_seed() -> u64 {
    1
}

fn default_scale() -> f64 {
    1.0
}

fn default_output() -> PathBuf {
    PathBuf::from("kinlab-out")
}

/// The single JSON document describing a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "default_domain")]
    pub domain: DomainSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub collision: CollisionSpec,
    #[serde(default = "default_boundary")]
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default = "default_scale")]
    pub budget_scale: f64,
    #[serde(default)]
    pub orders: Orders,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config parses")
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.budgets;
        let counts = [
            b.geometry_samples,
            b.planar_samples,
            b.chord_samples,
            b.trend_chord_samples,
            b.distance_samples,
            b.surface_samples,
            b.rolling_samples,
            b.sk_samples,
            b.cov_samples,
            b.seminorm_samples,
            b.sweep_samples,
            b.zero_extension_samples,
            b.grid,
            b.floor_exponent as usize,
            b.moment_rule.radial_panels,
            b.moment_rule.angular_panels,
        ];
        if counts.contains(&0) || b.velocity_nodes.contains(&0) || b.schur_nodes.contains(&0) || b.sweep_velocity_nodes.contains(&0) || b.sweep_chord.contains(&0) {
            return Err(Error::InvalidParameter("all budgets must be positive".into()));
        }
        if !(self.budget_scale > 0.0 && self.budget_scale.is_finite()) {
            return Err(Error::InvalidParameter("budget_scale must be positive".into()));
        }
        if !(b.node_budget > 0.0 && b.sweep_sigma > 0.0 && b.moment_rule.vmax > 0.0) {
            return Err(Error::InvalidParameter("node budget, sigma and vmax must be positive".into()));
        }
        if self.orders.sweep_s.windows(2).any(|w| w[1] <= w[0]) || self.orders.zero_extension_s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("order lists must be ascending".into()));
        }
        self.collision.model()?;
        BoundaryData::new(&self.boundary)?;
        ConvexDomain::with_tolerances(&self.domain, self.tolerances)?;
        Ok(())
    }

    /// Canonical JSON: sorted keys, without the seed and the output directory.
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(m) = v.as_object_mut() {
            m.remove("seed");
            m.remove("output_dir");
        }
        v.to_string()
    }

    /// SHA-256 of [`canonical_json`](Self::canonical_json), hex encoded.
    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    /// A sample count after `budget_scale`, never below `floor`.
    pub fn scaled(&self, n: usize, floor: usize) -> usize {
        ((n as f64 * self.budget_scale).round() as usize).max(floor)
    }

    pub fn domain(&self) -> Result<ConvexDomain> {
        ConvexDomain::with_tolerances(&self.domain, self.tolerances)
    }

    pub fn model(&self) -> Result<CollisionModel> {
        self.collision.model()
    }

    pub fn boundary_data(&self) -> Result<BoundaryData> {
        BoundaryData::new(&self.boundary)
    }

    pub fn velocity_rule(&self) -> Result<VelocityQuadrature> {
        let [a, b, c] = self.budgets.velocity_nodes;
        VelocityQuadrature::new(VelocityScheme::PolarAboutQuery, self.collision.vmax, a, b, c)
    }

    pub fn moment_rule(&self) -> MomentRule {
        MomentRule {
            vmax: self.collision.vmax,
            ..self.budgets.moment_rule
        }
    }

    /// Setup for nested compositions on `domain`.
    pub fn sweep_setup(&self, domain: ConvexDomain) -> Result<TransportSetup> {
        let [a, b, c] = self.budgets.sweep_velocity_nodes;
        let q = VelocityQuadrature::new(VelocityScheme::PolarAboutQuery, self.collision.vmax, a, b, c)?;
        let [p, o] = self.budgets.sweep_chord;
        Ok(TransportSetup::new(domain, self.model()?, q, ChordRule::fixed(p, o)))
    }

    /// Setup with the full velocity rule and adaptive chords.
    pub fn setup(&self) -> Result<TransportSetup> {
        Ok(TransportSetup::new(self.domain()?, self.model()?, self.velocity_rule()?, ChordRule::adaptive()))
    }
}

/// Shared handle used when checks run concurrently.
pub type SharedConfig = Arc<RunConfig>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.domain, DomainSpec::ball(1.0));
        assert_eq!(c.tolerances, Tolerances::default());
    }

    #[test]
    fn hash_survives_round_trip_and_ignores_seed() {
        let mut c = RunConfig::default();
        c.domain = DomainSpec::ellipsoid(2.0, 1.0, 1.0);
        let back = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back.config_hash(), c.config_hash());
        let mut d = c.clone();
        d.seed = 99;
        d.output_dir = "elsewhere".into();
        assert_eq!(d.config_hash(), c.config_hash());
        d.budget_scale = 0.5;
        assert_ne!(d.config_hash(), c.config_hash());
    }

    #[test]
    fn partial_blocks_fill_defaults() {
        let c = RunConfig::from_json(r#"{"tolerances": {"root": 0.01}, "collision": {"gamma": 0.5}}"#).unwrap();
        assert_eq!(c.tolerances.root, 0.01);
        assert_eq!(c.tolerances.grazing, Tolerances::default().grazing);
        assert_eq!(c.collision.gamma, 0.5);
        assert_eq!(c.collision.vmax, 12.0);
    }

    #[test]
    fn rejects_bad_budgets() {
        assert!(RunConfig::from_json(r#"{"budgets": {"grid": 0}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"budget_scale": -1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"boundary": {"kind": "gaussian", "a": 0.3}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"domain": {"kind": "torus", "params": [1]}}"#).is_err());
    }
}
