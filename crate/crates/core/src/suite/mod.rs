//! Named verification checks that produce reproducible certificates.

mod config;
mod geometry_checks;
mod kernel_checks;
pub mod output;
mod regularity_checks;
mod transport_checks;

use std::io::Write;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::exec::{chunk_rng, chunk_sizes, task_tag, Execution};

pub use config::{Budgets, CollisionSpec, Orders, RunConfig, SharedConfig};

/// Registered check names, in suite order.
pub const CHECKS: [&str; 23] = [
    "proj_distance",
    "proj_distance2",
    "chord_bound",
    "distance_comparison",
    "frac_chord_1",
    "frac_chord_2",
    "distance_integral",
    "surface_integral",
    "curvature_2d",
    "cone_jacobian",
    "kernel_l1",
    "kernel_l2",
    "caflisch",
    "inverse_vsq",
    "maxwellian_preserve",
    "schur_klp",
    "sk_square",
    "cov1",
    "cov2",
    "multiplier_decay",
    "sobolev_equivalence",
    "regularity_sweep",
    "zero_extension_trend",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Flagged,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Flagged => "flagged",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub check_name: String,
    pub status: Status,
    pub measured_constant: Option<f64>,
    pub violations: usize,
    pub config_hash: String,
    pub seed: u64,
    /// Check-specific measurements.
    #[serde(default)]
    pub details: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// What a check function hands back before it is stamped into a certificate.
#[derive(Debug, Default)]
pub(crate) struct Outcome {
    pub constant: Option<f64>,
    pub violations: usize,
    pub flagged: bool,
    pub details: Map<String, Value>,
}

impl Outcome {
    pub fn detail(&mut self, key: &str, v: impl Serialize) {
        self.details
            .insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    /// Adds one violation when `bad` holds.
    pub fn require(&mut self, bad: bool) {
        if bad {
            self.violations += 1;
        }
    }
}

/// One sample per call of `f`, chunked so the result does not depend on the
/// worker count.
pub(crate) fn sample_map<T, F>(exec: Execution, n: usize, seed: u64, name: &str, chunk: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T> + Sync + Send,
{
    let tag = task_tag(name);
    let sizes = chunk_sizes(n, chunk);
    let parts = exec.try_map(sizes.len(), |c| -> Result<Vec<T>> {
        let mut rng = chunk_rng(seed, tag, c as u64);
        (0..sizes[c]).map(|_| f(&mut rng)).collect()
    })?;
    Ok(parts.into_iter().flatten().collect())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in lx.iter().zip(&ly) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

pub fn run_check(name: &str, config: &RunConfig, exec: Execution) -> Result<Certificate> {
    let seed = config.seed;
    let out = match name {
        "proj_distance" => geometry_checks::proj_distance(config, exec),
        "proj_distance2" => geometry_checks::proj_distance2(config, exec),
        "chord_bound" => geometry_checks::chord_bound(config, exec),
        "distance_comparison" => geometry_checks::distance_comparison(config, exec),
        "frac_chord_1" => geometry_checks::frac_chord_1(config, exec),
        "frac_chord_2" => geometry_checks::frac_chord_2(config, exec),
        "distance_integral" => geometry_checks::distance_integral(config, exec),
        "surface_integral" => geometry_checks::surface_integral(config, exec),
        "curvature_2d" => geometry_checks::curvature_2d(config, exec),
        "cone_jacobian" => transport_checks::cone(config, exec),
        "kernel_l1" => kernel_checks::kernel_moment_check(config, 1),
        "kernel_l2" => kernel_checks::kernel_moment_check(config, 2),
        "caflisch" => kernel_checks::caflisch(config),
        "inverse_vsq" => kernel_checks::inverse_vsq(config),
        "maxwellian_preserve" => kernel_checks::maxwellian_preserve(config, exec),
        "schur_klp" => kernel_checks::schur_klp(config),
        "sk_square" => transport_checks::sk_square(config, exec),
        "cov1" => transport_checks::cov(config, crate::transport::CovVariant::Cov1, exec),
        "cov2" => transport_checks::cov(config, crate::transport::CovVariant::Cov2, exec),
        "multiplier_decay" => regularity_checks::multiplier_decay(config),
        "sobolev_equivalence" => regularity_checks::sobolev_equivalence(config, exec),
        "regularity_sweep" => regularity_checks::regularity(config, exec),
        "zero_extension_trend" => regularity_checks::zero_extension_trend(config, exec),
        other => return Err(Error::UnknownCheck(other.to_string())),
    }?;
    let status = if out.violations > 0 {
        Status::Fail
    } else if out.flagged {
        Status::Flagged
    } else {
        Status::Pass
    };
    Ok(Certificate {
        check_name: name.to_string(),
        status,
        measured_constant: out.constant.filter(|c| c.is_finite()),
        violations: out.violations,
        config_hash: config.config_hash(),
        seed,
        details: out.details,
        error: None,
    })
}

/// Runs every registered check in order. A check that errors becomes a
/// flagged certificate carrying the message.
pub fn run_suite(config: &RunConfig, exec: Execution) -> Vec<Certificate> {
    run_selected(&CHECKS, config, exec)
}

pub fn run_selected(names: &[&str], config: &RunConfig, exec: Execution) -> Vec<Certificate> {
    names
        .iter()
        .map(|name| {
            run_check(name, config, exec).unwrap_or_else(|e| Certificate {
                check_name: name.to_string(),
                status: Status::Flagged,
                measured_constant: None,
                violations: 0,
                config_hash: config.config_hash(),
                seed: config.seed,
                details: Map::new(),
                error: Some(e.to_string()),
            })
        })
        .collect()
}

/// Aggregate status: fail if any certificate failed.
pub fn suite_passed(certs: &[Certificate]) -> bool {
    certs.iter().all(|c| c.status != Status::Fail)
}

pub fn write_jsonl(path: &Path, certs: &[Certificate]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for c in certs {
        serde_json::to_writer(&mut f, c)?;
        writeln!(f)?;
    }
    f.flush()?;
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<Certificate>> {
    std::fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

/// Summary table `check,status,constant,violations,seed`.
pub fn write_summary_csv(path: &Path, certs: &[Certificate]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "check,status,constant,violations,seed")?;
    for c in certs {
        let constant = c.measured_constant.map(|v| format!("{v:e}")).unwrap_or_default();
        writeln!(f, "{},{},{},{},{}", c.check_name, c.status.as_str(), constant, c.violations, c.seed)?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_check_is_an_error() {
        let r = run_check("no_such_check", &RunConfig::default(), Execution::Sequential);
        assert!(matches!(r, Err(Error::UnknownCheck(_))));
    }

    #[test]
    fn registry_names_are_unique() {
        let mut v = CHECKS.to_vec();
        v.sort();
        v.dedup();
        assert_eq!(v.len(), CHECKS.len());
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-1.5)).collect();
        assert!((loglog_slope(&x, &y) + 1.5).abs() < 1e-12);
    }

    #[test]
    fn csv_and_jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = Certificate {
            check_name: "kernel_l1".into(),
            status: Status::Pass,
            measured_constant: Some(1.5),
            violations: 0,
            config_hash: "abc".into(),
            seed: 4,
            details: Map::new(),
            error: None,
        };
        let p = dir.path().join("c.jsonl");
        write_jsonl(&p, &[c.clone(), c.clone()]).unwrap();
        assert_eq!(read_jsonl(&p).unwrap(), vec![c.clone(), c.clone()]);
        let q = dir.path().join("s.csv");
        write_summary_csv(&q, &[c]).unwrap();
        let text = std::fs::read_to_string(q).unwrap();
        assert_eq!(text, "check,status,constant,violations,seed\nkernel_l1,pass,1.5e0,0,4\n");
    }
}
