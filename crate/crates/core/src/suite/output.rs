//! Tables written next to the certificates, and their plot-data renderings.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::regularity_checks::{sweep_rows, unit_diameter};
use super::{read_jsonl, sample_map, RunConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{random_unit, ExitRecord, Vec3};
use crate::kernel::kernel_moment;
use crate::seminorm::{SweepPlan, SweepRow, SweepTerm};
use crate::transport::picard_field;

pub const CERTIFICATES: &str = "certificates.jsonl";
pub const SUMMARY: &str = "summary.csv";
pub const EXIT_SAMPLES: &str = "exit_samples.csv";
pub const MOMENTS: &str = "moments.csv";
pub const SWEEP: &str = "sweep.csv";
pub const SHELLS: &str = "shell_profiles.json";
pub const ITERATES: &str = "iterates.csv";

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

/// Exit records of random interior rays.
pub fn exit_samples(cfg: &RunConfig, n: usize, exec: Execution) -> Result<Vec<(Vec3, Vec3, ExitRecord)>> {
    let dom = cfg.domain()?;
    sample_map(exec, n, cfg.seed, "exit_samples", 256, |rng| loop {
        let x = dom.sample_interior(rng);
        let v = random_unit(rng);
        match dom.exit_record(&x, &v) {
            Ok(r) => return Ok((x, v, r)),
            Err(Error::RayDegenerate(_)) => continue,
            Err(e) => return Err(e),
        }
    })
}

pub fn write_exit_csv(path: &Path, rows: &[(Vec3, Vec3, ExitRecord)]) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "x,y,z,vx,vy,vz,tau_minus,n_minus,tau_plus,n_plus")?;
    for (x, v, r) in rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{},{}",
            x[0], x[1], x[2], v[0], v[1], v[2], r.tau_minus, r.n_minus, r.tau_plus, r.n_plus
        )?;
    }
    f.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub v_mag: f64,
    pub moment1: f64,
    pub moment2: f64,
    /// `moment1 (1 + |v|)^(2 - gamma)` over its value at `v = 0`.
    pub bound_ratio: f64,
}

pub fn moment_sweep(cfg: &RunConfig, speeds: &[f64]) -> Result<Vec<MomentRow>> {
    let model = cfg.model()?;
    let rule = cfg.moment_rule();
    let dir = Vector3::new(1.0, 2.0, 2.0) / 3.0;
    let origin = kernel_moment(&model, &Vec3::zeros(), 1, &rule)?.value;
    speeds
        .iter()
        .map(|&s| {
            let v = dir * s;
            let m1 = kernel_moment(&model, &v, 1, &rule)?.value;
            let m2 = kernel_moment(&model, &v, 2, &rule)?.value;
            Ok(MomentRow {
                v_mag: s,
                moment1: m1,
                moment2: m2,
                bound_ratio: m1 * (1.0 + s).powf(2.0 - cfg.collision.gamma) / origin,
            })
        })
        .collect()
}

pub fn write_moment_csv(path: &Path, rows: &[MomentRow]) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "v_mag,moment1,moment2,bound_ratio")?;
    for r in rows {
        writeln!(f, "{},{},{},{}", r.v_mag, r.moment1, r.moment2, r.bound_ratio)?;
    }
    f.flush()?;
    Ok(())
}

/// Seminorm sweep of the named terms on the config domain scaled to unit diameter.
pub fn sweep(cfg: &RunConfig, terms: &[SweepTerm], orders: &[f64], exec: Execution) -> Result<Vec<SweepRow>> {
    let n = cfg.scaled(cfg.budgets.sweep_samples, 16);
    let plan: Vec<SweepPlan> = terms
        .iter()
        .map(|&term| SweepPlan {
            term,
            samples: if term == SweepTerm::ZeroExtension {
                cfg.scaled(cfg.budgets.zero_extension_samples, 16)
            } else {
                n
            },
        })
        .collect();
    sweep_rows(cfg, &plan, orders, exec)
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "term,s,value,stderr,samples,flagged")?;
    for r in rows {
        writeln!(f, "{},{},{},{},{},{}", r.term.name(), r.s, r.value, r.stderr, r.samples, r.flagged)?;
    }
    f.flush()?;
    Ok(())
}

/// `{"g0": {"0.3": [..], ..}, ..}`: per-shell contributions, outermost first.
pub fn write_shell_profiles(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut m: BTreeMap<&str, BTreeMap<String, &[f64]>> = BTreeMap::new();
    for r in rows {
        m.entry(r.term.name()).or_default().insert(r.s.to_string(), &r.shell_profile);
    }
    std::fs::write(path, serde_json::to_string_pretty(&m)?)?;
    Ok(())
}

/// `g_0 .. g_3` at random interior points of the unit-diameter domain, with
/// velocities drawn from a centered Gaussian of the sweep width.
pub fn iterate_table(cfg: &RunConfig, points: usize, exec: Execution) -> Result<Vec<[f64; 10]>> {
    let setup = cfg.sweep_setup(unit_diameter(&cfg.domain()?)?)?;
    let data = cfg.boundary_data()?;
    let sigma = cfg.budgets.sweep_sigma;
    let dom = setup.domain.clone();
    let pts = sample_map(Execution::Sequential, points, cfg.seed, "iterate_points", 64, |rng| {
        let x = dom.sample_interior(rng);
        let v = Vec3::from_fn(|_, _| sigma * rng.sample::<f64, _>(StandardNormal));
        Ok((x, v))
    })?;
    let fields = (0..4)
        .map(|i| picard_field(&setup, &data, i, cfg.budgets.node_budget))
        .collect::<Result<Vec<_>>>()?;
    exec.try_map(pts.len(), |k| {
        let (x, v) = pts[k];
        let mut row = [0.0; 10];
        row[..3].copy_from_slice(x.as_slice());
        row[3..6].copy_from_slice(v.as_slice());
        for (i, f) in fields.iter().enumerate() {
            row[6 + i] = f.eval(&x, &v)?;
        }
        Ok(row)
    })
}

pub fn write_iterate_csv(path: &Path, rows: &[[f64; 10]]) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "x,y,z,vx,vy,vz,g0,g1,g2,g3")?;
    for r in rows {
        let cells: Vec<String> = r.iter().map(|c| c.to_string()).collect();
        writeln!(f, "{}", cells.join(","))?;
    }
    f.flush()?;
    Ok(())
}

/// Whitespace-separated `.dat` files for whatever results sit in `dir`.
/// Returns the files written.
pub fn render_plot_data(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let certs = dir.join(CERTIFICATES);
    if certs.exists() {
        let p = dir.join("summary.dat");
        let mut f = create(&p)?;
        writeln!(f, "# index check status constant violations")?;
        for (i, c) in read_jsonl(&certs)?.iter().enumerate() {
            let k = c.measured_constant.map(|v| format!("{v:e}")).unwrap_or_else(|| "nan".into());
            writeln!(f, "{i} {} {} {k} {}", c.check_name, c.status.as_str(), c.violations)?;
        }
        f.flush()?;
        written.push(p);
    }
    for (src, header) in [
        (SWEEP, "# s value stderr samples flagged"),
        (MOMENTS, ""),
        (ITERATES, ""),
        (EXIT_SAMPLES, ""),
    ] {
        let path = dir.join(src);
        if !path.exists() {
            continue;
        }
        let text = std::fs::read_to_string(&path)?;
        let mut lines = text.lines();
        let head = lines.next().unwrap_or_default();
        if src == SWEEP {
            // one block per term
            let mut by_term: BTreeMap<String, Vec<String>> = BTreeMap::new();
            for l in lines {
                let mut cols = l.split(',');
                let term = cols.next().unwrap_or_default().to_string();
                let rest: Vec<&str> = cols.collect();
                let rest: Vec<String> = rest
                    .iter()
                    .map(|c| match *c {
                        "true" => "1".to_string(),
                        "false" => "0".to_string(),
                        other => other.to_string(),
                    })
                    .collect();
                by_term.entry(term).or_default().push(rest.join(" "));
            }
            for (term, rows) in by_term {
                let p = dir.join(format!("sweep_{term}.dat"));
                std::fs::write(&p, format!("{header}\n{}\n", rows.join("\n")))?;
                written.push(p);
            }
        } else {
            let stem = src.trim_end_matches(".csv");
            let p = dir.join(format!("{stem}.dat"));
            let body: Vec<String> = lines.map(|l| l.replace(',', " ")).collect();
            std::fs::write(&p, format!("# {}\n{}\n", head.replace(',', " "), body.join("\n")))?;
            written.push(p);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_csv_has_contract_header() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::default();
        let rows = exit_samples(&cfg, 10, Execution::Sequential).unwrap();
        let p = dir.path().join(EXIT_SAMPLES);
        write_exit_csv(&p, &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("x,y,z,vx,vy,vz,tau_minus,n_minus,tau_plus,n_plus\n"));
        assert_eq!(text.lines().count(), 11);
    }

    #[test]
    fn moment_ratio_is_one_at_origin() {
        let rows = moment_sweep(&RunConfig::default(), &[0.0, 2.0]).unwrap();
        assert!((rows[0].bound_ratio - 1.0).abs() < 1e-14);
        assert!((rows[0].moment1 - 8.0 * std::f64::consts::PI).abs() < 1e-3);
    }

    #[test]
    fn plot_data_splits_sweep_by_term() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join(SWEEP),
            "term,s,value,stderr,samples,flagged\ng0,0.3,1,0.1,10,false\ng1,0.3,2,0.2,10,true\n",
        )
        .unwrap();
        let files = render_plot_data(dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let g1 = std::fs::read_to_string(dir.path().join("sweep_g1.dat")).unwrap();
        assert_eq!(g1.lines().nth(1), Some("0.3 2 0.2 10 1"));
    }
}
