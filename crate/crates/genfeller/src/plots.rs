//! Plot-ready CSV tables derived from an experiment's artifact directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::error::CliError;
use crate::experiment::{quantile, MANIFEST};
use crate::io::Artifacts;

fn read_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    if !path.is_file() {
        return Err(CliError::MissingArtifact(path.to_path_buf()));
    }
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.iter().map(str::to_string).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()?;
    Ok((header, rows))
}

/// Copies selected columns of `src` into `dst` under new names.
fn project(dir: &Path, art: &mut Artifacts, src: &str, dst: &str, columns: &[(&str, &str)]) -> Result<(), CliError> {
    let (header, rows) = read_rows(&dir.join(src))?;
    let idx: Vec<usize> = columns
        .iter()
        .map(|(from, _)| {
            header
                .iter()
                .position(|h| h == from)
                .ok_or_else(|| CliError::MissingArtifact(dir.join(format!("{src}#{from}"))))
        })
        .collect::<Result<_, _>>()?;
    let names: Vec<&str> = columns.iter().map(|c| c.1).collect();
    art.csv(dst, &names, rows.iter().map(|r| idx.iter().map(|&i| r[i].clone()).collect::<Vec<_>>()))
}

/// Writes the `fig_*.csv` tables for the experiment recorded in
/// `dir/manifest.json`; returns the file names written.
pub fn emit_plots(dir: &Path) -> Result<Vec<String>, CliError> {
    let manifest_path = dir.join(MANIFEST);
    if !manifest_path.is_file() {
        return Err(CliError::MissingArtifact(manifest_path));
    }
    let manifest: Value = serde_json::from_str(&fs::read_to_string(&manifest_path)?)?;
    let experiment = manifest["experiment"].as_str().unwrap_or_default().to_string();
    let mut art = Artifacts::create(dir)?;
    match experiment.as_str() {
        "forest" => {
            project(
                dir,
                &mut art,
                "forest.csv",
                "fig_forest.csv",
                &[("id", "id"), ("parent_id", "parent_id"), ("birth_time", "birth"), ("death_time", "death"), ("planar_key", "key")],
            )?;
            project(dir, &mut art, "exploration.csv", "fig_exploration.csv", &[("s", "s"), ("h", "h")])?;
        }
        "rayknight" => {
            // medians of the first target
            let (header, rows) = read_rows(&dir.join("quantiles.csv"))?;
            let col = |name: &str| header.iter().position(|h| h == name).expect("quantiles.csv columns");
            let (cx, cl, cq, cf, cd) = (col("x_target"), col("level"), col("q"), col("local_time"), col("diffusion_quantile"));
            let first = rows.first().map(|r| r[cx].clone());
            let out: Vec<Vec<String>> = rows
                .iter()
                .filter(|r| Some(&r[cx]) == first.as_ref() && r[cq].parse::<f64>() == Ok(0.5))
                .map(|r| vec![r[cl].clone(), r[cf].clone(), r[cd].clone()])
                .collect();
            art.csv("fig_rk_profile.csv", &["level", "local_time", "diffusion_quantile"], out)?;
        }
        "convergence" => project(
            dir,
            &mut art,
            "convergence.csv",
            "fig_convergence.csv",
            &[("n", "n"), ("ks_vs_limit", "ks"), ("mean_diff", "mean_diff"), ("mean_diff_se", "mean_diff_se")],
        )?,
        "discrete" => project(dir, &mut art, "path.csv", "fig_path.csv", &[("t", "t"), ("count", "value")])?,
        "renormalized" => project(dir, &mut art, "path.csv", "fig_path.csv", &[("t", "t"), ("value", "value")])?,
        "diffusion" => project(dir, &mut art, "trajectory.csv", "fig_path.csv", &[("t", "t"), ("value", "value")])?,
        "classify" => project(dir, &mut art, "scale.csv", "fig_scale.csv", &[("z", "z"), ("scale", "scale")])?,
        other => return Err(CliError::MissingArtifact(dir.join(format!("{MANIFEST}#experiment={other}")))),
    }
    Ok(art.files().to_vec())
}

/// Per-level quantiles of a `(level, value)` sample, used by tests and
/// ad-hoc inspection of `field.csv`.
pub fn level_quantiles(samples: &[(f64, f64)], q: f64) -> Vec<(f64, f64)> {
    let mut by_level: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for &(t, v) in samples {
        by_level.entry(t.to_bits()).or_default().push(v);
    }
    by_level
        .into_iter()
        .map(|(t, mut v)| {
            v.sort_by(f64::total_cmp);
            (f64::from_bits(t), quantile(&v, q))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_directory_is_missing_artifact() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(emit_plots(dir.path()), Err(CliError::MissingArtifact(_))));
    }

    #[test]
    fn quantiles_by_level() {
        let q = level_quantiles(&[(0.0, 1.0), (0.0, 3.0), (1.0, 5.0)], 0.5);
        assert_eq!(q, vec![(0.0, 2.0), (1.0, 5.0)]);
    }
}
