//! CSV and manifest writers.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), which is
//! enough to round-trip any `f64` exactly. Every line ends in `\n`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiment::{RunArtifact, RunTrace, ScalabilityTable};
use crate::metrics::SeriesStats;

pub const TRACE_HEADER: &str = "t,threshold,arm,reward,cost,violated,mode,budget,empirical_rate";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const VIOLATIONS_FILE: &str = "violations.csv";
pub const OBJECTIVE_FILE: &str = "objective.csv";
pub const REGRET_FILE: &str = "regret.csv";
pub const SCALABILITY_FILE: &str = "scalability.csv";

/// Full-precision float formatting.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trace_file_name(run: &RunTrace) -> String {
    format!("trace_{}_seed{}.csv", run.policy, run.seed)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    w.write_all(body.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn trace_csv(run: &RunTrace) -> String {
    let mut out = String::with_capacity(128 * (run.records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &run.records {
        let mode = r.mode.map_or("none", |m| m.as_str());
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.t,
            fmt_f64(r.threshold),
            r.arm,
            fmt_f64(r.reward),
            fmt_f64(r.cost),
            u8::from(r.violated),
            mode,
            fmt_f64(r.budget),
            fmt_f64(r.empirical_rate),
        ));
    }
    out
}

/// `t,<policy>_mean,<policy>_std,...` for one curve across policies.
fn aggregate_csv<'a>(columns: impl Iterator<Item = (String, &'a SeriesStats)> + Clone) -> String {
    let mut out = String::from("t");
    for (name, _) in columns.clone() {
        out.push_str(&format!(",{name}_mean,{name}_std"));
    }
    out.push('\n');
    let len = columns.clone().map(|(_, s)| s.mean.len()).max().unwrap_or(0);
    for i in 0..len {
        out.push_str(&(i + 1).to_string());
        for (_, s) in columns.clone() {
            out.push_str(&format!(",{},{}", fmt_f64(s.mean[i]), fmt_f64(s.std[i])));
        }
        out.push('\n');
    }
    out
}

pub fn scalability_csv(table: &ScalabilityTable) -> String {
    let mut out = String::from("K");
    for p in &table.policies {
        out.push_str(&format!(",{p}_mean"));
    }
    out.push('\n');
    for (k, row) in table.arm_counts.iter().zip(&table.mean_final_objective) {
        out.push_str(&k.to_string());
        for v in row {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

/// Writes traces, aggregate curves and the manifest into `out_dir`,
/// returning the paths written in order.
pub fn emit_outputs(artifact: &RunArtifact, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();
    let mut emit = |name: &str, body: &str| -> Result<()> {
        let path = out_dir.join(name);
        write_file(&path, body)?;
        written.push(path);
        Ok(())
    };

    if artifact.config.policies.is_empty() {
        log::warn!("no policies configured; writing manifest only");
    }
    for run in &artifact.runs {
        emit(&trace_file_name(run), &trace_csv(run))?;
    }
    if !artifact.aggregates.is_empty() {
        let named = |f: fn(&crate::metrics::AggregateCurves) -> &SeriesStats| {
            artifact.aggregates.iter().map(move |(p, a)| (p.to_string(), f(a)))
        };
        emit(VIOLATIONS_FILE, &aggregate_csv(named(|a| &a.cumulative_violations)))?;
        emit(OBJECTIVE_FILE, &aggregate_csv(named(|a| &a.overall_objective)))?;
        emit(REGRET_FILE, &aggregate_csv(named(|a| &a.absolute_regret)))?;
    }
    emit(MANIFEST_FILE, &artifact.manifest())?;
    Ok(written)
}

pub fn emit_scalability(table: &ScalabilityTable, out_dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let path = out_dir.join(SCALABILITY_FILE);
    write_file(&path, &scalability_csv(table))?;
    Ok(path)
}
