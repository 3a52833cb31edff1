//! CSV tables and the run metadata.

use std::fs::{self, File};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

use crate::config::RunConfig;
use crate::experiments::{ConvergenceRow, CriticalMeshResult, DispersionRow, SweepRow};

pub const CONVERGENCE_HEADER: &str = "p,k,m,h,dofs,method,h1semi_rel,l2_rel,jump_semi,interp_h1semi_rel";
pub const SWEEP_HEADER: &str = "p,k,m,h,dofs,fem_h1semi_rel,cip_h1semi_rel,interp_h1semi_rel,max_residual";
pub const CRITICAL_HEADER: &str = "p,k,eps,method,m_critical,h_critical,err_at_critical";
pub const TRACE_HEADER: &str = "p,k,method,m,h1semi_rel";

fn create(path: &Path) -> anyhow::Result<csv::Writer<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))
}

/// The row field names are the header.
fn write_rows<T: Serialize>(path: &Path, rows: &[T], header: &str) -> anyhow::Result<()> {
    let mut w = create(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(header.split(','))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_convergence(path: &Path, rows: &[ConvergenceRow]) -> anyhow::Result<()> {
    write_rows(path, rows, CONVERGENCE_HEADER)
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> anyhow::Result<()> {
    write_rows(path, rows, SWEEP_HEADER)
}

pub fn write_critical(dir: &Path, rows: &[CriticalMeshResult]) -> anyhow::Result<()> {
    let mut w = create(&dir.join("critical_h.csv"))?;
    w.write_record(CRITICAL_HEADER.split(','))?;
    for r in rows {
        w.write_record(&[
            r.p.to_string(),
            r.k.to_string(),
            r.eps.to_string(),
            r.method.to_string(),
            r.m_critical.to_string(),
            r.h_critical.to_string(),
            r.err_at_critical.to_string(),
        ])?;
    }
    w.flush()?;
    let mut t = create(&dir.join("critical_trace.csv"))?;
    t.write_record(TRACE_HEADER.split(','))?;
    for r in rows {
        for &(m, e) in &r.trace {
            t.write_record(&[r.p.to_string(), r.k.to_string(), r.method.to_string(), m.to_string(), e.to_string()])?;
        }
    }
    t.flush()?;
    Ok(())
}

/// One file per order, since the number of penalty columns depends on it.
pub fn write_dispersion(dir: &Path, rows: &[DispersionRow]) -> anyhow::Result<Vec<String>> {
    let mut ps: Vec<usize> = rows.iter().map(|r| r.p).collect();
    ps.dedup();
    let mut names = Vec::new();
    for p in ps {
        let name = format!("dispersion_p{p}.csv");
        let mut w = create(&dir.join(&name))?;
        let mut header = vec!["p".to_string(), "t".to_string()];
        header.extend((1..=p).map(|j| format!("gamma_{j}")));
        header.extend(["theta".to_string(), "rel_phase_error".to_string()]);
        w.write_record(&header)?;
        for r in rows.iter().filter(|r| r.p == p) {
            let mut rec = vec![r.p.to_string(), r.t.to_string()];
            rec.extend(r.gamma.iter().map(|g| g.to_string()));
            rec.extend([r.theta.to_string(), r.rel_phase_error.to_string()]);
            w.write_record(&rec)?;
        }
        w.flush()?;
        names.push(name);
    }
    Ok(names)
}

#[derive(Debug, Serialize)]
pub struct Metadata<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a RunConfig,
    pub files: Vec<String>,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra: Option<serde_json::Value>,
}

pub fn write_metadata(dir: &Path, meta: &Metadata<'_>) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join("metadata.json");
    let text = serde_json::to_string_pretty(meta)?;
    fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
