//! Result serialization: metrics CSV files with a metadata sidecar,
//! stationary-vector TSV, and recruitment-record TSV.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::estimators::StationaryVector;
use crate::experiments::{GridTable, MetricsTable};
use crate::numeric::format_significant;
use crate::sampler::RecruitmentSample;

/// What the sidecar records about a run, next to the fixed
/// design-decision flags.
#[derive(Clone, Debug)]
pub struct RunMetadata {
    pub config_hash: String,
    pub master_seed: u64,
    pub axes: Option<(String, String)>,
}

fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta")
}

fn write_sidecar(csv_path: &Path, meta: &RunMetadata) -> Result<()> {
    let mut out = BufWriter::new(File::create(sidecar_path(csv_path))?);
    writeln!(out, "config_hash = {}", meta.config_hash)?;
    writeln!(out, "master_seed = {}", meta.master_seed)?;
    writeln!(out, "checkpoint_semantics = prefix")?;
    writeln!(out, "sd_convention = population")?;
    writeln!(out, "directed_degree = reported-out-degree")?;
    writeln!(out, "ignore_set = redrawn-per-participation")?;
    writeln!(out, "seeds_count_toward_sample = true")?;
    if let Some((a1, a2)) = &meta.axes {
        writeln!(out, "axis1 = {a1}")?;
        writeln!(out, "axis2 = {a2}")?;
    }
    out.flush()?;
    Ok(())
}

fn sig(x: f64) -> String {
    format_significant(x, 6)
}

/// Curves CSV: `checkpoint,estimator,AE,bias,SD,MAE,m,p_star`, one row per
/// checkpoint and estimator, reals at 6 significant digits. A `.meta`
/// sidecar captures the config hash and seed.
pub fn write_metrics(table: &MetricsTable, path: &Path, meta: &RunMetadata) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_metrics_to(table, &mut out)?;
    out.flush()?;
    write_sidecar(path, meta)
}

pub fn write_metrics_to<W: Write>(table: &MetricsTable, out: &mut W) -> Result<()> {
    writeln!(out, "checkpoint,estimator,AE,bias,SD,MAE,m,p_star")?;
    for row in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.checkpoint,
            row.estimator,
            sig(row.average_estimate),
            sig(row.bias),
            sig(row.sd),
            sig(row.mae),
            row.replications,
            sig(row.true_proportion),
        )?;
    }
    Ok(())
}

/// Grid CSV: `axis1,axis2,estimator,AE,bias,SD,MAE,m,p_star`; the sidecar
/// names the axes.
pub fn write_grid_metrics(grid: &GridTable, path: &Path, meta: &RunMetadata) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_grid_metrics_to(grid, &mut out)?;
    out.flush()?;
    write_sidecar(path, meta)
}

pub fn write_grid_metrics_to<W: Write>(grid: &GridTable, out: &mut W) -> Result<()> {
    writeln!(out, "axis1,axis2,estimator,AE,bias,SD,MAE,m,p_star")?;
    for cell in &grid.cells {
        for row in &cell.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                cell.axis1,
                cell.axis2,
                row.estimator,
                sig(row.average_estimate),
                sig(row.bias),
                sig(row.sd),
                sig(row.mae),
                row.replications,
                sig(row.true_proportion),
            )?;
        }
    }
    Ok(())
}

/// Stationary vector TSV: `node<TAB>probability` at full precision.
pub fn write_stationary(vector: &StationaryVector, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_stationary_to(vector, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_stationary_to<W: Write>(vector: &StationaryVector, out: &mut W) -> Result<()> {
    writeln!(out, "# residual = {}", vector.residual())?;
    for (node, p) in vector.probabilities().iter().enumerate() {
        writeln!(out, "{node}\t{p}")?;
    }
    Ok(())
}

/// Recruitment record TSV:
/// `order<TAB>node<TAB>recruiter<TAB>wave<TAB>reported_degree`, with
/// `SEED` in the recruiter column for wave-0 participants.
pub fn write_sample<W: Write>(sample: &RecruitmentSample, out: &mut W) -> Result<()> {
    writeln!(out, "# chain_deaths = {}", sample.chain_death_count)?;
    writeln!(out, "# reseeds = {}", sample.reseed_count)?;
    writeln!(out, "order\tnode\trecruiter\twave\treported_degree")?;
    for (order, p) in sample.participants.iter().enumerate() {
        let recruiter = match p.recruiter {
            Some(r) => r.to_string(),
            None => "SEED".to_string(),
        };
        writeln!(
            out,
            "{order}\t{}\t{recruiter}\t{}\t{}",
            p.node, p.wave, p.reported_degree
        )?;
    }
    Ok(())
}
