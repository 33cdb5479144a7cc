use std::path::Path;

use anyhow::{bail, Context, Result};
use ttr_core::solvers::{TraceRecord, TRACE_COLUMNS};

pub fn write_trace_csv(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(TRACE_COLUMNS)?;
    for rec in trace {
        w.write_record(rec.csv_fields())?;
    }
    w.flush()?;
    Ok(())
}

fn parse_opt(field: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        Ok(Some(field.parse()?))
    }
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRecord>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = r.headers()?.clone();
    if headers.iter().ne(TRACE_COLUMNS) {
        bail!("{} does not have the trace header", path.display());
    }
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        out.push(TraceRecord {
            t: row[0].parse()?,
            objective: row[1].parse()?,
            rel_error: parse_opt(&row[2])?,
            mu_t: row[3].parse()?,
            factor_dist2: parse_opt(&row[4])?,
        });
    }
    Ok(out)
}
