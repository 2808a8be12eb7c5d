use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{is_image, stem};
use crate::error::{Error, Result};
use crate::image::{read_mask, write_atomic};
use crate::metrics::{evaluate, summarize, MetricsReport, Summary};

#[derive(Debug, Clone, Serialize)]
pub struct EvaluationSummary {
    pub spacing_mm: f64,
    #[serde(flatten)]
    pub summary: Summary,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub rows: Vec<(String, MetricsReport)>,
    pub summary: Summary,
    pub spacing_mm: f64,
}

/// Mask files (`*_mask.pgm` or `*_mask.png`) in `dir`, keyed by file name.
fn masks_in(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && is_image(&path) && stem(&path).ends_with("_mask") {
            let name = path.file_name().expect("file").to_string_lossy().into_owned();
            out.insert(name, path);
        }
    }
    Ok(out)
}

pub fn evaluation_csv(eval: &Evaluation) -> String {
    let mut out = String::from("frame");
    for f in MetricsReport::FIELDS {
        out.push(',');
        out.push_str(f);
    }
    out.push('\n');
    let rows = eval
        .rows
        .iter()
        .map(|(n, r)| (n.as_str(), r))
        .chain([("mean", &eval.summary.mean), ("std", &eval.summary.std)]);
    for (name, r) in rows {
        out.push_str(name);
        for v in r.values() {
            write!(out, ",{v}").expect("write to string");
        }
        out.push('\n');
    }
    out
}

/// Scores every automatic mask against the manual mask of the same file
/// name. The two directories must hold the same set of names.
pub fn cmd_evaluate(auto_dir: &Path, manual_dir: &Path, spacing_mm: f64, out: &Path) -> Result<Evaluation> {
    let auto = masks_in(auto_dir)?;
    let manual = masks_in(manual_dir)?;
    if auto.is_empty() && manual.is_empty() {
        return Err(Error::InvalidParameter("no mask files to compare".into()));
    }
    let missing: Vec<&String> = auto.keys().filter(|k| !manual.contains_key(*k)).collect();
    let extra: Vec<&String> = manual.keys().filter(|k| !auto.contains_key(*k)).collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "mask names differ: only automatic {missing:?}, only manual {extra:?}"
        )));
    }

    let mut rows = Vec::with_capacity(auto.len());
    for (name, path) in &auto {
        let a = read_mask(path)?;
        let m = read_mask(&manual[name])?;
        let report = evaluate(&a, &m, spacing_mm).map_err(|e| match e {
            Error::DimensionMismatch(msg) => Error::DimensionMismatch(format!("{name}: {msg}")),
            other => Error::Format(format!("{name}: {other}")),
        })?;
        rows.push((
            name.trim_end_matches(".pgm").trim_end_matches(".png").to_string(),
            report,
        ));
    }
    let reports: Vec<MetricsReport> = rows.iter().map(|(_, r)| *r).collect();
    let eval = Evaluation {
        summary: summarize(&reports)?,
        rows,
        spacing_mm,
    };

    write_atomic(out, evaluation_csv(&eval).as_bytes())?;
    let json = serde_json::to_string_pretty(&EvaluationSummary {
        spacing_mm,
        summary: eval.summary,
    })?;
    write_atomic(&out.with_extension("json"), format!("{json}\n").as_bytes())?;
    Ok(eval)
}
