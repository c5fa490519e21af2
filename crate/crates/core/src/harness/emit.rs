use std::fs;
use std::path::Path;

use super::run::{CurveRecord, ExperimentResult, ExperimentSummary, LearningCurve};
use crate::approx::write_checkpoint;
use crate::{Error, Result};

/// Writes `update,seed,metric,value` rows; an empty curve gives the header only.
pub fn write_curve_csv(path: &Path, curve: &LearningCurve) -> Result<()> {
    let mut out = csv::Writer::from_path(path)?;
    if curve.records.is_empty() {
        out.write_record(["update", "seed", "metric", "value"])?;
    }
    for r in &curve.records {
        out.serialize(r)?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<CurveRecord>> {
    let mut input = csv::Reader::from_path(path)?;
    let records = input
        .deserialize()
        .collect::<std::result::Result<Vec<CurveRecord>, _>>()?;
    Ok(records)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Output layout:
///
/// ```text
/// config.json               resolved configuration
/// summary.json              per-arm finals, medians, best seed
/// curves/<label>.csv|json   learning curves
/// checkpoints/<label>-<seed>.ckpt, oracle.ckpt
/// timing.json               wall-clock seconds (the only non-reproducible file)
/// ```
pub fn emit(result: &ExperimentResult, dir: &Path) -> Result<()> {
    let curves = dir.join("curves");
    let ckpts = dir.join("checkpoints");
    for d in [dir, curves.as_path(), ckpts.as_path()] {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    write_text(&dir.join("config.json"), &result.config.to_json()?)?;
    write_text(
        &dir.join("summary.json"),
        &serde_json::to_string_pretty(&result.summary)?,
    )?;
    write_text(
        &dir.join("timing.json"),
        &serde_json::to_string_pretty(&result.timing)?,
    )?;
    for curve in &result.curves {
        let stem = file_stem(&curve.label);
        write_curve_csv(&curves.join(format!("{stem}.csv")), curve)?;
        write_text(
            &curves.join(format!("{stem}.json")),
            &serde_json::to_string(curve)?,
        )?;
    }
    for (label, seed, q) in &result.finals {
        let step = result
            .summary
            .arm(label)
            .and_then(|a| a.runs.iter().find(|r| r.seed == *seed))
            .map_or(0, |r| r.updates);
        write_checkpoint(
            &ckpts.join(format!("{}-{seed}.ckpt", file_stem(label))),
            q,
            *seed,
            step,
        )?;
    }
    if let Some(oracle) = &result.oracle {
        write_checkpoint(&ckpts.join("oracle.ckpt"), oracle, 0, 0)?;
    }
    Ok(())
}

/// Reads back the curves and summary of an emitted directory.
pub fn load_results(dir: &Path) -> Result<(ExperimentSummary, Vec<LearningCurve>)> {
    let path = dir.join("summary.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let summary: ExperimentSummary = serde_json::from_str(&text)?;
    let mut curves = Vec::new();
    for arm in &summary.arms {
        let path = dir
            .join("curves")
            .join(format!("{}.csv", file_stem(&arm.label)));
        curves.push(LearningCurve {
            label: arm.label.clone(),
            records: read_curve_csv(&path)?,
        });
    }
    Ok((summary, curves))
}
