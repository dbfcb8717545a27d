//! Output formatting: trace CSVs, seed-averaged summaries, and tuning
//! tables. All numeric output carries 17 significant digits so parsing a
//! file back yields the original 64-bit floats.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

use efbv_core::engine::RoundRecord;
use efbv_core::tuning::Algorithm;

use crate::config::algorithm_name;

pub const CSV_HEADER: &str = "t,bits_per_node,f_gap,grad_norm_sq,lyapunov,control_residual";

/// 17 significant digits: round-trip exact for f64.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trace_lines(records: &[RoundRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.t,
            fmt17(r.bits_per_node),
            fmt17(r.f_gap),
            fmt17(r.grad_norm_sq),
            fmt17(r.lyapunov),
            fmt17(r.control_residual),
        ));
    }
    out
}

pub fn write_trace_csv(path: &Path, records: &[RoundRecord]) -> Result<()> {
    let mut file = BufWriter::new(File::create(path).with_context(|| format!("creating {path:?}"))?);
    file.write_all(trace_lines(records).as_bytes())?;
    Ok(())
}

/// Seed-averaged trace: records are aligned by index (all runs share the
/// cadence), `t` and bits come from the first run, metric columns are
/// averaged.
pub fn summarize(traces: &[Vec<RoundRecord>]) -> Vec<RoundRecord> {
    let Some(first) = traces.first() else {
        return Vec::new();
    };
    let len = traces.iter().map(|t| t.len()).min().unwrap_or(0);
    let inv = 1.0 / traces.len() as f64;
    (0..len)
        .map(|i| {
            let mut acc = RoundRecord {
                t: first[i].t,
                bits_per_node: 0.0,
                f_gap: 0.0,
                grad_norm_sq: 0.0,
                lyapunov: 0.0,
                control_residual: 0.0,
            };
            for trace in traces {
                acc.bits_per_node += trace[i].bits_per_node * inv;
                acc.f_gap += trace[i].f_gap * inv;
                acc.grad_norm_sq += trace[i].grad_norm_sq * inv;
                acc.lyapunov += trace[i].lyapunov * inv;
                acc.control_residual += trace[i].control_residual * inv;
            }
            acc
        })
        .collect()
}

/// One tuning-report row: the derived constants for one algorithm.
#[derive(Clone, Copy, Debug)]
pub struct TuneRow {
    pub algorithm: Algorithm,
    pub eta: f64,
    pub omega: f64,
    pub omega_av: f64,
    pub lambda: f64,
    pub nu: f64,
    pub r: f64,
    pub r_av: f64,
    pub sqrt_ratio: f64,
    pub s_star: f64,
    pub gamma: Option<f64>,
}

pub const TUNE_CSV_HEADER: &str =
    "algorithm,eta,omega,omega_av,lambda,nu,r,r_av,sqrt_r_av_over_r,s_star,gamma";

pub fn tune_csv_line(row: &TuneRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        algorithm_name(row.algorithm),
        fmt17(row.eta),
        fmt17(row.omega),
        fmt17(row.omega_av),
        fmt17(row.lambda),
        fmt17(row.nu),
        fmt17(row.r),
        fmt17(row.r_av),
        fmt17(row.sqrt_ratio),
        fmt17(row.s_star),
        row.gamma.map(fmt17).unwrap_or_default(),
    )
}

/// Transposed human-readable table: one line per quantity, one column per
/// algorithm.
pub fn tune_table(rows: &[TuneRow]) -> String {
    let mut out = String::new();
    let header: Vec<String> = rows
        .iter()
        .map(|r| algorithm_name(r.algorithm).to_string())
        .collect();
    out.push_str(&format!("{:<18}", "param"));
    for h in &header {
        out.push_str(&format!(" {h:>24}"));
    }
    out.push('\n');
    let quantity = |name: &str, get: &dyn Fn(&TuneRow) -> Option<f64>| {
        let mut line = format!("{name:<18}");
        for row in rows {
            match get(row) {
                Some(v) => line.push_str(&format!(" {:>24}", fmt17(v))),
                None => line.push_str(&format!(" {:>24}", "-")),
            }
        }
        line.push('\n');
        line
    };
    out.push_str(&quantity("eta", &|r| Some(r.eta)));
    out.push_str(&quantity("omega", &|r| Some(r.omega)));
    out.push_str(&quantity("omega_av", &|r| Some(r.omega_av)));
    out.push_str(&quantity("lambda", &|r| Some(r.lambda)));
    out.push_str(&quantity("nu", &|r| Some(r.nu)));
    out.push_str(&quantity("r", &|r| Some(r.r)));
    out.push_str(&quantity("r_av", &|r| Some(r.r_av)));
    out.push_str(&quantity("sqrt(r_av/r)", &|r| Some(r.sqrt_ratio)));
    out.push_str(&quantity("s_star", &|r| Some(r.s_star)));
    out.push_str(&quantity("gamma", &|r| r.gamma));
    out
}
