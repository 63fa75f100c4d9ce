//! ROUGE report CSV, the aligned console table and the training loss log.

use std::fmt::Write as _;

use compresso_core::eval::{AblationRow, RougeReport, Summary};
use compresso_core::train::StepReport;

pub const CSV_HEADER: &str = "system,r1,r2,rl,avg_len";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn bin_label(system: &str, (lo, hi): (usize, usize)) -> String {
    format!("{system} [{lo}-{hi}]")
}

fn summary_row(out: &mut String, system: &str, s: &Summary) {
    let _ = writeln!(out, "{},{:.6},{:.6},{:.6},{:.4}", csv_field(system), s.r1, s.r2, s.rl, s.avg_len);
}

/// One row per report, then one row per report and length bin.
pub fn reports_csv(reports: &[RougeReport]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in reports {
        summary_row(&mut out, &r.system, &r.overall);
    }
    for r in reports {
        for (range, s) in &r.bins {
            summary_row(&mut out, &bin_label(&r.system, *range), s);
        }
    }
    out
}

/// Ablation rows in grid order; failed cells read `error`.
pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for row in rows {
        match &row.result {
            Ok(r) => summary_row(&mut out, &r.system, &r.overall),
            Err(_) => {
                let _ = writeln!(out, "{},error,error,error,error", csv_field(&row.cell.name()));
            }
        }
    }
    out
}

/// ROUGE F1 scaled to percent, as usually reported.
pub fn table(rows: &[(String, Option<Summary>)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max("System".len());
    let mut out =
        format!("{:<width$}  {:>6}  {:>6}  {:>6}  {:>8}  {:>5}\n", "System", "R-1", "R-2", "R-L", "Avg.Len", "N");
    for (name, s) in rows {
        match s {
            Some(s) => {
                let _ = writeln!(
                    out,
                    "{name:<width$}  {:>6.2}  {:>6.2}  {:>6.2}  {:>8.2}  {:>5}",
                    100.0 * s.r1,
                    100.0 * s.r2,
                    100.0 * s.rl,
                    s.avg_len,
                    s.count
                );
            }
            None => {
                let _ = writeln!(out, "{name:<width$}  {:>6}  {:>6}  {:>6}  {:>8}  {:>5}", "error", "-", "-", "-", "-");
            }
        }
    }
    out
}

pub fn report_table(reports: &[RougeReport]) -> String {
    let mut rows = Vec::new();
    for r in reports {
        rows.push((r.system.clone(), Some(r.overall)));
        for (range, s) in &r.bins {
            rows.push((bin_label(&r.system, *range), Some(*s)));
        }
    }
    table(&rows)
}

pub fn ablation_table(rows: &[AblationRow]) -> String {
    let rows: Vec<_> = rows.iter().map(|r| (r.cell.name(), r.result.as_ref().ok().map(|r| r.overall))).collect();
    table(&rows)
}

/// `step,lr,loss` lines.
#[derive(Debug, Clone, Default)]
pub struct LossLog {
    text: String,
}

impl LossLog {
    pub fn new() -> Self {
        LossLog { text: "step,lr,loss\n".into() }
    }

    /// Continues an existing log, dropping rows at or after `from_step`.
    pub fn resume(existing: &str, from_step: u64) -> Self {
        let mut log = LossLog::new();
        for line in existing.lines().skip(1) {
            let step = line.split(',').next().and_then(|s| s.parse::<u64>().ok());
            if step.is_some_and(|s| s < from_step) {
                log.text.push_str(line);
                log.text.push('\n');
            }
        }
        log
    }

    pub fn push(&mut self, r: &StepReport) {
        let _ = writeln!(self.text, "{},{},{}", r.step, r.lr, r.loss);
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}
