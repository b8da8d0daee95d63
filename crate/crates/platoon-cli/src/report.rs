//! Report rows and CSV emission. Columns are stable and documented in the
//! README; numbers print with nine decimals so reruns diff cleanly.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use platoon_core::plan::CostBreakdown;

#[derive(Debug, Clone)]
pub struct ReportRow {
    pub instance: String,
    pub seed: u64,
    pub mode: &'static str,
    pub status: String,
    pub cost: Option<CostBreakdown>,
    pub wall_clock_s: f64,
    pub iterations: u64,
    /// no-platoon total minus platoon total, when both runs exist.
    pub platoon_benefit: Option<f64>,
    pub platoon_benefit_pct: Option<f64>,
}

pub const REPORT_HEADER: &str = "instance,seed,mode,status,charging,leading_labor,following_labor,idle,restructuring,total,wall_clock_s,iterations,platoon_benefit,platoon_benefit_pct";

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.9}")).unwrap_or_default()
}

pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in rows {
        let c = r.cost.unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{:.3},{},{},{}",
            r.instance,
            r.seed,
            r.mode,
            r.status,
            fmt_opt(r.cost.map(|_| c.charging)),
            fmt_opt(r.cost.map(|_| c.leading_labor)),
            fmt_opt(r.cost.map(|_| c.following_labor)),
            fmt_opt(r.cost.map(|_| c.idle)),
            fmt_opt(r.cost.map(|_| c.restructuring)),
            fmt_opt(r.cost.map(|_| c.total)),
            r.wall_clock_s,
            r.iterations,
            fmt_opt(r.platoon_benefit),
            fmt_opt(r.platoon_benefit_pct),
        );
    }
    out
}

/// Appends rows to a CSV file, writing the header only when the file is new.
pub fn append_report(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let body = to_csv(rows);
    let existing = std::fs::read_to_string(path).unwrap_or_default();
    let merged = if existing.is_empty() {
        body
    } else {
        let without_header = body.split_once('\n').map(|(_, b)| b).unwrap_or("");
        format!("{existing}{without_header}")
    };
    std::fs::write(path, merged).with_context(|| format!("writing {}", path.display()))
}

/// Fills the platoon-benefit columns on platooned rows from their matching
/// no-platoon row (same instance and seed).
pub fn fill_benefits(rows: &mut [ReportRow]) {
    let baselines: Vec<(String, u64, f64)> = rows
        .iter()
        .filter(|r| r.mode == "no-platoon" && r.status == "ok")
        .filter_map(|r| r.cost.map(|c| (r.instance.clone(), r.seed, c.total)))
        .collect();
    for r in rows.iter_mut() {
        if r.mode == "no-platoon" || r.status != "ok" {
            continue;
        }
        let Some(cost) = r.cost else { continue };
        if let Some(&(_, _, base)) = baselines
            .iter()
            .find(|(inst, seed, _)| *inst == r.instance && *seed == r.seed)
        {
            r.platoon_benefit = Some(base - cost.total);
            r.platoon_benefit_pct = Some((base - cost.total) / base);
        }
    }
}
