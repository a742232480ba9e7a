//! Report assembly. Every report is built fully in memory and written in
//! one shot, so a failing stage never leaves a truncated file behind; all
//! row orders and number formats are fixed, making reruns byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use atbat_mdp::exploit::{ExploitResult, HypothesisReport};
use atbat_mdp::simulate::BattingLine;

pub fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .with_context(|| format!("creating directory {}", parent.display()))?;
    }
    fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    write_file(path, &body)
}

fn ratio_cell(ratio: Option<f64>) -> String {
    ratio.map(|r| format!("{r:.6}")).unwrap_or_default()
}

pub fn exploit_report_csv(results: &[ExploitResult]) -> String {
    let mut out = String::from("# schema: exploit-report v1\n");
    out.push_str(
        "pitcher_id,train_season,test_season,j_general,j_specific,exploited_weak,exploited_strict,degree_diff,degree_ratio\n",
    );
    for r in results {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6},{},{},{:.6},{}",
            r.pitcher_id,
            r.train_season,
            r.test_season,
            r.j_general,
            r.j_specific,
            r.exploited_weak,
            r.exploited_strict,
            r.degree_diff,
            ratio_cell(r.degree_ratio),
        )
        .expect("writing to a string cannot fail");
    }
    out
}

pub fn hypothesis_report_csv(report: &HypothesisReport) -> String {
    let mut out = String::from("# schema: hypothesis-report v1\n");
    out.push_str("alternative,n,m,p_value,alpha,degenerate_full_success\n");
    writeln!(
        out,
        "better_or_equal,{},{},{:e},{},{}",
        report.n, report.m_weak, report.p_value_weak, report.alpha, report.degenerate_weak
    )
    .expect("writing to a string cannot fail");
    writeln!(
        out,
        "strictly_better,{},{},{:e},{},{}",
        report.n, report.m_strict, report.p_value_strict, report.alpha, report.degenerate_strict
    )
    .expect("writing to a string cannot fail");
    out
}

#[derive(Debug)]
pub struct GateRow {
    pub batter_id: String,
    pub pitcher_id: String,
    pub alpha: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub chance_threshold: f64,
    pub admitted: bool,
}

pub fn gate_report_csv(rows: &[GateRow]) -> String {
    let mut out = String::from("# schema: gate-report v1\n");
    out.push_str("batter_id,pitcher_id,alpha,train_accuracy,test_accuracy,chance_threshold,admitted\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{:.4},{:.4},{:.4},{:.4},{}",
            r.batter_id,
            r.pitcher_id,
            r.alpha,
            r.train_accuracy,
            r.test_accuracy,
            r.chance_threshold,
            r.admitted
        )
        .expect("writing to a string cannot fail");
    }
    out
}

#[derive(Debug)]
pub struct BattingRow {
    pub batter_id: String,
    pub pitcher_id: String,
    pub line: BattingLine,
    pub skipped_exhausted: u64,
    pub skipped_unseen: u64,
}

pub fn batting_report_csv(rows: &[BattingRow]) -> String {
    let mut out = String::from("# schema: batting-report v1\n");
    out.push_str("batter_id,pitcher_id,ab,h,bb,so,avg,obp,slg,skipped_exhausted,skipped_unseen\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{:.3},{:.3},{:.3},{},{}",
            r.batter_id,
            r.pitcher_id,
            r.line.at_bats,
            r.line.hits,
            r.line.walks,
            r.line.strikeouts,
            r.line.avg,
            r.line.obp,
            r.line.slg,
            r.skipped_exhausted,
            r.skipped_unseen
        )
        .expect("writing to a string cannot fail");
    }
    out
}

pub fn rejects_report_csv(rejects: &[(String, atbat_mdp::ingest::RejectedAtBat)]) -> String {
    let mut out = String::from("# schema: rejects-report v1\n");
    out.push_str("file,at_bat_id,line,reason\n");
    for (file, r) in rejects {
        writeln!(out, "{},{},{},\"{}\"", file, r.at_bat_id, r.line, r.reason)
            .expect("writing to a string cannot fail");
    }
    out
}
