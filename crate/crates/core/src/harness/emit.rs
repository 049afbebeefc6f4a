use std::fmt::Write as _;
use std::path::Path;

use super::run::RunRecord;
use crate::textio;
use crate::{Error, Result};

pub const CHECKS_HEADER: &str = "name,k,lhs,rhs,margin,satisfied,asymptotic,seed,n,d,m,eta,R";
pub const TRACE_HEADER: &str = "k,loss,grad_norm,contraction_ratio";

fn real(x: f64) -> String {
    textio::fmt_f64(x)
}

pub fn checks_csv(record: &RunRecord) -> String {
    let mut out = String::from(CHECKS_HEADER);
    out.push('\n');
    let cfg = &record.config;
    for c in &record.checks {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.name,
            c.k.map(|k| k.to_string()).unwrap_or_default(),
            real(c.lhs),
            real(c.rhs),
            real(c.margin),
            c.satisfied,
            c.asymptotic,
            c.seed,
            cfg.n,
            cfg.d,
            cfg.m,
            real(record.eta),
            real(record.r)
        );
    }
    out
}

/// One row per recorded loss; the last row has no gradient or ratio.
pub fn trace_csv(record: &RunRecord) -> String {
    let t = &record.trace;
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for (k, loss) in t.losses.iter().enumerate() {
        let g = t.grad_norms.get(k).map(|&v| real(v)).unwrap_or_default();
        let q = t.contraction_ratios.get(k).map(|&v| real(v)).unwrap_or_default();
        let _ = writeln!(out, "{k},{},{g},{q}", real(*loss));
    }
    out
}

pub fn emit_csv(record: &RunRecord, path: &Path) -> Result<()> {
    textio::write_file(path, &checks_csv(record))
}

pub fn emit_trace_csv(record: &RunRecord, path: &Path) -> Result<()> {
    textio::write_file(path, &trace_csv(record))
}

/// Pretty JSON. Floats use the shortest representation that parses back to
/// the same `f64`.
pub fn record_json(record: &RunRecord) -> String {
    let mut s = serde_json::to_string_pretty(record).expect("records serialize");
    s.push('\n');
    s
}

pub fn emit_json(record: &RunRecord, path: &Path) -> Result<()> {
    textio::write_file(path, &record_json(record))
}

pub fn load_json(path: &Path) -> Result<RunRecord> {
    let text = textio::read_file(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}
