use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::oracle::OracleRow;
use super::run::RunRecord;
use crate::textio;
use crate::{Error, Result};

impl RunRecord {
    /// Smallest certified one-step decrease `1 − rhs/L(k)` over the
    /// contraction checks of the run.
    pub fn worst_certified_contraction(&self) -> Option<f64> {
        self.checks
            .iter()
            .filter(|c| c.name == "contraction")
            .filter_map(|c| {
                let loss = self.trace.losses[c.k?];
                (loss > 0.0).then(|| 1.0 - c.rhs / loss)
            })
            .reduce(f64::min)
    }

    /// Smallest `rhs − lhs` over the contraction checks of the run.
    pub fn worst_contraction_margin(&self) -> Option<f64> {
        self.checks
            .iter()
            .filter(|c| c.name == "contraction")
            .map(|c| c.margin)
            .reduce(f64::min)
    }
}

fn sci(x: f64) -> String {
    format!("{x:.6e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_else(|| "-".into())
}

#[derive(Default)]
struct CheckTally {
    evaluated: usize,
    satisfied: usize,
    worst_margin: f64,
    worst_k: Option<usize>,
    asymptotic: bool,
}

/// Markdown report over a set of runs and an optional oracle table.
pub fn render_report(records: &[RunRecord], oracles: &[OracleRow]) -> String {
    let mut order: Vec<&RunRecord> = records.iter().collect();
    order.sort_by(|a, b| {
        (a.config.n, a.config.d, a.config.m, &a.config.name).cmp(&(b.config.n, b.config.d, b.config.m, &b.config.name))
    });
    let mut out = String::from("# Experiment report\n\n## Runs\n\n");
    out += "| name | n | d | m | eta | R | L(0) | L(T) | fitted rate | envelope rate | worst certified contraction | deterministic checks |\n";
    out += "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
    for r in &order {
        let c = &r.config;
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            c.name,
            c.n,
            c.d,
            c.m,
            sci(r.eta),
            sci(r.r),
            sci(r.trace.losses[0]),
            sci(*r.trace.losses.last().expect("trace is non-empty")),
            opt(r.fitted_rate),
            sci(r.envelope_rate),
            opt(r.worst_certified_contraction()),
            if r.all_deterministic_passed() { "pass" } else { "FAIL" }
        );
    }

    let mut tallies: BTreeMap<&str, CheckTally> = BTreeMap::new();
    for r in &order {
        for c in &r.checks {
            let t = tallies.entry(c.name.as_str()).or_insert_with(|| CheckTally {
                worst_margin: f64::INFINITY,
                ..CheckTally::default()
            });
            t.evaluated += 1;
            t.satisfied += usize::from(c.satisfied);
            t.asymptotic |= c.asymptotic;
            if c.margin < t.worst_margin {
                t.worst_margin = c.margin;
                t.worst_k = c.k;
            }
        }
    }
    out += "\n## Checks\n\n| check | evaluated | satisfied | worst margin | at k | asymptotic |\n|---|---|---|---|---|---|\n";
    for (name, t) in &tallies {
        let _ = writeln!(
            out,
            "| {name} | {} | {} | {} | {} | {} |",
            t.evaluated,
            t.satisfied,
            sci(t.worst_margin),
            t.worst_k.map(|k| k.to_string()).unwrap_or_else(|| "-".into()),
            t.asymptotic
        );
    }

    let conc: Vec<_> = order.iter().flat_map(|r| r.concentration.iter().map(move |s| (r, s))).collect();
    if !conc.is_empty() {
        out += "\n## Concentration envelopes\n\n| run | envelope | m | trials | violations | rate | delta | within tolerance |\n|---|---|---|---|---|---|---|---|\n";
        for (r, s) in conc {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {:.4} | {} | {} |",
                r.config.name,
                s.name,
                r.config.m,
                s.trials,
                s.violations,
                s.violation_rate(),
                s.delta,
                s.within_tolerance()
            );
        }
    }

    if !oracles.is_empty() {
        out += "\n## Oracles\n\n| oracle | theta | R | closed form | quadrature | MC mean | MC stderr | within 4 stderr |\n|---|---|---|---|---|---|---|---|\n";
        for o in oracles {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} | {} |",
                o.oracle,
                opt(o.theta),
                opt(o.r),
                sci(o.closed_form),
                opt(o.quadrature),
                opt(o.mc.map(|e| e.mean)),
                opt(o.mc.map(|e| e.stderr)),
                o.mc_agrees(4.0).map(|b| b.to_string()).unwrap_or_else(|| "-".into())
            );
        }
    }

    let warnings: Vec<_> = order
        .iter()
        .flat_map(|r| r.warnings.iter().map(move |w| format!("- {}: {w}", r.config.name)))
        .collect();
    if !warnings.is_empty() {
        out += "\n## Warnings\n\n";
        out += &warnings.join("\n");
        out.push('\n');
    }
    out
}

fn companion(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    path.with_file_name(format!("{stem}_{suffix}.dat"))
}

/// Writes the report plus plot-ready two-column files next to it: one loss
/// curve per run and, for several runs, worst contraction quantities
/// against `m`.
pub fn emit_report(records: &[RunRecord], path: &Path) -> Result<Vec<PathBuf>> {
    emit_report_with_oracles(records, &[], path)
}

pub fn emit_report_with_oracles(records: &[RunRecord], oracles: &[OracleRow], path: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::Config("report needs at least one record".into()));
    }
    textio::write_file(path, &render_report(records, oracles))?;
    let mut written = vec![path.to_path_buf()];
    for (i, r) in records.iter().enumerate() {
        let mut body = String::from("# k loss\n");
        for (k, l) in r.trace.losses.iter().enumerate() {
            let _ = writeln!(body, "{k} {}", textio::fmt_f64(*l));
        }
        let p = companion(path, &format!("loss_{i}"));
        textio::write_file(&p, &body)?;
        written.push(p);
    }
    if records.len() > 1 {
        let mut by_m: Vec<&RunRecord> = records.iter().collect();
        by_m.sort_by_key(|r| r.config.m);
        let mut body = String::from("# m worst_certified_contraction\n");
        for r in &by_m {
            if let Some(v) = r.worst_certified_contraction() {
                let _ = writeln!(body, "{} {}", r.config.m, textio::fmt_f64(v));
            }
        }
        let p = companion(path, "contraction_vs_m");
        textio::write_file(&p, &body)?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::super::config::{ExperimentConfig, SweepAxis, SweepParameter};
    use super::super::run::run_sweep;
    use super::*;

    #[test]
    fn sweep_report_sorted_by_m() {
        let cfg = ExperimentConfig {
            n: 4,
            d: 8,
            steps: 10,
            sweep: Some(SweepAxis {
                parameter: SweepParameter::M,
                values: vec![256.0, 16.0, 64.0],
            }),
            ..ExperimentConfig::default()
        };
        let recs = run_sweep(&cfg).unwrap();
        let text = render_report(&recs, &[]);
        let pos = |s: &str| text.find(s).unwrap();
        assert!(pos("m=16") < pos("m=64") && pos("m=64") < pos("m=256"));
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&recs, &dir.path().join("report.md")).unwrap();
        assert_eq!(files.len(), 1 + 3 + 1);
        assert!(emit_report(&[], &dir.path().join("x.md")).is_err());
    }
}
