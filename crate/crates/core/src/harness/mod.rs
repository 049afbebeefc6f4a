//! Experiment orchestration: configuration, seeded runs and sweeps, and
//! CSV/JSON/markdown output.

mod config;
mod emit;
mod oracle;
mod report;
mod run;

pub use config::{EtaMode, ExperimentConfig, RMode, SweepAxis, SweepParameter};
pub use emit::{
    checks_csv, emit_csv, emit_json, emit_trace_csv, load_json, record_json, trace_csv, CHECKS_HEADER, TRACE_HEADER,
};
pub use oracle::{oracle_csv, oracle_table, OracleRow, ORACLE_HEADER};
pub use report::{emit_report, emit_report_with_oracles, render_report};
pub use run::{root_cause, run_experiment, run_sweep, DatasetSummary, RunRecord};
