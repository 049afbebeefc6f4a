use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use overparam_core::bounds::{bernstein_flip_trials, hoeffding_row_norm_trials, ConcentrationTrialSummary};
use overparam_core::harness::{
    self, EtaMode, ExperimentConfig, RMode, RunRecord, SweepAxis, SweepParameter,
};
use overparam_core::{Error, Result};

#[derive(Parser)]
#[command(name = "overparam", version, about = "Gradient-descent verification laboratory for over-parameterized ReLU networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its record, checks and loss trace.
    Train(Common),
    /// Expand a sweep axis and run every child experiment.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to sweep (n, d, m, eta, r, steps, seed, theta_hat).
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated sweep values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Tabulate closed forms against quadrature and Monte Carlo.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Comma-separated angles in radians.
        #[arg(long, value_delimiter = ',')]
        thetas: Vec<f64>,
        /// Comma-separated band radii.
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
    },
    /// Run the Hoeffding and Bernstein concentration trials.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Band radius for the Bernstein trials.
        #[arg(long, default_value_t = 0.1)]
        r: f64,
    },
    /// Aggregate record JSON files into a markdown report.
    Report {
        #[command(flatten)]
        common: Common,
        /// Record files; defaults to every `*.json` in the output directory.
        records: Vec<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Fixed step size; omit for the recommended one.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    theta_hat: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// ε in the recommended band radius.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Monte Carlo samples (oracle) or trials (verify).
    #[arg(long)]
    samples: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.d {
            cfg.d = v;
        }
        if let Some(v) = self.m {
            cfg.m = v;
        }
        if let Some(v) = self.eta {
            cfg.eta = EtaMode::Fixed(v);
        }
        if let Some(v) = self.steps {
            cfg.steps = v;
        }
        if let Some(v) = self.theta_hat {
            cfg.theta_hat = v;
        }
        if let Some(v) = self.delta {
            cfg.delta = v;
        }
        if let Some(v) = self.epsilon {
            cfg.r = RMode::Recommended { epsilon: v };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

fn write_record(record: &RunRecord, out: &Path) -> Result<()> {
    let stem = slug(&record.config.name);
    harness::emit_json(record, &out.join(format!("{stem}.json")))?;
    harness::emit_csv(record, &out.join(format!("{stem}.checks.csv")))?;
    harness::emit_trace_csv(record, &out.join(format!("{stem}.trace.csv")))
}

fn summarize(record: &RunRecord) {
    let t = &record.trace;
    println!(
        "{}: n={} d={} m={} eta={:.4e} R={:.4e} L(0)={:.6e} L(T)={:.6e} checks={} failed={}",
        record.config.name,
        record.config.n,
        record.config.d,
        record.config.m,
        record.eta,
        record.r,
        t.losses[0],
        t.losses[t.losses.len() - 1],
        record.checks.len(),
        record.hard_failures().count()
    );
    for c in record.hard_failures().take(10) {
        println!("  FAILED {} at k={:?}: lhs={:.6e} rhs={:.6e}", c.name, c.k, c.lhs, c.rhs);
    }
    for w in &record.warnings {
        println!("  warning: {w}");
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn parse_axis(name: &str) -> Result<SweepParameter> {
    Ok(match name {
        "n" => SweepParameter::N,
        "d" => SweepParameter::D,
        "m" => SweepParameter::M,
        "eta" => SweepParameter::Eta,
        "r" | "R" => SweepParameter::R,
        "steps" => SweepParameter::Steps,
        "seed" => SweepParameter::Seed,
        "theta_hat" => SweepParameter::ThetaHat,
        other => return Err(Error::Config(format!("unknown sweep axis `{other}`"))),
    })
}

fn print_summary(s: &ConcentrationTrialSummary, m: usize) {
    println!(
        "{} (m={m}): {}/{} violations, rate {:.4} vs delta {} -> {}",
        s.name,
        s.violations,
        s.trials,
        s.violation_rate(),
        s.delta,
        if s.within_tolerance() { "ok" } else { "above tolerance" }
    );
}

/// `Ok(true)` when every deterministic check passed.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Train(common) => {
            let cfg = common.config()?;
            let record = harness::run_experiment(&cfg)?;
            write_record(&record, &common.out)?;
            summarize(&record);
            Ok(record.all_deterministic_passed())
        }
        Command::Sweep { common, axis, values } => {
            let mut cfg = common.config()?;
            if let Some(axis) = axis {
                cfg.sweep = Some(SweepAxis {
                    parameter: parse_axis(&axis)?,
                    values,
                });
            }
            if cfg.sweep.is_none() {
                return Err(Error::Config("sweep needs --axis/--values or a sweep in the config".into()));
            }
            cfg.validate()?;
            let records = harness::run_sweep(&cfg)?;
            for r in &records {
                write_record(r, &common.out)?;
                summarize(r);
            }
            harness::emit_report(&records, &common.out.join("report.md"))?;
            Ok(records.iter().all(RunRecord::all_deterministic_passed))
        }
        Command::Oracle { common, thetas, radii } => {
            let cfg = common.config()?;
            let thetas = if thetas.is_empty() {
                vec![PI / 6.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0]
            } else {
                thetas
            };
            let radii = if radii.is_empty() { vec![0.05, 0.1, 0.2] } else { radii };
            let rows = harness::oracle_table(&thetas, &radii, common.samples.unwrap_or(1_000_000), cfg.seed)?;
            let csv = harness::oracle_csv(&rows);
            let path = common.out.join("oracle.csv");
            fs::create_dir_all(&common.out).map_err(|e| io_error(&common.out, e))?;
            fs::write(&path, &csv).map_err(|e| io_error(&path, e))?;
            print!("{csv}");
            Ok(true)
        }
        Command::Verify { common, r } => {
            let cfg = common.config()?;
            let trials = common.samples.unwrap_or(1000);
            let seed = overparam_core::seed::derive(cfg.seed, "trials");
            let h = hoeffding_row_norm_trials(cfg.n, cfg.d, cfg.m, cfg.delta, trials, seed)?;
            let b = bernstein_flip_trials(cfg.n, cfg.d, cfg.m, r, cfg.delta, trials, seed)?;
            print_summary(&h, cfg.m);
            print_summary(&b, cfg.m);
            let path = common.out.join("verify.json");
            fs::create_dir_all(&common.out).map_err(|e| io_error(&common.out, e))?;
            let json = serde_json::to_string_pretty(&[h, b]).map_err(|e| Error::Parse(e.to_string()))?;
            fs::write(&path, json + "\n").map_err(|e| io_error(&path, e))?;
            Ok(true)
        }
        Command::Report { common, records } => {
            let paths = if records.is_empty() {
                let mut found: Vec<PathBuf> = fs::read_dir(&common.out)
                    .map_err(|e| io_error(&common.out, e))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == "json") && !p.ends_with("verify.json"))
                    .collect();
                found.sort();
                found
            } else {
                records
            };
            let loaded = paths.iter().map(|p| harness::load_json(p)).collect::<Result<Vec<_>>>()?;
            let files = harness::emit_report(&loaded, &common.out.join("report.md"))?;
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(loaded.iter().all(RunRecord::all_deterministic_passed))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
