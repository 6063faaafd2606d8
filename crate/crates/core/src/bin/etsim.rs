use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use etsim::io::{self, Preset};
use etsim::valuation::{self, PerpetualParams};
use etsim::{engine, Error, Result, SimulationConfig};

/// Execution ticket market simulator.
#[derive(Parser)]
#[command(name = "etsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration for `runs` seeds and export the results.
    Run(RunArgs),
    /// Run several presets (all by default) with shared overrides.
    Batch(RunArgs),
    /// Closed-form valuation calculators.
    Value {
        #[command(subcommand)]
        calc: ValueCalc,
    },
    /// Recompute a run's metrics from its exported CSV files.
    Metrics {
        /// A `run-NN` directory written by `run`.
        dir: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Preset name; repeatable for `batch`.
    #[arg(long)]
    preset: Vec<String>,
    /// JSON or TOML file merged over the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<u32>,
    #[arg(long)]
    timesteps: Option<u64>,
    /// Output directory; defaults to `runs/<UTC timestamp>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key=value`, value read as JSON when possible. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum ValueCalc {
    /// Value of one perpetual, unallocated ticket.
    Perpetual {
        #[arg(long)]
        mu_r: f64,
        #[arg(long, default_value_t = 0.0)]
        c: f64,
        #[arg(long)]
        d: f64,
        #[arg(long)]
        n: u64,
    },
    /// Per-slot rate equivalent to an annual rate.
    DiscountRate {
        #[arg(long)]
        annual: f64,
        #[arg(long, default_value_t = valuation::SLOTS_PER_YEAR)]
        slots_per_year: u64,
    },
    /// Tickets needed to capture all but `p` of the reward stream.
    MinTickets {
        #[arg(long)]
        d: f64,
        #[arg(long)]
        p: f64,
    },
    /// Present value of all future rewards.
    Npv {
        #[arg(long)]
        mu_r: f64,
        #[arg(long)]
        d: f64,
    },
    /// Probability share of tickets already assigned a slot.
    Allocated {
        #[arg(long)]
        lookahead: u64,
        #[arg(long)]
        n: u64,
    },
}

impl RunArgs {
    fn load(&self, preset: Option<&str>) -> Result<SimulationConfig> {
        let mut overrides = self
            .overrides
            .iter()
            .map(|s| io::parse_override(s))
            .collect::<Result<Vec<_>>>()?;
        if let Some(s) = self.seed {
            overrides.push(("seed".into(), json!(s)));
        }
        if let Some(r) = self.runs {
            overrides.push(("runs".into(), json!(r)));
        }
        if let Some(t) = self.timesteps {
            overrides.push(("timesteps".into(), json!(t)));
        }
        io::load_config(preset, self.config.as_deref(), &overrides)
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            let stamp = chrono::Utc::now().format("%Y-%m-%d_%H-%M-%S");
            Path::new("runs").join(stamp.to_string())
        })
    }
}

fn run_one(config: &SimulationConfig, out: &Path) -> Result<Value> {
    let batch = engine::run_batch(config)?;
    let summary = io::export_batch(&batch, out)?;
    Ok(serde_json::to_value(summary.aggregate)?)
}

fn execute(cli: Cli) -> Result<Value> {
    match cli.command {
        Command::Run(args) => {
            if args.preset.len() > 1 {
                return Err(etsim_config_error("preset", "`run` takes one preset; use `batch` for several"));
            }
            let config = args.load(args.preset.first().map(String::as_str))?;
            let out = args.out_dir();
            let aggregate = run_one(&config, &out)?;
            Ok(json!({ "out": out, "aggregate": aggregate }))
        }
        Command::Batch(args) => {
            let presets: Vec<String> = if args.preset.is_empty() {
                Preset::ALL.iter().map(|p| p.name().to_string()).collect()
            } else {
                args.preset.clone()
            };
            let configs = presets
                .iter()
                .map(|p| args.load(Some(p)).map(|c| (p.clone(), c)))
                .collect::<Result<Vec<_>>>()?;
            let out = args.out_dir();
            let mut results = serde_json::Map::new();
            for (name, config) in configs {
                results.insert(name.clone(), run_one(&config, &out.join(&name))?);
            }
            Ok(json!({ "out": out, "presets": results }))
        }
        Command::Value { calc } => {
            let v = match calc {
                ValueCalc::Perpetual { mu_r, c, d, n } => {
                    json!(valuation::perpetual_ticket_value(PerpetualParams { mu_r, c, d, n })?)
                }
                ValueCalc::DiscountRate { annual, slots_per_year } => {
                    json!(valuation::slot_discount_rate(annual, slots_per_year)?)
                }
                ValueCalc::MinTickets { d, p } => json!(valuation::min_tickets_for_capture(d, p)?),
                ValueCalc::Npv { mu_r, d } => json!(valuation::npv_all_rewards(mu_r, d)?),
                ValueCalc::Allocated { lookahead, n } => json!(valuation::allocated_probability_share(lookahead, n)?),
            };
            Ok(v)
        }
        Command::Metrics { dir } => {
            let m = io::recompute_metrics(&dir)?;
            Ok(serde_json::to_value(io::round_metrics(&m))?)
        }
    }
}

fn etsim_config_error(field: &str, reason: &str) -> Error {
    Error::Config {
        field: field.to_string(),
        reason: reason.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("json output"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
