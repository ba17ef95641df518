//! `devnet`: train, score, evaluate and run experiment protocols from the command line.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use devnet::protocol::Protocol;
use devnet::{DevNetError, ErrorKind, Variant};

use config::ConfigError;

const EXIT_OTHER: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

#[derive(Parser)]
#[command(
    name = "devnet",
    version,
    about = "Deviation-network anomaly detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split, contaminate, train on a CSV and write the model and training log.
    Train {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Score the rows of a CSV with a saved model.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Scores CSV; defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the rows sorted by descending score.
        #[arg(long)]
        sorted: Option<PathBuf>,
    },
    /// AUC-ROC and AUC-PR of a saved model on a labeled CSV.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Supplies the label column and positive token.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        label_column: Option<String>,
        #[arg(long)]
        positive_token: Option<String>,
    },
    /// Run an experiment protocol over seeded repetitions.
    Experiment {
        #[arg(value_parser = parse_protocol)]
        protocol: Protocol,
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        runs: Option<usize>,
    },
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "devnet-out")]
    out: PathBuf,
    #[arg(long)]
    labeled_anomalies: Option<usize>,
    #[arg(long)]
    contamination: Option<f64>,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: DevNetError| e.to_string())
}

fn parse_protocol(s: &str) -> Result<Protocol, String> {
    s.parse().map_err(|e: DevNetError| e.to_string())
}

impl CommonArgs {
    fn resolve(&self) -> anyhow::Result<config::Config> {
        let mut cfg = match &self.config {
            Some(path) => config::Config::load(path)?,
            None => config::Config::default(),
        };
        if let Some(v) = self.variant {
            cfg.train.variant = v;
        }
        if let Some(s) = self.seed {
            cfg.train.seed = s;
        }
        if let Some(k) = self.labeled_anomalies {
            cfg.experiment.n_labeled_anomalies = k;
        }
        if let Some(r) = self.contamination {
            cfg.experiment.contamination_rate = r;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train { common } => {
            let cfg = common.resolve()?;
            cfg.validate()?;
            commands::train(&cfg, &common.out)
        }
        Command::Score {
            model,
            input,
            out,
            sorted,
        } => commands::score(&model, &input, out.as_deref(), sorted.as_deref()),
        Command::Evaluate {
            model,
            input,
            config,
            label_column,
            positive_token,
        } => {
            let data = match &config {
                Some(p) => config::Config::load(p)?.data,
                None => config::DataConfig::default(),
            };
            let label = label_column.unwrap_or(data.label_column);
            let positive = positive_token.unwrap_or(data.positive_token);
            commands::evaluate(&model, &input, &label, &positive)
        }
        Command::Experiment {
            protocol,
            common,
            runs,
        } => {
            let mut cfg = common.resolve()?;
            if let Some(r) = runs {
                cfg.protocol.runs = r;
            }
            cfg.validate()?;
            commands::experiment(protocol, &cfg, &common.out)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<DevNetError>() {
            return match e.kind() {
                ErrorKind::Config => EXIT_CONFIG,
                ErrorKind::Data => EXIT_DATA,
                ErrorKind::Numeric => EXIT_NUMERIC,
            };
        }
        if cause.is::<ConfigError>() {
            return EXIT_CONFIG;
        }
    }
    EXIT_OTHER
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
