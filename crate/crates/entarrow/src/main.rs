use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use entarrow::experiment::{self, ExperimentConfig, ExportFormat};
use entarrow::Error;

/// Decoherence laboratory: seeded experiments with CSV/JSON output.
#[derive(Parser)]
#[command(name = "entarrow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a JSON config and export its outputs.
    Run {
        /// Path to the experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Output directory for the CSV/JSON files.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Which output files to write.
        #[arg(long, value_enum, default_value_t = FormatArg::All)]
        format: FormatArg,
    },
    /// Parse and validate a config without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    All,
}

impl From<FormatArg> for ExportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ExportFormat::Csv,
            FormatArg::Json => ExportFormat::Json,
            FormatArg::All => ExportFormat::All,
        }
    }
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text)
}

/// Informational output; a closed pipe (e.g. `| head`) is not an error.
fn say(message: String) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{message}");
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, out, seed, format } => {
            let mut config = load_config(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let record = experiment::run(&config)?;
            let files = experiment::export(&record, &out, format.into())?;
            say(format!(
                "{} seed {} finished in {:.3} s",
                config.experiment,
                config.seed,
                record.duration.as_secs_f64()
            ));
            for file in files {
                say(format!("wrote {}", file.display()));
            }
            Ok(())
        }
        Command::Validate { config } => {
            let config = load_config(&config)?;
            config.validate()?;
            say(format!("config ok: {} experiment, seed {}", config.experiment, config.seed));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_) => 2,
                Error::Io(_) => 1,
                _ => 3,
            };
            ExitCode::from(code)
        }
    }
}
