mod config;
mod manifest;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, ValueEnum};

use config::{ConfigError, Loaded};
use manifest::StageOutput;

/// Moral-emotion engagement analysis pipeline.
#[derive(Debug, Parser)]
#[command(name = "moralscope", version)]
struct Cli {
    #[arg(value_enum)]
    stage: Stage,
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    output: Option<PathBuf>,
    /// `sampling=N`, `split=N` or `bootstrap=N`; may be repeated.
    #[arg(long = "seed-override", value_name = "K=V")]
    seed_overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Stage {
    Validate,
    Describe,
    Growth,
    Sample,
    AnnotateServe,
    Aggregate,
    Split,
    Score,
    Distribution,
    Fit,
    Curves,
    Bootstrap,
    PerChannel,
}

impl Stage {
    fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }

    fn run(self, loaded: &Loaded, out: &mut StageOutput) -> Result<()> {
        match self {
            Stage::Validate => stages::validate(loaded, out),
            Stage::Describe => stages::describe(loaded, out),
            Stage::Growth => stages::growth(loaded, out),
            Stage::Sample => stages::sample(loaded, out),
            Stage::AnnotateServe => stages::annotate_serve(loaded, out),
            Stage::Aggregate => stages::aggregate(loaded, out),
            Stage::Split => stages::split(loaded, out),
            Stage::Score => stages::score(loaded, out),
            Stage::Distribution => stages::distribution_stage(loaded, out),
            Stage::Fit => stages::fit(loaded, out),
            Stage::Curves => stages::curves(loaded, out),
            Stage::Bootstrap => stages::bootstrap_stage(loaded, out),
            Stage::PerChannel => stages::per_channel(loaded, out),
        }
    }
}

fn init_logging() {
    let var = if std::env::var_os("MORALSCOPE_LOG").is_some() {
        "MORALSCOPE_LOG"
    } else {
        "TOOL_LOG"
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(var, "info"))
        .format_timestamp(None)
        .init();
}

fn load(cli: &Cli) -> Result<Loaded> {
    let mut loaded = Loaded::read(&cli.config)?;
    if let Some(out) = &cli.output {
        loaded.config.output_dir = std::path::absolute(out)?;
    }
    for s in &cli.seed_overrides {
        loaded.apply_seed_override(s)?;
    }
    loaded.validate()?;
    Ok(loaded)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging();
    let loaded = match load(&cli) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e:#}");
            return if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            };
        }
    };
    let mut out = match StageOutput::create(&loaded, &cli.stage.name()) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    let outcome = cli.stage.run(&loaded, &mut out);
    let dir = out.dir().to_path_buf();
    if let Err(e) = out.finish(&outcome) {
        eprintln!("error: cannot write manifest: {e:#}");
        return ExitCode::FAILURE;
    }
    match outcome {
        Ok(()) => {
            log::info!("{} finished; outputs in {}", cli.stage.name(), dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
