use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fpp_core::config::{ExperimentConfig, ExperimentKind};
use fpp_core::emit::{emit, parse_formats};
use fpp_core::harness::run;
use fpp_core::{Error, Result};

#[derive(Parser)]
#[command(name = "fpp", version, about = "First-passage percolation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the limit shape from radial passage times.
    Shape(Common),
    /// Estimate the time constant in one direction.
    Tau(Common),
    /// Line Busemann experiments.
    Busemann {
        #[arg(long, value_enum)]
        lemma: Lemma,
        #[command(flatten)]
        common: Common,
    },
    /// Competition of four seeds on the shape's axis points.
    Coexist(Common),
    /// Annulus end counts of infection trees.
    Ends(Common),
    /// Geodesic localization events.
    Localize {
        #[arg(long, value_parser = ["33", "34"])]
        event: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Lemma {
    Bn,
    Slope,
    Highprob,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    parallel: Option<usize>,
    /// Comma-separated subset of csv, json, pixmap.
    #[arg(long, default_value = "csv,json")]
    format: String,
}

fn execute(kind: ExperimentKind, common: &Common, event: Option<u8>) -> Result<()> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default_for(kind),
    };
    if config.experiment.kind != kind {
        return Err(Error::ConfigInvalid(format!(
            "experiment.kind: config is for {}, command asked for {}",
            config.experiment.kind.name(),
            kind.name()
        )));
    }
    if let Some(seed) = common.seed {
        config.experiment.master_seed = seed;
    }
    if let Some(reps) = common.reps {
        config.experiment.replications = reps;
    }
    if let Some(p) = common.parallel {
        config.experiment.parallelism = p;
    }
    if let (Some(e), Some(l)) = (event, config.localize.as_mut()) {
        l.event = e;
    }
    config.validate()?;
    let formats = parse_formats(&common.format).map_err(|e| Error::ConfigInvalid(format!("--format: {e}")))?;
    let dir = common.out.clone().or_else(|| config.experiment.output_dir.clone()).unwrap_or_else(|| "out".into());

    let started = Instant::now();
    let report = run(&config)?;
    let elapsed = started.elapsed().as_secs_f64();

    let stem = kind.name();
    for p in emit(&report, &dir, stem, &formats)? {
        println!("{}", p.display());
    }
    // Timing lives beside the report so that reports stay byte-identical.
    let timing = serde_json::json!({ "wall_clock_seconds": elapsed, "parallelism": config.experiment.parallelism });
    std::fs::write(dir.join(format!("{stem}.timing.json")), format!("{timing}\n"))?;
    if let Some(warning) = clipping_warning(&report.results) {
        eprintln!("warning: {warning}");
    }
    Ok(())
}

fn clipping_warning(results: &fpp_core::harness::ExperimentResults) -> Option<String> {
    use fpp_core::harness::ExperimentResults as R;
    let dropped: usize = match results {
        R::Tau { rows, .. } => rows.iter().map(|r| r.clipped).sum(),
        R::Busemann { runs, .. } => runs.iter().flat_map(|r| &r.experiment.rows).map(|r| r.clipped).sum(),
        R::Localize { clipped, .. } => *clipped,
        _ => 0,
    };
    (dropped > 0).then(|| format!("{dropped} clipped replicate results were dropped"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Shape(c) => execute(ExperimentKind::Shape, c, None),
        Command::Tau(c) => execute(ExperimentKind::Tau, c, None),
        Command::Busemann { lemma, common } => {
            let kind = match lemma {
                Lemma::Bn => ExperimentKind::BusemannBn,
                Lemma::Slope => ExperimentKind::BusemannSlope,
                Lemma::Highprob => ExperimentKind::BusemannHighprob,
            };
            execute(kind, common, None)
        }
        Command::Coexist(c) => execute(ExperimentKind::Coexist, c, None),
        Command::Ends(c) => execute(ExperimentKind::Ends, c, None),
        Command::Localize { event, common } => execute(ExperimentKind::Localize, common, event.parse().ok()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
