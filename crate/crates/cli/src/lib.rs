//! Command-line front end: run experiments, quantize snapshot files, estimate DOA angles.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qsubspace::doa::{esprit, DoaError};
use qsubspace::harness::io::{ingest_any, write_all, write_quantized, Ingested};
use qsubspace::harness::{run_experiment, ExperimentConfig, RawConfig};
use qsubspace::quantize::{quantize_batch, QuantizedBatch};
use qsubspace::randsrc::{RngStream, Role};
use qsubspace::subspace::{leading_eigenspace_of, subspace_from_quantized};
use qsubspace::{estimate::sample_covariance_batch, Field, QuantizerSpec, SnapshotBatch};

#[derive(Parser)]
#[command(name = "qsubspace", version, about = "Subspace and DOA estimation from dithered quantized samples")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named preset (or `custom`) and write CSV results plus a metadata sidecar.
    Run(RunArgs),
    /// Direction-of-arrival estimation.
    Doa {
        #[command(subcommand)]
        command: DoaCommand,
    },
    /// Quantize a snapshot file.
    Quantize(QuantizeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Preset name, e.g. `wellsep_doa`, `phase_transition_paper` or `custom`.
    preset: String,
    /// Flat key/value file layered over the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum DoaCommand {
    /// Print ESPRIT angle estimates as CSV.
    Estimate(EstimateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Rect,
    Tri,
    Round,
    /// No quantization: ESPRIT on the sample covariance.
    None,
}

#[derive(Args)]
struct SchemeArgs {
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Bits per real scalar (triangular and rounding schemes).
    #[arg(long, default_value_t = 2)]
    bits: u32,
    /// Seed of the dither streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Number of sources.
    #[arg(long)]
    sources: usize,
}

#[derive(Args)]
struct QuantizeArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long)]
    out: PathBuf,
}

pub type CliResult = Result<(), Box<dyn std::error::Error>>;

/// Runs one parsed command, writing its regular output to `out` and progress
/// or warnings to `err`.
pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::Run(args) => run(args, out, err),
        Command::Doa { command: DoaCommand::Estimate(args) } => estimate(args, out, err),
        Command::Quantize(args) => quantize(args),
    }
}

fn run(args: RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let mut raw = match &args.config {
        Some(path) => RawConfig::parse(&std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?)?,
        None => RawConfig::default(),
    };
    raw.seed = Some(args.seed);
    raw.trials = args.trials.or(raw.trials);
    raw.workers = args.workers.or(raw.workers);
    let cfg = ExperimentConfig::resolve(&args.preset, &raw)?;
    let start = std::time::Instant::now();
    let table = run_experiment(&cfg)?;
    let paths = write_all(&table, &args.out)?;
    writeln!(
        err,
        "{}: {} rows, {} trials, {:.1}s",
        cfg.experiment,
        table.rows.len(),
        cfg.trials,
        start.elapsed().as_secs_f64()
    )?;
    for (key, value) in &table.metadata.summary {
        writeln!(err, "  {key} = {value}")?;
    }
    for path in paths {
        writeln!(out, "{}", path.display())?;
    }
    Ok(())
}

fn spec_for(args: &SchemeArgs, field: Field) -> Result<Option<QuantizerSpec>, Box<dyn std::error::Error>> {
    Ok(match args.scheme {
        SchemeArg::Rect => Some(QuantizerSpec::rectangular(args.lambda, field)?),
        SchemeArg::Tri => Some(QuantizerSpec::triangular(args.lambda, args.bits, field)?),
        SchemeArg::Round => Some(QuantizerSpec::direct_round(args.lambda, args.bits, field)?),
        SchemeArg::None => None,
    })
}

fn quantize_with(spec: &QuantizerSpec, batch: &SnapshotBatch, seed: u64) -> Result<QuantizedBatch, Box<dyn std::error::Error>> {
    let mut a = RngStream::for_trial(seed, 0, Role::DitherA);
    let mut b = RngStream::for_trial(seed, 0, Role::DitherB);
    Ok(quantize_batch(batch, spec, &mut a, &mut b)?)
}

fn estimate(args: EstimateArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let s = args.sources;
    let u_hat = match ingest_any(&args.input)? {
        Ingested::Analog(batch) => {
            if batch.field() != Field::Complex {
                return Err("DOA estimation needs complex snapshots (field=complex)".into());
            }
            match spec_for(&args.scheme, batch.field())? {
                Some(spec) => subspace_from_quantized(&quantize_with(&spec, &batch, args.scheme.seed)?, &spec, s)?,
                None => leading_eigenspace_of(&sample_covariance_batch(&batch)?.matrix, s)?,
            }
        }
        Ingested::Quantized(q) => {
            let spec = q.spec().ok_or("quantized file without scheme")?;
            let wanted = spec_for(&args.scheme, spec.field())?;
            if wanted.map(|w| w.scheme()) != Some(spec.scheme()) {
                return Err(format!("input was quantized with {} (lambda {}), not the requested scheme", spec.label(), spec.lambda()).into());
            }
            subspace_from_quantized(&q, &spec, s)?
        }
    };
    let theta = esprit(&u_hat).map_err(|e: DoaError| e.to_string())?;
    writeln!(out, "k,theta")?;
    for (k, t) in theta.as_slice().iter().enumerate() {
        writeln!(out, "{},{}", k + 1, t)?;
    }
    if u_hat.tie {
        writeln!(err, "warning: eigenvalues {s} and {} tie; the signal subspace is ambiguous", s + 1)?;
    }
    Ok(())
}

fn quantize(args: QuantizeArgs) -> CliResult {
    let batch = match ingest_any(&args.input)? {
        Ingested::Analog(b) => b,
        Ingested::Quantized(_) => return Err("input is already quantized".into()),
    };
    let spec = spec_for(&args.scheme, batch.field())?.ok_or("`--scheme none` does not quantize")?;
    let q = quantize_with(&spec, &batch, args.scheme.seed)?;
    write_quantized(&q, &args.out)?;
    Ok(())
}
