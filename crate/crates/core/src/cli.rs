//! Command-line interface. JSON goes to stdout, diagnostics to stderr.
//!
//! Exit codes: 0 success, 1 validation/parse/I-O error, 2 numerical or
//! solver error, 3 network error.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::error::{Error, ErrorKind, Result};
use crate::harness::{
    default_cache_dir, run_experiment, synth_correlated, ExperimentSpec, SyntheticModel, REPORT_JSON,
};
use crate::ingest::montage::channel_preset;
use crate::ingest::{load_record, parse_label_list, select_channels, write_csv, Fetcher};
use crate::klt::{build_klt, KltModel};
use crate::recovery::{reconstruct_record, EpsilonPolicy, MeasurementPlan, RecoveryConfig};
use crate::spectral::{compare_spectra, default_bands, SpectralReport};

#[derive(Debug, Parser)]
#[command(
    name = "eegcs",
    version,
    about = "Reduced-channel EEG acquisition and reconstruction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Download a PhysioNet eegmmidb record into the cache
    Fetch {
        #[arg(long)]
        subject: u32,
        #[arg(long)]
        record: u32,
        /// Cache directory (default: $EEGCS_CACHE_DIR or ./physionet-cache)
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Generate a synthetic multichannel record as CSV
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "default20")]
        preset: String,
        #[arg(long, default_value_t = 60.0)]
        duration: f64,
    },
    /// Learn a KLT model from a fully sampled training record
    Train {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        channels: ChannelArgs,
        #[arg(long, default_value_t = 1000)]
        window: usize,
        #[arg(long)]
        model: PathBuf,
        /// Skip mean removal before the covariance
        #[arg(long)]
        uncentered: bool,
        #[command(flatten)]
        rate: RateArg,
    },
    /// Reconstruct all model channels from a measured subset
    Reconstruct {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated labels of the measured channels
        #[arg(long)]
        measured: String,
        #[arg(long, conflicts_with = "epsilon_abs")]
        epsilon_rel: Option<f64>,
        #[arg(long)]
        epsilon_abs: Option<f64>,
        /// Time span in seconds, START:END
        #[arg(long, default_value = "0:10")]
        span: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        solver_tol: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[command(flatten)]
        workers: WorkersArg,
        #[command(flatten)]
        rate: RateArg,
    },
    /// Compare band FSMs of an original and a reconstructed record
    Analyze {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        reconstructed: PathBuf,
        /// Comma-separated labels to compare
        #[arg(long)]
        channels: String,
        #[arg(long)]
        report: PathBuf,
        /// Time span in seconds applied to the original, START:END
        #[arg(long)]
        span: Option<String>,
        #[command(flatten)]
        rate: RateArg,
    },
    /// Print the table of a report (a run directory or a report JSON file)
    Report {
        #[arg(long)]
        run: PathBuf,
        /// Print the JSON instead of the table
        #[arg(long)]
        json: bool,
    },
    /// Train, test and report in one go from a config file or preset
    Run {
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        /// default20, s1, s8, s41, s61, s77, s104 or s64-1020
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        workers: WorkersArg,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct ChannelArgs {
    /// Comma-separated channel labels
    #[arg(long)]
    channels: Option<String>,
    /// Named channel list (central-20, central-line-7, 1020-in-central)
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Debug, Args)]
struct RateArg {
    /// Sampling rate in Hz for CSV inputs
    #[arg(long, default_value_t = 160.0)]
    rate: f64,
}

#[derive(Debug, Args)]
struct WorkersArg {
    /// Reconstruction threads (default: available processors)
    #[arg(long)]
    workers: Option<usize>,
}

fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Input => 1,
        ErrorKind::Numerical => 2,
        ErrorKind::Network => 3,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(e.kind())
        }
    }
}

fn parse_span(span: &str) -> Result<(f64, f64)> {
    let (a, b) = span
        .split_once(':')
        .ok_or_else(|| Error::validation(format!("span {span:?} is not START:END")))?;
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::validation(format!("span {span:?}: {s:?} is not a number")))
    };
    let (a, b) = (num(a)?, num(b)?);
    if !(a >= 0.0 && b > a) {
        return Err(Error::validation(format!("span {span:?} must satisfy 0 ≤ START < END")));
    }
    Ok((a, b))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn print_json(value: &serde_json::Value) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(value).unwrap_or_default());
}

fn with_workers<T: Send>(workers: Option<usize>, job: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        None => job(),
        Some(0) => Err(Error::validation("--workers must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::validation(format!("cannot start {n} workers: {e}")))?
            .install(job),
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Fetch { subject, record, cache } => {
            let dir = cache.unwrap_or_else(default_cache_dir);
            let path = Fetcher::default().fetch(subject, record, &dir)?;
            print_json(&json!({ "path": path }));
        }
        Command::Synth {
            seed,
            out,
            preset,
            duration,
        } => {
            let model = SyntheticModel::preset(&preset)?;
            let record = synth_correlated(&model, duration, seed)?;
            write_file(&out, &write_csv(&record))?;
            print_json(&json!({
                "path": out,
                "channels": record.num_channels(),
                "samples": record.num_samples(),
                "sample_rate": record.sample_rate(),
            }));
        }
        Command::Train {
            input,
            channels,
            window,
            model,
            uncentered,
            rate,
        } => {
            let labels = match (channels.channels, channels.preset) {
                (Some(list), _) => parse_label_list(&list),
                (None, Some(p)) => channel_preset(&p)?,
                (None, None) => unreachable!("clap enforces one of --channels/--preset"),
            };
            let record = select_channels(&load_record(&input, rate.rate)?, &labels)?;
            let klt = build_klt(&record, window, !uncentered)?.with_source(format!("file:{}", input.display()));
            write_file(&model, &klt.to_json()?)?;
            print_json(&json!({
                "model": model,
                "channels": klt.num_channels(),
                "windows": klt.windows_used(),
                "eigenvalues": klt.eigenvalues().as_slice(),
            }));
        }
        Command::Reconstruct {
            input,
            model,
            measured,
            epsilon_rel,
            epsilon_abs,
            span,
            out,
            solver_tol,
            max_iters,
            workers,
            rate,
        } => {
            let klt = KltModel::from_json(&read_file(&model)?)?;
            let mut config = RecoveryConfig::default();
            if let Some(v) = epsilon_abs {
                config.epsilon = EpsilonPolicy::Absolute(v);
            } else if let Some(v) = epsilon_rel {
                config.epsilon = EpsilonPolicy::Relative(v);
            }
            if let Some(t) = solver_tol {
                config.solver_tol = t;
            }
            if let Some(m) = max_iters {
                config.max_iters = m;
            }
            config.validate()?;
            let (start, end) = parse_span(&span)?;
            let measured = parse_label_list(&measured);
            let plan = MeasurementPlan::from_labels(klt.labels(), &measured)?;
            let wanted: Vec<String> = plan.measured().iter().map(|&i| klt.labels()[i].clone()).collect();
            let record = select_channels(&load_record(&input, rate.rate)?, &wanted)?.trim_seconds(start, end)?;
            let recon = with_workers(workers.workers, || {
                reconstruct_record(&klt, &plan, record.samples(), record.sample_rate(), &config)
            })?;
            write_file(&out, &write_csv(&recon))?;
            print_json(&json!({
                "path": out,
                "instants": recon.num_samples(),
                "reconstructed": plan.unmeasured().iter().map(|&i| &klt.labels()[i]).collect::<Vec<_>>(),
            }));
        }
        Command::Analyze {
            original,
            reconstructed,
            channels,
            report,
            span,
            rate,
        } => {
            let mut orig = load_record(&original, rate.rate)?;
            if let Some(s) = span {
                let (a, b) = parse_span(&s)?;
                orig = orig.trim_seconds(a, b)?;
            }
            let recon = load_record(&reconstructed, rate.rate)?;
            let labels = parse_label_list(&channels);
            let result = compare_spectra(&orig, &recon, &labels, &default_bands())?;
            let text = result.to_json()?;
            write_file(&report, &text)?;
            eprint!("{}", result.to_table());
            print_json(&serde_json::from_str(&text)?);
        }
        Command::Report { run, json } => {
            let path = if run.is_dir() { run.join(REPORT_JSON) } else { run };
            let report = SpectralReport::from_json(&read_file(&path)?)?;
            if json {
                println!("{}", report.to_json()?);
            } else {
                print!("{}", report.to_table());
            }
        }
        Command::Run {
            config,
            preset,
            out,
            workers,
        } => {
            let spec = match (config, preset) {
                (Some(c), _) => ExperimentSpec::from_json(&read_file(&c)?)?,
                (None, Some(p)) => ExperimentSpec::preset(&p)?,
                (None, None) => unreachable!("clap requires --config or --preset"),
            };
            let output = with_workers(workers.workers, || run_experiment(&spec, &out))?;
            eprint!("{}", output.outcome.report.to_table());
            print_json(&json!({
                "report": output.report_path,
                "bands": output.outcome.report.bands,
            }));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_parsing() {
        assert_eq!(parse_span("0:10").unwrap(), (0.0, 10.0));
        assert_eq!(parse_span(" 2.5 : 4 ").unwrap(), (2.5, 4.0));
        assert!(parse_span("10").is_err());
        assert!(parse_span("5:5").is_err());
        assert!(parse_span("a:b").is_err());
    }

    #[test]
    fn help_and_unknown_flags() {
        assert_eq!(run(["eegcs", "--help"]), 0);
        assert_eq!(run(["eegcs", "train", "--help"]), 0);
        assert_eq!(run(["eegcs", "synth", "--bogus"]), 1);
        assert_eq!(run(["eegcs"]), 1);
    }

    #[test]
    fn exit_codes_by_kind() {
        assert_eq!(exit_code(Error::validation("x").kind()), 1);
        assert_eq!(exit_code(Error::Numerical("x".into()).kind()), 2);
        assert_eq!(exit_code(Error::Network("x".into()).kind()), 3);
    }
}
