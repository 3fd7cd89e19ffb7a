use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use uavchan::sim::analyze::{describe, write_diagnostics, write_report};
use uavchan::sim::format::{read_channel_path, write_cir_file};
use uavchan::sim::{
    analyze, run, sample_snapshots, AnalyzeOptions, RunConfig, RunOptions, SamplingOptions,
    ScenarioRef,
};
use uavchan::{Error, ScenarioRegistry};

#[derive(Parser)]
#[command(name = "uavchan", version, about = "UAV-to-ground channel simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the scenario registry as a TOML document.
    Scenarios {
        /// Extra scenario document to merge in.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Generate snapshots along a trajectory and write all artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use a named scenario instead of the one in the config.
        #[arg(long)]
        scenario: Option<String>,
        /// Generate on a single thread.
        #[arg(long)]
        serial: bool,
    },
    /// Fit path-loss and SV parameters from a snapshot or sampled-CIR file.
    Analyze {
        input: PathBuf,
        /// Report file; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        offset_ns: Option<f64>,
        #[arg(long, default_value_t = 32)]
        max_rays: usize,
        #[arg(long, default_value_t = uavchan::estimator::DEFAULT_STOP_THRESHOLD_DB)]
        threshold_db: f64,
        /// Directory for plot data (normalized powers, interarrival CDFs).
        #[arg(long)]
        plots: Option<PathBuf>,
    },
    /// Convert a snapshot file into band-limited sampled CIRs.
    Discretize {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = uavchan::channel::DEFAULT_SAMPLE_PERIOD_NS)]
        sample_period_ns: f64,
        #[arg(long, default_value_t = 32)]
        margin: usize,
        /// Added to every delay before sampling, ns.
        #[arg(long, default_value_t = 0.0)]
        delay_ns: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Scenarios { file } => {
            let mut reg = ScenarioRegistry::builtin();
            if let Some(path) = file {
                let doc =
                    std::fs::read_to_string(&path).map_err(|e| Error::Io { path, source: e })?;
                reg.merge_toml(&doc)?;
            }
            print!("{}", reg.to_toml());
        }
        Command::Run {
            config,
            seed,
            out,
            scenario,
            serial,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(dir) = out {
                cfg.output.dir = dir;
            }
            if let Some(name) = scenario {
                cfg.scenario = ScenarioRef::Named(name);
            }
            let result = run(&cfg, &RunOptions { parallel: !serial })?;
            let s = &result.summary;
            println!(
                "{}: {} positions, {} snapshots, {} infinite-K, written to {}",
                s.scenario.name,
                s.positions,
                s.snapshots,
                s.infinite_k_snapshots,
                cfg.output.dir.display()
            );
        }
        Command::Analyze {
            input,
            out,
            offset_ns,
            max_rays,
            threshold_db,
            plots,
        } => {
            let file = read_channel_path(&input)?;
            let opts = AnalyzeOptions {
                offset_ns,
                max_rays,
                stop_threshold_db: threshold_db,
                ..AnalyzeOptions::default()
            };
            let analysis = analyze(&file, &opts)?;
            match out {
                Some(path) => {
                    write_report(&analysis.report, &path)?;
                    eprint!("{}", describe(&analysis.report));
                }
                None => {
                    let json =
                        serde_json::to_string_pretty(&analysis.report).expect("report serializes");
                    let mut stdout = std::io::stdout().lock();
                    writeln!(stdout, "{json}").map_err(|e| Error::Io {
                        path: "stdout".into(),
                        source: e,
                    })?;
                }
            }
            if let Some(dir) = plots {
                write_diagnostics(&analysis, &dir)?;
            }
        }
        Command::Discretize {
            input,
            out,
            sample_period_ns,
            margin,
            delay_ns,
        } => {
            let file = read_channel_path(&input)?;
            let (header, records) = sample_snapshots(
                &file,
                &SamplingOptions {
                    sample_period_ns,
                    margin_samples: margin,
                    delay_shift_ns: delay_ns,
                },
            )?;
            let w = std::fs::File::create(&out).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            write_cir_file(std::io::BufWriter::new(w), &header, &records).map_err(|e| {
                Error::Io {
                    path: out.clone(),
                    source: e,
                }
            })?;
        }
    }
    Ok(())
}
