//! `sonda`: validate plans, synthesize stimuli, run scripted sessions,
//! analyze stored sessions and serve trainings.
//!
//! Exit status is 0 on success, 1 when the inputs are wrong (invalid plan,
//! bad spec, unknown training) and 2 for usage errors.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use sonda_core::analytics::{render_csv, render_text};
use sonda_core::bundled::write_examples;
use sonda_core::catalog::{load_bundle, training_report, PLAN_SUFFIX};
use sonda_core::plan::{parse_plan, validate_plan};
use sonda_core::runtime::{parse_script, run_headless, write_log, SessionConfig};
use sonda_core::stimulus::{load_series, render_plot, sonify, synth_tone, write_wav};
use sonda_core::store::{parse_timestamp, session_csv, Store};
use sonda_core::{AudioBuffer, SonificationSpec, ToneSpec};
use sonda_server::{serve, AppState, ServerConfig};

#[derive(Parser)]
#[command(name = "sonda", version, about = "Multisensory signal-detection trainings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a plan, its tables and its assets.
    Validate { plan: PathBuf },
    /// Synthesize stimuli.
    #[command(subcommand)]
    Synth(Synth),
    /// Turn a data series into a sequence of notes.
    Sonify {
        /// CSV (`y` or `x,y` columns) or whitespace-separated values.
        series: PathBuf,
        #[arg(long, default_value_t = 220.0)]
        fmin: f64,
        #[arg(long, default_value_t = 1700.0)]
        fmax: f64,
        #[arg(long, default_value_t = 0.1)]
        note_dur: f64,
        #[arg(long, default_value_t = 0.8)]
        amp: f64,
        #[arg(long, default_value_t = 44_100)]
        rate: u32,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the series as an SVG line plot.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Run a session headlessly from a scripted event file.
    Run {
        plan: PathBuf,
        #[arg(long)]
        participant: String,
        /// `at_ms,kind,key` rows; no script means no key presses.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Session CSV, `-` for stdout.
        #[arg(short, long)]
        output: PathBuf,
        /// Defaults to a random UUID.
        #[arg(long)]
        session_id: Option<String>,
        /// RFC 3339 start time; defaults to now.
        #[arg(long)]
        started_at: Option<String>,
        /// Write the directive log as JSON lines.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        tick_ms: u64,
    },
    /// Aggregate a training's stored sessions per block.
    Analyze {
        data_dir: PathBuf,
        #[arg(long)]
        training: String,
        #[arg(long, env = "SONDA_PLANS_DIR", default_value = "plans")]
        plans: PathBuf,
        #[arg(long)]
        participant: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Serve the HTTP API, assets and app shell.
    Serve {
        #[arg(long, env = "SONDA_PORT", default_value_t = sonda_server::DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "0.0.0.0")]
        host: String,
        #[arg(long, env = "SONDA_PLANS_DIR", default_value = "plans")]
        plans: PathBuf,
        #[arg(long, env = "SONDA_DATA_DIR", default_value = "data")]
        data: PathBuf,
        #[arg(long, env = "SONDA_REPORT_TOKEN", hide_env_values = true)]
        report_token: Option<String>,
    },
    /// Write the bundled trainings with generated stimuli.
    GenExamples { out_dir: PathBuf },
}

#[derive(Subcommand)]
enum Synth {
    /// A sine tone, optionally mixed with seeded white noise.
    Tone {
        #[arg(long)]
        freq: f64,
        #[arg(long)]
        dur: f64,
        #[arg(long, default_value_t = 0.0)]
        mix: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.8)]
        amp: f64,
        #[arg(long, default_value_t = 44_100)]
        rate: u32,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(2));
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Validate { plan } => return validate(&plan),
        Command::Synth(Synth::Tone {
            freq,
            dur,
            mix,
            seed,
            amp,
            rate,
            output,
        }) => {
            let spec = ToneSpec {
                frequency_hz: freq,
                duration_s: dur,
                sample_rate_hz: rate,
                amplitude: amp,
                noise_mix: mix,
                noise_seed: seed,
            };
            save_wav(&synth_tone(&spec)?, &output)?;
        }
        Command::Sonify {
            series,
            fmin,
            fmax,
            note_dur,
            amp,
            rate,
            output,
            plot,
        } => {
            let spec = SonificationSpec {
                f_min_hz: fmin,
                f_max_hz: fmax,
                note_duration_s: note_dur,
                sample_rate_hz: rate,
                amplitude: amp,
                ..SonificationSpec::default()
            };
            spec.validate()?;
            let data = load_series(&series)?;
            save_wav(&sonify(&data, &spec)?, &output)?;
            if let Some(path) = plot {
                write_file(&path, render_plot(&data, 640, 320)?.as_bytes())?;
            }
        }
        Command::Run {
            plan,
            participant,
            script,
            output,
            session_id,
            started_at,
            log,
            tick_ms,
        } => {
            let bundle = load_bundle(&plan)?;
            let events = match script {
                Some(path) => parse_script(&read(&path)?).with_context(|| path.display().to_string())?,
                None => Vec::new(),
            };
            let started_at = match started_at {
                Some(s) => parse_timestamp(&s).ok_or_else(|| anyhow!("--started-at {s:?} is not an RFC 3339 time"))?,
                None => chrono::Utc::now(),
            };
            let session_id = session_id.unwrap_or_else(|| uuid::Uuid::new_v4().to_string());
            let config = SessionConfig {
                tick_ms,
                ..SessionConfig::new(participant, session_id, bundle.plan.id.clone(), started_at)
            };
            let run = run_headless(&bundle.plan, &bundle.tables, config, &bundle.resolver(""), &events)?;
            let csv = session_csv(&run.result);
            if output == Path::new("-") {
                io::stdout().write_all(&csv)?;
            } else {
                write_file(&output, &csv)?;
            }
            if let Some(path) = log {
                let mut out = Vec::new();
                write_log(&run.log, &mut out)?;
                write_file(&path, &out)?;
            }
        }
        Command::Analyze {
            data_dir,
            training,
            plans,
            participant,
            format,
        } => {
            let plan_path = plans.join(format!("{training}{PLAN_SUFFIX}"));
            if !plan_path.is_file() {
                bail!("unknown training {training:?}: no {}", plan_path.display());
            }
            if !data_dir.is_dir() {
                bail!("data directory {} does not exist", data_dir.display());
            }
            let bundle = load_bundle(&plan_path)?;
            let store = Store::open(&data_dir)?;
            let blocks = training_report(&store, &bundle, participant.as_deref())?;
            let out = match format {
                Format::Text => render_text(&blocks),
                Format::Csv => render_csv(&blocks),
                Format::Json => {
                    let body = serde_json::json!({ "training_id": training, "blocks": blocks });
                    format!("{}\n", serde_json::to_string_pretty(&body)?)
                }
            };
            io::stdout().write_all(out.as_bytes())?;
        }
        Command::Serve {
            port,
            host,
            plans,
            data,
            report_token,
        } => {
            let config = ServerConfig {
                plans_dir: plans,
                data_dir: data,
                port,
                report_token,
            };
            run_server(&config, &host)?;
        }
        Command::GenExamples { out_dir } => {
            for path in write_examples(&out_dir)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(path: &Path) -> Result<ExitCode> {
    let plan = parse_plan(&read(path)?).with_context(|| path.display().to_string())?;
    let root = path.parent().unwrap_or(Path::new("."));
    let report = validate_plan(&plan, root);
    println!("{report}");
    Ok(if report.has_errors() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn run_server(config: &ServerConfig, host: &str) -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(io::stderr)
        .init();
    let state = Arc::new(AppState::load(config)?);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, config.port))
            .await
            .with_context(|| format!("cannot bind {host}:{}", config.port))?;
        // Scripts read the chosen port from this line when binding port 0.
        println!("listening on port {}", listener.local_addr()?.port());
        io::stdout().flush()?;
        serve(state, listener).await?;
        Ok(())
    })
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn save_wav(buffer: &AudioBuffer, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    write_wav(buffer, &mut out)?;
    write_file(path, &out)
}
