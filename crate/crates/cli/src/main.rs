use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gaze_drive::config::{load_scenario, load_script, prepare};
use gaze_drive::live::{replay_episode, serve, session_inputs, ServeOptions};
use gaze_drive::output::{self, ReportFile};
use gaze_drive::{exit, sweep};
use gaze_drive_bridge::broker::DEFAULT_QUEUE_CAPACITY;
use gaze_drive_bridge::session::load_session;
use gaze_drive_bridge::{BridgeClient, BridgeListener, Replay, DEFAULT_PORT};
use gaze_drive_core::sim::{run_episode, EpisodeReport};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "gaze-drive", version, about = "Gaze-driven admittance teleoperation: simulation, sweeps, live broker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scripted episode.
    Run(RunArgs),
    /// Run the same script for several damping values.
    Sweep(SweepArgs),
    /// Start the WebSocket broker with a live simulation.
    Serve(ServeArgs),
    /// Re-run a recorded session.
    Replay(ReplayArgs),
    /// Check scenario, script or session files without running.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    script: PathBuf,
    /// Override the scenario damping, N*s/m.
    #[arg(long, allow_negative_numbers = true)]
    damping: Option<f64>,
    /// Directory for report.json and trace.csv.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    script: PathBuf,
    /// Comma-separated damping values, N*s/m.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "10,20,30")]
    damping: Vec<f64>,
    /// Directory for sweep.csv.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    #[arg(long, default_value = "0.0.0.0")]
    bind: IpAddr,
    /// Write a session log (JSON Lines).
    #[arg(long)]
    record: Option<PathBuf>,
    /// Reject frames with unknown keys.
    #[arg(long)]
    strict_schema: bool,
    #[arg(long, allow_negative_numbers = true)]
    damping: Option<f64>,
    /// Sim speed relative to wall clock; 0 runs unpaced.
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    /// Directory for report.json and trace.csv on shutdown.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Session log to replay.
    session: PathBuf,
    /// Scenario the session was recorded with (required unless --connect).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Speed multiplier for recorded timing; 0 means as fast as possible.
    #[arg(long, default_value_t = 0.0)]
    speed: f64,
    /// Re-publish inbound envelopes to a running bridge instead of
    /// simulating locally, e.g. ws://localhost:9090/bridge.
    #[arg(long)]
    connect: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long)]
    session: Option<PathBuf>,
}

fn main() -> ExitCode {
    let filter = EnvFilter::try_from_env("GAZE_DRIVE_LOG").unwrap_or_else(|_| EnvFilter::new("warn"));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();

    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Serve(a) => cmd_serve(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::ERROR)
        }
    }
}

fn finish(report: &EpisodeReport, damping: f64, out_dir: Option<&Path>) -> Result<u8> {
    let file = ReportFile::new(report, damping);
    if let Some(dir) = out_dir {
        output::write_outputs(dir, report, &file)?;
    }
    println!("{}", file.summary());
    Ok(if file.reached_goal { exit::GOAL } else { exit::TIMEOUT })
}

fn cmd_run(a: RunArgs) -> Result<u8> {
    let (cfg, script) = prepare(&a.scenario, &a.script, a.damping)?;
    let report = run_episode(&cfg, &script)?;
    finish(&report, cfg.params.damping, a.out_dir.as_deref())
}

fn cmd_sweep(a: SweepArgs) -> Result<u8> {
    gaze_drive::validate_dampings(&a.damping)?;
    let (cfg, script) = prepare(&a.scenario, &a.script, None)?;
    let result = sweep(&cfg, &script, &a.damping)?;
    let table = output::sweep_csv(&result.rows)?;
    print!("{table}");
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("{}", dir.display()))?;
        std::fs::write(dir.join(output::SWEEP_FILE), &table)?;
    }
    if let Some(e) = result.error {
        eprintln!("sweep aborted after {} of {} episodes; results above are partial", result.rows.len(), a.damping.len());
        return Err(e);
    }
    if output::strictly_increasing(&result.rows) {
        eprintln!("ordering: time_to_goal strictly increasing in damping order");
        Ok(exit::GOAL)
    } else {
        eprintln!("ordering: VIOLATED (time_to_goal not strictly increasing in damping order)");
        Ok(exit::ORDERING)
    }
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread().enable_all().build()?)
}

fn cmd_serve(a: ServeArgs) -> Result<u8> {
    let scenario = load_scenario(&a.scenario)?;
    let mut cfg = scenario.to_sim_config()?;
    if let Some(d) = a.damping {
        cfg.params.set_damping(d).with_context(|| format!("--damping {d}"))?;
    }
    let damping = cfg.params.damping;
    let rt = runtime()?;
    let outcome = rt.block_on(async {
        let addr = SocketAddr::new(a.bind, a.port);
        let listener = BridgeListener::bind(addr, DEFAULT_QUEUE_CAPACITY).await?;
        eprintln!("bridge listening on ws://{}/bridge", listener.local_addr());
        let opts = ServeOptions {
            record: a.record.clone(),
            strict_schema: a.strict_schema,
            speed: a.speed,
            max_ticks: None,
        };
        serve(cfg, listener, opts, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
    })?;
    eprintln!(
        "shutdown after {} ticks: {} envelopes routed, {} rejected, {} recorded",
        outcome.ticks, outcome.stats.routed, outcome.stats.rejected, outcome.stats.recorded
    );
    finish(&outcome.report, damping, a.out_dir.as_deref())?;
    Ok(exit::GOAL)
}

fn cmd_replay(a: ReplayArgs) -> Result<u8> {
    let events = load_session(&a.session).with_context(|| format!("{}", a.session.display()))?;
    if let Some(url) = &a.connect {
        let replay = Replay::new(events, a.speed)?;
        let rt = runtime()?;
        let sent = rt.block_on(async {
            let mut client = BridgeClient::connect(url).await?;
            let start = tokio::time::Instant::now();
            for (offset, env) in replay.schedule() {
                tokio::time::sleep_until(start + offset).await;
                client.send(env).await?;
            }
            client.close().await?;
            anyhow::Ok(replay.len())
        })?;
        println!("replayed {sent} envelopes to {url}");
        return Ok(exit::GOAL);
    }
    let Some(scenario) = &a.scenario else {
        bail!("--scenario is required to replay into the local simulation");
    };
    if !(a.speed.is_finite() && a.speed >= 0.0) {
        bail!("--speed must be a finite number >= 0, got {}", a.speed);
    }
    let cfg = load_scenario(scenario)?.to_sim_config()?;
    let inputs = session_inputs(&events, cfg.dt)?;
    if a.speed > 0.0 {
        std::thread::sleep(std::time::Duration::from_secs_f64(inputs.ticks as f64 * cfg.dt / a.speed));
    }
    let report = replay_episode(&cfg, &inputs)?;
    finish(&report, cfg.params.damping, a.out_dir.as_deref())
}

fn cmd_validate(a: ValidateArgs) -> Result<u8> {
    if a.scenario.is_none() && a.script.is_none() && a.session.is_none() {
        bail!("nothing to validate; pass --scenario, --script and/or --session");
    }
    if let Some(p) = &a.scenario {
        load_scenario(p)?;
        println!("{}: ok", p.display());
    }
    if let Some(p) = &a.script {
        let script = load_script(p)?;
        println!("{}: ok ({} records)", p.display(), script.events.len());
    }
    if let Some(p) = &a.session {
        let events = load_session(p).with_context(|| format!("{}", p.display()))?;
        println!("{}: ok ({} events)", p.display(), events.len());
    }
    Ok(exit::GOAL)
}
