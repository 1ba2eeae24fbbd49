use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use seglab_core::config::ToolConfig;
use seglab_gateway::{commands, router_with_ui, AppState};

#[derive(Parser)]
#[command(name = "seglab", version, about = "Annotation workbench for robot action segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the HTTP API (and the UI, with --ui-dir)
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 8321)]
        port: u16,
        #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
        host: IpAddr,
        /// Directory with the built UI
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
    /// Summarize a dataset or one episode
    Inspect {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        episode: Option<String>,
    },
    /// Agreement and boundary distances between two annotation files
    Metrics {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Count label and success flag together
        #[arg(long)]
        include_outcome: bool,
        /// Take episode durations from this dataset instead of the last segment end
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Average two experts' boundaries into a ground-truth file
    MergeGt {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
    /// Check an annotation file against the schema
    Validate { file: PathBuf },
}

fn load_config(path: &std::path::Path) -> Result<ToolConfig> {
    ToolConfig::load(path).with_context(|| format!("loading config {}", path.display()))
}

async fn serve(config: PathBuf, host: IpAddr, port: u16, ui_dir: Option<PathBuf>) -> Result<()> {
    let cfg = load_config(&config)?;
    let state = tokio::task::spawn_blocking(move || AppState::open(cfg)).await??;
    for w in state.dataset.warnings() {
        eprintln!("warning: {w}");
    }
    let addr = SocketAddr::new(host, port);
    let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
    let n = state.dataset.episodes().len();
    eprintln!("serving {n} episode{} on http://{addr}", if n == 1 { "" } else { "s" });
    axum::serve(listener, router_with_ui(state, ui_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Serve { config, port, host, ui_dir } => {
            tokio::runtime::Runtime::new()?.block_on(serve(config, host, port, ui_dir))?;
        }
        Command::Inspect { config, episode } => {
            print!("{}", commands::inspect(load_config(&config)?, episode.as_deref())?);
        }
        Command::Metrics { a, b, include_outcome, config, json } => {
            let durations = match config {
                Some(c) => {
                    let ids = seglab_core::annotation::AnnotationFile::load(&a)?.episodes.into_keys();
                    Some(commands::dataset_durations(load_config(&c)?, ids)?)
                }
                None => None,
            };
            let report = commands::metrics(&a, &b, include_outcome, durations.as_ref())?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.to_text());
            }
        }
        Command::MergeGt { a, b, out } => {
            let merged = commands::merge_gt(&a, &b, &out)?;
            eprintln!("wrote {} episodes to {}", merged.episodes.len(), out.display());
        }
        Command::Validate { file } => {
            let problems = commands::validate(&file)?;
            if problems.is_empty() {
                println!("{}: ok", file.display());
            } else {
                for p in &problems {
                    println!("{}: {p}", file.display());
                }
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
