use std::fs;
use std::io::{self, IsTerminal, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use echo_core::catalog::{annotate_asset, lint, CatalogFile, HashNgramEmbedder, HASH_NGRAM_ID};
use echo_core::engine::{LogicalClock, Workbench};
use echo_core::pipeline::Provider;
use echo_core::{fixtures, Catalog, Embedder, SceneGraph, SceneSnapshot};
use echo_studio::ablate::{self, CellProvider, Grid};
use echo_studio::config::{ProviderConfig, ServiceConfig};
use echo_studio::provider::{build_provider, ProviderChoice, RecordingProvider, Transcript};
use echo_studio::script::{failed_entries, parse_script, Runner, ScriptErrorKind};
use echo_studio::service::{self, AppState, ServiceOptions};
use echo_studio::store::Store;

/// Exit codes shared by every command.
mod exit {
    pub const FAILED_ENTRY: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const UNKNOWN_ID: u8 = 3;
    pub const RUNTIME: u8 = 4;
}

#[derive(Parser)]
#[command(
    name = "echo",
    version,
    about = "AI-assisted scene editing: service, catalog tools, scripts and ablations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ProviderArgs {
    /// `mock`, `replay:<path>` or `external`.
    #[arg(long)]
    provider: Option<ProviderChoice>,
    /// Provider settings (TOML): mock rules, endpoint, model, timeout.
    #[arg(long)]
    provider_config: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct CatalogArg {
    /// Catalog JSON; the bundled fixture catalog when omitted.
    #[arg(long)]
    catalog: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Overrides `bind` from the config.
        #[arg(long)]
        bind: Option<SocketAddr>,
        #[command(flatten)]
        provider: ProviderArgs,
    },
    /// Labeling workflows.
    Catalog {
        #[command(subcommand)]
        command: CatalogCommand,
    },
    /// Execute a JSON script of session steps and print the final scene.
    RunScript {
        file: PathBuf,
        /// Starting scene (document or parameter list); the seed room otherwise.
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Exit 0 even when entries end up Failed.
        #[arg(long)]
        lenient: bool,
        /// Write every provider call as JSON lines.
        #[arg(long)]
        transcript_out: Option<PathBuf>,
        /// Write sessions and the operation log as JSON.
        #[arg(long)]
        state_out: Option<PathBuf>,
        #[command(flatten)]
        provider: ProviderArgs,
        #[command(flatten)]
        catalog: CatalogArg,
    },
    /// Run every instruction under every condition from the seed room.
    Ablate {
        /// JSON list of instructions; the nine study instructions otherwise.
        #[arg(long)]
        instructions: Option<PathBuf>,
        #[arg(long, default_value = "V+OP+S,V+S,V+OP,OP+S")]
        conditions: String,
        #[arg(long)]
        out: PathBuf,
        /// Cells run concurrently.
        #[arg(long, default_value_t = 4)]
        jobs: usize,
        /// With `replay:<dir>`, each cell replays `<dir>/{condition}/{idx}/transcript.jsonl`.
        #[command(flatten)]
        provider: ProviderArgs,
        #[command(flatten)]
        catalog: CatalogArg,
    },
}

#[derive(Subcommand)]
enum CatalogCommand {
    /// Label every image in a directory and write a catalog.
    Build {
        #[arg(long)]
        thumbnails: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        provider: ProviderArgs,
    },
    /// Flag empty descriptions, banned categories and duplicates.
    Lint {
        #[command(flatten)]
        catalog: CatalogArg,
    },
    /// Rank assets by description similarity.
    Search {
        #[arg(long)]
        category: Option<String>,
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = 5)]
        limit: usize,
        #[command(flatten)]
        catalog: CatalogArg,
    },
}

struct Fail {
    code: u8,
    message: String,
}

impl Fail {
    fn usage(message: impl std::fmt::Display) -> Self {
        Self {
            code: exit::USAGE,
            message: message.to_string(),
        }
    }

    fn runtime(message: impl std::fmt::Display) -> Self {
        Self {
            code: exit::RUNTIME,
            message: message.to_string(),
        }
    }
}

type CmdResult = Result<u8, Fail>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let to_stdout = matches!(cli.command, Command::Serve { .. });
    init_tracing(to_stdout);
    let result = match cli.command {
        Command::Serve {
            config,
            data_dir,
            bind,
            provider,
        } => serve(config, data_dir, bind, provider),
        Command::Catalog { command } => catalog(command),
        Command::RunScript {
            file,
            scene,
            lenient,
            transcript_out,
            state_out,
            provider,
            catalog,
        } => run_script(
            &file,
            scene,
            lenient,
            transcript_out,
            state_out,
            provider,
            catalog,
        ),
        Command::Ablate {
            instructions,
            conditions,
            out,
            jobs,
            provider,
            catalog,
        } => run_ablate(instructions, &conditions, &out, jobs, provider, catalog),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("echo: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn init_tracing(to_stdout: bool) {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| {
        tracing_subscriber::EnvFilter::new(if to_stdout { "info" } else { "warn" })
    });
    let builder = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_target(false);
    if to_stdout {
        builder
            .with_ansi(io::stdout().is_terminal())
            .with_writer(io::stdout)
            .init();
    } else {
        builder
            .with_ansi(io::stderr().is_terminal())
            .with_writer(io::stderr)
            .init();
    }
}

fn provider_config(path: Option<&Path>) -> Result<ProviderConfig, Fail> {
    match path {
        Some(p) => ProviderConfig::from_file(p).map_err(Fail::usage),
        None => Ok(ProviderConfig::default()),
    }
}

fn make_provider(args: &ProviderArgs) -> Result<Arc<dyn Provider>, Fail> {
    let cfg = provider_config(args.provider_config.as_deref())?;
    let choice = match &args.provider {
        Some(c) => c.clone(),
        None => ProviderChoice::from_config(&cfg).map_err(Fail::usage)?,
    };
    build_provider(&choice, &cfg).map_err(Fail::usage)
}

fn load_catalog(path: Option<&Path>) -> Result<Catalog, Fail> {
    match path {
        None => fixtures::catalog().map_err(Fail::runtime),
        Some(p) => {
            let text =
                fs::read_to_string(p).map_err(|e| Fail::usage(format!("{}: {e}", p.display())))?;
            Catalog::from_json(&text).map_err(|e| Fail::usage(format!("{}: {e}", p.display())))
        }
    }
}

fn serve(
    config: Option<PathBuf>,
    data_dir: Option<PathBuf>,
    bind: Option<SocketAddr>,
    provider: ProviderArgs,
) -> CmdResult {
    let mut cfg = match &config {
        Some(p) => ServiceConfig::from_file(p).map_err(Fail::usage)?,
        None => ServiceConfig::default(),
    };
    if let Some(dir) = data_dir {
        cfg.data_dir = dir;
    }
    let bind = match bind {
        Some(b) => b,
        None => cfg
            .bind
            .parse()
            .map_err(|e| Fail::usage(format!("bind {:?}: {e}", cfg.bind)))?,
    };
    let provider = make_provider(&ProviderArgs {
        provider: provider.provider,
        provider_config: provider.provider_config.or(cfg.provider_config.clone()),
    })?;
    let catalog = load_catalog(cfg.catalog.as_deref())?;
    let store = Store::open(&cfg.data_dir).map_err(Fail::runtime)?;
    let (state, recovery) = AppState::recover(ServiceOptions {
        store,
        provider,
        catalog,
        generation_delay: Duration::from_millis(cfg.mock_delay_ms),
        admin_token: cfg.admin_token.clone(),
    })
    .map_err(|e| Fail::runtime(format!("recovery failed: {e}")))?;
    tracing::info!(
        scenes = recovery.scenes,
        demoted = recovery.demoted,
        repaired = ?recovery.repaired,
        data_dir = %cfg.data_dir.display(),
        "recovered"
    );

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(Fail::runtime)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(bind)
            .await
            .map_err(|e| Fail::runtime(format!("bind {bind}: {e}")))?;
        let addr = listener.local_addr().map_err(Fail::runtime)?;
        println!("listening on http://{addr}");
        io::stdout().flush().ok();
        axum::serve(listener, service::router(state))
            .with_graceful_shutdown(async {
                tokio::signal::ctrl_c().await.ok();
            })
            .await
            .map_err(Fail::runtime)?;
        Ok(0)
    })
}

fn catalog(command: CatalogCommand) -> CmdResult {
    match command {
        CatalogCommand::Build {
            thumbnails,
            out,
            provider,
        } => {
            let provider = make_provider(&provider)?;
            let mut files: Vec<PathBuf> = fs::read_dir(&thumbnails)
                .map_err(|e| Fail::usage(format!("{}: {e}", thumbnails.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            files.sort();
            let embedder = HashNgramEmbedder;
            let mut records = Vec::new();
            for path in &files {
                let stem = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or_default()
                    .to_string();
                let bytes = fs::read(path)
                    .map_err(|e| Fail::runtime(format!("{}: {e}", path.display())))?;
                let mut record = annotate_asset(&stem, &bytes, provider.as_ref())
                    .map_err(|e| Fail::runtime(format!("{}: {e}", path.display())))?;
                record.embedding =
                    Some(embedder.embed(&record.description).map_err(Fail::runtime)?);
                record.thumbnail_ref = path.file_name().map(|n| n.to_string_lossy().into_owned());
                records.push(record);
            }
            let catalog =
                Catalog::new(records, Some(HASH_NGRAM_ID.to_string())).map_err(Fail::runtime)?;
            let json = catalog.to_json();
            match out {
                Some(p) => fs::write(&p, json + "\n")
                    .map_err(|e| Fail::runtime(format!("{}: {e}", p.display())))?,
                None => println!("{json}"),
            }
            eprintln!("labeled {} asset(s)", files.len());
            Ok(0)
        }
        CatalogCommand::Lint { catalog } => {
            let text = match &catalog.catalog {
                Some(p) => fs::read_to_string(p)
                    .map_err(|e| Fail::usage(format!("{}: {e}", p.display())))?,
                None => fixtures::CATALOG_JSON.to_string(),
            };
            let file: CatalogFile = serde_json::from_str(&text).map_err(Fail::usage)?;
            let issues = lint(&file);
            for i in &issues {
                println!("{}\t{}\t{}", i.asset_id, i.kind, i.message);
            }
            eprintln!(
                "{} record(s), {} issue(s)",
                file.records.len(),
                issues.len()
            );
            Ok(if issues.is_empty() {
                0
            } else {
                exit::FAILED_ENTRY
            })
        }
        CatalogCommand::Search {
            category,
            query,
            limit,
            catalog,
        } => {
            let catalog = load_catalog(catalog.catalog.as_deref())?;
            let hits = catalog
                .search(&HashNgramEmbedder, category.as_deref(), &query)
                .map_err(|e| Fail {
                    code: exit::UNKNOWN_ID,
                    message: e.to_string(),
                })?;
            for (rank, h) in hits.iter().take(limit).enumerate() {
                println!("{}\t{}\t{:.6}", rank + 1, h.asset_id, h.score);
            }
            Ok(0)
        }
    }
}

/// A scene from a document (`{...}`) or a parameter list (`[...]`).
fn load_scene(path: &Path) -> Result<SceneGraph, Fail> {
    let text =
        fs::read_to_string(path).map_err(|e| Fail::usage(format!("{}: {e}", path.display())))?;
    let parsed = if text.trim_start().starts_with('[') {
        let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scene");
        SceneGraph::from_parameters(id, &text)
    } else {
        SceneSnapshot::from_json(&text).map(|s| s.to_scene())
    };
    parsed.map_err(|e| Fail::usage(format!("{}: {e}", path.display())))
}

fn run_script(
    file: &Path,
    scene: Option<PathBuf>,
    lenient: bool,
    transcript_out: Option<PathBuf>,
    state_out: Option<PathBuf>,
    provider: ProviderArgs,
    catalog: CatalogArg,
) -> CmdResult {
    let text =
        fs::read_to_string(file).map_err(|e| Fail::usage(format!("{}: {e}", file.display())))?;
    let steps = parse_script(&text).map_err(|e| Fail::usage(format!("{}: {e}", file.display())))?;
    let scene = match &scene {
        Some(p) => load_scene(p)?,
        None => fixtures::seed_scene("seed").map_err(Fail::runtime)?,
    };
    let catalog = load_catalog(catalog.catalog.as_deref())?;
    let transcript = Arc::new(Transcript::new());
    let provider = RecordingProvider::new(
        make_provider(&provider)?,
        Arc::clone(&transcript),
        LogicalClock::starting_at(1),
    );
    let mut wb = Workbench::new(scene).with_clock(LogicalClock::starting_at(1));
    let runner = Runner {
        provider: &provider,
        catalog: &catalog,
        embedder: &HashNgramEmbedder,
    };
    let outcome = runner.run(&mut wb, &steps);

    if let Some(p) = &transcript_out {
        transcript.write_jsonl(p).map_err(Fail::runtime)?;
    }
    if let Some(p) = &state_out {
        let state = serde_json::json!({ "sessions": wb.sessions(), "log": wb.log() });
        fs::write(
            p,
            serde_json::to_vec_pretty(&state).expect("state serializes"),
        )
        .map_err(|e| Fail::runtime(format!("{}: {e}", p.display())))?;
    }
    if let Err(e) = outcome {
        let code = match e.kind {
            ScriptErrorKind::Unknown => exit::UNKNOWN_ID,
            ScriptErrorKind::Invalid => exit::USAGE,
            ScriptErrorKind::Runtime => exit::RUNTIME,
        };
        return Err(Fail {
            code,
            message: e.to_string(),
        });
    }
    let _ = writeln!(io::stdout(), "{}", wb.scene().snapshot().to_json());
    let failed = failed_entries(&wb);
    for (sid, sug) in &failed {
        eprintln!("failed: {sid}/{sug}");
    }
    Ok(if failed.is_empty() || lenient {
        0
    } else {
        exit::FAILED_ENTRY
    })
}

fn run_ablate(
    instructions: Option<PathBuf>,
    conditions: &str,
    out: &Path,
    jobs: usize,
    provider: ProviderArgs,
    catalog: CatalogArg,
) -> CmdResult {
    let instructions = match &instructions {
        Some(p) => {
            let text =
                fs::read_to_string(p).map_err(|e| Fail::usage(format!("{}: {e}", p.display())))?;
            ablate::parse_instructions(&text)
                .map_err(|e| Fail::usage(format!("{}: {e}", p.display())))?
        }
        None => fixtures::instructions(),
    };
    let conditions = ablate::parse_conditions(conditions).map_err(Fail::usage)?;
    let cell_provider = match &provider.provider {
        Some(ProviderChoice::Replay(dir)) if dir.is_dir() => CellProvider::ReplayDir(dir.clone()),
        _ => CellProvider::Shared(make_provider(&provider)?),
    };
    let catalog = load_catalog(catalog.catalog.as_deref())?;
    let grid = Grid {
        instructions: &instructions,
        conditions: &conditions,
        provider: cell_provider,
        catalog: &catalog,
        embedder: &HashNgramEmbedder,
        jobs,
    };
    let reports = grid.run(out).map_err(Fail::runtime)?;
    for r in &reports {
        println!(
            "{}\t{}\tsuggestions={}\tapplied={}\tfailed={}\trequests={}",
            r.condition, r.idx, r.suggestions, r.applied, r.failed, r.requests
        );
    }
    eprintln!("{} cell(s) written to {}", reports.len(), out.display());
    Ok(0)
}
