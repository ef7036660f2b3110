use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use litmap_core::index::{build_index, IndexSummary};
use litmap_core::BuildConfig;
use litmap_server::{serve, AppState};

#[derive(Parser)]
#[command(name = "litmap", version, about = "Build and serve a literature exploration index")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write an index file.
    Build {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        gazetteer: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2017)]
        min_year: i32,
        #[arg(long, default_value_t = 2)]
        min_collocation: u32,
        #[arg(long, default_value_t = 120, value_parser = clap::value_parser!(u64).range(1..))]
        max_cluster_size: u64,
        #[arg(long, default_value_t = 3)]
        k_link: usize,
        /// Precomputed topic vectors, one `topic<TAB>v1,...,vD` per line.
        #[arg(long)]
        embedding_file: Option<PathBuf>,
    },
    /// Serve an index file over HTTP.
    Serve {
        #[arg(long)]
        index: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Build {
            corpus,
            gazetteer,
            out,
            min_year,
            min_collocation,
            max_cluster_size,
            k_link,
            embedding_file,
        } => {
            let config = BuildConfig {
                min_year,
                min_collocation,
                max_cluster_size: max_cluster_size as usize,
                k_link,
                corpus_path: Some(corpus.display().to_string()),
                gazetteer_path: Some(gazetteer.display().to_string()),
                embedding_file: embedding_file.map(|p| p.display().to_string()),
                ..BuildConfig::default()
            };
            let snapshot = build_index(&corpus, &gazetteer, &config).map_err(|e| e.to_string())?;
            snapshot.save(&out).map_err(|e| e.to_string())?;
            let summary = serde_json::to_string_pretty(&IndexSummary::from(&snapshot)).expect("summary serializes");
            println!("{summary}");
            println!("wrote {} ({})", out.display(), snapshot.digest());
            Ok(())
        }
        Command::Serve { index, port, host } => {
            let state = AppState::load(&index).map_err(|e| format!("{}: {e}", index.display()))?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            runtime
                .block_on(serve(state, SocketAddr::new(host, port)))
                .map_err(|e| format!("cannot serve on {host}:{port}: {e}"))
        }
    }
}
