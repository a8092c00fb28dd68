use std::io::{Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};
use pndb_cli::api::object_view;
use pndb_cli::client::{self, SyncError};
use pndb_cli::ReplicaOf;
use pndb_core::exchange::{self, ImportReport};
use pndb_core::{ScopePath, Store, StoreMode, Timestamp, HEAD};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "pndb", version, about = "Versioned parameter database")]
struct Cli {
    /// Store directory.
    #[arg(long, global = true, env = "PNDB_STORE")]
    store: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create an empty store.
    Init {
        /// Create a replica that only accepts changes from a master.
        #[arg(long)]
        replica: bool,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        listen: SocketAddr,
        /// Follow this master; the store is created as a replica if missing.
        #[arg(long)]
        replica_of: Option<String>,
        /// Seconds between pulls from the master.
        #[arg(long, default_value_t = 5)]
        sync_interval: u64,
    },
    /// Import a pipe-separated table (`-` reads stdin).
    ImportTable { file: PathBuf },
    /// Import an XML document (`-` reads stdin).
    ImportXml { file: PathBuf },
    /// Print the XML export.
    ExportXml {
        #[arg(long)]
        scope: Option<String>,
    },
    /// Print one object revision.
    Get {
        class: String,
        instance: String,
        #[arg(long)]
        version: Option<u32>,
        /// View under this dictionary version.
        #[arg(long)]
        dict: Option<u32>,
        #[arg(long)]
        json: bool,
    },
    /// Store a file as a blob and print its literal.
    PutBlob { file: PathBuf },
    /// Create an IOV folder.
    CreateFolder {
        folder: String,
        #[arg(long, default_value = "")]
        description: String,
    },
    /// Append an open-ended entry to a folder's HEAD.
    IovStore {
        folder: String,
        #[arg(long)]
        since: u64,
        #[arg(long)]
        payload: String,
    },
    /// Print the payload valid at a timestamp.
    IovResolve {
        folder: String,
        #[arg(long, default_value = HEAD)]
        tag: String,
        #[arg(long)]
        at: u64,
    },
    /// Snapshot a folder's HEAD under a tag.
    Tag { folder: String, tag: String },
    /// Pull changes from a master into a replica (created if missing).
    Sync {
        #[arg(long)]
        from: String,
    },
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl From<pndb_core::Error> for Failure {
    fn from(e: pndb_core::Error) -> Self {
        Failure::Domain(format!("{}: {e}", e.code()))
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Domain(format!("Io: {e}"))
    }
}

impl From<SyncError> for Failure {
    fn from(e: SyncError) -> Self {
        match e {
            SyncError::Store(e) => e.into(),
            SyncError::Remote { code, message, .. } => Failure::Domain(format!("{code}: {message}")),
            other => Failure::Domain(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn read_input(file: &Path) -> Result<Vec<u8>, Failure> {
    if file.as_os_str() == "-" {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf)?;
        return Ok(buf);
    }
    std::fs::read(file).map_err(|e| Failure::Domain(format!("Io: {}: {e}", file.display())))
}

fn read_text(file: &Path) -> Result<String, Failure> {
    String::from_utf8(read_input(file)?).map_err(|_| Failure::Domain(format!("{} is not UTF-8", file.display())))
}

fn print_report(report: &ImportReport) {
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "imported {} collection(s), registered {} dictionary version(s)",
        report.collections_imported, report.dictionaries_registered
    );
}

fn runtime() -> Result<tokio::runtime::Runtime, Failure> {
    Ok(tokio::runtime::Runtime::new()?)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let root = cli
        .store
        .ok_or_else(|| Failure::Usage("--store <dir> (or PNDB_STORE) is required".into()))?;
    let open = || Store::open(&root).map_err(Failure::from);
    let read = || Store::open_read_only(&root).map_err(Failure::from);
    match cli.command {
        Command::Init { replica } => {
            let store = if replica {
                Store::create_replica(&root, None)?
            } else {
                Store::create(&root)?
            };
            let id: String = store.store_id().iter().map(|b| format!("{b:02x}")).collect();
            println!("initialized store {} ({id})", root.display());
        }
        Command::Serve {
            listen,
            replica_of,
            sync_interval,
        } => {
            let store = match &replica_of {
                Some(_) if !root.exists() => Store::create_replica(&root, None)?,
                _ => Store::open(&root)?,
            };
            if replica_of.is_some() && store.mode() != StoreMode::Replica {
                return Err(Failure::Domain(format!("{} is not a replica store", root.display())));
            }
            let follow = replica_of.map(|master_url| ReplicaOf {
                master_url,
                interval: Duration::from_secs(sync_interval.max(1)),
            });
            runtime()?.block_on(async move {
                let listener = tokio::net::TcpListener::bind(listen).await?;
                tracing::info!("listening on {}", listener.local_addr()?);
                let shutdown = async {
                    let _ = tokio::signal::ctrl_c().await;
                };
                pndb_cli::serve(listener, Arc::new(store), follow, shutdown).await
            })?;
        }
        Command::ImportTable { file } => {
            let text = read_text(&file)?;
            print_report(&exchange::import_table(&open()?, &text)?);
        }
        Command::ImportXml { file } => {
            let text = read_text(&file)?;
            print_report(&exchange::import_xml(&open()?, &text)?);
        }
        Command::ExportXml { scope } => {
            let scope = scope.map(|s| ScopePath::parse(&s)).transpose().map_err(pndb_core::Error::from)?;
            let doc = exchange::export_xml(&read()?, scope.as_ref())?;
            std::io::stdout().write_all(doc.as_bytes())?;
        }
        Command::Get {
            class,
            instance,
            version,
            dict,
            json,
        } => {
            let view = object_view(&read()?, &class, &instance, version, dict)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&view).expect("views serialize"));
            } else {
                println!("{} {} (scope {})", view.class, view.instance, view.scope);
                for p in &view.params {
                    println!(
                        "{}|{}|{}|{}|{}",
                        p.name,
                        p.ty,
                        p.value,
                        p.unit.as_deref().unwrap_or(""),
                        p.comment
                    );
                }
                for n in &view.notices {
                    eprintln!("note: {n}");
                }
            }
        }
        Command::PutBlob { file } => {
            let bytes = read_input(&file)?;
            let blob = open()?.put_blob(&bytes)?;
            println!("{}", blob.link());
        }
        Command::CreateFolder { folder, description } => {
            open()?.create_folder(&folder, &description)?;
            println!("created folder {folder}");
        }
        Command::IovStore { folder, since, payload } => {
            let entry = open()?.iov_store(&folder, Timestamp(since), &payload)?;
            println!("{} {}", entry.interval, entry.payload);
        }
        Command::IovResolve { folder, tag, at } => {
            println!("{}", read()?.iov_resolve(&folder, &tag, Timestamp(at))?);
        }
        Command::Tag { folder, tag } => {
            let n = open()?.tag_head(&folder, &tag)?;
            println!("tagged {n} entr{} of {folder} as {tag}", if n == 1 { "y" } else { "ies" });
        }
        Command::Sync { from } => {
            let store = if root.exists() {
                Store::open(&root)?
            } else {
                Store::create_replica(&root, None)?
            };
            if store.mode() != StoreMode::Replica {
                return Err(pndb_core::Error::LocalMutationConflict.into());
            }
            let store = Arc::new(store);
            let outcome = runtime()?.block_on(async {
                let http = reqwest::Client::new();
                client::sync_once(&http, &from, &store).await
            })?;
            println!(
                "synced {} change(s), now at seq {}",
                outcome.to_seq - outcome.from_seq,
                outcome.to_seq
            );
        }
    }
    Ok(())
}
