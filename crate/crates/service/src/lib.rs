//! Experiment service: serves stimulus sets, runs participant sessions, and
//! exports per-pattern judgment tallies.
//!
//! Layout of the data directory:
//!
//! - `sets/*.json`: stimulus sets, loaded at startup
//! - `events.jsonl`: append-only event log, the source of truth
//! - `snapshot.json`: state at the last clean shutdown

pub mod api;
pub mod export;
pub mod store;

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use thiserror::Error;
use tokio::net::TcpListener;

pub use api::router;
pub use export::{AggregateParseError, AggregateTable};
pub use store::{Choice, ParticipantMeta, RequestError, SessionView, Store, StoreError};

#[derive(Debug, Clone)]
pub struct Config {
    pub addr: SocketAddr,
    pub data_dir: PathBuf,
    pub master_seed: u64,
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

/// Serves until `shutdown` resolves, then writes a snapshot.
pub async fn run(
    listener: TcpListener,
    store: Arc<Store>,
    static_dir: Option<PathBuf>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServeError> {
    let app = router(store.clone(), static_dir.as_deref());
    axum::serve(listener, app)
        .with_graceful_shutdown(shutdown)
        .await?;
    store.snapshot()?;
    Ok(())
}

/// Opens the store, binds `config.addr`, and serves until Ctrl-C.
pub async fn serve(config: Config) -> Result<(), ServeError> {
    let store = Arc::new(Store::open(&config.data_dir, config.master_seed)?);
    let listener = TcpListener::bind(config.addr)
        .await
        .map_err(|source| ServeError::Bind {
            addr: config.addr,
            source,
        })?;
    eprintln!(
        "listening on http://{} with {} stimulus set(s)",
        listener.local_addr()?,
        store.set_ids().count()
    );
    run(listener, store, config.static_dir, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
