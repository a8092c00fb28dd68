//! HTTP service and replication client for `pndb`.

pub mod api;
pub mod client;
pub mod json;

use std::future::Future;
use std::sync::Arc;
use std::time::Duration;

use pndb_core::Store;
use tokio::net::TcpListener;

pub use api::router;

/// Master to follow when serving a replica.
#[derive(Debug, Clone)]
pub struct ReplicaOf {
    pub master_url: String,
    pub interval: Duration,
}

/// Serves the API on `listener` until `shutdown` resolves. With
/// `replica_of`, a background task keeps pulling the master's changes.
pub async fn serve(
    listener: TcpListener,
    store: Arc<Store>,
    replica_of: Option<ReplicaOf>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let follower = replica_of.map(|r| tokio::spawn(client::sync_loop(Arc::clone(&store), r.master_url, r.interval)));
    let result = axum::serve(listener, router(store)).with_graceful_shutdown(shutdown).await;
    if let Some(task) = follower {
        task.abort();
    }
    result
}
