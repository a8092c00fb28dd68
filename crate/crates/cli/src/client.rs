//! Replica side of replication over HTTP.

use std::sync::Arc;
use std::time::Duration;

use pndb_core::{sync, Store};

use crate::json::ErrorBody;

#[derive(Debug, thiserror::Error)]
pub enum SyncError {
    #[error("request to master failed: {0}")]
    Http(#[from] reqwest::Error),
    #[error("master answered {status}: {code}: {message}")]
    Remote { status: u16, code: String, message: String },
    #[error(transparent)]
    Store(#[from] pndb_core::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyncOutcome {
    pub from_seq: u64,
    pub to_seq: u64,
}

/// Fetches everything the master committed after the replica's seq and
/// applies it.
pub async fn sync_once(http: &reqwest::Client, master_url: &str, replica: &Arc<Store>) -> Result<SyncOutcome, SyncError> {
    let from_seq = replica.current_seq();
    let url = format!("{}/api/sync/changes?since={from_seq}", master_url.trim_end_matches('/'));
    let resp = http.get(url).send().await?;
    let status = resp.status();
    let bytes = resp.bytes().await?;
    if !status.is_success() {
        let body: ErrorBody = serde_json::from_slice(&bytes).unwrap_or_else(|_| ErrorBody {
            error: "Http".into(),
            message: String::from_utf8_lossy(&bytes).into_owned(),
        });
        return Err(SyncError::Remote {
            status: status.as_u16(),
            code: body.error,
            message: body.message,
        });
    }
    let store = Arc::clone(replica);
    let to_seq = tokio::task::spawn_blocking(move || sync::apply_changes(&store, &bytes))
        .await
        .expect("apply task panicked")?;
    Ok(SyncOutcome { from_seq, to_seq })
}

/// Pulls from the master every `interval` until the task is dropped.
pub async fn sync_loop(replica: Arc<Store>, master_url: String, interval: Duration) {
    let http = reqwest::Client::new();
    let mut tick = tokio::time::interval(interval);
    tick.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        tick.tick().await;
        match sync_once(&http, &master_url, &replica).await {
            Ok(o) if o.to_seq > o.from_seq => {
                tracing::info!(from = o.from_seq, to = o.to_seq, "applied changes from master")
            }
            Ok(_) => tracing::debug!("replica up to date"),
            Err(e) => tracing::warn!(error = %e, "sync with {master_url} failed"),
        }
    }
}
