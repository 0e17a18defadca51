//! HTTP front end for the prepub engine.
//!
//! One process owns one store. Requests are authenticated with bearer
//! tokens; every write is journaled before the response goes out.

mod api;
mod app;
mod auth;
mod config;
mod error;
mod fetch;
mod webhook;

use std::future::Future;
use std::net::SocketAddr;

use thiserror::Error;

pub use api::router;
pub use app::{App, Principal, Shared};
pub use config::{ServiceConfig, WebhookConfig};
pub use error::ApiError;
pub use fetch::{AnyFetcher, HttpFetcher};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error(transparent)]
    Storage(#[from] prepub_core::StoreError),
    #[error("server: {0}")]
    Server(std::io::Error),
}

/// Serves until `shutdown` resolves, then writes a final snapshot.
/// `on_bound` receives the actual address, useful with port 0.
pub async fn serve(
    config: ServiceConfig,
    on_bound: impl FnOnce(SocketAddr),
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServeError> {
    let addr = config.bind;
    let app = App::open(config)?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::Bind { addr, source })?;
    let local = listener.local_addr().map_err(|source| ServeError::Bind { addr, source })?;
    log::info!("listening on {local}");
    app.redeliver_pending();
    on_bound(local);
    axum::serve(listener, router(app.clone()))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(ServeError::Server)?;
    app.snapshot()?;
    log::info!("snapshot written, shutting down");
    Ok(())
}

/// Resolves on Ctrl-C or, on Unix, SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}
