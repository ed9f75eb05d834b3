//! Websocket frame streaming.
//!
//! Each connection has a reader task, a render task and a writer task. The
//! reader keeps at most one pending request: a newer request replaces it and
//! the replaced id is answered with a `dropped` notice. Renders run on one
//! rayon pool shared by all connections.

mod golden;
mod protocol;

pub use golden::{orbit_golden_json, orbit_golden_vectors, GoldenVector};
pub use protocol::{
    ClientMessage, FrameHeader, Notice, Quality, RenderRequest, FLAG_PREVIEW, FRAME_HEADER_LEN, FRAME_MAGIC, MAX_DIM,
    MIN_DIM,
};

use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::{mpsc, Notify};
use tower_http::services::ServeDir;

use crate::cache::{DirectionCache, PositionCache};
use crate::error::{Error, Result};
use crate::mesher::Bvh;
use crate::renderer::{matrix_from_row_major, render, CachedSource, Camera, FrameBuffer, RenderConfig};

/// Far bound for request cameras.
pub const FAR: f64 = 1e3;

/// Read-only state shared by every connection.
pub struct ServiceState {
    pos: PositionCache,
    dir: DirectionCache,
    bvh: Option<Bvh>,
    cfg: RenderConfig,
    pool: rayon::ThreadPool,
}

impl ServiceState {
    pub fn new(
        pos: PositionCache,
        dir: DirectionCache,
        bvh: Option<Bvh>,
        cfg: RenderConfig,
        workers: Option<usize>,
    ) -> Result<Self> {
        CachedSource::new(&pos, &dir)?;
        cfg.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.unwrap_or(0))
            .thread_name(|i| format!("render-{i}"))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        Ok(ServiceState {
            pos,
            dir,
            bvh,
            cfg,
            pool,
        })
    }

    pub fn camera(req: &RenderRequest) -> Result<Camera> {
        let (w, h) = req.render_size();
        Camera::new(matrix_from_row_major(&req.matrix), req.fov, w, h, 0.0, FAR)
    }

    /// The frame a request produces; identical to what goes on the wire.
    pub fn render_request(&self, req: &RenderRequest) -> Result<FrameBuffer> {
        req.validate()?;
        let camera = Self::camera(req)?;
        let source = CachedSource::new(&self.pos, &self.dir)?;
        self.pool
            .install(|| render(&camera, &source, self.bvh.as_ref(), &self.cfg))
    }
}

pub fn router(state: Arc<ServiceState>, assets: Option<PathBuf>) -> Router {
    let app = Router::new().route("/ws", get(upgrade)).with_state(state);
    match assets {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener, state: Arc<ServiceState>, assets: Option<PathBuf>) -> std::io::Result<()> {
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state, assets)).await
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<Arc<ServiceState>>) -> Response {
    ws.on_upgrade(move |socket| connection(socket, state))
}

#[derive(Default)]
struct Slot {
    pending: Mutex<Option<RenderRequest>>,
    closed: std::sync::atomic::AtomicBool,
    notify: Notify,
}

fn notice(n: &Notice) -> Message {
    Message::Text(serde_json::to_string(n).expect("notices serialize").into())
}

async fn connection(socket: WebSocket, state: Arc<ServiceState>) {
    let (mut sink, mut stream) = socket.split();
    let (tx, mut rx) = mpsc::channel::<Message>(8);
    let writer = tokio::spawn(async move {
        while let Some(m) = rx.recv().await {
            if sink.send(m).await.is_err() {
                break;
            }
        }
    });
    let slot = Arc::new(Slot::default());
    let worker = tokio::spawn(render_loop(state, slot.clone(), tx.clone()));

    while let Some(Ok(msg)) = stream.next().await {
        let reply = match msg {
            Message::Text(text) => match serde_json::from_str::<ClientMessage>(&text) {
                Ok(ClientMessage::Render(req)) => {
                    match req.validate().and_then(|_| ServiceState::camera(&req).map(drop)) {
                        Ok(()) => {
                            let id = req.id;
                            let replaced = slot.pending.lock().unwrap().replace(req);
                            slot.notify.notify_one();
                            replaced.map(|old| Notice::Dropped {
                                id: old.id,
                                superseded_by: id,
                            })
                        }
                        Err(e) => Some(Notice::Error {
                            id: Some(req.id),
                            reason: e.to_string(),
                        }),
                    }
                }
                Err(e) => Some(Notice::Error {
                    id: None,
                    reason: format!("malformed message: {e}"),
                }),
            },
            Message::Binary(_) => Some(Notice::Error {
                id: None,
                reason: "binary messages are not accepted".into(),
            }),
            Message::Close(_) => break,
            _ => None,
        };
        if let Some(n) = reply {
            if tx.send(notice(&n)).await.is_err() {
                break;
            }
        }
    }
    slot.closed.store(true, std::sync::atomic::Ordering::SeqCst);
    slot.notify.notify_one();
    let _ = worker.await;
    drop(tx);
    let _ = writer.await;
}

async fn render_loop(state: Arc<ServiceState>, slot: Arc<Slot>, tx: mpsc::Sender<Message>) {
    loop {
        let req = loop {
            if let Some(r) = slot.pending.lock().unwrap().take() {
                break r;
            }
            if slot.closed.load(std::sync::atomic::Ordering::SeqCst) {
                return;
            }
            slot.notify.notified().await;
        };
        let id = req.id;
        let st = state.clone();
        let result = tokio::task::spawn_blocking(move || {
            let start = Instant::now();
            st.render_request(&req).map(|fb| {
                let micros = start.elapsed().as_micros().min(u32::MAX as u128) as u32;
                let header = FrameHeader {
                    id,
                    width: fb.width() as u16,
                    height: fb.height() as u16,
                    micros,
                    flags: if req.quality == Quality::Preview {
                        FLAG_PREVIEW
                    } else {
                        0
                    },
                };
                header.encode(&fb.to_rgba8())
            })
        })
        .await;
        let msg = match result {
            Ok(Ok(bytes)) => Message::Binary(bytes.into()),
            Ok(Err(e)) => notice(&Notice::Error {
                id: Some(id),
                reason: e.to_string(),
            }),
            Err(e) => notice(&Notice::Error {
                id: Some(id),
                reason: format!("render task failed: {e}"),
            }),
        };
        if tx.send(msg).await.is_err() {
            return;
        }
    }
}
