use std::sync::Arc;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

use radiance_cache::cache::{bake, BakeConfig};
use radiance_cache::field::FactorizedField;
use radiance_cache::mesher::{collision_mesh, Bvh};
use radiance_cache::renderer::{matrix_to_row_major, orbit_to_matrix, OrbitState, RenderConfig};
use radiance_cache::scene_io::catalog_entry;
use radiance_cache::service::{
    serve, FrameHeader, Notice, Quality, RenderRequest, ServiceState, FLAG_PREVIEW, FRAME_HEADER_LEN,
};

type Client = WebSocketStream<MaybeTlsStream<TcpStream>>;

fn state() -> Arc<ServiceState> {
    let entry = catalog_entry("lambert-sphere").unwrap();
    let field = FactorizedField::Analytic(entry.scene);
    let (pos, dir) = bake(
        &field,
        &entry.aabb,
        &BakeConfig {
            k: 32,
            ..BakeConfig::default()
        },
    )
    .unwrap();
    let bvh = Bvh::build(&collision_mesh(&pos, 1e-6).unwrap()).unwrap();
    Arc::new(ServiceState::new(pos, dir, Some(bvh), RenderConfig::default(), Some(1)).unwrap())
}

async fn start(assets: Option<std::path::PathBuf>) -> (Arc<ServiceState>, std::net::SocketAddr) {
    let st = state();
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve(listener, st.clone(), assets));
    (st, addr)
}

async fn connect(addr: std::net::SocketAddr) -> Client {
    tokio_tungstenite::connect_async(format!("ws://{addr}/ws"))
        .await
        .unwrap()
        .0
}

fn request(id: u64, size: u32) -> RenderRequest {
    let state = OrbitState {
        target: [0.0; 3],
        azimuth: 0.5,
        elevation: 0.35,
        distance: 3.0,
        fov: 0.8,
    };
    RenderRequest {
        id,
        matrix: matrix_to_row_major(&orbit_to_matrix(&state)),
        fov: state.fov,
        width: size,
        height: size,
        quality: Quality::Full,
    }
}

fn render_message(req: &RenderRequest) -> Message {
    let mut v = serde_json::to_value(req).unwrap();
    v["type"] = "render".into();
    Message::text(v.to_string())
}

enum Reply {
    Frame(FrameHeader, Vec<u8>),
    Notice(Notice),
}

async fn next(ws: &mut Client) -> Reply {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(60), ws.next())
            .await
            .expect("reply in time")
            .unwrap()
            .unwrap();
        match msg {
            Message::Binary(b) => {
                let (h, px) = FrameHeader::decode(&b).unwrap();
                return Reply::Frame(h, px.to_vec());
            }
            Message::Text(t) => return Reply::Notice(serde_json::from_str(&t).unwrap()),
            _ => continue,
        }
    }
}

async fn frame(ws: &mut Client) -> (FrameHeader, Vec<u8>) {
    match next(ws).await {
        Reply::Frame(h, p) => (h, p),
        Reply::Notice(n) => panic!("expected a frame, got {n:?}"),
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn request_is_answered_with_matching_frame() {
    let (st, addr) = start(None).await;
    let mut ws = connect(addr).await;
    let req = request(7, 48);
    ws.send(render_message(&req)).await.unwrap();
    let (h, px) = frame(&mut ws).await;
    assert_eq!((h.id, h.width, h.height, h.flags), (7, 48, 48, 0));
    assert_eq!(px.len(), 4 * 48 * 48);
    assert_eq!(px, st.render_request(&req).unwrap().to_rgba8());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn preview_tier_halves_resolution() {
    let (_, addr) = start(None).await;
    let mut ws = connect(addr).await;
    let mut req = request(3, 33);
    req.quality = Quality::Preview;
    ws.send(render_message(&req)).await.unwrap();
    let (h, px) = frame(&mut ws).await;
    assert_eq!((h.width, h.height, h.flags), (17, 17, FLAG_PREVIEW));
    assert_eq!(px.len(), 4 * 17 * 17);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn identical_requests_give_identical_pixels() {
    let (_, addr) = start(None).await;
    let mut ws = connect(addr).await;
    ws.send(render_message(&request(1, 64))).await.unwrap();
    let (a, pa) = frame(&mut ws).await;
    ws.send(render_message(&request(2, 64))).await.unwrap();
    let (b, pb) = frame(&mut ws).await;
    assert_eq!((a.width, a.height), (b.width, b.height));
    assert_eq!(pa, pb);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn burst_keeps_only_the_latest_pending_request() {
    let (_, addr) = start(None).await;
    let mut ws = connect(addr).await;
    for id in 1..=10 {
        ws.send(render_message(&request(id, 384))).await.unwrap();
    }
    let mut answered = [false; 11];
    let mut frames = Vec::new();
    let mut dropped = 0;
    while answered[1..].iter().any(|a| !a) {
        match next(&mut ws).await {
            Reply::Frame(h, px) => {
                assert_eq!(px.len(), 4 * 384 * 384);
                assert!(!answered[h.id as usize]);
                answered[h.id as usize] = true;
                frames.push(h.id);
            }
            Reply::Notice(Notice::Dropped { id, superseded_by }) => {
                assert!(superseded_by > id && superseded_by <= 10);
                assert!(!answered[id as usize]);
                answered[id as usize] = true;
                dropped += 1;
            }
            Reply::Notice(n) => panic!("unexpected {n:?}"),
        }
    }
    assert_eq!(frames.last(), Some(&10));
    assert!(dropped >= 1, "frames {frames:?}");
    assert_eq!(frames.len() + dropped, 10);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn bad_messages_get_errors_and_the_connection_survives() {
    let (_, addr) = start(None).await;
    let mut ws = connect(addr).await;

    ws.send(Message::text("{not json")).await.unwrap();
    match next(&mut ws).await {
        Reply::Notice(Notice::Error { id: None, .. }) => {}
        _ => panic!("expected an error without id"),
    }

    ws.send(render_message(&request(5, 4096))).await.unwrap();
    match next(&mut ws).await {
        Reply::Notice(Notice::Error { id: Some(5), reason }) => assert!(reason.contains("width"), "{reason}"),
        _ => panic!("expected an error for id 5"),
    }

    let mut skewed = request(6, 32);
    skewed.matrix[0] = 2.0;
    ws.send(render_message(&skewed)).await.unwrap();
    assert!(matches!(
        next(&mut ws).await,
        Reply::Notice(Notice::Error { id: Some(6), .. })
    ));

    ws.send(Message::binary(vec![1u8, 2, 3])).await.unwrap();
    assert!(matches!(
        next(&mut ws).await,
        Reply::Notice(Notice::Error { id: None, .. })
    ));

    ws.send(render_message(&request(8, 32))).await.unwrap();
    let (h, px) = frame(&mut ws).await;
    assert_eq!(h.id, 8);
    assert_eq!(px.len(), 4 * 32 * 32);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn connections_are_independent() {
    let (_, addr) = start(None).await;
    let mut a = connect(addr).await;
    let mut b = connect(addr).await;
    a.send(render_message(&request(1, 32))).await.unwrap();
    b.send(render_message(&request(1, 40))).await.unwrap();
    assert_eq!(frame(&mut a).await.0.width, 32);
    assert_eq!(frame(&mut b).await.0.width, 40);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn static_assets_are_served() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<!doctype html><title>viewer</title>").unwrap();
    std::fs::write(dir.path().join("app.js"), "console.log(1);").unwrap();
    let (_, addr) = start(Some(dir.path().to_owned())).await;
    for (path, expect) in [("/", "<title>viewer</title>"), ("/app.js", "console.log(1);")] {
        let mut s = TcpStream::connect(addr).await.unwrap();
        s.write_all(format!("GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").as_bytes())
            .await
            .unwrap();
        let mut body = String::new();
        s.read_to_string(&mut body).await.unwrap();
        assert!(body.starts_with("HTTP/1.1 200"), "{body}");
        assert!(body.contains(expect), "{body}");
    }
}

#[test]
fn header_length_is_fixed() {
    let h = FrameHeader {
        id: u64::MAX,
        width: 2048,
        height: 16,
        micros: 12,
        flags: FLAG_PREVIEW,
    };
    assert_eq!(h.encode(&[]).len(), FRAME_HEADER_LEN);
}
