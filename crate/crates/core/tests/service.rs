//! The HTTP service against documents built from the fixture.

mod common;

use std::net::SocketAddr;
use std::process::{Child, Command};
use std::sync::Arc;
use std::time::{Duration, Instant};

use commentscope::pipeline::{apply_filters, assemble_document, AnnotatedDocument, FilterSpec, Strategy};
use commentscope::service::{serve_on, DocumentRegistry, DocumentSummary};

fn fixture_document() -> AnnotatedDocument {
    let corpus = common::corpus();
    let (pipeline, _) = common::replay_pipeline(&corpus);
    let preds = pipeline.run(&corpus.article, &corpus.comments, Strategy::Hybrid).unwrap();
    assemble_document(&corpus.article, &preds, &corpus.comments, 3)
}

/// Serves `registry` on a background runtime; dropping the sender stops it.
fn boot(registry: DocumentRegistry) -> (SocketAddr, tokio::sync::oneshot::Sender<()>, std::thread::JoinHandle<()>) {
    let (addr_tx, addr_rx) = std::sync::mpsc::channel();
    let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
    let handle = std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            addr_tx.send(listener.local_addr().unwrap()).unwrap();
            serve_on(listener, Arc::new(registry), async {
                let _ = stop_rx.await;
            })
            .await
            .unwrap();
        });
    });
    (addr_rx.recv().unwrap(), stop_tx, handle)
}

fn get(url: &str) -> (u16, String) {
    let r = reqwest::blocking::get(url).unwrap();
    (r.status().as_u16(), r.text().unwrap())
}

#[test]
fn view_matches_apply_filters_byte_for_byte() {
    let doc = fixture_document();
    let mut registry = DocumentRegistry::default();
    registry.insert_document(&doc).unwrap();
    let (addr, stop, handle) = boot(registry);
    let base = format!("http://{addr}");

    assert_eq!(get(&format!("{base}/health")), (200, r#"{"status":"ok"}"#.to_string()));
    let (status, list) = get(&format!("{base}/documents"));
    assert_eq!(status, 200);
    let list: Vec<DocumentSummary> = serde_json::from_str(&list).unwrap();
    assert_eq!(list, vec![DocumentSummary { id: doc.article.id.clone(), title: doc.article.title.clone() }]);

    let settings = [
        ("min_likes=0&min_replies=0&labels=all", FilterSpec::default()),
        ("min_likes=50&min_replies=5", FilterSpec { min_likes: 50, min_replies: 5, ..FilterSpec::default() }),
        ("labels=question,sarcasm&min_likes=20", FilterSpec::from_params(Some("20"), None, Some("question,sarcasm")).unwrap()),
    ];
    let id = doc.article.id.clone();
    for (query, spec) in &settings {
        let (status, body) = get(&format!("{base}/documents/{id}/view?{query}"));
        assert_eq!(status, 200, "{query}");
        assert_eq!(body, apply_filters(&doc, spec).to_json(), "{query}");
        assert_eq!(get(&format!("{base}/documents/{id}/view?{query}")).1, body, "repeat {query}");
    }
    let (_, identity) = get(&format!("{base}/documents/{id}/view"));
    assert_eq!(identity, doc.to_json());

    let (status, body) = get(&format!("{base}/documents/{id}/view?min_replies=lots"));
    assert_eq!(status, 400);
    assert!(body.contains("min_replies"), "{body}");
    assert_eq!(get(&format!("{base}/documents/nope")).0, 404);

    let r = reqwest::blocking::Client::new()
        .get(format!("{base}/documents"))
        .header("Origin", "http://localhost:5173")
        .send()
        .unwrap();
    assert!(r.headers().contains_key("access-control-allow-origin"));

    drop(stop);
    handle.join().unwrap();
}

fn free_port() -> u16 {
    std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

#[test]
fn annotate_then_serve_round_trips_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let doc_path = dir.path().join("pengyu.doc.json");
    let out = Command::new(env!("CARGO_BIN_EXE_commentscope"))
        .args(["annotate", "--corpus"])
        .arg(common::corpus_path())
        .arg("--transcript")
        .arg(common::transcript_path())
        .arg("--out")
        .arg(&doc_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let written = std::fs::read_to_string(&doc_path).unwrap();

    let port = free_port();
    let _server = Server(
        Command::new(env!("CARGO_BIN_EXE_commentscope"))
            .args(["serve", "--listen", &format!("127.0.0.1:{port}"), "--documents"])
            .arg(dir.path())
            .spawn()
            .unwrap(),
    );
    let base = format!("http://127.0.0.1:{port}");
    let deadline = Instant::now() + Duration::from_secs(20);
    while reqwest::blocking::get(format!("{base}/health")).is_err() {
        assert!(Instant::now() < deadline, "server did not start");
        std::thread::sleep(Duration::from_millis(50));
    }
    let doc = AnnotatedDocument::from_json(&written).unwrap();
    let (status, served) = get(&format!("{base}/documents/{}", doc.id()));
    assert_eq!(status, 200);
    assert_eq!(served, written);
}
