use std::path::Path;

use reqwest::{Client, StatusCode};
use serde_json::{json, Value};
use slurg_core::{AnnotatedSample, Corpus, Source};
use slurg_review::{router, shared, task_id, ReviewConfig, ReviewStore, TaskKind};

async fn start(dir: &Path, static_dir: Option<&Path>) -> String {
    let mut store = ReviewStore::open(dir, ReviewConfig::default()).unwrap();
    let human = Corpus::new(
        "h",
        (0..10)
            .map(|i| AnnotatedSample::raw(format!("h{i}"), Source::Reddit, format!("sanctions are failing, part {i}")))
            .collect(),
    )
    .unwrap();
    let reviewers: Vec<String> = ["r1", "r2", "r3", "r4"].map(String::from).to_vec();
    assert_eq!(store.enqueue(&human, TaskKind::SpanAnnotation, &reviewers).unwrap(), 40);

    let synth = Corpus::new(
        "s",
        vec![
            AnnotatedSample::raw("g1", Source::Synthetic, "one").with_meta("split_name", "80/20"),
            AnnotatedSample::raw("g2", Source::Synthetic, "two").with_meta("split_name", "70/30"),
        ],
    )
    .unwrap();
    store.enqueue(&synth, TaskKind::LikertReview, &reviewers[..2]).unwrap();

    let app = router(shared(store), static_dir);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { slurg_review::serve(listener, app).await.unwrap() });
    format!("http://{addr}")
}

#[tokio::test]
async fn task_listing_and_progress() {
    let dir = tempfile::tempdir().unwrap();
    let base = start(dir.path(), None).await;
    let c = Client::new();

    let all: Vec<Value> = c.get(format!("{base}/api/tasks")).send().await.unwrap().json().await.unwrap();
    assert_eq!(all.len(), 44);
    let mine: Vec<Value> = c
        .get(format!("{base}/api/tasks?reviewer=r2&kind=span_annotation"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(mine.len(), 10);
    assert_eq!(mine[0]["status"], "pending");
    assert!(mine[0]["text"].as_str().unwrap().starts_with("sanctions"));

    let bad = c.get(format!("{base}/api/tasks?kind=nonsense")).send().await.unwrap();
    assert_eq!(bad.status(), StatusCode::BAD_REQUEST);

    let sample: Value = c.get(format!("{base}/api/samples/h3")).send().await.unwrap().json().await.unwrap();
    assert_eq!(sample["text"], "sanctions are failing, part 3");
    let missing = c.get(format!("{base}/api/samples/zzz")).send().await.unwrap();
    assert_eq!(missing.status(), StatusCode::NOT_FOUND);

    let cfg: Value = c.get(format!("{base}/api/config")).send().await.unwrap().json().await.unwrap();
    assert_eq!(cfg["scale_points"], 4);
    assert_eq!(cfg["criteria"].as_array().unwrap().len(), 3);

    let p: Value = c.get(format!("{base}/api/progress")).send().await.unwrap().json().await.unwrap();
    assert_eq!(p["total"], 44);
    assert_eq!(p["done"], 0);
}

#[tokio::test]
async fn annotations_round_trip_through_export() {
    let dir = tempfile::tempdir().unwrap();
    let base = start(dir.path(), None).await;
    let c = Client::new();
    let id = task_id(TaskKind::SpanAnnotation, "r1", "h0");

    let ok = c
        .post(format!("{base}/api/annotations"))
        .json(&json!({"task_id": id, "tagged": "<logical_fallacy>sanctions are failing</logical_fallacy>, part 0"}))
        .send()
        .await
        .unwrap();
    assert_eq!(ok.status(), StatusCode::OK);
    let sample: Value = ok.json().await.unwrap();
    assert_eq!(sample["spans"][0]["start"], 0);
    assert_eq!(sample["spans"][0]["end"], 21);

    let drift = c
        .post(format!("{base}/api/annotations"))
        .json(&json!({"task_id": id, "tagged": "sanctions are working"}))
        .send()
        .await
        .unwrap();
    assert_eq!(drift.status(), StatusCode::UNPROCESSABLE_ENTITY);
    let malformed = c
        .post(format!("{base}/api/annotations"))
        .json(&json!({"task_id": id, "tagged": "<logical_fallacy>sanctions are failing, part 0"}))
        .send()
        .await
        .unwrap();
    assert_eq!(malformed.status(), StatusCode::UNPROCESSABLE_ENTITY);
    let unknown = c
        .post(format!("{base}/api/annotations"))
        .json(&json!({"task_id": "span_annotation:nobody:h0", "tagged": "x"}))
        .send()
        .await
        .unwrap();
    assert_eq!(unknown.status(), StatusCode::NOT_FOUND);

    let jsonl = c.get(format!("{base}/api/export?kind=spans")).send().await.unwrap().text().await.unwrap();
    let lines: Vec<AnnotatedSample> = jsonl.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 1);
    assert_eq!(lines[0].annotator_id, "r1");
    assert_eq!(lines[0].spans.len(), 1);

    let p: Value = c.get(format!("{base}/api/progress")).send().await.unwrap().json().await.unwrap();
    assert_eq!(p["done"], 1);
    assert_eq!(p["by_reviewer"]["r1"]["done"], 1);
}

#[tokio::test]
async fn likert_scores_and_per_split_means() {
    let dir = tempfile::tempdir().unwrap();
    let base = start(dir.path(), None).await;
    let c = Client::new();
    let post = |reviewer: &str, sample: &str, r: u8, f: u8, s: u8| {
        let c = c.clone();
        let url = format!("{base}/api/likert");
        let body = json!({
            "task_id": task_id(TaskKind::LikertReview, reviewer, sample),
            "realism": r, "fallacy_accuracy": f, "span_accuracy": s,
        });
        async move { c.post(url).json(&body).send().await.unwrap().status() }
    };
    assert_eq!(post("r1", "g1", 4, 3, 2).await, StatusCode::OK);
    assert_eq!(post("r2", "g1", 3, 3, 3).await, StatusCode::OK);
    assert_eq!(post("r1", "g2", 1, 2, 4).await, StatusCode::OK);
    assert_eq!(post("r2", "g2", 5, 2, 4).await, StatusCode::UNPROCESSABLE_ENTITY);
    // resubmission replaces the earlier score
    assert_eq!(post("r1", "g1", 2, 3, 2).await, StatusCode::OK);

    let csv = c.get(format!("{base}/api/export?kind=likert")).send().await.unwrap().text().await.unwrap();
    let expected = "split,reviewer,criterion,value\n\
        70/30,r1,realism,1\n70/30,r1,fallacy_accuracy,2\n70/30,r1,span_accuracy,4\n\
        80/20,r1,realism,2\n80/20,r1,fallacy_accuracy,3\n80/20,r1,span_accuracy,2\n\
        80/20,r2,realism,3\n80/20,r2,fallacy_accuracy,3\n80/20,r2,span_accuracy,3\n";
    assert_eq!(csv, expected);

    let means = c.get(format!("{base}/api/export?kind=likert_means")).send().await.unwrap().text().await.unwrap();
    assert!(means.contains("80/20,realism,2.500000,2\n"), "{means}");
    assert!(means.contains("80/20,span_accuracy,2.500000,2\n"), "{means}");
    assert!(means.contains("70/30,span_accuracy,4.000000,1\n"), "{means}");

    let bad = c.get(format!("{base}/api/export?kind=other")).send().await.unwrap();
    assert_eq!(bad.status(), StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn serves_static_ui_files() {
    let dir = tempfile::tempdir().unwrap();
    let ui = tempfile::tempdir().unwrap();
    std::fs::write(ui.path().join("index.html"), "<html>review</html>").unwrap();
    let base = start(dir.path(), Some(ui.path())).await;
    let body = reqwest::get(format!("{base}/index.html")).await.unwrap().text().await.unwrap();
    assert_eq!(body, "<html>review</html>");
}
