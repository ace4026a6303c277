use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use km4_api::{router, AppState, ReviewQueueView};
use km4_core::evaluator::{generate_corpus, is_correct, score, Corpus, CorpusSpec, MetricsReport};
use km4_core::ingestion::{
    AutomationLevel, DatasetDescriptor, DatasetStatus, MappingSpec, OriginalFormat, Pipeline, ProcessType,
    WEATHER_MAPPING,
};
use km4_core::quadstore::{Iri, Literal, Quad, QuadStore};
use km4_core::reconciler::{catalog_quads, reconciliation_context, service_quads, Level, MatchCandidate, Method};
use km4_core::schema::{load_schema, MacroClass};
use km4_core::vocab;
use serde_json::{json, Value};
use tower::ServiceExt;

const BASE: &str = "http://km4city.local/resource";

fn corpus() -> Corpus {
    generate_corpus(&CorpusSpec {
        n_services: 300,
        n_roads: 80,
        ..CorpusSpec::default()
    })
    .unwrap()
}

fn fixture() -> (Router, AppState, Corpus) {
    let corpus = corpus();
    let mut store = QuadStore::new();
    let streets = Iri::new(format!("{BASE}/graph/streets")).unwrap();
    let services = Iri::new(format!("{BASE}/graph/services")).unwrap();
    store.insert(&catalog_quads(&corpus.roads, BASE, &streets)).unwrap();
    store.insert(&service_quads(&corpus.services, &services)).unwrap();
    let state = AppState::new(store, BASE).with_gold(corpus.gold.clone());
    (router(state.clone()), state, corpus)
}

async fn call(app: &Router, method: &str, uri: &str, headers: &[(&str, &str)], body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    for (k, v) in headers {
        req = req.header(*k, *v);
    }
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

fn enc(s: &str) -> String {
    s.bytes()
        .map(|b| match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => (b as char).to_string(),
            _ => format!("%{b:02X}"),
        })
        .collect()
}

/// Links written to the reconciliation context, read back from the store.
fn stored_links(state: &AppState, corpus: &Corpus) -> Vec<MatchCandidate> {
    let ctx = reconciliation_context(BASE);
    let numbers: std::collections::BTreeMap<Iri, (Iri, Iri)> = corpus
        .roads
        .iter()
        .flat_map(|r| r.street_numbers.iter().map(move |n| (n.entry.clone(), (r.iri.clone(), n.iri.clone()))))
        .collect();
    state.with_store(|store| {
        store
            .matches(None, None, None, Some(&ctx))
            .into_iter()
            .filter_map(|q| {
                let object = q.object.as_iri()?.clone();
                let (road, number, level) = match vocab::local_name(q.predicate.as_str()) {
                    "hasAccess" => {
                        let (road, number) = numbers.get(&object)?.clone();
                        (road, Some(number), Level::Number)
                    }
                    "isInRoad" => (object, None, Level::Street),
                    _ => return None,
                };
                Some(MatchCandidate {
                    service: q.subject,
                    road,
                    street_number: number,
                    entry: None,
                    level,
                    method: Method::Manual,
                    score: 1.0,
                })
            })
            .collect()
    })
}

fn metrics_of(v: &Value) -> MetricsReport {
    serde_json::from_value(v["current"].clone()).unwrap()
}

#[tokio::test]
async fn health_reports_store_size() {
    let (app, state, _) = fixture();
    let (status, body) = call(&app, "GET", "/health", &[], None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["quads"].as_u64().unwrap() as usize, state.with_store(|s| s.len()));
}

#[tokio::test]
async fn quad_queries_page_and_validate() {
    let (app, _, corpus) = fixture();
    let road = corpus.roads[0].iri.clone();
    let (status, body) = call(&app, "GET", &format!("/quads?s={}", enc(road.as_str())), &[], None).await;
    assert_eq!(status, StatusCode::OK);
    let items = body["items"].as_array().unwrap();
    assert!(!items.is_empty());
    assert!(items.iter().all(|i| i["subject"] == road.as_str()));

    let (status, _) = call(&app, "GET", "/quads?p=not-an-iri", &[], None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let p = enc(&vocab::km4c("roadName"));
    let (_, all) = call(&app, "GET", &format!("/quads?p={p}&limit=1000"), &[], None).await;
    let mut paged = Vec::new();
    let mut cursor: Option<String> = None;
    loop {
        let uri = match &cursor {
            Some(c) => format!("/quads?p={p}&limit=7&cursor={}", enc(c)),
            None => format!("/quads?p={p}&limit=7"),
        };
        let (_, page) = call(&app, "GET", &uri, &[], None).await;
        paged.extend(page["items"].as_array().unwrap().iter().cloned());
        match page["nextCursor"].as_str() {
            Some(c) => cursor = Some(c.to_string()),
            None => break,
        }
    }
    assert_eq!(&paged, all["items"].as_array().unwrap());
    assert_eq!(paged.len(), corpus.roads.len());
}

#[tokio::test]
async fn closure_merges_same_as_facts() {
    let mut store = QuadStore::new();
    let ctx = Iri::new("http://x/g").unwrap();
    let (a, b) = (Iri::new("http://x/a").unwrap(), Iri::new("http://x/b").unwrap());
    let name = Iri::new(vocab::km4c("name")).unwrap();
    store.insert(&[Quad::new(b.clone(), name, Literal::string("B"), ctx.clone())]).unwrap();
    store.add_same_as(&a, &b, &ctx).unwrap();
    let app = router(AppState::new(store, BASE));
    let s = enc(a.as_str());
    let (_, plain) = call(&app, "GET", &format!("/quads?s={s}"), &[], None).await;
    let (_, closed) = call(&app, "GET", &format!("/quads?s={s}&closure=true"), &[], None).await;
    let has_name = |v: &Value| v["items"].as_array().unwrap().iter().any(|i| i["object"].as_str().unwrap().contains("\"B\""));
    assert!(!has_name(&plain));
    assert!(has_name(&closed));
}

#[tokio::test]
async fn geo_near_ranks_and_filters() {
    let mut store = QuadStore::new();
    let ctx = Iri::new("http://x/g").unwrap();
    let ty = Iri::new(vocab::RDF_TYPE).unwrap();
    let mut quads = Vec::new();
    for (i, class, lat) in [(0, "Accommodation", 43.7700), (1, "Service", 43.7701), (2, "Accommodation", 43.7710)] {
        let e = Iri::new(format!("http://x/e{i}")).unwrap();
        quads.push(Quad::new(e.clone(), ty.clone(), Iri::new(vocab::km4c(class)).unwrap(), ctx.clone()));
        quads.push(Quad::new(e.clone(), Iri::new(vocab::km4c("name")).unwrap(), Literal::string(format!("E{i}")), ctx.clone()));
        quads.push(Quad::new(e.clone(), Iri::new(vocab::GEO_LAT).unwrap(), Literal::decimal(lat), ctx.clone()));
        quads.push(Quad::new(e, Iri::new(vocab::GEO_LONG).unwrap(), Literal::decimal(11.25), ctx.clone()));
    }
    store.insert(&quads).unwrap();
    let app = router(AppState::new(store, BASE));
    let (status, body) = call(&app, "GET", "/geo/near?lat=43.7701&long=11.25&k=3", &[], None).await;
    assert_eq!(status, StatusCode::OK);
    let items = body["items"].as_array().unwrap();
    assert_eq!(items[0]["entity"], "http://x/e1");
    assert_eq!(items[0]["distance"].as_f64().unwrap(), 0.0);
    assert_eq!(items[0]["name"], "E1");
    assert_eq!(items.len(), 3);

    let (_, only) = call(&app, "GET", "/geo/near?lat=43.7701&long=11.25&k=3&class=Accommodation", &[], None).await;
    let classes: Vec<&str> = only["items"].as_array().unwrap().iter().map(|i| i["class"].as_str().unwrap()).collect();
    assert_eq!(classes, vec!["Accommodation", "Accommodation"]);
    let (_, service) = call(&app, "GET", "/geo/near?lat=43.7701&long=11.25&k=3&class=Service", &[], None).await;
    assert_eq!(service["items"].as_array().unwrap().len(), 3);

    for bad in ["k=0&lat=43&long=11", "lat=95&long=11", "lat=43&long=11&class=Nope", "lat=43&long=11&maxDistance=-1"] {
        let (status, _) = call(&app, "GET", &format!("/geo/near?{bad}"), &[], None).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad}");
    }
}

#[tokio::test]
async fn review_loop_lifts_recall_and_tracks_store() {
    let (app, state, corpus) = fixture();
    let (status, run) = call(&app, "POST", "/reconcile/run", &[], Some(json!({ "method": "exact" }))).await;
    assert_eq!(status, StatusCode::OK, "{run}");
    assert!(run["queued"].as_u64().unwrap() >= 10);

    let (_, queue) = call(&app, "GET", "/review?limit=500", &[], None).await;
    let queue: ReviewQueueView = serde_json::from_value(queue).unwrap();
    let scores: Vec<f64> = queue.items.iter().map(|i| i.top_score).collect();
    assert!(scores.windows(2).all(|w| w[0] <= w[1]));

    let (_, m) = call(&app, "GET", "/metrics", &[], None).await;
    let mut recall = metrics_of(&m).recall;
    assert_eq!(metrics_of(&m), score(&stored_links(&state, &corpus), &corpus.gold));

    let schema = load_schema();
    let mut accepted = 0;
    for item in &queue.items {
        let Some(gold) = corpus.gold.entries.get(&item.service) else { continue };
        let Some(idx) = item.candidates.iter().position(|c| is_correct(c, gold)) else { continue };
        let (status, body) = call(
            &app,
            "POST",
            &format!("/review/{}/decision", item.id),
            &[("x-operator", "alice")],
            Some(json!({ "verdict": "accept", "candidate": idx })),
        )
        .await;
        assert_eq!(status, StatusCode::OK, "{body}");
        let (_, m) = call(&app, "GET", "/metrics", &[], None).await;
        let now = metrics_of(&m);
        assert!(now.recall > recall, "recall {} -> {}", recall, now.recall);
        recall = now.recall;
        assert_eq!(now, score(&stored_links(&state, &corpus), &corpus.gold));
        let reports = state.with_store(|s| {
            let quads = s.matches(Some(&item.service), None, None, None);
            schema.validate_entity(&item.service, &quads, "Service").unwrap()
        });
        assert!(reports.is_empty(), "{reports:?}");
        accepted += 1;
        if accepted == 10 {
            break;
        }
    }
    assert_eq!(accepted, 10);

    let (_, audit) = call(&app, "GET", "/audit", &[], None).await;
    let audit = audit["items"].as_array().unwrap();
    assert_eq!(audit.len(), 10);
    assert!(audit.iter().all(|a| a["operator"] == "alice" && a["at"].is_string()));
}

#[tokio::test]
async fn decisions_conflict_reject_and_retry() {
    let (app, _, _) = fixture();
    call(&app, "POST", "/reconcile/run", &[], Some(json!({ "method": "exact" }))).await;
    let (_, queue) = call(&app, "GET", "/review", &[], None).await;
    let queue: ReviewQueueView = serde_json::from_value(queue).unwrap();
    assert!(queue.items.len() <= 50);
    let (first, second) = (queue.items[0].id, queue.items[1].id);

    let (_, before) = call(&app, "GET", "/metrics", &[], None).await;
    let reject = json!({ "verdict": "reject" });
    let (status, _) = call(&app, "POST", &format!("/review/{first}/decision"), &[], Some(reject.clone())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let op = [("x-operator", "bob")];
    let (status, _) = call(&app, "POST", &format!("/review/{first}/decision"), &op, Some(reject.clone())).await;
    assert_eq!(status, StatusCode::OK);
    let (_, after) = call(&app, "GET", "/metrics", &[], None).await;
    assert_eq!(before["current"], after["current"]);
    assert_eq!(after["pending"].as_u64().unwrap() + 1, before["pending"].as_u64().unwrap());
    let (status, _) = call(&app, "POST", &format!("/review/{first}/decision"), &op, Some(reject.clone())).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _) = call(&app, "POST", "/review/999999/decision", &op, Some(reject.clone())).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let token = [("x-operator", "bob"), ("idempotency-key", "t-1")];
    let accept = json!({ "verdict": "accept", "candidate": 0 });
    let uri = format!("/review/{second}/decision");
    let (s1, b1) = call(&app, "POST", &uri, &token, Some(accept.clone())).await;
    let (s2, b2) = call(&app, "POST", &uri, &token, Some(accept.clone())).await;
    assert_eq!((s1, s2), (StatusCode::OK, StatusCode::OK));
    assert_eq!(b1, b2);
    let (_, audit) = call(&app, "GET", "/audit", &[], None).await;
    assert_eq!(audit["items"].as_array().unwrap().len(), 2);
    let (status, _) = call(&app, "POST", &uri, &op, Some(accept)).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn run_is_idempotent_under_retry() {
    let (app, state, _) = fixture();
    let token = [("idempotency-key", "run-1")];
    let body = json!({ "method": "kb-levenshtein" });
    let (s1, b1) = call(&app, "POST", "/reconcile/run", &token, Some(body.clone())).await;
    let size = state.with_store(|s| s.len());
    let (s2, b2) = call(&app, "POST", "/reconcile/run", &token, Some(body)).await;
    assert_eq!((s1, s2), (StatusCode::OK, StatusCode::OK));
    assert_eq!(b1, b2);
    assert_eq!(state.with_store(|s| s.len()), size);
    let (status, _) = call(&app, "POST", "/reconcile/run", &[], Some(json!({ "method": "soundex" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn datasets_lists_registered_descriptors() {
    let mut store = QuadStore::new();
    let mut pipeline = Pipeline::new(BASE);
    let t0 = chrono::DateTime::parse_from_rfc3339("2015-03-01T06:00:00+01:00").unwrap();
    let descriptor = DatasetDescriptor {
        id: "weather".into(),
        creation_date: t0,
        source: "forecasts".into(),
        original_format: OriginalFormat::Csv,
        description: String::new(),
        license: "CC-BY".into(),
        process_type: ProcessType::Realtime,
        automation_level: AutomationLevel::Automatic,
        access_type: "HTTP".into(),
        update_period: Duration::from_secs(12 * 3600),
        last_update: None,
        triple_creation_date: None,
        status: DatasetStatus::Registered,
        macroclass: MacroClass::Sensors,
    };
    pipeline
        .register_dataset(&mut store, descriptor, MappingSpec::parse("weather", WEATHER_MAPPING).unwrap())
        .unwrap();
    let app = router(AppState::new(store, BASE));
    let (status, body) = call(&app, "GET", "/datasets", &[], None).await;
    assert_eq!(status, StatusCode::OK);
    let items = body["items"].as_array().unwrap();
    assert_eq!(items.len(), 1);
    assert_eq!(items[0]["descriptor"]["id"], "weather");
    assert_eq!(items[0]["quads"], 0);
}
