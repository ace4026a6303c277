//! Acceptance checks, one line per criterion.
//!
//! Run with `cargo test -p km4-core --test acceptance -- --nocapture` to see
//! the PASS/FAIL lines. Criteria listed in `KNOWN_UNATTAINABLE` are expected
//! to fail; the test fails if any other criterion does, or if one of those
//! starts passing.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::time::Instant;

use chrono::{DateTime, Datelike, Duration, FixedOffset, TimeZone};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use km4_core::evaluator::{compare_methods, f1, generate_corpus, CorpusSpec, MethodSpec, OperatorModel};
use km4_core::ingestion::{weather_fixture, DatasetDescriptor, MappingSpec, Pipeline, WEATHER_MAPPING};
use km4_core::quadstore::{
    nquads, AggregationSpec, DataKind, GeoPoint, Iri, KindCounts, Literal, Pattern, Quad, QuadStore, StatsRow,
    StoreStats, Term,
};
use km4_core::reconciler::metrics::{dice, jaccard, levenshtein, levenshtein_similarity, levenshtein_within};
use km4_core::reconciler::MethodConfig;
use km4_core::schema::fixtures::{negative_fixture, positive_fixture};
use km4_core::schema::{load_schema, MacroClass, ViolationKind};
use km4_core::vocab;

const F1_TOLERANCE: f64 = 0.0005;
const GROWTH_TOLERANCE: f64 = 0.02;
const ORDERING_BUDGET_SECS: u64 = 60;

/// Two printed rows disagree with their own P and R beyond the tolerance:
/// dice (0.968, 0.674) gives 0.79468 against 0.794, jaccard (1.000, 0.472)
/// gives 0.64130 against 0.642.
const KNOWN_UNATTAINABLE: &[&str] = &["f1-fidelity"];

type Outcome = Result<String, String>;

fn iri(s: impl AsRef<str>) -> Iri {
    Iri::new(s).unwrap()
}

fn km4c(local: &str) -> Iri {
    iri(vocab::km4c(local))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn f1_fidelity() -> Outcome {
    let text = include_str!("fixtures/reconciliation_results.tsv");
    let mut misses = Vec::new();
    let mut worst: f64 = 0.0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split('\t').collect();
        let (p, r, printed): (f64, f64, f64) = (f[1].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap());
        let got = f1(p, r);
        let delta = (got - printed).abs();
        worst = worst.max(delta);
        if delta > F1_TOLERANCE {
            misses.push(format!("{} {got:.6} vs {printed} (|d| {delta:.6})", f[0]));
        }
    }
    if misses.is_empty() {
        Ok(format!("5 rows, max |d| {worst:.6}"))
    } else {
        Err(misses.join("; "))
    }
}

fn method_ordering() -> Outcome {
    let started = Instant::now();
    let corpus = generate_corpus(&CorpusSpec::default()).map_err(|e| e.to_string())?;
    let rows = compare_methods(&corpus, &MethodSpec::ALL, &MethodConfig::default(), &OperatorModel::default());
    let elapsed = started.elapsed();
    let row = |label: &str| rows.iter().find(|r| r.method == label).unwrap();
    let (exact, manual) = (row("exact"), row("exact+manual"));
    let (lev, dic, jac, kb) = (row("levenshtein"), row("dice"), row("jaccard"), row("kbLevenshtein"));
    ensure(exact.precision == 1.0, || format!("exact precision {}", exact.precision))?;
    for other in [lev, dic, kb] {
        ensure(jac.precision >= other.precision, || {
            format!("jaccard precision {} < {} precision {}", jac.precision, other.method, other.precision)
        })?;
    }
    ensure(dic.f1 > lev.f1, || format!("dice F1 {} <= levenshtein F1 {}", dic.f1, lev.f1))?;
    ensure(kb.recall > lev.recall, || format!("kb recall {} <= levenshtein recall {}", kb.recall, lev.recall))?;
    ensure(manual.recall > exact.recall, || format!("manual recall {} <= exact recall {}", manual.recall, exact.recall))?;
    ensure(manual.precision >= 0.95, || format!("manual precision {}", manual.precision))?;
    ensure(elapsed.as_secs() < ORDERING_BUDGET_SECS, || format!("took {elapsed:?}"))?;
    Ok(rows
        .iter()
        .map(|r| format!("{} {:.3}/{:.3}/{:.3}", r.method, r.precision, r.recall, r.f1))
        .chain(std::iter::once(format!("{:.1}s", elapsed.as_secs_f64())))
        .collect::<Vec<_>>()
        .join(", "))
}

fn schema_constraints() -> Outcome {
    let schema = load_schema();
    let ctx = iri("http://acceptance.test/ctx");
    let mut checked = 0;
    for class in schema.classes() {
        let entity = iri(format!("http://acceptance.test/{}", class.name));
        let pos = positive_fixture(&schema, &class.name, &entity, &ctx).map_err(|e| e.to_string())?;
        let reports = schema.validate_entity(&entity, &pos, &class.name).map_err(|e| e.to_string())?;
        ensure(reports.is_empty(), || format!("{} positive fixture flagged: {reports:?}", class.name))?;
        for c in schema.effective_constraints(&class.name).map_err(|e| e.to_string())? {
            let neg = negative_fixture(&schema, &class.name, c, &entity, &ctx).map_err(|e| e.to_string())?;
            let reports = schema.validate_entity(&entity, &neg, &class.name).map_err(|e| e.to_string())?;
            ensure(!reports.is_empty() && reports.iter().all(|r| r.constraint.property == c.property), || {
                format!("{}.{} negative fixture not flagged alone", class.name, c.property)
            })?;
            checked += 1;
        }
    }
    let named = [
        ("Node", "lat", Some(1), ViolationKind::TooFewValues),
        ("Node", "long", Some(1), ViolationKind::TooFewValues),
        ("Road", "containsElement", None, ViolationKind::TooFewValues),
        ("Milestone", "isInElement", Some(1), ViolationKind::TooFewValues),
        ("Ride", "scheduledOnLine", Some(1), ViolationKind::TooFewValues),
        ("BusStop", "lat", Some(1), ViolationKind::TooFewValues),
        ("BusStop", "long", Some(1), ViolationKind::TooFewValues),
        ("Service", "hasAccess", Some(1), ViolationKind::TooManyValues),
    ];
    for (class, property, max, kind) in named {
        let constraints = schema.effective_constraints(class).map_err(|e| e.to_string())?;
        let c = constraints
            .iter()
            .find(|c| c.property == property)
            .ok_or_else(|| format!("{class}.{property} missing"))?;
        let min = if kind == ViolationKind::TooFewValues { 1 } else { 0 };
        ensure(c.min_card == min && c.max_card == max, || {
            format!("{class}.{property} cardinality {}..{:?}", c.min_card, c.max_card)
        })?;
        let entity = iri(format!("http://acceptance.test/named/{class}"));
        let neg = negative_fixture(&schema, class, c, &entity, &ctx).map_err(|e| e.to_string())?;
        let reports = schema.validate_entity(&entity, &neg, class).map_err(|e| e.to_string())?;
        ensure(reports.iter().any(|r| r.kind == kind), || format!("{class}.{property} not flagged as {kind:?}"))?;
    }
    Ok(format!("{checked} constraints, {} named", named.len()))
}

fn haversine(a: (f64, f64), b: (f64, f64)) -> f64 {
    let r = 6_371_008.8;
    let (la1, la2) = (a.0.to_radians(), b.0.to_radians());
    let s1 = ((la2 - la1) / 2.0).sin();
    let s2 = ((b.1 - a.1).to_radians() / 2.0).sin();
    let h = s1 * s1 + la1.cos() * la2.cos() * s2 * s2;
    2.0 * r * h.sqrt().min(1.0).asin()
}

fn geo_oracle(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let ctx = iri("http://acceptance.test/geo");
    let (lat_p, long_p) = (iri(vocab::GEO_LAT), iri(vocab::GEO_LONG));
    let mut store = QuadStore::new();
    let mut points = Vec::new();
    let mut quads = Vec::new();
    for i in 0..10_000 {
        let e = iri(format!("http://acceptance.test/p/{i}"));
        let lat = Literal::decimal(rng.gen_range(43.70..43.85));
        let long = Literal::decimal(rng.gen_range(11.15..11.35));
        points.push((e.clone(), (lat.as_f64().unwrap(), long.as_f64().unwrap())));
        quads.push(Quad::new(e.clone(), lat_p.clone(), lat, ctx.clone()));
        quads.push(Quad::new(e, long_p.clone(), long, ctx.clone()));
    }
    store.insert(&quads).map_err(|e| e.to_string())?;
    for q in 0..200 {
        let at = (rng.gen_range(43.68..43.87), rng.gen_range(11.13..11.37));
        let k = rng.gen_range(1..=50);
        let max = rng.gen_range(50.0..3000.0);
        let mut expected: Vec<(Iri, f64)> = points
            .iter()
            .map(|(e, p)| (e.clone(), haversine(at, *p)))
            .filter(|(_, d)| *d <= max)
            .collect();
        expected.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        expected.truncate(k);
        let got = store.geo_near(GeoPoint::new(at.0, at.1).unwrap(), k, max, None);
        let same = got.len() == expected.len()
            && got.iter().zip(&expected).all(|(g, e)| g.0 == e.0 && (g.1 - e.1).abs() < 1e-6);
        ensure(same, || format!("query {q}: {} results vs {} expected", got.len(), expected.len()))?;
    }
    Ok(())
}

fn same_as_oracle(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let ctx = iri("http://acceptance.test/links");
    let entities: Vec<Iri> = (0..1000).map(|i| iri(format!("http://acceptance.test/e/{i}"))).collect();
    let mut store = QuadStore::new();
    let mut adjacency = vec![Vec::new(); entities.len()];
    let mut links = 0;
    while links < 2000 {
        let (a, b) = (rng.gen_range(0..1000), rng.gen_range(0..1000));
        if a == b {
            continue;
        }
        store.add_same_as(&entities[a], &entities[b], &ctx).map_err(|e| e.to_string())?;
        adjacency[a].push(b);
        adjacency[b].push(a);
        links += 1;
    }
    let mut component = vec![usize::MAX; entities.len()];
    for start in 0..entities.len() {
        if component[start] != usize::MAX {
            continue;
        }
        component[start] = start;
        let mut queue = VecDeque::from([start]);
        while let Some(n) = queue.pop_front() {
            for &m in &adjacency[n] {
                if component[m] == usize::MAX {
                    component[m] = start;
                    queue.push_back(m);
                }
            }
        }
    }
    for (i, e) in entities.iter().enumerate() {
        let mut expected: Vec<Iri> =
            (0..entities.len()).filter(|&j| component[j] == component[i]).map(|j| entities[j].clone()).collect();
        expected.sort();
        ensure(store.resolve(e) == expected, || format!("class of {e} differs"))?;
    }
    Ok(())
}

fn oracle_distance(a: &[char], b: &[char]) -> usize {
    let mut table = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in table.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        table[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            table[i][j] = (table[i - 1][j] + 1).min(table[i][j - 1] + 1).min(table[i - 1][j - 1] + cost);
        }
    }
    table[a.len()][b.len()]
}

fn fuzz_string(rng: &mut ChaCha8Rng) -> String {
    const ALPHABET: &[char] = &['A', 'B', 'I', 'V', 'E', 'L', 'À', 'È', ' ', '.', '\'', 'a'];
    let len = rng.gen_range(0..14);
    (0..len).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())]).collect()
}

fn mutate(s: &str, rng: &mut ChaCha8Rng) -> String {
    let mut chars: Vec<char> = s.chars().collect();
    for _ in 0..rng.gen_range(0..4) {
        let pos = rng.gen_range(0..=chars.len());
        match rng.gen_range(0..3) {
            0 => chars.insert(pos, ['A', ' ', 'È'][rng.gen_range(0..3)]),
            1 if pos < chars.len() => {
                chars.remove(pos);
            }
            _ if pos < chars.len() => chars[pos] = 'Z',
            _ => {}
        }
    }
    chars.into_iter().collect()
}

fn metric_oracle(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for n in 0..10_000 {
        let a = fuzz_string(rng);
        let b = if n % 2 == 0 { mutate(&a, rng) } else { fuzz_string(rng) };
        let (ca, cb): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        let d = oracle_distance(&ca, &cb);
        ensure(levenshtein(&a, &b) == d, || format!("levenshtein {a:?} {b:?}"))?;
        let bound = rng.gen_range(0..6);
        ensure(levenshtein_within(&a, &b, bound) == Some(d).filter(|&d| d <= bound), || {
            format!("bounded levenshtein {a:?} {b:?} {bound}")
        })?;
        let longest = ca.len().max(cb.len());
        let sim = if longest == 0 { 1.0 } else { 1.0 - d as f64 / longest as f64 };
        ensure(levenshtein_similarity(&a, &b) == sim, || format!("levenshtein similarity {a:?} {b:?}"))?;

        let grams = |c: &[char]| -> BTreeSet<String> { c.windows(2).map(|w| w.iter().collect()).collect() };
        let (ga, gb) = (grams(&ca), grams(&cb));
        let expected_dice = if a == b {
            1.0
        } else if ga.is_empty() && gb.is_empty() {
            0.0
        } else {
            2.0 * ga.intersection(&gb).count() as f64 / (ga.len() + gb.len()) as f64
        };
        ensure(dice(&a, &b) == expected_dice, || format!("dice {a:?} {b:?}"))?;

        let tokens = |s: &str| -> BTreeSet<String> { s.split_whitespace().map(str::to_string).collect() };
        let (ta, tb) = (tokens(&a), tokens(&b));
        let union = ta.union(&tb).count();
        let expected_jaccard = if union == 0 { 1.0 } else { ta.intersection(&tb).count() as f64 / union as f64 };
        ensure(jaccard(&a, &b) == expected_jaccard, || format!("jaccard {a:?} {b:?}"))?;
    }
    Ok(())
}

fn oracle_equivalences() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2015);
    geo_oracle(&mut rng).map_err(|e| format!("geo: {e}"))?;
    same_as_oracle(&mut rng).map_err(|e| format!("sameAs: {e}"))?;
    metric_oracle(&mut rng).map_err(|e| format!("metrics: {e}"))?;
    Ok("geo 10000 points/200 queries, sameAs 1000/2000, metrics 10000 pairs".into())
}

fn t0() -> DateTime<FixedOffset> {
    DateTime::parse_from_rfc3339("2015-03-01T06:00:00+01:00").unwrap()
}

fn descriptor(id: &str, process: &str, macroclass: &str) -> DatasetDescriptor {
    DatasetDescriptor::parse(&format!(
        "id={id}\ncreationDate={}\nsource={id}.csv\noriginalFormat=CSV\nlicense=CC-BY\n\
         processType={process}\nautomationLevel=automatic\nupdatePeriod=12h\nmacroclass={macroclass}\n",
        t0().to_rfc3339()
    ))
    .unwrap()
}

fn fixture_ingestion() -> Result<(Pipeline, QuadStore), String> {
    let mut p = Pipeline::new(vocab::DEFAULT_BASE);
    let mut store = QuadStore::new();
    for (id, process) in [("weather", "realtime"), ("forecast-archive", "static")] {
        let mapping = MappingSpec::parse(id, WEATHER_MAPPING).map_err(|e| e.to_string())?;
        p.register_dataset(&mut store, descriptor(id, process, "Sensors"), mapping).map_err(|e| e.to_string())?;
    }
    for step in 0..3 {
        let at = t0() + Duration::hours(12 * step);
        let files = weather_fixture(&["Firenze", "Prato", "Pistoia", "Empoli"], at);
        p.run_job(&mut store, "weather", &files, at).map_err(|e| e.to_string())?;
        p.run_job(&mut store, "forecast-archive", &files[..2], at).map_err(|e| e.to_string())?;
    }
    Ok((p, store))
}

fn determinism_and_provenance() -> Outcome {
    let (p, mut first) = fixture_ingestion()?;
    let (_, second) = fixture_ingestion()?;
    let export = first.export(None);
    ensure(export == second.export(None), || "exports differ between runs".into())?;

    let target = p.data_context("weather");
    let other = p.data_context("forecast-archive");
    let in_target = first.match_pattern(&Pattern::any().c(&target)).len();
    let before = first.len();
    let other_before = first.export(Some(&other));
    let metadata_before = first.export(Some(&p.metadata_context()));
    let removed = first.remove_context(&target).map_err(|e| e.to_string())?;
    ensure(in_target > 0 && removed == in_target, || format!("removed {removed}, context held {in_target}"))?;
    ensure(first.len() == before - in_target, || format!("store holds {} after, {before} before", first.len()))?;
    ensure(first.match_pattern(&Pattern::any().c(&target)).is_empty(), || "context not empty".into())?;
    ensure(first.export(Some(&other)) == other_before, || "other dataset changed".into())?;
    ensure(first.export(Some(&p.metadata_context())) == metadata_before, || "metadata changed".into())?;
    let survivors = nquads::parse_document(&export).map_err(|e| e.to_string())?;
    let missing = survivors.iter().filter(|q| !first.contains(q)).count();
    ensure(missing == in_target, || format!("{missing} quads gone, {in_target} expected"))?;
    Ok(format!("{} bytes identical, {removed} of {before} quads removed", export.len()))
}

fn avm_history(ctx: &Iri, n: usize, start: DateTime<FixedOffset>, rng: &mut ChaCha8Rng) -> Vec<(Vec<Quad>, DateTime<FixedOffset>, f64)> {
    (0..n)
        .map(|i| {
            let t = start + Duration::seconds(rng.gen_range(0..120 * 86_400));
            let delay = f64::from(rng.gen_range(-300i32..1800));
            let rec = iri(format!("{ctx}/avm/{i}"));
            let inst = iri(format!("{ctx}/instant/{i}"));
            let q = |s: &Iri, p: &str, o: Term| Quad::new(s.clone(), km4c(p), o, ctx.clone());
            let quads = vec![
                Quad::new(rec.clone(), iri(vocab::RDF_TYPE), km4c("AVMRecord"), ctx.clone()),
                q(&rec, "delay", Literal::decimal(delay).into()),
                q(&rec, "vehicle", Literal::string(format!("bus {}", i % 40)).into()),
                q(&rec, "hasLastStopTime", inst.clone().into()),
                q(&inst, "inXSDDateTime", Literal::date_time(t).into()),
                q(&inst, "instantAVM", rec.clone().into()),
            ];
            (quads, t, delay)
        })
        .collect()
}

#[derive(Debug, Default, PartialEq)]
struct Bucket {
    count: i64,
    sum: f64,
    min: f64,
    max: f64,
}

fn compaction_round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let ctx = iri("http://acceptance.test/graph/avm");
    let streets = iri("http://acceptance.test/graph/streets");
    let zone = FixedOffset::east_opt(3600).unwrap();
    let start = zone.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap();
    let now = start + Duration::days(120);
    let window = Duration::days(30);
    let mut store = QuadStore::new();
    store.tag_context(&ctx, MacroClass::Sensors, DataKind::Realtime).map_err(|e| e.to_string())?;
    store.tag_context(&streets, MacroClass::StreetGuide, DataKind::Static).map_err(|e| e.to_string())?;
    store
        .insert(&[Quad::new(iri(format!("{streets}/road/1")), km4c("roadName"), Literal::string("VIA ROMA"), streets.clone())])
        .map_err(|e| e.to_string())?;
    let history = avm_history(&ctx, 10_000, start, &mut rng);
    for (quads, _, _) in &history {
        store.insert(quads).map_err(|e| e.to_string())?;
    }
    let before: BTreeSet<Quad> = store.match_pattern(&Pattern::any()).into_iter().collect();

    let spec = AggregationSpec { record_class: km4c("AVMRecord"), measure: km4c("delay"), offset: zone };
    let archive = dir.path().join("avm.nq");
    let report = store.compact(window, now, &spec, &archive).map_err(|e| e.to_string())?;
    let after: BTreeSet<Quad> = store.match_pattern(&Pattern::any()).into_iter().collect();
    let dropped: BTreeSet<Quad> = before.difference(&after).cloned().collect();
    let cutoff = now - window;
    let expected_dropped: BTreeSet<Quad> =
        history.iter().filter(|(_, t, _)| *t < cutoff).flat_map(|(q, _, _)| q.iter().cloned()).collect();
    ensure(dropped == expected_dropped, || format!("{} dropped, {} expected", dropped.len(), expected_dropped.len()))?;
    ensure(report.dropped_quad_count == dropped.len(), || "reported drop count differs".into())?;
    let archived: BTreeSet<Quad> = nquads::parse_document(&std::fs::read_to_string(&archive).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?
        .into_iter()
        .collect();
    ensure(archived == dropped, || format!("archive holds {} quads, {} dropped", archived.len(), dropped.len()))?;

    let mut expected: BTreeMap<(String, String), Bucket> = BTreeMap::new();
    for (_, t, delay) in history.iter().filter(|(_, t, _)| *t < cutoff) {
        let local = t.with_timezone(&zone);
        let week = local.iso_week();
        for key in [
            ("day".to_string(), local.format("%Y-%m-%d").to_string()),
            ("week".to_string(), format!("{}-W{:02}", week.year(), week.week())),
            ("month".to_string(), local.format("%Y-%m").to_string()),
        ] {
            let b = expected.entry(key).or_insert(Bucket { min: f64::INFINITY, max: f64::NEG_INFINITY, ..Bucket::default() });
            b.count += 1;
            b.sum += delay;
            b.min = b.min.min(*delay);
            b.max = b.max.max(*delay);
        }
    }
    let value = |s: &Iri, p: &str| -> Option<Literal> {
        store.match_pattern(&Pattern::any().s(s).p(&km4c(p)).c(&ctx)).first().and_then(|q| q.object.as_literal().cloned())
    };
    let mut got: BTreeMap<(String, String), Bucket> = BTreeMap::new();
    for q in store.match_pattern(&Pattern::any().p(&iri(vocab::RDF_TYPE)).o(km4c("StatisticalData")).c(&ctx)) {
        let s = &q.subject;
        let read = |p: &str| value(s, p).ok_or_else(|| format!("{s} lacks {p}"));
        let key = (read("aggregatePeriod")?.lexical().to_string(), read("periodKey")?.lexical().to_string());
        let bucket = Bucket {
            count: read("sampleCount")?.as_i64().unwrap(),
            sum: read("sum")?.as_f64().unwrap(),
            min: read("min")?.as_f64().unwrap(),
            max: read("max")?.as_f64().unwrap(),
        };
        ensure(read("mean")?.as_f64() == Some(bucket.sum / bucket.count as f64), || format!("{s} mean"))?;
        got.insert(key, bucket);
    }
    ensure(got == expected, || format!("{} aggregate buckets, {} expected, or values differ", got.len(), expected.len()))?;

    store.insert(&archived.iter().cloned().collect::<Vec<_>>()).map_err(|e| e.to_string())?;
    let restored: BTreeSet<Quad> = store.match_pattern(&Pattern::any()).into_iter().collect();
    ensure(before.is_subset(&restored), || "re-inserted archive does not restore the store".into())?;
    let extra = restored.difference(&before).count();
    ensure(extra == report.aggregate_quad_count, || format!("{extra} extra quads after restore"))?;
    Ok(format!("{} quads dropped and restored, {} buckets match", dropped.len(), got.len()))
}

fn weather_growth() -> Outcome {
    let names: Vec<String> = (0..20).map(|i| format!("Comune {i}")).collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut p = Pipeline::new(vocab::DEFAULT_BASE);
    let mut store = QuadStore::new();
    let mapping = MappingSpec::parse("weather", WEATHER_MAPPING).map_err(|e| e.to_string())?;
    p.register_dataset(&mut store, descriptor("weather", "realtime", "Sensors"), mapping).map_err(|e| e.to_string())?;
    let mut failed = 0;
    for half_day in 0..60 {
        let now = t0() + Duration::hours(12 * half_day);
        let reports = p.run_scheduler(&mut store, now, |_, at| Ok(weather_fixture(&names, at)));
        failed += reports.iter().filter(|r| r.error.is_some()).count();
    }
    ensure(failed == 0, || format!("{failed} failed runs"))?;
    let staged = p.staging().dataset("weather").count();
    let expected = names.len() * 960;
    let deviation = (staged as f64 - expected as f64).abs() / expected as f64;
    ensure(deviation <= GROWTH_TOLERANCE, || format!("{staged} staged, {expected} expected"))?;
    Ok(format!("{staged} staged for {} municipalities, expected {expected}", names.len()))
}

fn parse_counts(text: &str) -> Vec<(StatsRow, KindCounts)> {
    text.lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split('\t').collect();
            let n = |i: usize| f[i].parse::<u64>().unwrap();
            (StatsRow::Macro(MacroClass::parse(f[0]).unwrap()), KindCounts::new(n(1), n(2), n(3)))
        })
        .collect()
}

fn table_additivity() -> Outcome {
    let rows = parse_counts(include_str!("fixtures/macroclass_counts.tsv"));
    let stats = StoreStats::from_rows(rows.clone());
    ensure(stats.is_consistent(), || "fixture table inconsistent".into())?;
    let t = stats.totals;
    ensure(
        (t.static_count, t.realtime_count, t.reconciliation_count, stats.grand_total())
            == (70_103_930, 52_826_183, 36_777, 122_966_890),
        || format!("totals {t:?}"),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut split = Vec::new();
    for (row, c) in &rows {
        for part in [c.static_count, c.realtime_count, c.reconciliation_count].iter().enumerate() {
            let mut left = *part.1;
            while left > 0 {
                let take = rng.gen_range(1..=left);
                let mut counts = KindCounts::default();
                counts.add([DataKind::Static, DataKind::Realtime, DataKind::Reconciliation][part.0], take);
                split.push((*row, counts));
                left -= take;
            }
        }
    }
    let shuffled = StoreStats::from_rows(split.into_iter().rev());
    ensure(shuffled == stats, || "split rows change the table".into())?;

    for trial in 0..20 {
        let mut store = QuadStore::new();
        let mut tally: HashMap<StatsRow, KindCounts> = HashMap::new();
        for c in 0..rng.gen_range(1..12) {
            let ctx = iri(format!("http://acceptance.test/t{trial}/c{c}"));
            let n = rng.gen_range(0..200u64);
            let row = if rng.gen_bool(0.15) {
                StatsRow::Unclassified
            } else {
                let m = MacroClass::ALL[rng.gen_range(0..7)];
                let kind = [DataKind::Static, DataKind::Realtime, DataKind::Reconciliation][rng.gen_range(0..3)];
                store.tag_context(&ctx, m, kind).map_err(|e| e.to_string())?;
                tally.entry(StatsRow::Macro(m)).or_default().add(kind, n);
                StatsRow::Macro(m)
            };
            if row == StatsRow::Unclassified {
                tally.entry(row).or_default().add(DataKind::Static, n);
            }
            let quads: Vec<Quad> = (0..n)
                .map(|i| Quad::new(iri(format!("{ctx}/s{i}")), km4c("name"), Literal::integer(i as i64), ctx.clone()))
                .collect();
            store.insert(&quads).map_err(|e| e.to_string())?;
        }
        let got = store.store_stats();
        ensure(got.is_consistent(), || format!("trial {trial} inconsistent"))?;
        ensure(got.grand_total() == store.len() as u64, || format!("trial {trial} total {}", got.grand_total()))?;
        for (row, counts) in &got.per_macroclass {
            ensure(tally.get(row).copied().unwrap_or_default() == *counts, || format!("trial {trial} row {row}"))?;
        }
    }
    Ok(format!("grand total {}, 20 random stores consistent", stats.grand_total()))
}

#[test]
fn acceptance() {
    let checks: [(&str, fn() -> Outcome); 8] = [
        ("f1-fidelity", f1_fidelity),
        ("method-ordering", method_ordering),
        ("schema-constraints", schema_constraints),
        ("oracle-equivalences", oracle_equivalences),
        ("determinism-provenance", determinism_and_provenance),
        ("compaction-round-trip", compaction_round_trip),
        ("weather-growth", weather_growth),
        ("table-additivity", table_additivity),
    ];
    let mut failed = Vec::new();
    for (name, check) in checks {
        match check() {
            Ok(evidence) => println!("PASS {name}: {evidence}"),
            Err(reason) => {
                println!("FAIL {name}: {reason}");
                failed.push(name);
            }
        }
    }
    assert_eq!(failed, KNOWN_UNATTAINABLE, "unexpected acceptance outcome");
}
