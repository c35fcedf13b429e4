//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use cookiesync::decode::Codec;
use cookiesync::graph::{
    classify_nodes, component_changes_csv, laplacian_spectrum, modularity, percent_change, EdgeFilter, GraphStats,
    MeasurementStats, NodeLabel, RelationGraph,
};
use cookiesync::ids::{filter_candidates, IdCandidate, IdParams, Origin, UserId};
use cookiesync::log_model::Measurement;
use cookiesync::longitudinal::ols_fit;
use cookiesync::sar::{
    legal_deadline, outcome_counts, workload_score, DeadlineMode, HolidayCalendar, InquiryCase, Outcome, WorkloadInputs,
};
use cookiesync::sync::{company_pairs, detect_sync, SyncParams};
use cookiesync::synth::{generate_corpus, Carrier, ScenarioSpec, StarSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, Box<dyn Fn() -> Check>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn candidate(key: &str, value: &str, profile: &str) -> IdCandidate {
    IdCandidate {
        owner_host: "tracker.example".into(),
        key: key.into(),
        value: value.into(),
        profile_id: profile.into(),
        origin: Origin::UrlParam,
    }
}

fn id_rules() -> Check {
    let start = Instant::now();
    let candidates = vec![
        candidate("p_id", "1234abcd", "P1"),
        candidate("p_id", "1234abcd", "P2"),
        candidate("data", "3rw3", "P1"),
        candidate("data", "70g63b5g", "P2"),
        candidate("id", "AAAC", "P1"),
        candidate("id", "AABA", "P2"),
        candidate("key", "1hgtz", "P1"),
        candidate("uid", "9f3a7c21e4b85d06", "P1"),
        candidate("uid", "2c8e51b7f09a46d3", "P2"),
    ];
    let kept: BTreeSet<(String, String)> = filter_candidates(&candidates, &IdParams::default())
        .into_iter()
        .map(|u: UserId| (u.key, u.value))
        .collect();
    let expected: BTreeSet<(String, String)> = [("uid", "9f3a7c21e4b85d06"), ("uid", "2c8e51b7f09a46d3")]
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    ensure(kept == expected, || format!("kept {kept:?}"))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok("four counterexamples eliminated, planted ID kept".into())
}

const CHAINS: [&[Codec]; 6] = [
    &[],
    &[Codec::Base64],
    &[Codec::Base64, Codec::Base64],
    &[Codec::Deflate, Codec::Base64],
    &[Codec::Gzip, Codec::Base64],
    &[Codec::Deflate, Codec::Base64, Codec::Base64],
];

const CARRIERS: [Carrier; 4] = [Carrier::Query, Carrier::Post, Carrier::Nested, Carrier::Referrer];

fn random_spec(rng: &mut ChaCha8Rng, seed: u64) -> ScenarioSpec {
    let stars = (0..rng.random_range(1..=4))
        .map(|i| StarSpec {
            center: format!("hub{i}"),
            leaves: rng.random_range(1..=7),
            carrier: CARRIERS[rng.random_range(0..CARRIERS.len())],
        })
        .collect();
    // Every spec carries a depth-two chain plus up to two others.
    let mut chains = vec![CHAINS[rng.random_range(2..4)].to_vec()];
    for _ in 0..rng.random_range(0..=2) {
        chains.push(CHAINS[rng.random_range(0..CHAINS.len())].to_vec());
    }
    ScenarioSpec {
        n_profiles: rng.random_range(2..=5),
        n_sites: rng.random_range(1..=4),
        stars,
        codec_chains: chains,
        n_isolated: rng.random_range(0..=3),
        ..ScenarioSpec::new(seed)
    }
}

fn sync_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20180525);
    let specs = 24;
    let mut total_pairs = 0;
    for k in 0..specs {
        let spec = random_spec(&mut rng, 1000 + k);
        let s = generate_corpus(&spec).map_err(|e| format!("spec {k}: {e}"))?;
        let ids = cookiesync::ids::detect_ids(&s.corpus, &IdParams::default());
        let found = company_pairs(&detect_sync(
            &s.corpus.requests,
            &ids,
            &s.company_db,
            &SyncParams::default(),
        ));
        let truth: BTreeSet<(String, String)> = s
            .truth
            .sync_pairs
            .iter()
            .map(|p| (p.sender.clone(), p.receiver.clone()))
            .collect();
        let hits = found.intersection(&truth).count();
        let precision = if found.is_empty() {
            1.0
        } else {
            hits as f64 / found.len() as f64
        };
        let recall = if truth.is_empty() {
            1.0
        } else {
            hits as f64 / truth.len() as f64
        };
        ensure(precision == 1.0 && recall == 1.0, || {
            format!(
                "spec {k}: precision {precision}, recall {recall}; chains {:?}",
                spec.codec_chains
            )
        })?;
        total_pairs += truth.len();
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!(
        "{specs} random scenarios, {total_pairs} planted pairs, precision = recall = 1"
    ))
}

fn star_classification() -> Check {
    let spec = ScenarioSpec {
        stars: vec![StarSpec {
            center: "hub".into(),
            leaves: 6,
            carrier: Carrier::Query,
        }],
        codec_chains: vec![vec![Codec::Base64, Codec::Base64]],
        n_isolated: 1,
        ..ScenarioSpec::new(77)
    };
    let s = generate_corpus(&spec).map_err(|e| e.to_string())?;
    let ids = cookiesync::ids::detect_ids(&s.corpus, &IdParams::default());
    let events = detect_sync(&s.corpus.requests, &ids, &s.company_db, &SyncParams::default());
    let graph = cookiesync::graph::build_graph("M1", &events, &[], &BTreeSet::from(["solo1".to_string()]));
    let labels: BTreeMap<String, NodeLabel> = classify_nodes(&graph)
        .into_iter()
        .map(|c| (c.company, c.label))
        .collect();
    ensure(labels.get("hub") == Some(&NodeLabel::Central), || {
        format!("hub: {:?}", labels.get("hub"))
    })?;
    for j in 1..=6 {
        let leaf = format!("hub-leaf{j}");
        ensure(labels.get(&leaf) == Some(&NodeLabel::Outer), || {
            format!("{leaf}: {:?}", labels.get(&leaf))
        })?;
    }
    ensure(labels.get("solo1") == Some(&NodeLabel::Isolated), || {
        format!("solo1: {:?}", labels.get("solo1"))
    })?;
    Ok("center central, 6 leaves outer".into())
}

fn stats_row(ordinal: u32, week: u32, components: usize, largest: usize, lambda: f64) -> MeasurementStats {
    MeasurementStats {
        measurement: Measurement {
            id: format!("M{ordinal}"),
            ordinal,
            week_label: format!("CW{week}"),
            pre_gdpr: ordinal == 1,
        },
        stats: GraphStats {
            node_count: 0,
            isolated_count: 0,
            component_count: components,
            largest_component_size: largest,
            median_component_size: 0.0,
            algebraic_connectivity: lambda,
            diameter: 0,
            avg_path_length: 0.0,
            mean_degree: 0.0,
            median_degree: 0.0,
            modularity: 0.0,
            avg_clustering_coefficient: 0.0,
            community_count: 0,
            edge_count: 0,
            sync_edge_count: 0,
        },
    }
}

fn percent_table() -> Check {
    let start = Instant::now();
    let raw = [
        (20, 59, 429, 0.1187),
        (21, 38, 296, 0.1494),
        (26, 37, 269, 0.1071),
        (28, 30, 277, 0.0994),
        (34, 37, 235, 0.0818),
        (38, 26, 225, 0.0469),
        (43, 38, 268, 0.1146),
    ];
    let printed: [[f64; 3]; 6] = [
        [-35.59, -31.00, 25.86],
        [-37.29, -37.30, -9.77],
        [-49.15, -35.43, -16.26],
        [-37.29, -45.22, -31.09],
        [-55.93, -47.55, -60.49],
        [-35.59, -37.53, -3.45],
    ];
    let rows: Vec<MeasurementStats> = raw
        .iter()
        .enumerate()
        .map(|(i, &(w, c, l, a))| stats_row(i as u32 + 1, w, c, l, a))
        .collect();
    let csv = component_changes_csv(&rows).map_err(|e| e.to_string())?;
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let records: Vec<csv::StringRecord> = reader.records().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    ensure(records.len() == 7, || format!("{} rows", records.len()))?;
    let mut cells = 0;
    for (i, expected) in printed.iter().enumerate() {
        let rec = &records[i + 1];
        for (j, col) in [3, 5, 7].iter().enumerate() {
            let got: f64 = rec[*col]
                .parse()
                .map_err(|_| format!("row {}: cell {:?}", i + 2, &rec[*col]))?;
            ensure((got - expected[j]).abs() <= 0.01 + 1e-12, || {
                format!("row {} column {col}: {got} vs {}", i + 2, expected[j])
            })?;
            cells += 1;
        }
    }
    ensure(records[0][3].is_empty(), || "baseline row has a change".into())?;
    ensure(percent_change(0.0, 1.0).is_err(), || "zero baseline accepted".into())?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("{cells} printed cells matched within 0.01 points"))
}

fn graph(nodes: &[&str], edges: &[(&str, &str)]) -> RelationGraph {
    RelationGraph::from_sync_edges(nodes, edges)
}

fn spectral() -> Check {
    let k2 = graph(&["a", "b"], &[("a", "b")]);
    let k3 = graph(&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("a", "c")]);
    let p3 = graph(&["a", "b", "c"], &[("a", "b"), ("b", "c")]);
    let c5 = graph(
        &["a", "b", "c", "d", "e"],
        &[("a", "b"), ("b", "c"), ("c", "d"), ("d", "e"), ("e", "a")],
    );
    let star = graph(
        &["h", "1", "2", "3", "4", "5"],
        &[("h", "1"), ("h", "2"), ("h", "3"), ("h", "4"), ("h", "5")],
    );
    for (name, g, expected) in [("K2", &k2, 2.0), ("K3", &k3, 3.0), ("P3", &p3, 1.0)] {
        let spectrum = laplacian_spectrum(&g.adjacency(EdgeFilter::Sync));
        ensure((spectrum[1] - expected).abs() <= 1e-9, || {
            format!("{name}: λ₂ = {}", spectrum[1])
        })?;
    }
    let c5_expected = 2.0 - 2.0 * (2.0 * std::f64::consts::PI / 5.0).cos();
    let c5_spec = laplacian_spectrum(&c5.adjacency(EdgeFilter::Sync));
    ensure((c5_spec[1] - c5_expected).abs() <= 1e-9, || {
        format!("C5: λ₂ = {}", c5_spec[1])
    })?;
    for (name, g) in [("K2", &k2), ("K3", &k3), ("P3", &p3), ("C5", &c5), ("S5", &star)] {
        let l1 = laplacian_spectrum(&g.adjacency(EdgeFilter::Sync))[0];
        ensure(l1.abs() <= 1e-9, || format!("{name}: λ₁ = {l1}"))?;
    }
    Ok("λ₂(K2)=2, λ₂(K3)=3, λ₂(P3)=1, λ₁≈0".into())
}

/// Modularity as an exact fraction (numerator, denominator).
fn modularity_exact(g: &RelationGraph, partition: &[Vec<&str>]) -> (i64, i64) {
    let m = g.sync_edges.len() as i64;
    let degree = |v: &str| g.sync_edges.keys().filter(|(a, b)| a == v || b == v).count() as i64;
    let mut num = 0;
    for block in partition {
        let inside = g
            .sync_edges
            .keys()
            .filter(|(a, b)| block.contains(&a.as_str()) && block.contains(&b.as_str()))
            .count() as i64;
        let d: i64 = block.iter().map(|v| degree(v)).sum();
        num += 4 * m * inside - d * d;
    }
    (num, 4 * m * m)
}

fn modularity_check() -> Check {
    let g = graph(
        &["a", "b", "c", "x", "y", "z"],
        &[("a", "b"), ("b", "c"), ("a", "c"), ("x", "y"), ("y", "z"), ("x", "z")],
    );
    let split = vec![vec!["a", "b", "c"], vec!["x", "y", "z"]];
    let whole = vec![vec!["a", "b", "c", "x", "y", "z"]];
    let (n, d) = modularity_exact(&g, &split);
    ensure(2 * n == d, || format!("oracle gave {n}/{d}"))?;
    let q = modularity(&g, EdgeFilter::Sync, &split);
    ensure((q - 0.5).abs() <= 1e-12, || format!("two triangles: {q}"))?;
    let (n0, _) = modularity_exact(&g, &whole);
    let q0 = modularity(&g, EdgeFilter::Sync, &whole);
    ensure(n0 == 0 && q0.abs() <= 1e-12, || format!("single community: {q0}"))?;
    Ok("two triangles 0.5, single community 0".into())
}

/// ln Γ(x), Lanczos approximation (g = 7, n = 9).
fn ln_gamma(x: f64) -> f64 {
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Continued fraction of the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            break;
        }
    }
    h
}

/// Regularised incomplete beta I_x(a, b).
fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front = (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Textbook simple regression: slope, intercept, two-sided p of the slope.
fn ols_oracle(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let df = n - 2.0;
    let se = (sse / df / sxx).sqrt();
    let t = slope / se;
    let p = inc_beta(df / 2.0, 0.5, df / (df + t * t));
    (slope, intercept, p)
}

fn regression_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let n = rng.random_range(5..=50);
        let slope = rng.random_range(-5.0..5.0);
        let intercept = rng.random_range(-100.0..100.0);
        let noise = rng.random_range(0.1..20.0);
        let mut x = 0.0;
        let points: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                x += rng.random_range(1..=4) as f64;
                (x, intercept + slope * x + noise * rng.random_range(-1.0..1.0))
            })
            .collect();
        let fit = ols_fit(&points).map_err(|e| format!("series {k}: {e}"))?;
        let (s, i, p) = ols_oracle(&points);
        for (what, got, want) in [
            ("slope", fit.slope, s),
            ("intercept", fit.intercept, i),
            ("p", fit.p_value, p),
        ] {
            let err = (got - want).abs();
            worst = worst.max(err);
            ensure(err <= 1e-6, || format!("series {k} (n = {n}): {what} {got} vs {want}"))?;
        }
    }
    Ok(format!("100 series, largest deviation {worst:.1e}"))
}

fn date(s: &str) -> NaiveDate {
    s.parse().expect("date literal")
}

fn sar_arithmetic() -> Check {
    let w = |m_pre, m_post, a_online, a_offline| WorkloadInputs {
        m_pre,
        m_post,
        a_online,
        a_offline,
    };
    ensure(workload_score(&w(2, 1, 1, 1)) == 52, || "C(2,1,1,1) != 52".into())?;
    ensure(workload_score(&w(1, 0, 0, 0)) == 5, || "C(1,0,0,0) != 5".into())?;
    ensure(workload_score(&w(0, 0, 0, 0)) == 0, || "C(0,0,0,0) != 0".into())?;
    let cases = [
        ("2018-06-20", DeadlineMode::Calendar, "2018-07-20"),
        ("2018-06-20", DeadlineMode::Business, "2018-08-01"),
        ("2018-09-21", DeadlineMode::Calendar, "2018-10-22"),
        ("2018-09-21", DeadlineMode::Business, "2018-11-05"),
    ];
    for (sent, mode, expected) in cases {
        let got = legal_deadline(date(sent), mode);
        ensure(got == date(expected), || {
            format!("{sent} {mode:?}: {got}, expected {expected}")
        })?;
    }
    Ok("workload 52; deadlines 07-20, 08-01, 10-22, 11-05".into())
}

fn outcome_fixture() -> Check {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/round_one_cases.json");
    let cases: Vec<InquiryCase> =
        serde_json::from_slice(&fs::read(&path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure(cases.len() == 36, || format!("{} cases", cases.len()))?;
    for c in &cases {
        c.validate().map_err(|e| e.to_string())?;
    }
    let counts = outcome_counts(&cases, DeadlineMode::Calendar, HolidayCalendar::default());
    let expected = [
        (Outcome::GotAccess, 13),
        (Outcome::NoDataStored, 7),
        (Outcome::AccessDenied, 1),
        (Outcome::InProcess, 11),
        (Outcome::NoResponse, 4),
    ];
    for (o, n) in expected {
        let got = counts.get(&o).copied().unwrap_or(0);
        ensure(got == n, || format!("{}: {got}, expected {n}", o.as_str()))?;
    }
    Ok("13 / 7 / 1 / 11 / 4 at the first deadline".into())
}

fn cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_cookiesync"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim())
    })
}

fn snapshot(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.strip_prefix(dir).unwrap().display().to_string();
        files.insert(name, fs::read(&path).map_err(|e| e.to_string())?);
    }
    Ok(files)
}

fn all_stages(dir: &Path) -> Result<(), String> {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/round_one_cases.json");
    let fixture = fixture.to_str().unwrap();
    cli(dir, &["simulate", "--spec", "spec.json"])?;
    cli(dir, &["--out-dir", "ingested", "ingest", "--jsonl", "out/corpus.jsonl"])?;
    cli(dir, &["ids"])?;
    cli(dir, &["sync"])?;
    cli(dir, &["graph"])?;
    cli(dir, &["stats", "--graph", "out/graph_M1.json"])?;
    cli(dir, &["classify", "--graph", "out/graph_M1.json"])?;
    cli(dir, &["compare", "--series", "series.csv"])?;
    cli(dir, &["report", "--stats", "out/stats.json"])?;
    cli(dir, &["sar", "score", "--inputs", fixture])?;
    cli(dir, &["sar", "outcomes", "--inputs", fixture])
}

fn determinism(suite_start: Instant) -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    let spec = r#"{"seed": 9, "n_profiles": 4, "n_sites": 3,
        "stars": [{"center": "alpha", "leaves": 5}, {"center": "beta", "leaves": 3, "carrier": "referrer"}],
        "codec_chains": [["gzip", "base64"]], "noise": 12, "n_isolated": 3}"#;
    fs::write(dir.join("spec.json"), spec).map_err(|e| e.to_string())?;
    let mut series = String::from("metric,ordinal,value,pre_gdpr\n");
    for (i, v) in [59, 38, 37, 30, 37, 26, 38].iter().enumerate() {
        series.push_str(&format!("components,{},{v},{}\n", i + 1, i == 0));
    }
    fs::write(dir.join("series.csv"), series).map_err(|e| e.to_string())?;
    all_stages(dir)?;
    let first = (snapshot(&dir.join("out"))?, snapshot(&dir.join("ingested"))?);
    all_stages(dir)?;
    let second = (snapshot(&dir.join("out"))?, snapshot(&dir.join("ingested"))?);
    let mut differing: Vec<&String> = Vec::new();
    for (a, b) in [(&first.0, &second.0), (&first.1, &second.1)] {
        differing.extend(a.keys().filter(|name| a.get(*name) != b.get(*name)));
        differing.extend(b.keys().filter(|name| !a.contains_key(*name)));
    }
    ensure(differing.is_empty(), || format!("differing outputs: {differing:?}"))?;
    let elapsed = suite_start.elapsed();
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!(
        "{} artifacts byte-identical across runs; suite ran in {:.1}s",
        first.0.len() + first.1.len(),
        elapsed.as_secs_f64()
    ))
}

fn main() -> ExitCode {
    let suite_start = Instant::now();
    let criteria: Vec<Criterion> = vec![
        ("ID-rule fidelity", Box::new(id_rules)),
        ("sync-detection oracle", Box::new(sync_oracle)),
        ("star-topology classification", Box::new(star_classification)),
        ("percent-change table", Box::new(percent_table)),
        ("spectral correctness", Box::new(spectral)),
        ("modularity", Box::new(modularity_check)),
        ("regression oracle", Box::new(regression_oracle)),
        ("SAR arithmetic", Box::new(sar_arithmetic)),
        ("outcome aggregation", Box::new(outcome_fixture)),
        ("determinism", Box::new(move || determinism(suite_start))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let ms = start.elapsed().as_millis();
        match result {
            Ok(detail) => println!("PASS criterion {:2}: {name}: {detail} ({ms} ms)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:2}: {name}: {why} ({ms} ms)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
