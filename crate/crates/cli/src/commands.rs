//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cookiesync::company::CompanyDb;
use cookiesync::decode::DecodeParams;
use cookiesync::graph::{
    build_graph, classify_nodes, collect_embeds, component_changes_csv, graph_metrics_csv, graph_stats, pagerank,
    to_dot, EdgeFilter, GraphDocument, MeasurementStats, PageRankParams, SpectralParams, StatsParams,
};
use cookiesync::ids::{detect_ids, IdParams, UserId};
use cookiesync::log_model::har::{parse_har_with, HarOptions};
use cookiesync::log_model::jsonl::{parse_jsonl_with, read_records, to_jsonl_bytes, Mode};
use cookiesync::log_model::{BrowserProfile, Corpus, Measurement};
use cookiesync::longitudinal::{series_from_rows, series_from_stats, trend_pair, SeriesRow, TrendPair, XAxis};
use cookiesync::sar::{
    legal_deadline_with, outcome_counts, summarize, workload_score, DeadlineMode, HolidayCalendar, InquiryCase,
    Outcome, WorkloadInputs,
};
use cookiesync::sync::{detect_sync, SyncEvent, SyncParams};
use cookiesync::synth::{company_db_json, generate_corpus, ScenarioSpec};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::output::{read, read_json, Artifacts};
use crate::{
    AxisArg, ClassifyArgs, Cli, CliError, Command, CompareArgs, EdgeArg, GraphArgs, HolidayArg, IdsArgs, IngestArgs,
    ModeArg, ReportArgs, SarCommand, SimulateArgs, StatsArgs, SyncArgs,
};

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(dir) = cli.out_dir {
        config.out_dir = dir;
    }
    match cli.command {
        Command::Ingest(a) => ingest(config, a),
        Command::Ids(a) => ids(config, a),
        Command::Sync(a) => sync(config, a),
        Command::Graph(a) => graph(config, a),
        Command::Stats(a) => stats(config, a),
        Command::Classify(a) => classify(config, a),
        Command::Compare(a) => compare(config, a),
        Command::Sar(a) => sar(config, a.command),
        Command::Simulate(a) => simulate(config, a),
        Command::Report(a) => report(config, a),
    }
}

/// Flag, then config entry, then the conventional file in the output directory.
fn resolve(flag: Option<PathBuf>, configured: &Option<PathBuf>, config: &PipelineConfig, default: &str) -> PathBuf {
    flag.or_else(|| configured.clone())
        .unwrap_or_else(|| config.out_dir.join(default))
}

fn exists(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Input(format!("{what} not found: {}", path.display())))
    }
}

fn input_error(path: &Path, e: cookiesync::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn load_corpus(path: &Path) -> Result<Corpus, CliError> {
    exists(path, "corpus")?;
    let bytes = read(path)?;
    let corpus = parse_jsonl_with(&bytes, Mode::Strict)
        .map_err(|e| input_error(path, e))?
        .corpus;
    corpus.validate().map_err(|e| input_error(path, e))?;
    Ok(corpus)
}

fn load_records<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<Vec<T>, CliError> {
    exists(path, what)?;
    read_records(&read(path)?).map_err(|e| input_error(path, e))
}

/// An explicitly named company DB must exist; the conventional one is
/// optional and its absence leaves host resolution to the suffix list.
fn load_company_db(flag: Option<PathBuf>, config: &PipelineConfig) -> Result<(CompanyDb, Option<PathBuf>), CliError> {
    let explicit = flag.or_else(|| config.company_db.clone());
    let path = match explicit {
        Some(p) => {
            exists(&p, "company database")?;
            p
        }
        None => {
            let p = config.out_dir.join("company_db.json");
            if !p.is_file() {
                return Ok((CompanyDb::empty(), None));
            }
            p
        }
    };
    let db = CompanyDb::load(&read(&path)?).map_err(|e| input_error(&path, e))?;
    Ok((db, Some(path)))
}

fn ingest(mut config: PipelineConfig, a: IngestArgs) -> Result<(), CliError> {
    if a.har.is_empty() && a.jsonl.is_empty() {
        return Err(CliError::Input(
            "ingest needs at least one --har or --jsonl file".into(),
        ));
    }
    if a.profile_id.is_some() && a.har.len() > 1 {
        return Err(CliError::Input("--profile-id applies to a single --har file".into()));
    }
    if let Some(limit) = a.max_post_body {
        config.max_post_body = limit;
    }
    config.validate()?;
    let mode = if a.lenient { Mode::Lenient } else { Mode::Strict };
    let mut corpus = Corpus::default();
    for path in &a.jsonl {
        exists(path, "JSONL file")?;
        let load = parse_jsonl_with(&read(path)?, mode).map_err(|e| input_error(path, e))?;
        for e in &load.skipped {
            eprintln!("warning: {}: skipped {e}", path.display());
        }
        corpus.extend(load.corpus);
    }
    if !a.har.is_empty() {
        if !corpus.measurements.iter().any(|m| m.id == a.measurement_id) {
            corpus.measurements.push(Measurement {
                id: a.measurement_id.clone(),
                ordinal: a.ordinal,
                week_label: a.week.clone(),
                pre_gdpr: a.pre_gdpr,
            });
        }
        let options = HarOptions {
            max_post_body: config.max_post_body,
        };
        for path in &a.har {
            exists(path, "HAR file")?;
            let profile = match &a.profile_id {
                Some(p) => p.clone(),
                None => path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .ok_or_else(|| CliError::Input(format!("no profile id derivable from {}", path.display())))?,
            };
            let log = parse_har_with(&read(path)?, &a.measurement_id, &profile, &options)
                .map_err(|e| input_error(path, e))?;
            if let Some(first) = log.errors.first() {
                if !a.lenient {
                    return Err(CliError::Input(format!(
                        "{}: entry {}: {} (use --lenient to skip bad entries)",
                        path.display(),
                        first.index,
                        first.message
                    )));
                }
                for e in &log.errors {
                    eprintln!("warning: {}: skipped entry {}: {}", path.display(), e.index, e.message);
                }
            }
            corpus.profiles.push(BrowserProfile {
                id: profile,
                measurement_id: a.measurement_id.clone(),
                country_tag: a.country.clone(),
                user_agent: String::new(),
            });
            corpus.requests.extend(log.requests);
            corpus.cookies.extend(log.cookies);
        }
    }
    corpus.validate().map_err(|e| CliError::Input(e.to_string()))?;
    let inputs: Vec<&Path> = a.jsonl.iter().chain(&a.har).map(PathBuf::as_path).collect();
    let out = Artifacts::new("ingest", &config, &inputs)?;
    let records = corpus.measurements.len() + corpus.profiles.len() + corpus.requests.len() + corpus.cookies.len();
    let path = out.write("corpus.jsonl", &to_jsonl_bytes(&corpus), records)?;
    println!("{}", path.display());
    Ok(())
}

fn ids(mut config: PipelineConfig, a: IdsArgs) -> Result<(), CliError> {
    if let Some(v) = a.similarity_threshold {
        config.similarity_threshold = v;
    }
    if let Some(v) = a.min_id_length {
        config.min_id_length = v;
    }
    if let Some(v) = a.delimiters {
        config.delimiters = v;
    }
    config.validate()?;
    let corpus_path = resolve(a.corpus, &config.corpus, &config, "corpus.jsonl");
    let corpus = load_corpus(&corpus_path)?;
    let params = IdParams {
        similarity_threshold: config.similarity_threshold,
        min_id_length: config.min_id_length,
        delimiters: config.delimiter_chars(),
    };
    let found = detect_ids(&corpus, &params);
    let out = Artifacts::new("ids", &config, &[&corpus_path])?;
    println!("{}", out.write_records("ids.jsonl", &found)?.display());
    Ok(())
}

fn sync(mut config: PipelineConfig, a: SyncArgs) -> Result<(), CliError> {
    if let Some(v) = a.max_decode_depth {
        config.max_decode_depth = v;
    }
    if let Some(v) = a.max_inflate_bytes {
        config.max_inflate_bytes = v;
    }
    if let Some(v) = a.delimiters {
        config.delimiters = v;
    }
    config.validate()?;
    let corpus_path = resolve(a.corpus, &config.corpus, &config, "corpus.jsonl");
    let ids_path = resolve(a.ids, &config.ids, &config, "ids.jsonl");
    let corpus = load_corpus(&corpus_path)?;
    let ids: Vec<UserId> = load_records(&ids_path, "ID file")?;
    let (db, db_path) = load_company_db(a.company_db, &config)?;
    let params = SyncParams {
        decode: DecodeParams {
            max_depth: config.max_decode_depth,
            max_inflate_bytes: config.max_inflate_bytes,
        },
        delimiters: config.delimiter_chars(),
    };
    let events = detect_sync(&corpus.requests, &ids, &db, &params);
    let mut inputs = vec![corpus_path.as_path(), ids_path.as_path()];
    inputs.extend(db_path.as_deref());
    let out = Artifacts::new("sync", &config, &inputs)?;
    println!("{}", out.write_records("sync_events.jsonl", &events)?.display());
    Ok(())
}

/// Declared measurement, or a placeholder for IDs only seen on records.
fn measurement_of(corpus: &Corpus, id: &str, position: usize) -> Measurement {
    corpus
        .measurements
        .iter()
        .find(|m| m.id == id)
        .cloned()
        .unwrap_or_else(|| Measurement {
            id: id.to_string(),
            ordinal: position as u32 + 1,
            week_label: String::new(),
            pre_gdpr: false,
        })
}

fn file_safe(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn graph(config: PipelineConfig, a: GraphArgs) -> Result<(), CliError> {
    config.validate()?;
    let corpus_path = resolve(a.corpus, &config.corpus, &config, "corpus.jsonl");
    let events_path = resolve(a.events, &config.events, &config, "sync_events.jsonl");
    let corpus = load_corpus(&corpus_path)?;
    let events: Vec<SyncEvent> = load_records(&events_path, "sync event file")?;
    let (db, db_path) = load_company_db(a.company_db, &config)?;
    let mut inputs = vec![corpus_path.as_path(), events_path.as_path()];
    inputs.extend(db_path.as_deref());
    let out = Artifacts::new("graph", &config, &inputs)?;
    for (i, mid) in corpus.measurement_ids().iter().enumerate() {
        let requests: Vec<_> = corpus
            .requests
            .iter()
            .filter(|r| &r.measurement_id == mid)
            .cloned()
            .collect();
        let (embeds, seen) = collect_embeds(&requests, &db);
        let own: Vec<SyncEvent> = events.iter().filter(|e| &e.measurement_id == mid).cloned().collect();
        let g = build_graph(mid, &own, &embeds, &seen);
        let doc = GraphDocument::new(&g, &measurement_of(&corpus, mid, i));
        let stem = format!("graph_{}", file_safe(mid));
        let records = doc.nodes.len() + doc.edges.len();
        println!("{}", out.write_json(&format!("{stem}.json"), &doc, records)?.display());
        out.write(&format!("{stem}.dot"), to_dot(&g).as_bytes(), records)?;
    }
    Ok(())
}

fn edge_filter(arg: Option<EdgeArg>, configured: EdgeFilter) -> EdgeFilter {
    match arg {
        Some(EdgeArg::Sync) => EdgeFilter::Sync,
        Some(EdgeArg::Embed) => EdgeFilter::Embed,
        Some(EdgeArg::Both) => EdgeFilter::Both,
        None => configured,
    }
}

fn load_graphs(paths: &[PathBuf]) -> Result<Vec<GraphDocument>, CliError> {
    paths
        .iter()
        .map(|p| {
            exists(p, "graph file")?;
            read_json::<GraphDocument>(p)
        })
        .collect()
}

/// Flat CSV row of one measurement's statistics.
#[derive(Debug, Serialize)]
struct StatsRow<'a> {
    measurement: &'a str,
    ordinal: u32,
    week: &'a str,
    pre_gdpr: bool,
    nodes: usize,
    isolated: usize,
    edges: usize,
    sync_edges: usize,
    components: usize,
    largest_component: usize,
    median_component: f64,
    algebraic_connectivity: f64,
    diameter: usize,
    avg_path_length: f64,
    mean_degree: f64,
    median_degree: f64,
    modularity: f64,
    avg_clustering_coefficient: f64,
    communities: usize,
}

impl<'a> From<&'a MeasurementStats> for StatsRow<'a> {
    fn from(r: &'a MeasurementStats) -> Self {
        let s = &r.stats;
        StatsRow {
            measurement: &r.measurement.id,
            ordinal: r.measurement.ordinal,
            week: &r.measurement.week_label,
            pre_gdpr: r.measurement.pre_gdpr,
            nodes: s.node_count,
            isolated: s.isolated_count,
            edges: s.edge_count,
            sync_edges: s.sync_edge_count,
            components: s.component_count,
            largest_component: s.largest_component_size,
            median_component: s.median_component_size,
            algebraic_connectivity: s.algebraic_connectivity,
            diameter: s.diameter,
            avg_path_length: s.avg_path_length,
            mean_degree: s.mean_degree,
            median_degree: s.median_degree,
            modularity: s.modularity,
            avg_clustering_coefficient: s.avg_clustering_coefficient,
            communities: s.community_count,
        }
    }
}

fn stats(mut config: PipelineConfig, a: StatsArgs) -> Result<(), CliError> {
    config.edges = edge_filter(a.edges, config.edges);
    if let Some(v) = a.seed {
        config.community_seed = v;
    }
    if let Some(v) = a.dense_limit {
        config.dense_limit = v;
    }
    config.validate()?;
    let docs = load_graphs(&a.graphs)?;
    let params = StatsParams {
        filter: config.edges,
        seed: config.community_seed,
        spectral: SpectralParams {
            dense_limit: config.dense_limit,
            ..SpectralParams::default()
        },
    };
    let mut rows: Vec<MeasurementStats> = docs
        .iter()
        .map(|d| MeasurementStats {
            measurement: d.measurement.clone(),
            stats: graph_stats(&d.to_graph(), &params),
        })
        .collect();
    rows.sort_by(|x, y| (x.measurement.ordinal, &x.measurement.id).cmp(&(y.measurement.ordinal, &y.measurement.id)));
    let inputs: Vec<&Path> = a.graphs.iter().map(PathBuf::as_path).collect();
    let out = Artifacts::new("stats", &config, &inputs)?;
    println!("{}", out.write_json("stats.json", &rows, rows.len())?.display());
    let flat: Vec<StatsRow> = rows.iter().map(StatsRow::from).collect();
    println!("{}", out.write_csv("stats.csv", &flat)?.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct ClassificationRow<'a> {
    measurement: &'a str,
    company: &'a str,
    direct_partners: usize,
    indirect_partners: usize,
    label: &'static str,
    pagerank: f64,
}

fn classify(mut config: PipelineConfig, a: ClassifyArgs) -> Result<(), CliError> {
    if let Some(v) = a.damping {
        config.damping = v;
    }
    config.validate()?;
    let docs = load_graphs(&a.graphs)?;
    let params = PageRankParams {
        damping: config.damping,
        tolerance: config.pagerank_tolerance,
        ..PageRankParams::default()
    };
    let inputs: Vec<&Path> = a.graphs.iter().map(PathBuf::as_path).collect();
    let out = Artifacts::new("classify", &config, &inputs)?;
    for doc in &docs {
        let g = doc.to_graph();
        let ranks = pagerank(&g, EdgeFilter::Sync, &params);
        let classes = classify_nodes(&g);
        let rows: Vec<ClassificationRow> = classes
            .iter()
            .map(|c| ClassificationRow {
                measurement: &doc.measurement.id,
                company: &c.company,
                direct_partners: c.direct_partners,
                indirect_partners: c.indirect_partners,
                label: c.label.as_str(),
                pagerank: ranks.get(&c.company).copied().unwrap_or(0.0),
            })
            .collect();
        let name = format!("classification_{}.csv", file_safe(&doc.measurement.id));
        println!("{}", out.write_csv(&name, &rows)?.display());
    }
    Ok(())
}

/// Trend fits of one metric, or why they could not be computed.
#[derive(Debug, Serialize)]
struct TrendEntry {
    metric: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    trend: Option<TrendPair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn compare(mut config: PipelineConfig, a: CompareArgs) -> Result<(), CliError> {
    if let Some(axis) = a.x_axis {
        config.x_axis = match axis {
            AxisArg::Ordinal => XAxis::Ordinal,
            AxisArg::CalendarWeek => XAxis::CalendarWeek,
        };
    }
    config.validate()?;
    let (input, series) = match (a.stats, a.series) {
        (_, Some(path)) => {
            exists(&path, "series file")?;
            let mut reader =
                csv::Reader::from_path(&path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let rows = reader
                .deserialize::<SeriesRow>()
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let series = series_from_rows(&rows).map_err(|e| input_error(&path, e))?;
            (path, series)
        }
        (stats, None) => {
            let path = stats.unwrap_or_else(|| config.out_dir.join("stats.json"));
            exists(&path, "stats file")?;
            let rows: Vec<MeasurementStats> = read_json(&path)?;
            (path, series_from_stats(&rows))
        }
    };
    let entries: Vec<TrendEntry> = series
        .iter()
        .map(|s| match trend_pair(s, config.x_axis) {
            Ok(t) => TrendEntry {
                metric: s.metric_name.clone(),
                trend: Some(t),
                error: None,
            },
            Err(e) => TrendEntry {
                metric: s.metric_name.clone(),
                trend: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let out = Artifacts::new("compare", &config, &[&input])?;
    println!("{}", out.write_json("trends.json", &entries, entries.len())?.display());
    Ok(())
}

fn holidays(arg: Option<HolidayArg>, configured: HolidayCalendar) -> HolidayCalendar {
    match arg {
        Some(HolidayArg::Germany) => HolidayCalendar::GermanyNational,
        Some(HolidayArg::None) => HolidayCalendar::None,
        None => configured,
    }
}

/// A case file entry: a full inquiry case or just its workload counts.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ScoreInput {
    Case(InquiryCase),
    Workload {
        #[serde(default)]
        company: String,
        #[serde(flatten)]
        workload: WorkloadInputs,
    },
}

#[derive(Debug, Serialize)]
struct ScoreRow {
    company: String,
    m_pre: u32,
    m_post: u32,
    a_online: u32,
    a_offline: u32,
    workload_score: u64,
}

fn load_cases(path: &Path) -> Result<Vec<InquiryCase>, CliError> {
    exists(path, "case file")?;
    let cases: Vec<InquiryCase> = read_json(path)?;
    for c in &cases {
        c.validate().map_err(|e| input_error(path, e))?;
    }
    Ok(cases)
}

#[derive(Debug, Serialize)]
struct OutcomeRow {
    outcome: &'static str,
    calendar_deadline: usize,
    business_deadline: usize,
}

fn sar(mut config: PipelineConfig, command: SarCommand) -> Result<(), CliError> {
    match command {
        SarCommand::Score { inputs } => {
            exists(&inputs, "case file")?;
            let entries: Vec<ScoreInput> = read_json(&inputs)?;
            let rows: Vec<ScoreRow> = entries
                .into_iter()
                .map(|e| {
                    let (company, w) = match e {
                        ScoreInput::Case(c) => (c.company, c.workload),
                        ScoreInput::Workload { company, workload } => (company, workload),
                    };
                    ScoreRow {
                        company,
                        m_pre: w.m_pre,
                        m_post: w.m_post,
                        a_online: w.a_online,
                        a_offline: w.a_offline,
                        workload_score: workload_score(&w),
                    }
                })
                .collect();
            let out = Artifacts::new("sar score", &config, &[&inputs])?;
            println!("{}", out.write_csv("sar_scores.csv", &rows)?.display());
        }
        SarCommand::Deadline {
            sent,
            mode,
            holidays: h,
        } => {
            let mode = match mode {
                ModeArg::Calendar => DeadlineMode::Calendar,
                ModeArg::Business => DeadlineMode::Business,
            };
            println!("{}", legal_deadline_with(sent, mode, holidays(h, config.holidays)));
        }
        SarCommand::Outcomes { inputs, holidays: h } => {
            config.holidays = holidays(h, config.holidays);
            let cases = load_cases(&inputs)?;
            let summaries: Vec<_> = cases.iter().map(|c| summarize(c, config.holidays)).collect();
            let calendar = outcome_counts(&cases, DeadlineMode::Calendar, config.holidays);
            let business = outcome_counts(&cases, DeadlineMode::Business, config.holidays);
            let count = |m: &BTreeMap<Outcome, usize>, o| m.get(&o).copied().unwrap_or(0);
            let totals: Vec<OutcomeRow> = Outcome::ALL
                .iter()
                .map(|&o| OutcomeRow {
                    outcome: o.as_str(),
                    calendar_deadline: count(&calendar, o),
                    business_deadline: count(&business, o),
                })
                .collect();
            let out = Artifacts::new("sar outcomes", &config, &[&inputs])?;
            println!("{}", out.write_csv("sar_summary.csv", &summaries)?.display());
            println!("{}", out.write_csv("sar_outcomes.csv", &totals)?.display());
        }
    }
    Ok(())
}

fn simulate(config: PipelineConfig, a: SimulateArgs) -> Result<(), CliError> {
    exists(&a.spec, "scenario spec")?;
    let spec: ScenarioSpec = read_json(&a.spec)?;
    let synthetic = generate_corpus(&spec).map_err(|e| input_error(&a.spec, e))?;
    let out = Artifacts::new("simulate", &config, &[&a.spec])?;
    let c = &synthetic.corpus;
    let records = c.measurements.len() + c.profiles.len() + c.requests.len() + c.cookies.len();
    println!("{}", out.write("corpus.jsonl", &to_jsonl_bytes(c), records)?.display());
    let truth = &synthetic.truth;
    println!(
        "{}",
        out.write_json(
            "ground_truth.json",
            truth,
            truth.user_ids.len() + truth.sync_pairs.len()
        )?
        .display()
    );
    let mut db = company_db_json(&spec);
    if !db.ends_with('\n') {
        db.push('\n');
    }
    println!(
        "{}",
        out.write("company_db.json", db.as_bytes(), synthetic.company_db.len())?
            .display()
    );
    Ok(())
}

fn report(config: PipelineConfig, a: ReportArgs) -> Result<(), CliError> {
    let mut rows: Vec<MeasurementStats> = Vec::new();
    for path in &a.stats {
        exists(path, "stats file")?;
        rows.extend(read_json::<Vec<MeasurementStats>>(path)?);
    }
    rows.sort_by(|x, y| (x.measurement.ordinal, &x.measurement.id).cmp(&(y.measurement.ordinal, &y.measurement.id)));
    let inputs: Vec<&Path> = a.stats.iter().map(PathBuf::as_path).collect();
    let out = Artifacts::new("report", &config, &inputs)?;
    let table = component_changes_csv(&rows)?;
    let metrics = graph_metrics_csv(&rows)?;
    println!(
        "{}",
        out.write("component_changes.csv", table.as_bytes(), rows.len())?
            .display()
    );
    println!(
        "{}",
        out.write("graph_metrics.csv", metrics.as_bytes(), rows.len())?
            .display()
    );
    Ok(())
}
