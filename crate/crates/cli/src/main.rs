use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use chrono::{DateTime, FixedOffset, Local};
use clap::{Parser, Subcommand};
use km4_api::AppState;
use km4_core::address::{normalize_flagged, QualifierTable, RawAddress};
use km4_core::evaluator::{
    compare_methods, comparison_tsv, generate_corpus, manual_review_queue, parse_links, score, CorpusSpec,
    GoldAlignment, MethodSpec, OperatorModel, MUNICIPALITIES,
};
use km4_core::ingestion::{DatasetDescriptor, FeedKind, FeedPayload, IstatTable, MappingSpec, Pipeline, RuleSet};
use km4_core::quadstore::{AggregationSpec, Iri, QuadStore};
use km4_core::reconciler::{
    catalog_from_store, catalog_quads, parse_services_tsv, reconcile_corpus, service_quads, services_tsv,
    MethodConfig, Strategy,
};
use km4_core::schema::load_schema;
use km4_core::vocab;

#[derive(Parser)]
#[command(name = "km4", version, about = "Semantic aggregation toolkit for city data")]
struct Cli {
    /// Append-only store log.
    #[arg(long, global = true, default_value = "km4.store")]
    store: PathBuf,
    /// Directory holding the ingestion registry and staging table.
    #[arg(long, global = true, default_value = "km4-state")]
    state: PathBuf,
    /// Base for minted IRIs.
    #[arg(long, global = true, default_value = vocab::DEFAULT_BASE)]
    base: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the ontology: one class per line with its constraints.
    Schema {
        #[command(subcommand)]
        action: SchemaAction,
    },
    /// Inspect or maintain the quad store.
    Store {
        #[command(subcommand)]
        action: StoreAction,
    },
    /// Register a dataset from a descriptor and a mapping file.
    Register {
        #[arg(long)]
        descriptor: PathBuf,
        #[arg(long)]
        mapping: PathBuf,
        /// Quality rule table (column, rule) replacing the inferred one.
        #[arg(long)]
        rules: Option<PathBuf>,
    },
    /// Ingest one source file into a registered dataset.
    Ingest {
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        file: PathBuf,
    },
    /// Run scheduled ingestion jobs.
    Schedule {
        #[command(subcommand)]
        action: ScheduleAction,
    },
    /// Post real-time feed payloads.
    Feed {
        #[command(subcommand)]
        action: FeedAction,
    },
    /// Print the parsed structure of an address.
    Normalize {
        /// Street text, optionally followed by `, civic` and `, municipality`.
        #[arg(long)]
        address: String,
        #[arg(long)]
        civic: Option<String>,
        #[arg(long)]
        municipality: Option<String>,
        /// Qualifier table (`variant<TAB>canonical`) added to the built-in one.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Generate a synthetic corpus: street guide and services into the
    /// store, services and gold alignment as files.
    Corpus {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        services: PathBuf,
        #[arg(long)]
        gold: PathBuf,
    },
    /// Link services to the street guide held in the store.
    Reconcile {
        #[arg(long)]
        method: String,
        #[arg(long)]
        services: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the review queue as JSON.
        #[arg(long)]
        review: Option<PathBuf>,
    },
    /// Score a links file against a gold alignment.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        links: PathBuf,
    },
    /// Compare reconciliation methods on a synthetic corpus.
    Bench {
        #[arg(long)]
        spec: Option<PathBuf>,
        /// `all` or a comma-separated list of method labels.
        #[arg(long, default_value = "all")]
        methods: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Gold alignment enabling live metrics.
        #[arg(long)]
        gold: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SchemaAction {
    Dump,
}

#[derive(Subcommand)]
enum StoreAction {
    /// Quads per macroclass and kind.
    Stats,
    /// Archive and aggregate real-time records older than the window.
    Compact {
        #[arg(long, value_parser = humantime::parse_duration)]
        window: Duration,
        #[arg(long)]
        archive: PathBuf,
        /// Reference time (RFC 3339); defaults to now.
        #[arg(long)]
        now: Option<String>,
        #[arg(long, default_value = "AVMRecord")]
        record_class: String,
        #[arg(long, default_value = "delay")]
        measure: String,
    },
    /// Dump quads as N-Quads.
    Export {
        #[arg(long)]
        context: Option<String>,
    },
    /// Load an N-Quads file.
    Load {
        #[arg(long)]
        file: PathBuf,
    },
}

#[derive(Subcommand)]
enum ScheduleAction {
    /// Execute every slot due up to `until`. Each dataset reads its source
    /// from `<sources>/<source>` at every run.
    Run {
        #[arg(long)]
        until: String,
        #[arg(long, default_value = ".")]
        sources: PathBuf,
    },
}

#[derive(Subcommand)]
enum FeedAction {
    Post {
        #[arg(long = "type")]
        kind: String,
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        dataset: String,
        /// ISTAT code table (code, name, aliases) for weather reports;
        /// the bundled Tuscany table by default.
        #[arg(long)]
        istat: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn open_store(path: &Path) -> Result<QuadStore> {
    QuadStore::open(path).with_context(|| format!("opening store {}", path.display()))
}

fn time(s: &str) -> Result<DateTime<FixedOffset>> {
    DateTime::parse_from_rfc3339(s).with_context(|| format!("{s:?} is not an RFC 3339 date-time"))
}

fn now() -> DateTime<FixedOffset> {
    Local::now().fixed_offset()
}

fn corpus_spec(path: Option<&Path>) -> Result<CorpusSpec> {
    let spec: CorpusSpec = match path {
        Some(p) => serde_json::from_str(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => CorpusSpec::default(),
    };
    spec.validate()?;
    Ok(spec)
}

fn aliases() -> Vec<(String, String)> {
    MUNICIPALITIES
        .iter()
        .flat_map(|(name, aliases, _, _)| aliases.iter().map(move |a| (a.to_string(), name.to_string())))
        .collect()
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn store_cmd(cli: &Cli, action: &StoreAction) -> Result<()> {
    let mut store = open_store(&cli.store)?;
    match action {
        StoreAction::Stats => {
            let stats = store.store_stats();
            print!("{}", stats.to_table());
            for ctx in &stats.unclassified_contexts {
                eprintln!("untagged context {ctx}");
            }
        }
        StoreAction::Compact {
            window,
            archive,
            now: at,
            record_class,
            measure,
        } => {
            let at = at.as_deref().map(time).transpose()?.unwrap_or_else(now);
            let spec = AggregationSpec {
                record_class: Iri::new(vocab::km4c(record_class))?,
                measure: Iri::new(vocab::property_iri(measure))?,
                offset: *at.offset(),
            };
            let window = chrono::Duration::from_std(*window)?;
            print_json(&store.compact(window, at, &spec, archive)?)?;
        }
        StoreAction::Export { context } => {
            let ctx = context.as_deref().map(Iri::new).transpose()?;
            print!("{}", store.export(ctx.as_ref()));
        }
        StoreAction::Load { file } => {
            let n = store.load_nquads(&read(file)?)?;
            println!("{n} quads added");
        }
    }
    Ok(())
}

fn normalize_cmd(address: &str, civic: Option<&str>, municipality: Option<&str>, table: Option<&Path>) -> Result<()> {
    let mut parts = address.splitn(3, ',').map(str::trim);
    let street = parts.next().unwrap_or_default();
    let civic = civic.or(parts.next()).unwrap_or_default();
    let municipality = municipality.or(parts.next()).unwrap_or_default();
    let mut qualifiers = QualifierTable::seed();
    if let Some(path) = table {
        qualifiers.extend_from_str(&read(path)?)?;
    }
    let (normalized, flags) = normalize_flagged(&RawAddress::new(street, civic, municipality), &qualifiers);
    print_json(&serde_json::json!({ "address": normalized, "street": normalized.street(), "flags": flags }))
}

fn run_reconcile(cli: &Cli, method: &str, services: &Path, out: &Path, review: Option<&Path>) -> Result<()> {
    let Some(strategy) = Strategy::parse(method) else {
        bail!("unknown method {method}; use exact, levenshtein, dice, jaccard or kb-levenshtein");
    };
    let services = parse_services_tsv(&read(services)?).map_err(anyhow::Error::msg)?;
    let store = open_store(&cli.store)?;
    let catalog = catalog_from_store(&store, QualifierTable::seed()).with_aliases(aliases());
    if catalog.is_empty() {
        bail!("the store holds no roads to reconcile against");
    }
    let mut cfg = MethodConfig::default();
    if let Strategy::Discover(metric) = strategy {
        cfg.metric = metric;
    }
    let run = reconcile_corpus(&services, &catalog, strategy, &cfg);
    let lines: String = run.links.iter().map(|l| l.to_link_line() + "\n").collect();
    write(out, &lines)?;
    if let Some(path) = review {
        let queue = match strategy {
            Strategy::Exact => manual_review_queue(&services, &catalog, &run.links, &cfg, 5, 1),
            Strategy::Discover(_) => run.review_queue.clone(),
        };
        write(path, &serde_json::to_string_pretty(&queue)?)?;
    }
    print_json(&run.summary)
}

fn bench(spec: Option<&Path>, methods: &str, out: Option<&Path>) -> Result<()> {
    let spec = corpus_spec(spec)?;
    let methods: Vec<MethodSpec> = if methods == "all" {
        MethodSpec::ALL.to_vec()
    } else {
        methods
            .split(',')
            .map(|m| MethodSpec::parse(m.trim()).with_context(|| format!("unknown method {m}")))
            .collect::<Result<_>>()?
    };
    let corpus = generate_corpus(&spec)?;
    let rows = compare_methods(&corpus, &methods, &MethodConfig::default(), &OperatorModel::default());
    let table = comparison_tsv(&rows);
    match out {
        Some(path) => write(path, &table)?,
        None => print!("{table}"),
    }
    Ok(())
}

fn pipeline_cmd(cli: &Cli, command: &Command) -> Result<()> {
    let mut pipeline = Pipeline::load(&cli.state, &cli.base)?;
    let mut store = open_store(&cli.store)?;
    match command {
        Command::Register {
            descriptor,
            mapping,
            rules,
        } => {
            let descriptor = DatasetDescriptor::parse(&read(descriptor)?)?;
            let mapping = MappingSpec::parse(&descriptor.id, &read(mapping)?)?;
            let id = descriptor.id.clone();
            let ctx = pipeline.register_dataset(&mut store, descriptor, mapping)?;
            if let Some(path) = rules {
                pipeline.set_rules(&id, RuleSet::parse(&read(path)?)?)?;
            }
            println!("{id} registered; data context {ctx}");
        }
        Command::Ingest { dataset, file } => {
            let report = pipeline.ingest_file(&mut store, dataset, file, now());
            pipeline.save(&cli.state)?;
            print_json(&report?)?;
        }
        Command::Schedule {
            action: ScheduleAction::Run { until, sources },
        } => {
            let reports = pipeline.run_scheduler(&mut store, time(until)?, |d, _| {
                fs::read_to_string(sources.join(&d.source))
                    .map(|t| vec![t])
                    .map_err(|e| format!("{}: {e}", d.source))
            });
            print_json(&reports)?;
        }
        Command::Feed {
            action: FeedAction::Post {
                kind,
                file,
                dataset,
                istat,
            },
        } => {
            let kind = FeedKind::parse(kind).with_context(|| format!("unknown feed type {kind}"))?;
            let payload = FeedPayload::parse(kind, &read(file)?)?;
            let table = match istat {
                Some(path) => IstatTable::load(path)?,
                None => IstatTable::tuscany(),
            };
            print_json(&pipeline.post_feed(&mut store, dataset, payload, Some(&table))?)?;
        }
        _ => unreachable!("not a pipeline command"),
    }
    pipeline.save(&cli.state)?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Schema {
            action: SchemaAction::Dump,
        } => print!("{}", load_schema().dump()),
        Command::Store { action } => store_cmd(&cli, action)?,
        Command::Register { .. } | Command::Ingest { .. } | Command::Schedule { .. } | Command::Feed { .. } => {
            pipeline_cmd(&cli, &cli.command)?
        }
        Command::Normalize {
            address,
            civic,
            municipality,
            table,
        } => normalize_cmd(address, civic.as_deref(), municipality.as_deref(), table.as_deref())?,
        Command::Corpus { spec, services, gold } => {
            let corpus = generate_corpus(&corpus_spec(spec.as_deref())?)?;
            let mut store = open_store(&cli.store)?;
            let streets = Iri::new(format!("{}/graph/streets", cli.base))?;
            let pois = Iri::new(format!("{}/graph/services", cli.base))?;
            store.tag_context(&streets, km4_core::schema::MacroClass::StreetGuide, km4_core::quadstore::DataKind::Static)?;
            store.tag_context(&pois, km4_core::schema::MacroClass::PointOfInterest, km4_core::quadstore::DataKind::Static)?;
            let added = store.insert(&catalog_quads(&corpus.roads, &cli.base, &streets))?
                + store.insert(&service_quads(&corpus.services, &pois))?;
            write(services, &services_tsv(&corpus.services))?;
            write(gold, &corpus.gold.to_tsv())?;
            println!("{} roads, {} services, {} gold entries, {added} quads added", corpus.roads.len(), corpus.services.len(), corpus.gold.len());
        }
        Command::Reconcile {
            method,
            services,
            out,
            review,
        } => run_reconcile(&cli, method, services, out, review.as_deref())?,
        Command::Eval { gold, links } => {
            let gold = GoldAlignment::parse(&read(gold)?)?;
            let links = parse_links(&read(links)?)?;
            print_json(&score(&links, &gold))?;
        }
        Command::Bench { spec, methods, out } => bench(spec.as_deref(), methods, out.as_deref())?,
        Command::Serve { port, gold } => {
            let mut state = AppState::new(open_store(&cli.store)?, &cli.base);
            if let Some(path) = gold {
                state = state.with_gold(GoldAlignment::parse(&read(path)?)?);
            }
            let addr = SocketAddr::from(([0, 0, 0, 0], *port));
            eprintln!("listening on {addr}");
            tokio::runtime::Runtime::new()?.block_on(km4_api::serve(addr, state))?;
        }
    }
    Ok(())
}
