//! Command-line driver: config loading, dispatch and report emission.

pub mod config;

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use churnet::charts::{LineChart, Series};
use churnet::contagion::{threshold_analysis, ContagionReport};
use churnet::features::{build_month_matrix, FeatureCatalog, FeatureStore};
use churnet::graphs::{
    build_employee_graph, build_firm_graph, graph_metrics, louvain_communities, write_edge_csv, write_node_csv,
};
use churnet::registry::{
    build_temporal_grid, parse_records, registry_stats, write_records, Format, MonthIndex, RecordSet, TemporalGrid,
};
use churnet::synth::{describe_ground_truth, generate_market, market_grid};
use churnet::walkforward::{compare_variants, VariantComparison};
use churnet::Error;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// Mean AP / AUC / F1 reported for the full regulator register; shown next to
/// observed means when a real registry is supplied.
pub const REFERENCE_MEANS: [(&str, f64); 3] = [("ap", 0.0384), ("auc", 0.6303), ("f1", 0.0649)];

#[derive(Debug, Parser)]
#[command(name = "churnet", version, about = "Temporal employment networks and turnover prediction")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "churnet-out")]
    out: PathBuf,
    /// Worker threads (default: $CHURNET_THREADS, else logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Omit the generation timestamp from SVG charts.
    #[arg(long, global = true)]
    deterministic: bool,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a registry file and print dataset statistics.
    Ingest {
        file: PathBuf,
        /// Defaults to the file extension (`.jsonl` / `.ndjson`, else CSV).
        #[arg(long)]
        format: Option<String>,
    },
    /// Generate a synthetic market from the `[synth]` section.
    Simulate { config: PathBuf },
    /// Build one snapshot graph and export it with its metrics.
    Graph {
        config: PathBuf,
        #[arg(long)]
        month: MonthIndex,
        #[arg(long, value_enum, default_value_t = Kind::Employee)]
        kind: Kind,
    },
    /// Export the feature matrix of one month.
    Features {
        config: PathBuf,
        #[arg(long)]
        month: MonthIndex,
    },
    /// Walk-forward evaluation of every feature variant.
    TrainEval { config: PathBuf },
    /// Peer-departure threshold analysis.
    Contagion { config: PathBuf },
    /// Re-emit CSV and SVG files from a run directory's JSON.
    Report { run_dir: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Employee,
    Firm,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidArgument(_) | Error::MissingColumn(_) => EXIT_VALIDATION,
            Error::MalformedHeader(_) | Error::InvalidRows(_) | Error::Data(_) | Error::Csv(_) | Error::Json(_) => {
                EXIT_DATA
            }
            Error::TrainingSkipped(_) | Error::Io(_) => EXIT_INTERNAL,
        };
        let message = match &e {
            Error::InvalidRows(rows) => {
                let mut s = format!("{} invalid row(s)", rows.len());
                for r in rows {
                    s.push_str(&format!("\n  {r}"));
                }
                s
            }
            _ => e.to_string(),
        };
        Failure { code, message }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: EXIT_INTERNAL, message: format!("io: {e}") }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Error::from(e).into()
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let threads = cli.threads.or_else(|| std::env::var("CHURNET_THREADS").ok()?.parse().ok()).unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_INTERNAL;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {f}");
            f.code
        }
    }
}

struct Ctx<'a> {
    out: &'a Path,
    verbose: bool,
    stamp: Option<String>,
}

impl Ctx<'_> {
    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("[churnet] {}", msg.as_ref());
        }
    }

    fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> Outcome {
        let path = self.out.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, bytes)?;
        self.log(format!("wrote {}", path.display()));
        Ok(())
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Outcome {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, s)
    }

    fn chart(&self, name: &str, chart: &LineChart) -> Outcome {
        self.write(&format!("charts/{name}.svg"), chart.render(self.stamp.as_deref()))
    }
}

fn dispatch(cli: &Cli) -> Outcome {
    let stamp = (!cli.deterministic).then(|| {
        let secs = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs());
        format!("unix time {secs}")
    });
    let ctx = Ctx { out: &cli.out, verbose: cli.verbose, stamp };
    let load = |path: &Path| -> Outcome<RunConfig> {
        let mut cfg = RunConfig::load(path)?;
        if let Some(seed) = cli.seed {
            cfg.override_seed(seed);
        }
        cfg.validate()?;
        Ok(cfg)
    };
    match &cli.command {
        Command::Ingest { file, format } => ingest(&ctx, file, format.as_deref()),
        Command::Simulate { config } => simulate(&ctx, &load(config)?),
        Command::Graph { config, month, kind } => graph(&ctx, &load(config)?, *month, *kind),
        Command::Features { config, month } => features(&ctx, &load(config)?, *month),
        Command::TrainEval { config } => train_eval(&ctx, &load(config)?),
        Command::Contagion { config } => contagion(&ctx, &load(config)?),
        Command::Report { run_dir } => report(&ctx, run_dir),
    }
}

// ---------------------------------------------------------------------------
// Data and manifest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
struct DataInfo {
    source: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<String>,
    provenance: String,
    sha256: String,
    grid_start: MonthIndex,
    grid_end: MonthIndex,
}

struct Data {
    rs: RecordSet,
    grid: TemporalGrid,
    info: DataInfo,
}

fn sniff_format(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("jsonl") || e.eq_ignore_ascii_case("ndjson") => Format::Jsonl,
        _ => Format::Csv,
    }
}

fn read_registry(path: &Path, format: Format) -> Outcome<(RecordSet, String)> {
    let bytes = fs::read(path)
        .map_err(|e| Failure { code: EXIT_DATA, message: format!("cannot read {}: {e}", path.display()) })?;
    let rs = parse_records(bytes.as_slice(), format, &path.display().to_string())?;
    Ok((rs, hex::encode(Sha256::digest(&bytes))))
}

/// First month with a start date and last month touched by any date.
fn data_range(rs: &RecordSet) -> Outcome<(MonthIndex, MonthIndex)> {
    let recs = rs.records();
    let first = recs.iter().map(|r| r.start_date).min();
    let last = recs.iter().flat_map(|r| [Some(r.start_date), r.end_date]).flatten().max();
    match (first, last) {
        (Some(a), Some(b)) => Ok((MonthIndex::of_date(a), MonthIndex::of_date(b))),
        _ => Err(Error::Data("registry has no records".into()).into()),
    }
}

fn load_data(cfg: &RunConfig, ctx: &Ctx) -> Outcome<Data> {
    let (rs, grid, source, path, sha256) = match &cfg.data {
        Some(d) => {
            ctx.log(format!("reading {}", d.registry.display()));
            let (rs, sha) = read_registry(&d.registry, d.format)?;
            let (lo, hi) = data_range(&rs)?;
            let grid = build_temporal_grid(&rs, cfg.grid.start.unwrap_or(lo), cfg.grid.end.unwrap_or(hi))?;
            (rs, grid, "file", Some(d.registry.display().to_string()), sha)
        }
        None => {
            ctx.log(format!("simulating {} agents over {} months", cfg.synth.n_agents, cfg.synth.months));
            let rs = generate_market(&cfg.synth)?;
            let grid = match (cfg.grid.start, cfg.grid.end) {
                (None, None) => market_grid(&cfg.synth, &rs)?,
                (s, e) => build_temporal_grid(
                    &rs,
                    s.unwrap_or(cfg.synth.first_month()),
                    e.unwrap_or(cfg.synth.last_month()),
                )?,
            };
            let mut buf = Vec::new();
            write_records(&rs, &mut buf, Format::Csv)?;
            (rs, grid, "synth", None, hex::encode(Sha256::digest(&buf)))
        }
    };
    let info = DataInfo {
        source,
        path,
        provenance: rs.provenance().to_string(),
        sha256,
        grid_start: grid.start(),
        grid_end: grid.end(),
    };
    Ok(Data { rs, grid, info })
}

fn write_manifest(ctx: &Ctx, command: &str, cfg: Option<&RunConfig>, data: &DataInfo, args: serde_json::Value) -> Outcome {
    let manifest = json!({
        "command": command,
        "args": args,
        "config_hash": cfg.map(RunConfig::hash),
        "seeds": cfg.map(|c| json!({
            "synth": c.synth.seed,
            "graph": c.graph.seed,
            "walkforward": c.walkforward.seed,
        })),
        "config": cfg,
        "data": data,
        "versions": {
            "churnet": env!("CARGO_PKG_VERSION"),
            "model_format": churnet::learners::MODEL_FORMAT_VERSION,
        },
    });
    ctx.write_json("manifest.json", &manifest)
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn ingest(ctx: &Ctx, file: &Path, format: Option<&str>) -> Outcome {
    let format = match format {
        Some(f) => f.parse()?,
        None => sniff_format(file),
    };
    let (rs, sha256) = read_registry(file, format)?;
    let (lo, hi) = data_range(&rs)?;
    let grid = build_temporal_grid(&rs, lo, hi)?;
    let stats = registry_stats(&rs, &grid);
    println!("{}", serde_json::to_string_pretty(&stats)?);
    ctx.write_json("stats.json", &stats)?;
    let info = DataInfo {
        source: "file",
        path: Some(file.display().to_string()),
        provenance: rs.provenance().to_string(),
        sha256,
        grid_start: lo,
        grid_end: hi,
    };
    write_manifest(ctx, "ingest", None, &info, json!({ "format": format }))
}

fn simulate(ctx: &Ctx, cfg: &RunConfig) -> Outcome {
    let rs = generate_market(&cfg.synth)?;
    let grid = market_grid(&cfg.synth, &rs)?;
    let mut csv = Vec::new();
    write_records(&rs, &mut csv, Format::Csv)?;
    ctx.write("registry.csv", &csv)?;
    ctx.write("ground_truth.json", describe_ground_truth(&cfg.synth)?.to_json()? + "\n")?;
    let stats = registry_stats(&rs, &grid);
    ctx.write_json("stats.json", &stats)?;
    println!("{}", serde_json::to_string_pretty(&stats)?);
    let info = DataInfo {
        source: "synth",
        path: None,
        provenance: rs.provenance().to_string(),
        sha256: hex::encode(Sha256::digest(&csv)),
        grid_start: grid.start(),
        grid_end: grid.end(),
    };
    write_manifest(ctx, "simulate", Some(cfg), &info, json!({}))
}

fn graph(ctx: &Ctx, cfg: &RunConfig, m: MonthIndex, kind: Kind) -> Outcome {
    let data = load_data(cfg, ctx)?;
    let g = match kind {
        Kind::Employee => build_employee_graph(&data.grid, &data.rs, m)?,
        Kind::Firm => build_firm_graph(&data.grid, &data.rs, m, cfg.graph.firm_scheme)?,
    };
    ctx.log(format!("{} nodes, {} edges", g.n_nodes(), g.n_edges()));
    let mut edges = Vec::new();
    write_edge_csv(&g, &data.rs, &mut edges)?;
    ctx.write("edges.csv", edges)?;
    let mut nodes = Vec::new();
    write_node_csv(&g, &data.rs, &mut nodes)?;
    ctx.write("nodes.csv", nodes)?;
    let metrics = graph_metrics(&g, cfg.graph.path_samples, cfg.graph.seed);
    ctx.write_json("graph_metrics.json", &metrics)?;
    if cfg.graph.communities && g.n_nodes() > 0 {
        let comm = louvain_communities(&g, cfg.graph.seed)?;
        let names = |id: u32| match kind {
            Kind::Employee => data.rs.person_name(id).to_string(),
            Kind::Firm => data.rs.firm_name(id).to_string(),
        };
        let partition: std::collections::BTreeMap<String, usize> =
            comm.partition.iter().map(|(&id, &c)| (names(id), c)).collect();
        ctx.write_json(
            "communities.json",
            &json!({
                "modularity": comm.modularity,
                "n_communities": comm.partition.values().max().map_or(0, |c| c + 1),
                "pass_modularity": comm.pass_modularity,
                "partition": partition,
            }),
        )?;
    }
    let kind_name = if kind == Kind::Employee { "employee" } else { "firm" };
    write_manifest(ctx, "graph", Some(cfg), &data.info, json!({ "month": m, "kind": kind_name }))
}

fn features(ctx: &Ctx, cfg: &RunConfig, m: MonthIndex) -> Outcome {
    let data = load_data(cfg, ctx)?;
    let catalog = FeatureCatalog::default_catalog();
    let mx = build_month_matrix(&data.grid, &data.rs, m, &catalog, &cfg.features.engine())?;
    ctx.log(format!("{} rows x {} columns", mx.n_rows(), mx.n_cols()));
    let mut buf = Vec::new();
    mx.write_csv(&data.rs, &mut buf)?;
    ctx.write(&format!("features_{m}.csv"), buf)?;
    ctx.write("catalog.json", catalog.to_json()? + "\n")?;
    write_manifest(ctx, "features", Some(cfg), &data.info, json!({ "month": m, "catalog_hash": catalog.manifest_hash() }))
}

fn train_eval(ctx: &Ctx, cfg: &RunConfig) -> Outcome {
    let data = load_data(cfg, ctx)?;
    let wf = cfg.walkforward_config(data.grid.start(), data.grid.end())?;
    let variants: Vec<(String, FeatureCatalog)> = cfg
        .features
        .variants
        .iter()
        .map(|v| Ok((v.clone(), FeatureCatalog::variant(v)?)))
        .collect::<Result<_, Error>>()?;
    ctx.log(format!("building features for {}..{}", data.grid.start(), data.grid.end()));
    let store = FeatureStore::build(&data.grid, &data.rs, &FeatureCatalog::default_catalog(), &cfg.features.engine())?;
    ctx.log(format!("walk-forward {}..{}", wf.first_test_month, wf.last_test_month));
    let cmp = compare_variants(&store, &data.rs, &wf, &variants, &cfg.features.baseline)?;
    ctx.write_json("report.json", &cmp)?;
    emit_comparison(ctx, &cmp)?;
    if data.info.source == "file" {
        ctx.write_json("reference_means.json", &reference_means(&cmp))?;
    }
    for row in &cmp.rows {
        println!(
            "{:<12} months={:<4} ap={} auc={} f1={} brier={}",
            row.variant,
            row.n_evaluated,
            fmt_opt(row.ap),
            fmt_opt(row.auc),
            fmt_opt(row.f1),
            fmt_opt(row.brier)
        );
    }
    write_manifest(ctx, "train-eval", Some(cfg), &data.info, json!({}))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4}"))
}

fn reference_means(cmp: &VariantComparison) -> serde_json::Value {
    let observed = cmp.rows.iter().map(|r| (r.variant.clone(), json!({ "ap": r.ap, "auc": r.auc, "f1": r.f1 })));
    json!({
        "reference": REFERENCE_MEANS.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
        "observed": observed.collect::<serde_json::Map<_, _>>(),
    })
}

/// `metrics_by_month.csv`, per-variant CSVs and charts.
fn emit_comparison(ctx: &Ctx, cmp: &VariantComparison) -> Outcome {
    let mut combined = String::new();
    for (i, rep) in cmp.reports.iter().enumerate() {
        let mut buf = Vec::new();
        rep.write_metrics_csv(&mut buf)?;
        let text = String::from_utf8(buf).expect("csv output is utf-8");
        for (j, line) in text.lines().enumerate() {
            match (i, j) {
                (_, 0) if i > 0 => {}
                (_, 0) => combined.push_str(&format!("variant,{line}\n")),
                _ => combined.push_str(&format!("{},{line}\n", rep.variant)),
            }
        }
        ctx.write(&format!("metrics_by_month_{}.csv", rep.variant), &text)?;
        ctx.chart(&format!("metrics_{}", rep.variant), &rep.metrics_chart())?;
    }
    ctx.write("metrics_by_month.csv", combined)?;
    if let Some(first) = cmp.reports.first() {
        let ap_chart = LineChart {
            title: "Average precision by variant (rolling 12-month mean)".into(),
            y_label: "AP".into(),
            x_labels: first.per_month.iter().map(|r| r.month.to_string()).collect(),
            series: cmp
                .reports
                .iter()
                .map(|r| {
                    let ap: Vec<_> = r.per_month.iter().map(|m| m.metrics.as_ref().and_then(|x| x.ap)).collect();
                    Series { name: r.variant.clone(), values: churnet::charts::rolling_mean(&ap, 12) }
                })
                .collect(),
        };
        ctx.chart("ap_by_variant", &ap_chart)?;
    }
    Ok(())
}

fn contagion(ctx: &Ctx, cfg: &RunConfig) -> Outcome {
    let data = load_data(cfg, ctx)?;
    let report = threshold_analysis(&data.grid, &data.rs, &cfg.contagion)?;
    if let Some(d) = &report.diagnostic {
        eprintln!("warning: {d}");
    }
    ctx.write_json("contagion.json", &report)?;
    emit_contagion(ctx, &report)?;
    for row in &report.rows {
        println!("threshold={:.2} n_above={:<8} lift={}", row.threshold, row.n_above, fmt_opt(row.relative_lift));
    }
    write_manifest(ctx, "contagion", Some(cfg), &data.info, json!({}))
}

fn emit_contagion(ctx: &Ctx, report: &ContagionReport) -> Outcome {
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    ctx.write("contagion.csv", buf)?;
    let chart = LineChart {
        title: "Turnover lift above peer-departure threshold".into(),
        y_label: "relative lift".into(),
        x_labels: report.rows.iter().map(|r| format!("{:.2}", r.threshold)).collect(),
        series: vec![Series { name: "lift".into(), values: report.rows.iter().map(|r| r.relative_lift).collect() }],
    };
    ctx.chart("contagion_lift", &chart)
}

fn report(ctx: &Ctx, run_dir: &Path) -> Outcome {
    let read = |name: &str| -> Outcome<Option<String>> {
        let p = run_dir.join(name);
        match fs::read_to_string(&p) {
            Ok(s) => Ok(Some(s)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    };
    let mut found = false;
    if let Some(s) = read("report.json")? {
        let cmp: VariantComparison = serde_json::from_str(&s)?;
        emit_comparison(ctx, &cmp)?;
        found = true;
    }
    if let Some(s) = read("contagion.json")? {
        let rep: ContagionReport = serde_json::from_str(&s)?;
        emit_contagion(ctx, &rep)?;
        found = true;
    }
    if !found {
        return Err(Failure {
            code: EXIT_DATA,
            message: format!("{} holds neither report.json nor contagion.json", run_dir.display()),
        });
    }
    let same_dir = fs::canonicalize(run_dir).ok() == fs::canonicalize(ctx.out).ok();
    if !same_dir {
        if let Some(m) = read("manifest.json")? {
            ctx.write("manifest.json", m)?;
        }
    }
    Ok(())
}
