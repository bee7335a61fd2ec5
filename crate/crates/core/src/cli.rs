//! The `dtmad` command line front end.
//!
//! Every output embeds the resolved run configuration and the tool version:
//! JSON outputs carry a `run_config` object, CSV outputs start with `#`
//! comment lines (which the CSV readers of this crate skip).
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 I/O error,
//! 4 internal invariant breach.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::data::{load_csv, sample_contaminated, write_csv, ContaminationSpec, LabelColumn, LabeledDataset, Scenario};
use crate::detectors::{rank_anomalies, score_dataset, Budget, DetectorConfig, Method, NeighborCount, Order};
use crate::error::{Error, Result};
use crate::eval::{boundary_misclassification, evaluate, EvalResult};
use crate::rng::SeededRng;
use crate::theory::{calibrate_c, dtm_bound_sample, Outcome, ReferenceDistribution, TheoryInputs};
use crate::{Label, VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

/// Environment variable supplying the default worker thread count.
pub const THREADS_ENV: &str = "DTMAD_THREADS";

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => EXIT_IO,
        Error::Internal(_) | Error::Quadrature(_) => EXIT_INTERNAL,
        _ => EXIT_CONFIG,
    }
}

#[derive(Parser, Debug)]
#[command(name = "dtmad", version, about = "Nearest-neighbor and DTM anomaly detection")]
pub struct Cli {
    /// Worker threads; 0 or unset uses every core.
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    /// JSON object whose keys supply flag values for the subcommand;
    /// flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Score every point of a CSV dataset.
    #[command(args_override_self = true)]
    Score(ScoreArgs),
    /// ROC-AUC and average precision of a score file.
    #[command(args_override_self = true)]
    Eval(EvalArgs),
    /// Finite-sample bounds and separation thresholds.
    #[command(args_override_self = true)]
    Bounds(BoundsArgs),
    /// Generate a scenario, score it with every method and draw it.
    #[command(args_override_self = true)]
    Demo(DemoArgs),
    /// Run a datasets × detectors sweep into a tidy CSV.
    #[command(args_override_self = true)]
    Bench(BenchArgs),
    /// Write a synthetic dataset to CSV.
    #[command(args_override_self = true)]
    Generate(GenerateArgs),
    /// Fit the regularity constant C of the DTM bound on pilot samples.
    #[command(args_override_self = true)]
    Calibrate(CalibrateArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Score(_) => "score",
            Command::Eval(_) => "eval",
            Command::Bounds(_) => "bounds",
            Command::Demo(_) => "demo",
            Command::Bench(_) => "bench",
            Command::Generate(_) => "generate",
            Command::Calibrate(_) => "calibrate",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_order(s: &str) -> std::result::Result<Order, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args, Debug, Serialize)]
pub struct NeighborArgs {
    /// Neighbor count.
    #[arg(long, conflicts_with = "mass")]
    pub k: Option<usize>,
    /// Mass m; the neighbor count becomes ⌈m·n⌉. Default m = 0.03.
    #[arg(long)]
    pub mass: Option<f64>,
}

impl NeighborArgs {
    fn count(&self) -> NeighborCount {
        match (self.k, self.mass) {
            (Some(k), _) => NeighborCount::K(k),
            (None, Some(m)) => NeighborCount::Mass(m),
            (None, None) => NeighborCount::Default,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct ScoreArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Label column (name or 0-based index) to carry through to the output.
    #[arg(long)]
    pub label_column: Option<String>,
    #[arg(long, value_parser = parse_method, default_value = "dtm")]
    pub method: Method,
    /// DTM order (a number ≥ 1 or `inf`); only used by `--method dtm`.
    #[arg(long, value_parser = parse_order)]
    pub q: Option<Order>,
    #[command(flatten)]
    pub neighbors: NeighborArgs,
    /// Number of points to flag. Defaults to the labeled anomaly count, or
    /// ⌈0.05·n⌉ without labels.
    #[arg(long, conflicts_with = "threshold")]
    pub budget: Option<usize>,
    /// Flag every score strictly above this value instead.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    /// Score file with a header row (as written by `score`).
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long, default_value = "score")]
    pub score_column: String,
    /// Separate file holding the labels; otherwise they are read from the
    /// score file.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    pub label_column: String,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Args, Debug, Serialize)]
pub struct BoundsArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub m: Option<f64>,
    /// Regularity constant C of the radius bounds.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub a0: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long, value_parser = parse_order)]
    pub q: Option<Order>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Args, Debug, Serialize)]
pub struct ScenarioArgs {
    /// One of ring, local, clustered, shrinking_separation.
    #[arg(long)]
    pub scenario: Option<String>,
    /// JSON object of scenario parameter overrides.
    #[arg(long)]
    pub params: Option<String>,
    /// Shortcut for the `eta` parameter of clustered scenarios.
    #[arg(long)]
    pub eta: Option<f64>,
}

impl ScenarioArgs {
    fn build(&self, name: &str) -> Result<Scenario> {
        let mut params = match &self.params {
            Some(s) => serde_json::from_str::<Value>(s).map_err(|e| Error::param(format!("--params: {e}")))?,
            None => json!({}),
        };
        if let Some(eta) = self.eta {
            params
                .as_object_mut()
                .ok_or_else(|| Error::param("--params must be a JSON object"))?
                .insert("eta".into(), json!(eta));
        }
        Scenario::from_name(name, &params)
    }
}

#[derive(Args, Debug, Serialize)]
pub struct DemoArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub neighbors: NeighborArgs,
    #[arg(long)]
    pub output_dir: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct BenchArgs {
    /// JSON file listing `datasets` and `detectors`.
    #[arg(long)]
    pub spec: PathBuf,
    /// Master seed; overrides the spec's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Contamination mixture JSON (`normal`, `anomaly`, `epsilon`, `n`).
    #[arg(long, conflicts_with = "scenario")]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct CalibrateArgs {
    /// Reference distribution JSON used as the population oracle.
    #[arg(long)]
    pub distribution: PathBuf,
    /// Pilot sample; drawn from the distribution when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub pilots: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.03)]
    pub m: f64,
    #[arg(long, value_parser = parse_order, default_value = "2")]
    pub q: Order,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Provenance block embedded in every output.
#[derive(Debug, Serialize)]
struct RunConfig<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    threads: Option<usize>,
    options: &'a Command,
    resolved: Value,
}

struct Ctx<'a> {
    command: &'a Command,
    threads: Option<usize>,
}

impl Ctx<'_> {
    fn run_config(&self, resolved: Value) -> Value {
        serde_json::to_value(RunConfig {
            tool: "dtmad",
            version: VERSION,
            command: self.command.name(),
            threads: self.threads,
            options: self.command,
            resolved,
        })
        .expect("run config serializes")
    }

    fn csv_preamble(&self, resolved: Value) -> String {
        format!(
            "# dtmad {VERSION}\n# run_config: {}\n",
            serde_json::to_string(&self.run_config(resolved)).expect("run config serializes")
        )
    }
}

fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| Error::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::param(format!("{}: {e}", path.display())))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON serializes");
    s.push('\n');
    s
}

/// Turns a JSON config object into flags placed right after the
/// subcommand, so that flags typed later override them.
fn config_flags(config: &Value) -> Result<Vec<String>> {
    let obj = config
        .as_object()
        .ok_or_else(|| Error::param("--config must hold a JSON object"))?;
    let mut flags = Vec::new();
    for (key, value) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => flags.push(flag),
            Value::String(s) => flags.extend([flag, s.clone()]),
            Value::Number(n) => flags.extend([flag, n.to_string()]),
            other => flags.extend([flag, other.to_string()]),
        }
    }
    Ok(flags)
}

const COMMAND_NAMES: [&str; 7] = ["score", "eval", "bounds", "demo", "bench", "generate", "calibrate"];

/// Value of the first `--config` flag, if any.
fn find_config(args: &[String]) -> Option<String> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

/// Parses `args` (program name first), applying any `--config` file.
pub fn parse_args(args: &[String]) -> std::result::Result<Cli, clap::Error> {
    let Some(path) = find_config(args) else {
        return Cli::try_parse_from(args);
    };
    let flags = read_json(Path::new(&path)).and_then(|v| config_flags(&v)).map_err(|e| {
        <Cli as clap::CommandFactory>::command().error(clap::error::ErrorKind::ValueValidation, e.to_string())
    })?;
    let pos = args
        .iter()
        .skip(1)
        .position(|a| COMMAND_NAMES.contains(&a.as_str()))
        .map(|p| p + 2)
        .unwrap_or(args.len());
    let mut merged: Vec<String> = args[..pos].to_vec();
    merged.extend(flags);
    merged.extend_from_slice(&args[pos..]);
    Cli::try_parse_from(merged)
}

/// Runs the tool and returns the process exit code.
pub fn main_with_args(args: Vec<String>) -> i32 {
    let cli = match parse_args(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let threads = cli.threads.filter(|&t| t > 0);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let ctx = Ctx {
        command: &cli.command,
        threads,
    };
    pool.install(|| match &cli.command {
        Command::Score(a) => cmd_score(&ctx, a),
        Command::Eval(a) => cmd_eval(&ctx, a),
        Command::Bounds(a) => cmd_bounds(&ctx, a),
        Command::Demo(a) => cmd_demo(&ctx, a),
        Command::Bench(a) => cmd_bench(&ctx, a),
        Command::Generate(a) => cmd_generate(&ctx, a),
        Command::Calibrate(a) => cmd_calibrate(&ctx, a),
    })
}

fn detector_config(method: Method, q: Option<Order>, neighbors: NeighborCount) -> Result<DetectorConfig> {
    let mut cfg = DetectorConfig::new(method);
    if let Some(q) = q {
        if method == Method::Dtm {
            cfg.q = q;
        } else if q != cfg.effective_q() {
            return Err(Error::param(format!("--q applies to --method dtm only ({method} uses q = {})", cfg.effective_q())));
        }
    }
    cfg.neighbors = neighbors;
    Ok(cfg)
}

fn default_budget(data: &LabeledDataset) -> usize {
    if data.has_labels() {
        data.anomaly_count()
    } else {
        (0.05 * data.n() as f64).ceil() as usize
    }
}

fn cmd_score(ctx: &Ctx<'_>, a: &ScoreArgs) -> Result<()> {
    let label_col = a.label_column.as_deref().map(LabelColumn::parse);
    let data = load_csv(&a.input, label_col.as_ref())?;
    let cfg = detector_config(a.method, a.q, a.neighbors.count())?;
    let report = score_dataset(data.dataset(), &cfg)?;
    let budget = match (a.budget, a.threshold) {
        (_, Some(t)) => Budget::Threshold(t),
        (Some(c), None) => Budget::TopCount(c),
        (None, None) => Budget::TopCount(default_budget(&data)),
    };
    let predicted = rank_anomalies(&report.scores, budget)?;
    let resolved = json!({
        "method": cfg.method,
        "q": cfg.effective_q(),
        "k": report.k,
        "n": report.n,
        "d": report.d,
        "budget": budget,
    });
    let content = match a.format {
        Format::Json => pretty(&json!({
            "run_config": ctx.run_config(resolved),
            "report": report,
            "predicted": predicted.iter().map(|l| l.as_u8()).collect::<Vec<_>>(),
        })),
        Format::Csv => {
            let mut out = ctx.csv_preamble(resolved);
            out.push_str(if data.has_labels() {
                "index,score,predicted_label,label\n"
            } else {
                "index,score,predicted_label\n"
            });
            for (i, (s, p)) in report.scores.iter().zip(&predicted).enumerate() {
                let _ = write!(out, "{i},{s:?},{}", p.as_u8());
                if data.has_labels() {
                    let _ = write!(out, ",{}", data.labels()[i].as_u8());
                }
                out.push('\n');
            }
            out
        }
    };
    write_output(a.output.as_deref(), &content)
}

/// Header and records of a CSV file, skipping `#` comment lines.
fn read_table(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv { row: 1, message: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        rows.push(rec.map_err(|e| Error::Csv {
            row: e.position().map_or(i + 2, |p| p.line() as usize),
            message: e.to_string(),
        })?);
    }
    Ok((headers, rows))
}

fn column(headers: &[String], name: &str) -> Option<usize> {
    headers.iter().position(|h| h == name)
}

fn parse_labels(rows: &[csv::StringRecord], idx: usize) -> Result<Vec<Label>> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| match r.get(idx).map(str::trim) {
            Some("1") | Some("1.0") => Ok(Label::Anomaly),
            Some("0") | Some("0.0") => Ok(Label::Normal),
            other => Err(Error::Csv {
                row: i + 2,
                message: format!("label must be 0 or 1, found {other:?}"),
            }),
        })
        .collect()
}

fn cmd_eval(ctx: &Ctx<'_>, a: &EvalArgs) -> Result<()> {
    let (headers, rows) = read_table(&a.scores)?;
    let si = column(&headers, &a.score_column)
        .ok_or_else(|| Error::param(format!("score column '{}' not found", a.score_column)))?;
    let scores: Vec<f64> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.get(si).and_then(|v| v.parse().ok()).ok_or_else(|| Error::Csv {
                row: i + 2,
                message: "score is not a number".into(),
            })
        })
        .collect::<Result<_>>()?;
    let labels = match &a.labels {
        Some(path) => {
            let (lh, lrows) = read_table(path)?;
            let li = column(&lh, &a.label_column).ok_or_else(|| Error::MissingLabelColumn(a.label_column.clone()))?;
            parse_labels(&lrows, li)?
        }
        None => {
            let li = column(&headers, &a.label_column).ok_or_else(|| Error::MissingLabelColumn(a.label_column.clone()))?;
            parse_labels(&rows, li)?
        }
    };
    let result = evaluate(&scores, &labels)?;
    let resolved = json!({ "n": scores.len() });
    let content = match a.format {
        Format::Json => pretty(&json!({ "run_config": ctx.run_config(resolved), "result": result })),
        Format::Csv => {
            let EvalResult { auc, ap, n_pos, n_neg } = result;
            format!(
                "{}metric,value\nauc,{auc:?}\nap,{ap:?}\nn_pos,{n_pos}\nn_neg,{n_neg}\n",
                ctx.csv_preamble(resolved)
            )
        }
    };
    write_output(a.output.as_deref(), &content)
}

fn cmd_bounds(ctx: &Ctx<'_>, a: &BoundsArgs) -> Result<()> {
    let mut inputs = TheoryInputs::default();
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = a.$f { inputs.$f = v; } )* };
    }
    set!(n, d, delta, m, c, epsilon, eta, h, a0, b, q);
    let report = inputs.report()?;
    let content = match a.format {
        Format::Json => pretty(&json!({ "run_config": ctx.run_config(Value::Null), "report": report })),
        Format::Csv => {
            let mut out = ctx.csv_preamble(Value::Null);
            out.push_str("quantity,value,note\n");
            let _ = writeln!(out, "k,{},", report.k);
            let _ = writeln!(out, "p,{:?},", report.p);
            for (name, o) in [
                ("beta_n", &report.beta_n),
                ("alpha_n", &report.alpha_n),
                ("radius_bound", &report.radius_bound),
                ("radius_bound_sample", &report.radius_bound_sample),
                ("dtm_bound", &report.dtm_bound),
                ("dtm_bound_sample", &report.dtm_bound_sample),
                ("g0_threshold", &report.g0_threshold),
                ("full_support_eta", &report.full_support_eta),
            ] {
                match o {
                    Outcome::Value(v) => {
                        let _ = writeln!(out, "{name},{v:?},");
                    }
                    Outcome::Omitted(reason) => {
                        let _ = writeln!(out, "{name},,\"{}\"", reason.replace('"', "\"\""));
                    }
                }
            }
            out
        }
    };
    write_output(a.output.as_deref(), &content)
}

/// Method columns emitted by `demo`.
const DEMO_METHODS: [(&str, Method); 5] = [
    ("dtm2", Method::Dtm),
    ("knn", Method::Knn),
    ("kthnn", Method::Kthnn),
    ("dtmf2", Method::Dtmf),
    ("lof", Method::Lof),
];

fn cmd_demo(ctx: &Ctx<'_>, a: &DemoArgs) -> Result<()> {
    let name = a
        .scenario
        .scenario
        .as_deref()
        .ok_or_else(|| Error::param("--scenario is required"))?;
    let scenario = a.scenario.build(name)?;
    let data = scenario.generate(a.seed)?;
    fs::create_dir_all(&a.output_dir).map_err(|e| Error::io(&a.output_dir, e))?;
    let dir = &a.output_dir;
    let budget = data.anomaly_count();
    let resolved = json!({ "scenario": scenario, "budget": budget });

    let mut dataset_csv = ctx.csv_preamble(resolved.clone()).into_bytes();
    write_csv(&data, &mut dataset_csv)?;
    let path = dir.join("dataset.csv");
    fs::write(&path, dataset_csv).map_err(|e| Error::io(&path, e))?;

    let mut columns = Vec::new();
    let mut summary = serde_json::Map::new();
    let center = scenario.normal_center();
    let proxy: Vec<f64> = data
        .dataset()
        .rows()
        .map(|p| ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt())
        .collect();
    for (label, method) in DEMO_METHODS {
        let cfg = detector_config(method, None, a.neighbors.count())?;
        let report = score_dataset(data.dataset(), &cfg)?;
        let predicted = rank_anomalies(&report.scores, Budget::TopCount(budget))?;
        let eval = evaluate(&report.scores, data.labels()).ok();
        let boundary = boundary_misclassification(&data, &report.scores, &proxy)?;
        match crate::svg::scatter(
            data.dataset(),
            &report.scores,
            Some(data.labels()),
            &predicted,
            &format!("{} on {} (seed {})", label, scenario.name(), a.seed),
        ) {
            Ok(svg) => {
                let path = dir.join(format!("{label}.svg"));
                fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
            }
            Err(e) => eprintln!("warning: no plot for {label}: {e}"),
        }
        summary.insert(
            label.into(),
            json!({
                "k": report.k,
                "auc": eval.as_ref().map(|e| e.auc),
                "ap": eval.as_ref().map(|e| e.ap),
                "top": crate::detectors::ranking(&report.scores).into_iter().take(budget).collect::<Vec<_>>(),
                "misclassified_normals": boundary.misclassified,
                "mean_center_distance_misclassified": boundary.mean_proxy_misclassified,
                "mean_center_distance_correct": boundary.mean_proxy_correct,
            }),
        );
        columns.push(report.scores);
    }

    let mut scores_csv = ctx.csv_preamble(resolved.clone());
    scores_csv.push_str("index,label");
    for (label, _) in DEMO_METHODS {
        let _ = write!(scores_csv, ",{label}");
    }
    scores_csv.push('\n');
    for i in 0..data.n() {
        let _ = write!(scores_csv, "{i},{}", data.labels()[i].as_u8());
        for col in &columns {
            let _ = write!(scores_csv, ",{:?}", col[i]);
        }
        scores_csv.push('\n');
    }
    let path = dir.join("scores.csv");
    fs::write(&path, scores_csv).map_err(|e| Error::io(&path, e))?;

    let doc = json!({ "run_config": ctx.run_config(resolved), "methods": summary });
    let path = dir.join("summary.json");
    fs::write(&path, pretty(&doc)).map_err(|e| Error::io(&path, e))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchSpec {
    datasets: Vec<BenchDataset>,
    detectors: Vec<DetectorSpec>,
    #[serde(default)]
    seed: Option<u64>,
}

/// One dataset of a sweep; exactly one source field must be present.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchDataset {
    name: String,
    #[serde(default)]
    scenario: Option<String>,
    #[serde(default)]
    params: Value,
    /// Contamination mixture; its seed comes from the master seed.
    #[serde(default)]
    contamination: Option<Value>,
    /// CSV path, relative to the spec file.
    #[serde(default)]
    csv: Option<PathBuf>,
    #[serde(default)]
    label_column: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectorSpec {
    method: Method,
    #[serde(default)]
    q: Option<Order>,
    #[serde(default)]
    k: Option<usize>,
    #[serde(default)]
    mass: Option<f64>,
}

impl DetectorSpec {
    fn config(&self) -> Result<DetectorConfig> {
        let neighbors = match (self.k, self.mass) {
            (Some(_), Some(_)) => return Err(Error::param("detector gives both k and mass")),
            (Some(k), None) => NeighborCount::K(k),
            (None, Some(m)) => NeighborCount::Mass(m),
            (None, None) => NeighborCount::Default,
        };
        detector_config(self.method, self.q, neighbors)
    }
}

fn detector_name(cfg: &DetectorConfig) -> String {
    match cfg.neighbors {
        NeighborCount::Default => cfg.label(),
        NeighborCount::K(k) => format!("{}[k={k}]", cfg.label()),
        NeighborCount::Mass(m) => format!("{}[m={m}]", cfg.label()),
    }
}

impl BenchDataset {
    fn load(&self, seed: u64, base: &Path) -> Result<LabeledDataset> {
        match (&self.scenario, &self.contamination, &self.csv) {
            (Some(s), None, None) => Scenario::from_name(s, &self.params)?.generate(seed),
            (None, Some(c), None) => {
                let mut c = c.clone();
                c.as_object_mut()
                    .ok_or_else(|| Error::param("contamination must be a JSON object"))?
                    .insert("seed".into(), json!(seed));
                sample_contaminated(&ContaminationSpec::from_json(&c)?)
            }
            (None, None, Some(p)) => {
                let col = self.label_column.as_deref().map(LabelColumn::parse);
                load_csv(base.join(p), col.as_ref())
            }
            _ => Err(Error::param(format!(
                "dataset '{}' needs exactly one of scenario, contamination, csv",
                self.name
            ))),
        }
    }
}

struct BenchRow {
    dataset: String,
    method: String,
    metric: &'static str,
    value: Option<f64>,
    error: String,
    wall_ms: f64,
}

fn bench_cell(name: &str, data: &Result<LabeledDataset>, det: &Result<DetectorConfig>, det_name: &str) -> Vec<BenchRow> {
    let start = Instant::now();
    let outcome: Result<EvalResult> = (|| {
        let data = data.as_ref().map_err(|e| Error::param(e.to_string()))?;
        let cfg = det.as_ref().map_err(|e| Error::param(e.to_string()))?;
        data.require_labels()?;
        let report = score_dataset(data.dataset(), cfg)?;
        evaluate(&report.scores, data.labels())
    })();
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let row = |metric, value, error: String| BenchRow {
        dataset: name.to_string(),
        method: det_name.to_string(),
        metric,
        value,
        error,
        wall_ms,
    };
    match outcome {
        Ok(r) => vec![row("auc", Some(r.auc), String::new()), row("ap", Some(r.ap), String::new())],
        Err(e) => {
            let msg = match &e {
                Error::InvalidParameter(m) => m.clone(),
                other => other.to_string(),
            };
            vec![row("auc", None, msg.clone()), row("ap", None, msg)]
        }
    }
}

fn cmd_bench(ctx: &Ctx<'_>, a: &BenchArgs) -> Result<()> {
    let spec: BenchSpec =
        serde_json::from_value(read_json(&a.spec)?).map_err(|e| Error::param(format!("{}: {e}", a.spec.display())))?;
    let master_seed = a.seed.or(spec.seed).unwrap_or(0);
    let mut master = SeededRng::new(master_seed);
    let base = a.spec.parent().unwrap_or(Path::new("."));
    let seeds: Vec<u64> = spec.datasets.iter().map(|_| master.next_u64()).collect();
    let datasets: Vec<Result<LabeledDataset>> = spec
        .datasets
        .par_iter()
        .zip(&seeds)
        .map(|(d, &s)| d.load(s, base))
        .collect();
    let detectors: Vec<(Result<DetectorConfig>, String)> = spec
        .detectors
        .iter()
        .map(|d| {
            let cfg = d.config();
            let name = match &cfg {
                Ok(c) => detector_name(c),
                Err(_) => d.method.to_string(),
            };
            (cfg, name)
        })
        .collect();
    let cells: Vec<(usize, usize)> = (0..datasets.len())
        .flat_map(|i| (0..detectors.len()).map(move |j| (i, j)))
        .collect();
    let rows: Vec<BenchRow> = cells
        .par_iter()
        .flat_map_iter(|&(i, j)| bench_cell(&spec.datasets[i].name, &datasets[i], &detectors[j].0, &detectors[j].1))
        .collect();

    let resolved = json!({ "seed": master_seed, "dataset_seeds": seeds });
    let mut out = ctx.csv_preamble(resolved).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let csv_err = |e: csv::Error| Error::Internal(format!("CSV write failed: {e}"));
        w.write_record(["dataset", "method", "metric", "value", "error", "wall_ms"])
            .map_err(csv_err)?;
        for r in &rows {
            let value = r.value.map(|v| format!("{v:?}")).unwrap_or_default();
            let wall = format!("{:.3}", r.wall_ms);
            w.write_record([r.dataset.as_str(), &r.method, r.metric, &value, &r.error, &wall])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
    }
    write_output(a.output.as_deref(), &String::from_utf8(out).expect("CSV is UTF-8"))
}

fn cmd_generate(ctx: &Ctx<'_>, a: &GenerateArgs) -> Result<()> {
    let seed = a.seed.unwrap_or(0);
    let (data, resolved) = match (&a.scenario.scenario, &a.spec) {
        (Some(name), None) => {
            let scenario = a.scenario.build(name)?;
            (scenario.generate(seed)?, json!({ "scenario": scenario, "seed": seed }))
        }
        (None, Some(path)) => {
            let mut v = read_json(path)?;
            if let Some(obj) = v.as_object_mut() {
                if a.seed.is_some() || !obj.contains_key("seed") {
                    obj.insert("seed".into(), json!(seed));
                }
            }
            let spec = ContaminationSpec::from_json(&v)?;
            (sample_contaminated(&spec)?, json!({ "contamination": spec }))
        }
        _ => return Err(Error::param("give exactly one of --scenario or --spec")),
    };
    let mut out = ctx.csv_preamble(resolved).into_bytes();
    write_csv(&data, &mut out)?;
    write_output(a.output.as_deref(), &String::from_utf8(out).expect("CSV is UTF-8"))
}

fn cmd_calibrate(ctx: &Ctx<'_>, a: &CalibrateArgs) -> Result<()> {
    let dist: ReferenceDistribution = serde_json::from_value(read_json(&a.distribution)?)
        .map_err(|e| Error::param(format!("{}: {e}", a.distribution.display())))?;
    dist.validate()?;
    let pilots = match &a.input {
        Some(path) => vec![load_csv(path, None)?.into_dataset()],
        None => {
            if a.pilots == 0 {
                return Err(Error::param("--pilots must be ≥ 1"));
            }
            let mut master = SeededRng::new(a.seed);
            (0..a.pilots)
                .map(|_| dist.sample(a.n, master.next_u64()).map(LabeledDataset::into_dataset))
                .collect::<Result<Vec<_>>>()?
        }
    };
    let cal = calibrate_c(&dist, &pilots, a.m, a.q, a.delta)?;
    let n = pilots[0].n();
    let bound = dtm_bound_sample(n, a.delta, a.m, cal.c)?;
    let resolved = json!({ "pilot_n": n, "pilots": pilots.len() });
    let doc = json!({
        "run_config": ctx.run_config(resolved),
        "calibration": cal,
        "dtm_bound_sample": bound,
    });
    write_output(a.output.as_deref(), &pretty(&doc))
}
