//! The `decon` command-line interface.
//!
//! Exit codes: 0 success, 1 other failure, 2 model validation, 3 adjustment
//! misuse, 4 input/output or schema error.

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::json;

use crate::counterfactual::{
    fit_anticausal, generate_cf_features, population_cf_covariance, AnticausalFit, PathTarget,
};
use crate::dataset::{Dataset, Provenance};
use crate::error::Error;
use crate::experiments::{self, median, AdjustmentMethod, ExperimentConfig, ResultsTable, Variant};
use crate::scm::{self, Block, LinearScm, Role, Task};

pub use report::{quantile_table, render_svg, QuantileRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_MISUSE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "decon", version, about = "Causality-aware counterfactual features for linear SCMs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw samples from a model file into a CSV dataset.
    Simulate(SimulateArgs),
    /// Replace features with counterfactual features.
    Adjust(AdjustArgs),
    /// Print the reparameterization and covariance decomposition of a model.
    Decompose(DecomposeArgs),
    /// Run the dataset-shift stability experiment.
    Experiment(ExperimentArgs),
    /// Summarize experiment results as quantile tables and an SVG plot.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model file (JSON).
    pub scm: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AdjustArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// direct, indirect or confounding.
    #[arg(long, default_value = "direct")]
    pub target: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    pub scm: PathBuf,
    /// Write JSON here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// fixed-vary or increasing-vary.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads (default: available parallelism).
    #[arg(long, env = "DECON_THREADS")]
    pub threads: Option<usize>,
    /// JSON configuration; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_features: Option<usize>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory written by `decon experiment`.
    #[arg(long)]
    pub results: PathBuf,
    /// Output path; the SVG and quantile CSV share its stem.
    #[arg(long)]
    pub out: PathBuf,
}

/// A failed command: exit code and message.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Cycle { .. } | Error::Role(_) | Error::Psd(_) => EXIT_VALIDATION,
            Error::Schema(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_) => EXIT_IO,
            _ => EXIT_OTHER,
        };
        Failure::new(code, e.to_string())
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses the process arguments, runs the command and returns the exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_OTHER } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn execute(command: Command) -> CmdResult {
    match command {
        Command::Simulate(a) => simulate(&a),
        Command::Adjust(a) => adjust(&a),
        Command::Decompose(a) => decompose(&a),
        Command::Experiment(a) => experiment(&a),
        Command::Report(a) => report(&a),
    }
}

fn simulate(a: &SimulateArgs) -> CmdResult {
    let scm = LinearScm::read(&a.scm)?;
    scm.validate()?;
    let data = scm.simulate(a.n, a.seed)?;
    data.write_path(&a.out)?;
    Ok(())
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    config_path: Option<String>,
    base_seed: Option<u64>,
    output_dir: String,
    started_unix: u64,
    version: &'static str,
    config: serde_json::Value,
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<(), Error> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(manifest)? + "\n")?;
    Ok(())
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn fit_json(fit: &AnticausalFit) -> serde_json::Value {
    json!({
        "features": fit.columns.features,
        "confounders": fit.columns.confounders,
        "mediators": fit.columns.mediators,
        "response": fit.columns.response,
        "intercepts_x": fit.feature_intercepts().iter().collect::<Vec<_>>(),
        "gamma_xc": matrix_rows(&fit.gamma_xc()),
        "gamma_xm": matrix_rows(&fit.gamma_xm()),
        "gamma_xy": matrix_rows(&fit.gamma_xy()),
        "gamma_mc": matrix_rows(&fit.gamma_mc()),
        "gamma_my": matrix_rows(&fit.gamma_my()),
    })
}

pub const TRAIN_OUTPUT: &str = "train_adjusted.csv";
pub const TEST_OUTPUT: &str = "test_adjusted.csv";
pub const COEFFICIENTS_OUTPUT: &str = "coefficients.json";

fn adjust(a: &AdjustArgs) -> CmdResult {
    let target: PathTarget = a.target.parse().map_err(|e: Error| Failure::new(EXIT_MISUSE, e.to_string()))?;
    let train = Dataset::read_path(&a.train)?;
    let test = a.test.as_ref().map(Dataset::read_path).transpose()?;
    if let Some(test) = &test {
        if target != PathTarget::Direct && !test.has_role(Role::Response) {
            return Err(Failure::new(
                EXIT_MISUSE,
                format!("the {target} target needs a labeled test set; only direct adjustment works without labels"),
            ));
        }
    }
    let misuse = |e: Error| match e {
        Error::Role(_) | Error::MissingColumn(_) | Error::Shape(_) => Failure::new(EXIT_MISUSE, e.to_string()),
        other => Failure::from(other),
    };
    write_manifest(
        &a.out,
        &RunManifest {
            command: "adjust",
            config_path: None,
            base_seed: None,
            output_dir: a.out.display().to_string(),
            started_unix: now_unix(),
            version: env!("CARGO_PKG_VERSION"),
            config: json!({
                "train": a.train.display().to_string(),
                "test": a.test.as_ref().map(|p| p.display().to_string()),
                "target": target.as_str(),
            }),
        },
    )?;

    let fit = fit_anticausal(&train).map_err(misuse)?;
    let tag = Provenance::Adjusted(target.as_str().to_string());
    let train_out = match target {
        PathTarget::Direct => train
            .replace_columns(&fit.columns.features, &fit.direct_train_features(&train)?)?
            .with_provenance(tag),
        _ => generate_cf_features(&fit, &train, target).map_err(misuse)?,
    };
    train_out.write_path(a.out.join(TRAIN_OUTPUT))?;
    if let Some(test) = &test {
        generate_cf_features(&fit, test, target).map_err(misuse)?.write_path(a.out.join(TEST_OUTPUT))?;
    }
    let mut coefs = fit_json(&fit);
    coefs["target"] = json!(target.as_str());
    fs::write(a.out.join(COEFFICIENTS_OUTPUT), serde_json::to_string_pretty(&coefs).map_err(Error::from)? + "\n")
        .map_err(Error::from)?;
    Ok(())
}

fn decompose(a: &DecomposeArgs) -> CmdResult {
    let model = LinearScm::read(&a.scm)?;
    let order = model.validate()?;
    let r = scm::reparameterize(&model)?;
    let moments = model.implied_moments()?;
    let blocks: &[(&str, Block)] = match model.task() {
        Task::Anticausal => &[
            ("YC", Block::YC),
            ("MC", Block::MC),
            ("MY", Block::MY),
            ("XC", Block::XC),
            ("XM", Block::XM),
            ("XY", Block::XY),
        ],
        Task::Causal => &[
            ("XC", Block::XC),
            ("MC", Block::MC),
            ("MX", Block::MX),
            ("YC", Block::YC),
            ("YM", Block::YM),
            ("YX", Block::YX),
        ],
    };
    let gamma: serde_json::Map<String, serde_json::Value> =
        blocks.iter().map(|(k, b)| (k.to_string(), json!(matrix_rows(&r.gamma(*b))))).collect();
    let w_cov: serde_json::Map<String, serde_json::Value> = Role::ALL
        .iter()
        .map(|&role| (role.to_string(), json!(matrix_rows(&r.w_cov(role)))))
        .collect();
    let mut out = json!({
        "task": model.task(),
        "names": model.names(),
        "topological_order": order.iter().map(|&i| model.names()[i].clone()).collect::<Vec<_>>(),
        "implied_mean": moments.mean.iter().collect::<Vec<_>>(),
        "implied_cov": matrix_rows(&moments.cov),
        "gamma": gamma,
        "w_cov": w_cov,
    });
    let roles_independent = model.has_role_independent_errors();
    if roles_independent {
        let n_c = model.indices(Role::Confounder).len();
        let n_m = model.indices(Role::Mediator).len();
        let mut cf = serde_json::Map::new();
        for t in PathTarget::ALL {
            let applicable = match t {
                PathTarget::Indirect => n_m > 0,
                PathTarget::ConfoundingOnly => n_c > 0,
                PathTarget::Direct => true,
            };
            if applicable {
                cf.insert(t.as_str().to_string(), json!(matrix_rows(&population_cf_covariance(&model, t)?)));
            }
        }
        out["counterfactual_covariance"] = json!(cf);
    }
    if model.task() == Task::Anticausal {
        let t = scm::total_effects(&model)?;
        out["total_effects"] = json!({ "xy": matrix_rows(&t.xy), "xc": matrix_rows(&t.xc) });
        if roles_independent {
            let d = scm::covariance_decomposition(&model)?;
            out["covariance_decomposition"] = json!({
                "direct": matrix_rows(&d.direct),
                "indirect": matrix_rows(&d.indirect),
                "confounding_direct": matrix_rows(&d.confounding_direct),
                "confounding_via_m": matrix_rows(&d.confounding_via_m),
            });
        }
    }
    let text = serde_json::to_string_pretty(&out).map_err(Error::from)? + "\n";
    match &a.out {
        Some(p) => fs::write(p, text).map_err(Error::from)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Effective configuration: flags over config file over defaults.
pub fn experiment_config(a: &ExperimentArgs) -> Result<ExperimentConfig, Error> {
    let mut config = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            serde_json::from_str::<ExperimentConfig>(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(v) = &a.variant {
        let variant: Variant = v.parse()?;
        if variant != config.variant {
            config.test_grid = None;
        }
        config.variant = variant;
    }
    if let Some(r) = a.reps {
        config.n_reps = r;
    }
    if let Some(s) = a.seed {
        config.base_seed = s;
    }
    if let Some(p) = a.n_features {
        config.n_features = p;
    }
    if let Some(n) = a.n_train {
        config.n_train = n;
    }
    if let Some(n) = a.n_test {
        config.n_test = n;
    }
    config.validate()?;
    Ok(config)
}

fn experiment(a: &ExperimentArgs) -> CmdResult {
    let config = experiment_config(a)?;
    let threads = match a.threads {
        Some(0) => return Err(Failure::new(EXIT_OTHER, "--threads must be at least 1")),
        Some(t) => t,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let mut echoed = config.clone();
    echoed.test_grid = Some(config.grid());
    write_manifest(
        &a.out,
        &RunManifest {
            command: "experiment",
            config_path: a.config.as_ref().map(|p| p.display().to_string()),
            base_seed: Some(config.base_seed),
            output_dir: a.out.display().to_string(),
            started_unix: now_unix(),
            version: env!("CARGO_PKG_VERSION"),
            config: serde_json::to_value(&echoed).map_err(Error::from)?,
        },
    )?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::new(EXIT_OTHER, e.to_string()))?;
    let table = pool.install(|| experiments::run_experiment(&config))?;
    experiments::write_results(&a.out, &table, &config)?;
    fs::write(a.out.join("summary.txt"), summary(&table, &config)).map_err(Error::from)?;
    if table.records.is_empty() {
        return Err(Failure::new(EXIT_OTHER, format!("all {} replications failed", table.failures.len())));
    }
    Ok(())
}

/// Text table of median MSE per method and test set, and median stability
/// error per method.
pub fn summary(table: &ResultsTable, config: &ExperimentConfig) -> String {
    let methods: Vec<AdjustmentMethod> = config.methods.clone();
    let mut s = format!(
        "variant {}  replications {} ({} failed)\n\nmedian MSE\n{:<6}",
        config.variant.as_str(),
        config.n_reps,
        table.failures.len(),
        "test"
    );
    for m in &methods {
        s.push_str(&format!(" {:>16}", m.as_str()));
    }
    s.push('\n');
    for k in 1..=experiments::GRID_LEN {
        s.push_str(&format!("{k:<6}"));
        for &m in &methods {
            s.push_str(&format!(" {:>16.4}", median(&table.mse_of(m, k))));
        }
        s.push('\n');
    }
    s.push_str("\nmedian stability error\n");
    for &m in &methods {
        s.push_str(&format!("{:<16} {:.4}\n", m.as_str(), median(&table.stability_of(m))));
    }
    s
}

fn report(a: &ReportArgs) -> CmdResult {
    let table = experiments::read_results(&a.results)?;
    let rows = quantile_table(&table);
    let stem = a.out.with_extension("");
    let csv_path = stem.with_extension("csv");
    let svg_path = stem.with_extension("svg");
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(Error::from)?;
    }
    report::write_quantiles(&csv_path, &rows)?;
    fs::write(&svg_path, render_svg(&rows)).map_err(Error::from)?;
    Ok(())
}
