//! `pwgraph`: command-line driver for graph spectra, Poincaré constants of
//! vertex sets, variational spline fits, and bandlimited reconstruction
//! experiments.
//!
//! Every subcommand is deterministic: the same flags (and the same seed)
//! produce byte-identical stdout and artifacts. Exit codes are fixed:
//! 0 on success, 1 when the request never reached the numerics (bad flags,
//! bad grammar, unreadable inputs), 2 when a library module rejected the
//! computation — in which case stderr names the module.

mod artifacts;
mod grammar;

use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use pwgraph::graph::write_edge_list;
use pwgraph::reconstruct::{self, Reconstruction, ReconstructError};
use pwgraph::sampling::{self, LambdaReport, SamplingError, VertexSet};
use pwgraph::spline::{self, SplineError};
use pwgraph::{Graph, SpectralDecomposition, SpectralError};

use artifacts::{json_document, spectrum_csv, stop_reason_name, trace_csv, trials_csv, TrialRow};
use grammar::{parse_fit, GraphSpec, RemovalSpec};

/// Regularization cap used by `--eps auto`.
const EPS_AUTO_FLOOR: f64 = 0.25;

/// Hard ceiling on `--lmax`; beyond this `2^l` leaves any useful range.
const LMAX_CEILING: u32 = 30;

fn main() {
    // Rust ignores SIGPIPE by default, turning a closed pipe (`pwgraph ... | head`)
    // into a println! panic; restore the default so the process exits quietly.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Spectrum(args) => run_spectrum(args),
        Command::Lambda(args) => run_lambda(args),
        Command::Spline(args) => run_spline(args),
        Command::Reconstruct(args) => run_reconstruct(args),
        Command::Uniqueness(args) => run_uniqueness(args),
        Command::Gen(args) => run_gen(args),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Validation(message)) => {
            eprintln!("error: {message}");
            1
        }
        Err(CliError::Numerical { module, message }) => {
            eprintln!("error[{module}]: {message}");
            2
        }
    }
}

// ---------------------------------------------------------------------------
// Error classification
// ---------------------------------------------------------------------------

/// How a failed invocation exits: validation problems exit 1 before any
/// numerics run; module errors raised during computation exit 2 and carry
/// the name of the module that refused.
#[derive(Debug)]
enum CliError {
    Validation(String),
    Numerical {
        module: &'static str,
        message: String,
    },
}

fn validation(message: impl Into<String>) -> CliError {
    CliError::Validation(message.into())
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        CliError::Numerical {
            module: "spectral",
            message: e.to_string(),
        }
    }
}

impl From<SamplingError> for CliError {
    fn from(e: SamplingError) -> Self {
        CliError::Numerical {
            module: "sampling",
            message: e.to_string(),
        }
    }
}

impl From<SplineError> for CliError {
    fn from(e: SplineError) -> Self {
        CliError::Numerical {
            module: "spline",
            message: e.to_string(),
        }
    }
}

impl From<ReconstructError> for CliError {
    fn from(e: ReconstructError) -> Self {
        match e {
            ReconstructError::Sampling(inner) => inner.into(),
            ReconstructError::Spline(inner) => inner.into(),
            ReconstructError::Spectral(inner) => inner.into(),
            other => CliError::Numerical {
                module: "reconstruct",
                message: other.to_string(),
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Command line shape
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "pwgraph",
    version,
    about = "Graph spectra, Poincaré constants, variational splines, and \
             bandlimited reconstruction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues of the normalized Laplacian
    Spectrum(SpectrumArgs),
    /// Poincaré constant of a removed vertex set
    Lambda(LambdaArgs),
    /// Fit one interpolating variational spline
    Spline(SplineArgs),
    /// Reconstruct a bandlimited signal from samples off a removed set
    Reconstruct(ReconstructArgs),
    /// Uniqueness-set certificate for a bandwidth
    Uniqueness(UniquenessArgs),
    /// Generate a graph and emit its edge list
    Gen(GenArgs),
}

#[derive(Args)]
struct SpectrumArgs {
    /// Graph spec: cycle:m, path:m, torus:m1xm2[x...], file:<path>
    #[arg(long)]
    graph: Option<String>,
    /// Directory to write spectrum.csv into
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct LambdaArgs {
    /// Graph spec: cycle:m, path:m, torus:m1xm2[x...], file:<path>
    #[arg(long)]
    graph: Option<String>,
    /// Removal spec: segment:N[@start], segments:CxN, solid:N1xN2[@r,c], list:v1,v2,...
    #[arg(long)]
    remove: Option<String>,
    /// Directory to write lambda.json into
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SplineArgs {
    /// Graph spec: cycle:m, path:m, torus:m1xm2[x...], file:<path>
    #[arg(long)]
    graph: Option<String>,
    /// Interpolation data: v1=x1,v2=x2,...
    #[arg(long)]
    fit: Option<String>,
    /// Spline order t > 0 (default 2)
    #[arg(long)]
    order: Option<f64>,
    /// Regularization eps >= 0 (default 0.25)
    #[arg(long)]
    eps: Option<f64>,
    /// Directory to write spline.csv and spline.json into
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Graph spec: cycle:m, path:m, torus:m1xm2[x...], file:<path>
    #[arg(long)]
    graph: Option<String>,
    /// Removal spec: segment:N[@start], segments:CxN, solid:N1xN2[@r,c], list:v1,v2,...
    #[arg(long)]
    remove: Option<String>,
    /// Bandwidth of the synthesized ground truth
    #[arg(long)]
    omega: Option<f64>,
    /// Regularization: a number, or "auto" to pick from the Poincaré slack (default auto)
    #[arg(long)]
    eps: Option<String>,
    /// Iteration budget: spline orders run through k = 2^l, l <= lmax (default 5)
    #[arg(long)]
    lmax: Option<u32>,
    /// Seed for the synthesized ground truth (default 7)
    #[arg(long)]
    seed: Option<u64>,
    /// Run this many independent trials on seeds seed, seed+1, ... (default 1)
    #[arg(long)]
    parallel_trials: Option<usize>,
    /// Directory for spectrum.csv, lambda.json, trace.csv, summary.json (default .)
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct UniquenessArgs {
    /// Graph spec: cycle:m, path:m, torus:m1xm2[x...], file:<path>
    #[arg(long)]
    graph: Option<String>,
    /// Removal spec: segment:N[@start], segments:CxN, solid:N1xN2[@r,c], list:v1,v2,...
    #[arg(long)]
    remove: Option<String>,
    /// Bandwidth to certify
    #[arg(long)]
    omega: Option<f64>,
    /// Directory to write uniqueness.json into
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Graph spec: cycle:m, path:m, torus:m1xm2[x...], file:<path>
    #[arg(long)]
    graph: Option<String>,
    /// Output file for the edge list (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Config file
// ---------------------------------------------------------------------------

/// Config-file mirror of the long flags. Every subcommand accepts the same
/// file shape and reads only the keys it uses; unknown keys are rejected so
/// typos surface instead of being silently ignored.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    graph: Option<String>,
    remove: Option<String>,
    omega: Option<f64>,
    eps: Option<serde_json::Value>,
    lmax: Option<u32>,
    seed: Option<u64>,
    order: Option<f64>,
    fit: Option<String>,
    parallel_trials: Option<usize>,
    out: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| validation(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| validation(format!("config {}: {e}", path.display())))
}

/// Normalize the config file's `eps` (JSON number or the string "auto")
/// into flag text.
fn config_eps(value: serde_json::Value) -> Result<String, CliError> {
    match value {
        serde_json::Value::String(s) => Ok(s),
        serde_json::Value::Number(x) => Ok(x.to_string()),
        other => Err(validation(format!(
            "config eps must be a number or \"auto\", got {other}"
        ))),
    }
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| validation(format!("missing required --{flag} (flag or config)")))
}

// ---------------------------------------------------------------------------
// Shared pieces
// ---------------------------------------------------------------------------

struct GraphContext {
    spec: GraphSpec,
    text: String,
    graph: Graph,
}

fn graph_context(text: String) -> Result<GraphContext, CliError> {
    let spec = GraphSpec::parse(&text).map_err(validation)?;
    let graph = spec.build().map_err(validation)?;
    Ok(GraphContext { spec, text, graph })
}

enum EpsChoice {
    Auto,
    Given(f64),
}

fn parse_eps(text: &str) -> Result<EpsChoice, CliError> {
    if text == "auto" {
        return Ok(EpsChoice::Auto);
    }
    let value: f64 = text
        .parse()
        .map_err(|_| validation(format!("--eps '{text}' is neither a number nor 'auto'")))?;
    validate_eps(value)?;
    Ok(EpsChoice::Given(value))
}

fn validate_eps(value: f64) -> Result<f64, CliError> {
    if !value.is_finite() || value < 0.0 {
        return Err(validation(format!(
            "--eps must be finite and nonnegative, got {value}"
        )));
    }
    Ok(value)
}

fn validate_omega(omega: f64) -> Result<f64, CliError> {
    if !omega.is_finite() || omega < 0.0 {
        return Err(validation(format!(
            "--omega must be finite and nonnegative, got {omega}"
        )));
    }
    Ok(omega)
}

fn write_artifact(dir: &Path, name: &str, content: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| validation(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, content)
        .map_err(|e| validation(format!("cannot write {}: {e}", path.display())))
}

/// Exact Poincaré report for a resolved removal set, with the closed-form
/// segment bound attached whenever the removal shape certifies one.
fn lambda_report(
    d: &SpectralDecomposition,
    set: VertexSet,
    removal: &RemovalSpec,
    spec: &GraphSpec,
) -> Result<LambdaReport, CliError> {
    let mut report = LambdaReport::brute_force(d, set)?;
    if let Some(len) = removal.certified_segment_len(spec) {
        report.closed_form_bound = Some(sampling::segment_bound(len)?);
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// spectrum
// ---------------------------------------------------------------------------

fn run_spectrum(args: SpectrumArgs) -> Result<(), CliError> {
    let cfg = load_config(args.config.as_deref())?;
    let ctx = graph_context(require(args.graph.or(cfg.graph), "graph")?)?;
    let d = SpectralDecomposition::compute(&ctx.graph)?;
    for value in d.eigenvalues() {
        println!("{value:.12}");
    }
    if let Some(out) = args.out.or(cfg.out) {
        write_artifact(&out, "spectrum.csv", &spectrum_csv(d.eigenvalues()))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// lambda
// ---------------------------------------------------------------------------

fn run_lambda(args: LambdaArgs) -> Result<(), CliError> {
    let cfg = load_config(args.config.as_deref())?;
    let ctx = graph_context(require(args.graph.or(cfg.graph), "graph")?)?;
    let removal_text = require(args.remove.or(cfg.remove), "remove")?;
    let removal = RemovalSpec::parse(&removal_text).map_err(validation)?;
    let set = removal.resolve(&ctx.spec, &ctx.graph).map_err(validation)?;

    let d = SpectralDecomposition::compute(&ctx.graph)?;
    let report = lambda_report(&d, set, &removal, &ctx.spec)?;

    println!("vertices = {}", ctx.graph.vertex_count());
    println!("removed = {}", report.set.len());
    println!("lambda = {}", report.lambda);
    println!("uniqueness_threshold = {}", report.uniqueness_threshold);
    match report.closed_form_bound {
        Some(bound) => println!("closed_form_bound = {bound}"),
        None => println!("closed_form_bound = none"),
    }
    println!("omega_star = {}", sampling::omega_star(&ctx.graph));

    if let Some(out) = args.out.or(cfg.out) {
        write_artifact(&out, "lambda.json", &json_document(&report))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// spline
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SplineSummary<'a> {
    graph: &'a str,
    vertices: &'a [usize],
    target: &'a [f64],
    order: f64,
    eps: f64,
    coefficients: &'a [f64],
    sobolev_energy: f64,
    condition_estimate: f64,
}

fn run_spline(args: SplineArgs) -> Result<(), CliError> {
    let cfg = load_config(args.config.as_deref())?;
    let ctx = graph_context(require(args.graph.or(cfg.graph), "graph")?)?;
    let fit_text = require(args.fit.or(cfg.fit), "fit")?;
    let pairs = parse_fit(&fit_text).map_err(validation)?;
    let (vertices, values): (Vec<usize>, Vec<f64>) = pairs.into_iter().unzip();

    let order = args.order.or(cfg.order).unwrap_or(2.0);
    if !order.is_finite() || order <= 0.0 {
        return Err(validation(format!(
            "--order must be finite and positive, got {order}"
        )));
    }
    let eps = match (args.eps, cfg.eps) {
        (Some(value), _) => validate_eps(value)?,
        (None, Some(raw)) => match parse_eps(&config_eps(raw)?)? {
            EpsChoice::Given(value) => value,
            EpsChoice::Auto => {
                return Err(validation(
                    "spline eps must be a number; 'auto' applies only to reconstruct",
                ))
            }
        },
        (None, None) => 0.25,
    };

    let d = SpectralDecomposition::compute(&ctx.graph)?;
    let model = spline::fit_spline(&d, &vertices, &values, order, eps)?;

    println!("vertices = {}", ctx.graph.vertex_count());
    println!("fitted = {}", model.vertices.len());
    println!("order = {}", model.order);
    println!("eps = {}", model.eps);
    println!("sobolev_energy = {}", model.sobolev_energy);
    println!("condition_estimate = {}", model.condition_estimate);

    if let Some(out) = args.out.or(cfg.out) {
        let mut csv = String::from("vertex,value\n");
        for (v, value) in model.solution.values().iter().enumerate() {
            csv.push_str(&format!("{v},{value}\n"));
        }
        write_artifact(&out, "spline.csv", &csv)?;
        let summary = SplineSummary {
            graph: &ctx.text,
            vertices: &model.vertices,
            target: &model.target,
            order: model.order,
            eps: model.eps,
            coefficients: &model.coefficients,
            sobolev_energy: model.sobolev_energy,
            condition_estimate: model.condition_estimate,
        };
        write_artifact(&out, "spline.json", &json_document(&summary))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// uniqueness
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct UniquenessSummary<'a> {
    graph: &'a str,
    vertex_count: usize,
    removed: &'a [usize],
    sample_count: usize,
    omega: f64,
    lambda: f64,
    uniqueness_threshold: f64,
    omega_star: f64,
    certified: bool,
    unique: bool,
    margin: f64,
    band_dimension: usize,
}

fn run_uniqueness(args: UniquenessArgs) -> Result<(), CliError> {
    let cfg = load_config(args.config.as_deref())?;
    let ctx = graph_context(require(args.graph.or(cfg.graph), "graph")?)?;
    let removal_text = require(args.remove.or(cfg.remove), "remove")?;
    let removal = RemovalSpec::parse(&removal_text).map_err(validation)?;
    let set = removal.resolve(&ctx.spec, &ctx.graph).map_err(validation)?;
    let omega = validate_omega(require(args.omega.or(cfg.omega), "omega")?)?;

    let d = SpectralDecomposition::compute(&ctx.graph)?;
    let lambda = sampling::poincare_constant(&d, &set)?;
    let threshold = sampling::uniqueness_threshold(lambda)?;
    let kept = VertexSet::new(&ctx.graph, &set.complement())?;
    let check = sampling::verify_uniqueness(&d, &kept, omega)?;
    let certified = lambda * omega < 1.0;

    println!("omega = {omega}");
    println!("lambda = {lambda}");
    println!("uniqueness_threshold = {threshold}");
    println!("omega_star = {}", sampling::omega_star(&ctx.graph));
    println!("certified = {certified}");
    println!("unique = {}", check.unique);
    println!("margin = {}", check.margin);
    println!("band_dimension = {}", check.band_dimension);
    println!("sample_count = {}", check.sample_count);

    if let Some(out) = args.out.or(cfg.out) {
        let summary = UniquenessSummary {
            graph: &ctx.text,
            vertex_count: ctx.graph.vertex_count(),
            removed: set.members(),
            sample_count: check.sample_count,
            omega,
            lambda,
            uniqueness_threshold: threshold,
            omega_star: sampling::omega_star(&ctx.graph),
            certified,
            unique: check.unique,
            margin: check.margin,
            band_dimension: check.band_dimension,
        };
        write_artifact(&out, "uniqueness.json", &json_document(&summary))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// reconstruct
// ---------------------------------------------------------------------------

/// The summary.json schema; field order is the declaration order.
#[derive(Serialize)]
struct RunSummary<'a> {
    graph: &'a str,
    vertex_count: usize,
    removed: &'a [usize],
    sample_count: usize,
    omega: f64,
    eps: f64,
    lambda: f64,
    closed_form_bound: Option<f64>,
    gamma: f64,
    uniqueness_threshold: f64,
    omega_star: f64,
    seed: u64,
    l_max: u32,
    iterations: usize,
    stop_reason: &'a str,
    final_error: Option<f64>,
    bound_satisfied: Option<bool>,
}

struct Trial {
    seed: u64,
    reconstruction: Reconstruction,
}

impl Trial {
    fn final_error(&self) -> Option<f64> {
        self.reconstruction
            .trace
            .entries
            .last()
            .and_then(|entry| entry.error)
    }

    fn summary<'a>(
        &'a self,
        ctx: &'a GraphContext,
        report: &'a LambdaReport,
        l_max: u32,
    ) -> RunSummary<'a> {
        let trace = &self.reconstruction.trace;
        RunSummary {
            graph: &ctx.text,
            vertex_count: ctx.graph.vertex_count(),
            removed: report.set.members(),
            sample_count: ctx.graph.vertex_count() - report.set.len(),
            omega: trace.omega,
            eps: trace.eps,
            lambda: trace.lambda,
            closed_form_bound: report.closed_form_bound,
            gamma: trace.gamma,
            uniqueness_threshold: report.uniqueness_threshold,
            omega_star: sampling::omega_star(&ctx.graph),
            seed: self.seed,
            l_max,
            iterations: trace.entries.len(),
            stop_reason: stop_reason_name(&trace.stop_reason),
            final_error: self.final_error(),
            bound_satisfied: trace.bound_satisfied(),
        }
    }
}

/// Synthesize a unit-norm bandlimited ground truth from the seed, sample it
/// off the removed set, and reconstruct it.
fn run_trial(
    d: &SpectralDecomposition,
    removed: &VertexSet,
    omega: f64,
    eps: f64,
    l_max: u32,
    lambda: f64,
    seed: u64,
) -> Result<Trial, CliError> {
    let truth = reconstruct::synthesize_pw_signal(d, omega, seed)?;
    let kept = removed.complement();
    let samples: Vec<f64> = kept.iter().map(|&v| truth.values()[v]).collect();
    let reconstruction = reconstruct::reconstruct(
        d,
        removed,
        &samples,
        omega,
        eps,
        l_max,
        Some(lambda),
        Some(&truth),
    )?;
    Ok(Trial {
        seed,
        reconstruction,
    })
}

fn print_trial(trial: &Trial) {
    let trace = &trial.reconstruction.trace;
    println!("seed = {}", trial.seed);
    println!("omega = {}", trace.omega);
    println!("eps = {}", trace.eps);
    println!("lambda = {}", trace.lambda);
    println!("gamma = {}", trace.gamma);
    for entry in &trace.entries {
        match entry.error {
            Some(error) => println!(
                "iterate l={} k={}: error = {error}, bound = {}, condition = {}",
                entry.l, entry.k, entry.bound, entry.gram_condition
            ),
            None => println!(
                "iterate l={} k={}: bound = {}, condition = {}",
                entry.l, entry.k, entry.bound, entry.gram_condition
            ),
        }
    }
    println!("stop_reason = {}", stop_reason_name(&trace.stop_reason));
    println!("iterations = {}", trace.entries.len());
    if let Some(error) = trial.final_error() {
        println!("final_error = {error}");
    }
    match trace.bound_satisfied() {
        Some(ok) => println!("bound_satisfied = {ok}"),
        None => println!("bound_satisfied = unmeasured"),
    }
}

fn run_reconstruct(args: ReconstructArgs) -> Result<(), CliError> {
    let cfg = load_config(args.config.as_deref())?;
    let ctx = graph_context(require(args.graph.or(cfg.graph), "graph")?)?;
    let removal_text = require(args.remove.or(cfg.remove), "remove")?;
    let removal = RemovalSpec::parse(&removal_text).map_err(validation)?;
    let set = removal.resolve(&ctx.spec, &ctx.graph).map_err(validation)?;
    let omega = validate_omega(require(args.omega.or(cfg.omega), "omega")?)?;
    let eps_choice = match (args.eps, cfg.eps) {
        (Some(text), _) => parse_eps(&text)?,
        (None, Some(raw)) => parse_eps(&config_eps(raw)?)?,
        (None, None) => EpsChoice::Auto,
    };
    let l_max = args.lmax.or(cfg.lmax).unwrap_or(5);
    if l_max > LMAX_CEILING {
        return Err(validation(format!(
            "--lmax {l_max} exceeds the supported maximum of {LMAX_CEILING}"
        )));
    }
    let seed = args.seed.or(cfg.seed).unwrap_or(7);
    let trials = args.parallel_trials.or(cfg.parallel_trials).unwrap_or(1);
    if trials == 0 {
        return Err(validation("--parallel-trials must be at least 1"));
    }
    let seeds: Vec<u64> = (0..trials)
        .map(|i| {
            seed.checked_add(i as u64)
                .ok_or_else(|| validation("--seed plus trial index overflows"))
        })
        .collect::<Result<_, _>>()?;
    let out = args.out.or(cfg.out).unwrap_or_else(|| PathBuf::from("."));

    let d = SpectralDecomposition::compute(&ctx.graph)?;
    let report = lambda_report(&d, set, &removal, &ctx.spec)?;
    let lambda = report.lambda;
    let eps = match eps_choice {
        EpsChoice::Auto => reconstruct::choose_epsilon(lambda, omega, EPS_AUTO_FLOOR)?,
        EpsChoice::Given(value) => value,
    };

    // Trials are independent and each is deterministic; joining in spawn
    // order fixes the output ordering by seed regardless of scheduling.
    let results: Vec<Result<Trial, CliError>> = if seeds.len() == 1 {
        vec![run_trial(&d, &report.set, omega, eps, l_max, lambda, seeds[0])]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = seeds
                .iter()
                .map(|&trial_seed| {
                    let d = &d;
                    let set = &report.set;
                    scope.spawn(move || run_trial(d, set, omega, eps, l_max, lambda, trial_seed))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("trial thread panicked"))
                .collect()
        })
    };
    let mut completed = Vec::with_capacity(results.len());
    for result in results {
        completed.push(result?);
    }

    for (i, trial) in completed.iter().enumerate() {
        if completed.len() > 1 {
            if i > 0 {
                println!();
            }
            println!("# trial {} of {}", i + 1, completed.len());
        }
        print_trial(trial);
    }

    write_artifact(&out, "spectrum.csv", &spectrum_csv(d.eigenvalues()))?;
    write_artifact(&out, "lambda.json", &json_document(&report))?;
    if completed.len() == 1 {
        let trial = &completed[0];
        write_artifact(&out, "trace.csv", &trace_csv(&trial.reconstruction.trace))?;
        write_artifact(
            &out,
            "summary.json",
            &json_document(&trial.summary(&ctx, &report, l_max)),
        )?;
    } else {
        for trial in &completed {
            write_artifact(
                &out,
                &format!("trace_{}.csv", trial.seed),
                &trace_csv(&trial.reconstruction.trace),
            )?;
            write_artifact(
                &out,
                &format!("summary_{}.json", trial.seed),
                &json_document(&trial.summary(&ctx, &report, l_max)),
            )?;
        }
        let rows: Vec<TrialRow> = completed
            .iter()
            .map(|trial| {
                let trace = &trial.reconstruction.trace;
                TrialRow {
                    seed: trial.seed,
                    gamma: trace.gamma,
                    iterations: trace.entries.len(),
                    stop_reason: stop_reason_name(&trace.stop_reason),
                    final_error: trial.final_error(),
                    bound_satisfied: trace.bound_satisfied(),
                }
            })
            .collect();
        write_artifact(&out, "trials.csv", &trials_csv(&rows))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

fn run_gen(args: GenArgs) -> Result<(), CliError> {
    let cfg = load_config(args.config.as_deref())?;
    let ctx = graph_context(require(args.graph.or(cfg.graph), "graph")?)?;
    let text = write_edge_list(&ctx.graph);
    match args.out.or(cfg.out) {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| {
                    validation(format!("cannot create {}: {e}", parent.display()))
                })?;
            }
            fs::write(&path, text)
                .map_err(|e| validation(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_grammar_accepts_auto_and_numbers() {
        assert!(matches!(parse_eps("auto"), Ok(EpsChoice::Auto)));
        assert!(matches!(parse_eps("0.25"), Ok(EpsChoice::Given(v)) if v == 0.25));
        assert!(matches!(parse_eps("0"), Ok(EpsChoice::Given(v)) if v == 0.0));
        assert!(parse_eps("fast").is_err());
        assert!(parse_eps("-0.5").is_err());
        assert!(parse_eps("inf").is_err());
    }

    #[test]
    fn omega_must_be_finite_and_nonnegative() {
        assert!(validate_omega(0.0).is_ok());
        assert!(validate_omega(1.5).is_ok());
        assert!(validate_omega(-0.1).is_err());
        assert!(validate_omega(f64::NAN).is_err());
        assert!(validate_omega(f64::INFINITY).is_err());
    }

    #[test]
    fn config_eps_normalizes_numbers_and_strings() {
        assert_eq!(config_eps(serde_json::json!("auto")).unwrap(), "auto");
        assert_eq!(config_eps(serde_json::json!(0.25)).unwrap(), "0.25");
        assert!(config_eps(serde_json::json!(true)).is_err());
        assert!(config_eps(serde_json::json!(null)).is_err());
    }

    #[test]
    fn config_files_reject_unknown_keys() {
        let parsed: Result<FileConfig, _> = serde_json::from_str(r#"{"graph": "cycle:6"}"#);
        assert!(parsed.is_ok());
        let typo: Result<FileConfig, _> = serde_json::from_str(r#"{"grpah": "cycle:6"}"#);
        assert!(typo.is_err());
    }

    #[test]
    fn module_errors_carry_their_module_name() {
        let err: CliError = SplineError::EmptyConstraintSet.into();
        assert!(matches!(err, CliError::Numerical { module: "spline", .. }));
        let err: CliError = ReconstructError::Spectral(SpectralError::ZeroSignal).into();
        assert!(matches!(
            err,
            CliError::Numerical { module: "spectral", .. }
        ));
        let err: CliError = ReconstructError::InfeasibleBandwidth {
            lambda: 2.0,
            omega: 0.6,
        }
        .into();
        assert!(matches!(
            err,
            CliError::Numerical { module: "reconstruct", .. }
        ));
    }

    #[test]
    fn missing_flags_are_validation_errors() {
        let err = require::<String>(None, "graph").unwrap_err();
        match err {
            CliError::Validation(message) => assert!(message.contains("--graph")),
            other => panic!("expected validation error, got {other:?}"),
        }
    }
}
