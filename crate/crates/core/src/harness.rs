//! Command-line front end: run configuration, single-method runs and the
//! method comparison sweep.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decompose::{
    accurate_tail_config, decompose_exact, decompose_numeric, DecompositionResult, StoppingPolicy,
};
use crate::error::{Error, Result};
use crate::functionals::{q_matrix, r_matrix_exact, r_matrix_numeric, LimitConfig, QNormalization};
use crate::oet::{build_exponential_basis, in_span, oet_analyze};
use crate::prony::prony_fit;
use crate::quadrature::QuadratureConfig;
use crate::signal::{
    read_sampled_csv, read_signal_spec, synthesize_samples, write_sampled_csv, SampledSignal,
    SignalSource, SymbolicTransient, Term, TimeGrid,
};
use crate::tail::TailFitConfig;

/// Process exit codes, one per error kind.
pub const EXIT_CODES: &[(u8, &str)] = &[
    (0, "success"),
    (2, "command-line usage error"),
    (3, "i/o error"),
    (4, "parse error in an input or config file"),
    (5, "invalid configuration"),
    (6, "invalid signal"),
    (7, "time outside the signal support"),
    (8, "quadrature failure"),
    (9, "signal vanished before the fit could run"),
    (10, "non-decaying tail"),
    (11, "diverging coefficient limit"),
    (12, "gamma pole in a Jacobi coefficient"),
    (13, "rank-deficient Prony system"),
    (14, "functional ledger out of order"),
];

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 3,
        Error::Parse(_) => 4,
        Error::InvalidConfig(_) => 5,
        Error::InvalidSignal(_) => 6,
        Error::OutOfSupport { .. } => 7,
        Error::QuadratureFailure { .. } => 8,
        Error::SignalVanished { .. } => 9,
        Error::NonDecaying { .. } => 10,
        Error::Diverging { .. } => 11,
        Error::GammaPole { .. } => 12,
        Error::RankDeficient { .. } => 13,
        Error::LedgerOrder { .. } => 14,
    }
}

fn exit_code_help() -> String {
    let mut s = String::from("Exit codes:\n");
    for (code, what) in EXIT_CODES {
        let _ = writeln!(s, "  {code:>3}  {what}");
    }
    let _ = write!(
        s,
        "\nEnvironment:\n  {}  overrides the quadrature node count",
        crate::quadrature::QUAD_NODES_ENV
    );
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Sample a signal spec on a uniform grid, with optional noise, as `t,x` CSV.
    Synth,
    /// Decompose a spec or a sample CSV into rates and coefficients (JSON).
    Decompose,
    /// Project onto the orthonormal exponential basis (JSON).
    Oet,
    /// Least-squares Prony fit of uniform samples (JSON).
    Prony,
    /// Biorthogonality matrices of the R and Q functionals (CSV).
    Functionals,
    /// Noise sweep comparing methods on one spec (CSV).
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Decomposer,
    Prony,
    Oet,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Decomposer => "decomposer",
            Method::Prony => "prony",
            Method::Oet => "oet",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "decomposer" | "decompose" => Ok(Method::Decomposer),
            "prony" => Ok(Method::Prony),
            "oet" => Ok(Method::Oet),
            other => Err(Error::InvalidConfig(format!(
                "unknown method {other:?} (expected decomposer, prony or oet)"
            ))),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "transient-lab", version, about, after_help = exit_code_help())]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub args: CliArgs,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct CliArgs {
    /// Signal spec (.json) or samples (.csv with header t,x).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Noise standard deviation; a comma list for compare.
    #[arg(long, global = true, value_delimiter = ',')]
    pub sigma: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Comma list of decomposer, prony, oet; may be empty.
    #[arg(long, global = true)]
    pub methods: Option<String>,
    /// Observation horizon for spec inputs.
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
    /// Sample spacing for spec inputs.
    #[arg(long, global = true)]
    pub step: Option<f64>,
    #[arg(long, global = true)]
    pub max_terms: Option<usize>,
    /// Prony order, or the OET basis size.
    #[arg(long, global = true)]
    pub order: Option<usize>,
    /// Exact term arithmetic for spec inputs to decompose.
    #[arg(long, global = true)]
    pub exact: bool,
    /// Known rates for the functionals matrices.
    #[arg(long, global = true, value_delimiter = ',')]
    pub rates: Option<Vec<f64>>,
}

/// JSON form of the run configuration; every field is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub tail: Option<TailFitConfig>,
    pub stopping: Option<StoppingPolicy>,
    pub quadrature: Option<QuadratureConfig>,
    pub limit: Option<LimitConfig>,
    pub seed: Option<u64>,
    pub sigmas: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub methods: Option<Vec<Method>>,
    pub horizon: Option<f64>,
    pub step: Option<f64>,
    pub max_terms: Option<usize>,
    pub order: Option<usize>,
    pub prony_step: Option<f64>,
    pub rates: Option<Vec<f64>>,
    pub q_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweep {
    pub sigmas: Vec<f64>,
    pub seed: u64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub tail: TailFitConfig,
    pub stopping: StoppingPolicy,
    pub quadrature: QuadratureConfig,
    pub limit: LimitConfig,
    pub sweep: NoiseSweep,
    pub methods: Vec<Method>,
    pub horizon: f64,
    pub step: f64,
    /// Prony order, or OET basis size; inferred from the signal spec when absent.
    pub order: Option<usize>,
    /// Target spacing of the decimated grid Prony sees in `compare`.
    pub prony_step: f64,
    pub exact: bool,
    pub rates: Vec<f64>,
    pub q_size: usize,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            input: None,
            output: None,
            tail: accurate_tail_config(),
            stopping: StoppingPolicy::default(),
            quadrature: QuadratureConfig::default(),
            limit: LimitConfig::default(),
            sweep: NoiseSweep {
                sigmas: vec![0.0],
                seed: 0,
                trials: 1,
            },
            methods: vec![Method::Decomposer, Method::Prony, Method::Oet],
            horizon: 40.0,
            step: 0.01,
            order: None,
            prony_step: 0.5,
            exact: false,
            rates: vec![0.5, 1.0, 1.7, 2.2, 3.0],
            q_size: 10,
        }
    }

    /// Defaults, then the `--config` file, then flags, then the environment.
    pub fn from_cli(command: Command, args: &CliArgs) -> Result<Self> {
        let mut cfg = Self::new(command);
        if let Some(path) = &args.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let mut de = serde_json::Deserializer::from_str(&text);
            let file: ConfigFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
                Error::Parse(format!("{}: {}: {}", path.display(), e.path(), e.inner()))
            })?;
            cfg.apply_file(file);
        }
        cfg.input = args.input.clone();
        cfg.output = args.output.clone();
        if let Some(s) = args.seed {
            cfg.sweep.seed = s;
        }
        if let Some(s) = &args.sigma {
            cfg.sweep.sigmas = s.clone();
        }
        if let Some(t) = args.trials {
            cfg.sweep.trials = t;
        }
        if let Some(m) = &args.methods {
            cfg.methods = parse_methods(m)?;
        }
        if let Some(h) = args.horizon {
            cfg.horizon = h;
        }
        if let Some(s) = args.step {
            cfg.step = s;
        }
        if let Some(m) = args.max_terms {
            cfg.stopping.max_terms = m;
        }
        if args.order.is_some() {
            cfg.order = args.order;
        }
        if let Some(r) = &args.rates {
            cfg.rates = r.clone();
        }
        cfg.exact |= args.exact;
        cfg.quadrature = cfg.quadrature.with_env_override()?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_file(&mut self, f: ConfigFile) {
        macro_rules! take {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = f.$field { $target = v; })*
            };
        }
        take!(
            tail => self.tail,
            stopping => self.stopping,
            quadrature => self.quadrature,
            limit => self.limit,
            seed => self.sweep.seed,
            sigmas => self.sweep.sigmas,
            trials => self.sweep.trials,
            methods => self.methods,
            horizon => self.horizon,
            step => self.step,
            max_terms => self.stopping.max_terms,
            prony_step => self.prony_step,
            rates => self.rates,
            q_size => self.q_size,
        );
        if f.order.is_some() {
            self.order = f.order;
        }
    }

    /// Checks ranges and paths before any work starts.
    pub fn validate(&self) -> Result<()> {
        self.tail.validate()?;
        self.stopping.validate()?;
        self.quadrature.validate()?;
        self.limit.validate()?;
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon {} must be positive and finite", self.horizon));
        }
        if !(self.step > 0.0 && self.step < self.horizon) {
            return bad(format!("step {} must lie in (0, horizon)", self.step));
        }
        if !(self.prony_step >= self.step) {
            return bad(format!(
                "prony_step {} must be at least step {}",
                self.prony_step, self.step
            ));
        }
        if let Some(s) = self.sweep.sigmas.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return bad(format!("sigma {s} must be finite and non-negative"));
        }
        if self.order == Some(0) {
            return bad("order must be positive".into());
        }
        if let Some(input) = &self.input {
            if !input.is_file() {
                return Err(Error::Io(format!("{}: no such input file", input.display())));
            }
        }
        if let Some(output) = &self.output {
            if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
                if !parent.is_dir() {
                    return Err(Error::Io(format!(
                        "{}: output directory does not exist",
                        parent.display()
                    )));
                }
            }
        }
        let needs_input = !matches!(self.command, Command::Functionals);
        if needs_input && self.input.is_none() {
            return bad(format!("{:?} needs --input", self.command).to_lowercase());
        }
        Ok(())
    }

    /// Uniform grid `0, step, …` covering the horizon.
    pub fn grid(&self) -> TimeGrid {
        let count = (self.horizon / self.step).round() as usize + 1;
        TimeGrid::Uniform {
            start: 0.0,
            step: self.step,
            count,
        }
    }
}

pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// Either a spec or a sample file, chosen by extension.
#[derive(Debug, Clone)]
pub enum Input {
    Spec(SymbolicTransient<f64>),
    Samples(SampledSignal<f64>),
}

pub fn read_input(path: &Path) -> Result<Input> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_signal_spec(path).map(Input::Spec),
        Some("csv") => {
            let file = std::fs::File::open(path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            read_sampled_csv(file)
                .map(Input::Samples)
                .map_err(|e| match e {
                    Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
                    other => other,
                })
        }
        _ => Err(Error::InvalidConfig(format!(
            "{}: input must be .json (spec) or .csv (samples)",
            path.display()
        ))),
    }
}

/// Output of a single-method run.
#[derive(Debug, Clone, PartialEq)]
pub enum RunOutput {
    Json(serde_json::Value),
    Csv(Vec<u8>),
}

impl RunOutput {
    pub fn write_to(&self, path: Option<&Path>) -> Result<()> {
        let bytes = match self {
            RunOutput::Json(v) => {
                let mut s = serde_json::to_string_pretty(v)
                    .map_err(|e| Error::Io(e.to_string()))?;
                s.push('\n');
                s.into_bytes()
            }
            RunOutput::Csv(b) => b.clone(),
        };
        match path {
            Some(p) => std::fs::write(p, bytes)
                .map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
            None => {
                std::io::stdout().write_all(&bytes)?;
                Ok(())
            }
        }
    }
}

fn input_of(cfg: &RunConfig) -> Result<Input> {
    let path = cfg
        .input
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("missing --input".into()))?;
    read_input(path)
}

fn first_sigma(cfg: &RunConfig) -> f64 {
    cfg.sweep.sigmas.first().copied().unwrap_or(0.0)
}

/// Dispatches a single-method command.
pub fn run_single(cfg: &RunConfig) -> Result<RunOutput> {
    match cfg.command {
        Command::Synth => run_synth(cfg),
        Command::Decompose => run_decompose(cfg),
        Command::Oet => run_oet(cfg),
        Command::Prony => run_prony(cfg),
        Command::Functionals => run_functionals(cfg),
        Command::Compare => {
            let table = run_compare(cfg)?;
            let mut buf = Vec::new();
            write_compare_csv(&mut buf, &table)?;
            Ok(RunOutput::Csv(buf))
        }
    }
}

fn run_synth(cfg: &RunConfig) -> Result<RunOutput> {
    let Input::Spec(spec) = input_of(cfg)? else {
        return Err(Error::InvalidConfig("synth needs a .json spec".into()));
    };
    let samples = synthesize_samples(&spec, &cfg.grid(), first_sigma(cfg), cfg.sweep.seed)?;
    let mut buf = Vec::new();
    write_sampled_csv(&mut buf, &samples)?;
    Ok(RunOutput::Csv(buf))
}

fn decomposition_json(r: &DecompositionResult<f64>) -> serde_json::Value {
    r.to_json()
}

fn run_decompose(cfg: &RunConfig) -> Result<RunOutput> {
    let result = match input_of(cfg)? {
        Input::Spec(spec) if cfg.exact => decompose_exact(&spec),
        Input::Spec(spec) => decompose_numeric(
            &spec.into(),
            (0.0, cfg.horizon),
            &cfg.tail,
            &cfg.stopping,
        )?,
        Input::Samples(s) => {
            let support = s.support();
            decompose_numeric(&s.into(), support, &cfg.tail, &cfg.stopping)?
        }
    };
    Ok(RunOutput::Json(decomposition_json(&result)))
}

fn run_oet(cfg: &RunConfig) -> Result<RunOutput> {
    let input = input_of(cfg)?;
    let max_index = match (&input, cfg.order) {
        (_, Some(m)) => m,
        (Input::Spec(s), None) => oet_size_for(s),
        (Input::Samples(_), None) => {
            return Err(Error::InvalidConfig("oet on samples needs --order".into()))
        }
    };
    let (source, out_of_model): (SignalSource<f64>, bool) = match input {
        Input::Spec(s) => {
            let flag = !in_span(&s, max_index);
            (s.into(), flag)
        }
        Input::Samples(s) => (s.into(), false),
    };
    let basis = build_exponential_basis::<f64>(max_index)?;
    let a = oet_analyze(&source, &basis, &cfg.quadrature)?;
    Ok(RunOutput::Json(serde_json::json!({
        "max_index": max_index,
        "out_of_model": out_of_model,
        "projections": a.projections,
        "coefficients": a.coefficients,
    })))
}

/// Smallest basis holding every integer rate up to the largest rate of `s`.
fn oet_size_for(s: &SymbolicTransient<f64>) -> usize {
    s.terms()
        .iter()
        .map(|t| t.rate.ceil() as usize)
        .max()
        .unwrap_or(1)
        .max(1)
}

fn run_prony(cfg: &RunConfig) -> Result<RunOutput> {
    let samples = match input_of(cfg)? {
        Input::Samples(s) => s,
        Input::Spec(spec) => {
            let grid = TimeGrid::Uniform {
                start: 0.0,
                step: cfg.step,
                count: (cfg.horizon / cfg.step).round() as usize + 1,
            };
            synthesize_samples(&spec, &grid, first_sigma(cfg), cfg.sweep.seed)?
        }
    };
    let order = cfg
        .order
        .ok_or_else(|| Error::InvalidConfig("prony needs --order".into()))?;
    let model = prony_fit(&samples, order)?;
    Ok(RunOutput::Json(
        serde_json::to_value(&model).map_err(|e| Error::Io(e.to_string()))?,
    ))
}

fn run_functionals(cfg: &RunConfig) -> Result<RunOutput> {
    let rates: Vec<f64> = match &cfg.input {
        Some(_) => match input_of(cfg)? {
            Input::Spec(s) => s.terms().iter().map(|t| t.rate).collect(),
            Input::Samples(_) => {
                return Err(Error::InvalidConfig(
                    "functionals reads rates from a .json spec or --rates".into(),
                ))
            }
        },
        None => cfg.rates.clone(),
    };
    let exact_rates = rates
        .iter()
        .map(|&r| {
            BigRational::from_float(r)
                .ok_or_else(|| Error::InvalidConfig(format!("rate {r} is not finite")))
        })
        .collect::<Result<Vec<_>>>()?;
    let r_exact = r_matrix_exact(&exact_rates)?;
    let limit = LimitConfig {
        horizon: cfg.horizon.max(cfg.limit.horizon),
        ..cfg.limit
    };
    let r_numeric = r_matrix_numeric(&rates, &limit)?;
    let q = q_matrix::<BigRational>(cfg.q_size, QNormalization::Taylor)?;

    let mut wtr = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    wtr.write_record(["matrix", "n", "k", "value"]).map_err(io)?;
    let mut emit = |name: &str, value: &dyn Fn(usize, usize) -> String, size: usize| {
        for n in 0..size {
            for k in 0..size {
                wtr.write_record([
                    name.to_string(),
                    (n + 1).to_string(),
                    (k + 1).to_string(),
                    value(n, k),
                ])
                .map_err(io)?;
            }
        }
        Ok::<(), Error>(())
    };
    emit("r_exact", &|n, k| r_exact[n][k].to_string(), rates.len())?;
    emit("r_numeric", &|n, k| format!("{:e}", r_numeric[n][k]), rates.len())?;
    emit("q", &|n, k| q[n][k].to_string(), cfg.q_size)?;
    let buf = wtr.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(RunOutput::Csv(buf))
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub method: Method,
    pub sigma: f64,
    pub trial: usize,
    pub term_index: usize,
    pub true_rate: f64,
    pub est_rate: f64,
    pub true_coeff: f64,
    pub est_coeff: f64,
    pub flag: String,
}

/// Noise seed of one `(sigma, trial)` cell; all methods see the same draw.
fn cell_seed(base: u64, sigma_index: usize, trial: usize) -> u64 {
    base.wrapping_add(1_000_003u64.wrapping_mul(sigma_index as u64))
        .wrapping_add(trial as u64)
}

/// Runs every `(method, sigma, trial)` cell and returns rows sorted by
/// method, sigma, trial and term.
pub fn run_compare(cfg: &RunConfig) -> Result<Vec<CompareRow>> {
    let spec = match input_of(cfg)? {
        Input::Spec(s) => s.canonicalize(),
        Input::Samples(_) => {
            return Err(Error::InvalidConfig("compare needs a .json spec".into()))
        }
    };
    compare_spec(&spec, cfg)
}

/// [`run_compare`] on an in-memory spec.
pub fn compare_spec(spec: &SymbolicTransient<f64>, cfg: &RunConfig) -> Result<Vec<CompareRow>> {
    if spec.is_empty() {
        return Err(Error::InvalidSignal("compare needs at least one term".into()));
    }
    let mut cells = Vec::new();
    for &method in &cfg.methods {
        for (si, &sigma) in cfg.sweep.sigmas.iter().enumerate() {
            for trial in 0..cfg.sweep.trials {
                cells.push((method, si, sigma, trial));
            }
        }
    }
    let grid = cfg.grid();
    let mut rows: Vec<(usize, CompareRow)> = cells
        .par_iter()
        .flat_map_iter(|&(method, si, sigma, trial)| {
            let seed = cell_seed(cfg.sweep.seed, si, trial);
            let (estimates, flag) =
                match synthesize_samples(spec, &grid, sigma, seed)
                    .and_then(|samples| fit_cell(method, spec, samples, cfg))
                {
                    Ok(v) => v,
                    Err(e) => (Vec::new(), format!("error:{}", e.to_string().replace(',', ";"))),
                };
            spec.terms()
                .iter()
                .enumerate()
                .map(|(i, truth)| {
                    let (est_rate, est_coeff) = nearest(&estimates, truth.rate)
                        .map_or((f64::NAN, f64::NAN), |t| (t.rate, t.coeff));
                    let row = CompareRow {
                        method,
                        sigma,
                        trial,
                        term_index: i + 1,
                        true_rate: truth.rate,
                        est_rate,
                        true_coeff: truth.coeff,
                        est_coeff,
                        flag: flag.clone(),
                    };
                    (si, row)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    rows.sort_by(|(sa, a), (sb, b)| {
        a.method
            .cmp(&b.method)
            .then(sa.cmp(sb))
            .then(a.trial.cmp(&b.trial))
            .then(a.term_index.cmp(&b.term_index))
    });
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

fn nearest(estimates: &[Term<f64>], rate: f64) -> Option<&Term<f64>> {
    estimates.iter().min_by(|a, b| {
        (a.rate - rate)
            .abs()
            .partial_cmp(&(b.rate - rate).abs())
            .unwrap_or(std::cmp::Ordering::Equal)
    })
}

/// Fits one cell; returns the estimated terms and the diagnostic flag.
fn fit_cell(
    method: Method,
    spec: &SymbolicTransient<f64>,
    samples: SampledSignal<f64>,
    cfg: &RunConfig,
) -> Result<(Vec<Term<f64>>, String)> {
    match method {
        Method::Decomposer => {
            let support = samples.support();
            let r = decompose_numeric(&samples.into(), support, &cfg.tail, &cfg.stopping)?;
            let mut flag = format!(
                "residual={:e};termination={}",
                r.terminal_residual_norm,
                serde_json::to_value(r.termination_reason)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default()
            );
            if r.diagnostics.iter().any(|d| d.low_confidence) {
                flag.push_str(";low_confidence");
            }
            Ok((r.terms, flag))
        }
        Method::Prony => {
            let stride = ((cfg.prony_step / cfg.step).round() as usize).max(1);
            let (times, values): (Vec<f64>, Vec<f64>) = samples
                .times()
                .iter()
                .zip(samples.values())
                .step_by(stride)
                .map(|(&t, &x)| (t, x))
                .unzip();
            let decimated = SampledSignal::new(times, values)?;
            let order = cfg.order.unwrap_or(spec.len());
            let m = prony_fit(&decimated, order)?;
            let mut flag = format!("cond={:e}", m.vandermonde_condition);
            for f in &m.flags {
                let v = serde_json::to_value(f).unwrap_or_default();
                if let Some(kind) = v.get("kind").and_then(|k| k.as_str()) {
                    flag.push(';');
                    flag.push_str(kind);
                }
            }
            let terms = m
                .rates
                .iter()
                .zip(&m.amplitudes)
                .map(|(&r, &a)| Term::new(r, a))
                .collect();
            Ok((terms, flag))
        }
        Method::Oet => {
            let max_index = cfg.order.unwrap_or_else(|| oet_size_for(spec));
            let basis = build_exponential_basis::<f64>(max_index)?;
            let a = oet_analyze(&samples.into(), &basis, &cfg.quadrature)?;
            let mut flag = format!("truncation={max_index}");
            if !in_span(spec, max_index) {
                flag.push_str(";out_of_model");
            }
            let terms = a
                .coefficients
                .iter()
                .enumerate()
                .map(|(k, &c)| Term::new((k + 1) as f64, c))
                .collect();
            Ok((terms, flag))
        }
    }
}

pub const COMPARE_HEADER: [&str; 9] = [
    "method",
    "sigma",
    "trial",
    "term_index",
    "true_rate",
    "est_rate",
    "true_coeff",
    "est_coeff",
    "flag",
];

pub fn write_compare_csv<W: Write>(w: W, rows: &[CompareRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.to_string());
    wtr.write_record(COMPARE_HEADER).map_err(io)?;
    for r in rows {
        wtr.write_record([
            r.method.name().to_string(),
            r.sigma.to_string(),
            r.trial.to_string(),
            r.term_index.to_string(),
            r.true_rate.to_string(),
            r.est_rate.to_string(),
            r.true_coeff.to_string(),
            r.est_coeff.to_string(),
            r.flag.clone(),
        ])
        .map_err(io)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> u8
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = RunConfig::from_cli(cli.command, &cli.args)
        .and_then(|cfg| run_single(&cfg).and_then(|out| out.write_to(cfg.output.as_deref())));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("transient-lab: {e}");
            exit_code(&e)
        }
    }
}
