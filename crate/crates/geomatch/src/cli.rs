//! `geomatch` command line.
//!
//! Exit status: 0 success, 1 usage or parameter error, 2 IO or format
//! error, 3 a verification check ran but did not pass.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use geomatch_core::diagnostics::{
    best_sign_alignment, default_bound_scale, goe_min_gap_sample_scaled, singular_envelope,
    AlignmentReport, EnvelopeReport, ResidualRow,
};
use geomatch_core::{
    observe, sample_instance, MatchOptions, MatchResult, ModelKind, SignMatrix, ThresholdMode,
    TruthMode,
};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::{
    run_sweep_with, CsvSink, Execution, SweepConfig, AGGREGATES_FILE, TRIALS_FILE,
};
use crate::io::{load_matrix, save_instance};
use crate::parallel::{par_basis_residual_sweep, par_match_distance, par_umeyama_match};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_VERIFY_FAILED: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "geomatch",
    version,
    about = "Spectral matching of correlated Gaussian geometric models"
)]
pub struct Cli {
    /// Worker threads for parallel sections (0 = one per core).
    #[arg(long, global = true, env = "GEOMATCH_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample an instance and write its matrices and manifest.
    Generate(GenerateArgs),
    /// Match two observed matrices.
    Match(MatchArgs),
    /// Run a Monte Carlo sweep.
    Sweep(SweepArgs),
    /// Run a diagnostic check.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Dot,
    Dist,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Dot => ModelKind::DotProduct,
            ModelArg::Dist => ModelKind::Distance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TruthArg {
    Random,
    Identity,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "dot")]
    pub model: ModelArg,
    #[arg(long, value_enum, default_value = "random")]
    pub truth: TruthArg,
    /// Also write CSV copies of every matrix.
    #[arg(long)]
    pub csv: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub d: usize,
    #[arg(long, value_enum, default_value = "dot")]
    pub model: ModelArg,
    #[arg(long)]
    pub out: PathBuf,
    /// Include MAX(Ψ) for every sign matrix in the output.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    AlmostExact,
}

impl From<ModeArg> for ThresholdMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => ThresholdMode::Exact,
            ModeArg::AlmostExact => ThresholdMode::AlmostExact,
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// JSON sweep configuration; inline flags are ignored when given.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub d: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub multipliers: Vec<f64>,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "dot")]
    pub model: ModelArg,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub trace: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckArg {
    Alignment,
    Envelope,
    Goegap,
    ResidualSweep,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub check: CheckArg,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Defaults to 40 for `goegap` and 5 otherwise.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, default_value_t = 1e-5)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Multiplier `c` in the `c·d³σ` alignment budget (default √ln n).
    #[arg(long)]
    pub bound_scale: Option<f64>,
    /// Allowed singular-value deviation (default d·√ln n).
    #[arg(long)]
    pub slack: Option<f64>,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.08)]
    pub ks_threshold: f64,
    /// Factor applied to the minimal GOE gap (default d).
    #[arg(long)]
    pub gap_scale: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,1e-5,2e-5,4e-5")]
    pub sigmas: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub seeds: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Generate(args) => cmd_generate(&args).map(|()| EXIT_OK),
        Command::Match(args) => cmd_match(&args).map(|()| EXIT_OK),
        Command::Sweep(args) => cmd_sweep(&args).map(|()| EXIT_OK),
        Command::Verify(args) => {
            cmd_verify(&args).map(|passed| if passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let truth = match args.truth {
        TruthArg::Random => TruthMode::UniformRandom,
        TruthArg::Identity => TruthMode::Identity,
    };
    let inst = sample_instance(args.n, args.d, args.sigma, args.seed, truth)?;
    let obs = observe(&inst, args.model.into());
    save_instance(&args.out, &inst, &obs, args.csv)
}

#[derive(Debug, Serialize)]
struct TraceRow<'a> {
    psi: &'a SignMatrix,
    objective: f64,
}

#[derive(Debug, Serialize)]
struct MatchOutput<'a> {
    pi_hat: &'a [usize],
    psi_star: &'a SignMatrix,
    objective: f64,
    spectrum_degenerate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<Vec<TraceRow<'a>>>,
}

impl<'a> From<&'a MatchResult> for MatchOutput<'a> {
    fn from(r: &'a MatchResult) -> Self {
        MatchOutput {
            pi_hat: r.pi_hat.as_slice(),
            psi_star: &r.psi_star,
            objective: r.objective,
            spectrum_degenerate: r.u.degenerate || r.v.degenerate,
            trace: r.trace.as_ref().map(|t| {
                t.iter()
                    .map(|(psi, objective)| TraceRow {
                        psi,
                        objective: *objective,
                    })
                    .collect()
            }),
        }
    }
}

pub fn cmd_match(args: &MatchArgs) -> Result<()> {
    let a = load_matrix(&args.a)?;
    let b = load_matrix(&args.b)?;
    let options = MatchOptions {
        keep_trace: args.trace,
    };
    let result = match ModelKind::from(args.model) {
        ModelKind::DotProduct => par_umeyama_match(&a, &b, args.d, options)?,
        ModelKind::Distance => par_match_distance(&a, &b, args.d, options)?,
    };
    write_json(&args.out, &MatchOutput::from(&result))
}

fn sweep_config(args: &SweepArgs) -> Result<SweepConfig> {
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        return serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())));
    }
    Ok(SweepConfig {
        n_values: args.n.clone(),
        d_values: args.d.clone(),
        sigma_multipliers: args.multipliers.clone(),
        threshold_mode: args.mode.into(),
        model_kind: args.model.into(),
        trials: args.trials,
        master_seed: args.seed,
        keep_trace: args.trace,
    })
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let config = sweep_config(args)?;
    config.validate()?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let create = |name: &str| {
        let path = args.out.join(name);
        fs::File::create(&path).map_err(|e| Error::io(path, e))
    };
    let mut sink = CsvSink::new(create(TRIALS_FILE)?, create(AGGREGATES_FILE)?);
    let result = run_sweep_with(&config, Execution::Parallel, |cell, records| {
        sink.write_cell(cell, records)
    })?;
    if config.keep_trace {
        write_json(&args.out.join("traces.json"), &result.traces)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct EnvelopeOutput {
    x: EnvelopeReport,
    y: EnvelopeReport,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct AlignmentOutput {
    #[serde(flatten)]
    report: AlignmentReport,
    n: usize,
    d: usize,
    sigma: f64,
    seed: u64,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct ResidualSweepOutput {
    n: usize,
    d: usize,
    seeds: usize,
    rows: Vec<ResidualRow>,
    /// Mean residuals are non-decreasing in σ.
    passed: bool,
}

/// Runs one diagnostic, writes its JSON report and returns whether it passed.
pub fn cmd_verify(args: &VerifyArgs) -> Result<bool> {
    let n = args.n;
    match args.check {
        CheckArg::Alignment => {
            let d = args.d.unwrap_or(5);
            let inst = sample_instance(n, d, args.sigma, args.seed, TruthMode::UniformRandom)?;
            let report = best_sign_alignment(
                &inst,
                args.bound_scale.unwrap_or_else(|| default_bound_scale(n)),
            )?;
            let passed = report.passed_qr && report.passed_uv;
            write_json(
                &args.out,
                &AlignmentOutput {
                    report,
                    n,
                    d,
                    sigma: args.sigma,
                    seed: args.seed,
                    passed,
                },
            )?;
            Ok(passed)
        }
        CheckArg::Envelope => {
            let d = args.d.unwrap_or(5);
            let inst = sample_instance(n, d, args.sigma, args.seed, TruthMode::UniformRandom)?;
            let slack = args
                .slack
                .unwrap_or_else(|| d as f64 * default_bound_scale(n));
            let (x, y) = singular_envelope(&inst, slack)?;
            let passed = x.passed && y.passed;
            write_json(&args.out, &EnvelopeOutput { x, y, passed })?;
            Ok(passed)
        }
        CheckArg::Goegap => {
            let d = args.d.unwrap_or(40);
            let scale = args.gap_scale.unwrap_or(d as f64);
            let report =
                goe_min_gap_sample_scaled(d, args.reps, args.seed, args.ks_threshold, scale)?;
            write_json(&args.out, &report)?;
            Ok(report.passed)
        }
        CheckArg::ResidualSweep => {
            let d = args.d.unwrap_or(5);
            let rows = par_basis_residual_sweep(n, d, &args.sigmas, args.seeds, args.seed)?;
            let mut sorted = rows.clone();
            sorted.sort_by(|a, b| a.sigma.total_cmp(&b.sigma));
            let passed = sorted.windows(2).all(|w| {
                w[0].mean_q_r_residual <= w[1].mean_q_r_residual
                    && w[0].mean_u_v_residual <= w[1].mean_u_v_residual
            });
            write_json(
                &args.out,
                &ResidualSweepOutput {
                    n,
                    d,
                    seeds: args.seeds,
                    rows,
                    passed,
                },
            )?;
            Ok(passed)
        }
    }
}
