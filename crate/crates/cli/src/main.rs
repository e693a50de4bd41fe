//! `lpi`: Landau–Pollak bounds for POVMs from the command line.
//!
//! Exit codes: 0 success, 1 configuration or parse error, 2 validation
//! failure, 3 a bound was violated.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use lpi_core::experiment::{
    run_fig1, run_fig2, ExperimentConfig, Hooks, ObservableMode, OutputFormat, RunManifest,
    StateMode, FULL_SCALE_PAIRS,
};
use lpi_core::measure::overlap_sandwich;
use lpi_core::opfile::{OperatorFile, OperatorKind};
use lpi_core::randgen::{
    random_mixed_state, random_povm, random_pure_state, random_pvm, MixedStateMethod,
};
use lpi_core::{BuiltinKernel, Error, MetricKernel, PovmPair, RngStream};

const EXIT_CONFIG: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "lpi",
    version,
    about = "Generalized Landau–Pollak uncertainty bounds for POVMs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Uncertainty sums against the joint bound over many POVM pairs and states
    Fig1(RunArgs),
    /// (P_A, P_B) scatter of one POVM pair against its allowed domain
    Fig2(RunArgs),
    /// Overlaps, bounds and domain class of two POVM files
    Overlap {
        file_a: PathBuf,
        file_b: PathBuf,
        #[arg(long = "kernel", value_enum)]
        kernels: Vec<KernelArg>,
    },
    /// Write a random POVM, PVM or state as an operator file
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        /// Outcome count for `povm`
        #[arg(long, default_value_t = 3)]
        outcomes: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = MixedArg::Spectral)]
        mixed: MixedArg,
        /// Destination; standard output if omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate an operator file
    Check { file: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    na: Option<usize>,
    #[arg(long)]
    nb: Option<usize>,
    #[arg(long)]
    pairs: Option<usize>,
    #[arg(long)]
    states: Option<usize>,
    #[arg(long = "kernel", value_enum)]
    kernels: Vec<KernelArg>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long = "states-kind", value_enum)]
    states_kind: Option<StatesArg>,
    #[arg(long, value_enum)]
    mixed: Option<MixedArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Paper-scale pair count
    #[arg(long)]
    full_scale: bool,
    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Use B = A for every pair
    #[arg(long, hide = true)]
    force_identical: bool,
    /// Append the maximally mixed state
    #[arg(long, hide = true)]
    inject_maximally_mixed: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Wootters,
    Bures,
    RootInfidelity,
}

impl From<KernelArg> for BuiltinKernel {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Wootters => BuiltinKernel::Wootters,
            KernelArg::Bures => BuiltinKernel::Bures,
            KernelArg::RootInfidelity => BuiltinKernel::RootInfidelity,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Pvm,
    Povm,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatesArg {
    Pure,
    Mixed,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum MixedArg {
    Spectral,
    Wishart,
}

impl From<MixedArg> for MixedStateMethod {
    fn from(m: MixedArg) -> Self {
        match m {
            MixedArg::Spectral => MixedStateMethod::Spectral,
            MixedArg::Wishart => MixedStateMethod::Wishart,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Povm,
    Pvm,
    StatePure,
    StateMixed,
}

fn kernel_list(args: &[KernelArg]) -> Vec<BuiltinKernel> {
    if args.is_empty() {
        BuiltinKernel::ALL.to_vec()
    } else {
        args.iter().map(|&k| k.into()).collect()
    }
}

impl RunArgs {
    fn config(&self, mut cfg: ExperimentConfig, fig1: bool) -> ExperimentConfig {
        if let Some(m) = self.mode {
            cfg.observable_mode = match m {
                ModeArg::Pvm => ObservableMode::Pvm,
                ModeArg::Povm => ObservableMode::Povm,
            };
        }
        if let Some(d) = self.dim {
            cfg.dim = d;
        }
        // rank-one PVMs have exactly dim outcomes
        if cfg.observable_mode == ObservableMode::Pvm {
            cfg.n_a = cfg.dim;
            cfg.n_b = cfg.dim;
        }
        cfg.n_a = self.na.unwrap_or(cfg.n_a);
        cfg.n_b = self.nb.unwrap_or(cfg.n_b);
        if self.full_scale && fig1 {
            cfg.n_povm_pairs = FULL_SCALE_PAIRS;
        }
        cfg.n_povm_pairs = self.pairs.unwrap_or(cfg.n_povm_pairs);
        cfg.n_states_per_pair = self.states.unwrap_or(cfg.n_states_per_pair);
        cfg.kernels = kernel_list(&self.kernels);
        if let Some(s) = self.states_kind {
            cfg.state_mode = match s {
                StatesArg::Pure => StateMode::Pure,
                StatesArg::Mixed => StateMode::Mixed,
                StatesArg::Both => StateMode::Both,
            };
        }
        if let Some(m) = self.mixed {
            cfg.mixed_method = m.into();
        }
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.output_format = match self.format {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        };
        let name = if fig1 { "fig1" } else { "fig2" };
        cfg.output_path = Some(
            self.out
                .clone()
                .unwrap_or_else(|| PathBuf::from(format!("{name}.{}", cfg.output_format))),
        );
        cfg.workers = self.workers;
        cfg.hooks = Hooks {
            force_identical: self.force_identical,
            inject_maximally_mixed: self.inject_maximally_mixed,
            ..Hooks::default()
        };
        cfg
    }
}

/// Writes to standard output; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn report_run(manifest: &RunManifest, written: &[PathBuf]) -> Result<u8> {
    let mut err = std::io::stderr().lock();
    for s in &manifest.kernels {
        writeln!(
            err,
            "{:<16} records {:>8}  min slack {:+.3e}  violations {}",
            s.kernel, s.records, s.min_slack, s.violations
        )?;
    }
    if manifest.experiment == "fig2" {
        writeln!(err, "domain violations {}", manifest.domain_violations)?;
    }
    for p in written {
        writeln!(err, "wrote {}", p.display())?;
    }
    Ok(if manifest.total_violations() > 0 {
        EXIT_VIOLATION
    } else {
        0
    })
}

fn read_povm(path: &Path) -> Result<lpi_core::Povm> {
    let file = OperatorFile::read(path).with_context(|| format!("reading {}", path.display()))?;
    file.to_povm()
        .with_context(|| format!("validating {}", path.display()))
}

fn cmd_overlap(file_a: &Path, file_b: &Path, kernels: &[KernelArg]) -> Result<u8> {
    let pair = PovmPair::new(read_povm(file_a)?, read_povm(file_b)?)?;
    let (lo, hi) = overlap_sandwich(pair.a().len(), pair.b().len(), pair.c_a(), pair.c_b());
    let tol = lpi_core::experiment::VIOLATION_TOL;
    let sandwich_holds = pair.c_ab() >= lo - tol && pair.c_ab() <= hi + tol;
    let bounds: Vec<_> = kernel_list(kernels)
        .into_iter()
        .map(|k| pair.report(&MetricKernel::builtin(k)))
        .collect();
    let out = json!({
        "c_a": pair.c_a(),
        "c_b": pair.c_b(),
        "c_ab": pair.c_ab(),
        "argmax_pair": pair.argmax_pair(),
        "bounds": bounds,
        "overlap_bounds": { "lower": lo, "upper": hi, "holds": sandwich_holds },
        "domain": pair.domain_spec(),
    });
    emit(&(serde_json::to_string_pretty(&out)? + "\n"))?;
    Ok(if sandwich_holds { 0 } else { EXIT_VIOLATION })
}

fn cmd_gen(
    kind: GenKind,
    dim: usize,
    outcomes: usize,
    seed: u64,
    mixed: MixedArg,
    out: Option<&Path>,
) -> Result<u8> {
    if dim == 0 || outcomes == 0 {
        return Err(Error::ConfigInvalid("dim and outcomes must be positive".into()).into());
    }
    let mut rng = RngStream::new(seed, 0);
    let file = match kind {
        GenKind::Povm => {
            OperatorFile::from_povm(&random_povm(dim, outcomes, &mut rng), OperatorKind::Povm)
        }
        GenKind::Pvm => OperatorFile::from_povm(&random_pvm(dim, &mut rng), OperatorKind::Pvm),
        GenKind::StatePure => OperatorFile::from_state(&random_pure_state(dim, &mut rng).density()),
        GenKind::StateMixed => {
            OperatorFile::from_state(&random_mixed_state(dim, mixed.into(), &mut rng))
        }
    };
    match out {
        Some(p) => file.write(p)?,
        None => emit(&file.to_string())?,
    }
    Ok(0)
}

fn cmd_check(path: &Path) -> Result<u8> {
    let file = OperatorFile::read(path)?;
    let summary = match file.kind {
        OperatorKind::State => {
            let rho = file.to_state()?;
            json!({ "kind": "state", "dim": rho.dim(), "valid": true })
        }
        kind => match file.to_povm() {
            Ok(p) => json!({
                "kind": kind.as_str(),
                "dim": p.dim(),
                "outcomes": p.len(),
                "valid": true,
                "min_eigenvalues": p.validation().min_eigenvalues,
                "completeness_deviation": p.validation().completeness_deviation,
            }),
            Err(Error::InvalidPovm(v)) => {
                let report = json!({
                    "kind": kind.as_str(),
                    "valid": false,
                    "min_eigenvalues": v.min_eigenvalues,
                    "completeness_deviation": v.completeness_deviation,
                });
                emit(&(serde_json::to_string_pretty(&report)? + "\n"))?;
                eprintln!("error: invalid POVM: {v}");
                return Ok(EXIT_VALIDATION);
            }
            Err(e) => return Err(e.into()),
        },
    };
    emit(&(serde_json::to_string_pretty(&summary)? + "\n"))?;
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Fig1(args) => {
            let cfg = args.config(ExperimentConfig::fig1_default(), true);
            let run = run_fig1(&cfg)?;
            let out = cfg.output_path.as_deref().expect("set by config");
            let written = run.write(out, cfg.output_format)?;
            report_run(&run.manifest, &written)
        }
        Command::Fig2(args) => {
            let cfg = args.config(ExperimentConfig::fig2_default(), false);
            let run = run_fig2(&cfg)?;
            let out = cfg.output_path.as_deref().expect("set by config");
            let written = run.write(out, cfg.output_format)?;
            eprintln!(
                "c_a {:.6}  c_b {:.6}  c_ab {:.6}  full_rectangle {}",
                run.spec.c_a, run.spec.c_b, run.spec.c_ab, run.spec.full_rectangle
            );
            report_run(&run.manifest, &written)
        }
        Command::Overlap {
            file_a,
            file_b,
            kernels,
        } => cmd_overlap(&file_a, &file_b, &kernels),
        Command::Gen {
            kind,
            dim,
            outcomes,
            seed,
            mixed,
            out,
        } => cmd_gen(kind, dim, outcomes, seed, mixed, out.as_deref()),
        Command::Check { file } => cmd_check(&file),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::InvalidPovm(_)
            | Error::NotProjective { .. }
            | Error::NotHermitian { .. }
            | Error::NotPositiveSemidefinite { .. }
            | Error::EigenvalueOutOfUnitInterval { .. }
            | Error::InvalidState(_)
            | Error::NonFinite
            | Error::DimensionMismatch(_),
        ) => EXIT_VALIDATION,
        _ => EXIT_CONFIG,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
