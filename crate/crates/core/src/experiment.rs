//! Monte Carlo runners and their file output.
//!
//! `fig1` draws many POVM pairs and, for each, several states, recording
//! the uncertainty sum against the joint bound for every kernel. `fig2`
//! fixes a single pair and scatters `(P_A, P_B)` over many states against
//! the allowed domain.
//!
//! Pair `k` of a `fig1` run draws from stream `k`; in `fig2` the pair uses
//! stream 0 and state `l` stream `l + 1`. Work is split along those
//! indices and results are collected in index order, so the output does
//! not depend on the worker count.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{DensityOperator, MaxProb, PovmPair, TrialRecord, DOMAIN_TOL};
use crate::metrics::{BuiltinKernel, MetricKernel};
use crate::randgen::{
    random_mixed_state, random_povm, random_pure_state, random_pvm, MixedStateMethod, RngStream,
};

/// Slack below this counts as a violation.
pub const VIOLATION_TOL: f64 = 1e-9;

/// Points on the emitted boundary and h-curve polylines.
pub const BOUNDARY_POINTS: usize = 1000;

pub const DESK_PAIRS: usize = 1000;
pub const FULL_SCALE_PAIRS: usize = 10_000;
pub const FIG1_STATES: usize = 25;
pub const FIG2_STATES: usize = 10_000;

macro_rules! str_enum {
    ($name:ident { $($variant:ident => $s:literal),+ $(,)? }) => {
        impl $name {
            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $s),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok($name::$variant),)+
                    other => Err(Error::ConfigInvalid(format!(
                        concat!("unknown ", stringify!($name), " `{}`"),
                        other
                    ))),
                }
            }
        }
    };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservableMode {
    /// Rank-one PVMs from Haar unitaries; `n_a = n_b = dim`.
    Pvm,
    Povm,
}
str_enum!(ObservableMode { Pvm => "pvm", Povm => "povm" });

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateMode {
    Pure,
    Mixed,
    /// `n_states_per_pair` pure states followed by as many mixed ones.
    Both,
}
str_enum!(StateMode { Pure => "pure", Mixed => "mixed", Both => "both" });

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}
str_enum!(OutputFormat { Csv => "csv", Json => "json" });

/// Test hooks; all off by default except the witness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hooks {
    /// Use `B = A` for every pair.
    pub force_identical: bool,
    /// Append the maximally mixed state after the sampled states.
    pub inject_maximally_mixed: bool,
    /// Append the sharpness witness of each pair (fig1 only).
    pub append_witness: bool,
}

impl Default for Hooks {
    fn default() -> Self {
        Hooks {
            force_identical: false,
            inject_maximally_mixed: false,
            append_witness: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub n_a: usize,
    pub n_b: usize,
    pub n_povm_pairs: usize,
    pub n_states_per_pair: usize,
    pub kernels: Vec<BuiltinKernel>,
    pub observable_mode: ObservableMode,
    pub state_mode: StateMode,
    pub mixed_method: MixedStateMethod,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    /// Worker threads; `0` means one per available core.
    #[serde(skip)]
    pub workers: usize,
    pub hooks: Hooks,
}

impl ExperimentConfig {
    /// Desk-scale rank-one PVM run at `N = 3`.
    pub fn fig1_default() -> Self {
        ExperimentConfig {
            dim: 3,
            n_a: 3,
            n_b: 3,
            n_povm_pairs: DESK_PAIRS,
            n_states_per_pair: FIG1_STATES,
            kernels: BuiltinKernel::ALL.to_vec(),
            observable_mode: ObservableMode::Pvm,
            state_mode: StateMode::Pure,
            mixed_method: MixedStateMethod::Spectral,
            seed: 42,
            output_path: None,
            output_format: OutputFormat::Csv,
            workers: 0,
            hooks: Hooks::default(),
        }
    }

    /// One POVM pair at `N = 3`, `N_A = 4`, `N_B = 5` against 10⁴ states.
    pub fn fig2_default() -> Self {
        ExperimentConfig {
            n_a: 4,
            n_b: 5,
            n_povm_pairs: 1,
            n_states_per_pair: FIG2_STATES,
            observable_mode: ObservableMode::Povm,
            ..Self::fig1_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        if self.dim < 2 {
            return bad(format!("dim must be at least 2, got {}", self.dim));
        }
        for (name, v) in [
            ("n_a", self.n_a),
            ("n_b", self.n_b),
            ("pairs", self.n_povm_pairs),
            ("states", self.n_states_per_pair),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.kernels.is_empty() {
            return bad("at least one kernel is required".into());
        }
        if self.observable_mode == ObservableMode::Pvm
            && (self.n_a != self.dim || self.n_b != self.dim)
        {
            return bad(format!(
                "pvm mode needs n_a = n_b = dim = {}, got n_a = {}, n_b = {}",
                self.dim, self.n_a, self.n_b
            ));
        }
        if self.hooks.force_identical && self.n_a != self.n_b {
            return bad("force_identical needs n_a = n_b".into());
        }
        Ok(())
    }

    fn metric_kernels(&self) -> Vec<MetricKernel> {
        self.kernels
            .iter()
            .map(|&k| MetricKernel::builtin(k))
            .collect()
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::ConfigInvalid(format!("thread pool: {e}")))
    }

    fn draw_pair(&self, rng: &mut RngStream) -> Result<PovmPair> {
        let draw = |n: usize, rng: &mut RngStream| match self.observable_mode {
            ObservableMode::Pvm => random_pvm(self.dim, rng),
            ObservableMode::Povm => random_povm(self.dim, n, rng),
        };
        let a = draw(self.n_a, rng);
        let b = if self.hooks.force_identical {
            a.clone()
        } else {
            draw(self.n_b, rng)
        };
        PovmPair::new(a, b)
    }

    /// Sampled states in emission order: pure, then mixed.
    fn draw_states(&self, count: usize, rng: &mut RngStream) -> Vec<DensityOperator> {
        let pure = matches!(self.state_mode, StateMode::Pure | StateMode::Both);
        let mixed = matches!(self.state_mode, StateMode::Mixed | StateMode::Both);
        let mut out = Vec::new();
        if pure {
            out.extend((0..count).map(|_| random_pure_state(self.dim, rng).density()));
        }
        if mixed {
            out.extend((0..count).map(|_| random_mixed_state(self.dim, self.mixed_method, rng)));
        }
        out
    }
}

/// One row of fig1 output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig1Row {
    pub pair_id: usize,
    pub state_id: usize,
    pub kernel: String,
    pub c_ab: f64,
    pub u_a: f64,
    pub u_b: f64,
    pub u_sum: f64,
    pub bound_joint: f64,
    pub bound_improved: f64,
    pub slack: f64,
}

impl Fig1Row {
    fn new(pair_id: usize, state_id: usize, r: TrialRecord) -> Self {
        Fig1Row {
            pair_id,
            state_id,
            kernel: r.kernel,
            c_ab: r.c_ab,
            u_a: r.u_a,
            u_b: r.u_b,
            u_sum: r.u_sum,
            bound_joint: r.bound,
            bound_improved: r.bound_improved,
            slack: r.slack,
        }
    }

    pub fn improved_slack(&self) -> f64 {
        self.u_sum - self.bound_improved
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelSummary {
    pub kernel: String,
    pub records: usize,
    pub min_slack: f64,
    pub min_improved_slack: f64,
    /// Records with slack below `-VIOLATION_TOL`.
    pub violations: usize,
}

fn summarize(kernels: &[BuiltinKernel], rows: &[Fig1Row]) -> Vec<KernelSummary> {
    kernels
        .iter()
        .map(|k| {
            let mut s = KernelSummary {
                kernel: k.name().to_string(),
                records: 0,
                min_slack: f64::INFINITY,
                min_improved_slack: f64::INFINITY,
                violations: 0,
            };
            for r in rows.iter().filter(|r| r.kernel == k.name()) {
                s.records += 1;
                s.min_slack = s.min_slack.min(r.slack);
                s.min_improved_slack = s.min_improved_slack.min(r.improved_slack());
                if r.slack < -VIOLATION_TOL || r.improved_slack() < -VIOLATION_TOL {
                    s.violations += 1;
                }
            }
            s
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub artifact_version: String,
    pub config: ExperimentConfig,
    pub kernels: Vec<KernelSummary>,
    /// fig2 only: scatter points outside the allowed domain.
    pub domain_violations: usize,
    pub wall_time_secs: f64,
}

impl RunManifest {
    fn new(experiment: &str, cfg: &ExperimentConfig, kernels: Vec<KernelSummary>) -> Self {
        RunManifest {
            experiment: experiment.into(),
            artifact_version: env!("CARGO_PKG_VERSION").into(),
            config: cfg.clone(),
            kernels,
            domain_violations: 0,
            wall_time_secs: 0.0,
        }
    }

    pub fn total_violations(&self) -> usize {
        self.kernels.iter().map(|k| k.violations).sum::<usize>() + self.domain_violations
    }
}

#[derive(Clone, Debug)]
pub struct Fig1Run {
    pub rows: Vec<Fig1Row>,
    pub manifest: RunManifest,
}

fn fig1_pair(
    cfg: &ExperimentConfig,
    kernels: &[MetricKernel],
    pair_id: usize,
) -> Result<Vec<Fig1Row>> {
    let mut rng = RngStream::new(cfg.seed, pair_id as u64);
    let pair = cfg.draw_pair(&mut rng)?;
    let mut states = cfg.draw_states(cfg.n_states_per_pair, &mut rng);
    if cfg.hooks.inject_maximally_mixed {
        states.push(DensityOperator::maximally_mixed(cfg.dim));
    }
    if cfg.hooks.append_witness {
        states.push(pair.sharpness_witness()?.density());
    }
    let mut rows = Vec::with_capacity(states.len() * kernels.len());
    for (state_id, rho) in states.iter().enumerate() {
        for r in pair.check_state(kernels, rho)? {
            rows.push(Fig1Row::new(pair_id, state_id, r));
        }
    }
    Ok(rows)
}

pub fn run_fig1(cfg: &ExperimentConfig) -> Result<Fig1Run> {
    cfg.validate()?;
    let start = Instant::now();
    let kernels = cfg.metric_kernels();
    let per_pair = cfg.pool()?.install(|| {
        (0..cfg.n_povm_pairs)
            .into_par_iter()
            .map(|k| fig1_pair(cfg, &kernels, k))
            .collect::<Result<Vec<_>>>()
    })?;
    let rows: Vec<Fig1Row> = per_pair.into_iter().flatten().collect();
    let mut manifest = RunManifest::new("fig1", cfg, summarize(&cfg.kernels, &rows));
    manifest.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(Fig1Run { rows, manifest })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fig2Point {
    pub state_id: usize,
    pub p_a: f64,
    pub p_b: f64,
    pub in_domain: bool,
}

/// Rectangle `[x_min, x_max] × [y_min, y_max]` bounding the domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rectangle {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

/// `h_c(x)` for each built-in kernel at one `x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HCurveRow {
    pub x: f64,
    pub wootters: f64,
    pub bures: f64,
    pub root_infidelity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub x: f64,
    pub h_of_x: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Fig2Run {
    pub spec: crate::measure::DomainSpec,
    pub rectangle: Rectangle,
    pub points: Vec<Fig2Point>,
    pub boundary: Vec<BoundaryPoint>,
    pub h_curves: Vec<HCurveRow>,
    #[serde(skip)]
    pub manifest: RunManifest,
}

/// The three built-in h-curves at overlap `c` on `points` equally spaced
/// `x ∈ [c², 1]`.
pub fn h_curves(c: f64, points: usize) -> Result<Vec<HCurveRow>> {
    let [w, b, r] = BuiltinKernel::ALL.map(MetricKernel::builtin);
    let lo = c * c;
    (0..points)
        .map(|k| {
            let x = (lo + (1.0 - lo) * k as f64 / (points - 1) as f64).min(1.0);
            Ok(HCurveRow {
                x,
                wootters: w.h(c, x)?,
                bures: b.h(c, x)?,
                root_infidelity: r.h(c, x)?,
            })
        })
        .collect()
}

pub fn run_fig2(cfg: &ExperimentConfig) -> Result<Fig2Run> {
    cfg.validate()?;
    let start = Instant::now();
    let kernels = cfg.metric_kernels();
    let pair = cfg.draw_pair(&mut RngStream::new(cfg.seed, 0))?;
    let spec = pair.domain_spec();

    // state l draws from stream l + 1; with `both`, the mixed states follow
    // the pure ones with ids continuing from n_states
    let n = cfg.n_states_per_pair;
    let modes: Vec<StateMode> = match cfg.state_mode {
        StateMode::Both => vec![StateMode::Pure, StateMode::Mixed],
        m => vec![m],
    };
    let total = n * modes.len();
    let one_state = |id: usize| {
        let single = ExperimentConfig {
            state_mode: modes[id / n],
            ..cfg.clone()
        };
        let mut rng = RngStream::new(cfg.seed, id as u64 + 1);
        single.draw_states(1, &mut rng).pop().expect("one state")
    };
    let evaluate = |id: usize, rho: &DensityOperator| -> Result<(Fig2Point, Vec<Fig1Row>)> {
        let (p_a, p_b): (MaxProb, MaxProb) = pair.max_probs(rho)?;
        let rows = kernels
            .iter()
            .map(|k| Fig1Row::new(0, id, pair.record(k, &p_a, &p_b)))
            .collect();
        let point = Fig2Point {
            state_id: id,
            p_a: p_a.value,
            p_b: p_b.value,
            in_domain: spec.contains(p_a.value, p_b.value, DOMAIN_TOL),
        };
        Ok((point, rows))
    };
    let mut evaluated = cfg.pool()?.install(|| {
        (0..total)
            .into_par_iter()
            .map(|id| evaluate(id, &one_state(id)))
            .collect::<Result<Vec<_>>>()
    })?;
    if cfg.hooks.inject_maximally_mixed {
        evaluated.push(evaluate(total, &DensityOperator::maximally_mixed(cfg.dim))?);
    }

    let mut points = Vec::with_capacity(evaluated.len());
    let mut rows = Vec::with_capacity(evaluated.len() * kernels.len());
    for (p, r) in evaluated {
        points.push(p);
        rows.extend(r);
    }
    let mut manifest = RunManifest::new("fig2", cfg, summarize(&cfg.kernels, &rows));
    manifest.domain_violations = points.iter().filter(|p| !p.in_domain).count();

    let boundary = spec
        .boundary(BOUNDARY_POINTS)
        .into_iter()
        .map(|(x, h_of_x)| BoundaryPoint { x, h_of_x })
        .collect();
    let h_curves = if spec.c_ab > 0.0 && spec.c_ab < 1.0 {
        h_curves(spec.c_ab, BOUNDARY_POINTS)?
    } else {
        Vec::new()
    };
    manifest.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(Fig2Run {
        rectangle: Rectangle {
            x_min: 1.0 / spec.n_a as f64,
            x_max: spec.c_a * spec.c_a,
            y_min: 1.0 / spec.n_b as f64,
            y_max: spec.c_b * spec.c_b,
        },
        spec,
        points,
        boundary,
        h_curves,
        manifest,
    })
}

/// `out.csv` → `out.<suffix>.csv`.
pub fn sidecar_path(out: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}.{suffix}.{ext}"))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

/// Writes the run manifest next to `out` as `<stem>.manifest.json`. Kept
/// apart from the data so the data files are reproducible byte for byte.
pub fn write_manifest(out: &Path, manifest: &RunManifest) -> Result<PathBuf> {
    let path = sidecar_path(out, "manifest", "json");
    write_json(&path, manifest)?;
    Ok(path)
}

impl Fig1Run {
    /// Writes the rows to `out` and the manifest beside it.
    pub fn write(&self, out: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        match format {
            OutputFormat::Csv => write_csv(out, &self.rows)?,
            OutputFormat::Json => write_json(out, &self.rows)?,
        }
        Ok(vec![
            out.to_path_buf(),
            write_manifest(out, &self.manifest)?,
        ])
    }
}

#[derive(Serialize)]
struct SpecLine {
    c_a: f64,
    c_b: f64,
    c_ab: f64,
    full_rectangle: bool,
}

impl Fig2Run {
    /// CSV: scatter at `out` with `.boundary`, `.domain` and `.hcurves`
    /// sidecars. JSON: everything in `out`. The manifest goes beside `out`
    /// in both cases.
    pub fn write(&self, out: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        let mut written = vec![out.to_path_buf()];
        match format {
            OutputFormat::Csv => {
                write_csv(out, &self.points)?;
                let boundary = sidecar_path(out, "boundary", "csv");
                write_csv(&boundary, &self.boundary)?;
                let spec = sidecar_path(out, "domain", "csv");
                write_csv(
                    &spec,
                    &[SpecLine {
                        c_a: self.spec.c_a,
                        c_b: self.spec.c_b,
                        c_ab: self.spec.c_ab,
                        full_rectangle: self.spec.full_rectangle,
                    }],
                )?;
                let curves = sidecar_path(out, "hcurves", "csv");
                write_csv(&curves, &self.h_curves)?;
                written.extend([boundary, spec, curves]);
            }
            OutputFormat::Json => write_json(out, self)?,
        }
        written.push(write_manifest(out, &self.manifest)?);
        Ok(written)
    }
}
