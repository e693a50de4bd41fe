//! Metric-inducing kernels `f` and the bound-transfer function
//! `h_c^f(x) = f⁻¹(f(c²) − f(x))`.
//!
//! A kernel is a continuous, strictly decreasing `f: [0, 1] → ℝ₊` with
//! `f(1) = 0` such that `d_f(ψ, φ) = f(|⟨ψ|φ⟩|²)` is a metric on pure
//! states. The built-ins are Wootters (`arccos √x`), Bures
//! (`√(2(1 − √x))`) and root infidelity (`√(1 − x)`).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::inner;
use crate::randgen::{random_pure_state, RngStream};

/// Arguments this close outside `[0, 1]` are clamped instead of rejected.
const ENDPOINT_GUARD: f64 = 1e-12;
const BISECTION_WIDTH: f64 = 1e-12;
const GRID_POINTS: usize = 10_000;
const TRIANGLE_TOL: f64 = 1e-10;

/// Triangle checks run on user kernels before they are accepted.
pub const DEFAULT_TRIANGLE_TRIPLES: usize = 10_000;
pub const DEFAULT_TRIANGLE_DIM: usize = 3;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The three built-in kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinKernel {
    Wootters,
    Bures,
    RootInfidelity,
}

impl BuiltinKernel {
    pub const ALL: [BuiltinKernel; 3] = [Self::Wootters, Self::Bures, Self::RootInfidelity];

    pub fn name(self) -> &'static str {
        match self {
            Self::Wootters => "wootters",
            Self::Bures => "bures",
            Self::RootInfidelity => "root-infidelity",
        }
    }
}

impl FromStr for BuiltinKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wootters" => Ok(Self::Wootters),
            "bures" => Ok(Self::Bures),
            "root-infidelity" | "root_infidelity" => Ok(Self::RootInfidelity),
            other => Err(Error::UnknownKernel(other.to_string())),
        }
    }
}

impl fmt::Display for BuiltinKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone)]
enum Repr {
    Builtin(BuiltinKernel),
    Custom { f: RealFn, f_inv: Option<RealFn> },
}

/// A metric-inducing kernel. Cheap to clone and shareable across threads.
#[derive(Clone)]
pub struct MetricKernel {
    name: String,
    repr: Repr,
}

impl fmt::Debug for MetricKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricKernel")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

/// Looks a built-in kernel up by name (`wootters`, `bures`,
/// `root-infidelity` or `root_infidelity`).
pub fn builtin_kernel(name: &str) -> Result<MetricKernel> {
    name.parse::<BuiltinKernel>().map(MetricKernel::builtin)
}

fn clamp_unit(x: f64) -> f64 {
    debug_assert!(
        (-1e-9..=1.0 + 1e-9).contains(&x),
        "kernel argument {x} far outside [0, 1]"
    );
    x.clamp(0.0, 1.0)
}

impl MetricKernel {
    pub fn builtin(kind: BuiltinKernel) -> Self {
        Self {
            name: kind.name().to_string(),
            repr: Repr::Builtin(kind),
        }
    }

    pub fn wootters() -> Self {
        Self::builtin(BuiltinKernel::Wootters)
    }

    pub fn bures() -> Self {
        Self::builtin(BuiltinKernel::Bures)
    }

    pub fn root_infidelity() -> Self {
        Self::builtin(BuiltinKernel::RootInfidelity)
    }

    /// A user kernel checked only on the grid (`f(1) = 0`, `f ≥ 0`, strictly
    /// decreasing, no jumps). It is *not* known to induce a metric; see
    /// [`MetricKernel::verified_custom`] for kernels feeding bounds.
    pub fn unverified_custom<F>(name: &str, f: F, f_inv: Option<RealFn>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let f: RealFn = Arc::new(f);
        check_grid(name, &*f)?;
        Ok(Self {
            name: name.to_string(),
            repr: Repr::Custom { f, f_inv },
        })
    }

    /// A user kernel that additionally passed [`triangle_check`] with the
    /// default triple count and dimension.
    pub fn verified_custom<F>(
        name: &str,
        f: F,
        f_inv: Option<RealFn>,
        rng: &mut RngStream,
    ) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let kernel = Self::unverified_custom(name, f, f_inv)?;
        let report = triangle_check(&kernel, DEFAULT_TRIANGLE_TRIPLES, DEFAULT_TRIANGLE_DIM, rng);
        if report.violations > 0 {
            return Err(Error::NotAMetric {
                name: name.to_string(),
                violations: report.violations,
                worst_slack: report.worst_slack,
            });
        }
        Ok(kernel)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn as_builtin(&self) -> Option<BuiltinKernel> {
        match self.repr {
            Repr::Builtin(b) => Some(b),
            Repr::Custom { .. } => None,
        }
    }

    /// True only for Wootters, whose `h` has a closed form.
    pub fn has_closed_form_h(&self) -> bool {
        self.as_builtin() == Some(BuiltinKernel::Wootters)
    }

    /// `f(x)` for `x ∈ [0, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        let x = clamp_unit(x);
        match &self.repr {
            Repr::Builtin(BuiltinKernel::Wootters) => x.sqrt().acos(),
            Repr::Builtin(BuiltinKernel::Bures) => (2.0 * (1.0 - x.sqrt())).max(0.0).sqrt(),
            Repr::Builtin(BuiltinKernel::RootInfidelity) => (1.0 - x).sqrt(),
            Repr::Custom { f, .. } => f(x),
        }
    }

    /// `f(1 − q)` evaluated without forming `1 − q`, so that small `q`
    /// keeps its relative accuracy. All built-ins have a square-root
    /// singularity at `x = 1`, where a one-ulp error in `x` would otherwise
    /// become an error of order `1e-8` in `f`.
    pub fn eval_complement(&self, q: f64) -> f64 {
        let q = clamp_unit(q);
        match &self.repr {
            Repr::Builtin(BuiltinKernel::Wootters) => q.sqrt().asin(),
            // 1 − √(1 − q) = q / (1 + √(1 − q))
            Repr::Builtin(BuiltinKernel::Bures) => (2.0 * q / (1.0 + (1.0 - q).sqrt())).sqrt(),
            Repr::Builtin(BuiltinKernel::RootInfidelity) => q.sqrt(),
            Repr::Custom { f, .. } => f(1.0 - q),
        }
    }

    /// `f(0)`, the upper end of the range of `f`.
    pub fn max_value(&self) -> f64 {
        self.eval(0.0)
    }

    /// `f⁻¹(y)` for `y ∈ [0, f(0)]`; closed form for built-ins and for user
    /// kernels that supply one, bisection otherwise.
    pub fn f_inv(&self, y: f64) -> Result<f64> {
        let top = self.max_value();
        if !(y >= -ENDPOINT_GUARD && y <= top + ENDPOINT_GUARD) {
            return Err(Error::OutOfRange {
                value: y,
                lo: 0.0,
                hi: top,
            });
        }
        let y = y.clamp(0.0, top);
        let x = match &self.repr {
            Repr::Builtin(BuiltinKernel::Wootters) => y.cos().powi(2),
            Repr::Builtin(BuiltinKernel::Bures) => (1.0 - 0.5 * y * y).powi(2),
            Repr::Builtin(BuiltinKernel::RootInfidelity) => 1.0 - y * y,
            Repr::Custom { f_inv: Some(g), .. } => g(y),
            Repr::Custom { f, f_inv: None } => bisect_inverse(&**f, y),
        };
        Ok(x.clamp(0.0, 1.0))
    }

    /// `h_c^f(x) = f⁻¹(f(c²) − f(x))` for `c ∈ (0, 1)`, `x ∈ [c², 1]`.
    /// Wootters uses `(c√x + √(1−c²)√(1−x))²`.
    pub fn h(&self, c: f64, x: f64) -> Result<f64> {
        let x = check_h_domain(c, x)?;
        if self.has_closed_form_h() {
            Ok(wootters_h(c, x))
        } else {
            self.h_by_inverse(c, x)
        }
    }

    /// `h` evaluated through `f⁻¹` even when a closed form exists.
    pub fn h_by_inverse(&self, c: f64, x: f64) -> Result<f64> {
        let x = check_h_domain(c, x)?;
        let y = self.eval(c * c) - self.eval(x);
        self.f_inv(y.max(0.0))
    }

    /// `d_f(ψ, φ) = f(|⟨ψ|φ⟩|²)`.
    pub fn distance(&self, psi: &[num_complex::Complex64], phi: &[num_complex::Complex64]) -> f64 {
        self.eval(inner(psi, phi).norm_sqr())
    }
}

fn check_h_domain(c: f64, x: f64) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::OutOfRange {
            value: c,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let lo = c * c;
    if !(x >= lo - ENDPOINT_GUARD && x <= 1.0 + ENDPOINT_GUARD) {
        return Err(Error::OutOfRange {
            value: x,
            lo,
            hi: 1.0,
        });
    }
    Ok(x.clamp(lo, 1.0))
}

/// Wootters bound-transfer curve `(c√x + √(1−c²)√(1−x))²`, equivalently
/// `cos²(arccos c − arccos √x)`. Accepts the closed interval `c ∈ [0, 1]`.
pub fn wootters_h(c: f64, x: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    let x = x.clamp(0.0, 1.0);
    let s = c * x.sqrt() + (1.0 - c * c).sqrt() * (1.0 - x).sqrt();
    (s * s).min(1.0)
}

fn bisect_inverse(f: &dyn Fn(f64) -> f64, y: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if f(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_grid(name: &str, f: &dyn Fn(f64) -> f64) -> Result<()> {
    let invalid = |reason: String| Error::InvalidKernel {
        name: name.to_string(),
        reason,
    };
    let values: Vec<f64> = (0..=GRID_POINTS)
        .map(|k| f(k as f64 / GRID_POINTS as f64))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("non-finite value on [0, 1]".into()));
    }
    let at_one = values[GRID_POINTS];
    if at_one.abs() > 1e-12 {
        return Err(invalid(format!("f(1) = {at_one}, expected 0")));
    }
    if let Some(v) = values.iter().find(|&&v| v < 0.0) {
        return Err(invalid(format!("negative value {v}")));
    }
    let range = values[0] - at_one;
    for (k, w) in values.windows(2).enumerate() {
        if w[1] >= w[0] {
            return Err(invalid(format!(
                "not strictly decreasing near x = {}",
                k as f64 / GRID_POINTS as f64
            )));
        }
        if w[0] - w[1] > 0.1 * range {
            return Err(invalid(format!(
                "jump of {} near x = {}",
                w[0] - w[1],
                k as f64 / GRID_POINTS as f64
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TriangleReport {
    pub triples: usize,
    pub violations: usize,
    /// Smallest `d(ψ,χ) + d(χ,φ) − d(ψ,φ)` seen over all orderings.
    pub worst_slack: f64,
}

/// Samples random pure-state triples and counts triangle-inequality
/// violations (all three orderings of each triple) beyond `1e-10`.
pub fn triangle_check(
    kernel: &MetricKernel,
    n_triples: usize,
    dim: usize,
    rng: &mut RngStream,
) -> TriangleReport {
    assert!(n_triples >= 1 && dim >= 2);
    let mut report = TriangleReport {
        triples: n_triples,
        violations: 0,
        worst_slack: f64::INFINITY,
    };
    for _ in 0..n_triples {
        let states: Vec<_> = (0..3).map(|_| random_pure_state(dim, rng)).collect();
        let d =
            |i: usize, j: usize| kernel.distance(states[i].amplitudes(), states[j].amplitudes());
        let (d01, d02, d12) = (d(0, 1), d(0, 2), d(1, 2));
        for slack in [d02 + d12 - d01, d01 + d12 - d02, d01 + d02 - d12] {
            report.worst_slack = report.worst_slack.min(slack);
            if slack < -TRIANGLE_TOL {
                report.violations += 1;
            }
        }
    }
    report
}
