//! POVMs, states, and the Landau–Pollak bounds built on them.
//!
//! For two POVMs `A = {A_i}` and `B = {B_j}` on `C^N` and a state `ρ`:
//!
//! * `P_{A;ρ} = max_i Tr(A_i ρ)` is the maximal outcome probability and
//!   `U_f(A;ρ) = f(P_{A;ρ})` the uncertainty under kernel `f`;
//! * `c_{A,B} = max_ij ‖√A_i √B_j‖` is the joint overlap and
//!   `c_A = max_i ‖√A_i‖` the intrinsic overlap;
//! * `U_f(A;ρ) + U_f(B;ρ) ≥ max(f(c_{A,B}²), f(c_A²) + f(c_B²))`;
//! * `max(c_A/√N_B, c_B/√N_A) ≤ c_{A,B} ≤ c_A c_B`;
//! * `(P_A, P_B)` lies in the rectangle `[1/N_A, c_A²] × [1/N_B, c_B²]`
//!   with the corner beyond the Wootters curve `P_B = h_{c_{A,B}}(P_A)`
//!   removed.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{eigh, op_norm, psd_sqrt, CMatrix, HermitianMatrix, PSD_CLIP_TOL};
use crate::metrics::{wootters_h, MetricKernel};
use crate::randgen::PureState;

/// Minimum eigenvalue allowed for POVM elements and states.
pub const PSD_TOL: f64 = 1e-10;
/// Maximum entrywise deviation of `Σ A_i` from the identity.
pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Maximum deviation of `Tr ρ` from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Default tolerance for [`domain_contains`].
pub const DOMAIN_TOL: f64 = 1e-9;
/// Values this close to the maximum count as ties for argmax purposes.
const TIE_TOL: f64 = 1e-12;
/// Probabilities and overlaps within this distance of one are one. The
/// traces behind them carry absolute roundoff of order `N² ε`, and every
/// kernel has a square-root singularity at one, so that noise would
/// otherwise show up as `~1e-8` of spurious uncertainty.
pub const CERTAINTY_FLOOR: f64 = 1e-14;

fn snap_to_one(x: f64) -> f64 {
    if x > 1.0 - CERTAINTY_FLOOR {
        1.0
    } else {
        x
    }
}

/// Outcome of checking a set of operators against the POVM axioms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PovmValidation {
    /// Smallest eigenvalue of each element.
    pub min_eigenvalues: Vec<f64>,
    /// `max |Σ_i A_i − I|` entrywise.
    pub completeness_deviation: f64,
    pub passed: bool,
}

impl fmt::Display for PovmValidation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let worst = self
            .min_eigenvalues
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1));
        write!(
            f,
            "completeness deviation {:e} (tolerance {COMPLETENESS_TOL:e})",
            self.completeness_deviation
        )?;
        if let Some((i, l)) = worst {
            write!(
                f,
                ", smallest eigenvalue {l:e} in element {i} (tolerance {:e})",
                -PSD_TOL
            )?;
        }
        Ok(())
    }
}

/// Checks PSD-ness of every element and completeness of the sum.
pub fn validate_povm(elements: &[HermitianMatrix]) -> Result<PovmValidation> {
    let n = common_dim(elements)?;
    let mut min_eigenvalues = Vec::with_capacity(elements.len());
    let mut sum = CMatrix::zeros(n, n);
    for a in elements {
        min_eigenvalues.push(eigh(a)?.min_value());
        sum = &sum + a.as_matrix();
    }
    let completeness_deviation = sum.max_abs_diff(&CMatrix::identity(n));
    let passed = completeness_deviation <= COMPLETENESS_TOL
        && min_eigenvalues.iter().all(|&l| l >= -PSD_TOL);
    Ok(PovmValidation {
        min_eigenvalues,
        completeness_deviation,
        passed,
    })
}

fn common_dim(elements: &[HermitianMatrix]) -> Result<usize> {
    let n = elements
        .first()
        .ok_or_else(|| Error::DimensionMismatch("empty operator set".into()))?
        .dim();
    if let Some(bad) = elements.iter().find(|a| a.dim() != n) {
        return Err(Error::DimensionMismatch(format!(
            "operator set mixes dimensions {n} and {}",
            bad.dim()
        )));
    }
    Ok(n)
}

/// A validated POVM: PSD elements resolving the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    dim: usize,
    elements: Vec<HermitianMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<HermitianMatrix>) -> Result<Self> {
        let report = validate_povm(&elements)?;
        if !report.passed {
            return Err(Error::InvalidPovm(report));
        }
        Ok(Self {
            dim: elements[0].dim(),
            elements,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of outcomes.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[HermitianMatrix] {
        &self.elements
    }

    pub fn validation(&self) -> PovmValidation {
        validate_povm(&self.elements).expect("validated at construction")
    }

    /// `{U A_i U†}`.
    pub fn conjugated(&self, u: &CMatrix) -> Self {
        let elements = self.elements.iter().map(|a| conjugate(a, u)).collect();
        Self {
            dim: self.dim,
            elements,
        }
    }
}

fn conjugate(a: &HermitianMatrix, u: &CMatrix) -> HermitianMatrix {
    HermitianMatrix::hermitian_part(&(&(u * a.as_matrix()) * &u.adjoint()))
}

/// A Hermitian, PSD, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: HermitianMatrix,
}

impl DensityOperator {
    pub fn new(matrix: HermitianMatrix) -> Result<Self> {
        let tr = matrix.as_matrix().trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = eigh(&matrix)?.min_value();
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {min:e} is negative"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self {
            matrix: HermitianMatrix::projector(psi.amplitudes()),
        }
    }

    /// `I/n`.
    pub fn maximally_mixed(n: usize) -> Self {
        Self {
            matrix: HermitianMatrix::from_real_diag(&vec![1.0 / n as f64; n]),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    /// `U ρ U†`.
    pub fn conjugated(&self, u: &CMatrix) -> Self {
        Self {
            matrix: conjugate(&self.matrix, u),
        }
    }
}

fn check_dims(what: &str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("{what}: {a} vs {b}")));
    }
    Ok(())
}

/// `p_i = Tr(A_i ρ)`, clamped to `[0, 1]`.
pub fn probabilities(p: &Povm, rho: &DensityOperator) -> Result<Vec<f64>> {
    check_dims("POVM and state dimensions", p.dim(), rho.dim())?;
    Ok(operator_probabilities(p.elements(), rho.matrix()))
}

/// `Tr(A_i ρ)` for an arbitrary operator set; the set need not resolve the
/// identity.
pub(crate) fn operator_probabilities(
    elements: &[HermitianMatrix],
    rho: &HermitianMatrix,
) -> Vec<f64> {
    elements
        .iter()
        .map(|a| a.trace_product(rho).clamp(0.0, 1.0))
        .collect()
}

/// Maximum and the smallest index attaining it (within `1e-12`).
pub(crate) fn argmax(values: &[f64]) -> (f64, usize) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let idx = values
        .iter()
        .position(|&v| v >= max - TIE_TOL)
        .expect("non-empty");
    (max, idx)
}

/// `P_{A;ρ} = max_i Tr(A_i ρ)` with the smallest maximizing index.
pub fn max_prob(p: &Povm, rho: &DensityOperator) -> Result<(f64, usize)> {
    let m = MaxProb::from_probabilities(&probabilities(p, rho)?);
    debug_assert!(m.value > 0.0, "a POVM always has a nonzero outcome");
    Ok((m.value, m.index))
}

/// `U_f(A;ρ) = f(P_{A;ρ})`.
pub fn uncertainty(k: &MetricKernel, p: &Povm, rho: &DensityOperator) -> Result<f64> {
    Ok(MaxProb::from_probabilities(&probabilities(p, rho)?).uncertainty(k))
}

/// The maximal probability of a distribution together with its complement
/// `1 − P = Σ_{k≠i} p_k`, summed from the other outcomes so it stays
/// accurate when `P` is within a few ulps of one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxProb {
    pub value: f64,
    pub index: usize,
    pub complement: f64,
}

impl MaxProb {
    pub fn from_probabilities(probs: &[f64]) -> Self {
        let (value, index) = argmax(probs);
        let complement = probs
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != index)
            .map(|(_, p)| p)
            .sum::<f64>()
            .clamp(0.0, 1.0);
        if complement < CERTAINTY_FLOOR {
            return Self {
                value: 1.0,
                index,
                complement: 0.0,
            };
        }
        Self {
            value,
            index,
            complement,
        }
    }

    /// `f(P)`, through the complement when `P > 1/2`.
    pub fn uncertainty(&self, k: &MetricKernel) -> f64 {
        if self.value > 0.5 {
            k.eval_complement(self.complement)
        } else {
            k.eval(self.value)
        }
    }
}

fn sqrt_elements(elements: &[HermitianMatrix]) -> Result<Vec<HermitianMatrix>> {
    elements.iter().map(|a| psd_sqrt(a, PSD_CLIP_TOL)).collect()
}

/// `max_ij ‖√A_i √B_j‖` over precomputed square roots, with the
/// lexicographically smallest maximizing pair.
pub(crate) fn overlap_from_roots(
    sqrt_a: &[HermitianMatrix],
    sqrt_b: &[HermitianMatrix],
) -> Result<(f64, (usize, usize))> {
    let mut norms = Vec::with_capacity(sqrt_a.len() * sqrt_b.len());
    for sa in sqrt_a {
        for sb in sqrt_b {
            norms.push(op_norm(&(sa.as_matrix() * sb.as_matrix()))?);
        }
    }
    let (c, flat) = argmax(&norms);
    Ok((snap_to_one(c), (flat / sqrt_b.len(), flat % sqrt_b.len())))
}

/// Joint overlap `c_{A,B} = max_ij ‖√A_i √B_j‖` and its argmax `(i, j)`.
pub fn joint_overlap(a: &Povm, b: &Povm) -> Result<(f64, (usize, usize))> {
    check_dims("POVM dimensions", a.dim(), b.dim())?;
    overlap_from_roots(&sqrt_elements(a.elements())?, &sqrt_elements(b.elements())?)
}

/// Intrinsic overlap `c_A = max_i ‖√A_i‖ = max_i √λ_max(A_i)`.
pub fn intrinsic_overlap(a: &Povm) -> Result<f64> {
    operator_set_intrinsic_overlap(a.elements())
}

pub(crate) fn operator_set_intrinsic_overlap(elements: &[HermitianMatrix]) -> Result<f64> {
    let mut best: f64 = 0.0;
    for e in elements {
        best = best.max(eigh(e)?.max_value().max(0.0).sqrt());
    }
    Ok(snap_to_one(best))
}

/// Interval `[max(c_A/√N_B, c_B/√N_A), c_A c_B]` that must contain `c_{A,B}`.
pub fn overlap_sandwich(n_a: usize, n_b: usize, c_a: f64, c_b: f64) -> (f64, f64) {
    let lo = (c_a / (n_b as f64).sqrt()).max(c_b / (n_a as f64).sqrt());
    (lo, c_a * c_b)
}

/// Overlaps and bound values of a POVM pair under one kernel.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapReport {
    pub kernel: String,
    pub c_a: f64,
    pub c_b: f64,
    pub c_ab: f64,
    pub argmax_pair: (usize, usize),
    /// `f(c_{A,B}²)`.
    pub bound_joint: f64,
    /// `f(c_A²) + f(c_B²)`.
    pub bound_intrinsic_sum: f64,
    /// The larger of the two.
    pub bound_improved: f64,
}

/// One evaluation of the uncertainty sum against its bounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub kernel: String,
    pub c_ab: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub u_a: f64,
    pub u_b: f64,
    pub u_sum: f64,
    /// `f(c_{A,B}²)`.
    pub bound: f64,
    pub bound_improved: f64,
    /// `u_sum − bound`; nonnegative up to roundoff for metric kernels.
    pub slack: f64,
}

impl TrialRecord {
    /// `u_sum − bound_improved`.
    pub fn improved_slack(&self) -> f64 {
        self.u_sum - self.bound_improved
    }
}

/// A POVM pair with the square roots and overlaps every bound needs,
/// computed once.
#[derive(Clone, Debug)]
pub struct PovmPair {
    a: Povm,
    b: Povm,
    c_a: f64,
    c_b: f64,
    c_ab: f64,
    argmax_pair: (usize, usize),
}

impl PovmPair {
    pub fn new(a: Povm, b: Povm) -> Result<Self> {
        check_dims("POVM dimensions", a.dim(), b.dim())?;
        let sqrt_a = sqrt_elements(a.elements())?;
        let sqrt_b = sqrt_elements(b.elements())?;
        let (c_ab, argmax_pair) = overlap_from_roots(&sqrt_a, &sqrt_b)?;
        let c_a = intrinsic_overlap(&a)?;
        let c_b = intrinsic_overlap(&b)?;
        Ok(Self {
            a,
            b,
            c_a,
            c_b,
            c_ab,
            argmax_pair,
        })
    }

    pub fn a(&self) -> &Povm {
        &self.a
    }

    pub fn b(&self) -> &Povm {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn c_a(&self) -> f64 {
        self.c_a
    }

    pub fn c_b(&self) -> f64 {
        self.c_b
    }

    pub fn c_ab(&self) -> f64 {
        self.c_ab
    }

    pub fn argmax_pair(&self) -> (usize, usize) {
        self.argmax_pair
    }

    pub fn report(&self, k: &MetricKernel) -> OverlapReport {
        let bound_joint = k.eval(self.c_ab * self.c_ab);
        let bound_intrinsic_sum = k.eval(self.c_a * self.c_a) + k.eval(self.c_b * self.c_b);
        OverlapReport {
            kernel: k.name().to_string(),
            c_a: self.c_a,
            c_b: self.c_b,
            c_ab: self.c_ab,
            argmax_pair: self.argmax_pair,
            bound_joint,
            bound_intrinsic_sum,
            bound_improved: bound_joint.max(bound_intrinsic_sum),
        }
    }

    /// Evaluates the uncertainty sum of `rho` against both bounds for each
    /// kernel. Probabilities are computed once and shared.
    pub fn check_state(
        &self,
        kernels: &[MetricKernel],
        rho: &DensityOperator,
    ) -> Result<Vec<TrialRecord>> {
        let (p_a, p_b) = self.max_probs(rho)?;
        Ok(kernels.iter().map(|k| self.record(k, &p_a, &p_b)).collect())
    }

    pub fn lpi_check(&self, k: &MetricKernel, rho: &DensityOperator) -> Result<TrialRecord> {
        let (p_a, p_b) = self.max_probs(rho)?;
        Ok(self.record(k, &p_a, &p_b))
    }

    /// `(P_{A;ρ}, P_{B;ρ})`.
    pub fn max_probs(&self, rho: &DensityOperator) -> Result<(MaxProb, MaxProb)> {
        let p_a = MaxProb::from_probabilities(&probabilities(&self.a, rho)?);
        let p_b = MaxProb::from_probabilities(&probabilities(&self.b, rho)?);
        Ok((p_a, p_b))
    }

    /// A record for externally computed maximal probabilities.
    pub fn record(&self, k: &MetricKernel, p_a: &MaxProb, p_b: &MaxProb) -> TrialRecord {
        let report = self.report(k);
        let u_a = p_a.uncertainty(k);
        let u_b = p_b.uncertainty(k);
        let u_sum = u_a + u_b;
        TrialRecord {
            kernel: report.kernel,
            c_ab: self.c_ab,
            p_a: p_a.value,
            p_b: p_b.value,
            u_a,
            u_b,
            u_sum,
            bound: report.bound_joint,
            bound_improved: report.bound_improved,
            slack: u_sum - report.bound_joint,
        }
    }

    pub fn domain_spec(&self) -> DomainSpec {
        DomainSpec::from_overlaps(self.a.len(), self.b.len(), self.c_a, self.c_b, self.c_ab)
    }

    /// A unit vector in the top eigenspace of `A_{i'}`, `i'` the first index
    /// of the overlap argmax. For rank-one PVMs this is `|a_{i'}⟩`, which
    /// attains the joint bound with equality.
    pub fn sharpness_witness(&self) -> Result<PureState> {
        let (i, _) = self.argmax_pair;
        let e = eigh(&self.a.elements()[i])?;
        let top = e.values.len() - 1;
        PureState::normalized(e.vectors.column(top))
    }
}

/// Computes both uncertainties, `f(c_{A,B}²)` and the slack.
pub fn lpi_check(
    k: &MetricKernel,
    a: &Povm,
    b: &Povm,
    rho: &DensityOperator,
) -> Result<TrialRecord> {
    check_dims("state dimension", a.dim(), rho.dim())?;
    PovmPair::new(a.clone(), b.clone())?.lpi_check(k, rho)
}

/// Joint, intrinsic and improved bounds for a POVM pair.
pub fn improved_bound(k: &MetricKernel, a: &Povm, b: &Povm) -> Result<OverlapReport> {
    Ok(PovmPair::new(a.clone(), b.clone())?.report(k))
}

/// The allowed region of `(P_A, P_B)`: the rectangle
/// `[1/N_A, c_A²] × [1/N_B, c_B²]`, cut by `P_B ≤ h(P_A)` for
/// `P_A ≥ c_{A,B}²` with `h` the Wootters curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DomainSpec {
    pub n_a: usize,
    pub n_b: usize,
    pub c_a: f64,
    pub c_b: f64,
    pub c_ab: f64,
    /// True when the curve misses the corner `(c_A², c_B²)`.
    pub full_rectangle: bool,
}

impl DomainSpec {
    pub fn from_overlaps(n_a: usize, n_b: usize, c_a: f64, c_b: f64, c_ab: f64) -> Self {
        let full_rectangle = c_b * c_b <= wootters_h(c_ab, c_a * c_a);
        Self {
            n_a,
            n_b,
            c_a,
            c_b,
            c_ab,
            full_rectangle,
        }
    }

    /// `h_{c_{A,B}}(x)`.
    pub fn h(&self, x: f64) -> f64 {
        wootters_h(self.c_ab, x)
    }

    pub fn contains(&self, p_a: f64, p_b: f64, tol: f64) -> bool {
        domain_contains(self, p_a, p_b, tol)
    }

    /// The curve `(x, h(x))` on `points` equally spaced `x ∈ [c_{A,B}², 1]`.
    pub fn boundary(&self, points: usize) -> Vec<(f64, f64)> {
        assert!(points >= 2);
        let lo = self.c_ab * self.c_ab;
        (0..points)
            .map(|k| {
                let x = lo + (1.0 - lo) * k as f64 / (points - 1) as f64;
                (x, self.h(x))
            })
            .collect()
    }
}

/// Classifies the allowed domain of a POVM pair.
pub fn domain_spec(a: &Povm, b: &Povm) -> Result<DomainSpec> {
    Ok(PovmPair::new(a.clone(), b.clone())?.domain_spec())
}

/// Membership in the allowed domain with tolerance `tol`.
///
/// The cut is tested in both orientations, `P_B ≤ h(P_A)` and
/// `P_A ≤ h(P_B)`. They describe the same set, but each is ill-conditioned
/// where the other is not (the curve is vertical at one end and horizontal
/// at the other), so a point is accepted if either orientation admits it.
pub fn domain_contains(d: &DomainSpec, p_a: f64, p_b: f64, tol: f64) -> bool {
    let in_box = p_a >= 1.0 / d.n_a as f64 - tol
        && p_a <= d.c_a * d.c_a + tol
        && p_b >= 1.0 / d.n_b as f64 - tol
        && p_b <= d.c_b * d.c_b + tol;
    in_box && (cut_allows(d, p_a, p_b, tol) || cut_allows(d, p_b, p_a, tol))
}

fn cut_allows(d: &DomainSpec, x: f64, y: f64, tol: f64) -> bool {
    let c2 = d.c_ab * d.c_ab;
    x <= c2 + tol || y <= d.h(x) + tol
}

/// `⟨ψ|A|ψ⟩` for each element; convenience for pure states.
pub fn pure_probabilities(p: &Povm, psi: &PureState) -> Result<Vec<f64>> {
    check_dims("POVM and state dimensions", p.dim(), psi.dim())?;
    Ok(p.elements()
        .iter()
        .map(|a| {
            let z: Complex64 = a.as_matrix().expectation(psi.amplitudes());
            z.re.clamp(0.0, 1.0)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randgen::{
        pvm_from_unitary, random_mixed_state, random_povm, random_pvm, MixedStateMethod, RngStream,
    };
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    fn computational(n: usize) -> Povm {
        pvm_from_unitary(&CMatrix::identity(n))
    }

    fn hadamard() -> Povm {
        let s = FRAC_1_SQRT_2;
        pvm_from_unitary(&CMatrix::from_real_rows(&[&[s, s], &[s, -s]]))
    }

    fn uniform_povm(n: usize, outcomes: usize) -> Povm {
        let w = 1.0 / outcomes as f64;
        Povm::new(vec![HermitianMatrix::from_real_diag(&vec![w; n]); outcomes]).unwrap()
    }

    fn ket0() -> DensityOperator {
        PureState::basis(2, 0).density()
    }

    #[test]
    fn validate_examples() {
        let v = validate_povm(computational(3).elements()).unwrap();
        assert!(v.passed);
        assert_eq!(v.completeness_deviation, 0.0);
        assert!(v.min_eigenvalues.iter().all(|&l| l == 0.0));

        for n in 1..5 {
            assert!(validate_povm(uniform_povm(n, 2).elements()).unwrap().passed);
        }

        let bad = vec![
            HermitianMatrix::from_real_diag(&[1.0, 0.0]),
            HermitianMatrix::from_real_diag(&[0.0, 0.9]),
        ];
        let v = validate_povm(&bad).unwrap();
        assert!(!v.passed);
        assert!((v.completeness_deviation - 0.1).abs() < 1e-15);
        assert!(matches!(Povm::new(bad), Err(Error::InvalidPovm(_))));
    }

    #[test]
    fn validate_rejects_negative_element() {
        let els = vec![
            HermitianMatrix::from_real_diag(&[1.1, 0.5]),
            HermitianMatrix::from_real_diag(&[-0.1, 0.5]),
        ];
        let v = validate_povm(&els).unwrap();
        assert!(!v.passed);
        assert!(v.completeness_deviation < 1e-15);
        assert!(v.to_string().contains("element 1"));
    }

    #[test]
    fn validate_rejects_mixed_dims_and_empty() {
        assert!(validate_povm(&[]).is_err());
        let els = vec![HermitianMatrix::identity(2), HermitianMatrix::identity(3)];
        assert!(matches!(
            validate_povm(&els),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn density_operator_validation() {
        assert!(DensityOperator::new(HermitianMatrix::from_real_diag(&[0.5, 0.6])).is_err());
        assert!(DensityOperator::new(HermitianMatrix::from_real_diag(&[1.5, -0.5])).is_err());
        assert!(DensityOperator::new(HermitianMatrix::from_real_diag(&[0.25, 0.75])).is_ok());
    }

    #[test]
    fn probability_examples() {
        let p = computational(3);
        assert_eq!(
            probabilities(&p, &PureState::basis(3, 0).density()).unwrap(),
            vec![1.0, 0.0, 0.0]
        );

        let mut rng = RngStream::new(1, 0);
        let a = random_povm(3, 4, &mut rng);
        let probs = probabilities(&a, &DensityOperator::maximally_mixed(3)).unwrap();
        for (p, e) in probs.iter().zip(a.elements()) {
            assert!((p - e.as_matrix().trace().re / 3.0).abs() < 1e-15);
        }

        let pvm = random_pvm(4, &mut rng);
        let probs = probabilities(&pvm, &DensityOperator::maximally_mixed(4)).unwrap();
        assert!(probs.iter().all(|p| (p - 0.25).abs() < 1e-15));

        assert!(matches!(
            probabilities(&p, &DensityOperator::maximally_mixed(2)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = RngStream::new(2, 0);
        for _ in 0..100 {
            let a = random_povm(4, 5, &mut rng);
            let rho = random_mixed_state(4, MixedStateMethod::Wishart, &mut rng);
            let probs = probabilities(&a, &rho).unwrap();
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(probs.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn max_prob_examples() {
        let p = computational(3);
        assert_eq!(
            max_prob(&p, &PureState::basis(3, 0).density()).unwrap(),
            (1.0, 0)
        );
        let (pm, idx) = max_prob(&p, &DensityOperator::maximally_mixed(3)).unwrap();
        assert!((pm - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(idx, 0);

        let mut rng = RngStream::new(3, 0);
        let rho = random_mixed_state(2, MixedStateMethod::Spectral, &mut rng);
        assert_eq!(max_prob(&uniform_povm(2, 2), &rho).unwrap(), (0.5, 0));
    }

    #[test]
    fn uncertainty_examples() {
        let w = MetricKernel::wootters();
        let p = computational(2);
        assert_eq!(uncertainty(&w, &p, &ket0()).unwrap(), 0.0);
        let u = uncertainty(&w, &p, &DensityOperator::maximally_mixed(2)).unwrap();
        assert!((u - FRAC_PI_4).abs() < 1e-15);
        let u = uncertainty(
            &MetricKernel::bures(),
            &p,
            &DensityOperator::maximally_mixed(2),
        )
        .unwrap();
        assert!((u - 0.765_366_864_730_179_5).abs() < 1e-15);
    }

    #[test]
    fn uncertainty_extremes() {
        let mut rng = RngStream::new(4, 0);
        let k = MetricKernel::root_infidelity();
        for _ in 0..50 {
            let a = random_povm(3, 3, &mut rng);
            let rho = random_mixed_state(3, MixedStateMethod::Spectral, &mut rng);
            let u = uncertainty(&k, &a, &rho).unwrap();
            assert!(u >= 0.0 && u <= k.eval(1.0 / 3.0) + 1e-12);
        }
    }

    #[test]
    fn joint_overlap_examples() {
        let (c, pair) = joint_overlap(&computational(2), &hadamard()).unwrap();
        assert!((c - FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(pair, (0, 0));

        let (c, _) = joint_overlap(&hadamard(), &hadamard()).unwrap();
        assert!((c - 1.0).abs() < 1e-12);

        let (c, _) = joint_overlap(&uniform_povm(2, 2), &hadamard()).unwrap();
        assert!((c - FRAC_1_SQRT_2).abs() < 1e-12);

        assert!(joint_overlap(&computational(2), &computational(3)).is_err());
    }

    #[test]
    fn joint_overlap_is_symmetric() {
        let mut rng = RngStream::new(5, 0);
        for _ in 0..100 {
            let a = random_povm(3, 4, &mut rng);
            let b = random_povm(3, 2, &mut rng);
            let (ab, (i, j)) = joint_overlap(&a, &b).unwrap();
            let (ba, (j2, i2)) = joint_overlap(&b, &a).unwrap();
            assert!((ab - ba).abs() <= 1e-10);
            // argmax agrees unless there is a near-tie
            if (i, j) != (i2, j2) {
                let (c, _) = overlap_from_roots(
                    &sqrt_elements(&a.elements()[i2..=i2]).unwrap(),
                    &sqrt_elements(&b.elements()[j2..=j2]).unwrap(),
                )
                .unwrap();
                assert!((c - ab).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn intrinsic_overlap_examples() {
        assert_eq!(intrinsic_overlap(&computational(3)).unwrap(), 1.0);
        for n_a in 2..6 {
            let c = intrinsic_overlap(&uniform_povm(3, n_a)).unwrap();
            assert!((c - 1.0 / (n_a as f64).sqrt()).abs() < 1e-15);
        }
        let p = Povm::new(vec![
            HermitianMatrix::from_real_diag(&[0.7, 0.2]),
            HermitianMatrix::from_real_diag(&[0.3, 0.8]),
        ])
        .unwrap();
        assert!((intrinsic_overlap(&p).unwrap() - 0.8f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn lpi_check_identical_pvms() {
        let mut rng = RngStream::new(6, 0);
        let a = random_pvm(3, &mut rng);
        let rho = random_mixed_state(3, MixedStateMethod::Spectral, &mut rng);
        for k in [MetricKernel::wootters(), MetricKernel::bures()] {
            let r = lpi_check(&k, &a, &a, &rho).unwrap();
            assert_eq!(r.bound, 0.0, "{r:?}");
            assert!((r.slack - (r.u_sum - r.bound)).abs() < 1e-15);
            assert!(r.u_sum >= 0.0);
        }
    }

    #[test]
    fn lpi_check_equality_for_unbiased_bases() {
        let r = lpi_check(
            &MetricKernel::wootters(),
            &computational(2),
            &hadamard(),
            &ket0(),
        )
        .unwrap();
        assert_eq!(r.p_a, 1.0);
        assert!((r.p_b - 0.5).abs() < 1e-15);
        assert!((r.u_sum - FRAC_PI_4).abs() < 1e-12);
        assert!((r.bound - FRAC_PI_4).abs() < 1e-12);
        assert!(r.slack.abs() < 1e-12);
    }

    #[test]
    fn lpi_check_random_pairs() {
        let mut rng = RngStream::new(7, 0);
        let kernels = [
            MetricKernel::wootters(),
            MetricKernel::bures(),
            MetricKernel::root_infidelity(),
        ];
        for _ in 0..200 {
            let pair =
                PovmPair::new(random_povm(3, 3, &mut rng), random_povm(3, 4, &mut rng)).unwrap();
            let rho = random_mixed_state(3, MixedStateMethod::Spectral, &mut rng);
            for r in pair.check_state(&kernels, &rho).unwrap() {
                assert!(r.slack >= -1e-9, "{r:?}");
                assert!(r.improved_slack() >= -1e-9, "{r:?}");
            }
        }
    }

    #[test]
    fn improved_bound_examples() {
        let w = MetricKernel::wootters();
        let mut rng = RngStream::new(8, 0);
        let (a, b) = (random_pvm(3, &mut rng), random_pvm(3, &mut rng));
        let r = improved_bound(&w, &a, &b).unwrap();
        assert_eq!(r.bound_intrinsic_sum, 0.0);
        assert_eq!(r.bound_improved, r.bound_joint);

        // {I/2, I/2} against itself: c_A = c_B = 1/√2, c_AB = 1/2
        let u = uniform_povm(2, 2);
        let r = improved_bound(&w, &u, &u).unwrap();
        assert!((r.c_a - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((r.c_ab - 0.5).abs() < 1e-15);
        assert!((r.bound_intrinsic_sum - FRAC_PI_2).abs() < 1e-12);
        assert!((r.bound_joint - 0.25f64.sqrt().acos()).abs() < 1e-12);
        assert_eq!(r.bound_improved, r.bound_intrinsic_sum.max(r.bound_joint));
        assert!(r.bound_improved > r.bound_joint);

        let (lo, hi) = overlap_sandwich(2, 2, r.c_a, r.c_b);
        assert!((lo - 0.5).abs() < 1e-15 && (hi - 0.5).abs() < 1e-15);
    }

    #[test]
    fn domain_classification_of_published_parameters() {
        let d = DomainSpec::from_overlaps(4, 5, 0.92, 0.95, 0.60);
        assert!(!d.full_rectangle);
        assert!(d.h(0.92 * 0.92) < 0.95 * 0.95);

        let d = DomainSpec::from_overlaps(4, 5, 0.84, 0.86, 0.84);
        assert!(d.full_rectangle);

        let d = DomainSpec::from_overlaps(3, 3, 1.0, 1.0, 0.75);
        assert!(!d.full_rectangle);
        assert!((d.h(1.0) - 0.5625).abs() < 1e-10);
        assert!((d.h(0.5625) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn domain_membership_examples() {
        let d = DomainSpec::from_overlaps(3, 3, 1.0, 1.0, 0.75);
        assert!(domain_contains(&d, 1.0, 0.5625, DOMAIN_TOL));
        assert!(domain_contains(&d, 0.5625, 1.0, DOMAIN_TOL));
        assert!(!domain_contains(&d, 0.9, 0.9, DOMAIN_TOL));
        assert!(domain_contains(&d, 1.0 / 3.0, 1.0 / 3.0, DOMAIN_TOL));
        assert!(!domain_contains(&d, 0.2, 0.5, DOMAIN_TOL));

        let d = DomainSpec::from_overlaps(4, 5, 0.92, 0.95, 0.60);
        assert!(domain_contains(&d, 0.25, 0.2, DOMAIN_TOL));
        assert!(!domain_contains(&d, 0.9, 0.5, DOMAIN_TOL));
    }

    #[test]
    fn domain_orientations_agree_away_from_boundary() {
        for &c in &[0.3, 0.6, 0.75, 0.9] {
            let d = DomainSpec::from_overlaps(10, 10, 1.0, 1.0, c);
            for i in 1..100 {
                for j in 1..100 {
                    let (x, y) = (i as f64 / 100.0, j as f64 / 100.0);
                    let fwd = cut_allows(&d, x, y, 0.0);
                    let rev = cut_allows(&d, y, x, 0.0);
                    // angle-form margin: arccos√x + arccos√y − arccos c
                    let margin = x.sqrt().acos() + y.sqrt().acos() - c.acos();
                    if margin.abs() > 1e-6 {
                        assert_eq!(fwd, rev, "c={c} x={x} y={y}");
                        assert_eq!(fwd, margin > 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn witness_is_sharp_for_pvms() {
        let mut rng = RngStream::new(9, 0);
        let kernels = [
            MetricKernel::wootters(),
            MetricKernel::bures(),
            MetricKernel::root_infidelity(),
        ];
        for _ in 0..50 {
            let pair = PovmPair::new(random_pvm(3, &mut rng), random_pvm(3, &mut rng)).unwrap();
            let rho = pair.sharpness_witness().unwrap().density();
            for r in pair.check_state(&kernels, &rho).unwrap() {
                assert!(r.slack.abs() <= 1e-9, "{r:?}");
            }
        }
    }

    #[test]
    fn pure_probabilities_match_density_path() {
        let mut rng = RngStream::new(10, 0);
        let a = random_povm(3, 4, &mut rng);
        let psi = crate::randgen::random_pure_state(3, &mut rng);
        let direct = pure_probabilities(&a, &psi).unwrap();
        let via_rho = probabilities(&a, &psi.density()).unwrap();
        for (x, y) in direct.iter().zip(&via_rho) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    mod props {
        use super::*;
        use crate::metrics::BuiltinKernel;
        use crate::randgen::{haar_unitary, random_pure_state};
        use proptest::prelude::*;

        fn instance(
            seed: u64,
            n: usize,
            n_a: usize,
            n_b: usize,
        ) -> (PovmPair, DensityOperator, RngStream) {
            let mut rng = RngStream::new(seed, 0);
            let pair = PovmPair::new(random_povm(n, n_a, &mut rng), random_povm(n, n_b, &mut rng))
                .unwrap();
            let rho = if seed % 2 == 0 {
                random_pure_state(n, &mut rng).density()
            } else {
                random_mixed_state(n, MixedStateMethod::Spectral, &mut rng)
            };
            (pair, rho, rng)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]

            #[test]
            fn bounds_hold(seed in any::<u64>(), n in 2usize..5, n_a in 2usize..7, n_b in 2usize..7) {
                let (pair, rho, _) = instance(seed, n, n_a, n_b);
                for kind in BuiltinKernel::ALL {
                    let k = MetricKernel::builtin(kind);
                    let r = pair.lpi_check(&k, &rho).unwrap();
                    prop_assert!(r.slack >= -1e-9, "{r:?}");
                    prop_assert!(r.improved_slack() >= -1e-9, "{r:?}");
                    prop_assert!(r.u_a >= k.eval(pair.c_a() * pair.c_a()) - 1e-9);
                    prop_assert!(r.u_b >= k.eval(pair.c_b() * pair.c_b()) - 1e-9);
                }
            }

            #[test]
            fn overlap_sandwich_and_symmetry(seed in any::<u64>(), n in 2usize..5, n_a in 2usize..7, n_b in 2usize..7) {
                let (pair, _, _) = instance(seed, n, n_a, n_b);
                let (lo, hi) = overlap_sandwich(n_a, n_b, pair.c_a(), pair.c_b());
                prop_assert!(pair.c_ab() >= lo - 1e-9 && pair.c_ab() <= hi + 1e-9);
                let (swapped, _) = joint_overlap(pair.b(), pair.a()).unwrap();
                prop_assert!((swapped - pair.c_ab()).abs() <= 1e-10);
            }

            #[test]
            fn scatter_points_lie_in_domain(seed in any::<u64>(), n in 2usize..5, n_a in 2usize..7, n_b in 2usize..7) {
                let (pair, rho, _) = instance(seed, n, n_a, n_b);
                let (p_a, p_b) = pair.max_probs(&rho).unwrap();
                prop_assert!(pair.domain_spec().contains(p_a.value, p_b.value, DOMAIN_TOL));
            }

            #[test]
            fn unitary_covariance(seed in any::<u64>(), n in 2usize..5, n_a in 2usize..6, n_b in 2usize..6) {
                let (pair, rho, mut rng) = instance(seed, n, n_a, n_b);
                let u = haar_unitary(n, &mut rng);
                let moved = PovmPair::new(pair.a().conjugated(&u), pair.b().conjugated(&u)).unwrap();
                let rho_u = rho.conjugated(&u);
                prop_assert!((moved.c_ab() - pair.c_ab()).abs() <= 1e-9);
                prop_assert!((moved.c_a() - pair.c_a()).abs() <= 1e-9);
                prop_assert!((moved.c_b() - pair.c_b()).abs() <= 1e-9);
                let x = probabilities(pair.a(), &rho).unwrap();
                let y = probabilities(moved.a(), &rho_u).unwrap();
                for (p, q) in x.iter().zip(&y) {
                    prop_assert!((p - q).abs() <= 1e-9);
                }
                let k = MetricKernel::bures();
                let r = pair.lpi_check(&k, &rho).unwrap();
                let s = moved.lpi_check(&k, &rho_u).unwrap();
                prop_assert!((r.u_sum - s.u_sum).abs() <= 1e-9 && (r.bound - s.bound).abs() <= 1e-9);
            }
        }
    }
}
