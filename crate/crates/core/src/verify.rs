//! Independent routes to the quantities in [`crate::measure`], used to
//! cross-check it.
//!
//! * Embedding: each POVM element `A_i` becomes a projector on `C^{3N}`,
//!   and a pure state `|Ψ⟩` becomes `|Ψ⟩ ⊕ 0 ⊕ 0`; expectations carry over
//!   unchanged.
//! * Purification: a mixed `ρ` becomes a pure state on `C^N ⊗ C^N` whose
//!   reduced state is `ρ`; each element is lifted to `A_i ⊗ I`.
//! * Oracles: exact state maxima via the spectrum, sampled maxima for the
//!   overlap, and the classical inner-product form for rank-one PVMs.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{
    eigh, inner, kron, norm, op_norm, partial_trace, psd_sqrt, CMatrix, HermitianMatrix, Subsystem,
    PSD_CLIP_TOL,
};
use crate::measure::{
    argmax, operator_probabilities, DensityOperator, MaxProb, Povm, PovmPair, TrialRecord,
};
use crate::metrics::MetricKernel;
use crate::randgen::{random_pure_state, PureState, RngStream};

/// POVM eigenvalues up to this far above one are clamped rather than rejected.
const UNIT_INTERVAL_TOL: f64 = 1e-10;

/// Samples per parallel chunk in [`oracle_overlap`].
const ORACLE_CHUNK: usize = 4096;

/// Default sample count for the sampled oracles.
pub const DEFAULT_ORACLE_SAMPLES: usize = 100_000;

/// A purification of a density operator on `C^N ⊗ C^N`.
#[derive(Clone, Debug)]
pub struct PurifiedState {
    pub dim_system: usize,
    pub dim_aux: usize,
    pub vector: PureState,
}

impl PurifiedState {
    /// `Tr_aux |Φ'⟩⟨Φ'|`.
    pub fn reduced(&self) -> CMatrix {
        let full = CMatrix::outer(self.vector.amplitudes());
        partial_trace(&full, self.dim_system, self.dim_aux, Subsystem::Second)
            .expect("dimensions factor by construction")
    }
}

/// `|Φ'⟩ = Σ_l √ρ_l |l⟩ ⊗ |l⟩` with `|l⟩` the eigenvectors of `ρ` on the
/// system side and the computational basis on the auxiliary side.
pub fn purify(rho: &DensityOperator) -> Result<PurifiedState> {
    let n = rho.dim();
    let e = eigh(rho.matrix())?;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); n * n];
    for (l, &weight) in e.values.iter().enumerate() {
        let s = weight.max(0.0).sqrt();
        if s == 0.0 {
            continue;
        }
        for i in 0..n {
            amplitudes[i * n + l] = e.vectors[(i, l)] * s;
        }
    }
    Ok(PurifiedState {
        dim_system: n,
        dim_aux: n,
        vector: PureState::normalized(amplitudes)?,
    })
}

/// Projectors on `C^{3N}` built from two POVMs:
///
/// ```text
/// P_i = [ A_i          √(A_i(I−A_i))  0 ]     Q_j = [ B_j          0  √(B_j(I−B_j)) ]
///       [ √(A_i(I−A_i))  I − A_i      0 ]           [ 0            0  0             ]
///       [ 0              0            0 ]           [ √(B_j(I−B_j)) 0  I − B_j       ]
/// ```
#[derive(Clone, Debug)]
pub struct EmbeddedProjectorPair {
    pub dim_extended: usize,
    pub p_blocks: Vec<HermitianMatrix>,
    pub q_blocks: Vec<HermitianMatrix>,
}

impl EmbeddedProjectorPair {
    /// `max ‖P² − P‖` entrywise over all blocks.
    pub fn max_idempotency_defect(&self) -> f64 {
        self.p_blocks
            .iter()
            .chain(&self.q_blocks)
            .map(|p| {
                let m = p.as_matrix();
                (m * m).max_abs_diff(m)
            })
            .fold(0.0, f64::max)
    }

    /// `|Ψ⟩ ⊕ 0 ⊕ 0`.
    pub fn embed_state(&self, psi: &PureState) -> Vec<Complex64> {
        let n = self.dim_extended / 3;
        assert_eq!(psi.dim(), n, "state dimension does not match the embedding");
        let mut v = vec![Complex64::new(0.0, 0.0); self.dim_extended];
        v[..n].copy_from_slice(psi.amplitudes());
        v
    }
}

/// The pieces `(A, I − A, √(A(I − A)))` of an element with eigenvalues
/// clamped to `[0, 1]`.
fn dilation_blocks(a: &HermitianMatrix) -> Result<[CMatrix; 3]> {
    let e = eigh(a)?;
    if let Some(&l) = e.values.iter().find(|&&l| l > 1.0 + UNIT_INTERVAL_TOL) {
        return Err(Error::EigenvalueOutOfUnitInterval { eigenvalue: l });
    }
    let clamp = |l: f64| l.clamp(0.0, 1.0);
    Ok([
        e.recompose(clamp).into_matrix(),
        e.recompose(|l| 1.0 - clamp(l)).into_matrix(),
        e.recompose(|l| (clamp(l) * (1.0 - clamp(l))).sqrt())
            .into_matrix(),
    ])
}

fn place(target: &mut CMatrix, block: &CMatrix, row: usize, col: usize) {
    let n = block.rows();
    for i in 0..n {
        for j in 0..n {
            target[(row * n + i, col * n + j)] = block[(i, j)];
        }
    }
}

pub fn embed_povm(a: &Povm, b: &Povm) -> Result<EmbeddedProjectorPair> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "POVM dimensions: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let n = a.dim();
    let build = |el: &HermitianMatrix, aux: usize| -> Result<HermitianMatrix> {
        let [top, rest, off] = dilation_blocks(el)?;
        let mut m = CMatrix::zeros(3 * n, 3 * n);
        place(&mut m, &top, 0, 0);
        place(&mut m, &off, 0, aux);
        place(&mut m, &off, aux, 0);
        place(&mut m, &rest, aux, aux);
        HermitianMatrix::new(m)
    };
    Ok(EmbeddedProjectorPair {
        dim_extended: 3 * n,
        p_blocks: a
            .elements()
            .iter()
            .map(|el| build(el, 1))
            .collect::<Result<_>>()?,
        q_blocks: b
            .elements()
            .iter()
            .map(|el| build(el, 2))
            .collect::<Result<_>>()?,
    })
}

/// `max_ρ Tr(A ρ) = λ_max(A)`.
pub fn oracle_max_state_prob(element: &HermitianMatrix) -> Result<f64> {
    Ok(eigh(element)?.max_value())
}

/// `max_ψ ⟨ψ|A|ψ⟩` over `n_samples` random pure states; never exceeds
/// [`oracle_max_state_prob`].
pub fn sampled_max_state_prob(
    element: &HermitianMatrix,
    n_samples: usize,
    rng: &mut RngStream,
) -> f64 {
    (0..n_samples)
        .map(|_| {
            let psi = random_pure_state(element.dim(), rng);
            element.as_matrix().expectation(psi.amplitudes()).re
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Lower estimate of `c_{A,B}` by maximizing `‖√A_i √B_j |Ψ⟩‖` over sampled
/// unit vectors. Chunks of samples draw from streams derived from `rng`'s
/// seed and stream id, and are reduced by maximum, so the result does not
/// depend on the thread count.
pub fn oracle_overlap(a: &Povm, b: &Povm, n_samples: usize, rng: &RngStream) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "POVM dimensions: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let n = a.dim();
    let sqrt_b: Vec<HermitianMatrix> = b
        .elements()
        .iter()
        .map(|e| psd_sqrt(e, PSD_CLIP_TOL))
        .collect::<Result<_>>()?;
    let mut products = Vec::with_capacity(a.len() * b.len());
    for ea in a.elements() {
        let sa = psd_sqrt(ea, PSD_CLIP_TOL)?;
        for sb in &sqrt_b {
            products.push(sa.as_matrix() * sb.as_matrix());
        }
    }
    let chunks = n_samples.div_ceil(ORACLE_CHUNK);
    let base = rng.stream_id() << 32;
    let best = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut local = RngStream::new(rng.seed(), base | chunk as u64);
            let count = ORACLE_CHUNK.min(n_samples - chunk * ORACLE_CHUNK);
            let mut best: f64 = 0.0;
            for _ in 0..count {
                let psi = random_pure_state(n, &mut local);
                for m in &products {
                    best = best.max(norm(&m.matvec(psi.amplitudes())));
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// Landau–Pollak for orthonormal bases computed from raw inner products:
/// `(arccos max_i |⟨a_i|ψ⟩| + arccos max_j |⟨b_j|ψ⟩|, arccos max_ij |⟨a_i|b_j⟩|)`.
/// Columns of `a_basis` and `b_basis` are the basis vectors.
pub fn classical_landau_pollak(
    a_basis: &CMatrix,
    b_basis: &CMatrix,
    psi: &PureState,
) -> (f64, f64) {
    let max_amp = |basis: &CMatrix| {
        (0..basis.cols())
            .map(|i| inner(&basis.column(i), psi.amplitudes()).norm())
            .fold(0.0, f64::max)
            .min(1.0)
    };
    let mut c: f64 = 0.0;
    for i in 0..a_basis.cols() {
        let ai = a_basis.column(i);
        for j in 0..b_basis.cols() {
            c = c.max(inner(&ai, &b_basis.column(j)).norm());
        }
    }
    (
        max_amp(a_basis).acos() + max_amp(b_basis).acos(),
        c.min(1.0).acos(),
    )
}

/// Uncertainties from the direct POVM route against the embedded-projector
/// route for one pure state.
#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingCheck {
    pub u_a_direct: f64,
    pub u_b_direct: f64,
    pub u_a_embedded: f64,
    pub u_b_embedded: f64,
    /// `max_i |⟨Φ|P_i|Φ⟩ − ⟨Ψ|A_i|Ψ⟩|` over both sets.
    pub max_expectation_gap: f64,
    /// Largest mismatch between `|⟨Φ|P_iQ_j|Φ⟩| / (‖P_iΦ‖‖Q_jΦ‖)` and
    /// `|⟨Ψ|A_iB_j|Ψ⟩| / (‖√A_iΨ‖‖√B_jΨ‖)`.
    pub max_ratio_gap: f64,
    pub max_idempotency_defect: f64,
}

impl EmbeddingCheck {
    pub fn max_uncertainty_gap(&self) -> f64 {
        (self.u_a_direct - self.u_a_embedded)
            .abs()
            .max((self.u_b_direct - self.u_b_embedded).abs())
    }
}

pub fn embedding_check(
    k: &MetricKernel,
    a: &Povm,
    b: &Povm,
    psi: &PureState,
) -> Result<EmbeddingCheck> {
    let emb = embed_povm(a, b)?;
    embedding_check_with(&emb, k, a, b, psi)
}

/// [`embedding_check`] with a precomputed embedding.
pub fn embedding_check_with(
    emb: &EmbeddedProjectorPair,
    k: &MetricKernel,
    a: &Povm,
    b: &Povm,
    psi: &PureState,
) -> Result<EmbeddingCheck> {
    let rho = psi.density();
    let direct_a = operator_probabilities(a.elements(), rho.matrix());
    let direct_b = operator_probabilities(b.elements(), rho.matrix());
    let phi = emb.embed_state(psi);
    let expect = |ps: &[HermitianMatrix]| -> Vec<f64> {
        ps.iter()
            .map(|p| p.as_matrix().expectation(&phi).re.clamp(0.0, 1.0))
            .collect()
    };
    let emb_a = expect(&emb.p_blocks);
    let emb_b = expect(&emb.q_blocks);
    let gap = |x: &[f64], y: &[f64]| {
        x.iter()
            .zip(y)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    };

    let sqrt_a: Vec<_> = a
        .elements()
        .iter()
        .map(|e| psd_sqrt(e, PSD_CLIP_TOL))
        .collect::<Result<_>>()?;
    let sqrt_b: Vec<_> = b
        .elements()
        .iter()
        .map(|e| psd_sqrt(e, PSD_CLIP_TOL))
        .collect::<Result<_>>()?;
    let mut max_ratio_gap: f64 = 0.0;
    for (i, p) in emb.p_blocks.iter().enumerate() {
        let p_phi = p.as_matrix().matvec(&phi);
        let sa_psi = sqrt_a[i].as_matrix().matvec(psi.amplitudes());
        for (j, q) in emb.q_blocks.iter().enumerate() {
            let q_phi = q.as_matrix().matvec(&phi);
            let sb_psi = sqrt_b[j].as_matrix().matvec(psi.amplitudes());
            let den_emb = norm(&p_phi) * norm(&q_phi);
            let den_dir = norm(&sa_psi) * norm(&sb_psi);
            if den_emb < 1e-6 || den_dir < 1e-6 {
                continue;
            }
            // ⟨Φ|P Q|Φ⟩ = ⟨PΦ|QΦ⟩
            let lhs = inner(&p_phi, &q_phi).norm() / den_emb;
            let ab = a.elements()[i].as_matrix() * b.elements()[j].as_matrix();
            let rhs = ab.expectation(psi.amplitudes()).norm() / den_dir;
            max_ratio_gap = max_ratio_gap.max((lhs - rhs).abs());
        }
    }

    Ok(EmbeddingCheck {
        u_a_direct: MaxProb::from_probabilities(&direct_a).uncertainty(k),
        u_b_direct: MaxProb::from_probabilities(&direct_b).uncertainty(k),
        u_a_embedded: MaxProb::from_probabilities(&emb_a).uncertainty(k),
        u_b_embedded: MaxProb::from_probabilities(&emb_b).uncertainty(k),
        max_expectation_gap: gap(&direct_a, &emb_a).max(gap(&direct_b, &emb_b)),
        max_ratio_gap,
        max_idempotency_defect: emb.max_idempotency_defect(),
    })
}

/// `A_i ⊗ I` for every element.
pub fn lift_povm(p: &Povm, aux_dim: usize) -> Result<Povm> {
    let id = CMatrix::identity(aux_dim);
    let elements = p
        .elements()
        .iter()
        .map(|e| HermitianMatrix::new(kron(e.as_matrix(), &id)?))
        .collect::<Result<_>>()?;
    Povm::new(elements)
}

/// The direct record for `(A, B, ρ)` next to the record for
/// `(A ⊗ I, B ⊗ I, |Φ'⟩⟨Φ'|)`.
#[derive(Clone, Debug)]
pub struct PurificationCheck {
    pub direct: TrialRecord,
    pub purified: TrialRecord,
    /// `‖Tr_aux|Φ'⟩⟨Φ'| − ρ‖` entrywise.
    pub reduction_error: f64,
}

impl PurificationCheck {
    pub fn max_uncertainty_gap(&self) -> f64 {
        (self.direct.u_a - self.purified.u_a)
            .abs()
            .max((self.direct.u_b - self.purified.u_b).abs())
    }

    pub fn bound_gap(&self) -> f64 {
        (self.direct.bound - self.purified.bound).abs()
    }
}

pub fn purification_check(
    k: &MetricKernel,
    pair: &PovmPair,
    rho: &DensityOperator,
) -> Result<PurificationCheck> {
    let n = pair.dim();
    let purified = purify(rho)?;
    let lifted = PovmPair::new(lift_povm(pair.a(), n)?, lift_povm(pair.b(), n)?)?;
    Ok(PurificationCheck {
        direct: pair.lpi_check(k, rho)?,
        purified: lifted.lpi_check(k, &purified.vector.density())?,
        reduction_error: purified.reduced().max_abs_diff(rho.matrix().as_matrix()),
    })
}

/// Both sides of the bound for operator sets that need not resolve the
/// identity: `(f(max_i ⟨Ψ|A_i|Ψ⟩) + f(max_j ⟨Ψ|B_j|Ψ⟩), f(c²))` with
/// `c = max_ij ‖√A_i √B_j‖`. `None` when either maximum vanishes.
pub fn operator_set_bound(
    k: &MetricKernel,
    a: &[HermitianMatrix],
    b: &[HermitianMatrix],
    psi: &PureState,
) -> Result<Option<(f64, f64)>> {
    let rho = psi.density();
    let (p_a, _) = argmax(&operator_probabilities(a, rho.matrix()));
    let (p_b, _) = argmax(&operator_probabilities(b, rho.matrix()));
    if p_a <= 0.0 || p_b <= 0.0 {
        return Ok(None);
    }
    let roots = |set: &[HermitianMatrix]| -> Result<Vec<HermitianMatrix>> {
        set.iter().map(|e| psd_sqrt(e, PSD_CLIP_TOL)).collect()
    };
    let (c, _) = crate::measure::overlap_from_roots(&roots(a)?, &roots(b)?)?;
    Ok(Some((k.eval(p_a) + k.eval(p_b), k.eval(c * c))))
}

/// `min_ij ‖P_iΨ‖ ‖Q_jΨ‖ c − |⟨Ψ|P_iQ_j|Ψ⟩|` with `c = max_ij ‖P_iQ_j‖`;
/// nonnegative by Cauchy–Schwarz and the definition of the norm.
pub fn cauchy_schwarz_gap(
    p: &[HermitianMatrix],
    q: &[HermitianMatrix],
    psi: &PureState,
) -> Result<f64> {
    let mut c: f64 = 0.0;
    for pi in p {
        for qj in q {
            c = c.max(op_norm(&(pi.as_matrix() * qj.as_matrix()))?);
        }
    }
    let mut gap = f64::INFINITY;
    for pi in p {
        let p_psi = pi.as_matrix().matvec(psi.amplitudes());
        for qj in q {
            let q_psi = qj.as_matrix().matvec(psi.amplitudes());
            let lhs = inner(&p_psi, &q_psi).norm();
            gap = gap.min(norm(&p_psi) * norm(&q_psi) * c - lhs);
        }
    }
    Ok(gap)
}
