//! Random states, unitaries and POVMs.
//!
//! Every generator takes an explicit [`RngStream`]; there is no global
//! generator. A stream is a ChaCha20 keystream addressed by `(seed,
//! stream_id)`, so concurrent trials that each own a stream id reproduce
//! the same draws regardless of scheduling.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{self, CMatrix, HermitianMatrix};
use crate::measure::{DensityOperator, Povm};

/// A reproducible random stream addressed by `(seed, stream_id)`.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Standard complex normal: `E|z|² = 1`.
    pub fn complex_gaussian(&mut self) -> Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(self.gaussian() * s, self.gaussian() * s)
    }

    pub fn phase(&mut self) -> Complex64 {
        Complex64::from_polar(1.0, TAU * self.uniform())
    }

    fn ginibre(&mut self, n: usize) -> CMatrix {
        let data = (0..n * n).map(|_| self.complex_gaussian()).collect();
        CMatrix::new(n, n, data).expect("gaussian entries are finite")
    }
}

/// A normalized vector of `C^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Accepts `amplitudes` if their squared norm is 1 within `1e-12`.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidState("empty state vector".into()));
        }
        let norm_sqr: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!(
                "squared norm {norm_sqr} is not 1"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = matcore::norm(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        for z in &mut amplitudes {
            *z /= norm;
        }
        Ok(Self { amplitudes })
    }

    /// The `k`-th computational basis vector.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator::from_pure(self)
    }
}

/// Haar-distributed unitary from the QR factorization of a Ginibre matrix.
///
/// The QR step is Gram-Schmidt with one reorthogonalization pass, which
/// leaves a positive real diagonal in `R`; that is the phase normalization
/// that makes `Q` exactly Haar.
pub fn haar_unitary(n: usize, rng: &mut RngStream) -> CMatrix {
    assert!(n >= 1, "unitary dimension must be positive");
    loop {
        if let Some(q) = orthonormalize_columns(&rng.ginibre(n)) {
            return q;
        }
    }
}

/// Orthonormalizes the columns of a square matrix; `None` if they are
/// numerically dependent.
fn orthonormalize_columns(m: &CMatrix) -> Option<CMatrix> {
    let n = m.rows();
    let mut q: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = m.column(j);
        let start = matcore::norm(&v);
        for _ in 0..2 {
            for u in &q {
                let proj = matcore::inner(u, &v);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
        }
        let r_jj = matcore::norm(&v);
        if r_jj <= 1e-10 * start || r_jj == 0.0 {
            return None;
        }
        for vi in &mut v {
            *vi /= r_jj;
        }
        q.push(v);
    }
    Some(CMatrix::from_columns(&q))
}

/// Uniformly distributed pure state: a normalized complex Gaussian vector
/// multiplied by independent uniform phases.
///
/// The phase factor does not change the distribution of an isotropic
/// complex Gaussian direction, but the draws are kept so the recipe is
/// reproduced literally.
pub fn random_pure_state(n: usize, rng: &mut RngStream) -> PureState {
    assert!(n >= 1, "state dimension must be positive");
    loop {
        let v: Vec<Complex64> = (0..n).map(|_| rng.complex_gaussian()).collect();
        let norm = matcore::norm(&v);
        if norm == 0.0 {
            continue;
        }
        let amplitudes = v.into_iter().map(|z| rng.phase() * z / norm).collect();
        return PureState { amplitudes };
    }
}

/// Mixed-state ensembles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixedStateMethod {
    /// Haar eigenbasis with uniform, renormalized weights.
    #[default]
    Spectral,
    /// `M M† / Tr(M M†)` for a complex Gaussian `M`.
    Wishart,
}

impl std::str::FromStr for MixedStateMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(Self::Spectral),
            "wishart" => Ok(Self::Wishart),
            other => Err(Error::ConfigInvalid(format!(
                "unknown mixed-state method `{other}`"
            ))),
        }
    }
}

pub fn random_mixed_state(
    n: usize,
    method: MixedStateMethod,
    rng: &mut RngStream,
) -> DensityOperator {
    assert!(n >= 1, "state dimension must be positive");
    match method {
        MixedStateMethod::Spectral => {
            let u = haar_unitary(n, rng);
            let weights: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
            mixed_state_from_spectrum(&u, &weights)
        }
        MixedStateMethod::Wishart => {
            let m = rng.ginibre(n);
            let mm = &m * &m.adjoint();
            let tr = mm.trace().re;
            let rho = HermitianMatrix::hermitian_part(&mm.scale(Complex64::new(1.0 / tr, 0.0)));
            DensityOperator::new(rho).expect("Wishart construction yields a density operator")
        }
    }
}

/// `ρ = Σ_m α_m |u_m⟩⟨u_m|` with `α` the normalized `weights` and `u_m` the
/// columns of `u`. Equal weights give `I/n`.
pub fn mixed_state_from_spectrum(u: &CMatrix, weights: &[f64]) -> DensityOperator {
    let n = u.rows();
    assert_eq!(weights.len(), n, "one weight per basis vector");
    assert!(
        weights.iter().all(|&w| w >= 0.0),
        "weights must be nonnegative"
    );
    let total: f64 = weights.iter().sum();
    assert!(total > 0.0, "weights must not all vanish");
    // ρ = (U √α)(U √α)†
    let mut scaled = u.clone();
    for j in 0..n {
        let s = (weights[j] / total).sqrt();
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    let rho = HermitianMatrix::hermitian_part(&(&scaled * &scaled.adjoint()));
    DensityOperator::new(rho).expect("spectral construction yields a density operator")
}

/// Random POVM from the recursive construction
/// `A_i = R_i U_i Δ_i U_i† R_i†`, `R_{i+1} = R_i U_i √(I - Δ_i)`, with the
/// last element `R U (I - Δ) U† R†` closing the resolution of identity.
pub fn random_povm(n: usize, n_outcomes: usize, rng: &mut RngStream) -> Povm {
    assert!(n >= 1, "dimension must be positive");
    assert!(n_outcomes >= 2, "a random POVM needs at least two outcomes");
    let mut unitaries = Vec::with_capacity(n_outcomes - 1);
    let mut deltas = Vec::with_capacity(n_outcomes - 1);
    for _ in 0..n_outcomes - 1 {
        unitaries.push(haar_unitary(n, rng));
        deltas.push((0..n).map(|_| rng.uniform()).collect::<Vec<f64>>());
    }
    povm_from_factors(&unitaries, &deltas)
}

/// The deterministic core of [`random_povm`]: builds `unitaries.len() + 1`
/// elements from the given unitaries `U_i` and diagonals `Δ_i`, whose
/// entries must lie in `[0, 1]`.
pub fn povm_from_factors(unitaries: &[CMatrix], deltas: &[Vec<f64>]) -> Povm {
    assert!(!unitaries.is_empty());
    assert_eq!(unitaries.len(), deltas.len());
    let n = unitaries[0].rows();
    let mut r = CMatrix::identity(n);
    let mut elements = Vec::with_capacity(unitaries.len() + 1);
    let last = unitaries.len() - 1;
    for (i, (u, delta)) in unitaries.iter().zip(deltas).enumerate() {
        assert!(delta.iter().all(|d| (0.0..=1.0).contains(d)));
        let k = &r * u;
        // A = (K √Δ)(K √Δ)†, PSD up to roundoff by construction.
        let gram_of = |weights: &dyn Fn(f64) -> f64| {
            let mut m = k.clone();
            for j in 0..n {
                let s = weights(delta[j]);
                for row in 0..n {
                    m[(row, j)] *= s;
                }
            }
            m
        };
        let half = gram_of(&|d: f64| d.sqrt());
        elements.push(HermitianMatrix::hermitian_part(&(&half * &half.adjoint())));
        let rest = gram_of(&|d: f64| (1.0 - d).sqrt());
        if i == last {
            elements.push(HermitianMatrix::hermitian_part(&(&rest * &rest.adjoint())));
        } else {
            r = rest;
        }
    }
    Povm::new(elements).expect("recursive construction resolves the identity")
}

/// Rank-one projectors onto the columns of a Haar unitary.
pub fn random_pvm(n: usize, rng: &mut RngStream) -> Povm {
    pvm_from_unitary(&haar_unitary(n, rng))
}

/// Rank-one projectors `|u_i⟩⟨u_i|` onto the columns of `u`.
pub fn pvm_from_unitary(u: &CMatrix) -> Povm {
    let elements = (0..u.cols())
        .map(|j| HermitianMatrix::projector(&u.column(j)))
        .collect();
    Povm::new(elements).expect("columns of a unitary form a PVM")
}
