//! Dense complex matrices and the handful of Hermitian routines the bounds
//! are built from: eigendecomposition, PSD square root, operator norm,
//! Kronecker product and partial trace.
//!
//! Everything here works on small row-major matrices (dimensions of a few
//! dozen at most). The eigensolver is a cyclic complex Jacobi iteration with
//! a fixed sweep order, so identical inputs give bit-identical outputs.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default cap on the dimension produced by [`kron`].
pub const DEFAULT_KRON_CAP: usize = 4096;

/// Eigenvalues in `[-PSD_CLIP_TOL, 0)` are treated as roundoff and clipped to zero.
pub const PSD_CLIP_TOL: f64 = 1e-10;

const HERMITIAN_REL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 64;

/// A dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_real_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from real rows. Panics on ragged input.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == n_cols), "ragged rows");
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self {
            rows: n_rows,
            cols: n_cols,
            data,
        }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, cols);
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "ragged columns");
            for (i, &z) in col.iter().enumerate() {
                m[(i, j)] = z;
            }
        }
        m
    }

    /// `|v⟩⟨v|`.
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `⟨v|M|v⟩`.
    pub fn expectation(&self, v: &[Complex64]) -> Complex64 {
        inner(v, &self.matvec(v))
    }

    fn symmetrized(&self) -> Self {
        let n = self.rows;
        let mut out = self.clone();
        for i in 0..n {
            out[(i, i)] = Complex64::new(self[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let z = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
                out[(i, j)] = z;
                out[(j, i)] = z.conj();
            }
        }
        out
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>10.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// `⟨u|v⟩`, conjugate-linear in the first argument.
pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// A square matrix that is Hermitian up to roundoff. The stored entries are
/// exactly Hermitian: construction averages `H` with `H†`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Accepts `m` if `max|m - m†| ≤ 1e-12 · max|m|`.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        let deviation = m.max_abs_diff(&m.adjoint());
        if deviation > HERMITIAN_REL_TOL * m.max_abs() {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self(m.symmetrized()))
    }

    pub fn identity(n: usize) -> Self {
        Self(CMatrix::identity(n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMatrix::zeros(n, n))
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        Self(CMatrix::from_real_diag(diag))
    }

    /// `|v⟩⟨v|`, Hermitian by construction.
    pub fn projector(v: &[Complex64]) -> Self {
        Self(CMatrix::outer(v).symmetrized())
    }

    /// The Hermitian part `(m + m†)/2` of a square matrix, for products that
    /// are Hermitian in exact arithmetic.
    pub(crate) fn hermitian_part(m: &CMatrix) -> Self {
        debug_assert!(m.is_square());
        Self(m.symmetrized())
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn eigh(&self) -> Result<Eigh> {
        eigh(self)
    }

    /// `Tr(self · other)`, real for Hermitian arguments.
    pub fn trace_product(&self, other: &HermitianMatrix) -> f64 {
        let n = self.dim();
        assert_eq!(n, other.dim());
        let mut acc = 0.0;
        for i in 0..n {
            for k in 0..n {
                acc += (self.0[(i, k)] * other.0[(k, i)]).re;
            }
        }
        acc
    }
}

/// Spectral decomposition `H = V diag(λ) V†` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigh {
    /// Recomposes `V diag(g(λ)) V†`.
    pub fn recompose(&self, mut g: impl FnMut(f64) -> f64) -> HermitianMatrix {
        let n = self.values.len();
        let mapped: Vec<f64> = self.values.iter().map(|&l| g(l)).collect();
        let mut out = CMatrix::zeros(n, n);
        for (k, &w) in mapped.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)].conj();
                }
            }
        }
        HermitianMatrix(out.symmetrized())
    }

    pub fn max_value(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    pub fn min_value(&self) -> f64 {
        self.values[0]
    }
}

/// Hermitian eigendecomposition by cyclic Jacobi rotations.
pub fn eigh(h: &HermitianMatrix) -> Result<Eigh> {
    let n = h.dim();
    let mut a = h.0.clone();
    let mut v = CMatrix::identity(n);
    let fro = a.frobenius_norm();
    let target = f64::EPSILON * fro;

    let off_norm = |a: &CMatrix| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += a[(p, q)].norm_sqr();
            }
        }
        (2.0 * s).sqrt()
    };

    let mut converged = n == 1 || off_norm(&a) <= target;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Negligible against both diagonal entries: drop it.
                if r <= 0.5 * f64::EPSILON * (app.abs() * aqq.abs()).sqrt() && r < target {
                    a[(p, q)] = Complex64::new(0.0, 0.0);
                    a[(q, p)] = Complex64::new(0.0, 0.0);
                    continue;
                }
                rotated = true;
                let phase = apq / r;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let g_pp = Complex64::new(c, 0.0);
                let g_pq = Complex64::new(s, 0.0);
                let g_qp = -phase.conj() * s;
                let g_qq = phase.conj() * c;
                apply_rotation(&mut a, &mut v, p, q, [g_pp, g_pq, g_qp, g_qq]);
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(app - t * r, 0.0);
                a[(q, q)] = Complex64::new(aqq + t * r, 0.0);
            }
        }
        converged = !rotated || off_norm(&a) <= target;
    }
    if !converged {
        return Err(Error::ConvergenceFailure {
            sweeps,
            off_norm: off_norm(&a),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, dst)] = v[(i, src)];
        }
    }
    Ok(Eigh { values, vectors })
}

/// `A ← G† A G`, `V ← V G` where `G` is the identity except for the
/// `(p, q)` block `[[g_pp, g_pq], [g_qp, g_qq]]`.
fn apply_rotation(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize, g: [Complex64; 4]) {
    let [g_pp, g_pq, g_qp, g_qq] = g;
    let n = a.rows;
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * g_pp + akq * g_qp;
        a[(k, q)] = akp * g_pq + akq * g_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * g_pp + vkq * g_qp;
        v[(k, q)] = vkp * g_pq + vkq * g_qq;
    }
}

/// Square root of a PSD operator. Eigenvalues in `[-clip_tol, 0)` are
/// clipped to zero; anything more negative is rejected.
pub fn psd_sqrt(h: &HermitianMatrix, clip_tol: f64) -> Result<HermitianMatrix> {
    let e = eigh(h)?;
    let min = e.min_value();
    if min < -clip_tol {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: min,
        });
    }
    Ok(e.recompose(|l| l.max(0.0).sqrt()))
}

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> Result<f64> {
    let gram = HermitianMatrix::hermitian_part(&(&m.adjoint() * m));
    let e = eigh(&gram)?;
    Ok(e.max_value().max(0.0).sqrt())
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    kron_with_cap(a, b, DEFAULT_KRON_CAP)
}

pub fn kron_with_cap(a: &CMatrix, b: &CMatrix, cap: usize) -> Result<CMatrix> {
    let rows = a.rows.checked_mul(b.rows);
    let cols = a.cols.checked_mul(b.cols);
    let (rows, cols) = match (rows, cols) {
        (Some(r), Some(c)) if r <= cap && c <= cap => (r, c),
        (r, c) => {
            return Err(Error::DimensionOverflow {
                dim: r.unwrap_or(usize::MAX).max(c.unwrap_or(usize::MAX)),
                cap,
            })
        }
    };
    let mut out = CMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// Which tensor factor [`partial_trace`] removes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Traces out one factor of a bipartite operator on `C^{d1} ⊗ C^{d2}`.
///
/// `dim_keep` is the dimension of the surviving factor and `dim_trace` that
/// of the removed one, whichever side it sits on.
pub fn partial_trace(
    m: &CMatrix,
    dim_keep: usize,
    dim_trace: usize,
    traced: Subsystem,
) -> Result<CMatrix> {
    let dim = dim_keep.checked_mul(dim_trace);
    if !m.is_square() || dim != Some(m.rows) || dim_keep == 0 {
        return Err(Error::DimensionMismatch(format!(
            "a {}x{} operator does not factor as {dim_keep} x {dim_trace}",
            m.rows, m.cols
        )));
    }
    let mut out = CMatrix::zeros(dim_keep, dim_keep);
    for i in 0..dim_keep {
        for j in 0..dim_keep {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..dim_trace {
                acc += match traced {
                    Subsystem::Second => m[(i * dim_trace + k, j * dim_trace + k)],
                    Subsystem::First => m[(k * dim_keep + i, k * dim_keep + j)],
                };
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn herm(rows: &[&[f64]]) -> HermitianMatrix {
        HermitianMatrix::new(CMatrix::from_real_rows(rows)).unwrap()
    }

    fn reconstruct(e: &Eigh) -> CMatrix {
        e.recompose(|l| l).into_matrix()
    }

    #[test]
    fn eigh_diagonal() {
        let e = eigh(&HermitianMatrix::from_real_diag(&[3.0, 1.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 3.0]);
        // permuted identity columns
        assert!((e.vectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
        assert!((e.vectors[(0, 1)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigh_real_symmetric() {
        // λ² - 4λ + 3 = 0
        let e = eigh(&herm(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eigh_identity() {
        let e = eigh(&HermitianMatrix::identity(4)).unwrap();
        assert!(e.values.iter().all(|&l| l == 1.0));
        let vtv = &e.vectors.adjoint() * &e.vectors;
        assert!(vtv.max_abs_diff(&CMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn eigh_complex_pauli_y() {
        let y = HermitianMatrix::new(
            CMatrix::new(2, 2, vec![c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]).unwrap(),
        )
        .unwrap();
        let e = eigh(&y).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        assert!(reconstruct(&e).max_abs_diff(y.as_matrix()) < 1e-14);
    }

    #[test]
    fn eigh_is_deterministic() {
        let m = CMatrix::new(
            3,
            3,
            vec![
                c(1.0, 0.0),
                c(0.3, 0.2),
                c(-0.1, 0.5),
                c(0.3, -0.2),
                c(0.7, 0.0),
                c(0.25, 0.0),
                c(-0.1, -0.5),
                c(0.25, 0.0),
                c(-0.4, 0.0),
            ],
        )
        .unwrap();
        let h = HermitianMatrix::new(m).unwrap();
        let e1 = eigh(&h).unwrap();
        let e2 = eigh(&h).unwrap();
        assert_eq!(e1.values, e2.values);
        assert_eq!(e1.vectors, e2.vectors);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_real_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(matches!(
            HermitianMatrix::new(m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn rejects_non_finite_and_ragged() {
        assert!(matches!(
            CMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]),
            Err(Error::NonFinite)
        ));
        assert!(CMatrix::new(2, 2, vec![c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn psd_sqrt_examples() {
        let r = psd_sqrt(&HermitianMatrix::from_real_diag(&[4.0, 9.0]), PSD_CLIP_TOL).unwrap();
        assert!(
            r.as_matrix()
                .max_abs_diff(&CMatrix::from_real_diag(&[2.0, 3.0]))
                < 1e-14
        );

        let s3 = 3f64.sqrt();
        let expected = CMatrix::from_real_rows(&[
            &[(s3 + 1.0) / 2.0, (s3 - 1.0) / 2.0],
            &[(s3 - 1.0) / 2.0, (s3 + 1.0) / 2.0],
        ]);
        let r = psd_sqrt(&herm(&[&[2.0, 1.0], &[1.0, 2.0]]), PSD_CLIP_TOL).unwrap();
        assert!(r.as_matrix().max_abs_diff(&expected) < 1e-14);
        assert!((r.as_matrix()[(0, 0)].re - 1.3660254037844386).abs() < 1e-12);

        let z = psd_sqrt(&HermitianMatrix::zeros(3), PSD_CLIP_TOL).unwrap();
        assert_eq!(z.as_matrix().max_abs(), 0.0);
    }

    #[test]
    fn psd_sqrt_clips_and_rejects() {
        let r = psd_sqrt(
            &HermitianMatrix::from_real_diag(&[-1e-12, 1.0]),
            PSD_CLIP_TOL,
        )
        .unwrap();
        assert_eq!(r.as_matrix()[(0, 0)].re, 0.0);
        let err = psd_sqrt(
            &HermitianMatrix::from_real_diag(&[-1e-3, 1.0]),
            PSD_CLIP_TOL,
        );
        assert!(matches!(err, Err(Error::NotPositiveSemidefinite { .. })));
    }

    #[test]
    fn op_norm_examples() {
        assert!((op_norm(&CMatrix::identity(5)).unwrap() - 1.0).abs() < 1e-15);
        let nil = CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!((op_norm(&nil).unwrap() - 1.0).abs() < 1e-15);
        let m = CMatrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        assert!((op_norm(&m).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn kron_examples() {
        let k = kron(&CMatrix::identity(2), &CMatrix::identity(3)).unwrap();
        assert_eq!(k, CMatrix::identity(6));

        let k = kron(&CMatrix::from_real_diag(&[1.0, 0.0]), &CMatrix::identity(2)).unwrap();
        assert_eq!(k, CMatrix::from_real_diag(&[1.0, 1.0, 0.0, 0.0]));

        let x = CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let k = kron(&x, &CMatrix::from_real_diag(&[2.0, 5.0])).unwrap();
        let expected = CMatrix::from_real_rows(&[
            &[0.0, 0.0, 2.0, 0.0],
            &[0.0, 0.0, 0.0, 5.0],
            &[2.0, 0.0, 0.0, 0.0],
            &[0.0, 5.0, 0.0, 0.0],
        ]);
        assert_eq!(k, expected);
    }

    #[test]
    fn kron_cap() {
        let a = CMatrix::identity(10);
        assert!(matches!(
            kron_with_cap(&a, &a, 64),
            Err(Error::DimensionOverflow { dim: 100, cap: 64 })
        ));
    }

    #[test]
    fn partial_trace_examples() {
        let r = partial_trace(&CMatrix::identity(6), 2, 3, Subsystem::Second).unwrap();
        assert_eq!(r, CMatrix::identity(2).scale(c(3.0, 0.0)));

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)];
        let rho = CMatrix::outer(&bell);
        for side in [Subsystem::First, Subsystem::Second] {
            let r = partial_trace(&rho, 2, 2, side).unwrap();
            assert!(r.max_abs_diff(&CMatrix::identity(2).scale(c(0.5, 0.0))) < 1e-15);
        }

        assert!(matches!(
            partial_trace(&CMatrix::identity(6), 4, 2, Subsystem::First),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn partial_trace_of_product_state() {
        let rho_a = herm(&[&[0.7, 0.2], &[0.2, 0.3]]).into_matrix();
        let rho_b = CMatrix::from_real_diag(&[0.5, 0.25, 0.25]);
        let joint = kron(&rho_a, &rho_b).unwrap();
        let r = partial_trace(&joint, 2, 3, Subsystem::Second).unwrap();
        assert!(r.max_abs_diff(&rho_a) < 1e-15);
        let r = partial_trace(&joint, 3, 2, Subsystem::First).unwrap();
        assert!(r.max_abs_diff(&rho_b) < 1e-15);
    }

    fn arb_matrix(max_dim: usize) -> impl Strategy<Value = CMatrix> {
        (1..=max_dim, 1..=max_dim).prop_flat_map(|(r, cols)| {
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), r * cols).prop_map(move |v| {
                CMatrix::new(r, cols, v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap()
            })
        })
    }

    fn arb_square(max_dim: usize) -> impl Strategy<Value = CMatrix> {
        (1..=max_dim).prop_flat_map(|n| {
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
                CMatrix::new(n, n, v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap()
            })
        })
    }

    fn hermitian_from(m: &CMatrix) -> HermitianMatrix {
        HermitianMatrix::new((m + &m.adjoint()).scale(c(0.5, 0.0))).unwrap()
    }

    proptest! {
        #[test]
        fn eigh_round_trip(m in arb_square(12)) {
            let h = hermitian_from(&m);
            let e = eigh(&h).unwrap();
            let tol = 1e-10 * (1.0 + h.as_matrix().max_abs());
            prop_assert!(reconstruct(&e).max_abs_diff(h.as_matrix()) <= tol);
            let n = h.dim();
            let vtv = &e.vectors.adjoint() * &e.vectors;
            prop_assert!(vtv.max_abs_diff(&CMatrix::identity(n)) <= 1e-10);
            prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn psd_sqrt_squares_back(m in arb_square(16)) {
            let h = HermitianMatrix::new(&m * &m.adjoint()).unwrap();
            let r = psd_sqrt(&h, PSD_CLIP_TOL).unwrap();
            let sq = r.as_matrix() * r.as_matrix();
            let tol = 1e-8 * (1.0 + h.as_matrix().max_abs());
            prop_assert!(sq.max_abs_diff(h.as_matrix()) <= tol);
            prop_assert!(eigh(&r).unwrap().min_value() >= -1e-10);
        }

        #[test]
        fn op_norm_adjoint_symmetric(m in arb_matrix(8)) {
            let a = op_norm(&m).unwrap();
            let b = op_norm(&m.adjoint()).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
            prop_assert!(a >= 0.0);
        }

        #[test]
        fn op_norm_submultiplicative(a in arb_square(6), seed in 0u64..1000) {
            let n = a.rows();
            let b = CMatrix::new(n, n, (0..n * n)
                .map(|k| c(((k as u64 * 7919 + seed) % 97) as f64 / 97.0 - 0.5, ((k as u64 * 104729 + seed) % 89) as f64 / 89.0 - 0.5))
                .collect()).unwrap();
            let ab = op_norm(&(&a * &b)).unwrap();
            prop_assert!(ab <= op_norm(&a).unwrap() * op_norm(&b).unwrap() + 1e-10);
        }

        #[test]
        fn partial_trace_of_kron(x in arb_square(4), y in arb_square(4)) {
            let (dx, dy) = (x.rows(), y.rows());
            let k = kron(&x, &y).unwrap();
            let r = partial_trace(&k, dx, dy, Subsystem::Second).unwrap();
            prop_assert!(r.max_abs_diff(&x.scale(y.trace())) <= 1e-12);
            let r = partial_trace(&k, dy, dx, Subsystem::First).unwrap();
            prop_assert!(r.max_abs_diff(&y.scale(x.trace())) <= 1e-12);
            prop_assert!((r.trace() - k.trace()).norm() <= 1e-12);
        }
    }
}
