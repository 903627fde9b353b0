//! Small dense complex linear algebra.
//!
//! Only what the beamformer update needs: a cyclic Jacobi eigensolver for
//! Hermitian matrices and a Cholesky-based positive-definite solve. Matrices
//! here are tiny (one row per transmit antenna), so everything is stored
//! row-major in a flat `Vec` and no blocking is attempted.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex column vector.
pub type CVector = Vec<Complex64>;

/// Tolerance for the Hermitian symmetry check.
pub const HERMITIAN_TOL: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 64;

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from row slices. Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            assert_eq!(r.len(), dim, "CMatrix::from_rows: ragged input");
            data.extend_from_slice(r);
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Adds `alpha * v v^H` in place.
    pub fn add_outer(&mut self, alpha: f64, v: &[Complex64]) {
        debug_assert_eq!(v.len(), self.dim);
        for r in 0..self.dim {
            let vr = v[r] * alpha;
            for c in 0..self.dim {
                self.data[r * self.dim + c] += vr * v[c].conj();
            }
        }
    }

    /// Adds `shift` to every diagonal entry.
    pub fn add_diag(&mut self, shift: f64) {
        for i in 0..self.dim {
            self.data[i * self.dim + i] += shift;
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> CVector {
        (0..self.dim)
            .map(|r| {
                self.data[r * self.dim..(r + 1) * self.dim]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self[(r, k)];
                for c in 0..n {
                    out.data[r * n + c] += a * other[(k, c)];
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMatrix {
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn column(&self, c: usize) -> CVector {
        (0..self.dim).map(|r| self[(r, c)]).collect()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }
}

/// A matrix that has been checked to be Hermitian within [`HERMITIAN_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Validates `m`; the error names the first offending entry.
    pub fn new(m: CMatrix) -> Result<Self> {
        let n = m.dim();
        if n == 0 {
            return Err(Error::Validation {
                row: 0,
                col: 0,
                reason: "matrix dimension must be positive".into(),
            });
        }
        for r in 0..n {
            let d = m[(r, r)];
            if !d.re.is_finite() || !d.im.is_finite() {
                return Err(Error::Validation {
                    row: r,
                    col: r,
                    reason: "non-finite entry".into(),
                });
            }
            if d.im.abs() > HERMITIAN_TOL {
                return Err(Error::Validation {
                    row: r,
                    col: r,
                    reason: format!("diagonal has imaginary part {:e}", d.im),
                });
            }
            for c in (r + 1)..n {
                let gap = (m[(r, c)] - m[(c, r)].conj()).norm();
                if !gap.is_finite() || gap > HERMITIAN_TOL {
                    return Err(Error::Validation {
                        row: r,
                        col: c,
                        reason: format!("entry differs from conjugate of ({c}, {r}) by {gap:e}"),
                    });
                }
            }
        }
        Ok(Self(m))
    }

    /// Wraps a matrix that is Hermitian by construction (e.g. a sum of outer
    /// products plus a real diagonal). Only checked in debug builds.
    pub(crate) fn new_unchecked(m: CMatrix) -> Self {
        debug_assert!(Self::new(m.clone()).is_ok());
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// Returns `self + shift * I`.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut m = self.0.clone();
        m.add_diag(shift);
        Self(m)
    }
}

/// Eigendecomposition `A = Φ diag(values) Φ^H` with ascending values.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors.
    pub vectors: CMatrix,
}

impl EigenPair {
    /// `Φ diag(values) Φ^H`.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.values.len();
        let mut out = CMatrix::zeros(n);
        for (k, &lam) in self.values.iter().enumerate() {
            out.add_outer(lam, &self.vectors.column(k));
        }
        out
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Each rotation first removes the phase of the pivot `a_pq`, then applies a
/// real Givens rotation that annihilates it.
pub fn eig_hermitian(a: &HermitianMatrix) -> EigenPair {
    let n = a.dim();
    let mut m = a.matrix().clone();
    let mut v = CMatrix::identity(n);

    let scale = m.frobenius_norm();
    if n > 1 && scale > 0.0 {
        let threshold = (f64::EPSILON * scale).powi(2);
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|r| ((r + 1)..n).map(move |c| (r, c)))
                .map(|(r, c)| m[(r, c)].norm_sqr())
                .sum();
            if off <= threshold {
                break;
            }
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    jacobi_rotate(&mut m, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&x, &y| diag[x].total_cmp(&diag[y]));

    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = CMatrix::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, dst)] = v[(r, src)];
        }
    }
    EigenPair { values, vectors }
}

fn jacobi_rotate(m: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;

    // Phase factor e^{-i arg(a_pq)} makes the pivot real; then a real rotation.
    let phase = apq.conj() / mag;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // Combined unitary restricted to (p, q):
    // [v_pp v_pq; v_qp v_qq] = [c, s; -s·phase, c·phase]
    let vpp = Complex64::new(c, 0.0);
    let vpq = Complex64::new(s, 0.0);
    let vqp = phase * (-s);
    let vqq = phase * c;

    let n = m.dim();
    // M <- M V (columns p, q)
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = mkp * vpp + mkq * vqp;
        m[(k, q)] = mkp * vpq + mkq * vqq;
    }
    // M <- V^H M (rows p, q)
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = vpp.conj() * mpk + vqp.conj() * mqk;
        m[(q, k)] = vpq.conj() * mpk + vqq.conj() * mqk;
    }
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
    m[(p, p)].im = 0.0;
    m[(q, q)].im = 0.0;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * vpp + vkq * vqp;
        v[(k, q)] = vkp * vpq + vkq * vqq;
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L L^H`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: CMatrix,
}

impl Cholesky {
    pub fn factor(a: &HermitianMatrix) -> Result<Self> {
        let n = a.dim();
        let a = a.matrix();
        let mut l = CMatrix::zeros(n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > 0.0) {
                return Err(Error::SingularMatrix {
                    index: j,
                    pivot: "cholesky",
                    value: d,
                });
            }
            let ljj = d.sqrt();
            l[(j, j)] = Complex64::new(ljj, 0.0);
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    pub fn solve(&self, b: &[Complex64]) -> CVector {
        let n = self.l.dim();
        assert_eq!(b.len(), n, "Cholesky::solve: dimension mismatch");
        // L y = b
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)].re;
        }
        // L^H x = y
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)].conj() * x[k];
            }
            x[i] = s / self.l[(i, i)].re;
        }
        x
    }
}

/// Solves `A x = b` for positive-definite `A`.
pub fn solve_pd(a: &HermitianMatrix, b: &[Complex64]) -> Result<CVector> {
    if b.len() != a.dim() {
        return Err(Error::Index(format!(
            "right-hand side has length {}, matrix has dimension {}",
            b.len(),
            a.dim()
        )));
    }
    Ok(Cholesky::factor(a)?.solve(b))
}

pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `a^H b`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
        let mut m = CMatrix::zeros(n);
        for r in 0..n {
            m[(r, r)] = c(rng.random_range(-2.0..2.0), 0.0);
            for col in (r + 1)..n {
                let z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                m[(r, col)] = z;
                m[(col, r)] = z.conj();
            }
        }
        HermitianMatrix::new(m).unwrap()
    }

    fn random_pd(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
        let mut m = CMatrix::zeros(n);
        for _ in 0..n + 2 {
            let v: CVector = (0..n)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            m.add_outer(1.0, &v);
        }
        m.add_diag(0.1);
        HermitianMatrix::new(m).unwrap()
    }

    fn max_dev_from_identity(m: &CMatrix) -> f64 {
        let n = m.dim();
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for col in 0..n {
                let target = if r == col { 1.0 } else { 0.0 };
                worst = worst.max((m[(r, col)] - target).norm());
            }
        }
        worst
    }

    #[test]
    fn eig_identity() {
        let e = eig_hermitian(&HermitianMatrix::new(CMatrix::identity(2)).unwrap());
        assert_eq!(e.values, vec![1.0, 1.0]);
        assert!(max_dev_from_identity(&e.vectors.adjoint().mul(&e.vectors)) <= 1e-12);
    }

    #[test]
    fn eig_diagonal() {
        let e = eig_hermitian(&HermitianMatrix::new(CMatrix::from_diag(&[7.0, 3.0])).unwrap());
        assert_eq!(e.values, vec![3.0, 7.0]);
        // Columns are the identity columns, reordered ascending.
        assert!((e.vectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
        assert!((e.vectors[(0, 1)].norm() - 1.0).abs() < 1e-15);

        let e = eig_hermitian(&HermitianMatrix::new(CMatrix::from_diag(&[3.0, 7.0])).unwrap());
        assert_eq!(e.values, vec![3.0, 7.0]);
        assert!(max_dev_from_identity(&e.vectors) <= 0.0);
    }

    #[test]
    fn eig_random_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 3, 4, 8, 16] {
            let a = random_hermitian(n, &mut rng);
            let e = eig_hermitian(&a);
            let mut diff = e.reconstruct();
            for r in 0..n {
                for col in 0..n {
                    diff[(r, col)] -= a.matrix()[(r, col)];
                }
            }
            let rel = diff.frobenius_norm() / a.matrix().frobenius_norm();
            assert!(rel <= 1e-9, "n={n} residual {rel:e}");
            assert!(max_dev_from_identity(&e.vectors.adjoint().mul(&e.vectors)) <= 1e-9);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let mut m = CMatrix::identity(3);
        m[(0, 2)] = c(0.5, 0.5);
        m[(2, 0)] = c(0.5, 0.5);
        match HermitianMatrix::new(m) {
            Err(Error::Validation { row, col, .. }) => assert_eq!((row, col), (0, 2)),
            other => panic!("expected validation error, got {other:?}"),
        }
        let mut m = CMatrix::identity(2);
        m[(1, 1)] = c(1.0, 1e-6);
        assert!(matches!(
            HermitianMatrix::new(m),
            Err(Error::Validation { row: 1, col: 1, .. })
        ));
    }

    #[test]
    fn solve_pd_identity() {
        let b = vec![c(1.0, 0.0), c(0.0, 2.0), c(-1.0, 0.0)];
        let x = solve_pd(&HermitianMatrix::new(CMatrix::identity(3)).unwrap(), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn solve_pd_diagonal() {
        let a = HermitianMatrix::new(CMatrix::from_diag(&[2.0, 4.0])).unwrap();
        let x = solve_pd(&a, &[c(2.0, 0.0), c(4.0, 0.0)]).unwrap();
        for xi in x {
            assert!((xi - c(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn solve_pd_random_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 4, 8, 32] {
            let a = random_pd(n, &mut rng);
            let b: CVector = (0..n)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let x = solve_pd(&a, &b).unwrap();
            let ax = a.matrix().mul_vec(&x);
            let res: f64 = ax.iter().zip(&b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
            assert!(res <= 1e-9 * norm_sqr(&b).sqrt(), "n={n} residual {res:e}");
        }
    }

    #[test]
    fn solve_pd_rejects_indefinite() {
        let a = HermitianMatrix::new(CMatrix::from_diag(&[1.0, 0.0])).unwrap();
        assert!(matches!(
            solve_pd(&a, &[c(1.0, 0.0), c(1.0, 0.0)]),
            Err(Error::SingularMatrix { index: 1, .. })
        ));
        let a = HermitianMatrix::new(CMatrix::from_diag(&[1.0, -3.0])).unwrap();
        assert!(solve_pd(&a, &[c(1.0, 0.0), c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn solve_agrees_with_eigen_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2, 3, 6] {
            let a = random_pd(n, &mut rng);
            let b: CVector = (0..n)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let x = solve_pd(&a, &b).unwrap();
            let e = eig_hermitian(&a);
            // x = Φ Λ^{-1} Φ^H b
            let mut y = vec![c(0.0, 0.0); n];
            for k in 0..n {
                let coef = inner(&e.vectors.column(k), &b) / e.values[k];
                for r in 0..n {
                    y[r] += e.vectors[(r, k)] * coef;
                }
            }
            let diff: f64 = x.iter().zip(&y).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
            assert!(diff <= 1e-8 * norm_sqr(&x).sqrt());
        }
    }

    #[test]
    fn eigenvalues_shift_with_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_hermitian(5, &mut rng);
        let base = eig_hermitian(&a).values;
        for shift in [0.0, 0.5, 10.0] {
            let shifted = eig_hermitian(&a.shifted(shift)).values;
            for (x, y) in base.iter().zip(&shifted) {
                assert!((x + shift - y).abs() <= 1e-10);
            }
        }
    }
}
