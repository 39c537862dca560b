//! Small dense complex linear algebra.
//!
//! Just enough for steering vectors, rank-1 channels and the MUSIC
//! covariance: products, Kronecker/Hadamard products and a cyclic Jacobi
//! eigensolver for Hermitian matrices. Storage is row-major and every
//! operation checks shapes at its boundary.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use thiserror::Error;

/// Iteration cap for the Jacobi eigensolver, in full sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Off-diagonal Frobenius norm (relative to ‖A‖_F) at which Jacobi stops.
pub const JACOBI_TOL: f64 = 1e-12;
/// Tolerance used when checking that an input is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {op} of {lhs:?} and {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("Jacobi eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("empty or non-finite data")]
    InvalidData,
}

/// Dense complex column vector.
#[derive(Clone, PartialEq)]
pub struct CVector(Vec<Complex64>);

impl CVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self, LinalgError> {
        if entries.is_empty() || entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::InvalidData);
        }
        Ok(Self(entries))
    }

    /// Builds a vector without validation. Callers guarantee non-empty,
    /// finite entries.
    pub(crate) fn from_vec(entries: Vec<Complex64>) -> Self {
        debug_assert!(!entries.is_empty());
        Self(entries)
    }

    pub fn from_real(entries: &[f64]) -> Result<Self, LinalgError> {
        Self::new(entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); len.max(1)])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex64> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Returns the vector scaled to unit 2-norm; a zero vector is returned as is.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        self.scale(Complex64::new(1.0 / n, 0.0))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self(self.0.iter().map(|z| z * c).collect())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.iter().map(|z| z.conj()).collect())
    }

    /// Hermitian inner product `selfᴴ · other`.
    pub fn dot_h(&self, other: &CVector) -> Result<Complex64, LinalgError> {
        if self.len() != other.len() {
            return Err(LinalgError::Shape {
                op: "inner product",
                lhs: (self.len(), 1),
                rhs: (other.len(), 1),
            });
        }
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn sub(&self, other: &CVector) -> Result<Self, LinalgError> {
        if self.len() != other.len() {
            return Err(LinalgError::Shape {
                op: "subtraction",
                lhs: (self.len(), 1),
                rhs: (other.len(), 1),
            });
        }
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn kron(&self, other: &CVector) -> Self {
        let mut out = Vec::with_capacity(self.len() * other.len());
        for a in &self.0 {
            for b in &other.0 {
                out.push(a * b);
            }
        }
        Self(out)
    }

    pub fn hadamard(&self, other: &CVector) -> Result<Self, LinalgError> {
        if self.len() != other.len() {
            return Err(LinalgError::Shape {
                op: "hadamard",
                lhs: (self.len(), 1),
                rhs: (other.len(), 1),
            });
        }
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect()))
    }

    /// Column matrix view (len × 1).
    pub fn to_column(&self) -> CMatrix {
        CMatrix {
            rows: self.len(),
            cols: 1,
            data: self.0.clone(),
        }
    }

    /// Outer product `self · otherᴴ`.
    pub fn outer_h(&self, other: &CVector) -> CMatrix {
        let mut data = Vec::with_capacity(self.len() * other.len());
        for a in &self.0 {
            for b in &other.0 {
                data.push(a * b.conj());
            }
        }
        CMatrix {
            rows: self.len(),
            cols: other.len(),
            data,
        }
    }
}

impl fmt::Debug for CVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl Index<usize> for CVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::InvalidData);
        }
        if rows * cols != data.len() {
            return Err(LinalgError::Shape {
                op: "construction",
                lhs: (rows, cols),
                rhs: (data.len(), 1),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::InvalidData);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self, LinalgError> {
        Self::new(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> CVector {
        CVector((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, rhs: &CMatrix) -> Result<Self, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::Shape {
                op: "matmul",
                lhs: self.shape(),
                rhs: rhs.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &CVector) -> Result<CVector, LinalgError> {
        if self.cols != v.len() {
            return Err(LinalgError::Shape {
                op: "matvec",
                lhs: self.shape(),
                rhs: (v.len(), 1),
            });
        }
        Ok(CVector(
            (0..self.rows)
                .map(|i| {
                    self.data[i * self.cols..(i + 1) * self.cols]
                        .iter()
                        .zip(v.iter())
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect(),
        ))
    }

    /// Bilinear form `wᴴ · self · f`.
    pub fn sandwich(&self, w: &CVector, f: &CVector) -> Result<Complex64, LinalgError> {
        let hf = self.matvec(f)?;
        w.dot_h(&hf)
    }

    pub fn add(&self, rhs: &CMatrix) -> Result<Self, LinalgError> {
        self.zip_with(rhs, "addition", |a, b| a + b)
    }

    pub fn sub(&self, rhs: &CMatrix) -> Result<Self, LinalgError> {
        self.zip_with(rhs, "subtraction", |a, b| a - b)
    }

    pub fn hadamard(&self, rhs: &CMatrix) -> Result<Self, LinalgError> {
        self.zip_with(rhs, "hadamard", |a, b| a * b)
    }

    fn zip_with(
        &self,
        rhs: &CMatrix,
        op: &'static str,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self, LinalgError> {
        if self.shape() != rhs.shape() {
            return Err(LinalgError::Shape {
                op,
                lhs: self.shape(),
                rhs: rhs.shape(),
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn kron(&self, rhs: &CMatrix) -> Self {
        let rows = self.rows * rhs.rows;
        let cols = self.cols * rhs.cols;
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                for k in 0..rhs.rows {
                    for l in 0..rhs.cols {
                        out[(i * rhs.rows + k, j * rhs.cols + l)] = a * rhs[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Largest entrywise deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
    ///
    /// Eigenvalues come back in ascending order, with the matching
    /// orthonormal eigenvectors as the columns of the returned matrix.
    pub fn hermitian_eig(&self) -> Result<(Vec<f64>, CMatrix), LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare(self.rows, self.cols));
        }
        let n = self.rows;
        let scale = self.data.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        let defect = self.hermitian_defect();
        if defect > HERMITIAN_TOL * scale {
            return Err(LinalgError::NotHermitian(defect));
        }

        let mut a = self.clone();
        // Symmetrize so round-off in the input does not leak into the rotations.
        for i in 0..n {
            a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
            for j in i + 1..n {
                let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
                a[(i, j)] = avg;
                a[(j, i)] = avg.conj();
            }
        }
        let mut v = CMatrix::identity(n);
        let total = a.frobenius_norm();
        let threshold = JACOBI_TOL * if total > 0.0 { total } else { 1.0 };

        let mut converged = false;
        for _ in 0..JACOBI_MAX_SWEEPS {
            if a.off_diagonal_norm() <= threshold {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    a.jacobi_rotate(&mut v, p, q);
                }
            }
        }
        if !converged && a.off_diagonal_norm() > threshold {
            return Err(LinalgError::NoConvergence(JACOBI_MAX_SWEEPS));
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
        Ok((values, vectors))
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    s += self[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    }

    /// One complex Jacobi rotation annihilating the (p, q) entry.
    /// The unitary is J = D·R with D = diag(1, e^{-iφ}) on (p, q) making the
    /// pivot real, and R the classical real rotation.
    fn jacobi_rotate(&mut self, v: &mut CMatrix, p: usize, q: usize) {
        let apq = self[(p, q)];
        let mag = apq.norm();
        if mag == 0.0 {
            return;
        }
        let phase = apq / mag;
        let app = self[(p, p)].re;
        let aqq = self[(q, q)].re;
        let tau = (aqq - app) / (2.0 * mag);
        let t = if tau == 0.0 {
            1.0
        } else {
            tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
        };
        let c = 1.0 / (1.0 + t * t).sqrt();
        let s = t * c;
        let d = phase.conj();
        let j_pp = Complex64::new(c, 0.0);
        let j_pq = Complex64::new(s, 0.0);
        let j_qp = d * (-s);
        let j_qq = d * c;

        let n = self.rows;
        for k in 0..n {
            let akp = self[(k, p)];
            let akq = self[(k, q)];
            self[(k, p)] = akp * j_pp + akq * j_qp;
            self[(k, q)] = akp * j_pq + akq * j_qq;
        }
        for k in 0..n {
            let apk = self[(p, k)];
            let aqk = self[(q, k)];
            self[(p, k)] = j_pp.conj() * apk + j_qp.conj() * aqk;
            self[(q, k)] = j_pq.conj() * apk + j_qq.conj() * aqk;
        }
        self[(p, q)] = Complex64::new(0.0, 0.0);
        self[(q, p)] = Complex64::new(0.0, 0.0);
        self[(p, p)] = Complex64::new(self[(p, p)].re, 0.0);
        self[(q, q)] = Complex64::new(self[(q, q)].re, 0.0);

        for k in 0..n {
            let vkp = v[(k, p)];
            let vkq = v[(k, q)];
            v[(k, p)] = vkp * j_pp + vkq * j_qp;
            v[(k, q)] = vkp * j_pq + vkq * j_qq;
        }
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

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        a.shape() == b.shape()
            && a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn matmul_identity_and_zero() {
        let b = CMatrix::new(2, 2, vec![c(1.0, 2.0), c(3.0, 0.0), c(0.0, -1.0), c(5.0, 5.0)]).unwrap();
        assert_eq!(CMatrix::identity(2).matmul(&b).unwrap(), b);
        let z = b.matmul(&CMatrix::zeros(2, 3)).unwrap();
        assert!(z.as_slice().iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn matmul_hand_expansion() {
        let a = CMatrix::new(2, 2, vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let b = CMatrix::from_real(2, 1, &[1.0, 1.0]).unwrap();
        let p = a.matmul(&b).unwrap();
        assert_eq!(p.as_slice(), &[c(1.0, 1.0), c(1.0, 0.0)]);
    }

    #[test]
    fn matmul_shape_mismatch() {
        let a = CMatrix::zeros(2, 3);
        assert!(matches!(a.matmul(&CMatrix::zeros(2, 3)), Err(LinalgError::Shape { .. })));
    }

    #[test]
    fn kron_examples() {
        let b = CMatrix::new(2, 2, vec![c(1.0, 0.0), c(2.0, 1.0), c(3.0, 0.0), c(4.0, -1.0)]).unwrap();
        assert_eq!(CMatrix::identity(1).kron(&b), b);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let u = CMatrix::from_real(1, 2, &[h, h]).unwrap();
        let k = u.kron(&u);
        assert_eq!(k.shape(), (1, 4));
        assert!(k.as_slice().iter().all(|z| (z - c(0.5, 0.0)).norm() < 1e-15));

        let a = CVector::from_real(&[1.0, -1.0]).unwrap();
        let b = CVector::from_real(&[1.0, 1.0]).unwrap();
        assert_eq!(a.kron(&b), CVector::from_real(&[1.0, 1.0, -1.0, -1.0]).unwrap());
    }

    #[test]
    fn hadamard_examples() {
        let a = CMatrix::new(1, 2, vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let ones = CMatrix::from_real(1, 2, &[1.0, 1.0]).unwrap();
        assert_eq!(a.hadamard(&ones).unwrap(), a);
        assert!(a.hadamard(&CMatrix::zeros(1, 2)).unwrap().frobenius_norm() == 0.0);
        let jj = CMatrix::new(1, 2, vec![c(0.0, 1.0), c(0.0, 1.0)]).unwrap();
        assert_eq!(a.hadamard(&jj).unwrap().as_slice(), &[c(0.0, 1.0), c(-1.0, 0.0)]);
        assert!(a.hadamard(&CMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn eig_identity() {
        let (vals, _) = CMatrix::identity(4).hermitian_eig().unwrap();
        assert_eq!(vals, vec![1.0; 4]);
    }

    #[test]
    fn eig_diagonal_is_sorted() {
        let (vals, vecs) = CMatrix::from_diag(&[3.0, 1.0]).hermitian_eig().unwrap();
        assert_eq!(vals, vec![1.0, 3.0]);
        let perm = CMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(vecs, perm);
    }

    #[test]
    fn eig_two_by_two() {
        let a = CMatrix::from_real(2, 2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let (vals, _) = a.hermitian_eig().unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let a = CMatrix::from_real(2, 2, &[1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(matches!(a.hermitian_eig(), Err(LinalgError::NotHermitian(_))));
        assert!(matches!(CMatrix::zeros(2, 3).hermitian_eig(), Err(LinalgError::NotSquare(2, 3))));
    }

    #[test]
    fn construction_validates() {
        assert!(CMatrix::new(2, 2, vec![c(0.0, 0.0); 3]).is_err());
        assert!(CMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]).is_err());
        assert!(CVector::new(vec![]).is_err());
    }

    fn arb_matrix(rows: usize, cols: usize) -> impl Strategy<Value = CMatrix> {
        proptest::collection::vec((-2.0..2.0f64, -2.0..2.0f64), rows * cols).prop_map(move |v| {
            CMatrix::new(rows, cols, v.into_iter().map(|(r, i)| c(r, i)).collect()).unwrap()
        })
    }

    fn arb_hermitian() -> impl Strategy<Value = CMatrix> {
        (1usize..=16).prop_flat_map(|n| {
            arb_matrix(n, n).prop_map(|m| m.add(&m.adjoint()).unwrap())
        })
    }

    proptest! {
        #[test]
        fn kron_mixed_product(a in arb_matrix(2, 3), b in arb_matrix(3, 2), cm in arb_matrix(3, 2), d in arb_matrix(2, 3)) {
            let lhs = a.kron(&b).matmul(&cm.kron(&d)).unwrap();
            let rhs = a.matmul(&cm).unwrap().kron(&b.matmul(&d).unwrap());
            prop_assert!(close(&lhs, &rhs, 1e-10));
        }

        #[test]
        fn double_adjoint_is_exact(a in arb_matrix(3, 4)) {
            prop_assert_eq!(a.adjoint().adjoint(), a);
        }

        #[test]
        fn eig_reconstructs(a in arb_hermitian()) {
            let (vals, v) = a.hermitian_eig().unwrap();
            prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            let lambda = CMatrix::from_diag(&vals);
            let rec = v.matmul(&lambda).unwrap().matmul(&v.adjoint()).unwrap();
            let err = rec.sub(&a).unwrap().frobenius_norm() / a.frobenius_norm().max(1e-300);
            prop_assert!(err <= 1e-8, "reconstruction error {}", err);
            let gram = v.adjoint().matmul(&v).unwrap();
            prop_assert!(close(&gram, &CMatrix::identity(a.rows()), 1e-8));
        }
    }
}
