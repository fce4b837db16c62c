//! Small dense complex matrices.
//!
//! Everything here is sized for genus at most 4: period matrices are 4×4 and
//! the largest Hermitian form lives on the 10 independent coordinates of
//! `H_4`. Partial-pivoting LU and cyclic Jacobi are exact enough at this size
//! and keep the crate free of a BLAS dependency.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Pivots below this magnitude are treated as exact zeros.
pub const SINGULAR_PIVOT: f64 = 1e-300;

/// Largest dimension accepted by [`lu_det_inverse`].
pub const MAX_LU_DIM: usize = 32;

/// Largest dimension accepted by the Hermitian eigensolver.
pub const MAX_EIGEN_DIM: usize = 16;

const JACOBI_THRESHOLD: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(
            n,
            n,
            |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) },
        )
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        Self::new(rows, cols, values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { C64::new(0.0, 0.0) })
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

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn re(&self) -> Self {
        self.map(|z| C64::new(z.re, 0.0))
    }

    pub fn im(&self) -> Self {
        self.map(|z| C64::new(z.im, 0.0))
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if self.cols != v.len() {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect())
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows.min(self.cols) {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).norm());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("dimension mismatch in matrix product")
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Complex symmetric matrix; only the lower triangle is stored, so
/// `A_ij == A_ji` holds exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    lower: Vec<C64>,
}

impl SymmetricMatrix {
    fn offset(i: usize, j: usize) -> usize {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        hi * (hi + 1) / 2 + lo
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            lower: vec![C64::new(0.0, 0.0); n * (n + 1) / 2],
        }
    }

    /// Builds from `f(i, j)` evaluated for `i >= j` only.
    pub fn from_lower_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut lower = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                lower.push(f(i, j));
            }
        }
        Self { n, lower }
    }

    /// Row-major lower triangle: `(0,0), (1,0), (1,1), (2,0), ...`.
    pub fn from_lower(n: usize, lower: Vec<C64>) -> Result<Self> {
        if lower.len() != n * (n + 1) / 2 {
            return Err(Error::Dimension(format!(
                "symmetric {n}x{n} needs {} lower entries, got {}",
                n * (n + 1) / 2,
                lower.len()
            )));
        }
        Ok(Self { n, lower })
    }

    /// Averages `A` with its transpose.
    pub fn symmetrize(a: &ComplexMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension("symmetrize needs a square matrix".into()));
        }
        Ok(Self::from_lower_fn(a.rows(), |i, j| (a[(i, j)] + a[(j, i)]) * 0.5))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.lower[Self::offset(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        let k = Self::offset(i, j);
        self.lower[k] = value;
    }

    pub fn lower(&self) -> &[C64] {
        &self.lower
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            n: self.n,
            lower: self.lower.iter().map(|&z| f(z)).collect(),
        }
    }
}

/// Hermitian matrix stored densely; constructors force `H_ij = conj(H_ji)`
/// and a real diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    inner: ComplexMatrix,
}

impl HermitianMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            inner: ComplexMatrix::zeros(n, n),
        }
    }

    /// Builds from `f(i, j)` for `i >= j`; the diagonal keeps only its real part.
    pub fn from_lower_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut inner = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                if i == j {
                    inner[(i, i)] = C64::new(v.re, 0.0);
                } else {
                    inner[(i, j)] = v;
                    inner[(j, i)] = v.conj();
                }
            }
        }
        Self { inner }
    }

    /// Averages `A` with its conjugate transpose.
    pub fn symmetrize(a: &ComplexMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension("symmetrize needs a square matrix".into()));
        }
        Ok(Self::from_lower_fn(a.rows(), |i, j| {
            (a[(i, j)] + a[(j, i)].conj()) * 0.5
        }))
    }

    pub fn diag(values: &[f64]) -> Self {
        Self::from_lower_fn(values.len(), |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.inner[(i, j)]
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.inner
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            inner: self.inner.scale(C64::new(s, 0.0)),
        }
    }

    /// `U H U*`, re-symmetrized.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Result<Self> {
        let uh = u.matmul(&self.inner)?;
        Self::symmetrize(&uh.matmul(&u.conj_transpose())?)
    }
}

/// LU factorization with partial pivoting; returns `(det A, A^-1)`.
pub fn lu_det_inverse(a: &ComplexMatrix) -> Result<(C64, ComplexMatrix)> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "LU needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n > MAX_LU_DIM {
        return Err(Error::Dimension(format!("LU dimension {n} exceeds {MAX_LU_DIM}")));
    }
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut det = C64::new(1.0, 0.0);

    for k in 0..n {
        let (p, pivot_abs) =
            (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_abs < SINGULAR_PIVOT {
            return Err(Error::SingularMatrix {
                column: k,
                pivot: pivot_abs,
            });
        }
        if p != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
            perm.swap(k, p);
            det = -det;
        }
        let pivot = lu[(k, k)];
        det *= pivot;
        for i in k + 1..n {
            let factor = lu[(i, k)] / pivot;
            lu[(i, k)] = factor;
            for j in k + 1..n {
                let u = lu[(k, j)];
                lu[(i, j)] -= factor * u;
            }
        }
    }

    // Solve L U X = P I column by column.
    let mut inv = ComplexMatrix::zeros(n, n);
    let mut col = vec![C64::new(0.0, 0.0); n];
    for c in 0..n {
        for i in 0..n {
            col[i] = if perm[i] == c {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
        }
        for i in 0..n {
            let mut s = col[i];
            for j in 0..i {
                s -= lu[(i, j)] * col[j];
            }
            col[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = col[i];
            for j in i + 1..n {
                s -= lu[(i, j)] * col[j];
            }
            col[i] = s / lu[(i, i)];
        }
        for i in 0..n {
            inv[(i, c)] = col[i];
        }
    }
    Ok((det, inv))
}

pub fn determinant(a: &ComplexMatrix) -> Result<C64> {
    match lu_det_inverse(a) {
        Ok((det, _)) => Ok(det),
        Err(Error::SingularMatrix { .. }) => Ok(C64::new(0.0, 0.0)),
        Err(e) => Err(e),
    }
}

pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    lu_det_inverse(a).map(|(_, inv)| inv)
}

/// Smallest eigenvalue of a real symmetric matrix (stored with zero imaginary
/// parts). A negative result means the matrix is not positive definite.
pub fn min_eigenvalue_posdef(s: &ComplexMatrix) -> Result<f64> {
    if !s.is_square() {
        return Err(Error::Dimension("eigenvalues need a square matrix".into()));
    }
    let scale = s.max_abs().max(1.0);
    let asym = s.asymmetry();
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    let imag = s.as_slice().iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if imag > 1e-12 * scale {
        return Err(Error::InvalidInput(format!(
            "expected a real matrix, max imaginary part {imag:e}"
        )));
    }
    let h = HermitianMatrix::from_lower_fn(s.rows(), |i, j| C64::new(s[(i, j)].re, 0.0));
    Ok(hermitian_eigenvalues(&h)?[0])
}

/// Eigenvalues in ascending order.
pub fn hermitian_eigenvalues(h: &HermitianMatrix) -> Result<Vec<f64>> {
    hermitian_eigen(h).map(|(vals, _)| vals)
}

/// Cyclic complex Jacobi. Returns ascending eigenvalues and the unitary matrix
/// whose columns are the matching eigenvectors.
pub fn hermitian_eigen(h: &HermitianMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let n = h.dim();
    if n > MAX_EIGEN_DIM {
        return Err(Error::Dimension(format!("eigen dimension {n} exceeds {MAX_EIGEN_DIM}")));
    }
    let mut a = h.as_matrix().clone();
    let mut v = ComplexMatrix::identity(n);
    let total: f64 = a.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_THRESHOLD * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // Block [[c, s], [-s e^{-i phi}, c e^{-i phi}]] on columns p, q.
                let vpp = C64::new(c, 0.0);
                let vpq = C64::new(s, 0.0);
                let vqp = -phase.conj() * s;
                let vqq = phase.conj() * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * vpp + akq * vqp;
                    a[(k, q)] = akp * vpq + akq * vqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = vpp.conj() * apk + vqp.conj() * aqk;
                    a[(q, k)] = vpq.conj() * apk + vqq.conj() * aqk;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * vpp + vkq * vqp;
                    v[(k, q)] = vkp * vpq + vkq * vqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        // Diagonal shift keeps these comfortably away from singular.
        ComplexMatrix::from_fn(n, n, |i, j| {
            let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if i == j {
                z + c(n as f64, 0.0)
            } else {
                z
            }
        })
    }

    #[test]
    fn identity_inverse() {
        let (det, inv) = lu_det_inverse(&ComplexMatrix::identity(3)).unwrap();
        assert_eq!(det, c(1.0, 0.0));
        assert_eq!(inv, ComplexMatrix::identity(3));
    }

    #[test]
    fn diagonal_inverse() {
        let a = ComplexMatrix::diag(&[c(0.0, 2.0), c(3.0, 0.0)]);
        let (det, inv) = lu_det_inverse(&a).unwrap();
        assert!((det - c(0.0, 6.0)).norm() < 1e-15);
        let expected = ComplexMatrix::diag(&[c(0.0, -0.5), c(1.0 / 3.0, 0.0)]);
        assert!(inv.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn singular_is_reported() {
        let a = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(lu_det_inverse(&a), Err(Error::SingularMatrix { .. })));
        assert_eq!(determinant(&a).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn non_square_rejected() {
        assert!(lu_det_inverse(&ComplexMatrix::zeros(2, 3)).is_err());
        assert!(lu_det_inverse(&ComplexMatrix::identity(33)).is_err());
    }

    #[test]
    fn multiply_back_recovers_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..1000 {
            let n = 1 + trial % 8;
            let a = random_matrix(&mut rng, n);
            let (_, inv) = lu_det_inverse(&a).unwrap();
            let residual = (&a * &inv).max_abs_diff(&ComplexMatrix::identity(n));
            assert!(residual < 1e-12, "n={n} residual={residual:e}");
        }
    }

    #[test]
    fn determinant_of_permutation_has_sign() {
        let p = ComplexMatrix::from_real(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((determinant(&p).unwrap() - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn min_eigenvalue_examples() {
        assert!((min_eigenvalue_posdef(&ComplexMatrix::identity(2)).unwrap() - 1.0).abs() < 1e-14);
        let d = ComplexMatrix::from_real(2, 2, &[0.5, 0.0, 0.0, 3.0]).unwrap();
        assert!((min_eigenvalue_posdef(&d).unwrap() - 0.5).abs() < 1e-14);
        // Closed form: 2 ± 1.
        let s = ComplexMatrix::from_real(2, 2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        assert!((min_eigenvalue_posdef(&s).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn min_eigenvalue_negative_for_indefinite() {
        let s = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!((min_eigenvalue_posdef(&s).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn min_eigenvalue_rejects_nonsymmetric() {
        let s = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(matches!(min_eigenvalue_posdef(&s), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn hermitian_examples() {
        assert_eq!(hermitian_eigenvalues(&HermitianMatrix::zeros(3)).unwrap(), vec![0.0; 3]);
        let d = hermitian_eigenvalues(&HermitianMatrix::diag(&[1.0, 2.0])).unwrap();
        assert_eq!(d, vec![1.0, 2.0]);
        // [[1, i], [-i, 1]] has eigenvalues 1 ± 1.
        let h = HermitianMatrix::from_lower_fn(2, |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, -1.0) });
        assert_eq!(h.get(0, 1), c(0.0, 1.0));
        let vals = hermitian_eigenvalues(&h).unwrap();
        assert!(vals[0].abs() < 1e-14 && (vals[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn eigen_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=16 {
            let h = HermitianMatrix::from_lower_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let (vals, vecs) = hermitian_eigen(&h).unwrap();
            let d = ComplexMatrix::diag(&vals.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>());
            let rebuilt = &(&vecs * &d) * &vecs.conj_transpose();
            let residual = rebuilt.max_abs_diff(h.as_matrix());
            assert!(residual < 1e-10, "n={n} residual={residual:e}");
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn repeated_eigenvalues_are_resolved() {
        let vals = hermitian_eigenvalues(&HermitianMatrix::diag(&[1.0; 6])).unwrap();
        assert!(vals.iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn symmetric_storage_is_exact() {
        let mut s = SymmetricMatrix::zeros(3);
        s.set(0, 2, c(1.0, 2.0));
        assert_eq!(s.get(2, 0), c(1.0, 2.0));
        assert_eq!(s.to_matrix().asymmetry(), 0.0);
    }
}
