//! Dense complex linear algebra at desk scale.
//!
//! Everything downstream (trace functionals, divergences, variational
//! identities, channels) runs on matrices of dimension <= 16, so this module
//! favors robustness and determinism over asymptotics: a cyclic Jacobi
//! eigensolver for Hermitian matrices, matrix functions through the spectral
//! decomposition, and seeded random generators with explicit streams.

use num_complex::Complex64;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Relative eigenvalue threshold below which a matrix counts as singular.
pub const SINGULAR_TOL: f64 = 1e-12;
/// Relative Hermiticity tolerance accepted by the eigensolver.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Jacobi stops when the off-diagonal Frobenius mass drops below this
/// fraction of the input norm.
const JACOBI_TOL: f64 = 1e-13;
const JACOBI_TARGET: f64 = 1e-15;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense row-major complex matrix. The universal carrier for states,
/// contractions and channel data.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let v = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", v.re, v.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major data, rejecting NaN/Inf entries.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::InvalidConstruction(format!(
                "entries length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidConstruction(
                "non-finite entry".to_string(),
            ));
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
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Square matrix with the given real numbers on the diagonal.
    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(values[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Convenience constructor from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
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

    /// Side length of a square matrix.
    pub fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        debug_assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    /// Frobenius distance to another matrix.
    pub fn dist(&self, other: &Self) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.dist(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol_rel: f64) -> bool {
        self.is_square() && self.hermiticity_defect() <= tol_rel * self.frobenius_norm().max(1e-300)
    }

    /// Matrix product.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul dimension mismatch {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Tensor (Kronecker) product.
    pub fn kron(&self, other: &Self) -> Self {
        let (r, c) = (self.rows * other.rows, self.cols * other.cols);
        Self::from_fn(r, c, |i, j| {
            self[(i / other.rows, j / other.cols)] * other[(i % other.rows, j % other.cols)]
        })
    }

    /// Direct sum: block-diagonal stacking of square matrices.
    pub fn block_diag(blocks: &[&Self]) -> Self {
        let n: usize = blocks.iter().map(|b| b.dim()).sum();
        let mut out = Self::zeros(n, n);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.dim() {
                for j in 0..b.dim() {
                    out[(off + i, off + j)] = b[(i, j)];
                }
            }
            off += b.dim();
        }
        out
    }

    /// Assembles a 2x2 block matrix from equally sized square blocks.
    pub fn from_blocks(a: &Self, b: &Self, c: &Self, d: &Self) -> Self {
        let n = a.dim();
        assert!(b.dim() == n && c.dim() == n && d.dim() == n);
        Self::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
            (true, true) => a[(i, j)],
            (true, false) => b[(i, j - n)],
            (false, true) => c[(i - n, j)],
            (false, false) => d[(i - n, j - n)],
        })
    }

    /// Extracts the (bi, bj) block of side `n` from a 2n x 2n matrix.
    pub fn block(&self, n: usize, bi: usize, bj: usize) -> Self {
        Self::from_fn(n, n, |i, j| self[(bi * n + i, bj * n + j)])
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("inverse of non-square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let scale = self.frobenius_norm().max(1e-300);
        for col in 0..n {
            let (pivot_row, pivot_mag) = (col..n)
                .map(|r| (r, a[(r, col)].norm()))
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            if pivot_mag <= 1e-14 * scale {
                return Err(Error::SingularMatrix);
            }
            if pivot_row != col {
                for j in 0..n {
                    a.data.swap(pivot_row * n + j, col * n + j);
                    inv.data.swap(pivot_row * n + j, col * n + j);
                }
            }
            let pivot = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= pivot;
                inv[(col, j)] /= pivot;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[(r, col)];
                if factor.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let av = a[(col, j)];
                    let iv = inv[(col, j)];
                    a[(r, j)] -= factor * av;
                    inv[(r, j)] -= factor * iv;
                }
            }
        }
        Ok(inv)
    }

    /// Nested `[re, im]` representation used by the JSON interfaces.
    pub fn to_nested(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| [self[(i, j)].re, self[(i, j)].im]).collect())
            .collect()
    }

    pub fn from_nested(nested: &[Vec<[f64; 2]>]) -> Result<Self> {
        let rows = nested.len();
        if rows == 0 {
            return Err(Error::InvalidConstruction("empty matrix".into()));
        }
        let cols = nested[0].len();
        if nested.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidConstruction("ragged rows".into()));
        }
        let data = nested
            .iter()
            .flat_map(|r| r.iter().map(|&[re, im]| Complex64::new(re, im)))
            .collect();
        Self::new(rows, cols, data)
    }
}

// Serialized as rows of [re, im] pairs — the same shape the CLI's JSON
// matrix format uses.
impl serde::Serialize for ComplexMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_nested().serialize(serializer)
    }
}

impl<'de> serde::Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let nested = Vec::<Vec<[f64; 2]>>::deserialize(deserializer)?;
        ComplexMatrix::from_nested(&nested).map_err(serde::de::Error::custom)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// Which tensor factor `partial_trace` sums out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceSide {
    /// Trace out the first factor: `Tr_1(A (x) B) = Tr(A) B`.
    First,
    /// Trace out the second factor: `Tr_2(A (x) B) = Tr(B) A`.
    Second,
}

/// Partial trace of a matrix on `H (x) H'` with `dim H = dim_h`,
/// `dim H' = dim_h2`.
pub fn partial_trace(
    m: &ComplexMatrix,
    dim_h: usize,
    dim_h2: usize,
    over: TraceSide,
) -> Result<ComplexMatrix> {
    if !m.is_square() || m.rows() != dim_h * dim_h2 {
        return Err(Error::DimensionMismatch(format!(
            "partial trace: matrix is {}x{}, expected side {}",
            m.rows(),
            m.cols(),
            dim_h * dim_h2
        )));
    }
    let idx = |h: usize, e: usize| h * dim_h2 + e;
    match over {
        TraceSide::Second => Ok(ComplexMatrix::from_fn(dim_h, dim_h, |i, j| {
            (0..dim_h2).map(|e| m[(idx(i, e), idx(j, e))]).sum()
        })),
        TraceSide::First => Ok(ComplexMatrix::from_fn(dim_h2, dim_h2, |i, j| {
            (0..dim_h).map(|h| m[(idx(h, i), idx(h, j))]).sum()
        })),
    }
}

/// Spectral decomposition of a Hermitian matrix: eigenvalues ascending,
/// eigenvector columns orthonormal.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V diag(f(lambda)) V*`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for j in 0..n {
            let fj = Complex64::new(f(self.eigenvalues[j]), 0.0);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        scaled.matmul(&v.adjoint())
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply(|x| x)
    }
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Each rotation diagonalizes one 2x2 Hermitian principal block exactly;
/// sweeps repeat until the off-diagonal Frobenius mass falls below
/// `1e-13 * ||A||_F` or 60 sweeps elapse.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("eigendecomposition of non-square matrix".into()));
    }
    let n = a.dim();
    let norm = a.frobenius_norm();
    let defect = a.hermiticity_defect();
    if defect > HERMITIAN_TOL * norm.max(1e-300) {
        return Err(Error::NotHermitian {
            defect,
            tol: HERMITIAN_TOL * norm,
        });
    }
    // Symmetrize away the (tolerated) roundoff asymmetry.
    let mut m = ComplexMatrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let mut v = ComplexMatrix::identity(n);

    if norm == 0.0 || n == 1 {
        let eigenvalues = (0..n).map(|i| m[(i, i)].re).collect();
        return Ok(HermitianEigen {
            eigenvalues,
            eigenvectors: v,
        });
    }

    let off_mass = |m: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    // Sweep past the documented tolerance toward machine precision; the
    // quadratic tail costs a sweep or two and pays off in downstream powers.
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_mass(&m) <= JACOBI_TARGET * norm {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = m[(p, q)];
                if b.norm() <= 1e-300 {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let delta = 0.5 * (app - aqq);
                let r = (delta * delta + b.norm_sqr()).sqrt();
                // Use the eigenvalue nearer to a_pp, so the rotation tends to
                // the identity as b -> 0 (the far choice degenerates to a
                // swap and stalls the sweep). t = lambda_near - a_pp in the
                // cancellation-free form |b|^2 / (delta +- r).
                let t = if delta >= 0.0 {
                    b.norm_sqr() / (delta + r)
                } else {
                    -b.norm_sqr() / (r - delta)
                };
                let nrm = (b.norm_sqr() + t * t).sqrt();
                // Columns of the 2x2 unitary: (b, t)/nrm and (-t, conj(b))/nrm.
                let g11 = b / nrm;
                let g21 = Complex64::new(t / nrm, 0.0);
                let g12 = Complex64::new(-t / nrm, 0.0);
                let g22 = b.conj() / nrm;

                // M <- G* M G, touching only rows/cols p and q.
                for k in 0..n {
                    let mp = m[(k, p)];
                    let mq = m[(k, q)];
                    m[(k, p)] = mp * g11 + mq * g21;
                    m[(k, q)] = mp * g12 + mq * g22;
                }
                for k in 0..n {
                    let mp = m[(p, k)];
                    let mq = m[(q, k)];
                    m[(p, k)] = g11.conj() * mp + g21.conj() * mq;
                    m[(q, k)] = g12.conj() * mp + g22.conj() * mq;
                }
                m[(p, q)] = Complex64::new(0.0, 0.0);
                m[(q, p)] = Complex64::new(0.0, 0.0);
                m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);

                for k in 0..n {
                    let vp = v[(k, p)];
                    let vq = v[(k, q)];
                    v[(k, p)] = vp * g11 + vq * g21;
                    v[(k, q)] = vp * g12 + vq * g22;
                }
            }
        }
    }
    if off_mass(&m) > JACOBI_TOL * norm {
        return Err(Error::NoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
            off: off_mass(&m),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[(i, i)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// Clips roundoff-negative eigenvalues to zero; genuinely negative ones are
/// an error. Keeps roundoff distinguishable from indefiniteness.
fn clip_psd(eigenvalues: &[f64]) -> Result<Vec<f64>> {
    let lambda_max = eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let floor = -SINGULAR_TOL * lambda_max.max(1e-300);
    eigenvalues
        .iter()
        .map(|&l| {
            if l >= 0.0 {
                Ok(l)
            } else if l >= floor {
                Ok(0.0)
            } else {
                Err(Error::NotPsd { lambda: l })
            }
        })
        .collect()
}

/// Fractional (or negative) power of a positive semi-definite matrix through
/// its spectral decomposition, with the `0^alpha := 0` convention for
/// `alpha > 0`.
pub fn matrix_power(a: &ComplexMatrix, alpha: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(a)?;
    let lambdas = clip_psd(&eig.eigenvalues)?;
    let lambda_max = lambdas.iter().cloned().fold(0.0_f64, f64::max);
    if alpha < 0.0 {
        let lambda_min = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
        if lambda_min <= SINGULAR_TOL * lambda_max {
            return Err(Error::SingularMatrix);
        }
    }
    Ok(eig.apply(|l| {
        if l == 0.0 {
            if alpha > 0.0 {
                0.0
            } else {
                1.0 // alpha == 0: empty product convention
            }
        } else {
            l.powf(alpha)
        }
    }))
}

/// Matrix logarithm of a strictly positive definite matrix. Eigenvalues at or
/// below the singularity threshold are an error, never clamped: silent
/// clamping would corrupt DPI margins.
pub fn matrix_log(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(a)?;
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let lambda_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if lambda_min <= SINGULAR_TOL * lambda_max.max(1e-300) {
        return Err(Error::SingularMatrix);
    }
    Ok(eig.apply(f64::ln))
}

/// Modulus `|A| = (A*A)^{1/2}`.
pub fn modulus(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("modulus of non-square matrix".into()));
    }
    let gram = a.adjoint().matmul(a);
    matrix_power(&gram, 0.5)
}

/// One-sided Jacobi: orthogonalizes the columns of `A` by right-multiplied
/// plane rotations. Returns `W = A V` with orthogonal columns; the column
/// norms are the singular values, to high *relative* accuracy even for tiny
/// ones (the Gram route would square the condition number and lose half the
/// digits).
fn orthogonalize_columns(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.dim();
    let mut w = a.clone();
    let mut done = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    app += w[(k, p)].norm_sqr();
                    aqq += w[(k, q)].norm_sqr();
                    apq += w[(k, p)].conj() * w[(k, q)];
                }
                if apq.norm() <= 1e-15 * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let delta = 0.5 * (app - aqq);
                let r = (delta * delta + apq.norm_sqr()).sqrt();
                let t = if delta >= 0.0 {
                    apq.norm_sqr() / (delta + r)
                } else {
                    -apq.norm_sqr() / (r - delta)
                };
                let nrm = (apq.norm_sqr() + t * t).sqrt();
                let g11 = apq / nrm;
                let g21 = Complex64::new(t / nrm, 0.0);
                let g12 = Complex64::new(-t / nrm, 0.0);
                let g22 = apq.conj() / nrm;
                for k in 0..n {
                    let wp = w[(k, p)];
                    let wq = w[(k, q)];
                    w[(k, p)] = wp * g11 + wq * g21;
                    w[(k, q)] = wp * g12 + wq * g22;
                }
            }
        }
        if !rotated {
            done = true;
            break;
        }
    }
    if !done {
        return Err(Error::NoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
            off: f64::NAN,
        });
    }
    Ok(w)
}

/// Singular values of a square matrix, ascending.
pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("singular values of non-square matrix".into()));
    }
    let w = orthogonalize_columns(a)?;
    let n = a.dim();
    let mut svs: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|k| w[(k, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    svs.sort_by(f64::total_cmp);
    Ok(svs)
}

/// Polar decomposition `A = U |A|` of an invertible matrix.
#[derive(Debug, Clone)]
pub struct PolarFactors {
    pub unitary: ComplexMatrix,
    pub modulus: ComplexMatrix,
}

pub fn polar(a: &ComplexMatrix) -> Result<PolarFactors> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("polar of non-square matrix".into()));
    }
    let svs = singular_values(a)?;
    let smax = *svs.last().unwrap();
    let smin = svs[0];
    if smin <= SINGULAR_TOL * smax {
        return Err(Error::SingularMatrix);
    }
    // Scaled Newton iteration for the unitary factor; quadratic convergence
    // keeps full precision even for ill-conditioned inputs, where the
    // Gram-matrix route would square the condition number.
    let mut u = a.clone();
    for _ in 0..60 {
        let inv_adj = u.inverse()?.adjoint();
        let g = (inv_adj.frobenius_norm() / u.frobenius_norm()).sqrt();
        let next = (&u.scale_re(g) + &inv_adj.scale_re(1.0 / g)).scale_re(0.5);
        let delta = next.dist(&u);
        u = next;
        if delta <= 1e-15 * u.frobenius_norm() {
            break;
        }
    }
    let raw = u.adjoint().matmul(a);
    let n = a.dim();
    let modulus = ComplexMatrix::from_fn(n, n, |i, j| (raw[(i, j)] + raw[(j, i)].conj()) * 0.5);
    Ok(PolarFactors { unitary: u, modulus })
}

/// Schatten r-quasi-norm mass `Tr |A|^r = sum sigma_i(A)^r`.
pub fn schatten(a: &ComplexMatrix, r: f64) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::InvalidExponent(format!("Schatten exponent r = {r} must be positive")));
    }
    if !a.is_square() {
        return Err(Error::DimensionMismatch("Schatten mass of non-square matrix".into()));
    }
    Ok(singular_values(a)?.iter().map(|s| s.powf(r)).sum())
}

// ---------------------------------------------------------------------------
// Seeded random generators
// ---------------------------------------------------------------------------

/// Matrix ensembles available from [`random_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    /// Positive definite, eigenvalues log-uniform in [0.1, 10].
    Pd,
    /// Positive definite with unit trace.
    Density,
    /// Ginibre, resampled until smallest/largest singular value > 1e-3.
    Invertible,
    /// Haar-like unitary (QR of Ginibre, phase-fixed diagonal).
    Unitary,
    /// (G + G*)/2 for Ginibre G.
    SelfAdjoint,
    /// Independent standard complex Gaussian entries.
    Ginibre,
}

pub fn random_matrix(kind: MatrixKind, dim: usize, rng: &mut Rng) -> ComplexMatrix {
    match kind {
        MatrixKind::Pd => random_pd(dim, rng),
        MatrixKind::Density => random_density(dim, rng),
        MatrixKind::Invertible => random_invertible(dim, rng),
        MatrixKind::Unitary => random_unitary(dim, rng),
        MatrixKind::SelfAdjoint => random_self_adjoint(dim, rng),
        MatrixKind::Ginibre => random_ginibre(dim, rng),
    }
}

pub fn random_ginibre(dim: usize, rng: &mut Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |_, _| rng.complex_normal())
}

pub fn random_self_adjoint(dim: usize, rng: &mut Rng) -> ComplexMatrix {
    let g = random_ginibre(dim, rng);
    (&g + &g.adjoint()).scale_re(0.5)
}

/// QR of a Ginibre matrix via modified Gram-Schmidt (two passes for
/// orthogonality). Gram-Schmidt produces the unique R with positive real
/// diagonal, which is the phase convention that makes Q Haar distributed.
pub fn random_unitary(dim: usize, rng: &mut Rng) -> ComplexMatrix {
    let g = random_ginibre(dim, rng);
    let mut q = ComplexMatrix::zeros(dim, dim);
    for j in 0..dim {
        let mut col: Vec<Complex64> = (0..dim).map(|i| g[(i, j)]).collect();
        for _pass in 0..2 {
            for k in 0..j {
                let proj: Complex64 = (0..dim).map(|i| q[(i, k)].conj() * col[i]).sum();
                for i in 0..dim {
                    col[i] -= proj * q[(i, k)];
                }
            }
            let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in col.iter_mut() {
                *z /= norm;
            }
        }
        for i in 0..dim {
            q[(i, j)] = col[i];
        }
    }
    q
}

/// Eigenvalues log-uniform in [0.1, 10], conjugated by a Haar-like unitary.
/// The bounded spectrum keeps every power p in [-1, 2] well conditioned.
pub fn random_pd(dim: usize, rng: &mut Rng) -> ComplexMatrix {
    let u = random_unitary(dim, rng);
    let lambdas: Vec<f64> = (0..dim)
        .map(|_| 10f64.powf(rng.uniform(-1.0, 1.0)))
        .collect();
    u.matmul(&ComplexMatrix::diag(&lambdas)).matmul(&u.adjoint())
}

pub fn random_density(dim: usize, rng: &mut Rng) -> ComplexMatrix {
    let pd = random_pd(dim, rng);
    let tr = pd.trace().re;
    pd.scale_re(1.0 / tr)
}

pub fn random_invertible(dim: usize, rng: &mut Rng) -> ComplexMatrix {
    loop {
        let g = random_ginibre(dim, rng);
        if let Ok(sv) = singular_values(&g) {
            let smin = sv.first().copied().unwrap_or(0.0);
            let smax = sv.last().copied().unwrap_or(0.0);
            if smin > 1e-3 * smax {
                return g;
            }
        }
    }
}

/// Invertible matrix with singular values log-uniform in [0.1, 10]:
/// `U diag(s) V*` for independent Haar-like U, V.
pub fn random_invertible_conditioned(dim: usize, rng: &mut Rng) -> ComplexMatrix {
    let u = random_unitary(dim, rng);
    let v = random_unitary(dim, rng);
    let s: Vec<f64> = (0..dim).map(|_| 10f64.powf(rng.uniform(-1.0, 1.0))).collect();
    u.matmul(&ComplexMatrix::diag(&s)).matmul(&v.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eig_diagonal_input() {
        let a = ComplexMatrix::diag(&[3.0, 1.0]);
        let e = hermitian_eig(&a).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 3.0).abs() < 1e-14);
        // Eigenvectors are a permutation of the identity columns.
        for j in 0..2 {
            let col: Vec<f64> = (0..2).map(|i| e.eigenvectors[(i, j)].norm()).collect();
            assert!(col.iter().any(|&x| (x - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn eig_identity() {
        let e = hermitian_eig(&ComplexMatrix::identity(5)).unwrap();
        assert!(e.eigenvalues.iter().all(|&l| (l - 1.0).abs() < 1e-14));
    }

    #[test]
    fn eig_2x2_characteristic_polynomial_oracle() {
        // [[2,1],[1,2]]: trace 4, det 3 => eigenvalues 1 and 3.
        let a = ComplexMatrix::from_real(2, 2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let e = hermitian_eig(&a).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!((e.eigenvalues[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eig_reconstruction_and_orthonormality_random() {
        let mut rng = Rng::new(42);
        for trial in 0..1000 {
            let dim = 2 + (trial % 7);
            let a = random_self_adjoint(dim, &mut rng);
            let e = hermitian_eig(&a).unwrap();
            let norm = a.frobenius_norm().max(1e-300);
            assert!(
                e.reconstruct().dist(&a) <= 1e-12 * norm,
                "reconstruction failed at dim {dim} trial {trial}"
            );
            let v = &e.eigenvectors;
            let gram = v.adjoint().matmul(v);
            assert!(gram.dist(&ComplexMatrix::identity(dim)) <= 1e-12 * (dim as f64).sqrt());
            // ascending order
            for w in e.eigenvalues.windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let a = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(hermitian_eig(&a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn power_diagonal_and_exponent_identities() {
        let a = ComplexMatrix::diag(&[4.0, 9.0]);
        let half = matrix_power(&a, 0.5).unwrap();
        assert!(half.dist(&ComplexMatrix::diag(&[2.0, 3.0])) < 1e-13);

        let mut rng = Rng::new(1);
        let b = random_pd(3, &mut rng);
        assert!(matrix_power(&b, 0.0).unwrap().dist(&ComplexMatrix::identity(3)) < 1e-12);
        assert!(matrix_power(&b, 1.0).unwrap().dist(&b) < 1e-12 * b.frobenius_norm());
    }

    #[test]
    fn power_inverse_2x2_oracle() {
        let a = ComplexMatrix::from_real(2, 2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let inv = matrix_power(&a, -1.0).unwrap();
        let expect =
            ComplexMatrix::from_real(2, 2, &[2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0]).unwrap();
        assert!(inv.dist(&expect) < 1e-13);
    }

    #[test]
    fn power_additivity_property() {
        let mut rng = Rng::new(7);
        for _ in 0..200 {
            let a = random_pd(3, &mut rng);
            let alpha = rng.uniform(-1.0, 2.0);
            let beta = rng.uniform(-1.0, 2.0);
            let lhs = matrix_power(&a, alpha).unwrap().matmul(&matrix_power(&a, beta).unwrap());
            let rhs = matrix_power(&a, alpha + beta).unwrap();
            assert!(lhs.dist(&rhs) <= 1e-9 * rhs.frobenius_norm());
        }
    }

    #[test]
    fn power_negative_rejects_singular() {
        let a = ComplexMatrix::diag(&[0.0, 1.0]);
        assert!(matches!(matrix_power(&a, -0.5), Err(Error::SingularMatrix)));
    }

    #[test]
    fn modulus_examples() {
        // [[0,2],[0,0]] has A*A = diag(0,4), so |A| = diag(0,2).
        let a = ComplexMatrix::from_real(2, 2, &[0.0, 2.0, 0.0, 0.0]).unwrap();
        assert!(modulus(&a).unwrap().dist(&ComplexMatrix::diag(&[0.0, 2.0])) < 1e-13);

        let mut rng = Rng::new(3);
        let u = random_unitary(4, &mut rng);
        assert!(modulus(&u).unwrap().dist(&ComplexMatrix::identity(4)) < 1e-12);

        let p = random_pd(3, &mut rng);
        assert!(modulus(&p).unwrap().dist(&p) < 1e-10 * p.frobenius_norm());
    }

    #[test]
    fn polar_examples() {
        // Rotation matrix: U = input, |A| = I.
        let rot = ComplexMatrix::from_real(2, 2, &[0.0, -1.0, 1.0, 0.0]).unwrap();
        let pf = polar(&rot).unwrap();
        assert!(pf.unitary.dist(&rot) < 1e-12);
        assert!(pf.modulus.dist(&ComplexMatrix::identity(2)) < 1e-12);

        let mut rng = Rng::new(5);
        let pd = random_pd(3, &mut rng);
        let pf = polar(&pd).unwrap();
        assert!(pf.unitary.dist(&ComplexMatrix::identity(3)) < 1e-10);
        assert!(pf.modulus.dist(&pd) < 1e-10 * pd.frobenius_norm());

        // Scalar polar oracle: diag(-2, 3) = diag(-1, 1) diag(2, 3).
        let d = ComplexMatrix::diag(&[-2.0, 3.0]);
        let pf = polar(&d).unwrap();
        assert!(pf.unitary.dist(&ComplexMatrix::diag(&[-1.0, 1.0])) < 1e-12);
        assert!(pf.modulus.dist(&ComplexMatrix::diag(&[2.0, 3.0])) < 1e-12);
    }

    #[test]
    fn polar_reconstructs_and_is_unitary() {
        let mut rng = Rng::new(11);
        for _ in 0..100 {
            let a = random_invertible_conditioned(4, &mut rng);
            let pf = polar(&a).unwrap();
            assert!(pf.unitary.matmul(&pf.modulus).dist(&a) <= 1e-11 * a.frobenius_norm());
            let g = pf.unitary.adjoint().matmul(&pf.unitary);
            assert!(g.dist(&ComplexMatrix::identity(4)) <= 1e-11 * 2.0);
            assert!(pf.modulus.dist(&modulus(&a).unwrap()) <= 1e-10 * a.frobenius_norm());
        }
    }

    #[test]
    fn schatten_examples() {
        assert!((schatten(&ComplexMatrix::identity(4), 0.7).unwrap() - 4.0).abs() < 1e-13);
        assert!((schatten(&ComplexMatrix::diag(&[2.0, 3.0]), 2.0).unwrap() - 13.0).abs() < 1e-12);
        let a = ComplexMatrix::from_real(2, 2, &[0.0, 2.0, 0.0, 0.0]).unwrap();
        assert!((schatten(&a, 1.0).unwrap() - 2.0).abs() < 1e-13);
        assert!(matches!(
            schatten(&a, 0.0),
            Err(Error::InvalidExponent(_))
        ));
    }

    #[test]
    fn schatten_unitary_and_adjoint_invariance() {
        let mut rng = Rng::new(13);
        for _ in 0..100 {
            let a = random_ginibre(3, &mut rng);
            let u = random_unitary(3, &mut rng);
            let v = random_unitary(3, &mut rng);
            let r = rng.uniform(0.3, 4.0);
            let base = schatten(&a, r).unwrap();
            let rotated = schatten(&u.matmul(&a).matmul(&v), r).unwrap();
            assert!((base - rotated).abs() <= 1e-10 * base.max(1.0));
            let adj = schatten(&a.adjoint(), r).unwrap();
            assert!((base - adj).abs() <= 1e-10 * base.max(1.0));
        }
    }

    #[test]
    fn kron_examples() {
        let i6 = ComplexMatrix::identity(2).kron(&ComplexMatrix::identity(3));
        assert!(i6.dist(&ComplexMatrix::identity(6)) < 1e-15);

        let d1 = ComplexMatrix::diag(&[2.0, 3.0]);
        let d2 = ComplexMatrix::diag(&[5.0, 7.0]);
        assert!(d1.kron(&d2).dist(&ComplexMatrix::diag(&[10.0, 14.0, 15.0, 21.0])) < 1e-14);

        // (A (x) B)(C (x) D) = AC (x) BD on random 2x2 inputs.
        let mut rng = Rng::new(17);
        let (a, b, cm, d) = (
            random_ginibre(2, &mut rng),
            random_ginibre(2, &mut rng),
            random_ginibre(2, &mut rng),
            random_ginibre(2, &mut rng),
        );
        let lhs = a.kron(&b).matmul(&cm.kron(&d));
        let rhs = a.matmul(&cm).kron(&b.matmul(&d));
        assert!(lhs.dist(&rhs) <= 1e-12 * rhs.frobenius_norm());
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = Rng::new(19);
        let a = random_ginibre(2, &mut rng);
        let b = random_ginibre(3, &mut rng);
        let m = a.kron(&b);
        let tr2 = partial_trace(&m, 2, 3, TraceSide::Second).unwrap();
        assert!(tr2.dist(&a.scale(b.trace())) < 1e-12 * m.frobenius_norm());
        let tr1 = partial_trace(&m, 2, 3, TraceSide::First).unwrap();
        assert!(tr1.dist(&b.scale(a.trace())) < 1e-12 * m.frobenius_norm());

        let id = ComplexMatrix::identity(6);
        let t = partial_trace(&id, 2, 3, TraceSide::Second).unwrap();
        assert!(t.dist(&ComplexMatrix::identity(2).scale_re(3.0)) < 1e-14);

        let m = random_ginibre(4, &mut rng);
        let t = partial_trace(&m, 2, 2, TraceSide::Second).unwrap();
        assert!((t.trace() - m.trace()).norm() < 1e-13 * m.frobenius_norm());

        assert!(partial_trace(&m, 3, 2, TraceSide::First).is_err());
    }

    #[test]
    fn random_density_and_unitary_contracts() {
        let mut rng = Rng::new(23);
        let rho = random_density(4, &mut rng);
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
        let e = hermitian_eig(&rho).unwrap();
        assert!(e.eigenvalues.iter().all(|&l| l > 0.0));

        let u = random_unitary(5, &mut rng);
        let g = u.adjoint().matmul(&u);
        assert!(g.dist(&ComplexMatrix::identity(5)) <= 1e-12);
    }

    #[test]
    fn random_matrices_are_seed_deterministic() {
        for kind in [
            MatrixKind::Pd,
            MatrixKind::Density,
            MatrixKind::Invertible,
            MatrixKind::Unitary,
            MatrixKind::SelfAdjoint,
            MatrixKind::Ginibre,
        ] {
            let a = random_matrix(kind, 3, &mut Rng::with_stream(99, 4));
            let b = random_matrix(kind, 3, &mut Rng::with_stream(99, 4));
            assert_eq!(a, b, "kind {kind:?} not deterministic");
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let mut rng = Rng::new(29);
        for _ in 0..50 {
            let a = random_invertible_conditioned(4, &mut rng);
            let inv = a.inverse().unwrap();
            assert!(a.matmul(&inv).dist(&ComplexMatrix::identity(4)) < 1e-10);
        }
        let s = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(s.inverse(), Err(Error::SingularMatrix)));
    }

    #[test]
    fn construction_rejects_non_finite() {
        assert!(ComplexMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]).is_err());
        assert!(ComplexMatrix::new(1, 2, vec![c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn nested_roundtrip() {
        let mut rng = Rng::new(31);
        let a = random_ginibre(3, &mut rng);
        let b = ComplexMatrix::from_nested(&a.to_nested()).unwrap();
        assert_eq!(a, b);
    }
}
