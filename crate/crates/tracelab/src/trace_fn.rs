//! The trace functionals under study.
//!
//! Central object: `psi(A, B, K, (p, q, s)) = Tr(B^{q/2} K* A^p K B^{q/2})^s`
//! evaluated through the factorized route `Tr |A^{p/2} K B^{q/2}|^{2s}`
//! (one modulus, one eigensolve, better conditioning than forming the
//! sandwiched product). The direct route is kept as [`psi_direct`] for
//! cross-checks.

use crate::error::{Error, Result};
use crate::matrix::{matrix_power, schatten, ComplexMatrix};

/// Exponent triple (p, q, s) of the trace functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiParams {
    pub p: f64,
    pub q: f64,
    pub s: f64,
}

impl PsiParams {
    pub fn new(p: f64, q: f64, s: f64) -> Self {
        Self { p, q, s }
    }

    /// Normalized means `p >= q` and `s > 0`, the convention every region
    /// statement assumes.
    pub fn is_normalized(&self) -> bool {
        self.p >= self.q && self.s > 0.0
    }
}

/// Which substitution on K accompanies a parameter normalization:
/// `swap` exchanges the arguments with `K -> K*`; `negate` flips all
/// exponent signs with `K -> (K^{-1})*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct KTransform {
    pub swap: bool,
    pub negate: bool,
}

impl KTransform {
    /// Applies the recorded substitution to a concrete K.
    pub fn apply(&self, k: &ComplexMatrix) -> Result<ComplexMatrix> {
        let mut out = k.clone();
        if self.negate {
            out = out.inverse()?.adjoint();
        }
        if self.swap {
            out = out.adjoint();
        }
        Ok(out)
    }
}

/// Rewrites (p, q, s) into the equivalent normalized triple with `p >= q`,
/// `s > 0`, recording which K substitution keeps the value of psi unchanged
/// (arguments also swap when `swap` is set).
pub fn normalize_params(params: PsiParams) -> Result<(PsiParams, KTransform)> {
    if params.s == 0.0 {
        return Err(Error::InvalidExponent("s = 0 has no psi value".into()));
    }
    let mut t = KTransform::default();
    let mut cur = params;
    if cur.s < 0.0 {
        cur = PsiParams::new(-cur.p, -cur.q, -cur.s);
        t.negate = true;
    }
    if cur.p < cur.q {
        cur = PsiParams::new(cur.q, cur.p, cur.s);
        t.swap = true;
    }
    Ok((cur, t))
}

fn check_same_square(mats: &[&ComplexMatrix]) -> Result<usize> {
    let n = mats[0].rows();
    for m in mats {
        if !m.is_square() || m.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "expected {n}x{n}, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
    }
    Ok(n)
}

/// `Tr(B^{q/2} K* A^p K B^{q/2})^s`, evaluated as `Tr |A^{p/2} K B^{q/2}|^{2s}`.
///
/// Requires `s > 0`; negative s is reached only through
/// [`normalize_params`]. At `(p, q) = (0, 0)` the factorized route gives
/// `Tr |K|^{2s}` which is taken as the definition.
pub fn psi(a: &ComplexMatrix, b: &ComplexMatrix, k: &ComplexMatrix, params: PsiParams) -> Result<f64> {
    if params.s <= 0.0 {
        return Err(Error::InvalidExponent(format!(
            "psi requires s > 0 (got s = {}); normalize first",
            params.s
        )));
    }
    check_same_square(&[a, b, k])?;
    let a_half = matrix_power(a, params.p / 2.0)?;
    let b_half = matrix_power(b, params.q / 2.0)?;
    let m = a_half.matmul(k).matmul(&b_half);
    schatten(&m, 2.0 * params.s)
}

/// Direct evaluation route `Tr (B^{q/2} K* A^p K B^{q/2})^s`, used as a
/// cross-check against the factorized [`psi`].
pub fn psi_direct(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    k: &ComplexMatrix,
    params: PsiParams,
) -> Result<f64> {
    if params.s <= 0.0 {
        return Err(Error::InvalidExponent("psi requires s > 0".into()));
    }
    check_same_square(&[a, b, k])?;
    let ap = matrix_power(a, params.p)?;
    let bq2 = matrix_power(b, params.q / 2.0)?;
    let core = bq2
        .matmul(&k.adjoint())
        .matmul(&ap)
        .matmul(k)
        .matmul(&bq2);
    Ok(matrix_power(&core, params.s)?.trace().re)
}

/// One-variable trace functional `Tr(K* A^p K)^s = Tr |A^{p/2} K|^{2s}`.
pub fn upsilon(a: &ComplexMatrix, k: &ComplexMatrix, p: f64, s: f64) -> Result<f64> {
    if s <= 0.0 {
        return Err(Error::InvalidExponent(format!("upsilon requires s > 0 (got {s})")));
    }
    check_same_square(&[a, k])?;
    let a_half = matrix_power(a, p / 2.0)?;
    schatten(&a_half.matmul(k), 2.0 * s)
}

/// Wigner-Yanase-Dyson functional
/// `S_p(rho, K) = -Tr rho K^2 + Tr rho^p K rho^{1-p} K
///             = (1/2) Tr [rho^p, K][rho^{1-p}, K]`.
pub fn skew_functional(rho: &ComplexMatrix, k: &ComplexMatrix, p: f64) -> Result<f64> {
    check_same_square(&[rho, k])?;
    if !k.is_hermitian(1e-10) {
        return Err(Error::NotSelfAdjoint);
    }
    let rp = matrix_power(rho, p)?;
    let r1p = matrix_power(rho, 1.0 - p)?;
    let term1 = rho.matmul(k).matmul(k).trace().re;
    let term2 = rp.matmul(k).matmul(&r1p).matmul(k).trace().re;
    Ok(-term1 + term2)
}

/// Commutator form of the skew functional, independent route for tests.
pub fn skew_functional_commutator(rho: &ComplexMatrix, k: &ComplexMatrix, p: f64) -> Result<f64> {
    check_same_square(&[rho, k])?;
    let rp = matrix_power(rho, p)?;
    let r1p = matrix_power(rho, 1.0 - p)?;
    let c1 = &rp.matmul(k) - &k.matmul(&rp);
    let c2 = &r1p.matmul(k) - &k.matmul(&r1p);
    Ok(0.5 * c1.matmul(&c2).trace().re)
}

/// Lieb-Ando functional `Tr K* A^p K B^{1-p}`.
pub fn lieb_ando(a: &ComplexMatrix, b: &ComplexMatrix, k: &ComplexMatrix, p: f64) -> Result<f64> {
    check_same_square(&[a, b, k])?;
    let ap = matrix_power(a, p)?;
    let b1p = matrix_power(b, 1.0 - p)?;
    Ok(k.adjoint().matmul(&ap).matmul(k).matmul(&b1p).trace().re)
}

/// Three-variable functional `Tr C^{r/2} B^{q/2} A^p B^{q/2} C^{r/2}`.
pub fn three_var(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
    p: f64,
    q: f64,
    r: f64,
) -> Result<f64> {
    check_same_square(&[a, b, c])?;
    let ap = matrix_power(a, p)?;
    let bq2 = matrix_power(b, q / 2.0)?;
    let cr2 = matrix_power(c, r / 2.0)?;
    Ok(cr2
        .matmul(&bq2)
        .matmul(&ap)
        .matmul(&bq2)
        .matmul(&cr2)
        .trace()
        .re)
}

/// Evaluates psi on the dilated pair `(A (x) I_m/m, B (x) I_m/m)` with
/// `K = I`. For `s = 1/(p+q)` this equals `psi(A, B, I)` by homogeneity,
/// which is the tensor property the DPI bridge relies on.
pub fn tensor_dilate(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    m: usize,
    params: PsiParams,
) -> Result<f64> {
    let pq = params.p + params.q;
    if pq == 0.0 || (params.s - 1.0 / pq).abs() > 1e-9 * params.s.abs().max(1.0) {
        return Err(Error::InvalidExponent(format!(
            "tensor_dilate requires s = 1/(p+q), got s = {} with p+q = {pq}",
            params.s
        )));
    }
    let n = check_same_square(&[a, b])?;
    let eye_scaled = ComplexMatrix::identity(m).scale_re(1.0 / m as f64);
    let ad = a.kron(&eye_scaled);
    let bd = b.kron(&eye_scaled);
    psi(&ad, &bd, &ComplexMatrix::identity(n * m), params)
}
