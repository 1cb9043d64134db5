//! Classical and quantum divergences, the (alpha, z) <-> (p, q)
//! correspondence, and the DPI region predicate.
//!
//! All divergences use the natural logarithm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{matrix_log, matrix_power, ComplexMatrix};
use crate::trace_fn::{psi, PsiParams};

/// Strictly positive probability vector summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    weights: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidConstruction(
                "probability weights must be positive".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConstruction(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Parameter pair of the alpha-z Renyi relative entropy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaZ {
    pub alpha: f64,
    pub z: f64,
}

impl AlphaZ {
    pub fn new(alpha: f64, z: f64) -> Result<Self> {
        if alpha == 1.0 {
            return Err(Error::InvalidExponent("alpha = 1 is excluded".into()));
        }
        if !(z > 0.0) {
            return Err(Error::InvalidExponent(format!("z = {z} must be positive")));
        }
        Ok(Self { alpha, z })
    }
}

fn check_lengths(p: &ProbabilityVector, q: &ProbabilityVector) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "probability vectors of length {} vs {}",
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

/// Kullback-Leibler divergence `sum p_i (log p_i - log q_i)`.
pub fn classical_kl(p: &ProbabilityVector, q: &ProbabilityVector) -> Result<f64> {
    check_lengths(p, q)?;
    Ok(p.weights()
        .iter()
        .zip(q.weights())
        .map(|(&pi, &qi)| pi * (pi.ln() - qi.ln()))
        .sum())
}

/// Classical alpha-Renyi relative entropy
/// `(1/(alpha-1)) log sum p_i^alpha q_i^{1-alpha}`.
pub fn classical_renyi(p: &ProbabilityVector, q: &ProbabilityVector, alpha: f64) -> Result<f64> {
    check_lengths(p, q)?;
    if alpha == 1.0 {
        return Err(Error::InvalidExponent("alpha = 1 is excluded".into()));
    }
    let total: f64 = p
        .weights()
        .iter()
        .zip(q.weights())
        .map(|(&pi, &qi)| pi.powf(alpha) * qi.powf(1.0 - alpha))
        .sum();
    Ok(total.ln() / (alpha - 1.0))
}

fn check_state_pair(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<()> {
    if !rho.is_square() || !sigma.is_square() || rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch("state pair of unequal dims".into()));
    }
    Ok(())
}

/// Umegaki relative entropy `Tr rho (log rho - log sigma)`.
pub fn umegaki(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    check_state_pair(rho, sigma)?;
    let log_rho = matrix_log(rho)?;
    let log_sigma = matrix_log(sigma)?;
    Ok(rho.matmul(&(&log_rho - &log_sigma)).trace().re)
}

/// `Tr rho log(sigma^{-1/2} rho sigma^{-1/2})` — a quantum extension of the
/// KL divergence that does not satisfy DPI.
pub fn d_prime(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    check_state_pair(rho, sigma)?;
    let s_inv_half = matrix_power(sigma, -0.5)?;
    let inner = s_inv_half.matmul(rho).matmul(&s_inv_half);
    let log_inner = matrix_log(&inner)?;
    Ok(rho.matmul(&log_inner).trace().re)
}

/// Quantum alpha-Renyi relative entropy
/// `(1/(alpha-1)) log Tr(rho^alpha sigma^{1-alpha})`.
pub fn renyi_alpha(rho: &ComplexMatrix, sigma: &ComplexMatrix, alpha: f64) -> Result<f64> {
    check_state_pair(rho, sigma)?;
    if alpha == 1.0 {
        return Err(Error::InvalidExponent("alpha = 1 is excluded".into()));
    }
    let ra = matrix_power(rho, alpha)?;
    let s1a = matrix_power(sigma, 1.0 - alpha)?;
    let total = ra.matmul(&s1a).trace().re;
    Ok(total.ln() / (alpha - 1.0))
}

/// Sandwiched alpha-Renyi relative entropy
/// `(1/(alpha-1)) log Tr(sigma^{(1-alpha)/2alpha} rho sigma^{(1-alpha)/2alpha})^alpha`.
pub fn sandwiched(rho: &ComplexMatrix, sigma: &ComplexMatrix, alpha: f64) -> Result<f64> {
    check_state_pair(rho, sigma)?;
    if alpha == 1.0 {
        return Err(Error::InvalidExponent("alpha = 1 is excluded".into()));
    }
    let w = matrix_power(sigma, (1.0 - alpha) / (2.0 * alpha))?;
    let core = w.matmul(rho).matmul(&w);
    let total = matrix_power(&core, alpha)?.trace().re;
    Ok(total.ln() / (alpha - 1.0))
}

/// alpha-z Renyi relative entropy, evaluated through the psi factorization:
/// `D_{a,z} = (1/(a-1)) log psi(rho, sigma; I, (a/z, (1-a)/z, z))`.
pub fn alpha_z(rho: &ComplexMatrix, sigma: &ComplexMatrix, az: AlphaZ) -> Result<f64> {
    check_state_pair(rho, sigma)?;
    let (p, q, s) = az_to_pq(az);
    let eye = ComplexMatrix::identity(rho.dim());
    let total = psi(rho, sigma, &eye, PsiParams::new(p, q, s))?;
    Ok(total.ln() / (az.alpha - 1.0))
}

/// The correspondence `p = alpha/z`, `q = (1-alpha)/z`, `s = 1/(p+q) = z`.
pub fn az_to_pq(az: AlphaZ) -> (f64, f64, f64) {
    let p = az.alpha / az.z;
    let q = (1.0 - az.alpha) / az.z;
    (p, q, 1.0 / (p + q))
}

/// Exact region in which the alpha-z Renyi relative entropy is monotone
/// under every CPTP map:
/// `0 < a < 1` with `z >= max(a, 1-a)`, or `1 < a <= 2` with `a/2 <= z <= a`,
/// or `a >= 2` with `a-1 <= z <= a`. The theorem's case list covers only
/// `a > 0`; the predicate returns false for `a <= 0`.
pub fn dpi_region(az: AlphaZ) -> bool {
    let (a, z) = (az.alpha, az.z);
    if a <= 0.0 || a == 1.0 {
        return false;
    }
    if a < 1.0 {
        z >= a.max(1.0 - a)
    } else if a <= 2.0 {
        a / 2.0 <= z && z <= a
    } else {
        a - 1.0 <= z && z <= a
    }
}

/// Divergence selector used by the DPI machinery and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Divergence {
    Umegaki,
    DPrime,
    RenyiAlpha { alpha: f64 },
    Sandwiched { alpha: f64 },
    AlphaZ { alpha: f64, z: f64 },
}

impl Divergence {
    pub fn eval(&self, rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
        match *self {
            Divergence::Umegaki => umegaki(rho, sigma),
            Divergence::DPrime => d_prime(rho, sigma),
            Divergence::RenyiAlpha { alpha } => renyi_alpha(rho, sigma, alpha),
            Divergence::Sandwiched { alpha } => sandwiched(rho, sigma, alpha),
            Divergence::AlphaZ { alpha, z } => alpha_z(rho, sigma, AlphaZ::new(alpha, z)?),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Divergence::Umegaki => "umegaki".into(),
            Divergence::DPrime => "d_prime".into(),
            Divergence::RenyiAlpha { alpha } => format!("renyi(alpha={alpha})"),
            Divergence::Sandwiched { alpha } => format!("sandwiched(alpha={alpha})"),
            Divergence::AlphaZ { alpha, z } => format!("alpha_z(alpha={alpha},z={z})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{random_density, random_unitary};
    use crate::rng::Rng;

    fn pv(w: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(w.to_vec()).unwrap()
    }

    /// Diagonal density from a probability vector.
    fn diag_state(w: &[f64]) -> ComplexMatrix {
        ComplexMatrix::diag(w)
    }

    #[test]
    fn classical_kl_examples() {
        let p = pv(&[0.5, 0.5]);
        assert!(classical_kl(&p, &p).unwrap().abs() < 1e-15);

        let q = pv(&[0.25, 0.75]);
        let v = classical_kl(&p, &q).unwrap();
        assert!((v - 0.5 * (4.0f64 / 3.0).ln()).abs() < 1e-14);

        let eps = 1e-6;
        let p = pv(&[1.0 / (1.0 + eps), eps / (1.0 + eps)]);
        let q = pv(&[0.5, 0.5]);
        let v = classical_kl(&p, &q).unwrap();
        assert!((v - 2.0f64.ln()).abs() < 1e-4);

        assert!(classical_kl(&p, &pv(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0])).is_err());
    }

    #[test]
    fn classical_renyi_examples() {
        let p = pv(&[0.5, 0.5]);
        let q = pv(&[0.25, 0.75]);
        assert!(classical_renyi(&q, &q, 2.0).unwrap().abs() < 1e-14);
        let v = classical_renyi(&p, &q, 2.0).unwrap();
        assert!((v - (4.0f64 / 3.0).ln()).abs() < 1e-13);

        // alpha -> 1 recovers KL.
        let p = pv(&[0.4, 0.6]);
        let q = pv(&[0.5, 0.5]);
        let kl = classical_kl(&p, &q).unwrap();
        for alpha in [1.0 - 1e-4, 1.0 + 1e-4] {
            let r = classical_renyi(&p, &q, alpha).unwrap();
            assert!((r - kl).abs() < 1e-5, "alpha {alpha}: {r} vs {kl}");
        }
    }

    #[test]
    fn umegaki_examples() {
        let mut rng = Rng::new(211);
        let rho = random_density(3, &mut rng);
        assert!(umegaki(&rho, &rho).unwrap().abs() < 1e-10);

        let rho = diag_state(&[0.5, 0.5]);
        let sigma = diag_state(&[0.25, 0.75]);
        let v = umegaki(&rho, &sigma).unwrap();
        let kl = classical_kl(&pv(&[0.5, 0.5]), &pv(&[0.25, 0.75])).unwrap();
        assert!((v - kl).abs() < 1e-13);
        assert!((v - 0.5 * (4.0f64 / 3.0).ln()).abs() < 1e-13);
    }

    #[test]
    fn umegaki_nonnegative_and_faithful() {
        let mut rng = Rng::new(223);
        for _ in 0..200 {
            let rho = random_density(3, &mut rng);
            let sigma = random_density(3, &mut rng);
            let v = umegaki(&rho, &sigma).unwrap();
            assert!(v >= -1e-10);
        }
    }

    #[test]
    fn d_prime_examples() {
        let mut rng = Rng::new(227);
        let rho = random_density(2, &mut rng);
        assert!(d_prime(&rho, &rho).unwrap().abs() < 1e-10);

        // Commuting case agrees with Umegaki.
        let rho = diag_state(&[0.3, 0.7]);
        let sigma = diag_state(&[0.6, 0.4]);
        let v = d_prime(&rho, &sigma).unwrap();
        assert!((v - umegaki(&rho, &sigma).unwrap()).abs() < 1e-12);

        // Seeded non-commuting witness: the two divergences differ.
        let mut rng = Rng::with_stream(2024, 1);
        let rho = random_density(2, &mut rng);
        let sigma = random_density(2, &mut rng);
        let dp = d_prime(&rho, &sigma).unwrap();
        let um = umegaki(&rho, &sigma).unwrap();
        assert!(
            (dp - um).abs() > 1e-6,
            "expected distinct values, got {dp} vs {um}"
        );
    }

    #[test]
    fn quantum_renyi_examples() {
        let rho = diag_state(&[0.5, 0.5]);
        let sigma = diag_state(&[0.25, 0.75]);
        let v = renyi_alpha(&rho, &sigma, 2.0).unwrap();
        assert!((v - (4.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!(renyi_alpha(&sigma, &sigma, 2.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn alpha_z_specializations() {
        let mut rng = Rng::new(229);
        for trial in 0..500 {
            let dim = 2 + trial % 3;
            let rho = random_density(dim, &mut rng);
            let sigma = random_density(dim, &mut rng);
            let alpha = if trial % 2 == 0 {
                rng.uniform(0.2, 0.9)
            } else {
                rng.uniform(1.1, 3.0)
            };
            let r = renyi_alpha(&rho, &sigma, alpha).unwrap();
            let az1 = alpha_z(&rho, &sigma, AlphaZ::new(alpha, 1.0).unwrap()).unwrap();
            assert!((r - az1).abs() <= 1e-12 * r.abs().max(1.0), "z=1: {r} vs {az1}");

            let s = sandwiched(&rho, &sigma, alpha).unwrap();
            let aza = alpha_z(&rho, &sigma, AlphaZ::new(alpha, alpha).unwrap()).unwrap();
            assert!((s - aza).abs() <= 1e-12 * s.abs().max(1.0), "z=a: {s} vs {aza}");
        }
    }

    #[test]
    fn alpha_z_zero_on_equal_states_and_z_independent_commuting() {
        let mut rng = Rng::new(233);
        let rho = random_density(3, &mut rng);
        for &(a, z) in &[(0.5, 1.0), (2.0, 1.0), (2.0, 2.0), (3.0, 2.5)] {
            let v = alpha_z(&rho, &rho, AlphaZ::new(a, z).unwrap()).unwrap();
            assert!(v.abs() < 1e-10, "({a},{z}): {v}");
        }

        // Commuting pair: value independent of z.
        let rho = diag_state(&[0.2, 0.8]);
        let sigma = diag_state(&[0.55, 0.45]);
        let vals: Vec<f64> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&z| alpha_z(&rho, &sigma, AlphaZ::new(2.0, z).unwrap()).unwrap())
            .collect();
        let spread = vals.iter().cloned().fold(f64::MIN, f64::max)
            - vals.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread <= 1e-10, "spread {spread}: {vals:?}");
    }

    #[test]
    fn commuting_reduction_to_classical() {
        let mut rng = Rng::new(239);
        for _ in 0..100 {
            let n = 2 + rng.uniform_usize(3);
            let mut pw: Vec<f64> = (0..n).map(|_| rng.uniform(0.1, 1.0)).collect();
            let mut qw: Vec<f64> = (0..n).map(|_| rng.uniform(0.1, 1.0)).collect();
            let (ps, qs): (f64, f64) = (pw.iter().sum(), qw.iter().sum());
            pw.iter_mut().for_each(|x| *x /= ps);
            qw.iter_mut().for_each(|x| *x /= qs);
            let rho = diag_state(&pw);
            let sigma = diag_state(&qw);
            let p = pv(&pw);
            let q = pv(&qw);

            assert!((umegaki(&rho, &sigma).unwrap() - classical_kl(&p, &q).unwrap()).abs() < 1e-10);
            for &alpha in &[0.5, 2.0] {
                let cr = classical_renyi(&p, &q, alpha).unwrap();
                assert!((renyi_alpha(&rho, &sigma, alpha).unwrap() - cr).abs() < 1e-10);
                assert!((sandwiched(&rho, &sigma, alpha).unwrap() - cr).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn unitary_invariance() {
        let mut rng = Rng::new(241);
        for _ in 0..100 {
            let rho = random_density(3, &mut rng);
            let sigma = random_density(3, &mut rng);
            let u = random_unitary(3, &mut rng);
            let conj = |m: &ComplexMatrix| u.matmul(m).matmul(&u.adjoint());
            let (ru, su) = (conj(&rho), conj(&sigma));
            for div in [
                Divergence::Umegaki,
                Divergence::DPrime,
                Divergence::RenyiAlpha { alpha: 2.0 },
                Divergence::Sandwiched { alpha: 0.5 },
                Divergence::AlphaZ { alpha: 2.0, z: 1.5 },
            ] {
                let v1 = div.eval(&rho, &sigma).unwrap();
                let v2 = div.eval(&ru, &su).unwrap();
                assert!(
                    (v1 - v2).abs() <= 1e-10 * v1.abs().max(1.0),
                    "{}: {v1} vs {v2}",
                    div.label()
                );
            }
        }
    }

    #[test]
    fn az_to_pq_examples() {
        let (p, q, s) = az_to_pq(AlphaZ::new(2.0, 1.0).unwrap());
        assert_eq!((p, q, s), (2.0, -1.0, 1.0));

        let (p, q, s) = az_to_pq(AlphaZ::new(0.5, 0.5).unwrap());
        assert!((p - 1.0).abs() < 1e-15 && (q - 1.0).abs() < 1e-15 && (s - 0.5).abs() < 1e-15);

        let (p, q, s) = az_to_pq(AlphaZ::new(2.0, 2.0).unwrap());
        assert!((p - 1.0).abs() < 1e-15 && (q + 0.5).abs() < 1e-15 && (s - 2.0).abs() < 1e-15);
    }

    #[test]
    fn dpi_region_examples() {
        assert!(dpi_region(AlphaZ::new(2.0, 1.0).unwrap()));
        assert!(!dpi_region(AlphaZ::new(2.0, 0.5).unwrap()));
        assert!(!dpi_region(AlphaZ::new(0.5, 0.4).unwrap()));
        assert!(dpi_region(AlphaZ::new(0.5, 0.5).unwrap()));
        assert!(dpi_region(AlphaZ::new(0.5, 3.0).unwrap()));
        assert!(dpi_region(AlphaZ::new(3.0, 2.5).unwrap()));
        assert!(!dpi_region(AlphaZ::new(3.0, 1.5).unwrap()));
        assert!(!dpi_region(AlphaZ::new(-0.5, 1.0).unwrap()));
        assert!(dpi_region(AlphaZ::new(1.5, 1.5).unwrap()));
        assert!(!dpi_region(AlphaZ::new(1.5, 0.7).unwrap()));
    }

    #[test]
    fn probability_vector_validation() {
        assert!(ProbabilityVector::new(vec![0.5, 0.5]).is_ok());
        assert!(ProbabilityVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilityVector::new(vec![1.0, 0.0]).is_err());
        assert!(ProbabilityVector::new(vec![]).is_err());
        assert!(AlphaZ::new(1.0, 1.0).is_err());
        assert!(AlphaZ::new(2.0, 0.0).is_err());
    }
}
