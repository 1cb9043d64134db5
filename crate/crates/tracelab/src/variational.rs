//! Variational min/max identities for Schatten quasi-norm masses, their
//! n-variable chain generalization, and the reduction steps that decompose
//! the trace functions into one-variable pieces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{
    matrix_power, polar, random_invertible_conditioned, random_pd, schatten, ComplexMatrix,
};
use crate::rng::Rng;
use crate::trace_fn::psi;
use crate::trace_fn::PsiParams;

const HOLDER_TOL: f64 = 1e-12;

/// Exponent triple `(r0, r1, r2)` with `1/r0 = 1/r1 + 1/r2`; drives both
/// variational identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderTriple {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
}

impl HolderTriple {
    pub fn new(r0: f64, r1: f64, r2: f64) -> Result<Self> {
        if !(r0 > 0.0 && r1 > 0.0 && r2 > 0.0) {
            return Err(Error::InvalidExponent(format!(
                "Holder exponents ({r0}, {r1}, {r2}) must be positive"
            )));
        }
        let defect = (1.0 / r0 - 1.0 / r1 - 1.0 / r2).abs();
        if defect > HOLDER_TOL {
            return Err(Error::InvalidExponent(format!(
                "1/{r0} != 1/{r1} + 1/{r2} (defect {defect:.3e})"
            )));
        }
        Ok(Self { r0, r1, r2 })
    }

    /// The triple completed from `r1`, `r2`.
    pub fn from_parts(r1: f64, r2: f64) -> Result<Self> {
        if !(r1 > 0.0 && r2 > 0.0) {
            return Err(Error::InvalidExponent(format!(
                "Holder exponents ({r1}, {r2}) must be positive"
            )));
        }
        Self::new(r1 * r2 / (r1 + r2), r1, r2)
    }
}

/// `(r0/r1) Tr|XZ|^{r1} + (r0/r2) Tr|Z^{-1}Y|^{r2}` — minimized over Z this
/// equals `Tr|XY|^{r0}`.
pub fn min_objective(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    z: &ComplexMatrix,
    triple: &HolderTriple,
) -> Result<f64> {
    let z_inv = z.inverse()?;
    Ok(triple.r0 / triple.r1 * schatten(&x.matmul(z), triple.r1)?
        + triple.r0 / triple.r2 * schatten(&z_inv.matmul(y), triple.r2)?)
}

/// `(r1/r0) Tr|XZ|^{r0} - (r1/r2) Tr|Y^{-1}Z|^{r2}` — maximized over Z this
/// equals `Tr|XY|^{r1}`.
pub fn max_objective(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    z: &ComplexMatrix,
    triple: &HolderTriple,
) -> Result<f64> {
    let y_inv = y.inverse()?;
    Ok(triple.r1 / triple.r0 * schatten(&x.matmul(z), triple.r0)?
        - triple.r1 / triple.r2 * schatten(&y_inv.matmul(z), triple.r2)?)
}

/// Minimizer `Z = Y U |Y*X*|^{-r1/(r1+r2)}` with `Y*X* = U|Y*X*|` polar.
pub fn optimal_z_min(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    triple: &HolderTriple,
) -> Result<ComplexMatrix> {
    let w_star = y.adjoint().matmul(&x.adjoint());
    let factors = polar(&w_star)?;
    let power = matrix_power(&factors.modulus, -triple.r1 / (triple.r1 + triple.r2))?;
    Ok(y.matmul(&factors.unitary).matmul(&power))
}

/// Maximizer `Z = Y U |Y*X*|^{r1/r2}` with `Y*X* = U|Y*X*|` polar.
pub fn optimal_z_max(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    triple: &HolderTriple,
) -> Result<ComplexMatrix> {
    let w_star = y.adjoint().matmul(&x.adjoint());
    let factors = polar(&w_star)?;
    let power = matrix_power(&factors.modulus, triple.r1 / triple.r2)?;
    Ok(y.matmul(&factors.unitary).matmul(&power))
}

/// Holder's inequality for Schatten masses:
/// `Tr|XY|^{r0} <= (Tr|XZ|^{r1})^{r0/r1} (Tr|Z^{-1}Y|^{r2})^{r0/r2}`.
/// Returns `(lhs, rhs)`; Young's inequality then bounds `rhs` by
/// [`min_objective`].
pub fn holder_bound(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    z: &ComplexMatrix,
    triple: &HolderTriple,
) -> Result<(f64, f64)> {
    let lhs = schatten(&x.matmul(y), triple.r0)?;
    let z_inv = z.inverse()?;
    let rhs = schatten(&x.matmul(z), triple.r1)?.powf(triple.r0 / triple.r1)
        * schatten(&z_inv.matmul(y), triple.r2)?.powf(triple.r0 / triple.r2);
    Ok((lhs, rhs))
}

/// Exponents `r_0..r_n` with `1/r0 = sum_{j>=1} 1/r_j`, plus the telescoping
/// bookkeeping for the n-variable identities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainPlan {
    exponents: Vec<f64>,
}

impl ChainPlan {
    pub fn new(exponents: Vec<f64>) -> Result<Self> {
        if exponents.len() < 3 {
            return Err(Error::InvalidExponent(
                "chain plan needs r_0 and at least two r_j".into(),
            ));
        }
        if exponents.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::InvalidExponent("chain exponents must be positive".into()));
        }
        let defect =
            (1.0 / exponents[0] - exponents[1..].iter().map(|&r| 1.0 / r).sum::<f64>()).abs();
        if defect > HOLDER_TOL {
            return Err(Error::InvalidExponent(format!(
                "1/r0 != sum 1/r_j (defect {defect:.3e})"
            )));
        }
        Ok(Self { exponents })
    }

    /// Number of chained factors `n`.
    pub fn n(&self) -> usize {
        self.exponents.len() - 1
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    /// `alpha_j = sum_{k<=j} r0/r_k - 1` for `j = 1..n-1` (min identity).
    pub fn alphas(&self) -> Vec<f64> {
        let r0 = self.exponents[0];
        let mut acc = -1.0;
        self.exponents[1..self.exponents.len() - 1]
            .iter()
            .map(|&rk| {
                acc += r0 / rk;
                acc
            })
            .collect()
    }

    /// `beta_j = sum_{k>j} r1/r_k` for `j = 1..n-1` (max identity).
    pub fn betas(&self) -> Vec<f64> {
        let r1 = self.exponents[1];
        let n = self.n();
        let mut acc = 0.0;
        let mut rev: Vec<f64> = (1..n)
            .rev()
            .map(|j| {
                acc += r1 / self.exponents[j + 1];
                acc
            })
            .collect();
        rev.reverse();
        rev
    }
}

/// Result of evaluating a chain identity at its constructed optimizer.
#[derive(Debug, Clone)]
pub struct ChainOutcome {
    pub lhs: f64,
    pub objective: f64,
    pub zs: Vec<ComplexMatrix>,
}

fn chain_suffixes(xs: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    // suffix[j] = X_{j+2} ... X_n for j = 0..n-2 (1-based Z_j uses X_{j+1}..X_n).
    let n = xs.len();
    let dim = xs[0].dim();
    let mut suffix = vec![ComplexMatrix::identity(dim); n - 1];
    for j in (0..n - 1).rev() {
        let tail = if j + 2 < n {
            suffix[j + 1].clone()
        } else {
            ComplexMatrix::identity(dim)
        };
        suffix[j] = xs[j + 1].matmul(&tail);
    }
    suffix
}

/// Objective of the n-variable min identity at given `Z_1..Z_{n-1}`:
/// `(r0/r1) Tr|X_1 Z_1|^{r1} + sum_j (r0/r_j) Tr|Z_{j-1}^{-1} X_j Z_j|^{r_j}
///  + (r0/r_n) Tr|Z_{n-1}^{-1} X_n|^{r_n}`.
pub fn chain_min_objective(
    xs: &[ComplexMatrix],
    zs: &[ComplexMatrix],
    plan: &ChainPlan,
) -> Result<f64> {
    let n = plan.n();
    check_chain_inputs(xs, zs, n)?;
    let r = plan.exponents();
    let mut total = r[0] / r[1] * schatten(&xs[0].matmul(&zs[0]), r[1])?;
    for j in 2..n {
        let m = zs[j - 2].inverse()?.matmul(&xs[j - 1]).matmul(&zs[j - 1]);
        total += r[0] / r[j] * schatten(&m, r[j])?;
    }
    let m = zs[n - 2].inverse()?.matmul(&xs[n - 1]);
    total += r[0] / r[n] * schatten(&m, r[n])?;
    Ok(total)
}

/// Objective of the n-variable max identity at given `Z_1..Z_{n-1}`:
/// `(r1/r0) Tr|X_1 Z_1|^{r0} - sum_j (r1/r_j) Tr|Z_j^{-1} X_j^{-1} Z_{j-1}|^{r_j}
///  - (r1/r_n) Tr|X_n^{-1} Z_{n-1}|^{r_n}`.
pub fn chain_max_objective(
    xs: &[ComplexMatrix],
    zs: &[ComplexMatrix],
    plan: &ChainPlan,
) -> Result<f64> {
    let n = plan.n();
    check_chain_inputs(xs, zs, n)?;
    let r = plan.exponents();
    let mut total = r[1] / r[0] * schatten(&xs[0].matmul(&zs[0]), r[0])?;
    for j in 2..n {
        let m = zs[j - 1].inverse()?.matmul(&xs[j - 1].inverse()?).matmul(&zs[j - 2]);
        total -= r[1] / r[j] * schatten(&m, r[j])?;
    }
    let m = xs[n - 1].inverse()?.matmul(&zs[n - 2]);
    total -= r[1] / r[n] * schatten(&m, r[n])?;
    Ok(total)
}

fn check_chain_inputs(xs: &[ComplexMatrix], zs: &[ComplexMatrix], n: usize) -> Result<()> {
    if xs.len() != n || zs.len() != n - 1 {
        return Err(Error::DimensionMismatch(format!(
            "chain of {} factors expects {} Z's, got {} factors and {} Z's",
            n,
            n - 1,
            xs.len(),
            zs.len()
        )));
    }
    Ok(())
}

fn chain_optimizers(xs: &[ComplexMatrix], exponents_at: &[f64]) -> Result<Vec<ComplexMatrix>> {
    let n = xs.len();
    let mut w = xs[0].clone();
    for x in &xs[1..] {
        w = w.matmul(x);
    }
    let factors = polar(&w.adjoint())?;
    let suffix = chain_suffixes(xs);
    (0..n - 1)
        .map(|j| {
            let m_pow = matrix_power(&factors.modulus, exponents_at[j])?;
            Ok(suffix[j].matmul(&factors.unitary).matmul(&m_pow))
        })
        .collect()
}

/// n-variable min identity `Tr|X_1 ... X_n|^{r0}` with the optimizers
/// `Z_j = X_{j+1} ... X_n U M^{alpha_j}` where `X_n* ... X_1* = U M` polar.
pub fn chain_min(xs: &[ComplexMatrix], plan: &ChainPlan) -> Result<ChainOutcome> {
    let n = plan.n();
    if xs.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "plan expects {} factors, got {}",
            n,
            xs.len()
        )));
    }
    let mut w = xs[0].clone();
    for x in &xs[1..] {
        w = w.matmul(x);
    }
    let lhs = schatten(&w, plan.exponents()[0])?;
    let zs = chain_optimizers(xs, &plan.alphas())?;
    let objective = chain_min_objective(xs, &zs, plan)?;
    Ok(ChainOutcome { lhs, objective, zs })
}

/// n-variable max identity `Tr|X_1 ... X_n|^{r1}` with optimizers
/// `Z_j = X_{j+1} ... X_n U M^{beta_j}`. The exponent bookkeeping `beta_j`
/// telescopes the objective exactly; the equality is validated numerically.
pub fn chain_max(xs: &[ComplexMatrix], plan: &ChainPlan) -> Result<ChainOutcome> {
    let n = plan.n();
    if xs.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "plan expects {} factors, got {}",
            n,
            xs.len()
        )));
    }
    let mut w = xs[0].clone();
    for x in &xs[1..] {
        w = w.matmul(x);
    }
    let lhs = schatten(&w, plan.exponents()[1])?;
    let zs = chain_optimizers(xs, &plan.betas())?;
    let objective = chain_max_objective(xs, &zs, plan)?;
    Ok(ChainOutcome { lhs, objective, zs })
}

/// Which decomposition of the trace function is being exercised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionCase {
    /// Concave region: split into the two one-variable concave pieces.
    Step1,
    /// Convex regions (q < 0): max identity peels off the B-factor.
    Step2,
    /// One-variable piece `Tr H^{1/p}` for `p in (0,1) u (1,2]`.
    Step3a,
    /// One-variable piece `Tr H^{sigma}` for `p in [-1,0)`, `sigma in (0,1)`.
    Step3b,
}

impl ReductionCase {
    pub fn name(&self) -> &'static str {
        match self {
            ReductionCase::Step1 => "step1",
            ReductionCase::Step2 => "step2",
            ReductionCase::Step3a => "step3a",
            ReductionCase::Step3b => "step3b",
        }
    }
}

/// Exponent bookkeeping of a reduction step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionPlan {
    pub case: ReductionCase,
    /// `lambda = s(p+q)` (Step 1 only).
    pub lambda: Option<f64>,
    /// `1/t = 1/s - q` (Steps 2-3).
    pub t: Option<f64>,
    pub triple: HolderTriple,
}

const REGION_TOL: f64 = 1e-9;

/// Exponent plan for a reduction step, checking the parameters lie in the
/// region the step applies to.
pub fn reduction_plan(p: f64, q: f64, s: f64, case: ReductionCase) -> Result<ReductionPlan> {
    let out = |case: &'static str| Error::OutOfRegion { p, q, s, case };
    match case {
        ReductionCase::Step1 => {
            let in_region = 0.0 < q
                && q <= p
                && p <= 1.0
                && s > 0.0
                && s <= 1.0 / (p + q) + REGION_TOL;
            if !in_region {
                return Err(out("step1"));
            }
            let lambda = s * (p + q);
            Ok(ReductionPlan {
                case,
                lambda: Some(lambda),
                t: None,
                triple: HolderTriple::new(2.0 * s, 2.0 * lambda / p, 2.0 * lambda / q)?,
            })
        }
        ReductionCase::Step2 | ReductionCase::Step3a | ReductionCase::Step3b => {
            let convex_low = -1.0 <= q && q <= p && p <= 0.0 && !(p == 1.0 && q == -1.0);
            let convex_high = -1.0 <= q
                && q < 0.0
                && 1.0 <= p
                && p <= 2.0
                && !(p == 1.0 && q == -1.0)
                && s >= 1.0 / (p + q) - REGION_TOL;
            let in_region = s > 0.0
                && q < 0.0
                && match case {
                    ReductionCase::Step3a => convex_high,
                    ReductionCase::Step3b => convex_low,
                    _ => convex_low || convex_high,
                };
            if !in_region {
                return Err(out(case.name()));
            }
            let t = 1.0 / (1.0 / s - q);
            Ok(ReductionPlan {
                case,
                lambda: None,
                t: Some(t),
                triple: HolderTriple::new(2.0 * t, 2.0 * s, 2.0 / (-q))?,
            })
        }
    }
}

/// Numerical verdict of one reduction step on a concrete instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionReport {
    pub case: ReductionCase,
    /// The trace-function value the step decomposes.
    pub lhs: f64,
    /// Objective at the explicit optimizer; equals `lhs` up to roundoff.
    pub optimizer_objective: f64,
    pub relative_error: f64,
    /// Worst one-sided bound violation over the random-Z trials
    /// (positive means a violation; compare against `1e-10 * scale`).
    pub worst_violation: f64,
    pub trials: usize,
}

/// Verifies one reduction step on `(A, B, K)`: the decomposition's value at
/// its explicit optimizer matches the trace function, and random `Z` never
/// beat the optimum. Step-3 forms sample positive definite `Z` only.
pub fn verify_reduction(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    k: &ComplexMatrix,
    p: f64,
    q: f64,
    s: f64,
    case: ReductionCase,
    rng: &mut Rng,
    trials: usize,
) -> Result<ReductionReport> {
    let plan = reduction_plan(p, q, s, case)?;
    let dim = a.dim();
    match case {
        ReductionCase::Step1 => {
            let x = matrix_power(a, p / 2.0)?.matmul(k);
            let y = matrix_power(b, q / 2.0)?;
            let lhs = psi(a, b, k, PsiParams::new(p, q, s))?;
            let z_opt = optimal_z_min(&x, &y, &plan.triple)?;
            let at_opt = min_objective(&x, &y, &z_opt, &plan.triple)?;
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..trials {
                let z = random_invertible_conditioned(dim, rng);
                let obj = min_objective(&x, &y, &z, &plan.triple)?;
                worst = worst.max(lhs - obj);
            }
            Ok(report(case, lhs, at_opt, worst, trials))
        }
        ReductionCase::Step2 => {
            let x = matrix_power(a, p / 2.0)?.matmul(k);
            let y = matrix_power(b, q / 2.0)?;
            let lhs = psi(a, b, k, PsiParams::new(p, q, s))?;
            let z_opt = optimal_z_max(&x, &y, &plan.triple)?;
            let at_opt = max_objective(&x, &y, &z_opt, &plan.triple)?;
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..trials {
                let z = random_invertible_conditioned(dim, rng);
                let obj = max_objective(&x, &y, &z, &plan.triple)?;
                worst = worst.max(obj - lhs);
            }
            Ok(report(case, lhs, at_opt, worst, trials))
        }
        ReductionCase::Step3a => {
            // Tr H^{1/p} = opt_Z { (1/p) Tr H Z^{1-p} - ((1-p)/p) Tr Z } over
            // PD Z, max for p < 1 and min for p > 1; the step's effective
            // exponent t must equal 1/p.
            let t = plan.t.unwrap();
            if (t * p - 1.0).abs() > REGION_TOL {
                return Err(Error::OutOfRegion { p, q, s, case: "step3a (t != 1/p)" });
            }
            let h = k.adjoint().matmul(&matrix_power(a, p)?).matmul(k);
            let lhs = matrix_power(&h, 1.0 / p)?.trace().re;
            let objective = |z: &ComplexMatrix| -> Result<f64> {
                let z_pow = matrix_power(z, 1.0 - p)?;
                Ok((h.matmul(&z_pow).trace().re - (1.0 - p) * z.trace().re) / p)
            };
            let z_opt = matrix_power(&h, 1.0 / p)?;
            let at_opt = objective(&z_opt)?;
            let maximize = p < 1.0;
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..trials {
                let z = random_pd(dim, rng);
                let obj = objective(&z)?;
                worst = worst.max(if maximize { obj - lhs } else { lhs - obj });
            }
            Ok(report(case, lhs, at_opt, worst, trials))
        }
        ReductionCase::Step3b => {
            // Tr H^{sigma} = min_Z { sigma Tr H Z^{1-p}
            //   + (1-sigma) Tr Z^{sigma(1-p)/(sigma-1)} } over PD Z, with
            // sigma = t in (0,1) the step's effective exponent.
            let sigma = plan.t.unwrap();
            if !(sigma > 0.0 && sigma < 1.0) {
                return Err(Error::OutOfRegion { p, q, s, case: "step3b (t outside (0,1))" });
            }
            let h = k.adjoint().matmul(&matrix_power(a, p)?).matmul(k);
            let lhs = matrix_power(&h, sigma)?.trace().re;
            let u = sigma * (1.0 - p) / (sigma - 1.0);
            let objective = |z: &ComplexMatrix| -> Result<f64> {
                Ok(sigma * h.matmul(&matrix_power(z, 1.0 - p)?).trace().re
                    + (1.0 - sigma) * matrix_power(z, u)?.trace().re)
            };
            let z_opt = matrix_power(&h, (sigma - 1.0) / (1.0 - p))?;
            let at_opt = objective(&z_opt)?;
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..trials {
                let z = random_pd(dim, rng);
                let obj = objective(&z)?;
                worst = worst.max(lhs - obj);
            }
            Ok(report(case, lhs, at_opt, worst, trials))
        }
    }
}

fn report(
    case: ReductionCase,
    lhs: f64,
    at_opt: f64,
    worst: f64,
    trials: usize,
) -> ReductionReport {
    ReductionReport {
        case,
        lhs,
        optimizer_objective: at_opt,
        relative_error: (at_opt - lhs).abs() / lhs.abs().max(1.0),
        worst_violation: worst,
        trials,
    }
}
