//! Randomized joint-convexity/concavity probing, region classification, and
//! counterexample search for the trace functions, plus the auxiliary probes
//! (skew information, one-variable and three-variable functionals, dimension
//! doubling).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{
    random_density, random_invertible_conditioned, random_pd, random_self_adjoint, ComplexMatrix,
};
use crate::rng::Rng;
use crate::trace_fn::{normalize_params, psi, skew_functional, three_var, upsilon, PsiParams};

/// How the fixed contraction `K` of a probe run is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KMode {
    Identity,
    RandomFixed,
}

/// Parameters of a randomized midpoint probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub dim: usize,
    pub trials: usize,
    pub tol_rel: f64,
    pub seed: u64,
    pub k_mode: KMode,
}

impl ProbeConfig {
    pub fn new(dim: usize, trials: usize, seed: u64, k_mode: KMode) -> Result<Self> {
        if dim == 0 || trials == 0 {
            return Err(Error::InvalidConstruction(
                "probe needs dim >= 1 and trials >= 1".into(),
            ));
        }
        Ok(Self {
            dim,
            trials,
            tol_rel: 1e-8,
            seed,
            k_mode,
        })
    }
}

/// What a randomized probe can (fail to) falsify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClassificationLabel {
    ConcaveConsistent,
    ConvexConsistent,
    Neither,
    LinearConsistent,
    Inconclusive,
}

impl ClassificationLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClassificationLabel::ConcaveConsistent => "CONCAVE_CONSISTENT",
            ClassificationLabel::ConvexConsistent => "CONVEX_CONSISTENT",
            ClassificationLabel::Neither => "NEITHER",
            ClassificationLabel::LinearConsistent => "LINEAR_CONSISTENT",
            ClassificationLabel::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// Jensen midpoint margin `[f(P1) + f(P2)]/2 - f((P1+P2)/2)`: nonnegative
/// for jointly convex `f`, nonpositive for jointly concave `f`.
pub fn midpoint_margin(
    f: impl Fn(&ComplexMatrix, &ComplexMatrix) -> Result<f64>,
    p1: (&ComplexMatrix, &ComplexMatrix),
    p2: (&ComplexMatrix, &ComplexMatrix),
) -> Result<(f64, f64, f64)> {
    let f1 = f(p1.0, p1.1)?;
    let f2 = f(p2.0, p2.1)?;
    let mid_a = (p1.0 + p2.0).scale_re(0.5);
    let mid_b = (p1.1 + p2.1).scale_re(0.5);
    let fm = f(&mid_a, &mid_b)?;
    Ok((0.5 * (f1 + f2) - fm, f1, f2))
}

/// One violating sample pair, re-verifiable by direct evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MidpointWitness {
    pub a1: ComplexMatrix,
    pub b1: ComplexMatrix,
    pub a2: ComplexMatrix,
    pub b2: ComplexMatrix,
    pub margin: f64,
    pub tau: f64,
}

/// Violation counts and empirical label of one probed parameter point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub convexity_violations: usize,
    pub concavity_violations: usize,
    /// Evaluation failures, excluded from the counts.
    pub failures: usize,
    pub label: ClassificationLabel,
    pub convexity_witness: Option<MidpointWitness>,
    pub concavity_witness: Option<MidpointWitness>,
}

/// Runs `trials` midpoint tests of the trace function at `(p, q, s)` on
/// random PD pairs and labels the outcome. Deterministic in the config.
pub fn probe_point(p: f64, q: f64, s: f64, config: &ProbeConfig) -> Result<ProbeOutcome> {
    probe_point_stream(p, q, s, config, 0)
}

/// [`probe_point`] on an explicit RNG stream, for parallel grid scans.
pub fn probe_point_stream(
    p: f64,
    q: f64,
    s: f64,
    config: &ProbeConfig,
    stream: u64,
) -> Result<ProbeOutcome> {
    probe_point_inner(p, q, s, config, stream, None)
}

/// [`probe_point`] with an explicit fixed `K` instead of the config's
/// `k_mode` (e.g. a regularized `K + eps I`).
pub fn probe_point_with_k(
    p: f64,
    q: f64,
    s: f64,
    config: &ProbeConfig,
    k: &ComplexMatrix,
) -> Result<ProbeOutcome> {
    probe_point_inner(p, q, s, config, 0, Some(k))
}

fn probe_point_inner(
    p: f64,
    q: f64,
    s: f64,
    config: &ProbeConfig,
    stream: u64,
    k_override: Option<&ComplexMatrix>,
) -> Result<ProbeOutcome> {
    if s == 0.0 {
        return Err(Error::InvalidExponent("probe requires s != 0".into()));
    }
    let mut rng = Rng::with_stream(config.seed, stream);
    let k = match k_override {
        Some(k) => k.clone(),
        None => match config.k_mode {
            KMode::Identity => ComplexMatrix::identity(config.dim),
            KMode::RandomFixed => random_invertible_conditioned(config.dim, &mut rng),
        },
    };
    let params = PsiParams::new(p, q, s);
    let f = |a: &ComplexMatrix, b: &ComplexMatrix| psi(a, b, &k, params);

    let mut convexity_violations = 0usize;
    let mut concavity_violations = 0usize;
    let mut failures = 0usize;
    let mut all_linear = true;
    let mut convexity_witness = None;
    let mut concavity_witness = None;

    for _ in 0..config.trials {
        let a1 = random_pd(config.dim, &mut rng);
        let b1 = random_pd(config.dim, &mut rng);
        let a2 = random_pd(config.dim, &mut rng);
        let b2 = random_pd(config.dim, &mut rng);
        let (margin, f1, f2) = match midpoint_margin(&f, (&a1, &b1), (&a2, &b2)) {
            Ok(v) => v,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let tau = config.tol_rel * f1.abs().max(f2.abs()).max(1.0);
        if margin < -tau {
            convexity_violations += 1;
            all_linear = false;
            if convexity_witness.is_none() {
                convexity_witness = Some(MidpointWitness {
                    a1: a1.clone(),
                    b1: b1.clone(),
                    a2: a2.clone(),
                    b2: b2.clone(),
                    margin,
                    tau,
                });
            }
        } else if margin > tau {
            concavity_violations += 1;
            all_linear = false;
            if concavity_witness.is_none() {
                concavity_witness = Some(MidpointWitness {
                    a1: a1.clone(),
                    b1: b1.clone(),
                    a2: a2.clone(),
                    b2: b2.clone(),
                    margin,
                    tau,
                });
            }
        }
    }

    let label = match (convexity_violations, concavity_violations) {
        (0, 0) if all_linear => ClassificationLabel::LinearConsistent,
        (0, 0) => ClassificationLabel::Inconclusive,
        (0, _) => ClassificationLabel::ConvexConsistent,
        (_, 0) => ClassificationLabel::ConcaveConsistent,
        _ => ClassificationLabel::Neither,
    };
    Ok(ProbeOutcome {
        convexity_violations,
        concavity_violations,
        failures,
        label,
        convexity_witness,
        concavity_witness,
    })
}

const BOUNDARY_SNAP: f64 = 1e-9;

/// Exact classification of `(p, q, s)`: concave, convex, linear at the
/// single overlap point, or neither — the three proved regions are also
/// necessary, so everything else is NEITHER.
pub fn theory_label(p: f64, q: f64, s: f64) -> Result<ClassificationLabel> {
    let (params, _) = normalize_params(PsiParams::new(p, q, s))?;
    let (p, q, mut s) = (params.p, params.q, params.s);
    if p == 0.0 && q == 0.0 {
        return Err(Error::InvalidExponent(
            "(p, q) = (0, 0) is a constant function; no label".into(),
        ));
    }
    let pq = p + q;
    if pq != 0.0 && (s - 1.0 / pq).abs() < BOUNDARY_SNAP {
        s = 1.0 / pq;
    }

    let concave = 0.0 <= q && q <= p && p <= 1.0 && pq > 0.0 && s <= 1.0 / pq;
    let convex_low = -1.0 <= q && q <= p && p <= 0.0;
    let convex_high = -1.0 <= q
        && q <= 0.0
        && 1.0 <= p
        && p <= 2.0
        && !(p == 1.0 && q == -1.0)
        && pq > 0.0
        && s >= 1.0 / pq;
    let convex = convex_low || convex_high;

    Ok(match (concave, convex) {
        (true, true) => ClassificationLabel::LinearConsistent,
        (true, false) => ClassificationLabel::ConcaveConsistent,
        (false, true) => ClassificationLabel::ConvexConsistent,
        (false, false) => ClassificationLabel::Neither,
    })
}

/// `s` specification of a grid scan: fixed, or the boundary value `1/(p+q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SValue {
    Fixed(f64),
    InversePqSum,
}

impl SValue {
    fn resolve(&self, p: f64, q: f64) -> Option<f64> {
        match *self {
            SValue::Fixed(s) => Some(s),
            SValue::InversePqSum => {
                if p + q > 0.0 {
                    Some(1.0 / (p + q))
                } else {
                    None
                }
            }
        }
    }
}

/// One grid node of a region scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionEntry {
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub dim: usize,
    pub trials: usize,
    pub convexity_violations: usize,
    pub concavity_violations: usize,
    pub empirical: ClassificationLabel,
    pub theoretical: ClassificationLabel,
    /// True iff the empirical counts record no violation the theoretical
    /// label forbids.
    pub agrees: bool,
}

/// Region scan over a parameter grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionReport {
    pub entries: Vec<RegionEntry>,
}

fn agrees(theoretical: ClassificationLabel, conv_v: usize, conc_v: usize) -> bool {
    match theoretical {
        ClassificationLabel::ConcaveConsistent => conc_v == 0,
        ClassificationLabel::ConvexConsistent => conv_v == 0,
        ClassificationLabel::LinearConsistent => conv_v == 0 && conc_v == 0,
        ClassificationLabel::Neither | ClassificationLabel::Inconclusive => true,
    }
}

/// Probes every `(p, q, s)` node of the grid in parallel (per-node RNG
/// streams keep the result independent of scheduling). Nodes where `s` is
/// undefined or `(p, q) = (0, 0)` are skipped.
pub fn scan_grid(
    p_values: &[f64],
    q_values: &[f64],
    s_values: &[SValue],
    config: &ProbeConfig,
) -> Result<RegionReport> {
    let mut nodes = Vec::new();
    for &p in p_values {
        for &q in q_values {
            for sv in s_values {
                if p == 0.0 && q == 0.0 {
                    continue;
                }
                if let Some(s) = sv.resolve(p, q) {
                    if s != 0.0 {
                        nodes.push((p, q, s));
                    }
                }
            }
        }
    }
    let entries: Result<Vec<RegionEntry>> = nodes
        .par_iter()
        .enumerate()
        .map(|(idx, &(p, q, s))| {
            let outcome = probe_point_stream(p, q, s, config, idx as u64)?;
            let theoretical = theory_label(p, q, s)?;
            Ok(RegionEntry {
                p,
                q,
                s,
                dim: config.dim,
                trials: config.trials,
                convexity_violations: outcome.convexity_violations,
                concavity_violations: outcome.concavity_violations,
                empirical: outcome.label,
                theoretical,
                agrees: agrees(
                    theoretical,
                    outcome.convexity_violations,
                    outcome.concavity_violations,
                ),
            })
        })
        .collect();
    Ok(RegionReport { entries: entries? })
}

/// Which protected property a counterexample search attacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationTarget {
    Concavity,
    Convexity,
}

/// Searches (random restarts + greedy multiplicative perturbation, `K = I`)
/// for a midpoint violation with margin beyond `10 tau`. `budget` counts
/// restarts.
pub fn search_counterexample(
    p: f64,
    q: f64,
    s: f64,
    target: ViolationTarget,
    dim: usize,
    budget: usize,
    rng: &mut Rng,
) -> Result<Option<MidpointWitness>> {
    let k = ComplexMatrix::identity(dim);
    let params = PsiParams::new(p, q, s);
    let f = |a: &ComplexMatrix, b: &ComplexMatrix| psi(a, b, &k, params);
    // Violating margin, positive when the target property is broken.
    let violation = |margin: f64| match target {
        ViolationTarget::Concavity => margin,
        ViolationTarget::Convexity => -margin,
    };

    for _ in 0..budget {
        let mut quad: Vec<ComplexMatrix> = (0..4).map(|_| random_pd(dim, rng)).collect();
        let eval = |quad: &[ComplexMatrix]| -> Result<(f64, f64)> {
            let (margin, f1, f2) =
                midpoint_margin(&f, (&quad[0], &quad[1]), (&quad[2], &quad[3]))?;
            let tau = 1e-8 * f1.abs().max(f2.abs()).max(1.0);
            Ok((violation(margin), tau))
        };
        let (mut best, mut tau) = match eval(&quad) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let mut step = 0.1;
        for _ in 0..50 {
            if best > 10.0 * tau {
                break;
            }
            let cand: Vec<ComplexMatrix> = quad
                .iter()
                .map(|m| {
                    let g = ComplexMatrix::from_fn(dim, dim, |_, _| rng.complex_normal());
                    let factor = &ComplexMatrix::identity(dim) + &g.scale_re(step);
                    factor.matmul(m).matmul(&factor.adjoint())
                })
                .collect();
            match eval(&cand) {
                Ok((v, t)) if v > best => {
                    best = v;
                    tau = t;
                    quad = cand;
                }
                _ => step *= 0.5,
            }
        }
        if best > 10.0 * tau {
            let margin = match target {
                ViolationTarget::Concavity => best,
                ViolationTarget::Convexity => -best,
            };
            return Ok(Some(MidpointWitness {
                a1: quad[0].clone(),
                b1: quad[1].clone(),
                a2: quad[2].clone(),
                b2: quad[3].clone(),
                margin,
                tau,
            }));
        }
    }
    Ok(None)
}

/// Concavity violations of `rho -> skew_functional(rho, K, p)` over random
/// density pairs with a fresh random self-adjoint `K` per trial.
pub fn probe_skew(p: f64, dim: usize, trials: usize, rng: &mut Rng) -> Result<usize> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidExponent(format!("skew probe needs p in (0,1), got {p}")));
    }
    let mut violations = 0usize;
    for _ in 0..trials {
        let k = random_self_adjoint(dim, rng);
        let rho1 = random_density(dim, rng);
        let rho2 = random_density(dim, rng);
        let f1 = skew_functional(&rho1, &k, p)?;
        let f2 = skew_functional(&rho2, &k, p)?;
        let mid = (&rho1 + &rho2).scale_re(0.5);
        let fm = skew_functional(&mid, &k, p)?;
        let margin = 0.5 * (f1 + f2) - fm;
        let tau = 1e-8 * f1.abs().max(f2.abs()).max(1.0);
        if margin > tau {
            violations += 1;
        }
    }
    Ok(violations)
}

/// Midpoint test of `A -> upsilon(A; K, p, s)` with one random fixed `K`.
/// Returns `(convexity_violations, concavity_violations)`.
pub fn probe_upsilon(
    p: f64,
    s: f64,
    dim: usize,
    trials: usize,
    rng: &mut Rng,
) -> Result<(usize, usize)> {
    let k = random_invertible_conditioned(dim, rng);
    let mut conv = 0usize;
    let mut conc = 0usize;
    for _ in 0..trials {
        let a1 = random_pd(dim, rng);
        let a2 = random_pd(dim, rng);
        let f1 = upsilon(&a1, &k, p, s)?;
        let f2 = upsilon(&a2, &k, p, s)?;
        let mid = (&a1 + &a2).scale_re(0.5);
        let fm = upsilon(&mid, &k, p, s)?;
        let margin = 0.5 * (f1 + f2) - fm;
        let tau = 1e-8 * f1.abs().max(f2.abs()).max(1.0);
        if margin < -tau {
            conv += 1;
        } else if margin > tau {
            conc += 1;
        }
    }
    Ok((conv, conc))
}

/// Three-argument midpoint test of the three-variable trace functional.
/// Returns `(convexity_violations, concavity_violations)`.
pub fn probe_three_var(
    p: f64,
    q: f64,
    r: f64,
    dim: usize,
    trials: usize,
    rng: &mut Rng,
) -> Result<(usize, usize)> {
    if p == 0.0 || q == 0.0 || r == 0.0 {
        return Err(Error::InvalidExponent("three-variable probe needs nonzero exponents".into()));
    }
    let mut conv = 0usize;
    let mut conc = 0usize;
    for _ in 0..trials {
        let mats: Vec<ComplexMatrix> = (0..6).map(|_| random_pd(dim, rng)).collect();
        let f1 = three_var(&mats[0], &mats[1], &mats[2], p, q, r)?;
        let f2 = three_var(&mats[3], &mats[4], &mats[5], p, q, r)?;
        let mid: Vec<ComplexMatrix> =
            (0..3).map(|i| (&mats[i] + &mats[i + 3]).scale_re(0.5)).collect();
        let fm = three_var(&mid[0], &mid[1], &mid[2], p, q, r)?;
        let margin = 0.5 * (f1 + f2) - fm;
        let tau = 1e-8 * f1.abs().max(f2.abs()).max(1.0);
        if margin < -tau {
            conv += 1;
        } else if margin > tau {
            conc += 1;
        }
    }
    Ok((conv, conc))
}

/// Matched-sample comparison of the joint midpoint test with its
/// dimension-doubled one-variable embedding `Phi(X) = psi(X, X; K~)` on
/// `X = diag(B, A)` with `K~ = [[0,0],[K,0]]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoublingReport {
    pub joint_convexity_violations: usize,
    pub joint_concavity_violations: usize,
    pub embedded_convexity_violations: usize,
    pub embedded_concavity_violations: usize,
    /// Largest `|joint margin - embedded margin| / scale` observed.
    pub max_margin_gap: f64,
}

pub fn doubling_check(
    p: f64,
    q: f64,
    s: f64,
    dim: usize,
    trials: usize,
    rng: &mut Rng,
) -> Result<DoublingReport> {
    let k = random_invertible_conditioned(dim, rng);
    let zero = ComplexMatrix::zeros(dim, dim);
    let k_tilde = ComplexMatrix::from_blocks(&zero, &zero, &k, &zero);
    let params = PsiParams::new(p, q, s);

    let mut report = DoublingReport {
        joint_convexity_violations: 0,
        joint_concavity_violations: 0,
        embedded_convexity_violations: 0,
        embedded_concavity_violations: 0,
        max_margin_gap: 0.0,
    };
    for _ in 0..trials {
        let a1 = random_pd(dim, rng);
        let b1 = random_pd(dim, rng);
        let a2 = random_pd(dim, rng);
        let b2 = random_pd(dim, rng);

        let f = |a: &ComplexMatrix, b: &ComplexMatrix| psi(a, b, &k, params);
        let (joint, f1, f2) = midpoint_margin(f, (&a1, &b1), (&a2, &b2))?;
        let tau = 1e-8 * f1.abs().max(f2.abs()).max(1.0);

        let embed = |a: &ComplexMatrix, b: &ComplexMatrix| ComplexMatrix::block_diag(&[b, a]);
        let phi = |x: &ComplexMatrix| psi(x, x, &k_tilde, params);
        let x1 = embed(&a1, &b1);
        let x2 = embed(&a2, &b2);
        let g1 = phi(&x1)?;
        let g2 = phi(&x2)?;
        let gm = phi(&(&x1 + &x2).scale_re(0.5))?;
        let embedded = 0.5 * (g1 + g2) - gm;

        let scale = f1.abs().max(f2.abs()).max(1.0);
        report.max_margin_gap = report.max_margin_gap.max((joint - embedded).abs() / scale);
        if joint < -tau {
            report.joint_convexity_violations += 1;
        } else if joint > tau {
            report.joint_concavity_violations += 1;
        }
        if embedded < -tau {
            report.embedded_convexity_violations += 1;
        } else if embedded > tau {
            report.embedded_concavity_violations += 1;
        }
    }
    Ok(report)
}
