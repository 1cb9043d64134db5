//! CPTP-map machinery: Kraus and Stinespring representations, the pinching
//! channel, block-diagonal embeddings, Haar twirls, and DPI margin testing.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::entropy::Divergence;
use crate::error::{Error, Result};
use crate::matrix::{
    hermitian_eig, partial_trace, random_pd, random_unitary, ComplexMatrix, TraceSide,
};
use crate::rng::Rng;

const TP_TOL: f64 = 1e-10;
const UNITARY_TOL: f64 = 1e-10;

/// Channel in Kraus form: `rho -> sum_i K_i rho K_i*`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KrausChannel {
    ops: Vec<ComplexMatrix>,
}

impl KrausChannel {
    /// Validates trace preservation `sum K_i* K_i = I` within 1e-10.
    pub fn new(ops: Vec<ComplexMatrix>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidConstruction("channel needs Kraus operators".into()));
        }
        let (rows, cols) = (ops[0].rows(), ops[0].cols());
        if ops.iter().any(|k| k.rows() != rows || k.cols() != cols) {
            return Err(Error::DimensionMismatch("Kraus operators of unequal shape".into()));
        }
        let mut total = ComplexMatrix::zeros(cols, cols);
        for k in &ops {
            total = &total + &k.adjoint().matmul(k);
        }
        let defect = total.dist(&ComplexMatrix::identity(cols));
        if defect > TP_TOL * (cols as f64).sqrt() {
            return Err(Error::InvalidConstruction(format!(
                "not trace-preserving: ||sum K*K - I|| = {defect:.3e}"
            )));
        }
        Ok(Self { ops })
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn dim_in(&self) -> usize {
        self.ops[0].cols()
    }

    pub fn dim_out(&self) -> usize {
        self.ops[0].rows()
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            ops: vec![ComplexMatrix::identity(dim)],
        }
    }

    /// `sum_i K_i rho K_i*`.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.rows() != self.dim_in() || rho.cols() != self.dim_in() {
            return Err(Error::DimensionMismatch(format!(
                "channel acts on dim {}, state has dim {}",
                self.dim_in(),
                rho.rows()
            )));
        }
        let mut out = ComplexMatrix::zeros(self.dim_out(), self.dim_out());
        for k in &self.ops {
            out = &out + &k.matmul(rho).matmul(&k.adjoint());
        }
        Ok(out)
    }
}

/// `E(gamma) = Tr_2 U (gamma (x) delta) U*` with environment state `delta`.
#[derive(Debug, Clone)]
pub struct StinespringDilation {
    pub unitary: ComplexMatrix,
    pub env_state: ComplexMatrix,
    pub env_dim: usize,
}

impl StinespringDilation {
    pub fn new(unitary: ComplexMatrix, env_state: ComplexMatrix) -> Result<Self> {
        let env_dim = env_state.dim();
        if !env_state.is_square() || !unitary.is_square() {
            return Err(Error::DimensionMismatch("dilation pieces must be square".into()));
        }
        if unitary.dim() % env_dim != 0 {
            return Err(Error::DimensionMismatch(format!(
                "unitary dim {} not divisible by env dim {}",
                unitary.dim(),
                env_dim
            )));
        }
        let defect = unitary
            .adjoint()
            .matmul(&unitary)
            .dist(&ComplexMatrix::identity(unitary.dim()));
        if defect > UNITARY_TOL * (unitary.dim() as f64).sqrt() {
            return Err(Error::InvalidConstruction(format!(
                "not unitary: ||U*U - I|| = {defect:.3e}"
            )));
        }
        if env_state.hermiticity_defect() > 1e-10
            || (env_state.trace().re - 1.0).abs() > 1e-10
        {
            return Err(Error::InvalidConstruction(
                "environment state must be a density matrix".into(),
            ));
        }
        Ok(Self {
            unitary,
            env_state,
            env_dim,
        })
    }

    pub fn sys_dim(&self) -> usize {
        self.unitary.dim() / self.env_dim
    }
}

/// `Tr_2 U (gamma (x) delta) U*`.
pub fn stinespring_apply(
    dilation: &StinespringDilation,
    gamma: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let dim = dilation.sys_dim();
    if gamma.rows() != dim || gamma.cols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "dilation acts on dim {dim}, state has dim {}",
            gamma.rows()
        )));
    }
    let joint = gamma.kron(&dilation.env_state);
    let evolved = dilation
        .unitary
        .matmul(&joint)
        .matmul(&dilation.unitary.adjoint());
    partial_trace(&evolved, dim, dilation.env_dim, TraceSide::Second)
}

/// Kraus operators `K_{ij} = sqrt(mu_j) (I (x) <i|) U (I (x) |e_j>)` over the
/// environment basis and the eigenpairs `(mu_j, e_j)` of `delta`. Operators
/// with negligible weight are dropped.
pub fn kraus_from_stinespring(dilation: &StinespringDilation) -> Result<KrausChannel> {
    let dim = dilation.sys_dim();
    let ne = dilation.env_dim;
    let eig = hermitian_eig(&dilation.env_state)?;
    let u = &dilation.unitary;
    let mut ops = Vec::new();
    for j in 0..ne {
        let mu = eig.eigenvalues[j].max(0.0);
        if mu <= 1e-14 {
            continue;
        }
        let root = mu.sqrt();
        for i in 0..ne {
            let k = ComplexMatrix::from_fn(dim, dim, |h1, h2| {
                (0..ne)
                    .map(|e| u[(h1 * ne + i, h2 * ne + e)] * eig.eigenvectors[(e, j)])
                    .sum::<Complex64>()
                    * root
            });
            if k.frobenius_norm() > 1e-12 {
                ops.push(k);
            }
        }
    }
    KrausChannel::new(ops)
}

/// Random channel from a Haar-like dilation unitary and a pure environment
/// state, so the Kraus count equals `env_dim`.
pub fn random_channel(dim: usize, env_dim: usize, rng: &mut Rng) -> KrausChannel {
    let u = random_unitary(dim * env_dim, rng);
    let ops = (0..env_dim)
        .map(|i| ComplexMatrix::from_fn(dim, dim, |h1, h2| u[(h1 * env_dim + i, h2 * env_dim)]))
        .collect();
    KrausChannel::new(ops).expect("isometry columns of a unitary are trace-preserving")
}

/// Pinching channel on `H (+) H`: `[[a,b],[c,d]] -> (1/2) diag(a+d, a+d)`.
pub fn pinching_channel(n: usize) -> KrausChannel {
    let zero = ComplexMatrix::zeros(n, n);
    let eye = ComplexMatrix::identity(n).scale_re(std::f64::consts::FRAC_1_SQRT_2);
    let ops = vec![
        ComplexMatrix::from_blocks(&eye, &zero, &zero, &zero),
        ComplexMatrix::from_blocks(&zero, &eye, &zero, &zero),
        ComplexMatrix::from_blocks(&zero, &zero, &eye, &zero),
        ComplexMatrix::from_blocks(&zero, &zero, &zero, &eye),
    ];
    KrausChannel::new(ops).expect("pinching Kraus operators are trace-preserving")
}

/// `diag(lambda rho1, (1-lambda) rho2)` on `H (+) H`.
pub fn block_embed(
    rho1: &ComplexMatrix,
    rho2: &ComplexMatrix,
    lambda: f64,
) -> Result<ComplexMatrix> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch("block embedding of unequal dims".into()));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidConstruction(format!(
            "mixing weight {lambda} outside (0,1)"
        )));
    }
    let top = rho1.scale_re(lambda);
    let bottom = rho2.scale_re(1.0 - lambda);
    Ok(ComplexMatrix::block_diag(&[&top, &bottom]))
}

/// Exact Haar average `int (I (x) u) M (I (x) u*) du = Tr_2(M) (x) I/N'`.
pub fn twirl_exact(m: &ComplexMatrix, dim: usize, env_dim: usize) -> Result<ComplexMatrix> {
    let reduced = partial_trace(m, dim, env_dim, TraceSide::Second)?;
    Ok(reduced.kron(&ComplexMatrix::identity(env_dim).scale_re(1.0 / env_dim as f64)))
}

/// Monte-Carlo estimate of the Haar twirl from `samples` random unitaries.
pub fn twirl_monte_carlo(
    m: &ComplexMatrix,
    dim: usize,
    env_dim: usize,
    samples: usize,
    rng: &mut Rng,
) -> Result<ComplexMatrix> {
    if samples == 0 {
        return Err(Error::InvalidConstruction("twirl needs at least one sample".into()));
    }
    if m.rows() != dim * env_dim || m.cols() != dim * env_dim {
        return Err(Error::DimensionMismatch(format!(
            "twirl of {}x{} matrix, expected side {}",
            m.rows(),
            m.cols(),
            dim * env_dim
        )));
    }
    let eye = ComplexMatrix::identity(dim);
    let mut total = ComplexMatrix::zeros(m.rows(), m.cols());
    for _ in 0..samples {
        let u = eye.kron(&random_unitary(env_dim, rng));
        total = &total + &u.matmul(m).matmul(&u.adjoint());
    }
    Ok(total.scale_re(1.0 / samples as f64))
}

fn positivity_guard(m: &ComplexMatrix) -> Result<()> {
    let eig = hermitian_eig(m)?;
    let lo = eig.eigenvalues[0];
    let hi = *eig.eigenvalues.last().unwrap();
    let ratio = lo / hi.max(1e-300);
    if ratio <= 1e-12 {
        return Err(Error::SingularOutput { ratio });
    }
    Ok(())
}

/// `D(rho || sigma) - D(E(rho) || E(sigma))`; DPI holds iff this is >= 0.
pub fn dpi_margin(
    divergence: &Divergence,
    channel: &KrausChannel,
    rho: &ComplexMatrix,
    sigma: &ComplexMatrix,
) -> Result<f64> {
    let out_rho = channel.apply(rho)?;
    let out_sigma = channel.apply(sigma)?;
    positivity_guard(&out_rho)?;
    positivity_guard(&out_sigma)?;
    Ok(divergence.eval(rho, sigma)? - divergence.eval(&out_rho, &out_sigma)?)
}

/// A found DPI violation: the channel, the state pair, and the margin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DpiWitness {
    pub channel: KrausChannel,
    pub rho: ComplexMatrix,
    pub sigma: ComplexMatrix,
    pub margin: f64,
    /// `D(rho || sigma)`, the scale the threshold was measured against.
    pub reference: f64,
}

fn normalize_pd(m: &ComplexMatrix) -> ComplexMatrix {
    m.scale_re(1.0 / m.trace().re)
}

/// Searches for a DPI violation: random restarts, each followed by greedy
/// multiplicative perturbation of the states' Ginibre-like factors. `budget`
/// counts margin evaluations; returns the first witness with
/// `margin < -1e-7 * max(1, |D(rho||sigma)|)`, or `None`.
pub fn dpi_search_violation(
    divergence: &Divergence,
    dim: usize,
    env_dim: usize,
    budget: usize,
    rng: &mut Rng,
) -> Result<Option<DpiWitness>> {
    let mut spent = 0usize;
    let threshold = |reference: f64| -1e-7 * reference.abs().max(1.0);

    while spent < budget {
        let channel = random_channel(dim, env_dim, rng);
        let mut rho = random_pd(dim, rng);
        let mut sigma = random_pd(dim, rng);
        rho = normalize_pd(&rho);
        sigma = normalize_pd(&sigma);

        let mut best = match dpi_margin(divergence, &channel, &rho, &sigma) {
            Ok(v) => v,
            Err(_) => continue,
        };
        spent += 1;
        let mut reference = divergence.eval(&rho, &sigma)?;
        if best < threshold(reference) {
            return Ok(Some(DpiWitness {
                channel,
                rho,
                sigma,
                margin: best,
                reference,
            }));
        }

        let mut step = 0.1;
        for _ in 0..50 {
            if spent >= budget {
                break;
            }
            let perturb = |m: &ComplexMatrix, rng: &mut Rng, step: f64| {
                let dim = m.dim();
                let g = ComplexMatrix::from_fn(dim, dim, |_, _| rng.complex_normal());
                let factor = &ComplexMatrix::identity(dim) + &g.scale_re(step);
                normalize_pd(&factor.matmul(m).matmul(&factor.adjoint()))
            };
            let cand_rho = perturb(&rho, rng, step);
            let cand_sigma = perturb(&sigma, rng, step);
            let margin = match dpi_margin(divergence, &channel, &cand_rho, &cand_sigma) {
                Ok(v) => {
                    spent += 1;
                    v
                }
                Err(_) => {
                    spent += 1;
                    continue;
                }
            };
            if margin < best {
                best = margin;
                rho = cand_rho;
                sigma = cand_sigma;
                reference = divergence.eval(&rho, &sigma)?;
                if best < threshold(reference) {
                    return Ok(Some(DpiWitness {
                        channel,
                        rho,
                        sigma,
                        margin: best,
                        reference,
                    }));
                }
            } else {
                step *= 0.5;
            }
        }
    }
    Ok(None)
}
