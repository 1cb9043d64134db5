//! Command-line front end: region scans, identity-verification suites,
//! DPI experiments, divergence evaluation, and single-point probes, with
//! CSV/JSON/SVG report emission.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use tracelab::channel::{dpi_margin, dpi_search_violation, random_channel, DpiWitness};
use tracelab::entropy::{dpi_region, AlphaZ, Divergence};
use tracelab::matrix::{
    random_density, random_invertible_conditioned, random_pd, schatten,
};
use tracelab::probe::{
    probe_point, probe_point_with_k, scan_grid, search_counterexample, theory_label, KMode,
    ProbeConfig, RegionEntry, RegionReport, SValue, ViolationTarget,
};
use tracelab::variational::{
    chain_max, chain_min, max_objective, min_objective, optimal_z_max, optimal_z_min, ChainPlan,
    HolderTriple, ReductionCase,
};
use tracelab::{ComplexMatrix, Error, Result, Rng};

const EXIT_USAGE: u8 = 1;
const EXIT_INCONSISTENT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "tracelab", about = "Numerical laboratory for two-parameter trace functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Probe a (p, q, s) grid and compare against the proved regions.
    Scan(ScanArgs),
    /// Run the variational-identity verification suites.
    Verify(VerifyArgs),
    /// Data-processing-inequality experiments over random channels.
    Dpi(DpiArgs),
    /// Evaluate a divergence on a state pair loaded from JSON.
    Entropy(EntropyArgs),
    /// Deep probe of a single (p, q, s) point.
    Probe(ProbeArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KModeArg {
    Identity,
    Random,
}

impl From<KModeArg> for KMode {
    fn from(v: KModeArg) -> KMode {
        match v {
            KModeArg::Identity => KMode::Identity,
            KModeArg::Random => KMode::RandomFixed,
        }
    }
}

#[derive(Args)]
struct ScanArgs {
    /// p values: comma-separated scalars and/or lo:hi:step ranges
    #[arg(long, allow_hyphen_values = true)]
    p: String,
    /// q values, same syntax as --p
    #[arg(long, allow_hyphen_values = true)]
    q: String,
    /// s values: scalars, ranges, or `inv` for s = 1/(p+q)
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    s: String,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative tolerance for violation counting
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = KModeArg::Identity)]
    k_mode: KModeArg,
    /// CSV output path (stdout when omitted)
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// all | two-variable | chain | reductions
    #[arg(long, default_value = "all")]
    suite: String,
    /// Chain length (number of factors)
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DivKind {
    Umegaki,
    DPrime,
    Renyi,
    Sandwiched,
    AlphaZ,
}

#[derive(Args)]
struct DpiArgs {
    #[arg(long, value_enum, default_value_t = DivKind::AlphaZ)]
    divergence: DivKind,
    /// alpha values (scalars/ranges); required for renyi, sandwiched, alpha-z
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// z values (scalars/ranges); required for alpha-z
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 3)]
    env_dim: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Margin-evaluation budget for out-of-region violation search
    #[arg(long, default_value_t = 100_000)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct EntropyArgs {
    /// JSON file with {"rho": ..., "sigma": ...} as nested [re, im] arrays
    #[arg(long)]
    states: PathBuf,
    #[arg(long, value_enum, default_value_t = DivKind::Umegaki)]
    divergence: DivKind,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    z: Option<f64>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long, allow_hyphen_values = true)]
    p: f64,
    #[arg(long, allow_hyphen_values = true)]
    q: f64,
    #[arg(long, allow_hyphen_values = true)]
    s: f64,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = KModeArg::Identity)]
    k_mode: KModeArg,
    /// Replace K by K + EPS*I before probing
    #[arg(long, value_name = "EPS")]
    regularize_k: Option<f64>,
    /// Restart budget for directed counterexample search (off by default)
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    json: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version are not usage errors.
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Scan(args) => run_scan(&args),
        Command::Verify(args) => run_verify(&args),
        Command::Dpi(args) => run_dpi(&args),
        Command::Entropy(args) => run_entropy(&args),
        Command::Probe(args) => run_probe(&args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Lib(e)) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::NoConvergence { .. } => EXIT_NUMERICAL,
                _ => EXIT_USAGE,
            };
            ExitCode::from(code)
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

enum CliError {
    Usage(String),
    Lib(Error),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

type CliResult = std::result::Result<u8, CliError>;

/// 17 significant digits: round-trip exact for f64.
fn fmt17(v: f64) -> String {
    format!("{:.16e}", v)
}

const SNAP: f64 = 1e-12;

fn snap_zero(v: f64) -> f64 {
    if v.abs() < SNAP {
        0.0
    } else {
        v
    }
}

/// Parses one token: a scalar or an inclusive `lo:hi:step` range.
fn parse_token(token: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = token.split(':').collect();
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| format!("invalid number {s:?}"))
    };
    match parts.as_slice() {
        [one] => Ok(vec![snap_zero(num(one)?)]),
        [lo, hi, step] => {
            let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
            if step <= 0.0 || hi < lo {
                return Err(format!("bad range {token:?}: need lo <= hi and step > 0"));
            }
            let mut values = Vec::new();
            let mut i = 0usize;
            loop {
                let v = lo + i as f64 * step;
                if v > hi + SNAP {
                    break;
                }
                let v = if (v - hi).abs() < SNAP { hi } else { v };
                values.push(snap_zero(v));
                i += 1;
            }
            Ok(values)
        }
        _ => Err(format!("bad token {token:?}: expected V or lo:hi:step")),
    }
}

fn parse_values(spec: &str) -> std::result::Result<Vec<f64>, String> {
    let mut values = Vec::new();
    for token in spec.split(',').filter(|t| !t.is_empty()) {
        values.extend(parse_token(token)?);
    }
    Ok(values)
}

fn parse_s_values(spec: &str) -> std::result::Result<Vec<SValue>, String> {
    let mut values = Vec::new();
    for token in spec.split(',').filter(|t| !t.is_empty()) {
        if token == "inv" {
            values.push(SValue::InversePqSum);
        } else {
            values.extend(parse_token(token)?.into_iter().map(SValue::Fixed));
        }
    }
    Ok(values)
}

fn write_or_print(path: &Option<PathBuf>, contents: &str) -> std::io::Result<()> {
    match path {
        Some(path) => {
            fs::write(path, contents)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------- scan ----

#[derive(Serialize)]
struct ScanReport<'a> {
    command: &'static str,
    seed: u64,
    dim: usize,
    trials: usize,
    tol: f64,
    k_mode: KMode,
    entries: &'a [RegionEntry],
}

fn region_csv(report: &RegionReport) -> String {
    let mut out = String::from(
        "p,q,s,dim,trials,convex_violations,concave_violations,empirical,theoretical,agrees\n",
    );
    for e in &report.entries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            fmt17(e.p),
            fmt17(e.q),
            fmt17(e.s),
            e.dim,
            e.trials,
            e.convexity_violations,
            e.concavity_violations,
            e.empirical.as_str(),
            e.theoretical.as_str(),
            e.agrees
        ));
    }
    out
}

fn run_scan(args: &ScanArgs) -> CliResult {
    let p_values = parse_values(&args.p).map_err(CliError::Usage)?;
    let q_values = parse_values(&args.q).map_err(CliError::Usage)?;
    let s_values = parse_s_values(&args.s).map_err(CliError::Usage)?;
    let mut config = ProbeConfig::new(args.dim, args.trials, args.seed, args.k_mode.into())?;
    config.tol_rel = args.tol;

    let report = scan_grid(&p_values, &q_values, &s_values, &config)?;
    write_or_print(&args.csv, &region_csv(&report))?;
    if let Some(path) = &args.json {
        let doc = ScanReport {
            command: "scan",
            seed: args.seed,
            dim: args.dim,
            trials: args.trials,
            tol: args.tol,
            k_mode: config.k_mode,
            entries: &report.entries,
        };
        fs::write(path, serde_json::to_string_pretty(&doc).expect("serializable"))?;
        println!("wrote {}", path.display());
    }
    if let Some(path) = &args.svg {
        fs::write(path, render_svg(&report))?;
        println!("wrote {}", path.display());
    }

    let disagreements = report.entries.iter().filter(|e| !e.agrees).count();
    eprintln!(
        "scan: {} nodes, {} disagreement(s)",
        report.entries.len(),
        disagreements
    );
    Ok(if disagreements == 0 { 0 } else { EXIT_INCONSISTENT })
}

/// Heatmap of the (p, q) plane; multiple s values stack inside a cell.
/// Fill encodes the theoretical label, stroke the empirical one — nothing
/// is re-probed here.
fn render_svg(report: &RegionReport) -> String {
    use tracelab::probe::ClassificationLabel as L;
    fn color(label: L) -> &'static str {
        match label {
            L::ConcaveConsistent => "#3b7fc4",
            L::ConvexConsistent => "#c44b3b",
            L::LinearConsistent => "#7a5fae",
            L::Neither => "#9e9e9e",
            L::Inconclusive => "#e8e8e8",
        }
    }
    let mut ps: Vec<f64> = report.entries.iter().map(|e| e.p).collect();
    let mut qs: Vec<f64> = report.entries.iter().map(|e| e.q).collect();
    ps.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    ps.dedup();
    qs.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    qs.dedup();

    const CELL: usize = 46;
    const PAD: usize = 2;
    const LEFT: usize = 64;
    const TOP: usize = 24;
    let width = LEFT + ps.len() * CELL + 12;
    let height = TOP + qs.len() * CELL + 40;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\">\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    );
    for (yi, &q) in qs.iter().enumerate() {
        let y = TOP + yi * CELL;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">q={}</text>\n",
            LEFT - 6,
            y + CELL / 2 + 4,
            q
        ));
        for (xi, &p) in ps.iter().enumerate() {
            let x = LEFT + xi * CELL;
            let cell: Vec<&RegionEntry> = report
                .entries
                .iter()
                .filter(|e| e.p == p && e.q == q)
                .collect();
            if cell.is_empty() {
                continue;
            }
            let sub = (CELL - 2 * PAD) / cell.len();
            for (si, e) in cell.iter().enumerate() {
                svg.push_str(&format!(
                    "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" \
                     stroke=\"{}\" stroke-width=\"3\"><title>p={} q={} s={} {} vs {}</title></rect>\n",
                    x + PAD,
                    y + PAD + si * sub,
                    CELL - 2 * PAD,
                    sub,
                    color(e.theoretical),
                    color(e.empirical),
                    e.p,
                    e.q,
                    e.s,
                    e.theoretical.as_str(),
                    e.empirical.as_str()
                ));
            }
        }
    }
    for (xi, &p) in ps.iter().enumerate() {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">p={}</text>\n",
            LEFT + xi * CELL + CELL / 2,
            TOP + qs.len() * CELL + 16,
            p
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

// -------------------------------------------------------------- verify ----

fn run_verify(args: &VerifyArgs) -> CliResult {
    let tol = 1e-8;
    let mut worst_overall: f64 = 0.0;
    let run_two_variable = matches!(args.suite.as_str(), "all" | "two-variable");
    let run_chain = matches!(args.suite.as_str(), "all" | "chain");
    let run_reductions = matches!(args.suite.as_str(), "all" | "reductions");
    if !(run_two_variable || run_chain || run_reductions) {
        return Err(CliError::Usage(format!(
            "unknown suite {:?}: expected all, two-variable, chain, or reductions",
            args.suite
        )));
    }

    if run_two_variable {
        let mut rng = Rng::with_stream(args.seed, 1);
        let triples: Vec<HolderTriple> = [(2.0, 2.0), (3.0, 6.0), (4.0, 4.0), (1.5, 3.0)]
            .iter()
            .map(|&(r1, r2)| HolderTriple::from_parts(r1, r2))
            .collect::<Result<_>>()?;
        let mut worst: f64 = 0.0;
        for dim in 2..=3 {
            for triple in &triples {
                for _ in 0..args.trials {
                    let x = random_invertible_conditioned(dim, &mut rng);
                    let y = random_invertible_conditioned(dim, &mut rng);
                    let xy = x.matmul(&y);

                    let lhs = schatten(&xy, triple.r0)?;
                    let z = optimal_z_min(&x, &y, triple)?;
                    let obj = min_objective(&x, &y, &z, triple)?;
                    worst = worst.max((obj - lhs).abs() / lhs.abs().max(1e-300));

                    let lhs = schatten(&xy, triple.r1)?;
                    let z = optimal_z_max(&x, &y, triple)?;
                    let obj = max_objective(&x, &y, &z, triple)?;
                    worst = worst.max((obj - lhs).abs() / lhs.abs().max(1e-300));
                }
            }
        }
        println!("two-variable: max relative error {:e}", worst);
        worst_overall = worst_overall.max(worst);
    }

    if run_chain {
        if args.n < 2 {
            return Err(CliError::Usage("chain needs --n >= 2".into()));
        }
        let mut rng = Rng::with_stream(args.seed, 2);
        let mut exponents = vec![1.0];
        exponents.extend(std::iter::repeat(args.n as f64).take(args.n));
        let plan = ChainPlan::new(exponents)?;
        let mut worst: f64 = 0.0;
        for dim in 2..=3 {
            for _ in 0..args.trials {
                let xs: Vec<ComplexMatrix> = (0..args.n)
                    .map(|_| random_invertible_conditioned(dim, &mut rng))
                    .collect();
                let min = chain_min(&xs, &plan)?;
                worst = worst.max((min.objective - min.lhs).abs() / min.lhs.abs().max(1e-300));
                let max = chain_max(&xs, &plan)?;
                worst = worst.max((max.objective - max.lhs).abs() / max.lhs.abs().max(1e-300));
            }
        }
        println!("chain (n={}): max relative error {:e}", args.n, worst);
        worst_overall = worst_overall.max(worst);
    }

    if run_reductions {
        let mut rng = Rng::with_stream(args.seed, 3);
        let cases = [
            (ReductionCase::Step1, 0.5, 0.5, 1.0),
            (ReductionCase::Step2, -0.5, -0.5, 1.0),
            (ReductionCase::Step3a, 2.0, -1.0, 1.0),
            (ReductionCase::Step3b, -0.5, -0.5, 1.0),
        ];
        for (case, p, q, s) in cases {
            let mut worst: f64 = 0.0;
            for _ in 0..args.trials {
                let a = random_pd(3, &mut rng);
                let b = random_pd(3, &mut rng);
                let k = random_invertible_conditioned(3, &mut rng);
                let report =
                    tracelab::variational::verify_reduction(&a, &b, &k, p, q, s, case, &mut rng, 5)?;
                worst = worst.max(report.relative_error);
            }
            println!("reduction {}: max relative error {:e}", case.name(), worst);
            worst_overall = worst_overall.max(worst);
        }
    }

    if worst_overall <= tol {
        println!("verify: all suites within {:e}", tol);
        Ok(0)
    } else {
        println!("verify: tolerance exceeded ({:e} > {:e})", worst_overall, tol);
        Ok(EXIT_INCONSISTENT)
    }
}

// ----------------------------------------------------------------- dpi ----

#[derive(Serialize)]
struct DpiPointReport {
    divergence: String,
    alpha: Option<f64>,
    z: Option<f64>,
    predicted_dpi: bool,
    trials: usize,
    min_margin: f64,
    scale: f64,
    consistent: bool,
    witness: Option<DpiWitness>,
}

fn dpi_points(args: &DpiArgs) -> std::result::Result<Vec<(Divergence, bool)>, CliError> {
    let alphas = match &args.alpha {
        Some(spec) => parse_values(spec).map_err(CliError::Usage)?,
        None => Vec::new(),
    };
    let zs = match &args.z {
        Some(spec) => parse_values(spec).map_err(CliError::Usage)?,
        None => Vec::new(),
    };
    let need_alpha = || {
        if alphas.is_empty() {
            Err(CliError::Usage("this divergence requires --alpha".into()))
        } else {
            Ok(())
        }
    };
    let mut points = Vec::new();
    match args.divergence {
        DivKind::Umegaki => points.push((Divergence::Umegaki, true)),
        DivKind::DPrime => points.push((Divergence::DPrime, false)),
        DivKind::Renyi => {
            need_alpha()?;
            for &alpha in &alphas {
                let region = dpi_region(AlphaZ::new(alpha, 1.0)?);
                points.push((Divergence::RenyiAlpha { alpha }, region));
            }
        }
        DivKind::Sandwiched => {
            need_alpha()?;
            for &alpha in &alphas {
                let region = dpi_region(AlphaZ::new(alpha, alpha)?);
                points.push((Divergence::Sandwiched { alpha }, region));
            }
        }
        DivKind::AlphaZ => {
            need_alpha()?;
            if zs.is_empty() {
                return Err(CliError::Usage("alpha-z requires --z".into()));
            }
            for &alpha in &alphas {
                for &z in &zs {
                    let region = dpi_region(AlphaZ::new(alpha, z)?);
                    points.push((Divergence::AlphaZ { alpha, z }, region));
                }
            }
        }
    }
    Ok(points)
}

fn run_dpi(args: &DpiArgs) -> CliResult {
    let points = dpi_points(args)?;
    let mut reports = Vec::new();
    let mut all_consistent = true;

    for (idx, (divergence, predicted)) in points.iter().enumerate() {
        let mut rng = Rng::with_stream(args.seed, idx as u64);
        let mut min_margin = f64::INFINITY;
        let mut scale: f64 = 1.0;
        let mut done = 0usize;
        while done < args.trials {
            let channel = random_channel(args.dim, args.env_dim, &mut rng);
            let rho = random_density(args.dim, &mut rng);
            let sigma = random_density(args.dim, &mut rng);
            let margin = match dpi_margin(divergence, &channel, &rho, &sigma) {
                Ok(v) => v,
                Err(Error::SingularOutput { .. }) => continue,
                Err(e) => return Err(e.into()),
            };
            let reference = divergence.eval(&rho, &sigma)?;
            scale = scale.max(reference.abs());
            min_margin = min_margin.min(margin);
            done += 1;
        }
        let threshold = -1e-7 * scale;
        let in_region_violation = *predicted && min_margin < threshold;

        let witness = if *predicted {
            None
        } else {
            dpi_search_violation(divergence, args.dim, args.env_dim, args.budget, &mut rng)?
        };
        let consistent = !in_region_violation;
        all_consistent &= consistent;

        let status = if *predicted {
            if consistent { "consistent" } else { "VIOLATION IN REGION" }
        } else if witness.is_some() {
            "violation found (expected)"
        } else {
            "INCONCLUSIVE (no violation found)"
        };
        let (alpha, z) = match *divergence {
            Divergence::AlphaZ { alpha, z } => (Some(alpha), Some(z)),
            Divergence::RenyiAlpha { alpha } | Divergence::Sandwiched { alpha } => {
                (Some(alpha), None)
            }
            _ => (None, None),
        };
        println!(
            "{}: predicted_dpi={} min_margin={:e} {}",
            divergence.label(),
            predicted,
            min_margin,
            status
        );
        reports.push(DpiPointReport {
            divergence: divergence.label(),
            alpha,
            z,
            predicted_dpi: *predicted,
            trials: args.trials,
            min_margin,
            scale,
            consistent,
            witness,
        });
    }

    if let Some(path) = &args.json {
        fs::write(path, serde_json::to_string_pretty(&reports).expect("serializable"))?;
        println!("wrote {}", path.display());
    }
    Ok(if all_consistent { 0 } else { EXIT_INCONSISTENT })
}

// ------------------------------------------------------------- entropy ----

#[derive(Deserialize)]
struct StatePair {
    rho: ComplexMatrix,
    sigma: ComplexMatrix,
}

fn divergence_from_args(
    kind: DivKind,
    alpha: Option<f64>,
    z: Option<f64>,
) -> std::result::Result<Divergence, CliError> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| CliError::Usage(format!("this divergence requires --{name}")))
    };
    Ok(match kind {
        DivKind::Umegaki => Divergence::Umegaki,
        DivKind::DPrime => Divergence::DPrime,
        DivKind::Renyi => Divergence::RenyiAlpha { alpha: need(alpha, "alpha")? },
        DivKind::Sandwiched => Divergence::Sandwiched { alpha: need(alpha, "alpha")? },
        DivKind::AlphaZ => Divergence::AlphaZ {
            alpha: need(alpha, "alpha")?,
            z: need(z, "z")?,
        },
    })
}

fn validate_states(pair: &StatePair) -> std::result::Result<(), CliError> {
    let check = |m: &ComplexMatrix, name: &str, want_trace_one: bool| {
        if !m.is_square() {
            return Err(CliError::Usage(format!("{name} must be square")));
        }
        let defect = m.hermiticity_defect();
        if defect > 1e-10 * m.frobenius_norm().max(1.0) {
            return Err(CliError::Usage(format!("{name} is not Hermitian (defect {defect:e})")));
        }
        let eig = tracelab::matrix::hermitian_eig(m).map_err(CliError::Lib)?;
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min <= 0.0 {
            return Err(CliError::Usage(format!(
                "{name} must be positive definite (min eigenvalue {min:e})"
            )));
        }
        if want_trace_one && (m.trace().re - 1.0).abs() > 1e-8 {
            return Err(CliError::Usage(format!("{name} must have unit trace")));
        }
        Ok(())
    };
    check(&pair.rho, "rho", true)?;
    check(&pair.sigma, "sigma", false)?;
    if pair.rho.dim() != pair.sigma.dim() {
        return Err(CliError::Usage("rho and sigma must have equal dims".into()));
    }
    Ok(())
}

fn run_entropy(args: &EntropyArgs) -> CliResult {
    let text = fs::read_to_string(&args.states)?;
    let pair: StatePair = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("cannot parse {}: {e}", args.states.display())))?;
    validate_states(&pair)?;
    let divergence = divergence_from_args(args.divergence, args.alpha, args.z)?;
    let value = divergence.eval(&pair.rho, &pair.sigma)?;
    println!("{} = {}", divergence.label(), fmt17(value));
    if let Some(path) = &args.json {
        #[derive(Serialize)]
        struct Out {
            divergence: String,
            value: f64,
        }
        let doc = Out { divergence: divergence.label(), value };
        fs::write(path, serde_json::to_string_pretty(&doc).expect("serializable"))?;
        println!("wrote {}", path.display());
    }
    Ok(0)
}

// --------------------------------------------------------------- probe ----

fn run_probe(args: &ProbeArgs) -> CliResult {
    let mut config = ProbeConfig::new(args.dim, args.trials, args.seed, args.k_mode.into())?;
    config.tol_rel = args.tol;

    let outcome = match args.regularize_k {
        Some(eps) => {
            let mut rng = Rng::with_stream(args.seed, 0);
            let base = match config.k_mode {
                KMode::Identity => ComplexMatrix::identity(args.dim),
                KMode::RandomFixed => random_invertible_conditioned(args.dim, &mut rng),
            };
            let k = &base + &ComplexMatrix::identity(args.dim).scale_re(eps);
            probe_point_with_k(args.p, args.q, args.s, &config, &k)?
        }
        None => probe_point(args.p, args.q, args.s, &config)?,
    };
    let theoretical = theory_label(args.p, args.q, args.s)?;
    let agrees = match theoretical {
        tracelab::probe::ClassificationLabel::ConcaveConsistent => {
            outcome.concavity_violations == 0
        }
        tracelab::probe::ClassificationLabel::ConvexConsistent => {
            outcome.convexity_violations == 0
        }
        tracelab::probe::ClassificationLabel::LinearConsistent => {
            outcome.convexity_violations == 0 && outcome.concavity_violations == 0
        }
        _ => true,
    };
    println!(
        "probe ({}, {}, {}): {} convexity / {} concavity violations, {} failures",
        args.p,
        args.q,
        args.s,
        outcome.convexity_violations,
        outcome.concavity_violations,
        outcome.failures
    );
    println!(
        "empirical={} theoretical={} agrees={}",
        outcome.label.as_str(),
        theoretical.as_str(),
        agrees
    );

    let mut search_witnesses = Vec::new();
    if let Some(budget) = args.budget {
        let mut rng = Rng::with_stream(args.seed, 1);
        for target in [ViolationTarget::Concavity, ViolationTarget::Convexity] {
            let found =
                search_counterexample(args.p, args.q, args.s, target, args.dim, budget, &mut rng)?;
            match &found {
                Some(w) => println!("{target:?} violation found: margin {:e}", w.margin),
                None => println!("{target:?}: no violation within {budget} restarts"),
            }
            search_witnesses.push((target, found));
        }
    }

    if let Some(path) = &args.json {
        #[derive(Serialize)]
        struct Out<'a> {
            p: f64,
            q: f64,
            s: f64,
            seed: u64,
            outcome: &'a tracelab::probe::ProbeOutcome,
            theoretical: tracelab::probe::ClassificationLabel,
            agrees: bool,
            search: &'a [(ViolationTarget, Option<tracelab::probe::MidpointWitness>)],
        }
        let doc = Out {
            p: args.p,
            q: args.q,
            s: args.s,
            seed: args.seed,
            outcome: &outcome,
            theoretical,
            agrees,
            search: &search_witnesses,
        };
        fs::write(path, serde_json::to_string_pretty(&doc).expect("serializable"))?;
        println!("wrote {}", path.display());
    }
    Ok(if agrees { 0 } else { EXIT_INCONSISTENT })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        assert_eq!(parse_values("1").unwrap(), vec![1.0]);
        assert_eq!(parse_values("-1:1:0.5").unwrap(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(parse_values("0.4,2").unwrap(), vec![0.4, 2.0]);
        // Endpoint included despite accumulated rounding.
        let v = parse_values("-1:2:0.25").unwrap();
        assert_eq!(v.len(), 13);
        assert_eq!(*v.last().unwrap(), 2.0);
        assert!(v.contains(&0.0));
        assert!(parse_values("1:0:0.5").is_err());
        assert!(parse_values("1:2:0").is_err());
        assert!(parse_values("abc").is_err());
    }

    #[test]
    fn s_value_parsing() {
        let v = parse_s_values("0.4,inv,1").unwrap();
        assert_eq!(v.len(), 3);
        assert!(matches!(v[1], SValue::InversePqSum));
    }

    #[test]
    fn fmt17_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-9, 1e300] {
            assert_eq!(fmt17(v).parse::<f64>().unwrap(), v);
        }
    }
}
