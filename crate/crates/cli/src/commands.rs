use std::path::PathBuf;

use clap::Args;
use codesense::codeanalysis::{certificate_from_distribution, code_weight_distribution};
use codesense::ensemble::{
    estimate_prob_k_zero_with, finite_size_exponents, sample_matrix, EnsembleOptions, EnsembleSpec,
};
use codesense::epsilon::parse_rational;
use codesense::gf2::MatrixFile;
use codesense::oracle::{
    basis_pursuit, exact_incoherence, exact_rip_constant_with_limit, exhaustive_sparse_oracle,
    random_sparse_signal, relative_error, RecoveryProblem, SolverSettings, Termination,
};
use codesense::report::round_sig12;
use codesense::ripbounds::bound_report;
use codesense::{BinaryMatrix, CompactSensingMatrix, Epsilon};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::io::{load_parity_check, load_sensing, Report, Table};
use crate::usage;

/// Relative ℓ2 error below which a recovery counts as exact.
const RECOVERY_TOLERANCE: f64 = 1e-6;

#[derive(Args, Debug, Serialize)]
pub struct MatrixSource {
    /// Parity-check matrix file (gf2-matrix/v1 or a `sample` report).
    #[arg(long, conflicts_with_all = ["p", "r", "seed"])]
    pub input: Option<PathBuf>,
    /// Sample H inline: number of columns.
    #[arg(long, requires_all = ["r", "seed"])]
    pub p: Option<usize>,
    /// Sample H inline: number of rows.
    #[arg(long, requires_all = ["p", "seed"])]
    pub r: Option<usize>,
    /// Sample H inline: RNG seed.
    #[arg(long, requires_all = ["p", "r"])]
    pub seed: Option<u64>,
    /// Sample H inline: stream index within the seed.
    #[arg(long, default_value_t = 0)]
    pub index: u64,
}

impl MatrixSource {
    fn resolve(&self) -> anyhow::Result<BinaryMatrix> {
        if let Some(path) = &self.input {
            return load_parity_check(path);
        }
        match (self.p, self.r, self.seed) {
            (Some(p), Some(r), Some(seed)) => {
                check_dims(p, r)?;
                Ok(sample_matrix(p, r, seed, self.index))
            }
            _ => Err(usage("give --input, or all of --p, --r and --seed")),
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct SensingSource {
    /// Sensing matrix file (CSM1 binary, codesense/v1 JSON, or a `build` report).
    #[arg(long, conflicts_with_all = ["input", "p", "r", "seed"])]
    pub sensing: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub matrix: MatrixSource,
}

impl SensingSource {
    fn resolve(&self) -> anyhow::Result<CompactSensingMatrix> {
        match &self.sensing {
            Some(path) => load_sensing(path),
            None => Ok(CompactSensingMatrix::build(&self.matrix.resolve()?)?),
        }
    }
}

fn check_dims(p: usize, r: usize) -> anyhow::Result<()> {
    if p == 0 || r == 0 {
        return Err(usage("--p and --r must be at least 1"));
    }
    Ok(())
}

fn epsilon(text: &str) -> anyhow::Result<Epsilon> {
    Ok(text.parse::<Epsilon>()?)
}

fn cell(x: impl ToString) -> String {
    x.to_string()
}

fn fcell(x: f64) -> String {
    round_sig12(x).to_string()
}

#[derive(Args, Debug, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub r: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub index: u64,
}

pub fn sample(a: &SampleArgs) -> anyhow::Result<Report> {
    check_dims(a.p, a.r)?;
    let h = sample_matrix(a.p, a.r, a.seed, a.index);
    let rows = (0..h.rows())
        .map(|i| vec![cell(i), h.row(i).to_string()])
        .collect();
    Ok(
        Report::new(json!({ "matrix": MatrixFile::from(h) }))?.with_table(Table {
            header: vec!["row", "bits"],
            rows,
        }),
    )
}

#[derive(Args, Debug, Serialize)]
pub struct BuildArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: MatrixSource,
    /// Also write the CSM1 binary encoding here.
    #[arg(long)]
    pub binary: Option<PathBuf>,
}

pub fn build(a: &BuildArgs) -> anyhow::Result<Report> {
    let s = CompactSensingMatrix::build(&a.source.resolve()?)?;
    if let Some(path) = &a.binary {
        crate::io::write_output(Some(path), &s.to_bytes())?;
    }
    let dense = s.p() as u128 * s.m() as u128;
    let row = vec![
        cell(s.p()),
        cell(s.r()),
        cell(s.m()),
        cell(s.serialized_len()),
        cell(dense),
    ];
    Ok(Report::new(json!({
        "p": s.p(),
        "r": s.r(),
        "m": s.m(),
        "serialized_bytes": s.serialized_len(),
        "dense_bipolar_bytes": dense,
        "sensing": s.to_file(),
    }))?
    .with_table(Table {
        header: vec!["p", "r", "m", "serialized_bytes", "dense_bipolar_bytes"],
        rows: vec![row],
    }))
}

#[derive(Args, Debug, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: MatrixSource,
}

pub fn analyze(a: &AnalyzeArgs) -> anyhow::Result<Report> {
    let h = a.source.resolve()?;
    let rank = h.rank();
    let dist = code_weight_distribution(&h)?;
    let rows = dist
        .counts()
        .iter()
        .enumerate()
        .map(|(w, c)| vec![cell(w), cell(c)])
        .collect();
    Ok(Report::new(json!({
        "p": h.cols(),
        "r": h.rows(),
        "rank": rank,
        "k": h.cols() - rank,
        "weight_distribution": dist.counts(),
        "mu_numerator": dist.max_abs_correlation_numerator(),
        "mu_exact": round_sig12(dist.mu_exact()),
    }))?
    .with_table(Table {
        header: vec!["w", "count"],
        rows,
    }))
}

#[derive(Args, Debug, Serialize)]
pub struct CertifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: MatrixSource,
    /// Band half-width as a decimal or fraction, e.g. 0.5 or 3/8.
    #[arg(long)]
    pub epsilon: String,
}

pub fn certify(a: &CertifyArgs) -> anyhow::Result<Report> {
    let eps = epsilon(&a.epsilon)?;
    let h = a.source.resolve()?;
    let dist = code_weight_distribution(&h)?;
    let c = certificate_from_distribution(&dist, &eps);
    let row = vec![
        a.epsilon.clone(),
        cell(c.k_epsilon),
        cell(c.certified),
        fcell(c.mu_bound),
        fcell(c.mu_exact),
    ];
    let mut body = serde_json::to_value(&c)?;
    body["p"] = h.cols().into();
    body["k"] = (h.cols() - h.rank()).into();
    Ok(Report::new(body)?.with_table(Table {
        header: vec!["epsilon", "k_epsilon", "certified", "mu_bound", "mu_exact"],
        rows: vec![row],
    }))
}

#[derive(Args, Debug, Serialize)]
pub struct BoundsArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long)]
    pub r: u64,
    #[arg(long)]
    pub epsilon: String,
}

pub fn bounds(a: &BoundsArgs) -> anyhow::Result<Report> {
    let b = bound_report(a.p, a.r, &epsilon(&a.epsilon)?)?;
    let row = vec![
        cell(b.p),
        cell(b.r),
        a.epsilon.clone(),
        fcell(b.lemma4_lower),
        fcell(b.lemma5_upper),
        cell(b.theorem1_smax),
        fcell(b.theorem1_epsilon_star),
        fcell(b.theorem1_prob),
    ];
    Ok(Report::new(&b)?.with_table(Table {
        header: vec![
            "p",
            "r",
            "epsilon",
            "lemma4_lower",
            "lemma5_upper",
            "theorem1_smax",
            "theorem1_epsilon_star",
            "theorem1_prob",
        ],
        rows: vec![row],
    }))
}

#[derive(Args, Debug, Serialize)]
pub struct EnsembleArgs {
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub r: usize,
    #[arg(long)]
    pub epsilon: String,
    /// Enumerate every r x p matrix instead of sampling.
    #[arg(long, conflicts_with_all = ["seed", "trials"])]
    pub exhaustive: bool,
    #[arg(long, required_unless_present = "exhaustive")]
    pub seed: Option<u64>,
    #[arg(long, required_unless_present = "exhaustive")]
    pub trials: Option<u64>,
    /// Write per-trial records (trial, dimension, k_epsilon) as CSV here.
    #[arg(long, conflicts_with = "exhaustive")]
    pub trials_csv: Option<PathBuf>,
}

pub fn ensemble(a: &EnsembleArgs) -> anyhow::Result<Report> {
    let eps = epsilon(&a.epsilon)?;
    check_dims(a.p, a.r)?;
    let spec = if a.exhaustive {
        EnsembleSpec::exhaustive(a.p, a.r)
    } else {
        let (Some(seed), Some(trials)) = (a.seed, a.trials) else {
            return Err(usage("Monte-Carlo mode needs --seed and --trials"));
        };
        EnsembleSpec::monte_carlo(a.p, a.r, seed, trials)
    };
    let options = EnsembleOptions {
        keep_trials: a.trials_csv.is_some(),
        ..Default::default()
    };
    let rep = estimate_prob_k_zero_with(&spec, &eps, &options)?;
    if let Some(path) = &a.trials_csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        for t in &rep.trials {
            w.serialize(t)?;
        }
        crate::io::write_output(Some(path), &w.into_inner()?)?;
    }
    let rows = (0..=a.p)
        .map(|w| vec![cell(w), fcell(rep.mean_aw[w]), fcell(rep.expected_aw[w])])
        .collect();
    Ok(Report::new(&rep)?.with_table(Table {
        header: vec!["w", "mean_aw", "expected_aw"],
        rows,
    }))
}

#[derive(Args, Debug, Serialize)]
pub struct RipExactArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SensingSource,
    /// Subset size S.
    #[arg(long)]
    pub order: usize,
    /// Refuse scans over more than this many subsets.
    #[arg(long, default_value_t = 10_000_000)]
    pub max_subsets: u128,
}

pub fn rip_exact(a: &RipExactArgs) -> anyhow::Result<Report> {
    let s = a.source.resolve()?;
    let rip = exact_rip_constant_with_limit(&s, a.order, a.max_subsets)?;
    let mu = exact_incoherence(&s)?;
    let bound = mu * a.order as f64;
    let row = vec![
        cell(rip.order),
        fcell(rip.delta),
        rip.witness
            .iter()
            .map(|j| j.to_string())
            .collect::<Vec<_>>()
            .join(" "),
        fcell(mu),
        cell(rip.delta < bound),
    ];
    let mut body = serde_json::to_value(&rip)?;
    body["p"] = s.p().into();
    body["m"] = s.m().into();
    body["mu_exact"] = round_sig12(mu).into();
    body["mu_times_order"] = round_sig12(bound).into();
    body["below_mu_times_order"] = (rip.delta < bound).into();
    Ok(Report::new(body)?.with_table(Table {
        header: vec![
            "order",
            "delta",
            "witness",
            "mu_exact",
            "below_mu_times_order",
        ],
        rows: vec![row],
    }))
}

#[derive(Args, Debug, Serialize)]
pub struct RecoverArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SensingSource,
    /// Nonzeros per signal.
    #[arg(long)]
    pub sparsity: usize,
    /// Seed for the random sparse signals.
    #[arg(long)]
    pub signal_seed: u64,
    #[arg(long, default_value_t = 1)]
    pub trials: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub feasibility_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub optimality_tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iterations: u64,
    /// Skip the exhaustive-support cross-check.
    #[arg(long)]
    pub no_oracle: bool,
}

#[derive(Serialize)]
struct RecoveryTrial {
    trial: u64,
    support: Vec<usize>,
    termination: Termination,
    iterations: u64,
    relative_error: f64,
    recovered: bool,
    oracle_agrees: Option<bool>,
}

pub fn recover(a: &RecoverArgs) -> anyhow::Result<Report> {
    let s = a.source.resolve()?;
    let m = s.m() as usize;
    let settings = SolverSettings {
        feasibility_tolerance: a.feasibility_tol,
        optimality_tolerance: a.optimality_tol,
        max_iterations: a.max_iterations,
        ..Default::default()
    };
    if a.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let trials = (0..a.trials)
        .into_par_iter()
        .map(|t| -> anyhow::Result<RecoveryTrial> {
            let e = random_sparse_signal(m, a.sparsity, a.signal_seed, t)?;
            let prob = RecoveryProblem::new(s.clone(), e.clone(), settings.clone())?;
            let out = basis_pursuit(&prob)?;
            let err = relative_error(&out.d_hat, &e);
            let oracle_agrees = if a.no_oracle {
                None
            } else {
                let d = exhaustive_sparse_oracle(&prob, a.sparsity)?;
                Some(relative_error(&out.d_hat, &d) <= RECOVERY_TOLERANCE)
            };
            Ok(RecoveryTrial {
                trial: t,
                support: (0..m).filter(|&j| e[j] != 0.0).map(|j| j + 1).collect(),
                termination: out.status.termination,
                iterations: out.status.iterations,
                relative_error: round_sig12(err),
                recovered: err <= RECOVERY_TOLERANCE,
                oracle_agrees,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let recovered = trials.iter().filter(|t| t.recovered).count();
    let agreements = trials
        .iter()
        .filter(|t| t.oracle_agrees == Some(true))
        .count();
    let max_err = trials.iter().map(|t| t.relative_error).fold(0.0, f64::max);
    let rows = trials
        .iter()
        .map(|t| {
            vec![
                cell(t.trial),
                t.support
                    .iter()
                    .map(|j| j.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
                serde_json::to_value(t.termination)
                    .map(|v| v.as_str().unwrap_or("").to_string())
                    .unwrap_or_default(),
                cell(t.iterations),
                fcell(t.relative_error),
                cell(t.recovered),
                t.oracle_agrees.map(cell).unwrap_or_default(),
            ]
        })
        .collect();
    Ok(Report::new(json!({
        "p": s.p(),
        "m": s.m(),
        "sparsity": a.sparsity,
        "trials": a.trials,
        "recovered": recovered,
        "oracle_agreements": if a.no_oracle { None } else { Some(agreements) },
        "max_relative_error": max_err,
        "recovery_tolerance": RECOVERY_TOLERANCE,
        "trial_results": trials,
    }))?
    .with_table(Table {
        header: vec![
            "trial",
            "support",
            "termination",
            "iterations",
            "relative_error",
            "recovered",
            "oracle_agrees",
        ],
        rows,
    }))
}

#[derive(Args, Debug, Serialize)]
pub struct ExponentsArgs {
    #[arg(long)]
    pub epsilon: String,
    /// Rate r/p as a decimal or fraction; r = round(alpha * p).
    #[arg(long)]
    pub alpha: String,
    /// Comma-separated code lengths.
    #[arg(long, value_delimiter = ',', required = true)]
    pub p_list: Vec<usize>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub trials: u64,
}

pub fn exponents(a: &ExponentsArgs) -> anyhow::Result<Report> {
    let eps = epsilon(&a.epsilon)?;
    let alpha = parse_rational(&a.alpha)?;
    let rows = finite_size_exponents(&eps, &alpha, &a.p_list, a.seed, a.trials)?;
    let opt = |x: Option<f64>| x.map(fcell).unwrap_or_default();
    let table = rows
        .iter()
        .map(|row| {
            vec![
                cell(row.p),
                cell(row.r),
                cell(row.trials),
                cell(row.k_zero),
                fcell(row.prob_k_zero),
                fcell(row.prob_k_nonzero),
                fcell(row.stderr),
                opt(row.exponent_k_zero),
                opt(row.exponent_k_nonzero),
                fcell(row.f1_upper),
                fcell(row.f2_upper),
            ]
        })
        .collect();
    Ok(Report::new(json!({ "rows": rows }))?.with_table(Table {
        header: vec![
            "p",
            "r",
            "trials",
            "k_zero",
            "prob_k_zero",
            "prob_k_nonzero",
            "stderr",
            "exponent_k_zero",
            "exponent_k_nonzero",
            "f1_upper",
            "f2_upper",
        ],
        rows: table,
    }))
}
