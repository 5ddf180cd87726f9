use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use sparse_ident::analysis::{
    gaussian_sparsity_threshold, guarantee_alltop, guarantee_average_case, guarantee_coherence_tail, guarantee_random_window,
    guarantee_worst_case, rip_condition_bernoulli, rip_stability, AverageCaseWindow, GuaranteeReport,
};

use crate::error::{CliError, CliResult};
use crate::output::CommandOutput;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremChoice {
    /// (2k-1) mu < 1 for a given coherence (needs --mu, --k).
    WorstCase,
    /// Alltop window, k < (sqrt(n)+1)/2 (needs --n; --k optional).
    Alltop,
    /// r random windows, even n (needs --n, --t; --r, --k optional).
    RandomWindow,
    /// Alltop window, random support (needs --n, --k, --eps).
    AverageAlltop,
    /// r random windows, random support (needs --n, --k, --eps, --sigma; --r optional).
    AverageRandom,
    /// Tail of the random-window coherence (needs --n, --alpha; --r optional).
    CoherenceTail,
    /// Rows for the Bernoulli restricted isometry property (needs --k, --N, --delta, --t; --n optional).
    BernoulliRip,
    /// Gaussian sparsity thresholds (needs --n, --N, --eps).
    GaussianThreshold,
    /// delta_3k + 3 delta_4k < 2 (needs --delta3k, --delta4k).
    RipStability,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BoundsArgs {
    /// Which guarantee to evaluate.
    #[arg(long, value_enum)]
    pub theorem: Option<TheoremChoice>,

    #[arg(long)]
    pub n: Option<usize>,

    #[arg(long)]
    pub k: Option<usize>,

    /// Dictionary size.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub big_n: Option<usize>,

    #[arg(long)]
    pub mu: Option<f64>,

    #[arg(long)]
    pub t: Option<f64>,

    #[arg(long)]
    pub r: Option<usize>,

    #[arg(long)]
    pub eps: Option<f64>,

    #[arg(long)]
    pub sigma: Option<f64>,

    #[arg(long)]
    pub alpha: Option<f64>,

    #[arg(long)]
    pub delta: Option<f64>,

    #[arg(long)]
    pub delta3k: Option<f64>,

    #[arg(long)]
    pub delta4k: Option<f64>,
}

fn need<T: Copy>(v: Option<T>, flag: &str, theorem: TheoremChoice) -> CliResult<T> {
    v.ok_or_else(|| CliError::missing(flag, &format!("--theorem {}", name(theorem))))
}

fn name(t: TheoremChoice) -> String {
    t.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}

pub fn evaluate(a: &BoundsArgs) -> CliResult<GuaranteeReport> {
    let th = a.theorem.ok_or_else(|| CliError::missing("theorem", "bounds"))?;
    let r = a.r.unwrap_or(1);
    let rep = match th {
        TheoremChoice::WorstCase => guarantee_worst_case(need(a.mu, "mu", th)?, need(a.k, "k", th)?)?,
        TheoremChoice::Alltop => guarantee_alltop(need(a.n, "n", th)?, a.k)?,
        TheoremChoice::RandomWindow => guarantee_random_window(need(a.n, "n", th)?, need(a.t, "t", th)?, r, a.k)?,
        TheoremChoice::AverageAlltop => {
            guarantee_average_case(AverageCaseWindow::Alltop, need(a.n, "n", th)?, need(a.k, "k", th)?, need(a.eps, "eps", th)?, 0.0, 1)?
        }
        TheoremChoice::AverageRandom => guarantee_average_case(
            AverageCaseWindow::Random,
            need(a.n, "n", th)?,
            need(a.k, "k", th)?,
            need(a.eps, "eps", th)?,
            need(a.sigma, "sigma", th)?,
            r,
        )?,
        TheoremChoice::CoherenceTail => guarantee_coherence_tail(need(a.n, "n", th)?, need(a.alpha, "alpha", th)?, r)?,
        TheoremChoice::BernoulliRip => {
            rip_condition_bernoulli(need(a.k, "k", th)?, need(a.big_n, "N", th)?, need(a.delta, "delta", th)?, need(a.t, "t", th)?, a.n)?
        }
        TheoremChoice::GaussianThreshold => gaussian_sparsity_threshold(need(a.n, "n", th)?, need(a.big_n, "N", th)?, need(a.eps, "eps", th)?)?,
        TheoremChoice::RipStability => rip_stability(need(a.delta3k, "delta3k", th)?, need(a.delta4k, "delta4k", th)?)?,
    };
    Ok(rep)
}

pub fn run(args: BoundsArgs) -> CliResult<CommandOutput> {
    let rep = evaluate(&args)?;
    let mut summary = vec![format!("{}: holds = {}, margin = {}, probability floor = {}", rep.statement, rep.holds, rep.margin, rep.probability_floor)];
    summary.extend(rep.parameters.iter().map(|(k, v)| format!("  {k} = {v}")));
    Ok(CommandOutput {
        params: serde_json::to_value(&args).expect("arguments serialize"),
        results: serde_json::to_value(&rep).expect("report serializes"),
        outputs: Vec::new(),
        summary,
        failure: None,
    })
}
