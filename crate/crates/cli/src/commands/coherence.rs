use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sparse_ident::analysis::{coherence, gabor_coherence, guarantee_coherence_tail};
use sparse_ident::experiments::{windows_for, WindowSpec};
use sparse_ident::rng::derive_seed;
use sparse_ident::tfshift::concat_gabor;
use sparse_ident::CoherenceReport64;

use crate::error::{CliError, CliResult};
use crate::output::CommandOutput;

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CoherenceArgs {
    /// Window length.
    #[arg(long)]
    pub n: Option<usize>,

    /// alltop | random | dft-of-alltop | dft-of-random [default: alltop]
    #[arg(long)]
    pub window: Option<WindowSpec>,

    /// Number of stacked windows (random families only) [default: 1]
    #[arg(long)]
    pub r: Option<usize>,

    /// Monte-Carlo mode: number of independent random windows.
    #[arg(long)]
    pub trials: Option<usize>,

    /// Tail threshold alpha / sqrt(r n) in Monte-Carlo mode [default: 6]
    #[arg(long)]
    pub alpha: Option<f64>,
}

fn system_coherence(spec: WindowSpec, n: usize, r: usize, seed: u64) -> CliResult<(CoherenceReport64, bool)> {
    let windows = windows_for(spec, n, r, seed)?;
    let warn = windows[0].non_prime_warning();
    let rep = if r == 1 { gabor_coherence(&windows[0]) } else { coherence(&concat_gabor(&windows)?)? };
    Ok((rep, warn))
}

pub fn run(mut args: CoherenceArgs, seed: u64) -> CliResult<CommandOutput> {
    let n = args.n.ok_or_else(|| CliError::missing("n", "coherence"))?;
    let spec = *args.window.get_or_insert(WindowSpec::Alltop);
    let r = *args.r.get_or_insert(1);
    if n < 2 {
        return Err(CliError::Usage(format!("--n must be at least 2, got {n}")));
    }

    let (rep, non_prime) = system_coherence(spec, n, r, seed)?;
    let mut summary = vec![format!("mu = {}  (1/sqrt(n) = {}, lower bound = {})", rep.mu, 1.0 / (n as f64).sqrt(), rep.lower_bound)];
    let mut results = json!({
        "mu": rep.mu,
        "argmax_pair": rep.argmax_pair,
        "lower_bound": rep.lower_bound,
        "inv_sqrt_n": 1.0 / (n as f64).sqrt(),
        "non_prime_warning": non_prime,
    });
    if non_prime {
        summary.push(format!("warning: n = {n} is not prime; the Alltop window is not guaranteed to reach 1/sqrt(n)"));
    }

    if let Some(trials) = args.trials {
        if trials == 0 {
            return Err(CliError::Usage("--trials must be at least 1".into()));
        }
        if !spec.is_random() {
            return Err(CliError::Usage("Monte-Carlo mode needs a random window family".into()));
        }
        let alpha = *args.alpha.get_or_insert(6.0);
        let tail = guarantee_coherence_tail(n, alpha, r)?;
        let threshold = tail.parameter("threshold").expect("tail report has a threshold");
        let bound = tail.parameter("bound").expect("tail report has a bound");
        let mus = (0..trials)
            .into_par_iter()
            .map(|i| system_coherence(spec, n, r, derive_seed(seed, i as u64)).map(|(c, _)| c.mu))
            .collect::<CliResult<Vec<f64>>>()?;
        let exceed = mus.iter().filter(|&&m| m >= threshold).count();
        let empirical = exceed as f64 / trials as f64;
        let sigma = (bound * (1.0 - bound) / trials as f64).sqrt();
        let within = empirical <= bound + 3.0 * sigma;
        summary.push(format!("P(mu >= {threshold}) ~ {empirical} over {trials} windows; bound {bound} (3 sigma = {})", 3.0 * sigma));
        results["monte_carlo"] = json!({
            "trials": trials,
            "alpha": alpha,
            "threshold": threshold,
            "exceedances": exceed,
            "empirical_tail": empirical,
            "bound": bound,
            "sigma": sigma,
            "within_bound": within,
            "mean_mu": mus.iter().sum::<f64>() / trials as f64,
            "max_mu": mus.iter().copied().fold(0.0, f64::max),
            "guarantee": tail,
        });
    }

    Ok(CommandOutput {
        params: serde_json::to_value(&args).expect("arguments serialize"),
        results,
        outputs: Vec::new(),
        summary,
        failure: None,
    })
}
