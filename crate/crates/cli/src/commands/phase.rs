use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sparse_ident::experiments::{
    empirical_crossover, fit_cells, level_curve, multi_window_grid, phase_grid, reference_threshold, Cell, TrialConfig, WindowSpec,
};

use super::{num, opt_num, parse_list};
use crate::error::{CliError, CliResult};
use crate::output::{fit_path, Csv, CommandOutput, PendingFile};

const DEFAULT_N_LIST: &str = "11,13,17,19,23,29,31";
const LARGE_N: [usize; 2] = [43, 59];
const DEFAULT_TRIALS: usize = 100;

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PhaseArgs {
    /// alltop | random | dft-of-alltop | dft-of-random [default: alltop]
    #[arg(long)]
    pub window: Option<WindowSpec>,

    /// Window lengths, e.g. 11,13,17 [default: 11,13,17,19,23,29,31]
    #[arg(long)]
    pub n_list: Option<String>,

    /// Also run n = 43 and n = 59 (slow).
    #[arg(long)]
    #[serde(default)]
    pub include_large: bool,

    /// Sparsity levels, e.g. 1-20 or 1-29:2 [default: 1-(n-1) for each n]
    #[arg(long)]
    pub k_range: Option<String>,

    /// Trials per cell [default: 100]
    #[arg(long)]
    pub trials: Option<usize>,

    /// Noisy measurements at this SNR, judged by top-k support match.
    #[arg(long)]
    pub snr_db: Option<f64>,

    /// Number of stacked windows (random families only) [default: 1]
    #[arg(long)]
    pub r: Option<usize>,

    /// Grid CSV; the logistic fits go to <stem>.fit.csv beside it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct MultiwindowArgs {
    /// random | dft-of-random [default: random]
    #[arg(long)]
    pub window: Option<WindowSpec>,

    /// Window length.
    #[arg(long)]
    pub n: Option<usize>,

    /// Window counts, e.g. 1-3 [default: 1,2,3]
    #[arg(long)]
    pub r_list: Option<String>,

    /// Sparsity levels [default: 1-(n-1)]
    #[arg(long)]
    pub k_range: Option<String>,

    /// Trials per cell [default: 100]
    #[arg(long)]
    pub trials: Option<usize>,

    #[arg(long)]
    pub snr_db: Option<f64>,

    /// Grid CSV; the logistic fits go to <stem>.fit.csv beside it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct FitRow {
    beta0: Option<f64>,
    beta1: Option<f64>,
    k50: Option<f64>,
    k93: Option<f64>,
    crossover: Option<f64>,
    separation: Option<bool>,
}

fn fit_row(cells: &[Cell]) -> FitRow {
    let fit = fit_cells(cells).ok();
    FitRow {
        beta0: fit.as_ref().map(|f| f.beta0),
        beta1: fit.as_ref().map(|f| f.beta1),
        k50: fit.as_ref().and_then(|f| level_curve(f, 0.5).ok()),
        k93: fit.as_ref().and_then(|f| level_curve(f, 0.93).ok()),
        crossover: empirical_crossover(cells),
        separation: fit.as_ref().map(|f| f.separation_flag),
    }
}

impl FitRow {
    fn fields(&self) -> Vec<String> {
        vec![
            opt_num(self.beta0),
            opt_num(self.beta1),
            opt_num(self.k50),
            opt_num(self.k93),
            opt_num(self.crossover),
            self.separation.map_or_else(|| "NaN".into(), |s| s.to_string()),
        ]
    }

    fn json(&self) -> Value {
        json!({
            "beta0": self.beta0,
            "beta1": self.beta1,
            "k50": self.k50,
            "k93": self.k93,
            "crossover": self.crossover,
            "separation_flag": self.separation,
        })
    }
}

fn out_files(out: &Option<PathBuf>, command: &str) -> CliResult<(PendingFile, PendingFile)> {
    let out = out.as_ref().ok_or_else(|| CliError::missing("out", command))?;
    Ok((PendingFile::create(out)?, PendingFile::create(&fit_path(out))?))
}

fn k_values(spec: &Option<String>, n: usize) -> CliResult<Vec<usize>> {
    match spec {
        Some(s) => parse_list("k-range", s),
        None if n >= 2 => Ok((1..n).collect()),
        None => Err(CliError::Usage(format!("default k range 1-(n-1) is empty for n = {n}"))),
    }
}

fn template(window: WindowSpec, trials: usize, snr_db: Option<f64>, seed: u64) -> TrialConfig {
    let t = TrialConfig::new(1, 1, window, trials, seed);
    match snr_db {
        Some(snr) => t.with_noise(snr),
        None => t,
    }
}

fn cell_fields(c: &Cell) -> Vec<String> {
    vec![c.k.to_string(), c.trials.to_string(), c.successes.to_string(), num(c.fraction())]
}

pub fn run_phase(mut args: PhaseArgs, seed: u64) -> CliResult<CommandOutput> {
    let window = *args.window.get_or_insert(WindowSpec::Alltop);
    let mut n_values = parse_list("n-list", args.n_list.get_or_insert_with(|| DEFAULT_N_LIST.into()))?;
    if args.include_large {
        n_values.extend(LARGE_N.iter().filter(|n| !n_values.contains(n)).collect::<Vec<_>>());
    }
    let trials = *args.trials.get_or_insert(DEFAULT_TRIALS);
    let r = *args.r.get_or_insert(1);
    let (grid_file, fit_file) = out_files(&args.out, "phase")?;
    let tmpl = template(window, trials, args.snr_db, seed).with_windows(r);

    let mut grid = Csv::new(&["n", "k", "trials", "successes", "fraction"]);
    let mut fits = Csv::new(&["n", "beta0", "beta1", "k50", "k93", "crossover", "separation_flag", "reference_threshold"]);
    let mut fit_json = Vec::new();
    for &n in &n_values {
        let ks = k_values(&args.k_range, n)?;
        let cells = phase_grid(&[n], &ks, &tmpl)?;
        for c in &cells {
            grid.row(&[vec![c.n.to_string()], cell_fields(c)].concat());
        }
        let row = fit_row(&cells);
        let reference = reference_threshold(n as f64);
        fits.row(&[vec![n.to_string()], row.fields(), vec![num(reference)]].concat());
        let mut j = row.json();
        j["n"] = n.into();
        j["reference_threshold"] = reference.into();
        fit_json.push(j);
        let line = format!("n = {n}: k50 = {}, k93 = {}, crossover = {}", opt_num(row.k50), opt_num(row.k93), opt_num(row.crossover));
        eprintln!("{line}");
    }
    let outputs = vec![grid_file.finish(grid.as_str())?, fit_file.finish(fits.as_str())?];
    let summary = outputs.iter().map(|o| format!("wrote {}", o.path)).collect();
    Ok(CommandOutput {
        params: serde_json::to_value(&args).expect("arguments serialize"),
        results: json!({ "fits": fit_json }),
        outputs,
        summary,
        failure: None,
    })
}

pub fn run_multiwindow(mut args: MultiwindowArgs, seed: u64) -> CliResult<CommandOutput> {
    let n = args.n.ok_or_else(|| CliError::missing("n", "multiwindow"))?;
    let window = *args.window.get_or_insert(WindowSpec::Random);
    let r_values = parse_list("r-list", args.r_list.get_or_insert_with(|| "1,2,3".into()))?;
    let trials = *args.trials.get_or_insert(DEFAULT_TRIALS);
    let ks = k_values(&args.k_range, n)?;
    let (grid_file, fit_file) = out_files(&args.out, "multiwindow")?;
    let tmpl = template(window, trials, args.snr_db, seed);

    let cells = multi_window_grid(n, &r_values, &ks, &tmpl)?;
    let mut grid = Csv::new(&["r", "n", "k", "trials", "successes", "fraction"]);
    for c in &cells {
        grid.row(&[vec![c.r.to_string(), c.n.to_string()], cell_fields(c)].concat());
    }
    let mut fits = Csv::new(&["r", "n", "beta0", "beta1", "k50", "k93", "crossover", "separation_flag"]);
    let mut fit_json = Vec::new();
    let mut summary = Vec::new();
    for &r in &r_values {
        let of_r: Vec<Cell> = cells.iter().filter(|c| c.r == r).copied().collect();
        let row = fit_row(&of_r);
        fits.row(&[vec![r.to_string(), n.to_string()], row.fields()].concat());
        let mut j = row.json();
        j["r"] = r.into();
        j["n"] = n.into();
        fit_json.push(j);
        summary.push(format!("r = {r}: k50 = {}, crossover = {}", opt_num(row.k50), opt_num(row.crossover)));
    }
    let outputs = vec![grid_file.finish(grid.as_str())?, fit_file.finish(fits.as_str())?];
    Ok(CommandOutput {
        params: serde_json::to_value(&args).expect("arguments serialize"),
        results: json!({ "fits": fit_json }),
        outputs,
        summary,
        failure: None,
    })
}
