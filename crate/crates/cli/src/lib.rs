//! `ssglm fit | contrast | simulate`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use ssglm::inference::{
    contrast_test, infer, subvector_covariance, subvector_fit, ContrastTest, InferenceReport, VarianceEstimate,
};
use ssglm::io::{
    contrast_report_csv, contrast_test_csv, load_dataset, metrics_csv, parse_matrix, parse_subset, parse_vector,
    q_mse_csv, result_table, summary_csv, timing_csv, Command, LoadOptions, RunConfig,
};
use ssglm::selection::SelectorSpec;
use ssglm::sim::{contrast_scenario, q_sweep, run_scenario, SimScenario};
use ssglm::smooth::{ssglm_fit, SmoothedFit, SsglmOptions};
use ssglm::{Dataset, Error, Family, Result};

#[derive(Debug, Parser)]
#[command(name = "ssglm", version, about = "Split-and-smoothed inference for high-dimensional GLMs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Smoothed estimates, standard errors and p-values for every coefficient.
    Fit(Args),
    /// Wald test of `Q beta1 = R` for a subvector of coefficients.
    Contrast(Args),
    /// Run a simulation scenario file.
    Simulate(Args),
}

#[derive(Debug, Default, clap::Args)]
pub struct Args {
    /// Data file (fit, contrast) or scenario file (simulate).
    pub input: Option<PathBuf>,
    /// TOML file with default settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// gaussian, binomial or poisson.
    #[arg(long)]
    pub family: Option<String>,
    /// sis, isis or lasso-cv.
    #[arg(long)]
    pub selector: Option<String>,
    /// Fraction of observations used for selection.
    #[arg(long)]
    pub q: Option<f64>,
    /// Number of splits.
    #[arg(long = "B")]
    pub b: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Target columns, labels or 1-based numbers, comma separated.
    #[arg(long)]
    pub subset: Option<String>,
    /// Contrast matrix, rows separated by `;`.
    #[arg(long = "contrast-Q")]
    pub contrast_q: Option<String>,
    /// Right-hand side of the contrast.
    #[arg(long = "contrast-R")]
    pub contrast_r: Option<String>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Response column name.
    #[arg(long)]
    pub response: Option<String>,
    /// Field delimiter: a single character or `tab`.
    #[arg(long)]
    pub delimiter: Option<String>,
    /// Keep predictor columns uncentered.
    #[arg(long)]
    pub no_center: bool,
    /// Split proportions for the q sweep of `simulate`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub q_grid: Option<Vec<f64>>,
}

impl Args {
    fn overrides(&self) -> Result<RunConfig> {
        Ok(RunConfig {
            command: None,
            input: self.input.clone(),
            response: self.response.clone(),
            delimiter: self.delimiter.clone(),
            no_center: self.no_center.then_some(true),
            family: self.family.as_deref().map(Family::parse).transpose()?,
            selector: self.selector.as_deref().map(SelectorSpec::parse).transpose()?,
            q: self.q,
            b: self.b,
            seed: self.seed,
            alpha: self.alpha,
            subset: self.subset.clone(),
            contrast_q: self.contrast_q.clone(),
            contrast_r: self.contrast_r.clone(),
            out: self.out.clone(),
            threads: self.threads,
            q_grid: self.q_grid.clone(),
        })
    }
}

/// Resolve the configuration for a parsed command line.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let (command, args) = match &cli.command {
        Cmd::Fit(a) => (Command::Fit, a),
        Cmd::Contrast(a) => (Command::Contrast, a),
        Cmd::Simulate(a) => (Command::Simulate, a),
    };
    let base = match &args.config {
        Some(p) => RunConfig::from_toml(&fs::read_to_string(p)?)?,
        None => RunConfig::default(),
    };
    let mut cfg = base.merged(args.overrides()?);
    cfg.command = Some(command);
    cfg.validate()?;
    Ok(cfg)
}

/// Parse arguments, run, and return the process exit status. Diagnostics go
/// to stderr as `error[<code>]: <message>`.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match resolve(&cli).and_then(|cfg| run_command(&cfg)) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            e.code()
        }
    }
}

/// Execute one command; returns the artifacts written.
pub fn run_command(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("ssglm-out"));
    match cfg.command {
        Some(Command::Fit) => fit(cfg, &out),
        Some(Command::Contrast) => contrast(cfg, &out),
        Some(Command::Simulate) => simulate(cfg, &out),
        None => Err(Error::Config("no command given".into())),
    }
}

fn input(cfg: &RunConfig) -> Result<&Path> {
    cfg.input
        .as_deref()
        .ok_or_else(|| Error::Config("an input file is required".into()))
}

fn load(cfg: &RunConfig) -> Result<Dataset> {
    let opts = LoadOptions {
        response: cfg.response.clone().unwrap_or_else(|| "y".into()),
        delimiter: cfg.delimiter_byte()?,
        center: !cfg.no_center.unwrap_or(false),
    };
    load_dataset(input(cfg)?, &opts)
}

fn family(cfg: &RunConfig) -> Result<Family> {
    cfg.family
        .ok_or_else(|| Error::Config("--family is required".into()))
}

fn options(cfg: &RunConfig) -> SsglmOptions {
    let d = SsglmOptions::default();
    SsglmOptions {
        q: cfg.q.unwrap_or(d.q),
        b: cfg.b.unwrap_or(d.b),
        seed: cfg.seed.unwrap_or(d.seed),
        threads: cfg.threads,
        ..d
    }
}

fn write(dir: &Path, name: &str, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, text)?;
    files.push(path);
    Ok(())
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Format(e.to_string()))
}

#[derive(Serialize)]
struct FitDump<'a> {
    labels: &'a [String],
    selector: &'a SelectorSpec,
    q: f64,
    b: usize,
    seed: u64,
    alpha: f64,
    variance: &'a VarianceEstimate,
    report: &'a InferenceReport,
    fit: &'a SmoothedFit,
}

fn fit(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let data = load(cfg)?;
    let family = family(cfg)?;
    let selector = cfg.selector.clone().unwrap_or_default();
    let opts = options(cfg);
    let alpha = cfg.alpha.unwrap_or(0.05);
    let fit = ssglm_fit(&data, family, selector.build().as_ref(), &opts)?;
    let (variance, report) = infer(&fit, alpha)?;
    let table = result_table(&report, &data.labels);
    let mut files = Vec::new();
    write(out, "results.csv", &table.to_csv(), &mut files)?;
    let dump = FitDump {
        labels: &data.labels,
        selector: &selector,
        q: opts.q,
        b: opts.b,
        seed: opts.seed,
        alpha,
        variance: &variance,
        report: &report,
        fit: &fit,
    };
    write(out, "fit.json", &json(&dump)?, &mut files)?;
    Ok(files)
}

#[derive(Serialize)]
struct ContrastDump<'a> {
    labels: Vec<&'a str>,
    selector: &'a SelectorSpec,
    q_split: f64,
    b: usize,
    seed: u64,
    failed_splits: &'a [usize],
    test: &'a ContrastTest,
}

fn contrast(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let data = load(cfg)?;
    let family = family(cfg)?;
    let subset_text = cfg
        .subset
        .as_deref()
        .ok_or_else(|| Error::Config("--subset is required for contrast".into()))?;
    let subset = parse_subset(subset_text, &data.labels)?;
    let p1 = subset.len();
    let q = match &cfg.contrast_q {
        Some(t) => parse_matrix(t)?,
        None => ssglm::nalgebra::DMatrix::identity(p1, p1),
    };
    let r = match &cfg.contrast_r {
        Some(t) => parse_vector(t)?,
        None => vec![0.0; q.nrows()],
    };
    let selector = cfg.selector.clone().unwrap_or_default();
    let opts = options(cfg);
    let sub = subvector_fit(&data, family, selector.build().as_ref(), &subset, &opts)?;
    let sigma = subvector_covariance(&sub.plan, &sub.split_estimates)?;
    let test = contrast_test(&subset, &sub.beta1_hat, &sigma, &q, &r)?;
    let mut files = Vec::new();
    write(out, "contrast.csv", &contrast_test_csv(&test, &data.labels), &mut files)?;
    let dump = ContrastDump {
        labels: subset.iter().map(|&j| data.labels[j].as_str()).collect(),
        selector: &selector,
        q_split: opts.q,
        b: opts.b,
        seed: opts.seed,
        failed_splits: &sub.failed_splits,
        test: &test,
    };
    write(out, "contrast.json", &json(&dump)?, &mut files)?;
    Ok(files)
}

fn simulate(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    if cfg.family.is_some() {
        return Err(Error::Config("the family of a simulation is set in its scenario file".into()));
    }
    let mut s = SimScenario::from_toml(&fs::read_to_string(input(cfg)?)?)?;
    if let Some(sel) = &cfg.selector {
        s.selector = sel.clone();
    }
    s.q = cfg.q.unwrap_or(s.q);
    s.b = cfg.b.unwrap_or(s.b);
    s.seed = cfg.seed.unwrap_or(s.seed);
    s.alpha = cfg.alpha.unwrap_or(s.alpha);
    s.validate()?;

    let report = run_scenario(&s, cfg.threads)?;
    let mut files = Vec::new();
    write(out, "metrics.csv", &metrics_csv(&report), &mut files)?;
    write(out, "summary.csv", &summary_csv(&report), &mut files)?;
    write(out, "timing.csv", &timing_csv(&report), &mut files)?;
    write(out, "report.json", &json(&report.without_timing())?, &mut files)?;
    let points = match &cfg.q_grid {
        Some(g) => q_sweep(&s, g, cfg.threads)?,
        None => vec![(s.q, report.mse_avg)],
    };
    write(out, "plotdata_q_mse.csv", &q_mse_csv(&points), &mut files)?;
    if s.contrast.is_some() {
        let c = contrast_scenario(&s, cfg.threads)?;
        write(out, "contrast_rates.csv", &contrast_report_csv(&c), &mut files)?;
    }
    Ok(files)
}
