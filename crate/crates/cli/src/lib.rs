//! The `cmsbnp` command line.
//!
//! Options may also come from a flat `key=value` file given with `--config`
//! before the subcommand; keys are long option names without the dashes.
//! Flags on the command line win over the file, which wins over defaults.

mod error;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cms_bnp::bench::{run_bench, BenchConfig, Estimator, EstimatorSet};
use cms_bnp::data::{generate_zipf, read_token_lines, read_uci_bow, TokenStream};
use cms_bnp::fit::{fit_params, FitConfig, FitRecord, SummaryVector};
use cms_bnp::hashing::{draw_family, tokenize};
use cms_bnp::models::PypParams;
use cms_bnp::pmf::posterior_summary;
use cms_bnp::posterior::{dp_range2_multi, fit_theta_empirical_bayes, range_sum_posterior, PypPosteriorContext};
use cms_bnp::sketch::{hash_family_of, SketchMatrix};

pub use error::{CliError, Result};
use error::usage;

const COMMANDS: [&str; 5] = ["ingest", "generate-zipf", "fit", "query", "bench"];

#[derive(Debug, Parser)]
#[command(name = "cmsbnp", version, about = "Count-min sketches with Bayesian nonparametric frequency estimates")]
pub struct Cli {
    /// Flat key=value file supplying option defaults for the subcommand.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stream a token file into a sketch snapshot.
    Ingest(IngestArgs),
    /// Write a Zipf token stream, one rank per line.
    GenerateZipf(ZipfArgs),
    /// Fit a DP or PYP prior to a sketch and write a params record.
    Fit(FitArgs),
    /// Answer point or 2-range queries against a sketch.
    Query(QueryArgs),
    /// Binned MAE of estimators against exact counts.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// One token per line.
    Lines,
    /// UCI bag-of-words: D, W, NNZ header lines, then `docID wordID count`.
    Uci,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Dp,
    Pyp,
}

#[derive(Debug, Args)]
pub struct HashArgs {
    /// Number of hash functions N.
    #[arg(long, default_value_t = 2)]
    pub rows: usize,
    /// Buckets per hash J.
    #[arg(long, default_value_t = 320)]
    pub buckets: usize,
    /// Seed of the hash family.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Lines)]
    pub format: InputFormat,
    #[command(flatten)]
    pub hash: HashArgs,
    /// Snapshot file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ZipfArgs {
    /// Zipf exponent c > 1.
    #[arg(long)]
    pub exponent: f64,
    /// Stream length m.
    #[arg(long, default_value_t = 100_000)]
    pub tokens: u64,
    /// Largest rank.
    #[arg(long, default_value_t = 1_000_000)]
    pub vocab: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitOptions {
    /// Synthetic stream length m' (default m/10, at most 100000).
    #[arg(long)]
    pub m_prime: Option<u64>,
    /// Monte Carlo replicates R.
    #[arg(long, default_value_t = FitConfig::DEFAULT_REPLICATES)]
    pub replicates: usize,
    /// Objective evaluations.
    #[arg(long, default_value_t = FitConfig::DEFAULT_BUDGET)]
    pub budget: usize,
    #[arg(long, default_value_t = 0.95)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub theta_min: f64,
    #[arg(long, default_value_t = 1e3)]
    pub theta_max: f64,
}

impl FitOptions {
    fn config(&self, m: u64, seed: u64) -> FitConfig {
        let base = FitConfig::for_stream(m);
        FitConfig {
            m_prime: self.m_prime.unwrap_or(base.m_prime),
            replicates: self.replicates,
            seed,
            alpha_range: (0.0, self.alpha_max),
            theta_range: (self.theta_min, self.theta_max),
            budget: self.budget,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub sketch: PathBuf,
    #[arg(long, value_enum)]
    pub model: Model,
    #[command(flatten)]
    pub fit: FitOptions,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Params record to write; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub sketch: PathBuf,
    /// Params record from `fit`; required by posterior estimators.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// One of: cms, cmm, dp-mean, dp-median, dp-mode, pyp-mean, pyp-median, pyp-mode.
    #[arg(long, default_value = "cms")]
    pub estimator: String,
    /// Posterior of f(v1) + f(v2) under the DP prior.
    #[arg(long, num_args = 2, value_names = ["V1", "V2"])]
    pub range2: Option<Vec<String>>,
    /// Tokens to query.
    pub tokens: Vec<String>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Token file; omit to generate a Zipf stream.
    #[arg(long, conflicts_with = "zipf")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = InputFormat::Lines)]
    pub format: InputFormat,
    /// Zipf exponent of a generated stream.
    #[arg(long)]
    pub zipf: Option<f64>,
    /// Generated stream length.
    #[arg(long, default_value_t = 100_000)]
    pub tokens: u64,
    /// Generated vocabulary size.
    #[arg(long, default_value_t = 1_000_000)]
    pub vocab: usize,
    /// Hash configurations as JxN.
    #[arg(long, value_delimiter = ',', default_value = "320x2,160x4")]
    pub hash: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "cms,cmm,dp-mean,pyp-mean")]
    pub estimators: Vec<String>,
    #[command(flatten)]
    pub fit: FitOptions,
    /// Seeds the stream, the hash families and the fit.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Score a uniform sample of this many distinct tokens (all by default).
    #[arg(long)]
    pub sample: Option<usize>,
    /// Also write comma-separated rows here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CliError::File { path: path.to_owned(), source })
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::File { path: path.to_owned(), source })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::File { path: path.to_owned(), source })
}

fn in_file<T>(path: &Path, r: cms_bnp::Result<T>) -> Result<T> {
    r.map_err(|source| match source {
        cms_bnp::Error::Parse { .. } | cms_bnp::Error::Io(_) => CliError::Input { path: path.to_owned(), source },
        other => CliError::Core(other),
    })
}

fn read_stream(path: &Path, format: InputFormat) -> Result<TokenStream> {
    let reader = open(path)?;
    let stream = match format {
        InputFormat::Lines => read_token_lines(reader),
        InputFormat::Uci => read_uci_bow(reader),
    };
    in_file(path, stream)
}

fn load_sketch(path: &Path) -> Result<SketchMatrix> {
    let text = read_text(path)?;
    in_file(path, SketchMatrix::from_snapshot(&text))
}

fn load_params(path: &Path) -> Result<FitRecord> {
    let text = read_text(path)?;
    in_file(path, FitRecord::from_text(&text))
}

/// Splices `key=value` pairs from the config file into `argv` right after the
/// subcommand, skipping keys already given on the command line.
pub fn apply_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let args: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let Some(sub) = args.iter().position(|a| COMMANDS.contains(&a.as_str())) else {
        return Ok(argv);
    };
    let mut path = None;
    let mut i = 1;
    while i < sub {
        if args[i] == "--config" {
            path = args.get(i + 1).cloned();
            i += 1;
        } else if let Some(p) = args[i].strip_prefix("--config=") {
            path = Some(p.to_owned());
        }
        i += 1;
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    let text = read_text(Path::new(&path))?;
    let given = |key: &str| {
        let flag = format!("--{key}");
        args[sub + 1..].iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
    };
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Input {
                path: path.clone().into(),
                source: cms_bnp::Error::Parse { line: n + 1, msg: "expected key=value".into() },
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if given(key) {
            continue;
        }
        extra.push(OsString::from(format!("--{key}={value}")));
    }
    let mut out: Vec<OsString> = argv[..=sub].to_vec();
    out.extend(extra);
    out.extend(argv[sub + 1..].iter().cloned());
    Ok(out)
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run(argv: Vec<OsString>, out: &mut dyn Write) -> Result<()> {
    let argv = apply_config(argv)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            write!(out, "{e}")?;
            return Ok(());
        }
        Err(e) => return usage(e.render().to_string()),
    };
    match cli.command {
        Command::Ingest(a) => ingest(a, out),
        Command::GenerateZipf(a) => generate(a, out),
        Command::Fit(a) => fit(a, out),
        Command::Query(a) => query(a, out),
        Command::Bench(a) => bench(a, out),
    }
}

fn ingest(a: IngestArgs, out: &mut dyn Write) -> Result<()> {
    let stream = read_stream(&a.input, a.format)?;
    if stream.is_empty() {
        return usage(format!("{}: no tokens, a sketch needs m ≥ 1", a.input.display()));
    }
    let family = draw_family(a.hash.rows, a.hash.buckets, a.hash.seed)?;
    let mut sketch = SketchMatrix::new(family);
    sketch.extend(stream.ids.iter().copied());
    write_file(&a.out, &sketch.to_snapshot()?)?;
    writeln!(out, "m={} N={} J={}", sketch.total(), sketch.rows(), sketch.buckets())?;
    Ok(())
}

fn zipf_lines(exponent: f64, m: u64, vocab: usize, seed: u64) -> Result<Vec<usize>> {
    Ok(generate_zipf(exponent, m, vocab, seed)?)
}

fn generate(a: ZipfArgs, out: &mut dyn Write) -> Result<()> {
    let ranks = zipf_lines(a.exponent, a.tokens, a.vocab, a.seed)?;
    let mut text = String::with_capacity(ranks.len() * 6);
    for r in ranks {
        text.push_str(&r.to_string());
        text.push('\n');
    }
    match &a.out {
        Some(p) => write_file(p, &text),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn fit(a: FitArgs, out: &mut dyn Write) -> Result<()> {
    let sketch = load_sketch(&a.sketch)?;
    let record = match a.model {
        Model::Dp => {
            let theta = fit_theta_empirical_bayes(&sketch)?;
            let ll = cms_bnp::models::dm_log_likelihood(sketch.counts(), sketch.buckets(), theta)?;
            FitRecord { params: PypParams::dirichlet(theta)?, objective: -ll, evaluations: 0, seed: a.seed }
        }
        Model::Pyp => {
            let family = hash_family_of(&sketch).expect("snapshots always carry a drawn family");
            let cfg = a.fit.config(sketch.total(), a.seed);
            let r = fit_params(&SummaryVector::from_sketch(&sketch), &cfg, family)?;
            FitRecord { params: r.params, objective: r.objective, evaluations: r.evaluations, seed: a.seed }
        }
    };
    match &a.out {
        Some(p) => write_file(p, &record.to_text()),
        None => Ok(out.write_all(record.to_text().as_bytes())?),
    }
}

fn parse_estimator(s: &str) -> Result<Estimator> {
    match s.parse::<Estimator>() {
        Ok(Estimator::Truth) => usage("the truth estimator is only available in `bench`"),
        Ok(e) => Ok(e),
        Err(e) => usage(e.to_string()),
    }
}

fn query(a: QueryArgs, out: &mut dyn Write) -> Result<()> {
    let sketch = load_sketch(&a.sketch)?;
    let est = parse_estimator(&a.estimator)?;
    let needs_params = est.needs_dp() || est.needs_pyp() || a.range2.is_some();
    let record = match (&a.params, needs_params) {
        (Some(p), _) => Some(load_params(p)?),
        (None, true) => return usage(format!("estimator {est} needs --params")),
        (None, false) => None,
    };
    let params = record.as_ref().map(|r| r.params);
    let is_dp = params.is_some_and(|p| p.is_dirichlet());
    if est.needs_pyp() && is_dp {
        return usage(format!("estimator {est} needs PYP params, the record holds a DP fit (alpha = 0)"));
    }
    if (est.needs_dp() || a.range2.is_some()) && !is_dp {
        return usage(format!("{} needs DP params (alpha = 0)", if a.range2.is_some() { "range2" } else { "this estimator" }));
    }
    if a.tokens.is_empty() && a.range2.is_none() {
        return usage("nothing to query: give tokens or --range2");
    }
    let m = sketch.total();
    let pyp_ctx = match params {
        Some(p) if est.needs_pyp() => Some(PypPosteriorContext::new(p, sketch.buckets(), m)?),
        _ => None,
    };
    let set = EstimatorSet { sketch: &sketch, dp_theta: params.map(|p| p.theta), pyp: pyp_ctx.as_ref() };
    for token in &a.tokens {
        let row = sketch.hashed_row(tokenize(token.as_bytes()));
        let counters: Vec<String> = row.values.iter().map(u64::to_string).collect();
        let value = set.estimate(est, &row, 0)?;
        writeln!(out, "{token}\t{}\t{est}\t{value}", counters.join(","))?;
    }
    if let Some(pair) = &a.range2 {
        let theta = params.expect("checked above").theta;
        let r1 = sketch.hashed_row(tokenize(pair[0].as_bytes()));
        let r2 = sketch.hashed_row(tokenize(pair[1].as_bytes()));
        let joint = dp_range2_multi(theta, sketch.buckets(), m, (&r1, &r2))?;
        let sum = range_sum_posterior(&joint);
        writeln!(
            out,
            "range2\t{}\t{}\tmean\t{}\tmedian\t{}",
            pair[0],
            pair[1],
            posterior_summary(&sum, cms_bnp::pmf::Summary::Mean),
            sum.median()
        )?;
    }
    Ok(())
}

fn parse_hash_config(s: &str) -> Result<(usize, usize)> {
    let parsed = s
        .split_once(['x', 'X'])
        .and_then(|(j, n)| Some((j.trim().parse().ok()?, n.trim().parse().ok()?)));
    match parsed {
        Some((j, n)) if j >= 1 && n >= 1 => Ok((j, n)),
        _ => usage(format!("hash configuration {s:?} is not JxN, e.g. 320x2")),
    }
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> Result<()> {
    let stream = match (&a.input, a.zipf) {
        (Some(path), _) => read_stream(path, a.format)?.ids,
        (None, Some(c)) => zipf_lines(c, a.tokens, a.vocab, a.seed)?
            .into_iter()
            .map(|r| tokenize(r.to_string().as_bytes()))
            .collect(),
        (None, None) => return usage("bench needs --input or --zipf"),
    };
    if stream.is_empty() {
        return usage("benchmark stream is empty");
    }
    let estimators = a.estimators.iter().map(|s| s.parse::<Estimator>().or_else(|e| usage(e.to_string()))).collect::<Result<Vec<_>>>()?;
    let configs = a.hash.iter().map(|s| parse_hash_config(s)).collect::<Result<Vec<_>>>()?;
    let mut csv = String::new();
    for (i, &(j, n)) in configs.iter().enumerate() {
        let mut cfg = BenchConfig::new(j, n, a.seed.wrapping_add(i as u64), estimators.clone());
        cfg.fit = Some(a.fit.config(stream.len() as u64, a.seed));
        cfg.sample_tokens = a.sample;
        let run = run_bench(&stream, &cfg)?;
        if i > 0 {
            writeln!(out)?;
        }
        write!(out, "{}", run.report.to_text())?;
        if let Some(t) = run.dp_theta {
            writeln!(out, "# dp theta={t}")?;
        }
        if let Some(f) = &run.pyp_fit {
            writeln!(out, "# pyp alpha={} theta={} objective={}", f.params.alpha, f.params.theta, f.objective)?;
        }
        csv.push_str(&run.report.to_csv(i == 0));
    }
    if let Some(p) = &a.csv {
        write_file(p, &csv)?;
    }
    Ok(())
}
