//! `novelbench`: generate, extract, tune, benchmark, score and report.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 execution failure.

mod config;
mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};

use novelbench::benchmark::{
    config_hash, export_report, extract_dataset, parse_report_csv, parse_traces_csv, run_benchmark,
    SetFeatures,
};
use novelbench::detectors::DetectorKind;
use novelbench::features::{
    extract_all, feature_count, feature_names, read_feature_matrix, write_feature_matrix,
};
use novelbench::hyperopt::tuning::{tune, BestParams};
use novelbench::hyperopt::Study;
use novelbench::pipeline::Pipeline;
use novelbench::signal::{generate_dataset, load_dataset, save_dataset, Dataset};
use novelbench::transform::TransformKind;
use novelbench::util::median;

use config::{normalize_set_name, RunConfig};

/// Prints to stdout, ignoring a closed pipe so file work still completes.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

const DEFAULT_OUT: &str = "novelbench-out";

#[derive(Parser, Debug)]
#[command(
    name = "novelbench",
    version,
    about = "Unsupervised novelty-detection benchmark for vibration signals"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base random seed (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for every artifact (default `novelbench-out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated detectors: kmeans, dbscan, gmm, nusvm, iforest, lof.
    #[arg(long, global = true, value_delimiter = ',')]
    detectors: Option<Vec<String>>,
    /// Comma-separated transforms: of, aer, aea, pca.
    #[arg(long, global = true, value_delimiter = ',')]
    transforms: Option<Vec<String>>,
    /// Comma-separated sets, as `set3` or `3`.
    #[arg(long, global = true, value_delimiter = ',')]
    sets: Option<Vec<String>>,
    /// Tuning trials per combination (default 50).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Standard deviation of additive Gaussian sensor noise (default 0).
    #[arg(long, global = true)]
    noise_sigma: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize the shaker dataset into `<out>/dataset.txt`.
    Generate,
    /// Extract feature matrices into `<out>/features/<set>.csv`.
    Extract {
        /// Wavelet packet depth; overrides the config.
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Tune transform hyperparameters per detector into `<out>/tune/`.
    Tune {
        /// Append new trials to an existing history instead of starting over.
        #[arg(long)]
        resume: bool,
    },
    /// Run every detector × transform combination and write the report.
    Benchmark,
    /// Score chunks with a saved pipeline; prints `chunk,nm_raw,nm_scaled`.
    Score {
        /// Pipeline file written by `benchmark` under `<out>/models/`.
        #[arg(long)]
        model: PathBuf,
        /// Feature matrix CSV or dataset file.
        #[arg(long)]
        input: PathBuf,
        /// Set to score when the input is a dataset file (default: the first set).
        #[arg(long)]
        set: Option<String>,
    },
    /// Summarize an existing report as a table with per-set median scaled NM.
    Report,
}

struct Failure {
    code: u8,
    err: anyhow::Error,
}

type CmdResult<T = ()> = Result<T, Failure>;

fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure {
        code: 2,
        err: e.into(),
    }
}

fn exec<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure {
        code: 3,
        err: e.into(),
    }
}

impl From<novelbench::Error> for Failure {
    fn from(e: novelbench::Error) -> Self {
        use novelbench::Error::*;
        let code = match e {
            InvalidParameter(_)
            | DimensionMismatch { .. }
            | Nyquist { .. }
            | Parse { .. }
            | Io(_) => 2,
            _ => 3,
        };
        Failure {
            code,
            err: e.into(),
        }
    }
}

struct Ctx {
    cfg: RunConfig,
    seed: u64,
    out: PathBuf,
    trials: usize,
}

impl Ctx {
    fn new(c: &Common) -> CmdResult<Self> {
        let mut cfg = match &c.config {
            Some(p) => RunConfig::load(p).map_err(input)?,
            None => RunConfig::default(),
        };
        if let Some(d) = &c.detectors {
            cfg.detectors.select = Some(d.clone());
        }
        if let Some(t) = &c.transforms {
            cfg.transforms.select = Some(t.clone());
        }
        if let Some(s) = &c.sets {
            cfg.dataset.sets = Some(s.clone());
        }
        if let Some(n) = c.noise_sigma {
            cfg.dataset.noise_sigma = Some(n);
        }
        let seed = c.seed.or(cfg.seed).unwrap_or(0);
        let out = c
            .out
            .clone()
            .or(cfg.out.clone())
            .unwrap_or_else(|| DEFAULT_OUT.into());
        let trials = c
            .trials
            .or(cfg.tune.trials)
            .unwrap_or(novelbench::hyperopt::DEFAULT_TRIALS);
        // validate selections early so bad names are configuration errors
        cfg.detector_kinds().map_err(input)?;
        cfg.transform_kinds().map_err(input)?;
        Ok(Self {
            cfg,
            seed,
            out,
            trials,
        })
    }

    fn dataset_path(&self) -> PathBuf {
        self.cfg
            .dataset
            .path
            .clone()
            .unwrap_or_else(|| self.out.join("dataset.txt"))
    }

    fn load_dataset(&self) -> CmdResult<Dataset> {
        let path = self.dataset_path();
        if !path.exists() {
            return Err(input(anyhow!(
                "dataset {} not found; run `novelbench generate` first",
                path.display()
            )));
        }
        let ds = load_dataset(&path)?;
        match &self.cfg.dataset.sets {
            Some(sel) => {
                let names: Vec<String> = sel.iter().map(|s| normalize_set_name(s)).collect();
                Ok(ds.select(&names)?)
            }
            None => Ok(ds),
        }
    }

    fn features(&self) -> CmdResult<Vec<SetFeatures>> {
        let ds = self.load_dataset()?;
        Ok(extract_dataset(&ds, &self.cfg.wavelet().map_err(input)?)?)
    }

    fn context_string(&self) -> String {
        format!(
            "dataset={} sets={:?} noise={:?} wavelet={:?}",
            self.dataset_path().display(),
            self.cfg.dataset.sets,
            self.cfg.dataset.noise_sigma,
            self.cfg.wavelet().ok()
        )
    }
}

fn create_dir(p: &Path) -> CmdResult {
    fs::create_dir_all(p).map_err(|e| input(anyhow!("cannot create {}: {e}", p.display())))
}

fn cmd_generate(ctx: &Ctx) -> CmdResult {
    let specs = ctx.cfg.dataset_specs().map_err(input)?;
    let ds = generate_dataset(&specs, ctx.seed)?;
    create_dir(&ctx.out)?;
    let path = ctx.out.join("dataset.txt");
    save_dataset(&ds, &path)?;
    say!("set,type,p2p,chunks,samples_per_chunk");
    for s in ds.sets() {
        let h = &s.header;
        let len = s.chunks.first().map_or(0, |c| c.len());
        say!(
            "{},{},{},{},{len}",
            h.name,
            h.signal_type,
            h.p2p,
            s.chunks.len()
        );
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn cmd_extract(ctx: &Ctx, levels: Option<usize>) -> CmdResult {
    let mut cfg = ctx.cfg.clone();
    if let Some(l) = levels {
        cfg.features.levels = l;
    }
    let spec = cfg.wavelet().map_err(input)?;
    let ds = ctx.load_dataset()?;
    let dir = ctx.out.join("features");
    create_dir(&dir)?;
    let names = feature_names(&spec);
    for s in ds.sets() {
        let rows = extract_all(&s.chunks, &spec)?;
        let path = dir.join(format!("{}.csv", s.header.name));
        let f = fs::File::create(&path).map_err(input)?;
        write_feature_matrix(&names, &rows, std::io::BufWriter::new(f))?;
        say!(
            "{}: {} chunks × {} features",
            s.header.name,
            rows.len(),
            names.len()
        );
    }
    Ok(())
}

fn tune_file(dir: &Path, prefix: &str, d: DetectorKind, t: TransformKind, ext: &str) -> PathBuf {
    dir.join(format!("{prefix}_{}_{}.{ext}", d.id(), t.id()))
}

fn cmd_tune(ctx: &Ctx, resume: bool) -> CmdResult {
    let sets = ctx.features()?;
    let protocol = ctx.cfg.protocol();
    let dcfg = ctx.cfg.detector_config();
    let dir = ctx.out.join("tune");
    create_dir(&dir)?;
    let mut all_failed = Vec::new();
    for d in ctx.cfg.detector_kinds().map_err(input)? {
        for t in ctx.cfg.transform_kinds().map_err(input)? {
            if t == TransformKind::Of {
                eprintln!("{d}/{t}: nothing to tune");
                continue;
            }
            let hist_path = tune_file(&dir, "history", d, t, "csv");
            let history = if resume && hist_path.exists() {
                let f = fs::File::open(&hist_path).map_err(input)?;
                Some(Study::read_history(f)?)
            } else {
                None
            };
            match tune(&sets, &protocol, d, t, &dcfg, ctx.trials, ctx.seed, history) {
                Ok(study) => {
                    let mut buf = Vec::new();
                    study.write_history(&mut buf)?;
                    fs::write(&hist_path, buf).map_err(exec)?;
                    let best = BestParams::from_study(d, t, &study)?;
                    fs::write(tune_file(&dir, "best", d, t, "toml"), best.to_text())
                        .map_err(exec)?;
                    say!("{d},{t},{},{}", study.trials.len(), best.j);
                }
                Err(novelbench::Error::Failed(msg)) => {
                    eprintln!("{d}/{t}: {msg}");
                    all_failed.push(format!("{d}/{t}"));
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    if !all_failed.is_empty() {
        return Err(exec(anyhow!(
            "every trial failed for {}",
            all_failed.join(", ")
        )));
    }
    Ok(())
}

fn cmd_benchmark(ctx: &Ctx) -> CmdResult {
    let sets = ctx.features()?;
    let protocol = ctx.cfg.protocol();
    let mut bc = ctx.cfg.bench_config(ctx.seed).map_err(input)?;
    let tuned = ctx
        .cfg
        .transforms
        .tuned_dir
        .clone()
        .unwrap_or_else(|| ctx.out.join("tune"));
    if tuned.is_dir() {
        for (d, t) in bc.combos() {
            let p = tune_file(&tuned, "best", d, t, "toml");
            if p.exists() {
                let text = fs::read_to_string(&p).map_err(input)?;
                let best = BestParams::parse(&text)?;
                bc.overrides.insert((d, t), best.spec);
                eprintln!("{d}/{t}: using tuned parameters from {}", p.display());
            }
        }
    }
    let result = run_benchmark(&sets, &protocol, &bc)?;
    let hash = config_hash(&protocol, &bc, &ctx.context_string());
    export_report(&result, ctx.seed, &hash, &ctx.out)?;
    let models = ctx.out.join("models");
    create_dir(&models)?;
    for p in &result.pipelines {
        let name = format!(
            "{}_{}.model",
            p.detector.kind().id(),
            p.transform.kind().id()
        );
        p.save(models.join(name))?;
    }
    print_table(&result.rows);
    if result.rows.iter().all(|r| r.failed()) {
        return Err(exec(anyhow!("every combination failed")));
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.4e}"))
}

fn print_table(rows: &[novelbench::benchmark::MetricsRow]) {
    say!(
        "{:<8} {:<4} {:>4} {:>8} {:>11} {:>11} {:>11} {:>11} {:>11}  flags",
        "detector",
        "tr",
        "n_f",
        "fp_%",
        "var_scaled",
        "mean_nom",
        "mean_novel",
        "reactivity",
        "infer_us"
    );
    for r in rows {
        say!(
            "{:<8} {:<4} {:>4} {:>8} {:>11} {:>11} {:>11} {:>11} {:>11}  {}",
            r.detector.id(),
            r.transform.id(),
            r.n_f.map_or("-".into(), |n| n.to_string()),
            r.fp_pct.map_or("-".into(), |x| format!("{x:.2}")),
            fmt_opt(r.variance_scaled),
            fmt_opt(r.mean_nominal),
            fmt_opt(r.mean_novel),
            fmt_opt(r.reactivity),
            r.infer_us_mean.map_or("-".into(), |x| format!("{x:.3}")),
            r.flags
        );
    }
}

fn cmd_score(ctx: &Ctx, model: &Path, input_path: &Path, set: Option<&str>) -> CmdResult {
    let pipeline = Pipeline::load(model)?;
    let text = fs::read_to_string(input_path)
        .map_err(|e| input(anyhow!("{}: {e}", input_path.display())))?;
    let rows = if text.starts_with("# novelbench dataset") {
        let ds = novelbench::signal::read_dataset(text.as_bytes())?;
        let s = match set {
            Some(name) => ds
                .get(&normalize_set_name(name))
                .ok_or_else(|| input(anyhow!("dataset has no set '{name}'")))?,
            None => ds
                .sets()
                .first()
                .ok_or_else(|| input(anyhow!("dataset is empty")))?,
        };
        let spec = ctx.cfg.wavelet().map_err(input)?;
        if feature_count(&spec) != pipeline.input_dim() {
            return Err(novelbench::Error::DimensionMismatch {
                expected: pipeline.input_dim(),
                got: feature_count(&spec),
            }
            .into());
        }
        extract_all(&s.chunks, &spec)?
    } else {
        read_feature_matrix(text.as_bytes())?.1
    };
    if let Some(r) = rows.iter().find(|r| r.len() != pipeline.input_dim()) {
        return Err(novelbench::Error::DimensionMismatch {
            expected: pipeline.input_dim(),
            got: r.len(),
        }
        .into());
    }
    say!("chunk,nm_raw,nm_scaled");
    for (i, r) in rows.iter().enumerate() {
        let (raw, scaled) = pipeline.score(r)?;
        say!(
            "{i},{raw},{}",
            scaled.map(|s| s.to_string()).unwrap_or_default()
        );
    }
    Ok(())
}

fn cmd_report(ctx: &Ctx) -> CmdResult {
    let read = |name: &str| {
        let p = ctx.out.join(name);
        fs::read_to_string(&p).map_err(|e| {
            input(anyhow!(
                "{}: {e}; run `novelbench benchmark` first",
                p.display()
            ))
        })
    };
    let rows = parse_report_csv(&read("report.csv")?)?;
    let traces = parse_traces_csv(&read("traces.csv")?)?;
    print_table(&rows);
    let mut set_order: Vec<&str> = Vec::new();
    for t in &traces {
        if !set_order.contains(&t.set.as_str()) {
            set_order.push(&t.set);
        }
    }
    let mut groups: BTreeMap<(String, String, &str), Vec<f64>> = BTreeMap::new();
    for t in &traces {
        if let Some(s) = t.nm_scaled {
            groups
                .entry((
                    t.detector.id().into(),
                    t.transform.id().into(),
                    t.set.as_str(),
                ))
                .or_default()
                .push(s);
        }
    }
    say!();
    say!("median scaled NM per set");
    say!(
        "{:<13} {}",
        "combination",
        set_order
            .iter()
            .map(|s| format!("{s:>7}"))
            .collect::<String>()
    );
    for r in &rows {
        let line: String = set_order
            .iter()
            .map(|s| {
                groups
                    .get(&(r.detector.id().into(), r.transform.id().into(), *s))
                    .map_or(format!("{:>7}", "-"), |v| format!("{:>7.3}", median(v)))
            })
            .collect();
        say!(
            "{:<13} {line}",
            format!("{}/{}", r.detector.id(), r.transform.id())
        );
    }
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    let ctx = Ctx::new(&cli.common)?;
    let writes = !matches!(cli.command, Command::Score { .. } | Command::Report);
    match &cli.command {
        Command::Generate => cmd_generate(&ctx)?,
        Command::Extract { levels } => cmd_extract(&ctx, *levels)?,
        Command::Tune { resume } => cmd_tune(&ctx, *resume)?,
        Command::Benchmark => cmd_benchmark(&ctx)?,
        Command::Score { model, input, set } => cmd_score(&ctx, model, input, set.as_deref())?,
        Command::Report => cmd_report(&ctx)?,
    }
    if writes {
        manifest::write(&ctx.out).map_err(exec)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
