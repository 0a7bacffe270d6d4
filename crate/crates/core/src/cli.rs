//! Command-line front end. Each subcommand loads its inputs, makes one library
//! call and writes the result; caches are passed between subcommands as files.
//!
//! Exit codes: 0 on success, 1 for usage and configuration errors, 2 for
//! unreadable or malformed data.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dataset::{
    is_cifar10_dir, load_cifar10_binary, load_dataset, make_synthetic, standardize, Dataset, Split,
};
use crate::harness::{
    rank_similarity_report, run_experiment, write_rank_report_csv, write_results_csv, Architecture,
    ExperimentSpec, PipelineConfig, ResultRecord,
};
use crate::mi::{load_mi, save_mi, HistogramConfig, MIMatrix, MiCache};
use crate::nn::{evaluate, load_model, save_model, train, Network, TrainConfig};
use crate::probe::{
    load_trace, record_trace, save_trace, ActivationTrace, Normalization, ProbeConfig,
};
use crate::prune::{
    prune, score_magnitude_with, write_scores_csv, MagnitudeBasis, Method, Scores, ScoringInputs,
};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "mep-prune",
    version,
    about = "Data-free structured pruning by probe mutual information"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a fully-connected ReLU network.
    Train(TrainArgs),
    /// Record the activation trace of a model under Gaussian input.
    Probe(ProbeArgs),
    /// Estimate adjacent-layer mutual information from a trace.
    Mi(MiArgs),
    /// Write per-neuron scores of one or all methods as CSV.
    Score(ScoreArgs),
    /// Prune a model and write the smaller model plus its plan.
    Prune(PruneArgs),
    /// Report the test error of a model.
    Eval(EvalArgs),
    /// Run a method x rate x seed grid and write the results CSV.
    Experiment(ExperimentArgs),
    /// Rank agreement between MI and magnitude scores, per layer.
    RankReport(RankReportArgs),
}

#[derive(Debug, Args)]
struct TrainHyper {
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Learning-rate multiplier applied after each epoch.
    #[arg(long, default_value_t = 0.99)]
    lr_gamma: f64,
    #[arg(long, default_value_t = 1e-4)]
    weight_decay: f64,
    #[arg(long, default_value_t = 128)]
    batch_size: usize,
}

impl TrainHyper {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            initial_lr: self.lr,
            lr_decay_gamma: self.lr_gamma,
            weight_decay: self.weight_decay,
            batch_size: self.batch_size,
            seed,
        }
    }
}

#[derive(Debug, Args)]
struct ProbeHyper {
    /// Number of Gaussian probe samples.
    #[arg(long, default_value_t = 5000)]
    samples: usize,
    /// Column normalization: per-neuron or per-layer.
    #[arg(long, default_value = "per-neuron")]
    normalization: Normalization,
}

impl ProbeHyper {
    fn config(&self, seed: u64) -> ProbeConfig {
        ProbeConfig {
            num_samples: self.samples,
            seed,
            normalization: self.normalization,
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// CIFAR-10 binary directory, a directory holding train.mipd/test.mipd,
    /// or a single .mipd training file.
    #[arg(long)]
    data: PathBuf,
    /// Hidden widths, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    arch: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    hyper: TrainHyper,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    hyper: ProbeHyper,
}

#[derive(Debug, Args)]
struct MiArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Histogram bins per axis.
    #[arg(long, default_value_t = 32)]
    bins: usize,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long)]
    model: PathBuf,
    /// Scoring method, or `all`.
    #[arg(long, default_value = "all")]
    method: String,
    /// MI scores reflect removals made at this rate in shallower layers.
    #[arg(long, default_value_t = 0.0, value_parser = parse_rate)]
    rate: f64,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    mi_cache: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Weights measured by the magnitude scorer: incoming, outgoing or both.
    #[arg(long, default_value = "incoming")]
    magnitude_basis: MagnitudeBasis,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PruneArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    method: Method,
    /// Removal fraction of the deepest hidden layer.
    #[arg(long, value_parser = parse_rate)]
    rate: f64,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    mi_cache: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pruned model path; the plan goes next to it with a .plan extension.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// CIFAR-10 or train.mipd/test.mipd directory (test split is used), or a
    /// single .mipd file.
    #[arg(long)]
    data: PathBuf,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Dataset directory; see `train --help`.
    #[arg(
        long,
        conflicts_with = "synthetic",
        required_unless_present = "synthetic"
    )]
    data: Option<PathBuf>,
    /// Generate Gaussian blobs instead: classes,dim,samples_per_class,separation.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    synthetic: Option<Vec<f64>>,
    /// Hidden widths to sweep.
    #[arg(long, value_delimiter = ',', default_value = "64")]
    arch: Vec<usize>,
    /// Hidden-layer counts to sweep.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    depths: Vec<usize>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "mi,magnitude,random,correlation,weight-similarity"
    )]
    method: Vec<Method>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5", value_parser = parse_rate)]
    rate: Vec<f64>,
    /// First seed; repeats use seed, seed+1, ...
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    repeats: u64,
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long, default_value_t = 32)]
    bins: usize,
    /// Results CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    train: TrainHyper,
    #[command(flatten)]
    probe: ProbeHyper,
}

#[derive(Debug, Args)]
struct RankReportArgs {
    /// One per run; paired in order with --mi-cache.
    #[arg(long, required = true)]
    model: Vec<PathBuf>,
    #[arg(long, required = true)]
    mi_cache: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_rate(s: &str) -> std::result::Result<f64, String> {
    let r: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if (0.0..=1.0).contains(&r) {
        Ok(r)
    } else {
        Err(format!("rate {r} outside [0, 1]"))
    }
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_data_error() {
                2
            } else {
                1
            }
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train(a) => cmd_train(a),
        Command::Probe(a) => {
            let net = load_model(&a.model)?;
            let trace = record_trace(&net, &a.hyper.config(a.seed))?;
            save_trace(&trace, &a.out)
        }
        Command::Mi(a) => {
            let trace = load_trace(&a.trace)?;
            let cfg = HistogramConfig { bins: a.bins };
            let cache = with_jobs(a.jobs, || MiCache::compute(&trace, &cfg))?;
            save_mi(&cache, &a.out)
        }
        Command::Score(a) => cmd_score(a),
        Command::Prune(a) => cmd_prune(a),
        Command::Eval(a) => {
            let net = load_model(&a.model)?;
            let (_, test) = load_data(&a.data)?;
            let test = test.ok_or_else(|| no_split(&a.data, "test"))?;
            let err = evaluate(&net, &test)?;
            println!("test_error {err}");
            Ok(())
        }
        Command::Experiment(a) => cmd_experiment(a),
        Command::RankReport(a) => cmd_rank_report(a),
    }
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let (train_set, test_set) = load_data(&a.data)?;
    let train_set = train_set.ok_or_else(|| no_split(&a.data, "train"))?;
    let mut dims = vec![train_set.dim()];
    dims.extend(&a.arch);
    dims.push(train_set.num_classes());
    let net = train(&dims, &train_set, &a.hyper.config(a.seed))?;
    save_model(&net, &a.out)?;
    println!("train_error {}", evaluate(&net, &train_set)?);
    // A single file serves as both splits; only a directory has a real test set.
    if let Some(t) = test_set.filter(|_| a.data.is_dir()) {
        println!("test_error {}", evaluate(&net, &t)?);
    }
    Ok(())
}

struct Caches {
    trace: Option<ActivationTrace>,
    mi: Option<Vec<MIMatrix>>,
}

impl Caches {
    fn load(trace: Option<&Path>, mi: Option<&Path>) -> Result<Self> {
        Ok(Self {
            trace: trace.map(load_trace).transpose()?,
            mi: mi.map(|p| load_mi(p).map(|c| c.layers)).transpose()?,
        })
    }

    fn require(&self, method: Method) -> Result<ScoringInputs<'_>> {
        if method.needs_trace() && self.trace.is_none() {
            return Err(Error::InvalidInput(format!(
                "--method {method} needs --trace"
            )));
        }
        if method.needs_mi() && self.mi.is_none() {
            return Err(Error::InvalidInput(format!(
                "--method {method} needs --mi-cache"
            )));
        }
        Ok(ScoringInputs {
            trace: self.trace.as_ref(),
            mi: self.mi.as_deref(),
        })
    }
}

fn cmd_score(a: ScoreArgs) -> Result<()> {
    let methods = if a.method == "all" {
        Method::ALL.to_vec()
    } else {
        vec![a
            .method
            .parse::<Method>()
            .map_err(|e| Error::InvalidConfig(format!("--method: {e}")))?]
    };
    let net = load_model(&a.model)?;
    let caches = Caches::load(a.trace.as_deref(), a.mi_cache.as_deref())?;
    let mut all = Vec::new();
    for m in methods {
        if a.method == "all"
            && ((m.needs_trace() && caches.trace.is_none())
                || (m.needs_mi() && caches.mi.is_none()))
        {
            continue;
        }
        if m == Method::Magnitude && a.magnitude_basis != MagnitudeBasis::Incoming {
            all.push(Scores {
                method: m,
                per_layer: score_magnitude_with(&net, a.magnitude_basis),
            });
            continue;
        }
        all.push(prune(&net, m, a.rate, caches.require(m)?, a.seed)?.scores);
    }
    write_output(a.out.as_deref(), |w| write_scores_csv(&all, w))
}

fn cmd_prune(a: PruneArgs) -> Result<()> {
    let net = load_model(&a.model)?;
    let caches = Caches::load(a.trace.as_deref(), a.mi_cache.as_deref())?;
    let out = prune(&net, a.method, a.rate, caches.require(a.method)?, a.seed)?;
    save_model(&out.network, &a.out)?;
    let plan_path = a.out.with_extension("plan");
    std::fs::write(&plan_path, out.plan.to_text()).map_err(|e| Error::io(&plan_path, e))?;
    println!(
        "removed {} neurons, hidden widths {:?} -> {:?}",
        out.plan.total_removed(),
        net.hidden_widths(),
        out.network.hidden_widths()
    );
    Ok(())
}

fn cmd_experiment(a: ExperimentArgs) -> Result<()> {
    let (train_set, test_set) = match (&a.data, &a.synthetic) {
        (Some(path), _) => {
            let (tr, te) = load_data(path)?;
            (
                tr.ok_or_else(|| no_split(path, "train"))?,
                te.ok_or_else(|| no_split(path, "test"))?,
            )
        }
        (None, Some(s)) => synthetic_from_flag(s, a.seed)?,
        (None, None) => unreachable!("clap requires --data or --synthetic"),
    };
    let spec = ExperimentSpec {
        architectures: a
            .depths
            .iter()
            .flat_map(|&d| a.arch.iter().map(move |&w| Architecture::new(d, w)))
            .collect(),
        methods: a.method.clone(),
        max_rates: a.rate.clone(),
        seeds: (0..a.repeats).map(|i| a.seed + i).collect(),
    };
    let cfg = PipelineConfig {
        train: a.train.config(a.seed),
        probe: a.probe.config(a.seed),
        histogram: HistogramConfig { bins: a.bins },
    };

    // Rows are appended as units finish so an interrupted run leaves a usable
    // file; the finished file is rewritten in grid order.
    let mut partial = match &a.out {
        Some(p) => {
            let f = File::create(p).map_err(|e| Error::io(p, e))?;
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(f);
            w.write_record(RESULT_HEADER)?;
            w.flush().map_err(|e| Error::io(p, e))?;
            Some(w)
        }
        None => None,
    };
    let result = with_jobs(a.jobs, || {
        run_experiment(
            &spec,
            &cfg,
            &train_set,
            &test_set,
            |rows: &[ResultRecord]| {
                if let Some(w) = partial.as_mut() {
                    for r in rows {
                        let _ = w.serialize(r);
                    }
                    let _ = w.flush();
                }
            },
        )
    })?;
    drop(partial);
    for f in &result.failures {
        let cell = match (f.method, f.max_rate) {
            (Some(m), Some(r)) => format!(" {m} rate {r}"),
            _ => String::new(),
        };
        eprintln!("warning: {} seed {}{cell}: {}", f.arch, f.seed, f.message);
    }
    write_output(a.out.as_deref(), |w| write_results_csv(&result.records, w))
}

const RESULT_HEADER: [&str; 8] = [
    "arch",
    "hidden_layers",
    "width",
    "method",
    "max_rate",
    "seed",
    "test_error",
    "baseline_error",
];

fn synthetic_from_flag(s: &[f64], seed: u64) -> Result<(Dataset, Dataset)> {
    let &[classes, dim, per_class, sep] = s else {
        return Err(Error::InvalidConfig(
            "--synthetic expects classes,dim,samples_per_class,separation".into(),
        ));
    };
    let (mut tr, mut te) = make_synthetic(
        classes as usize,
        dim as usize,
        per_class as usize,
        sep,
        seed,
    )?;
    standardize(&mut tr, &mut te);
    Ok((tr, te))
}

fn cmd_rank_report(a: RankReportArgs) -> Result<()> {
    if a.model.len() != a.mi_cache.len() {
        return Err(Error::InvalidConfig(format!(
            "{} --model but {} --mi-cache values",
            a.model.len(),
            a.mi_cache.len()
        )));
    }
    let nets = a
        .model
        .iter()
        .map(load_model)
        .collect::<Result<Vec<Network>>>()?;
    let caches = a
        .mi_cache
        .iter()
        .map(load_mi)
        .collect::<Result<Vec<MiCache>>>()?;
    let runs: Vec<(&Network, &[MIMatrix])> = nets
        .iter()
        .zip(&caches)
        .map(|(n, c)| (n, c.layers.as_slice()))
        .collect();
    let rows = rank_similarity_report(&runs)?;
    write_output(a.out.as_deref(), |w| write_rank_report_csv(&rows, w))
}

/// Train/test splits found at `path`. A plain file is returned as both
/// splits' candidate; directories provide both.
fn load_data(path: &Path) -> Result<(Option<Dataset>, Option<Dataset>)> {
    if path.is_dir() {
        if is_cifar10_dir(path) {
            let (tr, te) = load_cifar10_binary(path)?;
            return Ok((Some(tr), Some(te)));
        }
        let tr = path.join("train.mipd");
        let te = path.join("test.mipd");
        let train_set = tr
            .is_file()
            .then(|| load_dataset(&tr, Split::Train))
            .transpose()?;
        let test_set = te
            .is_file()
            .then(|| load_dataset(&te, Split::Test))
            .transpose()?;
        if train_set.is_none() && test_set.is_none() {
            return Err(Error::io(
                path,
                io::Error::new(
                    io::ErrorKind::NotFound,
                    "no CIFAR-10 batches or train.mipd/test.mipd",
                ),
            ));
        }
        return Ok((train_set, test_set));
    }
    let d = load_dataset(path, Split::Train)?;
    Ok((Some(d.clone()), Some(d.with_split(Split::Test))))
}

fn no_split(path: &Path, which: &str) -> Error {
    Error::io(
        path,
        io::Error::new(io::ErrorKind::NotFound, format!("no {which} split found")),
    )
}

fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if jobs == 0 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("--jobs {jobs}: {e}")))?;
    pool.install(f)
}

fn write_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| Error::io(p, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush().map_err(|e| Error::io(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)
        }
    }
}
