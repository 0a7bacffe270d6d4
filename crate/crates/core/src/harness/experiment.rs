use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::Dataset;
use crate::mi::{all_layer_mi, HistogramConfig, MIMatrix};
use crate::nn::{evaluate, train, Network, TrainConfig};
use crate::probe::{record_trace, ActivationTrace, ProbeConfig};
use crate::prune::{prune, Method, ScoringInputs};
use crate::{Error, Result};

/// `hidden_layers` hidden layers of equal `width`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Architecture {
    pub hidden_layers: usize,
    pub width: usize,
}

impl Architecture {
    pub fn new(hidden_layers: usize, width: usize) -> Self {
        Self {
            hidden_layers,
            width,
        }
    }

    /// `"<hidden_layers>x<width>"`.
    pub fn label(&self) -> String {
        format!("{}x{}", self.hidden_layers, self.width)
    }

    pub fn dims(&self, input_dim: usize, classes: usize) -> Vec<usize> {
        let mut d = vec![input_dim];
        d.extend(std::iter::repeat_n(self.width, self.hidden_layers));
        d.push(classes);
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub architectures: Vec<Architecture>,
    pub methods: Vec<Method>,
    pub max_rates: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.architectures.is_empty() || self.methods.is_empty() {
            return bad("experiment needs at least one architecture and one method");
        }
        if self.max_rates.is_empty() || self.seeds.is_empty() {
            return bad("experiment needs at least one rate and one seed");
        }
        if self
            .architectures
            .iter()
            .any(|a| a.hidden_layers == 0 || a.width == 0)
        {
            return bad("architectures need >= 1 hidden layer of positive width");
        }
        if let Some(r) = self.max_rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::InvalidConfig(format!("rate {r} not in [0, 1]")));
        }
        Ok(())
    }
}

/// Settings shared by every cell; `train.seed` and `probe.seed` are replaced
/// by the cell's seed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineConfig {
    pub train: TrainConfig,
    pub probe: ProbeConfig,
    pub histogram: HistogramConfig,
}

/// What a result row measures: the unpruned model or one pruning method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    Baseline,
    Pruned(Method),
}

impl fmt::Display for RunKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunKind::Baseline => f.write_str("baseline"),
            RunKind::Pruned(m) => f.write_str(m.name()),
        }
    }
}

impl FromStr for RunKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "baseline" {
            Ok(RunKind::Baseline)
        } else {
            s.parse().map(RunKind::Pruned)
        }
    }
}

impl Serialize for RunKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RunKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One row of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub arch: String,
    pub hidden_layers: usize,
    pub width: usize,
    pub method: RunKind,
    pub max_rate: f64,
    pub seed: u64,
    pub test_error: f64,
    pub baseline_error: f64,
}

/// A cell that could not be computed. `method` is `None` when the whole
/// `(architecture, seed)` unit failed before pruning.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub arch: String,
    pub seed: u64,
    pub method: Option<Method>,
    pub max_rate: Option<f64>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentResult {
    pub records: Vec<ResultRecord>,
    pub failures: Vec<CellFailure>,
}

impl ExperimentResult {
    /// Mean test error of `method` at `max_rate` over every matching record.
    pub fn mean_error(&self, method: Method, max_rate: f64) -> Option<f64> {
        let errs: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.method == RunKind::Pruned(method) && r.max_rate == max_rate)
            .map(|r| r.test_error)
            .collect();
        (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64)
    }

    pub fn mean_baseline_error(&self) -> Option<f64> {
        let errs: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.method == RunKind::Baseline)
            .map(|r| r.test_error)
            .collect();
        (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64)
    }
}

struct Unit {
    arch: Architecture,
    seed: u64,
}

struct UnitOutput {
    records: Vec<ResultRecord>,
    failures: Vec<CellFailure>,
}

/// Runs every `(architecture, seed)` unit: train once, probe once, estimate MI
/// once, then prune the same trained model for each `(method, rate)` cell and
/// evaluate on `test`.
///
/// Units run on the current rayon pool. `sink` sees each unit's records as
/// soon as the unit finishes (in completion order); the returned result is
/// always in grid order, so it does not depend on scheduling.
pub fn run_experiment<F>(
    spec: &ExperimentSpec,
    cfg: &PipelineConfig,
    train_data: &Dataset,
    test_data: &Dataset,
    sink: F,
) -> Result<ExperimentResult>
where
    F: FnMut(&[ResultRecord]) + Send,
{
    spec.validate()?;
    cfg.train.validate()?;
    cfg.probe.validate()?;
    cfg.histogram.validate()?;
    if train_data.dim() != test_data.dim() {
        return Err(Error::InvalidInput(
            "train and test dimensions differ".into(),
        ));
    }
    let units: Vec<Unit> = spec
        .architectures
        .iter()
        .flat_map(|&arch| spec.seeds.iter().map(move |&seed| Unit { arch, seed }))
        .collect();
    let sink = Mutex::new(sink);
    let outputs: Vec<UnitOutput> = units
        .par_iter()
        .map(|u| {
            let out = run_unit(u, spec, cfg, train_data, test_data);
            (sink.lock().expect("sink poisoned"))(&out.records);
            out
        })
        .collect();
    let mut result = ExperimentResult::default();
    for o in outputs {
        result.records.extend(o.records);
        result.failures.extend(o.failures);
    }
    Ok(result)
}

fn run_unit(
    unit: &Unit,
    spec: &ExperimentSpec,
    cfg: &PipelineConfig,
    train_data: &Dataset,
    test_data: &Dataset,
) -> UnitOutput {
    let arch_label = unit.arch.label();
    let mut out = UnitOutput {
        records: Vec::new(),
        failures: Vec::new(),
    };
    let fail = |method: Option<Method>, max_rate: Option<f64>, e: &Error| CellFailure {
        arch: arch_label.clone(),
        seed: unit.seed,
        method,
        max_rate,
        message: e.to_string(),
    };

    let dims = unit.arch.dims(train_data.dim(), train_data.num_classes());
    let trained = train(
        &dims,
        train_data,
        &TrainConfig {
            seed: unit.seed,
            ..cfg.train.clone()
        },
    )
    .and_then(|net| evaluate(&net, test_data).map(|e| (net, e)));
    let (net, baseline) = match trained {
        Ok(v) => v,
        Err(e) => {
            out.failures.push(fail(None, None, &e));
            return out;
        }
    };
    let record = |method, max_rate, test_error| ResultRecord {
        arch: arch_label.clone(),
        hidden_layers: unit.arch.hidden_layers,
        width: unit.arch.width,
        method,
        max_rate,
        seed: unit.seed,
        test_error,
        baseline_error: baseline,
    };
    out.records.push(record(RunKind::Baseline, 0.0, baseline));

    let needs_probe = spec.methods.iter().any(|m| m.needs_trace() || m.needs_mi());
    let caches: Option<Result<(ActivationTrace, Vec<MIMatrix>)>> = needs_probe.then(|| {
        let trace = record_trace(
            &net,
            &ProbeConfig {
                seed: unit.seed,
                ..cfg.probe.clone()
            },
        )?;
        let mi = if spec.methods.contains(&Method::Mi) {
            all_layer_mi(&trace, &cfg.histogram)?
        } else {
            Vec::new()
        };
        Ok((trace, mi))
    });

    for &method in &spec.methods {
        for &rate in &spec.max_rates {
            let inputs = match &caches {
                Some(Ok((trace, mi))) => ScoringInputs {
                    trace: Some(trace),
                    mi: Some(mi.as_slice()),
                },
                Some(Err(e)) if method.needs_trace() || method.needs_mi() => {
                    out.failures.push(fail(Some(method), Some(rate), e));
                    continue;
                }
                _ => ScoringInputs::default(),
            };
            match cell_error(&net, method, rate, inputs, unit.seed, test_data) {
                Ok(err) => out.records.push(record(RunKind::Pruned(method), rate, err)),
                Err(e) => out.failures.push(fail(Some(method), Some(rate), &e)),
            }
        }
    }
    out
}

fn cell_error(
    net: &Network,
    method: Method,
    rate: f64,
    inputs: ScoringInputs<'_>,
    seed: u64,
    test_data: &Dataset,
) -> Result<f64> {
    let pruned = prune(net, method, rate, inputs, seed)?;
    evaluate(&pruned.network, test_data)
}

/// Header `arch,hidden_layers,width,method,max_rate,seed,test_error,baseline_error`.
pub fn write_results_csv<W: Write>(records: &[ResultRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record([
            "arch",
            "hidden_layers",
            "width",
            "method",
            "max_rate",
            "seed",
            "test_error",
            "baseline_error",
        ])?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<results csv>", e))?;
    Ok(())
}

pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<ResultRecord>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}
