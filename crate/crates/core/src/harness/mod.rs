//! Experiment orchestration and analysis: method-by-rate sweeps over trained
//! networks, rank correlations between scorers, and CSV emission.

mod experiment;
mod rank;
mod similarity;

pub use experiment::{
    read_results_csv, run_experiment, write_results_csv, Architecture, CellFailure,
    ExperimentResult, ExperimentSpec, PipelineConfig, ResultRecord, RunKind,
};
pub use rank::{average_ranks, kendall_tau, pearson, spearman};
pub use similarity::{
    rank_similarity, rank_similarity_report, write_rank_report_csv, LayerRankSimilarity,
    RankReportRow,
};
