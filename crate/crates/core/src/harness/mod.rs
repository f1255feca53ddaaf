//! Batch evaluation: dataset ingestion, per-document scoring and reports.

mod config;
mod dataset;
mod evaluate;
mod report;

pub use config::{HarnessConfig, MetadataOverrides, PipelineSettings};
pub use dataset::{ingest, DatasetFormat, DatasetSpec, IngestError};
pub use evaluate::{evaluate, score_document, score_precomputed, DocArtifacts, EvalOptions, Evaluation};
pub use report::{render_report, Aggregate, MetricReport, MetricRow, ReportFormat, RunMetadata};

use serde::{Deserialize, Serialize};

/// The six reported metrics, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    StructuredPlan,
    InitialState,
    GoalState,
    Completeness,
    Dependency,
    InputFromDependency,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::StructuredPlan,
        Metric::InitialState,
        Metric::GoalState,
        Metric::Completeness,
        Metric::Dependency,
        Metric::InputFromDependency,
    ];

    /// Row label in the report table.
    pub fn label(self) -> &'static str {
        match self {
            Metric::StructuredPlan => "Structured Plan Score",
            Metric::InitialState => "Plan Initial State Validation",
            Metric::GoalState => "Plan Goal State Validation",
            Metric::Completeness => "Plan Completeness Score",
            Metric::Dependency => "Dependency Score",
            Metric::InputFromDependency => "Inputs from Dependency Score",
        }
    }

    /// Machine-readable name used in CSV and JSON.
    pub fn key(self) -> &'static str {
        match self {
            Metric::StructuredPlan => "structured_plan",
            Metric::InitialState => "initial_state",
            Metric::GoalState => "goal_state",
            Metric::Completeness => "completeness",
            Metric::Dependency => "dependency",
            Metric::InputFromDependency => "input_from_dependency",
        }
    }

    pub fn from_key(key: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.key() == key)
    }
}
