use serde::{Deserialize, Serialize};

use super::Metric;

/// Scores of one document. Judge metrics are `None` when no model was
/// available to judge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub doc_id: String,
    pub structured_plan: u8,
    pub dependency: f64,
    pub input_from_dependency: f64,
    pub initial_state: Option<f64>,
    pub goal_state: Option<f64>,
    pub completeness: Option<f64>,
    /// Stage failures; a failed stage scores its metrics 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

impl MetricRow {
    /// A row in which every metric is 0, or `None` for judges when
    /// `judged` is false.
    pub fn zero(doc_id: impl Into<String>, judged: bool) -> Self {
        let judge = judged.then_some(0.0);
        MetricRow {
            doc_id: doc_id.into(),
            structured_plan: 0,
            dependency: 0.0,
            input_from_dependency: 0.0,
            initial_state: judge,
            goal_state: judge,
            completeness: judge,
            errors: Vec::new(),
        }
    }

    pub fn value(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::StructuredPlan => Some(f64::from(self.structured_plan)),
            Metric::InitialState => self.initial_state,
            Metric::GoalState => self.goal_state,
            Metric::Completeness => self.completeness,
            Metric::Dependency => Some(self.dependency),
            Metric::InputFromDependency => Some(self.input_from_dependency),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub metric: Metric,
    pub label: String,
    /// Mean over rows times 100; `None` when no row has a value.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub dataset: String,
    pub model: String,
    pub prompt_versions: Vec<String>,
    pub timestamp: String,
    pub git_revision: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metadata: RunMetadata,
    pub aggregates: Vec<Aggregate>,
    pub rows: Vec<MetricRow>,
}

impl MetricReport {
    pub fn new(metadata: RunMetadata, rows: Vec<MetricRow>) -> Self {
        let aggregates = Metric::ALL
            .into_iter()
            .map(|metric| Aggregate {
                metric,
                label: metric.label().to_string(),
                value: mean_percent(rows.iter().filter_map(|r| r.value(metric))),
            })
            .collect();
        MetricReport {
            metadata,
            aggregates,
            rows,
        }
    }

    pub fn aggregate(&self, m: Metric) -> Option<f64> {
        self.aggregates.iter().find(|a| a.metric == m).and_then(|a| a.value)
    }

    pub fn errored_rows(&self) -> usize {
        self.rows.iter().filter(|r| !r.errors.is_empty()).count()
    }
}

fn mean_percent(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64 * 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "md" | "markdown" => Some(ReportFormat::Markdown),
            "csv" => Some(ReportFormat::Csv),
            "json" => Some(ReportFormat::Json),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Markdown => "md",
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

/// Deterministic text rendering. Markdown shows percentages to two
/// decimals; CSV and JSON carry full precision.
pub fn render_report(report: &MetricReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Markdown => markdown(report),
        ReportFormat::Csv => csv_long(report),
        ReportFormat::Json => {
            serde_json::to_string_pretty(report).expect("reports always serialize") + "\n"
        }
    }
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "N/A".to_string(), |v| format!("{v:.2}"))
}

fn cell(s: &str) -> String {
    s.replace('|', "\\|").replace(['\n', '\r'], " ")
}

fn markdown(r: &MetricReport) -> String {
    let mut out = format!("# Evaluation results (%): {}\n\n", cell(&r.metadata.dataset));
    out.push_str("| Metric | Our Method |\n| --- | ---: |\n");
    for a in &r.aggregates {
        out.push_str(&format!("| {} | {} |\n", a.label, pct(a.value)));
    }

    out.push_str("\n## Documents\n\n| Document |");
    for m in Metric::ALL {
        out.push_str(&format!(" {} |", m.label()));
    }
    out.push_str(" Errors |\n| --- |");
    for _ in Metric::ALL {
        out.push_str(" ---: |");
    }
    out.push_str(" --- |\n");
    for row in &r.rows {
        out.push_str(&format!("| {} |", cell(&row.doc_id)));
        for m in Metric::ALL {
            out.push_str(&format!(" {} |", pct(row.value(m).map(|v| v * 100.0))));
        }
        out.push_str(&format!(" {} |\n", cell(&row.errors.join("; "))));
    }

    let m = &r.metadata;
    out.push_str("\n## Run\n\n");
    out.push_str(&format!("- Model: {}\n", cell(&m.model)));
    out.push_str(&format!("- Prompts: {}\n", m.prompt_versions.join(", ")));
    out.push_str(&format!("- Timestamp: {}\n", m.timestamp));
    out.push_str(&format!("- Git revision: {}\n", m.git_revision.as_deref().unwrap_or("unknown")));
    out.push_str(&format!("- Documents: {} (with errors: {})\n", r.rows.len(), r.errored_rows()));
    out
}

/// `scope,metric,value` rows: `dataset` aggregates in percent, then
/// `doc:<id>` values as fractions. Missing values are empty.
fn csv_long(r: &MetricReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let num = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    w.write_record(["scope", "metric", "value"]).expect("in-memory write");
    for a in &r.aggregates {
        w.write_record(["dataset", a.metric.key(), &num(a.value)])
            .expect("in-memory write");
    }
    for row in &r.rows {
        let scope = format!("doc:{}", row.doc_id);
        for m in Metric::ALL {
            w.write_record([scope.as_str(), m.key(), &num(row.value(m))])
                .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV output is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> RunMetadata {
        RunMetadata {
            dataset: "fixtures".into(),
            model: "mock".into(),
            prompt_versions: vec!["segment.v1".into()],
            timestamp: "2024-01-01T00:00:00Z".into(),
            git_revision: None,
        }
    }

    fn row(id: &str, plan: u8, dep: f64) -> MetricRow {
        MetricRow {
            doc_id: id.into(),
            structured_plan: plan,
            dependency: dep,
            input_from_dependency: 1.0,
            initial_state: Some(1.0),
            goal_state: Some(0.5),
            completeness: None,
            errors: Vec::new(),
        }
    }

    #[test]
    fn aggregates_are_mean_times_100() {
        let r = MetricReport::new(meta(), vec![row("a", 1, 1.0), row("b", 0, 0.5)]);
        assert_eq!(r.aggregate(Metric::StructuredPlan), Some(50.0));
        assert_eq!(r.aggregate(Metric::Dependency), Some(75.0));
        assert_eq!(r.aggregate(Metric::GoalState), Some(50.0));
        assert_eq!(r.aggregate(Metric::Completeness), None);
    }

    #[test]
    fn markdown_table_rows_in_order() {
        let r = MetricReport::new(meta(), vec![row("a", 1, 2.0 / 3.0)]);
        let md = render_report(&r, ReportFormat::Markdown);
        let labels: Vec<&str> = md
            .lines()
            .skip_while(|l| !l.starts_with("| Metric"))
            .skip(2)
            .take_while(|l| l.starts_with('|'))
            .map(|l| l.split('|').nth(1).unwrap().trim())
            .collect();
        assert_eq!(labels, Metric::ALL.map(Metric::label));
        assert!(md.contains("| Dependency Score | 66.67 |"));
        assert!(md.contains("| Plan Completeness Score | N/A |"));
    }

    #[test]
    fn csv_and_json_agree() {
        let r = MetricReport::new(meta(), vec![row("a", 1, 1.0 / 3.0), row("b", 0, 0.5)]);
        let csv_text = render_report(&r, ReportFormat::Csv);
        let back: MetricReport = serde_json::from_str(&render_report(&r, ReportFormat::Json)).unwrap();
        assert_eq!(back, r);
        let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
        for rec in reader.records() {
            let rec = rec.unwrap();
            let metric = Metric::from_key(&rec[1]).unwrap();
            let value: Option<f64> = (!rec[2].is_empty()).then(|| rec[2].parse().unwrap());
            if &rec[0] == "dataset" {
                assert_eq!(value, back.aggregate(metric));
            } else {
                let id = rec[0].strip_prefix("doc:").unwrap();
                let row = back.rows.iter().find(|r| r.doc_id == id).unwrap();
                assert_eq!(value, row.value(metric));
            }
        }
    }
}
