use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::sop::SopDocument;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DatasetFormat {
    /// One document per `.txt` file; the id is the file stem.
    PlainTextDir,
    /// One JSON object per line.
    JsonLines {
        text_field: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id_field: Option<String>,
    },
    /// A CSV file with a header row.
    Csv {
        text_column: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id_column: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub root_path: PathBuf,
    pub format: DatasetFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{location}: {message}")]
    Format { location: String, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(location: impl Into<String>, message: impl Into<String>) -> IngestError {
    IngestError::Format {
        location: location.into(),
        message: message.into(),
    }
}

/// Reads a dataset in a deterministic order: file paths sorted
/// lexicographically, rows in file order. Rows without an id field get
/// `<name>-NNNN`, numbered from 1 by row.
pub fn ingest(spec: &DatasetSpec) -> Result<Vec<SopDocument>, IngestError> {
    let mut docs = match &spec.format {
        DatasetFormat::PlainTextDir => plain_text_dir(&spec.root_path)?,
        DatasetFormat::JsonLines { text_field, id_field } => {
            json_lines(spec, text_field, id_field.as_deref())?
        }
        DatasetFormat::Csv { text_column, id_column } => csv_rows(spec, text_column, id_column.as_deref())?,
    };
    if let Some(limit) = spec.limit {
        docs.truncate(limit);
    }
    let mut seen = HashSet::new();
    for d in &docs {
        if !seen.insert(d.doc_id.as_str()) {
            return Err(format_err(spec.root_path.display().to_string(), format!("duplicate document id `{}`", d.doc_id)));
        }
    }
    Ok(docs)
}

fn row_id(spec: &DatasetSpec, row: usize) -> String {
    format!("{}-{row:04}", spec.name)
}

fn document(id: String, text: String, location: String) -> Result<SopDocument, IngestError> {
    SopDocument::new(id, text).map_err(|e| format_err(location, e.to_string()))
}

fn plain_text_dir(root: &Path) -> Result<Vec<SopDocument>, IngestError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(io_err(root))?
        .map(|e| e.map(|e| e.path()).map_err(io_err(root)))
        .collect::<Result<_, _>>()?;
    paths.retain(|p| p.is_file() && p.extension().is_some_and(|e| e == "txt"));
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).map_err(io_err(&p))?;
            let id = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            document(id, text, p.display().to_string())
        })
        .collect()
}

fn json_lines(spec: &DatasetSpec, text_field: &str, id_field: Option<&str>) -> Result<Vec<SopDocument>, IngestError> {
    let content = std::fs::read_to_string(&spec.root_path).map_err(io_err(&spec.root_path))?;
    let mut docs = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let location = format!("line {}", i + 1);
        let obj: Value = serde_json::from_str(line).map_err(|e| format_err(location.clone(), e.to_string()))?;
        let text = obj
            .get(text_field)
            .and_then(Value::as_str)
            .ok_or_else(|| format_err(location.clone(), format!("missing string field `{text_field}`")))?;
        let id = match id_field {
            None => row_id(spec, docs.len() + 1),
            Some(f) => match obj.get(f) {
                Some(Value::String(s)) => s.clone(),
                Some(Value::Number(n)) => n.to_string(),
                _ => return Err(format_err(location, format!("missing id field `{f}`"))),
            },
        };
        docs.push(document(id, text.to_string(), location)?);
    }
    Ok(docs)
}

fn csv_rows(spec: &DatasetSpec, text_column: &str, id_column: Option<&str>) -> Result<Vec<SopDocument>, IngestError> {
    let mut reader = csv::Reader::from_path(&spec.root_path).map_err(|e| format_err(spec.root_path.display().to_string(), e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| format_err("header", e.to_string()))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format_err("header", format!("no column named `{name}`")))
    };
    let text_idx = column(text_column)?;
    let id_idx = id_column.map(column).transpose()?;
    let mut docs = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // Header is line 1.
        let location = format!("line {}", i + 2);
        let record = record.map_err(|e| format_err(location.clone(), e.to_string()))?;
        let text = record.get(text_idx).unwrap_or_default().to_string();
        let id = match id_idx {
            Some(j) => record.get(j).unwrap_or_default().to_string(),
            None => row_id(spec, i + 1),
        };
        docs.push(document(id, text, location)?);
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(root: PathBuf, format: DatasetFormat) -> DatasetSpec {
        DatasetSpec {
            name: "recipes".into(),
            root_path: root,
            format,
            limit: None,
        }
    }

    #[test]
    fn text_dir_sorted_by_path() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["b.txt", "a.txt", "c.txt"] {
            std::fs::write(dir.path().join(name), format!("Text of {name}.")).unwrap();
        }
        std::fs::write(dir.path().join("notes.md"), "ignored").unwrap();
        let docs = ingest(&spec(dir.path().into(), DatasetFormat::PlainTextDir)).unwrap();
        let ids: Vec<_> = docs.iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
    }

    #[test]
    fn jsonl_missing_field_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        std::fs::write(&path, "{\"text\": \"Mix.\"}\n{\"body\": \"Bake.\"}\n").unwrap();
        let err = ingest(&spec(
            path,
            DatasetFormat::JsonLines {
                text_field: "text".into(),
                id_field: None,
            },
        ))
        .unwrap_err();
        assert!(matches!(err, IngestError::Format { location, .. } if location == "line 2"));
    }

    #[test]
    fn csv_row_ids_and_limit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "title,steps\nA,\"Mix, then bake.\"\nB,Stir.\nC,Serve.\n").unwrap();
        let mut s = spec(
            path,
            DatasetFormat::Csv {
                text_column: "steps".into(),
                id_column: None,
            },
        );
        let docs = ingest(&s).unwrap();
        assert_eq!(docs.len(), 3);
        assert_eq!(docs[0].doc_id, "recipes-0001");
        assert_eq!(docs[0].text, "Mix, then bake.");
        s.limit = Some(2);
        assert_eq!(ingest(&s).unwrap().len(), 2);
        s.format = DatasetFormat::Csv {
            text_column: "missing".into(),
            id_column: None,
        };
        assert!(matches!(ingest(&s), Err(IngestError::Format { location, .. }) if location == "header"));
    }

    #[test]
    fn missing_root_is_io_error() {
        let err = ingest(&spec("/nonexistent/dir".into(), DatasetFormat::PlainTextDir)).unwrap_err();
        assert!(matches!(err, IngestError::Io { .. }));
    }
}
