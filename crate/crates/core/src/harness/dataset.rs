use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{DocumentText, QueryText};

/// One question with its precomputed retrieval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetInstance {
    pub id: String,
    pub question: QueryText,
    pub answers: Vec<String>,
    pub docs: Vec<DocumentText>,
    /// Ids of the documents known to be relevant; needed for degradation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevant_doc_ids: Option<Vec<String>>,
}

impl DatasetInstance {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.answers.is_empty() {
            return Err(format!("instance `{}` has no answers", self.id));
        }
        if self.answers.iter().any(|a| a.trim().is_empty()) {
            return Err(format!("instance `{}` has an empty answer", self.id));
        }
        let mut seen = HashSet::new();
        for doc in &self.docs {
            if !seen.insert(doc.id.as_str()) {
                return Err(format!("instance `{}` repeats document id `{}`", self.id, doc.id));
            }
        }
        Ok(())
    }
}

/// Parses one JSON value per non-blank line; errors carry the line number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let file = File::open(path).map_err(|source| Error::Input {
        path: path.to_path_buf(),
        source,
    })?;
    let mut items = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| Error::Input {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|err| Error::Dataset {
            path: path.to_path_buf(),
            line: line_no,
            message: err.to_string(),
        })?;
        items.push((line_no, item));
    }
    Ok(items)
}

pub fn load_dataset(path: &Path) -> Result<Vec<DatasetInstance>> {
    let mut ids = HashSet::new();
    let mut instances = Vec::new();
    for (line, instance) in read_jsonl::<DatasetInstance>(path)? {
        let invalid = |message: String| Error::Dataset {
            path: path.to_path_buf(),
            line,
            message,
        };
        instance.validate().map_err(invalid)?;
        if !ids.insert(instance.id.clone()) {
            return Err(invalid(format!("duplicate instance id `{}`", instance.id)));
        }
        instances.push(instance);
    }
    Ok(instances)
}

pub fn write_dataset(path: &Path, instances: &[DatasetInstance]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for instance in instances {
        serde_json::to_writer(&mut out, instance)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
