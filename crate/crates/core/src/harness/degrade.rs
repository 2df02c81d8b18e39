//! Simulated retrieval failure: relevant documents are deleted at random.
//!
//! Every (seed, instance, document) triple gets its own uniform draw `u`, and
//! the document is removed iff `u < p`. Raising `p` can therefore only remove
//! more documents.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::harness::DatasetInstance;
use crate::text::DocumentText;

pub const PLACEHOLDER_ID: &str = "placeholder";
pub const PLACEHOLDER_TEXT: &str = "no information available";

/// Uniform draw in `[0, 1)` for one document.
pub fn removal_draw(seed: u64, instance_id: &str, doc_id: &str) -> f64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for part in [instance_id, doc_id] {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    ChaCha8Rng::from_seed(hasher.finalize().into()).random::<f64>()
}

/// Removes each labelled-relevant document with probability `p`. Instances
/// left without documents get a single placeholder.
pub fn degrade(instances: &[DatasetInstance], p: f64, seed: u64) -> Result<Vec<DatasetInstance>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("degradation probability {p} is outside [0, 1]")));
    }
    instances
        .iter()
        .map(|instance| {
            let relevant = instance
                .relevant_doc_ids
                .as_ref()
                .ok_or_else(|| Error::MissingRelevanceLabels(instance.id.clone()))?;
            let mut degraded = instance.clone();
            degraded
                .docs
                .retain(|doc| !(relevant.contains(&doc.id) && removal_draw(seed, &instance.id, &doc.id) < p));
            if degraded.docs.is_empty() {
                degraded.docs.push(DocumentText::new(PLACEHOLDER_ID, PLACEHOLDER_TEXT));
            }
            Ok(degraded)
        })
        .collect()
}

/// `(instance id, doc id)` pairs that `degrade` would remove.
pub fn removed_docs(instances: &[DatasetInstance], p: f64, seed: u64) -> Result<Vec<(String, String)>> {
    let mut removed = Vec::new();
    for instance in instances {
        let relevant = instance
            .relevant_doc_ids
            .as_ref()
            .ok_or_else(|| Error::MissingRelevanceLabels(instance.id.clone()))?;
        for doc in &instance.docs {
            if relevant.contains(&doc.id) && removal_draw(seed, &instance.id, &doc.id) < p {
                removed.push((instance.id.clone(), doc.id.clone()));
            }
        }
    }
    Ok(removed)
}
