//! Curated (scene, optimal assignment) records and their line-delimited
//! file format: one JSON header line, then one JSON record per line.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assign::{Assignment, CandidateLevels};
use crate::error::{Error, Result};
use crate::oracle::{SceneSpec, VideoDims};
use crate::reward::RewardWeights;

pub const DATASET_VERSION: &str = "dataset.v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub version: String,
    pub levels: Vec<u32>,
    pub dims: VideoDims,
    pub weights: RewardWeights,
    /// SHA-256 of the stats file the rewards were computed with.
    pub stats_sha256: String,
    pub n_records: usize,
    pub seed: u64,
    /// Train/val/test fractions.
    pub splits: [f64; 3],
}

/// One curated video: its scene spec, router features, the exhaustive-search
/// optimum, and per-strategy diagnostics used by evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CuratedRecord {
    pub scene: SceneSpec,
    pub split: Split,
    pub features: Vec<f64>,
    /// Class index of the max-proxy-reward assignment.
    pub optimal: u64,
    pub optimal_reward: f64,
    /// Class index and reward of the min-proxy-reward assignment.
    pub worst: u64,
    pub worst_reward: f64,
    /// Class index and reward of the best uniform assignment.
    pub best_uniform: u64,
    pub best_uniform_reward: f64,
}

/// Assignment fields are accepted either as a bare class index or as a
/// tuple string "(k1,k2,k3,k4)".
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum AssignmentField {
    Index(u64),
    Tuple(String),
}

impl AssignmentField {
    fn resolve(&self, levels: &CandidateLevels) -> Result<u64> {
        match self {
            AssignmentField::Index(idx) => {
                if *idx >= levels.count() {
                    return Err(Error::IndexOutOfRange {
                        index: *idx,
                        count: levels.count(),
                    });
                }
                Ok(*idx)
            }
            AssignmentField::Tuple(s) => Assignment::parse(s, levels)?.to_index(levels),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
struct CuratedRecordRaw {
    scene: SceneSpec,
    split: Split,
    features: Vec<f64>,
    optimal: AssignmentField,
    optimal_reward: f64,
    worst: AssignmentField,
    worst_reward: f64,
    best_uniform: AssignmentField,
    best_uniform_reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CuratedDataset {
    pub header: DatasetHeader,
    pub records: Vec<CuratedRecord>,
}

impl CuratedDataset {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = serde_json::to_string(&self.header)?;
        out.push('\n');
        for record in &self.records {
            out.push_str(&serde_json::to_string(record)?);
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::Format("empty dataset file".into()))?;
        let header: DatasetHeader = serde_json::from_str(header_line)?;
        if header.version != DATASET_VERSION {
            return Err(Error::Format(format!(
                "unsupported dataset version {:?}, expected {DATASET_VERSION:?}",
                header.version
            )));
        }
        let levels = CandidateLevels::new(header.levels.clone(), header.dims.blocks)?;
        let mut records = Vec::with_capacity(header.n_records);
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let raw: CuratedRecordRaw = serde_json::from_str(line)
                .map_err(|e| Error::Format(format!("record {}: {e}", i + 1)))?;
            records.push(CuratedRecord {
                optimal: raw.optimal.resolve(&levels)?,
                worst: raw.worst.resolve(&levels)?,
                best_uniform: raw.best_uniform.resolve(&levels)?,
                scene: raw.scene,
                split: raw.split,
                features: raw.features,
                optimal_reward: raw.optimal_reward,
                worst_reward: raw.worst_reward,
                best_uniform_reward: raw.best_uniform_reward,
            });
        }
        if records.len() != header.n_records {
            return Err(Error::Format(format!(
                "dataset header declares {} records, file has {}",
                header.n_records,
                records.len()
            )));
        }
        Ok(Self { header, records })
    }

    pub fn split(&self, split: Split) -> Vec<&CuratedRecord> {
        self.records.iter().filter(|r| r.split == split).collect()
    }

    pub fn levels(&self) -> Result<CandidateLevels> {
        CandidateLevels::new(self.header.levels.clone(), self.header.dims.blocks)
    }
}

/// Hex SHA-256 digest, used to pin dataset files to their stats file.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::SceneKind;

    fn sample_dataset() -> CuratedDataset {
        let header = DatasetHeader {
            version: DATASET_VERSION.into(),
            levels: vec![2, 4, 8, 16, 32],
            dims: VideoDims::new(4, 4, 16, 16).unwrap(),
            weights: RewardWeights::new(1.2, 0.8).unwrap(),
            stats_sha256: sha256_hex(b"stats"),
            n_records: 2,
            seed: 7,
            splits: [0.8, 0.1, 0.1],
        };
        let record = |split, seed| CuratedRecord {
            scene: SceneSpec {
                kind: SceneKind::Drift,
                amplitude: 0.5,
                period: 4,
                velocity: (1.0, 0.0),
                texture_scale: 1.0,
                detail: 0.05,
                complexity: 3,
                noise: 0.1,
                block_variation: 0.7,
                grain: 0.03,
                seed,
            },
            split,
            features: vec![0.25; 21],
            optimal: 124,
            optimal_reward: 1.5,
            worst: 620,
            worst_reward: -2.0,
            best_uniform: 156,
            best_uniform_reward: 0.75,
        };
        CuratedDataset {
            header,
            records: vec![record(Split::Train, 1), record(Split::Test, 2)],
        }
    }

    #[test]
    fn roundtrip() {
        let ds = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dataset.jsonl");
        ds.save(&path).unwrap();
        let loaded = CuratedDataset::load(&path).unwrap();
        assert_eq!(ds, loaded);
        assert_eq!(loaded.split(Split::Train).len(), 1);
        assert_eq!(loaded.split(Split::Val).len(), 0);
    }

    #[test]
    fn tuple_form_assignments_are_accepted() {
        let ds = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dataset.jsonl");
        ds.save(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        // Rewrite the numeric optimal field of every record as a tuple string.
        let rewritten: Vec<String> = text
            .lines()
            .map(|line| line.replace("\"optimal\":124", "\"optimal\":\"(2,2,32,32)\""))
            .collect();
        fs::write(&path, rewritten.join("\n") + "\n").unwrap();
        let loaded = CuratedDataset::load(&path).unwrap();
        let a = Assignment::new(vec![2, 2, 32, 32], &loaded.levels().unwrap()).unwrap();
        let expected = a.to_index(&loaded.levels().unwrap()).unwrap();
        assert_eq!(loaded.records[0].optimal, expected);
    }

    #[test]
    fn rejects_wrong_record_count_and_version() {
        let ds = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dataset.jsonl");
        ds.save(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let truncated: Vec<&str> = text.lines().take(2).collect();
        fs::write(&path, truncated.join("\n")).unwrap();
        assert!(CuratedDataset::load(&path).is_err());
    }
}
