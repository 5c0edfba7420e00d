//! Assignments of per-block token counts and their class-index encoding.
//!
//! An assignment picks one token count per temporal block from a shared
//! ascending candidate set of `m` levels. The `m^T` possible assignments are
//! enumerated by a radix-`m` index with block 0 as the most significant
//! digit, so fixing a prefix of blocks pins a contiguous index range.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The shared candidate token counts per block plus the block count `T`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateLevels {
    levels: Vec<u32>,
    blocks: usize,
}

impl CandidateLevels {
    /// Levels must be strictly ascending, at least two of them, all >= 1,
    /// and `blocks >= 1`.
    pub fn new(levels: Vec<u32>, blocks: usize) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::InvalidLevels(format!(
                "need at least 2 levels, got {}",
                levels.len()
            )));
        }
        if levels[0] < 1 {
            return Err(Error::InvalidLevels("levels must be >= 1".into()));
        }
        if !levels.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidLevels(format!(
                "levels must be strictly ascending, got {levels:?}"
            )));
        }
        if blocks < 1 {
            return Err(Error::InvalidLevels("need at least 1 block".into()));
        }
        Ok(Self { levels, blocks })
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    /// Number of levels `m`.
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Number of temporal blocks `T`.
    pub fn blocks(&self) -> usize {
        self.blocks
    }

    /// Total number of assignments `m^T`.
    pub fn count(&self) -> u64 {
        (self.levels.len() as u64).pow(self.blocks as u32)
    }

    pub fn min_level(&self) -> u32 {
        self.levels[0]
    }

    pub fn max_level(&self) -> u32 {
        *self.levels.last().expect("levels nonempty")
    }

    /// Position of `k` in the ascending level list, if present.
    pub fn level_index(&self, k: u32) -> Option<usize> {
        self.levels.binary_search(&k).ok()
    }
}

/// Per-block token counts `(k_1, ..., k_T)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    counts: Vec<u32>,
}

impl Assignment {
    /// Build from explicit counts, validating each against the levels.
    pub fn new(counts: Vec<u32>, levels: &CandidateLevels) -> Result<Self> {
        if counts.len() != levels.blocks() {
            return Err(Error::InvalidAssignment(format!(
                "expected {} blocks, got {}",
                levels.blocks(),
                counts.len()
            )));
        }
        for &k in &counts {
            if levels.level_index(k).is_none() {
                return Err(Error::InvalidAssignment(format!(
                    "token count {k} is not a candidate level"
                )));
            }
        }
        Ok(Self { counts })
    }

    /// The uniform assignment `(k, ..., k)`.
    pub fn uniform(level: u32, levels: &CandidateLevels) -> Result<Self> {
        Self::new(vec![level; levels.blocks()], levels)
    }

    /// Decode a class index into its assignment: radix-`m` digits,
    /// block 0 most significant, digit = position in the ascending levels.
    pub fn from_index(index: u64, levels: &CandidateLevels) -> Result<Self> {
        let count = levels.count();
        if index >= count {
            return Err(Error::IndexOutOfRange { index, count });
        }
        let m = levels.num_levels() as u64;
        let mut counts = vec![0u32; levels.blocks()];
        let mut rest = index;
        for t in (0..levels.blocks()).rev() {
            counts[t] = levels.levels()[(rest % m) as usize];
            rest /= m;
        }
        Ok(Self { counts })
    }

    /// Inverse of [`Assignment::from_index`].
    pub fn to_index(&self, levels: &CandidateLevels) -> Result<u64> {
        if self.counts.len() != levels.blocks() {
            return Err(Error::InvalidAssignment(format!(
                "expected {} blocks, got {}",
                levels.blocks(),
                self.counts.len()
            )));
        }
        let m = levels.num_levels() as u64;
        let mut index = 0u64;
        for &k in &self.counts {
            let digit = levels.level_index(k).ok_or_else(|| {
                Error::InvalidAssignment(format!("token count {k} is not a candidate level"))
            })?;
            index = index * m + digit as u64;
        }
        Ok(index)
    }

    /// Total token length `L(a) = sum k_t`.
    pub fn total_length(&self) -> u64 {
        self.counts.iter().map(|&k| u64::from(k)).sum()
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Parse either a bare class index ("137") or a tuple "(2,4,8,16)".
    pub fn parse(s: &str, levels: &CandidateLevels) -> Result<Self> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
            let counts = inner
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<u32>()
                        .map_err(|e| Error::InvalidAssignment(format!("bad count {p:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            Self::new(counts, levels)
        } else {
            let index = s
                .parse::<u64>()
                .map_err(|e| Error::InvalidAssignment(format!("bad index {s:?}: {e}")))?;
            Self::from_index(index, levels)
        }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.counts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}
