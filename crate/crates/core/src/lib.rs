//! Adaptive token-budget allocation for block-causal video coding.
//!
//! A clip is split into `T` causal temporal blocks and each block is assigned
//! a token count from a small candidate set, forming an assignment
//! `(k_1, ..., k_T)`. A deterministic causal block codec scores how well the
//! clip reconstructs under an assignment, a standardized quality/length
//! trade-off (the proxy reward) ranks assignments, and several search
//! strategies plus a small learned router pick good assignments per clip.
//! The sequence machinery encodes chosen assignments as variable-length
//! token streams with per-block length markers, constrained decoding masks,
//! and block-causal attention masks.

pub mod assign;
pub mod error;
pub mod oracle;
pub mod reward;
pub mod rng;
pub mod router;
pub mod search;
pub mod seqmask;

pub use assign::{Assignment, CandidateLevels};
pub use error::{Error, Result};
pub use oracle::{
    generate_video, measure, reconstruct, BlockVideo, CodecConfig, QualityRecord, SceneDistribution,
    SceneKind, SceneSpec, VideoDims,
};
pub use reward::{calibrate, percentile, proxy_reward, NormalizationStats, RewardWeights};
pub use router::{extract_features, grad_check, CuratedDataset, RouterHyper, RouterModel};
pub use search::{
    autoregressive_search, best_uniform_search, exhaustive_search, threshold_search, uniform_sweep,
    AssignmentTable, SearchResult, Strategy,
};
pub use seqmask::{
    build_masks, decode_sequence, encode_sequence, DecodeError, DecodeErrorKind, DecoderState,
    MaskSet, TokenSequence, Vocab,
};
