//! Variable-length token sequences with per-block length markers, the
//! logit-masking decoder state machine, and block-causal attention masks.
//!
//! A sequence interleaves `T` groups, each one special length token
//! followed by exactly that many visual tokens. Special ids sit directly
//! after the visual ids: special `V + j` declares level index `j`. Driving
//! generation through [`DecoderState::next_mask`] / [`DecoderState::advance`]
//! guarantees every emitted sequence parses.

use serde::{Deserialize, Serialize};

use crate::assign::{Assignment, CandidateLevels};
use crate::error::{Error, Result};

/// Token id space: visual ids `[0, V)`, special length ids `[V, V + m)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    n_visual: u32,
    levels: CandidateLevels,
}

impl Vocab {
    pub fn new(n_visual: u32, levels: CandidateLevels) -> Result<Self> {
        if n_visual < 1 {
            return Err(Error::InvalidLevels("need at least one visual id".into()));
        }
        Ok(Self { n_visual, levels })
    }

    pub fn n_visual(&self) -> u32 {
        self.n_visual
    }

    pub fn levels(&self) -> &CandidateLevels {
        &self.levels
    }

    /// Total id count `V + m`.
    pub fn size(&self) -> u32 {
        self.n_visual + self.levels.num_levels() as u32
    }

    pub fn is_visual(&self, id: u32) -> bool {
        id < self.n_visual
    }

    pub fn is_special(&self, id: u32) -> bool {
        id >= self.n_visual && id < self.size()
    }

    /// Special id announcing the level at position `level_index`.
    pub fn special_id(&self, level_index: usize) -> u32 {
        debug_assert!(level_index < self.levels.num_levels());
        self.n_visual + level_index as u32
    }

    /// Token count declared by a special id.
    pub fn level_of(&self, id: u32) -> Option<u32> {
        if self.is_special(id) {
            Some(self.levels.levels()[(id - self.n_visual) as usize])
        } else {
            None
        }
    }
}

/// Structured parse failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeErrorKind {
    /// A special id arrived where a visual id was required.
    UnexpectedSpecial,
    /// A visual id arrived where a special id was required.
    UnexpectedVisual,
    /// The sequence ended before `T` groups completed.
    Truncated,
    /// Ids remain after the `T`-th group completed.
    TrailingTokens,
    /// An id outside `[0, V + m)`.
    InvalidId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodeError {
    pub kind: DecodeErrorKind,
    pub position: usize,
}

impl std::fmt::Display for DecodeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?} at position {}", self.kind, self.position)
    }
}

impl std::error::Error for DecodeError {}

/// Where the decoder sits inside a sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Phase {
    /// Waiting for the length token of block `block`.
    ExpectLength { block: usize },
    /// Waiting for `remaining` more visual tokens of block `block`.
    ExpectVisual { block: usize, remaining: u32 },
    Done,
}

/// Decoder state machine; a fresh state expects the length of block 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoderState {
    phase: Phase,
    declared: Vec<u32>,
}

impl DecoderState {
    pub fn new() -> Self {
        Self {
            phase: Phase::ExpectLength { block: 0 },
            declared: Vec::new(),
        }
    }

    pub fn phase(&self) -> &Phase {
        &self.phase
    }

    /// Token counts declared so far.
    pub fn declared(&self) -> &[u32] {
        &self.declared
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    /// The completed assignment once the walk reaches `Done`.
    pub fn assignment(&self, levels: &CandidateLevels) -> Result<Assignment> {
        if !self.is_done() {
            return Err(Error::Protocol("decoder has not finished".into()));
        }
        Assignment::new(self.declared.clone(), levels)
    }

    /// Allowed-id mask of size `V + m`: only specials while a length token
    /// is expected, only visuals while block content is expected.
    pub fn next_mask(&self, vocab: &Vocab) -> Result<Vec<bool>> {
        let specials_allowed = match self.phase {
            Phase::ExpectLength { .. } => true,
            Phase::ExpectVisual { .. } => false,
            Phase::Done => {
                return Err(Error::Protocol("no token follows a finished sequence".into()))
            }
        };
        let mut mask = vec![false; vocab.size() as usize];
        if specials_allowed {
            for entry in mask.iter_mut().skip(vocab.n_visual() as usize) {
                *entry = true;
            }
        } else {
            for entry in mask.iter_mut().take(vocab.n_visual() as usize) {
                *entry = true;
            }
        }
        Ok(mask)
    }

    /// Consume one sampled id. The id must be allowed by
    /// [`DecoderState::next_mask`].
    pub fn advance(&self, id: u32, vocab: &Vocab) -> Result<DecoderState> {
        let blocks = vocab.levels().blocks();
        match self.phase {
            Phase::Done => Err(Error::Protocol("sequence already finished".into())),
            Phase::ExpectLength { block } => {
                let level = vocab.level_of(id).ok_or_else(|| {
                    Error::Protocol(format!("id {id} is not a special length token"))
                })?;
                let mut declared = self.declared.clone();
                declared.push(level);
                Ok(DecoderState {
                    phase: Phase::ExpectVisual {
                        block,
                        remaining: level,
                    },
                    declared,
                })
            }
            Phase::ExpectVisual { block, remaining } => {
                if !vocab.is_visual(id) {
                    return Err(Error::Protocol(format!(
                        "id {id} is not a visual token"
                    )));
                }
                let phase = if remaining > 1 {
                    Phase::ExpectVisual {
                        block,
                        remaining: remaining - 1,
                    }
                } else if block + 1 < blocks {
                    Phase::ExpectLength { block: block + 1 }
                } else {
                    Phase::Done
                };
                Ok(DecoderState {
                    phase,
                    declared: self.declared.clone(),
                })
            }
        }
    }
}

impl Default for DecoderState {
    fn default() -> Self {
        Self::new()
    }
}

/// Flat id sequence: `T` groups of one special followed by its visuals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence(pub Vec<u32>);

impl TokenSequence {
    pub fn ids(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// One-line fixture form: "S2 v v S2 v v ...".
    pub fn debug_form(&self, vocab: &Vocab) -> String {
        let mut out = String::new();
        for (i, &id) in self.0.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            match vocab.level_of(id) {
                Some(level) => out.push_str(&format!("S{level}")),
                None => out.push('v'),
            }
        }
        out
    }
}

/// Interleave per-block visual ids with their length markers. Block `t`
/// must supply exactly `k_t` ids, each `< V`.
pub fn encode_sequence(
    a: &Assignment,
    visual_tokens: &[Vec<u32>],
    vocab: &Vocab,
) -> Result<TokenSequence> {
    let levels = vocab.levels();
    if a.counts().len() != levels.blocks() || visual_tokens.len() != levels.blocks() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} blocks", levels.blocks()),
            got: format!(
                "assignment {} / tokens {}",
                a.counts().len(),
                visual_tokens.len()
            ),
        });
    }
    let mut ids = Vec::with_capacity(levels.blocks() + a.total_length() as usize);
    for (t, (&k, tokens)) in a.counts().iter().zip(visual_tokens).enumerate() {
        let level_index = levels.level_index(k).ok_or_else(|| {
            Error::InvalidAssignment(format!("count {k} is not a candidate level"))
        })?;
        if tokens.len() != k as usize {
            return Err(Error::ShapeMismatch {
                expected: format!("{k} visual ids for block {t}"),
                got: format!("{}", tokens.len()),
            });
        }
        ids.push(vocab.special_id(level_index));
        for &v in tokens {
            if !vocab.is_visual(v) {
                return Err(Error::Protocol(format!(
                    "id {v} in block {t} is not a visual token"
                )));
            }
            ids.push(v);
        }
    }
    Ok(TokenSequence(ids))
}

/// Validating parser, inverse of [`encode_sequence`]. Strict: trailing ids
/// after the `T`-th group are an error.
pub fn decode_sequence(
    ids: &[u32],
    vocab: &Vocab,
) -> std::result::Result<(Assignment, Vec<Vec<u32>>), DecodeError> {
    let levels = vocab.levels();
    let blocks = levels.blocks();
    let mut counts = Vec::with_capacity(blocks);
    let mut tokens: Vec<Vec<u32>> = Vec::with_capacity(blocks);
    let mut pos = 0usize;
    while counts.len() < blocks {
        let Some(&id) = ids.get(pos) else {
            return Err(DecodeError {
                kind: DecodeErrorKind::Truncated,
                position: pos,
            });
        };
        if id >= vocab.size() {
            return Err(DecodeError {
                kind: DecodeErrorKind::InvalidId,
                position: pos,
            });
        }
        let Some(level) = vocab.level_of(id) else {
            return Err(DecodeError {
                kind: DecodeErrorKind::UnexpectedVisual,
                position: pos,
            });
        };
        pos += 1;
        let mut block_tokens = Vec::with_capacity(level as usize);
        for _ in 0..level {
            let Some(&id) = ids.get(pos) else {
                return Err(DecodeError {
                    kind: DecodeErrorKind::Truncated,
                    position: pos,
                });
            };
            if id >= vocab.size() {
                return Err(DecodeError {
                    kind: DecodeErrorKind::InvalidId,
                    position: pos,
                });
            }
            if vocab.is_special(id) {
                return Err(DecodeError {
                    kind: DecodeErrorKind::UnexpectedSpecial,
                    position: pos,
                });
            }
            block_tokens.push(id);
            pos += 1;
        }
        counts.push(level);
        tokens.push(block_tokens);
    }
    if pos != ids.len() {
        return Err(DecodeError {
            kind: DecodeErrorKind::TrailingTokens,
            position: pos,
        });
    }
    let assignment = Assignment::new(counts, levels).map_err(|_| DecodeError {
        kind: DecodeErrorKind::InvalidId,
        position: 0,
    })?;
    Ok((assignment, tokens))
}

/// Boolean attention mask; `true` allows attention from row `i` to column `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl Mask {
    fn build(
        rows: usize,
        cols: usize,
        row_block: impl Fn(usize) -> usize,
        col_block: impl Fn(usize) -> usize,
    ) -> Self {
        let mut bits = vec![false; rows * cols];
        for i in 0..rows {
            let bi = row_block(i);
            for j in 0..cols {
                bits[i * cols + j] = col_block(j) <= bi;
            }
        }
        Self { rows, cols, bits }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn allowed(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.cols + j]
    }

    pub fn count_allowed(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn row_allowed(&self, i: usize) -> usize {
        self.bits[i * self.cols..(i + 1) * self.cols]
            .iter()
            .filter(|&&b| b)
            .count()
    }
}

/// Block-causal masks for a Q-Former layout: variable-length 1D queries
/// (one run of `k_t` per block) against fixed 3D reference embeddings
/// (`refs_per_block` per block). Attention from position `i` to `j` is
/// allowed iff `j`'s temporal block is no later than `i`'s; within-block
/// attention is unrestricted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskSet {
    /// 1D queries attending to 1D queries, `N x N` with `N = sum k_t`.
    pub encoder_self: Mask,
    /// 1D queries attending to reference embeddings, `N x (T * P)`.
    pub encoder_cross: Mask,
    /// 3D decoder queries attending to each other, `(T * P) x (T * P)`.
    pub decoder_self: Mask,
    /// 3D decoder queries attending to 1D tokens, `(T * P) x N`.
    pub decoder_cross: Mask,
}

pub fn build_masks(a: &Assignment, refs_per_block: usize) -> Result<MaskSet> {
    if refs_per_block < 1 {
        return Err(Error::ShapeMismatch {
            expected: "refs_per_block >= 1".into(),
            got: refs_per_block.to_string(),
        });
    }
    let blocks = a.counts().len();
    let n = a.total_length() as usize;
    // Temporal block of each 1D query position.
    let mut query_block = Vec::with_capacity(n);
    for (t, &k) in a.counts().iter().enumerate() {
        query_block.extend(std::iter::repeat(t).take(k as usize));
    }
    let refs = blocks * refs_per_block;
    let qb = |i: usize| query_block[i];
    let rb = |i: usize| i / refs_per_block;
    Ok(MaskSet {
        encoder_self: Mask::build(n, n, qb, qb),
        encoder_cross: Mask::build(n, refs, qb, rb),
        decoder_self: Mask::build(refs, refs, rb, rb),
        decoder_cross: Mask::build(refs, n, rb, qb),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn levels() -> CandidateLevels {
        CandidateLevels::new(vec![2, 4, 8, 16, 32], 4).unwrap()
    }

    fn vocab() -> Vocab {
        Vocab::new(16, levels()).unwrap()
    }

    #[test]
    fn encode_places_specials_at_group_heads() {
        let vocab = vocab();
        let a = Assignment::new(vec![2, 2, 2, 2], &levels()).unwrap();
        let toks = vec![vec![1, 2], vec![3, 4], vec![5, 6], vec![7, 8]];
        let seq = encode_sequence(&a, &toks, &vocab).unwrap();
        assert_eq!(seq.len(), 12);
        for pos in [0, 3, 6, 9] {
            assert_eq!(seq.ids()[pos], 16);
        }
        assert_eq!(seq.debug_form(&vocab), "S2 v v S2 v v S2 v v S2 v v");

        let a = Assignment::new(vec![32, 2, 2, 2], &levels()).unwrap();
        let toks = vec![vec![0; 32], vec![0; 2], vec![0; 2], vec![0; 2]];
        let seq = encode_sequence(&a, &toks, &vocab).unwrap();
        assert_eq!(seq.ids()[0], 16 + 4);
    }

    #[test]
    fn encode_validates_counts_and_ids() {
        let vocab = vocab();
        let a = Assignment::new(vec![2, 2, 2, 2], &levels()).unwrap();
        let short = vec![vec![1], vec![3, 4], vec![5, 6], vec![7, 8]];
        assert!(encode_sequence(&a, &short, &vocab).is_err());
        let bad_id = vec![vec![1, 99], vec![3, 4], vec![5, 6], vec![7, 8]];
        assert!(encode_sequence(&a, &bad_id, &vocab).is_err());
    }

    #[test]
    fn decode_inverts_encode() {
        let vocab = vocab();
        let a = Assignment::new(vec![4, 2, 8, 2], &levels()).unwrap();
        let toks: Vec<Vec<u32>> = a
            .counts()
            .iter()
            .enumerate()
            .map(|(t, &k)| (0..k).map(|i| (t as u32 * 3 + i) % 16).collect())
            .collect();
        let seq = encode_sequence(&a, &toks, &vocab).unwrap();
        let (a2, toks2) = decode_sequence(seq.ids(), &vocab).unwrap();
        assert_eq!(a, a2);
        assert_eq!(toks, toks2);
    }

    #[test]
    fn decode_reports_structured_errors() {
        let vocab = vocab();
        // Visual id first.
        let err = decode_sequence(&[3, 16], &vocab).unwrap_err();
        assert_eq!(err.kind, DecodeErrorKind::UnexpectedVisual);
        assert_eq!(err.position, 0);
        // Three complete groups, then nothing.
        let mut ids = vec![];
        for _ in 0..3 {
            ids.push(16);
            ids.extend([1, 2]);
        }
        let err = decode_sequence(&ids, &vocab).unwrap_err();
        assert_eq!(err.kind, DecodeErrorKind::Truncated);
        // Special inside a group.
        let err = decode_sequence(&[16, 1, 17], &vocab).unwrap_err();
        assert_eq!(err.kind, DecodeErrorKind::UnexpectedSpecial);
        assert_eq!(err.position, 2);
        // Trailing ids.
        let mut ids = vec![];
        for _ in 0..4 {
            ids.push(16);
            ids.extend([1, 2]);
        }
        ids.push(5);
        let err = decode_sequence(&ids, &vocab).unwrap_err();
        assert_eq!(err.kind, DecodeErrorKind::TrailingTokens);
        assert_eq!(err.position, 12);
        // Out-of-vocab id.
        let err = decode_sequence(&[21], &vocab).unwrap_err();
        assert_eq!(err.kind, DecodeErrorKind::InvalidId);
    }

    #[test]
    fn masks_allow_only_phase_appropriate_ids() {
        let vocab = vocab();
        let state = DecoderState::new();
        let mask = state.next_mask(&vocab).unwrap();
        assert_eq!(mask.iter().filter(|&&b| b).count(), 5);
        assert!(mask[16..21].iter().all(|&b| b));
        assert!(mask[..16].iter().all(|&b| !b));

        let state = state.advance(16, &vocab).unwrap();
        assert_eq!(
            *state.phase(),
            Phase::ExpectVisual {
                block: 0,
                remaining: 2
            }
        );
        let mask = state.next_mask(&vocab).unwrap();
        assert_eq!(mask.iter().filter(|&&b| b).count(), 16);
    }

    #[test]
    fn advance_walks_to_done() {
        let vocab = vocab();
        let mut state = DecoderState::new();
        for _ in 0..4 {
            state = state.advance(16, &vocab).unwrap();
            state = state.advance(0, &vocab).unwrap();
            state = state.advance(1, &vocab).unwrap();
        }
        assert!(state.is_done());
        let a = state.assignment(&levels()).unwrap();
        assert_eq!(a.counts(), &[2, 2, 2, 2]);
        assert!(state.next_mask(&vocab).is_err());
        assert!(state.advance(0, &vocab).is_err());
    }

    #[test]
    fn advance_rejects_disallowed_ids() {
        let vocab = vocab();
        let state = DecoderState::new();
        assert!(state.advance(3, &vocab).is_err());
        let state = state.advance(17, &vocab).unwrap();
        assert!(state.advance(16, &vocab).is_err());
    }

    #[test]
    fn appendix_mask_fixture() {
        // Assignment (16,8,2,2) with 16 references per block: the encoder
        // self mask is 28x28 with 556 allowed entries.
        let a = Assignment::new(vec![16, 8, 2, 2], &levels()).unwrap();
        let masks = build_masks(&a, 16).unwrap();
        assert_eq!(masks.encoder_self.rows(), 28);
        assert_eq!(masks.encoder_self.cols(), 28);
        assert_eq!(masks.encoder_self.count_allowed(), 556);
        assert_eq!(masks.encoder_cross.rows(), 28);
        assert_eq!(masks.encoder_cross.cols(), 64);
        assert_eq!(masks.decoder_self.rows(), 64);
        assert_eq!(masks.decoder_cross.cols(), 28);
    }

    #[test]
    fn uniform_mask_is_block_lower_triangular() {
        let a = Assignment::new(vec![4, 4, 4, 4], &levels()).unwrap();
        let masks = build_masks(&a, 4).unwrap();
        let m = &masks.encoder_self;
        let mut fully_allowed_blocks = 0;
        for bi in 0..4 {
            for bj in 0..4 {
                let all: bool = (0..4)
                    .flat_map(|i| (0..4).map(move |j| (bi * 4 + i, bj * 4 + j)))
                    .all(|(i, j)| m.allowed(i, j));
                let none: bool = (0..4)
                    .flat_map(|i| (0..4).map(move |j| (bi * 4 + i, bj * 4 + j)))
                    .all(|(i, j)| !m.allowed(i, j));
                if all {
                    fully_allowed_blocks += 1;
                } else {
                    assert!(none, "block ({bi},{bj}) is mixed");
                }
            }
        }
        assert_eq!(fully_allowed_blocks, 10); // T(T+1)/2
    }

    #[test]
    fn cross_mask_rows_grow_with_block() {
        let a = Assignment::new(vec![2, 2, 2, 2], &levels()).unwrap();
        let masks = build_masks(&a, 4).unwrap();
        let m = &masks.encoder_cross;
        assert_eq!(m.rows(), 8);
        assert_eq!(m.cols(), 16);
        assert_eq!(m.row_allowed(0), 4);
        let mut prev = 0;
        for i in 0..m.rows() {
            let count = m.row_allowed(i);
            assert!(count >= prev, "row {i} lost coverage");
            prev = count;
        }
    }
}
