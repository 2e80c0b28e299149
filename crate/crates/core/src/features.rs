//! Feature schemas, per-hypothesis vector assembly and z-score normalization.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::lda::{infer_theta, tm_lm_logprob, TopicModel};
use crate::nbest::{Hypothesis, NBestList};
use crate::ngram::NgramModel;
use crate::util::{derive_seed, Fnv64};

/// Which hypothesis-level score a `hyp-*` block reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypField {
    Am,
    Lm,
}

/// Where a feature block's values come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockSource {
    /// Trained n-gram LM: natural-log sentence probability and log-perplexity.
    NgramLm,
    /// Topic-mixture unigram LM: natural-log probability and log-perplexity.
    TopicLm,
    /// The inferred topic mixture itself, one dimension per topic.
    TopicVec,
    /// A score stored on the hypothesis (`am_score` or `lm_score`).
    Hyp(HypField),
    /// A named scalar from `ext_scalars`. Perplexity-like scalars are
    /// expected to be ingested in log domain.
    ExtScalar,
    /// A named dense vector from `ext_vectors`.
    ExtVector,
}

impl BlockSource {
    /// Canonical token used in schema files and for schema hashing.
    pub fn token(&self) -> &'static str {
        match self {
            BlockSource::NgramLm => "builtin-ngram",
            BlockSource::TopicLm => "builtin-tmlm",
            BlockSource::TopicVec => "builtin-topicvec",
            BlockSource::Hyp(HypField::Am) => "hyp-am",
            BlockSource::Hyp(HypField::Lm) => "hyp-lm",
            BlockSource::ExtScalar => "ext-scalar",
            BlockSource::ExtVector => "ext-vector",
        }
    }

    pub fn from_token(tok: &str) -> Option<Self> {
        Some(match tok {
            "builtin-ngram" => BlockSource::NgramLm,
            "builtin-tmlm" => BlockSource::TopicLm,
            "builtin-topicvec" => BlockSource::TopicVec,
            "hyp-am" => BlockSource::Hyp(HypField::Am),
            "hyp-lm" => BlockSource::Hyp(HypField::Lm),
            "ext-scalar" => BlockSource::ExtScalar,
            "ext-vector" => BlockSource::ExtVector,
            _ => return None,
        })
    }
}

/// One named block of the feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub dim: usize,
    pub source: BlockSource,
}

/// Ordered block declarations; the assembled vector is their concatenation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSchema {
    blocks: Vec<Block>,
    total_dim: usize,
    id: u64,
}

impl FeatureSchema {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidSchema {
                line: 0,
                msg: "schema has no blocks".to_string(),
            });
        }
        for (i, b) in blocks.iter().enumerate() {
            if b.dim == 0 {
                return Err(Error::InvalidSchema {
                    line: i + 1,
                    msg: format!("block {} has dim 0", b.name),
                });
            }
            let fixed = match b.source {
                BlockSource::NgramLm | BlockSource::TopicLm => Some(2),
                BlockSource::Hyp(_) | BlockSource::ExtScalar => Some(1),
                BlockSource::TopicVec | BlockSource::ExtVector => None,
            };
            if let Some(d) = fixed {
                if b.dim != d {
                    return Err(Error::InvalidSchema {
                        line: i + 1,
                        msg: format!("block {} must have dim {d}", b.name),
                    });
                }
            }
            if blocks[..i].iter().any(|o| o.name == b.name) {
                return Err(Error::InvalidSchema {
                    line: i + 1,
                    msg: format!("duplicate block name {}", b.name),
                });
            }
        }
        let total_dim = blocks.iter().map(|b| b.dim).sum();
        let id = Self::hash_blocks(&blocks);
        Ok(FeatureSchema {
            blocks,
            total_dim,
            id,
        })
    }

    fn hash_blocks(blocks: &[Block]) -> u64 {
        let mut h = Fnv64::new();
        for b in blocks {
            h.write(b.name.as_bytes());
            h.write(&[0x1f]);
            h.write(b.source.token().as_bytes());
            h.write(&[0x1f]);
            h.write_u64(b.dim as u64);
            h.write(&[0x1e]);
        }
        h.finish()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// Hash binding vectors, normalizers and models to this schema.
    pub fn id(&self) -> u64 {
        self.id
    }

    /// Dimension range block `index` occupies in the assembled vector.
    pub fn block_range(&self, index: usize) -> core::ops::Range<usize> {
        let start: usize = self.blocks[..index].iter().map(|b| b.dim).sum();
        start..start + self.blocks[index].dim
    }

    /// A new single-block schema for slicing experiments.
    pub fn single_block(&self, index: usize) -> FeatureSchema {
        FeatureSchema::new(vec![self.blocks[index].clone()]).expect("block already validated")
    }

    /// Parses the schema file format: one `<name> <source> <dim>` per line,
    /// `#` comments and blank lines ignored.
    pub fn parse_str(text: &str) -> Result<FeatureSchema> {
        let mut blocks = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (name, source, dim) = match (parts.next(), parts.next(), parts.next(), parts.next())
            {
                (Some(n), Some(s), Some(d), None) => (n, s, d),
                _ => {
                    return Err(Error::InvalidSchema {
                        line: lineno + 1,
                        msg: "expected: <name> <source> <dim>".to_string(),
                    })
                }
            };
            let source = BlockSource::from_token(source).ok_or_else(|| Error::InvalidSchema {
                line: lineno + 1,
                msg: format!("unknown source {source}"),
            })?;
            let dim: usize = dim.parse().map_err(|_| Error::InvalidSchema {
                line: lineno + 1,
                msg: format!("bad dim {dim}"),
            })?;
            blocks.push(Block {
                name: name.to_string(),
                dim,
                source,
            });
        }
        FeatureSchema::new(blocks)
    }

    /// Renders the schema in the same format `parse_str` accepts.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            out.push_str(&format!("{} {} {}\n", b.name, b.source.token(), b.dim));
        }
        out
    }
}

/// A dense feature vector bound to the schema that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub schema_id: u64,
}

/// Iteration and seeding knobs for topic-mixture inference during assembly.
#[derive(Debug, Clone, Copy)]
pub struct TmInferOpts {
    pub iters: usize,
    pub seed: u64,
}

impl Default for TmInferOpts {
    fn default() -> Self {
        TmInferOpts {
            iters: 100,
            seed: 0,
        }
    }
}

/// The trained models builtin blocks draw from.
#[derive(Clone, Copy, Default)]
pub struct Models<'a> {
    pub ngram: Option<&'a NgramModel>,
    pub topics: Option<&'a TopicModel>,
    pub tm: TmInferOpts,
}

fn ext_scalar(hyp: &Hypothesis, list: &NBestList, idx: usize, block: &Block) -> Result<f64> {
    hyp.ext_scalars
        .get(&block.name)
        .copied()
        .ok_or_else(|| Error::MissingFeature {
            utt_id: list.utt_id.clone(),
            hyp_index: idx,
            block: block.name.clone(),
        })
}

/// Assembles one feature vector per hypothesis, in list order.
///
/// LM-style blocks emit `[ln prob, ln perplexity]`; the topic-vector block
/// emits the inferred mixture (the topic model's `K` must equal the block
/// dim). Topic inference runs once per hypothesis and is shared between
/// the `builtin-tmlm` and `builtin-topicvec` blocks, seeded per hypothesis
/// from `Models::tm.seed`, the utterance id and the hypothesis index, so
/// assembly is pure: identical inputs give bitwise-identical vectors.
pub fn assemble(
    list: &NBestList,
    schema: &FeatureSchema,
    models: &Models<'_>,
) -> Result<Vec<FeatureVector>> {
    let need_theta = schema
        .blocks
        .iter()
        .any(|b| matches!(b.source, BlockSource::TopicLm | BlockSource::TopicVec));
    let mut out = Vec::with_capacity(list.hypotheses.len());
    for (idx, hyp) in list.hypotheses.iter().enumerate() {
        let theta = if need_theta {
            let tm = models.topics.ok_or_else(|| Error::MissingModel {
                block: "builtin-tmlm/builtin-topicvec".to_string(),
            })?;
            let seed = derive_seed(models.tm.seed, &list.utt_id, idx);
            Some(infer_theta(tm, &hyp.tokens, models.tm.iters, seed))
        } else {
            None
        };

        let mut values = Vec::with_capacity(schema.total_dim);
        for block in &schema.blocks {
            match block.source {
                BlockSource::NgramLm => {
                    let lm = models.ngram.ok_or_else(|| Error::MissingModel {
                        block: block.name.clone(),
                    })?;
                    let lp = lm.sentence_logprob(&hyp.tokens);
                    let ln_ppl = -lp / (hyp.tokens.len() + 1) as f64;
                    values.push(lp);
                    values.push(ln_ppl);
                }
                BlockSource::TopicLm => {
                    let tm = models.topics.expect("checked above");
                    let score = tm_lm_logprob(tm, theta.as_ref().unwrap(), &hyp.tokens);
                    values.push(score.logprob);
                    values.push(score.perplexity().ln());
                }
                BlockSource::TopicVec => {
                    let theta = theta.as_ref().unwrap().as_slice();
                    if theta.len() != block.dim {
                        return Err(Error::DimMismatch {
                            block: block.name.clone(),
                            expected: block.dim,
                            actual: theta.len(),
                        });
                    }
                    values.extend_from_slice(theta);
                }
                BlockSource::Hyp(HypField::Am) => values.push(hyp.am_score),
                BlockSource::Hyp(HypField::Lm) => values.push(hyp.lm_score),
                BlockSource::ExtScalar => values.push(ext_scalar(hyp, list, idx, block)?),
                BlockSource::ExtVector => {
                    let v = hyp
                        .ext_vectors
                        .get(&block.name)
                        .ok_or_else(|| Error::MissingFeature {
                            utt_id: list.utt_id.clone(),
                            hyp_index: idx,
                            block: block.name.clone(),
                        })?;
                    if v.len() != block.dim {
                        return Err(Error::DimMismatch {
                            block: block.name.clone(),
                            expected: block.dim,
                            actual: v.len(),
                        });
                    }
                    values.extend_from_slice(v);
                }
            }
            if values.iter().rev().take(block.dim).any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteFeature {
                    utt_id: list.utt_id.clone(),
                    block: block.name.clone(),
                });
            }
        }
        debug_assert_eq!(values.len(), schema.total_dim);
        out.push(FeatureVector {
            values,
            schema_id: schema.id,
        });
    }
    Ok(out)
}

/// Per-dimension affine z-scoring fit on the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    mean: Vec<f64>,
    std: Vec<f64>,
    schema_id: u64,
}

impl Normalizer {
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn schema_id(&self) -> u64 {
        self.schema_id
    }

    pub fn from_parts(mean: Vec<f64>, std: Vec<f64>, schema_id: u64) -> Result<Self> {
        if mean.len() != std.len() || std.iter().any(|&s| s <= 0.0) {
            return Err(Error::InvalidModel(
                "normalizer mean/std malformed".to_string(),
            ));
        }
        Ok(Normalizer {
            mean,
            std,
            schema_id,
        })
    }

    /// z = (x - mean) / std per dimension.
    pub fn apply(&self, vector: &FeatureVector) -> Result<FeatureVector> {
        if vector.schema_id != self.schema_id {
            return Err(Error::SchemaMismatch);
        }
        if vector.values.len() != self.mean.len() {
            return Err(Error::SchemaMismatch);
        }
        let values = vector
            .values
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&x, (&m, &s))| (x - m) / s)
            .collect();
        Ok(FeatureVector {
            values,
            schema_id: vector.schema_id,
        })
    }

    pub fn apply_all(&self, vectors: &[FeatureVector]) -> Result<Vec<FeatureVector>> {
        vectors.iter().map(|v| self.apply(v)).collect()
    }
}

/// Fits per-dimension mean and population standard deviation.
/// Standard deviations are clamped to at least 1e-8, so constant
/// dimensions map to exactly 0.
pub fn fit_normalizer(vectors: &[FeatureVector]) -> Result<Normalizer> {
    if vectors.len() < 2 {
        return Err(Error::InsufficientData);
    }
    let schema_id = vectors[0].schema_id;
    let dim = vectors[0].values.len();
    if vectors
        .iter()
        .any(|v| v.schema_id != schema_id || v.values.len() != dim)
    {
        return Err(Error::SchemaMismatch);
    }
    let n = vectors.len() as f64;
    let mut mean = vec![0.0f64; dim];
    for v in vectors {
        for (m, &x) in mean.iter_mut().zip(&v.values) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0f64; dim];
    for v in vectors {
        for ((s, &m), &x) in var.iter_mut().zip(&mean).zip(&v.values) {
            let d = x - m;
            *s += d * d;
        }
    }
    let std = var.iter().map(|&s| (s / n).sqrt().max(1e-8)).collect();
    Ok(Normalizer {
        mean,
        std,
        schema_id,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nbest::Hypothesis;
    use alloc::string::ToString;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn block(name: &str, source: BlockSource, dim: usize) -> Block {
        Block {
            name: name.to_string(),
            dim,
            source,
        }
    }

    fn vector(values: &[f64], schema_id: u64) -> FeatureVector {
        FeatureVector {
            values: values.to_vec(),
            schema_id,
        }
    }

    #[test]
    fn dimension_bookkeeping() {
        let corpus = alloc::vec![toks("a b c"), toks("b c d")];
        let lm = crate::ngram::train_ngram(&corpus, 2).unwrap();
        let schema = FeatureSchema::new(alloc::vec![
            block("am", BlockSource::Hyp(HypField::Am), 1),
            block("ngram", BlockSource::NgramLm, 2),
        ])
        .unwrap();
        let list = NBestList {
            utt_id: "u".into(),
            hypotheses: alloc::vec![
                Hypothesis::new(toks("a b"), -1.0, -2.0, 0),
                Hypothesis::new(toks("b c"), -1.5, -2.5, 1),
                Hypothesis::new(toks(""), -9.0, -9.0, 2),
            ],
            reference: None,
        };
        let models = Models {
            ngram: Some(&lm),
            ..Models::default()
        };
        let vecs = assemble(&list, &schema, &models).unwrap();
        assert_eq!(vecs.len(), 3);
        for v in &vecs {
            assert_eq!(v.values.len(), 3);
            assert!(v.values.iter().all(|x| x.is_finite()));
            assert_eq!(v.schema_id, schema.id());
        }
        assert_eq!(vecs[0].values[0], -1.0);
    }

    #[test]
    fn full_schema_total_dim() {
        let schema = FeatureSchema::new(alloc::vec![
            block("am", BlockSource::Hyp(HypField::Am), 1),
            block("lm", BlockSource::Hyp(HypField::Lm), 1),
            block("rnnlm-ppl", BlockSource::ExtScalar, 1),
            block("bertlm-ppl", BlockSource::ExtScalar, 1),
            block("tmlm", BlockSource::TopicLm, 2),
            block("bert-emb", BlockSource::ExtVector, 1024),
            block("topicvec", BlockSource::TopicVec, 50),
        ])
        .unwrap();
        assert_eq!(schema.total_dim(), 1080);
    }

    #[test]
    fn missing_ext_scalar_is_reported() {
        let schema = FeatureSchema::new(alloc::vec![block(
            "rnnlm-ppl",
            BlockSource::ExtScalar,
            1
        )])
        .unwrap();
        let list = NBestList {
            utt_id: "utt-7".into(),
            hypotheses: alloc::vec![Hypothesis::new(toks("a"), 0.0, 0.0, 0)],
            reference: None,
        };
        match assemble(&list, &schema, &Models::default()) {
            Err(Error::MissingFeature {
                utt_id,
                hyp_index,
                block,
            }) => {
                assert_eq!(utt_id, "utt-7");
                assert_eq!(hyp_index, 0);
                assert_eq!(block, "rnnlm-ppl");
            }
            other => panic!("expected MissingFeature, got {other:?}"),
        }
    }

    #[test]
    fn ext_vector_dim_checked() {
        let schema =
            FeatureSchema::new(alloc::vec![block("emb", BlockSource::ExtVector, 4)]).unwrap();
        let mut hyp = Hypothesis::new(toks("a"), 0.0, 0.0, 0);
        hyp.ext_vectors
            .insert("emb".to_string(), alloc::vec![1.0, 2.0]);
        let list = NBestList {
            utt_id: "u".into(),
            hypotheses: alloc::vec![hyp],
            reference: None,
        };
        match assemble(&list, &schema, &Models::default()) {
            Err(Error::DimMismatch {
                expected, actual, ..
            }) => {
                assert_eq!((expected, actual), (4, 2));
            }
            other => panic!("expected DimMismatch, got {other:?}"),
        }
    }

    #[test]
    fn normalizer_two_points() {
        let schema_id = 9;
        let vecs = alloc::vec![vector(&[0.0], schema_id), vector(&[2.0], schema_id)];
        let norm = fit_normalizer(&vecs).unwrap();
        assert_eq!(norm.mean(), &[1.0]);
        assert_eq!(norm.std(), &[1.0]);
        let z = norm.apply_all(&vecs).unwrap();
        assert_eq!(z[0].values, alloc::vec![-1.0]);
        assert_eq!(z[1].values, alloc::vec![1.0]);
    }

    #[test]
    fn constant_dimension_maps_to_zero() {
        let vecs = alloc::vec![
            vector(&[3.0, 1.0], 1),
            vector(&[3.0, 2.0], 1),
            vector(&[3.0, 3.0], 1)
        ];
        let norm = fit_normalizer(&vecs).unwrap();
        let z = norm.apply_all(&vecs).unwrap();
        for v in &z {
            assert_eq!(v.values[0], 0.0);
        }
    }

    #[test]
    fn normalized_moments_match_recomputation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let vecs: Vec<FeatureVector> = (0..100)
            .map(|_| {
                let values = (0..5).map(|d| rng.gen::<f64>() * (d + 1) as f64 - 2.0).collect();
                FeatureVector {
                    values,
                    schema_id: 4,
                }
            })
            .collect();
        let norm = fit_normalizer(&vecs).unwrap();
        let z = norm.apply_all(&vecs).unwrap();
        for d in 0..5 {
            let mean: f64 = z.iter().map(|v| v.values[d]).sum::<f64>() / 100.0;
            let var: f64 = z.iter().map(|v| (v.values[d] - mean).powi(2)).sum::<f64>() / 100.0;
            assert!(mean.abs() < 1e-9, "dim {d} mean {mean}");
            assert!((var - 1.0).abs() < 1e-6, "dim {d} var {var}");
        }
    }

    #[test]
    fn fit_needs_two_vectors() {
        assert_eq!(
            fit_normalizer(&[vector(&[1.0], 0)]),
            Err(Error::InsufficientData)
        );
    }

    #[test]
    fn schema_text_round_trip() {
        let text = "\
# ranker features
am hyp-am 1
lm hyp-lm 1          # decoder LM score
ngram builtin-ngram 2
emb ext-vector 16
";
        let schema = FeatureSchema::parse_str(text).unwrap();
        assert_eq!(schema.blocks().len(), 4);
        assert_eq!(schema.total_dim(), 20);
        let again = FeatureSchema::parse_str(&schema.to_text()).unwrap();
        assert_eq!(schema, again);
        assert_eq!(schema.id(), again.id());
    }

    #[test]
    fn schema_rejects_bad_declarations() {
        assert!(matches!(
            FeatureSchema::parse_str("x wat 1"),
            Err(Error::InvalidSchema { line: 1, .. })
        ));
        assert!(matches!(
            FeatureSchema::parse_str("a hyp-am 1\na hyp-lm 1"),
            Err(Error::InvalidSchema { line: 2, .. })
        ));
        // ngram blocks are two-dimensional by contract
        assert!(FeatureSchema::parse_str("n builtin-ngram 3").is_err());
    }
}
