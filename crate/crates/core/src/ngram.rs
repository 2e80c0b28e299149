//! Backoff n-gram language model with interpolated Witten-Bell smoothing.
//!
//! Probabilities are stored in log10 (the ARPA convention); the sentence
//! scoring API returns natural-log values, which is what the feature
//! assembly expects.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

const LN_10: f64 = core::f64::consts::LN_10;
/// log10 floor used when a loaded model has no entry to fall back to
/// (foreign ARPA files without `<unk>` or `</s>`). Small enough to be
/// negligible for normalization checks, finite so features stay finite.
const FLOOR_LOG10: f64 = -99.0;

/// A trained backoff model of some order.
///
/// `probs[k-1]` maps each stored k-gram (as vocabulary ids) to its log10
/// conditional probability; `bows[k-1]` maps each k-gram that occurs as a
/// context to its log10 backoff weight.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    order: usize,
    words: Vec<String>,
    ids: BTreeMap<String, u32>,
    probs: Vec<BTreeMap<Vec<u32>, f64>>,
    bows: Vec<BTreeMap<Vec<u32>, f64>>,
    unk: Option<u32>,
    bos: Option<u32>,
    eos: Option<u32>,
}

impl NgramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    /// All vocabulary words, id order.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    /// Words the model can predict: everything except the begin-of-sentence
    /// symbol.
    pub fn predictable_words(&self) -> impl Iterator<Item = &str> {
        let bos = self.bos;
        self.words
            .iter()
            .enumerate()
            .filter(move |(i, _)| Some(*i as u32) != bos)
            .map(|(_, w)| w.as_str())
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    /// Number of stored n-grams at each order `1..=order`.
    pub fn counts(&self) -> Vec<usize> {
        self.probs.iter().map(BTreeMap::len).collect()
    }

    /// Stored entries of order `k` (1-based): (ids, log10 prob, log10 bow).
    pub fn entries(&self, k: usize) -> impl Iterator<Item = (&[u32], f64, Option<f64>)> {
        let bows = &self.bows[k - 1];
        self.probs[k - 1]
            .iter()
            .map(move |(key, &lp)| (key.as_slice(), lp, bows.get(key).copied()))
    }

    fn id_of(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied().or(self.unk)
    }

    /// log10 p(word | context) through the backoff chain. Context is given
    /// most-recent-last and may be any length; only the last `order - 1`
    /// items are used. Out-of-vocabulary tokens map to `<unk>` when the
    /// model has one, otherwise to a -99 log10 floor.
    pub fn cond_log10(&self, context: &[&str], word: &str) -> f64 {
        let ctx: Vec<u32> = context
            .iter()
            .rev()
            .take(self.order.saturating_sub(1))
            .filter_map(|t| self.id_of(t))
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .collect();
        match self.id_of(word) {
            Some(w) => self.cond_log10_ids(&ctx, w),
            None => FLOOR_LOG10,
        }
    }

    fn cond_log10_ids(&self, context: &[u32], word: u32) -> f64 {
        let mut acc = 0.0;
        let mut start = 0;
        loop {
            let ctx = &context[start..];
            let mut key = Vec::with_capacity(ctx.len() + 1);
            key.extend_from_slice(ctx);
            key.push(word);
            if let Some(&lp) = self.probs.get(ctx.len()).and_then(|m| m.get(&key)) {
                return acc + lp;
            }
            if ctx.is_empty() {
                // word absent even as a unigram: only possible for models
                // loaded from foreign tables.
                return acc + FLOOR_LOG10;
            }
            if let Some(&bow) = self.bows.get(ctx.len() - 1).and_then(|m| m.get(ctx)) {
                acc += bow;
            }
            start += 1;
        }
    }

    /// Natural-log probability of a sentence including the end-of-sentence
    /// event, so a model scores `len + 1` events per sentence.
    pub fn sentence_logprob<S: AsRef<str>>(&self, tokens: &[S]) -> f64 {
        let mut hist: Vec<u32> = self.bos.into_iter().collect();
        let mut lp10 = 0.0;
        for tok in tokens {
            let ctx_start = hist.len().saturating_sub(self.order - 1);
            match self.id_of(tok.as_ref()) {
                Some(w) => {
                    lp10 += self.cond_log10_ids(&hist[ctx_start..], w);
                    hist.push(w);
                }
                None => lp10 += FLOOR_LOG10,
            }
        }
        let ctx_start = hist.len().saturating_sub(self.order - 1);
        lp10 += match self.eos {
            Some(eos) => self.cond_log10_ids(&hist[ctx_start..], eos),
            None => FLOOR_LOG10,
        };
        lp10 * LN_10
    }

    /// Per-event perplexity, counting the end-of-sentence event.
    pub fn perplexity<S: AsRef<str>>(&self, tokens: &[S]) -> f64 {
        let lp = self.sentence_logprob(tokens);
        (-lp / (tokens.len() + 1) as f64).exp()
    }

    /// Rebuilds a model from per-order (words, log10 prob, log10 bow)
    /// tables, as parsed from an ARPA file. The unigram table defines the
    /// vocabulary; ids are assigned in table order.
    pub fn from_tables(tables: Vec<Vec<(Vec<String>, f64, Option<f64>)>>) -> Result<Self> {
        let order = tables.len();
        if order == 0 || tables[0].is_empty() {
            return Err(Error::InvalidModel("model has no unigram table".to_string()));
        }
        let mut words = Vec::new();
        let mut ids = BTreeMap::new();
        for (key, _, _) in &tables[0] {
            if key.len() != 1 {
                return Err(Error::InvalidModel(format!(
                    "unigram entry with {} words",
                    key.len()
                )));
            }
            if ids.insert(key[0].clone(), words.len() as u32).is_some() {
                return Err(Error::InvalidModel(format!("duplicate unigram {}", key[0])));
            }
            words.push(key[0].clone());
        }
        let mut probs: Vec<BTreeMap<Vec<u32>, f64>> = vec![BTreeMap::new(); order];
        let mut bows: Vec<BTreeMap<Vec<u32>, f64>> = vec![BTreeMap::new(); order];
        for (k, table) in tables.into_iter().enumerate() {
            for (key, lp, bow) in table {
                if key.len() != k + 1 {
                    return Err(Error::InvalidModel(format!(
                        "{}-gram entry with {} words",
                        k + 1,
                        key.len()
                    )));
                }
                let mut idkey = Vec::with_capacity(key.len());
                for w in &key {
                    idkey.push(*ids.get(w).ok_or_else(|| {
                        Error::InvalidModel(format!("{}-gram references unknown word {w}", k + 1))
                    })?);
                }
                if let Some(b) = bow {
                    bows[k].insert(idkey.clone(), b);
                }
                probs[k].insert(idkey, lp);
            }
        }
        let lookup = |w: &str| ids.get(w).copied();
        Ok(NgramModel {
            order,
            unk: lookup(UNK),
            bos: lookup(BOS),
            eos: lookup(EOS),
            words,
            ids,
            probs,
            bows,
        })
    }
}

/// Trains an interpolated Witten-Bell backoff model.
///
/// Words seen exactly once in the corpus are replaced by `<unk>` before
/// counting. Each sentence is padded with `<s>`/`</s>`; `<s>` is context
/// only and is never predicted. Unigrams interpolate toward the uniform
/// distribution over the predictable vocabulary so every vocabulary word
/// (including an unobserved `<unk>`) keeps positive mass.
pub fn train_ngram(corpus: &[Vec<String>], order: usize) -> Result<NgramModel> {
    assert!(order >= 1, "order must be >= 1");
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut raw_counts: BTreeMap<&str, u64> = BTreeMap::new();
    for sent in corpus {
        for tok in sent {
            *raw_counts.entry(tok.as_str()).or_insert(0) += 1;
        }
    }

    // Reserved symbols first, then corpus words in first-occurrence order.
    let mut words: Vec<String> = vec![UNK.to_string(), BOS.to_string(), EOS.to_string()];
    let mut ids: BTreeMap<String, u32> = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i as u32))
        .collect();
    let (unk_id, bos_id, eos_id) = (0u32, 1u32, 2u32);
    for sent in corpus {
        for tok in sent {
            if raw_counts[tok.as_str()] >= 2 && !ids.contains_key(tok.as_str()) {
                ids.insert(tok.clone(), words.len() as u32);
                words.push(tok.clone());
            }
        }
    }

    // Map sentences to padded id sequences.
    let mapped: Vec<Vec<u32>> = corpus
        .iter()
        .map(|sent| {
            let mut s = Vec::with_capacity(sent.len() + 2);
            s.push(bos_id);
            for tok in sent {
                s.push(if raw_counts[tok.as_str()] >= 2 {
                    ids[tok.as_str()]
                } else {
                    unk_id
                });
            }
            s.push(eos_id);
            s
        })
        .collect();

    // k-gram event counts; events end at every predicted position (every
    // token and </s>, never <s>).
    let mut counts: Vec<BTreeMap<Vec<u32>, u64>> = vec![BTreeMap::new(); order];
    for sent in &mapped {
        for t in 1..sent.len() {
            for k in 1..=order {
                if t + 1 >= k {
                    let key = sent[t + 1 - k..=t].to_vec();
                    *counts[k - 1].entry(key).or_insert(0) += 1;
                }
            }
        }
    }

    // Per-context totals and distinct continuation types.
    let mut ctx_stats: Vec<BTreeMap<Vec<u32>, (u64, u64)>> = vec![BTreeMap::new(); order];
    for k in 2..=order {
        for (key, &c) in &counts[k - 1] {
            let e = ctx_stats[k - 1].entry(key[..k - 1].to_vec()).or_insert((0, 0));
            e.0 += c;
            e.1 += 1;
        }
    }

    let vocab_size = words.len() as f64 - 1.0; // everything but <s>
    let total_events: u64 = counts[0].values().sum();
    let unigram_types = counts[0].len() as u64;

    let mut probs: Vec<BTreeMap<Vec<u32>, f64>> = vec![BTreeMap::new(); order];
    let mut bows: Vec<BTreeMap<Vec<u32>, f64>> = vec![BTreeMap::new(); order];

    // Unigrams: Witten-Bell interpolation with a uniform base distribution.
    let n = total_events as f64;
    let t1 = unigram_types as f64;
    for (id, _) in words.iter().enumerate() {
        let id = id as u32;
        if id == bos_id {
            probs[0].insert(vec![id], FLOOR_LOG10); // placeholder, never predicted
            continue;
        }
        let c = counts[0].get(&vec![id]).copied().unwrap_or(0) as f64;
        let p = (c + t1 / vocab_size) / (n + t1);
        probs[0].insert(vec![id], p.log10());
    }

    // Higher orders: p(w|ctx) = (c + T(ctx) * p_lower(w|ctx[1..])) / (c(ctx) + T(ctx)).
    for k in 2..=order {
        let keys: Vec<Vec<u32>> = counts[k - 1].keys().cloned().collect();
        for key in keys {
            let c = counts[k - 1][&key] as f64;
            let (ctx_total, ctx_types) = ctx_stats[k - 1][&key[..k - 1]];
            let lower_key = key[1..].to_vec();
            let p_lower = 10f64.powf(probs[k - 2][&lower_key]);
            let p = (c + ctx_types as f64 * p_lower) / (ctx_total as f64 + ctx_types as f64);
            probs[k - 1].insert(key, p.log10());
        }
        for (ctx, &(total, types)) in &ctx_stats[k - 1] {
            let bow = types as f64 / (total as f64 + types as f64);
            bows[ctx.len() - 1].insert(ctx.clone(), bow.log10());
        }
    }

    Ok(NgramModel {
        order,
        words,
        ids,
        probs,
        bows,
        unk: Some(unk_id),
        bos: Some(bos_id),
        eos: Some(eos_id),
    })
}
