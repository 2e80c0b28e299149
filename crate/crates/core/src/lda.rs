//! Latent Dirichlet allocation via collapsed Gibbs sampling, and the
//! document-specific mixture unigram LM it induces.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Trained topic model: `K` topics over a `W`-word vocabulary with
/// beta-smoothed topic-word rows, so every entry is strictly positive and
/// each row sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    k: usize,
    alpha: f64,
    beta: f64,
    words: Vec<String>,
    ids: BTreeMap<String, u32>,
    /// K x W row-major topic-word probabilities.
    phi: Vec<f64>,
}

impl TopicModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn vocab_size(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    pub fn phi_row(&self, topic: usize) -> &[f64] {
        let w = self.words.len();
        &self.phi[topic * w..(topic + 1) * w]
    }

    /// p(word | topic), 0 for out-of-vocabulary words.
    pub fn word_prob(&self, topic: usize, word: &str) -> f64 {
        match self.ids.get(word) {
            Some(&id) => self.phi_row(topic)[id as usize],
            None => 0.0,
        }
    }

    fn doc_ids(&self, doc: &[String]) -> (Vec<u32>, usize) {
        let mut ids = Vec::with_capacity(doc.len());
        let mut oov = 0;
        for tok in doc {
            match self.ids.get(tok.as_str()) {
                Some(&id) => ids.push(id),
                None => oov += 1,
            }
        }
        (ids, oov)
    }

    /// Rebuilds a model from its stored parts, validating row normalization.
    pub fn from_parts(
        k: usize,
        alpha: f64,
        beta: f64,
        words: Vec<String>,
        phi: Vec<f64>,
    ) -> Result<Self> {
        let w = words.len();
        if k == 0 || w == 0 || phi.len() != k * w {
            return Err(Error::InvalidModel(alloc::format!(
                "phi has {} entries, expected {}x{}",
                phi.len(),
                k,
                w
            )));
        }
        for topic in 0..k {
            let row = &phi[topic * w..(topic + 1) * w];
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 || row.iter().any(|&p| p <= 0.0) {
                return Err(Error::InvalidModel(
                    "phi row not a positive distribution".to_string(),
                ));
            }
        }
        let ids = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Ok(TopicModel {
            k,
            alpha,
            beta,
            words,
            ids,
            phi,
        })
    }
}

/// Per-document topic mixing proportions: non-negative, summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicMixture {
    theta: Vec<f64>,
}

impl TopicMixture {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        let sum: f64 = theta.iter().sum();
        if theta.is_empty() || theta.iter().any(|&t| t < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidModel(
                "theta must be a probability vector".to_string(),
            ));
        }
        Ok(TopicMixture { theta })
    }

    pub fn uniform(k: usize) -> Self {
        TopicMixture {
            theta: vec![1.0 / k as f64; k],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }
}

/// Trains an LDA model by collapsed Gibbs sampling.
///
/// Topic-word rows come from the final sampler state:
/// `phi[k][w] = (n_kw + beta) / (n_k + W*beta)`. Bitwise reproducible for
/// a fixed `(corpus, k, iters, seed)`.
pub fn train_lda(
    corpus: &[Vec<String>],
    k: usize,
    iters: usize,
    seed: u64,
    alpha: f64,
    beta: f64,
) -> Result<TopicModel> {
    assert!(k >= 1, "k must be >= 1");
    assert!(iters >= 1, "iters must be >= 1");
    assert!(alpha > 0.0 && beta > 0.0, "priors must be positive");

    let mut words: Vec<String> = Vec::new();
    let mut ids: BTreeMap<String, u32> = BTreeMap::new();
    let docs: Vec<Vec<u32>> = corpus
        .iter()
        .map(|doc| {
            doc.iter()
                .map(|tok| {
                    *ids.entry(tok.clone()).or_insert_with(|| {
                        words.push(tok.clone());
                        (words.len() - 1) as u32
                    })
                })
                .collect()
        })
        .collect();
    let w = words.len();
    if docs.is_empty() || w == 0 {
        return Err(Error::EmptyCorpus);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n_kw = vec![0u64; k * w];
    let mut n_k = vec![0u64; k];
    let mut n_dk = vec![0u64; docs.len() * k];
    let mut z: Vec<Vec<usize>> = docs
        .iter()
        .enumerate()
        .map(|(d, doc)| {
            doc.iter()
                .map(|&word| {
                    let topic = rng.gen_range(0..k);
                    n_kw[topic * w + word as usize] += 1;
                    n_k[topic] += 1;
                    n_dk[d * k + topic] += 1;
                    topic
                })
                .collect()
        })
        .collect();

    let w_beta = w as f64 * beta;
    let mut weights = vec![0.0f64; k];
    for _ in 0..iters {
        for (d, doc) in docs.iter().enumerate() {
            for (pos, &word) in doc.iter().enumerate() {
                let old = z[d][pos];
                n_kw[old * w + word as usize] -= 1;
                n_k[old] -= 1;
                n_dk[d * k + old] -= 1;

                let mut total = 0.0;
                for topic in 0..k {
                    let p = (n_dk[d * k + topic] as f64 + alpha)
                        * (n_kw[topic * w + word as usize] as f64 + beta)
                        / (n_k[topic] as f64 + w_beta);
                    weights[topic] = p;
                    total += p;
                }
                let mut u = rng.gen::<f64>() * total;
                let mut new = k - 1;
                for (topic, &p) in weights.iter().enumerate() {
                    if u < p {
                        new = topic;
                        break;
                    }
                    u -= p;
                }

                z[d][pos] = new;
                n_kw[new * w + word as usize] += 1;
                n_k[new] += 1;
                n_dk[d * k + new] += 1;
            }
        }
    }

    let mut phi = vec![0.0f64; k * w];
    for topic in 0..k {
        let denom = n_k[topic] as f64 + w_beta;
        for word in 0..w {
            phi[topic * w + word] = (n_kw[topic * w + word] as f64 + beta) / denom;
        }
    }

    Ok(TopicModel {
        k,
        alpha,
        beta,
        words,
        ids,
        phi,
    })
}

/// Infers a document's topic mixture with the topic-word rows held fixed.
///
/// Gibbs-samples the document's topic assignments and averages
/// `(n_dk + alpha) / (len + K*alpha)` over the last quarter of the
/// iterations. Empty or fully out-of-vocabulary documents get the uniform
/// mixture.
pub fn infer_theta(model: &TopicModel, doc: &[String], iters: usize, seed: u64) -> TopicMixture {
    assert!(iters >= 1, "iters must be >= 1");
    let k = model.k;
    let (ids, _oov) = model.doc_ids(doc);
    if ids.is_empty() {
        return TopicMixture::uniform(k);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = model.words.len();
    let mut m_k = vec![0u64; k];
    let mut z: Vec<usize> = ids
        .iter()
        .map(|_| {
            let topic = rng.gen_range(0..k);
            m_k[topic] += 1;
            topic
        })
        .collect();

    let alpha = model.alpha;
    let len = ids.len() as f64;
    let denom = len + k as f64 * alpha;
    let window = (iters / 4).max(1);
    let accumulate_from = iters - window;
    let mut acc = vec![0.0f64; k];
    let mut weights = vec![0.0f64; k];

    for it in 0..iters {
        for (pos, &word) in ids.iter().enumerate() {
            let old = z[pos];
            m_k[old] -= 1;
            let mut total = 0.0;
            for topic in 0..k {
                let p = (m_k[topic] as f64 + alpha) * model.phi[topic * w + word as usize];
                weights[topic] = p;
                total += p;
            }
            let mut u = rng.gen::<f64>() * total;
            let mut new = k - 1;
            for (topic, &p) in weights.iter().enumerate() {
                if u < p {
                    new = topic;
                    break;
                }
                u -= p;
            }
            z[pos] = new;
            m_k[new] += 1;
        }
        if it >= accumulate_from {
            for topic in 0..k {
                acc[topic] += (m_k[topic] as f64 + alpha) / denom;
            }
        }
    }

    let theta: Vec<f64> = acc.iter().map(|a| a / window as f64).collect();
    TopicMixture { theta }
}

/// Score of a document under the mixture unigram LM `p(w) = sum_k theta_k * phi_kw`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmLmScore {
    /// Natural-log probability of the scored (in-vocabulary) words.
    pub logprob: f64,
    /// Number of words that were scored.
    pub scored: usize,
    /// Number of out-of-vocabulary words that were skipped.
    pub oov: usize,
}

impl TmLmScore {
    /// Per-word perplexity over the scored words; 1 when nothing was scored.
    pub fn perplexity(&self) -> f64 {
        if self.scored == 0 {
            1.0
        } else {
            (-self.logprob / self.scored as f64).exp()
        }
    }
}

/// Natural-log likelihood of `doc` under the document-specific unigram LM
/// induced by `theta`. Out-of-vocabulary words are skipped and counted.
pub fn tm_lm_logprob(model: &TopicModel, theta: &TopicMixture, doc: &[String]) -> TmLmScore {
    assert_eq!(theta.as_slice().len(), model.k, "theta length must equal K");
    let w = model.words.len();
    let (ids, oov) = model.doc_ids(doc);
    let mut logprob = 0.0;
    for &word in &ids {
        let p: f64 = theta
            .as_slice()
            .iter()
            .enumerate()
            .map(|(topic, &t)| t * model.phi[topic * w + word as usize])
            .sum();
        logprob += p.ln();
    }
    TmLmScore {
        logprob,
        scored: ids.len(),
        oov,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(lines: &[&str]) -> Vec<Vec<String>> {
        lines
            .iter()
            .map(|l| l.split_whitespace().map(String::from).collect())
            .collect()
    }

    #[test]
    fn single_topic_is_smoothed_unigram() {
        let corpus = docs(&["a a b", "b c"]);
        let m = train_lda(&corpus, 1, 10, 7, 50.0, 0.01).unwrap();
        // counts: a=2, b=2, c=1, total=5, W=3
        let denom = 5.0 + 3.0 * 0.01;
        assert!((m.word_prob(0, "a") - (2.0 + 0.01) / denom).abs() < 1e-12);
        assert!((m.word_prob(0, "b") - (2.0 + 0.01) / denom).abs() < 1e-12);
        assert!((m.word_prob(0, "c") - (1.0 + 0.01) / denom).abs() < 1e-12);
    }

    #[test]
    fn phi_rows_sum_to_one() {
        let corpus = docs(&["a b c d", "c d e f", "a f e b"]);
        let m = train_lda(&corpus, 4, 30, 3, 50.0 / 4.0, 0.01).unwrap();
        for topic in 0..4 {
            let sum: f64 = m.phi_row(topic).iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(m.phi_row(topic).iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn training_is_bitwise_reproducible() {
        let corpus = docs(&["a b c", "d e f", "a d", "b e c f"]);
        let m1 = train_lda(&corpus, 3, 25, 42, 50.0 / 3.0, 0.01).unwrap();
        let m2 = train_lda(&corpus, 3, 25, 42, 50.0 / 3.0, 0.01).unwrap();
        assert_eq!(m1, m2);
        let m3 = train_lda(&corpus, 3, 25, 43, 50.0 / 3.0, 0.01).unwrap();
        assert!(m1 != m3, "different seed should move the sampler");
    }

    #[test]
    fn single_topic_theta_is_one() {
        let corpus = docs(&["a b", "b c"]);
        let m = train_lda(&corpus, 1, 5, 1, 50.0, 0.01).unwrap();
        let theta = infer_theta(&m, &docs(&["a c"])[0], 20, 9);
        assert_eq!(theta.as_slice(), &[1.0]);
    }

    #[test]
    fn empty_doc_gets_uniform_theta() {
        let corpus = docs(&["a b", "b c"]);
        let m = train_lda(&corpus, 4, 5, 1, 12.5, 0.01).unwrap();
        let theta = infer_theta(&m, &[], 20, 9);
        assert_eq!(theta.as_slice(), &[0.25; 4]);
        // all-OOV behaves the same
        let theta = infer_theta(&m, &docs(&["zz qq"])[0], 20, 9);
        assert_eq!(theta.as_slice(), &[0.25; 4]);
    }

    #[test]
    fn mixture_lm_degenerate_and_arithmetic() {
        // K=1: p(w|theta) must equal phi_1w exactly.
        let corpus = docs(&["a a b"]);
        let m = train_lda(&corpus, 1, 5, 1, 50.0, 0.01).unwrap();
        let theta = TopicMixture::new(vec![1.0]).unwrap();
        let s = tm_lm_logprob(&m, &theta, &docs(&["a"])[0]);
        assert!((s.logprob - m.word_prob(0, "a").ln()).abs() < 1e-12);

        // theta = [0.5, 0.5], phi_1w = 0.2, phi_2w = 0.4 -> p = 0.3.
        let m2 = TopicModel::from_parts(
            2,
            1.0,
            0.01,
            alloc::vec!["w".to_string(), "v".to_string()],
            alloc::vec![0.2, 0.8, 0.4, 0.6],
        )
        .unwrap();
        let theta2 = TopicMixture::new(vec![0.5, 0.5]).unwrap();
        let s2 = tm_lm_logprob(&m2, &theta2, &docs(&["w"])[0]);
        assert!((s2.logprob - 0.3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn mixture_lm_skips_and_counts_oov() {
        let corpus = docs(&["a b c"]);
        let m = train_lda(&corpus, 2, 10, 2, 25.0, 0.01).unwrap();
        let theta = infer_theta(&m, &docs(&["a b"])[0], 20, 3);
        let s = tm_lm_logprob(&m, &theta, &docs(&["a zz b qq"])[0]);
        assert_eq!(s.scored, 2);
        assert_eq!(s.oov, 2);
        assert!(s.perplexity() > 0.0 && s.perplexity().is_finite());
    }

    #[test]
    fn mixture_sums_to_one_over_vocab() {
        let corpus = docs(&["a b c d e", "f g h i j", "a f b g"]);
        let m = train_lda(&corpus, 3, 30, 8, 50.0 / 3.0, 0.01).unwrap();
        let theta = infer_theta(&m, &docs(&["a f"])[0], 40, 5);
        let total: f64 = m
            .words()
            .map(|w| {
                theta
                    .as_slice()
                    .iter()
                    .enumerate()
                    .map(|(topic, &t)| t * m.word_prob(topic, w))
                    .sum::<f64>()
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-9, "total {total}");
    }
}
