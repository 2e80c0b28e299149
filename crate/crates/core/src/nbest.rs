//! Utterances, N-best hypotheses, edit-distance alignment and relevance labels.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One decoder hypothesis for an utterance.
///
/// Scores are natural-log domain. `ext_scalars` and `ext_vectors` carry
/// externally computed features (perplexities, sentence embeddings) keyed
/// by feature name. `asr_rank` is the 0-based position the decoder
/// originally assigned; within a list the ranks form a permutation of
/// `0..n`. Empty `tokens` is a legal decoder output.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub tokens: Vec<String>,
    pub am_score: f64,
    pub lm_score: f64,
    pub ext_scalars: BTreeMap<String, f64>,
    pub ext_vectors: BTreeMap<String, Vec<f64>>,
    pub asr_rank: usize,
}

impl Hypothesis {
    /// A hypothesis with the given tokens and scores and no external features.
    pub fn new(tokens: Vec<String>, am_score: f64, lm_score: f64, asr_rank: usize) -> Self {
        Hypothesis {
            tokens,
            am_score,
            lm_score,
            ext_scalars: BTreeMap::new(),
            ext_vectors: BTreeMap::new(),
            asr_rank,
        }
    }
}

/// One utterance's N-best list, with an optional reference transcript.
#[derive(Debug, Clone, PartialEq)]
pub struct NBestList {
    pub utt_id: String,
    pub hypotheses: Vec<Hypothesis>,
    pub reference: Option<Vec<String>>,
}

impl NBestList {
    /// Checks the structural invariants: asr_rank values form a permutation
    /// of `0..n`, and the list size does not exceed `max_n` when given.
    pub fn validate(&self, max_n: Option<usize>) -> Result<()> {
        let n = self.hypotheses.len();
        if let Some(limit) = max_n {
            if n > limit {
                return Err(Error::InvalidModel(alloc::format!(
                    "list {} has {} hypotheses, limit {}",
                    self.utt_id,
                    n,
                    limit
                )));
            }
        }
        let mut seen = vec![false; n];
        for h in &self.hypotheses {
            if h.asr_rank >= n || seen[h.asr_rank] {
                return Err(Error::InvalidModel(alloc::format!(
                    "list {}: asr_rank values are not a permutation of 0..{}",
                    self.utt_id,
                    n
                )));
            }
            seen[h.asr_rank] = true;
        }
        Ok(())
    }

    /// Index of the hypothesis the decoder originally ranked first.
    pub fn baseline_index(&self) -> Result<usize> {
        self.hypotheses
            .iter()
            .position(|h| h.asr_rank == 0)
            .ok_or_else(|| Error::EmptyList {
                utt_id: self.utt_id.clone(),
            })
    }
}

/// Substitution/insertion/deletion counts from a minimum-edit alignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EditStats {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub ref_len: usize,
    pub wer: f64,
}

impl EditStats {
    /// Total edit cost S + I + D.
    pub fn errors(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }
}

/// An N-best list plus one integer relevance grade per hypothesis.
///
/// Grades are dense ranks over the distinct WER values in the list:
/// the lowest WER gets the highest grade, ties share a grade, and the
/// worst distinct WER gets grade 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledList {
    pub list: NBestList,
    pub labels: Vec<u32>,
}

fn norm_token(t: &str) -> String {
    t.trim().to_lowercase()
}

/// Minimum-edit-distance alignment under unit costs.
///
/// Tokens compare equal after trimming and lowercasing. Among cost-minimal
/// alignments the backtrace prefers substitution over insertion over
/// deletion, which fixes the S/I/D split deterministically; the total cost
/// and WER do not depend on the tie-break. An empty reference scores
/// `wer = 0` against an empty hypothesis and `wer = I` (a count, not a
/// rate) otherwise.
pub fn align<R: AsRef<str>, H: AsRef<str>>(reference: &[R], hypothesis: &[H]) -> EditStats {
    let rn: Vec<String> = reference.iter().map(|t| norm_token(t.as_ref())).collect();
    let hn: Vec<String> = hypothesis.iter().map(|t| norm_token(t.as_ref())).collect();
    let r = rn.len();
    let h = hn.len();

    // cost[i][j] = edit distance between reference[..i] and hypothesis[..j]
    let mut cost = vec![vec![0usize; h + 1]; r + 1];
    for i in 0..=r {
        cost[i][0] = i;
    }
    for j in 0..=h {
        cost[0][j] = j;
    }
    for i in 1..=r {
        for j in 1..=h {
            let sub = cost[i - 1][j - 1] + usize::from(rn[i - 1] != hn[j - 1]);
            let ins = cost[i][j - 1] + 1;
            let del = cost[i - 1][j] + 1;
            cost[i][j] = sub.min(ins).min(del);
        }
    }

    let (mut i, mut j) = (r, h);
    let (mut subs, mut ins, mut dels) = (0usize, 0usize, 0usize);
    while i > 0 || j > 0 {
        let c = cost[i][j];
        if i > 0 && j > 0 && cost[i - 1][j - 1] + usize::from(rn[i - 1] != hn[j - 1]) == c {
            if rn[i - 1] != hn[j - 1] {
                subs += 1;
            }
            i -= 1;
            j -= 1;
        } else if j > 0 && cost[i][j - 1] + 1 == c {
            ins += 1;
            j -= 1;
        } else {
            dels += 1;
            i -= 1;
        }
    }

    let errors = subs + ins + dels;
    let wer = if r == 0 {
        errors as f64 // insertions only; 0.0 when the hypothesis is empty too
    } else {
        errors as f64 / r as f64
    };
    EditStats {
        substitutions: subs,
        insertions: ins,
        deletions: dels,
        ref_len: r,
        wer,
    }
}

/// Per-hypothesis WER against the list's reference.
pub fn hypothesis_wers(list: &NBestList) -> Result<Vec<EditStats>> {
    let reference = list.reference.as_ref().ok_or_else(|| Error::MissingReference {
        utt_id: list.utt_id.clone(),
    })?;
    Ok(list
        .hypotheses
        .iter()
        .map(|h| align(reference, &h.tokens))
        .collect())
}

/// Assigns dense-rank relevance grades from per-hypothesis WER.
///
/// Grade = (number of distinct WER values) - 1 - rank of this WER among the
/// distinct values sorted ascending, so the lowest WER gets the top grade
/// and equal WERs share a grade.
pub fn label_list(list: NBestList) -> Result<LabeledList> {
    let wers: Vec<f64> = hypothesis_wers(&list)?.iter().map(|s| s.wer).collect();
    let labels = grades_from_wers(&wers);
    Ok(LabeledList { list, labels })
}

/// Dense-rank grades for a slice of WER values (exposed for callers that
/// already computed alignments).
pub fn grades_from_wers(wers: &[f64]) -> Vec<u32> {
    let mut distinct: Vec<f64> = wers.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| a.to_bits() == b.to_bits());
    let top = distinct.len().saturating_sub(1) as u32;
    wers.iter()
        .map(|w| {
            let pos = distinct
                .binary_search_by(|d| d.total_cmp(w))
                .expect("wer value present in distinct set") as u32;
            top - pos
        })
        .collect()
}
