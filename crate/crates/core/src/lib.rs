//! Core algorithms for N-best list rescoring.
//!
//! The crate is organised around the stages of a rescoring pipeline:
//!
//! * [`nbest`] — utterances, hypotheses, edit-distance alignment and
//!   WER-derived relevance labels,
//! * [`ngram`] — a backoff n-gram language model with interpolated
//!   Witten-Bell smoothing,
//! * [`lda`] — a latent Dirichlet allocation topic model trained by
//!   collapsed Gibbs sampling, plus the mixture unigram LM it induces,
//! * [`features`] — feature schemas, per-hypothesis vector assembly and
//!   z-score normalization,
//! * [`ranker`] — pairwise SVM training over feature differences and
//!   linear rescoring/decoding,
//! * [`eval`] — NDCG and word-error-rate reports, and per-feature
//!   ablation.
//!
//! Everything here is deterministic given explicit seeds and performs no
//! IO; file formats and the command-line surface live in the companion
//! `rescore-cli` crate. The crate is `no_std`-compatible (with `alloc`)
//! when built without the default `std` feature.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod eval;
pub mod features;
pub mod lda;
pub mod nbest;
pub mod ngram;
pub mod ranker;
pub(crate) mod util;

pub use error::{Error, Result};
