//! Corpus files, normalization and synthetic data.

pub mod corpus;
pub mod normalize;
pub mod synth;

pub use corpus::{
    parse_corpus, parse_corpus_with, serialize_corpus, Corpus, CorpusError, ParseOptions,
};
pub use normalize::{denormalize, denormalize_sample, normalize, NormalizationRecord, SlotScale};
pub use synth::{generate_synthetic, PlantedMeta, SynthSpec, TopologyPlan};
