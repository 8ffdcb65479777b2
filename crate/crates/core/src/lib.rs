//! Few-shot semantic parsing toolkit.
//!
//! Maps natural-language utterances to logical forms in two stages: a
//! transition system generates abstract templates over a normalized tree
//! vocabulary, and slot decoders fill the template's typed slot variables
//! with concrete values. Training supports prototype-initialized action
//! embeddings, predicate-dropout meta-batches, attention regularization
//! toward co-occurrence/string-similarity priors, and pre-training
//! smoothing of the action softmax.
//!
//! The crate is organized around the pipeline:
//!
//! * [`lf`] — logical-form trees, template extraction and slot filling
//! * [`idiom`] — frequent-subtree mining and reversible template collapse
//! * [`transition`] — GEN/REDUCE stack machine, oracles, action inventory
//! * [`tensor`] — dense reverse-mode autodiff, Adam, checkpoints
//! * [`model`] — encoder, stack decoder, attention, slot decoders, search
//! * [`fewshot`] — prototypes, meta-batches, regularizers, the trainers
//! * [`data`] — datasets, few-shot splits, evaluation, significance tests
//! * [`synth`] — seeded grammar used to generate benchmark corpora

pub mod data;
pub mod fewshot;
pub mod idiom;
pub mod lf;
pub mod model;
pub mod synth;
pub mod tensor;
pub mod transition;

pub use lf::{
    AtomLexicon, NodeLabel, SemanticTree, SlotAssignment, SlotType, Template, Token, Tree,
    Utterance,
};
pub use transition::{Action, ActionInventory, BodyItem, ParserState, Rule};
