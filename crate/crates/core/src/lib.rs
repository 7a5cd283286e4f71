//! Person-mention detection and entity linking for biographical Wikipedia
//! pages, with token-level evaluation against gold annotations.

pub mod coref;
pub mod corpus;
pub mod eval;
pub mod linker;
pub mod mentions;
pub mod pipeline;
pub mod tokenizer;
