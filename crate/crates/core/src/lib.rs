//! Pipeline library for collocation-aware hierarchical topic modeling:
//! corpus normalization, TF-IDF collocation merging, binary bag-of-words,
//! level-wise latent tree learning, topic extraction, and document
//! co-occurrence coherence scoring.

pub mod bow;
pub mod coherence;
pub mod colloc;
pub mod corpus;
pub mod error;
pub mod hlta;
pub mod ltm;
pub mod synth;
pub mod topics;

pub use bow::DocTermMatrix;
pub use coherence::CoherenceReport;
pub use colloc::{PreprocessParams, TokenStats, Vocabulary};
pub use corpus::{Corpus, CorpusFormat, NormalizationConfig, RawDocument, TokenizedDocument};
pub use error::{Error, Result};
pub use hlta::{LcmFit, LearnParams, LevelData};
pub use ltm::{Assignment, LatentTreeModel, Topic};
pub use topics::{MembershipTable, TopicHierarchy};
