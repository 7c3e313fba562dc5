//! Zero-shot information extraction pipelines.
//!
//! Output classes are described only by a name and a free-text description.
//! A [`Pipeline`] chains up to three stages (mention detection, linking and
//! relation extraction) over [`Document`]s; the built-in baselines score
//! text against descriptions with deterministic hashed trigram embeddings.
//!
//! ```
//! use zeroshot_ie::{ComponentSpec, Entity, Pipeline, PipelineConfig};
//!
//! let config = PipelineConfig {
//!     entities: vec![Entity::new("Company", "").with_vocabulary(["IBM"])],
//!     linker: Some(ComponentSpec::new("dictionary-linker")),
//!     ..Default::default()
//! };
//! let pipeline = Pipeline::new(config).unwrap();
//! let doc = pipeline.annotate_one("IBM headquarters are located in Armonk.").unwrap();
//! assert_eq!(doc.span_text(&doc.entities[0]), "IBM");
//! ```

pub mod components;
pub mod ensemble;
mod error;
pub mod evaluation;
pub mod model;
pub mod pipeline;
pub mod text;
pub mod viz;

pub use components::{Linker, MentionsExtractor, Registry, RelationsExtractor};
pub use ensemble::{ensemble_predict, vote_filter, EnsembleConfig, EnsembleLinker, VoteTally};
pub use error::{Error, Result};
pub use model::{
    doc_from_text, span_overlaps, validate_config, ComponentSpec, Document, Entity, PipelineConfig, Relation,
    RelationTriple, Span,
};
pub use pipeline::{Pipeline, StageCounts, StageTiming, Stages};
