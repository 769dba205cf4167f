//! Multi-valued regulatory networks under synchronous update, their trace
//! semantics, and the search for coarser abstractions that preserve those
//! traces.
//!
//! Models are read from a small text format ([`parser`]), simulated exactly
//! ([`semantics`]), related to coarser models by state mappings
//! ([`abstraction`]) and searched exhaustively for abstractions ([`search`]).

pub mod abstraction;
pub mod bundled;
pub mod model;
pub mod parser;
pub mod report;
pub mod search;
pub mod semantics;
pub mod state;
pub mod trace;

pub use abstraction::{
    abstract_language, abstract_trace, check_abstraction, check_exact, enumerate_state_mappings,
    transfer_reachability, AbstractedLanguage, AbstractedTrace, AbstractionError,
    AbstractionMapping, EntityMapping, ExactVerdict, MappingError, StateMapping, Verdict,
};
pub use model::{Entity, Limits, ModelError, Mvn, Table};
pub use parser::{
    parse_mapping, parse_model, parse_model_document, serialize_mapping, serialize_model,
    ParseError,
};
pub use search::{
    abstract_tables, brute_force_abstractions, find_abstractions, find_abstractions_all_mappings,
    find_exact, mapping_families, CandidateTableSet, SearchError, SearchOptions, SearchReport,
};
pub use semantics::{attractors, language, reachable, successor, trace_from, StateGraph};
pub use state::GlobalState;
pub use trace::{attractor_of, Attractor, Trace, TraceSet};
