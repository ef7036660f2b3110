//! Exploratory search over a scientific paper corpus.
//!
//! The pipeline turns a JSONL corpus into three browsable structures:
//!
//! * an entity collocation graph ([`collocation`]),
//! * a faceted paper index ([`facets`]),
//! * overlapping research groups mined from co-authorship ([`coauthor`],
//!   [`community`]), profiled ([`profile`]), linked ([`links`]) and ranked
//!   against queries ([`search`]).
//!
//! [`index`] builds all of it in one pass and persists it as a single file.

pub mod coauthor;
pub mod collocation;
pub mod community;
pub mod config;
pub mod corpus;
pub mod facets;
pub mod index;
pub mod links;
mod pair_map;
pub mod profile;
pub mod search;
pub mod synthetic;
pub mod tagger;

pub use config::BuildConfig;
pub use index::{build_index, IndexError, IndexSnapshot, FORMAT_VERSION};
