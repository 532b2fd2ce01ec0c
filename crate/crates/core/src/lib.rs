//! Ordinal partition networks for scalar time series.
//!
//! A series is mapped to its sequence of ordinal patterns (forward or
//! time-reversed), the patterns become nodes of a weighted transition network,
//! and three entropy quantifiers summarise the network. Surrogate ensembles
//! and Mann-Whitney sweeps over `(m, tau)` turn the quantifiers into tests of
//! nonlinearity and time irreversibility.

pub mod demo;
pub mod dynsys;
pub mod error;
pub mod grid;
pub mod ordinal;
pub mod pipeline;
pub mod plot;
pub mod preprocess;
pub mod quantifiers;
pub mod rng;
pub mod series;
pub mod stats;
pub mod surrogates;

pub use error::{Error, Result};
pub use ordinal::{build_network, decode_pattern, encode_pattern, extract_patterns, OrdinalNetwork, OrdinalPattern, PatternSequence};
pub use quantifiers::{quantify, QuantifierTriple, Statistic};
pub use series::{Direction, EmbeddingParams, GroupedDataset, TimeSeries};
