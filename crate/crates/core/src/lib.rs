//! Keyphrase mining and spatiotemporal aggregation for geotagged,
//! timestamped text, plus the query store and tag-cloud geometry used to
//! serve the results.

pub mod amount;
pub mod corpus;
pub mod geocode;
pub mod keyphrase;
pub mod layout;
pub mod pipeline;
pub mod store;
pub mod synth;
pub mod textprep;
pub mod timebin;
