//! Map IP-layer links observed in traceroutes onto the submarine cables they
//! likely traverse.
//!
//! The pipeline runs in stages: link extraction ([`ingest`]), multi-source
//! geolocation ([`geoloc`]), link classification ([`classify`]), landing
//! point search ([`geomap`]), ownership inference ([`ownermap`]), scoring
//! and pruning ([`aggregate`]), and reporting ([`analyze`]). [`pipeline`]
//! wires the stages to their on-disk artifacts.

pub mod aggregate;
pub mod analyze;
pub mod classify;
pub mod geoloc;
pub mod geomap;
pub mod ingest;
pub mod model;
pub mod ownermap;
pub mod pipeline;
pub mod synth;
