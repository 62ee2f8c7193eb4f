//! Configuration, serialization and plotting behind the `radial` binary.

pub mod config;
pub mod output;
pub mod svg;
