//! Command line front end and HTTP navigation service for `maro-core`.

pub mod cli;
pub mod service;
pub mod tables;
