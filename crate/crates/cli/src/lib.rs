//! Command-line and HTTP front ends for the protocol engine.
//!
//! [`engine::Engine`] holds the operations; [`cli`] and [`http`] only parse
//! input into engine calls, so both paths write the same ledger records.

pub mod cli;
pub mod engine;
pub mod error;
pub mod export;
pub mod generator;
pub mod http;
pub mod settings;
