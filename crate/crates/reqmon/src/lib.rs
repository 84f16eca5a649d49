//! Command line and HTTP service for requirement formalization, validation,
//! test generation and perception monitoring.

pub mod cli;
pub mod error;
pub mod service;
pub mod workflow;
