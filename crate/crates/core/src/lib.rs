//! Requirements formalization and runtime assurance over LTLf.
//!
//! The pipeline runs from Restricted English requirement statements
//! ([`re_lang`]) through LTLf ([`ltlf`]) to minimized automata
//! ([`automata`]). Requirements and their candidate readings live in
//! [`reqstore`]; [`authoring`] asks a provider for candidates. The automata
//! back set-level analysis ([`analysis`]),
//! interactive disambiguation ([`elicitation`]), coverage-driven test
//! generation ([`testgen`]) and monitoring of perception score streams
//! ([`monitor`]). [`semcov`] computes feature coverage and concept profiles
//! over score matrices, and [`project`] persists everything as one JSON
//! document.

pub mod analysis;
pub mod authoring;
pub mod automata;
pub mod elicitation;
pub mod exec;
pub mod ltlf;
pub mod monitor;
pub mod project;
pub mod re_lang;
pub mod reqstore;
pub mod semcov;
pub mod sweep;
pub mod testgen;
