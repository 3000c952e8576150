//! Centralized management, annotation and quality control of word-level
//! annotated parallel corpora.
//!
//! A project lives in an append-only event log ([`store`]) and is served
//! over HTTP ([`service`]); the `corpusdesk` binary wraps both the server
//! and an administrative client ([`cli`]).

pub mod adapt;
pub mod admin;
pub mod annotation;
pub mod cli;
pub mod corpus;
pub mod qa;
pub mod service;
pub mod store;
pub mod translate;
