//! Reports, corpus runner and CLI commands.

pub mod cli;
pub mod corpus;
pub mod report;
