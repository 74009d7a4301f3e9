//! Configuration files, checkpoints and experiment subcommands for the
//! `evoadam` binary.

pub mod checkpoint;
pub mod cli;
pub mod commands;
pub mod config;
