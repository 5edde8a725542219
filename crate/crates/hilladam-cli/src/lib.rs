//! Experiment driver for the `hilladam` toolkit: a flat `key = value`
//! configuration format, a seeded (optimizer × seed) sweep runner emitting
//! deterministic CSV artifacts, and a trace-analysis report mode.

pub mod config;
pub mod runner;
