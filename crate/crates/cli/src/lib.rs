//! Scenario-driven front end for the conormal-orbit toolkit: declarative
//! configs, the built-in scenario presets, the reproduction suite, and
//! deterministic CSV artifacts.

pub mod config;
pub mod output;
pub mod reproduce;
pub mod runner;
pub mod scenario;
