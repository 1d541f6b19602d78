//! Configuration, execution and reporting for horolab experiments.

pub mod config;
pub mod experiments;
pub mod report;
pub mod runner;
pub mod suites;
