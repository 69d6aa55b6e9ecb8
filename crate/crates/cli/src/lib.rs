//! Scenario runner for the flatpencil toolkit.
//!
//! Scenarios are JSON documents naming a check or construction and its
//! inputs; [`runner::run`] executes one and returns a [`runner::Report`].

pub mod catalog;
pub mod output;
pub mod runner;
pub mod scenario;
