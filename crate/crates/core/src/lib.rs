//! Multi-criteria adjustable robust optimization (MARO).
//!
//! Computes worst-case Pareto fronts of two-stage problems under parametric
//! uncertainty: here-and-now variables are fixed up front, wait-and-see
//! variables adapt to each scenario of a finite reference discretization.
//! Worst-case scenarios are selected adaptively, fronts are sandwiched with
//! weighted-sum solves, and each robust design is priced against the nominal
//! front for interactive navigation.

pub mod adaptive;
pub mod artifact;
pub mod case_study;
pub mod discretization;
pub mod error;
pub mod expr;
pub mod front;
pub mod navigation;
pub mod nlp;
mod par;
pub mod pipeline;
pub mod price;
pub mod problem;
pub mod problem_file;
pub mod replicated;

pub use error::{MaroError, Result};
