//! Grading engine and game mechanics for UML use case diagram exercises.
//!
//! - [`parser`] reads Apollon-style diagram documents.
//! - [`evaluator`] matches a diagram against reference solutions and reports
//!   completeness plus syntactic and semantic diagnostics.
//! - [`game`] turns evaluation reports into XP, mood, levels and rankings.
//! - [`authoring`] loads and validates teacher-written exercises.
//! - [`store`] and [`service`] persist state and expose the HTTP API.

pub mod authoring;
pub mod evaluator;
pub mod game;
pub mod model;
pub mod parser;
pub mod service;
pub mod store;

pub use evaluator::{evaluate, evaluate_exercise, EvaluationReport};
pub use model::{DiagramDocument, ExerciseSpec, ReferenceSolution};
pub use parser::{parse_document, serialize_document, ParseError};
