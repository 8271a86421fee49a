pub mod cli;
pub mod config;
pub mod corpus;
pub mod evaluator;
pub mod gate;
pub mod judge;
pub mod labels;
pub mod location_rules;
pub mod phrase;
pub mod pipeline;
pub mod semantic_rules;
pub mod service;
pub mod similarity;
