pub mod analysis;
pub mod cli;
pub mod corpus;
pub mod judger;
pub mod metrics;
pub mod orchestrator;
pub mod retrieval;
