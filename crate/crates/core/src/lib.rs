pub mod call;
pub mod contract;
pub mod env;
pub mod skill;
pub mod task;
pub mod text;
pub mod realization;
pub mod trajectory;
pub mod regulation;
pub mod intervention;
pub mod policy;
pub mod runtime;
pub mod persistence;
pub mod diagnosis;
pub mod metrics;
pub mod runner;
pub mod fixtures;
pub mod evolution;
