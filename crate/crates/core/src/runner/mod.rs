//! Experiment entry points behind the command-line verbs.

mod commands;
mod config;
mod phantom;

pub use commands::*;
pub use config::{
    CounterexampleSection, DiagnoseSection, ExperimentConfig, PhantomSection, ProblemSection, RegPathSection,
    RegulariserSection, SolverSection, TrainSection,
};
pub use phantom::{make_phantom, Phantom, PhantomKind, MINI_SHEPP};
