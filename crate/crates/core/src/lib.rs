//! Feature guided heuristic search for task planning with tool construction.

pub mod bench;
pub mod cli;
pub mod episode;
pub mod feature;
pub mod heuristics;
pub mod pddl;
pub mod perception;
pub mod search;
