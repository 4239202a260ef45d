//! Learning-to-plan toolkit for numeric planning.
//!
//! The pipeline runs PDDL text through [`pddl`] and [`task`] into a ground
//! task, encodes states as graphs ([`nilg`]), turns graphs into feature
//! vectors ([`ccwl`]), fits linear heuristics ([`training`]) and uses them in
//! [`search`]. [`benchgen`] produces seeded instances to train and test on.

pub mod benchgen;
pub mod ccwl;
pub mod fixtures;
pub mod model;
pub mod nilg;
pub mod pddl;
pub mod search;
pub mod sexpr;
pub mod task;
pub mod training;
