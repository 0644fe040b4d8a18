//! Distributed finite-time estimation and Nussbaum-gain fault-tolerant
//! control for heterogeneous multi-agent systems.

pub mod cli;
pub mod controller;
pub mod estimator;
pub mod expr;
pub mod graph;
pub mod manipulator;
pub mod numerics;
pub mod plant;
pub mod scenario;
pub mod task_controller;
pub mod verify;
