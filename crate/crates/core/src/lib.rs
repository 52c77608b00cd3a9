//! Post-processing of multi-robot trajectories by shortcutting.
//!
//! The crate provides a planar multi-robot world ([`world`]), synchronized
//! trajectories with retiming and metrics ([`trajectory`]), the composite,
//! prioritized and path shortcutting methods with their endpoint-selection
//! strategies ([`shortcut`]), temporal plan graph shortcutting ([`tpg`]),
//! round-robin and dynamic Thompson sampling selectors ([`strategy`]) and a
//! benchmark harness with a composite-space RRT-Connect generator ([`bench`]).

pub mod bench;
pub mod error;
pub mod shortcut;
pub mod strategy;
pub mod tpg;
pub mod trajectory;
pub mod world;

pub use error::{Error, Result};
