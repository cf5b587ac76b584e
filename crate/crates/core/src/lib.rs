//! Simulator and benchmark harness for discovering changes between an outdated
//! prior occupancy map and the current environment.
//!
//! The pipeline: [`layout`] synthesizes semantic floorplans and manipulated
//! alternatives, [`world`] simulates a noisy agent with a depth sensor, [`mapping`]
//! fuses scans into a belief initialized from the prior, [`nav`] chooses goals and
//! drives the agent, and [`eval`] scores how many changes were recovered.

pub mod ccl;
pub mod episode;
pub mod error;
pub mod eval;
pub mod harness;
pub mod layout;
pub mod mapping;
pub mod nav;
pub mod raycast;
pub mod som;
pub mod world;

pub use error::{Error, Result};
