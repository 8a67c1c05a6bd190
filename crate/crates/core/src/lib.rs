pub mod analysis;
pub mod bench;
pub mod cfg;
pub mod config;
pub mod checker;
pub mod frontend;
pub mod repair;
mod serde_util;
pub mod service;
pub mod solver;
pub mod store;
pub mod symexec;
