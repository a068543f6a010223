//! Test-input generation for SimpleDB models.
//!
//! The pipeline parses a model ([`frontend`]), enumerates control-flow paths
//! ([`cfg`]), turns one path into a relational constraint system
//! ([`symexec`], [`ir`]), finds a bounded model of it ([`solver`]) and replays
//! the decoded input through the reference interpreter ([`interp`]) to confirm
//! the path is followed ([`testgen`]).

pub mod cfg;
pub mod frontend;
pub mod interp;
pub mod ir;
pub mod randgen;
pub mod solver;
pub mod symexec;
pub mod testgen;
pub mod word;

pub use word::Bitwidth;
