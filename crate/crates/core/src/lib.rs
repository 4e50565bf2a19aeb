//! Calibrated, distributionally robust audio-visual preference optimization
//! on toy conditional policies, plus the multiple-choice evaluation and
//! benchmark-construction machinery that goes with it.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, clients and
//! the command line live in the `avpref` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod benchbuilder;
pub mod evalharness;
pub mod numeric;
pub mod policy;
pub mod prefcore;
pub mod rng;
pub mod task;
pub mod verify;

pub use task::TaskKind;
