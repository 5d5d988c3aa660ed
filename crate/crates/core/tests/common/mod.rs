//! Shared helpers for the integration tests: synthetic corpora and the
//! independent reference implementations used as oracles.

#![allow(dead_code)]

pub mod oracles;
pub mod synth;
