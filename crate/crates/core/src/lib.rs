//! FR2 (mmWave) downlink link-adaptation simulator and drive-test analytics.
//!
//! The crate is organised bottom-up:
//!
//! - [`nr_tables`]: PDSCH MCS tables 1/2/4, CQI tables and transport block size.
//! - [`channel`]: UMi line-of-sight path loss, shadowing and Rician fast fading.
//! - [`phy`]: SINR to BLER abstraction, CRC draws and CQI selection.
//! - [`link_adapt`]: inner/outer-loop link adaptation and MCS table switching.
//! - [`mac`]: TDD airtime, HARQ bookkeeping, per-slot scheduling and run metrics.
//! - [`scenario`]: mobility trajectories, the slot loop and distance sweeps.
//! - [`fieldstats`]: aggregates over slot-record CSVs (simulated or measured).
//! - [`config`] and [`cli`]: run configuration files, presets and the command line.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod fieldstats;
pub mod link_adapt;
pub mod mac;
pub mod nr_tables;
pub mod phy;
pub mod rng;
pub mod scenario;
mod svg;

pub use error::{Error, Result};
pub use nr_tables::{CqiEntry, CqiTableId, McsEntry, McsTableId, TbsInput};
