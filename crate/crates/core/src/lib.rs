//! Packet-level uplink capacity simulator for LoRa and LoRa-E (LR-FHSS).
//!
//! - [`params`]: regional channel plans, data-rate profiles, airtime
//! - [`hopping`]: hop hash, hopping sequences, carrier frequencies
//! - [`traffic`]: duty-cycle limited Poisson arrivals
//! - [`engine`]: emission placement, collision sweep, decoding, metrics
//! - [`experiments`]: device-count sweeps, crossovers, capacity, CSV output

pub mod engine;
pub mod experiments;
pub mod hopping;
pub mod params;
pub mod traffic;

pub use engine::{run, Scenario, ScenarioResult};
pub use params::{dr_profile, DataRateProfile, DrAlias, Region, RegionalPlan};
