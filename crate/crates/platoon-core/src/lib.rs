//! Joint optimization of routing, charging stops, schedules and platoon
//! formation (with en-route leader swapping) for electric truck fleets on a
//! road network.
//!
//! The crate is organized around a small set of layers:
//!
//! * [`network`] — immutable road networks and shortest-path services.
//! * [`instance`] / [`generate`] — problem data, file I/O, seeded generators.
//! * [`plan`] — the canonical solution encoding with exact schedule
//!   derivation, feasibility checking and cost evaluation.
//! * [`preprocess`] — candidate charging-station selection and the
//!   warm-start initial solution.
//! * [`alns`] — the adaptive large neighborhood search.
//! * [`milp`] — the exact model: LP-file export plus a brute-force oracle
//!   for desk-scale instances.
//! * [`fixtures`] — the worked example networks used across tests and the
//!   experiment harness.
//!
//! Units: distances are hours of driving at the instance's constant speed;
//! energy is measured in km-equivalent range units (one unit moves a leading
//! truck one km). Instance files use km and kWh; the loader converts.

pub mod alns;
pub mod fixtures;
pub mod generate;
pub mod instance;
pub mod milp;
pub mod network;
pub mod plan;
pub mod preprocess;

pub use instance::{Instance, Parameters, TruckDelivery, TruckIdx};
pub use network::{NodeIdx, RoadNetwork};
pub use plan::{CostBreakdown, Plan, Schedule, SegmentRecord, Violation};
