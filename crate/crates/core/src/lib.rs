//! Contact plan design for GNSS inter-satellite links serving space users.

pub mod capacity;
pub mod cpd;
pub mod ephemeris;
pub mod error;
pub mod fcp;
pub mod link_budget;
pub mod metrics;
pub mod milp;
pub mod oracle;
pub mod plan;
pub mod presets;
pub mod scenario;
pub mod service;
pub mod time;
pub mod validate;
pub mod visibility;

pub use error::{CpdError, Result};
pub use scenario::{load_scenario, NodeId, NodeKind, Scenario, UserRequirement};
pub use time::{SlotCoord, TimeGrid};
