//! Charging-station placement on a traffic network coupled with a
//! multi-region distribution network.
//!
//! Four objectives (flow coverage, charging time, travel distance and grid
//! load) are min-max normalized, combined with convex weights and minimized
//! under a station budget by a cross-entropy search over Bernoulli
//! inclusion probabilities.

pub mod error;
pub mod geojson;
pub mod metrics;
pub mod net;
pub mod objectives;
pub mod params;
pub mod record;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
pub use metrics::MetricsReport;
pub use net::{FlowSeries, TrafficNetwork};
pub use objectives::{ObjectiveBreakdown, Placement, Weights};
pub use params::{ParamOverrides, PlanningParams};
pub use record::RunRecord;
pub use scenario::Scenario;
