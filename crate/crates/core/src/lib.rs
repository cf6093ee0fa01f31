//! Simulation of an OpenFlow network in which aggregated-flow discovery
//! entries are balanced across switch flow tables and per-host-pair statistics
//! are exported as NetFlow v5.

pub mod assignment;
pub mod discovery;
pub mod experiment;
pub mod export;
pub mod prefix;
pub mod scheduler;
pub mod sim;
pub mod topology;
pub mod workload;

pub use assignment::{assign_balanced, assign_baseline, load_of, Assignment, AssignmentError, LoadModel};
pub use discovery::{AggregatedFlow, DiscoveryPlan, FlowToObs, RouteMap};
pub use export::{Exporter, SourceMode, StatsRecord};
pub use prefix::{Ipv4Prefix, PrefixError, Subnet};
pub use scheduler::{Scheduler, TimeoutPolicy};
pub use topology::{Route, SwitchId, Topology, TopologyError};
pub use workload::{Schedule, WorkloadSpec};
