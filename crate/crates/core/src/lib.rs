//! Packet-level discrete-event simulation of FIFO, priority and weighted
//! round-robin queuing on step-topology networks carrying voice, video and
//! bulk FTP traffic.

pub mod kernel;
pub mod metrics;
pub mod qdisc;
pub mod report;
pub mod scenario;
pub mod sim;
pub mod topology;
pub mod traffic;

pub use kernel::{EventCalendar, SimTime};
pub use metrics::MetricStore;
pub use qdisc::{Qdisc, QdiscConfig, QdiscKind, TrafficClass, Verdict};
pub use scenario::{parse_scenario, run_scenario, RunResult, ScenarioConfig};
pub use sim::Simulation;
pub use topology::Topology;
