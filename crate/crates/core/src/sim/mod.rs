//! Closed-loop simulation harness: the cart benchmark, disturbance
//! profiles, run configuration, the loop itself, and trace I/O.

pub mod cart;
pub mod config;
pub mod export;
pub mod profiles;
pub mod replay;
pub mod run;

pub use config::{Mode, ProfileSpec, Setup, SimConfig, setup};
pub use export::{metrics_to_text, trace_to_csv, write_run};
pub use profiles::{DisturbanceProfile, ProfileBounds, ProfileKind, build_profile};
pub use replay::{ReplayReport, parse_trace_csv, replay_estimation};
pub use run::{Metrics, RunResult, TraceRecord, TriggerLog, run_closed_loop, run_with_setup};
