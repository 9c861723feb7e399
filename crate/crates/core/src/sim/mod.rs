//! Deterministic tick simulator.
//!
//! Each step first advances tokens along flow arcs (one hop per token,
//! lowest arc id first), then applies accept policies, fires triggers whose
//! source stage was entered on the previous tick, and finally fires any
//! junction whose inputs have all latched. Records produced by a step carry
//! the new tick; a step with no records means quiescence.

mod engine;
mod events;
mod scenario;
mod trace;

pub use engine::{eval_guard, init, run, Location, SimError, SimState, Simulation, Token, UnresolvedName};
pub use events::{extract_events, record_precedes, Event, EventError, Process};
pub use scenario::{InitialToken, Scenario};
pub use trace::{Action, EventTrace, TraceReadError, TraceRecord};
