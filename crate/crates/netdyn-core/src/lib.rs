//! Event-driven simulation and dynamics analysis of networks of inhibitory
//! pacemaker neurons.
//!
//! Between spikes each potential rises independently toward its asymptote;
//! when a neuron reaches threshold it resets to zero and knocks every other
//! potential down by its inhibition weight. The crate works with the
//! post-spike return map on the section of states with a zero coordinate:
//! it computes spike times in closed form, iterates the map, measures
//! proximity to the simultaneity discontinuities, detects and refines limit
//! cycles, classifies points as stable or chaotic with Monte-Carlo measure
//! estimates, and refines the section into itinerary-keyed atoms whose
//! chains certify the cycles independently.

pub mod atoms;
pub mod classify;
pub mod error;
pub mod flow;
pub mod orbit;
pub mod params;
pub mod poincare;
pub mod sampling;
pub mod spike;
pub mod state;

pub use atoms::{
    diameter_sequence, extract_chains, indivisibility_check, refine_atoms, sample_section, Atom,
    AtomChain, AtomRefinement, ChainExtraction,
};
pub use classify::{
    classify_point, default_probe_delta, estimate_measures, estimate_measures_detailed,
    estimate_measures_with, CycleBasin, MeasureReport, PointVerdict, SampleLabel, SampleOutcome,
    SystemClass, VerdictKind,
};
pub use error::{NetError, Result};
pub use flow::{flow_at, spike_time, spike_time_generic, FlowModel, LeakyFlow};
pub use orbit::{detect_cycle, iterate_orbit, refine_cycle, Cycle, CycleCandidate, OrbitRecord};
pub use params::{NetworkParams, Tolerances};
pub use poincare::{
    discontinuity_jump_probe, itinerary, jacobian, locate_tie_on_segment, return_map,
    step_from_state, system_constants, time_gap_margin, Itinerary, Jacobian, ReturnStep,
    SquareMatrix, SystemConstants,
};
pub use spike::{apply_spike, first_spike, SpikeOutcome};
pub use state::{SectionPoint, State};
