//! Minimization of `Q̃`, perturbation sweeps around the extremal family and
//! empirical stability constants.

mod asp;
mod coercivity;
mod flow;
mod interior;
mod sweep;

pub use asp::{asp_gap_probe, GapRow, GapTable, GAP_ALPHAS, GAP_TIMES};
pub use coercivity::{coercivity, coercivity_prediction, CoercivityOptions, CoercivityRecord, CoercivityResult};
pub use flow::{minimize_q, minimize_q_composite, CompositeTrajectory, FlowIterate, FlowOptions, FlowTrajectory};
pub use interior::{
    decomposition, interior_sweep, InteriorRecord, InteriorSummary, InteriorSweepOptions, InteriorSweepResult,
};
pub use sweep::{
    directional_limit, fit_sweep, stability_sweep, write_csv, SweepFit, SweepOptions, SweepRecord, SweepResult,
};
