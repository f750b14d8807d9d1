//! Exact dense dynamics of the fugacity-deformed master equation.
//!
//! Three independent routes produce the same normalized state:
//!
//! * [`propagate_nonlinear`] integrates `d rho = (L_zeta - Tr[L_zeta rho]) rho`,
//! * [`propagate_linear`] integrates `d rho = L_zeta rho` and strips the trace
//!   into `log Z`,
//! * [`jump_hierarchy`] integrates the jump-number resolved family
//!   `d rho_n = L0 rho_n + LJ rho_{n-1}` and resums it with [`grand_canonical`].

mod activity;
mod eom;
mod hierarchy;
mod observables;
mod propagate;
mod series;
mod state;
mod steady;

pub use activity::{activity_from_mean_jumps, activity_unit_fugacity};
pub use eom::{eom_residual, EomResidual};
pub use hierarchy::{
    counting_stats, grand_canonical, jump_hierarchy, jump_hierarchy_adaptive, CountingStats, JumpHierarchy,
};
pub use observables::{Observables, ObservableSet};
pub use propagate::{
    find_steady_state, propagate, propagate_linear, propagate_nonlinear, Diagnostics, Route, SteadyOptions,
    SteadyOutcome, TimeGrid, Trajectory, TrajectoryOptions,
};
pub use series::{fmt_f64, ObservableSeries};
pub use state::{cdw_pattern, cdw_state, fock_state, DensityMatrix, SanityReport};
pub use steady::{steady_activity, steady_state_eig, SteadyActivity, SteadyEigen};
