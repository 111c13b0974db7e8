//! Numerical solution of the SI and SIR epidemic models.
//!
//! * [`models`]: right-hand sides, parameters and the closed-form SI solution.
//! * [`integrators`]: Euler, classical RK4 and Euler/trapezoid
//!   predictor-corrector on uniform grids.
//! * [`refsolver`]: adaptive Dormand-Prince 5(4) with dense output, used as
//!   the high-accuracy reference where no closed form exists.
//! * [`metrics`]: R² between trajectories.
//! * [`accuracy`]: end-to-end accuracy sweeps and convergence orders.
//! * [`bench`]: pure-compute timing of the fixed-step solvers.
//! * [`report`]: text tables, CSV and JSON.
//! * [`checks`]: golden values and self-checks.

pub mod accuracy;
pub mod bench;
pub mod checks;
pub mod integrators;
pub mod metrics;
pub mod models;
pub mod refsolver;
pub mod report;

pub use integrators::{make_grid, Grid, Method, Trajectory};
pub use models::{ModelKind, ModelSpec, Problem, SiParams, SiState, SirParams, SirState};
