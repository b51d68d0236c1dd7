//! Exact-arithmetic workbench for the finite Monge-Kantorovich transport
//! problem and for rotation-based dual-gap constructions.
//!
//! Everything here is computed over arbitrary-precision rationals; there are
//! no floating-point code paths. The crate is organized around four layers:
//!
//! * [`number_tower`] — big-integer/rational arithmetic, circle arithmetic
//!   modulo 1, and prime towers `m_1, m_2, ...` whose partial products `M_n`
//!   define the grid scales.
//! * [`grid_dynamics`] — the `M_n`-cell grid, rotation maps as cell
//!   permutations, orbit counting and the step potentials `phi`/`psi`.
//! * [`example_builder`] — the inductive interval-permutation constructions
//!   with their good/singular ledgers, corrected potentials, build-up and
//!   concentration profiles.
//! * [`ot`] — an exact min-cost-flow transport solver with dual potentials,
//!   cyclical-monotonicity checks, the marginal perturbation map, and the
//!   restricted/relaxed problem variants.
//!
//! [`reports`] carries the JSON/CSV emission types shared by the CLI, and
//! [`acceptance`] hosts the self-check suite driven by `kantlab check`.

pub mod acceptance;
pub mod example_builder;
pub mod floor_sum;
pub mod grid_dynamics;
pub mod number_tower;
pub mod ot;
pub mod prop41;
pub mod rational;
pub mod reports;

pub use example_builder::{BuildReport, IntervalPermutation, SingularLedger};
pub use grid_dynamics::{CellIndex, Grid, RegionFlag, StepFunction};
pub use number_tower::{CirclePoint, PrimeTower};
pub use ot::{CostMatrix, Potentials, SupportSet, TransportPlan};
pub use rational::Rat;

/// Default cap on dense per-cell arrays; overridden by `KANTLAB_CELL_CAP`.
pub const DEFAULT_CELL_CAP: u64 = 10_000_000;

/// Resolve the dense-array cell cap from the environment.
pub fn cell_cap() -> u64 {
    std::env::var("KANTLAB_CELL_CAP")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_CELL_CAP)
}
