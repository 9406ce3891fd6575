//! Multistage stochastic reserve and unit commitment with continuous-time
//! generation and load trajectories.
//!
//! The pipeline turns raw net-load sample days into a day-ahead commitment,
//! dispatch and reserve plan, then scores that plan against held-out days:
//!
//! 1. [`bernstein`] fits each day with a Bernstein-basis spline (one
//!    polynomial per hour, configurable continuity across knots).
//! 2. [`scenario`] reduces the fitted training days to a multistage scenario
//!    tree by recursive k-means on the per-hour coefficient vectors.
//! 3. [`milp`] builds the mixed-integer model over the tree: continuity,
//!    reserve capacity, balance-with-margin, generation/ramping limits with
//!    late on/off relaxation, minimum on/off, and the expected-cost objective.
//! 4. [`solver`] solves the model with a bounded-variable revised simplex and
//!    branch-and-bound, or exports it as an MPS file for external solvers.
//! 5. [`evaluate`] replays held-out trajectories: follow the nearest tree
//!    path, derive the serviceable band, detect violations, decompose costs.
//!
//! The discrete-time benchmark (DT-MSRUC) is the same machinery run with
//! first-order polynomials and value-only continuity.

// Constraint generation and linear algebra here are written in indexed
// form on purpose; these lints push toward iterator chains that obscure it.
#![allow(clippy::needless_range_loop, clippy::type_complexity, clippy::too_many_arguments)]

pub mod bernstein;
pub mod cli;
pub mod evaluate;
pub mod fleet;
pub mod linalg;
pub mod milp;
pub mod scenario;
pub mod solver;
pub mod svg;
pub mod synth;
