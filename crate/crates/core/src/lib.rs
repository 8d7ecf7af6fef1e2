//! Assortment optimization under the multinomial logit (MNL) choice model
//! with a market-share balancing constraint.
//!
//! A seller offers assortments of products to arriving customers who choose
//! according to MNL. The balancing constraint asks that every product that
//! sells at all sells at least an `α` fraction of the best-selling product.
//!
//! * [`model`]: instances, choice probabilities, sales vectors and their
//!   realization as randomized assortments.
//! * [`static_solver`]: exact static solvers, randomized and deterministic.
//! * [`constrained`]: the same problem when offered sets are restricted.
//! * [`upper_bound`]: the fluid relaxation of the inventory-constrained
//!   problem, solved approximately, exactly for `α = 1`, or by enumeration.
//! * [`policy`]: dynamic policies built from the relaxation, plus resolving
//!   heuristics.
//! * [`simulate`]: Monte-Carlo evaluation and balancing audits.
//! * [`instance_gen`]: random test problems.
//! * [`experiment`]: policy comparisons over grids of generated instances.
//! * [`lp`]: the small simplex solver used throughout.

pub mod constrained;
pub mod experiment;
pub mod instance_gen;
pub mod lp;
pub mod model;
pub mod policy;
pub mod simulate;
pub mod static_solver;
pub mod upper_bound;

pub use instance_gen::{generate, GenConfig};
pub use model::{
    check_bms_feasible, sales_to_distribution, AssortmentDistribution, Choice, DynamicInstance,
    Instance, SalesVector,
};
pub use simulate::{audit_balancing, simulate, SamplingMode, SimulationConfig, SimulationReport};
pub use static_solver::{make_gap_instance, solve_bms, solve_bms_deterministic, StaticSolution};
pub use policy::{build_policy, capped_mean_sales, PolicyKind, PolicySpec};
pub use upper_bound::{
    solve_upper_bound_alpha1, solve_upper_bound_exact, solve_upper_bound_fptas,
    UpperBoundSolution,
};
