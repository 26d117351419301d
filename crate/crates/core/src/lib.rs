//! Augustin information, constrained Augustin capacity, Augustin-Legendre
//! and Rényi-Gallager duals, and non-asymptotic sphere packing bounds for
//! finite-alphabet channels.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod dual;
pub mod error;
pub mod ext;
pub mod fw;
pub mod io;
pub mod mean;
pub mod measures;
pub mod oracle;
pub mod polytope;
pub mod quad;
pub mod random;
pub mod sphere;

pub use capacity::{
    capacity, capacity_curve, capacity_product_check, center_continuity_check,
    cost_capacity_concavity_check, ehb_capacity_residual, CapacityConfig, CapacityResult,
    CapacitySolver, ProductCheck,
};
pub use dual::{
    al_capacity, al_capacity_product_check, al_information, al_radius, rg_capacity, rg_information,
    rg_joint_divergence, rg_mean, solve_dual, DualResult, Multiplier,
};
pub use error::{Error, Result};
pub use ext::ExtReal;
pub use io::{format_f64, parse_channel, read_channel, read_json, to_json, ChannelFile};
pub use mean::{
    augustin_information, augustin_information_product, augustin_mean, augustin_operator,
    ehb_residual, order_one_mean, renyi_mean_seed, solve_augustin_mean, AugustinMeanResult,
};
pub use measures::{
    conditional_divergence, product_channel, renyi_divergence, tilted_measure, total_variation,
    Channel, FiniteDist, FiniteMeasure, Order,
};
pub use oracle::{exact_code_pe, max_over_p_grid, min_over_q_grid, minimax_cross_check, GridSpec};
pub use polytope::{ConstraintSet, FeasibleSet};
pub use sphere::{
    averaged_capacity, averaged_exponent, avsp_gap_check, cc_augustin_bound,
    cc_augustin_bound_with, gamma_constant, gamma_from_capacities, gamma_tilde, ht_bound_check,
    ht_exhaustive, root_find_alpha_m, sphere_packing_exponent, stationary_bound,
    stationary_bound_with, AveragedCapacity, BoundParams, BoundReport, BoundVerdict, CapacityCurve,
    ConstrainedCapacity, ExponentPoint, HtReport, HtSummary, HtVerdict, ProductCostCapacity,
    ReferenceCheck, ReferenceFamily,
};
