//! Tree expansion of `log Z_p`: labeled trees and their orientations,
//! interpolated replica covariances, and the Monte Carlo evaluation of the
//! `w` and field integrals.

mod covariance;
mod engine;
mod trees;

pub use covariance::{covariance, sample_replicas, ReplicaCovariance, ReplicaSampler, PSD_TOLERANCE};
pub use engine::{
    log_z_partial, order_one_direct, order_one_ibp_check, order_term, tree_integrand, tree_term,
    LveConfig, LvePartialSum, MCEstimate, WRule, CUT_PROXIMITY, MAX_LVE_ORDER, MAX_REDRAW_FRACTION,
    TENSOR_MAX_VERTICES, TENSOR_NODES_PER_AXIS,
};
pub use trees::{decode_prufer, enumerate_trees, orient_tree, OrientedTree, Tree, MAX_TREE_VERTICES};
