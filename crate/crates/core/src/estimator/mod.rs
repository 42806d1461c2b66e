//! Forward-reverse estimation of bridge expectations.

mod binning;
mod bridge;

pub use binning::{fast_double_sum, naive_double_sum, DoubleSum};
pub use bridge::{
    estimate_bridge, estimate_z_vector, AdditiveFunctional, BridgeFunctional, BridgeQuery, FrEstimate, GapDiagnostics,
    GridFunctional, ZEstimate, DENOMINATOR_FLOOR,
};
