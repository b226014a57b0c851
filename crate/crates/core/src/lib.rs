//! Probabilistic reachability for stochastic control systems.
//!
//! A stochastic system `dX = f(t,X,u) dt + σ(t,X,u) dW` is analysed by
//! splitting its reachable set into two independent pieces:
//!
//! * a deterministic over-approximation of the reachable set of
//!   `ẋ = f(t,x,u)` (contraction balls or interval embedding systems, see
//!   [`reach`]), and
//! * a high-probability bound on the deviation `‖X_t − x_t‖_{2,P}` obtained
//!   from a contraction certificate `(P, c_P, d_P)` (see [`certify`] and
//!   [`stochbound`]).
//!
//! The Minkowski sum of the two ([`probreach`]) contains `X_t` with
//! probability at least `1 − δ`. [`validate`] checks the resulting sets by
//! Monte Carlo simulation of the SDE.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command-line front end live in the `stochreach-cli` crate.

#![no_std]
// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod certify;
pub mod dynamics;
mod error;
pub mod interval;
pub mod linalg;
pub mod pendulum;
pub mod probreach;
pub mod reach;
pub mod setcalc;
pub mod stochbound;
pub mod terms;
pub mod validate;

pub use error::{Error, Result};

/// Dense column vector used for states, inputs and directions.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used for weights, Jacobians and transforms.
pub type Matrix = nalgebra::DMatrix<f64>;

/// Default absolute tolerance for set membership decisions.
pub const DEFAULT_TOL: f64 = 1e-9;

pub mod prelude {
    pub use crate::certify::{
        compute_dp, search_certificate, verify_certificate, ContractionCertificate, Provenance, SearchOptions,
        VertexHull,
    };
    pub use crate::dynamics::{integrate_ode, simulate_sde, InputSignal, SystemModel, Trajectory};
    pub use crate::probreach::{prob_reach_contraction, prob_reach_interval, ProbReachSet};
    pub use crate::reach::{contraction_tube, embed_integrate, InclusionFunction};
    pub use crate::setcalc::{Ellipsoid, IntervalBox, MinkowskiSet, Parallelotope, ReachSet, WeightedNorm};
    pub use crate::stochbound::{expectation_bound, radius};
    pub use crate::validate::{monte_carlo_coverage, CoverageReport, InitialSampler};
    pub use crate::{Error, Matrix, Result, Vector};
}
