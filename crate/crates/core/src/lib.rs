//! Numerical laboratory for the multidimensional viscous Burgers equation
//!
//! ```text
//! ∂_t u + (u·∇)u = νΔu + f,   x ∈ T^d = [0, L)^d,
//! ```
//!
//! built on a pseudospectral representation with exact heat-semigroup multipliers.

// `!(x > 0.0)` is how parameter checks reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bkm;
pub mod certificate;
pub mod error;
pub mod field;
pub mod force;
pub mod generators;
pub mod grid;
pub mod ifrk4;
pub mod interp;
pub mod io;
pub mod kpz;
pub mod mild;
pub mod norms;
pub mod ops;
pub mod oracle;
pub mod semigroup;
pub mod stochastic;
pub mod trajectory;

pub use bkm::{
    compute_k, divergence_evolution_residual, divergence_identity_residual,
    energy_identity_residual, energy_inequality_certificate, gronwall_bound, BkmReport,
};
pub use certificate::{Certificate, CertificateRow};
pub use error::{Error, Result};
pub use field::Field;
pub use force::Force;
pub use grid::TorusGrid;
pub use ifrk4::{heat_flow, if_rk4_solve, if_rk4_solve_with, Nonlinearity};
pub use interp::{eval_at, Interpolation, PointValue};
pub use kpz::{
    apriori_estimate_check, gradient_link_check, solve_hj, solve_hj_with, viscous_limit_sweep,
    HjRun, LinkReport, SweepReport, SweepRow,
};
pub use mild::{
    blowup_scan, duhamel_apply, picard_solve, qt_norm, BlowupReport, ContractionReport,
    InitialIterate, PicardConfig,
};
pub use norms::{lp_norm, sobolev_norm, NormReport};
pub use ops::{
    advect, curl, dealias, divergence, gradient, heat_semigroup_apply, laplacian,
};
pub use semigroup::{
    check_vanishing_limit, measure_smoothing_rate, ExponentTriple, RateReport, RateSample,
};
pub use stochastic::{
    feynman_kac_estimate, linfty_certificate, simulate_flow, FlowConfig, McEstimate,
};
pub use trajectory::{Trajectory, TrajectoryMeta};
