//! Margin reports over numerical solutions and explicit barriers.
//!
//! Every check returns [`MarginReport`](crate::MarginReport)s; constants the
//! theory only asserts to exist are measured and then compared across grids
//! and regularization levels rather than against fixed values.

mod barrier;
mod boundary;
mod energy;
mod lipschitz;
mod reduction;

pub use barrier::{
    barrier_corner_check, barrier_initial_check, barrier_lateral_check, barrier_m_min,
    barrier_m_time, check_barrier_m, BarrierGrid, BarrierReport, BarrierSample, BARRIER_TOL,
    SINGULAR_EXCLUSION,
};
pub use boundary::{
    boundary_modulus_measure, contraction_sigma, BoundaryModulus, IterationLevel, ModulusSettings,
};
pub use energy::{
    caccioppoli_check, calibrate_v_tolerance, standard_bumps, v_subsolution_check, v_weak_form,
    Bump, CutoffSpec,
};
pub use lipschitz::{
    lip_half_seminorm, lipschitz_estimate_check, stability_margin, LipschitzEstimate,
    SEMINORM_POINTS,
};
pub use reduction::{
    comparison_with_barrier, flat_unit_configuration, reduction_delta, shifted_barrier,
    OscillationReduction, COMPARISON_TOL,
};
