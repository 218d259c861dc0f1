//! Coupling-matrix toolkit for coupled-resonator microwave circuits.
//!
//! The crate models a multiport device by the pole-residue series of its
//! impedance matrix (rank-1 residues, one per eigenmode), assembles the
//! coupling-matrix form of the in-band part, reduces it to a classical
//! narrowband coupling matrix over a chosen band, and provides the
//! supporting machinery a tuning workflow needs: basis transforms,
//! transmission/reflection-zero extraction, rational fitting of sampled
//! impedance data, classical-matrix fitting under a topology mask, and
//! ranked matrix-diff diagnostics.
//!
//! Start from [`model::PoleResidueModel`] if you have pole-residue data, from
//! [`fit::rational::fit_pole_residue`] if you have sampled impedance
//! matrices, or from [`io::matrix_file`] if you have a coupling matrix on
//! disk. The `examples/` directory walks through each capability end to end.

pub mod basis;
pub mod cli;
pub mod error;
pub mod fit;
pub mod impedance;
pub mod io;
mod linalg;
pub mod model;
pub mod narrowband;

pub use basis::{apply_basis, compare_coupling, to_transversal, BasisTransform, ComparisonReport};
pub use error::{Error, Result};
pub use impedance::{
    em_coupling_from_inband, eval_impedance, impedance_from_em, solve_state, split_inband,
    sweep_s_parameters, z_to_s, EmCouplingMatrix, SParameterSweep, StateSolution,
};
pub use model::{
    validate_model, FrequencyBand, PoleResidueModel, PoleResidueTerm, PortVector, ETA0,
    SPEED_OF_LIGHT,
};
pub use narrowband::{
    bandpass_map, center_linearization, eval_classical, eval_total_s, inverse_reduce, lowpass_map,
    reduce_to_classical, taylor_outofband, AffineOutOfBand, CenterLinearization,
    ClassicalCouplingMatrix,
};
