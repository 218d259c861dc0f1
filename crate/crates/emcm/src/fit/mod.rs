//! Fitting front ends: rank-1 pole-residue extraction from sampled impedance
//! data, and classical coupling-matrix fitting to zero/pole targets under a
//! topology mask.

pub mod classical;
pub mod rational;
