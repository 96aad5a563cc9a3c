//! Robust multi-antenna beamforming for OTFS-NOMA downlink.
//!
//! A high-mobility user places its symbols on the delay-Doppler grid while
//! `M` low-mobility NOMA users occupy the time-frequency grid; a `V`-antenna
//! base station scales the superimposed signal with one beamforming vector.
//! The crate provides:
//!
//! - [`otfs`]: (I)SFFT transforms, block-circulant channel matrices and their
//!   time-frequency eigenvalues, and the frequency-domain linear equalizer.
//! - [`channel`]: sparse delay-Doppler tap sampling, effective channel
//!   vectors, and norm-bounded CSI errors.
//! - [`rates`]: problem parameters, SINR/SNR expressions and rate thresholds.
//! - [`robust`]: closed-form worst-case received power under a spherical
//!   error ball and SIC feasibility checks.
//! - [`optimize`]: the SCA, SDR and random beamformer designers on top of a
//!   small conic-program contract.
//! - [`experiment`]: Monte-Carlo sweeps producing CSV rows and summary curves.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod optimize;
pub mod otfs;
pub mod rates;
pub mod robust;

// Link the system OpenBLAS used by the SDP cone of the conic solver.
extern crate openblas_src;

pub use error::{Error, Result};
pub use num_complex::Complex64;
