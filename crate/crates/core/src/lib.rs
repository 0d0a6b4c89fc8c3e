//! Link-level simulation library for MIMO space-time block coding.
//!
//! The pieces, bottom up:
//! - [`linalg`]: dense complex matrices and a deterministic Jacobi SVD;
//! - [`modem`]: Gray-labeled square QAM with unit average energy;
//! - [`stbc`]: symbolic code grids (Alamouti, the recursive rate-one
//!   quasi-orthogonal family, the 4-antenna rate-1/2 orthogonal design);
//! - [`channel`]: quasi-static Rayleigh fading with Eb/N0-calibrated AWGN;
//! - [`precode`]: SVD precoding and receive combining that diagonalize the
//!   effective channel;
//! - [`detect`]: exhaustive ML block decoding and pilot-based MMSE channel
//!   estimation;
//! - [`ptrbf`]: a complex-valued phase-transmittance RBF network trained by
//!   split-complex SGD, decoding blocks without an explicit channel
//!   estimate;
//! - [`harness`]: seeded, worker-count-independent Monte Carlo sweeps.

pub mod channel;
pub mod detect;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod modem;
pub mod precode;
pub mod ptrbf;
pub mod rng;
pub mod stbc;

pub use error::{Error, Result};
