//! Simulator for laser cooling of a radio-frequency LC resonator through a
//! membrane that is dispersively coupled to an optical cavity and
//! capacitively coupled to the circuit.
//!
//! The pipeline is:
//!
//! 1. [`params`] ingests a [`ParameterSet`] (SI units, angular frequencies)
//!    and derives rates, zero-point scales and bath occupancies.
//! 2. [`workpoint`] finds the classical working point: membrane offset,
//!    intracavity photon number, coupling rates `G` and `g`, and the
//!    renormalized mechanical frequency.
//! 3. [`dynamics`] assembles the 6×6 drift and diffusion matrices of the
//!    linearized fluctuations and certifies stability.
//! 4. [`steady`] solves the Lyapunov equation for the stationary covariance
//!    matrix and extracts occupancies and the cooling efficiency.
//! 5. [`spectra`] and [`sideband`] give the frequency-domain picture and the
//!    closed-form resolved-sideband approximations.
//! 6. [`sweep`] and [`figures`] drive all of the above over parameter grids
//!    and emit CSV datasets.
//!
//! State vector ordering everywhere is `(δx, δp, δq, δφ, δX, δY)`.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod dynamics;
pub mod error;
pub mod figures;
pub mod output;
pub mod params;
pub mod quad;
pub mod sideband;
pub mod spectra;
pub mod steady;
pub mod sweep;
pub mod workpoint;

pub use dynamics::{DriftDiffusion, LinearModel, StabilityReport};
pub use error::{Error, Result};
pub use params::{CouplingMode, DerivedConstants, ParameterSet};
pub use sideband::CoolingRates;
pub use spectra::{EffectiveLorentzian, SpectrumSample};
pub use steady::CovarianceMatrix;
pub use sweep::{SweepRecord, SweepSpec, SweepStatus, SweepTable};
pub use workpoint::WorkingPoint;
