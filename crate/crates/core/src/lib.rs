//! Fourier pseudospectral solvers on the periodic box [0, 2π)³ for the
//! non-isentropic compressible Euler–Maxwell system with stiff electric-field
//! relaxation, together with its zero-relaxation limit, viscosity-free
//! compressible MHD with magnetic diffusion.
//!
//! The crate is organized bottom-up:
//!
//! * [`grid`] — torus discretization, wavenumbers, dealiasing cutoff;
//! * [`fft`] — cached complex FFT plans and forward/inverse transforms;
//! * [`field`] — scalar and vector fields with lazily synchronized physical
//!   and spectral representations;
//! * [`ops`] — spectral calculus (gradient, divergence, curl, Leray
//!   projection, dealiasing, Sobolev norms);
//! * [`eos`] — the ideal-gas entropy/pressure closure and its derived
//!   coefficients;
//! * [`em`] — the Euler–Maxwell integrator (Strang splitting around an exact
//!   exponential relaxation step);
//! * [`mhd`] — the limit MHD integrator (Strang splitting around exact
//!   spectral magnetic diffusion);
//! * [`error_sys`] — the coupled error system between the two, its source
//!   terms, symmetrizer, energy functionals, and residual certification.
//!
//! Everything is deterministic: fields are plain `f64` buffers, transforms are
//! planned once and reused, and no operation depends on thread count or
//! iteration order.

pub mod eos;
pub mod em;
pub mod error_sys;
pub mod fft;
pub mod field;
pub mod grid;
pub mod mhd;
pub mod ops;
pub mod solver;

pub use eos::{EosClosure, EosError};
pub use em::{EmForcing, EmForcingFields, EmRunConfig, EmState};
pub use error_sys::{EnergyReport, ErrorState, SourceTerms};
pub use field::{ScalarField, VectorField};
pub use grid::TorusGrid;
pub use mhd::{MhdForcing, MhdForcingFields, MhdRunConfig, MhdState, MhdTimeDerivs};
pub use solver::{MetricsSink, NullSink, SolverError, StepMetrics};

/// Volume of the periodic box [0, 2π)³. Integrals and norms are always taken
/// over the full three-dimensional torus; fields that only vary in one or two
/// coordinates are constant along the remaining axes, so reduced-dimension
/// runs measure the same quantities as their flat three-dimensional
/// counterparts.
pub const TORUS_VOLUME: f64 = {
    let two_pi = 2.0 * std::f64::consts::PI;
    two_pi * two_pi * two_pi
};
