//! Exact, non-Markovian reduced dynamics of a harmonic oscillator coupled to a
//! bosonic bath through both rotating (`V`) and counter-rotating (`W`) terms.
//!
//! The crate is organised as a pipeline:
//!
//! * [`spectral`] — bath spectral densities, the dissipation kernel `G` and the
//!   noise kernel `G̃`, and discretisations of the bath into modes;
//! * [`greens`] — the retarded function `U`, the noise correlation `V` and the
//!   correction for system–bath correlated initial states;
//! * [`coeffs`] — the exact time-local master-equation coefficients, their
//!   reduction to Hu–Paz–Zhang form and short-time analytic estimates;
//! * [`moments`] — propagation of Gaussian first and second moments;
//! * [`oracle`] — brute-force propagation of the finite system+bath model used
//!   as an independent reference.
//!
//! Units: `ħ = k_B = 1`; frequencies, temperatures and rates share one unit,
//! conventionally the bath cutoff `Λ`.

// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coeffs;
pub mod error;
pub mod greens;
pub mod linalg;
pub mod moments;
pub mod oracle;
pub mod quadrature;
pub mod spectral;

pub use coeffs::{
    coeff_integral_crosscheck, coefficients_from_greens, compute_k_lambda, compute_me_coeffs, hpz_reduce,
    jolt_estimate, jolt_estimate_with, CoefficientSeries, CrosscheckReport, HpzCoefficients, JoltEstimate,
    KLambdaSeries, ThermalTerms,
};
pub use error::{Error, Result};
pub use greens::{
    correlated_correction, solve_u, solve_v_fdt, solve_v_fdt_with, solve_v_volterra, CorrelationSeries, FdtForm,
    GreensSolution, InitialCorrelations, RetardedSeries, TimeGrid, VolterraCorrelation,
};
pub use linalg::{Mat2, C64};
pub use moments::{
    evolve_covariances, evolve_hpz_covariances, evolve_means, from_quadratures, to_quadratures, GaussianMoments,
    MomentSeries, QuadratureCovariance,
};
pub use oracle::{
    build_dynamics, noise_correlation, propagate, reduced_from_full, reduced_moments, thermal_total_state,
    BogoliubovPropagator, LinearDynamics, OracleMoments, ThermalState,
};
pub use spectral::{
    build_kernels, discretize_bath, BathDiscretization, DiscretizationScheme, Kernel, SpectralFamily, SpectralModel,
    TabulatedDensity,
};
