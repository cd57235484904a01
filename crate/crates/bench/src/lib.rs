//! Shared inputs for the solver benchmarks.

use gqbm_core::{build_kernels, Kernel, Result, SpectralModel, TimeGrid};

/// Coupling strength of the reference parameter set.
pub const GAMMA0: f64 = 3e-4;
/// Bath temperature of the reference parameter set.
pub const TEMPERATURE: f64 = 0.01;

/// Ohmic model at the reference parameters with coupling ratio `alpha`.
pub fn reference_model(alpha: f64) -> Result<SpectralModel> {
    SpectralModel::ohmic(GAMMA0, alpha, TEMPERATURE)
}

/// `ω_s = sqrt(2γ0/π)`.
pub fn reference_omega_s() -> f64 {
    (2.0 * GAMMA0 / std::f64::consts::PI).sqrt()
}

/// Tabulated kernels on `[0, t_end]` with `n_steps` steps.
pub fn reference_kernel(alpha: f64, t_end: f64, n_steps: usize) -> Result<(Kernel, TimeGrid)> {
    let grid = TimeGrid::new(t_end, n_steps)?;
    let kernel = build_kernels(&reference_model(alpha)?, &grid)?;
    Ok((kernel, grid))
}
