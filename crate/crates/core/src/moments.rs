//! Propagation of Gaussian moments under the exact master equation.
//!
//! Conventions: `Δn = ⟨δa† δa⟩`, `Δs = ⟨δa δa⟩` and the moment matrix
//! `N = [[Δn, Δs], [Δs*, Δn + 1]]`, which evolves as `dN/dt = A N + N A† + D`
//! (see [`CoefficientSeries::drift`] and [`CoefficientSeries::diffusion`]).
//!
//! Both integrators treat the bare rotation `−iω_s Z` exactly and the
//! remaining, bath-induced part with Heun's method (integrating-factor RK2),
//! using coefficient values at the grid points.

use crate::coeffs::{CoefficientSeries, HpzCoefficients};
use crate::error::{Error, Result};
use crate::greens::TimeGrid;
use crate::linalg::{c, Mat2, C64};
use nalgebra::{Matrix2, Vector2};

/// First and second moments of a single-mode Gaussian state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMoments {
    pub mean: C64,
    pub delta_n: f64,
    pub delta_s: C64,
}

impl GaussianMoments {
    /// Validated constructor: requires `Δn ≥ 0` and `|Δs|² ≤ Δn(Δn + 1)`
    /// (the uncertainty bound for a single mode).
    pub fn new(mean: C64, delta_n: f64, delta_s: C64) -> Result<Self> {
        if !mean.is_finite() || !delta_n.is_finite() || !delta_s.is_finite() {
            return Err(Error::param("initial_state", "moments must be finite"));
        }
        if delta_n < 0.0 {
            return Err(Error::param("delta_n", format!("must be ≥ 0, got {delta_n}")));
        }
        if delta_s.norm_sqr() > delta_n * (delta_n + 1.0) * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::param(
                "delta_s",
                format!("|Δs|² = {:.6e} exceeds Δn(Δn+1) = {:.6e}", delta_s.norm_sqr(), delta_n * (delta_n + 1.0)),
            ));
        }
        Ok(GaussianMoments { mean, delta_n, delta_s })
    }

    pub fn vacuum() -> Self {
        GaussianMoments { mean: c(0.0, 0.0), delta_n: 0.0, delta_s: c(0.0, 0.0) }
    }

    /// `N = [[Δn, Δs], [Δs*, Δn + 1]]`.
    pub fn matrix(&self) -> Mat2 {
        Mat2::new(c(self.delta_n, 0.0), self.delta_s, self.delta_s.conj(), c(self.delta_n + 1.0, 0.0))
    }
}

/// Moments on a time grid.
#[derive(Debug, Clone)]
pub struct MomentSeries {
    pub grid: TimeGrid,
    pub mean: Vec<C64>,
    pub delta_n: Vec<f64>,
    pub delta_s: Vec<C64>,
    /// `max_t |(N22 − N11)(t) − 1|`.
    pub commutator_drift: f64,
}

impl MomentSeries {
    pub fn matrix(&self, j: usize) -> Mat2 {
        GaussianMoments { mean: self.mean[j], delta_n: self.delta_n[j], delta_s: self.delta_s[j] }.matrix()
    }
}

fn bath_part(coeffs: &CoefficientSeries, j: usize) -> Mat2 {
    let mut a = coeffs.drift(j);
    a[(0, 0)] += c(0.0, coeffs.omega_s);
    a[(1, 1)] -= c(0.0, coeffs.omega_s);
    a
}

/// Free-rotation phase over one step, `e^{−iω_s Δt}`.
fn step_phase(coeffs: &CoefficientSeries) -> C64 {
    C64::from_polar(1.0, -coeffs.omega_s * coeffs.grid.dt())
}

/// `⟨a⟩(t)` from `d(⟨a⟩, ⟨a†⟩)ᵀ/dt = A (⟨a⟩, ⟨a†⟩)ᵀ`.
pub fn evolve_means(coeffs: &CoefficientSeries, mean0: C64) -> Result<Vec<C64>> {
    let h = coeffs.grid.dt();
    let e = step_phase(coeffs);
    let rotate = |y: Vector2<C64>| Vector2::new(y[0] * e, y[1] * e.conj());
    let mut y = Vector2::new(mean0, mean0.conj());
    let mut out = Vec::with_capacity(coeffs.len());
    out.push(mean0);
    for j in 0..coeffs.len() - 1 {
        let k1 = bath_part(coeffs, j) * y;
        let ystar = rotate(y + k1 * c(h, 0.0));
        let k2 = bath_part(coeffs, j + 1) * ystar;
        y = rotate(y + k1 * c(0.5 * h, 0.0)) + k2 * c(0.5 * h, 0.0);
        let mismatch = (y[1] - y[0].conj()).norm();
        if mismatch > 1e-8 * y[0].norm().max(1.0) || !y[0].is_finite() {
            return Err(Error::NumericalQuality(format!(
                "⟨a†⟩ is no longer the conjugate of ⟨a⟩ at t = {:.6e} (mismatch {mismatch:.3e})",
                coeffs.grid.time(j + 1)
            )));
        }
        out.push(y[0]);
    }
    Ok(out)
}

/// Means and covariances from an initial Gaussian state.
pub fn evolve_covariances(coeffs: &CoefficientSeries, init: &GaussianMoments) -> Result<MomentSeries> {
    let h = coeffs.grid.dt();
    let e2 = step_phase(coeffs).powi(2);
    let rotate = |m: Mat2| Mat2::new(m[(0, 0)], m[(0, 1)] * e2, m[(1, 0)] * e2.conj(), m[(1, 1)]);
    let rhs = |j: usize, m: &Mat2| {
        let a = bath_part(coeffs, j);
        a * m + m * a.adjoint() + coeffs.diffusion(j)
    };
    let hermitian = |m: Mat2| (m + m.adjoint()) * c(0.5, 0.0);

    let mean = evolve_means(coeffs, init.mean)?;
    let mut n = init.matrix();
    let mut delta_n = vec![init.delta_n];
    let mut delta_s = vec![init.delta_s];
    let mut drift = 0.0_f64;
    for j in 0..coeffs.len() - 1 {
        let k1 = rhs(j, &n);
        let nstar = rotate(n + k1 * c(h, 0.0));
        let k2 = rhs(j + 1, &nstar);
        n = hermitian(rotate(n + k1 * c(0.5 * h, 0.0)) + k2 * c(0.5 * h, 0.0));
        if n.iter().any(|x| !x.is_finite()) {
            return Err(Error::Instability(format!("moments diverged at t = {:.6e}", coeffs.grid.time(j + 1))));
        }
        drift = drift.max((n[(1, 1)].re - n[(0, 0)].re - 1.0).abs());
        delta_n.push(n[(0, 0)].re);
        delta_s.push(n[(0, 1)]);
    }
    if drift > 1e-6 {
        return Err(Error::NumericalQuality(format!("commutator ⟨[a, a†]⟩ drifted by {drift:.3e}")));
    }
    Ok(MomentSeries { grid: coeffs.grid, mean, delta_n, delta_s, commutator_drift: drift })
}

/// Symmetrised second moments of `x = (a + a†)/sqrt(2Mω)` and
/// `p = i sqrt(Mω/2)(a† − a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureCovariance {
    pub var_x: f64,
    pub var_p: f64,
    /// `½⟨{δx, δp}⟩`.
    pub cov_xp: f64,
}

fn check_mass_omega(mass: f64, omega: f64) -> Result<()> {
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::param("mass", format!("must be finite and > 0, got {mass}")));
    }
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::param("omega", format!("must be finite and > 0, got {omega}")));
    }
    Ok(())
}

/// `(Δn, Δs) → (⟨Δx²⟩, ⟨Δp²⟩, ½⟨{Δx, Δp}⟩)`.
///
/// `⟨Δx²⟩ = (2Δn + 1 + 2 Re Δs)/(2Mω)`, `⟨Δp²⟩ = Mω(2Δn + 1 − 2 Re Δs)/2`,
/// `½⟨{Δx, Δp}⟩ = Im Δs`.
pub fn to_quadratures(delta_n: f64, delta_s: C64, mass: f64, omega: f64) -> Result<QuadratureCovariance> {
    check_mass_omega(mass, omega)?;
    let mw = mass * omega;
    Ok(QuadratureCovariance {
        var_x: (2.0 * delta_n + 1.0 + 2.0 * delta_s.re) / (2.0 * mw),
        var_p: mw * (2.0 * delta_n + 1.0 - 2.0 * delta_s.re) / 2.0,
        cov_xp: delta_s.im,
    })
}

/// Inverse of [`to_quadratures`].
pub fn from_quadratures(q: &QuadratureCovariance, mass: f64, omega: f64) -> Result<(f64, C64)> {
    check_mass_omega(mass, omega)?;
    let mw = mass * omega;
    let a = mw * q.var_x;
    let b = q.var_p / mw;
    Ok((0.5 * (a + b - 1.0), c(0.5 * (a - b), q.cov_xp)))
}

/// Quadrature covariances under the Hu–Paz–Zhang form,
///
/// ```text
/// dΣ/dt = A Σ + Σ Aᵀ + D,   A = [[0, 1/M], [−M(ω_s² + δω²), −2Γ]],
///                           D = [[0, Γf], [Γf, 2MΓh]],
/// ```
///
/// with `Σ = [[⟨Δx²⟩, ½⟨{Δx,Δp}⟩], [½⟨{Δx,Δp}⟩, ⟨Δp²⟩]]` (Heun's method).
pub fn evolve_hpz_covariances(
    hpz: &HpzCoefficients,
    init: &QuadratureCovariance,
    mass: f64,
) -> Result<Vec<QuadratureCovariance>> {
    check_mass_omega(mass, hpz.omega_s.max(f64::MIN_POSITIVE))?;
    let h = hpz.grid.dt();
    let ws2 = hpz.omega_s * hpz.omega_s;
    let rhs = |j: usize, s: &Matrix2<f64>| {
        let a = Matrix2::new(0.0, 1.0 / mass, -mass * (ws2 + hpz.delta_omega2[j]), -2.0 * hpz.damping[j]);
        let d = Matrix2::new(0.0, hpz.gamma_f[j], hpz.gamma_f[j], 2.0 * mass * hpz.gamma_h[j]);
        a * s + s * a.transpose() + d
    };
    let mut s = Matrix2::new(init.var_x, init.cov_xp, init.cov_xp, init.var_p);
    let mut out = vec![*init];
    for j in 0..hpz.delta_omega2.len() - 1 {
        let k1 = rhs(j, &s);
        let k2 = rhs(j + 1, &(s + k1 * h));
        s += (k1 + k2) * (0.5 * h);
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Error::Instability(format!("quadrature moments diverged at t = {:.6e}", hpz.grid.time(j + 1))));
        }
        out.push(QuadratureCovariance { var_x: s[(0, 0)], var_p: s[(1, 1)], cov_xp: 0.5 * (s[(0, 1)] + s[(1, 0)]) });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{coefficients_from_greens, hpz_reduce};
    use crate::greens::GreensSolution;
    use crate::spectral::{build_kernels, SpectralModel};
    use proptest::prelude::*;

    fn coeffs(gamma0: f64, alpha: f64, temp: f64, t_end: f64, n: usize) -> CoefficientSeries {
        let m = SpectralModel::ohmic(gamma0, alpha, temp).unwrap();
        let grid = TimeGrid::new(t_end, n).unwrap();
        let k = build_kernels(&m, &grid).unwrap();
        let ws = SpectralModel::ohmic(3e-4, alpha, temp).unwrap().default_omega_s().unwrap();
        coefficients_from_greens(&GreensSolution::compute(&k, ws, &grid).unwrap()).unwrap()
    }

    #[test]
    fn quadrature_conversion_examples() {
        let q = to_quadratures(0.0, c(0.0, 0.0), 1.0, 1.0).unwrap();
        assert_eq!((q.var_x, q.var_p, q.cov_xp), (0.5, 0.5, 0.0));
        // ⟨aa⟩ > 0 stretches x and squeezes p by the same amount.
        let q = to_quadratures(0.0, c(0.2, 0.0), 1.0, 1.0).unwrap();
        assert!((q.var_x - 0.7).abs() < 1e-15 && (q.var_p - 0.3).abs() < 1e-15);
        assert!(to_quadratures(0.0, c(0.0, 0.0), 0.0, 1.0).is_err());
        assert!(to_quadratures(0.0, c(0.0, 0.0), 1.0, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn quadrature_round_trip(n in 0.0f64..5.0, re in -2.0f64..2.0, im in -2.0f64..2.0, m in 0.1f64..10.0, w in 0.01f64..3.0) {
            let q = to_quadratures(n, c(re, im), m, w).unwrap();
            let (n2, s2) = from_quadratures(&q, m, w).unwrap();
            prop_assert!((n2 - n).abs() < 1e-12 * (1.0 + n));
            prop_assert!((s2 - c(re, im)).norm() < 1e-12 * (1.0 + n));
        }
    }

    #[test]
    fn rejects_unphysical_states() {
        assert!(GaussianMoments::new(c(0.0, 0.0), -0.1, c(0.0, 0.0)).is_err());
        assert!(GaussianMoments::new(c(0.0, 0.0), 0.0, c(0.3, 0.0)).is_err());
        assert!(GaussianMoments::new(c(0.0, 0.0), 0.1, c(0.3, 0.0)).is_ok());
    }

    #[test]
    fn uncoupled_oscillator_is_exact() {
        let co = coeffs(0.0, 0.5, 0.01, 20.0, 4000);
        let init = GaussianMoments::new(c(2.0, 0.0), 0.1, c(0.3, 0.0)).unwrap();
        let out = evolve_covariances(&co, &init).unwrap();
        for j in 0..co.len() {
            let t = co.grid.time(j);
            let w = co.omega_s;
            assert!((out.mean[j] - C64::from_polar(2.0, -w * t)).norm() < 1e-12);
            assert!((out.delta_n[j] - 0.1).abs() < 1e-12);
            assert!((out.delta_s[j] - C64::from_polar(0.3, -2.0 * w * t)).norm() < 1e-12);
        }
    }

    #[test]
    fn thermalises_towards_bath_occupation() {
        // α = 0, T > 0: Δn → n̄(ω_s') on the time scale 1/γ ≈ 280.
        let m = SpectralModel::ohmic(1e-3, 0.0, 0.05).unwrap();
        let grid = TimeGrid::new(2000.0, 8000).unwrap();
        let k = build_kernels(&m, &grid).unwrap();
        let ws = 0.1;
        let co = coefficients_from_greens(&GreensSolution::compute(&k, ws, &grid).unwrap()).unwrap();
        let out = evolve_covariances(&co, &GaussianMoments::vacuum()).unwrap();
        let wr = *co.omega_prime.last().unwrap();
        let nbar = m.occupation(wr);
        let last = *out.delta_n.last().unwrap();
        assert!((last - nbar).abs() < 0.05 * nbar, "{last} vs {nbar}");
    }

    #[test]
    fn hpz_covariances_match_general_equation() {
        let co = coeffs(3e-4, 1.0, 0.01, 20.0, 2000);
        let hpz = hpz_reduce(&co).unwrap();
        let init = GaussianMoments::new(c(0.0, 0.0), 0.2, c(0.1, 0.05)).unwrap();
        let general = evolve_covariances(&co, &init).unwrap();
        let (mass, w) = (1.3, co.omega_s);
        let q0 = to_quadratures(init.delta_n, init.delta_s, mass, w).unwrap();
        let quad = evolve_hpz_covariances(&hpz, &q0, mass).unwrap();
        for j in (0..co.len()).step_by(50) {
            let want = to_quadratures(general.delta_n[j], general.delta_s[j], mass, w).unwrap();
            let got = quad[j];
            let scale = 1.0 + want.var_x.abs() + want.var_p.abs();
            assert!((got.var_x - want.var_x).abs() < 1e-6 * scale, "j={j}");
            assert!((got.var_p - want.var_p).abs() < 1e-6 * scale, "j={j}");
            assert!((got.cov_xp - want.cov_xp).abs() < 1e-6 * scale, "j={j}");
        }
    }
}
