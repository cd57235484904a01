//! Exact time-local master-equation coefficients.
//!
//! From the Green functions one obtains the time-local generator
//!
//! ```text
//! K(t) = −iω_s Z − U̇(t) U(t)⁻¹,        Λ(t) = V̇(t) − U̇(t) U(t)⁻¹ V(t, t),
//! ```
//!
//! with `V̇ = ∂_τ V(τ, t)|_{τ=t}`. They define the exact time-local master
//! equation of the oscillator (frequency renormalisation, a squeezing term,
//! damping and normal and anomalous diffusion),
//!
//! whose coefficients are
//!
//! ```text
//! ω_s' = ω_s − (i/2)(K11 − K11*),   ω̄_s' = −(i/2)(K12 + K21*),
//! γ    = 2 Re K11,                  γ̃    = 2 Re Λ11,   γ̄ = Λ12 + Λ21*.
//! ```
//!
//! Equivalently the moments `N = [[Δn, Δs], [Δs*, Δn + 1]]` obey
//! `dN/dt = A N + N A† + D` with `A = [[−iω_s' − γ/2, −iω̄_s'], [iω̄_s'*, iω_s' − γ/2]]`
//! and `D = [[γ̃, γ̄], [γ̄*, γ + γ̃]]`.

use crate::error::{Error, Result};
use crate::greens::{GreensSolution, RetardedSeries, TimeGrid, VolterraCorrelation};
use crate::linalg::{c, inverse_with_condition, max_abs, re, z, z_left, z_right, Mat2, C64};
use crate::spectral::Kernel;

/// Beyond this condition number `U(t)` is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// The generator pair `(K, Λ)` on the grid.
#[derive(Debug, Clone)]
pub struct KLambdaSeries {
    pub grid: TimeGrid,
    pub omega_s: f64,
    pub alpha: f64,
    pub k: Vec<Mat2>,
    pub lambda: Vec<Mat2>,
    /// Largest condition number of `U(t)` met on the grid.
    pub max_condition: f64,
}

/// `K(t)` and `Λ(t)` from `U`, `U̇`, `V` and `V̇`.
pub fn compute_k_lambda(sol: &GreensSolution) -> Result<KLambdaSeries> {
    let r = &sol.retarded;
    let cs = &sol.correlation;
    if cs.v.len() != r.u.len() || cs.v_dot.len() != r.u.len() {
        return Err(Error::Inconsistent("U and V series differ in length".into()));
    }
    let iwz = z() * c(0.0, sol.omega_s);
    let mut k = Vec::with_capacity(r.u.len());
    let mut lambda = Vec::with_capacity(r.u.len());
    let mut max_condition = 1.0_f64;
    for j in 0..r.u.len() {
        let t = sol.grid.time(j);
        let (inv, cond) =
            inverse_with_condition(&r.u[j]).ok_or(Error::Singular { time: t, condition: f64::INFINITY })?;
        if cond > MAX_CONDITION || !cond.is_finite() {
            return Err(Error::Singular { time: t, condition: cond });
        }
        max_condition = max_condition.max(cond);
        let p = r.u_dot[j] * inv;
        k.push(-iwz - p);
        lambda.push(cs.v_dot[j] - p * cs.v[j]);
    }
    Ok(KLambdaSeries { grid: sol.grid, omega_s: sol.omega_s, alpha: sol.alpha, k, lambda, max_condition })
}

/// Largest deviation between the finite-difference derivative of `V(t,t)`
/// and `V̇ + V̇†` (interior points, central differences). A cheap consistency
/// check of the analytic derivative used for `Λ`.
pub fn v_dot_consistency(sol: &GreensSolution) -> f64 {
    let cs = &sol.correlation;
    let dt = sol.grid.dt();
    (1..cs.v.len().saturating_sub(1))
        .map(|j| {
            let fd = (cs.v[j + 1] - cs.v[j - 1]) / c(2.0 * dt, 0.0);
            max_abs(&(fd - cs.v_dot[j] - cs.v_dot[j].adjoint()))
        })
        .fold(0.0, f64::max)
}

/// Master-equation coefficients on the grid.
#[derive(Debug, Clone)]
pub struct CoefficientSeries {
    pub grid: TimeGrid,
    pub omega_s: f64,
    pub alpha: f64,
    /// Decay rate `γ(t)`.
    pub gamma: Vec<f64>,
    /// Diffusion (heating) coefficient `γ̃(t)`.
    pub gamma_tilde: Vec<f64>,
    /// Anomalous diffusion coefficient `γ̄(t)`.
    pub gamma_bar: Vec<C64>,
    /// Renormalised frequency `ω_s'(t)`.
    pub omega_prime: Vec<f64>,
    /// Squeezing term `ω̄_s'(t)`.
    pub omega_bar_prime: Vec<C64>,
}

impl CoefficientSeries {
    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    /// Rotating-wave frequency `sqrt(|ω_s'|² − |ω̄_s'|²)`; `None` where the
    /// squeezing term dominates and the frequency is imaginary.
    pub fn omega_r(&self, j: usize) -> Option<f64> {
        let d = self.omega_prime[j].powi(2) - self.omega_bar_prime[j].norm_sqr();
        if d >= 0.0 {
            Some(d.sqrt())
        } else {
            None
        }
    }

    /// Drift matrix `A` of the moment equation at grid point `j`.
    pub fn drift(&self, j: usize) -> Mat2 {
        let half = 0.5 * self.gamma[j];
        let w = self.omega_prime[j];
        let wb = self.omega_bar_prime[j];
        Mat2::new(c(-half, -w), c(0.0, -1.0) * wb, c(0.0, 1.0) * wb.conj(), c(-half, w))
    }

    /// Diffusion matrix `D` of the moment equation at grid point `j`.
    pub fn diffusion(&self, j: usize) -> Mat2 {
        let gb = self.gamma_bar[j];
        Mat2::new(c(self.gamma_tilde[j], 0.0), gb, gb.conj(), c(self.gamma[j] + self.gamma_tilde[j], 0.0))
    }
}

/// Master-equation coefficients from `(K, Λ)`.
pub fn compute_me_coeffs(kl: &KLambdaSeries) -> CoefficientSeries {
    let n = kl.k.len();
    let mut out = CoefficientSeries {
        grid: kl.grid,
        omega_s: kl.omega_s,
        alpha: kl.alpha,
        gamma: Vec::with_capacity(n),
        gamma_tilde: Vec::with_capacity(n),
        gamma_bar: Vec::with_capacity(n),
        omega_prime: Vec::with_capacity(n),
        omega_bar_prime: Vec::with_capacity(n),
    };
    let half_i = c(0.0, 0.5);
    for (k, l) in kl.k.iter().zip(&kl.lambda) {
        out.gamma.push(2.0 * k[(0, 0)].re);
        out.gamma_tilde.push(2.0 * l[(0, 0)].re);
        out.gamma_bar.push(l[(0, 1)] + l[(1, 0)].conj());
        // ω_s − (i/2)(K11 − K11*) = ω_s + Im K11
        out.omega_prime.push(kl.omega_s + k[(0, 0)].im);
        out.omega_bar_prime.push(-half_i * (k[(0, 1)] + k[(1, 0)].conj()));
    }
    out
}

/// Convenience: Green functions → `(K, Λ)` → coefficients.
pub fn coefficients_from_greens(sol: &GreensSolution) -> Result<CoefficientSeries> {
    Ok(compute_me_coeffs(&compute_k_lambda(sol)?))
}

/// Coefficients of the Hu–Paz–Zhang form (valid for `W = V`, i.e. `α = 1`,
/// where the coupling is `x ⊗ (bath)` with `x ∝ a + a†`).
///
/// Conversion to quadratures uses `x = (a + a†)/sqrt(2Mω_s)`.
#[derive(Debug, Clone)]
pub struct HpzCoefficients {
    pub grid: TimeGrid,
    pub omega_s: f64,
    /// Frequency shift `δω²(t) = 2ω_s Re ω̄_s'`.
    pub delta_omega2: Vec<f64>,
    /// Damping `Γ(t) = γ/2`.
    pub damping: Vec<f64>,
    /// Normal diffusion `Γh(t) = −ω_s Re γ̄`, the coefficient of `−M[x,[x,ρ]]`.
    pub gamma_h: Vec<f64>,
    /// Anomalous diffusion `Γf(t) = Im γ̄`.
    pub gamma_f: Vec<f64>,
    /// `ω_p²(t) = ω_s² + δω² − Γ²`.
    pub omega_p2: Vec<f64>,
    /// Residuals of `Re ω̄_s' = ω_s' − ω_s`, `Im ω̄_s' = γ/2` and
    /// `Re γ̄ = −γ/2 − γ̃` at every grid point.
    pub residuals: [Vec<f64>; 3],
}

impl HpzCoefficients {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().flatten().fold(0.0_f64, |a, &b| a.max(b.abs()))
    }
}

/// Reduce `α = 1` coefficients to Hu–Paz–Zhang form and evaluate the three
/// identities that hold exactly when `W = V`.
pub fn hpz_reduce(coeffs: &CoefficientSeries) -> Result<HpzCoefficients> {
    if (coeffs.alpha - 1.0).abs() > 1e-12 {
        return Err(Error::param("alpha", format!("HPZ form needs α = 1, got {}", coeffs.alpha)));
    }
    let ws = coeffs.omega_s;
    let n = coeffs.len();
    let mut out = HpzCoefficients {
        grid: coeffs.grid,
        omega_s: ws,
        delta_omega2: Vec::with_capacity(n),
        damping: Vec::with_capacity(n),
        gamma_h: Vec::with_capacity(n),
        gamma_f: Vec::with_capacity(n),
        omega_p2: Vec::with_capacity(n),
        residuals: [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)],
    };
    for j in 0..n {
        let wb = coeffs.omega_bar_prime[j];
        let gb = coeffs.gamma_bar[j];
        let g = coeffs.gamma[j];
        let dw2 = 2.0 * ws * wb.re;
        let damp = 0.5 * g;
        out.delta_omega2.push(dw2);
        out.damping.push(damp);
        out.gamma_h.push(-ws * gb.re);
        out.gamma_f.push(gb.im);
        out.omega_p2.push(ws * ws + dw2 - damp * damp);
        out.residuals[0].push(wb.re - (coeffs.omega_prime[j] - ws));
        out.residuals[1].push(wb.im - 0.5 * g);
        out.residuals[2].push(gb.re + 0.5 * g + coeffs.gamma_tilde[j]);
    }
    Ok(out)
}

/// Which noise terms enter the short-time estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThermalTerms {
    /// Vacuum terms only (`g̃_V`, `g̃_W` dropped), appropriate for `T ≪ Λ`.
    #[default]
    Dropped,
    /// Keep the thermal kernel `g̃_V` as well.
    Included,
}

/// Short-time estimates of the coefficients obtained by keeping only `U11`
/// of the propagator and dropping the `V` terms of the generator:
///
/// ```text
/// γ̃_est(t) = 2 Re ∫_0^t g_W(s) U11(s) ds,
/// γ_est(t) = 2 Re ∫_0^t (g_V*(s) − g_W(s)) U11(s) ds,
/// ```
///
/// with `g_W = α² g_V`. With [`ThermalTerms::Included`], `γ̃_est` becomes
/// `2 Re ∫ [g̃_V* + α²(g_V + g̃_V)] U11 ds`; `γ_est` has no thermal part.
///
/// They capture the "initial jolt" of both coefficients at low temperature.
#[derive(Debug, Clone)]
pub struct JoltEstimate {
    pub gamma_tilde: Vec<f64>,
    pub gamma: Vec<f64>,
    pub thermal: ThermalTerms,
    /// Set when the thermal part of the noise is comparable to the vacuum
    /// part, where the vacuum-only estimate is not expected to hold.
    pub high_temperature: bool,
}

/// Vacuum-only estimates (see [`JoltEstimate`]).
pub fn jolt_estimate(kernel: &Kernel, retarded: &RetardedSeries) -> Result<JoltEstimate> {
    jolt_estimate_with(kernel, retarded, ThermalTerms::Dropped)
}

pub fn jolt_estimate_with(kernel: &Kernel, retarded: &RetardedSeries, thermal: ThermalTerms) -> Result<JoltEstimate> {
    let n = retarded.u.len();
    if kernel.len() < n {
        return Err(Error::Inconsistent("kernel shorter than the retarded series".into()));
    }
    let dt = retarded.grid.dt();
    let a2 = kernel.alpha * kernel.alpha;
    let thermal_weight = if thermal == ThermalTerms::Included { 1.0 } else { 0.0 };
    let mut gt = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    let (mut acc_t, mut acc) = (c(0.0, 0.0), c(0.0, 0.0));
    let f_t = |j: usize| {
        let noise = kernel.g_v(j) * a2 + (kernel.gtilde_v(j).conj() + kernel.gtilde_v(j) * a2) * thermal_weight;
        noise * retarded.u[j][(0, 0)]
    };
    let f = |j: usize| (kernel.g_v(j).conj() - kernel.g_v(j) * a2) * retarded.u[j][(0, 0)];
    gt.push(0.0);
    g.push(0.0);
    for j in 1..n {
        acc_t += (f_t(j - 1) + f_t(j)) * (0.5 * dt);
        acc += (f(j - 1) + f(j)) * (0.5 * dt);
        gt.push(2.0 * acc_t.re);
        g.push(2.0 * acc.re);
    }
    let high_temperature = kernel.gtilde_v(0).norm() > 0.1 * kernel.g_v(0).norm();
    if high_temperature && thermal == ThermalTerms::Dropped {
        log::warn!("short-time coefficient estimates used outside the low-temperature regime");
    }
    Ok(JoltEstimate { gamma_tilde: gt, gamma: g, thermal, high_temperature })
}

/// Outcome of the independent integral evaluation of the diffusion matrix.
#[derive(Debug, Clone)]
pub struct CrosscheckReport {
    /// `max_j |D_integral(t_j) − D(t_j)|` over all entries.
    pub max_deviation: f64,
    /// `max_j |D(t_j)|`, for relative judgements.
    pub scale: f64,
    pub per_time: Vec<f64>,
}

/// Evaluate the diffusion matrix from its integral representation,
///
/// ```text
/// [[γ̃, γ̄], [γ̄*, γ + γ̃]] = { ∫_0^t [Z G̃(t−τ) Z U†(t−τ) − Z G(t−τ) V(τ, t)] dτ
///                           + K(t) V(t, t) } + h.c.,
/// ```
///
/// using the two-time table of the Volterra route, and compare it with the
/// diffusion matrix `Λ + Λ†` of `kl`.
pub fn coeff_integral_crosscheck(
    kernel: &Kernel,
    retarded: &RetardedSeries,
    volterra: &VolterraCorrelation,
    kl: &KLambdaSeries,
) -> Result<CrosscheckReport> {
    let table = volterra
        .two_time
        .as_ref()
        .ok_or_else(|| Error::Inconsistent("the crosscheck needs the two-time correlation table".into()))?;
    let n = retarded.grid.n_steps;
    if table.len() != n + 1 || kl.k.len() != n + 1 {
        return Err(Error::Inconsistent("series lengths differ from the grid".into()));
    }
    let dt = retarded.grid.dt();
    let mut per_time = Vec::with_capacity(n + 1);
    let mut scale = 0.0_f64;
    #[allow(clippy::needless_range_loop)]
    for nt in 0..=n {
        let mut x = Mat2::zeros();
        for m in 0..=nt {
            let w = if m == 0 || m == nt { 0.5 } else { 1.0 };
            let lag = nt - m;
            let term =
                z_right(&z_left(kernel.gtilde(lag))) * retarded.u[lag].adjoint() - z_left(kernel.g(lag)) * table[nt][m];
            x += term * re(w);
        }
        if nt == 0 {
            x = Mat2::zeros();
        }
        x = x * c(dt, 0.0) + kl.k[nt] * table[nt][nt];
        let d_int = x + x.adjoint();
        let d = kl.lambda[nt] + kl.lambda[nt].adjoint();
        scale = scale.max(max_abs(&d));
        per_time.push(max_abs(&(d_int - d)));
    }
    let max_deviation = per_time.iter().copied().fold(0.0, f64::max);
    Ok(CrosscheckReport { max_deviation, scale, per_time })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::{solve_u, solve_v_fdt, solve_v_volterra};
    use crate::spectral::{build_kernels, SpectralModel};

    fn solve(alpha: f64, temp: f64, t_end: f64, n: usize) -> (Kernel, GreensSolution) {
        let m = SpectralModel::ohmic(3e-4, alpha, temp).unwrap();
        let grid = TimeGrid::new(t_end, n).unwrap();
        let k = build_kernels(&m, &grid).unwrap();
        let sol = GreensSolution::compute(&k, m.default_omega_s().unwrap(), &grid).unwrap();
        (k, sol)
    }

    #[test]
    fn zero_coupling_gives_bare_coefficients() {
        let m = SpectralModel::ohmic(0.0, 1.0, 0.01).unwrap();
        let grid = TimeGrid::new(10.0, 400).unwrap();
        let k = build_kernels(&m, &grid).unwrap();
        let sol = GreensSolution::compute(&k, 0.2, &grid).unwrap();
        let co = coefficients_from_greens(&sol).unwrap();
        for j in 0..co.len() {
            assert!(co.gamma[j].abs() < 1e-15);
            assert!(co.gamma_tilde[j].abs() < 1e-15);
            assert!((co.omega_prime[j] - 0.2).abs() < 1e-15);
            assert!(co.omega_bar_prime[j].norm() < 1e-15);
        }
        let h = hpz_reduce(&co).unwrap();
        assert!(h.gamma_h.iter().chain(&h.gamma_f).chain(&h.damping).chain(&h.delta_omega2).all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn hpz_needs_alpha_one() {
        let (_, sol) = solve(0.5, 0.01, 5.0, 40);
        let co = coefficients_from_greens(&sol).unwrap();
        assert!(hpz_reduce(&co).is_err());
    }

    #[test]
    fn late_time_rate_approaches_markov_value() {
        // Weak coupling, Markov limit: γ(∞) = J_V(ω_s).
        // For W = V the approach is fastest (∝ ω_s/t); t = 200 ≫ 1/ω_s.
        let (_, sol) = solve(1.0, 0.0, 200.0, 1000);
        let co = coefficients_from_greens(&sol).unwrap();
        let m = SpectralModel::ohmic(3e-4, 1.0, 0.0).unwrap();
        let markov = m.j_v(m.default_omega_s().unwrap()).unwrap();
        let late = *co.gamma.last().unwrap();
        assert!((late - markov).abs() < 0.02 * markov, "{late} vs {markov}");
    }

    #[test]
    fn integral_crosscheck_agrees() {
        let m = SpectralModel::ohmic(3e-4, 0.5, 0.01).unwrap();
        let grid = TimeGrid::new(6.0, 120).unwrap();
        let k = build_kernels(&m, &grid).unwrap();
        let r = solve_u(&k, m.default_omega_s().unwrap(), &grid).unwrap();
        let vol = solve_v_volterra(&k, &r, true).unwrap();
        let sol = GreensSolution {
            grid,
            omega_s: r.omega_s,
            alpha: 0.5,
            retarded: r.clone(),
            correlation: vol.equal_time.clone(),
        };
        let kl = compute_k_lambda(&sol).unwrap();
        let rep = coeff_integral_crosscheck(&k, &r, &vol, &kl).unwrap();
        assert!(rep.max_deviation < 1e-12 * rep.scale.max(1.0), "{:?}", rep.max_deviation);
        // Against the FDT route the difference is discretisation error only.
        let fdt = GreensSolution { correlation: solve_v_fdt(&k, &r).unwrap(), ..sol };
        let kl2 = compute_k_lambda(&fdt).unwrap();
        let rep = coeff_integral_crosscheck(&k, &r, &vol, &kl2).unwrap();
        assert!(rep.max_deviation < 1e-6, "{}", rep.max_deviation);
    }

    #[test]
    fn analytic_v_dot_is_consistent() {
        // The residual is the truncation error of the central difference and
        // of the quadratures, so it must fall by ~4 when Δt halves.
        let coarse = v_dot_consistency(&solve(0.5, 0.01, 10.0, 400).1);
        let fine = v_dot_consistency(&solve(0.5, 0.01, 10.0, 800).1);
        assert!(fine < 1e-6 && coarse / fine > 3.0, "{coarse} {fine}");
    }

    #[test]
    fn omega_r_flags_imaginary_frequency() {
        let (_, sol) = solve(1.0, 0.01, 5.0, 100);
        let mut co = coefficients_from_greens(&sol).unwrap();
        assert!(co.omega_r(10).is_some());
        co.omega_bar_prime[10] = c(1.0, 0.0);
        assert!(co.omega_r(10).is_none());
    }
}
