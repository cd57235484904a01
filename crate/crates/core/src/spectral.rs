//! Bath spectral densities, the dissipation and noise kernels, and finite
//! discretisations of the bath.
//!
//! With coupling `H_int = Σ_k (V_k a† b_k + W_k a† b_k† + h.c.)` the bath enters
//! the reduced dynamics only through three spectral densities. For the models
//! here the counter-rotating coupling is proportional to the rotating one,
//! `W_k = α V_k`, so `J_W = α² J_V` and `J_VW = α J_V`, and every kernel entry
//! is assembled from two scalar transforms of `J_V`:
//!
//! * `g_V(Δ)  = ∫ J_V(ω) e^{-iωΔ} dω / 2π`
//! * `g̃_V(Δ) = ∫ J_V(ω) n̄(ω) e^{-iωΔ} dω / 2π`
//!
//! The dissipation kernel acts in `(a, a†)` space as
//!
//! ```text
//! G(Δ) = [[ g_V − g_W*,   g_VW − g_VW* ],
//!         [ g_VW* − g_VW, g_W − g_V*   ]]
//! ```
//!
//! and the noise kernel is
//!
//! ```text
//! G̃(Δ) = [[ g̃_V + g_W* + g̃_W*,    g̃_VW + g_VW* + g̃_VW* ],
//!          [ g̃_VW + g_VW* + g̃_VW*, g̃_W + g_V* + g̃_V*    ]]
//! ```
//!
//! Both obey `K(−Δ) = K(Δ)†`.

use crate::error::{Error, Result};
use crate::greens::TimeGrid;
use crate::linalg::{c, Mat2, C64};
use crate::quadrature::{filon_linear_weights, GaussLegendre};
use std::f64::consts::PI;

/// Shape of `J_V(ω)`.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralFamily {
    /// `J_V(ω) = sqrt(π γ0 / 2Λ) · ω · e^{−ω/Λ}` — Ohmic with exponential
    /// cutoff, normalised so that the Markov damping rate at small `ω` is `γ0`.
    OhmicExponential { gamma0: f64 },
    /// User-supplied table, linearly interpolated and zero outside its range.
    Tabulated(TabulatedDensity),
}

/// Piecewise-linear spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    omega: Vec<f64>,
    j: Vec<f64>,
}

impl TabulatedDensity {
    pub fn new(omega: Vec<f64>, j: Vec<f64>) -> Result<Self> {
        if omega.len() != j.len() {
            return Err(Error::Inconsistent(format!(
                "spectral table has {} frequencies but {} values",
                omega.len(),
                j.len()
            )));
        }
        if omega.len() < 2 {
            return Err(Error::param("spectral_table", "need at least two points"));
        }
        if omega[0] < 0.0 || !omega.iter().all(|w| w.is_finite()) {
            return Err(Error::param("spectral_table", "frequencies must be finite and non-negative"));
        }
        if omega.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::param("spectral_table", "frequencies must be strictly increasing"));
        }
        if j.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::param("spectral_table", "J(ω) must be finite and non-negative"));
        }
        Ok(TabulatedDensity { omega, j })
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn values(&self) -> &[f64] {
        &self.j
    }

    pub fn eval(&self, w: f64) -> f64 {
        let n = self.omega.len();
        if w < self.omega[0] || w > self.omega[n - 1] {
            return 0.0;
        }
        let i = match self.omega.partition_point(|&x| x <= w) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let (w0, w1) = (self.omega[i], self.omega[i + 1]);
        let s = (w - w0) / (w1 - w0);
        self.j[i] * (1.0 - s) + self.j[i + 1] * s
    }

    fn max_omega(&self) -> f64 {
        *self.omega.last().unwrap()
    }
}

/// Bath model: spectral family, cutoff (the unit of frequency), the
/// counter-rotating ratio `α = W/V` and the bath temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    pub family: SpectralFamily,
    pub cutoff: f64,
    pub alpha: f64,
    pub temperature: f64,
}

impl SpectralModel {
    /// Ohmic-exponential bath with `Λ = 1`.
    pub fn ohmic(gamma0: f64, alpha: f64, temperature: f64) -> Result<Self> {
        Self::ohmic_with_cutoff(gamma0, 1.0, alpha, temperature)
    }

    pub fn ohmic_with_cutoff(gamma0: f64, cutoff: f64, alpha: f64, temperature: f64) -> Result<Self> {
        if !(gamma0 >= 0.0) || !gamma0.is_finite() {
            return Err(Error::param("gamma0", format!("must be finite and ≥ 0, got {gamma0}")));
        }
        Self::validated(SpectralFamily::OhmicExponential { gamma0 }, cutoff, alpha, temperature)
    }

    pub fn tabulated(table: TabulatedDensity, cutoff: f64, alpha: f64, temperature: f64) -> Result<Self> {
        Self::validated(SpectralFamily::Tabulated(table), cutoff, alpha, temperature)
    }

    fn validated(family: SpectralFamily, cutoff: f64, alpha: f64, temperature: f64) -> Result<Self> {
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(Error::param("cutoff", format!("must be finite and > 0, got {cutoff}")));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::param("alpha", format!("must be finite and ≥ 0, got {alpha}")));
        }
        if !(temperature >= 0.0) || !temperature.is_finite() {
            return Err(Error::param("temperature", format!("must be finite and ≥ 0, got {temperature}")));
        }
        Ok(SpectralModel { family, cutoff, alpha, temperature })
    }

    pub fn gamma0(&self) -> Option<f64> {
        match self.family {
            SpectralFamily::OhmicExponential { gamma0 } => Some(gamma0),
            SpectralFamily::Tabulated(_) => None,
        }
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::validated(self.family.clone(), self.cutoff, alpha, self.temperature)
    }

    pub fn with_temperature(&self, temperature: f64) -> Result<Self> {
        Self::validated(self.family.clone(), self.cutoff, self.alpha, temperature)
    }

    /// Default system frequency `ω_s = sqrt(2 γ0 Λ / π)` of the Ohmic model.
    pub fn default_omega_s(&self) -> Option<f64> {
        self.gamma0().map(|g| (2.0 * g * self.cutoff / PI).sqrt())
    }

    /// Upper edge of the frequency window used for thermal integrals and bath
    /// discretisation: `max(20Λ, 50T)`, or the end of a user table.
    pub fn default_omega_max(&self) -> f64 {
        match &self.family {
            SpectralFamily::OhmicExponential { .. } => (20.0 * self.cutoff).max(50.0 * self.temperature),
            SpectralFamily::Tabulated(t) => t.max_omega(),
        }
    }

    fn j_unchecked(&self, w: f64) -> f64 {
        match &self.family {
            SpectralFamily::OhmicExponential { gamma0 } => {
                (PI * gamma0 / (2.0 * self.cutoff)).sqrt() * w * (-w / self.cutoff).exp()
            }
            SpectralFamily::Tabulated(t) => t.eval(w),
        }
    }

    fn check_omega(w: f64) -> Result<()> {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::param("omega", format!("must be finite and ≥ 0, got {w}")));
        }
        Ok(())
    }

    /// `J_V(ω)`.
    pub fn j_v(&self, w: f64) -> Result<f64> {
        Self::check_omega(w)?;
        Ok(self.j_unchecked(w))
    }

    /// `J_W(ω) = α² J_V(ω)`.
    pub fn j_w(&self, w: f64) -> Result<f64> {
        Ok(self.alpha * self.alpha * self.j_v(w)?)
    }

    /// `J_VW(ω) = α J_V(ω)`.
    pub fn j_vw(&self, w: f64) -> Result<f64> {
        Ok(self.alpha * self.j_v(w)?)
    }

    /// Bose occupation `n̄(ω) = 1 / (e^{ω/T} − 1)`; zero at `T = 0`.
    pub fn occupation(&self, w: f64) -> f64 {
        bose(w, self.temperature)
    }

    /// `J_V(ω) n̄(ω)`, using its finite limit at `ω = 0`.
    fn j_thermal(&self, w: f64) -> f64 {
        let t = self.temperature;
        if t == 0.0 {
            return 0.0;
        }
        if w == 0.0 {
            // J(ω) ~ J'(0) ω near the origin, so J n̄ → T J'(0).
            let eps = 1e-8 * self.cutoff.min(t);
            return t * self.j_unchecked(eps) / eps;
        }
        let x = w / t;
        if x > 700.0 {
            return 0.0;
        }
        self.j_unchecked(w) / x.exp_m1()
    }

    /// `g_V(Δ) = ∫ J_V(ω) e^{−iωΔ} dω / 2π` (closed form for the Ohmic family,
    /// exact integration of the interpolant for tabulated densities).
    pub fn g_v(&self, delta: f64) -> C64 {
        match &self.family {
            SpectralFamily::OhmicExponential { gamma0 } => {
                let l = self.cutoff;
                let pref = (gamma0 * l * l * l / (8.0 * PI)).sqrt();
                let d = c(1.0, l * delta);
                pref / (d * d)
            }
            SpectralFamily::Tabulated(t) => {
                let mut acc = c(0.0, 0.0);
                for i in 0..t.omega.len() - 1 {
                    let (w0, w1) = (t.omega[i], t.omega[i + 1]);
                    let h = w1 - w0;
                    let (p0, p1) = filon_linear_weights(-h * delta);
                    acc += C64::from_polar(h, -w0 * delta) * (p0 * t.j[i] + p1 * t.j[i + 1]);
                }
                acc / (2.0 * PI)
            }
        }
    }

    /// The pair `(G(Δ), G̃(Δ))` at an arbitrary lag. Each call builds a
    /// thermal quadrature rule; use [`build_kernels`] for grids.
    pub fn kernels_at(&self, delta: f64) -> Result<(Mat2, Mat2)> {
        let rule = ThermalRule::new(self, delta.abs().max(1.0))?;
        let (g, gt) = assemble(self.alpha, self.g_v(delta.abs()), rule.eval(delta.abs()));
        if delta < 0.0 {
            Ok((g.adjoint(), gt.adjoint()))
        } else {
            Ok((g, gt))
        }
    }

    /// `g̃_V(Δ)` at an arbitrary lag.
    pub fn gtilde_v(&self, delta: f64) -> Result<C64> {
        Ok(ThermalRule::new(self, delta.abs().max(1.0))?.eval(delta))
    }
}

pub(crate) fn bose(w: f64, t: f64) -> f64 {
    if t == 0.0 || w / t > 700.0 {
        0.0
    } else {
        1.0 / (w / t).exp_m1()
    }
}

/// Assemble `(G, G̃)` from the scalar transforms `g_V` and `g̃_V` at one lag.
///
/// All `W` and `VW` transforms are derived by scaling the `V` ones, so at
/// `α = 1` the entries that coincide analytically are bitwise identical.
pub fn assemble(alpha: f64, g_v: C64, gt_v: C64) -> (Mat2, Mat2) {
    let a2 = alpha * alpha;
    let g_w = g_v * a2;
    let g_vw = g_v * alpha;
    let gt_w = gt_v * a2;
    let gt_vw = gt_v * alpha;

    let g11 = g_v - g_w.conj();
    let g12 = g_vw - g_vw.conj();
    let g = Mat2::new(g11, g12, -g12.conj(), -g11.conj());

    let gt11 = gt_v + g_w.conj() + gt_w.conj();
    let gt12 = gt_vw + g_vw.conj() + gt_vw.conj();
    let gt22 = gt_w + g_v.conj() + gt_v.conj();
    let gt = Mat2::new(gt11, gt12, gt12, gt22);
    (g, gt)
}

/// Composite Gauss–Legendre rule for `g̃_V`, graded towards `ω = 0` on the
/// thermal scale and with panels narrow enough to resolve `e^{−iωΔ}` up to
/// the largest requested lag.
#[derive(Debug, Clone)]
pub(crate) struct ThermalRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

const THERMAL_ORDER: usize = 16;

impl ThermalRule {
    pub(crate) fn new(model: &SpectralModel, delta_max: f64) -> Result<Self> {
        let t = model.temperature;
        if t == 0.0 {
            return Ok(ThermalRule { nodes: vec![], weights: vec![] });
        }
        let panels = thermal_panels(model, delta_max);
        let rule = Self::with_order(model, &panels, THERMAL_ORDER);
        let check = Self::with_order(model, &panels, THERMAL_ORDER + 8);
        let scale: f64 = rule.weights.iter().map(|w| w.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        for d in [0.0, 0.5 * delta_max, delta_max] {
            let diff = (rule.eval(d) - check.eval(d)).norm();
            if diff > 1e-11 * scale {
                return Err(Error::NumericalQuality(format!(
                    "thermal transform did not converge at Δ = {d:.3e}: order {THERMAL_ORDER} and {} \
                     rules differ by {diff:.3e} (scale {scale:.3e})",
                    THERMAL_ORDER + 8
                )));
            }
        }
        Ok(rule)
    }

    fn with_order(model: &SpectralModel, panels: &[(f64, f64)], order: usize) -> Self {
        let gl = GaussLegendre::new(order);
        let mut nodes = Vec::with_capacity(panels.len() * order);
        let mut weights = Vec::with_capacity(panels.len() * order);
        for &(a, b) in panels {
            for (x, w) in gl.on_interval(a, b) {
                let f = model.j_thermal(x);
                if f != 0.0 {
                    nodes.push(x);
                    weights.push(w * f / (2.0 * PI));
                }
            }
        }
        ThermalRule { nodes, weights }
    }

    pub(crate) fn eval(&self, delta: f64) -> C64 {
        let mut acc = c(0.0, 0.0);
        for (&w, &wt) in self.nodes.iter().zip(&self.weights) {
            acc += C64::from_polar(wt, -w * delta);
        }
        acc
    }
}

fn thermal_panels(model: &SpectralModel, delta_max: f64) -> Vec<(f64, f64)> {
    let t = model.temperature;
    // Beyond ~60 T the Bose factor is below e^{-60} relative to the peak.
    let hi = model.default_omega_max().min(60.0 * t);
    let width_cap = (0.5 * model.cutoff).min(10.0 / delta_max.max(1e-300));
    let mut edges = vec![0.0];
    let mut e = t / 8.0;
    while e < hi {
        edges.push(e);
        e *= 2.0;
    }
    edges.push(hi);
    if let SpectralFamily::Tabulated(tab) = &model.family {
        edges.extend(tab.omega.iter().copied().filter(|&w| w > 0.0 && w < hi));
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * hi);
    }
    let mut panels = Vec::new();
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let pieces = ((b - a) / width_cap).ceil().max(1.0) as usize;
        let h = (b - a) / pieces as f64;
        for k in 0..pieces {
            panels.push((a + k as f64 * h, if k + 1 == pieces { b } else { a + (k + 1) as f64 * h }));
        }
    }
    panels
}

/// `G` and `G̃` sampled at the lags `j·dt`, `j = 0..=n`, of a uniform grid.
///
/// Negative lags follow from `K(−Δ) = K(Δ)†`. The scalar transforms `g_V` and
/// `g̃_V` are kept alongside for the short-time estimates.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub dt: f64,
    pub alpha: f64,
    /// Largest frequency present in the bath (used for resolution guards).
    pub max_frequency: f64,
    g_v: Vec<C64>,
    gt_v: Vec<C64>,
    g: Vec<Mat2>,
    gt: Vec<Mat2>,
}

impl Kernel {
    /// Number of sampled lags (`n + 1`).
    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    pub fn g(&self, j: usize) -> &Mat2 {
        &self.g[j]
    }

    pub fn gtilde(&self, j: usize) -> &Mat2 {
        &self.gt[j]
    }

    pub fn g_at_lag(&self, lag: isize) -> Mat2 {
        if lag >= 0 {
            self.g[lag as usize]
        } else {
            self.g[(-lag) as usize].adjoint()
        }
    }

    pub fn gtilde_at_lag(&self, lag: isize) -> Mat2 {
        if lag >= 0 {
            self.gt[lag as usize]
        } else {
            self.gt[(-lag) as usize].adjoint()
        }
    }

    pub fn g_v(&self, j: usize) -> C64 {
        self.g_v[j]
    }

    pub fn gtilde_v(&self, j: usize) -> C64 {
        self.gt_v[j]
    }

    pub fn g_table(&self) -> &[Mat2] {
        &self.g
    }

    pub fn gtilde_table(&self) -> &[Mat2] {
        &self.gt
    }

    fn from_scalars(dt: f64, alpha: f64, max_frequency: f64, g_v: Vec<C64>, gt_v: Vec<C64>) -> Self {
        let (g, gt) = g_v.iter().zip(&gt_v).map(|(&a, &b)| assemble(alpha, a, b)).unzip();
        Kernel { dt, alpha, max_frequency, g_v, gt_v, g, gt }
    }

    /// Kernels of a finite bath on the lags of `grid`:
    /// `G(Δ) = Σ_k C_k e^{−iω_k ZΔ} Z C_k` and
    /// `G̃(Δ) = Σ_k C_k e^{−iω_k ZΔ} N_k C_k` with `C_k = [[V_k, W_k], [W_k, V_k]]`
    /// and `N_k = diag(n̄_k, 1 + n̄_k)`.
    pub fn from_bath(bath: &BathDiscretization, grid: &TimeGrid) -> Result<Self> {
        if bath.squeezing.iter().any(|s| s.norm() != 0.0) {
            return Err(Error::Inconsistent("bath modes with ⟨b b⟩ ≠ 0 give a non-stationary noise kernel".into()));
        }
        let n = grid.n_steps;
        let dt = grid.dt();
        let mut g_v = vec![c(0.0, 0.0); n + 1];
        let mut gt_v = vec![c(0.0, 0.0); n + 1];
        let mut g = vec![Mat2::zeros(); n + 1];
        let mut gt = vec![Mat2::zeros(); n + 1];
        for k in 0..bath.n_modes() {
            let (v, w, nk, wk) = (bath.v[k], bath.w[k], bath.occupations[k], bath.frequencies[k]);
            let rot = C64::from_polar(1.0, -wk * dt);
            let mut e = c(1.0, 0.0);
            for j in 0..=n {
                // e = e^{-iω_k jΔt}; the periodic re-seed limits phase drift.
                if j % 64 == 0 {
                    e = C64::from_polar(1.0, -wk * dt * j as f64);
                }
                let ec = e.conj();
                g_v[j] += e * (v * v);
                gt_v[j] += e * (v * v * nk);
                // C diag(e, −e*) C and C diag(n e, (1+n) e*) C.
                let (p, q) = (e, -ec);
                g[j] += Mat2::new(
                    p * (v * v) + q * (w * w),
                    (p + q) * (v * w),
                    (p + q) * (v * w),
                    p * (w * w) + q * (v * v),
                );
                let (p, q) = (e * nk, ec * (1.0 + nk));
                gt[j] += Mat2::new(
                    p * (v * v) + q * (w * w),
                    (p + q) * (v * w),
                    (p + q) * (v * w),
                    p * (w * w) + q * (v * v),
                );
                e *= rot;
            }
        }
        Ok(Kernel { dt, alpha: bath.alpha, max_frequency: bath.cutoff, g_v, gt_v, g, gt })
    }
}

/// Sample `G` and `G̃` of the continuum model on the lags of `grid`.
pub fn build_kernels(model: &SpectralModel, grid: &TimeGrid) -> Result<Kernel> {
    let n = grid.n_steps;
    let dt = grid.dt();
    let rule = ThermalRule::new(model, grid.t_end)?;
    let g_v: Vec<C64> = (0..=n).map(|j| model.g_v(j as f64 * dt)).collect();
    let gt_v: Vec<C64> = (0..=n).map(|j| rule.eval(j as f64 * dt)).collect();
    if g_v.iter().chain(&gt_v).any(|z| !z.is_finite()) {
        return Err(Error::NumericalQuality("non-finite kernel sample".into()));
    }
    let max_frequency = match &model.family {
        SpectralFamily::OhmicExponential { .. } => model.cutoff,
        SpectralFamily::Tabulated(t) => t.max_omega(),
    };
    Ok(Kernel::from_scalars(dt, model.alpha, max_frequency, g_v, gt_v))
}

/// How continuum frequencies are turned into bath modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscretizationScheme {
    /// Equal bins of width `Δω = ω_max/N`, mode at each bin centre,
    /// `V_j² = J_V(ω_j) Δω / 2π`.
    LinearMidpoint,
    /// Nodes and weights of an `N`-point Gauss–Legendre rule on `[0, ω_max]`,
    /// `V_j² = J_V(ω_j) w_j / 2π`. Much more accurate for smooth integrands,
    /// in particular at low temperature.
    GaussLegendre,
}

impl DiscretizationScheme {
    pub fn id(self) -> &'static str {
        match self {
            DiscretizationScheme::LinearMidpoint => "linear-midpoint",
            DiscretizationScheme::GaussLegendre => "gauss-legendre",
        }
    }
}

/// A finite bath: frequencies, couplings and the initial one-mode moments
/// `n̄_k = ⟨b_k† b_k⟩`, `s̄_k = ⟨b_k b_k⟩`.
#[derive(Debug, Clone)]
pub struct BathDiscretization {
    pub frequencies: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub occupations: Vec<f64>,
    pub squeezing: Vec<C64>,
    pub alpha: f64,
    /// Cutoff of the continuum model the modes were drawn from.
    pub cutoff: f64,
    pub omega_max: f64,
    pub scheme: DiscretizationScheme,
    /// Fraction of `∫ J_V` lying beyond `ω_max` (where known).
    pub truncated_weight: f64,
}

impl BathDiscretization {
    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    /// Largest gap between neighbouring mode frequencies.
    pub fn max_spacing(&self) -> f64 {
        let mut gap = self.frequencies.first().copied().unwrap_or(0.0);
        for p in self.frequencies.windows(2) {
            gap = gap.max(p[1] - p[0]);
        }
        gap
    }

    /// Half of the shortest revival period `2π/Δω`: finite-bath results are
    /// only trusted before this time.
    pub fn recurrence_time(&self) -> f64 {
        0.5 * 2.0 * PI / self.max_spacing()
    }
}

/// Turn the continuum bath into `n_modes` oscillators on `[0, ω_max]` with
/// thermal occupations at the model temperature.
pub fn discretize_bath(
    model: &SpectralModel,
    n_modes: usize,
    omega_max: f64,
    scheme: DiscretizationScheme,
) -> Result<BathDiscretization> {
    if n_modes == 0 {
        return Err(Error::param("n_modes", "need at least one mode"));
    }
    if !(omega_max > 0.0) || !omega_max.is_finite() {
        return Err(Error::param("omega_max", format!("must be finite and > 0, got {omega_max}")));
    }
    let (freqs, widths): (Vec<f64>, Vec<f64>) = match scheme {
        DiscretizationScheme::LinearMidpoint => {
            let dw = omega_max / n_modes as f64;
            (0..n_modes).map(|j| ((j as f64 + 0.5) * dw, dw)).unzip()
        }
        DiscretizationScheme::GaussLegendre => GaussLegendre::new(n_modes).on_interval(0.0, omega_max).unzip(),
    };
    let v: Vec<f64> =
        freqs.iter().zip(&widths).map(|(&w, &dw)| (model.j_unchecked(w) * dw / (2.0 * PI)).sqrt()).collect();
    let w: Vec<f64> = v.iter().map(|x| model.alpha * x).collect();
    let occupations = freqs.iter().map(|&w| model.occupation(w)).collect();
    let truncated_weight = match &model.family {
        SpectralFamily::OhmicExponential { .. } => {
            let x = omega_max / model.cutoff;
            (1.0 + x) * (-x).exp()
        }
        SpectralFamily::Tabulated(t) => {
            let total: f64 =
                t.omega.windows(2).zip(t.j.windows(2)).map(|(o, j)| 0.5 * (o[1] - o[0]) * (j[0] + j[1])).sum();
            let kept = trapezoid_tab_until(t, omega_max);
            if total > 0.0 {
                ((total - kept) / total).max(0.0)
            } else {
                0.0
            }
        }
    };
    if truncated_weight > 1e-6 {
        log::warn!(
            "bath truncated at ω_max = {omega_max}: {:.2e} of the spectral weight is discarded",
            truncated_weight
        );
    }
    Ok(BathDiscretization {
        frequencies: freqs,
        v,
        w,
        occupations,
        squeezing: vec![c(0.0, 0.0); n_modes],
        alpha: model.alpha,
        cutoff: model.cutoff,
        omega_max,
        scheme,
        truncated_weight,
    })
}

fn trapezoid_tab_until(t: &TabulatedDensity, limit: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..t.omega.len() - 1 {
        let (a, b) = (t.omega[i], t.omega[i + 1]);
        if a >= limit {
            break;
        }
        let bb = b.min(limit);
        acc += 0.5 * (bb - a) * (t.j[i] + t.eval(bb));
    }
    acc
}
