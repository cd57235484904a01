//! Green functions of the reduced dynamics.
//!
//! The system operators `x = (a, a†)ᵀ` evolve as
//! `x(t) = U(t) x(0) + (bath operators)`, where the retarded function obeys
//!
//! ```text
//! dU/dt = −iω_s Z U(t) − ∫_0^t Z G(t−τ) U(τ) dτ,   U(0) = 1,
//! ```
//!
//! and the bath part is characterised by the noise correlation
//!
//! ```text
//! V(τ, t) = ∫_0^τ dτ' ∫_0^t dt' U(τ−τ') Z G̃(τ'−t') Z U†(t−t').
//! ```
//!
//! Two independent routes to `V(t, t)` are provided: direct 2-D quadrature of
//! the double integral ([`solve_v_fdt`]) and a Volterra equation in the first
//! time argument ([`solve_v_volterra`]).

use crate::error::{Error, Result};
use crate::linalg::{c, is_finite, max_abs, re, z, z_left, z_right, Mat2, C64};
use crate::quadrature::filon_linear_weights;
use crate::spectral::{BathDiscretization, Kernel};

/// Uniform grid `t_j = j · t_end / n_steps`, `j = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_end: f64,
    pub n_steps: usize,
}

/// Largest allowed `Δt · max(ω_s, Λ)`.
pub const RESOLUTION_LIMIT: f64 = 0.25;

/// Entries of `U` beyond this size are treated as a blow-up.
const BLOWUP: f64 = 1e8;

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::param("t_end", format!("must be finite and > 0, got {t_end}")));
        }
        if n_steps < 8 {
            return Err(Error::param("n_steps", format!("need at least 8 steps, got {n_steps}")));
        }
        Ok(TimeGrid { t_end, n_steps })
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|j| self.time(j)).collect()
    }

    /// Reject grids too coarse to resolve the fastest scale of the problem.
    pub fn check_resolution(&self, max_frequency: f64) -> Result<()> {
        let lim = RESOLUTION_LIMIT / max_frequency;
        if self.dt() > lim {
            return Err(Error::param(
                "n_steps",
                format!(
                    "Δt = {:.4e} exceeds {RESOLUTION_LIMIT}/max(ω_s, Λ) = {lim:.4e}; use at least {} steps",
                    self.dt(),
                    (self.t_end / lim).ceil() as usize
                ),
            ));
        }
        Ok(())
    }

    fn check_kernel(&self, kernel: &Kernel) -> Result<()> {
        if kernel.len() < self.n_steps + 1 {
            return Err(Error::Inconsistent(format!(
                "kernel sampled on {} lags, grid needs {}",
                kernel.len(),
                self.n_steps + 1
            )));
        }
        if (kernel.dt - self.dt()).abs() > 1e-12 * self.dt() {
            return Err(Error::Inconsistent(format!("kernel step {} differs from grid step {}", kernel.dt, self.dt())));
        }
        Ok(())
    }
}

/// `U(t_j)` and `U̇(t_j)` on the grid.
#[derive(Debug, Clone)]
pub struct RetardedSeries {
    pub grid: TimeGrid,
    pub omega_s: f64,
    pub u: Vec<Mat2>,
    pub u_dot: Vec<Mat2>,
}

/// Equal-time correlation `V(t_j, t_j)` and its first-argument derivative
/// `∂_τ V(τ, t)|_{τ = t_j}`.
#[derive(Debug, Clone)]
pub struct CorrelationSeries {
    pub v: Vec<Mat2>,
    pub v_dot: Vec<Mat2>,
}

impl CorrelationSeries {
    pub fn zeros(len: usize) -> Self {
        CorrelationSeries { v: vec![Mat2::zeros(); len], v_dot: vec![Mat2::zeros(); len] }
    }

    /// Element-wise sum, used to add the correlated-initial-state correction.
    pub fn plus(&self, other: &CorrelationSeries) -> Result<CorrelationSeries> {
        if self.v.len() != other.v.len() {
            return Err(Error::Inconsistent("correlation series of different length".into()));
        }
        Ok(CorrelationSeries {
            v: self.v.iter().zip(&other.v).map(|(a, b)| a + b).collect(),
            v_dot: self.v_dot.iter().zip(&other.v_dot).map(|(a, b)| a + b).collect(),
        })
    }
}

/// Everything the coefficient stage needs from the Green functions.
#[derive(Debug, Clone)]
pub struct GreensSolution {
    pub grid: TimeGrid,
    pub omega_s: f64,
    pub alpha: f64,
    pub retarded: RetardedSeries,
    pub correlation: CorrelationSeries,
}

impl GreensSolution {
    /// `U` from the Volterra equation and `V` from the double integral.
    pub fn compute(kernel: &Kernel, omega_s: f64, grid: &TimeGrid) -> Result<Self> {
        let retarded = solve_u(kernel, omega_s, grid)?;
        let correlation = solve_v_fdt(kernel, &retarded)?;
        Ok(GreensSolution { grid: *grid, omega_s, alpha: kernel.alpha, retarded, correlation })
    }
}

/// Integrate `dY/dt = −iω_s Z Y − ∫_0^t Z G(t−τ) Y(τ) dτ + f(t)`.
///
/// The free rotation is integrated exactly (integrating factor
/// `e^{−iω_s Z t}`) and the memory and forcing terms with the trapezoidal
/// rule, both in the time step and in the memory quadrature. The step
/// equation is linear in the new value and is solved exactly (2×2), so no
/// predictor is needed. Second order in `Δt`, and exact for an uncoupled
/// oscillator.
///
/// `zg[j] = Z G(j Δt)`; returns `(Y_j, Ẏ_j)` for `j = 0..=n`.
fn march_volterra(
    omega_s: f64,
    zg: &[Mat2],
    dt: f64,
    n: usize,
    y0: Mat2,
    forcing: impl Fn(usize) -> Mat2,
) -> Result<(Vec<Mat2>, Vec<Mat2>)> {
    let iwz = z() * c(0.0, omega_s);
    let rot =
        Mat2::new(C64::from_polar(1.0, -omega_s * dt), c(0.0, 0.0), c(0.0, 0.0), C64::from_polar(1.0, omega_s * dt));
    let lhs = Mat2::identity() + zg[0] * re(0.25 * dt * dt);
    let lhs_inv = lhs.try_inverse().ok_or_else(|| Error::Instability("trapezoidal step matrix is singular".into()))?;

    let mut y = Vec::with_capacity(n + 1);
    let mut yd = Vec::with_capacity(n + 1);
    y.push(y0);
    yd.push(-iwz * y0 + forcing(0));
    for m in 0..n {
        // History part of the memory integral at t_{m+1}.
        let mut h = zg[m + 1] * y[0] * re(0.5);
        for j in 1..=m {
            h += zg[m + 1 - j] * y[j];
        }
        h *= c(dt, 0.0);
        let f_next = forcing(m + 1);
        // f − memory at t_m, recovered from the stored derivative.
        let q_m = yd[m] + iwz * y[m];
        let rhs = rot * (y[m] + q_m * re(0.5 * dt)) + (f_next - h) * re(0.5 * dt);
        let y_next = lhs_inv * rhs;
        if !is_finite(&y_next) || max_abs(&y_next) > BLOWUP {
            return Err(Error::Instability(format!(
                "solution exceeded {BLOWUP:.0e} at step {} (t = {:.6e})",
                m + 1,
                (m + 1) as f64 * dt
            )));
        }
        let mem = h + zg[0] * y_next * re(0.5 * dt);
        yd.push(-iwz * y_next - mem + f_next);
        y.push(y_next);
    }
    Ok((y, yd))
}

fn checked_setup(kernel: &Kernel, omega_s: f64, grid: &TimeGrid) -> Result<()> {
    if !(omega_s >= 0.0) || !omega_s.is_finite() {
        return Err(Error::param("omega_s", format!("must be finite and ≥ 0, got {omega_s}")));
    }
    grid.check_kernel(kernel)?;
    grid.check_resolution(omega_s.max(kernel.max_frequency))
}

/// Retarded function `U(t)` on the grid (second order in `Δt`).
pub fn solve_u(kernel: &Kernel, omega_s: f64, grid: &TimeGrid) -> Result<RetardedSeries> {
    checked_setup(kernel, omega_s, grid)?;
    let n = grid.n_steps;
    let zg: Vec<Mat2> = (0..=n).map(|j| z_left(kernel.g(j))).collect();
    let (u, u_dot) = march_volterra(omega_s, &zg, grid.dt(), n, Mat2::identity(), |_| Mat2::zeros())?;
    Ok(RetardedSeries { grid: *grid, omega_s, u, u_dot })
}

/// How the double integral for `V` treats the noise kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdtForm {
    /// Quadrature of `∫∫ U Z G̃ Z U†` as it stands.
    Direct,
    /// Split `G̃ = G̃_s − G/2` into the symmetrised kernel `G̃_s` and the
    /// state-independent commutator part. The latter integrates exactly to
    /// `(Z − U Z U†)/2` (preservation of `[a, a†] = 1`), so only `G̃_s` is
    /// integrated numerically. This makes the commutator identities of the
    /// reduced moments exact to round-off on any grid.
    Symmetrized,
}

/// `V(t, t)` and `∂_τ V(τ, t)|_{τ=t}` by 2-D trapezoidal quadrature, using
/// [`FdtForm::Symmetrized`].
pub fn solve_v_fdt(kernel: &Kernel, retarded: &RetardedSeries) -> Result<CorrelationSeries> {
    solve_v_fdt_with(kernel, retarded, FdtForm::Symmetrized)
}

/// `V(t, t) = ∫∫_{[0,t]²} U(s) Z G̃(s'−s) Z U†(s') ds ds'` and
/// `∂_τ V = ∫_0^t Z G̃(s') Z U†(s') ds' + ∫∫ U̇(s) Z G̃(s'−s) Z U†(s') ds ds'`.
///
/// The 2-D trapezoid for every `t_n` is updated from the one at `t_{n−1}` by
/// adding the new row and column, so the whole series costs `O(n²)`.
pub fn solve_v_fdt_with(kernel: &Kernel, retarded: &RetardedSeries, form: FdtForm) -> Result<CorrelationSeries> {
    let grid = retarded.grid;
    grid.check_kernel(kernel)?;
    let n = grid.n_steps;
    let dt = grid.dt();
    let u = &retarded.u;
    let ud = &retarded.u_dot;
    let uadj: Vec<Mat2> = u.iter().map(|m| m.adjoint()).collect();

    // Z K(j) Z for the kernel actually integrated, j ≥ 0; negative lags are adjoints.
    let zkz: Vec<Mat2> = (0..=n)
        .map(|j| {
            let k = match form {
                FdtForm::Direct => *kernel.gtilde(j),
                FdtForm::Symmetrized => kernel.gtilde(j) + kernel.g(j) * re(0.5),
            };
            z_right(&z_left(&k))
        })
        .collect();
    let zkz_lag = |lag: isize| -> Mat2 {
        if lag >= 0 {
            zkz[lag as usize]
        } else {
            zkz[(-lag) as usize].adjoint()
        }
    };
    let weight = |j: usize| if j == 0 { 0.5 } else { 1.0 };

    let mut v = Vec::with_capacity(n + 1);
    let mut v_dot = Vec::with_capacity(n + 1);
    let mut t_sum = Mat2::zeros(); // Σ a_i a_j U_i ZKZ U_j†
    let mut tb_sum = Mat2::zeros(); // Σ a_i a_j U̇_i ZKZ U_j†
    let mut p_sum = Mat2::zeros(); // Σ a_j ZKZ(j) U_j†
    let dt2 = dt * dt;
    for m in 0..=n {
        let mut s1 = Mat2::zeros();
        let mut s2 = Mat2::zeros();
        for j in 0..=m {
            let w = weight(j);
            let lag = j as isize - m as isize;
            s1 += zkz_lag(lag) * uadj[j] * re(w);
            s2 += ud[j] * zkz_lag(-lag) * re(w);
        }
        let r = u[m] * s1;
        let rb = ud[m] * s1;
        let cb = s2 * uadj[m];
        let a_mm = u[m] * zkz[0] * uadj[m];
        let b_mm = ud[m] * zkz[0] * uadj[m];
        p_sum += zkz[m] * uadj[m] * re(weight(m));
        if m == 0 {
            t_sum = a_mm * re(0.25);
            tb_sum = b_mm * re(0.25);
            v.push(Mat2::zeros());
            v_dot.push(Mat2::zeros());
            continue;
        }
        t_sum += r + r.adjoint() - a_mm;
        tb_sum += rb + cb - b_mm;
        let vm = (t_sum - (r + r.adjoint()) * re(0.5) + a_mm * re(0.25)) * re(dt2);
        let first = (p_sum - zkz[m] * uadj[m] * re(0.5)) * re(dt);
        let second = (tb_sum - (rb + cb) * re(0.5) + b_mm * re(0.25)) * re(dt2);
        v.push(vm);
        v_dot.push(first + second);
    }

    if form == FdtForm::Symmetrized {
        let zz = z();
        let iw = c(0.0, retarded.omega_s);
        for m in 0..=n {
            let uzu = u[m] * zz * uadj[m];
            v[m] -= (zz - uzu) * re(0.5);
            v_dot[m] -= (Mat2::identity() * (-iw) - ud[m] * zz * uadj[m]) * re(0.5);
        }
    }
    if v.iter().chain(&v_dot).any(|m| !is_finite(m)) {
        return Err(Error::NumericalQuality("non-finite noise correlation".into()));
    }
    Ok(CorrelationSeries { v, v_dot })
}

/// Result of the Volterra route: equal-time values plus, optionally, the full
/// two-time table `two_time[n][m] = V(t_m, t_n)` for `m ≤ n`.
#[derive(Debug, Clone)]
pub struct VolterraCorrelation {
    pub equal_time: CorrelationSeries,
    pub two_time: Option<Vec<Vec<Mat2>>>,
}

/// `V(τ, t)` from the Volterra equation in `τ` at fixed `t`:
///
/// ```text
/// ∂_τ V(τ,t) = −iω_s Z V(τ,t) − ∫_0^τ Z G(τ−τ') V(τ',t) dτ' + R(τ,t),
/// R(τ,t) = ∫_0^t Z G̃(τ−t') Z U†(t−t') dt',   V(0,t) = 0.
/// ```
///
/// The forcing uses the backward propagator in the form `U(t', t) Z = Z U†(t − t')`.
/// Cost is `O(n³)`: one `O(n²)` march per target time.
pub fn solve_v_volterra(
    kernel: &Kernel,
    retarded: &RetardedSeries,
    keep_two_time: bool,
) -> Result<VolterraCorrelation> {
    let grid = retarded.grid;
    grid.check_kernel(kernel)?;
    let n = grid.n_steps;
    let dt = grid.dt();
    let zg: Vec<Mat2> = (0..=n).map(|j| z_left(kernel.g(j))).collect();
    let zgtz: Vec<Mat2> = (0..=n).map(|j| z_right(&z_left(kernel.gtilde(j)))).collect();
    let zgtz_lag = |lag: isize| -> Mat2 {
        if lag >= 0 {
            zgtz[lag as usize]
        } else {
            zgtz[(-lag) as usize].adjoint()
        }
    };
    let uadj: Vec<Mat2> = retarded.u.iter().map(|m| m.adjoint()).collect();

    // R(t_m, t_nt) = Δt Σ_l c_l ZG̃Z((m − nt + l)Δt) U†(t_l) depends on m − nt only.
    // acc[k] accumulates Σ_{l ≤ nt} a_l ZG̃Z((l − k)Δt) U_l† for k = nt − m ∈ [0, n].
    let mut acc = vec![Mat2::zeros(); n + 1];
    let mut v = vec![Mat2::zeros(); n + 1];
    let mut v_dot = vec![Mat2::zeros(); n + 1];
    let mut table = if keep_two_time { Some(Vec::with_capacity(n + 1)) } else { None };

    for nt in 0..=n {
        let a = if nt == 0 { 0.5 } else { 1.0 };
        for (k, slot) in acc.iter_mut().enumerate() {
            *slot += zgtz_lag(nt as isize - k as isize) * uadj[nt] * re(a);
        }
        if nt == 0 {
            v[0] = Mat2::zeros();
            v_dot[0] = Mat2::zeros();
            if let Some(t) = table.as_mut() {
                t.push(vec![Mat2::zeros()]);
            }
            continue;
        }
        // Trapezoid end correction at l = nt.
        let forcing: Vec<Mat2> = (0..=nt)
            .map(|m| {
                let k = nt - m;
                (acc[k] - zgtz_lag(nt as isize - k as isize) * uadj[nt] * re(0.5)) * re(dt)
            })
            .collect();
        let (w, wd) = march_volterra(retarded.omega_s, &zg, dt, nt, Mat2::zeros(), |m| forcing[m])?;
        v[nt] = w[nt];
        v_dot[nt] = wd[nt];
        if let Some(t) = table.as_mut() {
            t.push(w);
        }
    }
    Ok(VolterraCorrelation { equal_time: CorrelationSeries { v, v_dot }, two_time: table })
}

/// Initial system–bath correlations `n'_k = ⟨a† b_k⟩` and `s'_k = ⟨a b_k⟩`.
#[derive(Debug, Clone, Default)]
pub struct InitialCorrelations {
    pub n_prime: Vec<C64>,
    pub s_prime: Vec<C64>,
}

/// Correction to `V` from initial system–bath correlations:
///
/// ```text
/// ΔV(τ, t) = Σ_k B_k(τ) Q_k U†(t) + U(τ) Q_k† B_k†(t),
/// Q_k = [[n'_k, s'_k], [s'_k*, n'_k*]],
/// B_k(t) = −i ∫_0^t U(t−s) Z C_k e^{−iω_k Z s} ds,
/// ```
///
/// where `B_k` is the response of the system to bath mode `k`. The integral is
/// accumulated with Filon weights (exact for linearly interpolated `U`), so
/// fast bath oscillations cost nothing extra. Returns `ΔV(t,t)` and
/// `∂_τ ΔV(τ,t)|_{τ=t}`.
pub fn correlated_correction(
    bath: &BathDiscretization,
    init: &InitialCorrelations,
    retarded: &RetardedSeries,
) -> Result<CorrelationSeries> {
    let nm = bath.n_modes();
    if init.n_prime.len() != nm || init.s_prime.len() != nm {
        return Err(Error::Inconsistent(format!(
            "{} bath modes but {} / {} initial correlations",
            nm,
            init.n_prime.len(),
            init.s_prime.len()
        )));
    }
    let grid = retarded.grid;
    let n = grid.n_steps;
    let dt = grid.dt();
    let u = &retarded.u;
    let ud = &retarded.u_dot;
    let mut out = CorrelationSeries::zeros(n + 1);
    for k in 0..nm {
        let (v, w, om) = (bath.v[k], bath.w[k], bath.frequencies[k]);
        let q = Mat2::new(init.n_prime[k], init.s_prime[k], init.s_prime[k].conj(), init.n_prime[k].conj());
        if q.iter().all(|x| x.norm() == 0.0) {
            continue;
        }
        let zc = Mat2::new(c(v, 0.0), c(w, 0.0), c(-w, 0.0), c(-v, 0.0));
        let (p0p, p1p) = filon_linear_weights(om * dt);
        let (p0m, p1m) = filon_linear_weights(-om * dt);
        // E±(t) = ∫_0^t U(s) e^{±iωs} ds
        let mut ep = Mat2::zeros();
        let mut em = Mat2::zeros();
        for m in 0..=n {
            let t = m as f64 * dt;
            if m > 0 {
                let s = (m - 1) as f64 * dt;
                ep += (u[m - 1] * p0p + u[m] * p1p) * C64::from_polar(dt, om * s);
                em += (u[m - 1] * p0m + u[m] * p1m) * C64::from_polar(dt, -om * s);
            }
            // I = [E+ (ZC)_{:,0}, E− (ZC)_{:,1}], B = −i I diag(e^{−iωt}, e^{iωt}).
            let i0 = ep * zc.column(0);
            let i1 = em * zc.column(1);
            let ph = C64::from_polar(1.0, -om * t);
            let minus_i = c(0.0, -1.0);
            let b = Mat2::new(
                minus_i * i0[0] * ph,
                minus_i * i1[0] * ph.conj(),
                minus_i * i0[1] * ph,
                minus_i * i1[1] * ph.conj(),
            );
            // Ḃ = −i U Z C − iω B Z
            let b_dot = u[m] * zc * minus_i + z_right(&b) * c(0.0, -om);
            let bqu = b * q * u[m].adjoint();
            out.v[m] += bqu + bqu.adjoint();
            out.v_dot[m] += b_dot * q * u[m].adjoint() + ud[m] * q.adjoint() * b.adjoint();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::bar;
    use crate::spectral::{build_kernels, SpectralModel};

    fn setup(alpha: f64, temp: f64, t_end: f64, n: usize) -> (Kernel, TimeGrid, f64) {
        let m = SpectralModel::ohmic(3e-4, alpha, temp).unwrap();
        let grid = TimeGrid::new(t_end, n).unwrap();
        let k = build_kernels(&m, &grid).unwrap();
        (k, grid, m.default_omega_s().unwrap())
    }

    #[test]
    fn grid_guards() {
        assert!(TimeGrid::new(0.0, 100).is_err());
        assert!(TimeGrid::new(1.0, 7).is_err());
        let g = TimeGrid::new(10.0, 20).unwrap();
        assert!(g.check_resolution(1.0).is_err());
        assert!(TimeGrid::new(10.0, 40).unwrap().check_resolution(1.0).is_ok());
    }

    #[test]
    fn free_oscillator_without_coupling() {
        let m = SpectralModel::ohmic(0.0, 0.5, 0.01).unwrap();
        let grid = TimeGrid::new(10.0, 200).unwrap();
        let k = build_kernels(&m, &grid).unwrap();
        let ws = 0.3;
        let r = solve_u(&k, ws, &grid).unwrap();
        for (j, u) in r.u.iter().enumerate() {
            let t = grid.time(j);
            let want = Mat2::new(C64::from_polar(1.0, -ws * t), c(0.0, 0.0), c(0.0, 0.0), C64::from_polar(1.0, ws * t));
            assert!(max_abs(&(u - want)) < 1e-13, "t={t}");
        }
        let v = solve_v_fdt(&k, &r).unwrap();
        assert!(v.v.iter().all(|m| max_abs(m) < 1e-14));
    }

    #[test]
    fn retarded_function_has_mirror_structure() {
        let (k, grid, ws) = setup(0.6, 0.01, 10.0, 400);
        let r = solve_u(&k, ws, &grid).unwrap();
        for u in &r.u {
            assert!(max_abs(&(bar(u) - u)) < 1e-14);
        }
        // Weak coupling: |U11| ≈ e^{−γ t / 2}, with γ close to J_V(ω_s)(1 − α²)... only bounded check.
        let last = r.u.last().unwrap();
        assert!(last[(0, 0)].norm() < 1.0 && last[(0, 0)].norm() > 0.99);
    }

    #[test]
    fn u_converges_at_second_order() {
        let reference = {
            let (k, grid, ws) = setup(0.5, 0.01, 10.0, 1600);
            solve_u(&k, ws, &grid).unwrap()
        };
        let mut errs = vec![];
        for n in [100usize, 200, 400] {
            let (k, grid, ws) = setup(0.5, 0.01, 10.0, n);
            let r = solve_u(&k, ws, &grid).unwrap();
            let stride = 1600 / n;
            let e = r.u.iter().enumerate().map(|(j, u)| max_abs(&(u - reference.u[j * stride]))).fold(0.0, f64::max);
            errs.push(e);
        }
        for p in errs.windows(2) {
            let order = (p[0] / p[1]).log2();
            assert!((1.7..2.3).contains(&order), "order {order}, errors {errs:?}");
        }
    }

    #[test]
    fn symmetrized_and_direct_forms_agree() {
        let (k, grid, ws) = setup(0.5, 0.01, 10.0, 400);
        let r = solve_u(&k, ws, &grid).unwrap();
        let a = solve_v_fdt_with(&k, &r, FdtForm::Direct).unwrap();
        let b = solve_v_fdt_with(&k, &r, FdtForm::Symmetrized).unwrap();
        for j in 0..=grid.n_steps {
            assert!(max_abs(&(a.v[j] - b.v[j])) < 1e-6);
            assert!(max_abs(&(a.v_dot[j] - b.v_dot[j])) < 1e-6);
        }
    }

    #[test]
    fn fdt_derivative_matches_finite_difference() {
        let (k, grid, ws) = setup(0.75, 0.01, 10.0, 800);
        let r = solve_u(&k, ws, &grid).unwrap();
        let v = solve_v_fdt(&k, &r).unwrap();
        // d/dt V(t,t) = ∂_1 V + (∂_1 V)† because V(τ,t)† = V(t,τ).
        let dt = grid.dt();
        for j in (10..grid.n_steps).step_by(97) {
            let fd = (v.v[j + 1] - v.v[j - 1]) / c(2.0 * dt, 0.0);
            let an = v.v_dot[j] + v.v_dot[j].adjoint();
            assert!(max_abs(&(fd - an)) < 1e-6, "j={j}: {}", max_abs(&(fd - an)));
        }
    }

    #[test]
    fn volterra_matches_fdt() {
        let (k, grid, ws) = setup(0.5, 0.01, 8.0, 160);
        let r = solve_u(&k, ws, &grid).unwrap();
        let a = solve_v_fdt(&k, &r).unwrap();
        let b = solve_v_volterra(&k, &r, true).unwrap();
        for j in 0..=grid.n_steps {
            assert!(max_abs(&(a.v[j] - b.equal_time.v[j])) < 1e-5, "j={j}");
            assert!(max_abs(&(a.v_dot[j] - b.equal_time.v_dot[j])) < 1e-5, "j={j}");
        }
        let table = b.two_time.unwrap();
        assert_eq!(table[grid.n_steps].len(), grid.n_steps + 1);
        // V(t,t) is Hermitian.
        for m in &b.equal_time.v {
            assert!(max_abs(&(m - m.adjoint())) < 1e-8);
        }
    }

    #[test]
    fn zero_temperature_fano_limit_has_no_heating_or_squeezing() {
        // T = 0, α = 0: ⟨F†F⟩ = ⟨F F⟩ = 0 while ⟨F F†⟩ = 1 − |U11|².
        let (k, grid, ws) = setup(0.0, 0.0, 8.0, 160);
        let r = solve_u(&k, ws, &grid).unwrap();
        let b = solve_v_volterra(&k, &r, false).unwrap();
        let a = solve_v_fdt_with(&k, &r, FdtForm::Direct).unwrap();
        let s = solve_v_fdt(&k, &r).unwrap();
        for j in 0..=grid.n_steps {
            for v in [&a.v[j], &b.equal_time.v[j]] {
                assert_eq!(v[(0, 0)], c(0.0, 0.0));
                assert_eq!(v[(0, 1)], c(0.0, 0.0));
            }
            assert!(s.v[j][(0, 1)].norm() < 1e-15);
            // The symmetrized route reaches zero only up to its O(dt²) truncation.
            assert!(s.v[j][(0, 0)].norm() < 1e-7, "{}", s.v[j][(0, 0)]);
            let commutator = 1.0 - r.u[j][(0, 0)].norm_sqr();
            assert!((b.equal_time.v[j][(1, 1)].re - commutator).abs() < 1e-8);
            assert!(((s.v[j][(1, 1)] - s.v[j][(0, 0)]).re - commutator).abs() < 1e-13);
        }
    }
}
