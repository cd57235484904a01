//! Brute-force reference: the finite system+bath model propagated exactly.
//!
//! The Heisenberg equations of the quadratic Hamiltonian
//! `H = ω_s a†a + Σ_k ω_k b_k†b_k + Σ_k [V_k(a†b_k + b_k†a) + W_k(a†b_k† + b_k a)]`
//! are linear, `dX/dt = M X` with `X = (a, a†, b_1, b_1†, …)`, so the state is
//! carried by the Bogoliubov propagator `S(t) = e^{Mt}`. Only the rows that
//! are needed (normally the two system rows) are propagated; `M` is applied
//! in its arrow-shaped block form and never stored densely.

use crate::error::{Error, Result};
use crate::greens::InitialCorrelations;
use crate::linalg::{c, Mat2, C64};
use crate::moments::GaussianMoments;
use crate::spectral::BathDiscretization;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Largest `h · ‖M‖` used by the RK4 sub-steps.
pub const PHASE_PER_STEP: f64 = 0.025;

/// Generator of the Heisenberg dynamics in `(a, a†, b_k, b_k†)` order.
#[derive(Debug, Clone)]
pub struct LinearDynamics {
    pub omega_s: f64,
    pub frequencies: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

pub fn build_dynamics(bath: &BathDiscretization, omega_s: f64) -> Result<LinearDynamics> {
    if !(omega_s >= 0.0) || !omega_s.is_finite() {
        return Err(Error::param("omega_s", format!("must be finite and ≥ 0, got {omega_s}")));
    }
    let n = bath.n_modes();
    if bath.v.len() != n || bath.w.len() != n {
        return Err(Error::Inconsistent("coupling arrays do not match the mode count".into()));
    }
    if bath.v.iter().chain(&bath.w).chain(&bath.frequencies).any(|x| !x.is_finite()) {
        return Err(Error::param("bath", "non-finite frequency or coupling"));
    }
    Ok(LinearDynamics { omega_s, frequencies: bath.frequencies.clone(), v: bath.v.clone(), w: bath.w.clone() })
}

impl LinearDynamics {
    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    pub fn dim(&self) -> usize {
        2 + 2 * self.n_modes()
    }

    pub fn with_omega_s(&self, omega_s: f64) -> Self {
        LinearDynamics { omega_s, ..self.clone() }
    }

    /// Upper bound on the spectral radius of `M`.
    pub fn rate_bound(&self) -> f64 {
        let wmax = self.frequencies.iter().copied().fold(self.omega_s, f64::max);
        let coupling: f64 = self.v.iter().zip(&self.w).map(|(v, w)| (v.abs() + w.abs()).powi(2)).sum::<f64>().sqrt();
        wmax + coupling
    }

    /// `out = r · M` for a row vector `r`.
    pub fn apply_right(&self, r: &[C64], out: &mut [C64]) {
        let mi = c(0.0, -1.0);
        let (r0, r1) = (r[0], r[1]);
        // System columns collect −iω_s Z from the system entries and −i Z C_k
        // from every mode.
        let mut s0 = r0 * c(0.0, -self.omega_s);
        let mut s1 = r1 * c(0.0, self.omega_s);
        for k in 0..self.n_modes() {
            let (v, w, wk) = (self.v[k], self.w[k], self.frequencies[k]);
            let (q0, q1) = (r[2 + 2 * k], r[3 + 2 * k]);
            // row (q0, q1) · (−i Z C) with Z C = [[v, w], [−w, −v]]
            s0 += mi * (q0 * v - q1 * w);
            s1 += mi * (q0 * w - q1 * v);
            out[2 + 2 * k] = mi * (r0 * v - r1 * w) + q0 * c(0.0, -wk);
            out[3 + 2 * k] = mi * (r0 * w - r1 * v) + q1 * c(0.0, wk);
        }
        out[0] = s0;
        out[1] = s1;
    }

    /// Dense `M` (for small baths and tests).
    pub fn to_dense(&self) -> DMatrix<C64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        let mut row = vec![c(0.0, 0.0); d];
        let mut out = vec![c(0.0, 0.0); d];
        for i in 0..d {
            row.iter_mut().for_each(|x| *x = c(0.0, 0.0));
            row[i] = c(1.0, 0.0);
            self.apply_right(&row, &mut out);
            for j in 0..d {
                m[(i, j)] = out[j];
            }
        }
        m
    }

    /// Normal-ordered energy `⟨H⟩` for the moment matrix `C_ij = ⟨X_j† X_i⟩`.
    pub fn energy(&self, cov: &DMatrix<C64>) -> f64 {
        let mut e = self.omega_s * cov[(0, 0)].re;
        for k in 0..self.n_modes() {
            let b = 2 + 2 * k;
            e += self.frequencies[k] * cov[(b, b)].re;
            e += 2.0 * self.v[k] * cov[(b, 0)].re + 2.0 * self.w[k] * cov[(b + 1, 0)].re;
        }
        e
    }
}

/// Selected rows of `S(t)` at a list of output times.
#[derive(Debug, Clone)]
pub struct BogoliubovPropagator {
    pub times: Vec<f64>,
    pub rows: Vec<usize>,
    /// `blocks[i]` holds the selected rows at `times[i]`.
    pub blocks: Vec<DMatrix<C64>>,
}

impl BogoliubovPropagator {
    fn position(&self, row: usize) -> Result<usize> {
        self.rows
            .iter()
            .position(|&r| r == row)
            .ok_or_else(|| Error::Inconsistent(format!("row {row} was not propagated")))
    }

    /// `U(t_i)`: the system–system block.
    pub fn system_block(&self, i: usize) -> Result<Mat2> {
        self.block(i, 0, 0)
    }

    /// Response of the system to bath mode `k`: the system-row, mode-`k` block.
    pub fn mode_block(&self, i: usize, k: usize) -> Result<Mat2> {
        self.block(i, 0, 2 + 2 * k)
    }

    fn block(&self, i: usize, row: usize, col: usize) -> Result<Mat2> {
        let (p0, p1) = (self.position(row)?, self.position(row + 1)?);
        let b = &self.blocks[i];
        Ok(Mat2::new(b[(p0, col)], b[(p0, col + 1)], b[(p1, col)], b[(p1, col + 1)]))
    }

    /// `max |(R Σ R†)_ij − Σ_ij|` over the selected rows `R`, where
    /// `Σ = diag(1, −1, 1, −1, …)` is the bosonic commutator metric.
    pub fn commutator_defect(&self, i: usize) -> f64 {
        let b = &self.blocks[i];
        let mut worst = 0.0_f64;
        for (p, &ri) in self.rows.iter().enumerate() {
            for (q, &rj) in self.rows.iter().enumerate() {
                let mut acc = c(0.0, 0.0);
                for col in 0..b.ncols() {
                    let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                    acc += b[(p, col)] * b[(q, col)].conj() * sign;
                }
                let want = if ri == rj {
                    if ri % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                } else {
                    0.0
                };
                worst = worst.max((acc - want).norm());
            }
        }
        worst
    }

    /// Full moment matrix of the selected rows, `R C R†`.
    pub fn project(&self, i: usize, cov: &DMatrix<C64>) -> DMatrix<C64> {
        let b = &self.blocks[i];
        b * cov * b.adjoint()
    }
}

/// Propagate the rows `rows` of `S(t)` (starting from the identity) with
/// fixed-step RK4 and record them at `times` (non-decreasing, ≥ 0).
pub fn propagate(dynamics: &LinearDynamics, times: &[f64], rows: &[usize]) -> Result<BogoliubovPropagator> {
    let d = dynamics.dim();
    if rows.iter().any(|&r| r >= d) {
        return Err(Error::Inconsistent(format!("row index beyond dimension {d}")));
    }
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) || times.windows(2).any(|p| p[1] < p[0]) {
        return Err(Error::param("times", "output times must be finite, non-negative and non-decreasing"));
    }
    let nr = rows.len();
    let mut state = vec![c(0.0, 0.0); nr * d];
    for (p, &r) in rows.iter().enumerate() {
        state[p * d + r] = c(1.0, 0.0);
    }
    let h_max = PHASE_PER_STEP / dynamics.rate_bound().max(1e-300);
    let mut k = [vec![c(0.0, 0.0); d], vec![c(0.0, 0.0); d], vec![c(0.0, 0.0); d], vec![c(0.0, 0.0); d]];
    let mut tmp = vec![c(0.0, 0.0); d];
    let mut t = 0.0;
    let mut blocks = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let steps = (span / h_max).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                for p in 0..nr {
                    let r = &mut state[p * d..(p + 1) * d];
                    dynamics.apply_right(r, &mut k[0]);
                    for j in 0..d {
                        tmp[j] = r[j] + k[0][j] * (0.5 * h);
                    }
                    dynamics.apply_right(&tmp, &mut k[1]);
                    for j in 0..d {
                        tmp[j] = r[j] + k[1][j] * (0.5 * h);
                    }
                    dynamics.apply_right(&tmp, &mut k[2]);
                    for j in 0..d {
                        tmp[j] = r[j] + k[2][j] * h;
                    }
                    dynamics.apply_right(&tmp, &mut k[3]);
                    for j in 0..d {
                        r[j] += (k[0][j] + (k[1][j] + k[2][j]) * 2.0 + k[3][j]) * (h / 6.0);
                    }
                }
            }
            t = target;
        }
        if state.iter().any(|x| !x.is_finite()) {
            return Err(Error::Instability(format!("propagator diverged before t = {target:.6e}")));
        }
        blocks.push(DMatrix::from_row_slice(nr, d, &state));
    }
    Ok(BogoliubovPropagator { times: times.to_vec(), rows: rows.to_vec(), blocks })
}

/// Reduced system moments at the propagator's output times.
#[derive(Debug, Clone)]
pub struct OracleMoments {
    pub times: Vec<f64>,
    pub mean: Vec<C64>,
    /// `N = [[Δn, Δs], [Δs*, Δn + 1]]`.
    pub n: Vec<Mat2>,
}

/// Moments of the system for a product initial state: system Gaussian
/// `init`, bath modes uncorrelated with occupations `n̄_k` and `s̄_k` from
/// `bath`. Requires the two system rows.
pub fn reduced_moments(
    prop: &BogoliubovPropagator,
    bath: &BathDiscretization,
    init: &GaussianMoments,
) -> Result<OracleMoments> {
    let n0 = init.matrix();
    let mut out = OracleMoments { times: prop.times.clone(), mean: vec![], n: vec![] };
    for i in 0..prop.times.len() {
        let u = prop.system_block(i)?;
        out.mean.push(u[(0, 0)] * init.mean + u[(0, 1)] * init.mean.conj());
        let mut n = u * n0 * u.adjoint();
        for k in 0..bath.n_modes() {
            let b = prop.mode_block(i, k)?;
            let (nk, sk) = (bath.occupations[k], bath.squeezing[k]);
            let nb = Mat2::new(c(nk, 0.0), sk, sk.conj(), c(nk + 1.0, 0.0));
            n += b * nb * b.adjoint();
        }
        out.n.push(n);
    }
    Ok(out)
}

/// The bath-induced part `Σ_k B_k N_k B_k†` alone, i.e. the oracle's `V(t,t)`.
pub fn noise_correlation(prop: &BogoliubovPropagator, bath: &BathDiscretization) -> Result<Vec<Mat2>> {
    let vac = GaussianMoments::vacuum();
    let r = reduced_moments(prop, bath, &vac)?;
    (0..prop.times.len())
        .map(|i| {
            let u = prop.system_block(i)?;
            Ok(r.n[i] - u * vac.matrix() * u.adjoint())
        })
        .collect()
}

/// Reduced moments for an arbitrary (possibly correlated) centred initial
/// state given by its full moment matrix `C_ij = ⟨X_j† X_i⟩`.
pub fn reduced_from_full(prop: &BogoliubovPropagator, cov: &DMatrix<C64>) -> Result<Vec<Mat2>> {
    let (p0, p1) = (prop.position(0)?, prop.position(1)?);
    Ok((0..prop.times.len())
        .map(|i| {
            let full = prop.project(i, cov);
            Mat2::new(full[(p0, p0)], full[(p0, p1)], full[(p1, p0)], full[(p1, p1)])
        })
        .collect())
}

/// Thermal state of the coupled Hamiltonian.
#[derive(Debug, Clone)]
pub struct ThermalState {
    /// `C_ij = ⟨X_j† X_i⟩` over all modes.
    pub covariance: DMatrix<C64>,
    pub system: GaussianMoments,
    pub correlations: InitialCorrelations,
    pub occupations: Vec<f64>,
    pub squeezing: Vec<C64>,
}

fn coth_or_one(x: f64) -> f64 {
    if x > 40.0 {
        1.0
    } else {
        1.0 / x.tanh()
    }
}

/// Gibbs state `e^{−H/T}/Z` of the full quadratic Hamiltonian.
///
/// In quadratures `x = (a + a†)/√2`, `p = i(a† − a)/√2` the Hamiltonian is
/// `½ xᵀA x + ½ pᵀB p` with `A = [[ω_s, (V+W)ᵀ], [V+W, diag ω]]` and
/// `B = [[ω_s, (V−W)ᵀ], [V−W, diag ω]]`. With `Ω² = B^{1/2} A B^{1/2}`:
/// `⟨xxᵀ⟩ = ½ B^{1/2} Ω⁻¹ coth(Ω/2T) B^{1/2}`,
/// `⟨ppᵀ⟩ = ½ B^{−1/2} Ω coth(Ω/2T) B^{−1/2}` and `⟨{x, pᵀ}⟩ = 0`.
/// Fails with an instability error when `A` or `B` is not positive definite
/// (the Hamiltonian is unbounded below).
pub fn thermal_total_state(dynamics: &LinearDynamics, temperature: f64) -> Result<ThermalState> {
    if !(temperature >= 0.0) || !temperature.is_finite() {
        return Err(Error::param("temperature", format!("must be finite and ≥ 0, got {temperature}")));
    }
    let nm = dynamics.n_modes();
    let d = nm + 1;
    let mut a = DMatrix::<f64>::zeros(d, d);
    let mut b = DMatrix::<f64>::zeros(d, d);
    a[(0, 0)] = dynamics.omega_s;
    b[(0, 0)] = dynamics.omega_s;
    for k in 0..nm {
        let (v, w) = (dynamics.v[k], dynamics.w[k]);
        a[(0, k + 1)] = v + w;
        a[(k + 1, 0)] = v + w;
        b[(0, k + 1)] = v - w;
        b[(k + 1, 0)] = v - w;
        a[(k + 1, k + 1)] = dynamics.frequencies[k];
        b[(k + 1, k + 1)] = dynamics.frequencies[k];
    }
    let eb = SymmetricEigen::new(b);
    let bmin = eb.eigenvalues.min();
    if !(bmin > 0.0) {
        return Err(Error::Instability(format!("momentum quadratic form not positive definite (λ_min = {bmin:.3e})")));
    }
    let sq = eb.eigenvalues.map(f64::sqrt);
    let b_half = &eb.eigenvectors * DMatrix::from_diagonal(&sq) * eb.eigenvectors.transpose();
    let b_mhalf = &eb.eigenvectors * DMatrix::from_diagonal(&sq.map(|x| 1.0 / x)) * eb.eigenvectors.transpose();
    let omega2 = &b_half * &a * &b_half;
    let omega2 = (&omega2 + omega2.transpose()) * 0.5;
    let eo = SymmetricEigen::new(omega2);
    let amin = eo.eigenvalues.min();
    if !(amin > 0.0) {
        return Err(Error::Instability(format!("Hamiltonian unbounded below: normal-mode frequency² = {amin:.3e}")));
    }
    let nu = eo.eigenvalues.map(f64::sqrt);
    let th = |x: f64| if temperature == 0.0 { 1.0 } else { coth_or_one(x / (2.0 * temperature)) };
    let fx: DVector<f64> = nu.map(|x| 0.5 * th(x) / x);
    let fp: DVector<f64> = nu.map(|x| 0.5 * th(x) * x);
    let o = &eo.eigenvectors;
    let x = &b_half * (o * DMatrix::from_diagonal(&fx) * o.transpose()) * &b_half;
    let p = &b_mhalf * (o * DMatrix::from_diagonal(&fp) * o.transpose()) * &b_mhalf;

    // ⟨a_i† a_j⟩ = ½(X + P − 1)_ij,  ⟨a_i a_j⟩ = ½(X − P)_ij.
    let nmat = (&x + &p - DMatrix::identity(d, d)) * 0.5;
    let mmat = (&x - &p) * 0.5;
    let dim = 2 * d;
    let mut cov = DMatrix::<C64>::zeros(dim, dim);
    for pi in 0..d {
        for qi in 0..d {
            let delta = if pi == qi { 1.0 } else { 0.0 };
            cov[(2 * pi, 2 * qi)] = c(nmat[(qi, pi)], 0.0);
            cov[(2 * pi, 2 * qi + 1)] = c(mmat[(qi, pi)], 0.0);
            cov[(2 * pi + 1, 2 * qi)] = c(mmat[(pi, qi)], 0.0);
            cov[(2 * pi + 1, 2 * qi + 1)] = c(delta + nmat[(pi, qi)], 0.0);
        }
    }
    let system = GaussianMoments { mean: c(0.0, 0.0), delta_n: nmat[(0, 0)], delta_s: c(mmat[(0, 0)], 0.0) };
    let correlations = InitialCorrelations {
        n_prime: (1..d).map(|k| c(nmat[(0, k)], 0.0)).collect(),
        s_prime: (1..d).map(|k| c(mmat[(0, k)], 0.0)).collect(),
    };
    Ok(ThermalState {
        covariance: cov,
        system,
        correlations,
        occupations: (1..d).map(|k| nmat[(k, k)]).collect(),
        squeezing: (1..d).map(|k| c(mmat[(k, k)], 0.0)).collect(),
    })
}
