//! The pipelines behind each subcommand.

use std::path::Path;

use gqbm_core::coeffs::v_dot_consistency;
use gqbm_core::linalg::max_abs;
use gqbm_core::{
    build_dynamics, build_kernels, coeff_integral_crosscheck, coefficients_from_greens, compute_k_lambda,
    discretize_bath, evolve_covariances, evolve_hpz_covariances, hpz_reduce, jolt_estimate, noise_correlation,
    propagate, solve_v_volterra, to_quadratures, CoefficientSeries, GreensSolution, JoltEstimate, Kernel,
    SpectralModel, TimeGrid,
};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Summary, Table};

/// Window on which short-time estimates are compared with the exact
/// coefficients.
pub const JOLT_WINDOW: f64 = 10.0;

/// α values of the initial-jolt figure.
pub const SWEEP_ALPHAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// The two-time table of the crosscheck holds `(n + 1)²` matrices.
pub const CROSSCHECK_MAX_STEPS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    Kernels,
    Greens,
    Coeffs,
    Evolve,
    JoltSweep,
    OracleCompare,
    ReproduceFig2,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Kernels => "kernels",
            Pipeline::Greens => "greens",
            Pipeline::Coeffs => "coeffs",
            Pipeline::Evolve => "evolve",
            Pipeline::JoltSweep => "jolt-sweep",
            Pipeline::OracleCompare => "oracle-compare",
            Pipeline::ReproduceFig2 => "reproduce-fig2",
        }
    }
}

/// Execute `pipeline` and write its tables into `config.output.dir`.
pub fn execute(pipeline: Pipeline, config: &RunConfig) -> Result<Summary, CliError> {
    config.validate()?;
    if config.checks.crosscheck && config.grid.n_steps > CROSSCHECK_MAX_STEPS {
        return Err(CliError::Config(format!(
            "crosscheck keeps the two-time correlation table; use at most {CROSSCHECK_MAX_STEPS} steps (got {})",
            config.grid.n_steps
        )));
    }
    let out = config.output.dir.as_path();
    let mut summary = Summary::default();
    match pipeline {
        Pipeline::Kernels => kernels(config, out, &mut summary)?,
        Pipeline::Greens => greens(config, out, &mut summary)?,
        Pipeline::Coeffs => coeffs(config, out, &mut summary)?,
        Pipeline::Evolve => evolve(config, out, &mut summary)?,
        Pipeline::JoltSweep => jolt_sweep(config, &config.sweep.alphas, out, &mut summary)?,
        Pipeline::OracleCompare => oracle_compare(config, out, &mut summary)?,
        Pipeline::ReproduceFig2 => reproduce_fig2(config, out, &mut summary)?,
    }
    Ok(summary)
}

fn solve(model: &SpectralModel, omega_s: f64, grid: &TimeGrid) -> Result<(Kernel, GreensSolution), CliError> {
    let kernel = build_kernels(model, grid)?;
    let sol = GreensSolution::compute(&kernel, omega_s, grid)?;
    Ok((kernel, sol))
}

fn kernels(config: &RunConfig, out: &Path, summary: &mut Summary) -> Result<(), CliError> {
    let grid = config.grid()?;
    let kernel = build_kernels(&config.model()?, &grid)?;
    let mut t = Table::new(["t", "re_g_v", "im_g_v", "re_gtilde_v", "im_gtilde_v"]);
    for j in 0..=grid.n_steps {
        let (g, gt) = (kernel.g_v(j), kernel.gtilde_v(j));
        t.push(vec![grid.time(j), g.re, g.im, gt.re, gt.im]);
    }
    summary.write_table(out, "kernels.csv", &t)?;
    summary.record("alpha", config.model.alpha);
    Ok(())
}

fn greens(config: &RunConfig, out: &Path, summary: &mut Summary) -> Result<(), CliError> {
    let grid = config.grid()?;
    let (kernel, sol) = solve(&config.model()?, config.omega_s()?, &grid)?;
    let mut t = Table::new(["t", "re_u11", "im_u11", "re_u12", "im_u12", "v11", "re_v12", "im_v12", "v22"]);
    for j in 0..=grid.n_steps {
        let (u, v) = (sol.retarded.u[j], sol.correlation.v[j]);
        t.push(vec![
            grid.time(j),
            u[(0, 0)].re,
            u[(0, 0)].im,
            u[(0, 1)].re,
            u[(0, 1)].im,
            v[(0, 0)].re,
            v[(0, 1)].re,
            v[(0, 1)].im,
            v[(1, 1)].re,
        ]);
    }
    summary.write_table(out, "greens.csv", &t)?;
    summary.record("omega_s", sol.omega_s);
    if config.checks.crosscheck {
        let vol = solve_v_volterra(&kernel, &sol.retarded, false)?;
        let dev =
            (0..=grid.n_steps).map(|j| max_abs(&(vol.equal_time.v[j] - sol.correlation.v[j]))).fold(0.0, f64::max);
        summary.record("crosscheck_max_abs_v_fdt_minus_volterra", dev);
        summary.record("crosscheck_v_dot_finite_difference", v_dot_consistency(&sol));
    }
    Ok(())
}

fn coefficient_table(co: &CoefficientSeries) -> Table {
    let mut t = Table::new([
        "t",
        "gamma",
        "gamma_tilde",
        "re_gamma_bar",
        "im_gamma_bar",
        "omega_s_prime",
        "re_omega_bar_prime",
        "im_omega_bar_prime",
    ]);
    for j in 0..co.len() {
        t.push(vec![
            co.grid.time(j),
            co.gamma[j],
            co.gamma_tilde[j],
            co.gamma_bar[j].re,
            co.gamma_bar[j].im,
            co.omega_prime[j],
            co.omega_bar_prime[j].re,
            co.omega_bar_prime[j].im,
        ]);
    }
    t
}

fn coeffs(config: &RunConfig, out: &Path, summary: &mut Summary) -> Result<(), CliError> {
    let grid = config.grid()?;
    let (kernel, sol) = solve(&config.model()?, config.omega_s()?, &grid)?;
    let kl = compute_k_lambda(&sol)?;
    let co = gqbm_core::compute_me_coeffs(&kl);
    summary.write_table(out, "coeffs.csv", &coefficient_table(&co))?;
    summary.record("omega_s", sol.omega_s);
    summary.record("max_condition_number_u", kl.max_condition);
    let complex_omega_r = (0..co.len()).filter(|&j| co.omega_r(j).is_none()).count();
    summary.record("omega_r_complex_points", complex_omega_r as f64);
    if (config.model.alpha - 1.0).abs() < 1e-12 {
        let hpz = hpz_reduce(&co)?;
        let mut t = Table::new(["t", "delta_omega_sq", "damping", "gamma_h", "gamma_f", "omega_p_sq"]);
        for j in 0..co.len() {
            t.push(vec![
                grid.time(j),
                hpz.delta_omega2[j],
                hpz.damping[j],
                hpz.gamma_h[j],
                hpz.gamma_f[j],
                hpz.omega_p2[j],
            ]);
        }
        summary.write_table(out, "hpz.csv", &t)?;
        summary.record("hpz_max_identity_residual", hpz.max_residual());
    }
    if config.checks.crosscheck {
        let vol = solve_v_volterra(&kernel, &sol.retarded, true)?;
        let report = coeff_integral_crosscheck(&kernel, &sol.retarded, &vol, &kl)?;
        summary.record("crosscheck_diffusion_integral_max_deviation", report.max_deviation);
        summary.record("crosscheck_diffusion_scale", report.scale);
        summary.record("crosscheck_v_dot_finite_difference", v_dot_consistency(&sol));
    }
    Ok(())
}

fn evolve(config: &RunConfig, out: &Path, summary: &mut Summary) -> Result<(), CliError> {
    let grid = config.grid()?;
    let ws = config.omega_s()?;
    let (_, sol) = solve(&config.model()?, ws, &grid)?;
    let co = coefficients_from_greens(&sol)?;
    let init = config.initial_state()?;
    let m = evolve_covariances(&co, &init)?;
    let mut t = Table::new(["t", "re_mean", "im_mean", "delta_n", "re_delta_s", "im_delta_s"]);
    for j in 0..=grid.n_steps {
        t.push(vec![grid.time(j), m.mean[j].re, m.mean[j].im, m.delta_n[j], m.delta_s[j].re, m.delta_s[j].im]);
    }
    summary.write_table(out, "moments.csv", &t)?;
    summary.record("commutator_drift", m.commutator_drift);
    summary.write_table(out, "coeffs.csv", &coefficient_table(&co))?;

    // For W = V also propagate the quadratures with the HPZ equation (unit
    // mass, x measured in units of 1/sqrt(Mω_s)) and compare.
    if (config.model.alpha - 1.0).abs() < 1e-12 && ws > 0.0 {
        let hpz = hpz_reduce(&co)?;
        let q0 = to_quadratures(init.delta_n, init.delta_s, 1.0, ws)?;
        let q = evolve_hpz_covariances(&hpz, &q0, 1.0)?;
        let mut t = Table::new(["t", "var_x", "var_p", "cov_xp", "var_x_hpz", "var_p_hpz", "cov_xp_hpz"]);
        let mut dev = 0.0_f64;
        #[allow(clippy::needless_range_loop)]
        for j in 0..=grid.n_steps {
            let a = to_quadratures(m.delta_n[j], m.delta_s[j], 1.0, ws)?;
            let b = q[j];
            dev = dev
                .max((a.var_x - b.var_x).abs() * ws)
                .max((a.var_p - b.var_p).abs() / ws)
                .max((a.cov_xp - b.cov_xp).abs());
            t.push(vec![grid.time(j), a.var_x, a.var_p, a.cov_xp, b.var_x, b.var_p, b.cov_xp]);
        }
        summary.write_table(out, "quadratures.csv", &t)?;
        summary.record("hpz_quadrature_max_deviation_scaled", dev);
    }
    Ok(())
}

/// Coefficients and short-time estimates for one α.
struct AlphaRun {
    alpha: f64,
    coeffs: CoefficientSeries,
    estimate: JoltEstimate,
}

fn sweep(config: &RunConfig, model: &SpectralModel, omega_s: f64, alphas: &[f64]) -> Result<Vec<AlphaRun>, CliError> {
    let grid = config.grid()?;
    alphas
        .par_iter()
        .map(|&alpha| {
            let (kernel, sol) = solve(&model.with_alpha(alpha)?, omega_s, &grid)?;
            let coeffs = coefficients_from_greens(&sol)?;
            let estimate = jolt_estimate(&kernel, &sol.retarded)?;
            Ok(AlphaRun { alpha, coeffs, estimate })
        })
        .collect()
}

fn alpha_dir(alpha: f64) -> String {
    format!("alpha_{alpha}")
}

/// `(peak, max deviation)` of `approx` against `exact` over `[0, JOLT_WINDOW]`.
fn deviation(grid: &TimeGrid, exact: &[f64], approx: &[f64]) -> (f64, f64) {
    let last = ((JOLT_WINDOW / grid.dt()).round() as usize).min(grid.n_steps);
    let peak = exact[..=last].iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let dev = (0..=last).map(|j| (exact[j] - approx[j]).abs()).fold(0.0, f64::max);
    (peak, dev)
}

fn deviation_table(runs: &[AlphaRun]) -> Table {
    let mut t = Table::new([
        "alpha",
        "gamma_peak",
        "gamma_max_deviation",
        "gamma_relative_deviation",
        "gamma_tilde_peak",
        "gamma_tilde_max_deviation",
        "gamma_tilde_relative_deviation",
        "high_temperature",
    ]);
    for r in runs {
        let g = &r.coeffs.grid;
        let (pg, dg) = deviation(g, &r.coeffs.gamma, &r.estimate.gamma);
        let (pt, dt) = deviation(g, &r.coeffs.gamma_tilde, &r.estimate.gamma_tilde);
        let rel = |d: f64, p: f64| if p > 0.0 { d / p } else { f64::NAN };
        t.push(vec![
            r.alpha,
            pg,
            dg,
            rel(dg, pg),
            pt,
            dt,
            rel(dt, pt),
            if r.estimate.high_temperature { 1.0 } else { 0.0 },
        ]);
    }
    t
}

fn write_runs(runs: &[AlphaRun], out: &Path, summary: &mut Summary) -> Result<(), CliError> {
    for r in runs {
        let dir = alpha_dir(r.alpha);
        summary.write_table(out, Path::new(&dir).join("coeffs.csv"), &coefficient_table(&r.coeffs))?;
        let mut t = Table::new(["t", "gamma", "gamma_estimate", "gamma_tilde", "gamma_tilde_estimate"]);
        for j in 0..r.coeffs.len() {
            t.push(vec![
                r.coeffs.grid.time(j),
                r.coeffs.gamma[j],
                r.estimate.gamma[j],
                r.coeffs.gamma_tilde[j],
                r.estimate.gamma_tilde[j],
            ]);
        }
        summary.write_table(out, Path::new(&dir).join("jolt.csv"), &t)?;
    }
    let table = deviation_table(runs);
    for row in &table.rows {
        summary.record(format!("{}_gamma_relative_deviation", alpha_dir(row[0])), row[3]);
        summary.record(format!("{}_gamma_tilde_relative_deviation", alpha_dir(row[0])), row[6]);
    }
    summary.write_table(out, "jolt_deviation.csv", &table)?;
    summary.record("jolt_window", JOLT_WINDOW);
    Ok(())
}

fn jolt_sweep(config: &RunConfig, alphas: &[f64], out: &Path, summary: &mut Summary) -> Result<(), CliError> {
    let runs = sweep(config, &config.model()?, config.omega_s()?, alphas)?;
    write_runs(&runs, out, summary)
}

/// The initial-jolt study at its reference parameters (`γ0 = 3e-4`,
/// `T = 0.01`, `ω_s = sqrt(2γ0/π)`) for every α of [`SWEEP_ALPHAS`]; the grid
/// comes from the configuration.
fn reproduce_fig2(config: &RunConfig, out: &Path, summary: &mut Summary) -> Result<(), CliError> {
    let model = SpectralModel::ohmic(3e-4, 1.0, 0.01)?;
    let ws = model.default_omega_s().expect("ohmic model has a default frequency");
    let runs = sweep(config, &model, ws, &SWEEP_ALPHAS)?;
    write_runs(&runs, out, summary)?;
    let grid = config.grid()?;
    let wide = |label: &str, pick: &dyn Fn(&AlphaRun) -> &[f64]| {
        let mut t = Table::new(
            std::iter::once("t".to_string()).chain(runs.iter().map(|r| format!("{label}_alpha_{}", r.alpha))),
        );
        for j in 0..=grid.n_steps {
            t.push(std::iter::once(grid.time(j)).chain(runs.iter().map(|r| pick(r)[j])).collect());
        }
        t
    };
    summary.write_table(out, "gamma.csv", &wide("gamma", &|r| &r.coeffs.gamma))?;
    summary.write_table(out, "gamma_tilde.csv", &wide("gamma_tilde", &|r| &r.coeffs.gamma_tilde))?;
    summary.write_table(out, "gamma_estimate.csv", &wide("gamma_estimate", &|r| &r.estimate.gamma))?;
    summary.write_table(
        out,
        "gamma_tilde_estimate.csv",
        &wide("gamma_tilde_estimate", &|r| &r.estimate.gamma_tilde),
    )?;
    summary.record("omega_s", ws);
    Ok(())
}

fn oracle_compare(config: &RunConfig, out: &Path, summary: &mut Summary) -> Result<(), CliError> {
    let model = config.model()?;
    let ws = config.omega_s()?;
    let bath = discretize_bath(&model, config.oracle.modes, config.oracle.omega_max, config.scheme()?)?;
    let requested = config.grid()?;
    // Only compare before the finite bath can revive.
    let horizon = requested.t_end.min(bath.recurrence_time());
    let steps = ((requested.n_steps as f64 * horizon / requested.t_end).round() as usize).max(8);
    let grid = TimeGrid::new(horizon, steps)?;
    let (_, sol) = solve(&model, ws, &grid)?;

    let stride = (grid.n_steps / 200).max(1);
    let idx: Vec<usize> = (0..=grid.n_steps).step_by(stride).collect();
    let times: Vec<f64> = idx.iter().map(|&j| grid.time(j)).collect();
    let prop = propagate(&build_dynamics(&bath, ws)?, &times, &[0, 1])?;
    let v_exact = noise_correlation(&prop, &bath)?;

    let mut t = Table::new(["t", "max_abs_du", "max_abs_dv", "commutator_defect"]);
    let (mut du, mut dv, mut defect) = (0.0_f64, 0.0_f64, 0.0_f64);
    for (i, &j) in idx.iter().enumerate() {
        let a = max_abs(&(prop.system_block(i)? - sol.retarded.u[j]));
        let b = max_abs(&(v_exact[i] - sol.correlation.v[j]));
        let c = prop.commutator_defect(i);
        du = du.max(a);
        dv = dv.max(b);
        defect = defect.max(c);
        t.push(vec![times[i], a, b, c]);
    }
    summary.write_table(out, "oracle_series.csv", &t)?;
    let mut s = Table::new(["alpha", "n_modes", "omega_max", "horizon", "max_abs_du", "max_abs_dv"]);
    s.push(vec![config.model.alpha, bath.n_modes() as f64, bath.omega_max, horizon, du, dv]);
    summary.write_table(out, "oracle_compare.csv", &s)?;
    summary.record("horizon", horizon);
    summary.record("recurrence_limit", bath.recurrence_time());
    summary.record("max_abs_du", du);
    summary.record("max_abs_dv", dv);
    summary.record("max_commutator_defect", defect);
    Ok(())
}
