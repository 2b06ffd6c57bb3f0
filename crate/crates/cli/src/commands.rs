//! The four subcommands. Each returns a [`RunReport`] and writes its data files into `out`.

use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use corridor_dynamics::algebra::{
    act, cocycle_residual, compose, inverse, multiplicator, GalileiElement, PhysicsParams, SpacetimePoint,
};
use corridor_dynamics::evolution::{
    accumulate_density_exact, accumulate_density_mc_checkpoints, propagator_matrix, propagator_matrix_from,
    sample_corridor_record, DensityMatrix, Evolver, GaussianPacket, Grid, Observables, Scenario,
};
use corridor_dynamics::kernels::{
    covariance_phase, free_kernel, free_kernel_via_boost_integral, Basis, GaugeModel, MeasurementModel,
    ObservableSpec, DEFAULT_BOOST_EPS,
};
use corridor_dynamics::numerics::log_log_slope;
use corridor_dynamics::oracles::{
    chapman_kolmogorov_convolution, cn_propagate, free_kernel_quadrature, lindblad_propagate, reference_propagation,
    regularized_boost_integral, FdOrder,
};
use corridor_dynamics::paths::Corridor;

use crate::config::{CorridorSource, GridConfig, LoadedConfig, ScenarioConfig};
use crate::output::{write_density, write_series, write_table, write_wavefunction};
use crate::report::RunReport;

pub const GROUP_TOL: f64 = 1e-10;
pub const COCYCLE_TOL: f64 = 1e-12;
pub const SLICED_TOL: f64 = 1e-3;
pub const SLOPE_TARGET: f64 = 2.0;
pub const SLOPE_TOL: f64 = 0.2;
pub const BOOST_TOL: f64 = 1e-3;
pub const BOOST_QUADRATURE_TOL: f64 = 1e-8;
pub const CONVOLUTION_TOL: f64 = 1e-6;
pub const COMPOSITION_TOL: f64 = 1e-8;
pub const COVARIANCE_TOL: f64 = 1e-12;
pub const NORM_TOL: f64 = 1e-10;
pub const ORACLE_TOL: f64 = 1e-3;
pub const TRACE_TOL: f64 = 1e-6;
pub const MC_TOL: f64 = 5e-2;
pub const LINDBLAD_TOL: f64 = 1e-3;

/// Grid sizes and step widths of the splitting-order study.
pub const TROTTER_POINTS: usize = 32;
pub const TROTTER_DTS: [f64; 4] = [0.04, 0.02, 0.01, 0.005];
pub const TROTTER_TIME: f64 = 0.64;

/// Bad arguments rather than a failed computation.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn finish(mut report: RunReport, start: Instant) -> RunReport {
    report.wall_time_s = start.elapsed().as_secs_f64();
    report
}

fn prepare_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))
}

/// Largest absolute deviation relative to the largest reference magnitude.
pub fn relative_deviation(values: &[f64], reference: &[f64]) -> f64 {
    let scale = reference.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let diff = values.iter().zip(reference).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn cmd_algebra_check(n_trials: usize, seed: u64, out: &Path) -> Result<RunReport> {
    if n_trials == 0 {
        return Err(UsageError("algebra-check needs at least one trial".into()).into());
    }
    let start = Instant::now();
    let params = PhysicsParams::natural();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut assoc, mut action, mut inv, mut cocycle, mut cocycle_rot) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..n_trials {
        let g = GalileiElement::random(&mut rng, 1.0, true);
        let h = GalileiElement::random(&mut rng, 1.0, true);
        let k = GalileiElement::random(&mut rng, 1.0, true);
        let mut u = || rng.random::<f64>() * 2.0 - 1.0;
        let x = SpacetimePoint::new(u(), [u(), u(), u()]);
        assoc = assoc.max(compose(&compose(&g, &h), &k).max_abs_diff(&compose(&g, &compose(&h, &k))));
        action = action.max(act(&compose(&g, &h), &x).max_abs_diff(&act(&g, &act(&h, &x))));
        inv = inv
            .max(compose(&g, &inverse(&g)).max_abs_diff(&GalileiElement::IDENTITY))
            .max(compose(&inverse(&g), &g).max_abs_diff(&GalileiElement::IDENTITY));
        cocycle_rot = cocycle_rot.max(cocycle_residual(&g, &h, &k, &params));
        let g0 = GalileiElement::random(&mut rng, 1.0, false);
        let h0 = GalileiElement::random(&mut rng, 1.0, false);
        let k0 = GalileiElement::random(&mut rng, 1.0, false);
        cocycle = cocycle.max(cocycle_residual(&g0, &h0, &k0, &params));
    }
    let digest = crate::config::digest_bytes(format!("algebra-check trials={n_trials}").as_bytes());
    let mut report = RunReport::new("algebra-check", digest, Some(seed));
    report.check("associativity", assoc, GROUP_TOL);
    report.check("action_homomorphism", action, GROUP_TOL);
    report.check("inverse", inv, GROUP_TOL);
    report.check("cocycle_rotation_free", cocycle, COCYCLE_TOL);
    report.check("cocycle_with_rotations", cocycle_rot, GROUP_TOL);
    prepare_out(out)?;
    Ok(finish(report, start))
}

/// Configuration used by `free-propagator` when none is given.
pub fn default_free_config() -> ScenarioConfig {
    ScenarioConfig {
        grid: GridConfig { x_min: -20.0, x_max: 20.0, n: 512 },
        params: Default::default(),
        potential: None,
        gauge_field: None,
        model: Default::default(),
        dt: 1.0 / 128.0,
        n_steps: 128,
        psi0: GaussianPacket { center: 0.0, width: 1.0, momentum: 1.0 },
        corridor: "zeros".into(),
    }
}

fn free_scenario(s: &Scenario) -> Scenario {
    Scenario { gauge: GaugeModel::none(), model: MeasurementModel::unmeasured(), ..s.clone() }
}

/// Global splitting error at fixed time against a dense matrix exponential, for a
/// harmonic probe with position measurement on a small grid around the packet.
pub fn trotter_study(psi0: GaussianPacket, params: PhysicsParams) -> Result<Vec<(f64, f64)>> {
    let grid = Grid::new(psi0.center - 6.0, psi0.center + 6.0, TROTTER_POINTS)?;
    let m = params.m;
    let gauge = GaugeModel::from_physical(Some(Arc::new(move |x: f64, _t: f64| 0.5 * m * x * x)), None, &params);
    let model = MeasurementModel::decoherence(ObservableSpec::x(), 0.1)?;
    let probe = GaussianPacket { width: psi0.width.clamp(0.5, 1.5), momentum: 0.0, ..psi0 };
    let readout = psi0.center - 0.2;
    let base = Scenario { grid, params, gauge, model, dt: TROTTER_DTS[0], n_steps: 0, psi0: probe };
    let start = base.initial_state()?;
    let reference = reference_propagation(&start, &base, readout, TROTTER_TIME)?;
    let mut rows = Vec::new();
    for dt in TROTTER_DTS {
        let steps = (TROTTER_TIME / dt).round() as usize;
        let s = base.with_steps(dt, steps);
        let c = Corridor::new(dt, vec![readout; steps])?;
        let psi = Evolver::new(&s)?.run_from(&start, &c, 0)?;
        rows.push((dt, psi.relative_l2_distance(&reference)));
    }
    Ok(rows)
}

pub fn cmd_free_propagator(cfg: &ScenarioConfig, digest: String, seed: u64, out: &Path) -> Result<RunReport> {
    let start = Instant::now();
    prepare_out(out)?;
    let s = free_scenario(&cfg.scenario()?);
    let params = s.params;
    let total = s.total_time();
    if s.n_steps == 0 {
        return Err(UsageError("free-propagator needs n_steps >= 1".into()).into());
    }
    let mut report = RunReport::new("free-propagator", digest, Some(seed));

    let psi0 = s.initial_state()?;
    let sliced = Evolver::new(&s)?.run_from(&psi0, &Corridor::zeros(s.dt, s.n_steps)?, 0)?;
    let closed = free_kernel_quadrature(&psi0, total, &params)?;
    report.check("sliced_vs_closed_form_l2", sliced.relative_l2_distance(&closed), SLICED_TOL);
    let rows: Vec<Vec<f64>> = (0..s.grid.n)
        .map(|j| vec![s.grid.x(j), sliced.amp[j].re, sliced.amp[j].im, closed.amp[j].re, closed.amp[j].im])
        .collect();
    let path = out.join("free_state.csv");
    write_table(&path, &["x", "re_sliced", "im_sliced", "re_kernel", "im_kernel"], &rows)?;
    report.output(path);

    let study = trotter_study(s.psi0, params)?;
    let (dts, errs): (Vec<f64>, Vec<f64>) = study.iter().copied().unzip();
    let slope = log_log_slope(&dts, &errs)?;
    report.check("trotter_slope", (slope - SLOPE_TARGET).abs(), SLOPE_TOL);
    let path = out.join("convergence.csv");
    write_table(&path, &["dt", "error"], &study.iter().map(|&(d, e)| vec![d, e]).collect::<Vec<_>>())?;
    report.output(path);

    let mut boost_rows = Vec::new();
    let (mut boost_worst, mut quad_worst) = (0.0f64, 0.0f64);
    for &tau in &[0.5 * total, total] {
        for &dx in &[-1.0, 0.0, 0.5, 1.0] {
            let exact = free_kernel(dx, tau, &params)?;
            let quad = free_kernel_via_boost_integral(dx, tau, DEFAULT_BOOST_EPS, &params)?;
            let regularized = regularized_boost_integral(dx, tau, DEFAULT_BOOST_EPS, &params);
            let rel = (quad - exact).norm() / exact.norm();
            let rel_quad = (quad - regularized).norm() / regularized.norm();
            boost_worst = boost_worst.max(rel);
            quad_worst = quad_worst.max(rel_quad);
            boost_rows.push(vec![dx, tau, rel, rel_quad]);
        }
    }
    report.check("boost_integral_vs_closed_form", boost_worst, BOOST_TOL);
    report.check("boost_quadrature_vs_regularized", quad_worst, BOOST_QUADRATURE_TOL);
    let path = out.join("boost_integral.csv");
    write_table(&path, &["dx", "tau", "error_vs_kernel", "error_vs_regularized"], &boost_rows)?;
    report.output(path);

    let mut conv = 0.0f64;
    for &(x2, x0) in &[(-0.4, 0.3), (1.0, -0.5), (0.0, 0.0)] {
        let (t1, t2) = (0.4 * total, 0.6 * total);
        let lhs = chapman_kolmogorov_convolution(x2, x0, t1, t2, 1e-2, &params)?;
        let rhs = free_kernel(x2 - x0, total, &params)?;
        conv = conv.max((lhs - rhs).norm() / rhs.norm());
    }
    report.check("chapman_kolmogorov_convolution", conv, CONVOLUTION_TOL);

    let small = Scenario { grid: Grid::new(s.grid.x_min, s.grid.x_max, 128)?, ..s.clone() };
    let n1 = (s.n_steps / 2).max(1);
    let n2 = s.n_steps.max(2) - n1;
    report.check("propagator_composition", composition_residual(&small, n1, n2)?, COMPOSITION_TOL);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cov = 0.0f64;
    for _ in 0..1000 {
        let dx = rng.random::<f64>() * 4.0 - 2.0;
        let v = rng.random::<f64>() * 4.0 - 2.0;
        let tau = 0.1 + rng.random::<f64>() * 1.9;
        let lhs = free_kernel(dx + v * tau, tau, &params)?;
        let base = free_kernel(dx, tau, &params)?;
        let phase = covariance_phase(dx, v, tau, &params);
        let group = multiplicator(
            &GalileiElement::boost([v, 0.0, 0.0]),
            &GalileiElement::translation(SpacetimePoint::new(tau, [dx, 0.0, 0.0])),
            &params,
        );
        cov = cov.max((lhs - phase * base).norm() / base.norm()).max((phase - group).norm());
    }
    report.check("covariance_phase", cov, COVARIANCE_TOL);
    Ok(finish(report, start))
}

/// `max|M(c₁c₂) − M(c₂)M(c₁)h| / max|M(c₁c₂)|` for zero corridors of `n1` and `n2` slices.
pub fn composition_residual(s: &Scenario, n1: usize, n2: usize) -> Result<f64> {
    let c1 = Corridor::zeros(s.dt, n1)?;
    let c2 = Corridor::zeros(s.dt, n2)?;
    let whole = Corridor::zeros(s.dt, n1 + n2)?;
    let m1 = propagator_matrix(s, &c1)?;
    let m2 = propagator_matrix_from(s, &c2, n1)?;
    let m12 = propagator_matrix(s, &whole)?;
    let prod = m2 * m1 * num_complex::Complex64::new(s.grid.spacing(), 0.0);
    let scale = m12.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let diff = (&m12 - prod).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    Ok(diff / scale)
}

fn column<F: Fn(&Observables) -> f64>(series: &[Observables], f: F) -> Vec<f64> {
    series.iter().map(f).collect()
}

pub fn cmd_evolve(
    loaded: &LoadedConfig,
    corridor_override: Option<&str>,
    oracle: bool,
    seed: u64,
    out: &Path,
) -> Result<RunReport> {
    let start = Instant::now();
    prepare_out(out)?;
    let cfg = &loaded.config;
    let s = cfg.scenario()?;
    let source = CorridorSource::parse(corridor_override.unwrap_or(&cfg.corridor), &loaded.base_dir)
        .map_err(|e| UsageError(e.to_string()))?;
    let psi0 = s.initial_state()?;
    let corridor = match source.load(s.dt, s.n_steps).map_err(|e| UsageError(format!("{e:#}")))? {
        Some(c) => c,
        None => sample_corridor_record(&psi0, &s, seed)?.0,
    };
    let mut report = RunReport::new("evolve", loaded.digest.clone(), Some(seed));
    let (psi, series) = Evolver::new(&s)?.run_recording(&psi0, &corridor, 0, 1)?;

    let increase = series.windows(2).map(|w| w[1].norm - w[0].norm).fold(0.0f64, f64::max);
    report.check("norm_non_increasing", increase, 1e-12);
    if s.model.kappa == 0.0 && !s.model.has_dissipation() {
        let drift = series.iter().map(|o| (o.norm - 1.0).abs()).fold(0.0f64, f64::max);
        report.check("norm_conserved", drift, NORM_TOL);
    }

    let path = out.join("corridor.csv");
    write_table(&path, &["a"], &corridor.samples().iter().map(|&a| vec![a]).collect::<Vec<_>>())?;
    report.output(path);
    let path = out.join("final_state.csv");
    write_wavefunction(&path, &psi)?;
    report.output(path);

    let series_path = out.join("series.csv");
    if oracle {
        let (psi_cn, cn) = cn_propagate(&psi0, &corridor, &s, 1).context("oracle run")?;
        report.check("oracle_norm", relative_deviation(&column(&series, |o| o.norm), &column(&cn, |o| o.norm)), ORACLE_TOL);
        report.check(
            "oracle_mean_x",
            relative_deviation(&column(&series, |o| o.mean_x), &column(&cn, |o| o.mean_x)),
            ORACLE_TOL,
        );
        report.check(
            "oracle_mean_x2",
            relative_deviation(&column(&series, |o| o.mean_x2), &column(&cn, |o| o.mean_x2)),
            ORACLE_TOL,
        );
        write_series(&series_path, &[("engine", &series), ("oracle", &cn)])?;
        let path = out.join("oracle_final_state.csv");
        write_wavefunction(&path, &psi_cn)?;
        report.output(path);
    } else {
        write_series(&series_path, &[("engine", &series)])?;
    }
    report.output(series_path);
    Ok(finish(report, start))
}

/// Sample counts at which the running MC estimate is compared with the exact result.
pub fn checkpoints(n_samples: usize) -> Vec<usize> {
    let mut v: Vec<usize> = [10, 30, 100, 300, 1_000, 3_000, 10_000, 30_000, 100_000, 300_000, 1_000_000]
        .into_iter()
        .filter(|&c| c < n_samples)
        .collect();
    v.push(n_samples);
    v
}

pub fn cmd_ensemble(loaded: &LoadedConfig, n_samples: usize, seed: u64, threads: usize, out: &Path) -> Result<RunReport> {
    let start = Instant::now();
    let s = loaded.config.scenario()?;
    if n_samples == 0 {
        return Err(UsageError("ensemble needs --samples >= 1".into()).into());
    }
    if s.model.kappa <= 0.0 {
        return Err(UsageError(
            "Monte Carlo corridor sampling needs model.kappa > 0 (with kappa = 0 the exact mode alone applies)".into(),
        )
        .into());
    }
    if s.model.a.basis != Basis::Position || s.model.has_dissipation() {
        bail!("ensemble runs compare against the exact mode, which needs a position-basis A and no B or C terms");
    }
    prepare_out(out)?;
    let mut report = RunReport::new("ensemble", loaded.digest.clone(), Some(seed));
    let psi0 = s.initial_state()?;
    let rho0 = DensityMatrix::from_pure(&psi0);

    let exact = accumulate_density_exact(&rho0, &s)?;
    report.check("exact_trace", (exact.trace().re - 1.0).abs(), TRACE_TOL);
    let path = out.join("rho_exact.csv");
    write_density(&path, &exact)?;
    report.output(path);

    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    let marks = checkpoints(n_samples);
    let estimates = pool.install(|| accumulate_density_mc_checkpoints(&psi0, &s, n_samples, seed, &marks))?;
    let mut rows = Vec::new();
    for (count, rho) in &estimates {
        rows.push(vec![*count as f64, rho.trace_distance(&exact)?, rho.trace().re]);
    }
    let final_distance = rows.last().map(|r| r[1]).unwrap_or(f64::NAN);
    report.check("mc_trace_distance", final_distance, MC_TOL);
    let path = out.join("trace_distance.csv");
    write_table(&path, &["samples", "trace_distance", "trace"], &rows)?;
    report.output(path);
    let path = out.join("rho_mc.csv");
    write_density(&path, &estimates.last().expect("at least one checkpoint").1)?;
    report.output(path);

    if !s.gauge.has_vector_potential() {
        let lindblad = lindblad_propagate(&rho0, &s, FdOrder::Fourth)?;
        report.check("lindblad_trace_distance", exact.trace_distance(&lindblad)?, LINDBLAD_TOL);
        let path = out.join("rho_lindblad.csv");
        write_density(&path, &lindblad)?;
        report.output(path);
    }
    Ok(finish(report, start))
}
