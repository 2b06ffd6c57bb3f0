//! Density matrices from averaging over corridors, exactly or by sampling.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::state::{DensityMatrix, WaveFunction};
use super::stepper::{Evolver, Scenario};
use crate::error::{Error, Result};
use crate::kernels::Basis;
use crate::paths::Corridor;

/// Samples propagated in parallel before the ordered reduction.
const BATCH: usize = 512;

/// Applies `U` to every column of `m` (one kinetic half-step).
fn half_kinetic_columns(ev: &Evolver, m: &mut DMatrix<Complex64>, t: f64) {
    let n = m.nrows();
    // column-major storage: each chunk of `n` is one column
    m.as_mut_slice().par_chunks_mut(n).for_each(|col| {
        let mut ws = ev.workspace();
        ev.kinetic_half(col, 0.0, t + 0.5 * ev.scenario.dt, &mut ws);
    });
}

/// `ρ → U ρ U†` using Hermiticity: `U (U ρ)†`.
fn conjugate_by_half_kinetic(ev: &Evolver, rho: &mut DMatrix<Complex64>, t: f64) {
    half_kinetic_columns(ev, rho, t);
    let mut adj = rho.adjoint();
    half_kinetic_columns(ev, &mut adj, t);
    *rho = adj;
}

/// Corridor average with the flat per-slice measure done in closed form.
///
/// Each slice applies the unitary split-step on both indices and the factor
/// `exp[−(κ dt/2)(A(x) − A(x'))²]` between the kinetic half-steps.
pub fn accumulate_density_exact(rho0: &DensityMatrix, s: &Scenario) -> Result<DensityMatrix> {
    if s.model.a.basis != Basis::Position || s.model.has_dissipation() {
        return Err(Error::Unsupported(
            "exact ensemble mode needs a position-basis A and no B or C terms".into(),
        ));
    }
    if rho0.grid != s.grid {
        return Err(Error::Invalid("density matrix grid differs from scenario grid".into()));
    }
    let ev = Evolver::new(s)?;
    let n = s.grid.n;
    let xs = s.grid.points();
    let av: Vec<f64> = xs.iter().map(|&x| s.model.a.eval(x)).collect();
    let decay = DMatrix::from_fn(n, n, |i, j| {
        let d = av[i] - av[j];
        (-0.5 * s.model.kappa * s.dt * d * d).exp()
    });
    let hbar = s.params.hbar;
    let mut rho = DensityMatrix::new(s.grid, rho0.rho.clone())?;
    for step in 0..s.n_steps {
        let t = ev.time_of(step);
        let t_mid = t + 0.5 * s.dt;
        conjugate_by_half_kinetic(&ev, &mut rho.rho, t);
        let phase: Vec<Complex64> = xs
            .iter()
            .map(|&x| Complex64::from_polar(1.0, -s.gauge.physical_potential(x, t_mid, &s.params) * s.dt / hbar))
            .collect();
        for j in 0..n {
            for i in 0..n {
                rho.rho[(i, j)] *= phase[i] * phase[j].conj() * decay[(i, j)];
            }
        }
        conjugate_by_half_kinetic(&ev, &mut rho.rho, t);
        rho.symmetrize();
        if rho.rho.iter().any(|z| !z.is_finite()) {
            return Err(Error::NumericalFailure { step, reason: "non-finite density matrix".into() });
        }
    }
    Ok(rho)
}

/// One importance-sampled corridor: returns `(w, ψ_[a])`, and the readouts if `record` is given.
fn sample_corridor(
    ev: &Evolver,
    psi0: &WaveFunction,
    seed: u64,
    index: u64,
    mut record: Option<&mut Vec<f64>>,
) -> Result<(f64, Vec<Complex64>)> {
    let s = &ev.scenario;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let sigma = (1.0 / (4.0 * s.model.kappa * s.dt)).sqrt();
    let mut amp = psi0.amp.clone();
    let mut ws = ev.workspace();
    let mut log_w = 0.0;
    for step in 0..s.n_steps {
        let current = WaveFunction { grid: s.grid, amp: amp.clone() };
        let mu = match s.model.a.basis {
            Basis::Position => current.expect_position(|x| s.model.a.eval(x)),
            Basis::Momentum => current.expect_momentum(&s.params, |p| s.model.a.eval(p)),
        };
        let z: f64 = StandardNormal.sample(&mut rng);
        let a = mu + sigma * z;
        if let Some(r) = record.as_deref_mut() {
            r.push(a);
        }
        // √(2κdt/π) / q(a) = exp(2κ dt (a − μ)²)
        log_w += 0.5 * z * z;
        ev.step_in_place(&mut amp, ev.time_of(step), a, &mut ws);
        if amp.iter().any(|z| !z.is_finite()) || !log_w.is_finite() {
            return Err(Error::NumericalFailure { step, reason: format!("sample {index} diverged") });
        }
    }
    Ok((log_w.exp(), amp))
}

/// Draws one corridor from the sampling proposal (stream `(seed, 0)`), returning
/// the readouts, the importance weight and the conditional amplitude.
pub fn sample_corridor_record(psi0: &WaveFunction, s: &Scenario, seed: u64) -> Result<(Corridor, f64, WaveFunction)> {
    if s.model.kappa <= 0.0 {
        return Err(Error::Domain("sampling a corridor needs kappa > 0".into()));
    }
    if psi0.grid != s.grid {
        return Err(Error::Invalid("wave function grid differs from scenario grid".into()));
    }
    let ev = Evolver::new(s)?;
    let mut readouts = Vec::with_capacity(s.n_steps);
    let (w, amp) = sample_corridor(&ev, psi0, seed, 0, Some(&mut readouts))?;
    Ok((Corridor::new(s.dt, readouts)?, w, WaveFunction::new(s.grid, amp)?))
}

/// Monte Carlo corridor average `(1/N) Σ w |ψ_[a]⟩⟨ψ_[a]|`.
///
/// Sample `i` draws from the ChaCha8 stream `(seed, i)`; samples are computed in
/// parallel on the current rayon pool and summed in index order, so the result
/// does not depend on the number of threads.
pub fn accumulate_density_mc(psi0: &WaveFunction, s: &Scenario, n_samples: usize, seed: u64) -> Result<DensityMatrix> {
    accumulate_density_mc_checkpoints(psi0, s, n_samples, seed, &[n_samples]).map(|mut v| v.remove(0).1)
}

/// Running MC estimates at each sample count in `checkpoints` (ascending, last ≤ `n_samples`).
pub fn accumulate_density_mc_checkpoints(
    psi0: &WaveFunction,
    s: &Scenario,
    n_samples: usize,
    seed: u64,
    checkpoints: &[usize],
) -> Result<Vec<(usize, DensityMatrix)>> {
    if n_samples == 0 {
        return Err(Error::Domain("n_samples must be at least 1".into()));
    }
    if s.model.kappa <= 0.0 {
        return Err(Error::Domain(
            "Monte Carlo corridor sampling needs kappa > 0; use the exact mode for kappa = 0".into(),
        ));
    }
    if psi0.grid != s.grid {
        return Err(Error::Invalid("wave function grid differs from scenario grid".into()));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints.iter().any(|&c| c == 0 || c > n_samples) {
        return Err(Error::Invalid("checkpoints must be ascending within 1..=n_samples".into()));
    }
    let ev = Evolver::new(s)?;
    let n = s.grid.n;
    let mut sum = DMatrix::<Complex64>::zeros(n, n);
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    let mut start = 0;
    while start < n_samples {
        let end = (start + BATCH).min(n_samples);
        let batch: Vec<Result<(f64, Vec<Complex64>)>> = (start..end)
            .into_par_iter()
            .map(|i| sample_corridor(&ev, psi0, seed, i as u64, None))
            .collect();
        for (offset, r) in batch.into_iter().enumerate() {
            let (w, amp) = r?;
            let v = DVector::from_vec(amp);
            sum.gerc(Complex64::new(w, 0.0), &v, &v, Complex64::new(1.0, 0.0));
            let count = start + offset + 1;
            if next.peek().is_some_and(|&&c| c == count) {
                next.next();
                let mut rho = DensityMatrix::new(s.grid, sum.scale(1.0 / count as f64))?;
                rho.symmetrize();
                out.push((count, rho));
            }
        }
        start = end;
    }
    Ok(out)
}

/// Runs [`accumulate_density_mc`] on a dedicated pool of `threads` workers.
pub fn accumulate_density_mc_with_threads(
    psi0: &WaveFunction,
    s: &Scenario,
    n_samples: usize,
    seed: u64,
    threads: usize,
) -> Result<DensityMatrix> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    pool.install(|| accumulate_density_mc(psi0, s, n_samples, seed))
}
