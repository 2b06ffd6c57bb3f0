//! Strang split-step propagation under a fixed corridor.

use std::sync::Once;

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::state::{GaussianPacket, Grid, Spectral, WaveFunction};
use crate::algebra::PhysicsParams;
use crate::error::{Error, Result};
use crate::kernels::{Basis, GaugeModel, MeasurementModel, ObservableSpec};
use crate::paths::{check_dt, check_same_dt, Corridor};

pub const MAX_MATRIX_GRID: usize = 1024;
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-6;
pub const BOUNDARY_POINTS: usize = 5;

#[derive(Debug, Clone)]
pub struct Scenario {
    pub grid: Grid,
    pub params: PhysicsParams,
    pub gauge: GaugeModel,
    pub model: MeasurementModel,
    pub dt: f64,
    pub n_steps: usize,
    pub psi0: GaussianPacket,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        PhysicsParams::new(self.params.m, self.params.hbar)?;
        check_dt(self.dt)?;
        self.psi0.validate()?;
        MeasurementModel::new(
            self.model.a.clone(),
            self.model.kappa,
            self.model.b.clone(),
            self.model.c.clone(),
            self.model.eta,
        )?;
        Ok(())
    }

    pub fn total_time(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    pub fn initial_state(&self) -> Result<WaveFunction> {
        WaveFunction::gaussian(self.grid, &self.psi0, &self.params)
    }

    pub fn with_model(&self, model: MeasurementModel) -> Self {
        Self { model, ..self.clone() }
    }

    pub fn with_steps(&self, dt: f64, n_steps: usize) -> Self {
        Self { dt, n_steps, ..self.clone() }
    }
}

/// Expectation values of the normalized state; `norm` is `‖ψ‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub t: f64,
    pub norm: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub mean_x2: f64,
    pub energy: f64,
}

/// Scratch buffers owned by one caller of [`Evolver::step_in_place`].
pub struct Workspace {
    scratch: Vec<Complex64>,
    phase: Vec<Complex64>,
}

fn observable_values(obs: Option<&ObservableSpec>, basis: Basis, args: &[f64]) -> Option<Vec<f64>> {
    obs.filter(|o| o.basis == basis).map(|o| args.iter().map(|&u| o.eval(u)).collect())
}

/// Precomputed split-step data for one scenario. Cheap to share across threads.
#[derive(Clone)]
pub struct Evolver {
    pub scenario: Scenario,
    spectral: Spectral,
    xs: Vec<f64>,
    ps: Vec<f64>,
    kinetic: Vec<f64>,
    // per basis: A, B, C sampled on grid points or momenta
    a_x: Option<Vec<f64>>,
    b_x: Option<Vec<f64>>,
    c_x: Option<Vec<f64>>,
    a_p: Option<Vec<f64>>,
    b_p: Option<Vec<f64>>,
    c_p: Option<Vec<f64>>,
}

impl Evolver {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let grid = scenario.grid;
        let xs = grid.points();
        let ps = grid.momenta(&scenario.params);
        let m = scenario.params.m;
        let kinetic = ps.iter().map(|p| p * p / (2.0 * m)).collect();
        let model = &scenario.model;
        let measured = model.kappa > 0.0;
        let a_obs = if measured { Some(&model.a) } else { None };
        Ok(Self {
            spectral: Spectral::new(grid.n),
            a_x: observable_values(a_obs, Basis::Position, &xs),
            b_x: observable_values(model.b.as_ref(), Basis::Position, &xs),
            c_x: observable_values(model.c.as_ref(), Basis::Position, &xs),
            a_p: observable_values(a_obs, Basis::Momentum, &ps),
            b_p: observable_values(model.b.as_ref(), Basis::Momentum, &ps),
            c_p: observable_values(model.c.as_ref(), Basis::Momentum, &ps),
            xs,
            ps,
            kinetic,
            scenario: scenario.clone(),
        })
    }

    pub fn grid(&self) -> Grid {
        self.scenario.grid
    }

    pub fn workspace(&self) -> Workspace {
        Workspace {
            scratch: vec![Complex64::default(); self.spectral.scratch_len()],
            phase: vec![Complex64::default(); self.scenario.grid.n],
        }
    }

    /// Generator `−(i/ħ)(H_R) − Γ` applied over `tau` in one basis, as a multiplier.
    #[inline]
    fn factor(&self, real_part: f64, decay: f64, tau: f64) -> Complex64 {
        let hbar = self.scenario.params.hbar;
        Complex64::from_polar((-decay * tau).exp(), -real_part * tau / hbar)
    }

    fn momentum_half(&self, buf: &mut [Complex64], a: f64) {
        let model = &self.scenario.model;
        let tau = 0.5 * self.scenario.dt;
        for k in 0..buf.len() {
            let mut re = self.kinetic[k];
            if let Some(b) = &self.b_p {
                re += model.eta * a * b[k];
            }
            if let Some(c) = &self.c_p {
                re += c[k];
            }
            let decay = self.a_p.as_ref().map_or(0.0, |av| {
                let r = av[k] - a;
                model.kappa * r * r
            });
            buf[k] *= self.factor(re, decay, tau);
        }
    }

    /// `χ(x_j) = ∫_{x_min}^{x_j} A(x', t) dx'`, Simpson per cell.
    fn fill_gauge_phase(&self, t: f64, out: &mut [Complex64]) {
        let g = &self.scenario.gauge;
        let h = self.scenario.grid.spacing();
        let mut chi = 0.0;
        out[0] = Complex64::new(1.0, 0.0);
        for (w, e) in self.xs.windows(2).zip(&mut out[1..]) {
            let (x0, x1) = (w[0], w[1]);
            chi += h / 6.0 * (g.a_at(x0, t) + 4.0 * g.a_at(0.5 * (x0 + x1), t) + g.a_at(x1, t));
            *e = Complex64::from_polar(1.0, chi);
        }
    }

    pub(crate) fn kinetic_half(&self, psi: &mut [Complex64], a: f64, t_mid: f64, ws: &mut Workspace) {
        let gauged = self.scenario.gauge.has_vector_potential();
        if gauged {
            self.fill_gauge_phase(t_mid, &mut ws.phase);
            for (z, e) in psi.iter_mut().zip(&ws.phase) {
                *z *= e.conj();
            }
        }
        self.spectral.forward(psi, &mut ws.scratch);
        self.momentum_half(psi, a);
        self.spectral.inverse(psi, &mut ws.scratch);
        if gauged {
            for (z, e) in psi.iter_mut().zip(&ws.phase) {
                *z *= e;
            }
        }
    }

    fn position_full(&self, psi: &mut [Complex64], a: f64, t_mid: f64) {
        let s = &self.scenario;
        let model = &s.model;
        for (j, z) in psi.iter_mut().enumerate() {
            let x = self.xs[j];
            let mut re = s.gauge.physical_potential(x, t_mid, &s.params);
            if let Some(b) = &self.b_x {
                re += model.eta * a * b[j];
            }
            if let Some(c) = &self.c_x {
                re += c[j];
            }
            let decay = self.a_x.as_ref().map_or(0.0, |av| {
                let r = av[j] - a;
                model.kappa * r * r
            });
            *z *= self.factor(re, decay, s.dt);
        }
    }

    /// One Strang slice starting at time `t` with readout `a`.
    pub fn step_in_place(&self, psi: &mut [Complex64], t: f64, a: f64, ws: &mut Workspace) {
        let t_mid = t + 0.5 * self.scenario.dt;
        self.kinetic_half(psi, a, t_mid, ws);
        self.position_full(psi, a, t_mid);
        self.kinetic_half(psi, a, t_mid, ws);
    }

    fn check_step(psi: &[Complex64], step: usize) -> Result<()> {
        if psi.iter().all(|z| z.is_finite()) {
            Ok(())
        } else {
            Err(Error::NumericalFailure { step, reason: "non-finite amplitude".into() })
        }
    }

    #[inline]
    pub fn time_of(&self, step: usize) -> f64 {
        step as f64 * self.scenario.dt
    }

    fn check_corridor(&self, c: &Corridor) -> Result<()> {
        if !c.is_empty() {
            check_same_dt(self.scenario.dt, c.dt())?;
        }
        Ok(())
    }

    fn check_grid(&self, psi: &WaveFunction) -> Result<()> {
        if psi.grid != self.scenario.grid {
            return Err(Error::Invalid("wave function grid differs from scenario grid".into()));
        }
        Ok(())
    }

    /// Folds the corridor samples over consecutive slices, the first at global
    /// step index `first_step`.
    pub fn run_from(&self, psi: &WaveFunction, c: &Corridor, first_step: usize) -> Result<WaveFunction> {
        self.run_recording(psi, c, first_step, 0).map(|(psi, _)| psi)
    }

    /// As [`Self::run_from`], also recording observables every `every` steps
    /// (and at both ends); `every = 0` records nothing.
    pub fn run_recording(
        &self,
        psi: &WaveFunction,
        c: &Corridor,
        first_step: usize,
        every: usize,
    ) -> Result<(WaveFunction, Vec<Observables>)> {
        self.check_grid(psi)?;
        self.check_corridor(c)?;
        let mut out = psi.clone();
        let mut ws = self.workspace();
        let mut series = Vec::new();
        if every > 0 {
            series.push(self.observables(&out, self.time_of(first_step)));
        }
        for (k, &a) in c.samples().iter().enumerate() {
            let step = first_step + k;
            self.step_in_place(&mut out.amp, self.time_of(step), a, &mut ws);
            Self::check_step(&out.amp, step)?;
            if every > 0 && ((k + 1) % every == 0 || k + 1 == c.len()) {
                series.push(self.observables(&out, self.time_of(step + 1)));
            }
        }
        warn_if_boundary_mass(&out);
        Ok((out, series))
    }

    pub fn observables(&self, psi: &WaveFunction, t: f64) -> Observables {
        let params = &self.scenario.params;
        let norm = psi.norm();
        let mean_x = psi.mean_x();
        let mean_x2 = psi.mean_x2();
        let mut buf = psi.amp.clone();
        let mut ws = self.workspace();
        let gauged = self.scenario.gauge.has_vector_potential();
        if gauged {
            self.fill_gauge_phase(t, &mut ws.phase);
            for (z, e) in buf.iter_mut().zip(&ws.phase) {
                *z *= e.conj();
            }
        }
        // ⟨p⟩ from the ungauged amplitudes; kinetic energy from the gauged ones
        let mut raw = psi.amp.clone();
        self.spectral.forward(&mut raw, &mut ws.scratch);
        self.spectral.forward(&mut buf, &mut ws.scratch);
        let weights = |v: &[Complex64], f: &dyn Fn(usize) -> f64| {
            let (mut num, mut den) = (0.0, 0.0);
            for (k, z) in v.iter().enumerate() {
                num += z.norm_sqr() * f(k);
                den += z.norm_sqr();
            }
            num / den
        };
        let mean_p = weights(&raw, &|k| self.ps[k]);
        let kin = weights(&buf, &|k| self.kinetic[k]);
        let pot = psi.expect_position(|x| self.scenario.gauge.physical_potential(x, t, params));
        Observables { t, norm, mean_x, mean_p, mean_x2, energy: kin + pot }
    }
}

fn warn_if_boundary_mass(psi: &WaveFunction) {
    static WARNED: Once = Once::new();
    let mass = psi.boundary_mass(BOUNDARY_POINTS);
    if mass > BOUNDARY_MASS_LIMIT {
        WARNED.call_once(|| {
            warn!(
                "relative mass {mass:.3e} within {BOUNDARY_POINTS} points of the grid edge; periodic wrap-around may affect results"
            )
        });
    }
}

/// One slice starting at time `t` with readout `a_t`.
pub fn propagate_step(psi: &WaveFunction, t: f64, a_t: f64, s: &Scenario) -> Result<WaveFunction> {
    if !a_t.is_finite() || !t.is_finite() {
        return Err(Error::Domain("readout and time must be finite".into()));
    }
    let ev = Evolver::new(s)?;
    ev.check_grid(psi)?;
    let mut out = psi.clone();
    let mut ws = ev.workspace();
    ev.step_in_place(&mut out.amp, t, a_t, &mut ws);
    Evolver::check_step(&out.amp, 0)?;
    Ok(out)
}

/// Conditional amplitude `ψ_[a]` after the whole corridor; `c.len()` must equal `s.n_steps`.
pub fn propagate_corridor(psi0: &WaveFunction, c: &Corridor, s: &Scenario) -> Result<WaveFunction> {
    if c.len() != s.n_steps {
        return Err(Error::LengthMismatch { left: s.n_steps, right: c.len() });
    }
    Evolver::new(s)?.run_from(psi0, c, 0)
}

/// Discretized kernel of the corridor propagator, columns from `δ_j / h`.
pub fn propagator_matrix(s: &Scenario, c: &Corridor) -> Result<DMatrix<Complex64>> {
    propagator_matrix_from(s, c, 0)
}

/// As [`propagator_matrix`], with the first slice at global step `first_step`.
pub fn propagator_matrix_from(s: &Scenario, c: &Corridor, first_step: usize) -> Result<DMatrix<Complex64>> {
    let n = s.grid.n;
    if n > MAX_MATRIX_GRID {
        return Err(Error::Refused(format!("propagator matrix limited to n <= {MAX_MATRIX_GRID}, got {n}")));
    }
    let ev = Evolver::new(s)?;
    ev.check_corridor(c)?;
    let columns: Vec<Result<Vec<Complex64>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut amp = WaveFunction::delta(s.grid, j).amp;
            let mut ws = ev.workspace();
            for (k, &a) in c.samples().iter().enumerate() {
                let step = first_step + k;
                ev.step_in_place(&mut amp, ev.time_of(step), a, &mut ws);
                Evolver::check_step(&amp, step)?;
            }
            Ok(amp)
        })
        .collect();
    let mut m = DMatrix::zeros(n, n);
    for (j, col) in columns.into_iter().enumerate() {
        let col = col?;
        for (i, z) in col.into_iter().enumerate() {
            m[(i, j)] = z;
        }
    }
    Ok(m)
}
