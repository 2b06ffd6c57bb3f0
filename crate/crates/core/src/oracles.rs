//! Reference solvers with a deliberately different discretization from the
//! split-step engine: finite differences, Dirichlet walls, implicit or RK4 time
//! stepping.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::PhysicsParams;
use crate::error::{Error, Result};
use crate::evolution::{DensityMatrix, Grid, Observables, Scenario, WaveFunction};
use crate::kernels::{free_kernel, Basis, GaugeModel, MeasurementModel, ObservableSpec};
use crate::numerics::{gauss_legendre, solve_tridiagonal};
use crate::paths::{check_dt, check_same_dt, Corridor};

pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;

/// `−(ħ²/2m) Δ_h + diag(V_phys + η a B + C − iħκ(A − a)²)` with Dirichlet walls.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveHamiltonian {
    pub grid: Grid,
    pub hbar: f64,
    /// Off-diagonal entry `−ħ²/(2m h²)`.
    pub offdiag: f64,
    pub diag: Vec<Complex64>,
}

impl EffectiveHamiltonian {
    pub fn new(
        grid: Grid,
        params: &PhysicsParams,
        gauge: &GaugeModel,
        model: &MeasurementModel,
        t: f64,
        a: f64,
    ) -> Result<Self> {
        if gauge.has_vector_potential() {
            return Err(Error::Unsupported("the finite-difference oracle has no vector potential".into()));
        }
        if !model.all_in(Basis::Position) {
            return Err(Error::Unsupported("the finite-difference oracle needs position-basis observables".into()));
        }
        let h = grid.spacing();
        let offdiag = -params.hbar * params.hbar / (2.0 * params.m * h * h);
        let diag = grid
            .points()
            .into_iter()
            .map(|x| {
                let mut re = -2.0 * offdiag + gauge.physical_potential(x, t, params);
                if let Some(b) = &model.b {
                    re += model.eta * a * b.eval(x);
                }
                if let Some(c) = &model.c {
                    re += c.eval(x);
                }
                let r = model.a.eval(x) - a;
                Complex64::new(re, -params.hbar * model.kappa * r * r)
            })
            .collect();
        Ok(Self { grid, hbar: params.hbar, offdiag, diag })
    }

    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let n = psi.len();
        (0..n)
            .map(|i| {
                let mut z = self.diag[i] * psi[i];
                if i > 0 {
                    z += psi[i - 1] * self.offdiag;
                }
                if i + 1 < n {
                    z += psi[i + 1] * self.offdiag;
                }
                z
            })
            .collect()
    }

    /// Largest eigenvalue of the anti-Hermitian part, `max_i Im(diag_i)`.
    pub fn max_gain(&self) -> f64 {
        self.diag.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Crank–Nicolson: `(1 + i dt H/2ħ) ψ' = (1 − i dt H/2ħ) ψ`.
pub fn cn_step(psi: &WaveFunction, h: &EffectiveHamiltonian, dt: f64) -> Result<WaveFunction> {
    check_dt(dt)?;
    if psi.grid != h.grid {
        return Err(Error::Invalid("wave function grid differs from Hamiltonian grid".into()));
    }
    let n = psi.grid.n;
    let c = Complex64::new(0.0, 0.5 * dt / h.hbar);
    let hpsi = h.apply(&psi.amp);
    let rhs: Vec<Complex64> = psi.amp.iter().zip(&hpsi).map(|(p, hp)| p - c * hp).collect();
    let off = vec![c * h.offdiag; n];
    let diag: Vec<Complex64> = h.diag.iter().map(|d| Complex64::new(1.0, 0.0) + c * d).collect();
    let amp = solve_tridiagonal(&off, &diag, &off, &rhs)?;
    WaveFunction::new(psi.grid, amp).map_err(|_| Error::NumericalFailure { step: 0, reason: "non-finite amplitude".into() })
}

/// Observables of a Dirichlet-grid state: `⟨p⟩` from central differences,
/// energy from the finite-difference Hermitian Hamiltonian.
pub fn oracle_observables(psi: &WaveFunction, t: f64, params: &PhysicsParams, gauge: &GaugeModel) -> Observables {
    let n = psi.grid.n;
    let h = psi.grid.spacing();
    let amp = &psi.amp;
    let at = |i: isize| if i < 0 || i >= n as isize { Complex64::default() } else { amp[i as usize] };
    let norm_sq: f64 = amp.iter().map(|z| z.norm_sqr()).sum();
    let mut p_acc = 0.0;
    let mut kin = 0.0;
    for i in 0..n as isize {
        let z = at(i);
        let deriv = (at(i + 1) - at(i - 1)) / (2.0 * h);
        p_acc += (z.conj() * Complex64::new(0.0, -params.hbar) * deriv).re;
        let lap = (at(i + 1) - 2.0 * z + at(i - 1)) / (h * h);
        kin += (z.conj() * lap).re * (-params.hbar * params.hbar / (2.0 * params.m));
    }
    let pot = psi.expect_position(|x| gauge.physical_potential(x, t, params));
    Observables {
        t,
        norm: psi.norm(),
        mean_x: psi.mean_x(),
        mean_p: p_acc / norm_sq,
        mean_x2: psi.mean_x2(),
        energy: kin / norm_sq + pot,
    }
}

/// Runs Crank–Nicolson over a corridor, Hamiltonian frozen at each slice midpoint.
pub fn cn_propagate(
    psi0: &WaveFunction,
    c: &Corridor,
    s: &Scenario,
    every: usize,
) -> Result<(WaveFunction, Vec<Observables>)> {
    s.validate()?;
    if !c.is_empty() {
        check_same_dt(s.dt, c.dt())?;
    }
    let mut psi = psi0.clone();
    let mut series = Vec::new();
    if every > 0 {
        series.push(oracle_observables(&psi, 0.0, &s.params, &s.gauge));
    }
    for (k, &a) in c.samples().iter().enumerate() {
        let t = k as f64 * s.dt;
        let h = EffectiveHamiltonian::new(s.grid, &s.params, &s.gauge, &s.model, t + 0.5 * s.dt, a)?;
        psi = cn_step(&psi, &h, s.dt).map_err(|e| match e {
            Error::NumericalFailure { reason, .. } => Error::NumericalFailure { step: k, reason },
            other => other,
        })?;
        if every > 0 && ((k + 1) % every == 0 || k + 1 == c.len()) {
            series.push(oracle_observables(&psi, t + s.dt, &s.params, &s.gauge));
        }
    }
    Ok((psi, series))
}

/// Central-difference stencils for the second derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdOrder {
    Second,
    Fourth,
}

impl FdOrder {
    /// Coefficients for offsets `0, ±1, ±2, …`, in units of `1/h²`.
    fn stencil(self) -> &'static [f64] {
        match self {
            FdOrder::Second => &[-2.0, 1.0],
            FdOrder::Fourth => &[-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0],
        }
    }
}

/// Hermitian Hamiltonian `−(ħ²/2m) Δ_h + V_phys(x, t)` for the master equation.
#[derive(Debug, Clone)]
pub struct LindbladHamiltonian {
    pub grid: Grid,
    pub params: PhysicsParams,
    pub gauge: GaugeModel,
    pub order: FdOrder,
}

impl LindbladHamiltonian {
    pub fn new(grid: Grid, params: PhysicsParams, gauge: GaugeModel, order: FdOrder) -> Result<Self> {
        if gauge.has_vector_potential() {
            return Err(Error::Unsupported("the master-equation oracle has no vector potential".into()));
        }
        Ok(Self { grid, params, gauge, order })
    }

    /// Band coefficients `c_s` of the kinetic operator (offset `s = 0, 1, …`).
    fn band(&self) -> Vec<f64> {
        let h = self.grid.spacing();
        let scale = -self.params.hbar * self.params.hbar / (2.0 * self.params.m * h * h);
        self.order.stencil().iter().map(|c| c * scale).collect()
    }

    fn potential(&self, t: f64) -> Vec<f64> {
        self.grid.points().into_iter().map(|x| self.gauge.physical_potential(x, t, &self.params)).collect()
    }

    pub fn dense(&self, t: f64) -> DMatrix<Complex64> {
        let n = self.grid.n;
        let band = self.band();
        let v = self.potential(t);
        DMatrix::from_fn(n, n, |i, j| {
            let d = i.abs_diff(j);
            let mut z = if d < band.len() { band[d] } else { 0.0 };
            if i == j {
                z += v[i];
            }
            Complex64::new(z, 0.0)
        })
    }
}

/// `dρ/dt = −(i/ħ)[H, ρ] − (κ/2)(A(x) − A(x'))² ρ(x, x')`
fn lindblad_rhs(rho: &DMatrix<Complex64>, band: &[f64], v: &[f64], ad: &DMatrix<f64>, hbar: f64) -> DMatrix<Complex64> {
    let n = rho.nrows();
    let minus_i_over_hbar = Complex64::new(0.0, -1.0 / hbar);
    DMatrix::from_fn(n, n, |i, j| {
        // (Hρ)_ij − (ρH)_ij with banded symmetric H
        let mut comm = Complex64::new(v[i] - v[j], 0.0) * rho[(i, j)];
        // the diagonal band entry cancels in the commutator
        for (s, &c) in band.iter().enumerate().skip(1) {
            let mut acc = Complex64::default();
            if i >= s {
                acc += rho[(i - s, j)];
            }
            if i + s < n {
                acc += rho[(i + s, j)];
            }
            if j >= s {
                acc -= rho[(i, j - s)];
            }
            if j + s < n {
                acc -= rho[(i, j + s)];
            }
            comm += acc * c;
        }
        minus_i_over_hbar * comm - rho[(i, j)] * ad[(i, j)]
    })
}

/// One classical RK4 step of the master equation with `L = √κ A`, starting at time `t`.
pub fn lindblad_step(
    rho: &DensityMatrix,
    t: f64,
    h: &LindbladHamiltonian,
    l: &ObservableSpec,
    kappa: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    check_dt(dt)?;
    if l.basis != Basis::Position {
        return Err(Error::Unsupported("the master-equation oracle needs a position-basis A".into()));
    }
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::Domain(format!("kappa must be non-negative, got {kappa}")));
    }
    if rho.grid != h.grid {
        return Err(Error::Invalid("density matrix grid differs from Hamiltonian grid".into()));
    }
    let n = rho.grid.n;
    let av: Vec<f64> = rho.grid.points().into_iter().map(|x| l.eval(x)).collect();
    let ad = DMatrix::from_fn(n, n, |i, j| 0.5 * kappa * (av[i] - av[j]).powi(2));
    let band = h.band();
    let hbar = h.params.hbar;
    let (v0, vm, v1) = (h.potential(t), h.potential(t + 0.5 * dt), h.potential(t + dt));
    let half = Complex64::new(0.5 * dt, 0.0);
    let full = Complex64::new(dt, 0.0);
    let k1 = lindblad_rhs(&rho.rho, &band, &v0, &ad, hbar);
    let k2 = lindblad_rhs(&(&rho.rho + &k1 * half), &band, &vm, &ad, hbar);
    let k3 = lindblad_rhs(&(&rho.rho + &k2 * half), &band, &vm, &ad, hbar);
    let k4 = lindblad_rhs(&(&rho.rho + &k3 * full), &band, &v1, &ad, hbar);
    let incr = (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4) * Complex64::new(dt / 6.0, 0.0);
    let mut out = DensityMatrix::new(rho.grid, &rho.rho + incr)?;
    out.symmetrize();
    // an unstable step shows up either as trace drift or as tr ρ² > (tr ρ)²
    let excess = (out.purity().sqrt() - 1.0).max(0.0);
    let drift = (out.trace() - rho.trace()).norm().max(excess);
    if !drift.is_finite() || drift > TRACE_DRIFT_LIMIT {
        return Err(Error::StepSize { drift, limit: TRACE_DRIFT_LIMIT });
    }
    Ok(out)
}

/// Runs the scenario's `n_steps` slices of the master equation, each split into
/// enough RK4 substeps to keep `dt·‖generator‖ ≤ 1/2`.
pub fn lindblad_propagate(rho0: &DensityMatrix, s: &Scenario, order: FdOrder) -> Result<DensityMatrix> {
    let h = LindbladHamiltonian::new(s.grid, s.params, s.gauge.clone(), order)?;
    let sub = lindblad_substeps(&h, s);
    let dt = s.dt / sub as f64;
    let mut rho = rho0.clone();
    for k in 0..s.n_steps {
        for j in 0..sub {
            let t = k as f64 * s.dt + j as f64 * dt;
            rho = lindblad_step(&rho, t, &h, &s.model.a, s.model.kappa, dt)?;
        }
    }
    Ok(rho)
}

/// Substeps per slice from a bound on the generator's spectral radius.
pub fn lindblad_substeps(h: &LindbladHamiltonian, s: &Scenario) -> usize {
    let kinetic: f64 = 2.0 * h.band().iter().map(|c| c.abs()).sum::<f64>();
    let v = h.potential(0.0);
    let spread = |vals: &[f64]| {
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let av: Vec<f64> = s.grid.points().into_iter().map(|x| s.model.a.eval(x)).collect();
    let a_spread = spread(&av);
    let radius = (kinetic + spread(&v)) / s.params.hbar + 0.5 * s.model.kappa * a_spread * a_spread;
    ((s.dt * radius / 0.5).ceil() as usize).max(1)
}

/// Closed-form free Gaussian: `(center(t), width(t), norm)`; width is the
/// position standard deviation.
pub fn free_gaussian(t: f64, center0: f64, width0: f64, momentum0: f64, params: &PhysicsParams) -> Result<(f64, f64, f64)> {
    if !(width0 > 0.0 && width0.is_finite()) {
        return Err(Error::Domain(format!("width must be positive, got {width0}")));
    }
    let center = center0 + momentum0 / params.m * t;
    let spread = params.hbar * t / (2.0 * params.m * width0 * width0);
    let width = width0 * (1.0 + spread * spread).sqrt();
    Ok((center, width, 1.0))
}

/// Closed-form free Gaussian amplitude `ψ(x, t)` for an initial packet with
/// standard deviation `width0`.
pub fn free_gaussian_amplitude(x: f64, t: f64, center0: f64, width0: f64, momentum0: f64, params: &PhysicsParams) -> Complex64 {
    let (m, hbar) = (params.m, params.hbar);
    let i = Complex64::i();
    let s2 = width0 * width0;
    // complex width parameter σ_t² = σ² (1 + iħt/(2mσ²))
    let st2 = s2 * (Complex64::new(1.0, 0.0) + i * (hbar * t / (2.0 * m * s2)));
    let vel = momentum0 / m;
    let d = x - center0 - vel * t;
    let pref = (2.0 * std::f64::consts::PI * st2 * st2 / s2).powf(-0.25);
    let phase = i * (momentum0 * (x - center0) - 0.5 * momentum0 * vel * t) / hbar;
    pref * (-(d * d) / (4.0 * st2) + phase).exp()
}

/// `ψ(x_i, t) = h Σ_j K(x_i − y_j, t) ψ₀(y_j)` with the closed-form free kernel.
pub fn free_kernel_quadrature(psi0: &WaveFunction, t: f64, params: &PhysicsParams) -> Result<WaveFunction> {
    let grid = psi0.grid;
    let h = grid.spacing();
    let xs = grid.points();
    let mut amp = Vec::with_capacity(grid.n);
    for &x in &xs {
        let mut acc = Complex64::default();
        for (y, p) in xs.iter().zip(&psi0.amp) {
            acc += free_kernel(x - y, t, params)? * p;
        }
        amp.push(acc * h);
    }
    WaveFunction::new(grid, amp)
}

/// Closed form of the ε-regularized boost integral
/// `(m/2πħ) ∫dv exp{−εv² + i(m/ħ)(v dx − ½v²τ)}`.
pub fn regularized_boost_integral(dx: f64, dtau: f64, eps: f64, params: &PhysicsParams) -> Complex64 {
    let k = params.phase_scale();
    let q = Complex64::new(eps, 0.5 * k * dtau);
    let norm = params.m / (2.0 * std::f64::consts::PI * params.hbar);
    (Complex64::new(std::f64::consts::PI, 0.0) / q).sqrt() * (-(k * dx) * (k * dx) / (4.0 * q)).exp() * norm
}

/// `∫ K(x2 − y, τ2) K(y − x0, τ1) e^{−ε(y − y*)²} dy` by Gauss–Legendre panels,
/// `y*` the stationary point of the combined phase.
pub fn regularized_convolution(x2: f64, x0: f64, tau1: f64, tau2: f64, eps: f64, params: &PhysicsParams) -> Result<Complex64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("regulator must be positive, got {eps}")));
    }
    let alpha = 0.5 * params.phase_scale() * (1.0 / tau1 + 1.0 / tau2);
    let centre = (x0 / tau1 + x2 / tau2) / (1.0 / tau1 + 1.0 / tau2);
    let reach = (46.0 / eps).sqrt();
    let (nodes, weights) = gauss_legendre(16);
    let f = |y: f64| -> Result<Complex64> {
        let reg = (-eps * (y - centre) * (y - centre)).exp();
        Ok(free_kernel(x2 - y, tau2, params)? * free_kernel(y - x0, tau1, params)? * reg)
    };
    let mut total = Complex64::default();
    let mut r = 0.0;
    while r < reach {
        // keep the phase advance per panel below about π/2
        let width = (std::f64::consts::FRAC_PI_2 / (2.0 * alpha * r + 1.0)).min(0.25).min(reach - r);
        let mid = r + 0.5 * width;
        for (t, w) in nodes.iter().zip(&weights) {
            let u = mid + 0.5 * width * t;
            total += (f(centre + u)? + f(centre - u)?) * (0.5 * width * w);
        }
        r += width;
    }
    Ok(total)
}

/// ε → 0 limit of [`regularized_convolution`] by Richardson extrapolation over
/// `ε, ε/2, ε/4` (removes the O(ε) and O(ε²) terms).
pub fn chapman_kolmogorov_convolution(x2: f64, x0: f64, tau1: f64, tau2: f64, eps: f64, params: &PhysicsParams) -> Result<Complex64> {
    let i1 = regularized_convolution(x2, x0, tau1, tau2, eps, params)?;
    let i2 = regularized_convolution(x2, x0, tau1, tau2, 0.5 * eps, params)?;
    let i4 = regularized_convolution(x2, x0, tau1, tau2, 0.25 * eps, params)?;
    Ok((i4 * 8.0 - i2 * 6.0 + i1) / 3.0)
}

/// Dense generator `H_eff / ħ` of one slice on a small grid: exact periodic
/// kinetic matrix plus `V_phys(x, t) − iħκ(A(x) − a)²` on the diagonal.
/// Position-basis models only.
pub fn dense_generator(s: &Scenario, t: f64, a: f64) -> Result<DMatrix<Complex64>> {
    if !s.model.all_in(Basis::Position) || s.gauge.has_vector_potential() {
        return Err(Error::Unsupported("dense generator needs position-basis observables and no vector potential".into()));
    }
    let grid = s.grid;
    let n = grid.n;
    let ps = grid.momenta(&s.params);
    let xs = grid.points();
    let mut gen = DMatrix::from_fn(n, n, |i, j| {
        let d = xs[i] - xs[j];
        let sum: Complex64 = ps
            .iter()
            .map(|p| Complex64::from_polar(p * p / (2.0 * s.params.m), p * d / s.params.hbar))
            .sum();
        sum / n as f64
    });
    let m = &s.model;
    for i in 0..n {
        let x = xs[i];
        let mut re = s.gauge.physical_potential(x, t, &s.params);
        if let Some(b) = &m.b {
            re += m.eta * a * b.eval(x);
        }
        if let Some(c) = &m.c {
            re += c.eval(x);
        }
        let r = m.a.eval(x) - a;
        gen[(i, i)] += Complex64::new(re, -s.params.hbar * m.kappa * r * r);
    }
    Ok(gen / Complex64::new(s.params.hbar, 0.0))
}

/// `exp(−i H_eff T/ħ) ψ₀` with a time-independent generator (potential frozen at t = 0).
pub fn reference_propagation(psi0: &WaveFunction, s: &Scenario, a: f64, total: f64) -> Result<WaveFunction> {
    let gen = dense_generator(s, 0.0, a)?;
    let u = (gen * Complex64::new(0.0, -total)).exp();
    let out = u * nalgebra::DVector::from_column_slice(&psi0.amp);
    WaveFunction::new(psi0.grid, out.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::GaussianPacket;

    fn natural() -> PhysicsParams {
        PhysicsParams::natural()
    }

    #[test]
    fn free_gaussian_examples() {
        let p = natural();
        assert_eq!(free_gaussian(0.0, 0.4, 1.3, 0.2, &p).unwrap(), (0.4, 1.3, 1.0));
        let (_, w, _) = free_gaussian(2.0, 0.0, 1.0, 0.0, &p).unwrap();
        assert!((w * w - 2.0).abs() < 1e-14);
        let c1 = free_gaussian(1.0, 0.5, 1.0, 0.3, &p).unwrap().0;
        let c2 = free_gaussian(2.0, 0.5, 1.0, 0.3, &p).unwrap().0;
        assert!((c2 - c1 - 0.3).abs() < 1e-15);
        assert!(free_gaussian(1.0, 0.0, 0.0, 0.0, &p).is_err());
    }

    #[test]
    fn closed_form_amplitude_reduces_to_packet_at_t0() {
        let p = PhysicsParams::new(1.7, 0.6).unwrap();
        let pk = GaussianPacket { center: 0.3, width: 0.9, momentum: 0.8 };
        for x in [-1.0, 0.0, 0.7, 2.0] {
            let a = free_gaussian_amplitude(x, 0.0, pk.center, pk.width, pk.momentum, &p);
            assert!((a - pk.amplitude(x, &p)).norm() < 1e-14);
        }
    }

    #[test]
    fn cn_unitary_without_measurement() {
        let grid = Grid::new(-10.0, 10.0, 256).unwrap();
        let p = natural();
        let gauge = GaugeModel::new(Some(|x: f64, _t: f64| -0.5 * x * x), None::<fn(f64, f64) -> f64>);
        let model = MeasurementModel::unmeasured();
        let h = EffectiveHamiltonian::new(grid, &p, &gauge, &model, 0.0, 0.0).unwrap();
        let mut psi = WaveFunction::gaussian(grid, &GaussianPacket { center: 1.0, width: 0.7, momentum: 0.0 }, &p).unwrap();
        for _ in 0..10 {
            let next = cn_step(&psi, &h, 0.01).unwrap();
            assert!((next.norm() - psi.norm()).abs() < 1e-12);
            psi = next;
        }
    }

    #[test]
    fn cn_norm_decay_rate() {
        let grid = Grid::new(-10.0, 10.0, 512).unwrap();
        let p = natural();
        let model = MeasurementModel::decoherence(ObservableSpec::x(), 0.3).unwrap();
        let a = 0.2;
        let h = EffectiveHamiltonian::new(grid, &p, &GaugeModel::none(), &model, 0.0, a).unwrap();
        assert!(h.max_gain() <= 0.0);
        let psi = WaveFunction::gaussian(grid, &GaussianPacket { center: 1.0, width: 0.8, momentum: 0.0 }, &p).unwrap();
        let expected = 2.0 * 0.3 * psi.expect_position(|x| (x - a) * (x - a));
        for dt in [1e-3, 5e-4] {
            let next = cn_step(&psi, &h, dt).unwrap();
            let rate = (1.0 - next.norm_sq()) / dt;
            assert!((rate - expected).abs() < 5.0 * dt * expected.max(1.0), "dt={dt} rate={rate} expected={expected}");
        }
    }

    #[test]
    fn oracle_rejects_unsupported_models() {
        let grid = Grid::new(-1.0, 1.0, 16).unwrap();
        let p = natural();
        let gauge = GaugeModel::new(None::<fn(f64, f64) -> f64>, Some(|_x: f64, _t: f64| 1.0));
        assert!(EffectiveHamiltonian::new(grid, &p, &gauge, &MeasurementModel::unmeasured(), 0.0, 0.0).is_err());
        let model = MeasurementModel::decoherence(ObservableSpec::momentum("p", |p| p), 1.0).unwrap();
        assert!(EffectiveHamiltonian::new(grid, &p, &GaugeModel::none(), &model, 0.0, 0.0).is_err());
    }

    fn small_lindblad() -> (LindbladHamiltonian, DensityMatrix) {
        let grid = Grid::new(-5.0, 5.0, 32).unwrap();
        let p = natural();
        let gauge = GaugeModel::from_physical(Some(std::sync::Arc::new(|x: f64, _t: f64| 0.5 * x * x)), None, &p);
        let h = LindbladHamiltonian::new(grid, p, gauge, FdOrder::Fourth).unwrap();
        let psi = WaveFunction::gaussian(grid, &GaussianPacket { center: 0.8, width: 0.7, momentum: 0.0 }, &p).unwrap();
        (h, DensityMatrix::from_pure(&psi))
    }

    #[test]
    fn lindblad_trace_and_purity() {
        let (h, mut rho) = small_lindblad();
        let tr0 = rho.trace().re;
        let mut purity = rho.purity();
        for k in 0..100 {
            rho = lindblad_step(&rho, k as f64 * 0.005, &h, &ObservableSpec::x(), 0.5, 0.005).unwrap();
            assert!((rho.trace().re - tr0).abs() < 1e-10);
            let next = rho.purity();
            assert!(next < purity);
            purity = next;
        }
    }

    #[test]
    fn lindblad_stationary_state_stays_put() {
        let grid = Grid::new(-5.0, 5.0, 32).unwrap();
        let p = natural();
        let h = LindbladHamiltonian::new(grid, p, GaugeModel::none(), FdOrder::Second).unwrap();
        // an eigenvector of H commutes with it
        let dense = h.dense(0.0);
        let eig = dense.map(|z| z.re).symmetric_eigen();
        let v = eig.eigenvectors.column(0).map(|x| Complex64::new(x / grid.spacing().sqrt(), 0.0));
        let rho = DensityMatrix::new(grid, &v * v.adjoint()).unwrap();
        let next = lindblad_step(&rho, 0.0, &h, &ObservableSpec::x(), 0.0, 0.01).unwrap();
        assert!((&next.rho - &rho.rho).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
    }

    #[test]
    fn lindblad_step_too_large_is_rejected() {
        let (h, rho) = small_lindblad();
        let err = lindblad_step(&rho, 0.0, &h, &ObservableSpec::x(), 0.5, 5.0).unwrap_err();
        assert!(matches!(err, Error::StepSize { .. }), "{err:?}");
    }
}
