//! Uniform periodic grid and the states that live on it.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::algebra::PhysicsParams;
use crate::error::{Error, Result};
use crate::numerics::hermitian_trace_norm;

/// `n` points `x_j = x_min + j h`, `h = (x_max − x_min)/n`, periodic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::Domain(format!("grid bounds must satisfy x_min < x_max, got [{x_min}, {x_max}]")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Domain(format!("grid size must be a power of two >= 8, got {n}")));
        }
        Ok(Self { x_min, x_max, n })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.x_min, self.x_max, self.n).map(|_| ())
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / self.n as f64
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Momenta `ħ k` in FFT ordering.
    pub fn momenta(&self, params: &PhysicsParams) -> Vec<f64> {
        let dk = 2.0 * PI / self.length();
        (0..self.n)
            .map(|k| {
                let signed = if k < self.n / 2 { k as f64 } else { k as f64 - self.n as f64 };
                params.hbar * dk * signed
            })
            .collect()
    }
}

/// Forward/inverse transform pair for one grid size. The inverse is normalized.
#[derive(Clone)]
pub(crate) struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    inv_n: f64,
}

impl Spectral {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n), inv_n: 1.0 / n as f64 }
    }

    pub(crate) fn scratch_len(&self) -> usize {
        self.forward.get_inplace_scratch_len().max(self.inverse.get_inplace_scratch_len())
    }

    pub(crate) fn forward(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, scratch);
    }

    pub(crate) fn inverse(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, scratch);
        for z in buf.iter_mut() {
            *z *= self.inv_n;
        }
    }
}

/// Complex amplitudes on a [`Grid`]; `‖ψ‖² = h Σ|ψ_j|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    pub grid: Grid,
    pub amp: Vec<Complex64>,
}

/// Gaussian initial state: `center`, position standard deviation `width`, mean `momentum`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacket {
    pub center: f64,
    pub width: f64,
    pub momentum: f64,
}

impl GaussianPacket {
    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::Domain(format!("packet width must be positive, got {}", self.width)));
        }
        if !(self.center.is_finite() && self.momentum.is_finite()) {
            return Err(Error::Domain("packet center and momentum must be finite".into()));
        }
        Ok(())
    }

    /// Continuum amplitude `(2πσ²)^{-1/4} exp[−(x−c)²/4σ² + i p (x−c)/ħ]`.
    pub fn amplitude(&self, x: f64, params: &PhysicsParams) -> Complex64 {
        let s2 = self.width * self.width;
        let d = x - self.center;
        let modulus = (2.0 * PI * s2).powf(-0.25) * (-d * d / (4.0 * s2)).exp();
        Complex64::from_polar(modulus, self.momentum * d / params.hbar)
    }
}

impl WaveFunction {
    pub fn new(grid: Grid, amp: Vec<Complex64>) -> Result<Self> {
        if amp.len() != grid.n {
            return Err(Error::LengthMismatch { left: grid.n, right: amp.len() });
        }
        if amp.iter().any(|z| !z.is_finite()) {
            return Err(Error::Invalid("non-finite amplitude".into()));
        }
        Ok(Self { grid, amp })
    }

    /// Sampled Gaussian, renormalized to unit discrete norm.
    pub fn gaussian(grid: Grid, packet: &GaussianPacket, params: &PhysicsParams) -> Result<Self> {
        packet.validate()?;
        let amp = (0..grid.n).map(|j| packet.amplitude(grid.x(j), params)).collect();
        let mut psi = Self::new(grid, amp)?;
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::Domain("packet has no weight on the grid".into()));
        }
        psi.scale(1.0 / norm);
        Ok(psi)
    }

    /// Discrete delta at grid point `j`, amplitude `1/h`.
    pub fn delta(grid: Grid, j: usize) -> Self {
        let mut amp = vec![Complex64::default(); grid.n];
        amp[j] = Complex64::new(1.0 / grid.spacing(), 0.0);
        Self { grid, amp }
    }

    pub fn scale(&mut self, s: f64) {
        for z in &mut self.amp {
            *z *= s;
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.grid.spacing() * self.amp.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        let n = self.norm();
        if n > 0.0 {
            out.scale(1.0 / n);
        }
        out
    }

    /// `⟨f(x)⟩` for the normalized state.
    pub fn expect_position(&self, f: impl Fn(f64) -> f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (j, z) in self.amp.iter().enumerate() {
            let w = z.norm_sqr();
            num += w * f(self.grid.x(j));
            den += w;
        }
        num / den
    }

    /// `⟨f(p)⟩` for the normalized state (FFT of the amplitudes).
    pub fn expect_momentum(&self, params: &PhysicsParams, f: impl Fn(f64) -> f64) -> f64 {
        let spectral = Spectral::new(self.grid.n);
        let mut buf = self.amp.clone();
        let mut scratch = vec![Complex64::default(); spectral.scratch_len()];
        spectral.forward(&mut buf, &mut scratch);
        let ps = self.grid.momenta(params);
        let (mut num, mut den) = (0.0, 0.0);
        for (z, p) in buf.iter().zip(&ps) {
            let w = z.norm_sqr();
            num += w * f(*p);
            den += w;
        }
        num / den
    }

    pub fn mean_x(&self) -> f64 {
        self.expect_position(|x| x)
    }

    pub fn mean_x2(&self) -> f64 {
        self.expect_position(|x| x * x)
    }

    pub fn mean_p(&self, params: &PhysicsParams) -> f64 {
        self.expect_momentum(params, |p| p)
    }

    /// Position variance of the normalized state.
    pub fn width_sq(&self) -> f64 {
        let m = self.mean_x();
        self.mean_x2() - m * m
    }

    /// Probability within `points` grid points of either edge, relative to the total.
    pub fn boundary_mass(&self, points: usize) -> f64 {
        let n = self.grid.n;
        let k = points.min(n / 2);
        let total: f64 = self.amp.iter().map(|z| z.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let edge: f64 = self.amp[..k].iter().chain(&self.amp[n - k..]).map(|z| z.norm_sqr()).sum();
        edge / total
    }

    /// `√(h Σ|ψ−φ|²) / √(h Σ|φ|²)`
    pub fn relative_l2_distance(&self, reference: &Self) -> f64 {
        let num: f64 = self.amp.iter().zip(&reference.amp).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = reference.amp.iter().map(|z| z.norm_sqr()).sum();
        (num / den).sqrt()
    }
}

/// Density matrix kernel `ρ(x_i, x_j)` on a grid; `tr ρ = h Σ ρ_ii`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub grid: Grid,
    pub rho: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(grid: Grid, rho: DMatrix<Complex64>) -> Result<Self> {
        if rho.nrows() != grid.n || rho.ncols() != grid.n {
            return Err(Error::LengthMismatch { left: grid.n, right: rho.nrows() });
        }
        Ok(Self { grid, rho })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, rho: DMatrix::zeros(grid.n, grid.n) }
    }

    /// `ρ(x, x') = ψ(x) ψ*(x')`
    pub fn from_pure(psi: &WaveFunction) -> Self {
        let n = psi.grid.n;
        let rho = DMatrix::from_fn(n, n, |i, j| psi.amp[i] * psi.amp[j].conj());
        Self { grid: psi.grid, rho }
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.diagonal().iter().sum::<Complex64>() * self.grid.spacing()
    }

    /// `tr ρ² / (tr ρ)²`
    pub fn purity(&self) -> f64 {
        let h = self.grid.spacing();
        let tr2 = h * h * self.rho.iter().map(|z| z.norm_sqr()).sum::<f64>();
        tr2 / self.trace().norm_sqr()
    }

    /// max |ρ − ρ†|
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.grid.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                worst = worst.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Replace `ρ` by `(ρ + ρ†)/2`.
    pub fn symmetrize(&mut self) {
        let n = self.grid.n;
        for i in 0..n {
            for j in 0..i {
                let avg = 0.5 * (self.rho[(i, j)] + self.rho[(j, i)].conj());
                self.rho[(i, j)] = avg;
                self.rho[(j, i)] = avg.conj();
            }
            let d = self.rho[(i, i)].re;
            self.rho[(i, i)] = Complex64::new(d, 0.0);
        }
    }

    /// Trace distance `½‖ρ − σ‖₁` of the operators, grid measure included.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Invalid("density matrices live on different grids".into()));
        }
        let diff = (&self.rho - &other.rho) * Complex64::new(self.grid.spacing(), 0.0);
        Ok(hermitian_trace_norm(&diff))
    }

    /// `⟨f(x)⟩ = h Σ f(x_i) ρ_ii / tr ρ`
    pub fn expect_position(&self, f: impl Fn(f64) -> f64) -> f64 {
        let h = self.grid.spacing();
        let num: f64 = (0..self.grid.n).map(|i| f(self.grid.x(i)) * self.rho[(i, i)].re).sum::<f64>() * h;
        num / self.trace().re
    }
}
