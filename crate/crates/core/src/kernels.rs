//! Weight functionals of the restricted path integral and the free kernel.
//!
//! Conventions: `GaugeModel::v` is the phase-rate potential entering
//! `α = exp{i∫dt [V + A ẋ]}`, so a physical potential corresponds to
//! `V = -V_phys/ħ` (see [`GaugeModel::from_physical`]). All weights are
//! scalars, so the time-ordered exponential is an ordinary one.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::PhysicsParams;
use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, CompensatedSum};
use crate::paths::{check_dt, check_same_dt, Corridor, Path};

/// Default Gaussian regulator for the boost integral, natural units.
pub const DEFAULT_BOOST_EPS: f64 = 1e-4;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type FieldFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Position,
    Momentum,
}

/// A real function applied pointwise in position or momentum representation.
#[derive(Clone)]
pub struct ObservableSpec {
    pub basis: Basis,
    f: ScalarFn,
    label: String,
}

impl fmt::Debug for ObservableSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObservableSpec").field("basis", &self.basis).field("label", &self.label).finish()
    }
}

impl ObservableSpec {
    pub fn new(basis: Basis, label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { basis, f: Arc::new(f), label: label.into() }
    }

    pub fn position(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(Basis::Position, label, f)
    }

    pub fn momentum(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(Basis::Momentum, label, f)
    }

    /// The position operator `x`.
    pub fn x() -> Self {
        Self::position("x", |x| x)
    }

    #[inline]
    pub fn eval(&self, arg: f64) -> f64 {
        (self.f)(arg)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Continuous measurement of `A` with strength `κ`, plus dissipation terms.
#[derive(Debug, Clone)]
pub struct MeasurementModel {
    pub a: ObservableSpec,
    pub kappa: f64,
    pub b: Option<ObservableSpec>,
    pub c: Option<ObservableSpec>,
    pub eta: f64,
}

impl MeasurementModel {
    pub fn new(
        a: ObservableSpec,
        kappa: f64,
        b: Option<ObservableSpec>,
        c: Option<ObservableSpec>,
        eta: f64,
    ) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::Domain(format!("kappa must be non-negative, got {kappa}")));
        }
        if !eta.is_finite() {
            return Err(Error::Domain("eta must be finite".into()));
        }
        Ok(Self { a, kappa, b, c, eta })
    }

    /// Pure decoherence: measure `a` with strength `kappa`, no B or C.
    pub fn decoherence(a: ObservableSpec, kappa: f64) -> Result<Self> {
        Self::new(a, kappa, None, None, 0.0)
    }

    /// κ = 0 and no dissipation terms.
    pub fn unmeasured() -> Self {
        Self { a: ObservableSpec::x(), kappa: 0.0, b: None, c: None, eta: 0.0 }
    }

    pub fn observables(&self) -> impl Iterator<Item = &ObservableSpec> {
        std::iter::once(&self.a).chain(self.b.iter()).chain(self.c.iter())
    }

    pub fn all_in(&self, basis: Basis) -> bool {
        self.observables().all(|o| o.basis == basis)
    }

    pub fn has_dissipation(&self) -> bool {
        self.b.is_some() || self.c.is_some()
    }
}

/// Potential `V(x,t)` (phase rate) and 1-D gauge field `A(x,t)` of the weight `α`.
#[derive(Clone, Default)]
pub struct GaugeModel {
    pub v: Option<FieldFn>,
    pub a_gauge: Option<FieldFn>,
}

impl fmt::Debug for GaugeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaugeModel")
            .field("v", &self.v.as_ref().map(|_| ".."))
            .field("a_gauge", &self.a_gauge.as_ref().map(|_| ".."))
            .finish()
    }
}

impl GaugeModel {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(
        v: Option<impl Fn(f64, f64) -> f64 + Send + Sync + 'static>,
        a_gauge: Option<impl Fn(f64, f64) -> f64 + Send + Sync + 'static>,
    ) -> Self {
        Self {
            v: v.map(|f| Arc::new(f) as FieldFn),
            a_gauge: a_gauge.map(|f| Arc::new(f) as FieldFn),
        }
    }

    /// Takes a physical potential and maps it to `V = -V_phys/ħ`.
    pub fn from_physical(
        v_phys: Option<FieldFn>,
        a_gauge: Option<FieldFn>,
        params: &PhysicsParams,
    ) -> Self {
        let hbar = params.hbar;
        let v = v_phys.map(|f| Arc::new(move |x: f64, t: f64| -f(x, t) / hbar) as FieldFn);
        Self { v, a_gauge }
    }

    #[inline]
    pub fn v_at(&self, x: f64, t: f64) -> f64 {
        self.v.as_ref().map_or(0.0, |f| f(x, t))
    }

    /// `V_phys = -ħ V`
    #[inline]
    pub fn physical_potential(&self, x: f64, t: f64, params: &PhysicsParams) -> f64 {
        -params.hbar * self.v_at(x, t)
    }

    #[inline]
    pub fn a_at(&self, x: f64, t: f64) -> f64 {
        self.a_gauge.as_ref().map_or(0.0, |f| f(x, t))
    }

    pub fn has_vector_potential(&self) -> bool {
        self.a_gauge.is_some()
    }
}

/// Momentum samples `p_k` on the same slices as a [`Path`].
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumPath {
    dt: f64,
    p: Vec<f64>,
}

impl MomentumPath {
    pub fn new(dt: f64, p: Vec<f64>) -> Result<Self> {
        check_dt(dt)?;
        if let Some(k) = p.iter().position(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!("non-finite momentum at index {k}")));
        }
        Ok(Self { dt, p })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.p
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        check_same_dt(self.dt, other.dt)?;
        let mut p = self.p.clone();
        p.extend_from_slice(&other.p);
        Ok(Self { dt: self.dt, p })
    }
}

fn require_1d(p: &Path) -> Result<()> {
    if p.dim() != 1 {
        return Err(Error::Dimension { expected: 1, actual: p.dim() });
    }
    Ok(())
}

fn check_len(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { left, right });
    }
    Ok(())
}

/// `exp[(i/ħ) dt Σ_k (p_k u_k − p_k²/2m)]`
pub fn action_phase(pp: &MomentumPath, xp: &Path, params: &PhysicsParams) -> Result<Complex64> {
    require_1d(xp)?;
    check_same_dt(pp.dt, xp.dt())?;
    check_len(pp.len(), xp.len())?;
    let s: CompensatedSum = pp
        .p
        .iter()
        .zip(xp.raw())
        .map(|(&p, &u)| p * u - p * p / (2.0 * params.m))
        .collect();
    Ok(Complex64::from_polar(1.0, xp.dt() * s.value() / params.hbar))
}

/// `α = exp[i Σ_k (V(x̄_k, t_k) dt + A(x̄_k, t_k)(x_{k+1} − x_k))]` along the
/// representative of `xp` starting at `(x0, t0)`; `x̄_k` are slice midpoints.
pub fn gauge_weight(xp: &Path, x0: f64, t0: f64, g: &GaugeModel) -> Result<Complex64> {
    let xs = xp.positions_1d(x0)?;
    let dt = xp.dt();
    let mut s = CompensatedSum::new();
    for (k, w) in xs.windows(2).enumerate() {
        let t = t0 + k as f64 * dt;
        let mid = 0.5 * (w[0] + w[1]);
        s.add(g.v_at(mid, t) * dt);
        s.add(g.a_at(mid, t) * (w[1] - w[0]));
    }
    let phase = s.value();
    if !phase.is_finite() {
        return Err(Error::Invalid("gauge weight phase is not finite".into()));
    }
    Ok(Complex64::from_polar(1.0, phase))
}

/// A trajectory in one of the two representations.
#[derive(Debug, Clone, Copy)]
pub enum Trajectory<'a> {
    /// Position path; observables are evaluated at slice midpoints of the
    /// representative through the supplied start point.
    Position(&'a Path),
    /// Momentum path; observables are evaluated at the samples, the start point is unused.
    Momentum(&'a MomentumPath),
}

impl Trajectory<'_> {
    fn dt(&self) -> f64 {
        match self {
            Trajectory::Position(p) => p.dt(),
            Trajectory::Momentum(p) => p.dt(),
        }
    }

    fn basis(&self) -> Basis {
        match self {
            Trajectory::Position(_) => Basis::Position,
            Trajectory::Momentum(_) => Basis::Momentum,
        }
    }

    fn points(&self, start: f64) -> Result<Vec<f64>> {
        match self {
            Trajectory::Position(p) => {
                let xs = p.positions_1d(start)?;
                Ok(xs.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect())
            }
            Trajectory::Momentum(p) => Ok(p.p.clone()),
        }
    }
}

/// `exp[Σ_k dt (−κ(A_k − a_k)² − (i/ħ)(η a_k B_k + C_k))]`, modulus ≤ 1.
pub fn decoherence_weight(
    traj: Trajectory<'_>,
    start: f64,
    c: &Corridor,
    model: &MeasurementModel,
    params: &PhysicsParams,
) -> Result<Complex64> {
    check_same_dt(traj.dt(), c.dt())?;
    let basis = traj.basis();
    if let Some(o) = model.observables().find(|o| o.basis != basis) {
        return Err(Error::Unsupported(format!(
            "observable '{}' is in {:?} basis but the trajectory is in {:?} basis",
            o.label(),
            o.basis,
            basis
        )));
    }
    let pts = traj.points(start)?;
    check_len(pts.len(), c.len())?;
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for (&q, &a) in pts.iter().zip(c.samples()) {
        let r = model.a.eval(q) - a;
        re.add(-model.kappa * r * r);
        let mut diss = 0.0;
        if let Some(b) = &model.b {
            diss += model.eta * a * b.eval(q);
        }
        if let Some(cc) = &model.c {
            diss += cc.eval(q);
        }
        im.add(-diss / params.hbar);
    }
    let dt = c.dt();
    let w = Complex64::new(dt * re.value(), dt * im.value()).exp();
    if !w.is_finite() {
        return Err(Error::Invalid("decoherence weight is not finite".into()));
    }
    Ok(w)
}

/// `(m / 2πiħτ)^{1/2} exp[i m dx² / 2ħτ]`, principal branch.
pub fn free_kernel(dx: f64, dtau: f64, params: &PhysicsParams) -> Result<Complex64> {
    if !(dtau > 0.0 && dtau.is_finite()) {
        return Err(Error::Domain(format!("propagation time must be positive, got {dtau}")));
    }
    let modulus = (params.m / (2.0 * PI * params.hbar * dtau)).sqrt();
    let phase = params.m * dx * dx / (2.0 * params.hbar * dtau) - PI / 4.0;
    Ok(Complex64::from_polar(modulus, phase))
}

/// Galilei-covariance phase `exp[i (m/ħ)(v dx + ½ v² τ)]` relating
/// `free_kernel(dx + vτ, τ)` to `free_kernel(dx, τ)`.
pub fn covariance_phase(dx: f64, v: f64, dtau: f64, params: &PhysicsParams) -> Complex64 {
    Complex64::from_polar(1.0, params.phase_scale() * (v * dx + 0.5 * v * v * dtau))
}

/// Normalization turning `∫dv exp{i(m/ħ)(v dx − ½v²τ)}` into [`free_kernel`].
pub fn boost_integral_normalization(params: &PhysicsParams) -> f64 {
    params.m / (2.0 * PI * params.hbar)
}

/// `(m/2πħ) ∫dv exp{−εv² + i(m/ħ)(v dx − ½ v² τ)}` by composite Gauss–Legendre
/// quadrature on the real line. Panels are sized so that the phase advances by
/// at most π across each; the range is cut where `e^{−εv²} < e^{−40}`.
pub fn free_kernel_via_boost_integral(
    dx: f64,
    dtau: f64,
    eps: f64,
    params: &PhysicsParams,
) -> Result<Complex64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("regulator must be positive, got {eps}")));
    }
    if !(dtau > 0.0 && dtau.is_finite()) {
        return Err(Error::Domain(format!("propagation time must be positive, got {dtau}")));
    }
    let k = params.phase_scale();
    let freq = |v: f64| (k * (dx - v * dtau)).abs();
    let cutoff = (40.0 / eps).sqrt();
    let max_width = 0.25 / eps.sqrt();
    let (nodes, weights) = gauss_legendre(16);

    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    let mut lo = -cutoff;
    while lo < cutoff {
        let w0 = (PI / freq(lo).max(1e-300)).min(max_width);
        let w = (PI / freq(lo).max(freq(lo + w0)).max(1e-300)).min(max_width).min(cutoff - lo);
        let (half, mid) = (0.5 * w, lo + 0.5 * w);
        for (t, wt) in nodes.iter().zip(&weights) {
            let v = mid + half * t;
            let z = Complex64::new(-eps * v * v, k * (v * dx - 0.5 * v * v * dtau)).exp();
            re.add(half * wt * z.re);
            im.add(half * wt * z.im);
        }
        lo += w;
    }
    Ok(Complex64::new(re.value(), im.value()) * boost_integral_normalization(params))
}

/// One slice of the restricted propagator from `x0` to `x1` over `[t, t + dtau]`:
///
/// `K_free(x1−x0, dτ) · exp[iV(x̄,t)dτ + iA(x̄,t)(x1−x0)]
///  · exp[−κ(A(x̄)−a_t)²dτ − (i/ħ)(η a_t B(x̄) + C(x̄))dτ]`, `x̄ = (x0+x1)/2`.
#[allow(clippy::too_many_arguments)]
pub fn short_time_kernel(
    x1: f64,
    x0: f64,
    t: f64,
    a_t: f64,
    g: &GaugeModel,
    model: &MeasurementModel,
    params: &PhysicsParams,
    dtau: f64,
) -> Result<Complex64> {
    if let Some(o) = model.observables().find(|o| o.basis == Basis::Momentum) {
        return Err(Error::Unsupported(format!(
            "momentum-basis observable '{}' in a position-space kernel",
            o.label()
        )));
    }
    let free = free_kernel(x1 - x0, dtau, params)?;
    let mid = 0.5 * (x0 + x1);
    let gauge_phase = g.v_at(mid, t) * dtau + g.a_at(mid, t) * (x1 - x0);
    let r = model.a.eval(mid) - a_t;
    let mut diss = 0.0;
    if let Some(b) = &model.b {
        diss += model.eta * a_t * b.eval(mid);
    }
    if let Some(c) = &model.c {
        diss += c.eval(mid);
    }
    let exponent = Complex64::new(-model.kappa * r * r * dtau, gauge_phase - diss * dtau / params.hbar);
    Ok(free * exponent.exp())
}

/// Named built-in functions accepted in scenario configs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builtin {
    /// `x`
    X,
    /// `x²`
    XSquared,
    /// `p` (momentum basis)
    P,
    /// `½ m ω² x²`
    Harmonic(f64),
    /// constant `c`
    Const(f64),
    /// `c x`
    Linear(f64),
}

impl Builtin {
    pub fn parse(name: &str) -> Result<Self> {
        let s: String = name.chars().filter(|c| !c.is_whitespace()).collect();
        let arg = |prefix: &str| -> Option<Result<f64>> {
            s.strip_prefix(prefix).and_then(|rest| rest.strip_prefix('(')).and_then(|rest| rest.strip_suffix(')')).map(
                |inner| {
                    inner
                        .parse::<f64>()
                        .map_err(|e| Error::Invalid(format!("bad argument in '{name}': {e}")))
                },
            )
        };
        match s.as_str() {
            "x" => return Ok(Self::X),
            "x^2" => return Ok(Self::XSquared),
            "p" => return Ok(Self::P),
            _ => {}
        }
        if let Some(w) = arg("harmonic") {
            return w.map(Self::Harmonic);
        }
        if let Some(c) = arg("const") {
            return c.map(Self::Const);
        }
        if let Some(c) = arg("linear") {
            return c.map(Self::Linear);
        }
        Err(Error::Invalid(format!(
            "unknown function '{name}' (expected x, x^2, p, harmonic(w), const(c), linear(c))"
        )))
    }

    pub fn basis(&self) -> Basis {
        match self {
            Self::P => Basis::Momentum,
            _ => Basis::Position,
        }
    }

    pub fn function(&self, coefficient: f64, mass: f64) -> ScalarFn {
        match *self {
            Self::X | Self::P => Arc::new(move |x| coefficient * x),
            Self::XSquared => Arc::new(move |x| coefficient * x * x),
            Self::Harmonic(w) => Arc::new(move |x| coefficient * 0.5 * mass * w * w * x * x),
            Self::Const(c) => Arc::new(move |_| coefficient * c),
            Self::Linear(c) => Arc::new(move |x| coefficient * c * x),
        }
    }

    pub fn observable(&self, coefficient: f64, mass: f64, label: &str) -> ObservableSpec {
        ObservableSpec { basis: self.basis(), f: self.function(coefficient, mass), label: label.to_string() }
    }

    /// Time-independent field `f(x, t) = f(x)`; only position-basis builtins qualify.
    pub fn field(&self, coefficient: f64, mass: f64) -> Result<FieldFn> {
        if self.basis() != Basis::Position {
            return Err(Error::Unsupported("momentum-basis function used as a field".into()));
        }
        let f = self.function(coefficient, mass);
        Ok(Arc::new(move |x, _t| f(x)))
    }
}
