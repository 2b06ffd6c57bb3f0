//! Value-level Galilei group.
//!
//! Every element is kept in the canonical form `a_T r v_G`: a boost, followed
//! by a rotation, followed by a spacetime translation. Composition, inversion
//! and the action on spacetime points all work on that triple directly, and
//! [`multiplicator`] gives the projective phase attached to a product.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Absolute per-component tolerance for element comparisons.
pub const ELEMENT_TOL: f64 = 1e-10;

/// Orthogonality drift above which a rotation is re-orthonormalized.
pub const ORTHO_TOL: f64 = 1e-12;

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Mass and Planck constant. Both strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    pub m: f64,
    pub hbar: f64,
}

impl PhysicsParams {
    pub fn new(m: f64, hbar: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Domain(format!("mass must be positive, got {m}")));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::Domain(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { m, hbar })
    }

    /// m = hbar = 1.
    pub fn natural() -> Self {
        Self { m: 1.0, hbar: 1.0 }
    }

    /// m / hbar, the coefficient of every projective phase.
    #[inline]
    pub fn phase_scale(&self) -> f64 {
        self.m / self.hbar
    }
}

impl Default for PhysicsParams {
    fn default() -> Self {
        Self::natural()
    }
}

/// A spacetime point `{t, x}`. Used both for events and for translations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpacetimePoint {
    pub t: f64,
    pub x: Vec3,
}

impl SpacetimePoint {
    pub const ORIGIN: Self = Self { t: 0.0, x: [0.0; 3] };

    pub fn new(t: f64, x: Vec3) -> Self {
        Self { t, x }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.iter().all(|c| c.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut d = (self.t - other.t).abs();
        for k in 0..3 {
            d = d.max((self.x[k] - other.x[k]).abs());
        }
        d
    }

    /// `Λ_v {t, x} = {t, x + t v}`.
    #[inline]
    pub fn boosted(&self, v: &Vec3) -> Self {
        Self { t: self.t, x: add(&self.x, &scale(v, self.t)) }
    }
}

/// Proper rotation stored as an explicit orthogonal matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    mat: [[f64; 3]; 3],
}

impl Default for Rotation {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Rotation {
    pub const IDENTITY: Self = Self { mat: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] };

    /// Validates orthogonality and unit determinant to [`ORTHO_TOL`].
    pub fn from_matrix(mat: [[f64; 3]; 3]) -> Result<Self> {
        if !mat.iter().flatten().all(|c| c.is_finite()) {
            return Err(Error::Invalid("rotation matrix has non-finite entries".into()));
        }
        let r = Self { mat };
        let drift = r.orthogonality_drift();
        if drift > ORTHO_TOL {
            return Err(Error::Invalid(format!("rotation matrix not orthogonal (drift {drift:e})")));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > ORTHO_TOL {
            return Err(Error::Invalid(format!("rotation determinant {det} is not +1")));
        }
        Ok(r)
    }

    /// Rodrigues formula; `axis` need not be normalized. A zero axis gives the identity.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let n = dot(&axis, &axis).sqrt();
        if n == 0.0 {
            return Self::IDENTITY;
        }
        let [x, y, z] = scale(&axis, 1.0 / n);
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        let mat = [
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ];
        Self { mat }.reorthonormalized()
    }

    /// Uniformly distributed rotation (unit quaternion from four normals).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let q: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>() * 2.0 - 1.0);
            let n2: f64 = q.iter().map(|c| c * c).sum();
            if n2 > 1e-6 && n2 <= 1.0 {
                let n = n2.sqrt();
                let [w, x, y, z] = q.map(|c| c / n);
                let mat = [
                    [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
                    [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
                    [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
                ];
                return Self { mat }.reorthonormalized();
            }
        }
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.mat
    }

    #[inline]
    pub fn apply(&self, v: &Vec3) -> Vec3 {
        let m = &self.mat;
        [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
    }

    /// `r⁻¹ v = rᵀ v`.
    #[inline]
    pub fn apply_inverse(&self, v: &Vec3) -> Vec3 {
        let m = &self.mat;
        [
            m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
            m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
            m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn transpose(&self) -> Self {
        let m = &self.mat;
        Self { mat: std::array::from_fn(|i| std::array::from_fn(|j| m[j][i])) }
    }

    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    /// Matrix product, re-orthonormalized when drift exceeds [`ORTHO_TOL`].
    pub fn compose(&self, other: &Self) -> Self {
        let (a, b) = (&self.mat, &other.mat);
        let mat = std::array::from_fn(|i| {
            std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j])
        });
        let r = Self { mat };
        if r.orthogonality_drift() > ORTHO_TOL {
            r.reorthonormalized()
        } else {
            r
        }
    }

    /// max |(RᵀR − I)_ij|
    pub fn orthogonality_drift(&self) -> f64 {
        let m = &self.mat;
        let mut drift = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let g = m[0][i] * m[0][j] + m[1][i] * m[1][j] + m[2][i] * m[2][j];
                let target = if i == j { 1.0 } else { 0.0 };
                drift = drift.max((g - target).abs());
            }
        }
        drift
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.mat;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Modified Gram–Schmidt on the columns.
    pub fn reorthonormalized(&self) -> Self {
        let m = &self.mat;
        let mut cols: [Vec3; 3] = std::array::from_fn(|j| [m[0][j], m[1][j], m[2][j]]);
        for j in 0..3 {
            for k in 0..j {
                let proj = dot(&cols[j], &cols[k]);
                cols[j] = add(&cols[j], &scale(&cols[k], -proj));
            }
            let n = dot(&cols[j], &cols[j]).sqrt();
            cols[j] = scale(&cols[j], 1.0 / n);
        }
        Self { mat: std::array::from_fn(|i| std::array::from_fn(|j| cols[j][i])) }
    }

    fn max_abs_diff(&self, other: &Self) -> f64 {
        self.mat
            .iter()
            .flatten()
            .zip(other.mat.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Galilei group element `g = a_T r v_G`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GalileiElement {
    pub a: SpacetimePoint,
    pub r: Rotation,
    pub v: Vec3,
}

impl GalileiElement {
    pub const IDENTITY: Self =
        Self { a: SpacetimePoint::ORIGIN, r: Rotation::IDENTITY, v: [0.0; 3] };

    pub fn new(a: SpacetimePoint, r: Rotation, v: Vec3) -> Self {
        Self { a, r, v }
    }

    pub fn translation(a: SpacetimePoint) -> Self {
        Self { a, ..Self::IDENTITY }
    }

    pub fn rotation(r: Rotation) -> Self {
        Self { r, ..Self::IDENTITY }
    }

    pub fn boost(v: Vec3) -> Self {
        Self { v, ..Self::IDENTITY }
    }

    /// Random element with translation and boost components uniform in `[-scale, scale]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, scale: f64, with_rotation: bool) -> Self {
        let mut u = || (rng.random::<f64>() * 2.0 - 1.0) * scale;
        let a = SpacetimePoint::new(u(), [u(), u(), u()]);
        let v = [u(), u(), u()];
        let r = if with_rotation { Rotation::random(rng) } else { Rotation::IDENTITY };
        Self { a, r, v }
    }

    /// Largest absolute componentwise difference over all three parts.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut d = self.a.max_abs_diff(&other.a);
        d = d.max(self.r.max_abs_diff(&other.r));
        for k in 0..3 {
            d = d.max((self.v[k] - other.v[k]).abs());
        }
        d
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.approx_eq(&Self::IDENTITY, tol)
    }
}

/// Boost, then rotate, then translate.
pub fn act(g: &GalileiElement, x: &SpacetimePoint) -> SpacetimePoint {
    let boosted = x.boosted(&g.v);
    let rotated = g.r.apply(&boosted.x);
    SpacetimePoint { t: boosted.t + g.a.t, x: add(&rotated, &g.a.x) }
}

/// Canonical form of `g h`.
///
/// translation `a_g + r_g(Λ_{v_g} a_h)`, rotation `r_g r_h`, boost `r_h⁻¹ v_g + v_h`.
pub fn compose(g: &GalileiElement, h: &GalileiElement) -> GalileiElement {
    let moved = h.a.boosted(&g.v);
    let a = SpacetimePoint { t: g.a.t + moved.t, x: add(&g.a.x, &g.r.apply(&moved.x)) };
    let r = g.r.compose(&h.r);
    let v = add(&h.r.apply_inverse(&g.v), &h.v);
    GalileiElement { a, r, v }
}

pub fn inverse(g: &GalileiElement) -> GalileiElement {
    let r = g.r.inverse();
    let v = scale(&g.r.apply(&g.v), -1.0);
    let a0 = -g.a.t;
    // Solve a_g + r_g(b + b0 v_g) = 0 for the translation part b.
    let x = add(&scale(&r.apply(&g.a.x), -1.0), &scale(&g.v, -a0));
    GalileiElement { a: SpacetimePoint { t: a0, x }, r, v }
}

/// Projective multiplicator `exp[i (m/ħ)(v_g·a_h + ½|v_g|² a_h⁰)]`.
pub fn multiplicator(g: &GalileiElement, h: &GalileiElement, p: &PhysicsParams) -> Complex64 {
    let phase = p.phase_scale() * (dot(&g.v, &h.a.x) + 0.5 * dot(&g.v, &g.v) * h.a.t);
    Complex64::from_polar(1.0, phase)
}

/// Residual of the 2-cocycle identity
/// `λ(g₁,g₂) λ(g₁g₂,g₃) = λ(g₂,g₃) λ(g₁,g₂g₃)`.
pub fn cocycle_residual(
    g1: &GalileiElement,
    g2: &GalileiElement,
    g3: &GalileiElement,
    p: &PhysicsParams,
) -> f64 {
    let lhs = multiplicator(g1, g2, p) * multiplicator(&compose(g1, g2), g3, p);
    let rhs = multiplicator(g2, g3, p) * multiplicator(g1, &compose(g2, g3), p);
    (lhs - rhs).norm()
}

/// JSON form `{"a":[t,x,y,z], "r":[[..],[..],[..]], "v":[x,y,z]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ElementRepr {
    a: [f64; 4],
    r: [[f64; 3]; 3],
    v: [f64; 3],
}

impl Serialize for GalileiElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ElementRepr {
            a: [self.a.t, self.a.x[0], self.a.x[1], self.a.x[2]],
            r: self.r.mat,
            v: self.v,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GalileiElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ElementRepr::deserialize(d)?;
        let r = Rotation::from_matrix(repr.r).map_err(serde::de::Error::custom)?;
        let [t, x, y, z] = repr.a;
        Ok(Self { a: SpacetimePoint::new(t, [x, y, z]), r, v: repr.v })
    }
}
