//! Discretized semigroup of parametrized paths.
//!
//! A [`Path`] is a shift-equivalence class of trajectories: only the velocity
//! samples are stored, one per slice of width `dt`, so two curves differing by
//! a constant vector are the same value. Concatenation is prolongation of one
//! path by another. [`VelocityRecord`]s are the generalized boosts `[v]`, and
//! [`Corridor`]s are scalar measurement records `[a]`.
//!
//! Integrals over a path are left-endpoint Riemann sums over the slices, so
//! every sum splits exactly at a slice boundary.

use std::io::Read;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{PhysicsParams, Rotation};
use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;

/// Relative tolerance under which two slice widths count as the same grid.
const DT_REL_TOL: f64 = 1e-12;

pub(crate) fn check_same_dt(left: f64, right: f64) -> Result<()> {
    if (left - right).abs() <= DT_REL_TOL * left.abs().max(right.abs()) {
        Ok(())
    } else {
        Err(Error::GridMismatch { left, right })
    }
}

pub(crate) fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("slice width must be positive and finite, got {dt}")))
    }
}

fn check_finite(samples: &[f64]) -> Result<()> {
    match samples.iter().position(|x| !x.is_finite()) {
        None => Ok(()),
        Some(k) => Err(Error::Invalid(format!("non-finite sample at index {k}"))),
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 3 {
        Ok(())
    } else {
        Err(Error::Dimension { expected: 3, actual: dim })
    }
}

/// Velocity samples `u_k` of a path class `[u]_τ`, `τ = N dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    dt: f64,
    dim: usize,
    u: Vec<f64>,
}

/// A generalized proper Galilei transformation `[v]` sampled on the slices it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityRecord {
    dt: f64,
    dim: usize,
    v: Vec<f64>,
}

/// Scalar measurement record `[a]`, one readout per slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Corridor {
    dt: f64,
    a: Vec<f64>,
}

macro_rules! vector_samples {
    ($ty:ident, $field:ident) => {
        impl $ty {
            /// `samples` is flattened row-major: sample `k` occupies `[k*dim, (k+1)*dim)`.
            pub fn new(dt: f64, dim: usize, samples: Vec<f64>) -> Result<Self> {
                check_dt(dt)?;
                check_dim(dim)?;
                if samples.len() % dim != 0 {
                    return Err(Error::Invalid(format!(
                        "{} values do not split into {dim}-vectors",
                        samples.len()
                    )));
                }
                check_finite(&samples)?;
                Ok(Self { dt, dim, $field: samples })
            }

            pub fn from_scalars(dt: f64, samples: Vec<f64>) -> Result<Self> {
                Self::new(dt, 1, samples)
            }

            pub fn from_vectors(dt: f64, samples: &[[f64; 3]]) -> Result<Self> {
                Self::new(dt, 3, samples.iter().flatten().copied().collect())
            }

            pub fn empty(dt: f64, dim: usize) -> Result<Self> {
                Self::new(dt, dim, Vec::new())
            }

            pub fn dt(&self) -> f64 {
                self.dt
            }

            pub fn dim(&self) -> usize {
                self.dim
            }

            pub fn len(&self) -> usize {
                self.$field.len() / self.dim
            }

            pub fn is_empty(&self) -> bool {
                self.$field.is_empty()
            }

            /// `N dt`
            pub fn duration(&self) -> f64 {
                self.len() as f64 * self.dt
            }

            pub fn sample(&self, k: usize) -> &[f64] {
                &self.$field[k * self.dim..(k + 1) * self.dim]
            }

            pub fn samples(&self) -> impl Iterator<Item = &[f64]> + '_ {
                self.$field.chunks_exact(self.dim)
            }

            pub fn raw(&self) -> &[f64] {
                &self.$field
            }

            fn check_matched<T: HasGrid>(&self, other: &T) -> Result<()> {
                check_same_dt(self.dt, other.grid_dt())?;
                if self.dim != other.grid_dim() {
                    return Err(Error::Dimension { expected: self.dim, actual: other.grid_dim() });
                }
                if self.len() != other.grid_len() {
                    return Err(Error::LengthMismatch { left: self.len(), right: other.grid_len() });
                }
                Ok(())
            }
        }

        impl HasGrid for $ty {
            fn grid_dt(&self) -> f64 {
                self.dt
            }
            fn grid_dim(&self) -> usize {
                self.dim
            }
            fn grid_len(&self) -> usize {
                self.len()
            }
        }
    };
}

pub(crate) trait HasGrid {
    fn grid_dt(&self) -> f64;
    fn grid_dim(&self) -> usize;
    fn grid_len(&self) -> usize;
}

vector_samples!(Path, u);
vector_samples!(VelocityRecord, v);

impl Path {
    /// Absolute positions `x_0 .. x_N` of the 1-D representative starting at `x0`,
    /// accumulated slice by slice.
    pub fn positions_1d(&self, x0: f64) -> Result<Vec<f64>> {
        if self.dim != 1 {
            return Err(Error::Dimension { expected: 1, actual: self.dim });
        }
        let mut xs = Vec::with_capacity(self.u.len() + 1);
        let mut x = x0;
        xs.push(x);
        for &u in &self.u {
            x += self.dt * u;
            xs.push(x);
        }
        Ok(xs)
    }

    /// Endpoint of the 1-D representative through `x0`; same accumulation as
    /// [`Path::positions_1d`], so it is the right start for a continuation.
    pub fn endpoint_1d(&self, x0: f64) -> Result<f64> {
        Ok(*self.positions_1d(x0)?.last().expect("at least the start point"))
    }
}

impl VelocityRecord {
    pub fn zeros(dt: f64, dim: usize, len: usize) -> Result<Self> {
        Self::new(dt, dim, vec![0.0; len * dim])
    }

    /// `[v][v'] = [v + v']`
    pub fn combine(&self, other: &Self) -> Result<Self> {
        self.check_matched(other)?;
        let v = self.v.iter().zip(&other.v).map(|(a, b)| a + b).collect();
        Ok(Self { dt: self.dt, dim: self.dim, v })
    }

    /// `[v]⁻¹ = [-v]`
    pub fn inverse(&self) -> Self {
        Self { dt: self.dt, dim: self.dim, v: self.v.iter().map(|x| -x).collect() }
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        check_same_dt(self.dt, other.dt)?;
        if self.dim != other.dim {
            return Err(Error::Dimension { expected: self.dim, actual: other.dim });
        }
        let mut v = self.v.clone();
        v.extend_from_slice(&other.v);
        Ok(Self { dt: self.dt, dim: self.dim, v })
    }
}

/// Prolongation of `p` by `q`.
pub fn concat(p: &Path, q: &Path) -> Result<Path> {
    check_same_dt(p.dt, q.dt)?;
    if p.dim != q.dim {
        return Err(Error::Dimension { expected: p.dim, actual: q.dim });
    }
    let mut u = Vec::with_capacity(p.u.len() + q.u.len());
    u.extend_from_slice(&p.u);
    u.extend_from_slice(&q.u);
    Ok(Path { dt: p.dt, dim: p.dim, u })
}

/// `[a]^t_{t''} = [a]^t_{t'} · [a]^{t'}_{t''}`: `c1` happens first.
pub fn concat_corridor(c1: &Corridor, c2: &Corridor) -> Result<Corridor> {
    check_same_dt(c1.dt, c2.dt)?;
    let mut a = Vec::with_capacity(c1.a.len() + c2.a.len());
    a.extend_from_slice(&c1.a);
    a.extend_from_slice(&c2.a);
    Ok(Corridor { dt: c1.dt, a })
}

/// `[v][u]_τ[v]⁻¹ = [u + v]_τ`
pub fn boost(p: &Path, w: &VelocityRecord) -> Result<Path> {
    p.check_matched(w)?;
    let u = p.u.iter().zip(&w.v).map(|(a, b)| a + b).collect();
    Ok(Path { dt: p.dt, dim: p.dim, u })
}

/// `Δx = dt Σ_k u_k`
pub fn displacement(p: &Path) -> Vec<f64> {
    (0..p.dim)
        .map(|c| p.dt * p.samples().map(|s| s[c]).collect::<CompensatedSum>().value())
        .collect()
}

/// Central-extension phase `exp[i (m/ħ) dt Σ_k (u_k·v_k + ½|v_k|²)]`.
pub fn extension_multiplicator(
    p: &Path,
    w: &VelocityRecord,
    params: &PhysicsParams,
) -> Result<Complex64> {
    p.check_matched(w)?;
    let mut acc = CompensatedSum::new();
    for (u, v) in p.samples().zip(w.samples()) {
        for c in 0..p.dim {
            acc.add(u[c] * v[c] + 0.5 * v[c] * v[c]);
        }
    }
    Ok(Complex64::from_polar(1.0, params.phase_scale() * p.dt * acc.value()))
}

/// `r[u]_τ r⁻¹ = [r u]_τ`
pub fn rotate(p: &Path, r: &Rotation) -> Result<Path> {
    if p.dim != 3 {
        return Err(Error::Dimension { expected: 3, actual: p.dim });
    }
    let mut u = Vec::with_capacity(p.u.len());
    for s in p.samples() {
        u.extend_from_slice(&r.apply(&[s[0], s[1], s[2]]));
    }
    Ok(Path { dt: p.dt, dim: 3, u })
}

/// Element `λ [u]_τ` of the centrally extended path semigroup.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedPath {
    pub phase: Complex64,
    pub path: Path,
}

/// Conjugation `[v][u]_τ[v]⁻¹ = λ [u + v]_τ` in the central extension.
pub fn conjugate_by_boost(
    p: &Path,
    w: &VelocityRecord,
    params: &PhysicsParams,
) -> Result<ExtendedPath> {
    Ok(ExtendedPath { phase: extension_multiplicator(p, w, params)?, path: boost(p, w)? })
}

impl Corridor {
    pub fn new(dt: f64, a: Vec<f64>) -> Result<Self> {
        check_dt(dt)?;
        check_finite(&a)?;
        Ok(Self { dt, a })
    }

    pub fn zeros(dt: f64, len: usize) -> Result<Self> {
        Self::new(dt, vec![0.0; len])
    }

    pub fn empty(dt: f64) -> Result<Self> {
        Self::new(dt, Vec::new())
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.a.len() as f64 * self.dt
    }

    pub fn samples(&self) -> &[f64] {
        &self.a
    }

    /// Splits into `[0, k)` and `[k, N)`.
    pub fn split_at(&self, k: usize) -> (Self, Self) {
        let (l, r) = self.a.split_at(k);
        (Self { dt: self.dt, a: l.to_vec() }, Self { dt: self.dt, a: r.to_vec() })
    }

    /// One readout per CSV row (first column); no header.
    pub fn from_csv<R: Read>(dt: f64, reader: R) -> Result<Self> {
        let rows = read_csv_rows(reader)?;
        let mut a = Vec::with_capacity(rows.len());
        for (i, row) in rows.into_iter().enumerate() {
            let first = row.first().copied().ok_or_else(|| {
                Error::Invalid(format!("corridor CSV row {} is empty", i + 1))
            })?;
            a.push(first);
        }
        Self::new(dt, a)
    }
}

impl Path {
    /// One velocity sample per CSV row, `dim` columns; no header.
    pub fn from_csv<R: Read>(dt: f64, dim: usize, reader: R) -> Result<Self> {
        let rows = read_csv_rows(reader)?;
        let mut u = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Invalid(format!(
                    "path CSV row {} has {} columns, expected {dim}",
                    i + 1,
                    row.len()
                )));
            }
            u.extend(row);
        }
        Self::new(dt, dim, u)
    }
}

fn read_csv_rows<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Invalid(format!("CSV row {}: {e}", i + 1)))?;
        let row = rec
            .iter()
            .filter(|f| !f.is_empty())
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| Error::Invalid(format!("CSV row {}: '{f}': {e}", i + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if !row.is_empty() {
            rows.push(row);
        }
    }
    Ok(rows)
}

// JSON forms: {"dt": .., "u": [[..], ..]}, {"dt": .., "v": [[..], ..]}, {"dt": .., "a": [..]}.

#[derive(Serialize, Deserialize)]
struct PathRepr {
    dt: f64,
    u: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RecordRepr {
    dt: f64,
    v: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct CorridorRepr {
    dt: f64,
    a: Vec<f64>,
}

fn rows_to_flat(rows: Vec<Vec<f64>>) -> Result<(usize, Vec<f64>)> {
    let dim = rows.first().map_or(1, Vec::len);
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Invalid("ragged sample rows".into()));
    }
    Ok((dim, rows.into_iter().flatten().collect()))
}

impl Serialize for Path {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PathRepr { dt: self.dt, u: self.samples().map(<[f64]>::to_vec).collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Path {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = PathRepr::deserialize(d)?;
        let (dim, u) = rows_to_flat(repr.u).map_err(serde::de::Error::custom)?;
        Path::new(repr.dt, dim, u).map_err(serde::de::Error::custom)
    }
}

impl Serialize for VelocityRecord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RecordRepr { dt: self.dt, v: self.samples().map(<[f64]>::to_vec).collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for VelocityRecord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = RecordRepr::deserialize(d)?;
        let (dim, v) = rows_to_flat(repr.v).map_err(serde::de::Error::custom)?;
        VelocityRecord::new(repr.dt, dim, v).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Corridor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CorridorRepr { dt: self.dt, a: self.a.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Corridor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = CorridorRepr::deserialize(d)?;
        Corridor::new(repr.dt, repr.a).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path1(dt: f64, u: &[f64]) -> Path {
        Path::from_scalars(dt, u.to_vec()).unwrap()
    }

    #[test]
    fn concat_with_empty_is_identity() {
        let p = path1(0.1, &[1.0, -2.0, 0.5]);
        let e = Path::empty(0.1, 1).unwrap();
        assert_eq!(concat(&p, &e).unwrap(), p);
        assert_eq!(concat(&e, &p).unwrap(), p);
    }

    #[test]
    fn concat_adds_durations() {
        let p = path1(0.5, &[0.0, 1.0]);
        let q = path1(0.5, &[2.0, 3.0, 4.0, 5.0]);
        let pq = concat(&p, &q).unwrap();
        assert_eq!(pq.duration(), 3.0);
        assert_eq!(pq.raw(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn concat_rejects_different_grids() {
        let p = path1(0.1, &[1.0]);
        let q = path1(0.2, &[1.0]);
        assert!(matches!(concat(&p, &q), Err(Error::GridMismatch { .. })));
        let c1 = Corridor::zeros(0.1, 2).unwrap();
        let c2 = Corridor::zeros(0.3, 2).unwrap();
        assert!(matches!(concat_corridor(&c1, &c2), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn corridor_concat_lengths() {
        let c1 = Corridor::new(0.1, vec![1.0, 2.0, 3.0]).unwrap();
        let c2 = Corridor::new(0.1, vec![4.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
        assert_eq!(concat_corridor(&c1, &c2).unwrap().len(), 8);
        let e = Corridor::empty(0.1).unwrap();
        assert_eq!(concat_corridor(&c1, &e).unwrap(), c1);
    }

    #[test]
    fn displacement_of_constant_and_empty_paths() {
        let p = path1(0.25, &[1.0; 8]);
        assert_eq!(displacement(&p), vec![2.0]);
        assert_eq!(displacement(&Path::empty(0.1, 3).unwrap()), vec![0.0; 3]);
    }

    #[test]
    fn zero_boost_is_identity() {
        let p = Path::from_vectors(0.1, &[[1.0, 2.0, 3.0], [-1.0, 0.0, 0.5]]).unwrap();
        let w = VelocityRecord::zeros(0.1, 3, 2).unwrap();
        assert_eq!(boost(&p, &w).unwrap(), p);
        assert_eq!(extension_multiplicator(&p, &w, &PhysicsParams::natural()).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn boost_requires_matching_lengths() {
        let p = path1(0.1, &[1.0, 2.0]);
        let w = VelocityRecord::from_scalars(0.1, vec![1.0]).unwrap();
        assert!(matches!(boost(&p, &w), Err(Error::LengthMismatch { .. })));
        let w = VelocityRecord::from_scalars(0.2, vec![1.0, 1.0]).unwrap();
        assert!(matches!(boost(&p, &w), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn constant_multiplicator_closed_form() {
        // u = v = 1 over τ = 1: ∫(uv + v²/2) = 1.5
        let p = path1(0.125, &[1.0; 8]);
        let w = VelocityRecord::from_scalars(0.125, vec![1.0; 8]).unwrap();
        let l = extension_multiplicator(&p, &w, &PhysicsParams::natural()).unwrap();
        assert!((l - Complex64::from_polar(1.0, 1.5)).norm() < 1e-15);
    }

    #[test]
    fn rotate_needs_three_dimensions() {
        let p = path1(0.1, &[1.0]);
        let r = Rotation::from_axis_angle([0.0, 0.0, 1.0], 1.0);
        assert!(matches!(rotate(&p, &r), Err(Error::Dimension { .. })));
        let q = Path::from_vectors(0.1, &[[1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(rotate(&q, &Rotation::IDENTITY).unwrap(), q);
    }

    #[test]
    fn csv_import() {
        let c = Corridor::from_csv(0.5, "1.0\n2.5\n\n-3\n".as_bytes()).unwrap();
        assert_eq!(c.samples(), &[1.0, 2.5, -3.0]);
        let p = Path::from_csv(0.5, 3, "1,2,3\n4,5,6\n".as_bytes()).unwrap();
        assert_eq!(p.len(), 2);
        assert!(Path::from_csv(0.5, 3, "1,2\n".as_bytes()).is_err());
        assert!(Corridor::from_csv(0.5, "abc\n".as_bytes()).is_err());
    }

    #[test]
    fn json_forms() {
        let c: Corridor = serde_json::from_str(r#"{"dt":0.5,"a":[1,2]}"#).unwrap();
        assert_eq!(c.len(), 2);
        let p: Path = serde_json::from_str(r#"{"dt":0.5,"u":[[1,2,3],[4,5,6]]}"#).unwrap();
        assert_eq!(p.dim(), 3);
        let back: Path = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<Path>(r#"{"dt":-1,"u":[[1]]}"#).is_err());
    }
}
