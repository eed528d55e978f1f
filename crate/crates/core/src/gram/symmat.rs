use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psdcore::Matrix;
use crate::rational::{self, int, Rational};

/// Dense symmetric matrix of exact rationals. Writes go through
/// [`SymMat::set`], which keeps both triangles equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymMat {
    dim: usize,
    entries: Vec<Rational>,
}

impl SymMat {
    pub fn zeros(dim: usize) -> Self {
        SymMat { dim, entries: vec![Rational::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, int(1));
        }
        m
    }

    /// Builds from a full row-major array, rejecting asymmetric input.
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for r in &rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
            }
            entries.extend(r.iter().cloned());
        }
        let m = SymMat { dim, entries };
        for s in 0..dim {
            for t in 0..s {
                if m.get(s, t) != m.get(t, s) {
                    return Err(Error::Structural(format!("matrix not symmetric at ({s},{t})")));
                }
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, s: usize, t: usize) -> &Rational {
        &self.entries[s * self.dim + t]
    }

    pub fn set(&mut self, s: usize, t: usize, v: Rational) {
        self.entries[t * self.dim + s] = v.clone();
        self.entries[s * self.dim + t] = v;
    }

    pub fn add_to(&mut self, s: usize, t: usize, v: &Rational) {
        let nv = self.get(s, t) + v;
        self.set(s, t, nv);
    }

    pub fn rows(&self) -> Vec<Vec<Rational>> {
        self.entries.chunks(self.dim.max(1)).map(|r| r.to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn add(&self, other: &SymMat) -> SymMat {
        assert_eq!(self.dim, other.dim);
        SymMat {
            dim: self.dim,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &SymMat) -> SymMat {
        assert_eq!(self.dim, other.dim);
        SymMat {
            dim: self.dim,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: &Rational) -> SymMat {
        SymMat { dim: self.dim, entries: self.entries.iter().map(|a| a * s).collect() }
    }

    /// Frobenius inner product `⟨A, B⟩ = Σ A_st B_st`.
    pub fn inner(&self, other: &SymMat) -> Rational {
        assert_eq!(self.dim, other.dim);
        let mut acc = Rational::zero();
        for (a, b) in self.entries.iter().zip(&other.entries) {
            if !a.is_zero() && !b.is_zero() {
                acc += a * b;
            }
        }
        acc
    }

    /// `z^t A z`.
    pub fn quad_form(&self, z: &[Rational]) -> Rational {
        assert_eq!(z.len(), self.dim);
        let mut acc = Rational::zero();
        for s in 0..self.dim {
            if z[s].is_zero() {
                continue;
            }
            let mut row = Rational::zero();
            for t in 0..self.dim {
                let a = self.get(s, t);
                if !a.is_zero() && !z[t].is_zero() {
                    row += a * &z[t];
                }
            }
            acc += row * &z[s];
        }
        acc
    }

    /// `Σ_r c_r z_r z_r^t`.
    pub fn from_points(dim: usize, points: &[(Rational, Vec<Rational>)]) -> SymMat {
        let mut m = SymMat::zeros(dim);
        for (c, z) in points {
            for s in 0..dim {
                if z[s].is_zero() {
                    continue;
                }
                let cs = c * &z[s];
                for t in s..dim {
                    if !z[t].is_zero() {
                        m.add_to(s, t, &(&cs * &z[t]));
                    }
                }
            }
        }
        m
    }

    pub fn to_f64(&self) -> Matrix {
        Matrix::from_fn(self.dim, |s, t| rational::to_f64(self.get(s, t)))
    }

    /// Entrywise continued-fraction rounding of a float matrix (symmetrized by the upper triangle).
    pub fn rationalize(m: &Matrix, max_den: u64) -> SymMat {
        let mut out = SymMat::zeros(m.dim());
        for s in 0..m.dim() {
            for t in s..m.dim() {
                let v = 0.5 * (m.get(s, t) + m.get(t, s));
                out.set(s, t, rational::rationalize(v, max_den));
            }
        }
        out
    }

    pub fn to_wire(&self) -> Vec<Vec<String>> {
        self.rows().iter().map(|r| r.iter().map(rational::to_wire).collect()).collect()
    }

    pub fn from_wire(rows: &[Vec<String>]) -> Result<SymMat> {
        let parsed = rows
            .iter()
            .map(|r| r.iter().map(|s| rational::from_wire(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        SymMat::from_rows(parsed)
    }
}

impl Serialize for SymMat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_wire().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymMat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<String>>::deserialize(d)?;
        SymMat::from_wire(&rows).map_err(serde::de::Error::custom)
    }
}
