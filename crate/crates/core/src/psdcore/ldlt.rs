//! Semidefinite `LDL^t` with symmetric diagonal pivoting, shared between
//! binary64 and exact rational arithmetic.

use num_traits::{Signed, Zero};

use crate::gram::SymMat;
use crate::rational::Rational;

use super::Matrix;

/// `P A P^t = L D L^t` with `L` unit lower triangular and `D ≥ 0`, where
/// row `i` of `P A P^t` is row `perm[i]` of `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct LdltFactor<T> {
    pub perm: Vec<usize>,
    pub l: Vec<Vec<T>>,
    pub d: Vec<T>,
}

/// A vector with `w^t A w = value < 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct IndefiniteWitness<T> {
    pub w: Vec<T>,
    pub value: T,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Ldlt<T> {
    Factor(LdltFactor<T>),
    Indefinite(IndefiniteWitness<T>),
}

impl<T> Ldlt<T> {
    pub fn is_psd(&self) -> bool {
        matches!(self, Ldlt::Factor(_))
    }

    pub fn factor(&self) -> Option<&LdltFactor<T>> {
        match self {
            Ldlt::Factor(f) => Some(f),
            Ldlt::Indefinite(_) => None,
        }
    }

    pub fn witness(&self) -> Option<&IndefiniteWitness<T>> {
        match self {
            Ldlt::Factor(_) => None,
            Ldlt::Indefinite(w) => Some(w),
        }
    }
}

impl<T: Clone + Zero> LdltFactor<T> {
    /// Column `i` of `P^t L`, so that `A = Σ_i d_i c_i c_i^t`.
    pub fn column(&self, i: usize) -> Vec<T> {
        let n = self.perm.len();
        let mut c = vec![T::zero(); n];
        for r in 0..n {
            c[self.perm[r]] = self.l[r][i].clone();
        }
        c
    }
}

fn quad<T>(a: &[Vec<T>], w: &[T]) -> T
where
    T: Clone + Zero + std::ops::Mul<Output = T>,
{
    let mut acc = T::zero();
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            acc = acc + v.clone() * w[i].clone() * w[j].clone();
        }
    }
    acc
}

/// Pivots with `|pivot| ≤ tol` count as zero.
fn ldlt_core<T>(a: Vec<Vec<T>>, tol: T) -> Ldlt<T>
where
    T: Clone + Signed + PartialOrd,
{
    let n = a.len();
    let original = a.clone();
    let mut s = a;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut l = vec![vec![T::zero(); n]; n];
    let mut d = vec![T::zero(); n];

    for p in 0..n {
        let mut best = p;
        for i in p + 1..n {
            if s[i][i] > s[best][best] {
                best = i;
            }
        }
        if s[best][best] > tol {
            swap_sym(&mut s, p, best);
            perm.swap(p, best);
            l.swap(p, best);
            let pivot = s[p][p].clone();
            d[p] = pivot.clone();
            l[p][p] = T::one();
            for i in p + 1..n {
                l[i][p] = s[i][p].clone() / pivot.clone();
            }
            for i in p + 1..n {
                if s[i][p].is_zero() {
                    continue;
                }
                let f = l[i][p].clone();
                for j in p + 1..=i {
                    let v = s[i][j].clone() - f.clone() * s[p][j].clone();
                    s[i][j] = v.clone();
                    s[j][i] = v;
                }
            }
            continue;
        }

        // Remaining Schur complement has no positive pivot above tolerance.
        let mut u = vec![T::zero(); n];
        let neg = (p..n).find(|&i| s[i][i] < -tol.clone());
        if let Some(i) = neg {
            u[i] = T::one();
        } else if let Some((i, j)) = (p..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .find(|&(i, j)| s[i][j].abs() > tol)
        {
            // with s_ii ≈ s_jj ≈ 0, e_i − t e_j gives s_ii − 2 t s_ij + t² s_jj < 0 for t = s_ij
            u[i] = T::one();
            u[j] = -s[i][j].clone();
        } else {
            for i in p..n {
                l[i][i] = T::one();
            }
            return Ldlt::Factor(LdltFactor { perm, l, d });
        }

        // w' = L^{-t} u over the permuted coordinates, then undo the permutation.
        let mut wp = u;
        for i in (0..p).rev() {
            let mut acc = wp[i].clone();
            for j in i + 1..n {
                if !l[j][i].is_zero() {
                    acc = acc - l[j][i].clone() * wp[j].clone();
                }
            }
            wp[i] = acc;
        }
        let mut w = vec![T::zero(); n];
        for i in 0..n {
            w[perm[i]] = wp[i].clone();
        }
        let value = quad(&original, &w);
        if value < T::zero() {
            return Ldlt::Indefinite(IndefiniteWitness { w, value });
        }
        // Rounding left the candidate direction nonnegative: treat the rest as zero.
        for i in p..n {
            l[i][i] = T::one();
            for c in p..i {
                l[i][c] = T::zero();
            }
        }
        return Ldlt::Factor(LdltFactor { perm, l, d });
    }
    Ldlt::Factor(LdltFactor { perm, l, d })
}

fn swap_sym<T>(s: &mut [Vec<T>], a: usize, b: usize) {
    if a == b {
        return;
    }
    s.swap(a, b);
    for row in s.iter_mut() {
        row.swap(a, b);
    }
}

/// Binary64 factorization; zero pivots are those below `1e-12·‖A‖_F`.
pub fn ldlt(a: &Matrix) -> Ldlt<f64> {
    let n = a.dim();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    ldlt_core(rows, 1e-12 * a.frobenius())
}

/// Exact factorization over the rationals.
pub fn ldlt_exact(a: &SymMat) -> Ldlt<Rational> {
    ldlt_core(a.rows(), Rational::zero())
}

/// `P^t L D L^t P` for checking a factorization.
pub fn reconstruct(f: &LdltFactor<f64>) -> Matrix {
    let n = f.perm.len();
    Matrix::sum_outer(n, (0..n).map(|i| (f.d[i], f.column(i))))
}

pub fn reconstruct_exact(f: &LdltFactor<Rational>) -> SymMat {
    let n = f.perm.len();
    let points: Vec<(Rational, Vec<Rational>)> =
        (0..n).filter(|&i| !f.d[i].is_zero()).map(|i| (f.d[i].clone(), f.column(i))).collect();
    SymMat::from_points(n, &points)
}
