//! Maximizing `λ_min` over an affine family `X_0 + Σ μ_ℓ D_ℓ` by a
//! log-determinant barrier and damped Newton steps.
//!
//! Each direction `D_ℓ` is sparse: a combination of the symmetric unit
//! matrices `E(a,b) = (e_a e_b^t + e_b e_a^t)/2`. Along the central path,
//! `Z = X^{-1}/s` is a trace-one PSD matrix orthogonal to every `D_ℓ`
//! with `⟨Z, X_0⟩ = t + dim/s`, so when the optimum is negative the path
//! also yields a separating functional.

use crate::error::Result;
use crate::psdcore::Matrix;

pub(crate) type Direction = Vec<(f64, usize, usize)>;

/// One centered point of the path.
#[derive(Clone, Debug)]
pub(crate) struct PathPoint {
    pub t: f64,
    /// `X_0 + Σ μ D` (without the `−tI` shift).
    pub a: Matrix,
    /// `X^{-1}/s`.
    pub z: Matrix,
    /// Upper bound on `max λ_min` from duality, `t + dim/s`.
    pub upper: f64,
}

fn cholesky(x: &Matrix) -> Option<Matrix> {
    let n = x.dim();
    let mut l = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = x.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l.set(i, i, s.sqrt());
            } else {
                l.set(i, j, s / l.get(j, j));
            }
        }
    }
    Some(l)
}

fn log_det(l: &Matrix) -> f64 {
    (0..l.dim()).map(|i| 2.0 * l.get(i, i).ln()).sum()
}

fn inverse_from_cholesky(l: &Matrix) -> Matrix {
    let n = l.dim();
    // columns of L^{-1}
    let mut linv = Matrix::zeros(n);
    for c in 0..n {
        for i in c..n {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for k in c..i {
                s -= l.get(i, k) * linv.get(k, c);
            }
            linv.set(i, c, s / l.get(i, i));
        }
    }
    linv.transpose().matmul(&linv)
}

fn solve_dense(mut h: Vec<Vec<f64>>, mut g: Vec<f64>) -> Option<Vec<f64>> {
    let n = g.len();
    for c in 0..n {
        let p = (c..n).max_by(|&a, &b| h[a][c].abs().total_cmp(&h[b][c].abs()))?;
        if h[p][c].abs() < 1e-300 {
            return None;
        }
        h.swap(c, p);
        g.swap(c, p);
        for r in c + 1..n {
            let f = h[r][c] / h[c][c];
            if f == 0.0 {
                continue;
            }
            for k in c..n {
                h[r][k] -= f * h[c][k];
            }
            g[r] -= f * g[c];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| h[i][k] * x[k]).sum();
        x[i] = (g[i] - s) / h[i][i];
    }
    Some(x)
}

pub(crate) struct MaxMinEigen<'a> {
    pub base: &'a Matrix,
    pub dirs: &'a [Direction],
}

impl MaxMinEigen<'_> {
    fn point(&self, mu: &[f64]) -> Matrix {
        let mut a = self.base.clone();
        for (d, &m) in self.dirs.iter().zip(mu) {
            if m == 0.0 {
                continue;
            }
            for &(c, i, j) in d {
                if i == j {
                    a.add_at(i, i, c * m);
                } else {
                    a.add_at(i, j, 0.5 * c * m);
                    a.add_at(j, i, 0.5 * c * m);
                }
            }
        }
        a
    }

    /// Barrier value `−s·t − log det(A(μ) − tI)`, or `None` outside the domain.
    fn value(&self, s: f64, mu: &[f64], t: f64) -> Option<(f64, Matrix, Matrix)> {
        let a = self.point(mu);
        let x = a.add_identity(-t);
        let l = cholesky(&x)?;
        Some((-s * t - log_det(&l), a, l))
    }

    /// Follows the central path until the duality gap `dim/s` falls below
    /// `gap_tol`, calling `visit` on each centered point; `visit` may stop
    /// the run early by returning a value.
    pub fn run<T>(&self, gap_tol: f64, mut visit: impl FnMut(&PathPoint) -> Option<T>) -> Result<(Option<T>, Option<PathPoint>)> {
        let n = self.base.dim();
        let m = self.dirs.len();
        let scale = self.base.frobenius().max(1.0);
        let mut mu = vec![0.0; m];
        let lmin0 = crate::psdcore::eigen_sym(self.base)?.min();
        let mut t = lmin0 - 0.1 * scale;
        let mut s = n as f64 / scale;
        let mut last = None;

        for _outer in 0..60 {
            for _newton in 0..100 {
                let Some((phi, _, l)) = self.value(s, &mu, t) else { break };
                let w = inverse_from_cholesky(&l);
                // gradient and Hessian over (μ, t)
                let mut grad = vec![0.0; m + 1];
                let mut hess = vec![vec![0.0; m + 1]; m + 1];
                let pair = |a: usize, b: usize, c: usize, d: usize| 0.5 * (w.get(a, c) * w.get(b, d) + w.get(a, d) * w.get(b, c));
                let w2 = w.matmul(&w);
                for (i, di) in self.dirs.iter().enumerate() {
                    grad[i] = -di.iter().map(|&(c, a, b)| c * w.get(a, b)).sum::<f64>();
                    for (j, dj) in self.dirs.iter().enumerate().skip(i) {
                        let mut h = 0.0;
                        for &(c1, a, b) in di {
                            for &(c2, c, d) in dj {
                                h += c1 * c2 * pair(a, b, c, d);
                            }
                        }
                        hess[i][j] = h;
                        hess[j][i] = h;
                    }
                    let cross = -di.iter().map(|&(c, a, b)| c * w2.get(a, b)).sum::<f64>();
                    hess[i][m] = cross;
                    hess[m][i] = cross;
                }
                grad[m] = -s + (0..n).map(|i| w.get(i, i)).sum::<f64>();
                hess[m][m] = (0..n).map(|i| w2.get(i, i)).sum();

                let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
                let Some(step) = solve_dense(hess, neg) else { break };
                let decrement: f64 = -grad.iter().zip(&step).map(|(g, d)| g * d).sum::<f64>();
                if decrement < 1e-14 {
                    break;
                }
                let mut alpha = 1.0;
                let mut moved = false;
                while alpha > 1e-12 {
                    let mu_new: Vec<f64> = mu.iter().zip(&step).map(|(x, d)| x + alpha * d).collect();
                    let t_new = t + alpha * step[m];
                    if let Some((phi_new, _, _)) = self.value(s, &mu_new, t_new) {
                        if phi_new <= phi - 0.25 * alpha * decrement {
                            mu = mu_new;
                            t = t_new;
                            moved = true;
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
                if !moved {
                    break;
                }
            }
            let Some((_, a, l)) = self.value(s, &mu, t) else { break };
            let z = inverse_from_cholesky(&l).scale(1.0 / s);
            let point = PathPoint { t, a, z, upper: t + n as f64 / s };
            if let Some(found) = visit(&point) {
                return Ok((Some(found), Some(point)));
            }
            let done = (n as f64 / s) <= gap_tol;
            last = Some(point);
            if done {
                break;
            }
            s *= 8.0;
        }
        Ok((None, last))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_the_best_diagonal_shift() {
        // diag(1, 3) + μ·(E(0,0) − E(1,1)) is best at μ = 1: diag(2, 2)
        let base = Matrix::diag(&[1.0, 3.0]);
        let dirs = vec![vec![(1.0, 0, 0), (-1.0, 1, 1)]];
        let problem = MaxMinEigen { base: &base, dirs: &dirs };
        let (_, last) = problem.run::<()>(1e-10, |_| None).unwrap();
        let p = last.unwrap();
        assert!((p.t - 2.0).abs() < 1e-8);
        assert!((p.a.get(0, 0) - 2.0).abs() < 1e-6);
        // the dual is orthogonal to the direction and has unit trace
        assert!((p.z.get(0, 0) - p.z.get(1, 1)).abs() < 1e-6);
        assert!((p.z.get(0, 0) + p.z.get(1, 1) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn negative_optimum_has_a_separating_dual() {
        // [[0, 1], [1, 0]] with no freedom: λ_min = −1
        let base = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let problem = MaxMinEigen { base: &base, dirs: &[] };
        let (_, last) = problem.run::<()>(1e-10, |_| None).unwrap();
        let p = last.unwrap();
        assert!((p.t + 1.0).abs() < 1e-8);
        assert!(p.z.inner(&base) < 0.0);
    }
}
