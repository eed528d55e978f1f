use crate::error::{Error, Result};

use super::Matrix;

pub const MAX_SWEEPS: usize = 30;

/// Eigenvalues in descending order with orthonormal eigenvectors as the
/// columns of `vectors`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl Spectrum {
    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.col(i)
    }

    /// `V f(Λ) V^t`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.values.len();
        Matrix::sum_outer(n, (0..n).map(|i| (f(self.values[i]), self.vector(i))))
    }
}

/// Cyclic Jacobi: rotations over `(p,q)` in row order until every
/// off-diagonal entry is at most `1e-12·‖A‖_F`.
pub fn eigen_sym(a: &Matrix) -> Result<Spectrum> {
    let n = a.dim();
    let mut m = a.symmetrize();
    let mut v = Matrix::identity(n);
    let threshold = 1e-12 * a.frobenius();

    let mut sweeps = 0;
    loop {
        let off = max_off_diagonal(&m);
        if off <= threshold || off == 0.0 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NonConvergence { sweeps, off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq.abs() <= threshold * 1e-3 {
                    continue;
                }
                rotate(&mut m, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(j, j).total_cmp(&m.get(i, i)));
    let values = order.iter().map(|&i| m.get(i, i)).collect();
    let vectors = Matrix::from_fn(n, |r, c| v.get(r, order[c]));
    Ok(Spectrum { values, vectors })
}

fn max_off_diagonal(m: &Matrix) -> f64 {
    let n = m.dim();
    let mut off: f64 = 0.0;
    for p in 0..n {
        for q in p + 1..n {
            off = off.max(m.get(p, q).abs());
        }
    }
    off
}

fn rotate(m: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let n = m.dim();
    let apq = m.get(p, q);
    let theta = (m.get(q, q) - m.get(p, p)) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for r in 0..n {
        let mrp = m.get(r, p);
        let mrq = m.get(r, q);
        m.set(r, p, c * mrp - s * mrq);
        m.set(r, q, s * mrp + c * mrq);
    }
    for r in 0..n {
        let mpr = m.get(p, r);
        let mqr = m.get(q, r);
        m.set(p, r, c * mpr - s * mqr);
        m.set(q, r, s * mpr + c * mqr);
    }
    m.set(p, q, 0.0);
    m.set(q, p, 0.0);

    for r in 0..n {
        let vrp = v.get(r, p);
        let vrq = v.get(r, q);
        v.set(r, p, c * vrp - s * vrq);
        v.set(r, q, s * vrp + c * vrq);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_spectra() {
        let s = eigen_sym(&Matrix::identity(3)).unwrap();
        assert_eq!(s.values, [1.0, 1.0, 1.0]);

        let s = eigen_sym(&Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]])).unwrap();
        assert!((s.values[0] - 3.0).abs() < 1e-12);
        assert!((s.values[1] + 1.0).abs() < 1e-12);

        let s = eigen_sym(&Matrix::diag(&[0.0, -2.0, 5.0])).unwrap();
        assert_eq!(s.values, [5.0, 0.0, -2.0]);
    }

    #[test]
    fn zero_and_empty() {
        let s = eigen_sym(&Matrix::zeros(4)).unwrap();
        assert_eq!(s.values, [0.0; 4]);
        let s = eigen_sym(&Matrix::zeros(0)).unwrap();
        assert!(s.values.is_empty());
    }

    #[test]
    fn reconstruction_and_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in [2usize, 5, 12, 30] {
            let mut a = Matrix::zeros(dim);
            for i in 0..dim {
                for j in i..dim {
                    let x = rng.random_range(-1.0..1.0);
                    a.set(i, j, x);
                    a.set(j, i, x);
                }
            }
            let s = eigen_sym(&a).unwrap();
            let norm = a.frobenius();
            assert!(s.values.windows(2).all(|w| w[0] >= w[1]));
            for i in 0..dim {
                let v = s.vector(i);
                let av = a.matvec(&v);
                let res: f64 = av.iter().zip(&v).map(|(x, y)| (x - s.values[i] * y).powi(2)).sum();
                assert!(res.sqrt() <= 1e-8 * norm);
            }
            let back = s.reconstruct_with(|x| x);
            assert!(back.sub(&a).frobenius() <= 1e-8 * norm);
            let vtv = s.vectors.transpose().matmul(&s.vectors);
            assert!(vtv.sub(&Matrix::identity(dim)).max_abs() < 1e-10);
        }
    }
}
