use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::gram::SymMat;
use crate::rational::Rational;

pub const MINORS_DIM_CAP: usize = 8;

/// Exact determinant by Gaussian elimination with nonzero-pivot search.
pub fn determinant(rows: &[Vec<Rational>]) -> Rational {
    let n = rows.len();
    let mut m: Vec<Vec<Rational>> = rows.to_vec();
    let mut det = Rational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !m[r][c].is_zero()) else {
            return Rational::zero();
        };
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        let pivot = m[c][c].clone();
        det *= &pivot;
        for r in c + 1..n {
            if m[r][c].is_zero() {
                continue;
            }
            let f = &m[r][c] / &pivot;
            for k in c..n {
                let v = &m[c][k] * &f;
                m[r][k] -= v;
            }
        }
    }
    det
}

/// The first index subset (in bitmask order) with a negative principal
/// minor, together with that minor.
pub fn first_negative_minor(a: &SymMat) -> Result<Option<(Vec<usize>, Rational)>> {
    let n = a.dim();
    if n > MINORS_DIM_CAP {
        return Err(Error::MinorsDimensionCap { dim: n, cap: MINORS_DIM_CAP });
    }
    for mask in 1u32..(1u32 << n) {
        let idx: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let sub: Vec<Vec<Rational>> =
            idx.iter().map(|&i| idx.iter().map(|&j| a.get(i, j).clone()).collect()).collect();
        let det = determinant(&sub);
        if det < Rational::zero() {
            return Ok(Some((idx, det)));
        }
    }
    Ok(None)
}

/// Every principal minor is nonnegative. Limited to dimension 8.
pub fn principal_minors_nonneg(a: &SymMat) -> Result<bool> {
    Ok(first_negative_minor(a)?.is_none())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn exact(rows: &[&[i64]]) -> SymMat {
        SymMat::from_rows(rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect()).unwrap()
    }

    #[test]
    fn examples() {
        assert!(principal_minors_nonneg(&exact(&[&[1, 0], &[0, 0]])).unwrap());
        let bad = exact(&[&[1, 2], &[2, 1]]);
        let (idx, det) = first_negative_minor(&bad).unwrap().unwrap();
        assert_eq!(idx, [0, 1]);
        assert_eq!(det, int(-3));
        assert!(principal_minors_nonneg(&exact(&[&[2, -1], &[-1, 2]])).unwrap());
    }

    #[test]
    fn leading_minors_are_not_enough() {
        // leading minors 0, 0 but the trailing 1×1 minor is −1
        assert!(!principal_minors_nonneg(&exact(&[&[0, 0], &[0, -1]])).unwrap());
    }

    #[test]
    fn determinant_values() {
        let m = exact(&[&[0, 1, 2], &[1, 0, 3], &[2, 3, 0]]);
        // 0·(0−9) − 1·(0−6) + 2·(3−0)
        assert_eq!(determinant(&m.rows()), int(12));
    }

    #[test]
    fn dimension_cap() {
        let err = principal_minors_nonneg(&SymMat::identity(9)).unwrap_err();
        assert_eq!(err, Error::MinorsDimensionCap { dim: 9, cap: 8 });
    }
}
