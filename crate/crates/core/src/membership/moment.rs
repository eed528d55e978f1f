//! Moment matrices and the Riesz functional.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::forms::Form;
use crate::gram::{PairClasses, SymMat};
use crate::monomials::{MultiIndex, OrderedBasis};
use crate::rational::Rational;

/// `M = Σ c z z^t`, together with the moment sequence `y` when `M` is
/// constant on every Gram pair class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentMatrix {
    pub m: SymMat,
    pub y: Option<BTreeMap<MultiIndex, Rational>>,
}

impl MomentMatrix {
    /// `y` read off `M` if `M` is orthogonal to the Gram kernel.
    pub fn read_moments(m: &SymMat, basis: &OrderedBasis) -> Option<BTreeMap<MultiIndex, Rational>> {
        let classes = PairClasses::new(basis);
        let mut y = BTreeMap::new();
        for c in classes.classes() {
            let (s0, t0) = c.pairs[0];
            let v = m.get(s0, t0);
            if c.pairs.iter().any(|&(s, t)| m.get(s, t) != v) {
                return None;
            }
            y.insert(c.beta.clone(), v.clone());
        }
        Some(y)
    }
}

pub fn moment_from_points(basis: &OrderedBasis, points: &[(Rational, Vec<Rational>)]) -> Result<MomentMatrix> {
    let dim = basis.len();
    if let Some((_, z)) = points.iter().find(|(_, z)| z.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: z.len() });
    }
    if points.iter().any(|(c, _)| *c < Rational::zero()) {
        return Err(Error::InvalidParameter("moment weights must be nonnegative".into()));
    }
    let m = SymMat::from_points(dim, points);
    let y = MomentMatrix::read_moments(&m, basis);
    Ok(MomentMatrix { m, y })
}

/// `Σ_β g_β y_β`; monomials absent from `y` count as zero moments.
pub fn riesz_apply(y: &BTreeMap<MultiIndex, Rational>, g: &Form) -> Rational {
    g.terms().filter_map(|(a, c)| y.get(a).map(|v| v * c)).sum()
}

/// The Hankel-type matrix `M[s][t] = y_{α_s + α_t}`.
pub fn hankel_from_y(basis: &OrderedBasis, y: &BTreeMap<MultiIndex, Rational>) -> SymMat {
    let dim = basis.len();
    let mut m = SymMat::zeros(dim);
    for s in 0..dim {
        for t in s..dim {
            if let Some(v) = y.get(&(basis.get(s) + basis.get(t))) {
                m.set(s, t, v.clone());
            }
        }
    }
    m
}
