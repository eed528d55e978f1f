//! Multi-index combinatorics: the sets of exponent vectors of fixed degree,
//! the two supported monomial orders, and ordered monomial bases.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use num_traits::{One, Pow};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Exponent vector of a monomial in `n + 1` variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// `(0,…,0,d,0,…,0)` with `d` in slot `var`.
    pub fn pure_power(nvars: usize, var: usize, d: u32) -> Self {
        let mut e = vec![0; nvars];
        e[var] = d;
        MultiIndex(e)
    }

    /// Number of variables with a positive exponent.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &e)| e > 0).map(|(i, _)| i)
    }
}

impl Add for &MultiIndex {
    type Output = MultiIndex;
    fn add(self, rhs: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.0.len(), rhs.0.len());
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "X{i}")?;
            } else {
                write!(f, "X{i}^{e}")?;
            }
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum MonomialOrder {
    /// Lexicographic: compare exponents left to right.
    #[default]
    #[serde(rename = "lex")]
    LexDesc,
    /// Compare `α_0+α_1`, then `α_0`, then the remaining exponents lexicographically.
    #[serde(rename = "example34")]
    Example34,
}

impl MonomialOrder {
    pub fn name(self) -> &'static str {
        match self {
            MonomialOrder::LexDesc => "lex",
            MonomialOrder::Example34 => "example34",
        }
    }
}

impl FromStr for MonomialOrder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lex" | "lexdesc" | "LexDesc" => Ok(MonomialOrder::LexDesc),
            "example34" | "Example34" => Ok(MonomialOrder::Example34),
            other => Err(Error::UnknownOrder(other.to_string())),
        }
    }
}

impl fmt::Display for MonomialOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Compares two multi-indices of equal degree under `order`.
pub fn compare(order: MonomialOrder, a: &MultiIndex, b: &MultiIndex) -> Result<Ordering> {
    if a.nvars() != b.nvars() {
        return Err(Error::DimensionMismatch { expected: a.nvars(), got: b.nvars() });
    }
    if a.degree() != b.degree() {
        return Err(Error::DegreeMismatch { left: a.degree(), right: b.degree() });
    }
    Ok(compare_unchecked(order, a, b))
}

fn compare_unchecked(order: MonomialOrder, a: &MultiIndex, b: &MultiIndex) -> Ordering {
    match order {
        MonomialOrder::LexDesc => a.0.cmp(&b.0),
        MonomialOrder::Example34 => {
            let head = |m: &MultiIndex| m.0[0] + m.0.get(1).copied().unwrap_or(0);
            head(a)
                .cmp(&head(b))
                .then(a.0[0].cmp(&b.0[0]))
                .then_with(|| a.0[2.min(a.0.len())..].cmp(&b.0[2.min(b.0.len())..]))
        }
    }
}

/// `k(n,d) = C(n+d, n) - 1`, with overflow reported.
pub fn k_of(n: usize, d: usize) -> Result<usize> {
    if n < 1 || d < 1 {
        return Err(Error::InvalidParameter(format!("k(n,d) needs n,d >= 1, got ({n},{d})")));
    }
    Ok(binomial(n + d, n)? - 1)
}

/// Exact binomial coefficient; errors instead of wrapping.
pub fn binomial(n: usize, k: usize) -> Result<usize> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        // acc * (n - k + i) is divisible by i at every step
        acc = acc
            .checked_mul(n as u128 - k as u128 + i)
            .ok_or(Error::Overflow("binomial coefficient"))?
            / i;
    }
    usize::try_from(acc).map_err(|_| Error::Overflow("binomial coefficient"))
}

/// All exponent vectors of total degree `d` in `nvars` variables, lexicographically descending.
pub fn all_indices(nvars: usize, d: u32) -> Vec<MultiIndex> {
    fn rec(nvars: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if prefix.len() + 1 == nvars {
            prefix.push(left);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e);
            rec(nvars, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if nvars == 0 {
        return out;
    }
    rec(nvars, d, &mut Vec::with_capacity(nvars), &mut out);
    out
}

/// The monomial basis `m_0,…,m_k` of forms of degree `d` in `n+1` variables,
/// sorted from the greatest element down.
#[derive(Clone, Debug)]
pub struct OrderedBasis {
    n: usize,
    d: usize,
    order: MonomialOrder,
    entries: Vec<MultiIndex>,
    index: HashMap<MultiIndex, usize>,
}

impl PartialEq for OrderedBasis {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.d == other.d && self.order == other.order
    }
}

impl OrderedBasis {
    pub fn new(n: usize, d: usize, order: MonomialOrder) -> Result<Self> {
        let k = k_of(n, d)?;
        let mut entries = all_indices(n + 1, d as u32);
        debug_assert_eq!(entries.len(), k + 1);
        entries.sort_by(|a, b| compare_unchecked(order, b, a));
        let index = entries.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        Ok(OrderedBasis { n, d, order, entries, index })
    }

    pub fn lex(n: usize, d: usize) -> Result<Self> {
        Self::new(n, d, MonomialOrder::LexDesc)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `k(n,d)`; the basis has `k + 1` entries.
    pub fn k(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn order(&self) -> MonomialOrder {
        self.order
    }

    pub fn entries(&self) -> &[MultiIndex] {
        &self.entries
    }

    pub fn get(&self, j: usize) -> &MultiIndex {
        &self.entries[j]
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.index.get(alpha).copied()
    }

    /// `(m_0(x), …, m_k(x))`.
    pub fn veronese(&self, x: &[f64]) -> Vec<f64> {
        self.entries.iter().map(|a| monomial_eval(a, x)).collect()
    }

    pub fn veronese_exact(&self, x: &[Rational]) -> Vec<Rational> {
        self.entries.iter().map(|a| monomial_eval_exact(a, x)).collect()
    }
}

/// `x^α`, with `0^0 = 1`.
pub fn monomial_eval(alpha: &MultiIndex, x: &[f64]) -> f64 {
    debug_assert_eq!(alpha.nvars(), x.len());
    alpha
        .0
        .iter()
        .zip(x)
        .filter(|(&e, _)| e > 0)
        .map(|(&e, &xi)| xi.powi(e as i32))
        .product()
}

pub fn monomial_eval_exact(alpha: &MultiIndex, x: &[Rational]) -> Rational {
    debug_assert_eq!(alpha.nvars(), x.len());
    let mut acc = Rational::one();
    for (&e, xi) in alpha.0.iter().zip(x) {
        if e > 0 {
            acc *= Pow::pow(xi, e);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    #[test]
    fn k_of_examples() {
        assert_eq!(k_of(2, 5).unwrap(), 20);
        assert_eq!(k_of(1, 1).unwrap(), 1);
        assert_eq!(k_of(2, 3).unwrap(), 9);
        assert!(k_of(0, 3).is_err());
    }

    #[test]
    fn binomial_overflow_is_reported() {
        assert_eq!(binomial(10, 3).unwrap(), 120);
        assert!(matches!(binomial(400, 200), Err(Error::Overflow(_))));
    }

    #[test]
    fn lex_basis_2_3() {
        let b = OrderedBasis::lex(2, 3).unwrap();
        let want: Vec<MultiIndex> = [
            [3, 0, 0],
            [2, 1, 0],
            [2, 0, 1],
            [1, 2, 0],
            [1, 1, 1],
            [1, 0, 2],
            [0, 3, 0],
            [0, 2, 1],
            [0, 1, 2],
            [0, 0, 3],
        ]
        .iter()
        .map(|v| mi(v))
        .collect();
        assert_eq!(b.entries(), &want[..]);
    }

    #[test]
    fn lex_basis_1_1() {
        let b = OrderedBasis::lex(1, 1).unwrap();
        assert_eq!(b.entries(), &[mi(&[1, 0]), mi(&[0, 1])]);
    }

    #[test]
    fn example34_first_six() {
        let b = OrderedBasis::new(2, 5, MonomialOrder::Example34).unwrap();
        let want = [[5, 0, 0], [4, 1, 0], [3, 2, 0], [2, 3, 0], [1, 4, 0], [0, 5, 0]];
        for (j, w) in want.iter().enumerate() {
            assert_eq!(b.get(j), &mi(w));
        }
        assert_eq!(b.get(6), &mi(&[4, 0, 1]));
        assert_eq!(b.get(7), &mi(&[3, 1, 1]));
        assert_eq!(b.get(20), &mi(&[0, 0, 5]));
    }

    #[test]
    fn compare_examples() {
        let ex = MonomialOrder::Example34;
        assert_eq!(compare(ex, &mi(&[4, 1, 0]), &mi(&[5, 0, 0])).unwrap(), Ordering::Less);
        assert_eq!(
            compare(MonomialOrder::LexDesc, &mi(&[3, 0, 0]), &mi(&[2, 1, 0])).unwrap(),
            Ordering::Greater
        );
        let a = mi(&[1, 1, 1]);
        assert_eq!(compare(ex, &a, &a).unwrap(), Ordering::Equal);
        assert!(matches!(
            compare(ex, &mi(&[1, 0, 0]), &mi(&[1, 1, 0])),
            Err(Error::DegreeMismatch { .. })
        ));
    }

    #[test]
    fn monomial_eval_examples() {
        assert_eq!(monomial_eval(&mi(&[2, 1, 0]), &[2.0, 3.0, 5.0]), 12.0);
        assert_eq!(monomial_eval(&mi(&[0, 0, 4]), &[0.0, 0.0, 1.0]), 1.0);
        assert_eq!(monomial_eval(&mi(&[1, 2, 0]), &[0.0, 0.0, 0.0]), 0.0);
        assert_eq!(monomial_eval(&mi(&[0, 0]), &[0.0, 0.0]), 1.0);
    }

    #[test]
    fn basis_sizes_match_binomial() {
        for n in 1..=6 {
            for d in 1..=6 {
                let b = OrderedBasis::lex(n, d).unwrap();
                assert_eq!(b.len(), k_of(n, d).unwrap() + 1);
                let e = OrderedBasis::new(n, d, MonomialOrder::Example34).unwrap();
                assert_eq!(e.len(), b.len());
            }
        }
    }

    #[test]
    fn basis_is_strictly_decreasing_permutation() {
        for order in [MonomialOrder::LexDesc, MonomialOrder::Example34] {
            for (n, d) in [(1, 4), (2, 3), (3, 2), (2, 5)] {
                let b = OrderedBasis::new(n, d, order).unwrap();
                for w in b.entries().windows(2) {
                    assert_eq!(compare(order, &w[0], &w[1]).unwrap(), Ordering::Greater);
                }
                let mut got = b.entries().to_vec();
                got.sort();
                let mut all = all_indices(n + 1, d as u32);
                all.sort();
                assert_eq!(got, all);
                assert_eq!(b.get(0), &MultiIndex::pure_power(n + 1, 0, d as u32));
                assert_eq!(b.get(b.k()), &MultiIndex::pure_power(n + 1, n, d as u32));
            }
        }
    }

    fn index_strategy(nvars: usize, d: u32) -> impl Strategy<Value = MultiIndex> {
        let all = all_indices(nvars, d);
        (0..all.len()).prop_map(move |i| all[i].clone())
    }

    proptest! {
        #[test]
        fn order_axioms(
            a in index_strategy(3, 4),
            b in index_strategy(3, 4),
            c in index_strategy(3, 4),
            g in index_strategy(3, 2),
            lex in any::<bool>(),
        ) {
            let order = if lex { MonomialOrder::LexDesc } else { MonomialOrder::Example34 };
            let ab = compare(order, &a, &b).unwrap();
            let ba = compare(order, &b, &a).unwrap();
            prop_assert_eq!(ab, ba.reverse());
            prop_assert_eq!(ab == Ordering::Equal, a == b);
            let bc = compare(order, &b, &c).unwrap();
            if ab == Ordering::Less && bc == Ordering::Less {
                prop_assert_eq!(compare(order, &a, &c).unwrap(), Ordering::Less);
            }
            let shifted = compare(order, &(&a + &g), &(&b + &g)).unwrap();
            prop_assert_eq!(shifted, ab);
        }
    }
}
