//! Homogeneous polynomials with exact rational coefficients, the fixture
//! corpus, and the Hilbert-case classifier.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monomials::{all_indices, monomial_eval, monomial_eval_exact, MultiIndex, OrderedBasis};
use crate::rational::{self, frac, int, Rational};

/// A form of degree `deg` in `n + 1` variables. Absent keys are zero
/// coefficients; stored coefficients are never zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Form {
    n: usize,
    deg: u32,
    coeffs: BTreeMap<MultiIndex, Rational>,
}

impl Form {
    pub fn zero(n: usize, deg: u32) -> Self {
        Form { n, deg, coeffs: BTreeMap::new() }
    }

    pub fn from_terms<I>(n: usize, deg: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, Rational)>,
    {
        let mut f = Form::zero(n, deg);
        for (alpha, c) in terms {
            f.add_term(alpha, c)?;
        }
        Ok(f)
    }

    /// Adds `c·X^alpha`, validating the exponent vector.
    pub fn add_term(&mut self, alpha: MultiIndex, c: Rational) -> Result<()> {
        if alpha.nvars() != self.n + 1 {
            return Err(Error::DimensionMismatch { expected: self.n + 1, got: alpha.nvars() });
        }
        if alpha.degree() != self.deg {
            return Err(Error::DegreeMismatch { left: self.deg, right: alpha.degree() });
        }
        self.add_term_unchecked(alpha, c);
        Ok(())
    }

    pub(crate) fn add_term_unchecked(&mut self, alpha: MultiIndex, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.coeffs.entry(alpha) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nvars(&self) -> usize {
        self.n + 1
    }

    pub fn deg(&self) -> u32 {
        self.deg
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> Rational {
        self.coeffs.get(alpha).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Rational)> {
        self.coeffs.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    fn check_same_space(&self, other: &Form) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n + 1, got: other.n + 1 });
        }
        if self.deg != other.deg {
            return Err(Error::DegreeMismatch { left: self.deg, right: other.deg });
        }
        Ok(())
    }

    pub fn add(&self, other: &Form) -> Result<Form> {
        self.check_same_space(other)?;
        let mut out = self.clone();
        for (a, c) in &other.coeffs {
            out.add_term_unchecked(a.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Form) -> Result<Form> {
        self.add(&other.scale(&int(-1)))
    }

    pub fn scale(&self, s: &Rational) -> Form {
        if s.is_zero() {
            return Form::zero(self.n, self.deg);
        }
        Form {
            n: self.n,
            deg: self.deg,
            coeffs: self.coeffs.iter().map(|(a, c)| (a.clone(), c * s)).collect(),
        }
    }

    pub fn mul(&self, other: &Form) -> Result<Form> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n + 1, got: other.n + 1 });
        }
        let mut out = Form::zero(self.n, self.deg + other.deg);
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                out.add_term_unchecked(a + b, ca * cb);
            }
        }
        Ok(out)
    }

    pub fn square(&self) -> Form {
        self.mul(self).expect("same space")
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|(a, c)| rational::to_f64(c) * monomial_eval(a, x)).sum()
    }

    pub fn eval_exact(&self, x: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for (a, c) in &self.coeffs {
            acc += c * monomial_eval_exact(a, x);
        }
        acc
    }

    /// Binary64 snapshot for repeated evaluation and differentiation.
    pub fn to_float(&self) -> FloatForm {
        FloatForm {
            nvars: self.n + 1,
            terms: self
                .coeffs
                .iter()
                .map(|(a, c)| (a.0.clone(), rational::to_f64(c)))
                .collect(),
        }
    }

    /// Largest absolute coefficient, as f64.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().map(|c| rational::to_f64(&c.abs())).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(FormJson::from(self)).expect("serializable")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Form> {
        let raw: FormJson =
            serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        raw.try_into()
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (i, (a, c)) in self.coeffs.iter().rev().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})*{a}")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    alpha: Vec<u32>,
    c: String,
}

#[derive(Serialize, Deserialize)]
struct FormJson {
    n: usize,
    deg: u32,
    coeffs: Vec<TermJson>,
}

impl From<&Form> for FormJson {
    fn from(f: &Form) -> Self {
        FormJson {
            n: f.n,
            deg: f.deg,
            coeffs: f
                .coeffs
                .iter()
                .rev()
                .map(|(a, c)| TermJson { alpha: a.0.clone(), c: rational::to_wire(c) })
                .collect(),
        }
    }
}

impl TryFrom<FormJson> for Form {
    type Error = Error;
    fn try_from(raw: FormJson) -> Result<Form> {
        let mut f = Form::zero(raw.n, raw.deg);
        for t in raw.coeffs {
            f.add_term(MultiIndex(t.alpha), rational::from_wire(&t.c)?)?;
        }
        Ok(f)
    }
}

impl Serialize for Form {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FormJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Form {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = FormJson::deserialize(d)?;
        raw.try_into().map_err(serde::de::Error::custom)
    }
}

/// Binary64 copy of a form with evaluation and gradient.
#[derive(Clone, Debug)]
pub struct FloatForm {
    nvars: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

impl FloatForm {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(a, c)| c * a.iter().zip(x).map(|(&e, &xi)| xi.powi(e as i32)).product::<f64>())
            .sum()
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.nvars];
        for (a, c) in &self.terms {
            for i in 0..self.nvars {
                if a[i] == 0 {
                    continue;
                }
                let mut p = c * a[i] as f64;
                for (j, (&e, &xj)) in a.iter().zip(x).enumerate() {
                    let e = if j == i { e - 1 } else { e };
                    if e > 0 {
                        p *= xj.powi(e as i32);
                    }
                }
                g[i] += p;
            }
        }
        g
    }

    pub fn abs_coeff_sum(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.abs()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HilbertCase {
    /// Every PSD form is a sum of squares.
    Equal,
    /// Sums of squares form a proper subcone.
    Strict,
}

/// Hilbert's classification for forms in `n + 1` variables of degree `two_d`.
pub fn classify_hilbert_case(n: usize, two_d: usize) -> HilbertCase {
    if n + 1 == 2 || two_d == 2 || (n + 1, two_d) == (3, 4) {
        HilbertCase::Equal
    } else {
        HilbertCase::Strict
    }
}

/// Named fixtures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusName {
    /// `X0^4 X1^2 + X0^2 X1^4 + X2^6 - 3 X0^2 X1^2 X2^2`
    Motzkin,
    /// Choi–Lam quartic `X0^4 + X1^2X2^2 + X2^2X3^2 + X3^2X1^2 - 4 X0X1X2X3`.
    QuarticPsdNotSos,
    /// `Σ_j m_j(X)^2` over the lexicographic basis of degree `d`.
    BasisSos { n: usize, d: usize },
    Zero { n: usize, d: usize },
}

impl FromStr for CorpusName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let args = |s: &str, prefix: &str| -> Option<(usize, usize)> {
            let inner = s.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
            let (a, b) = inner.split_once(',')?;
            Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
        };
        match s {
            "motzkin" => Ok(CorpusName::Motzkin),
            "quartic_psd_not_sos" => Ok(CorpusName::QuarticPsdNotSos),
            _ => {
                if let Some((n, d)) = args(s, "basis_sos") {
                    Ok(CorpusName::BasisSos { n, d })
                } else if let Some((n, d)) = args(s, "zero") {
                    Ok(CorpusName::Zero { n, d })
                } else {
                    Err(Error::UnknownCorpus(s.to_string()))
                }
            }
        }
    }
}

pub fn corpus(name: CorpusName) -> Result<Form> {
    let t = |e: &[u32], c: i64| (MultiIndex(e.to_vec()), int(c));
    match name {
        CorpusName::Motzkin => Form::from_terms(
            2,
            6,
            [t(&[4, 2, 0], 1), t(&[2, 4, 0], 1), t(&[0, 0, 6], 1), t(&[2, 2, 2], -3)],
        ),
        CorpusName::QuarticPsdNotSos => Form::from_terms(
            3,
            4,
            [
                t(&[4, 0, 0, 0], 1),
                t(&[0, 2, 2, 0], 1),
                t(&[0, 0, 2, 2], 1),
                t(&[0, 2, 0, 2], 1),
                t(&[1, 1, 1, 1], -4),
            ],
        ),
        CorpusName::BasisSos { n, d } => basis_sos(n, d),
        CorpusName::Zero { n, d } => {
            check_nd(n, d)?;
            Ok(Form::zero(n, 2 * d as u32))
        }
    }
}

pub fn corpus_by_name(name: &str) -> Result<Form> {
    corpus(name.parse()?)
}

fn check_nd(n: usize, d: usize) -> Result<()> {
    if n < 1 || d < 1 {
        return Err(Error::InvalidParameter(format!("need n,d >= 1, got ({n},{d})")));
    }
    Ok(())
}

pub fn basis_sos(n: usize, d: usize) -> Result<Form> {
    let basis = OrderedBasis::lex(n, d)?;
    let mut f = Form::zero(n, 2 * d as u32);
    for a in basis.entries() {
        f.add_term_unchecked(a + a, int(1));
    }
    Ok(f)
}

/// `Σ_i w_i g_i^2`.
pub fn weighted_sum_of_squares(n: usize, deg: u32, squares: &[(Rational, Form)]) -> Result<Form> {
    let mut f = Form::zero(n, deg);
    for (w, g) in squares {
        f = f.add(&g.square().scale(w))?;
    }
    Ok(f)
}

/// `Σ_{i=1}^r g_i^2` for random rational degree-`d` forms `g_i`, deterministic in `seed`.
pub fn random_sos(seed: u64, n: usize, d: usize, r: usize) -> Result<(Form, Vec<Form>)> {
    check_nd(n, d)?;
    if r < 1 {
        return Err(Error::InvalidParameter("random_sos needs at least one term".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = all_indices(n + 1, d as u32);
    let mut gs = Vec::with_capacity(r);
    for _ in 0..r {
        let g = random_form_with(&mut rng, n, d as u32, &idx);
        gs.push(g);
    }
    let f = weighted_sum_of_squares(n, 2 * d as u32, &gs.iter().map(|g| (int(1), g.clone())).collect::<Vec<_>>())?;
    Ok((f, gs))
}

/// A dense random form of degree `deg` with small rational coefficients.
pub fn random_form(seed: u64, n: usize, deg: u32) -> Form {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = all_indices(n + 1, deg);
    random_form_with(&mut rng, n, deg, &idx)
}

fn random_form_with<R: Rng>(rng: &mut R, n: usize, deg: u32, idx: &[MultiIndex]) -> Form {
    let mut g = Form::zero(n, deg);
    for a in idx {
        let p = rng.random_range(-6i64..=6);
        let q = rng.random_range(1i64..=4);
        g.add_term_unchecked(a.clone(), frac(p, q));
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn eval_examples() {
        let f = basis_sos(1, 1).unwrap();
        assert_eq!(f.eval(&[3.0, 4.0]), 25.0);
        let m = corpus(CorpusName::Motzkin).unwrap();
        assert_eq!(m.eval_exact(&[int(1), int(1), int(1)]), int(0));
        assert_eq!(m.eval(&[1.0, 1.0, 1.0]), 0.0);
        assert_eq!(m.eval_exact(&[int(1), int(1), int(0)]), int(2));
        assert_eq!(m.eval(&[0.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn hilbert_cases() {
        assert_eq!(classify_hilbert_case(2, 4), HilbertCase::Equal);
        assert_eq!(classify_hilbert_case(2, 6), HilbertCase::Strict);
        assert_eq!(classify_hilbert_case(1, 100), HilbertCase::Equal);
        assert_eq!(classify_hilbert_case(5, 2), HilbertCase::Equal);
        assert_eq!(classify_hilbert_case(3, 4), HilbertCase::Strict);
    }

    #[test]
    fn corpus_names() {
        assert_eq!(corpus_by_name("basis_sos(1,1)").unwrap().to_string(), "(1)*X0^2 + (1)*X1^2");
        let z = corpus_by_name("zero(2,3)").unwrap();
        assert!(z.is_zero());
        assert_eq!(z.deg(), 6);
        assert!(matches!(corpus_by_name("robinson"), Err(Error::UnknownCorpus(_))));
    }

    #[test]
    fn single_square_of_pure_power() {
        let g = Form::from_terms(2, 3, [(MultiIndex(vec![3, 0, 0]), int(1))]).unwrap();
        let f = weighted_sum_of_squares(2, 6, &[(int(1), g)]).unwrap();
        assert_eq!(f, Form::from_terms(2, 6, [(MultiIndex(vec![6, 0, 0]), int(1))]).unwrap());
    }

    #[test]
    fn random_sos_is_deterministic_and_nonnegative() {
        let (f1, g1) = random_sos(7, 2, 3, 4).unwrap();
        let (f2, g2) = random_sos(7, 2, 3, 4).unwrap();
        assert_eq!(f1, f2);
        assert_eq!(g1, g2);
        let expand = weighted_sum_of_squares(2, 6, &g1.iter().map(|g| (int(1), g.clone())).collect::<Vec<_>>()).unwrap();
        assert_eq!(expand, f1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
            assert!(f1.eval(&x) >= 0.0);
        }
    }

    #[test]
    fn motzkin_nonnegative_on_sphere_samples() {
        let m = corpus(CorpusName::Motzkin).unwrap().to_float();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100_000 {
            let x: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let y: Vec<f64> = x.iter().map(|v| v / r).collect();
            assert!(m.eval(&y) >= -1e-14);
        }
    }

    #[test]
    fn motzkin_amgm_on_rational_grid() {
        // (a+b+c)/3 >= (abc)^(1/3) with a=x^4y^2, b=x^2y^4, c=z^6 gives
        // x^4y^2 + x^2y^4 + z^6 >= 3x^2y^2z^2.
        let m = corpus(CorpusName::Motzkin).unwrap();
        let grid: Vec<Rational> = (-6..=6).map(|p| frac(p, 3)).collect();
        for x in &grid {
            for y in &grid {
                for z in &grid {
                    let v = m.eval_exact(&[x.clone(), y.clone(), z.clone()]);
                    assert!(!v.is_negative());
                }
            }
        }
    }

    #[test]
    fn choi_lam_nonnegative_on_rational_grid() {
        let q = corpus(CorpusName::QuarticPsdNotSos).unwrap();
        let grid: Vec<Rational> = (-3..=3).map(|p| frac(p, 2)).collect();
        for a in &grid {
            for b in &grid {
                for c in &grid {
                    for d in &grid {
                        let v = q.eval_exact(&[a.clone(), b.clone(), c.clone(), d.clone()]);
                        assert!(!v.is_negative());
                    }
                }
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let f = random_form(3, 2, 4).to_float();
        let x = [0.3, -0.7, 1.1];
        let g = f.grad(&x);
        for i in 0..3 {
            let h = 1e-6;
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (f.eval(&xp) - f.eval(&xm)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-5 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn json_round_trip() {
        let m = corpus(CorpusName::Motzkin).unwrap();
        let v = m.to_json();
        assert_eq!(v["n"], 2);
        assert_eq!(v["deg"], 6);
        assert_eq!(Form::from_json(&v).unwrap(), m);
        let bad = serde_json::json!({"n": 2, "deg": 6, "coeffs": [{"alpha": [1, 1], "c": "1/1"}]});
        assert!(Form::from_json(&bad).is_err());
    }

    proptest! {
        #[test]
        fn exact_linearity(s1 in any::<u64>(), s2 in any::<u64>(), xs in proptest::collection::vec(-5i64..=5, 3)) {
            let f = random_form(s1, 2, 4);
            let g = random_form(s2, 2, 4);
            let x: Vec<Rational> = xs.iter().map(|&v| frac(v, 2)).collect();
            prop_assert_eq!(f.add(&g).unwrap().eval_exact(&x), f.eval_exact(&x) + g.eval_exact(&x));
        }

        #[test]
        fn homogeneity(s in any::<u64>(), lambda in 0.1f64..3.0, xs in proptest::collection::vec(-2.0f64..2.0, 3)) {
            let f = random_form(s, 2, 6);
            let scaled: Vec<f64> = xs.iter().map(|v| v * lambda).collect();
            let lhs = f.eval(&scaled);
            let rhs = lambda.powi(6) * f.eval(&xs);
            let scale = f.to_float().abs_coeff_sum() * (lambda * 2.0f64.sqrt() * 2.0).powi(6);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale.max(1.0));
        }
    }
}
