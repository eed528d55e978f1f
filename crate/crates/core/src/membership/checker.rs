//! Independent exact verification of certificates.
//!
//! The checks here re-expand every polynomial identity with their own
//! sparse arithmetic and test semidefiniteness by plain elimination, so a
//! bug in the producing code cannot hide behind a shared helper.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::Serialize;

use super::certificate::{Certificate, DualPointCertificate, LevelCertificate, PointWitness, SosCertificate};
use crate::error::{Error, Result};
use crate::forms::Form;
use crate::gram::{FiltrationDescriptor, SymMat};
use crate::monomials::OrderedBasis;
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "snake_case")]
pub enum Verdict {
    Valid,
    Invalid(String),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        *self == Verdict::Valid
    }
}

type Poly = BTreeMap<Vec<u32>, Rational>;

fn poly_add_term(p: &mut Poly, e: Vec<u32>, c: Rational) {
    if c.is_zero() {
        return;
    }
    match p.entry(e) {
        Entry::Occupied(mut slot) => {
            *slot.get_mut() += c;
            if slot.get().is_zero() {
                slot.remove();
            }
        }
        Entry::Vacant(slot) => {
            slot.insert(c);
        }
    }
}

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            poly_add_term(&mut out, e, ca * cb);
        }
    }
    out
}

fn poly_of(f: &Form) -> Poly {
    let mut p = Poly::new();
    for (a, c) in f.terms() {
        poly_add_term(&mut p, a.exponents().to_vec(), c.clone());
    }
    p
}

/// `m^t G m` for the monomial vector `m` given by `exps`.
fn quadratic(g: &SymMat, exps: &[Vec<u32>]) -> Poly {
    let mut p = Poly::new();
    for s in 0..exps.len() {
        for t in 0..exps.len() {
            let c = g.get(s, t);
            if c.is_zero() {
                continue;
            }
            let e: Vec<u32> = exps[s].iter().zip(&exps[t]).map(|(x, y)| x + y).collect();
            poly_add_term(&mut p, e, c.clone());
        }
    }
    p
}

/// Semidefiniteness by symmetric elimination without pivoting: a negative
/// pivot, or a zero pivot with a nonzero row, rules it out.
fn semidefinite(m: &SymMat) -> bool {
    let n = m.dim();
    let mut a = m.rows();
    for k in 0..n {
        let p = a[k][k].clone();
        if p.is_negative() {
            return false;
        }
        if p.is_zero() {
            if a[k][k + 1..].iter().any(|v| !v.is_zero()) {
                return false;
            }
            continue;
        }
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let factor = &a[i][k] / &p;
            for j in k + 1..n {
                let sub = &factor * &a[k][j];
                a[i][j] -= sub;
            }
        }
    }
    true
}

fn semidefinite_above(m: &SymMat, margin: &Rational) -> bool {
    let mut shifted = m.clone();
    for i in 0..m.dim() {
        shifted.set(i, i, m.get(i, i) - margin);
    }
    semidefinite(&shifted)
}

fn exponents(basis: &OrderedBasis) -> Vec<Vec<u32>> {
    basis.entries().iter().map(|a| a.exponents().to_vec()).collect()
}

fn structural(msg: String) -> Error {
    Error::Structural(msg)
}

fn check_shape(n: usize, d: usize, order: crate::monomials::MonomialOrder, f: &Form, desc: &FiltrationDescriptor) -> Result<()> {
    if n != desc.n() || d != desc.d() || order != desc.order() {
        return Err(structural(format!(
            "certificate is for (n,d,order)=({n},{d},{order}), descriptor is ({},{},{})",
            desc.n(),
            desc.d(),
            desc.order()
        )));
    }
    if f.n() != n || f.deg() as usize != 2 * d {
        return Err(structural(format!(
            "form has n={} and degree {}, certificate expects n={n} and degree {}",
            f.n(),
            f.deg(),
            2 * d
        )));
    }
    Ok(())
}

fn check_dim(what: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(structural(format!("{what} has dimension {got}, expected {expected}")));
    }
    Ok(())
}

fn verify_sos(c: &SosCertificate, f: &Form, desc: &FiltrationDescriptor) -> Result<Verdict> {
    check_shape(c.n, c.d, c.order, f, desc)?;
    let exps = exponents(desc.basis());
    check_dim("Gram matrix", c.gram.dim(), exps.len())?;
    let target = poly_of(f);
    if quadratic(&c.gram, &exps) != target {
        return Ok(Verdict::Invalid("Gram matrix does not represent the form".into()));
    }
    if c.margin.is_negative() {
        return Ok(Verdict::Invalid("negative margin".into()));
    }
    if !semidefinite_above(&c.gram, &c.margin) {
        return Ok(Verdict::Invalid("Gram matrix is not above its margin".into()));
    }
    let mut total = Poly::new();
    for (i, sq) in c.squares.iter().enumerate() {
        if sq.weight.is_negative() {
            return Ok(Verdict::Invalid(format!("square {i} has negative weight")));
        }
        if sq.form.n() != c.n || sq.form.deg() as usize != c.d {
            return Err(structural(format!("square {i} has the wrong shape")));
        }
        let g = poly_of(&sq.form);
        for (e, v) in poly_mul(&g, &g) {
            poly_add_term(&mut total, e, v * &sq.weight);
        }
    }
    if total != target {
        return Ok(Verdict::Invalid("squares do not sum to the form".into()));
    }
    Ok(Verdict::Valid)
}

fn monomial_value(e: &[u32], x: &[Rational]) -> Rational {
    let mut v = Rational::from_integer(1.into());
    for (xi, &k) in x.iter().zip(e) {
        for _ in 0..k {
            v *= xi;
        }
    }
    v
}

fn verify_dual(c: &DualPointCertificate, f: &Form, desc: &FiltrationDescriptor) -> Result<Verdict> {
    check_shape(c.n, c.d, c.order, f, desc)?;
    if c.level > desc.top_level() {
        return Err(structural(format!("level {} exceeds top level {}", c.level, desc.top_level())));
    }
    let exps = exponents(desc.basis());
    let dim = exps.len();
    let prefix = desc.prefix(c.level)?;
    if c.points.is_empty() {
        return Ok(Verdict::Invalid("no points".into()));
    }
    for (r, p) in c.points.iter().enumerate() {
        check_dim("point", p.z.len(), dim)?;
        if !p.weight.is_positive() {
            return Ok(Verdict::Invalid(format!("point {r} has non-positive weight")));
        }
        match &p.witness {
            PointWitness::Free => {
                if c.level != 0 {
                    return Ok(Verdict::Invalid(format!("point {r} is unconstrained above level 0")));
                }
            }
            PointWitness::Param { x } => {
                check_dim("parameter", x.len(), c.n + 1)?;
                if let Some(l) = (0..=prefix).find(|&l| p.z[l] != monomial_value(&exps[l], x)) {
                    return Ok(Verdict::Invalid(format!("point {r} coordinate {l} is not its monomial")));
                }
            }
        }
    }

    // moments per exponent; every entry of a class must agree
    let mut moments: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
    for s in 0..dim {
        for t in s..dim {
            let mut v = Rational::zero();
            for p in &c.points {
                v += &p.weight * &p.z[s] * &p.z[t];
            }
            let e: Vec<u32> = exps[s].iter().zip(&exps[t]).map(|(a, b)| a + b).collect();
            match moments.get(&e) {
                Some(prev) if *prev != v => {
                    return Ok(Verdict::Invalid("moment matrix is not orthogonal to the Gram kernel".into()));
                }
                Some(_) => {}
                None => {
                    moments.insert(e, v);
                }
            }
        }
    }
    let mut gap = Rational::zero();
    for (a, coeff) in f.terms() {
        let y = moments
            .get(a.exponents())
            .ok_or_else(|| structural(format!("monomial {a} is outside the Gram image")))?;
        gap += coeff * y;
    }
    if gap != c.gap {
        return Ok(Verdict::Invalid(format!("pairing is {gap}, certificate states {}", c.gap)));
    }
    if !gap.is_negative() {
        return Ok(Verdict::Invalid("pairing is not negative".into()));
    }
    Ok(Verdict::Valid)
}

fn verify_level(c: &LevelCertificate, f: &Form, desc: &FiltrationDescriptor) -> Result<Verdict> {
    check_shape(c.n, c.d, c.order, f, desc)?;
    if c.level > desc.top_level() {
        return Err(structural(format!("level {} exceeds top level {}", c.level, desc.top_level())));
    }
    let exps = exponents(desc.basis());
    let dim = exps.len();
    check_dim("Gram matrix", c.gram_a.dim(), dim)?;
    if quadratic(&c.gram_a, &exps) != poly_of(f) {
        return Ok(Verdict::Invalid("Gram matrix does not represent the form".into()));
    }
    let k = dim - 1;
    let r = c.lift as usize;
    let sigma_basis = OrderedBasis::lex(k, r + 1)?;
    let sigma_exps = exponents(&sigma_basis);
    check_dim("SOS part", c.sos_part.dim(), sigma_exps.len())?;

    let unit = |l: usize| {
        let mut e = vec![0u32; dim];
        e[l] = 1;
        e
    };
    let qa = quadratic(&c.gram_a, &(0..dim).map(unit).collect::<Vec<_>>());
    let mut norm2 = Poly::new();
    for l in 0..dim {
        let mut e = vec![0u32; dim];
        e[l] = 2;
        poly_add_term(&mut norm2, e, Rational::from_integer(1.into()));
    }
    let mut lhs = qa;
    for _ in 0..r {
        lhs = poly_mul(&lhs, &norm2);
    }

    let steps = desc.steps();
    let mut seen = Vec::new();
    for m in &c.multipliers {
        if m.j == 0 || m.j > c.level || m.j > steps.len() || seen.contains(&m.j) {
            return Ok(Verdict::Invalid(format!("multiplier index {} not usable at level {}", m.j, c.level)));
        }
        seen.push(m.j);
        if m.p.nvars() != dim || m.p.deg() as usize != 2 * r {
            return Err(structural(format!("multiplier {} has the wrong shape", m.j)));
        }
        let step = &steps[m.j - 1];
        let mut q = Poly::new();
        let mut lead = vec![0u32; dim];
        lead[0] += 1;
        lead[step.coordinate] += 1;
        poly_add_term(&mut q, lead, Rational::from_integer(1.into()));
        let mut tail = vec![0u32; dim];
        tail[step.s] += 1;
        tail[step.t] += 1;
        poly_add_term(&mut q, tail, Rational::from_integer((-1).into()));
        for (e, v) in poly_mul(&poly_of(&m.p), &q) {
            poly_add_term(&mut lhs, e, -v);
        }
    }
    if lhs != quadratic(&c.sos_part, &sigma_exps) {
        return Ok(Verdict::Invalid("lifted identity does not hold".into()));
    }
    if c.margin.is_negative() || !semidefinite_above(&c.sos_part, &c.margin) {
        return Ok(Verdict::Invalid("SOS part is not positive semidefinite above its margin".into()));
    }
    Ok(Verdict::Valid)
}

/// Re-checks every invariant of `cert` for the form `f`. Shape mismatches
/// (wrong `n`, `d`, order, level or dimensions) are errors; failed
/// identities or sign conditions give [`Verdict::Invalid`].
pub fn verify_certificate(cert: &Certificate, f: &Form, desc: &FiltrationDescriptor) -> Result<Verdict> {
    match cert {
        Certificate::Sos(c) => verify_sos(c, f, desc),
        Certificate::DualPoint(c) => verify_dual(c, f, desc),
        Certificate::Level(c) => verify_level(c, f, desc),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gram::filtration;
    use crate::monomials::MonomialOrder;
    use crate::rational::{frac, int};

    fn sym(rows: &[&[i64]]) -> SymMat {
        SymMat::from_rows(rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect()).unwrap()
    }

    #[test]
    fn elimination_matches_definitions() {
        assert!(semidefinite(&sym(&[&[1, 1], &[1, 1]])));
        assert!(semidefinite(&sym(&[&[0, 0], &[0, 3]])));
        assert!(!semidefinite(&sym(&[&[0, 1], &[1, 0]])));
        assert!(!semidefinite(&sym(&[&[1, 2], &[2, 1]])));
        assert!(semidefinite_above(&sym(&[&[2, 0], &[0, 2]]), &int(2)));
        assert!(!semidefinite_above(&sym(&[&[2, 0], &[0, 2]]), &frac(201, 100)));
    }

    #[test]
    fn shape_mismatch_is_structural() {
        let desc = filtration(2, 2, MonomialOrder::LexDesc).unwrap();
        let f = crate::forms::basis_sos(2, 2).unwrap();
        let cert = Certificate::Sos(SosCertificate {
            n: 2,
            d: 3,
            order: MonomialOrder::LexDesc,
            gram: SymMat::identity(10),
            squares: vec![],
            margin: int(0),
        });
        assert!(matches!(verify_certificate(&cert, &f, &desc), Err(Error::Structural(_))));
    }

    #[test]
    fn identity_gram_of_basis_sos() {
        let desc = filtration(1, 2, MonomialOrder::LexDesc).unwrap();
        let f = crate::forms::basis_sos(1, 2).unwrap();
        let mut cert = SosCertificate {
            n: 1,
            d: 2,
            order: MonomialOrder::LexDesc,
            gram: SymMat::identity(3),
            squares: desc
                .basis()
                .entries()
                .iter()
                .map(|a| super::super::WeightedSquare {
                    weight: int(1),
                    form: Form::from_terms(1, 2, [(a.clone(), int(1))]).unwrap(),
                })
                .collect(),
            margin: int(1),
        };
        assert_eq!(verify_certificate(&cert.clone().into(), &f, &desc).unwrap(), Verdict::Valid);
        cert.gram.set(0, 0, frac(1001, 1000));
        assert!(!verify_certificate(&cert.into(), &f, &desc).unwrap().is_valid());
    }
}
