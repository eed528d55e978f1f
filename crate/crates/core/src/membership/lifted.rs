//! Degree-lifted inner certificates for `C_i`: an exact identity
//! `q_A·(Σ Z_l^2)^r − Σ_j p_j q_j = σ` with `σ` a sum of squares.
//!
//! On the real cone over `V_i` every `q_j` vanishes, so the identity shows
//! `q_A ≥ 0` there and hence `f ∈ C_i`.
//!
//! At `r = 0` the multipliers are constants and `Σ λ_j q_j` lies in the
//! Gram kernel, so the relaxation is exactly Σ; that case defers to
//! [`sos_test`].

use std::collections::HashMap;

use num_traits::Zero;

use super::certificate::{Certificate, LevelCertificate, Multiplier};
use super::checker::verify_certificate;
use super::engine::{dykstra, EngineStatus};
use super::sos::{half_degree, verified_margin};
use super::{denominator_caps, sos_test, Diagnostics, Options, SosOutcome};
use crate::error::{Error, Result};
use crate::forms::Form;
use crate::gram::{filtration, FiltrationDescriptor, GramSpace, PairClasses, QuadricStep, SymMat};
use crate::monomials::{all_indices, MultiIndex, OrderedBasis};
use crate::psdcore::{ldlt_exact, psd_project_shifted, Matrix};
use crate::rational::{self, int, Rational};

/// The monomials `Z^β`, `|β| = r + 1`, indexing the SOS part.
pub fn lifted_basis(k: usize, r: u32) -> Result<OrderedBasis> {
    OrderedBasis::lex(k, r as usize + 1)
}

#[derive(Clone, Debug, Default)]
pub struct LiftOptions {
    /// Gram matrix of `f` to start the search from.
    pub start_gram: Option<SymMat>,
    /// Keep `start_gram` fixed and search only over multipliers and `σ`.
    pub fix_gram: bool,
    /// Skip the shortcut through an SOS certificate of `f`.
    pub skip_fast_path: bool,
}

#[derive(Clone, Debug)]
pub enum LiftOutcome {
    Certified(LevelCertificate),
    Unknown(Diagnostics),
}

impl LiftOutcome {
    pub fn certificate(&self) -> Option<&LevelCertificate> {
        match self {
            LiftOutcome::Certified(c) => Some(c),
            LiftOutcome::Unknown(_) => None,
        }
    }
}

fn unknown(reason: &str) -> LiftOutcome {
    LiftOutcome::Unknown(Diagnostics {
        status: EngineStatus::Stalled,
        residual: f64::NAN,
        iterations: 0,
        shifts_tried: vec![],
        reason: reason.into(),
    })
}

fn multinomial(gamma: &[u32]) -> i64 {
    let mut num: i64 = 1;
    let mut total = 0i64;
    for &g in gamma {
        for i in 1..=g as i64 {
            total += 1;
            num = num * total / i;
        }
    }
    num
}

fn unit_index(dim: usize, entries: &[usize]) -> MultiIndex {
    let mut e = vec![0u32; dim];
    for &l in entries {
        e[l] += 1;
    }
    MultiIndex(e)
}

/// `S = Σ_{|γ|=r} multinom(γ)·Φ_γ^t A Φ_γ`, the Gram matrix of
/// `q_A·(Σ Z_l^2)^r` obtained by multiplying `Z` by each `Z^γ`.
fn tensor_gram(a: &SymMat, sigma: &OrderedBasis, r: u32) -> SymMat {
    let dim = a.dim();
    let mut s = SymMat::zeros(sigma.len());
    for gamma in all_indices(dim, r) {
        let w = int(multinomial(gamma.exponents()));
        let phi: Vec<usize> = (0..dim)
            .map(|l| sigma.position(&(&gamma + &unit_index(dim, &[l]))).expect("degree r+1 monomial"))
            .collect();
        for i in 0..dim {
            for j in i..dim {
                let v = a.get(i, j);
                if v.is_zero() {
                    continue;
                }
                let add = v * &w;
                s.add_to(phi[i], phi[j], &add);
            }
        }
    }
    s
}

/// `q_A(Z)` as a form in `Z_0..Z_k`.
fn quadratic_in_z(a: &SymMat) -> Result<Form> {
    let dim = a.dim();
    let mut q = Form::zero(dim - 1, 2);
    for i in 0..dim {
        for j in i..dim {
            let v = a.get(i, j);
            if !v.is_zero() {
                let c = if i == j { v.clone() } else { v * int(2) };
                q.add_term(unit_index(dim, &[i, j]), c)?;
            }
        }
    }
    Ok(q)
}

fn step_form(dim: usize, step: &QuadricStep) -> Result<Form> {
    Form::from_terms(
        dim - 1,
        2,
        [(unit_index(dim, &[0, step.coordinate]), int(1)), (unit_index(dim, &[step.s, step.t]), int(-1))],
    )
}

fn norm_power(dim: usize, r: u32) -> Result<Form> {
    let mut out = Form::from_terms(dim - 1, 0, [(MultiIndex(vec![0; dim]), int(1))])?;
    let mut n2 = Form::zero(dim - 1, 2);
    for l in 0..dim {
        n2.add_term(unit_index(dim, &[l, l]), int(1))?;
    }
    for _ in 0..r {
        out = out.mul(&n2)?;
    }
    Ok(out)
}

struct Problem<'a> {
    desc: &'a FiltrationDescriptor,
    space: GramSpace,
    level: usize,
    r: u32,
    sigma: OrderedBasis,
    p_monos: Vec<MultiIndex>,
    fixed: Option<SymMat>,
}

/// Sparse linear constraints `C u = b` over `u = (μ, p, svec S)`.
struct Layout {
    n_mu: usize,
    n_p: usize,
    pairs: Vec<(usize, usize)>,
    columns: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    chol: Vec<Vec<f64>>,
}

impl Layout {
    fn n(&self) -> usize {
        self.columns.len()
    }

    fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.b.len()];
        for (col, &x) in self.columns.iter().zip(u) {
            if x != 0.0 {
                for &(r, v) in col {
                    out[r] += v * x;
                }
            }
        }
        out
    }

    fn project(&self, u: &[f64]) -> Vec<f64> {
        let mut res = self.apply(u);
        res.iter_mut().zip(&self.b).for_each(|(x, b)| *x -= b);
        let w = cholesky_solve(&self.chol, &res);
        u.iter()
            .zip(&self.columns)
            .map(|(x, col)| x - col.iter().map(|&(r, v)| v * w[r]).sum::<f64>())
            .collect()
    }

    fn s_offset(&self) -> usize {
        self.n_mu + self.n_p
    }
}

fn cholesky(a: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if s <= 0.0 {
                    return Err(Error::NotPsd(s));
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (y[i] - (i + 1..n).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    x
}

impl<'a> Problem<'a> {
    fn dim(&self) -> usize {
        self.space.basis().len()
    }

    fn layout(&self) -> Result<Layout> {
        let dim = self.dim();
        let rows_idx: HashMap<Vec<u32>, usize> = all_indices(dim, 2 * self.r + 2)
            .into_iter()
            .enumerate()
            .map(|(i, m)| (m.0, i))
            .collect();
        let nrows = rows_idx.len();
        let npow = norm_power(dim, self.r)?;
        let to_col = |form: &Form, sign: f64| -> Vec<(usize, f64)> {
            form.terms().map(|(a, c)| (rows_idx[&a.0], sign * rational::to_f64(c))).collect()
        };

        let mut columns = Vec::new();
        let base = self.fixed.clone().unwrap_or_else(|| self.space.base().clone());
        let n_mu = if self.fixed.is_some() { 0 } else { self.space.kernel().len() };
        if self.fixed.is_none() {
            for e in self.space.kernel() {
                let qb = Form::from_terms(
                    dim - 1,
                    2,
                    [(unit_index(dim, &[e.pivot.0, e.pivot.1]), int(1)), (unit_index(dim, &[e.other.0, e.other.1]), int(-1))],
                )?;
                columns.push(to_col(&qb.mul(&npow)?, 1.0));
            }
        }
        let steps = self.desc.quadrics_up_to(self.level);
        for step in steps {
            let q = step_form(dim, step)?;
            for m in &self.p_monos {
                let mono = Form::from_terms(dim - 1, 2 * self.r, [(m.clone(), int(1))])?;
                columns.push(to_col(&mono.mul(&q)?, -1.0));
            }
        }
        let n_p = steps.len() * self.p_monos.len();
        let mut pairs = Vec::new();
        for a in 0..self.sigma.len() {
            for b in a..self.sigma.len() {
                let row = rows_idx[&(self.sigma.get(a) + self.sigma.get(b)).0];
                let v = if a == b { -1.0 } else { -std::f64::consts::SQRT_2 };
                columns.push(vec![(row, v)]);
                pairs.push((a, b));
            }
        }
        let mut b = vec![0.0; nrows];
        for (r, v) in to_col(&quadratic_in_z(&base)?.mul(&npow)?, -1.0) {
            b[r] += v;
        }

        let mut cct = vec![vec![0.0; nrows]; nrows];
        for col in &columns {
            for &(i, vi) in col {
                for &(j, vj) in col {
                    cct[i][j] += vi * vj;
                }
            }
        }
        let chol = cholesky(cct)?;
        Ok(Layout { n_mu, n_p, pairs, columns, b, chol })
    }

    fn start(&self, layout: &Layout, start_gram: Option<&SymMat>) -> Vec<f64> {
        let mut u = vec![0.0; layout.n()];
        let a = start_gram.cloned().unwrap_or_else(|| self.space.base().clone());
        if layout.n_mu > 0 {
            let diff = a.sub(self.space.base());
            for (i, e) in self.space.kernel().iter().enumerate() {
                let w = if e.other.0 == e.other.1 { 1.0 } else { 0.5 };
                u[i] = -rational::to_f64(diff.get(e.other.0, e.other.1)) / w;
            }
        }
        let s = tensor_gram(&a, &self.sigma, self.r).to_f64();
        for (idx, &(p, q)) in layout.pairs.iter().enumerate() {
            let scale = if p == q { 1.0 } else { std::f64::consts::SQRT_2 };
            u[layout.s_offset() + idx] = s.get(p, q) * scale;
        }
        u
    }

    fn s_matrix(&self, layout: &Layout, u: &[f64]) -> Matrix {
        let mut m = Matrix::zeros(self.sigma.len());
        for (idx, &(p, q)) in layout.pairs.iter().enumerate() {
            let v = u[layout.s_offset() + idx];
            if p == q {
                m.set(p, p, v);
            } else {
                let v = v / std::f64::consts::SQRT_2;
                m.set(p, q, v);
                m.set(q, p, v);
            }
        }
        m
    }

    /// Rounds `μ` and `p`, recomputes the exact target of `σ` and repairs
    /// `S` onto its fiber.
    fn round(&self, layout: &Layout, u: &[f64], max_den: u64) -> Option<LevelCertificate> {
        let dim = self.dim();
        let s_float = self.s_matrix(layout, u);
        let sigma_classes = PairClasses::new(&self.sigma);
        let npow = norm_power(dim, self.r).ok()?;
        for cap in denominator_caps(max_den) {
            let gram_a = match &self.fixed {
                Some(a) => a.clone(),
                None => {
                    let mu: Vec<Rational> = u[..layout.n_mu].iter().map(|v| rational::rationalize(*v, cap)).collect();
                    self.space.point(&mu)
                }
            };
            let mut target = quadratic_in_z(&gram_a).ok()?.mul(&npow).ok()?;
            let mut multipliers = Vec::new();
            let per = self.p_monos.len();
            for (j, step) in self.desc.quadrics_up_to(self.level).iter().enumerate() {
                let mut p = Form::zero(dim - 1, 2 * self.r);
                for (m, mono) in self.p_monos.iter().enumerate() {
                    let c = rational::rationalize(u[layout.n_mu + j * per + m], cap);
                    if !c.is_zero() {
                        p.add_term(mono.clone(), c).ok()?;
                    }
                }
                if p.is_zero() {
                    continue;
                }
                target = target.sub(&p.mul(&step_form(dim, step).ok()?).ok()?).ok()?;
                multipliers.push(Multiplier { j: j + 1, p });
            }
            let t = sigma_classes.target_exact(&target).ok()?;
            let s = sigma_classes.project_exact(&SymMat::rationalize(&s_float, cap), &t);
            if !ldlt_exact(&s).is_psd() {
                continue;
            }
            let margin = verified_margin(&s, &Rational::zero());
            return Some(LevelCertificate {
                n: self.desc.n(),
                d: self.desc.d(),
                order: self.desc.order(),
                level: self.level,
                lift: self.r,
                gram_a,
                multipliers,
                sos_part: s,
                margin,
            });
        }
        None
    }
}

fn checked(cert: LevelCertificate, f: &Form, desc: &FiltrationDescriptor) -> Result<LiftOutcome> {
    let wrapped = Certificate::Level(cert);
    if verify_certificate(&wrapped, f, desc)?.is_valid() {
        let Certificate::Level(c) = wrapped else { unreachable!("wrapped a level certificate") };
        Ok(LiftOutcome::Certified(c))
    } else {
        Ok(unknown("rounded certificate failed verification"))
    }
}

pub fn ci_inner_certify(f: &Form, level: usize, lift: u32, opts: &Options) -> Result<LiftOutcome> {
    ci_inner_certify_with(f, level, lift, opts, &LiftOptions::default())
}

/// Searches for a level certificate proving `f ∈ C_level`. Never claims
/// non-membership.
pub fn ci_inner_certify_with(
    f: &Form,
    level: usize,
    lift: u32,
    opts: &Options,
    lift_opts: &LiftOptions,
) -> Result<LiftOutcome> {
    let d = half_degree(f)?;
    let desc = filtration(f.n(), d, opts.order)?;
    desc.prefix(level)?;
    let basis = desc.basis().clone();
    let k = basis.k();

    if lift == 0 || (!lift_opts.skip_fast_path && lift_opts.start_gram.is_none()) {
        if let SosOutcome::Accepted(cert) = sos_test(f, opts)? {
            let sigma = lifted_basis(k, lift)?;
            let s = tensor_gram(&cert.gram, &sigma, lift);
            let margin = if lift == 0 { cert.margin.clone() } else { verified_margin(&s, &Rational::zero()) };
            return checked(
                LevelCertificate {
                    n: desc.n(),
                    d,
                    order: desc.order(),
                    level,
                    lift,
                    gram_a: cert.gram,
                    multipliers: vec![],
                    sos_part: s,
                    margin,
                },
                f,
                &desc,
            );
        }
        if lift == 0 {
            return Ok(unknown("at r = 0 the relaxation is Σ and the SOS test did not accept"));
        }
    }

    let space = GramSpace::new(f, &basis)?;
    if let Some(a) = &lift_opts.start_gram {
        if !space.contains(a) {
            return Err(Error::Structural("start matrix is not a Gram matrix of the form".into()));
        }
    }
    let fixed = if lift_opts.fix_gram {
        Some(lift_opts.start_gram.clone().ok_or_else(|| {
            Error::InvalidParameter("fixing the Gram matrix needs a start matrix".into())
        })?)
    } else {
        None
    };
    let problem = Problem {
        desc: &desc,
        space,
        level,
        r: lift,
        sigma: lifted_basis(k, lift)?,
        p_monos: all_indices(k + 1, 2 * lift),
        fixed,
    };
    let layout = problem.layout()?;
    let start = problem.start(&layout, lift_opts.start_gram.as_ref());
    let off = layout.s_offset();

    let mut last = None;
    for shift in [0.25, 1.0 / 16.0, 1.0 / 256.0, 1.0 / 4096.0] {
        let run = dykstra(
            &start,
            |u| layout.project(u),
            |u| {
                let s = psd_project_shifted(&problem.s_matrix(&layout, u), shift)?;
                let mut out = u.to_vec();
                for (idx, &(p, q)) in layout.pairs.iter().enumerate() {
                    let scale = if p == q { 1.0 } else { std::f64::consts::SQRT_2 };
                    out[off + idx] = s.get(p, q) * scale;
                }
                Ok(out)
            },
            1.0,
            &opts.engine,
            |u, res| if res <= shift / 4.0 { problem.round(&layout, u, opts.max_den) } else { None },
        )?;
        if let Some(cert) = run.accepted {
            return checked(cert, f, &desc);
        }
        last = Some(run);
    }
    let run = last.expect("shift ladder is nonempty");
    Ok(LiftOutcome::Unknown(Diagnostics {
        status: run.status,
        residual: run.residual,
        iterations: run.iterations,
        shifts_tried: vec![0.25, 1.0 / 16.0, 1.0 / 256.0, 1.0 / 4096.0],
        reason: "no lifted certificate found".into(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{basis_sos, corpus, random_sos, CorpusName};
    use crate::gram::gram_apply;
    use crate::monomials::MonomialOrder;
    use crate::rational::frac;

    #[test]
    fn multinomials() {
        assert_eq!(multinomial(&[1, 1]), 2);
        assert_eq!(multinomial(&[2, 1, 1]), 12);
        assert_eq!(multinomial(&[3]), 1);
    }

    #[test]
    fn tensor_gram_represents_the_product() {
        let basis = OrderedBasis::lex(2, 2).unwrap();
        let (f, _) = random_sos(3, 2, 2, 2).unwrap();
        let a = crate::gram::canonical_gram(&f, &basis).unwrap();
        for r in [1, 2] {
            let sigma = lifted_basis(basis.k(), r).unwrap();
            let s = tensor_gram(&a, &sigma, r);
            let expected = quadratic_in_z(&a).unwrap().mul(&norm_power(basis.len(), r).unwrap()).unwrap();
            assert_eq!(gram_apply(&s, &sigma).unwrap(), expected);
        }
    }

    #[test]
    fn sos_forms_certify_at_every_level_with_zero_multipliers() {
        let f = basis_sos(2, 2).unwrap();
        let desc = filtration(2, 2, MonomialOrder::LexDesc).unwrap();
        for level in [0, 1, desc.top_level()] {
            let out = ci_inner_certify(&f, level, 1, &Options::default()).unwrap();
            let cert = out.certificate().expect("certified");
            assert!(cert.multipliers.is_empty());
            assert_eq!(cert.level, level);
        }
    }

    fn p_plus_q1() -> (Form, SymMat, SymMat) {
        let desc = filtration(2, 2, MonomialOrder::LexDesc).unwrap();
        let q1 = desc.steps()[0].q.clone();
        let p = SymMat::identity(desc.basis().len());
        let a = p.add(&q1);
        let f = gram_apply(&a, desc.basis()).unwrap();
        (f, p, a)
    }

    #[test]
    fn explicit_certificate_with_norm_multiplier() {
        let (f, p, a) = p_plus_q1();
        let desc = filtration(2, 2, MonomialOrder::LexDesc).unwrap();
        let dim = desc.basis().len();
        let sigma = lifted_basis(desc.basis().k(), 1).unwrap();
        let cert = LevelCertificate {
            n: 2,
            d: 2,
            order: MonomialOrder::LexDesc,
            level: 1,
            lift: 1,
            gram_a: a,
            multipliers: vec![Multiplier { j: 1, p: norm_power(dim, 1).unwrap() }],
            sos_part: tensor_gram(&p, &sigma, 1),
            margin: Rational::zero(),
        };
        assert!(verify_certificate(&cert.clone().into(), &f, &desc).unwrap().is_valid());
        // the multiplier is not available at level 0
        let mut low = cert;
        low.level = 0;
        assert!(!verify_certificate(&low.into(), &f, &desc).unwrap().is_valid());
    }

    #[test]
    fn engine_recovers_a_multiplier_for_a_fixed_indefinite_gram() {
        let (f, _, a) = p_plus_q1();
        let lift_opts = LiftOptions { start_gram: Some(a.clone()), fix_gram: true, skip_fast_path: true };
        let out = ci_inner_certify_with(&f, 1, 1, &Options::default(), &lift_opts).unwrap();
        let cert = out.certificate().expect("certified");
        assert_eq!(cert.gram_a, a);
        assert_eq!(cert.multipliers.len(), 1);
        assert_eq!(cert.multipliers[0].j, 1);
    }

    #[test]
    fn lift_zero_collapses_to_sos() {
        let f = corpus(CorpusName::Motzkin).unwrap();
        let opts = Options { pool_size: 40, ..Options::default() };
        assert!(ci_inner_certify(&f, 0, 0, &opts).unwrap().certificate().is_none());
        let g = basis_sos(1, 2).unwrap();
        let cert = ci_inner_certify(&g, 0, 0, &opts).unwrap();
        assert_eq!(cert.certificate().unwrap().margin, frac(1, 1));
    }
}
