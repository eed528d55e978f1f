//! The Gram map from symmetric matrices to forms, its fibers and kernel,
//! and the filtration quadrics.

mod filtration;
mod symmat;

pub use filtration::{
    a_index_set, a_index_set_for, filtration, minimal_degree_collapse, quadric_for_coordinate,
    quadric_step, separation_pattern, FiltrationDescriptor, Pattern, QuadricStep, RawStep,
};
pub use symmat::SymMat;

use std::collections::HashMap;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::forms::Form;
use crate::monomials::{MultiIndex, OrderedBasis};
use crate::psdcore::Matrix;
use crate::rational::{frac, int, Rational};

/// The unordered pairs `{s,t}` (stored `s ≤ t`, ascending) whose exponents
/// sum to one degree-`2d` index `beta`.
#[derive(Clone, Debug)]
pub struct PairClass {
    pub beta: MultiIndex,
    pub pairs: Vec<(usize, usize)>,
}

impl PairClass {
    /// Number of ordered entries `(s,t)` in the class.
    pub fn ordered_count(&self) -> usize {
        self.pairs.iter().map(|&(s, t)| if s == t { 1 } else { 2 }).sum()
    }
}

/// Partition of the matrix entries of `Sym_{k+1}` by the monomial their
/// product contributes to.
#[derive(Clone, Debug)]
pub struct PairClasses {
    dim: usize,
    classes: Vec<PairClass>,
    by_beta: HashMap<MultiIndex, usize>,
    entry_class: Vec<usize>,
}

impl PairClasses {
    pub fn new(basis: &OrderedBasis) -> Self {
        let dim = basis.len();
        let mut classes: Vec<PairClass> = Vec::new();
        let mut by_beta: HashMap<MultiIndex, usize> = HashMap::new();
        let mut entry_class = vec![0; dim * dim];
        for s in 0..dim {
            for t in s..dim {
                let beta = basis.get(s) + basis.get(t);
                let c = *by_beta.entry(beta.clone()).or_insert_with(|| {
                    classes.push(PairClass { beta, pairs: Vec::new() });
                    classes.len() - 1
                });
                classes[c].pairs.push((s, t));
                entry_class[s * dim + t] = c;
                entry_class[t * dim + s] = c;
            }
        }
        PairClasses { dim, classes, by_beta, entry_class }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> &[PairClass] {
        &self.classes
    }

    pub fn class_of_beta(&self, beta: &MultiIndex) -> Option<usize> {
        self.by_beta.get(beta).copied()
    }

    pub fn class_of_entry(&self, s: usize, t: usize) -> usize {
        self.entry_class[s * self.dim + t]
    }

    /// Per-class sums `G(A)_β` for a float matrix, indexed like [`Self::classes`].
    pub fn apply_f64(&self, a: &Matrix) -> Vec<f64> {
        self.classes
            .iter()
            .map(|c| {
                c.pairs
                    .iter()
                    .map(|&(s, t)| if s == t { a.get(s, s) } else { 2.0 * a.get(s, t) })
                    .sum()
            })
            .collect()
    }

    pub fn apply_exact(&self, a: &SymMat) -> Vec<Rational> {
        self.classes
            .iter()
            .map(|c| {
                let mut acc = Rational::zero();
                for &(s, t) in &c.pairs {
                    let v = a.get(s, t);
                    if v.is_zero() {
                        continue;
                    }
                    if s == t {
                        acc += v;
                    } else {
                        acc += v * int(2);
                    }
                }
                acc
            })
            .collect()
    }

    /// Coefficient vector of `f` aligned with the classes.
    pub fn target_exact(&self, f: &Form) -> Result<Vec<Rational>> {
        let mut out = vec![Rational::zero(); self.classes.len()];
        for (alpha, c) in f.terms() {
            let idx = self
                .class_of_beta(alpha)
                .ok_or_else(|| Error::Structural(format!("monomial {alpha} is not a pairwise sum of the basis")))?;
            out[idx] = c.clone();
        }
        Ok(out)
    }

    /// Frobenius-nearest point of the fiber `{G(B) = target}`. The
    /// constraints have disjoint supports, so the projection spreads each
    /// residual uniformly over the entries of its class.
    pub fn project_f64(&self, a: &Matrix, target: &[f64]) -> Matrix {
        let current = self.apply_f64(a);
        let mut out = a.clone();
        for (ci, c) in self.classes.iter().enumerate() {
            let delta = (target[ci] - current[ci]) / c.ordered_count() as f64;
            if delta == 0.0 {
                continue;
            }
            for &(s, t) in &c.pairs {
                out.add_at(s, t, delta);
                if s != t {
                    out.add_at(t, s, delta);
                }
            }
        }
        out
    }

    pub fn project_exact(&self, a: &SymMat, target: &[Rational]) -> SymMat {
        let current = self.apply_exact(a);
        let mut out = a.clone();
        for (ci, c) in self.classes.iter().enumerate() {
            let diff = &target[ci] - &current[ci];
            if diff.is_zero() {
                continue;
            }
            let delta = diff / int(c.ordered_count() as i64);
            for &(s, t) in &c.pairs {
                out.add_to(s, t, &delta);
            }
        }
        out
    }

    /// Max over classes of `|G(A)_β − target_β|`.
    pub fn residual_f64(&self, a: &Matrix, target: &[f64]) -> f64 {
        self.apply_f64(a)
            .iter()
            .zip(target)
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }
}

/// `f_A(X) = m(X)^t A m(X)`.
pub fn gram_apply(a: &SymMat, basis: &OrderedBasis) -> Result<Form> {
    if a.dim() != basis.len() {
        return Err(Error::DimensionMismatch { expected: basis.len(), got: a.dim() });
    }
    let mut f = Form::zero(basis.n(), 2 * basis.d() as u32);
    let two = int(2);
    for s in 0..a.dim() {
        for t in s..a.dim() {
            let v = a.get(s, t);
            if v.is_zero() {
                continue;
            }
            let c = if s == t { v.clone() } else { v * &two };
            f.add_term_unchecked(basis.get(s) + basis.get(t), c);
        }
    }
    Ok(f)
}

fn check_form(f: &Form, basis: &OrderedBasis) -> Result<()> {
    if f.n() != basis.n() {
        return Err(Error::DimensionMismatch { expected: basis.n() + 1, got: f.nvars() });
    }
    if f.deg() != 2 * basis.d() as u32 {
        return Err(Error::DegreeMismatch { left: f.deg(), right: 2 * basis.d() as u32 });
    }
    Ok(())
}

/// The equal-split Gram matrix of `f`: each unordered pair representing a
/// monomial receives the same share of its coefficient.
pub fn canonical_gram(f: &Form, basis: &OrderedBasis) -> Result<SymMat> {
    canonical_gram_with(f, &PairClasses::new(basis), basis)
}

pub fn canonical_gram_with(f: &Form, classes: &PairClasses, basis: &OrderedBasis) -> Result<SymMat> {
    check_form(f, basis)?;
    let mut a = SymMat::zeros(basis.len());
    for (beta, c) in f.terms() {
        let class = &classes.classes()[classes
            .class_of_beta(beta)
            .ok_or_else(|| Error::Structural(format!("monomial {beta} not representable")))?];
        let share = c / int(class.pairs.len() as i64);
        let half = &share * frac(1, 2);
        for &(s, t) in &class.pairs {
            a.set(s, t, if s == t { share.clone() } else { half.clone() });
        }
    }
    Ok(a)
}

/// Matrix of the monomial `Z_s Z_t` (off-diagonal halves on both sides),
/// whose Gram image is `X^{α_s+α_t}`.
pub fn pair_matrix(dim: usize, s: usize, t: usize) -> SymMat {
    let mut m = SymMat::zeros(dim);
    m.set(s, t, if s == t { int(1) } else { frac(1, 2) });
    m
}

/// One kernel generator `E(pivot) − E(other)` in sparse form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelElement {
    pub class: usize,
    pub pivot: (usize, usize),
    pub other: (usize, usize),
}

impl KernelElement {
    pub fn to_symmat(&self, dim: usize) -> SymMat {
        pair_matrix(dim, self.pivot.0, self.pivot.1)
            .sub(&pair_matrix(dim, self.other.0, self.other.1))
    }

    /// `⟨M, B⟩ = M[pivot] − M[other]`.
    pub fn pair_with(&self, m: &SymMat) -> Rational {
        m.get(self.pivot.0, self.pivot.1) - m.get(self.other.0, self.other.1)
    }

    pub fn pair_with_f64(&self, m: &Matrix) -> f64 {
        m.get(self.pivot.0, self.pivot.1) - m.get(self.other.0, self.other.1)
    }
}

pub fn kernel_elements(classes: &PairClasses) -> Vec<KernelElement> {
    let mut out = Vec::new();
    for (ci, c) in classes.classes().iter().enumerate() {
        if let Some((&pivot, rest)) = c.pairs.split_first() {
            out.extend(rest.iter().map(|&other| KernelElement { class: ci, pivot, other }));
        }
    }
    out
}

/// A basis of `ker G`: one difference matrix per extra representation of
/// each ambiguous monomial, relative to its lex-least pair.
pub fn kernel_basis(basis: &OrderedBasis) -> Vec<SymMat> {
    let dim = basis.len();
    kernel_elements(&PairClasses::new(basis)).iter().map(|e| e.to_symmat(dim)).collect()
}

/// The Gram fiber `A_f + span(kernel)` of a form.
#[derive(Clone, Debug)]
pub struct GramSpace {
    basis: OrderedBasis,
    classes: PairClasses,
    f: Form,
    base: SymMat,
    kernel: Vec<KernelElement>,
}

impl GramSpace {
    pub fn new(f: &Form, basis: &OrderedBasis) -> Result<Self> {
        let classes = PairClasses::new(basis);
        let base = canonical_gram_with(f, &classes, basis)?;
        let kernel = kernel_elements(&classes);
        Ok(GramSpace { basis: basis.clone(), classes, f: f.clone(), base, kernel })
    }

    pub fn basis(&self) -> &OrderedBasis {
        &self.basis
    }

    pub fn classes(&self) -> &PairClasses {
        &self.classes
    }

    pub fn form(&self) -> &Form {
        &self.f
    }

    pub fn base(&self) -> &SymMat {
        &self.base
    }

    pub fn kernel(&self) -> &[KernelElement] {
        &self.kernel
    }

    pub fn kernel_matrices(&self) -> Vec<SymMat> {
        self.kernel.iter().map(|e| e.to_symmat(self.basis.len())).collect()
    }

    pub fn target_exact(&self) -> Vec<Rational> {
        self.classes.target_exact(&self.f).expect("fiber form checked at construction")
    }

    pub fn target_f64(&self) -> Vec<f64> {
        self.target_exact().iter().map(crate::rational::to_f64).collect()
    }

    /// `A_f + Σ μ_ℓ B_ℓ`.
    pub fn point(&self, mu: &[Rational]) -> SymMat {
        let weight = |(s, t): (usize, usize), m: &Rational| if s == t { m.clone() } else { m * frac(1, 2) };
        let mut a = self.base.clone();
        for (e, m) in self.kernel.iter().zip(mu) {
            if m.is_zero() {
                continue;
            }
            a.add_to(e.pivot.0, e.pivot.1, &weight(e.pivot, m));
            a.add_to(e.other.0, e.other.1, &-weight(e.other, m));
        }
        a
    }

    pub fn contains(&self, a: &SymMat) -> bool {
        a.dim() == self.basis.len() && self.classes.apply_exact(a) == self.target_exact()
    }

    pub fn project_exact(&self, a: &SymMat) -> SymMat {
        self.classes.project_exact(a, &self.target_exact())
    }
}
