//! Sum-of-squares acceptance and refutation, and the interior test for Σ.

use num_traits::{Signed, Zero};
use serde::Serialize;

use super::barrier::{Direction, MaxMinEigen, PathPoint};
use super::certificate::{SosCertificate, WeightedSquare};
use super::engine::{dykstra, EngineRun, EngineStatus};
use super::{denominator_caps, refute, Diagnostics, Options, SosOutcome};
use crate::error::{Error, Result};
use crate::forms::Form;
use crate::gram::{filtration, GramSpace, SymMat};
use crate::monomials::{MultiIndex, OrderedBasis};
use crate::psdcore::{determinant, eigen_sym, ldlt_exact, psd_project_shifted, Ldlt, Matrix};
use crate::rational::{self, Rational};

pub(crate) fn half_degree(f: &Form) -> Result<usize> {
    if f.deg() == 0 || f.deg() % 2 == 1 {
        return Err(Error::InvalidParameter(format!("need a form of positive even degree, got {}", f.deg())));
    }
    Ok(f.deg() as usize / 2)
}

pub(crate) fn matrix_from_flat(dim: usize, v: &[f64]) -> Matrix {
    Matrix::from_fn(dim, |i, j| v[i * dim + j])
}

fn minus_identity(a: &SymMat, eps: &Rational) -> SymMat {
    if eps.is_zero() {
        return a.clone();
    }
    a.sub(&SymMat::identity(a.dim()).scale(eps))
}

fn exactly_above(a: &SymMat, eps: &Rational) -> bool {
    ldlt_exact(&minus_identity(a, eps)).is_psd()
}

/// Largest verified `m ≥ floor` among a few rational guesses near `λ_min(a)`.
pub(crate) fn verified_margin(a: &SymMat, floor: &Rational) -> Rational {
    let Ok(spec) = eigen_sym(&a.to_f64()) else { return floor.clone() };
    let lmin = spec.min();
    if lmin <= 0.0 {
        return floor.clone();
    }
    let guesses = [
        rational::rationalize(lmin, 1_000_000),
        rational::rationalize(lmin * (1.0 - 1e-6), 1_000_000),
        rational::rationalize(lmin * 0.99, 1000),
        rational::rationalize(lmin * 0.5, 1000),
    ];
    for g in guesses {
        if g > *floor && exactly_above(a, &g) {
            return g;
        }
    }
    floor.clone()
}

/// Rounds a float Gram matrix, repairs it exactly onto the fiber and keeps
/// the first rounding that is exactly `⪰ eps·I`.
fn certify_near(space: &GramSpace, y: &Matrix, eps: &Rational, max_den: u64) -> Option<SymMat> {
    for cap in denominator_caps(max_den) {
        let r = space.project_exact(&SymMat::rationalize(y, cap));
        if exactly_above(&r, eps) {
            return Some(r);
        }
    }
    None
}

/// Builds the certificate for an exactly PSD Gram matrix of `f`, or `None`
/// if `gram` is not PSD or not a Gram matrix of `f`.
pub fn sos_certificate_from_gram(f: &Form, gram: &SymMat, basis: &OrderedBasis) -> Option<SosCertificate> {
    let space = GramSpace::new(f, basis).ok()?;
    if !space.contains(gram) {
        return None;
    }
    let Ldlt::Factor(fac) = ldlt_exact(gram) else { return None };
    let mut squares = Vec::new();
    for i in 0..gram.dim() {
        if fac.d[i].is_zero() {
            continue;
        }
        let col = fac.column(i);
        let mut g = Form::zero(f.n(), basis.d() as u32);
        for (l, c) in col.into_iter().enumerate() {
            if !c.is_zero() {
                g.add_term(basis.get(l).clone(), c).ok()?;
            }
        }
        squares.push(WeightedSquare { weight: fac.d[i].clone(), form: g });
    }
    let margin = verified_margin(gram, &Rational::zero());
    Some(SosCertificate { n: f.n(), d: basis.d(), order: basis.order(), gram: gram.clone(), squares, margin })
}

/// Runs the fiber/cone iteration with cone `{A ⪰ shift·I}` and tries to
/// round each checked point once the residual is below `accept_below`.
fn run_fiber(
    space: &GramSpace,
    shift: f64,
    accept_below: f64,
    need: &Rational,
    opts: &Options,
) -> Result<EngineRun<SymMat>> {
    let dim = space.basis().len();
    let target = space.target_f64();
    let classes = space.classes();
    let start = space.base().to_f64();
    let scale = start.frobenius();
    dykstra(
        start.data(),
        |v| classes.project_f64(&matrix_from_flat(dim, v), &target).data().to_vec(),
        |v| Ok(psd_project_shifted(&matrix_from_flat(dim, v), shift)?.data().to_vec()),
        scale,
        &opts.engine,
        |y, res| {
            if res > accept_below {
                return None;
            }
            certify_near(space, &matrix_from_flat(dim, y), need, opts.max_den)
        },
    )
}

fn min_pure_power(f: &Form, d: usize) -> f64 {
    (0..f.nvars())
        .map(|i| rational::to_f64(&f.coeff(&MultiIndex::pure_power(f.nvars(), i, 2 * d as u32))))
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn kernel_directions(space: &GramSpace) -> Vec<Direction> {
    space.kernel().iter().map(|e| vec![(1.0, e.pivot.0, e.pivot.1), (-1.0, e.other.0, e.other.1)]).collect()
}

/// Central-path solution of `max λ_min(A)` over the Gram fiber, stopping
/// early once the dual bound shows the maximum is below `stop_below`.
pub(crate) fn max_margin_path(space: &GramSpace, stop_below: f64) -> Result<Option<PathPoint>> {
    let base = space.base().to_f64();
    let dirs = kernel_directions(space);
    let gap_tol = 1e-10 * base.frobenius().max(1.0);
    let problem = MaxMinEigen { base: &base, dirs: &dirs };
    let (_, last) = problem.run(gap_tol, |p| (p.upper < stop_below).then_some(()))?;
    Ok(last)
}

/// Decides `f ∈ Σ` with a certificate either way when it can.
///
/// The Gram matrix of largest minimal eigenvalue is located along a
/// log-det central path and rounded exactly. Boundary forms fall back to
/// the canonical Gram matrix and then to the projection engine on a short
/// ladder of shifted cones `{A ⪰ εI}` and on the PSD cone itself. A stall
/// hands the last separating direction to the refutation search.
pub fn sos_test(f: &Form, opts: &Options) -> Result<SosOutcome> {
    let d = half_degree(f)?;
    let basis = OrderedBasis::new(f.n(), d, opts.order)?;
    let space = GramSpace::new(f, &basis)?;
    let zero = Rational::zero();
    let accept = |gram: SymMat| {
        sos_certificate_from_gram(f, &gram, &basis)
            .map(SosOutcome::Accepted)
            .ok_or_else(|| Error::Structural("rounded Gram matrix failed re-verification".into()))
    };

    let mut shifts_tried = Vec::new();
    let path = max_margin_path(&space, 0.0)?;
    if let Some(p) = &path {
        if p.t > 0.0 {
            shifts_tried.push(p.t);
            if let Some(gram) = certify_near(&space, &p.a, &zero, opts.max_den) {
                return accept(gram);
            }
        }
    }
    if ldlt_exact(space.base()).is_psd() {
        return accept(space.base().clone());
    }
    let s0 = min_pure_power(f, d);
    let hopeless = path.as_ref().is_some_and(|p| p.upper < 0.0);
    if s0 > 0.0 && !hopeless {
        let ladder = [1.0, 1.0 / 16.0, 1.0 / 256.0, 1.0 / 4096.0];
        for frac in ladder {
            let eps = s0 * frac;
            shifts_tried.push(eps);
            let run = run_fiber(&space, eps, eps / 4.0, &zero, opts)?;
            if let Some(gram) = run.accepted {
                return accept(gram);
            }
        }
    }

    shifts_tried.push(0.0);
    let scale = space.base().to_f64().frobenius().max(1.0);
    let run = run_fiber(&space, 0.0, opts.engine.tol * scale, &zero, opts)?;
    if let Some(gram) = run.accepted {
        return accept(gram);
    }
    let mut reason = match run.status {
        EngineStatus::Converged => "converged but no rounding was exactly PSD".to_string(),
        EngineStatus::IterationCap => "iteration cap reached".to_string(),
        _ => "projections stalled".to_string(),
    };
    if run.status != EngineStatus::Converged {
        let dim = basis.len();
        let separator =
            matrix_from_flat(dim, &run.cone_point).sub(&matrix_from_flat(dim, &run.affine_point));
        let desc = filtration(f.n(), d, opts.order)?;
        if let Some(cert) = refute::refute_seeded(f, &desc, 0, Some(&separator), opts)? {
            return Ok(SosOutcome::Refuted(cert));
        }
        reason.push_str("; no refutation found");
    }
    Ok(SosOutcome::Unknown(Diagnostics {
        status: run.status,
        residual: run.residual,
        iterations: run.iterations,
        shifts_tried,
        reason,
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct InteriorResult {
    pub interior: bool,
    pub certificate: Option<SosCertificate>,
    /// The witness Gram matrix has only positive pivots.
    pub positive_definite: bool,
    /// The witness Gram matrix is PSD with nonzero determinant.
    pub nonsingular_psd: bool,
    pub diagnostics: Option<Diagnostics>,
}

/// Looks for a Gram matrix of `f` with `A ⪰ εI`, which places `f` in the
/// interior of Σ.
pub fn interior_sigma_test(f: &Form, eps: &Rational, opts: &Options) -> Result<InteriorResult> {
    if !eps.is_positive() {
        return Err(Error::InvalidParameter("interior margin must be positive".into()));
    }
    let d = half_degree(f)?;
    let basis = OrderedBasis::new(f.n(), d, opts.order)?;
    let space = GramSpace::new(f, &basis)?;

    let e = rational::to_f64(eps);
    let mut witness = exactly_above(space.base(), eps).then(|| space.base().clone());
    let mut last = None;
    if witness.is_none() {
        let path = max_margin_path(&space, e)?;
        if let Some(p) = path.as_ref().filter(|p| p.t >= e) {
            witness = certify_near(&space, &p.a, eps, opts.max_den);
        }
        if path.is_some_and(|p| p.upper < e) {
            return Ok(InteriorResult {
                interior: false,
                certificate: None,
                positive_definite: false,
                nonsingular_psd: false,
                diagnostics: Some(Diagnostics {
                    status: EngineStatus::Converged,
                    residual: 0.0,
                    iterations: 0,
                    shifts_tried: vec![e],
                    reason: "the largest achievable margin is below the requested one".into(),
                }),
            });
        }
    }
    if witness.is_none() {
        for shift in [e * 1.01, e] {
            let run = run_fiber(&space, shift, (shift - e).max(e * 1e-3), eps, opts)?;
            if run.accepted.is_some() {
                witness = run.accepted;
                break;
            }
            last = Some(run);
        }
    }
    let Some(w) = witness else {
        let run = last.expect("at least one engine run");
        return Ok(InteriorResult {
            interior: false,
            certificate: None,
            positive_definite: false,
            nonsingular_psd: false,
            diagnostics: Some(Diagnostics {
                status: run.status,
                residual: run.residual,
                iterations: run.iterations,
                shifts_tried: vec![rational::to_f64(eps)],
                reason: "no Gram matrix above the margin found".into(),
            }),
        });
    };

    let fac = ldlt_exact(&w);
    let positive_definite = fac.factor().is_some_and(|fa| fa.d.iter().all(|v| v.is_positive()));
    let nonsingular_psd = fac.is_psd() && !determinant(&w.rows()).is_zero();
    if positive_definite != nonsingular_psd {
        return Err(Error::CriterionDisagreement(format!(
            "positive definite {positive_definite} vs nonsingular PSD {nonsingular_psd}"
        )));
    }
    let mut cert = sos_certificate_from_gram(f, &w, &basis)
        .ok_or_else(|| Error::Structural("interior witness failed re-verification".into()))?;
    cert.margin = verified_margin(&w, eps);
    Ok(InteriorResult {
        interior: positive_definite,
        certificate: Some(cert),
        positive_definite,
        nonsingular_psd,
        diagnostics: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{basis_sos, random_sos, weighted_sum_of_squares};
    use crate::gram::gram_apply;
    use crate::monomials::MonomialOrder;
    use crate::rational::{frac, int};

    fn check_accepted(f: &Form, out: &SosOutcome) -> SosCertificate {
        let SosOutcome::Accepted(cert) = out else { panic!("expected acceptance, got {out:?}") };
        let basis = OrderedBasis::new(cert.n, cert.d, cert.order).unwrap();
        assert_eq!(gram_apply(&cert.gram, &basis).unwrap(), *f);
        let squares: Vec<(Rational, Form)> = cert.squares.iter().map(|s| (s.weight.clone(), s.form.clone())).collect();
        assert_eq!(weighted_sum_of_squares(f.n(), f.deg(), &squares).unwrap(), *f);
        cert.clone()
    }

    #[test]
    fn basis_sos_has_identity_gram_and_unit_margin() {
        let f = basis_sos(2, 2).unwrap();
        let cert = check_accepted(&f, &sos_test(&f, &Options::default()).unwrap());
        assert_eq!(cert.gram, SymMat::identity(6));
        assert_eq!(cert.margin, int(1));
    }

    #[test]
    fn random_sos_is_accepted_exactly() {
        for seed in 0..3 {
            let (f, _) = random_sos(seed, 2, 2, 3).unwrap();
            check_accepted(&f, &sos_test(&f, &Options::with_seed(seed)).unwrap());
        }
    }

    #[test]
    fn example34_order_also_certifies() {
        let (f, _) = random_sos(4, 2, 2, 6).unwrap();
        let opts = Options { order: MonomialOrder::Example34, ..Options::default() };
        let cert = check_accepted(&f, &sos_test(&f, &opts).unwrap());
        assert_eq!(cert.order, MonomialOrder::Example34);
    }

    #[test]
    fn odd_degree_is_rejected() {
        let f = Form::zero(2, 3);
        assert!(sos_test(&f, &Options::default()).is_err());
    }

    #[test]
    fn interior_examples() {
        let opts = Options::default();
        let r = interior_sigma_test(&basis_sos(2, 2).unwrap(), &frac(1, 2), &opts).unwrap();
        assert!(r.interior && r.positive_definite && r.nonsingular_psd);
        assert!(r.certificate.unwrap().margin >= frac(1, 2));

        let x0 = Form::from_terms(2, 4, [(MultiIndex(vec![4, 0, 0]), int(1))]).unwrap();
        let r = interior_sigma_test(&x0, &frac(1, 100), &opts).unwrap();
        assert!(!r.interior);
        assert!(r.certificate.is_none());
        assert!(interior_sigma_test(&x0, &int(0), &opts).is_err());
    }

    #[test]
    fn pure_power_lies_on_the_boundary() {
        // X0^4 is SOS through its canonical Gram matrix, which is singular
        let x0 = Form::from_terms(2, 4, [(MultiIndex(vec![4, 0, 0]), int(1))]).unwrap();
        let cert = check_accepted(&x0, &sos_test(&x0, &Options::default()).unwrap());
        assert!(cert.margin.is_zero());
    }
}
