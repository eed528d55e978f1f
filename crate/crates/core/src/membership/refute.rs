//! Dual point certificates: weighted points of `H_i` whose moment matrix
//! separates `f` from `C_i`.

use std::collections::BTreeMap;
use std::time::Duration;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use num_traits::{One, Signed, Zero};

use super::barrier::MaxMinEigen;
use super::certificate::{DualPoint, DualPointCertificate, PointWitness};
use super::checker::{verify_certificate, Verdict};
use super::engine::{dykstra, EngineConfig};
use super::moment::hankel_from_y;
use super::sample::{hi_sample, psd_sample_test, SamplePoint};
use super::{denominator_caps, Options};
use crate::error::{Error, Result};
use crate::forms::Form;
use crate::gram::{filtration, FiltrationDescriptor, GramSpace, PairClasses};
use crate::psdcore::{ldlt_exact, psd_project_shifted, Ldlt, Matrix};
use crate::rational::{self, Rational};

/// Weighted points `(c, z)` of a moment certificate.
type WeightedPoints = Vec<(Rational, Vec<Rational>)>;

fn checked(cert: DualPointCertificate, f: &Form, desc: &FiltrationDescriptor) -> Result<Option<DualPointCertificate>> {
    let wrapped = cert.into();
    match verify_certificate(&wrapped, f, desc)? {
        Verdict::Valid => match wrapped {
            super::Certificate::DualPoint(c) => Ok(Some(c)),
            _ => unreachable!("wrapped a dual point certificate"),
        },
        Verdict::Invalid(_) => Ok(None),
    }
}

/// The Dirac certificate at the Veronese image of `x` when `f(x) < 0`.
/// Veronese points lie in every `H_i`, so it is valid at any level.
pub fn single_point_certificate(
    f: &Form,
    desc: &FiltrationDescriptor,
    level: usize,
    x: &[Rational],
) -> Result<Option<DualPointCertificate>> {
    desc.prefix(level)?;
    let value = f.eval_exact(x);
    if !value.is_negative() {
        return Ok(None);
    }
    let point = DualPoint {
        z: desc.basis().veronese_exact(x),
        witness: PointWitness::Param { x: x.to_vec() },
        weight: -value.recip(),
    };
    let cert = DualPointCertificate {
        n: desc.n(),
        d: desc.d(),
        order: desc.order(),
        level,
        points: vec![point],
        gap: -Rational::one(),
    };
    checked(cert, f, desc)
}

fn negative_point(f: &Form, opts: &Options) -> Option<Vec<Rational>> {
    let sample = psd_sample_test(f, opts.seed, opts.starts);
    if !sample.refutes() {
        return None;
    }
    let mut candidates = vec![sample.argmin.clone()];
    candidates.extend(sample.minimizers.iter().filter(|(v, _)| *v < 0.0).map(|(_, x)| x.clone()));
    for x in candidates {
        for cap in denominator_caps(opts.max_den) {
            let xr: Vec<Rational> = x.iter().map(|v| rational::rationalize(*v, cap)).collect();
            if f.eval_exact(&xr).is_negative() {
                return Some(xr);
            }
        }
    }
    None
}

/// Searches for rational moments `y` with PSD Hankel matrix and
/// `Σ f_β y_β < 0`, returning the factored points with weights scaled so
/// the pairing is exactly −1.
fn moment_points(
    space: &GramSpace,
    seed: Option<&Matrix>,
    opts: &Options,
) -> Result<Option<WeightedPoints>> {
    let basis = space.basis();
    let dim = basis.len();
    let classes: &PairClasses = space.classes();
    let counts: Vec<f64> = classes.classes().iter().map(|c| c.ordered_count() as f64).collect();
    let fvec = space.target_f64();
    let exact_f = space.target_exact();
    let denom: f64 = fvec.iter().zip(&counts).map(|(f, n)| f * f / n).sum();
    if denom == 0.0 {
        return Ok(None);
    }

    let hankel = |y: &[f64]| {
        let mut m = Matrix::zeros(dim);
        for (ci, c) in classes.classes().iter().enumerate() {
            for &(s, t) in &c.pairs {
                m.set(s, t, y[ci]);
                m.set(t, s, y[ci]);
            }
        }
        m
    };
    let averages = |v: &[f64]| -> Vec<f64> {
        let m = Matrix::from_fn(dim, |i, j| v[i * dim + j]);
        classes.apply_f64(&m).iter().zip(&counts).map(|(s, n)| s / n).collect()
    };
    let affine = |v: &[f64]| {
        let mut y = averages(v);
        let pairing: f64 = fvec.iter().zip(&y).map(|(f, y)| f * y).sum();
        let lambda = (pairing + 1.0) / denom;
        for ((yi, f), n) in y.iter_mut().zip(&fvec).zip(&counts) {
            *yi -= lambda * f / n;
        }
        hankel(&y).data().to_vec()
    };

    let round = |v: &[f64]| -> Option<Vec<(Rational, Vec<Rational>)>> {
        let y = averages(v);
        for cap in denominator_caps(opts.max_den) {
            let yr: Vec<Rational> = y.iter().map(|v| rational::rationalize(*v, cap)).collect();
            let g: Rational = yr.iter().zip(&exact_f).map(|(a, b)| a * b).sum();
            if !g.is_negative() {
                continue;
            }
            let map: BTreeMap<_, _> =
                classes.classes().iter().zip(&yr).map(|(c, v)| (c.beta.clone(), v.clone())).collect();
            let Ldlt::Factor(fac) = ldlt_exact(&hankel_from_y(basis, &map)) else { continue };
            let scale = -g.recip();
            let pts = (0..dim)
                .filter(|&i| !fac.d[i].is_zero())
                .map(|i| (&fac.d[i] * &scale, fac.column(i)))
                .collect();
            return Some(pts);
        }
        None
    };

    // central-path duals of max λ_min over the fiber are PSD and already
    // Hankel, so they only need rounding
    let base = space.base().to_f64();
    let dirs = super::sos::kernel_directions(space);
    let problem = MaxMinEigen { base: &base, dirs: &dirs };
    let gap_tol = 1e-10 * base.frobenius().max(1.0);
    let (found, _) = problem.run(gap_tol, |p| if p.upper < 0.0 { round(p.z.data()) } else { None })?;
    if found.is_some() {
        return Ok(found);
    }

    let fnorm = base.frobenius().max(1e-12);
    let start = match seed {
        Some(m) => m.clone(),
        None => Matrix::identity(dim),
    };
    let cfg = EngineConfig { max_iter: opts.engine.max_iter.min(3000), ..opts.engine.clone() };
    let mut eps = 1.0 / (fnorm * dim as f64);
    for _ in 0..12 {
        let run = dykstra(
            start.data(),
            affine,
            |v| Ok(psd_project_shifted(&Matrix::from_fn(dim, |i, j| v[i * dim + j]), eps)?.data().to_vec()),
            1.0,
            &cfg,
            |y, res| if res <= eps / 4.0 { round(y) } else { None },
        )?;
        if run.accepted.is_some() {
            return Ok(run.accepted);
        }
        eps /= 4.0;
    }
    Ok(None)
}

/// Exact nonnegative solution of `A c = b` supported on the columns the
/// float LP used, with free variables pinned to their rounded LP values.
fn exact_support_solve(columns: &[Vec<Rational>], rhs: &[Rational], hint: &[f64]) -> Option<Vec<Rational>> {
    let rows = rhs.len();
    let cols = columns.len();
    let mut a: Vec<Vec<Rational>> =
        (0..rows).map(|r| (0..cols).map(|c| columns[c][r].clone()).chain([rhs[r].clone()]).collect()).collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for c in 0..cols {
        let Some(p) = (row..rows).find(|&r| !a[r][c].is_zero()) else { continue };
        a.swap(row, p);
        let inv = a[row][c].recip();
        for v in a[row].iter_mut() {
            *v *= &inv;
        }
        for r in 0..rows {
            if r != row && !a[r][c].is_zero() {
                let factor = a[r][c].clone();
                for k in 0..=cols {
                    let sub = &a[row][k] * &factor;
                    a[r][k] -= sub;
                }
            }
        }
        pivots.push(c);
        row += 1;
        if row == rows {
            break;
        }
    }
    if a[row..].iter().any(|r| !r[cols].is_zero()) {
        return None;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let attempt = |pin: &dyn Fn(usize) -> Rational| -> Option<Vec<Rational>> {
        let mut x = vec![Rational::zero(); cols];
        for &c in &free {
            x[c] = pin(c);
        }
        for (r, &pc) in pivots.iter().enumerate() {
            let mut v = a[r][cols].clone();
            for &c in &free {
                v -= &a[r][c] * &x[c];
            }
            x[pc] = v;
        }
        x.iter().all(|v| !v.is_negative()).then_some(x)
    };
    attempt(&|c| rational::rationalize(hint[c].max(0.0), 1_000_000)).or_else(|| attempt(&|_| Rational::zero()))
}

/// Phase-one LP over the pool: weights `c ≥ 0` with the kernel pairings
/// zero and the Gram pairing −1, then an exact solve on the support.
fn lp_certificate(
    f: &Form,
    desc: &FiltrationDescriptor,
    level: usize,
    space: &GramSpace,
    pool: &[SamplePoint],
) -> Result<Option<DualPointCertificate>> {
    if pool.is_empty() {
        return Ok(None);
    }
    let kernel = space.kernel();
    let base = space.base();
    let column = |z: &[Rational]| -> Vec<Rational> {
        kernel
            .iter()
            .map(|e| &z[e.pivot.0] * &z[e.pivot.1] - &z[e.other.0] * &z[e.other.1])
            .chain([base.quad_form(z)])
            .collect()
    };
    let exact_cols: Vec<Vec<Rational>> = pool.iter().map(|p| column(&p.z)).collect();
    let float_cols: Vec<Vec<f64>> =
        exact_cols.iter().map(|c| c.iter().map(rational::to_f64).collect()).collect();
    let norms: Vec<f64> =
        float_cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300)).collect();
    let rows = kernel.len() + 1;

    let mut lp = Problem::new(OptimizationDirection::Minimize);
    lp.set_time_limit(Duration::from_secs(10));
    let vars: Vec<_> = (0..pool.len()).map(|_| lp.add_var(1.0, (0.0, f64::INFINITY))).collect();
    for r in 0..rows {
        let expr: Vec<_> = vars
            .iter()
            .zip(&float_cols)
            .zip(&norms)
            .filter(|((_, c), _)| c[r] != 0.0)
            .map(|((v, c), n)| (*v, c[r] / n))
            .collect();
        let rhs = if r + 1 == rows { -1.0 } else { 0.0 };
        lp.add_constraint(expr, ComparisonOp::Eq, rhs);
    }
    let Ok(outcome) = lp.solve() else { return Ok(None) };
    let Ok(solution) = outcome.into_solution() else { return Ok(None) };
    let values: Vec<f64> = vars.iter().zip(&norms).map(|(v, n)| solution.var_value(*v) / n).collect();
    let vmax = values.iter().cloned().fold(0.0, f64::max);
    let support: Vec<usize> = (0..pool.len()).filter(|&i| values[i] > 1e-12 * vmax.max(1e-300)).collect();
    if support.is_empty() {
        return Ok(None);
    }
    let rhs: Vec<Rational> = (0..rows).map(|r| if r + 1 == rows { -Rational::one() } else { Rational::zero() }).collect();
    let cols: Vec<Vec<Rational>> = support.iter().map(|&i| exact_cols[i].clone()).collect();
    let hint: Vec<f64> = support.iter().map(|&i| values[i]).collect();
    let Some(weights) = exact_support_solve(&cols, &rhs, &hint) else { return Ok(None) };

    let points = support
        .iter()
        .zip(weights)
        .filter(|(_, w)| w.is_positive())
        .map(|(&i, weight)| DualPoint { z: pool[i].z.clone(), witness: pool[i].witness.clone(), weight })
        .collect();
    let cert = DualPointCertificate {
        n: desc.n(),
        d: desc.d(),
        order: desc.order(),
        level,
        points,
        gap: -Rational::one(),
    };
    checked(cert, f, desc)
}

/// Refutation of `f ∈ C_level`, optionally seeded with a separating matrix
/// from a stalled primal run.
pub(crate) fn refute_seeded(
    f: &Form,
    desc: &FiltrationDescriptor,
    level: usize,
    seed: Option<&Matrix>,
    opts: &Options,
) -> Result<Option<DualPointCertificate>> {
    desc.prefix(level)?;
    if let Some(x) = negative_point(f, opts) {
        if let Some(cert) = single_point_certificate(f, desc, level, &x)? {
            return Ok(Some(cert));
        }
    }
    let space = GramSpace::new(f, desc.basis())?;
    let mut pool = hi_sample(desc, level, opts.seed, opts.pool_size)?;

    let mut direct = None;
    if level == 0 {
        let seed = seed.filter(|m| m.inner(&space.base().to_f64()) < 0.0);
        if let Some(points) = moment_points(&space, seed, opts)? {
            pool.extend(points.iter().map(|(_, z)| SamplePoint { z: z.clone(), witness: PointWitness::Free }));
            direct = Some(points);
        }
    }
    if let Some(cert) = lp_certificate(f, desc, level, &space, &pool)? {
        return Ok(Some(cert));
    }
    if let Some(points) = direct {
        let cert = DualPointCertificate {
            n: desc.n(),
            d: desc.d(),
            order: desc.order(),
            level,
            points: points
                .into_iter()
                .map(|(weight, z)| DualPoint { z, witness: PointWitness::Free, weight })
                .collect(),
            gap: -Rational::one(),
        };
        return checked(cert, f, desc);
    }
    Ok(None)
}

/// Looks for a dual point certificate proving `f ∉ C_level`. `None` means
/// the search found nothing, not that `f` is a member.
pub fn ci_refute(f: &Form, level: usize, opts: &Options) -> Result<Option<DualPointCertificate>> {
    if f.deg() == 0 || f.deg() % 2 == 1 {
        return Err(Error::InvalidParameter(format!("need a form of positive even degree, got {}", f.deg())));
    }
    let desc = filtration(f.n(), f.deg() as usize / 2, opts.order)?;
    refute_seeded(f, &desc, level, None, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{basis_sos, corpus, random_sos, CorpusName};
    use crate::monomials::MultiIndex;
    use crate::rational::{frac, int};

    #[test]
    fn negative_value_gives_a_point_certificate_at_the_top() {
        let f = Form::from_terms(1, 2, [(MultiIndex(vec![1, 1]), int(1))]).unwrap();
        let desc = filtration(1, 1, crate::monomials::MonomialOrder::LexDesc).unwrap();
        let cert = single_point_certificate(&f, &desc, desc.top_level(), &[int(1), int(-1)]).unwrap().unwrap();
        assert_eq!(cert.points.len(), 1);
        assert_eq!(cert.points[0].weight, int(1));
        assert!(single_point_certificate(&f, &desc, 0, &[int(1), int(1)]).unwrap().is_none());
    }

    #[test]
    fn motzkin_is_refuted_at_level_zero() {
        let f = corpus(CorpusName::Motzkin).unwrap();
        let cert = ci_refute(&f, 0, &Options::default()).unwrap().expect("certificate");
        assert_eq!(cert.level, 0);
        assert_eq!(cert.gap, -Rational::one());
        assert!(cert.points.iter().all(|p| p.weight.is_positive()));
    }

    #[test]
    fn sos_forms_are_never_refuted() {
        let opts = Options { pool_size: 60, ..Options::default() };
        assert!(ci_refute(&basis_sos(2, 2).unwrap(), 0, &opts).unwrap().is_none());
        let (f, _) = random_sos(7, 2, 2, 2).unwrap();
        for level in [0, 2] {
            assert!(ci_refute(&f, level, &opts).unwrap().is_none());
        }
    }

    #[test]
    fn exact_support_solve_keeps_nonnegativity() {
        let cols = vec![vec![int(1), int(0)], vec![int(0), int(1)], vec![int(1), int(1)]];
        let x = exact_support_solve(&cols, &[int(1), int(1)], &[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(x, vec![frac(1, 2), frac(1, 2), frac(1, 2)]);
        assert!(exact_support_solve(&cols, &[int(-1), int(0)], &[0.0; 3]).is_none());
    }
}
