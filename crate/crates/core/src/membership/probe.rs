//! Locating a form relative to the boundary of `C_i` by bisection along a
//! segment towards a reference interior form.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::certificate::{Certificate, DualPointCertificate};
use super::lifted::{ci_inner_certify, LiftOutcome};
use super::refute::refute_seeded;
use super::{sos_test, Options, SosOutcome};
use crate::error::{Error, Result};
use crate::forms::{basis_sos, Form};
use crate::gram::filtration;
use crate::rational::{frac, Rational};

/// Bisection stops once the bracket is narrower than this.
pub const BRACKET_WIDTH: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Interior,
    BoundarySuspect,
    Exterior,
    Unknown,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub classification: Classification,
    /// Largest `t` known not to be certified interior.
    #[serde(with = "crate::rational::wire")]
    pub t_out: Rational,
    /// Smallest `t` with an interior certificate.
    #[serde(with = "crate::rational::wire")]
    pub t_in: Rational,
    pub inner: Option<Certificate>,
    pub outer: Option<DualPointCertificate>,
    pub evaluations: usize,
}

/// `(1−t)f + t·g`.
fn blend(f: &Form, g: &Form, t: &Rational) -> Result<Form> {
    f.scale(&(Rational::one() - t)).add(&g.scale(t))
}

fn interior_certificate(f: &Form, level: usize, opts: &Options) -> Result<Option<Certificate>> {
    if level == 0 {
        if let SosOutcome::Accepted(c) = sos_test(f, opts)? {
            if c.margin.is_positive() {
                return Ok(Some(c.into()));
            }
        }
        return Ok(None);
    }
    match ci_inner_certify(f, level, opts.lift.max(1), opts)? {
        LiftOutcome::Certified(c) if c.margin.is_positive() => Ok(Some(c.into())),
        _ => Ok(None),
    }
}

/// Classifies `f` against `C_level` by bisecting `t ∈ [0,1]` on
/// `(1−t)f + t·g` with `g` (default `basis_sos`) an interior reference.
/// Interior and exterior claims carry certificates at the bracket ends.
pub fn boundary_probe(f: &Form, level: usize, direction: Option<&Form>, opts: &Options) -> Result<ProbeReport> {
    if f.deg() == 0 || f.deg() % 2 == 1 {
        return Err(Error::InvalidParameter(format!("need a form of positive even degree, got {}", f.deg())));
    }
    let d = f.deg() as usize / 2;
    let desc = filtration(f.n(), d, opts.order)?;
    desc.prefix(level)?;
    let g = match direction {
        Some(g) => g.clone(),
        None => basis_sos(f.n(), d)?,
    };
    let mut evaluations = 1;
    let zero = Rational::zero();
    let one = Rational::one();

    if let Some(cert) = interior_certificate(f, level, opts)? {
        return Ok(ProbeReport {
            classification: Classification::Interior,
            t_out: zero.clone(),
            t_in: zero,
            inner: Some(cert),
            outer: None,
            evaluations,
        });
    }
    if let Some(cert) = refute_seeded(f, &desc, level, None, opts)? {
        return Ok(ProbeReport {
            classification: Classification::Exterior,
            t_out: zero.clone(),
            t_in: one,
            inner: None,
            outer: Some(cert),
            evaluations,
        });
    }

    let mut lo = zero;
    let mut hi = one.clone();
    let mut inner = interior_certificate(&g, level, opts)?;
    evaluations += 1;
    if inner.is_none() {
        return Ok(ProbeReport {
            classification: Classification::Unknown,
            t_out: lo,
            t_in: hi,
            inner: None,
            outer: None,
            evaluations,
        });
    }
    let width = crate::rational::rationalize(BRACKET_WIDTH, 1000);
    while &hi - &lo > width {
        let mid = (&lo + &hi) * frac(1, 2);
        evaluations += 1;
        match interior_certificate(&blend(f, &g, &mid)?, level, opts)? {
            Some(c) => {
                hi = mid;
                inner = Some(c);
            }
            None => lo = mid,
        }
    }

    if hi <= width {
        return Ok(ProbeReport {
            classification: Classification::BoundarySuspect,
            t_out: lo,
            t_in: hi,
            inner,
            outer: None,
            evaluations,
        });
    }
    evaluations += 1;
    let outer = refute_seeded(&blend(f, &g, &lo)?, &desc, level, None, opts)?;
    let classification = if outer.is_some() { Classification::Exterior } else { Classification::Unknown };
    Ok(ProbeReport { classification, t_out: lo, t_in: hi, inner, outer, evaluations })
}
