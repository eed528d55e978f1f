//! Dense symmetric linear algebra and the equivalent PSD criteria:
//! eigenvalues, `LDL^t`, principal minors, and explicit factorizations.

mod eigen;
mod ldlt;
mod matrix;
mod minors;

use std::fmt;
use std::str::FromStr;

pub use eigen::{eigen_sym, Spectrum, MAX_SWEEPS};
pub use ldlt::{
    ldlt, ldlt_exact, reconstruct, reconstruct_exact, IndefiniteWitness, Ldlt, LdltFactor,
};
pub use matrix::Matrix;
pub use minors::{determinant, first_negative_minor, principal_minors_nonneg, MINORS_DIM_CAP};

use crate::error::{Error, Result};
use crate::gram::SymMat;
use crate::rational::exact_from_f64;

/// `λ_min ≥ −psd_tolerance(A)` counts as PSD.
pub fn psd_tolerance(a: &Matrix) -> f64 {
    1e-9 * a.frobenius().max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsdMode {
    Eigen,
    Ldlt,
    Minors,
    CrossCheck,
}

impl FromStr for PsdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eigen" => Ok(PsdMode::Eigen),
            "ldlt" => Ok(PsdMode::Ldlt),
            "minors" => Ok(PsdMode::Minors),
            "cross_check" => Ok(PsdMode::CrossCheck),
            other => Err(Error::InvalidParameter(format!("unknown PSD mode `{other}`"))),
        }
    }
}

impl fmt::Display for PsdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PsdMode::Eigen => "eigen",
            PsdMode::Ldlt => "ldlt",
            PsdMode::Minors => "minors",
            PsdMode::CrossCheck => "cross_check",
        })
    }
}

/// Verdict plus whatever evidence the selected criteria produced.
#[derive(Clone, Debug)]
pub struct PsdVerdict {
    pub psd: bool,
    pub min_eigenvalue: Option<f64>,
    pub witness: Option<Vec<f64>>,
    pub negative_minor: Option<Vec<usize>>,
}

fn exact_view(a: &Matrix) -> SymMat {
    let mut m = SymMat::zeros(a.dim());
    for i in 0..a.dim() {
        for j in i..a.dim() {
            let v = (exact_from_f64(a.get(i, j)) + exact_from_f64(a.get(j, i))) / crate::rational::int(2);
            m.set(i, j, v);
        }
    }
    m
}

pub fn is_psd(a: &Matrix, mode: PsdMode) -> Result<PsdVerdict> {
    let tol = psd_tolerance(a);
    let mut verdict = PsdVerdict { psd: true, min_eigenvalue: None, witness: None, negative_minor: None };
    let run_eigen = matches!(mode, PsdMode::Eigen | PsdMode::CrossCheck);
    let run_ldlt = matches!(mode, PsdMode::Ldlt | PsdMode::CrossCheck);
    let run_minors = mode == PsdMode::Minors || (mode == PsdMode::CrossCheck && a.dim() <= MINORS_DIM_CAP);

    let mut eigen_ok = None;
    if run_eigen {
        let spec = eigen_sym(a)?;
        let lmin = spec.min();
        verdict.min_eigenvalue = Some(lmin);
        eigen_ok = Some(lmin >= -tol);
        if lmin < -tol {
            verdict.witness = Some(spec.vector(a.dim() - 1));
        }
    }
    let mut ldlt_ok = None;
    if run_ldlt {
        let res = ldlt(a);
        ldlt_ok = Some(res.is_psd());
        if let Ldlt::Indefinite(w) = res {
            verdict.witness.get_or_insert(w.w);
        }
    }
    let mut minors_ok = None;
    if run_minors {
        let neg = first_negative_minor(&exact_view(a))?;
        minors_ok = Some(neg.is_none());
        verdict.negative_minor = neg.map(|(idx, _)| idx);
    }

    verdict.psd = match mode {
        PsdMode::Eigen => eigen_ok.unwrap_or(true),
        PsdMode::Ldlt => ldlt_ok.unwrap_or(true),
        PsdMode::Minors => minors_ok.unwrap_or(true),
        PsdMode::CrossCheck => {
            let lmin = verdict.min_eigenvalue.unwrap_or(0.0);
            let votes = [eigen_ok, ldlt_ok, minors_ok];
            let decided = votes.iter().flatten();
            if lmin.abs() > tol {
                let expected = lmin > 0.0;
                if decided.clone().any(|&v| v != expected) {
                    return Err(Error::CriterionDisagreement(format!(
                        "eigen={eigen_ok:?} ldlt={ldlt_ok:?} minors={minors_ok:?} at λ_min={lmin:e}"
                    )));
                }
                expected
            } else {
                minors_ok.or(eigen_ok).unwrap_or(true)
            }
        }
    };
    if verdict.psd {
        verdict.witness = None;
    }
    Ok(verdict)
}

/// Frobenius-nearest PSD matrix `V Λ₊ V^t`.
pub fn psd_project(a: &Matrix) -> Result<Matrix> {
    Ok(eigen_sym(a)?.reconstruct_with(|x| x.max(0.0)))
}

/// Nearest point of `{B ⪰ εI}`: `εI + P(A − εI)`.
pub fn psd_project_shifted(a: &Matrix, eps: f64) -> Result<Matrix> {
    if eps == 0.0 {
        return psd_project(a);
    }
    Ok(psd_project(&a.add_identity(-eps))?.add_identity(eps))
}

/// `A = U^t U` and `A = Σ λ_i y_i y_i^t` over the nonzero spectrum.
#[derive(Clone, Debug)]
pub struct PsdFactor {
    pub u: Matrix,
    pub terms: Vec<(f64, Vec<f64>)>,
}

pub fn factor_psd(a: &Matrix) -> Result<PsdFactor> {
    let spec = eigen_sym(a)?;
    let tol = psd_tolerance(a);
    if spec.min() < -tol {
        return Err(Error::NotPsd(spec.min()));
    }
    let n = a.dim();
    let u = Matrix::from_fn(n, |i, j| spec.values[i].max(0.0).sqrt() * spec.vectors.get(j, i));
    let terms = (0..n)
        .filter(|&i| spec.values[i] > tol)
        .map(|i| (spec.values[i], spec.vector(i)))
        .collect();
    Ok(PsdFactor { u, terms })
}
