//! Dykstra alternating projections between an affine subspace and a
//! closed convex cone, on flat coordinate vectors.

use serde::Serialize;

use crate::error::Result;

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub max_iter: usize,
    /// Converged once the affine/cone distance is below `tol · scale`.
    pub tol: f64,
    /// Iterations between acceptance attempts and stall checks.
    pub check_every: usize,
    /// Give up when the best residual has not improved by `stall_ratio`
    /// within this many iterations.
    pub stall_window: usize,
    pub stall_ratio: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { max_iter: 5000, tol: 1e-9, check_every: 20, stall_window: 300, stall_ratio: 0.98 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineStatus {
    Accepted,
    Converged,
    Stalled,
    IterationCap,
}

#[derive(Clone, Debug)]
pub struct EngineRun<T> {
    pub status: EngineStatus,
    pub iterations: usize,
    pub residual: f64,
    pub cone_point: Vec<f64>,
    pub affine_point: Vec<f64>,
    pub accepted: Option<T>,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Runs Dykstra's iteration from `start`. `try_accept` sees each checked
/// cone point with its residual and may end the run with a result.
pub fn dykstra<T>(
    start: &[f64],
    affine: impl Fn(&[f64]) -> Vec<f64>,
    cone: impl Fn(&[f64]) -> Result<Vec<f64>>,
    scale: f64,
    cfg: &EngineConfig,
    mut try_accept: impl FnMut(&[f64], f64) -> Option<T>,
) -> Result<EngineRun<T>> {
    let mut x = affine(start);
    let mut y = x.clone();
    let mut p = vec![0.0; x.len()];
    let mut residual = f64::INFINITY;
    let mut best = f64::INFINITY;
    let mut last_improvement = 0;
    let target = cfg.tol * scale.max(1.0);

    for it in 1..=cfg.max_iter {
        let w: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + b).collect();
        y = cone(&w)?;
        for ((pi, wi), yi) in p.iter_mut().zip(&w).zip(&y) {
            *pi = wi - yi;
        }
        x = affine(&y);
        residual = distance(&x, &y);

        let converged = residual <= target;
        if converged || it % cfg.check_every == 0 {
            if let Some(t) = try_accept(&y, residual) {
                return Ok(EngineRun {
                    status: EngineStatus::Accepted,
                    iterations: it,
                    residual,
                    cone_point: y,
                    affine_point: x,
                    accepted: Some(t),
                });
            }
            if converged {
                return Ok(EngineRun {
                    status: EngineStatus::Converged,
                    iterations: it,
                    residual,
                    cone_point: y,
                    affine_point: x,
                    accepted: None,
                });
            }
            if residual < best * cfg.stall_ratio {
                best = residual;
                last_improvement = it;
            } else if it - last_improvement >= cfg.stall_window {
                return Ok(EngineRun {
                    status: EngineStatus::Stalled,
                    iterations: it,
                    residual,
                    cone_point: y,
                    affine_point: x,
                    accepted: None,
                });
            }
        }
    }
    Ok(EngineRun {
        status: EngineStatus::IterationCap,
        iterations: cfg.max_iter,
        residual,
        cone_point: y,
        affine_point: x,
        accepted: None,
    })
}
