//! Sampling: minimization of a form on the unit sphere, and random points
//! of the parametrized sets `H_i`.

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::certificate::PointWitness;
use crate::error::Result;
use crate::forms::{FloatForm, Form};
use crate::gram::FiltrationDescriptor;
use crate::rational::{frac, int, Rational};

/// Evidence produced by [`psd_sample_test`].
#[derive(Clone, Debug, Serialize)]
pub struct PsdSample {
    pub min_value: f64,
    pub argmin: Vec<f64>,
    /// Distinct local minimizers (up to sign), best first.
    pub minimizers: Vec<(f64, Vec<f64>)>,
    pub grid_min: f64,
    /// `grid_min − L·h` for the grid mesh `h` and gradient bound `L`. A
    /// positive value is a lower bound for `f` on the sphere, up to
    /// rounding, and so evidence of an interior point of the PSD cone.
    pub interior_bound: f64,
}

impl PsdSample {
    pub fn refutes(&self) -> bool {
        self.min_value < -1e-9
    }
}

fn normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

/// Flips `v` so its first entry of non-negligible size is positive.
fn canonical_sign(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-8) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn grid_step(nvars: usize) -> usize {
    // largest g ≤ 8 with (2g+1)^nvars ≤ 20000
    let mut g: usize = 8;
    while g > 1 && (2 * g + 1).pow(nvars as u32) > 20_000 {
        g -= 1;
    }
    g
}

/// Points `v/g` with `v ∈ {−g..g}^{nvars}` on the cube surface, one per sign class.
fn grid_points(nvars: usize, g: usize) -> Vec<Vec<f64>> {
    let side = 2 * g + 1;
    let total = side.pow(nvars as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut c = code;
        let mut v = vec![0i64; nvars];
        for x in v.iter_mut() {
            *x = (c % side) as i64 - g as i64;
            c /= side;
        }
        if v.iter().all(|&x| x.abs() != g as i64) {
            continue;
        }
        if v.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
            continue;
        }
        out.push(v.iter().map(|&x| x as f64 / g as f64).collect());
    }
    out
}

fn descend(f: &FloatForm, start: &[f64], max_iter: usize) -> (f64, Vec<f64>) {
    let mut x = start.to_vec();
    let mut fx = f.eval(&x);
    let mut step = 1.0 / (1.0 + f.abs_coeff_sum());
    for _ in 0..max_iter {
        let g = f.grad(&x);
        let radial: f64 = g.iter().zip(&x).map(|(a, b)| a * b).sum();
        let r: Vec<f64> = g.iter().zip(&x).map(|(a, b)| a - radial * b).collect();
        let rnorm2: f64 = r.iter().map(|v| v * v).sum();
        if rnorm2.sqrt() < 1e-14 * (1.0 + f.abs_coeff_sum()) {
            break;
        }
        let mut accepted = false;
        while step > 1e-18 {
            let mut y: Vec<f64> = x.iter().zip(&r).map(|(a, b)| a - step * b).collect();
            normalize(&mut y);
            let fy = f.eval(&y);
            if fy <= fx - 1e-4 * step * rnorm2 {
                x = y;
                fx = fy;
                accepted = true;
                step *= 2.0;
                break;
            }
            step /= 2.0;
        }
        if !accepted {
            break;
        }
    }
    (fx, x)
}

/// Multistart projected-gradient minimization of `f` on the unit sphere,
/// seeded from a deterministic grid and from random directions.
///
/// A value below `−1e−9` refutes nonnegativity; nothing here accepts.
pub fn psd_sample_test(f: &Form, seed: u64, starts: usize) -> PsdSample {
    let ff = f.to_float();
    let nvars = f.nvars();
    let g = grid_step(nvars);
    let grid = grid_points(nvars, g);
    let mut scored: Vec<(f64, Vec<f64>)> = grid
        .into_iter()
        .map(|mut v| {
            normalize(&mut v);
            (ff.eval(&v), v)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let grid_min = scored.first().map_or(f64::INFINITY, |p| p.0);

    let starts = starts.max(1);
    let from_grid = starts.div_ceil(2);
    let mut seeds: Vec<Vec<f64>> = scored.iter().take(from_grid).map(|p| p.1.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while seeds.len() < starts {
        let mut v: Vec<f64> = (0..nvars).map(|_| rng.sample(StandardNormal)).collect();
        if normalize(&mut v) {
            seeds.push(v);
        }
    }

    let mut minimizers: Vec<(f64, Vec<f64>)> = Vec::new();
    for s in &seeds {
        let (val, mut x) = descend(&ff, s, 5000);
        canonical_sign(&mut x);
        let near = minimizers.iter_mut().find(|(_, y)| {
            y.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() < 1e-6
        });
        match near {
            Some(entry) => {
                if val < entry.0 {
                    *entry = (val, x);
                }
            }
            None => minimizers.push((val, x)),
        }
    }
    minimizers.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut min_value, mut argmin) = minimizers[0].clone();
    if grid_min < min_value {
        min_value = grid_min;
        argmin = scored[0].1.clone();
    }

    // every unit vector lies within √(nvars−1)/g of a normalized grid point
    let mesh = ((nvars - 1) as f64).sqrt() / g as f64;
    let lipschitz = f.deg() as f64 * ff.abs_coeff_sum();
    PsdSample { min_value, argmin, minimizers, grid_min, interior_bound: grid_min - lipschitz * mesh }
}

/// A sampled point of `H_i` (or an arbitrary point at level 0).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplePoint {
    pub z: Vec<Rational>,
    pub witness: PointWitness,
}

fn random_small_rational(rng: &mut ChaCha8Rng) -> Rational {
    frac(rng.random_range(-8i64..=8), rng.random_range(1i64..=8))
}

fn rounded_gaussian(rng: &mut ChaCha8Rng) -> Rational {
    let v: f64 = rng.sample(StandardNormal);
    frac((v * 8.0).round() as i64, 8)
}

/// Rescales by a power of two so the largest entry lies in `[1, 2)`.
fn dyadic_normalize(x: &mut [Rational]) {
    let Some(max) = x.iter().map(|v| v.abs()).max() else { return };
    if max.is_zero() {
        return;
    }
    let two = int(2);
    let mut scale = int(1);
    let mut m = max;
    while m >= two {
        m /= &two;
        scale /= &two;
    }
    while m < int(1) {
        m *= &two;
        scale *= &two;
    }
    x.iter_mut().for_each(|v| *v *= &scale);
}

fn random_parameter(rng: &mut ChaCha8Rng, nvars: usize, family: usize) -> Vec<Rational> {
    loop {
        let mut x: Vec<Rational> = match family {
            0 => (0..nvars).map(|_| rounded_gaussian(rng)).collect(),
            1 => (0..nvars)
                .map(|_| if rng.random_bool(0.5) { rounded_gaussian(rng) } else { Rational::zero() })
                .collect(),
            _ => (0..nvars).map(|_| if rng.random_bool(0.5) { int(1) } else { int(-1) }).collect(),
        };
        if x.iter().any(|v| !v.is_zero()) {
            dyadic_normalize(&mut x);
            return x;
        }
    }
}

/// `count` exact points of `H_level`: coordinates `0..=prefix(level)` are
/// monomials of a random rational `x`, the remainder free random
/// rationals. At level 0 every fourth point is entirely free.
pub fn hi_sample(desc: &FiltrationDescriptor, level: usize, seed: u64, count: usize) -> Result<Vec<SamplePoint>> {
    let prefix = desc.prefix(level)?;
    let basis = desc.basis();
    let nvars = desc.n() + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((level as u64) << 32));
    let mut out = Vec::with_capacity(count);
    for r in 0..count {
        if level == 0 && r % 4 == 3 {
            let z = (0..basis.len()).map(|_| random_small_rational(&mut rng)).collect();
            out.push(SamplePoint { z, witness: PointWitness::Free });
            continue;
        }
        let x = random_parameter(&mut rng, nvars, r % 3);
        let mut z = basis.veronese_exact(&x);
        for zl in z.iter_mut().skip(prefix + 1) {
            *zl = random_small_rational(&mut rng);
        }
        out.push(SamplePoint { z, witness: PointWitness::Param { x } });
    }
    Ok(out)
}
