//! Certificate-producing membership tests for the cones `C_i`, the
//! sampling and moment utilities they rely on, and an independent checker.
//!
//! Every certificate leaving this module has been re-verified in exact
//! rational arithmetic. Floating point is only used to search for them.

mod barrier;
mod certificate;
mod checker;
pub mod engine;
mod lifted;
mod moment;
mod probe;
mod refute;
mod sample;
mod sos;

pub use certificate::{
    Certificate, DualPoint, DualPointCertificate, LevelCertificate, Multiplier, PointWitness, SosCertificate,
    WeightedSquare,
};
pub use checker::{verify_certificate, Verdict};
pub use engine::{EngineConfig, EngineStatus};
pub use lifted::{ci_inner_certify, ci_inner_certify_with, lifted_basis, LiftOptions, LiftOutcome};
pub use moment::{hankel_from_y, moment_from_points, riesz_apply, MomentMatrix};
pub use probe::{boundary_probe, Classification, ProbeReport};
pub use refute::{ci_refute, single_point_certificate};
pub use sample::{hi_sample, psd_sample_test, PsdSample, SamplePoint};
pub use sos::{interior_sigma_test, sos_certificate_from_gram, sos_test, InteriorResult};

use serde::Serialize;

use crate::monomials::MonomialOrder;

/// Knobs shared by the search routines. All randomness derives from `seed`.
#[derive(Clone, Debug)]
pub struct Options {
    pub seed: u64,
    pub order: MonomialOrder,
    pub engine: EngineConfig,
    /// Largest denominator tried when rationalizing a float solution.
    pub max_den: u64,
    /// Number of sampled points offered to the refutation LP.
    pub pool_size: usize,
    /// Multistart count for the sphere minimization.
    pub starts: usize,
    /// Degree lift `r` for level certificates.
    pub lift: u32,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            seed: 0,
            order: MonomialOrder::LexDesc,
            engine: EngineConfig::default(),
            max_den: 1_000_000_000,
            pool_size: 200,
            starts: 16,
            lift: 1,
        }
    }
}

impl Options {
    pub fn with_seed(seed: u64) -> Self {
        Options { seed, ..Options::default() }
    }
}

/// Why a search ended without a certificate.
#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    pub status: EngineStatus,
    pub residual: f64,
    pub iterations: usize,
    pub shifts_tried: Vec<f64>,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub enum SosOutcome {
    Accepted(SosCertificate),
    Refuted(DualPointCertificate),
    Unknown(Diagnostics),
}

impl SosOutcome {
    pub fn is_accepted(&self) -> bool {
        matches!(self, SosOutcome::Accepted(_))
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, SosOutcome::Refuted(_))
    }
}

/// Denominator caps tried in order when turning floats into rationals.
pub(crate) fn denominator_caps(max_den: u64) -> Vec<u64> {
    let mut caps = Vec::new();
    let mut c = 1u64;
    while c <= max_den {
        caps.push(c);
        match c.checked_mul(10) {
            Some(next) => c = next,
            None => break,
        }
    }
    caps
}
