//! Exact certificate types and their JSON form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::Form;
use crate::gram::SymMat;
use crate::monomials::MonomialOrder;
use crate::rational::{self, Rational};

/// `weight · form^2`, `weight ≥ 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedSquare {
    #[serde(with = "rational::wire")]
    pub weight: Rational,
    pub form: Form,
}

/// A PSD Gram matrix of `f` together with its square decomposition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SosCertificate {
    pub n: usize,
    pub d: usize,
    pub order: MonomialOrder,
    pub gram: SymMat,
    pub squares: Vec<WeightedSquare>,
    /// `gram ⪰ margin·I`.
    #[serde(with = "rational::wire")]
    pub margin: Rational,
}

/// How a point `z` is tied to the parametrized set it must lie on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointWitness {
    /// Leading coordinates are monomials of `x`; the remainder is free.
    Param {
        #[serde(with = "rational::wire_vec")]
        x: Vec<Rational>,
    },
    /// No constraint (level 0 only).
    Free,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualPoint {
    #[serde(with = "rational::wire_vec")]
    pub z: Vec<Rational>,
    pub witness: PointWitness,
    #[serde(with = "rational::wire")]
    pub weight: Rational,
}

/// Weighted points whose moment matrix `M = Σ c z z^t` is orthogonal to the
/// Gram kernel and pairs negatively with every Gram matrix of `f`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualPointCertificate {
    pub n: usize,
    pub d: usize,
    pub order: MonomialOrder,
    pub level: usize,
    pub points: Vec<DualPoint>,
    #[serde(with = "rational::wire")]
    pub gap: Rational,
}

/// One multiplier `p_j`, a form in `Z_0..Z_k` of degree `2r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Multiplier {
    pub j: usize,
    pub p: Form,
}

/// Identity `q_A·(Σ Z_l^2)^r − Σ_j p_j q_j = m_σ^t S m_σ` with `S ⪰ 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelCertificate {
    pub n: usize,
    pub d: usize,
    pub order: MonomialOrder,
    pub level: usize,
    pub lift: u32,
    pub gram_a: SymMat,
    pub multipliers: Vec<Multiplier>,
    pub sos_part: SymMat,
    /// `sos_part ⪰ margin·I`.
    #[serde(with = "rational::wire")]
    pub margin: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Certificate {
    Sos(SosCertificate),
    DualPoint(DualPointCertificate),
    Level(LevelCertificate),
}

impl Certificate {
    /// Whether the certificate proves membership (as opposed to exclusion).
    pub fn is_acceptance(&self) -> bool {
        !matches!(self, Certificate::DualPoint(_))
    }

    pub fn level(&self) -> usize {
        match self {
            Certificate::Sos(_) => 0,
            Certificate::DualPoint(c) => c.level,
            Certificate::Level(c) => c.level,
        }
    }

    pub fn nd(&self) -> (usize, usize) {
        match self {
            Certificate::Sos(c) => (c.n, c.d),
            Certificate::DualPoint(c) => (c.n, c.d),
            Certificate::Level(c) => (c.n, c.d),
        }
    }

    pub fn order(&self) -> MonomialOrder {
        match self {
            Certificate::Sos(c) => c.order,
            Certificate::DualPoint(c) => c.order,
            Certificate::Level(c) => c.order,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("certificates serialize")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl From<SosCertificate> for Certificate {
    fn from(c: SosCertificate) -> Self {
        Certificate::Sos(c)
    }
}

impl From<DualPointCertificate> for Certificate {
    fn from(c: DualPointCertificate) -> Self {
        Certificate::DualPoint(c)
    }
}

impl From<LevelCertificate> for Certificate {
    fn from(c: LevelCertificate) -> Self {
        Certificate::Level(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monomials::MultiIndex;
    use crate::rational::{frac, int};

    #[test]
    fn json_round_trip_preserves_rationals() {
        let g = Form::from_terms(1, 1, [(MultiIndex(vec![1, 0]), frac(2, 3))]).unwrap();
        let cert = Certificate::DualPoint(DualPointCertificate {
            n: 1,
            d: 1,
            order: MonomialOrder::LexDesc,
            level: 0,
            points: vec![
                DualPoint {
                    z: vec![frac(1, 3), int(-2)],
                    witness: PointWitness::Param { x: vec![frac(1, 3), int(-2)] },
                    weight: frac(7, 5),
                },
                DualPoint { z: vec![int(0), int(1)], witness: PointWitness::Free, weight: int(1) },
            ],
            gap: int(-1),
        });
        let text = cert.to_json().to_string();
        assert!(text.contains("\"type\":\"dual_point\""));
        assert!(text.contains("\"7/5\""));
        assert_eq!(Certificate::from_json_str(&text).unwrap(), cert);

        let sos = Certificate::Sos(SosCertificate {
            n: 1,
            d: 1,
            order: MonomialOrder::Example34,
            gram: SymMat::identity(2),
            squares: vec![WeightedSquare { weight: int(1), form: g }],
            margin: frac(1, 2),
        });
        let back = Certificate::from_json(&sos.to_json()).unwrap();
        assert_eq!(back, sos);
        assert_eq!(back.order(), MonomialOrder::Example34);
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(Certificate::from_json_str("{\"type\":\"sos\"}"), Err(Error::Parse(_))));
    }
}
