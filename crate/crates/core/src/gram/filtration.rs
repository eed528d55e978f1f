//! Quadric steps of the Veronese filtration, their dedup under non-lex
//! orders, separation patterns and minimal-degree collapse.

use std::collections::BTreeSet;
use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::forms::{classify_hilbert_case, HilbertCase};
use crate::monomials::{MonomialOrder, MultiIndex, OrderedBasis};
use crate::rational::{frac, int};

use super::SymMat;

/// The binomial `q(Z) = Z_0 Z_m − Z_s Z_t` vanishing on the Veronese image,
/// where `m` is the coordinate the step fixes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadricStep {
    pub j: usize,
    pub coordinate: usize,
    pub s: usize,
    pub t: usize,
    pub q: SymMat,
}

impl QuadricStep {
    pub fn binomial(&self) -> String {
        let tail = if self.s == self.t {
            format!("Z{}^2", self.s)
        } else {
            format!("Z{}*Z{}", self.s, self.t)
        };
        format!("Z0*Z{} - {}", self.coordinate, tail)
    }
}

impl Serialize for QuadricStep {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = ser.serialize_struct("QuadricStep", 5)?;
        st.serialize_field("j", &self.j)?;
        st.serialize_field("coordinate", &self.coordinate)?;
        st.serialize_field("s", &self.s)?;
        st.serialize_field("t", &self.t)?;
        st.serialize_field("binomial", &self.binomial())?;
        st.end()
    }
}

fn quadric_matrix(dim: usize, m: usize, s: usize, t: usize) -> SymMat {
    let mut q = SymMat::zeros(dim);
    q.set(0, m, frac(1, 2));
    let v = if s == t { int(-1) } else { frac(-1, 2) };
    q.add_to(s, t, &v);
    q
}

/// Searches the least `s ≥ 1`, then the least `t ≥ s`, with
/// `α_s + α_t = α_0 + α_m`. Absent when no such pair exists.
pub fn quadric_for_coordinate(basis: &OrderedBasis, m: usize) -> Option<(usize, usize)> {
    let k = basis.k();
    if m == 0 || m > k {
        return None;
    }
    let target = basis.get(0) + basis.get(m);
    for s in 1..=k {
        let a_s = basis.get(s);
        // the partner exponent is forced; it must be a nonnegative vector in the basis
        let partner: Option<Vec<u32>> = target
            .exponents()
            .iter()
            .zip(a_s.exponents())
            .map(|(&x, &y)| x.checked_sub(y))
            .collect();
        if let Some(t) = partner.and_then(|p| basis.position(&MultiIndex(p))) {
            if t >= s {
                return Some((s, t));
            }
        }
    }
    None
}

/// The quadric `q_j` for the coordinate `n + j`.
pub fn quadric_step(basis: &OrderedBasis, j: usize) -> Result<Option<QuadricStep>> {
    let (n, k) = (basis.n(), basis.k());
    if j == 0 || j > k - n.min(k) {
        return Err(Error::InvalidParameter(format!("step j={j} outside 1..={}", k.saturating_sub(n))));
    }
    let m = n + j;
    Ok(quadric_for_coordinate(basis, m)
        .map(|(s, t)| QuadricStep { j, coordinate: m, s, t, q: quadric_matrix(basis.len(), m, s, t) }))
}

/// One raw step of the chain: fixing coordinate `coordinate`.
#[derive(Clone, Debug, Serialize)]
pub struct RawStep {
    pub coordinate: usize,
    pub present: bool,
}

/// Relation between consecutive cones in the chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Equal,
    Strict,
    Unknown,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Equal => "=",
            Relation::Strict => "⊊",
            Relation::Unknown => "⊆",
        }
    }
}

/// Relations `C_0 ? C_1 ? … ? C_N` with the count of intermediate cones
/// strictly separating `Σ` from `P` (an upper bound when not proven).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Pattern {
    pub relations: Vec<Relation>,
    pub strict_count: usize,
    pub proven: bool,
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C_0")?;
        for (i, r) in self.relations.iter().enumerate() {
            write!(f, "{}C_{}", r.symbol(), i + 1)?;
        }
        Ok(())
    }
}

/// Proven pattern for the lex order: all equal in a Hilbert case, else
/// equalities up to `C_{n+1}` (`n = 2`) or `C_n` (`n ≥ 3`) and strict after.
pub fn separation_pattern(n: usize, d: usize) -> Result<Pattern> {
    let k = crate::monomials::k_of(n, d)?;
    let top = k - n;
    if classify_hilbert_case(n, 2 * d) == HilbertCase::Equal {
        return Ok(Pattern { relations: vec![Relation::Equal; top], strict_count: 0, proven: true });
    }
    let last_equal = if n == 2 { n + 1 } else { n };
    let relations = (1..=top)
        .map(|i| if i <= last_equal { Relation::Equal } else { Relation::Strict })
        .collect();
    Ok(Pattern { relations, strict_count: top.saturating_sub(last_equal + 1), proven: true })
}

/// The deduped chain `V_0 ⊇ V_1 ⊇ …` for an ordered basis.
#[derive(Clone, Debug)]
pub struct FiltrationDescriptor {
    basis: OrderedBasis,
    raw: Vec<RawStep>,
    steps: Vec<QuadricStep>,
    prefixes: Vec<usize>,
    collapse: Option<usize>,
    pattern: Pattern,
}

impl FiltrationDescriptor {
    pub fn basis(&self) -> &OrderedBasis {
        &self.basis
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn d(&self) -> usize {
        self.basis.d()
    }

    pub fn order(&self) -> MonomialOrder {
        self.basis.order()
    }

    pub fn raw_steps(&self) -> &[RawStep] {
        &self.raw
    }

    /// The present quadrics, numbered `q_1, q_2, …` along the chain.
    pub fn steps(&self) -> &[QuadricStep] {
        &self.steps
    }

    /// Number of varieties `V_0, …, V_top`.
    pub fn variety_count(&self) -> usize {
        self.prefixes.len()
    }

    pub fn top_level(&self) -> usize {
        self.prefixes.len() - 1
    }

    /// Last coordinate fixed to a monomial on `H_i`.
    pub fn prefix(&self, level: usize) -> Result<usize> {
        self.prefixes.get(level).copied().ok_or_else(|| {
            Error::InvalidParameter(format!("level {level} outside 0..={}", self.top_level()))
        })
    }

    pub fn collapse(&self) -> Option<usize> {
        self.collapse
    }

    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }

    /// Quadrics `q_1, …, q_i` defining `V_i`.
    pub fn quadrics_up_to(&self, level: usize) -> &[QuadricStep] {
        &self.steps[..level.min(self.steps.len())]
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n(),
            "d": self.d(),
            "k": self.basis.k(),
            "order": self.order().name(),
            "raw_steps": self.raw,
            "steps": self.steps,
            "varieties": {
                "count": self.variety_count(),
                "prefix": self.prefixes,
            },
            "pattern": self.pattern.to_string(),
            "relations": self.pattern.relations,
            "strict_count": self.pattern.strict_count,
            "pattern_proven": self.pattern.proven,
            "collapse": self.collapse,
        })
    }
}

/// Builds the chain: one raw step per coordinate `1..=k`, absent steps
/// merged into their predecessor.
pub fn filtration(n: usize, d: usize, order: MonomialOrder) -> Result<FiltrationDescriptor> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter("n and d must be at least 1".into()));
    }
    let basis = OrderedBasis::new(n, d, order)?;
    let k = basis.k();
    let mut raw = Vec::with_capacity(k);
    let mut steps = Vec::new();
    for m in 1..=k {
        let found = quadric_for_coordinate(&basis, m);
        raw.push(RawStep { coordinate: m, present: found.is_some() });
        if let Some((s, t)) = found {
            steps.push(QuadricStep {
                j: steps.len() + 1,
                coordinate: m,
                s,
                t,
                q: quadric_matrix(basis.len(), m, s, t),
            });
        }
    }
    let base_prefix = steps.first().map_or(k, |q| q.coordinate - 1);
    let mut prefixes = vec![base_prefix];
    prefixes.extend(steps.iter().map(|q| q.coordinate));

    let mut desc = FiltrationDescriptor {
        basis,
        raw,
        steps,
        prefixes,
        collapse: None,
        pattern: Pattern { relations: Vec::new(), strict_count: 0, proven: true },
    };
    desc.collapse = minimal_degree_collapse(&desc);
    desc.pattern = if order == MonomialOrder::LexDesc {
        separation_pattern(n, d)?
    } else {
        unproven_pattern(&desc)
    };
    Ok(desc)
}

fn unproven_pattern(desc: &FiltrationDescriptor) -> Pattern {
    let top = desc.top_level();
    if classify_hilbert_case(desc.n(), 2 * desc.d()) == HilbertCase::Equal {
        return Pattern { relations: vec![Relation::Equal; top], strict_count: 0, proven: true };
    }
    let c = desc.collapse.unwrap_or(0);
    let relations = (1..=top).map(|i| if i <= c { Relation::Equal } else { Relation::Unknown }).collect();
    Pattern { relations, strict_count: (desc.variety_count()).saturating_sub(2 + c), proven: false }
}

/// The largest level `i ≥ 1` whose fixed coordinates `0..=prefix(i)` are the
/// run `x_a^{D−r} x_b^r`, `r = 0..=R`, of two variables with `R = i + 1`.
/// Then `V_i` is a cone over a rational normal curve of degree `R` in
/// codimension `i`, a variety of minimal degree.
pub fn minimal_degree_collapse(desc: &FiltrationDescriptor) -> Option<usize> {
    let basis = desc.basis();
    let d = basis.d() as u32;
    let mut best = None;
    for i in 1..desc.variety_count() {
        let r_max = desc.prefixes[i];
        if r_max != i + 1 {
            continue;
        }
        let m0 = basis.get(0);
        let Some(a) = m0.support().next() else { continue };
        if m0.exponents()[a] != d {
            continue;
        }
        let m1 = basis.get(1);
        let Some(b) = m1.support().find(|&v| v != a) else { continue };
        let run = (0..=r_max).all(|r| {
            if r as u32 > d {
                return false;
            }
            let mut e = vec![0u32; basis.n() + 1];
            e[a] = d - r as u32;
            e[b] = r as u32;
            *basis.get(r) == MultiIndex(e)
        });
        if run {
            best = Some(i);
        }
    }
    best
}

/// `{α_s + α_t : 0 ≤ s, t ≤ prefix}` for an arbitrary ordered basis.
pub fn a_index_set_for(basis: &OrderedBasis, prefix: usize) -> BTreeSet<MultiIndex> {
    let mut out = BTreeSet::new();
    for s in 0..=prefix.min(basis.k()) {
        for t in s..=prefix.min(basis.k()) {
            out.insert(basis.get(s) + basis.get(t));
        }
    }
    out
}

/// `𝒜_i` for the lex basis: pairwise sums of the first `n + i + 1` exponents.
pub fn a_index_set(n: usize, d: usize, i: usize) -> Result<BTreeSet<MultiIndex>> {
    let basis = OrderedBasis::lex(n, d)?;
    if n + i > basis.k() {
        return Err(Error::InvalidParameter(format!("level {i} outside 0..={}", basis.k() - n)));
    }
    Ok(a_index_set_for(&basis, n + i))
}
