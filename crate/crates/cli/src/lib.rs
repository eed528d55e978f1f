//! Batch commands behind the `psdlab` binary. Each command returns a JSON
//! document and an exit code; `main` only parses arguments and prints.

use std::path::Path;
use std::time::Instant;

use serde_json::{json, Value};

use psdlab::forms::{classify_hilbert_case, corpus_by_name, HilbertCase};
use psdlab::gram::{a_index_set_for, canonical_gram, filtration, kernel_elements, PairClasses};
use psdlab::membership::{
    boundary_probe, ci_inner_certify, ci_refute, interior_sigma_test, psd_sample_test, single_point_certificate,
    sos_test, verify_certificate, Certificate, Classification, LiftOutcome, Options, SosOutcome, Verdict,
};
use psdlab::monomials::k_of;
use psdlab::rational::{self, Rational};
use psdlab::{Error, Form, MonomialOrder, OrderedBasis};

/// Successful acceptance.
pub const EXIT_ACCEPTED: u8 = 0;
/// Refutation with a certificate, or an invalid certificate in `verify`.
pub const EXIT_REFUTED: u8 = 1;
pub const EXIT_UNKNOWN: u8 = 2;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_DATA: u8 = 65;
pub const EXIT_SOFTWARE: u8 = 70;

/// The JSON document a command produced and the process exit code.
#[derive(Debug)]
pub struct CmdOutput {
    pub json: Value,
    pub exit: u8,
    /// Plain-text rendering for commands meant to be read by people.
    pub text: Option<String>,
}

impl CmdOutput {
    fn ok(json: Value) -> Self {
        CmdOutput { json, exit: EXIT_ACCEPTED, text: None }
    }
}

/// A failed command: the exit code and a message for stderr.
#[derive(Debug)]
pub struct CmdError {
    pub exit: u8,
    pub message: String,
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        let exit = match &e {
            Error::InvalidParameter(_) | Error::UnknownOrder(_) | Error::UnknownCorpus(_) => EXIT_USAGE,
            Error::Parse(_) | Error::Structural(_) | Error::DimensionMismatch { .. } | Error::DegreeMismatch { .. } => {
                EXIT_DATA
            }
            _ => EXIT_SOFTWARE,
        };
        CmdError { exit, message: e.to_string() }
    }
}

pub type CmdResult = std::result::Result<CmdOutput, CmdError>;

/// Settings shared by the membership commands.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub seed: u64,
    pub order: MonomialOrder,
    pub level: usize,
    pub lift: u32,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
}

impl RunConfig {
    fn options(&self) -> Options {
        let mut opts = Options { order: self.order, lift: self.lift, ..Options::with_seed(self.seed) };
        if let Some(m) = self.max_iter {
            opts.engine.max_iter = m;
        }
        if let Some(t) = self.tol {
            opts.engine.tol = t;
        }
        opts
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Sos,
    Psd,
    Ci,
    Interior,
    Boundary,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sos" => Ok(Mode::Sos),
            "psd" => Ok(Mode::Psd),
            "ci" => Ok(Mode::Ci),
            "interior" => Ok(Mode::Interior),
            "boundary" => Ok(Mode::Boundary),
            other => Err(format!("unknown mode `{other}` (expected sos, psd, ci, interior or boundary)")),
        }
    }
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Sos => "sos",
            Mode::Psd => "psd",
            Mode::Ci => "ci",
            Mode::Interior => "interior",
            Mode::Boundary => "boundary",
        }
    }
}

fn read_json(path: &Path) -> std::result::Result<Value, CmdError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CmdError { exit: EXIT_USAGE, message: format!("cannot read {}: {e}", path.display()) })?;
    serde_json::from_str(&text)
        .map_err(|e| CmdError { exit: EXIT_DATA, message: format!("{} is not valid JSON: {e}", path.display()) })
}

pub fn read_form(path: &Path) -> std::result::Result<Form, CmdError> {
    Ok(Form::from_json(&read_json(path)?)?)
}

fn half_degree(f: &Form) -> std::result::Result<usize, CmdError> {
    if f.deg() == 0 || f.deg() % 2 == 1 {
        return Err(Error::InvalidParameter(format!("need a form of positive even degree, got {}", f.deg())).into());
    }
    Ok(f.deg() as usize / 2)
}

pub fn cmd_basis(n: usize, d: usize, order: MonomialOrder) -> CmdResult {
    let b = OrderedBasis::new(n, d, order)?;
    Ok(CmdOutput::ok(json!({
        "n": n,
        "d": d,
        "k": b.k(),
        "order": order.name(),
        "monomials": b.entries(),
    })))
}

pub fn cmd_filtration(n: usize, d: usize, order: MonomialOrder) -> CmdResult {
    let desc = filtration(n, d, order)?;
    let mut v = desc.to_json();
    v["hilbert_equal"] = json!(classify_hilbert_case(n, 2 * d) == HilbertCase::Equal);
    Ok(CmdOutput::ok(v))
}

fn wire_rows(rows: Vec<Vec<Rational>>) -> Value {
    rows.iter().map(|r| r.iter().map(rational::to_wire).collect::<Vec<_>>()).collect()
}

/// The canonical (equal-split) Gram matrix of a form.
pub fn cmd_gram(form: &Form, order: MonomialOrder) -> CmdResult {
    let d = half_degree(form)?;
    let basis = OrderedBasis::new(form.n(), d, order)?;
    let g = canonical_gram(form, &basis)?;
    Ok(CmdOutput::ok(json!({
        "n": form.n(),
        "d": d,
        "order": order.name(),
        "basis": basis.entries(),
        "gram": wire_rows(g.rows()),
    })))
}

pub fn cmd_kernel(n: usize, d: usize, order: MonomialOrder) -> CmdResult {
    let basis = OrderedBasis::new(n, d, order)?;
    let classes = PairClasses::new(&basis);
    let elems: Vec<Value> = kernel_elements(&classes)
        .iter()
        .map(|e| {
            json!({
                "monomial": classes.classes()[e.class].beta,
                "pivot": [e.pivot.0, e.pivot.1],
                "other": [e.other.0, e.other.1],
            })
        })
        .collect();
    Ok(CmdOutput::ok(json!({
        "n": n,
        "d": d,
        "order": order.name(),
        "dimension": elems.len(),
        "elements": elems,
    })))
}

fn verdict_doc(mode: Mode, level: usize, verdict: &str, body: Value) -> Value {
    let mut v = json!({ "command": "test", "mode": mode.name(), "level": level, "verdict": verdict });
    if let (Some(obj), Value::Object(extra)) = (v.as_object_mut(), body) {
        obj.extend(extra);
    }
    v
}

fn exit_for(verdict: &str) -> u8 {
    match verdict {
        "accepted" => EXIT_ACCEPTED,
        "refuted" => EXIT_REFUTED,
        _ => EXIT_UNKNOWN,
    }
}

/// Runs one membership test. `eps` switches `interior` to the fixed-margin test.
pub fn cmd_test(form: &Form, mode: Mode, eps: Option<&Rational>, cfg: &RunConfig) -> CmdResult {
    let start = Instant::now();
    let d = half_degree(form)?;
    let opts = cfg.options();
    let desc = filtration(form.n(), d, cfg.order)?;
    let level = if matches!(mode, Mode::Sos | Mode::Interior) { 0 } else { cfg.level };
    desc.prefix(level)?;

    let (verdict, body) = match mode {
        Mode::Sos => sos_verdict(sos_test(form, &opts)?),
        Mode::Psd => {
            let s = psd_sample_test(form, opts.seed, opts.starts);
            let mut cert = None;
            if s.refutes() {
                for cap in [1_000, 1_000_000, opts.max_den] {
                    let x: Vec<Rational> = s.argmin.iter().map(|v| rational::rationalize(*v, cap)).collect();
                    cert = single_point_certificate(form, &desc, desc.top_level(), &x)?;
                    if cert.is_some() {
                        break;
                    }
                }
            }
            match cert {
                Some(c) => ("refuted", json!({ "certificate": Certificate::from(c), "sample": s })),
                None => ("unknown", json!({ "sample": s, "reason": "sampling can refute but never accept" })),
            }
        }
        Mode::Ci => {
            if level == 0 {
                sos_verdict(sos_test(form, &opts)?)
            } else {
                match ci_inner_certify(form, level, cfg.lift.max(1), &opts)? {
                    LiftOutcome::Certified(c) => ("accepted", json!({ "certificate": Certificate::from(c) })),
                    LiftOutcome::Unknown(diag) => match ci_refute(form, level, &opts)? {
                        Some(c) => ("refuted", json!({ "certificate": Certificate::from(c) })),
                        None => ("unknown", json!({ "diagnostics": diag })),
                    },
                }
            }
        }
        Mode::Interior => match eps {
            Some(e) => {
                let r = interior_sigma_test(form, e, &opts)?;
                let verdict = if r.interior { "accepted" } else { "unknown" };
                (verdict, json!({ "eps": rational::to_wire(e), "result": r }))
            }
            None => match sos_test(form, &opts)? {
                SosOutcome::Accepted(c) if c.margin > rational::int(0) => {
                    let margin = rational::to_wire(&c.margin);
                    ("accepted", json!({ "margin": margin, "certificate": Certificate::from(c) }))
                }
                SosOutcome::Accepted(c) => (
                    "unknown",
                    json!({ "reason": "only a singular Gram matrix was found", "certificate": Certificate::from(c) }),
                ),
                SosOutcome::Refuted(c) => ("refuted", json!({ "certificate": Certificate::from(c) })),
                SosOutcome::Unknown(diag) => ("unknown", json!({ "diagnostics": diag })),
            },
        },
        Mode::Boundary => {
            let r = boundary_probe(form, level, None, &opts)?;
            let verdict = match r.classification {
                Classification::Interior => "accepted",
                Classification::Exterior => "refuted",
                _ => "unknown",
            };
            (verdict, json!({ "probe": r }))
        }
    };
    let mut doc = verdict_doc(mode, level, verdict, body);
    doc["seed"] = json!(cfg.seed);
    doc["elapsed_ms"] = json!(start.elapsed().as_millis() as u64);
    Ok(CmdOutput { json: doc, exit: exit_for(verdict), text: None })
}

fn sos_verdict(out: SosOutcome) -> (&'static str, Value) {
    match out {
        SosOutcome::Accepted(c) => ("accepted", json!({ "certificate": Certificate::from(c) })),
        SosOutcome::Refuted(c) => ("refuted", json!({ "certificate": Certificate::from(c) })),
        SosOutcome::Unknown(diag) => ("unknown", json!({ "diagnostics": diag })),
    }
}

/// Re-checks a certificate against a form with the independent checker.
/// The certificate file may be a bare certificate or a `test` verdict
/// document embedding one.
pub fn cmd_verify(cert_path: &Path, form: &Form) -> CmdResult {
    let raw = read_json(cert_path)?;
    let inner = raw.get("certificate").cloned().unwrap_or(raw);
    let cert: Certificate = serde_json::from_value(inner)
        .map_err(|e| CmdError { exit: EXIT_DATA, message: format!("not a certificate: {e}") })?;
    let (n, d, order) = match &cert {
        Certificate::Sos(c) => (c.n, c.d, c.order),
        Certificate::DualPoint(c) => (c.n, c.d, c.order),
        Certificate::Level(c) => (c.n, c.d, c.order),
    };
    if n != form.n() || 2 * d != form.deg() as usize {
        return Err(CmdError {
            exit: EXIT_DATA,
            message: format!("certificate is for (n,d)=({n},{d}), form has n={} and degree {}", form.n(), form.deg()),
        });
    }
    let desc = filtration(n, d, order)?;
    let v = verify_certificate(&cert, form, &desc)?;
    let exit = if v == Verdict::Valid { EXIT_ACCEPTED } else { EXIT_REFUTED };
    Ok(CmdOutput { json: json!({ "command": "verify", "result": v }), exit, text: None })
}

/// Dimensions, kernel size, separation pattern and `𝒜_i` sizes for `(n, d)`.
pub fn cmd_report(n: usize, d: usize, order: MonomialOrder) -> CmdResult {
    let desc = filtration(n, d, order)?;
    let k = k_of(n, d)?;
    let full = (k + 1) * (k + 2) / 2;
    let forms = OrderedBasis::new(n, 2 * d, order)?.len();
    let kernel = kernel_elements(&PairClasses::new(desc.basis())).len();
    let hilbert = classify_hilbert_case(n, 2 * d) == HilbertCase::Equal;
    let a_sizes: Vec<usize> = (0..=desc.top_level())
        .map(|i| a_index_set_for(desc.basis(), desc.prefix(i).expect("level in range")).len())
        .collect();
    let pattern = desc.pattern();

    let mut text = format!("forms in {} variables of degree {}\n", n + 1, 2 * d);
    if hilbert {
        text.push_str("Hilbert case: every nonnegative form is a sum of squares, all cones coincide\n");
    }
    text.push_str(&format!("k = {k}, basis size {}, order {}\n", k + 1, order.name()));
    text.push_str(&format!(
        "symmetric matrices {full}, forms {forms}, Gram kernel dimension {kernel}\n"
    ));
    text.push_str(&format!("varieties {}, pattern {pattern}\n", desc.variety_count()));
    let strict_word = if pattern.proven { "strictly separating" } else { "at most" };
    text.push_str(&format!("{strict_word}: {} intermediate cones\n", pattern.strict_count));
    if let Some(c) = desc.collapse() {
        text.push_str(&format!("minimal-degree collapse at level {c}\n"));
    }
    text.push_str(&format!("index set sizes by level: {a_sizes:?}\n"));

    let json = json!({
        "n": n,
        "d": d,
        "k": k,
        "order": order.name(),
        "hilbert_equal": hilbert,
        "symmetric_dim": full,
        "form_dim": forms,
        "kernel_dim": kernel,
        "varieties": desc.variety_count(),
        "pattern": pattern.to_string(),
        "strict_count": pattern.strict_count,
        "pattern_proven": pattern.proven,
        "collapse": desc.collapse(),
        "index_set_sizes": a_sizes,
    });
    Ok(CmdOutput { json, exit: EXIT_ACCEPTED, text: Some(text) })
}

pub const CORPUS_NAMES: &[&str] = &["motzkin", "quartic_psd_not_sos", "basis_sos(n,d)", "zero(n,d)"];

/// A named fixture as a form file, or the list of names.
pub fn cmd_corpus(name: Option<&str>) -> CmdResult {
    match name {
        None => Ok(CmdOutput::ok(json!({ "corpus": CORPUS_NAMES }))),
        Some(name) => Ok(CmdOutput::ok(corpus_by_name(name)?.to_json())),
    }
}

/// Sphere minimization evidence for a form.
pub fn cmd_sample(form: &Form, seed: u64, starts: usize) -> CmdResult {
    let s = psd_sample_test(form, seed, starts);
    Ok(CmdOutput::ok(json!({ "command": "sample", "seed": seed, "refutes": s.refutes(), "sample": s })))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_sysexits() {
        assert_eq!(CmdError::from(Error::UnknownOrder("x".into())).exit, EXIT_USAGE);
        assert_eq!(CmdError::from(Error::Structural("x".into())).exit, EXIT_DATA);
        assert_eq!(CmdError::from(Error::NotPsd(-1.0)).exit, EXIT_SOFTWARE);
    }

    #[test]
    fn modes_parse_by_name() {
        for m in [Mode::Sos, Mode::Psd, Mode::Ci, Mode::Interior, Mode::Boundary] {
            assert_eq!(m.name().parse::<Mode>().unwrap(), m);
        }
        assert!("lex".parse::<Mode>().is_err());
    }

    #[test]
    fn report_counts_match_the_kernel_formula() {
        let out = cmd_report(2, 3, MonomialOrder::LexDesc).unwrap();
        let j = &out.json;
        let full = j["symmetric_dim"].as_u64().unwrap();
        let forms = j["form_dim"].as_u64().unwrap();
        assert_eq!((full, forms), (55, 28));
        assert_eq!(j["kernel_dim"].as_u64().unwrap(), full - forms);
        assert!(out.text.unwrap().contains("strictly separating: 3"));
    }

    #[test]
    fn odd_degree_forms_are_usage_errors() {
        let f = Form::zero(2, 3);
        let cfg = RunConfig { seed: 0, order: MonomialOrder::LexDesc, level: 0, lift: 1, max_iter: None, tol: None };
        assert_eq!(cmd_test(&f, Mode::Sos, None, &cfg).unwrap_err().exit, EXIT_USAGE);
        assert_eq!(cmd_gram(&f, MonomialOrder::LexDesc).unwrap_err().exit, EXIT_USAGE);
    }
}
