use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_psdlab"));
    c.env_remove("PSDLAB_SEED");
    c
}

fn run(args: &[&str]) -> (i32, Value, Output) {
    let out = bin().args(args).output().expect("binary runs");
    let code = out.status.code().expect("exit code");
    let json = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, json, out)
}

struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("psdlab-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    fn write(&self, name: &str, v: &Value) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
        p
    }

    fn corpus(&self, name: &str) -> PathBuf {
        let (code, json, _) = run(&["corpus", name]);
        assert_eq!(code, 0, "corpus {name}");
        self.write(&format!("{name}.json"), &json)
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn basis_commands() {
    let (code, v, _) = run(&["basis", "-n", "2", "-d", "5", "--order", "example34"]);
    assert_eq!(code, 0);
    let first: Vec<Value> = v["monomials"].as_array().unwrap()[..6].to_vec();
    let want: Vec<Value> = [[5, 0, 0], [4, 1, 0], [3, 2, 0], [2, 3, 0], [1, 4, 0], [0, 5, 0]]
        .iter()
        .map(|a| serde_json::json!(a))
        .collect();
    assert_eq!(first, want);

    let (code, v, _) = run(&["basis", "-n", "1", "-d", "1"]);
    assert_eq!(code, 0);
    assert_eq!(v["monomials"].as_array().unwrap().len(), 2);

    let (code, _, out) = run(&["basis", "-n", "1", "-d", "1", "--order", "revlex"]);
    assert_eq!(code, 64);
    assert!(String::from_utf8_lossy(&out.stderr).contains("order"));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(run(&["basis", "-n", "2"]).0, 64);
    assert_eq!(run(&["frobnicate"]).0, 64);
    assert_eq!(run(&["test", "/nonexistent/form.json"]).0, 64);
    assert_eq!(run(&["corpus", "nonsense"]).0, 64);
}

#[test]
fn filtration_examples() {
    let (code, v, _) = run(&["filtration", "-n", "2", "-d", "5", "--order", "example34"]);
    assert_eq!(code, 0);
    let absent: Vec<u64> = v["raw_steps"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["present"] == false)
        .map(|r| r["coordinate"].as_u64().unwrap())
        .collect();
    assert_eq!(absent, [1, 6]);
    assert_eq!(v["steps"].as_array().unwrap().len(), 18);
    assert_eq!(v["collapse"], 4);
    assert_eq!(v["strict_count"], 13);
    assert_eq!(v["pattern_proven"], false);

    let (_, v, _) = run(&["filtration", "-n", "2", "-d", "5"]);
    let steps = v["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 18);
    // coordinates 1 and 2 are the free linear block of V_0; every later step is present
    let present: Vec<u64> = v["raw_steps"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["present"] == true)
        .map(|r| r["coordinate"].as_u64().unwrap())
        .collect();
    assert_eq!(present, (3..=20).collect::<Vec<u64>>());
    assert_eq!(steps[0]["binomial"], "Z0*Z3 - Z1^2");
    assert_eq!(v["strict_count"], 14);

    let (_, v, _) = run(&["filtration", "-n", "1", "-d", "3"]);
    assert_eq!(v["hilbert_equal"], true);
    assert!(v["relations"].as_array().unwrap().iter().all(|r| r == "equal"));
}

#[test]
fn kernel_and_gram() {
    let (code, v, _) = run(&["kernel", "-n", "2", "-d", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["dimension"], 6);

    let dir = Scratch::new("gram");
    let f = dir.corpus("basis_sos(1,2)");
    let (code, v, _) = run(&["gram", s(&f)]);
    assert_eq!(code, 0);
    // X0^4 + X0^2X1^2 + X1^4 splits its middle term between two entries
    assert_eq!(v["gram"][0][0], "1/1");
    assert_eq!(v["gram"][1][1], "1/2");
    assert_eq!(v["gram"][0][2], "1/4");
}

#[test]
fn motzkin_round_trip_through_verify() {
    let dir = Scratch::new("motzkin");
    let m = dir.corpus("motzkin");
    let (code, v, _) = run(&["test", s(&m), "--mode", "sos"]);
    assert_eq!(code, 1);
    assert_eq!(v["verdict"], "refuted");
    assert_eq!(v["certificate"]["type"], "dual_point");
    let verdict = dir.write("verdict.json", &v);

    let (code, out, _) = run(&["verify", s(&verdict), s(&m)]);
    assert_eq!(code, 0);
    assert_eq!(out["result"]["verdict"], "valid");

    let mut tampered = v["certificate"].clone();
    tampered["points"][0]["weight"] = Value::String("1/1".into());
    let tampered = dir.write("tampered.json", &tampered);
    let (code, out, _) = run(&["verify", s(&tampered), s(&m)]);
    assert_eq!(code, 1);
    assert_eq!(out["result"]["verdict"], "invalid");
    assert!(out["result"]["reason"].as_str().is_some_and(|r| !r.is_empty()));

    let quartic = dir.corpus("basis_sos(2,2)");
    assert_eq!(run(&["verify", s(&verdict), s(&quartic)]).0, 65);
    let junk = dir.write("junk.json", &serde_json::json!({ "type": "sos", "n": 2 }));
    assert_eq!(run(&["verify", s(&junk), s(&m)]).0, 65);
}

#[test]
fn psd_mode_cannot_accept_motzkin() {
    let dir = Scratch::new("psd");
    let m = dir.corpus("motzkin");
    let (code, v, _) = run(&["test", s(&m), "--mode", "psd"]);
    assert_eq!(code, 2);
    let min = v["sample"]["min_value"].as_f64().unwrap();
    assert!(min.abs() < 1e-9);
}

#[test]
fn interior_mode_reports_a_margin() {
    let dir = Scratch::new("interior");
    let f = dir.corpus("basis_sos(2,2)");
    let (code, v, _) = run(&["test", s(&f), "--mode", "interior"]);
    assert_eq!(code, 0);
    assert_eq!(v["margin"], "1/1");

    let (code, v, _) = run(&["test", s(&f), "--mode", "interior", "--eps", "1/2"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["positive_definite"], true);
}

#[test]
fn boundary_and_ci_modes() {
    let dir = Scratch::new("modes");
    let f = dir.corpus("basis_sos(2,2)");
    let (code, v, _) = run(&["test", s(&f), "--mode", "boundary"]);
    assert_eq!(code, 0);
    assert_eq!(v["probe"]["classification"], "interior");

    let (code, v, _) = run(&["test", s(&f), "--mode", "ci", "--level", "1"]);
    assert_eq!(code, 0);
    assert_eq!(v["certificate"]["type"], "level");
    assert_eq!(run(&["test", s(&f), "--mode", "ci", "--level", "99"]).0, 64);
    assert_eq!(run(&["test", s(&f), "--mode", "nonsense"]).0, 64);
}

#[test]
fn report_examples() {
    let (code, v, out) = run(&["report", "-n", "2", "-d", "5", "--json-out", "/dev/null"]);
    assert_eq!(code, 0);
    assert_eq!(v, Value::Null, "report prints text");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("k = 20"));
    assert!(text.contains("Gram kernel dimension 165"));
    assert!(text.contains("strictly separating: 14"));

    let text = String::from_utf8(run(&["report", "-n", "2", "-d", "2"]).2.stdout).unwrap();
    assert!(text.contains("Hilbert case"));

    let dir = Scratch::new("report");
    let path = dir.path("r.json");
    run(&["report", "-n", "2", "-d", "3", "--json-out", s(&path)]);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["strict_count"], 3);
    assert_eq!(v["kernel_dim"], 27);
    assert_eq!(v["pattern"], "C_0=C_1=C_2=C_3⊊C_4⊊C_5⊊C_6⊊C_7");
}

#[test]
fn runs_are_deterministic_apart_from_timing() {
    let dir = Scratch::new("determinism");
    let (f, _) = psdlab::forms::random_sos(3, 2, 2, 4).unwrap();
    let f = dir.write("f.json", &f.to_json());
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("elapsed_ms");
        v
    };
    let (_, a, _) = run(&["test", s(&f), "--seed", "7"]);
    let (_, b, _) = run(&["test", s(&f), "--seed", "7"]);
    assert_eq!(strip(a), strip(b));

    let out = bin().args(["test", s(&f)]).env("PSDLAB_SEED", "11").output().unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["seed"], 11);
}

#[test]
fn exit_codes_hold_across_the_corpus() {
    let dir = Scratch::new("corpus");
    let (_, names, _) = run(&["corpus"]);
    assert!(names["corpus"].as_array().unwrap().len() >= 4);
    for (name, expect) in
        [("motzkin", 1), ("quartic_psd_not_sos", 1), ("basis_sos(2,2)", 0), ("basis_sos(2,3)", 0), ("zero(2,2)", 0)]
    {
        let f = dir.corpus(name);
        let (code, v, _) = run(&["test", s(&f)]);
        assert_eq!(code, expect, "{name}: {v}");
        let verdict = dir.write(&format!("{name}.verdict.json"), &v);
        assert_eq!(run(&["verify", s(&verdict), s(&f)]).0, 0, "{name} certificate re-verifies");
        let (code, _, _) = run(&["sample", s(&f)]);
        assert_eq!(code, 0);
    }
}
