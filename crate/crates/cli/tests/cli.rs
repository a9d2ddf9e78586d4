use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pliable"))
}

struct Run {
    code: i32,
    out: Value,
}

fn run(dir: &Path, args: &[&str]) -> Run {
    let o = bin().current_dir(dir).args(args).output().unwrap();
    let text = String::from_utf8_lossy(&o.stdout);
    Run {
        code: o.status.code().unwrap(),
        out: serde_json::from_str(&text).unwrap_or(Value::Null),
    }
}

fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn gen(dir: &Path, name: &str, args: &[&str]) {
    let mut a = vec!["gen"];
    a.extend_from_slice(args);
    a.extend_from_slice(&["-o", name]);
    assert_eq!(run(dir, &a).code, 0, "gen {args:?}");
}

fn copies_of_k2(n: usize) -> Value {
    let mut dom = Vec::new();
    let mut vals = Vec::new();
    for i in 0..n {
        let (a, b) = (format!("{i}a"), format!("{i}b"));
        vals.push(json!({"tuple": [a, b], "value": "1/1"}));
        vals.push(json!({"tuple": [b, a], "value": "1/1"}));
        dom.push(a);
        dom.push(b);
    }
    json!({"signature": [{"name": "e", "arity": 2}], "domain": dom, "values": {"e": vals}})
}

#[test]
fn solve_k3_k2() {
    let d = tempfile::tempdir().unwrap();
    gen(d.path(), "k3.json", &["clique", "--n", "3"]);
    gen(d.path(), "k2.json", &["clique", "--n", "2"]);
    let r = run(d.path(), &["solve", "--exact", "k3.json", "k2.json"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.out["value"], "4/1");
    assert_eq!(r.out["witness"].as_object().unwrap().len(), 3);
    let r2 = run(d.path(), &["solve", "k3.json", "k2.json"]);
    assert_eq!(r2.out["value"], "4/1");
}

#[test]
fn overcast_certificate_and_witness() {
    let d = tempfile::tempdir().unwrap();
    gen(d.path(), "k3.json", &["clique", "--n", "3"]);
    write(d.path(), "3k2.json", &copies_of_k2(3));
    // some overcast exists one way, the other way is refuted
    let fw = run(d.path(), &["overcast", "k3.json", "3k2.json"]);
    assert_eq!(fw.code, 0);
    let bw = run(d.path(), &["overcast", "3k2.json", "k3.json"]);
    assert_eq!(bw.code, 0);
    let sides = [fw.out["exists"].as_bool().unwrap(), bw.out["exists"].as_bool().unwrap()];
    assert!(sides.contains(&false) || sides == [true, true]);
    // every emitted overcast re-verifies when fed back
    for (r, a, b) in [(&fw, "k3.json", "3k2.json"), (&bw, "3k2.json", "k3.json")] {
        if r.out["exists"] == true {
            write(d.path(), "w.json", &r.out["overcast"]);
            let v = run(d.path(), &["overcast", a, b, "--verify", "w.json"]);
            assert_eq!(v.code, 0);
            assert_eq!(v.out["verification"]["holds"], true);
        } else {
            let c = &r.out["certificate"];
            assert!(c["opt_a"].as_str().is_some() && c["opt_b_scaled"].as_str().is_some());
        }
    }
}

#[test]
fn failing_verification_exits_4() {
    let d = tempfile::tempdir().unwrap();
    gen(d.path(), "k2.json", &["clique", "--n", "2"]);
    gen(d.path(), "k3.json", &["clique", "--n", "3"]);
    // K2 → K3 by one fixed edge misses four of the six arcs
    let w = json!([{"map": {"0": "0", "1": "1"}, "prob": "1/1"}]);
    write(d.path(), "w.json", &w);
    let r = run(d.path(), &["overcast", "k2.json", "k3.json", "--verify", "w.json"]);
    assert_eq!(r.code, 4);
    assert_eq!(r.out["verification"]["holds"], false);
}

#[test]
fn usage_and_cap_codes() {
    let d = tempfile::tempdir().unwrap();
    gen(d.path(), "k3.json", &["clique", "--n", "3"]);
    assert_eq!(run(d.path(), &["solve", "missing.json", "k3.json"]).code, 2);
    assert_eq!(run(d.path(), &["solve", "--nope", "k3.json", "k3.json"]).code, 2);
    assert_eq!(run(d.path(), &["frobnicate"]).code, 2);
    assert_eq!(run(d.path(), &[]).code, 2);
    write(d.path(), "bad.json", &json!({"signature": []}));
    assert_eq!(run(d.path(), &["solve", "bad.json", "k3.json"]).code, 2);
    assert_eq!(run(d.path(), &["overcast", "--cap", "3", "k3.json", "k3.json"]).code, 3);
}

#[test]
fn deterministic_reports() {
    let d = tempfile::tempdir().unwrap();
    gen(d.path(), "g.json", &["gnp", "--n", "8", "--p", "1/2", "--seed", "5"]);
    gen(d.path(), "g2.json", &["gnp", "--n", "8", "--p", "1/2", "--seed", "5"]);
    let a = std::fs::read(d.path().join("g.json")).unwrap();
    let b = std::fs::read(d.path().join("g2.json")).unwrap();
    assert_eq!(a, b);
    gen(d.path(), "k2.json", &["clique", "--n", "2"]);
    let x = bin().current_dir(d.path()).args(["relax", "--level", "2", "g.json", "k2.json"]).output().unwrap();
    let y = bin().current_dir(d.path()).args(["relax", "--level", "2", "g.json", "k2.json"]).output().unwrap();
    assert_eq!(x.stdout, y.stdout);
    assert!(!x.stdout.is_empty());
}

#[test]
fn relax_gap_on_triangle() {
    let d = tempfile::tempdir().unwrap();
    gen(d.path(), "k3.json", &["clique", "--n", "3"]);
    gen(d.path(), "k2.json", &["clique", "--n", "2"]);
    let r = run(d.path(), &["relax", "--level", "2", "k3.json", "k2.json"]);
    assert_eq!((r.out["sa_value"].clone(), r.out["gap"].clone()), (json!("6/1"), json!("2/1")));
    let r = run(d.path(), &["relax", "--level", "3", "k3.json", "k2.json"]);
    assert_eq!(r.out["gap"], "0/1");
}

#[test]
fn modulator_pliable_and_ptas_pipeline() {
    let d = tempfile::tempdir().unwrap();
    gen(d.path(), "grid.json", &["grid", "--d", "2", "--n", "3"]);
    gen(d.path(), "k2.json", &["clique", "--n", "2"]);
    let m = run(d.path(), &["modulator", "grid.json", "--family", "baker", "--layers", "3"]);
    assert_eq!(m.code, 0);
    assert_eq!(m.out["thinness"], "1/3");
    write(d.path(), "mod.json", &m.out["modulator"]);
    let w = run(d.path(), &["pliable-approx", "grid.json", "--modulator", "mod.json"]);
    assert_eq!(w.code, 0);
    assert_eq!(w.out["factor"], "1/3");
    write(d.path(), "bundle.json", &w.out);
    let v = run(d.path(), &["ptas", "--eps", "2", "--mode", "value", "grid.json", "k2.json", "bundle.json"]);
    assert_eq!(v.code, 0);
    assert_eq!(v.out["upper"], "24/1");
    // weaker claimed epsilon than the witness supports
    let bad = run(d.path(), &["ptas", "--eps", "1", "--mode", "value", "grid.json", "k2.json", "bundle.json"]);
    assert_eq!(bad.code, 4);
    let c = run(d.path(), &["ptas", "--eps", "1", "--mode", "construct", "grid.json", "k2.json", "mod.json"]);
    assert_eq!(c.code, 0);
    assert_eq!(c.out["lower"], "24/1");
    let slab = run(d.path(), &["modulator", "--family", "grid", "--layers", "4", "--sides", "4,4"]);
    assert_eq!(slab.code, 0);
    assert_eq!(slab.out["bound_holds"], true);
}

#[test]
fn reduce_commands() {
    let d = tempfile::tempdir().unwrap();
    gen(d.path(), "p3.json", &["path", "--n", "3"]);
    let r = run(d.path(), &["reduce", "p3.json", "--eps", "1/2"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.out["verified"], true);
    let r = run(d.path(), &["reduce", "p3.json", "--from", "cc", "--eps", "1/2"]);
    assert_eq!(r.out["verified"], true);
    let r = run(d.path(), &["reduce", "p3.json", "--target", "pack", "--element", "1"]);
    assert_eq!(r.out["round_trip"], true);
}

#[test]
fn dense_commands() {
    let d = tempfile::tempdir().unwrap();
    gen(d.path(), "k6.json", &["clique", "--n", "6"]);
    gen(d.path(), "m.json", &["matching", "--k", "3", "--graph"]);
    let parts = json!({"parts": [["0", "1"], ["2", "3"], ["4", "5"]]});
    write(d.path(), "p.json", &parts);
    let r = run(d.path(), &["dense", "approx", "k6.json", "--partition", "p.json", "--eps", "1/2"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.out["certified"], true);
    let r = run(d.path(), &["dense", "approx", "m.json", "--partition", "p.json", "--eps", "1/2"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.out["certified"], false);
    assert!(!r.out["reasons"].as_array().unwrap().is_empty());
    let r = run(d.path(), &["dense", "quotient", "k6.json", "--partition", "p.json"]);
    assert_eq!(r.out["quotient"]["domain"].as_array().unwrap().len(), 3);
    let r = run(d.path(), &["dense", "counting", "k6.json", "--partition", "p.json", "--pairs", "0-1,1-2"]);
    assert_eq!((r.code, r.out["sum"].clone()), (0, json!("8/1")));
    let r = run(d.path(), &["dense", "extension", "k6.json", "--partition", "p.json", "--pairs", "0-1", "--ab", "0-1"]);
    assert_eq!(r.out["holds"], true);
    let r = run(d.path(), &["dense", "homogeneity", "k6.json", "--v1", "0,1,2", "--v2", "3,4,5"]);
    assert_eq!(r.out["defect"], "0/1");
    let r = run(d.path(), &["dense", "search", "k6.json", "--k", "3"]);
    assert_eq!(r.out["defect"], "0/1");
    let r = run(d.path(), &["dense", "clique", "--n", "6", "--k", "3"]);
    assert_eq!(r.out["lambda"], "5/1");
}

#[test]
fn lp_and_schema_and_human() {
    let d = tempfile::tempdir().unwrap();
    let lp = json!({"sense": "max", "variables": [{"name": "x"}, {"name": "y"}],
        "objective": {"x": "1/1", "y": "1/1"},
        "constraints": [{"coeffs": {"x": "1/1", "y": "2/1"}, "relation": "<=", "rhs": "4/1"},
                        {"coeffs": {"x": "1/1"}, "relation": "<=", "rhs": "3/1"}]});
    write(d.path(), "lp.json", &lp);
    let r = run(d.path(), &["lp", "solve", "lp.json"]);
    assert_eq!((r.out["status"].clone(), r.out["objective"].clone()), (json!("optimal"), json!("7/2")));
    let s = run(d.path(), &["--schema"]);
    assert!(s.out["structure"].is_object() && s.out["lp"].is_object());
    let h = run(d.path(), &["lp", "solve", "lp.json", "--human"]);
    assert!(h.out["objective"].as_str().unwrap().contains('≈'));
}

#[test]
fn hardness_and_tournament_gen() {
    let d = tempfile::tempdir().unwrap();
    gen(d.path(), "h.json", &["hardness", "--k", "3", "--per-class", "2", "--p", "1/2", "--seed", "1"]);
    let h: Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("h.json")).unwrap()).unwrap();
    write(d.path(), "a.json", &h["a"]);
    write(d.path(), "b.json", &h["b"]);
    let r = run(d.path(), &["solve", "a.json", "b.json"]);
    assert_eq!(r.out["value"], "3/1");
    gen(d.path(), "t.json", &["tournament", "--n", "4", "--seed", "2"]);
    let t: Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("t.json")).unwrap()).unwrap();
    assert_eq!(t["values"]["e"].as_array().unwrap().len(), 6);
}

#[test]
fn reports_chain_without_unwrapping() {
    let d = tempfile::tempdir().unwrap();
    gen(d.path(), "g.json", &["grid", "--d", "2", "--n", "4"]);
    gen(d.path(), "k2.json", &["clique", "--n", "2"]);
    assert_eq!(run(d.path(), &["modulator", "g.json", "--family", "baker", "--layers", "4", "-o", "mod.json"]).code, 0);
    assert_eq!(run(d.path(), &["pliable-approx", "g.json", "--modulator", "mod.json", "-o", "b.json"]).code, 0);
    let v = run(d.path(), &["ptas", "--eps", "1", "--mode", "value", "g.json", "k2.json", "b.json"]);
    assert_eq!((v.code, v.out["upper"].clone()), (0, json!("48/1")));
    let c = run(d.path(), &["ptas", "--eps", "1", "--mode", "construct", "g.json", "k2.json", "mod.json"]);
    assert_eq!((c.code, c.out["lower"].clone()), (0, json!("48/1")));
}
