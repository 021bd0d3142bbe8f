//! End-to-end runs of the `bcbound` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bcbound"))
}

fn workdir(name: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    fs::create_dir_all(&d).unwrap();
    d
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn gen(dir: &Path, args: &[&str], name: &str) -> String {
    let p = dir.join(name);
    let mut all = vec!["gen"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", p.to_str().unwrap()]);
    let o = run(&all);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    p.to_str().unwrap().to_owned()
}

fn result_of(o: &Output) -> Value {
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    v["result"].clone()
}

#[test]
fn ga_check_holds_for_the_example_source() {
    let d = workdir("ga");
    let ch = gen(&d, &["blackwell"], "bw.json");
    let src = gen(&d, &["example-source", "--alpha", "0.03"], "src.json");
    let o = run(&["check", "ga", "--src", &src, "--ch", &ch, "--kappa", "1"]);
    assert_eq!(code(&o), 0);
    assert_eq!(result_of(&o)["check"], "ga-outer");
}

#[test]
fn new_check_is_violated_near_the_top_of_the_range() {
    let d = workdir("new");
    let ch = gen(&d, &["blackwell"], "bw.json");
    let src = gen(&d, &["example-source", "--alpha", "0.041"], "src.json");
    let o = run(&["check", "new", "--src", &src, "--ch", &ch, "--kappa", "1"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn markov_check_on_clean_pipe_at_half_rate_is_violated() {
    let d = workdir("markov");
    let ch = gen(&d, &["clean-pipe", "--bits", "1"], "pipe.json");
    let src = write(&d, "bd.json", r#"{"probs": [[0.5, 0.0], [0.0, 0.5]]}"#);
    let o = run(&["check", "markov", "--src", &src, "--ch", &ch, "--kappa", "0.5"]);
    assert_eq!(code(&o), 1);
    let o = run(&["check", "markov", "--src", &src, "--ch", &ch, "--kappa", "1"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn degraded_region_reaches_the_common_rate_axis() {
    let d = workdir("cd");
    let ch = gen(&d, &["blackwell"], "bw.json");
    let csv = d.join("cd.csv");
    let o = run(&["region", "cd", "--ch", &ch, "--directions", "4", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let r = result_of(&o);
    let entries = r["entries"].as_array().unwrap();
    let axis = entries
        .iter()
        .find(|e| e["lambda"][0].as_f64() == Some(1.0) && e["lambda"][1].as_f64() == Some(0.0))
        .unwrap();
    assert!(axis["h"].as_f64().unwrap() >= 0.918);
    let text = fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("lambda_1,lambda_2,h\n"));
    assert_eq!(text.lines().count(), entries.len() + 1);
}

#[test]
fn constant_channel_has_zero_inner_region() {
    let d = workdir("const");
    let ch = write(&d, "const.json", r#"{"probs": [[[1.0, 0.0], [0.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]]}"#);
    let o = run(&["region", "cin", "--ch", &ch, "--directions", "6"]);
    assert_eq!(code(&o), 0);
    for e in result_of(&o)["entries"].as_array().unwrap() {
        assert!(e["h"].as_f64().unwrap().abs() < 1e-9);
    }
}

#[test]
fn common_part_entropies() {
    let d = workdir("common");
    let cases = [
        (r#"{"probs": [[0.5, 0.0], [0.0, 0.5]]}"#, 1.0, 2),
        (r#"{"probs": [[0.1, 0.1, 0.1], [0.1, 0.2, 0.1], [0.1, 0.1, 0.1]]}"#, 0.0, 1),
    ];
    for (i, (text, h, k)) in cases.iter().enumerate() {
        let src = write(&d, &format!("s{i}.json"), text);
        let o = run(&["common-part", "--src", &src]);
        assert_eq!(code(&o), 0);
        let r = result_of(&o);
        assert!((r["entropy"].as_f64().unwrap() - h).abs() < 1e-12);
        assert_eq!(r["components"].as_u64().unwrap(), *k as u64);
    }
    let src = gen(&d, &["example-source", "--alpha", "0.03"], "ex.json");
    let r = result_of(&run(&["common-part", "--src", &src]));
    assert_eq!(r["entropy"].as_f64().unwrap(), 0.0);
}

#[test]
fn bad_input_exits_with_three() {
    let d = workdir("bad");
    assert_eq!(code(&run(&["blackwell-demo", "--alpha", "0.5"])), 3);
    assert_eq!(code(&run(&["check", "ga", "--bogus"])), 3);
    assert_eq!(code(&run(&["frobnicate"])), 3);
    let broken = write(&d, "broken.json", r#"{"probs": [[[1.0, 0.0]"#);
    assert_eq!(code(&run(&["region", "cin", "--ch", &broken])), 3);
    let unnormalized = write(&d, "un.json", r#"{"probs": [[0.5, 0.2], [0.0, 0.5]]}"#);
    assert_eq!(code(&run(&["common-part", "--src", &unnormalized])), 3);
    let ch = gen(&d, &["blackwell"], "bw.json");
    assert_eq!(code(&run(&["region", "cout", "--ch", &ch, "--cards", "v9=2"])), 3);
    assert_eq!(code(&run(&["region", "cout"])), 3);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn reruns_are_identical_apart_from_wall_clock() {
    let d = workdir("rerun");
    let ch = gen(&d, &["blackwell"], "bw.json");
    let go = |name: &str| {
        let out = d.join(name);
        let o = run(&["region", "cout", "--ch", &ch, "--directions", "6", "--seed", "7", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        let mut v: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
        v["manifest"]["wall_clock_seconds"] = Value::Null;
        v
    };
    let a = go("a.json");
    let b = go("b.json");
    assert_eq!(a, b);
    assert_eq!(a["manifest"]["flags"]["search"]["seed"], 7);
}
