use std::io::Write;
use std::process::{Command, Stdio};

use epsilon_l1::cli::{run, Outcome};

fn l1(args: &[&str]) -> Outcome {
    l1_stdin(args, "")
}

fn l1_stdin(args: &[&str], input: &str) -> Outcome {
    let argv = std::iter::once("l1").chain(args.iter().copied());
    run(argv, &mut input.as_bytes())
}

const REFLEXIVITY: &str = "~eps(a,b) | eps(a,a)";
const NON_THEOREM: &str = "eps(a,b) | eps(b,c) -> eps(a,a)";
const CHAIN_WITH_TAIL: &str =
    "~eps(a,b) | ~eps(b,c) | ~eps(a,c) | ~eps(b,a) | ~eps(a,a) | ~eps(b,b)";

#[test]
fn decide_exit_codes() {
    let o = l1(&["decide", REFLEXIVITY]);
    assert_eq!((o.code, o.stdout.as_str()), (0, "PROVABLE\n"));
    let o = l1(&["decide", NON_THEOREM]);
    assert_eq!((o.code, o.stdout.as_str()), (1, "REJECTED\n"));
    let o = l1(&["decide", "eps(a"]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("byte 5"));
    let o = l1(&["decide", "eps(a0,b)"]);
    assert_eq!(o.code, 2);
}

#[test]
fn decide_reads_stdin_and_reports_oracle() {
    let o = l1_stdin(&["decide", "--oracle", "--json", "-"], NON_THEOREM);
    assert_eq!(o.code, 1);
    let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(v["verdict"], "REJECTED");
    assert_eq!(v["oracle_valid"], false);
    assert_eq!(v["agrees"], true);
}

#[test]
fn oracle_resource_limit() {
    let o = l1(&[
        "decide",
        "--oracle",
        "eps(a,b)|eps(b,c)|eps(c,d)|eps(d,e)|eps(e,a)",
    ]);
    assert_eq!(o.code, 3);
}

#[test]
fn every_emitted_certificate_checks() {
    for f in [
        REFLEXIVITY,
        NON_THEOREM,
        "eps(a,b) & eps(b,c) -> eps(a,c)",
        "~eps(a,b)",
    ] {
        for mode in ["eps3b", "eps3"] {
            for seed in ["0", "7"] {
                let t = l1(&["tableau", "--json", "--mode", mode, "--seed", seed, f]);
                let c = l1_stdin(&["check", "-"], &t.stdout);
                assert_eq!(c.code, 0, "{f} {mode} {seed}: {}", c.stderr);
                assert_eq!(t.code == 0, c.stdout.contains("PROVABLE"));
            }
        }
        for system in ["har", "hl1"] {
            let r = l1(&["reject", "--system", system, f]);
            if r.code == 0 {
                let c = l1_stdin(&["check", "-"], &r.stdout);
                assert_eq!(c.code, 0, "{}", c.stderr);
                assert!(c.stdout.starts_with(&format!("VALID {system}")));
            } else {
                assert!(r.stderr.contains("provable"));
            }
        }
    }
}

#[test]
fn check_refuses_tampering() {
    let r = l1(&["reject", NON_THEOREM]);
    let mut steps: Vec<serde_json::Value> = serde_json::from_str(&r.stdout).unwrap();
    let last = steps.len() - 1;
    steps[last]["formula"] = serde_json::Value::String("eps(a,a)".into());
    let c = l1_stdin(&["check", "-"], &serde_json::to_string(&steps).unwrap());
    assert_eq!(c.code, 1);
    assert!(c.stderr.contains("INVALID"));
    assert_eq!(l1_stdin(&["check", "-"], "{not json").code, 2);
    assert_eq!(l1_stdin(&["check", "-"], "42").code, 1);
}

#[test]
fn model_of_hintikka_formula() {
    let o = l1(&["model", CHAIN_WITH_TAIL]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    let a = &v["model"]["assignment"];
    assert_eq!(a["a"], serde_json::json!([1]));
    assert_eq!(a["b"], serde_json::json!([1]));
    assert_eq!(a["c"], serde_json::json!([1, 2]));
    assert_eq!(v["holds"], false);
    assert_eq!(v["audit_l1"], serde_json::json!([]));
}

#[test]
fn model_upgrade() {
    let o = l1(&["model", "--upgrade-L", CHAIN_WITH_TAIL]);
    let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    assert_ne!(v["audit_L"], serde_json::json!([]));
    assert_eq!(v["upgraded"]["audit_L"], serde_json::json!([]));
    assert_eq!(v["upgraded"]["holds"], false);
    let o = l1(&["model", REFLEXIVITY]);
    assert_eq!(o.code, 1);
}

#[test]
fn translate_outputs() {
    let o = l1(&["translate", "eps(a,b)"]);
    assert_eq!(
        o.stdout.trim(),
        "((exists x1. (F_a(x1) & F_b(x1))) & (forall x1. (forall y1. ((F_a(x1) & F_a(y1)) -> x1 = y1))))"
    );
    let o = l1(&["translate", "--tptp", "eps(a,b)"]);
    assert!(o.stdout.starts_with("fof(l1_formula, conjecture, "));
    let o = l1(&["translate", "--oracle", REFLEXIVITY]);
    assert!(o.stdout.ends_with("oracle: VALID\n"));
}

#[test]
fn usage_errors() {
    assert_eq!(l1(&[]).code, 2);
    assert_eq!(l1(&["decide", "--mode", "eps9", REFLEXIVITY]).code, 2);
    assert_eq!(l1(&["--help"]).code, 0);
}

#[test]
fn binary_pipes_through_stdin() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_l1"))
        .args(["decide", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(NON_THEOREM.as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "REJECTED\n");
}
