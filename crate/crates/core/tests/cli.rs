use std::process::Command;

fn cubiccf(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cubiccf")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn verify_series_record() {
    let (code, out, _) = cubiccf(&["verify", "--ids", "S-2.8", "--order", "100"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("| S-2.8 | series | pass |"));
}

#[test]
fn verify_explicit_value() {
    let (code, out, _) = cubiccf(&["verify", "--ids", "T-5.6-6", "--digits", "40", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v[0]["id"], "T-5.6-6");
    assert_eq!(v[0]["status"], "pass");
}

#[test]
fn unknown_id() {
    let (code, out, err) = cubiccf(&["verify", "--ids", "S-2.8,nope"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("nope"));
}

#[test]
fn corpus_parse_error_exits_2() {
    let path = std::env::temp_dir().join("cubiccf_bad_corpus.cid");
    std::fs::write(&path, "identity A series order=10 ref \"r\"\nlhs: rho(q)\nrhs: 1\n").unwrap();
    let (code, _, err) = cubiccf(&["verify", "--corpus", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("2:6: unknown function rho"), "{err}");
}

#[test]
fn failing_and_erroring_records() {
    let dir = std::env::temp_dir();
    let fail = dir.join("cubiccf_fail.cid");
    std::fs::write(&fail, "identity A series order=10 ref \"r\"\nlhs: phi(q)\nrhs: 1\n").unwrap();
    assert_eq!(cubiccf(&["verify", "--corpus", fail.to_str().unwrap()]).0, 1);
    let both = dir.join("cubiccf_both.cid");
    std::fs::write(
        &both,
        "identity A series order=10 ref \"r\"\nlhs: phi(q)\nrhs: 1\n\nidentity B numeric digits=20 at q=0.99 ref \"r\"\nlhs: V(q)\nrhs: 1\n",
    )
    .unwrap();
    assert_eq!(cubiccf(&["verify", "--corpus", both.to_str().unwrap()]).0, 3);
}

#[test]
fn json_is_reproducible() {
    let args = ["verify", "--ids", "S-5.2,T-5.4-i,N-4.1", "--format", "json", "--no-timing"];
    let (_, a, _) = cubiccf(&args);
    let (_, b, _) = cubiccf(&args);
    assert_eq!(a, b);
    let mut par = args.to_vec();
    par.push("--parallel");
    assert_eq!(cubiccf(&par).1, a);
}

#[test]
fn tables() {
    let (code, out, _) = cubiccf(&["table", "5.6", "--format", "json"]);
    assert_eq!(code, 0);
    let rows: serde_json::Value = serde_json::from_str(&out).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| r["status"] == "pass"));

    let (_, out, _) = cubiccf(&["table", "5.5"]);
    let row = out.lines().find(|l| l.starts_with("| T-5.5-x |")).unwrap();
    assert!(row.contains("| sqrt(3) | 1.7320508075688772935"));

    let (code, out, _) = cubiccf(&["table", "sec1"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().filter(|l| l.starts_with("| N-S1-")).count(), 4);
    assert!(out.contains("N-S1-b"));
}

#[test]
fn eval() {
    let (code, out, _) = cubiccf(&["eval", "phi(q) at q=0"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("1.0000"));
    let (_, a, _) = cubiccf(&["eval", "V(-q) at q=exp(-pi)", "--digits", "40"]);
    let (_, b, _) = cubiccf(&["eval", "(1-sqrt(3))/2", "--digits", "40"]);
    assert_eq!(a, b);
    let (_, a, _) = cubiccf(&["eval", "psi(-q)/(q^(1/2)*psi(-q^5)) at q=exp(-pi/sqrt(5))"]);
    let (_, b, _) = cubiccf(&["eval", "5^(1/4)"]);
    assert_eq!(a, b);
    let (code, _, err) = cubiccf(&["eval", "phi(q) at q=2"]);
    assert_eq!(code, 2);
    assert!(err.contains("cap"));
}

#[test]
fn list() {
    let (code, out, _) = cubiccf(&["list"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 2 + 62);
    assert!(out.contains("| S-5.28 | series |"));
}
