//! The `kstar` binary: exit codes, `--out`, JSON and determinism.

use std::process::Command;

fn kstar(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_kstar")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn exit_codes() {
    assert_eq!(kstar(&["adem", "2 2"]), (0, "Sq^3 Sq^1\n".into(), String::new()));
    let (code, out, _) = kstar(&["verify-theorem", "--operad", "lev", "--star", "gen", "--module", "F1", "--max-degree", "12"]);
    assert_eq!(code, 0);
    assert!(out.contains("all degrees match"));
    let (code, out, _) = kstar(&["verify-theorem", "--operad", "ucom", "--star", "dot", "--module", "SigmaF0", "--max-degree", "4"]);
    assert_eq!(code, 1);
    assert!(out.contains("mismatch at degree 2"));
    let (code, _, err) = kstar(&["operad-dims", "--operad", "levv"]);
    assert_eq!(code, 2);
    assert!(err.contains("tqlev:<q>"));
    assert_eq!(kstar(&["verify-theorem"]).0, 2);
}

#[test]
fn out_file_and_determinism() {
    let dir = std::env::temp_dir().join(format!("kstar-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("ideal.json");
    let args = ["ideal-check", "--operad", "ucom", "--module", "F2", "--max-degree", "8", "--json"];
    let (code, stdout, _) = kstar(&[&args[..], &["--out", path.to_str().unwrap()]].concat());
    assert_eq!((code, stdout.as_str()), (0, ""));
    let written = std::fs::read_to_string(&path).unwrap();
    let (_, again, _) = kstar(&args);
    assert_eq!(written, again);
    let v: serde_json::Value = serde_json::from_str(&written).unwrap();
    assert_eq!(v["ok"], true);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn model_commands() {
    let (code, out, _) = kstar(&["model-dims", "--model", "ms:2", "--max-degree", "5"]);
    assert_eq!(code, 0);
    assert!(out.contains("Sq^1 x_0 = x_1^2"), "{out}");
    let (code, out, _) = kstar(&["compare", "--model", "k", "--free", "ucom.dpm:F1", "--star", "dot.dd", "--max-degree", "8", "--json"]);
    assert_eq!(code, 0, "{out}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["ok"], true);
    let (code, _, _) = kstar(&["compare", "--model", "j", "--weight", "3", "--free", "lev:F1", "--max-degree", "6"]);
    assert_eq!(code, 2);
}
