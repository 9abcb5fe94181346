use std::process::Command;

use serde_json::Value;

fn walkdim(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_walkdim")).args(args).output().unwrap();
    (out.status.code().unwrap(), serde_json::from_slice(&out.stdout).unwrap())
}

#[test]
fn csv_outputs_have_headers_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str, usize); 4] = [
        (&["harmonic", "sg", "-m", "3"], "m,energy", 4),
        (&["exit-fit", "sg", "-m", "3"], "m,expected_steps", 4),
        (
            &["heat-fit", "segment", "-m", "6", "--tmax", "200", "--points", "10"],
            "t,p_t",
            10,
        ),
        (&["besov-fit", "sg", "-m", "5"], "r,E_tilde,V_min_ratio,V_max_ratio", 5),
    ];
    for (i, (args, header, rows)) in cases.iter().enumerate() {
        let path = dir.path().join(format!("{i}.csv"));
        let mut full = args.to_vec();
        full.extend(["--out", path.to_str().unwrap()]);
        let (code, v) = walkdim(&full);
        assert_eq!(code, 0, "{args:?}: {v}");
        assert!(v["estimate"].is_number(), "{args:?}: {v}");
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(*header));
        assert!(lines.count() >= *rows, "{args:?}");
    }
}

#[test]
fn ifs_json_file_matches_preset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sg.json");
    std::fs::write(
        &path,
        r#"{"name": "file-sg", "maps": [
            {"ratio": "1/2", "translate": ["0", "0"]},
            {"ratio": "1/2", "translate": ["1/2", "0"]},
            {"ratio": "1/2", "translate": ["0", "1/2"]}],
            "boundary": [["0", "0"], ["1", "0"], ["0", "1"]]}"#,
    )
    .unwrap();
    let (code, v) = walkdim(&["renorm", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["energy_scale"], "5/3");
    let (code, v) = walkdim(&["compare", path.to_str().unwrap(), "sg"]);
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], "INVARIANTS_EQUAL");
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{").unwrap();
    let (code, v) = walkdim(&["dim", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(v["error"], "parse");
    assert_eq!(walkdim(&["compare", "--constants", "3,1/2"]).0, 2);
    assert_eq!(walkdim(&["harmonic", "sg", "--boundary", "1,0"]).0, 2);
    let (code, v) = walkdim(&["graph", "sg", "-m", "40"]);
    assert_eq!(code, 1);
    assert_eq!(v["error"], "budget_exceeded");
}
