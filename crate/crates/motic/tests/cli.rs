use std::process::Command;

fn profile(name: &str) -> String {
    format!("{}/../../profiles/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

fn motic(args: &[&str], cap: Option<&str>) -> (i32, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_motic"));
    cmd.args(args).env_remove("MOTIC_MAX_TERMS");
    if let Some(c) = cap {
        cmd.env("MOTIC_MAX_TERMS", c);
    }
    let out = cmd.output().unwrap();
    let mut text = String::from_utf8(out.stdout).unwrap();
    text.push_str(&String::from_utf8(out.stderr).unwrap());
    (out.status.code().unwrap(), text)
}

#[test]
fn exit_codes() {
    let k3 = profile("k3_quartic");
    assert_eq!(motic(&["run", &k3, "--task", "defect:2", "--expect", "defect=0"], None).0, 0);
    assert_eq!(motic(&["run", &k3, "--task", "defect:2", "--expect", "defect=1"], None).0, 2);
    assert_eq!(motic(&["run", &profile("quartic_no_rules"), "--expect", "mck"], None).0, 2);
    let (code, text) = motic(&["run", &profile("broken")], None);
    assert_eq!(code, 3);
    assert!(text.contains("(h, h, k)"), "{text}");
    assert_eq!(motic(&["run", "/nonexistent/profile.json"], None).0, 3);
    assert_eq!(motic(&["run", &k3, "--task", "defect:1"], None).0, 3);
    assert_eq!(motic(&["run", &k3, "--task", "defect:2"], Some("5")).0, 4);
    assert_eq!(motic(&["run", &k3, "--task", "defect:2"], Some("lots")).0, 3);
}

#[test]
fn every_shipped_profile_loads() {
    let dir = format!("{}/../../profiles", env!("CARGO_MANIFEST_DIR"));
    for e in std::fs::read_dir(dir).unwrap() {
        let path = e.unwrap().path();
        let name = path.file_stem().unwrap().to_string_lossy().to_string();
        let (code, text) = motic(&["run", path.to_str().unwrap()], None);
        let want = if name == "broken" { 3 } else { 0 };
        assert_eq!(code, want, "{name}: {text}");
    }
}

#[test]
fn json_sweep_and_explain() {
    let (code, text) = motic(&["run", &profile("curve_g3"), "--task", "sweep:4", "--json", "--expect", "defects=1,2,2"], None);
    assert_eq!(code, 0, "{text}");
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["expectations"][0]["met"], true);
    let (code, text) = motic(&["explain", &profile("k3_quartic"), "--task", "reduce:1/4 * d{1,2}[D^2]"], None);
    assert_eq!(code, 0);
    assert!(text.trim_end().ends_with("1/16 * s{1}[D^2] * s{2}[D^2]"), "{text}");
}
