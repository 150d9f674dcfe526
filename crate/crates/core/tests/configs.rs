use warpcurv::cli::{config::*, execute, Command};

/// Every shipped config parses for the command its file name names.
#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let text = std::fs::read_to_string(&path).unwrap();
        let ok = if name.starts_with("pinch_") {
            serde_json::from_str::<PinchFindConfig>(&text).is_ok()
        } else if name.starts_with("family_") {
            serde_json::from_str::<FamilyCheckConfig>(&text).is_ok()
        } else if name.starts_with("sweep_") {
            serde_json::from_str::<CurvatureSweepConfig>(&text).is_ok()
        } else if name.starts_with("heatflow_") {
            serde_json::from_str::<HeatflowConfig>(&text).is_ok()
        } else if name.starts_with("oracle") {
            serde_json::from_str::<OracleCheckConfig>(&text).is_ok()
        } else {
            panic!("unexpected config {name}");
        };
        assert!(ok, "{name} does not parse");
        seen += 1;
    }
    assert!(seen >= 8);
}

#[test]
fn shipped_fast_configs_pass() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for (cmd, file) in [
        (Command::PinchFind, "pinch_exp.json"),
        (Command::FamilyCheck, "family_rho.json"),
        (Command::FamilyCheck, "family_lambda_twist.json"),
        (Command::CurvatureSweep, "sweep_torus.json"),
        (Command::OracleCheck, "oracle.json"),
    ] {
        let path = dir.join(file);
        let text = std::fs::read_to_string(&path).unwrap();
        let (_, _, out) = execute(cmd, &text, &path, None).unwrap();
        assert!(out.pass, "{file}: {}", out.results);
    }
}
