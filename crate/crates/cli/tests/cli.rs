use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ordnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ordnet")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Two groups of three short RR-like series with a manifest.
fn dataset(dir: &Path) {
    let mut manifest = String::from("id,group\n");
    for (g, name) in ["a", "b"].iter().enumerate() {
        for i in 0..3 {
            let id = format!("{name}{i}");
            let values: String = (0..240)
                .map(|t| {
                    let x = (t as f64 * (0.3 + 0.05 * i as f64 + 0.1 * g as f64)).sin();
                    format!("{}\n", (800.0 + 40.0 * x + (t * 7 % 11) as f64).round())
                })
                .collect();
            fs::write(dir.join(format!("{id}.txt")), values).unwrap();
            manifest.push_str(&format!("{id},{name}\n"));
        }
    }
    fs::write(dir.join("manifest.csv"), manifest).unwrap();
}

#[test]
fn analyze_with_config_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path());
    fs::write(
        dir.path().join("run.toml"),
        "manifest = \"manifest.csv\"\noutput_dir = \"from-config\"\nm_range = [2, 6]\ntau_range = [1, 2]\nseries_length = 0\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let o = ordnet(&[
        "analyze",
        "--config",
        dir.path().join("run.toml").to_str().unwrap(),
        "--output",
        out_dir.to_str().unwrap(),
        "--m-range",
        "3..4",
        "--plot",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    // the flag wins over the file, the file wins over the defaults
    assert_eq!(report["provenance"]["config"]["m_range"], serde_json::json!([3, 4]));
    assert_eq!(report["provenance"]["config"]["tau_range"], serde_json::json!([1, 2]));
    assert!(!dir.path().join("from-config").exists());
    let grid = fs::read_to_string(out_dir.join("grids/intragroup_fwd_vs_rev_a_h_pe.csv")).unwrap();
    assert_eq!(grid.lines().count(), 1 + 2 * 2);
    assert!(out_dir.join("plots/plots.json").is_file());
    assert!(out_dir.join("quantifiers.csv").is_file());
}

#[test]
fn analyze_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path());
    let manifest = dir.path().join("manifest.csv");
    let mut contents = Vec::new();
    for run in ["one", "two"] {
        let out = dir.path().join(run);
        let o = ordnet(&[
            "analyze",
            "--manifest",
            manifest.to_str().unwrap(),
            "-o",
            out.to_str().unwrap(),
            "--m-range",
            "2..4",
            "--tau-range",
            "1..2",
            "--series-length",
            "200",
            "--surrogates",
            "--surrogate-alg",
            "all",
            "--n-surrogates",
            "6",
            "--seed",
            "99",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let mut files: Vec<_> = fs::read_dir(out.join("grids")).unwrap().map(|e| e.unwrap().path()).collect();
        files.push(out.join("quantifiers.csv"));
        files.sort();
        contents.push(files.iter().map(|p| (p.file_name().unwrap().to_owned(), fs::read(p).unwrap())).collect::<Vec<_>>());
    }
    assert_eq!(contents[0], contents[1]);
    assert!(contents[0].iter().any(|(n, _)| n.to_string_lossy().starts_with("orig_vs_surrogate_a_alg2")));
}

#[test]
fn missing_series_file_fails_with_its_id() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path());
    fs::remove_file(dir.path().join("b2.txt")).unwrap();
    let o = ordnet(&["analyze", "--manifest", dir.path().join("manifest.csv").to_str().unwrap(), "-o", dir.path().join("out").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("b2"), "{}", stderr(&o));
}

#[test]
fn invalid_settings_fail() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path());
    let manifest = dir.path().join("manifest.csv");
    let o = ordnet(&["analyze", "--manifest", manifest.to_str().unwrap(), "--m-range", "1..21"]);
    assert!(!o.status.success());
    let o = ordnet(&["analyze", "--manifest", manifest.to_str().unwrap(), "--surrogate-alg", "alg9"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ordnet(&["analyze"]);
    assert!(!o.status.success());
}

#[test]
fn filter_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("rr.txt");
    let clean: String = (0..50).map(|i| format!("{}\n", 800 + (i % 5) * 10)).collect();
    fs::write(&input, format!("1300\n{clean}")).unwrap();
    let output = dir.path().join("clean.txt");
    let o = ordnet(&["filter", input.to_str().unwrap(), "-o", output.to_str().unwrap(), "--filter-window", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["removed_count"], 1);
    assert_eq!(fs::read_to_string(&output).unwrap().lines().count(), 50);

    // 1 of 51 modified is above a 1% limit
    let o = ordnet(&["filter", input.to_str().unwrap(), "-o", output.to_str().unwrap(), "--filter-reject-threshold", "0.01"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("rejected"));
}

#[test]
fn surrogate_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.txt");
    let values: String = (0..300).map(|t| format!("{}\n", ((t as f64) * 0.37).sin() * ((t as f64) * 0.05).cos())).collect();
    fs::write(&input, values).unwrap();
    let json = dir.path().join("battery.json");
    let o = ordnet(&[
        "surrogate",
        input.to_str().unwrap(),
        "--surrogate-alg",
        "alg0,alg1",
        "--n-surrogates",
        "39",
        "--statistic",
        "h_pe",
        "-o",
        json.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let reports: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0]["result"]["q_surr"].as_array().unwrap().len(), 39);
    assert_eq!(reports[1]["algorithm"], "alg1");
}

#[test]
fn lorenz_demo_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lorenz");
    let o = ordnet(&["lorenz-demo", "-o", out.to_str().unwrap(), "--n-series", "2", "--n-peaks", "400", "--n-surrogates", "39"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().count(), 1 + 9);
    assert_eq!(fs::read_to_string(out.join("peaks/lorenz-00.txt")).unwrap().lines().count(), 400);
    assert!(out.join("batteries.csv").is_file());
    assert!(out.join("lorenz_demo.json").is_file());
}
