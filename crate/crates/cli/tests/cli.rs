use std::path::Path;
use std::process::{Command, Output};

fn dce(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dce"))
        .args(args)
        .env("DCE_JOBS", "1")
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn manifest_value(path: &Path, key: &str) -> Option<String> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().find_map(|l| {
        let (k, v) = l.split_once(" = ")?;
        (k == key).then(|| v.to_string())
    })
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn static_wall_produces_no_particles() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("static.csv");
    let o = dce(&[
        "simulate",
        "--mass",
        "0.7",
        "--epsilon",
        "0",
        "--kmax",
        "5",
        "--tmax",
        "20",
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out);
    assert_eq!(header.len(), 2 * 5 + 3);
    assert_eq!(header[0], "t");
    assert_eq!(header[6], "N_total");
    assert_eq!(header.last().unwrap(), "period_aligned");
    assert_eq!(rows.len(), 21);
    for row in &rows {
        assert_eq!(row.len(), header.len());
        for v in &row[1..=6] {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0);
        }
        assert_eq!(row.last().unwrap(), "0");
    }
    assert!(dir.path().join("static.csv.manifest").exists());
}

#[test]
fn simulate_is_reproducible_and_manifest_matches() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &Path| {
        vec![
            "simulate".to_string(),
            "--mass-exact-coupling".into(),
            "1,5".into(),
            "--resonant-n".into(),
            "1".into(),
            "--kmax".into(),
            "8".into(),
            "--tmax".into(),
            "30".into(),
            "--sample-dt".into(),
            "0.5".into(),
            "--out".into(),
            p.to_str().unwrap().to_string(),
        ]
    };
    for p in [&a, &b] {
        let argv = args(p);
        let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
        let o = dce(&argv);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let (header, rows) = read_csv(&a);
    let k = 8;
    let defect_cols = (k + 2)..(2 * k + 2);
    assert!(header[defect_cols.start].starts_with("d_1"));
    let max_head = rows
        .iter()
        .flat_map(|r| r[defect_cols.start..defect_cols.start + 5].iter())
        .map(|v| v.parse::<f64>().unwrap().abs())
        .fold(0.0, f64::max);
    let manifest = dir.path().join("a.csv.manifest");
    let reported: f64 = manifest_value(&manifest, "max-abs-defect-first-5")
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(reported, max_head);
    assert_eq!(manifest_value(&manifest, "status").unwrap(), "ok");
    assert_eq!(manifest_value(&manifest, "integrator").unwrap(), "dop853");
    let mass: f64 = manifest_value(&manifest, "mass").unwrap().parse().unwrap();
    assert!((mass - 2f64.sqrt() * std::f64::consts::PI).abs() < 1e-15);
    // Each multiple of the period within half a sample of the grid flags one row.
    let aligned = rows.iter().filter(|r| r.last().unwrap() == "1").count();
    let period =
        2.0 * std::f64::consts::PI / (2.0 * (std::f64::consts::PI.powi(2) + mass * mass).sqrt());
    assert_eq!(aligned, ((30.0 + 0.25) / period).floor() as usize + 1);
}

#[test]
fn cavity_geometry_sets_the_mass() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let o = dce(&[
        "simulate",
        "--cavity",
        "11,11,1,1",
        "--resonant-n",
        "1",
        "--kmax",
        "4",
        "--tmax",
        "2",
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = dir.path().join("c.csv.manifest");
    let mass: f64 = manifest_value(&manifest, "mass").unwrap().parse().unwrap();
    assert!((mass - 0.404).abs() < 1e-3, "{mass}");
    assert!(manifest_value(&manifest, "cavity").is_some());
}

#[test]
fn invalid_flags_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let cases: Vec<Vec<&str>> = vec![
        vec!["simulate", "--mass", "1", "--cavity", "1,1,1,1"],
        vec!["simulate", "--resonant-n", "1", "--omega", "3"],
        vec!["simulate", "--epsilon", "0.5"],
        vec!["simulate", "--kmax", "0"],
        vec!["simulate", "--mass-exact-coupling", "1,3"],
        vec!["simulate", "--method", "euler"],
        vec!["sweep"],
        vec!["sweep", "--mass-grid", "1:0:0.1"],
        vec!["validate", "--preset", "fig2"],
        vec!["couplings", "--threshold", "-1"],
    ];
    for mut args in cases {
        if args[0] != "validate" {
            args.extend(["--out", path_str(&out)]);
        }
        let o = dce(&args);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn couplings_chain_listing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("chain.csv");
    let mass = (5f64.sqrt() * std::f64::consts::PI).to_string();
    let o = dce(&[
        "couplings",
        "--mass",
        &mass,
        "--resonant-n",
        "1",
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["k", "branch", "l_tilde", "l", "detuning", "class"]);
    let find = |k: &str, l: &str| {
        rows.iter()
            .find(|r| r[0] == k && r[3] == l)
            .cloned()
            .unwrap()
    };
    for (k, l) in [("1", "7"), ("7", "12"), ("12", "17"), ("17", "22")] {
        assert_eq!(find(k, l)[5], "strong", "{k}->{l}");
    }
    let last = find("22", "27");
    assert!((last[2].parse::<f64>().unwrap() - 26.92).abs() < 0.005);
    assert!(dir.path().join("chain.csv.manifest").exists());

    let o = dce(&["couplings", "--mass", "0.7"]);
    let text = String::from_utf8_lossy(&o.stdout);
    let line = text
        .lines()
        .find(|l| l.split_whitespace().nth(3) == Some("3"))
        .unwrap();
    let l_tilde: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!((l_tilde - 3.07).abs() < 0.005, "{line}");
    assert!(line.ends_with("weak"), "{line}");

    let out = dir.path().join("exact.csv");
    let o = dce(&[
        "couplings",
        "--mass-exact-coupling",
        "1,4",
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success());
    let (_, rows) = read_csv(&out);
    let row = rows.iter().find(|r| r[0] == "1" && r[3] == "4").unwrap();
    assert!(row[4].parse::<f64>().unwrap() < 1e-12);
    assert_eq!(row[5], "strong");
}

#[test]
fn single_point_sweep_matches_sinh_law() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = dce(&[
        "sweep",
        "--mass-grid",
        "2",
        "--resonant-n",
        "1",
        "--t-eval",
        "2000",
        "--kmax",
        "10",
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out);
    assert_eq!(
        header,
        [
            "M",
            "N_resonant",
            "sinh_prediction",
            "exact_coupling_flag",
            "coupled_partner"
        ]
    );
    assert_eq!(rows.len(), 1);
    let ratio = rows[0][1].parse::<f64>().unwrap() / rows[0][2].parse::<f64>().unwrap();
    assert!((0.95..=1.05).contains(&ratio), "{ratio}");
    assert_eq!(rows[0][3], "0");
}

#[test]
fn sweep_rows_follow_grid_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let exact = (2f64.sqrt() * std::f64::consts::PI).to_string();
    let grid = format!("3.5,{exact},0.5");
    let o = Command::new(env!("CARGO_BIN_EXE_dce"))
        .args([
            "sweep",
            "--mass-grid",
            &grid,
            "--t-eval",
            "20",
            "--kmax",
            "8",
            "--out",
            path_str(&out),
        ])
        .env("DCE_JOBS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = read_csv(&out);
    let masses: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(masses, vec![3.5, exact.parse().unwrap(), 0.5]);
    assert_eq!(rows[1][3], "1");
    assert_eq!(rows[1][4], "5");
    assert_eq!(rows[0][3], "0");
    let manifest = dir.path().join("sweep.csv.manifest");
    assert_eq!(manifest_value(&manifest, "failed-points").unwrap(), "0");
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("run.csv");
    std::fs::write(
        &cfg,
        format!(
            "# short run\nmass = 0.7\nkmax = 6\ntmax = 3\nsample_dt = 1\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let o = dce(&["--config", path_str(&cfg), "simulate", "--kmax", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out);
    assert_eq!(header.len(), 2 * 4 + 3);
    assert_eq!(rows.len(), 4);
    let manifest = dir.path().join("run.csv.manifest");
    assert_eq!(manifest_value(&manifest, "kmax").unwrap(), "4");
    assert_eq!(
        manifest_value(&manifest, "mass")
            .unwrap()
            .parse::<f64>()
            .unwrap(),
        0.7
    );

    std::fs::write(&cfg, "mass = 0.7\nkmaxx = 6\n").unwrap();
    let o = dce(&["--config", path_str(&cfg), "simulate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oracle_preset_validates() {
    let o = dce(&["validate", "--preset", "oracle"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
    assert!(text.contains("oracle: 2 passed, 0 failed"));
}
