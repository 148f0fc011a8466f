//! End-to-end runs of the `parisi-lab` binary.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn lab(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_parisi-lab"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(sub: &str, config: &Path, out: &Path) -> Output {
    lab(&[sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()], &[])
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

const SOLVE: &str = r#"
command = "solve"
[problem]
phi = "log_cosh"
[param]
values = [1.0]
[solver.grid]
x_min = -12.0
x_max = 12.0
step = 0.05
"#;

#[test]
fn solve_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "solve.toml", SOLVE);
    let out = dir.path().join("out");
    let o = run("solve", &cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("PASS solve:"), "{}", stdout(&o));
    let (header, rows) = read_csv(&out.join("snapshots.csv"));
    assert_eq!(header, ["t", "x", "F", "dF"]);
    assert!(rows.len() > 900);
    let worst = rows
        .iter()
        .map(|r| (r[2] - (0.5 * r[0] + log_cosh(r[1]))).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-7, "max error {worst:e}");
    assert!(rows.iter().any(|r| r[0] == 1.0));
}

#[test]
fn ordered_convexity_scan_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "scan.toml",
        r#"
[problem]
phi = "log_cosh"
phi2 = "2*log_cosh"
[param]
breakpoints = [0.5]
values = [0.6, 0.2]
[param2]
breakpoints = [0.6]
values = [0.9, 0.4]
[solver.grid]
x_min = -12.0
x_max = 12.0
step = 0.05
"#,
    );
    let out = dir.path().join("out");
    let o = run("convexity-scan", &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let line = stdout(&o);
    assert!(line.starts_with("PASS convexity-scan: min_gap = "), "{line}");
    assert!(line.trim_end().ends_with(">= -1e-7"), "{line}");
    let (header, rows) = read_csv(&out.join("gaps.csv"));
    assert_eq!(header, ["alpha", "x", "gap"]);
    assert_eq!(rows.len(), 11 * 5);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "pass");
}

#[test]
fn unordered_parameters_are_an_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "scan.toml",
        "[param]\nvalues = [0.9]\n[param2]\nvalues = [0.1]\n",
    );
    let o = run("convexity-scan", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("a1 <= a2"), "{}", stderr(&o));
}

#[test]
fn violations_exit_with_two() {
    // Near the origin the solution is far from its linear tail.
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "a.toml", "[scan]\nms = [0.5]\nts = [0.5, 1.0]\nxs = [0.5]\n");
    let o = run("asymptotics", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("FAIL asymptotics:"));
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "violation");
}

const CONJECTURE: &str = r#"
command = "conjecture-scan"
seed = 5
[scan]
pairs = 3
alphas = { start = 0.0, stop = 1.0, count = 5 }
xs = [0.0, 1.0]
[solver]
order = 40
[solver.grid]
x_min = -10.0
x_max = 10.0
step = 0.05
"#;

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.toml", CONJECTURE);
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert!(run("conjecture-scan", &cfg, &a).status.success());
    assert!(run("conjecture-scan", &cfg, &b).status.success());
    let single = lab(
        &["conjecture-scan", "--config", cfg.to_str().unwrap(), "--out", c.to_str().unwrap()],
        &[("PARISI_LAB_THREADS", "1")],
    );
    assert!(single.status.success(), "{}", stderr(&single));
    let fa = files(&a);
    assert!(fa.contains_key("gaps.csv") && fa.contains_key("pairs.csv") && fa.contains_key("candidates.csv"));
    assert_eq!(fa, files(&b));
    assert_eq!(fa, files(&c));

    // A different seed draws different pairs.
    let d = dir.path().join("d");
    let o = lab(
        &["conjecture-scan", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap(), "--seed", "6"],
        &[],
    );
    assert!(o.status.success());
    assert_ne!(fa["pairs.csv"], fs::read(d.join("pairs.csv")).unwrap());
}

#[test]
fn effective_config_reproduces_the_run() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "solve.toml", SOLVE);
    let first = dir.path().join("first");
    assert!(run("solve", &cfg, &first).status.success());
    let effective = first.join("effective_config.toml");
    let second = dir.path().join("second");
    let o = run("solve", &effective, &second);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(files(&first), files(&second));
}

#[test]
fn json_configs_are_accepted() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "eval.json",
        r#"{"problem": {"beta": 0.5, "field": 0.0}, "param": {"values": [0.0]},
            "solver": {"grid": {"x_min": -12.0, "x_max": 12.0, "step": 0.05}}}"#,
    );
    let out = dir.path().join("out");
    let o = run("parisi-eval", &cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let result: serde_json::Value = serde_json::from_slice(&fs::read(out.join("result.json")).unwrap()).unwrap();
    // With a = 0 the penalty vanishes and F(0, 1) = E log cosh z.
    let h = 1e-3;
    let expected: f64 = (-12000..=12000)
        .map(|i| {
            let z = i as f64 * h;
            h * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt() * log_cosh(z)
        })
        .sum();
    let functional = result["functional"].as_f64().unwrap();
    assert!((functional - expected).abs() < 1e-9, "{result}");
    let value = result["value"].as_f64().unwrap();
    assert!((value - std::f64::consts::LN_2 - expected).abs() < 1e-9, "{result}");
    assert_eq!(result["param"]["values"], serde_json::json!([0.0]));
}

#[test]
fn config_errors_name_the_key_or_line() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let cases = [
        ("type.toml", "[problem]\nbeta = \"hot\"\n", vec!["problem.beta", "line 2"]),
        ("unknown.toml", "[solver]\norder = 40\nwidth = 3\n", vec!["solver.width", "line 3"]),
        ("phi.toml", "[problem]\nphi = \"cosh\"\n", vec!["problem.phi", "cosh"]),
        ("param.toml", "[param]\nvalues = [1.5]\n", vec!["param"]),
        ("grid.toml", "[scan]\nxs = []\n", vec!["scan.xs"]),
        ("tol.toml", "[tolerances]\ngap = -1.0\n", vec!["tolerances.gap"]),
        ("syntax.toml", "[problem\n", vec!["line 1"]),
        ("wrong.toml", "command = \"minimize\"\n", vec!["minimize", "solve"]),
    ];
    for (name, text, needles) in cases {
        let cfg = write(dir.path(), name, text);
        let o = run("solve", &cfg, &out);
        assert_eq!(o.status.code(), Some(1), "{name}");
        let err = stderr(&o);
        for n in needles {
            assert!(err.contains(n), "{name}: `{n}` not in {err}");
        }
    }
    assert!(!out.join("snapshots.csv").exists());
    let o = lab(&["solve", "--config", dir.path().join("missing.toml").to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.toml"));
}

#[test]
fn no_temporary_files_remain() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "solve.toml", SOLVE);
    let out = dir.path().join("out");
    assert!(run("solve", &cfg, &out).status.success());
    let names: Vec<String> = files(&out).into_keys().collect();
    assert_eq!(names, ["effective_config.toml", "snapshots.csv", "summary.json", "terminal.csv"]);
}

const SUITE: &str = r#"
seed = 3
[problem]
phi = "log_cosh"
[scan]
xs = [0.0, 0.5, 1.0, 2.0]
ts = [0.5, 1.0]
ms = { start = 0.0, stop = 1.0, count = 41 }
covariance_checks = 10
"#;

#[test]
fn plots_are_valid_and_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "suite.toml", SUITE);
    let out = dir.path().join("suite");
    let o = run("ineq-suite", &cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let curve = out.join("curve.csv");
    let copy = dir.path().join("copy.csv");
    fs::copy(&curve, &copy).unwrap();

    let mut svgs = Vec::new();
    for (input, name) in [(&curve, "a.svg"), (&copy, "b.svg")] {
        let o = lab(
            &[
                "plot", "--input", input.to_str().unwrap(), "--x", "m", "--y", "value", "--group", "x", "--title",
                "F <x> & m", "--out", dir.path().to_str().unwrap(), "--output", name,
            ],
            &[],
        );
        assert!(o.status.success(), "{}", stderr(&o));
        svgs.push(fs::read(dir.path().join(name)).unwrap());
    }
    assert!(!svgs[0].is_empty());
    assert_eq!(svgs[0], svgs[1]);
    let text = String::from_utf8(svgs[0].clone()).unwrap();
    let doc = roxmltree::Document::parse(&text).expect("well-formed XML");
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let lines: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("polyline")).collect();
    assert_eq!(lines.len(), 4);
    assert!(doc.descendants().any(|n| n.text() == Some("F <x> & m")));

    // Each polyline is convex: screen y is inverted, so second differences of
    // the y coordinates are nonpositive.
    for l in lines {
        let pts: Vec<(f64, f64)> = l
            .attribute("points")
            .unwrap()
            .split(' ')
            .map(|p| {
                let (x, y) = p.split_once(',').unwrap();
                (x.parse().unwrap(), y.parse().unwrap())
            })
            .collect();
        assert_eq!(pts.len(), 41);
        assert!(pts.windows(3).all(|w| w[0].1 - 2.0 * w[1].1 + w[2].1 <= 0.02));
    }
}

#[test]
fn plot_from_config_section() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "data.csv", "alpha,gap\n0,0\n0.5,0.25\n1,0\n");
    let cfg = write(
        dir.path(),
        "plot.toml",
        &format!(
            "command = \"plot\"\n[plot]\ninput = {:?}\nx = \"alpha\"\ny = \"gap\"\nkind = \"scatter\"\noutput = \"gap.svg\"\n",
            data.to_str().unwrap()
        ),
    );
    let o = lab(&["plot", "--config", cfg.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = fs::read_to_string(dir.path().join("gap.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("circle")).count(), 3);
}

#[test]
fn plot_errors_write_nothing() {
    let dir = TempDir::new().unwrap();
    let empty = write(dir.path(), "empty.csv", "m,value\n");
    let out = dir.path().join("plots");
    let o = lab(
        &["plot", "--input", empty.to_str().unwrap(), "--x", "m", "--y", "value", "--out", out.to_str().unwrap()],
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no data rows"), "{}", stderr(&o));
    assert!(!out.exists() || fs::read_dir(&out).unwrap().next().is_none());

    let data = write(dir.path(), "data.csv", "m,value\n0,1\n");
    let o = lab(
        &["plot", "--input", data.to_str().unwrap(), "--x", "m", "--y", "F", "--out", out.to_str().unwrap()],
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing column `F`"), "{}", stderr(&o));
    assert!(!out.exists() || fs::read_dir(&out).unwrap().next().is_none());
}

#[test]
fn every_subcommand_runs() {
    let dir = TempDir::new().unwrap();
    let small = r#"
seed = 2
[problem]
phi = "log_cosh"
phi2 = "2*log_cosh"
steps = 1
[param]
values = [0.3]
[param2]
values = [0.8]
[solver]
order = 40
[solver.grid]
x_min = -10.0
x_max = 10.0
step = 0.05
[optimizer]
starts = 2
[scan]
xs = [-1.0, 0.0, 1.0]
ts = [0.5, 1.0]
ms = { start = 0.0, stop = 1.0, count = 5 }
alphas = [0.0, 0.5, 1.0]
covariance_checks = 4
radii = [2, 4]
"#;
    let cfg = write(dir.path(), "small.toml", small);
    let expected: &[(&str, &[&str])] = &[
        ("solve", &["snapshots.csv", "terminal.csv"]),
        ("parisi-eval", &["result.json", "result.csv"]),
        ("minimize", &["result.json", "starts.csv"]),
        ("convexity-scan", &["gaps.csv"]),
        ("conjecture-scan", &["gaps.csv", "pairs.csv", "candidates.csv"]),
        ("ineq-suite", &["mixture.csv", "curve.csv", "covariance.csv"]),
        ("max-principle", &["records.csv", "maxima.csv"]),
        ("mollify-demo", &["curves.csv"]),
    ];
    for (sub, outputs) in expected {
        let out = dir.path().join(sub);
        let o = run(sub, &cfg, &out);
        assert_eq!(o.status.code(), Some(0), "{sub}: {}{}", stdout(&o), stderr(&o));
        assert!(stdout(&o).starts_with(&format!("PASS {sub}:")));
        for f in outputs.iter().chain(&["summary.json", "effective_config.toml"]) {
            assert!(out.join(f).exists(), "{sub} did not write {f}");
        }
    }
}
