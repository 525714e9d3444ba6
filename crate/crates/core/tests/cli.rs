use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn shide(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shide"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn sample_model_v_is_deterministic_and_truncated() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for p in [&a, &b] {
        let out = shide(&[
            "sample",
            "--model",
            "V",
            "--n",
            "100",
            "--seed",
            "1",
            "--output",
            path_str(p),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let values: Vec<f64> = text.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), 100);
    assert!(values.iter().all(|&v| v > -1.0 && v < 0.5));
}

#[test]
fn sample_rejects_bad_arguments() {
    assert!(!shide(&["sample", "--model", "I", "--n", "0"])
        .status
        .success());
    let out = shide(&["sample", "--model", "VI", "--n", "5"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("unknown model"));
}

#[test]
fn estimate_respects_lower_bound_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("exp.txt");
    let out = shide(&[
        "sample",
        "--model",
        "IV",
        "--n",
        "200",
        "--seed",
        "3",
        "--output",
        path_str(&data),
    ]);
    assert!(out.status.success());

    let mut files = Vec::new();
    for name in ["one.csv", "two.csv"] {
        let target = dir.path().join(name);
        let out = shide(&[
            "estimate",
            "--method",
            "shide",
            "--bandwidth",
            "perc",
            "--alpha",
            "0.5",
            "--k",
            "3",
            "--m",
            "10",
            "--lower",
            "0",
            "--seed",
            "7",
            "--grid",
            "512",
            "--input",
            path_str(&data),
            "--output",
            path_str(&target),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        let summary = stderr(&out);
        for key in ["method=shide", "h=", "theta=", "bins=", "seed=7"] {
            assert!(summary.contains(key), "{summary}");
        }
        files.push(fs::read(&target).unwrap());
    }
    assert_eq!(files[0], files[1]);

    let text = String::from_utf8(files.remove(0)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,density"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (x, y) = l.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 512);
    assert!(rows.iter().any(|&(x, _)| x <= 0.0));
    assert!(rows
        .iter()
        .filter(|&&(x, _)| x <= 0.0)
        .all(|&(_, y)| y == 0.0));
    assert!(rows.iter().any(|&(_, y)| y > 0.0));
}

#[test]
fn estimate_methods_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mixed = dir.path().join("mixed.txt");
    fs::write(&mixed, "value\n-1.5\n0.3\n2.0\n").unwrap();
    let target = dir.path().join("out.csv");

    let out = shide(&[
        "estimate",
        "--method",
        "mkde",
        "--input",
        path_str(&mixed),
        "--output",
        path_str(&target),
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("sign domain"), "{}", stderr(&out));
    assert!(!target.exists(), "no output file on failure");

    for method in ["kde", "shide"] {
        let out = shide(&[
            "estimate",
            "--method",
            method,
            "--grid",
            "64",
            "--input",
            path_str(&mixed),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 65);
    }

    let positive = dir.path().join("pos.txt");
    fs::write(&positive, "0.5\n1.2\n2.2\n0.9\n3.1\n").unwrap();
    let out = shide(&[
        "estimate",
        "--method",
        "mkde",
        "--bw",
        "silverman",
        "--input",
        path_str(&positive),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "1\nabc\n").unwrap();
    let out = shide(&["estimate", "--input", path_str(&bad)]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));

    let out = shide(&["estimate", "--input", path_str(&positive), "--lower", "1"]);
    assert!(!out.status.success());
    assert!(
        stderr(&out).contains("outside the support"),
        "{}",
        stderr(&out)
    );

    assert!(!shide(&["estimate", "--no-such-flag"]).status.success());
}

#[test]
fn kde_command_writes_grid() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.txt");
    fs::write(&data, "x\n0.1\n-0.4\n1.3\n0.8\n-1.1\n").unwrap();
    for bw in ["sj", "silverman", "0.3"] {
        let out = shide(&[
            "kde",
            "--bw",
            bw,
            "--grid",
            "100",
            "--input",
            path_str(&data),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        let text = String::from_utf8(out.stdout).unwrap();
        assert_eq!(text.lines().count(), 101);
    }
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[test]
fn bench_cardinality_and_summary_consistency() {
    let dir = tempfile::tempdir().unwrap();
    let detail = dir.path().join("run.csv");
    let out = shide(&[
        "bench",
        "--models",
        "I,IV",
        "--n",
        "50,500",
        "--reps",
        "100",
        "--seed",
        "42",
        "--output",
        path_str(&detail),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&detail).unwrap();
    assert!(text.starts_with("# "));
    assert_eq!(
        text.lines().nth(1),
        Some("model,n,method,selector,rep,mise")
    );
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 2 * 2 * 3 * 100);

    let summary = fs::read_to_string(dir.path().join("run_summary.csv")).unwrap();
    assert_eq!(
        summary.lines().nth(1),
        Some("model,n,method,selector,median,mad")
    );
    let cells = csv_rows(&summary);
    assert_eq!(cells.len(), 12);
    for cell in cells {
        let mut mises: Vec<f64> = rows
            .iter()
            .filter(|r| r[..4] == cell[..4])
            .map(|r| r[5].parse().unwrap())
            .collect();
        assert_eq!(mises.len(), 100);
        let med = median(&mut mises);
        let mut dev: Vec<f64> = mises.iter().map(|m| (m - med).abs()).collect();
        let mad = median(&mut dev);
        let stored_med: f64 = cell[4].parse().unwrap();
        let stored_mad: f64 = cell[5].parse().unwrap();
        assert!((med - stored_med).abs() <= 1e-12);
        assert!((mad - stored_mad).abs() <= 1e-12);
    }
}

#[test]
fn bench_output_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for jobs in ["1", "3"] {
        let detail = dir.path().join(format!("jobs{jobs}.csv"));
        let out = shide(&[
            "bench",
            "--models",
            "II,V",
            "--n",
            "40",
            "--reps",
            "6",
            "--seed",
            "9",
            "--jobs",
            jobs,
            "--output",
            path_str(&detail),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        outputs.push((
            fs::read(&detail).unwrap(),
            fs::read(dir.path().join(format!("jobs{jobs}_summary.csv"))).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn bench_rejects_unknown_model() {
    let out = shide(&["bench", "--models", "VI", "--reps", "1"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("unknown model"));
}

#[test]
fn help_lists_flags_with_defaults() {
    let expectations: [(&str, &[&str]); 4] = [
        (
            "estimate",
            &[
                "--input",
                "--output",
                "--seed",
                "--grid",
                "--method",
                "--bandwidth",
                "--alpha",
                "--k",
                "--m",
                "--c",
                "--lower",
                "--upper",
                "--normalize",
                "--roughness",
                "--working-scale",
                "[default: 512]",
                "[default: 0.5]",
                "[default: 3]",
                "[default: 10]",
                "[default: exact]",
                "[default: original]",
                "[default: shide]",
            ],
        ),
        ("kde", &["--bw", "[default: sj]", "--input"]),
        ("sample", &["--model", "--n", "--seed", "[default: 0]"]),
        (
            "bench",
            &[
                "--models",
                "--n",
                "--reps",
                "[default: 300]",
                "--methods",
                "--jobs",
                "--model5-sigma",
                "[default: 3]",
            ],
        ),
    ];
    for (command, needles) in expectations {
        let out = shide(&[command, "--help"]);
        assert!(out.status.success());
        let text = String::from_utf8_lossy(&out.stdout);
        for needle in needles {
            assert!(
                text.contains(needle),
                "{command} --help lacks {needle}:\n{text}"
            );
        }
    }
}

#[cfg(unix)]
#[test]
fn output_file_gets_default_mode() {
    use std::os::unix::fs::PermissionsExt;
    let dir = tempfile::tempdir().unwrap();
    let reference = dir.path().join("plain");
    fs::File::create(&reference).unwrap();
    let target = dir.path().join("s.txt");
    let out = shide(&[
        "sample",
        "--model",
        "I",
        "--n",
        "3",
        "--output",
        path_str(&target),
    ]);
    assert!(out.status.success());
    let mode = |p: &Path| fs::metadata(p).unwrap().permissions().mode() & 0o777;
    assert_eq!(mode(&target), mode(&reference));
}
