use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use tempfile::TempDir;

const HADAMARD: &str = r#"version = 1
dims = [2]

[state]
matrix = [[[1.0, 0.0], [0.0, 0.0]],
          [[0.0, 0.0], [0.0, 0.0]]]

[[times]]
label = "t0"
unitary = "identity"
basis = "computational"

[[times]]
label = "t1"
unitary = [[[0.7071067811865476, 0.0], [0.7071067811865476, 0.0]],
           [[0.7071067811865476, 0.0], [-0.7071067811865476, 0.0]]]
basis = "computational"
"#;

const COHERENT: &str = r#"version = 1
[state]
model = "coherent_qubit"
params = { beta = 1.0, g0 = 1.0, g1 = 2.0, a = 0.5 }
"#;

const PAIR: &str = r#"version = 1
[state]
model = "qubit_pair"
params = { beta_a = 2.5, beta_b = 1.0, a = 0.3 }

[[times]]
unitary = "identity"
basis = "sigma_z_product"

[[times]]
unitary = "partial_swap"
basis = "sigma_z_product"
"#;

/// Mixed qutrit with coherences and a three-time evolution.
const QUTRIT: &str = r#"version = 1
[state]
matrix = [[[0.5, 0.0], [0.1, 0.05], [0.0, 0.0]],
          [[0.1, -0.05], [0.3, 0.0], [0.02, 0.0]],
          [[0.0, 0.0], [0.02, 0.0], [0.2, 0.0]]]

[[times]]

[[times]]
unitary = [[[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]],
           [[0.6, 0.0], [0.0, 0.0], [0.0, 0.8]],
           [[0.8, 0.0], [0.0, 0.0], [0.0, -0.6]]]

[[times]]
unitary = [[[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]],
           [[0.0, 1.0], [0.0, 0.0], [0.0, 0.0]],
           [[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]]]
[options]
evolution = "incremental"
"#;

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        Self {
            dir: TempDir::new().unwrap(),
        }
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, contents).unwrap();
        p
    }
}

fn qbnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbnet"))
        .args(args)
        .output()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn header_value(csv: &str, key: &str) -> Option<String> {
    let prefix = format!("# {key} = ");
    csv.lines().find_map(|l| l.strip_prefix(&prefix).map(str::to_owned))
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn ini_value(text: &str, section: &str, key: &str) -> Option<String> {
    let mut inside = false;
    for line in text.lines() {
        if line.starts_with('[') {
            inside = line == format!("[{section}]");
        } else if inside {
            if let Some(v) = line.strip_prefix(&format!("{key} = ")) {
                return Some(v.to_owned());
            }
        }
    }
    None
}

#[test]
fn hadamard_exact_rows() {
    let fx = Fixture::new();
    let f = fx.file("h.toml", HADAMARD);
    let o = qbnet(&["exact", p(&f), "--method", "eq1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let rows = data_rows(&out);
    let expected = [("0", "0", 0.5), ("0", "1", 0.5), ("1", "0", 0.0), ("1", "1", 0.0)];
    assert_eq!(rows.len(), 4);
    for (row, (x0, x1, prob)) in rows.iter().zip(expected) {
        assert_eq!((row[0].as_str(), row[1].as_str()), (x0, x1));
        assert!((row[2].parse::<f64>().unwrap() - prob).abs() < 1e-15, "{row:?}");
    }
    assert_eq!(header_value(&out, "method").as_deref(), Some("exact-eq1"));
    assert!(out.contains("x0,x1,probability\n"));
}

#[test]
fn every_method_and_compare_all() {
    let fx = Fixture::new();
    for (name, src) in [("h", HADAMARD), ("c", COHERENT), ("p", PAIR), ("q", QUTRIT)] {
        let f = fx.file(&format!("{name}.toml"), src);
        let o = qbnet(&["exact", p(&f), "--compare-all"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        let out = stdout(&o);
        let dev: f64 = header_value(&out, "max_pairwise_deviation").unwrap().parse().unwrap();
        assert!(dev < 1e-10, "{name}: {dev}");
        assert!(out.contains("exact-eq1,postselect-exact,broadcast,povm\n"), "{out}");
        for method in ["eq1", "postselect", "broadcast", "povm"] {
            let o = qbnet(&["exact", p(&f), "--method", method]);
            assert_eq!(o.status.code(), Some(0), "{name} {method}: {}", stderr(&o));
        }
    }
}

#[test]
fn malformed_matrix_row_is_a_positioned_parse_error() {
    let fx = Fixture::new();
    let bad = HADAMARD.replace("[[0.0, 0.0], [0.0, 0.0]]]", "[[0.0, 0.0]]]");
    let f = fx.file("bad.toml", &bad);
    let o = qbnet(&["exact", p(&f)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 6"), "{err}");
    assert!(err.contains("state.matrix[1]"), "{err}");
    assert!(o.stdout.is_empty());

    let f = fx.file("syntax.toml", "version = 1\n[state\n");
    let o = qbnet(&["exact", p(&f)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let o = qbnet(&["exact", "/nonexistent/scenario.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qbnet(&["exact", p(&f), "--method", "eq7"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validation_errors_exit_three() {
    let fx = Fixture::new();
    let not_hermitian = HADAMARD.replace("[[1.0, 0.0], [0.0, 0.0]],", "[[1.0, 0.0], [0.3, 0.0]],");
    let not_unitary = HADAMARD.replace("[-0.7071067811865476, 0.0]", "[0.7071067811865476, 0.0]");
    let not_orthonormal = HADAMARD.replacen(
        "basis = \"computational\"",
        "basis = [[[1.0, 0.0], [0.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]]",
        1,
    );
    for (name, src, needle) in [
        ("herm", not_hermitian, "Hermitian"),
        ("unit", not_unitary, "unitary"),
        ("orth", not_orthonormal, "orthonormal"),
    ] {
        let f = fx.file(&format!("{name}.toml"), &src);
        let o = qbnet(&["exact", p(&f)]);
        assert_eq!(o.status.code(), Some(3), "{name}");
        assert!(stderr(&o).contains(needle), "{name}: {}", stderr(&o));
    }
    let f = fx.file("model.toml", &COHERENT.replace("a = 0.5", "a = 1.5"));
    assert_eq!(qbnet(&["exact", p(&f)]).status.code(), Some(3));
}

#[test]
fn caps_exit_four_and_can_be_raised() {
    let fx = Fixture::new();
    let f = fx.file("q.toml", QUTRIT);
    // 3^3 copy dimension = 27 and 27 paths
    let o = qbnet(&["exact", p(&f), "--method", "povm", "--cap-override", "20"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("cap"), "{}", stderr(&o));
    let o = qbnet(&["exact", p(&f), "--method", "povm", "--cap-override", "27"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let capped = format!("{QUTRIT}enumeration_cap = 10\n");
    let f = fx.file("capped.toml", &capped);
    assert_eq!(qbnet(&["exact", p(&f)]).status.code(), Some(4));
    assert_eq!(qbnet(&["sample", p(&f), "--shots", "10"]).status.code(), Some(4));
    assert_eq!(
        qbnet(&["exact", p(&f), "--cap-override", "100"]).status.code(),
        Some(0)
    );
}

#[test]
fn tolerance_flag_is_applied() {
    let fx = Fixture::new();
    // trace off by 1e-7
    let src = HADAMARD.replace("[[1.0, 0.0], [0.0, 0.0]],", "[[1.0000001, 0.0], [0.0, 0.0]],");
    let f = fx.file("t.toml", &src);
    assert_eq!(qbnet(&["exact", p(&f)]).status.code(), Some(3));
    assert_eq!(qbnet(&["exact", p(&f), "--tol", "1e-6"]).status.code(), Some(0));
    assert_eq!(qbnet(&["exact", p(&f), "--tol", "-1"]).status.code(), Some(2));
}

#[test]
fn sample_is_deterministic_and_consistent() {
    let fx = Fixture::new();
    let f = fx.file("c.toml", COHERENT);
    let a = qbnet(&["sample", p(&f), "--shots", "200000", "--seed", "7"]);
    let b = qbnet(&["sample", p(&f), "--shots", "200000", "--seed", "7"]);
    let c = qbnet(&["sample", p(&f), "--shots", "200000", "--seed", "8"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);

    let out = stdout(&a);
    assert_eq!(header_value(&out, "seed").as_deref(), Some("7"));
    assert_eq!(header_value(&out, "no_accepted_shots").as_deref(), Some("false"));
    let rate: f64 = header_value(&out, "acceptance_rate").unwrap().parse().unwrap();
    let expected: f64 = header_value(&out, "expected_acceptance_rate").unwrap().parse().unwrap();
    let se = (expected * (1.0 - expected) / 200_000.0).sqrt();
    assert!((rate - expected).abs() < 5.0 * se, "{rate} vs {expected}");

    let exact = stdout(&qbnet(&["exact", p(&f)]));
    for (srow, erow) in data_rows(&out).iter().zip(data_rows(&exact)) {
        let (est, se): (f64, f64) = (srow[3].parse().unwrap(), srow[4].parse().unwrap());
        let truth: f64 = erow[2].parse().unwrap();
        assert!((est - truth).abs() <= 5.0 * se.max(1e-12), "{srow:?} vs {truth}");
    }

    let default_seed = stdout(&qbnet(&["sample", p(&f), "--shots", "1000"]));
    assert_eq!(header_value(&default_seed, "seed").as_deref(), Some("0"));
}

#[test]
fn sample_flags_no_accepted_shots() {
    // uniform populations over four levels with eight copies: acceptance 4^-7
    let mut src = String::from(
        "version = 1\n[state]\nmatrix = [\n  [[0.25,0],[0,0],[0,0],[0,0]],\n  [[0,0],[0.25,0],[0,0],[0,0]],\n  [[0,0],[0,0],[0.25,0],[0,0]],\n  [[0,0],[0,0],[0,0],[0.25,0]]]\n",
    );
    for _ in 0..8 {
        src.push_str("[[times]]\n");
    }
    let fx = Fixture::new();
    let f = fx.file("z.toml", &src);
    let o = qbnet(&["sample", p(&f), "--shots", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(header_value(&out, "no_accepted_shots").as_deref(), Some("true"));
    assert_eq!(header_value(&out, "accepted").as_deref(), Some("0"));
}

#[test]
fn check_reports() {
    let fx = Fixture::new();
    let f = fx.file("c.toml", COHERENT);
    let o = qbnet(&["check", p(&f)]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}{}", stderr(&o));
    assert_eq!(ini_value(&out, "verify_povm", "pass").as_deref(), Some("true"));
    assert_eq!(ini_value(&out, "first_law", "pass").as_deref(), Some("true"));
    assert!(ini_value(&out, "jarzynski", "skipped").unwrap().starts_with("NotThermalInput"));
    assert_eq!(ini_value(&out, "summary", "pass").as_deref(), Some("true"));

    let f = fx.file("thermal.toml", &COHERENT.replace("a = 0.5", "a = 0.0"));
    let out = stdout(&qbnet(&["check", p(&f)]));
    assert_eq!(ini_value(&out, "jarzynski", "pass").as_deref(), Some("true"), "{out}");
    let ratio: f64 = ini_value(&out, "jarzynski", "partition_ratio").unwrap().parse().unwrap();
    assert!((ratio - 2f64.cosh() / 1f64.cosh()).abs() < 1e-12);

    let f = fx.file("p.toml", PAIR);
    let o = qbnet(&["check", p(&f)]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}");
    assert_eq!(ini_value(&out, "verify_povm", "pass").as_deref(), Some("true"));
    assert_eq!(ini_value(&out, "first_law", "skipped").as_deref(), Some("no energies given"));
    let o = qbnet(&["check", p(&f), "--energies", "2,0,0,-2;2,0,0,-2"]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}");
    assert_eq!(ini_value(&out, "first_law", "pass").as_deref(), Some("true"));
    assert_eq!(ini_value(&out, "jarzynski", "skipped").as_deref(), Some("no beta given"));

    assert_eq!(qbnet(&["check", p(&f), "--energies", "1,2"]).status.code(), Some(2));
    assert_eq!(
        qbnet(&["check", p(&f), "--energies", "1,2;3,4"]).status.code(),
        Some(3)
    );
}

#[test]
fn figures() {
    let start = Instant::now();
    let o = qbnet(&["figure", "fig2"]);
    assert!(start.elapsed().as_secs_f64() < 10.0);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(header_value(&out, "g0").as_deref(), Some("1"));
    assert!(out.contains("T,a,engine_pp,tpm_pp,analytic_pp,status\n"));
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 5 * 200);
    for row in rows.iter().filter(|r| r[1] == "0") {
        let (e, t): (f64, f64) = (row[2].parse().unwrap(), row[3].parse().unwrap());
        assert!((e - t).abs() <= 1e-12, "{row:?}");
    }

    let o = qbnet(&["figure", "fig3", "--a", "0,0.5", "--t-min", "0.1", "--t-max", "2", "--points", "7", "--t-a", "0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(header_value(&out, "T_A").as_deref(), Some("0.5"));
    assert_eq!(header_value(&out, "a_values").as_deref(), Some("0 0.5"));
    assert_eq!(data_rows(&out).len(), 14);

    assert_eq!(qbnet(&["figure", "fig3", "--g0", "2"]).status.code(), Some(2));
    assert_eq!(qbnet(&["figure", "fig2", "--t-min", "-1"]).status.code(), Some(3));
    assert_eq!(qbnet(&["figure", "fig4"]).status.code(), Some(2));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let fx = Fixture::new();
    let f = fx.file("q.toml", QUTRIT);
    let runs: [&[&str]; 4] = [
        &["exact", p(&f), "--compare-all"],
        &["sample", p(&f), "--shots", "50000", "--seed", "3"],
        &["figure", "fig2", "--points", "40"],
        &["figure", "fig3", "--points", "40"],
    ];
    for (k, args) in runs.iter().enumerate() {
        let first = fx.dir.path().join(format!("{k}a.csv"));
        let second = fx.dir.path().join(format!("{k}b.csv"));
        for out in [&first, &second] {
            let mut full = args.to_vec();
            full.extend(["--output", p(out)]);
            let o = qbnet(&full);
            assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
            assert!(o.stdout.is_empty());
        }
        let (a, b) = (std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
        assert!(!a.is_empty());
        assert_eq!(a, b, "{args:?}");
    }
}
