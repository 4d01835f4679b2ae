use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mongeampere::cli::RunConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mongeampere"))
}

struct Run {
    dir: tempfile::TempDir,
}

impl Run {
    fn new(config: &str) -> Run {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("run.ini"), config).unwrap();
        Run { dir }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn exec(&self, cmd: &str, out: &str, extra: &[&str]) -> Output {
        bin()
            .arg(cmd)
            .arg("--config")
            .arg(self.dir.path().join("run.ini"))
            .arg("--out")
            .arg(self.out(out))
            .args(extra)
            .output()
            .unwrap()
    }
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

const MANUFACTURED: &str = "[problem]\ninstance = manufactured-ma\nh = 0.0625\n";

#[test]
fn solve_manufactured_writes_outputs() {
    let run = Run::new(MANUFACTURED);
    let o = run.exec("solve", "out", &["--format", "csv,vtk"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dir = run.out("out");
    for f in ["u.csv", "u.vtk", "trace.csv", "summary.txt", "resolved.ini"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let trace = read(&dir.join("trace.csv"));
    assert!(trace.starts_with("t,iter,residual,min_eig,alpha\n"));
    assert!(trace.contains(mongeampere::diagnostics::EstimateReport::CSV_HEADER));
    let last_residual: f64 = trace
        .lines()
        .take_while(|l| !l.is_empty())
        .last()
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert!(last_residual <= 1e-9);
    assert_eq!(read(&dir.join("u.csv")).lines().count(), 1 + 225 + 64);
}

#[test]
fn subsolution_gate_rejects_before_solving() {
    let run = Run::new(
        "[problem]\ndomain = centered-square\nh = 0.0625\nphi = |x|^2\nsubsolution = 0.5*|x|^2\n\
         [model]\nname = zero\nb = 4\n",
    );
    let o = run.exec("solve", "out", &[]);
    assert_eq!(o.status.code(), Some(4));
    assert!(
        stderr(&o).contains("subsolution rejected"),
        "{}",
        stderr(&o)
    );
    assert!(!run.out("out").join("u.csv").exists());
}

#[test]
fn malformed_configs_exit_1_with_location() {
    let cases = [
        (
            "[problem]\ninstance = manufactured-ma\nbogus = 1\n",
            "line 3",
        ),
        (
            "[problem]\ninstance = manufactured-ma\n[solver]\ntol = fast\n",
            "line 4",
        ),
        (
            "[problem]\ninstance = manufactured-ma\nh = 0.1\nh = 0.2\n",
            "duplicate key",
        ),
        ("[problem\n", "line 1"),
        (
            "[problem]\ndomain = centered-square\nphi = exp(|x|^2\n",
            "line 3",
        ),
    ];
    for (cfg, needle) in cases {
        let run = Run::new(cfg);
        let o = run.exec("solve", "out", &[]);
        assert_eq!(o.status.code(), Some(1), "{cfg}");
        assert!(stderr(&o).contains(needle), "{cfg}: {}", stderr(&o));
    }
    let o = bin().args(["solve"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = bin()
        .args(["frobnicate", "--config", "x"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn stall_and_ellipticity_exit_codes() {
    // One Newton iteration per step can never reach the tolerance.
    let run = Run::new(&format!(
        "{MANUFACTURED}[solver]\nmax_newton = 1\nmin_step = 0.2\n"
    ));
    let o = run.exec("solve", "out", &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    // Concave boundary data admit no convex solution.
    let run = Run::new(
        "[problem]\ndomain = centered-square\nh = 0.0625\nphi = -|x|^2\nsubsolution = |x|^2\n\
         [model]\nname = zero\nb = 1\n[checks]\ngate = false\n[solver]\nmin_step = 0.01\n",
    );
    let o = run.exec("solve", "out", &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn verify_exit_codes() {
    let all = "regularity, structure, a0-eigenvalue, b-positive, subsolution, strict-subsolution, \
               uniform-a-convexity, a-bounded, barrier, comparison";
    let run = Run::new(&format!(
        "[problem]\ninstance = manufactured-ma-disc\nh = 0.1\n[checks]\nnames = {all}\nphi_bar = 2*|x|^2\n"
    ));
    let o = run.exec("verify", "out", &[]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let csv = read(&run.out("out").join("checks.csv"));
    assert_eq!(
        csv.lines().next(),
        Some("name,samples,min_margin,witness,pass")
    );
    assert_eq!(csv.lines().count(), 11);
    assert!(run.out("out").join("barrier.csv").exists());

    let run = Run::new(
        "[problem]\ndomain = centered-square\nh = 0.0625\nphi = |x|^2\nsubsolution = |x|^2\n\
         [model]\nname = custom-matrix\na11 = -2*(1 + |p|^2)\na12 = 0\na22 = -2*(1 + |p|^2)\nb = 1\n\
         [checks]\nnames = structure\n",
    );
    let o = run.exec("verify", "out", &[]);
    assert_eq!(o.status.code(), Some(4));
    assert!(read(&run.out("out").join("checks.csv")).contains(",false"));
}

#[test]
fn regularity_verdicts_for_cost_models() {
    let verdict = |model: &str| {
        let run = Run::new(&format!(
            "[problem]\ndomain = centered-square\nh = 0.125\nphi = |x|^2\n\
             [model]\nname = {model}\nclosed-form = true\nb = 1\n[checks]\nnames = regularity\np_radius = 0.9\n"
        ));
        run.exec("verify", "out", &[]).status.code()
    };
    assert_eq!(verdict("neg-sqrt-cost"), Some(0));
    assert_eq!(verdict("log-cost"), Some(0));
    // √(1 − |p|²)(I − p⊗p) violates the inequality.
    assert_eq!(verdict("sqrt-cost"), Some(4));
}

#[test]
fn study_table_and_single_resolution() {
    let run = Run::new(&format!(
        "{MANUFACTURED}[study]\nh = 0.0625, 0.03125, 0.015625\n"
    ));
    let o = run.exec("study", "out", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = read(&run.out("out").join("study.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    let col = lines[0].split(',').position(|c| c == "order").unwrap();
    for row in &lines[2..] {
        let order: f64 = row.split(',').nth(col).unwrap().parse().unwrap();
        assert!((1.7..=2.3).contains(&order), "{row}");
    }

    let run = Run::new(&format!("{MANUFACTURED}[study]\nh = 0.0625\n"));
    let o = run.exec("study", "out", &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("need ≥2 resolutions"), "{}", stderr(&o));
}

#[test]
fn transport_on_quadratic_instance_is_exact() {
    let run = Run::new("[problem]\ninstance = quadratic-transport\nh = 0.0625\n");
    let o = run.exec("transport", "out", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = read(&run.out("out").join("transport.csv"));
    assert!(csv.starts_with("x1,x2,residual\n"));
    let max = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap().abs())
        .fold(0.0, f64::max);
    assert!(max <= 1e-9);

    let run = Run::new(MANUFACTURED);
    assert_eq!(run.exec("transport", "out", &[]).status.code(), Some(1));
}

#[test]
fn resolved_config_reproduces_the_run() {
    let run = Run::new(
        "seed = 5\n[problem]\ninstance = sqrt-transport\nh = 0.0625\n\
         [checks]\nnames = regularity, structure, domain-c-convexity\ny_radius = 0.5\n",
    );
    let o = run.exec("verify", "first", &["--seed", "9"]);
    assert_eq!(o.status.code(), Some(4));
    let resolved = read(&run.out("first").join("resolved.ini"));
    let cfg = RunConfig::parse(&resolved).unwrap();
    assert_eq!(cfg.seed, 9);
    assert_eq!(RunConfig::parse(&cfg.emit()).unwrap(), cfg);

    fs::write(run.dir.path().join("run.ini"), &resolved).unwrap();
    let o = run.exec("verify", "second", &[]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(
        read(&run.out("first").join("checks.csv")),
        read(&run.out("second").join("checks.csv"))
    );
    let o = run.exec("verify", "third", &["--seed", "10"]);
    assert_eq!(o.status.code(), Some(4));
    assert_ne!(
        read(&run.out("first").join("checks.csv")),
        read(&run.out("third").join("checks.csv"))
    );
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "ini") {
            RunConfig::parse(&read(&path)).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 4);
}
