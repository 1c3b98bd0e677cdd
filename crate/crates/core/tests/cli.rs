//! Command-line behaviour: exit codes, artifact schemas and reproducibility.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use volpeak::export::{CURVES_HEADER, DENSITY_HEADER, SUMMARY_HEADER};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn volpeak(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_volpeak"))
        .args(args)
        .env_remove("VOLPEAK_OUT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const SMALL_VALUATION: &str = r#"
model = "valuation"
sigma = 0.5
y0 = 0.9
t0 = 0.0
t_end = 6.0
dt = 0.01
n_paths = 500
seed = 3

[drift]
family = "quadratic_bump"
params = [1.5, 0.1, 2.0]
"#;

#[test]
fn canonical_ordering_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = volpeak(&[
        "run",
        scenario("canonical.cfg").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--paths",
        "400",
        "--verify",
        "ordering,signlemmas",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(first_line(&out.join("curves.csv")), CURVES_HEADER);
    assert_eq!(
        first_line(&out.join("ensemble_summary.csv")),
        SUMMARY_HEADER
    );
    let report = fs::read_to_string(out.join("extrema_report.txt")).unwrap();
    let value = |key: &str| -> f64 {
        let line = report
            .lines()
            .find(|l| l.starts_with(&format!("{key} = ")))
            .unwrap();
        line.split(" = ").nth(1).unwrap().parse().unwrap()
    };
    let times = [
        value("t0"),
        value("t1"),
        value("tv"),
        value("tm"),
        value("tstar"),
    ];
    assert!(times.windows(2).all(|w| w[0] < w[1]), "{times:?}");
    assert!(report.contains("ordering_ok = true"));
    let verify = fs::read_to_string(out.join("verify.txt")).unwrap();
    assert!(verify.starts_with("ordering PASS"), "{verify}");
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    for name in [
        "curves.csv",
        "ensemble_summary.csv",
        "extrema_report.txt",
        "verify.txt",
    ] {
        let bytes = fs::read(out.join(name)).unwrap();
        let line = format!(
            "{name} = {}",
            hex::encode(<sha2::Sha256 as sha2::Digest>::digest(&bytes))
        );
        assert!(manifest.contains(&line), "{name} missing from manifest");
    }
    assert!(manifest.contains("n_paths = 400"));
}

#[test]
fn csv_rows_have_one_cell_per_column() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "v.cfg", SMALL_VALUATION);
    let out = tmp.path().join("o");
    let o = volpeak(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    for (file, cols, rows) in [("curves.csv", 8, 602), ("ensemble_summary.csv", 5, 602)] {
        let text = fs::read_to_string(out.join(file)).unwrap();
        assert!(!text.contains('\r'));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), rows);
        for l in &lines[1..] {
            assert_eq!(l.split(',').count(), cols);
            for cell in l.split(',') {
                assert!(cell.parse::<f64>().is_ok(), "{cell}");
            }
        }
    }
    assert_eq!(
        fs::read_to_string(out.join("verify.txt")).unwrap(),
        "no verifications requested\n"
    );
}

#[test]
fn gbm_flat_volatility() {
    let tmp = tempfile::tempdir().unwrap();
    let o = volpeak(&[
        "run",
        scenario("gbm.cfg").to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
        "--paths",
        "20000",
        "--verify",
        "flatvol",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let curves = fs::read_to_string(tmp.path().join("curves.csv")).unwrap();
    for l in curves.lines().skip(1) {
        assert_eq!(l.split(',').nth(6).unwrap().parse::<f64>().unwrap(), 0.09);
    }
}

#[test]
fn density_verification_writes_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let o = volpeak(&[
        "run",
        scenario("supply_demand.cfg").to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
        "--paths",
        "5000",
        "--dt",
        "0.01",
        "--verify",
        "densitymatch",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    for name in ["density_exact.csv", "density_approx.csv"] {
        assert_eq!(first_line(&tmp.path().join(name)), DENSITY_HEADER);
    }
}

#[test]
fn failing_verification_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = volpeak(&[
        "run",
        scenario("gbm.cfg").to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
        "--paths",
        "100",
        "--verify",
        "ordering",
    ]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("ordering FAIL"));
}

#[test]
fn missing_sigma_is_a_parse_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.cfg",
        &SMALL_VALUATION.replace("sigma = 0.5\n", ""),
    );
    let o = volpeak(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("sigma"));
}

#[test]
fn unreadable_config_and_bad_flags_exit_two() {
    let o = volpeak(&["run", "/nonexistent/x.cfg"]);
    assert_eq!(code(&o), 2);
    let o = volpeak(&[
        "run",
        scenario("gbm.cfg").to_str().unwrap(),
        "--verify",
        "peak",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn validation_errors_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let zero_paths = write_config(
        tmp.path(),
        "z.cfg",
        &SMALL_VALUATION.replace("n_paths = 500", "n_paths = 0"),
    );
    let o = volpeak(&[
        "run",
        zero_paths.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let varying = SMALL_VALUATION.replace("sigma = 0.5\n", "")
        + "\n[sigma]\nfamily = \"linear\"\nparams = [0.5, 0.01]\n";
    let cfg = write_config(tmp.path(), "s.cfg", &varying);
    let o = volpeak(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn guard_violation_exits_four() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario("stochastic_f.cfg"))
        .unwrap()
        .replace(
            "[sigma_f]\nfamily = \"constant\"\nparams = [0.1]",
            "[sigma_f]\nfamily = \"constant\"\nparams = [3.0]",
        );
    let cfg = write_config(tmp.path(), "g.cfg", &text);
    let o = volpeak(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
        "--paths",
        "2000",
    ]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1+f>0"));
}

#[test]
fn sweep_over_shape_and_sigma() {
    let tmp = tempfile::tempdir().unwrap();
    let o = volpeak(&[
        "sweep",
        scenario("family.cfg").to_str().unwrap(),
        "--grid",
        "params.1=0.05,0.1,0.2",
        "--grid",
        "sigma=0.2,0.5,1.5",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("pass rate: "));
    let text = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "params.1,sigma,sigma_ok,c1_ok,c2_ok,c3_ok,e_ok,e_value,t1,tv,tv_count,tm,tstar,ordering,margins_ok,error"
    );
    assert_eq!(lines.len(), 10);
    for l in lines
        .iter()
        .skip(1)
        .filter(|l| l.split(',').nth(1).unwrap().starts_with("1.5"))
    {
        let cells: Vec<&str> = l.split(',').collect();
        assert_eq!(cells[2], "false");
        assert_eq!(cells[13], "na");
    }
}

#[test]
fn empty_sweep_grid_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario("family.cfg");
    let o = volpeak(&[
        "sweep",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
    let o = volpeak(&[
        "sweep",
        cfg.to_str().unwrap(),
        "--grid",
        "sigma=",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn sweep_records_row_errors_and_continues() {
    let tmp = tempfile::tempdir().unwrap();
    let o = volpeak(&[
        "sweep",
        scenario("family.cfg").to_str().unwrap(),
        "--grid",
        "dt=0.001,-1",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].ends_with(','));
    assert!(lines[2].contains("grid step"), "{}", lines[2]);
}

#[test]
fn reruns_are_byte_identical_and_env_sets_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "v.cfg", SMALL_VALUATION);
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "4"].iter().enumerate() {
        let out = tmp.path().join(format!("run{i}"));
        let o = Command::new(env!("CARGO_BIN_EXE_volpeak"))
            .args(["run", cfg.to_str().unwrap(), "--verify", "jensen,mcmatch"])
            .env("VOLPEAK_OUT", &out)
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.code().is_some());
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().to_string_lossy().into_owned(),
                    fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        files.sort();
        outputs.push(files);
    }
    assert_eq!(outputs[0].len(), 5);
    assert_eq!(outputs[0], outputs[1]);
}
