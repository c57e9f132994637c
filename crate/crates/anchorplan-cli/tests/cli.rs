//! End-to-end tests of the `anchorplan` binary: exit codes, artifact
//! sets, and the promise that summary numbers can be recomputed from the
//! emitted maps.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_anchorplan");

/// A scratch directory holding a flat-seabed grid and one scenario file.
struct TestBed {
    dir: TempDir,
}

impl TestBed {
    /// Flat `n`×`n` grid (100 m cells, 30 m of water) plus the given
    /// scenario, patched to reference it.
    fn new(n: usize, mut scenario: Value) -> TestBed {
        let dir = TempDir::new().unwrap();
        let mut grid = format!(
            "ncols {n}\nnrows {n}\nxllcorner 0.0\nyllcorner 0.0\ncellsize 100.0\nNODATA_value -9999\n"
        );
        for _ in 0..n {
            grid.push_str(&vec!["30.0"; n].join(" "));
            grid.push('\n');
        }
        std::fs::write(dir.path().join("grid.asc"), grid).unwrap();
        scenario["bathymetry"] = json!("grid.asc");
        std::fs::write(
            dir.path().join("scenario.json"),
            serde_json::to_string_pretty(&scenario).unwrap(),
        )
        .unwrap();
        TestBed { dir }
    }

    fn scenario(&self) -> PathBuf {
        self.dir.path().join("scenario.json")
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(BIN)
            .args(args)
            .current_dir(self.dir.path())
            .output()
            .expect("binary should spawn")
    }
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no exit code")
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

/// Pull `key = value` out of a summary/comparison file.
fn field(text: &str, key: &str) -> String {
    let prefix = format!("{key} = ");
    text.lines()
        .find_map(|line| line.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no `{key}` line in:\n{text}"))
        .to_string()
}

fn float_field(text: &str, key: &str) -> f64 {
    field(text, key).parse().expect("numeric field")
}

/// Scenario with a detection radius small enough (300 m) that coverage
/// questions stay local on a 12×12 grid.
fn base_scenario() -> Value {
    json!({
        "acoustics": {
            // 10·log10(R) transmission loss with no absorption and a
            // 10 dB floor over 100 dB noise: detection out to exactly
            // the radius encoded in the source level.
            "source_level_db": 110.0 + 10.0 * 300.0f64.log10(),
            "noise_level_db": 100.0,
            "detection_threshold_db": 10.0,
            "absorption_db_per_km": 0.0,
            "frequency_khz": 69.0
        },
        "receiver_count": 3,
        "coverage": { "alpha": 5.0, "beta": 3, "rho": 0.0 },
        "ga": { "population": 16, "generations": 10 },
        "cp_spacing_m": 150.0,
        "seed": 1,
        "out_dir": "run"
    })
}

// ---------- plan ----------

#[test]
fn plan_writes_artifacts_and_summary_matches_the_map() {
    let bed = TestBed::new(12, base_scenario());
    let out = bed.run(&["plan", "--scenario", "scenario.json"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    for name in [
        "deployment.csv",
        "coverage_map.csv",
        "gdop_map.csv",
        "coverage.pgm",
        "ga_trace.csv",
        "summary.txt",
    ] {
        assert!(bed.out("run").join(name).exists(), "missing {name}");
    }

    let summary = read(&bed.out("run").join("summary.txt"));
    let coverage_cells: usize = field(&summary, "coverage_cells").parse().unwrap();
    let area = float_field(&summary, "coverage_area_m2");
    let fraction = float_field(&summary, "aoi_coverage_fraction");
    let fitness = float_field(&summary, "fitness");

    // Recompute everything from the emitted map: the summary may not
    // contain anything the artifacts cannot reproduce.
    let map = read(&bed.out("run").join("coverage_map.csv"));
    let usable = map
        .lines()
        .skip(1)
        .filter(|line| line.ends_with(",1"))
        .count();
    assert_eq!(usable, coverage_cells);
    assert!((area - usable as f64 * 100.0 * 100.0).abs() < 1e-6);
    assert!((fraction - usable as f64 / 144.0).abs() < 1e-6);
    // rho = 0: the constraint is trivially met and fitness is the cell count.
    assert_eq!(field(&summary, "constraint_met"), "true");
    assert!((fitness - coverage_cells as f64).abs() < 1e-9);

    let deployment = read(&bed.out("run").join("deployment.csv"));
    assert_eq!(deployment.lines().count(), 4, "header plus three receivers");
    assert!(deployment.starts_with("id,x,y,z\n"));
}

#[test]
fn plan_with_unmet_constraint_exits_two_but_still_writes() {
    let mut scenario = base_scenario();
    scenario["coverage"]["rho"] = json!(1.0);
    let bed = TestBed::new(12, scenario);
    let out = bed.run(&["plan", "--scenario", "scenario.json"]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));

    let summary = read(&bed.out("run").join("summary.txt"));
    assert_eq!(field(&summary, "constraint_met"), "false");
    assert!(bed.out("run").join("deployment.csv").exists());
    assert!(bed.out("run").join("coverage_map.csv").exists());
}

#[test]
fn missing_bathymetry_exits_one_with_a_diagnostic() {
    let mut scenario = base_scenario();
    let bed = TestBed::new(12, scenario.clone());
    scenario["bathymetry"] = json!("nowhere.asc");
    std::fs::write(
        bed.scenario(),
        serde_json::to_string_pretty(&scenario).unwrap(),
    )
    .unwrap();
    let out = bed.run(&["plan", "--scenario", "scenario.json"]);
    assert_eq!(code(&out), 1);
    assert!(
        stderr(&out).contains("scenario"),
        "diagnostic should name the scenario: {}",
        stderr(&out)
    );
}

#[test]
fn fewer_than_three_receivers_exits_one() {
    let mut scenario = base_scenario();
    scenario["receiver_count"] = json!(2);
    let bed = TestBed::new(12, scenario);
    let out = bed.run(&["compare", "--scenario", "scenario.json"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("receiver"), "stderr: {}", stderr(&out));
}

#[test]
fn missing_scenario_flag_exits_one() {
    let bed = TestBed::new(12, base_scenario());
    let out = bed.run(&["plan"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("--scenario"), "stderr: {}", stderr(&out));
}

// ---------- compare ----------

#[test]
fn compare_reports_eta_of_at_least_one() {
    let bed = TestBed::new(12, base_scenario());
    let out = bed.run(&["compare", "--scenario", "scenario.json"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    for name in [
        "deployment_baseline.csv",
        "deployment_optimized.csv",
        "coverage_baseline.csv",
        "coverage_optimized.csv",
        "ga_trace.csv",
        "comparison.txt",
    ] {
        assert!(bed.out("run").join(name).exists(), "missing {name}");
    }

    let comparison = read(&bed.out("run").join("comparison.txt"));
    let eta = float_field(&comparison, "eta");
    // The lattice baseline is part of the optimizer's initial population,
    // so with rho = 0 the optimized coverage can never fall below it.
    assert!(eta >= 1.0, "eta = {eta}");

    let base_cells: f64 = float_field(&comparison, "baseline_coverage_cells");
    let opt_cells: f64 = float_field(&comparison, "optimized_coverage_cells");
    let base_area = float_field(&comparison, "baseline_coverage_area_m2");
    let opt_area = float_field(&comparison, "optimized_coverage_area_m2");
    assert!((eta - opt_area / base_area).abs() < 1e-6);
    assert!(opt_cells >= base_cells);
}

// ---------- coverage ----------

#[test]
fn coverage_requires_a_fixed_deployment() {
    let bed = TestBed::new(12, base_scenario());
    let out = bed.run(&["coverage", "--scenario", "scenario.json"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("deployment"), "stderr: {}", stderr(&out));
}

#[test]
fn coverage_evaluates_the_deployment_as_given() {
    let mut scenario = base_scenario();
    scenario["deployment"] = json!([[500.0, 500.0], [700.0, 500.0], [600.0, 700.0]]);
    let bed = TestBed::new(12, scenario);
    let out = bed.run(&["coverage", "--scenario", "scenario.json"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let deployment = read(&bed.out("run").join("deployment.csv"));
    let rows: Vec<&str> = deployment.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    // Fixed positions pass through exactly; depth comes from the rule
    // (0.5 m above a 30 m seabed by default).
    assert_eq!(rows[0], "0,500.000,500.000,-29.500");
    assert_eq!(rows[1], "1,700.000,500.000,-29.500");
    assert_eq!(rows[2], "2,600.000,700.000,-29.500");

    let summary = read(&bed.out("run").join("summary.txt"));
    assert_eq!(field(&summary, "command"), "coverage");
    assert!(!summary.contains("fitness_trace"), "no trace without a GA run");
}

// ---------- throughput ----------

#[test]
fn throughput_profiles_the_scenario_track() {
    let mut scenario = base_scenario();
    scenario["deployment"] = json!([[500.0, 500.0], [700.0, 500.0], [600.0, 700.0]]);
    scenario["track"] = json!({
        "waypoints": [[100.0, 600.0], [1100.0, 600.0]],
        "speed_mps": 1.0,
        "interval_s": [50.0, 50.0],
        "bin_width_m": 100.0
    });
    let bed = TestBed::new(12, scenario);
    let out = bed.run(&["throughput", "--scenario", "scenario.json"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let emissions = read(&bed.out("run").join("emissions.csv"));
    // 1000 m at 1 m/s emitting every 50 s: emissions at t = 0, 50, …, 1000.
    let n_emissions = emissions.lines().count() - 1;
    assert_eq!(n_emissions, 21);

    let profile = read(&bed.out("run").join("throughput.csv"));
    let mut total = 0usize;
    for line in profile.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 4);
        let xi2: f64 = cols[1].parse().unwrap();
        let xi3: f64 = cols[2].parse().unwrap();
        assert!(xi2 + xi3 <= 1.0 + 1e-9, "xi2 + xi3 > 1 in {line}");
        total += cols[3].parse::<usize>().unwrap();
    }
    assert_eq!(total, n_emissions, "every emission lands in exactly one bin");
}

// ---------- scan ----------

#[test]
fn scan_writes_one_curve_per_alpha_plus_the_analytic_curve() {
    let bed = TestBed::new(5, base_scenario());
    let out = bed.run(&[
        "scan",
        "--radius",
        "1000",
        "--alphas",
        "2,8",
        "--steps",
        "10",
        "--cell-size",
        "100",
        "--out",
        "curves",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    for name in ["scan_alpha_2.csv", "scan_alpha_8.csv", "scan_analytic.csv"] {
        let text = read(&bed.out("curves").join(name));
        assert_eq!(text.lines().count(), 11, "{name}: header plus 10 samples");
        assert!(text.starts_with("l_over_R,coverage_over_R2\n"));
    }
}

#[test]
fn scan_with_empty_alpha_list_emits_only_the_analytic_curve() {
    let bed = TestBed::new(5, base_scenario());
    let out = bed.run(&[
        "scan", "--radius", "500", "--alphas", "", "--steps", "12", "--out", "curves",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let entries: Vec<String> = std::fs::read_dir(bed.out("curves"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(entries, vec!["scan_analytic.csv".to_string()]);
}

#[test]
fn scan_argmax_is_stable_under_step_refinement() {
    let bed = TestBed::new(5, base_scenario());
    let mut argmax = [0.0f64; 2];
    for (slot, steps) in [(0, "10"), (1, "100")] {
        let dir = format!("curves{steps}");
        let out = bed.run(&[
            "scan", "--radius", "1000", "--alphas", "5", "--steps", steps, "--cell-size",
            "50", "--out", &dir,
        ]);
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
        let text = read(&bed.out(&dir).join("scan_alpha_5.csv"));
        let best = text
            .lines()
            .skip(1)
            .map(|line| {
                let (l, c) = line.split_once(',').unwrap();
                (l.parse::<f64>().unwrap(), c.parse::<f64>().unwrap())
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        argmax[slot] = best.0;
    }
    // The coarse grid samples every 0.17·R: refining ten-fold must keep
    // the optimum within one coarse step.
    assert!(
        (argmax[0] - argmax[1]).abs() <= 0.17 + 1e-9,
        "argmax moved from {} to {}",
        argmax[0],
        argmax[1]
    );
}

#[test]
fn scan_rejects_garbage_alphas() {
    let bed = TestBed::new(5, base_scenario());
    let out = bed.run(&["scan", "--alphas", "2,banana", "--steps", "10"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("banana"), "stderr: {}", stderr(&out));
}

// ---------- flag overrides ----------

#[test]
fn seed_and_formula_overrides_land_in_the_summary() {
    let mut scenario = base_scenario();
    scenario["deployment"] = json!([[500.0, 500.0], [700.0, 500.0], [600.0, 700.0]]);
    let bed = TestBed::new(12, scenario);
    let out = bed.run(&[
        "coverage",
        "--scenario",
        "scenario.json",
        "--seed",
        "77",
        "--formula",
        "planar",
        "--out",
        "override",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let summary = read(&bed.out("override").join("summary.txt"));
    assert_eq!(field(&summary, "seed"), "77");
    assert_eq!(field(&summary, "formula"), "planar");
}

#[test]
fn unknown_formula_exits_one() {
    let mut scenario = base_scenario();
    scenario["deployment"] = json!([[500.0, 500.0], [700.0, 500.0], [600.0, 700.0]]);
    let bed = TestBed::new(12, scenario);
    let out = bed.run(&["coverage", "--scenario", "scenario.json", "--formula", "fancy"]);
    assert_eq!(code(&out), 1);
}

// ---------- determinism ----------

#[test]
fn identical_runs_are_byte_identical_across_thread_counts() {
    let bed = TestBed::new(12, base_scenario());
    for (dir, threads) in [("a", "1"), ("b", "4"), ("c", "4")] {
        let out = bed.run(&[
            "plan", "--scenario", "scenario.json", "--out", dir, "--threads", threads,
        ]);
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    }
    for name in [
        "deployment.csv",
        "coverage_map.csv",
        "gdop_map.csv",
        "coverage.pgm",
        "ga_trace.csv",
        "summary.txt",
    ] {
        let a = std::fs::read(bed.out("a").join(name)).unwrap();
        let b = std::fs::read(bed.out("b").join(name)).unwrap();
        let c = std::fs::read(bed.out("c").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between 1 and 4 threads");
        assert_eq!(b, c, "{name} differs between identical runs");
    }
}

// ---------- invocation plumbing ----------

#[test]
fn help_exits_zero() {
    let out = Command::new(BIN).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("plan"));
}

#[test]
fn usage_errors_exit_one() {
    let out = Command::new(BIN).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "bare invocation is a usage error");
    let out = Command::new(BIN).args(["plan", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
