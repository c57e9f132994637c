//! Command-line front end for the `anchorplan` library.
//!
//! Every command is driven by a JSON scenario file (except `scan`, which
//! is self-contained) and writes plain CSV/PGM artifacts into an output
//! directory, so runs are easy to script, diff, and plot. Identical
//! scenario and seed produce byte-identical artifacts regardless of the
//! worker-pool size.
//!
//! Exit codes: `0` success, `2` the solver finished but the area-of-interest
//! coverage constraint is unmet (artifacts are still written), `1` hard
//! error with a diagnostic on stderr.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use anchorplan::analytic::{analytic_curve, spacing_scan, write_scan_csv, ScanCurve};
use anchorplan::coverage::{
    coverage_report, write_coverage_csv, write_coverage_pgm, write_gdop_csv, CoverageReport,
};
use anchorplan::evalharness::{eta_ratio, synth_track, theta_ratio, throughput_profile};
use anchorplan::gdop::GdopFormula;
use anchorplan::propagation::Receiver;
use anchorplan::scenario::LoadedScenario;
use anchorplan::solvers::{
    cp_layout, fitness_from_report, ga_optimize, write_ga_trace_csv, GaTraceRow,
};

#[derive(Parser)]
#[command(
    name = "anchorplan",
    version,
    about = "Plan and evaluate bottom-moored acoustic receiver deployments"
)]
struct Cli {
    /// Scenario file (JSON). Required by every command except `scan`.
    #[arg(long, global = true, value_name = "PATH")]
    scenario: Option<PathBuf>,

    /// Override the scenario's random seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Override the output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Override the GDOP formula: `trace` or `planar`.
    #[arg(long, global = true, value_name = "NAME")]
    formula: Option<String>,

    /// Size of the worker thread pool (default: one per core).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize receiver positions with the genetic algorithm and export
    /// deployment, coverage, and GDOP maps.
    Plan,
    /// Optimize and report against the common-practice lattice baseline.
    Compare,
    /// Sweep equilateral-lattice spacing and export coverage-vs-spacing
    /// curves, one per GDOP ceiling, plus the geometry-only curve.
    Scan {
        /// Detection radius R in meters.
        #[arg(long, default_value_t = 1000.0)]
        radius: f64,

        /// Comma-separated GDOP ceilings; pass an empty string to emit
        /// only the geometry-only curve.
        #[arg(long, default_value = "2,5,8")]
        alphas: String,

        /// Number of spacing samples across (0, 1.7R].
        #[arg(long, default_value_t = 34)]
        steps: usize,

        /// Raster cell size in meters (default R/100).
        #[arg(long, value_name = "METERS")]
        cell_size: Option<f64>,
    },
    /// Evaluate the scenario's fixed deployment without optimizing.
    Coverage,
    /// Synthesize a tag track over the scenario's fixed deployment and
    /// profile reception by range.
    Throughput,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // `--help`/`--version` leave through clap with status 0; real
            // usage errors land on 1 so 2 stays reserved for unmet
            // coverage constraints.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {}", render_chain(&err));
            ExitCode::from(1)
        }
    }
}

/// Join the cause chain, skipping causes a wrapper already interpolated
/// into its own message (library errors embed their source text).
fn render_chain(err: &anyhow::Error) -> String {
    let mut parts: Vec<String> = Vec::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if parts.last().is_some_and(|prev| prev.ends_with(&text)) {
            continue;
        }
        parts.push(text);
    }
    parts.join(": ")
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("worker pool already initialized")?;
    }
    match &cli.command {
        Command::Plan => cmd_plan(&cli),
        Command::Compare => cmd_compare(&cli),
        Command::Scan {
            radius,
            alphas,
            steps,
            cell_size,
        } => cmd_scan(&cli, *radius, alphas, *steps, *cell_size),
        Command::Coverage => cmd_coverage(&cli),
        Command::Throughput => cmd_throughput(&cli),
    }
}

// ---------- Scenario plumbing ----------

/// Load the scenario named by `--scenario` and apply flag overrides.
fn load_scenario(cli: &Cli) -> Result<LoadedScenario> {
    let path = cli
        .scenario
        .as_ref()
        .context("this command needs --scenario <PATH>")?;
    let mut loaded = LoadedScenario::load(path)
        .with_context(|| format!("failed to load scenario {}", path.display()))?;
    if let Some(seed) = cli.seed {
        loaded.seed = seed;
        loaded.ga.seed = seed;
    }
    if let Some(dir) = &cli.out {
        loaded.out_dir = dir.clone();
    }
    if let Some(name) = &cli.formula {
        loaded.scene.coverage.formula = name.parse::<GdopFormula>()?;
    }
    Ok(loaded)
}

fn out_dir(scn: &LoadedScenario) -> Result<PathBuf> {
    std::fs::create_dir_all(&scn.out_dir)
        .with_context(|| format!("cannot create output directory {}", scn.out_dir.display()))?;
    Ok(scn.out_dir.clone())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file =
        File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(file))
}

/// Flush explicitly so write errors surface as diagnostics instead of
/// being swallowed by `BufWriter::drop`.
fn finish(mut w: BufWriter<File>) -> Result<()> {
    w.flush()?;
    Ok(())
}

// ---------- Shared artifact writers ----------

fn write_deployment_csv(receivers: &[Receiver], out: &mut impl Write) -> Result<()> {
    writeln!(out, "id,x,y,z")?;
    for r in receivers {
        writeln!(
            out,
            "{},{:.3},{:.3},{:.3}",
            r.id, r.position.x, r.position.y, r.position.z
        )?;
    }
    Ok(())
}

fn formula_name(formula: GdopFormula) -> &'static str {
    match formula {
        GdopFormula::Trace => "trace",
        GdopFormula::Planar => "planar",
    }
}

/// Key-value run summary; every number is recomputable from the emitted
/// maps so automation can cross-check the artifacts.
fn write_summary(
    out: &mut impl Write,
    command: &str,
    scn: &LoadedScenario,
    receivers: &[Receiver],
    report: &CoverageReport,
    fitness: f64,
    trace: Option<&[GaTraceRow]>,
) -> Result<()> {
    let cov = &scn.scene.coverage;
    writeln!(out, "command = {command}")?;
    writeln!(out, "seed = {}", scn.seed)?;
    writeln!(out, "receivers = {}", receivers.len())?;
    writeln!(out, "formula = {}", formula_name(cov.formula))?;
    writeln!(out, "alpha = {}", cov.alpha)?;
    writeln!(out, "beta = {}", cov.beta)?;
    writeln!(out, "rho = {}", cov.rho)?;
    writeln!(out, "cell_size_m = {}", report.cell_size)?;
    writeln!(out, "coverage_cells = {}", report.coverage_cells)?;
    writeln!(out, "coverage_area_m2 = {:.3}", report.coverage_area_m2())?;
    writeln!(out, "localization_cells = {}", report.localization_cells)?;
    writeln!(out, "aoi_cells = {}", report.aoi_cells)?;
    writeln!(out, "coverage_in_aoi_cells = {}", report.coverage_in_aoi_cells)?;
    writeln!(out, "aoi_coverage_fraction = {:.6}", report.aoi_coverage_fraction())?;
    writeln!(out, "constraint_met = {}", report.constraint_met)?;
    writeln!(out, "fitness = {:.6}", fitness)?;
    if let Some(rows) = trace {
        writeln!(out, "fitness_trace:")?;
        write_ga_trace_csv(rows, out)?;
    }
    Ok(())
}

/// Write the map trio shared by `plan` and `coverage`.
fn write_maps(dir: &Path, scn: &LoadedScenario, report: &CoverageReport) -> Result<()> {
    let grid = &scn.scene.grid;
    let mut w = create(dir, "coverage_map.csv")?;
    write_coverage_csv(report, grid, &mut w)?;
    finish(w)?;
    let mut w = create(dir, "gdop_map.csv")?;
    write_gdop_csv(report, grid, &mut w)?;
    finish(w)?;
    let mut w = create(dir, "coverage.pgm")?;
    write_coverage_pgm(report, grid, &mut w)?;
    finish(w)?;
    Ok(())
}

// ---------- Commands ----------

fn cmd_plan(cli: &Cli) -> Result<u8> {
    let scn = load_scenario(cli)?;
    let result = ga_optimize(
        &scn.scene,
        scn.receiver_count,
        &scn.ga,
        Some(scn.cp_spacing_m),
    )?;
    let receivers = result
        .deployment
        .to_receivers(&scn.scene.grid, scn.scene.receiver_depth)?;
    let report = coverage_report(&scn.scene, &receivers)?;
    let fitness = fitness_from_report(&scn.scene, &report, scn.ga.penalty_weight);

    let dir = out_dir(&scn)?;
    let mut w = create(&dir, "deployment.csv")?;
    write_deployment_csv(&receivers, &mut w)?;
    finish(w)?;
    write_maps(&dir, &scn, &report)?;
    let mut w = create(&dir, "ga_trace.csv")?;
    write_ga_trace_csv(&result.trace, &mut w)?;
    finish(w)?;
    let mut w = create(&dir, "summary.txt")?;
    write_summary(&mut w, "plan", &scn, &receivers, &report, fitness, Some(&result.trace))?;
    finish(w)?;

    println!(
        "plan: coverage {} cells ({:.0} m²), AOI fraction {:.3}, constraint {}",
        report.coverage_cells,
        report.coverage_area_m2(),
        report.aoi_coverage_fraction(),
        if report.constraint_met { "met" } else { "UNMET" },
    );
    println!("artifacts in {}", dir.display());
    Ok(if report.constraint_met { 0 } else { 2 })
}

fn cmd_compare(cli: &Cli) -> Result<u8> {
    let scn = load_scenario(cli)?;
    let n = scn.receiver_count;
    let rule = scn.scene.receiver_depth;

    let baseline = cp_layout(&scn.scene.grid, &scn.scene.aoi, n, scn.cp_spacing_m)?;
    let base_rcv = baseline.to_receivers(&scn.scene.grid, rule)?;
    let base_report = coverage_report(&scn.scene, &base_rcv)?;

    let result = ga_optimize(&scn.scene, n, &scn.ga, Some(scn.cp_spacing_m))?;
    let opt_rcv = result
        .deployment
        .to_receivers(&scn.scene.grid, rule)?;
    let opt_report = coverage_report(&scn.scene, &opt_rcv)?;

    let dir = out_dir(&scn)?;
    let grid = &scn.scene.grid;
    let mut w = create(&dir, "deployment_baseline.csv")?;
    write_deployment_csv(&base_rcv, &mut w)?;
    finish(w)?;
    let mut w = create(&dir, "deployment_optimized.csv")?;
    write_deployment_csv(&opt_rcv, &mut w)?;
    finish(w)?;
    let mut w = create(&dir, "coverage_baseline.csv")?;
    write_coverage_csv(&base_report, grid, &mut w)?;
    finish(w)?;
    let mut w = create(&dir, "coverage_optimized.csv")?;
    write_coverage_csv(&opt_report, grid, &mut w)?;
    finish(w)?;
    let mut w = create(&dir, "ga_trace.csv")?;
    write_ga_trace_csv(&result.trace, &mut w)?;
    finish(w)?;

    let cell_area = grid.cell_size() * grid.cell_size();
    let eta = eta_ratio(opt_report.coverage_area_m2(), base_report.coverage_area_m2());
    let theta_base = theta_ratio(
        base_report.coverage_area_m2(),
        base_report.localization_cells as f64 * cell_area,
    );
    let theta_opt = theta_ratio(
        opt_report.coverage_area_m2(),
        opt_report.localization_cells as f64 * cell_area,
    );

    let mut w = create(&dir, "comparison.txt")?;
    writeln!(w, "command = compare")?;
    writeln!(w, "seed = {}", scn.seed)?;
    writeln!(w, "receivers = {n}")?;
    writeln!(w, "formula = {}", formula_name(scn.scene.coverage.formula))?;
    writeln!(w, "cp_spacing_m = {}", scn.cp_spacing_m)?;
    writeln!(w, "baseline_coverage_cells = {}", base_report.coverage_cells)?;
    writeln!(w, "baseline_coverage_area_m2 = {:.3}", base_report.coverage_area_m2())?;
    writeln!(w, "baseline_localization_cells = {}", base_report.localization_cells)?;
    writeln!(w, "baseline_constraint_met = {}", base_report.constraint_met)?;
    writeln!(w, "optimized_coverage_cells = {}", opt_report.coverage_cells)?;
    writeln!(w, "optimized_coverage_area_m2 = {:.3}", opt_report.coverage_area_m2())?;
    writeln!(w, "optimized_localization_cells = {}", opt_report.localization_cells)?;
    writeln!(w, "optimized_constraint_met = {}", opt_report.constraint_met)?;
    match &eta {
        Ok(v) => writeln!(w, "eta = {v:.6}")?,
        Err(_) => writeln!(w, "eta = undefined")?,
    }
    match &theta_base {
        Ok(v) => writeln!(w, "theta_baseline = {v:.6}")?,
        Err(_) => writeln!(w, "theta_baseline = undefined")?,
    }
    match &theta_opt {
        Ok(v) => writeln!(w, "theta_optimized = {v:.6}")?,
        Err(_) => writeln!(w, "theta_optimized = undefined")?,
    }
    finish(w)?;

    match &eta {
        Ok(v) => println!(
            "compare: optimized {} cells vs baseline {} cells, eta = {v:.3}",
            opt_report.coverage_cells, base_report.coverage_cells
        ),
        Err(_) => println!(
            "compare: optimized {} cells vs baseline {} cells, eta undefined (empty baseline)",
            opt_report.coverage_cells, base_report.coverage_cells
        ),
    }
    println!("artifacts in {}", dir.display());
    Ok(if opt_report.constraint_met { 0 } else { 2 })
}

fn cmd_scan(
    cli: &Cli,
    radius: f64,
    alphas: &str,
    steps: usize,
    cell_size: Option<f64>,
) -> Result<u8> {
    let alphas = parse_alpha_list(alphas)?;
    let cell = cell_size.unwrap_or(radius / 100.0);
    let formula = match &cli.formula {
        Some(name) => name.parse::<GdopFormula>()?,
        None => GdopFormula::default(),
    };
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;

    for &alpha in &alphas {
        let curve: ScanCurve = spacing_scan(radius, alpha, steps, cell, formula)?;
        let best = curve.argmax();
        println!(
            "alpha {alpha}: max coverage {:.4} R² at l/R = {:.3}",
            best.coverage_over_r2, best.l_over_r
        );
        let mut w = create(&dir, &format!("scan_alpha_{alpha}.csv"))?;
        write_scan_csv(&curve.points, &mut w)?;
        finish(w)?;
    }
    let analytic = analytic_curve(radius, steps)?;
    let mut w = create(&dir, "scan_analytic.csv")?;
    write_scan_csv(&analytic, &mut w)?;
    finish(w)?;

    println!("artifacts in {}", dir.display());
    Ok(0)
}

fn parse_alpha_list(text: &str) -> Result<Vec<f64>> {
    let mut alphas = Vec::new();
    for token in text.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        let value: f64 = match token.to_ascii_lowercase().as_str() {
            "inf" | "infinity" => f64::INFINITY,
            t => t
                .parse()
                .with_context(|| format!("bad GDOP ceiling {token:?} in --alphas"))?,
        };
        if !(value > 0.0) {
            bail!("GDOP ceiling must be positive, got {token}");
        }
        alphas.push(value);
    }
    Ok(alphas)
}

fn cmd_coverage(cli: &Cli) -> Result<u8> {
    let scn = load_scenario(cli)?;
    let deployment = scn
        .deployment
        .clone()
        .context("scenario has no `deployment` to evaluate; add one or run `plan`")?;
    let receivers = deployment.to_receivers(&scn.scene.grid, scn.scene.receiver_depth)?;
    let report = coverage_report(&scn.scene, &receivers)?;
    let fitness = fitness_from_report(&scn.scene, &report, scn.ga.penalty_weight);

    let dir = out_dir(&scn)?;
    let mut w = create(&dir, "deployment.csv")?;
    write_deployment_csv(&receivers, &mut w)?;
    finish(w)?;
    write_maps(&dir, &scn, &report)?;
    let mut w = create(&dir, "summary.txt")?;
    write_summary(&mut w, "coverage", &scn, &receivers, &report, fitness, None)?;
    finish(w)?;

    println!(
        "coverage: {} cells ({:.0} m²), AOI fraction {:.3}, constraint {}",
        report.coverage_cells,
        report.coverage_area_m2(),
        report.aoi_coverage_fraction(),
        if report.constraint_met { "met" } else { "UNMET" },
    );
    println!("artifacts in {}", dir.display());
    Ok(if report.constraint_met { 0 } else { 2 })
}

fn cmd_throughput(cli: &Cli) -> Result<u8> {
    let scn = load_scenario(cli)?;
    let track = scn
        .track
        .clone()
        .context("scenario has no `track` section")?;
    let deployment = scn
        .deployment
        .clone()
        .context("scenario has no `deployment`; throughput profiles a fixed deployment")?;
    let receivers = deployment.to_receivers(&scn.scene.grid, scn.scene.receiver_depth)?;

    let log = synth_track(
        &track.waypoints,
        track.speed_mps,
        track.interval_s,
        scn.scene.tag_depth,
        scn.seed,
        track.tag_id,
        Some(&scn.scene.grid),
    )?;
    let profile = throughput_profile(
        &log,
        &receivers,
        &scn.scene.model,
        &scn.scene.grid,
        &scn.scene.acoustics,
        track.bin_width_m,
    )?;

    let dir = out_dir(&scn)?;
    let mut w = create(&dir, "deployment.csv")?;
    write_deployment_csv(&receivers, &mut w)?;
    finish(w)?;
    let mut w = create(&dir, "emissions.csv")?;
    log.write(&mut w)?;
    finish(w)?;
    let mut w = create(&dir, "throughput.csv")?;
    profile.write(&mut w)?;
    finish(w)?;

    println!(
        "throughput: {} emissions over {} bins of {} m",
        profile.total_emissions,
        profile.bins.len(),
        profile.bin_width
    );
    println!("artifacts in {}", dir.display());
    Ok(0)
}
