//! mzi: experiment driver for the two-path interferometer simulator.
//!
//! Four modes, selected with `--mode`:
//! - `fringe`    — analytic detector rates versus phase for one stationary
//!   configuration (`--bs2 in|out`);
//! - `modulate`  — Monte Carlo run against an in/out schedule, with the
//!   visibility/distinguishability summary and its complementarity gate;
//! - `compare`   — three-route agreement table (duty-damped prediction,
//!   duty-weighted mixture, ancilla marginal) over a (θ, φ) grid;
//! - `condition` — same Monte Carlo run, but analyzed per schedule state.
//!
//! Exit codes: 0 pass, 1 summary gate failed, 2 usage or config error,
//! 3 degenerate data (a schedule state that never occurs).
//!
//! Runs are reproducible: the same manifest and seed produce byte-identical
//! output files, regardless of `--workers`.

mod config;

use anyhow::{bail, Context, Result};
use clap::Parser;
use config::{ArrivalKind, Bs2Flag, GridSpec, Mode};
use mzi_core::analysis::{
    complementarity_check, estimate_distinguishability, estimate_visibility, write_report,
    DualityMeasures, FringeScan,
};
use mzi_core::interferometer::{intensities, propagate, PipelineConfig};
use mzi_core::modulation::{make_periodic, Schedule};
use mzi_core::montecarlo::{run as run_events, write_event_csv, ArrivalModel, EventRecord};
use mzi_core::quantum_dc::{event_level_discriminator, write_comparison_csv};
use mzi_core::{ComplexAmp, CountTable};
use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_GATE_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DEGENERATE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "mzi", version, about = "Two-path interferometer experiment driver")]
struct Args {
    /// Run mode: fringe, modulate, compare, or condition
    #[arg(long)]
    mode: Option<Mode>,
    /// Flat key=value manifest; command-line flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Phase grid `start:stop:count`, endpoints inclusive
    #[arg(long)]
    phases: Option<GridSpec>,
    /// Mixing-angle grid `start:stop:count` for compare mode
    #[arg(long)]
    thetas: Option<GridSpec>,
    /// Second-splitter status for fringe mode: in or out
    #[arg(long)]
    bs2: Option<Bs2Flag>,
    /// Mixing angle in [0, pi/2]; the generated schedule duty is sin²θ
    #[arg(long)]
    theta: Option<f64>,
    /// In-duty of a generated periodic schedule, in [0, 1]
    #[arg(long)]
    duty: Option<f64>,
    /// Schedule file: header `T=<total>`, lines `t_start t_end IN|OUT`
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Modulation period for generated schedules, seconds
    #[arg(long)]
    period: Option<f64>,
    /// Accumulation window T for generated schedules, seconds
    #[arg(long)]
    total: Option<f64>,
    /// Events per phase point
    #[arg(long)]
    events: Option<u64>,
    /// Master seed; each phase point draws from its own substream
    #[arg(long)]
    seed: Option<u64>,
    /// Arrival model: uniform or poisson
    #[arg(long)]
    arrivals: Option<ArrivalKind>,
    /// Arrival rate in events/second; defaults to events/total
    #[arg(long)]
    rate: Option<f64>,
    /// Output CSV path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Analysis report CSV path (modulate mode)
    #[arg(long)]
    report: Option<PathBuf>,
    /// Event log CSV path (modulate and condition modes)
    #[arg(long)]
    event_log: Option<PathBuf>,
    /// Pass/fail tolerance for the mode's summary gate
    #[arg(long)]
    tolerance: Option<f64>,
    /// Worker threads for phase points; output does not depend on this
    #[arg(long)]
    workers: Option<usize>,
    /// Warn when a schedule segment is shorter than this transit time
    #[arg(long)]
    transit_time: Option<f64>,
}

/// Fully resolved run settings: flags merged over the manifest, defaults
/// filled in.
#[derive(Debug)]
struct Settings {
    mode: Mode,
    phases: GridSpec,
    thetas: GridSpec,
    bs2: Option<Bs2Flag>,
    theta: Option<f64>,
    duty: Option<f64>,
    schedule: Option<PathBuf>,
    period: f64,
    total: f64,
    events: u64,
    seed: u64,
    arrivals: ArrivalKind,
    rate: Option<f64>,
    out: Option<PathBuf>,
    report: Option<PathBuf>,
    event_log: Option<PathBuf>,
    tolerance: Option<f64>,
    workers: Option<usize>,
    transit_time: f64,
}

impl Settings {
    fn resolve(args: Args) -> Result<Self> {
        let file: HashMap<String, String> = match &args.config {
            Some(path) => config::load_config_file(path)?,
            None => HashMap::new(),
        };
        let mode = config::merged(args.mode, &file, "mode")?
            .context("no mode given: pass --mode or set `mode` in the config file")?;
        Ok(Settings {
            mode,
            phases: config::merged(args.phases, &file, "phases")?
                .unwrap_or(GridSpec::new(0.0, 2.0 * PI, 21)),
            thetas: config::merged(args.thetas, &file, "thetas")?
                .unwrap_or(GridSpec::new(0.0, FRAC_PI_2, 100)),
            bs2: config::merged(args.bs2, &file, "bs2")?,
            theta: config::merged(args.theta, &file, "theta")?,
            duty: config::merged(args.duty, &file, "duty")?,
            schedule: config::merged(args.schedule, &file, "schedule")?,
            period: config::merged(args.period, &file, "period")?.unwrap_or(0.1),
            total: config::merged(args.total, &file, "total")?.unwrap_or(1.0),
            events: config::merged(args.events, &file, "events")?.unwrap_or(100_000),
            seed: config::merged(args.seed, &file, "seed")?.unwrap_or(42),
            arrivals: config::merged(args.arrivals, &file, "arrivals")?
                .unwrap_or(ArrivalKind::Uniform),
            rate: config::merged(args.rate, &file, "rate")?,
            out: config::merged(args.out, &file, "out")?,
            report: config::merged(args.report, &file, "report")?,
            event_log: config::merged(args.event_log, &file, "event-log")?,
            tolerance: config::merged(args.tolerance, &file, "tolerance")?,
            workers: config::merged(args.workers, &file, "workers")?,
            transit_time: config::merged(args.transit_time, &file, "transit-time")?.unwrap_or(0.0),
        })
    }

    fn out_path(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .context("this mode writes a CSV file: pass --out <path>")
    }
}

fn create_out(path: &Path) -> Result<BufWriter<File>> {
    let file =
        File::create(path).with_context(|| format!("creating output file {}", path.display()))?;
    Ok(BufWriter::new(file))
}

/// Schedule from exactly one of --schedule, --duty, or --theta.
fn build_schedule(settings: &Settings) -> Result<Schedule> {
    let sources =
        settings.schedule.is_some() as u8 + settings.duty.is_some() as u8 + settings.theta.is_some() as u8;
    if sources != 1 {
        bail!("this mode needs exactly one of --schedule, --duty, or --theta");
    }
    let schedule = if let Some(path) = &settings.schedule {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading schedule file {}", path.display()))?;
        Schedule::from_text(&text)
            .with_context(|| format!("invalid schedule in {}", path.display()))?
    } else if let Some(duty) = settings.duty {
        make_periodic(duty, settings.period, settings.total).context("invalid schedule")?
    } else {
        let theta = settings.theta.expect("one source is set");
        if !theta.is_finite() || !(0.0..=FRAC_PI_2).contains(&theta) {
            bail!("theta must lie in [0, pi/2], got {theta}");
        }
        make_periodic(theta.sin().powi(2), settings.period, settings.total)
            .context("invalid schedule")?
    };
    for index in schedule.segments_shorter_than(settings.transit_time) {
        let seg = schedule.segments()[index];
        eprintln!(
            "mzi: warning: segment {index} [{}, {}) is shorter than the transit time {}",
            seg.t_start, seg.t_end, settings.transit_time
        );
    }
    Ok(schedule)
}

/// Run the Monte Carlo stage, optionally inside a fixed-size worker pool.
fn run_mc(
    settings: &Settings,
    schedule: &Schedule,
    phases: &[f64],
) -> Result<(Vec<EventRecord>, CountTable)> {
    let rate = settings
        .rate
        .unwrap_or(settings.events as f64 / schedule.total_time());
    let arrivals = match settings.arrivals {
        ArrivalKind::Uniform => ArrivalModel::Uniform { rate },
        ArrivalKind::Poisson => ArrivalModel::Poisson { rate },
    };
    let simulate =
        || run_events(schedule, phases, settings.events, arrivals, settings.seed);
    let result = match settings.workers {
        Some(workers) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .context("building worker pool")?;
            pool.install(simulate)
        }
        None => simulate(),
    };
    result.context("monte carlo run failed")
}

/// Analytic detector rates versus phase for one stationary configuration.
fn cmd_fringe(settings: &Settings) -> Result<ExitCode> {
    let bs2 = settings
        .bs2
        .context("fringe mode needs --bs2 in|out")?;
    settings.phases.validate("phase")?;
    let mut rows = String::from("phase,p_x,p_y\n");
    for &phi in &settings.phases.points() {
        let cfg = PipelineConfig::new(bs2 == Bs2Flag::In, phi, ComplexAmp::new(1.0, 0.0))
            .context("invalid pipeline configuration")?;
        let p = intensities(&propagate(&cfg));
        rows.push_str(&format!("{},{},{}\n", phi, p.p_x, p.p_y));
    }
    match &settings.out {
        Some(path) => {
            let mut w = create_out(path)?;
            w.write_all(rows.as_bytes())?;
            w.flush()?;
        }
        None => print!("{rows}"),
    }
    Ok(ExitCode::SUCCESS)
}

/// Monte Carlo run with the complementarity summary gate.
fn cmd_modulate(settings: &Settings) -> Result<ExitCode> {
    settings.phases.validate("phase")?;
    let schedule = build_schedule(settings)?;
    let phases = settings.phases.points();
    let (events, table) = run_mc(settings, &schedule, &phases)?;

    let mut w = create_out(settings.out_path()?)?;
    table.write_csv(&mut w)?;
    w.flush()?;

    if let Some(path) = &settings.event_log {
        let mut w = create_out(path)?;
        write_event_csv(&events, &mut w)?;
        w.flush()?;
    }

    let fractions = schedule.duty_fractions();
    let scan = FringeScan::from_counts(&table).context("empty count table")?;
    let (v, _) = estimate_visibility(&scan).context("visibility fit failed")?;
    let (d, _) =
        estimate_distinguishability(&table, &fractions).context("distinguishability failed")?;
    let measures = DualityMeasures::new(v, d);
    let residual = complementarity_check(&measures);

    if let Some(path) = &settings.report {
        let mut w = create_out(path)?;
        write_report(&mut w, fractions.theta, &scan, &measures).context("writing report")?;
        w.flush()?;
    }

    println!("V={} D={} residual={}", v, d, residual);
    let tolerance = settings.tolerance.unwrap_or(0.02);
    if residual <= tolerance {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("mzi: complementarity residual {residual} exceeds tolerance {tolerance}");
        Ok(ExitCode::from(EXIT_GATE_FAILED))
    }
}

/// Three-route agreement table over a (θ, φ) grid.
fn cmd_compare(settings: &Settings) -> Result<ExitCode> {
    settings.phases.validate("phase")?;
    settings.thetas.validate("theta")?;
    let thetas = settings.thetas.points();
    if thetas
        .iter()
        .any(|t| !(0.0..=FRAC_PI_2).contains(t))
    {
        bail!("theta grid must lie inside [0, pi/2]");
    }
    let mut w = create_out(settings.out_path()?)?;
    let max_abs_diff = write_comparison_csv(&mut w, &thetas, &settings.phases.points())
        .context("comparison failed")?;
    w.flush()?;

    println!("max_abs_diff={max_abs_diff}");
    let tolerance = settings.tolerance.unwrap_or(1e-12);
    if max_abs_diff <= tolerance {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("mzi: models disagree by {max_abs_diff}, tolerance {tolerance}");
        Ok(ExitCode::from(EXIT_GATE_FAILED))
    }
}

/// Monte Carlo run analyzed per schedule state.
fn cmd_condition(settings: &Settings) -> Result<ExitCode> {
    settings.phases.validate("phase")?;
    let schedule = build_schedule(settings)?;
    let phases = settings.phases.points();
    let (events, table) = run_mc(settings, &schedule, &phases)?;

    let mut w = create_out(settings.out_path()?)?;
    table.write_csv(&mut w)?;
    w.flush()?;

    if let Some(path) = &settings.event_log {
        let mut w = create_out(path)?;
        write_event_csv(&events, &mut w)?;
        w.flush()?;
    }

    let report = event_level_discriminator(&events).context("conditioned analysis failed")?;
    let fmt_vis = |subset: &Option<mzi_core::quantum_dc::SubsetVisibility>| match subset {
        Some(s) => s.visibility.to_string(),
        None => "NA".to_string(),
    };
    let d_out = match report.out_distinguishability {
        Some(d) => d.to_string(),
        None => "NA".to_string(),
    };
    println!(
        "V_in={} V_out={} D_out={}",
        fmt_vis(&report.in_subset),
        fmt_vis(&report.out_subset),
        d_out
    );

    if let Some(state) = report.empty_subset() {
        let name = match state {
            mzi_core::Bs2State::In => "In",
            mzi_core::Bs2State::Out => "Out",
        };
        eprintln!("mzi: {name} subset empty: the schedule never leaves the other state");
        return Ok(ExitCode::from(EXIT_DEGENERATE));
    }
    if report.consistent_with_modulation == Some(true) {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("mzi: conditioned visibilities do not split into fringe and flat line");
        Ok(ExitCode::from(EXIT_GATE_FAILED))
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let settings = match Settings::resolve(args) {
        Ok(settings) => settings,
        Err(e) => {
            eprintln!("mzi: error: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let outcome = match settings.mode {
        Mode::Fringe => cmd_fringe(&settings),
        Mode::Modulate => cmd_modulate(&settings),
        Mode::Compare => cmd_compare(&settings),
        Mode::Condition => cmd_condition(&settings),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("mzi: error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
