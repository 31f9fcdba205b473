//! The `matmap` command line: `simulate`, `events`, `map`, `transform`.
//!
//! Exit codes: 0 success, 1 parse/usage/validation error, 2 I/O error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use crate::aggregator::{
    events_from_series, mass_time_integral, sample_series, spatial_map, stock_series, stock_series_parallel, Network,
    StockEvent, StockSeries,
};
use crate::geometry::{pick_points_robot, validate_rotation, FrameTransform, Rotation3, TargetVector};
use crate::scenario::{build_network, ingest_detection_log, parse_scenario, Scenario};
use crate::signal::Time;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "matmap", version, about = "Networked vision material stock simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct LogArgs {
    /// Detection log (CSV or JSON lines) whose windows are added to the scenario units
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Abort on the first malformed log line instead of skipping it
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write series.csv, events.csv and summary.txt for a scenario
    Simulate {
        scenario: PathBuf,
        /// Output directory (created if missing)
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
        /// First sample time, seconds
        #[arg(long, allow_hyphen_values = true)]
        t0: Option<String>,
        /// Last sample time, seconds
        #[arg(long, allow_hyphen_values = true)]
        t1: Option<String>,
        /// Sample step, seconds
        #[arg(long)]
        step: Option<String>,
        /// Also write map.csv with per-unit stocks at this time, seconds
        #[arg(long, allow_hyphen_values = true)]
        map_at: Option<String>,
        /// Evaluate units on the rayon thread pool
        #[arg(long)]
        parallel: bool,
        #[command(flatten)]
        log: LogArgs,
    },
    /// Print stock-change events
    Events {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[command(flatten)]
        log: LogArgs,
    },
    /// Print per-unit stocks with locations at one time
    Map {
        scenario: PathBuf,
        /// Time, seconds
        #[arg(long, allow_hyphen_values = true)]
        t: String,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[command(flatten)]
        log: LogArgs,
    },
    /// Convert a local-frame pick-point target into robot-frame points (cm)
    Transform {
        /// Row-major rotation matrix, 9 comma-separated values
        #[arg(long, allow_hyphen_values = true, conflicts_with = "z_angle")]
        rotation: Option<String>,
        /// Rotation about z in degrees
        #[arg(long, allow_hyphen_values = true)]
        z_angle: Option<f64>,
        /// Translation from robot origin to local origin, 3 comma-separated values
        #[arg(long, allow_hyphen_values = true, default_value = "0,0,0")]
        translation: String,
        /// Pick-point height above the bench plane
        #[arg(long, allow_hyphen_values = true)]
        height: f64,
        /// x1,y1,x2,y2 in the local frame
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

/// Files produced by `simulate`, as text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportBundle {
    pub series_csv: String,
    pub events_csv: String,
    pub map_csv: Option<String>,
    pub summary: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleWindow {
    pub t0: Time,
    pub t1: Time,
    pub step: Time,
}

/// kg with at most nine decimals, trailing zeros trimmed: `0.5`, `12`.
pub fn format_kg(v: f64) -> String {
    let s = format!("{v:.9}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn parse_secs(flag: &str, v: &str) -> Result<Time, CliError> {
    Time::parse_secs(v).map_err(|e| CliError::Usage(format!("--{flag}: {e}")))
}

fn parse_list<const N: usize>(flag: &str, v: &str) -> Result<[f64; N], CliError> {
    let vals: Vec<f64> = v
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("--{flag}: {e}")))?;
    vals.try_into()
        .map_err(|v: Vec<f64>| CliError::Usage(format!("--{flag}: expected {N} values, got {}", v.len())))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn load_scenario(path: &Path, log: &LogArgs, err: &mut dyn Write) -> Result<Scenario, CliError> {
    let text = read_text(path)?;
    let mut scn = parse_scenario(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    if let Some(log_path) = &log.log {
        let text = read_text(log_path)?;
        let ingest = ingest_detection_log(&text, log.strict)
            .map_err(|e| CliError::Parse(format!("{}: {e}", log_path.display())))?;
        for bad in &ingest.rejected {
            let _ = writeln!(err, "warning: {}: skipped {bad}", log_path.display());
        }
        scn.add_detections(&ingest.records)
            .map_err(|e| CliError::Parse(format!("{}: {e}", log_path.display())))?;
    }
    Ok(scn)
}

fn network_of(scn: &Scenario) -> Result<Network, CliError> {
    build_network(scn).map_err(|e| CliError::Parse(e.to_string()))
}

fn material_headers(net: &Network) -> Vec<String> {
    net.registry().materials().iter().map(|m| format!("{}_kg", m.name)).collect()
}

fn csv_string(rows: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    rows(&mut w).expect("writing to memory");
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
}

/// Sample grid rows: `t_us`, one kg column per material, then
/// `at_breakpoint` (1 where the value is a window-edge half level).
pub fn series_csv(net: &Network, series: &StockSeries, window: SampleWindow) -> Result<String, CliError> {
    let samples = sample_series(series, window.t0, window.t1, window.step).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(csv_string(|w| {
        let mut header = vec!["t_us".to_string()];
        header.extend(material_headers(net));
        header.push("at_breakpoint".to_string());
        w.write_record(&header)?;
        for (t, v) in &samples {
            let mut row = vec![t.micros().to_string()];
            row.extend(v.iter().map(|x| format_kg(*x)));
            row.push(if series.is_breakpoint(*t) { "1" } else { "0" }.to_string());
            w.write_record(&row)?;
        }
        Ok(())
    }))
}

pub fn events_csv(events: &[StockEvent]) -> String {
    csv_string(|w| {
        w.write_record(["t_us", "material", "delta_kg", "tau_after_kg"])?;
        for e in events {
            w.write_record([
                e.time.micros().to_string(),
                e.material.0.to_string(),
                format_kg(e.delta),
                format_kg(e.after),
            ])?;
        }
        Ok(())
    })
}

pub fn events_json(net: &Network, events: &[StockEvent]) -> String {
    let materials = net.registry().materials();
    let rows: Vec<_> = events
        .iter()
        .map(|e| {
            json!({
                "t_us": e.time.micros(),
                "material": e.material.0,
                "material_name": materials[e.material.0 as usize - 1].name,
                "delta_kg": e.delta,
                "tau_after_kg": e.after,
            })
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("json")
}

pub fn map_csv(net: &Network, t: Time) -> String {
    csv_string(|w| {
        let mut header: Vec<String> = ["unit_id", "x_m", "y_m", "lat", "lon"].map(String::from).to_vec();
        header.extend(material_headers(net));
        w.write_record(&header)?;
        for row in spatial_map(net, t) {
            let (lat, lon) = match row.location.geo {
                Some(g) => (g.lat.to_string(), g.lon.to_string()),
                None => (String::new(), String::new()),
            };
            let mut rec = vec![row.unit.0.to_string(), row.location.x.to_string(), row.location.y.to_string(), lat, lon];
            rec.extend(row.stock.iter().map(|x| format_kg(*x)));
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

pub fn map_json(net: &Network, t: Time) -> String {
    let rows: Vec<_> = spatial_map(net, t)
        .into_iter()
        .map(|r| {
            json!({
                "unit_id": r.unit.0,
                "x_m": r.location.x,
                "y_m": r.location.y,
                "lat": r.location.geo.map(|g| g.lat),
                "lon": r.location.geo.map(|g| g.lon),
                "stock_kg": r.stock,
            })
        })
        .collect();
    serde_json::to_string_pretty(&json!({ "t_us": t.micros(), "units": rows })).expect("json")
}

pub fn summary(scn: &Scenario, net: &Network, series: &StockSeries, events: &[StockEvent], window: SampleWindow) -> String {
    let mut out = String::new();
    if let Some(name) = &scn.name {
        out.push_str(&format!("scenario: {name}\n"));
    }
    out.push_str(&format!("units (s): {}\n", net.units().len()));
    out.push_str(&format!("classes (q): {}\n", net.registry().q()));
    out.push_str(&format!("materials (psi): {}\n", net.psi()));
    out.push_str(&format!("pulses: {}\n", net.units().iter().map(|u| u.pulse_count()).sum::<usize>()));
    out.push_str(&format!("breakpoints: {}\n", series.breakpoints().len()));
    out.push_str(&format!("events: {}\n", events.len()));
    out.push_str(&format!("sample window: {} s .. {} s step {} s\n", window.t0, window.t1, window.step));
    out.push_str("mass-time integral (kg*s):\n");
    for (m, v) in net.registry().materials().iter().zip(mass_time_integral(net)) {
        out.push_str(&format!("  {}: {}\n", m.name, format_kg(v)));
    }
    out
}

/// Resolves the sample grid from flags, then scenario export options, then
/// defaults (start at min(0, first edge), end at the last edge, 1 s step).
pub fn resolve_window(
    scn: &Scenario,
    series: &StockSeries,
    t0: Option<Time>,
    t1: Option<Time>,
    step: Option<Time>,
) -> Result<SampleWindow, CliError> {
    let ex = scn.export.clone().unwrap_or_default();
    let bps = series.breakpoints();
    let t0 = t0
        .or(ex.t0_s)
        .unwrap_or_else(|| bps.first().copied().unwrap_or(Time::ZERO).min(Time::ZERO));
    let t1 = t1.or(ex.t1_s).unwrap_or_else(|| bps.last().copied().unwrap_or(t0).max(t0));
    let step = step.or(ex.step_s).unwrap_or(Time::from_secs(1));
    if step <= Time::ZERO {
        return Err(CliError::Usage("--step must be positive".into()));
    }
    if t0 > t1 {
        return Err(CliError::Usage(format!("--t0 {t0} is after --t1 {t1}")));
    }
    Ok(SampleWindow { t0, t1, step })
}

pub fn simulate(
    scn: &Scenario,
    t0: Option<Time>,
    t1: Option<Time>,
    step: Option<Time>,
    map_at: Option<Time>,
    parallel: bool,
) -> Result<ExportBundle, CliError> {
    let net = network_of(scn)?;
    let series = if parallel { stock_series_parallel(&net) } else { stock_series(&net) };
    let events = events_from_series(&series);
    let window = resolve_window(scn, &series, t0, t1, step)?;
    Ok(ExportBundle {
        series_csv: series_csv(&net, &series, window)?,
        events_csv: events_csv(&events),
        map_csv: map_at.map(|t| map_csv(&net, t)),
        summary: summary(scn, &net, &series, &events, window),
    })
}

pub fn write_bundle(bundle: &ExportBundle, dir: &Path) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    fs::write(dir.join("series.csv"), &bundle.series_csv).map_err(io)?;
    fs::write(dir.join("events.csv"), &bundle.events_csv).map_err(io)?;
    fs::write(dir.join("summary.txt"), &bundle.summary).map_err(io)?;
    if let Some(map) = &bundle.map_csv {
        fs::write(dir.join("map.csv"), map).map_err(io)?;
    }
    Ok(())
}

fn fmt_point(p: &[f64; 3]) -> String {
    p.iter()
        .map(|v| {
            let s = format!("{v:.6}");
            if s.trim_start_matches('-').bytes().all(|b| b == b'0' || b == b'.') {
                s.trim_start_matches('-').to_string()
            } else {
                s
            }
        })
        .collect::<Vec<_>>()
        .join(",")
}

fn run_command(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    match cmd {
        Command::Simulate { scenario, out: dir, t0, t1, step, map_at, parallel, log } => {
            let opt = |flag, v: Option<String>| v.map(|v| parse_secs(flag, &v)).transpose();
            let (t0, t1, step, map_at) = (opt("t0", t0)?, opt("t1", t1)?, opt("step", step)?, opt("map-at", map_at)?);
            let scn = load_scenario(&scenario, &log, err)?;
            let bundle = simulate(&scn, t0, t1, step, map_at, parallel)?;
            write_bundle(&bundle, &dir)?;
            writeln!(out, "wrote {}", dir.display()).map_err(io)?;
        }
        Command::Events { scenario, format, log } => {
            let scn = load_scenario(&scenario, &log, err)?;
            let net = network_of(&scn)?;
            let events = events_from_series(&stock_series(&net));
            match format {
                Format::Csv if events.is_empty() => {}
                Format::Csv => write!(out, "{}", events_csv(&events)).map_err(io)?,
                Format::Json => writeln!(out, "{}", events_json(&net, &events)).map_err(io)?,
            }
        }
        Command::Map { scenario, t, format, log } => {
            let t = parse_secs("t", &t)?;
            let scn = load_scenario(&scenario, &log, err)?;
            let net = network_of(&scn)?;
            match format {
                Format::Csv => write!(out, "{}", map_csv(&net, t)).map_err(io)?,
                Format::Json => writeln!(out, "{}", map_json(&net, t)).map_err(io)?,
            }
        }
        Command::Transform { rotation, z_angle, translation, height, target, format } => {
            let rotation = match (rotation, z_angle) {
                (Some(r), _) => {
                    let v = parse_list::<9>("rotation", &r)?;
                    validate_rotation([[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]])
                        .map_err(|e| CliError::Parse(format!("--rotation: {e}")))?
                }
                (None, Some(deg)) => Rotation3::about_z(deg),
                (None, None) => Rotation3::IDENTITY,
            };
            let d = parse_list::<3>("translation", &translation)?;
            let target = TargetVector::from_array(parse_list::<4>("target", &target)?);
            let frame = FrameTransform::new(rotation, d, height).map_err(|e| CliError::Parse(e.to_string()))?;
            let picks = pick_points_robot(&frame, &target);
            if picks.degenerate {
                let _ = writeln!(err, "warning: pick points coincide");
            }
            match format {
                Format::Csv => {
                    writeln!(out, "p1,{}", fmt_point(&picks.first)).map_err(io)?;
                    writeln!(out, "p2,{}", fmt_point(&picks.second)).map_err(io)?;
                }
                Format::Json => {
                    let v = json!({ "p1": picks.first, "p2": picks.second, "degenerate": picks.degenerate });
                    writeln!(out, "{v}").map_err(io)?;
                }
            }
        }
    }
    Ok(())
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match run_command(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
