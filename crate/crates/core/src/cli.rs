//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid scenario, 2 numerical failure,
//! 3 I/O error.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::architecture::{validate, BufferClass};
use crate::esn::EsnError;
use crate::hfit::{self, IncidenceTensors};
use crate::ingest::{parse_scenario, ScenarioDocument};
use crate::reference::{compare_trajectories, rk4_integrate, Comparison, ReferenceError};
use crate::simulator::{concentration, simulate, stability_max_dt, SimulationError, SimulationWarning, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Invalid = 1,
    NonFinite = 2,
    Io = 3,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Parser)]
#[command(name = "hfgt-hydro", version, about = "Watershed water and nitrogen simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one or more scenarios and write CSV output.
    Run(RunRequest),
    /// Check a scenario and print every violation.
    Validate { scenario: PathBuf },
    /// Print per-edge time constants and the largest stable step.
    Stability { scenario: PathBuf },
}

#[derive(Debug, Clone, Args)]
pub struct RunRequest {
    #[arg(required = true)]
    pub scenarios: Vec<PathBuf>,
    /// Step length override, s.
    #[arg(long, value_parser = positive_f64)]
    pub dt: Option<f64>,
    /// Number of steps override.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub horizon: Option<u64>,
    /// Record stride override.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub stride: Option<u64>,
    /// Output directory. With several scenarios each gets a subdirectory
    /// named after its file stem.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Also integrate with RK4 and write reference.csv and comparison.csv.
    #[arg(long)]
    pub compare_ode: bool,
    /// Write one SVG concentration chart per buffer class.
    #[arg(long)]
    pub emit_plots: bool,
    /// Write M+, M- and M as triplet CSVs.
    #[arg(long)]
    pub emit_tensors: bool,
    /// Scenarios to run concurrently.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: u64,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let exit = match cli.command {
        Command::Run(request) => cmd_run(&request),
        Command::Validate { scenario } => cmd_validate(&scenario),
        Command::Stability { scenario } => cmd_stability(&scenario),
    };
    exit.code()
}

struct Failure {
    exit: Exit,
    message: String,
}

impl Failure {
    fn new(exit: Exit, message: impl Into<String>) -> Self {
        Failure { exit, message: message.into() }
    }
}

fn load(path: &Path) -> Result<ScenarioDocument, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::new(Exit::Io, format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|e| Failure::new(Exit::Invalid, format!("{}:{e}", path.display())))
}

fn simulation_failure(path: &Path, e: SimulationError) -> Failure {
    let exit = match e {
        SimulationError::State(EsnError::NonFiniteState { .. } | EsnError::NegativeMarking { .. }) => Exit::NonFinite,
        SimulationError::State(EsnError::FiringLength { .. }) => Exit::NonFinite,
        _ => Exit::Invalid,
    };
    Failure::new(exit, format!("{}: {e}", path.display()))
}

fn reference_failure(path: &Path, e: ReferenceError) -> Failure {
    match e {
        ReferenceError::Simulation(inner) => simulation_failure(path, inner),
        ReferenceError::NonFiniteState { .. } => Failure::new(Exit::NonFinite, format!("{}: {e}", path.display())),
        other => Failure::new(Exit::Invalid, format!("{}: {other}", path.display())),
    }
}

pub fn cmd_validate(path: &Path) -> Exit {
    let doc = match load(path) {
        Ok(doc) => doc,
        Err(f) => {
            eprintln!("{}", f.message);
            return f.exit;
        }
    };
    let report = validate(&doc.architecture);
    if report.is_valid() {
        println!("{}: valid", path.display());
        Exit::Success
    } else {
        eprint!("{}: {report}", path.display());
        Exit::Invalid
    }
}

pub fn cmd_stability(path: &Path) -> Exit {
    let doc = match load(path) {
        Ok(doc) => doc,
        Err(f) => {
            eprintln!("{}", f.message);
            return f.exit;
        }
    };
    let report = validate(&doc.architecture);
    if !report.is_valid() {
        eprintln!("{}: invalid architecture\n{report}", path.display());
        return Exit::Invalid;
    }
    match stability_max_dt(&doc.architecture, &doc.config.constants) {
        Ok(report) => {
            let mut out = String::new();
            for e in &report.edges {
                let _ = writeln!(out, "{}\t{} -> {}\ttau = {:.6e} s", e.capability, e.origin, e.destination, e.tau);
            }
            let _ = writeln!(out, "max dt = {:.6e} s", report.max_dt);
            let _ = writeln!(out, "configured dt = {} s", doc.config.dt);
            print!("{out}");
            Exit::Success
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            Exit::Invalid
        }
    }
}

/// Output directory for `path` when `n` scenarios run together.
fn output_dir(request: &RunRequest, path: &Path, n: usize) -> PathBuf {
    if n == 1 {
        request.out.clone()
    } else {
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into());
        request.out.join(stem)
    }
}

pub fn cmd_run(request: &RunRequest) -> Exit {
    let n = request.scenarios.len();
    let jobs = (request.jobs as usize).clamp(1, n.max(1));
    let mut results: Vec<Option<Exit>> = vec![None; n];
    std::thread::scope(|scope| {
        let chunks: Vec<Vec<usize>> = (0..jobs).map(|j| (j..n).step_by(jobs).collect()).collect();
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|indices| {
                scope.spawn(move || {
                    indices
                        .into_iter()
                        .map(|i| {
                            let path = &request.scenarios[i];
                            (i, run_one(request, path, &output_dir(request, path, n)))
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for handle in handles {
            for (i, exit) in handle.join().expect("worker panicked") {
                results[i] = Some(exit);
            }
        }
    });
    results.into_iter().flatten().find(|e| *e != Exit::Success).unwrap_or(Exit::Success)
}

fn run_one(request: &RunRequest, path: &Path, out: &Path) -> Exit {
    match produce(request, path) {
        Ok(files) => match write_all(out, &files) {
            Ok(()) => {
                println!("{}: wrote {} file(s) to {}", path.display(), files.len(), out.display());
                Exit::Success
            }
            Err(e) => {
                eprintln!("{}: cannot write to {}: {e}", path.display(), out.display());
                Exit::Io
            }
        },
        Err(f) => {
            eprintln!("{}", f.message);
            f.exit
        }
    }
}

/// Runs everything in memory and returns `(file name, contents)` pairs.
fn produce(request: &RunRequest, path: &Path) -> Result<Vec<(String, Vec<u8>)>, Failure> {
    let mut doc = load(path)?;
    if let Some(dt) = request.dt {
        doc.config.dt = dt;
    }
    if let Some(h) = request.horizon {
        doc.config.horizon_steps = h as usize;
    }
    if let Some(s) = request.stride {
        doc.config.stride = s as usize;
    }
    let traj = simulate(&doc).map_err(|e| simulation_failure(path, e))?;
    report_warnings(path, &traj.warnings);

    let io_err = |e: io::Error| Failure::new(Exit::Io, format!("{}: {e}", path.display()));
    let mut files = vec![("trajectory.csv".to_string(), trajectory_csv(&traj).map_err(io_err)?)];
    if request.compare_ode {
        let bound =
            stability_max_dt(&doc.architecture, &doc.config.constants).map(|r| r.max_dt).unwrap_or(f64::INFINITY);
        let dt_ref = reference_step(doc.config.dt, bound);
        let reference = rk4_integrate(&doc, dt_ref).map_err(|e| reference_failure(path, e))?;
        let cmp = compare_trajectories(&traj, &reference).map_err(|e| reference_failure(path, e))?;
        files.push(("reference.csv".into(), trajectory_csv(&reference).map_err(io_err)?));
        files.push(("comparison.csv".into(), comparison_csv(&cmp).map_err(io_err)?));
    }
    if request.emit_plots {
        for class in BufferClass::ALL {
            if let Some(svg) = concentration_svg(&traj, class, &doc.name) {
                files.push((format!("concentration_{}.svg", class.as_str()), svg.into_bytes()));
            }
        }
    }
    if request.emit_tensors {
        let tensors = hfit::build(&doc.architecture);
        files.extend(tensor_csvs(&tensors).map_err(io_err)?);
    }
    Ok(files)
}

fn report_warnings(path: &Path, warnings: &[SimulationWarning]) {
    const SHOWN: usize = 5;
    for w in warnings.iter().take(SHOWN) {
        eprintln!("{}: warning: {w}", path.display());
    }
    if warnings.len() > SHOWN {
        eprintln!("{}: warning: {} more warning(s)", path.display(), warnings.len() - SHOWN);
    }
}

/// RK4 step: a quarter of `dt` or of the stability bound, whichever is
/// smaller, chosen so it divides `dt` exactly.
pub fn reference_step(dt: f64, bound: f64) -> f64 {
    let divisions = if bound.is_finite() && dt > bound { (dt / bound).ceil() } else { 1.0 };
    dt / (4.0 * divisions)
}

/// Writes files through temporaries in `dir` and renames them into place.
fn write_all(dir: &Path, files: &[(String, Vec<u8>)]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, target) in staged {
        tmp.persist(&target).map_err(|e| e.error)?;
    }
    Ok(())
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub fn trajectory_csv(traj: &Trajectory) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let buffers: Vec<_> = traj.buffers().map(|p| p.buffer.clone()).collect();
    let mut header = vec!["time_s".to_string()];
    for b in &buffers {
        header.extend([format!("V_{b}"), format!("m_{b}"), format!("c_{b}")]);
    }
    header.extend(traj.capabilities.iter().map(|c| format!("U_{c}")));
    w.write_record(&header)?;

    let columns: Vec<(usize, usize)> = buffers
        .iter()
        .map(|b| {
            (
                traj.place(crate::architecture::OperandRole::Water, b).expect("water place"),
                traj.place(crate::architecture::OperandRole::Nitrogen, b).expect("nitrogen place"),
            )
        })
        .collect();
    for ((t, q), u) in traj.times.iter().zip(&traj.states).zip(&traj.firings) {
        let mut row = vec![fmt_f64(*t)];
        for &(wi, ni) in &columns {
            row.push(fmt_f64(q[wi]));
            row.push(fmt_f64(q[ni]));
            row.push(concentration(q[wi], q[ni]).map(fmt_f64).unwrap_or_default());
        }
        row.extend(u.iter().map(|x| fmt_f64(*x)));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| e.into_error())
}

pub fn comparison_csv(cmp: &Comparison) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["buffer", "linf", "rmse", "samples"])?;
    for b in &cmp.buffers {
        w.write_record([b.buffer.clone(), fmt_f64(b.linf), fmt_f64(b.rmse), b.samples.to_string()])?;
    }
    let total: usize = cmp.buffers.iter().map(|b| b.samples).sum();
    w.write_record(["*".to_string(), fmt_f64(cmp.linf), fmt_f64(cmp.rmse), total.to_string()])?;
    w.into_inner().map_err(|e| e.into_error())
}

pub fn tensor_csvs(tensors: &IncidenceTensors) -> io::Result<Vec<(String, Vec<u8>)>> {
    let mut out = Vec::new();
    for (name, m) in [("M_plus.csv", &tensors.plus), ("M_minus.csv", &tensors.minus), ("M.csv", &tensors.net)] {
        let mut bytes = Vec::new();
        m.write_triplets_csv(&mut bytes)?;
        out.push((name.to_string(), bytes));
    }
    let mut labels = csv::Writer::from_writer(Vec::new());
    labels.write_record(["axis", "index", "label"])?;
    for (i, p) in tensors.places.places().iter().enumerate() {
        let operand = match p.operand {
            crate::architecture::OperandRole::Water => "water",
            crate::architecture::OperandRole::Nitrogen => "nitrogen",
        };
        labels.write_record(["row".to_string(), i.to_string(), format!("{operand}:{}", p.buffer)])?;
    }
    for (i, id) in tensors.capabilities.ids().iter().enumerate() {
        labels.write_record(["col".to_string(), i.to_string(), id.clone()])?;
    }
    out.push(("tensor_labels.csv".into(), labels.into_inner().map_err(|e| e.into_error())?));
    Ok(out)
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// Line chart of concentration against time (days) for every buffer of
/// `class`; `None` if the class has no buffers.
pub fn concentration_svg(traj: &Trajectory, class: BufferClass, title: &str) -> Option<String> {
    const W: f64 = 800.0;
    const H: f64 = 420.0;
    const LEFT: f64 = 80.0;
    const RIGHT: f64 = 160.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 50.0;
    const MAX_POINTS: usize = 2000;

    let series: Vec<(String, Vec<(f64, f64)>)> = traj
        .buffers()
        .filter(|p| p.class == class)
        .map(|p| {
            let w = traj.place(crate::architecture::OperandRole::Water, &p.buffer).expect("water place");
            let n = traj.place(crate::architecture::OperandRole::Nitrogen, &p.buffer).expect("nitrogen place");
            let every = traj.len().div_ceil(MAX_POINTS).max(1);
            let points = traj
                .times
                .iter()
                .zip(&traj.states)
                .enumerate()
                .filter(|(i, _)| i % every == 0 || *i + 1 == traj.len())
                .filter_map(|(_, (t, q))| concentration(q[w], q[n]).map(|c| (t / 86_400.0, c)))
                .collect();
            (p.buffer.clone(), points)
        })
        .collect();
    if series.is_empty() {
        return None;
    }
    let all = series.iter().flat_map(|(_, pts)| pts.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        let pad = if y0 == 0.0 { 1.0 } else { y0.abs() * 0.05 };
        y0 -= pad;
        y1 += pad;
    }
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{} nitrogen concentration ({})</text>"#,
        LEFT + pw / 2.0,
        xml_text(title),
        class.as_str()
    );
    let _ = writeln!(s, r#"<path d="M{LEFT},{TOP} V{} H{}" fill="none" stroke="black"/>"#, TOP + ph, LEFT + pw);
    for i in 0..=4 {
        let f = f64::from(i) / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            sx(xv),
            TOP + ph + 16.0,
            tick(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            sy(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">time (days)</text>"#,
        LEFT + pw / 2.0,
        H - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">c (kg/m³)</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for &(x, y) in pts {
            let _ = write!(d, "{:.2},{:.2} ", sx(x), sy(y));
        }
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, d.trim_end());
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            LEFT + pw + 12.0,
            LEFT + pw + 32.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            LEFT + pw + 38.0,
            ly + 4.0,
            xml_text(name)
        );
    }
    s.push_str("</svg>\n");
    Some(s)
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e-2 && v.abs() < 1e4 {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn xml_text(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
