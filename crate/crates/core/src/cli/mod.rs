//! The `vqthermo` command-line frontend: config in, CSV and run summary out.

pub mod config;
mod format;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{Experiment, ExperimentConfig};
pub use format::format_sig;

use crate::dynamics::{evolve_times, generator, steady_state_nullspace};
use crate::effrme::steady_state_cramer;
use crate::error::Error;
use crate::laser::{inversion_sweep, CURVES};
use crate::operator::partial_trace;
use crate::ratefit::{fit_effective_rates, log_log_slope, sweep_fit, SweepVariable};
use crate::virtual_qubit::{effective_rate_qvir, virtual_qubit_of};

/// Exit status for configuration and validation errors.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for failures while computing.
pub const EXIT_RUNTIME: i32 = 1;

/// A failed run and the exit status it maps to.
#[derive(Debug)]
pub struct RunError {
    pub status: i32,
    pub message: String,
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for RunError {}

fn config_error(e: impl std::fmt::Display) -> RunError {
    RunError { status: EXIT_CONFIG, message: e.to_string() }
}

fn runtime_error(e: impl std::fmt::Display) -> RunError {
    RunError { status: EXIT_RUNTIME, message: e.to_string() }
}

/// Invocation parameters beyond the config file.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub experiment: Experiment,
    pub config_path: PathBuf,
    pub output: Option<PathBuf>,
    pub jobs: usize,
}

/// Paths of the files a run wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub csv: PathBuf,
    pub summary: PathBuf,
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    notes: String,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new(), notes: String::new() }
    }
}

fn num(x: f64) -> String {
    format_sig(x)
}

fn opt(x: Option<f64>) -> String {
    x.map(format_sig).unwrap_or_default()
}

/// Summary-path convention: `out.csv` → `out.summary.txt`.
pub fn summary_path(csv: &Path) -> PathBuf {
    csv.with_extension("summary.txt")
}

pub fn run_experiment(opts: &RunOptions) -> std::result::Result<RunArtifacts, RunError> {
    let start = Instant::now();
    let text = std::fs::read_to_string(&opts.config_path)
        .map_err(|e| config_error(format!("cannot read {}: {e}", opts.config_path.display())))?;
    let cfg = ExperimentConfig::parse(&text).map_err(config_error)?;
    if let Some(declared) = cfg.experiment {
        if declared != opts.experiment {
            return Err(config_error(format!(
                "config is for `{}` but `{}` was requested",
                declared.name(),
                opts.experiment.name()
            )));
        }
    }
    let csv_path = match (&opts.output, &cfg.output) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => p.clone(),
        (None, None) => {
            let stem = opts.config_path.file_stem().map(|s| s.to_string_lossy().into_owned());
            PathBuf::from(format!("{}.csv", stem.unwrap_or_else(|| opts.experiment.name().into())))
        }
    };
    log::info!("{} from {} -> {}", opts.experiment.name(), opts.config_path.display(), csv_path.display());

    let table = match opts.experiment {
        Experiment::VirtualTemp => virtual_temp(&cfg),
        Experiment::SteadyState => steady_state(&cfg),
        Experiment::Evolve => evolve(&cfg),
        Experiment::FitRates => fit_rates(&cfg),
        Experiment::SweepFit => sweep(&cfg, opts.jobs),
        Experiment::LaserSweep => laser_sweep(&cfg, opts.jobs),
    }?;

    write_csv(&csv_path, &table).map_err(runtime_error)?;
    let summary = summary_path(&csv_path);
    let mut text = String::new();
    let _ = writeln!(text, "experiment: {}", opts.experiment.name());
    let _ = writeln!(text, "config: {}", opts.config_path.display());
    let _ = writeln!(text, "output: {}", csv_path.display());
    let _ = writeln!(text, "jobs: {}", opts.jobs);
    let evolve = cfg.evolve_options();
    let _ = writeln!(text, "integrator: rtol = {:e}, atol = {:e}", evolve.rtol, evolve.atol);
    let _ = writeln!(text, "rows: {}", table.rows.len());
    text.push_str(&table.notes);
    let _ = writeln!(text, "wall time: {:.3} s", start.elapsed().as_secs_f64());
    let _ = writeln!(text, "\n# resolved configuration");
    text.push_str(&toml::to_string(&cfg).unwrap_or_else(|e| format!("<unavailable: {e}>\n")));
    std::fs::write(&summary, text).map_err(runtime_error)?;
    Ok(RunArtifacts { csv: csv_path, summary })
}

fn write_csv(path: &Path, table: &Table) -> std::result::Result<(), Error> {
    let io = |e: csv::Error| Error::Config(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_path(path).map_err(io)?;
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn virtual_temp(cfg: &ExperimentConfig) -> std::result::Result<Table, RunError> {
    let model = cfg.model().map_err(config_error)?;
    let mut t = Table::new(&[
        "machine",
        "k",
        "l",
        "omega1",
        "omega2",
        "temp1",
        "temp2",
        "virtual_temperature",
        "pop_ground",
        "pop_excited",
        "norm",
        "q_vir",
        "error",
    ]);
    for (i, m) in model.machines.iter().enumerate() {
        let mut row = vec![
            i.to_string(),
            m.target_pair.0.to_string(),
            m.target_pair.1.to_string(),
            num(m.omega1),
            num(m.omega2),
            num(m.temp1),
            num(m.temp2),
        ];
        match virtual_qubit_of(m).and_then(|vq| Ok((vq, effective_rate_qvir(m)?))) {
            Ok((vq, q)) => {
                row.extend([num(vq.vtemp), num(vq.pop_ground), num(vq.pop_excited), num(vq.norm), num(q)]);
                row.push(String::new());
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), 5));
                row.push(e.to_string());
            }
        }
        t.rows.push(row);
    }
    Ok(t)
}

fn steady_state(cfg: &ExperimentConfig) -> std::result::Result<Table, RunError> {
    let mut t = Table::new(&["level", "population", "method"]);
    let (pops, method) = match (&cfg.model, &cfg.effrme) {
        (None, Some(_)) => {
            let spec = cfg.effrme().map_err(config_error)?;
            (steady_state_cramer(&spec).map_err(runtime_error)?.probs().to_vec(), "effrme")
        }
        (Some(_), None) => {
            let model = cfg.model().map_err(config_error)?;
            let gen = generator(&model).map_err(config_error)?;
            let rho = steady_state_nullspace(&gen).map_err(runtime_error)?;
            let target = partial_trace(&rho, &[0]).map_err(runtime_error)?;
            let _ = writeln!(t.notes, "trace defect of generator: {:e}", gen.trace_defect());
            let _ = writeln!(t.notes, "min eigenvalue of steady state: {:e}", rho.min_eigenvalue());
            (target.populations(), "nullspace")
        }
        (Some(_), Some(_)) => return Err(config_error("give either [model] or [effrme], not both")),
        (None, None) => return Err(config_error("missing field: model")),
    };
    for (k, p) in pops.iter().enumerate() {
        t.rows.push(vec![k.to_string(), num(*p), method.into()]);
    }
    Ok(t)
}

fn evolve(cfg: &ExperimentConfig) -> std::result::Result<Table, RunError> {
    let model = cfg.model().map_err(config_error)?;
    let section = cfg.evolve_section().map_err(config_error)?;
    let times = section.resolve_times().map_err(config_error)?;
    let n = model.n();
    if section.target_populations.len() != n {
        return Err(config_error(format!(
            "evolve.target_populations has {} entries for {n} levels",
            section.target_populations.len()
        )));
    }
    let target = crate::operator::DensityMatrix::diagonal(&section.target_populations).map_err(config_error)?;
    let rho0 = model.product_with_machines(target.matrix()).map_err(config_error)?;
    let gen = generator(&model).map_err(config_error)?;
    let states = evolve_times(&gen, &rho0, &times, &cfg.evolve_options()).map_err(runtime_error)?;
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((0..n).map(|k| format!("p_{k}")));
    header.extend(["trace_error".into(), "min_eigenvalue".into()]);
    let mut t = Table { header, rows: Vec::new(), notes: String::new() };
    let mut floor = f64::INFINITY;
    for (time, rho) in times.iter().zip(&states) {
        let reduced = partial_trace(rho, &[0]).map_err(runtime_error)?;
        let min_eig = rho.min_eigenvalue();
        floor = floor.min(min_eig);
        let mut row = vec![num(*time)];
        row.extend(reduced.populations().iter().map(|p| num(*p)));
        row.push(num(rho.operator().trace().re - 1.0));
        row.push(num(min_eig));
        t.rows.push(row);
    }
    let _ = writeln!(t.notes, "positivity floor over the run: {:e}", floor);
    Ok(t)
}

fn fit_rates(cfg: &ExperimentConfig) -> std::result::Result<Table, RunError> {
    let problem = cfg.fit_problem().map_err(config_error)?;
    let fit = fit_effective_rates(&problem).map_err(runtime_error)?;
    let mut t = Table::new(&[
        "q_A",
        "q_B",
        "q_C",
        "qA_over_qB",
        "qB_over_qC",
        "qA_over_qC",
        "residual",
        "evaluations",
        "converged",
    ]);
    t.rows.push(vec![
        num(fit.rates[0]),
        num(fit.rates[1]),
        num(fit.rates[2]),
        num(fit.ratio_ab()),
        num(fit.ratio_bc()),
        num(fit.ratio_ac()),
        num(fit.residual),
        fit.evaluations.to_string(),
        fit.converged.to_string(),
    ]);
    let _ = writeln!(
        t.notes,
        "residual: {:?}, tolerance {:e}, budget {}",
        problem.residual, problem.tolerance, problem.max_evaluations
    );
    Ok(t)
}

fn sweep(cfg: &ExperimentConfig, jobs: usize) -> std::result::Result<Table, RunError> {
    let problem = cfg.fit_problem().map_err(config_error)?;
    let (variable, values) = cfg.fit_sweep().map_err(config_error)?;
    let points = sweep_fit(&problem, variable, &values, jobs).map_err(config_error)?;
    let mut t = Table::new(&[
        variable.name(),
        "qA_over_qB",
        "qB_over_qC",
        "residual",
        "qA_over_qC",
        "q_A",
        "q_B",
        "q_C",
        "n_A",
        "n_B",
        "n_C",
        "evaluations",
        "converged",
        "error",
    ]);
    for p in &points {
        let mut row = vec![num(p.value)];
        match &p.fit {
            Ok(f) => {
                row.extend([num(f.ratio_ab()), num(f.ratio_bc()), num(f.residual), num(f.ratio_ac())]);
                row.extend(f.rates.iter().map(|q| num(*q)));
            }
            Err(_) => row.extend(std::iter::repeat_n(String::new(), 7)),
        }
        let norms = p.norms.map(|n| n.map(Some)).unwrap_or([None; 3]);
        row.extend(norms.iter().map(|n| opt(*n)));
        match &p.fit {
            Ok(f) => row.extend([f.evaluations.to_string(), f.converged.to_string(), String::new()]),
            Err(e) => row.extend([String::new(), String::new(), e.clone()]),
        }
        t.rows.push(row);
    }
    let _ = writeln!(
        t.notes,
        "residual: {:?}, tolerance {:e}, budget {}",
        problem.residual, problem.tolerance, problem.max_evaluations
    );
    let ok: Vec<_> = points.iter().filter_map(|p| p.fit.as_ref().ok().map(|f| (p.value, *f))).collect();
    if ok.len() >= 2 && variable != SweepVariable::HotTemperature {
        let x: Vec<f64> = ok.iter().map(|(v, _)| *v).collect();
        let ab: Vec<f64> = ok.iter().map(|(_, f)| f.ratio_ab()).collect();
        let bc: Vec<f64> = ok.iter().map(|(_, f)| f.ratio_bc()).collect();
        let _ = writeln!(t.notes, "log-log slope of qA_over_qB: {:.6}", log_log_slope(&x, &ab));
        let _ = writeln!(t.notes, "log-log slope of qB_over_qC: {:.6}", log_log_slope(&x, &bc));
    }
    let failed = points.iter().filter(|p| p.fit.is_err()).count();
    let _ = writeln!(t.notes, "failed points: {failed}");
    Ok(t)
}

fn laser_sweep(cfg: &ExperimentConfig, jobs: usize) -> std::result::Result<Table, RunError> {
    let laser = cfg.laser().map_err(config_error)?;
    let (name, values) = cfg.sweep().map_err(config_error)?;
    if name != "T_h" {
        return Err(config_error(format!("laser sweeps vary T_h, got sweep variable: {name}")));
    }
    let sweep = inversion_sweep(&laser, &values, jobs).map_err(config_error)?;
    let mut header = vec!["T_h"];
    header.extend(CURVES.iter().map(|c| c.0));
    header.extend(["T_vB", "T_vC", "error"]);
    let mut t = Table::new(&header);
    for r in &sweep.rows {
        let mut row = vec![num(r.t_hot)];
        match &r.ratios {
            Ok(v) => row.extend(v.iter().map(|x| num(*x))),
            Err(_) => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        let (tvb, tvc) = r.virtual_temperatures.map_or((None, None), |(b, c)| (Some(b), Some(c)));
        row.extend([opt(tvb), opt(tvc)]);
        row.push(r.ratios.as_ref().err().cloned().unwrap_or_default());
        t.rows.push(row);
    }
    let list = |v: &[f64]| v.iter().map(|x| format_sig(*x)).collect::<Vec<_>>().join(", ");
    for (k, (name, _, _)) in CURVES.iter().enumerate() {
        let _ = writeln!(t.notes, "lasing threshold p1/p0 = 1, {name}: [{}]", list(&sweep.thresholds[k]));
    }
    let _ = writeln!(
        t.notes,
        "virtual_lossy crosses typical_lossless at T_h: [{}]",
        list(&sweep.lossy_virtual_beats_typical)
    );
    if let Ok(th) = laser.inversion_threshold() {
        let _ = writeln!(t.notes, "T_vB changes sign at T_h = {}", format_sig(th));
    }
    Ok(t)
}

/// Convenience for callers that already hold a `Result`.
pub fn exit_status(result: &std::result::Result<RunArtifacts, RunError>) -> i32 {
    match result {
        Ok(_) => 0,
        Err(e) => e.status,
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        runtime_error(e)
    }
}
