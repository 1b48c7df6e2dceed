use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hicontrast::bloch::{dispersion_sweep, write_bands_csv, write_gaps_csv};
use hicontrast::config::{Format, SolverSpec, StudyConfig, Task};
use hicontrast::exact1d::{limit_spectrum_1d, limit_transfer_eigenvalues, transfer_spectrum_1d, write_branched_csv, write_trace_csv, write_transfer_csv};
use hicontrast::fdm::{assemble, smallest_eigenpairs, write_spectrum_csv};
use hicontrast::limitspec::{write_limit_csv, LimitProblem};
use hicontrast::radial3d::sphere_limit_spectrum;
use hicontrast::studies::{applicable, run_converge, run_validate, write_converge_csv, write_validate_csv};
use hicontrast::{BoundaryKind, ContrastMedium, Error, Geometry, C64};
use serde_json::{Map, Value};

#[derive(Parser)]
#[command(name = "hicontrast", version, about = "Spectra of high-contrast media and their epsilon -> 0 limits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON study configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Eigenvalues at the configured epsilon > 0.
    Spectrum,
    /// The epsilon = 0 limit spectrum.
    Limit,
    /// Band structure over the k grid and epsilon list.
    Dispersion,
    /// Affine epsilon -> 0 extrapolation against the limit solver.
    Converge,
    /// Acceptance criteria; exit code 4 if any fails.
    Validate,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

enum Failure {
    Config(String),
    Solver(String),
    Validation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Json(_) => Failure::Config(e.to_string()),
            other => Failure::Solver(other.to_string()),
        }
    }
}

/// Writes one table per file, CSV as produced or JSON records mirroring it.
struct Emitter {
    dir: PathBuf,
    format: Format,
}

impl Emitter {
    fn table(&self, stem: &str, write: impl FnOnce(&mut Vec<u8>) -> hicontrast::Result<()>) -> Result<PathBuf, Failure> {
        let mut buf = vec![];
        write(&mut buf)?;
        let (path, bytes) = match self.format {
            Format::Csv => (self.dir.join(format!("{stem}.csv")), buf),
            Format::Json => {
                let v = csv_to_json(&buf).map_err(|e| Failure::Solver(e.to_string()))?;
                (self.dir.join(format!("{stem}.json")), serde_json::to_vec_pretty(&v).unwrap())
            }
        };
        fs::write(&path, bytes).map_err(|e| Failure::Solver(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    fn json(&self, stem: &str, v: &impl serde::Serialize) -> Result<PathBuf, Failure> {
        let path = self.dir.join(format!("{stem}.json"));
        let text = serde_json::to_vec_pretty(v).map_err(|e| Failure::Solver(e.to_string()))?;
        fs::write(&path, text).map_err(|e| Failure::Solver(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

fn csv_to_json(bytes: &[u8]) -> csv::Result<Value> {
    let mut rd = csv::Reader::from_reader(bytes);
    let head = rd.headers()?.clone();
    let mut rows = vec![];
    for rec in rd.records() {
        let rec = rec?;
        let mut obj = Map::new();
        for (k, v) in head.iter().zip(rec.iter()) {
            let val = match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Value::from(x),
                _ => Value::from(v),
            };
            obj.insert(k.to_string(), val);
        }
        rows.push(Value::Object(obj));
    }
    Ok(Value::Array(rows))
}

fn load(cli: &Cli, cmd: Command) -> Result<Option<StudyConfig>, Failure> {
    let Some(path) = &cli.config else {
        return if cmd == Command::Validate { Ok(None) } else { Err(Failure::Config("--config is required".into())) };
    };
    let cfg = StudyConfig::load(path)?;
    let want = match cmd {
        Command::Spectrum => Task::Spectrum,
        Command::Limit => Task::Limit,
        Command::Dispersion => Task::Dispersion,
        Command::Converge => Task::Converge,
        Command::Validate => Task::Validate,
    };
    if cfg.task != want {
        return Err(Failure::Config(format!("config task {:?} does not match the subcommand", cfg.task)));
    }
    Ok(Some(cfg))
}

fn spectrum(cfg: &StudyConfig, med: &ContrastMedium, out: &Emitter) -> Result<(), Failure> {
    med.require_positive_epsilon()?;
    match (&med.geometry, cfg.solver) {
        (Geometry::Line(g), SolverSpec::Exact) => {
            let s = transfer_spectrum_1d(g, med.epsilon, &med.bc, cfg.lambda_max)?;
            out.table("spectrum", |w| write_transfer_csv(&s, w))?;
            for (i, ef) in s.eigenfunctions.iter().enumerate().filter(|_| cfg.samples > 0) {
                out.table(&format!("trace_{}", i + 1), |w| write_trace_csv(ef, cfg.samples, w))?;
            }
        }
        (_, SolverSpec::Exact) => return Err(Failure::Config("the exact solver is 1D only".into())),
        _ if matches!(med.bc, BoundaryKind::Bloch(_)) => {
            let s = smallest_eigenpairs(&assemble::<C64>(med)?, cfg.count)?;
            out.table("spectrum", |w| write_spectrum_csv(&s, w))?;
        }
        _ => {
            let s = smallest_eigenpairs(&assemble::<f64>(med)?, cfg.count)?;
            out.table("spectrum", |w| write_spectrum_csv(&s, w))?;
        }
    }
    Ok(())
}

fn plain_rows(label: &str, values: &[f64], w: &mut Vec<u8>) -> hicontrast::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["branch", "index", "lambda", "omega", "residual"])?;
    for (i, l) in values.iter().enumerate() {
        wr.write_record([label.to_string(), (i + 1).to_string(), l.to_string(), l.sqrt().to_string(), "0".into()])?;
    }
    wr.flush()?;
    Ok(())
}

fn limit(cfg: &StudyConfig, med: &ContrastMedium, out: &Emitter) -> Result<(), Failure> {
    let lmax = cfg.lambda_max;
    match (&med.geometry, cfg.solver) {
        (Geometry::Line(g), SolverSpec::Exact) => {
            let single = g.inclusions.len() == 1 && g.x_lo == -1.0 && g.x_hi == 1.0;
            if single && !matches!(med.bc, BoundaryKind::Bloch(_)) {
                let s = limit_spectrum_1d(g, &med.bc, lmax)?;
                out.table("limit", |w| write_branched_csv(&s, w))?;
                if cfg.samples > 0 {
                    for (i, m) in s.all().iter().enumerate() {
                        out.table(&format!("trace_{}", i + 1), |w| write_trace_csv(&m.eigenfunction, cfg.samples, w))?;
                    }
                }
            } else {
                let v = limit_transfer_eigenvalues(g, &med.bc, lmax)?;
                out.table("limit", |w| plain_rows("limit", &v, w))?;
            }
        }
        (Geometry::Radial(r), SolverSpec::Exact) if med.bc == BoundaryKind::Dirichlet => {
            let s = sphere_limit_spectrum(r.a, lmax, cfg.samples.max(2))?;
            let v: Vec<f64> = s.modes.iter().map(|m| m.0).collect();
            out.table("limit", |w| plain_rows("S2", &v, w))?;
        }
        (_, SolverSpec::Exact) => return Err(Failure::Config("no exact limit solver for this geometry".into())),
        _ if matches!(med.bc, BoundaryKind::Bloch(_)) => {
            let p = LimitProblem::<C64>::new(med)?;
            let s = p.spectrum(lmax)?;
            out.table("limit", |w| write_limit_csv(&s.pairs, p.inclusion_count(), w))?;
        }
        _ => {
            let p = LimitProblem::<f64>::new(med)?;
            let s = p.spectrum(lmax)?;
            out.table("limit", |w| write_limit_csv(&s.pairs, p.inclusion_count(), w))?;
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| Failure::Config(format!("--jobs: {e}")))?;
    }
    let cmd = cli.command;
    let cfg = load(cli, cmd)?;
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.as_ref().and_then(|c| c.out.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
    let format = match cli.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None => cfg.as_ref().and_then(|c| c.format).unwrap_or_default(),
    };
    let out = Emitter { dir, format };
    let med = cfg.as_ref().map(|c| c.medium()).transpose()?;
    match cmd {
        Command::Validate => {
            let outcomes = run_validate(&applicable(med.as_ref()));
            for o in &outcomes {
                println!("criterion {:>2} {} [{}] ({:.2}s): {}", o.id, if o.pass { "PASS" } else { "FAIL" }, o.name, o.seconds, o.detail);
            }
            out.json("validate", &outcomes)?;
            if format == Format::Csv {
                out.table("validate", |w| write_validate_csv(&outcomes, w))?;
            }
            let failed: Vec<String> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id.to_string()).collect();
            if !failed.is_empty() {
                return Err(Failure::Validation(format!("criteria failed: {}", failed.join(", "))));
            }
        }
        _ => {
            let (cfg, med) = (cfg.unwrap(), med.unwrap());
            match cmd {
                Command::Spectrum => spectrum(&cfg, &med, &out)?,
                Command::Limit => limit(&cfg, &med, &out)?,
                Command::Dispersion => {
                    let b = dispersion_sweep(&med, &cfg.k_vectors(), cfg.count, &cfg.eps_list, cfg.solver.into())?;
                    out.table("bands", |w| write_bands_csv(&b, w))?;
                    out.table("gaps", |w| write_gaps_csv(&b, w))?;
                }
                Command::Converge => {
                    let r = run_converge(&cfg)?;
                    match format {
                        Format::Csv => out.table_raw("converge", |w| write_converge_csv(&r, w))?,
                        Format::Json => out.json("converge", &r)?,
                    };
                    println!("converge: {}", if r.pass { "PASS" } else { "FAIL" });
                    if !r.pass {
                        return Err(Failure::Validation("extrapolation does not match the limit solver".into()));
                    }
                }
                Command::Validate => unreachable!(),
            }
        }
    }
    Ok(())
}

impl Emitter {
    /// CSV written verbatim (multi-table files).
    fn table_raw(&self, stem: &str, write: impl FnOnce(&mut Vec<u8>) -> hicontrast::Result<()>) -> Result<PathBuf, Failure> {
        let mut buf = vec![];
        write(&mut buf)?;
        let path = self.dir.join(format!("{stem}.csv"));
        fs::write(&path, buf).map_err(|e| Failure::Solver(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("solver failure: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Validation(m)) => {
            eprintln!("validation failure: {m}");
            ExitCode::from(4)
        }
    }
}
