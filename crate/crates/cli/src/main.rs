use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use membrane_core::config::{ConfigError, ScenarioConfig, StudyConfig};
use membrane_core::convergence::{run_study, study_csv, NormKind, StudyError};
use membrane_core::integrator::IntegratorError;
use membrane_core::io::{RunManifest, SnapshotFiles, SnapshotWriter};
use membrane_core::scenarios::{ScenarioError, Simulation};
use membrane_core::Mesh;

/// Finite-element dynamics of thin anisotropic membranes.
#[derive(Debug, Parser)]
#[command(name = "membrane", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and write snapshots.
    Run {
        config: PathBuf,
        /// Output directory (overrides output.directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Snapshot cadence in steps (overrides output.every_n_steps).
        #[arg(long)]
        every: Option<usize>,
        /// Timestep in seconds (overrides tau).
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Run a refinement study and write study.csv.
    Convergence {
        study: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print a summary of a gmsh 2.2 ASCII mesh.
    MeshInfo { file: PathBuf },
}

enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Scenario(s) => s.into(),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match &e {
            ScenarioError::Integrator(
                IntegratorError::Singular { .. } | IntegratorError::NonFinite(_) | IntegratorError::StaleFactorization(_),
            ) => Failure::Numerical(e.to_string()),
            ScenarioError::Observer(_) => Failure::Io(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<StudyError> for Failure {
    fn from(e: StudyError) -> Self {
        let msg = e.to_string();
        match e {
            StudyError::Level { source, .. } | StudyError::Scenario(source) => match Failure::from(source) {
                Failure::Numerical(_) => Failure::Numerical(msg),
                Failure::Io(_) => Failure::Io(msg),
                Failure::Config(_) => Failure::Config(msg),
            },
            StudyError::MissingNode { .. } => Failure::Numerical(msg),
            _ => Failure::Config(msg),
        }
    }
}

fn io_err(what: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", what.display()))
}

fn cmd_run(config: &Path, out: Option<PathBuf>, every: Option<usize>, tau: Option<f64>) -> Result<(), Failure> {
    let mut cfg = ScenarioConfig::from_path(config)?;
    if let Some(dir) = out {
        cfg.output.directory = dir;
    }
    if let Some(every) = every {
        cfg.output.every_n_steps = every;
    }
    if tau.is_some() {
        cfg.tau = tau;
    }
    let base_dir = config.parent().unwrap_or(Path::new("."));
    let run = cfg.resolve(base_dir)?;
    let (steps, tau) = run.schedule();
    let params = run.params()?;
    let started = Instant::now();
    let mut sim = Simulation::new(run.mesh, run.material, &run.scenario, params)?;

    let dir = cfg.output.directory.clone();
    let files = SnapshotFiles {
        vtk: cfg.output.vtk,
        elements: cfg.output.elements,
    };
    let mut writer = SnapshotWriter::new(&dir, files).map_err(io_err(&dir))?;
    sim.run(steps, cfg.output.every_n_steps, |sim| {
        let responses = if files.elements { Some(sim.element_responses()?) } else { None };
        writer.write(sim.mesh(), sim.material(), sim.state(), responses.as_deref())?;
        Ok(())
    })?;

    let manifest = RunManifest {
        config: serde_json::to_value(&cfg).map_err(|e| Failure::Io(e.to_string()))?,
        version: env!("CARGO_PKG_VERSION").to_string(),
        tau,
        steps,
        t_end: run.t_end,
        n_nodes: sim.mesh().n_nodes(),
        n_elements: sim.mesh().n_triangles(),
        threads: rayon::current_num_threads(),
        wall_time_s: started.elapsed().as_secs_f64(),
        snapshots: writer.written().to_vec(),
    };
    let path = dir.join("manifest.json");
    manifest.write(&path).map_err(io_err(&path))?;
    let (kinetic, strain) = sim.energy();
    println!(
        "{} steps of {tau:.6e} s on {} nodes; {} files in {}",
        steps,
        sim.mesh().n_nodes(),
        writer.written().len() + 1,
        dir.display()
    );
    println!("final energy: kinetic {kinetic:.6e} J, strain {strain:.6e} J");
    Ok(())
}

fn cmd_convergence(study: &Path, out: &Path) -> Result<(), Failure> {
    let spec = StudyConfig::from_path(study)?.resolve()?;
    let result = run_study(&spec)?;
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let path = out.join("study.csv");
    std::fs::write(&path, study_csv(&result)).map_err(io_err(&path))?;
    for lvl in &result.levels {
        println!("level {}: {} nodes, tau {:.6e} s, {} steps", lvl.level, lvl.n_nodes, lvl.tau, lvl.steps);
    }
    for (kind, fit) in NormKind::ALL.iter().zip(&result.joint) {
        if !fit.excluded.is_empty() {
            eprintln!("warning: {} norm is zero at levels {:?}; excluded from the fit", kind.label(), fit.excluded);
        }
        match fit.rate {
            Some(r) => println!("rate {}: {r:.3}", kind.label()),
            None => println!("rate {}: undefined", kind.label()),
        }
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_mesh_info(file: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(file).map_err(|e| Failure::Config(format!("cannot read {}: {e}", file.display())))?;
    let mesh: Mesh<f64> = Mesh::read_msh(&text).map_err(|e| Failure::Config(e.to_string()))?;
    let [x0, x1, y0, y1] = mesh.bounds();
    println!("nodes: {}", mesh.n_nodes());
    println!("triangles: {}", mesh.n_triangles());
    println!("boundary nodes: {}", mesh.boundary_nodes().len());
    println!("bounds: [{x0}, {x1}] x [{y0}, {y1}]");
    println!("area: {:.12e}", mesh.total_area());
    println!("edge length: min {:.6e}, max {:.6e}", mesh.min_edge(), mesh.max_edge());
    Ok(())
}

fn thread_pool() -> Result<Option<rayon::ThreadPool>, Failure> {
    let Ok(value) = std::env::var("MEMBRANE_THREADS") else {
        return Ok(None);
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Failure::Config(format!("MEMBRANE_THREADS must be a positive integer (got {value:?})")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map(Some)
        .map_err(|e| Failure::Config(format!("cannot start {n} worker threads: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || match cli.command {
        Command::Run { config, out, every, tau } => cmd_run(&config, out, every, tau),
        Command::Convergence { study, out } => cmd_convergence(&study, &out),
        Command::MeshInfo { file } => cmd_mesh_info(&file),
    };
    let result = match thread_pool() {
        Ok(Some(pool)) => pool.install(run),
        Ok(None) => run(),
        Err(e) => Err(e),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
