//! `hughes`: run scenarios, dump eikonal fields and tabulate fundamental diagrams.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hughes_core::io::{format_diagram_table, parse_scenario, write_eikonal_outputs, write_outputs};
use hughes_core::{direction_field, run, DiagramKind, DiagramParams, DiagramSpec, Error, Scenario64, Simulation};

#[derive(Debug, Parser)]
#[command(name = "hughes", version, about = "Hughes-model crowd evacuation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write metrics, snapshots and run metadata.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory; defaults to the scenario's `out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the eikonal equation once on the initial density and dump u and the direction field.
    Eikonal {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print `m,speed` samples of a fundamental diagram on [0, 1].
    DiagramTable(TableArgs),
}

#[derive(Debug, Args)]
struct TableArgs {
    #[arg(long)]
    kind: DiagramKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = hughes_core::diagrams::DEFAULT_DELTA)]
    delta: f64,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    a4: Option<f64>,
    #[arg(long)]
    a3: Option<f64>,
    #[arg(long)]
    a2: Option<f64>,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    a0: Option<f64>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    k2: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    vmax: Option<f64>,
}

impl TableArgs {
    fn spec(&self) -> Result<DiagramSpec<f64>, Error> {
        let base = DiagramSpec::with_defaults(self.kind, self.delta)?;
        let given = [
            ("alpha", self.alpha),
            ("k", self.k),
            ("a4", self.a4),
            ("a3", self.a3),
            ("a2", self.a2),
            ("a1", self.a1),
            ("a0", self.a0),
            ("k1", self.k1),
            ("k2", self.k2),
            ("beta", self.beta),
            ("vmax", self.vmax),
        ];
        let params = match *base.params() {
            DiagramParams::Linear => DiagramParams::Linear,
            DiagramParams::CappedExponential { alpha, k } => DiagramParams::CappedExponential {
                alpha: self.alpha.unwrap_or(alpha),
                k: self.k.unwrap_or(k),
            },
            DiagramParams::Exponential { alpha } => DiagramParams::Exponential {
                alpha: self.alpha.unwrap_or(alpha),
            },
            DiagramParams::Quartic { a4, a3, a2, a1, a0 } => DiagramParams::Quartic {
                a4: self.a4.unwrap_or(a4),
                a3: self.a3.unwrap_or(a3),
                a2: self.a2.unwrap_or(a2),
                a1: self.a1.unwrap_or(a1),
                a0: self.a0.unwrap_or(a0),
            },
            DiagramParams::Power { k1, k2, beta, vmax } => DiagramParams::Power {
                k1: self.k1.unwrap_or(k1),
                k2: self.k2.unwrap_or(k2),
                beta: self.beta.unwrap_or(beta),
                vmax: self.vmax.unwrap_or(vmax),
            },
        };
        let allowed: &[&str] = match self.kind {
            DiagramKind::F1 => &[],
            DiagramKind::F2 => &["alpha", "k"],
            DiagramKind::F3 => &["alpha"],
            DiagramKind::F4 => &["a4", "a3", "a2", "a1", "a0"],
            DiagramKind::F5 => &["k1", "k2", "beta", "vmax"],
        };
        if let Some((name, _)) = given.iter().find(|(n, v)| v.is_some() && !allowed.contains(n)) {
            return Err(Error::Argument(format!("--{name} is not a parameter of {}", self.kind)));
        }
        DiagramSpec::new(params, self.delta)
    }
}

fn load_scenario(path: &Path) -> Result<Scenario64, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_scenario(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Run { scenario, out } => {
            let sc = load_scenario(&scenario)?;
            let out = out
                .or_else(|| sc.out_dir.clone())
                .ok_or_else(|| Error::Config("no output directory: pass --out or set `out_dir`".into()))?;
            let result = run(&sc)?;
            let files = write_outputs(&sc, &result, &out)?;
            let last = result.metrics.last().expect("initial metrics row");
            println!("steps: {}  dt: {}  dx: {}", result.steps, result.dt, result.grid.dx());
            println!("remaining mass: {}  absorbed: {}", last.total_mass, last.absorbed_cumulative);
            match result.evacuation_time {
                Some(t) => println!("evacuation time: {t}"),
                None => println!("evacuation time: not reached"),
            }
            println!("wrote {} files to {}", files.len(), out.display());
        }
        Command::Eikonal { scenario, out } => {
            let sc = load_scenario(&scenario)?;
            let eps = sc.eps_grad;
            let sim = Simulation::new(sc)?;
            let u = sim.solve_potential()?;
            let d = direction_field(sim.grid(), &u, eps);
            let unreachable = u.unreachable_count(sim.grid());
            if unreachable > 0 {
                log::warn!("{unreachable} free nodes cannot reach the target");
            }
            let files = write_eikonal_outputs(sim.grid(), &u, &d, &out)?;
            println!("wrote {} files to {}", files.len(), out.display());
        }
        Command::DiagramTable(args) => {
            let spec = args.spec()?;
            print!("{}", format_diagram_table(&spec.table(args.n)?));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_configuration() { 2 } else { 1 })
        }
    }
}
