//! Scenario files (TOML), grid/snapshot files (CSV with `#` headers) and the
//! output directory layout of a run.
//!
//! Output layout:
//!
//! ```text
//! <out>/metrics.csv      step,t,total_mass,max_density,absorbed_cumulative
//! <out>/m_000123.csv     density snapshot after step 123
//! <out>/run_meta.toml    resolved scenario, effective grid, diagnostics
//! ```
//!
//! Grid files list `ny` rows of `nx` comma-separated values, starting at the
//! origin row (`q = 0`). Values use Rust's shortest round-trip formatting, so
//! parsing a written file reproduces the field bitwise; `inf` marks nodes the
//! eikonal front never reached.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagrams::{DiagramKind, DiagramParams, DiagramSpec, F5_DEFAULTS};
use crate::eikonal::{default_eps_grad, DirectionField, PotentialField};
use crate::error::{Error, Result};
use crate::geometry::{Grid, Point, Rect};
use crate::real::Real;
use crate::simulation::{RunResult, Scenario, EVACUATION_THRESHOLD};

/// Snapshot cadence used when the scenario omits `snapshot_every`.
pub const DEFAULT_SNAPSHOT_EVERY: usize = 50;

/// The shipped scenario reproducing the evacuation test case: unit square,
/// three wall segments at `x ∈ [0.55, 0.6]` leaving two doors, crowd of
/// density 0.7 on the left, thin target strip on the right.
pub const REFERENCE_SCENARIO: &str = include_str!("../scenarios/two_doors.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    dx: f64,
    dt_factor: f64,
    #[serde(rename = "T")]
    final_time: f64,
    delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    absorb: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    snapshot_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps_grad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out_dir: Option<String>,
    domain: Rect<f64>,
    target: Rect<f64>,
    diagram: DiagramSection,
    #[serde(default)]
    obstacles: Vec<Rect<f64>>,
    #[serde(default)]
    initial: Vec<InitialRegion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialRegion {
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
    value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiagramSection {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    a4: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    a3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    a2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    a1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    a0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vmax: Option<f64>,
}

impl DiagramSection {
    fn present(&self) -> Vec<&'static str> {
        let all = [
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
        all.iter().filter(|(_, v)| v.is_some()).map(|(n, _)| *n).collect()
    }

    fn to_spec<T: Real>(&self, delta: f64) -> Result<DiagramSpec<T>> {
        let kind: DiagramKind = self
            .kind
            .parse()
            .map_err(|e| Error::Parse(format!("diagram.kind: {e}")))?;
        let allowed: &[&str] = match kind {
            DiagramKind::F1 => &[],
            DiagramKind::F2 => &["alpha", "k"],
            DiagramKind::F3 => &["alpha"],
            DiagramKind::F4 => &["a4", "a3", "a2", "a1", "a0"],
            DiagramKind::F5 => &["k1", "k2", "beta", "vmax"],
        };
        if let Some(extra) = self.present().into_iter().find(|p| !allowed.contains(p)) {
            return Err(Error::Parse(format!("diagram: key `{extra}` is not a parameter of {kind}")));
        }
        let req = |name: &str, v: Option<f64>| {
            v.map(T::lit)
                .ok_or_else(|| Error::Parse(format!("diagram: missing required key `{name}` for kind {kind}")))
        };
        let params = match kind {
            DiagramKind::F1 => DiagramParams::Linear,
            DiagramKind::F2 => DiagramParams::CappedExponential {
                alpha: req("alpha", self.alpha)?,
                k: req("k", self.k)?,
            },
            DiagramKind::F3 => DiagramParams::Exponential {
                alpha: req("alpha", self.alpha)?,
            },
            DiagramKind::F4 => DiagramParams::Quartic {
                a4: req("a4", self.a4)?,
                a3: req("a3", self.a3)?,
                a2: req("a2", self.a2)?,
                a1: req("a1", self.a1)?,
                a0: req("a0", self.a0)?,
            },
            DiagramKind::F5 => DiagramParams::Power {
                k1: T::lit(self.k1.unwrap_or(F5_DEFAULTS.0)),
                k2: T::lit(self.k2.unwrap_or(F5_DEFAULTS.1)),
                beta: T::lit(self.beta.unwrap_or(F5_DEFAULTS.2)),
                vmax: T::lit(self.vmax.unwrap_or(F5_DEFAULTS.3)),
            },
        };
        DiagramSpec::new(params, T::lit(delta)).map_err(|e| Error::Parse(format!("diagram: {e}")))
    }

    fn from_spec<T: Real>(spec: &DiagramSpec<T>) -> Self {
        let f = |v: T| Some(v.to_f64().unwrap());
        let mut s = DiagramSection {
            kind: spec.kind().to_string(),
            ..Default::default()
        };
        match *spec.params() {
            DiagramParams::Linear => {}
            DiagramParams::CappedExponential { alpha, k } => {
                s.alpha = f(alpha);
                s.k = f(k);
            }
            DiagramParams::Exponential { alpha } => s.alpha = f(alpha),
            DiagramParams::Quartic { a4, a3, a2, a1, a0 } => {
                s.a4 = f(a4);
                s.a3 = f(a3);
                s.a2 = f(a2);
                s.a1 = f(a1);
                s.a0 = f(a0);
            }
            DiagramParams::Power { k1, k2, beta, vmax } => {
                s.k1 = f(k1);
                s.k2 = f(k2);
                s.beta = f(beta);
                s.vmax = f(vmax);
            }
        }
        s
    }
}

/// Parses and validates a scenario document.
///
/// Optional keys and their defaults: `absorb = true`,
/// `snapshot_every = 50`, `eps_grad = 1e-9/delta`. Lists `obstacles` and
/// `initial` may be omitted (empty). F5 parameters fall back to
/// `k1 = 0.5, k2 = 1, beta = 0.25, vmax = 2`.
pub fn parse_scenario<T: Real>(text: &str) -> Result<Scenario<T>> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let rect = |name: &str, r: &Rect<f64>| {
        let r = r.cast::<T>();
        r.validate().map_err(|e| Error::Parse(format!("{name}: {e}")))?;
        Ok::<_, Error>(r)
    };
    let domain = rect("domain", &file.domain)?;
    let target = rect("target", &file.target)?;
    let obstacles = file
        .obstacles
        .iter()
        .enumerate()
        .map(|(k, r)| rect(&format!("obstacles[{k}]"), r))
        .collect::<Result<Vec<_>>>()?;
    let initial = file
        .initial
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let region = rect(&format!("initial[{k}]"), &Rect {
                xmin: r.xmin,
                xmax: r.xmax,
                ymin: r.ymin,
                ymax: r.ymax,
            })?;
            if !(r.value >= 0.0) {
                return Err(Error::Parse(format!("initial[{k}].value: density must be nonnegative, got {}", r.value)));
            }
            Ok((region, T::lit(r.value)))
        })
        .collect::<Result<Vec<_>>>()?;
    if !(file.delta > 0.0 && file.delta < 1.0) {
        return Err(Error::Parse(format!("delta: must lie in (0,1), got {}", file.delta)));
    }
    let diagram = file.diagram.to_spec::<T>(file.delta)?;
    let scenario = Scenario {
        domain,
        obstacles,
        target,
        initial,
        diagram,
        dx: T::lit(file.dx),
        dt_factor: T::lit(file.dt_factor),
        final_time: T::lit(file.final_time),
        absorb: file.absorb.unwrap_or(true),
        snapshot_every: file.snapshot_every.unwrap_or(DEFAULT_SNAPSHOT_EVERY),
        eps_grad: file.eps_grad.map(T::lit).unwrap_or_else(|| default_eps_grad(diagram.delta())),
        out_dir: file.out_dir.map(PathBuf::from),
    };
    scenario.validate().map_err(|e| Error::Parse(e.to_string()))?;
    scenario.build_grid().map_err(|e| match e {
        Error::Config(msg) | Error::Argument(msg) => Error::Config(format!("domain/target/obstacles/dx: {msg}")),
        other => other,
    })?;
    Ok(scenario)
}

fn scenario_file<T: Real>(s: &Scenario<T>) -> ScenarioFile {
    let f = |v: T| v.to_f64().unwrap();
    ScenarioFile {
        dx: f(s.dx),
        dt_factor: f(s.dt_factor),
        final_time: f(s.final_time),
        delta: f(s.diagram.delta()),
        absorb: Some(s.absorb),
        snapshot_every: Some(s.snapshot_every),
        eps_grad: Some(f(s.eps_grad)),
        out_dir: s.out_dir.as_ref().map(|p| p.display().to_string()),
        domain: s.domain.cast(),
        target: s.target.cast(),
        diagram: DiagramSection::from_spec(&s.diagram),
        obstacles: s.obstacles.iter().map(|r| r.cast()).collect(),
        initial: s
            .initial
            .iter()
            .map(|(r, v)| InitialRegion {
                xmin: f(r.xmin),
                xmax: f(r.xmax),
                ymin: f(r.ymin),
                ymax: f(r.ymax),
                value: f(*v),
            })
            .collect(),
    }
}

/// Serialises a scenario with every optional key spelled out.
pub fn write_scenario<T: Real>(s: &Scenario<T>) -> String {
    toml::to_string(&scenario_file(s)).expect("scenario serialises to TOML")
}

/// Header and values of a grid file.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFile<T> {
    pub nx: usize,
    pub ny: usize,
    pub dx: T,
    pub origin: Point<T>,
    pub t: Option<T>,
    pub step: Option<usize>,
    pub values: Vec<T>,
}

/// Formats one per-node field as a grid file.
pub fn format_grid_file<T: Real>(grid: &Grid<T>, values: &[T], t: Option<T>, step: Option<usize>) -> String {
    assert_eq!(values.len(), grid.len(), "field size must match the grid");
    let mut out = String::new();
    let o = grid.origin();
    writeln!(out, "# nx={}", grid.nx()).unwrap();
    writeln!(out, "# ny={}", grid.ny()).unwrap();
    writeln!(out, "# dx={}", grid.dx()).unwrap();
    writeln!(out, "# origin={},{}", o.x, o.y).unwrap();
    if let Some(t) = t {
        writeln!(out, "# t={t}").unwrap();
    }
    if let Some(step) = step {
        writeln!(out, "# step={step}").unwrap();
    }
    for row in values.chunks(grid.nx()) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            write!(out, "{v}").unwrap();
            first = false;
        }
        out.push('\n');
    }
    out
}

pub fn parse_grid_file<T: Real>(text: &str) -> Result<GridFile<T>> {
    let mut nx = None;
    let mut ny = None;
    let mut dx = None;
    let mut origin = None;
    let mut t = None;
    let mut step = None;
    let mut values = Vec::new();
    let mut rows = 0usize;

    let num = |line: usize, s: &str| -> Result<T> {
        s.trim()
            .parse::<T>()
            .map_err(|e| Error::Parse(format!("line {line}: bad number `{}`: {e}", s.trim())))
    };
    let count = |line: usize, s: &str| -> Result<usize> {
        s.trim()
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("line {line}: bad count `{}`: {e}", s.trim())))
    };

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        if let Some(header) = raw.strip_prefix('#') {
            let Some((key, val)) = header.split_once('=') else {
                continue;
            };
            match key.trim() {
                "nx" => nx = Some(count(line, val)?),
                "ny" => ny = Some(count(line, val)?),
                "dx" => dx = Some(num(line, val)?),
                "origin" => {
                    let (a, b) = val
                        .split_once(',')
                        .ok_or_else(|| Error::Parse(format!("line {line}: origin needs two coordinates")))?;
                    origin = Some(Point::new(num(line, a)?, num(line, b)?));
                }
                "t" => t = Some(num(line, val)?),
                "step" => step = Some(count(line, val)?),
                _ => {}
            }
            continue;
        }
        let nx = nx.ok_or_else(|| Error::Parse(format!("line {line}: data before `# nx=` header")))?;
        let before = values.len();
        for cell in raw.split(',') {
            values.push(num(line, cell)?);
        }
        if values.len() - before != nx {
            return Err(Error::Parse(format!(
                "line {line}: expected {nx} values, found {}",
                values.len() - before
            )));
        }
        rows += 1;
    }
    let missing = |name: &str| Error::Parse(format!("missing `# {name}=` header"));
    let nx = nx.ok_or_else(|| missing("nx"))?;
    let ny = ny.ok_or_else(|| missing("ny"))?;
    if rows != ny {
        return Err(Error::Parse(format!("expected {ny} data rows, found {rows}")));
    }
    Ok(GridFile {
        nx,
        ny,
        dx: dx.ok_or_else(|| missing("dx"))?,
        origin: origin.ok_or_else(|| missing("origin"))?,
        t,
        step,
        values,
    })
}

pub fn format_metrics<T: Real>(result: &RunResult<T>) -> String {
    let mut out = String::from("step,t,total_mass,max_density,absorbed_cumulative\n");
    for r in &result.metrics {
        writeln!(out, "{},{},{},{},{}", r.step, r.t, r.total_mass, r.max_density, r.absorbed_cumulative).unwrap();
    }
    out
}

pub fn snapshot_file_name(step: usize) -> String {
    format!("m_{step:06}.csv")
}

#[derive(Serialize)]
struct RunMeta {
    run: RunSection,
    diagnostics: DiagnosticsSection,
    scenario: ScenarioFile,
}

#[derive(Serialize)]
struct RunSection {
    steps: usize,
    dt: f64,
    dx_effective: f64,
    nx: usize,
    ny: usize,
    origin: [f64; 2],
    initial_mass: f64,
    evacuation_threshold: f64,
    evacuated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    evacuation_time: Option<f64>,
}

#[derive(Serialize)]
struct DiagnosticsSection {
    cfl_warnings: usize,
    clamped_reflections: usize,
    projected_feet: usize,
    unreachable_nodes: usize,
}

pub fn format_run_meta<T: Real>(scenario: &Scenario<T>, result: &RunResult<T>) -> String {
    let f = |v: T| v.to_f64().unwrap();
    let o = result.grid.origin();
    let d = result.diagnostics;
    let meta = RunMeta {
        run: RunSection {
            steps: result.steps,
            dt: f(result.dt),
            dx_effective: f(result.grid.dx()),
            nx: result.grid.nx(),
            ny: result.grid.ny(),
            origin: [f(o.x), f(o.y)],
            initial_mass: f(result.initial_mass),
            evacuation_threshold: EVACUATION_THRESHOLD,
            evacuated: result.evacuation_time.is_some(),
            evacuation_time: result.evacuation_time.map(f),
        },
        diagnostics: DiagnosticsSection {
            cfl_warnings: d.cfl_warnings,
            clamped_reflections: d.clamped_reflections,
            projected_feet: d.projected_feet,
            unreachable_nodes: d.unreachable_nodes,
        },
        scenario: scenario_file(scenario),
    };
    toml::to_string(&meta).expect("run metadata serialises to TOML")
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `metrics.csv`, one `m_<step>.csv` per snapshot and `run_meta.toml`
/// into `out_dir` (created if needed). Returns the written paths.
pub fn write_outputs<T: Real>(scenario: &Scenario<T>, result: &RunResult<T>, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = vec![write_file(out_dir.join("metrics.csv"), &format_metrics(result))?];
    for s in &result.snapshots {
        let text = format_grid_file(&result.grid, s.density.as_slice(), Some(s.t), Some(s.step));
        written.push(write_file(out_dir.join(snapshot_file_name(s.step)), &text)?);
    }
    written.push(write_file(out_dir.join("run_meta.toml"), &format_run_meta(scenario, result))?);
    Ok(written)
}

/// Writes `u.csv`, `dir_x.csv` and `dir_y.csv` for one eikonal solve.
pub fn write_eikonal_outputs<T: Real>(
    grid: &Grid<T>,
    u: &PotentialField<T>,
    d: &DirectionField<T>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let dx: Vec<T> = d.as_slice().iter().map(|v| v[0]).collect();
    let dy: Vec<T> = d.as_slice().iter().map(|v| v[1]).collect();
    Ok(vec![
        write_file(out_dir.join("u.csv"), &format_grid_file(grid, u.as_slice(), None, None))?,
        write_file(out_dir.join("dir_x.csv"), &format_grid_file(grid, &dx, None, None))?,
        write_file(out_dir.join("dir_y.csv"), &format_grid_file(grid, &dy, None, None))?,
    ])
}

/// `m,speed` lines of a diagram table.
pub fn format_diagram_table<T: Real>(rows: &[(T, T)]) -> String {
    rows.iter().fold(String::new(), |mut out, (m, v)| {
        writeln!(out, "{m},{v}").unwrap();
        out
    })
}
