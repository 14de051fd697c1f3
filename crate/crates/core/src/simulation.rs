//! The coupled loop: eikonal solve on the current density, descent
//! directions, velocities, one transport step, absorption at the target.

use std::path::PathBuf;

use log::warn;

use crate::diagrams::{DiagramKind, DiagramSpec};
use crate::eikonal::{direction_field, solve_eikonal, PotentialField, SlownessField};
use crate::error::{Error, Result};
use crate::geometry::{build_grid, rasterize_density, Grid, Rect};
use crate::real::Real;
use crate::transport::{absorb_target_in_place, step_with, velocity_field, DensityField, DEFAULT_CFL_MAX};

/// Fraction of the initial mass below which the crowd counts as evacuated.
pub const EVACUATION_THRESHOLD: f64 = 0.01;

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub domain: Rect<T>,
    pub obstacles: Vec<Rect<T>>,
    pub target: Rect<T>,
    /// Piecewise-constant initial density; later regions override earlier ones.
    pub initial: Vec<(Rect<T>, T)>,
    pub diagram: DiagramSpec<T>,
    pub dx: T,
    /// `dt = dx·dt_factor`, with `dx` the effective grid spacing.
    pub dt_factor: T,
    pub final_time: T,
    pub absorb: bool,
    pub snapshot_every: usize,
    pub eps_grad: T,
    pub out_dir: Option<PathBuf>,
}

impl<T: Real> Scenario<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("`{name}` must be positive, got {v}")))
            }
        };
        positive("dx", self.dx)?;
        positive("dt_factor", self.dt_factor)?;
        positive("T", self.final_time)?;
        if self.snapshot_every == 0 {
            return Err(Error::Config("`snapshot_every` must be at least 1".into()));
        }
        if !(self.eps_grad >= T::zero()) {
            return Err(Error::Config("`eps_grad` must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Grid<T>> {
        build_grid(self.domain, &self.obstacles, self.target, self.dx)
    }

    pub fn with_diagram(&self, diagram: DiagramSpec<T>) -> Self {
        Scenario {
            diagram,
            ..self.clone()
        }
    }
}

/// Number of steps covering `[0, final_time]`, tolerant to rounding in `T/dt`.
pub fn step_count<T: Real>(final_time: T, dt: T) -> usize {
    let r = final_time / dt;
    let nearest = r.round();
    let n = if (r - nearest).abs() <= T::lit(1e-9) * r.max(T::one()) {
        nearest
    } else {
        r.ceil()
    };
    n.to_usize().unwrap_or(0)
}

/// Vertical measuring segment `x = x, y ∈ (ymin, ymax)` that accumulates the
/// net mass carried across it in the +x direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxGate<T> {
    pub x: T,
    pub ymin: T,
    pub ymax: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T> {
    pub step: usize,
    pub t: T,
    pub density: DensityField<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow<T> {
    pub step: usize,
    pub t: T,
    pub total_mass: T,
    pub max_density: T,
    pub min_density: T,
    pub absorbed_cumulative: T,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Diagnostics {
    /// Steps whose displacement reached the CFL bound.
    pub cfl_warnings: usize,
    pub clamped_reflections: usize,
    pub projected_feet: usize,
    /// Largest number of free nodes the eikonal front could not reach.
    pub unreachable_nodes: usize,
}

#[derive(Debug, Clone)]
pub struct RunResult<T> {
    pub grid: Grid<T>,
    pub dt: T,
    pub steps: usize,
    pub initial_mass: T,
    pub snapshots: Vec<Snapshot<T>>,
    /// One row for the initial state plus one per step.
    pub metrics: Vec<MetricRow<T>>,
    pub diagnostics: Diagnostics,
    pub evacuation_time: Option<T>,
    /// Cumulative net flux through each requested gate.
    pub gate_flux: Vec<T>,
}

impl<T: Real> RunResult<T> {
    /// Running maximum of the maximal density, initial state included.
    pub fn peak_density(&self) -> T {
        self.metrics.iter().map(|r| r.max_density).fold(T::zero(), T::max)
    }

    pub fn final_density(&self) -> &DensityField<T> {
        &self.snapshots.last().expect("final snapshot always recorded").density
    }
}

/// Stepwise driver of the coupled scheme.
pub struct Simulation<T: Real> {
    scenario: Scenario<T>,
    grid: Grid<T>,
    dt: T,
    steps: usize,
    step: usize,
    density: DensityField<T>,
    absorbed: T,
    initial_mass: T,
    potential: Option<PotentialField<T>>,
    diagnostics: Diagnostics,
    gates: Vec<FluxGate<T>>,
    gate_flux: Vec<T>,
}

impl<T: Real> Simulation<T> {
    pub fn new(scenario: Scenario<T>) -> Result<Self> {
        Self::with_gates(scenario, Vec::new())
    }

    pub fn with_gates(scenario: Scenario<T>, gates: Vec<FluxGate<T>>) -> Result<Self> {
        scenario.validate()?;
        let grid = scenario.build_grid()?;
        let density = rasterize_density(&scenario.initial, &grid)?;
        let dt = grid.dx() * scenario.dt_factor;
        let steps = step_count(scenario.final_time, dt);
        let initial_mass = density.total_mass(&grid);
        let gate_flux = vec![T::zero(); gates.len()];
        Ok(Simulation {
            scenario,
            grid,
            dt,
            steps,
            step: 0,
            density,
            absorbed: T::zero(),
            initial_mass,
            potential: None,
            diagnostics: Diagnostics::default(),
            gates,
            gate_flux,
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn scenario(&self) -> &Scenario<T> {
        &self.scenario
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn total_steps(&self) -> usize {
        self.steps
    }

    pub fn current_step(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> T {
        T::from_usize(self.step).unwrap() * self.dt
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.steps
    }

    pub fn density(&self) -> &DensityField<T> {
        &self.density
    }

    pub fn absorbed(&self) -> T {
        self.absorbed
    }

    pub fn initial_mass(&self) -> T {
        self.initial_mass
    }

    pub fn diagnostics(&self) -> Diagnostics {
        self.diagnostics
    }

    pub fn gate_flux(&self) -> &[T] {
        &self.gate_flux
    }

    /// Potential computed during the most recent step.
    pub fn last_potential(&self) -> Option<&PotentialField<T>> {
        self.potential.as_ref()
    }

    /// Eikonal solution for the current density.
    pub fn solve_potential(&self) -> Result<PotentialField<T>> {
        let slowness = SlownessField::from_density(&self.grid, &self.density, &self.scenario.diagram);
        solve_eikonal(&self.grid, &slowness)
    }

    pub fn metrics(&self) -> MetricRow<T> {
        MetricRow {
            step: self.step,
            t: self.time(),
            total_mass: self.density.total_mass(&self.grid),
            max_density: self.density.max(),
            min_density: self.density.min(),
            absorbed_cumulative: self.absorbed,
        }
    }

    /// Advances one time step and returns the metrics after it.
    pub fn advance(&mut self) -> Result<MetricRow<T>> {
        let u = self.solve_potential()?;
        let unreachable = u.unreachable_count(&self.grid);
        if unreachable > self.diagnostics.unreachable_nodes {
            warn!("{unreachable} free nodes cannot reach the target; their density stays put");
            self.diagnostics.unreachable_nodes = unreachable;
        }
        let d = direction_field(&self.grid, &u, self.scenario.eps_grad);
        let b = velocity_field(&self.density, &d, &self.scenario.diagram);

        let grid = &self.grid;
        let gates = &self.gates;
        let flux = &mut self.gate_flux;
        let (mut next, report) = step_with(&self.density, &b, grid, self.dt, T::lit(DEFAULT_CFL_MAX), |j, i, mass| {
            if gates.is_empty() {
                return;
            }
            let (xj, xi) = (grid.node(j), grid.node(i));
            let ymid = (xj.y + xi.y) * T::half();
            for (g, acc) in gates.iter().zip(flux.iter_mut()) {
                if !(ymid > g.ymin && ymid < g.ymax) {
                    continue;
                }
                if xj.x < g.x && xi.x >= g.x {
                    *acc = *acc + mass;
                } else if xj.x >= g.x && xi.x < g.x {
                    *acc = *acc - mass;
                }
            }
        })?;
        if report.cfl_violation {
            if self.diagnostics.cfl_warnings == 0 {
                warn!("step {}: displacement reached the CFL bound", self.step + 1);
            }
            self.diagnostics.cfl_warnings += 1;
        }
        self.diagnostics.clamped_reflections += report.clamped_reflections;
        self.diagnostics.projected_feet += report.projected_feet;

        if self.scenario.absorb {
            self.absorbed = self.absorbed + absorb_target_in_place(&mut next, &self.grid);
        }
        self.density = next;
        self.potential = Some(u);
        self.step += 1;
        Ok(self.metrics())
    }
}

/// Runs the scenario to its final time.
pub fn run<T: Real>(scenario: &Scenario<T>) -> Result<RunResult<T>> {
    run_with_gates(scenario, &[])
}

pub fn run_with_gates<T: Real>(scenario: &Scenario<T>, gates: &[FluxGate<T>]) -> Result<RunResult<T>> {
    let mut sim = Simulation::with_gates(scenario.clone(), gates.to_vec())?;
    let every = scenario.snapshot_every;
    let threshold = T::lit(EVACUATION_THRESHOLD) * sim.initial_mass();

    let first = sim.metrics();
    let mut evacuation_time = (first.total_mass <= threshold).then_some(first.t);
    let mut metrics = Vec::with_capacity(sim.total_steps() + 1);
    metrics.push(first);
    let mut snapshots = Vec::new();

    while !sim.is_finished() {
        let row = sim.advance()?;
        if evacuation_time.is_none() && row.total_mass <= threshold {
            evacuation_time = Some(row.t);
        }
        metrics.push(row);
        if row.step % every == 0 || sim.is_finished() {
            snapshots.push(Snapshot {
                step: row.step,
                t: row.t,
                density: sim.density().clone(),
            });
        }
    }
    if snapshots.is_empty() {
        // zero-step run: the final state is the initial one
        snapshots.push(Snapshot {
            step: 0,
            t: T::zero(),
            density: sim.density().clone(),
        });
    }

    Ok(RunResult {
        dt: sim.dt(),
        steps: sim.total_steps(),
        initial_mass: sim.initial_mass(),
        diagnostics: sim.diagnostics(),
        gate_flux: sim.gate_flux().to_vec(),
        grid: sim.grid.clone(),
        snapshots,
        metrics,
        evacuation_time,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow<T> {
    pub kind: DiagramKind,
    pub evacuation_time: Option<T>,
    pub peak_density: T,
}

/// One run per diagram kind on the same geometry, rows in input order.
///
/// The scenario's own diagram is used for its kind; other kinds get their
/// default parameters with the scenario's truncation floor. Runs execute on
/// separate threads.
pub fn compare_diagrams<T: Real>(scenario: &Scenario<T>, kinds: &[DiagramKind]) -> Result<Vec<ComparisonRow<T>>> {
    let scenarios = kinds
        .iter()
        .map(|&kind| {
            if kind == scenario.diagram.kind() {
                Ok(scenario.clone())
            } else {
                DiagramSpec::with_defaults(kind, scenario.diagram.delta()).map(|d| scenario.with_diagram(d))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    std::thread::scope(|s| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|sc| s.spawn(move || run(sc)))
            .collect();
        handles
            .into_iter()
            .zip(kinds)
            .map(|(h, &kind)| {
                let result = h.join().expect("simulation thread panicked")?;
                Ok(ComparisonRow {
                    kind,
                    evacuation_time: result.evacuation_time,
                    peak_density: result.peak_density(),
                })
            })
            .collect()
    })
}
