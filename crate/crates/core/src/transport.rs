//! Conservative semi-Lagrangian transport of the density.
//!
//! Every loaded node `j` pushes its mass `m_j |E_j|` along one Euler step of
//! the velocity field, the foot is reflected back into the domain and moved
//! out of walls, and the mass is scattered onto the corners of the foot's
//! cell with the bilinear weights. Because the weights are nonnegative and
//! sum to one, the scheme is positive and conserves mass exactly up to
//! rounding.

use std::ops::{Index, IndexMut};

use crate::diagrams::DiagramSpec;
use crate::eikonal::DirectionField;
use crate::error::{Error, Result};
use crate::geometry::{project_free, reflect, Grid, NodeStatus, Point};
use crate::real::Real;

/// Node densities `m_i`, interpreted as averages over the dual cells.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField<T> {
    values: Vec<T>,
}

impl<T: Real> DensityField<T> {
    pub fn zeros(n: usize) -> Self {
        DensityField {
            values: vec![T::zero(); n],
        }
    }

    pub fn from_vec(values: Vec<T>) -> Self {
        DensityField { values }
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Σ m_i |E_i|`, with compensated summation.
    pub fn total_mass(&self, grid: &Grid<T>) -> T {
        neumaier_sum(self.values.iter().zip(grid.cell_areas()).map(|(&m, &a)| m * a))
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::zero(), T::max)
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }
}

impl<T> Index<usize> for DensityField<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.values[i]
    }
}

impl<T> IndexMut<usize> for DensityField<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.values[i]
    }
}

/// Neumaier's compensated sum.
pub fn neumaier_sum<T: Real>(values: impl IntoIterator<Item = T>) -> T {
    let (mut sum, mut comp) = (T::zero(), T::zero());
    for v in values {
        let t = sum + v;
        comp = comp
            + if sum.abs() >= v.abs() {
                (sum - t) + v
            } else {
                (v - t) + sum
            };
        sum = t;
    }
    sum + comp
}

/// Per-node crowd velocity `b_i = f^δ(m_i)·d_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField<T> {
    vel: Vec<[T; 2]>,
}

impl<T: Real> VelocityField<T> {
    pub fn from_vec(vel: Vec<[T; 2]>) -> Self {
        VelocityField { vel }
    }

    pub fn uniform(n: usize, v: [T; 2]) -> Self {
        VelocityField { vel: vec![v; n] }
    }

    pub fn as_slice(&self) -> &[[T; 2]] {
        &self.vel
    }

    pub fn max_norm(&self) -> T {
        self.vel
            .iter()
            .map(|v| v[0].hypot(v[1]))
            .fold(T::zero(), T::max)
    }
}

impl<T> Index<usize> for VelocityField<T> {
    type Output = [T; 2];

    fn index(&self, i: usize) -> &[T; 2] {
        &self.vel[i]
    }
}

pub fn velocity_field<T: Real>(m: &DensityField<T>, d: &DirectionField<T>, spec: &DiagramSpec<T>) -> VelocityField<T> {
    let vel = m
        .as_slice()
        .iter()
        .zip(d.as_slice())
        .map(|(&mi, di)| {
            if di[0] == T::zero() && di[1] == T::zero() {
                [T::zero(); 2]
            } else {
                let f = spec.speed(mi);
                [f * di[0], f * di[1]]
            }
        })
        .collect();
    VelocityField { vel }
}

/// Counters collected during one transport step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepReport {
    /// Feet that stayed outside after mirroring and were clamped.
    pub clamped_reflections: usize,
    /// Feet moved out of fully blocked cells.
    pub projected_feet: usize,
    /// `dt·max|b| ≥ cfl_max·dx`.
    pub cfl_violation: bool,
}

/// Default CFL bound (in cells per step) above which a step is flagged.
pub const DEFAULT_CFL_MAX: f64 = 1.0;

/// One explicit scatter step; see [`step_with`].
pub fn step<T: Real>(m: &DensityField<T>, b: &VelocityField<T>, grid: &Grid<T>, dt: T) -> Result<(DensityField<T>, StepReport)> {
    step_with(m, b, grid, dt, T::lit(DEFAULT_CFL_MAX), |_, _, _| {})
}

/// One explicit scatter step, reporting every elementary transfer
/// `(source, carrier, mass)` to `on_transfer`.
///
/// Obstacle corners of a foot's cell hand their weight to the free corners of
/// the same cell, proportionally (or evenly if the free weights vanish).
pub fn step_with<T: Real>(
    m: &DensityField<T>,
    b: &VelocityField<T>,
    grid: &Grid<T>,
    dt: T,
    cfl_max: T,
    mut on_transfer: impl FnMut(usize, usize, T),
) -> Result<(DensityField<T>, StepReport)> {
    let n = grid.len();
    if m.len() != n || b.vel.len() != n {
        return Err(Error::Argument("density/velocity size does not match the grid".into()));
    }
    if !(dt > T::zero()) {
        return Err(Error::Argument(format!("time step must be positive, got {dt}")));
    }
    let mut report = StepReport {
        cfl_violation: dt * b.max_norm() >= cfl_max * grid.dx(),
        ..StepReport::default()
    };

    let mut next = vec![T::zero(); n];
    for j in 0..n {
        let mj = m.values[j];
        if mj <= T::zero() {
            continue;
        }
        let x = grid.node(j);
        let [bx, by] = b.vel[j];
        let reflected = reflect(Point::new(x.x + dt * bx, x.y + dt * by), grid.bounds());
        if reflected.clamped {
            report.clamped_reflections += 1;
        }
        let foot = project_free(reflected.point, grid)?;
        if foot != reflected.point {
            report.projected_feet += 1;
        }

        let loc = grid.locate(foot);
        let corners = loc.corners(grid);
        let mut weights = loc.weights();
        redirect_blocked(grid, &corners, &mut weights);

        let area_j = grid.cell_area(j);
        for (i, w) in corners.into_iter().zip(weights) {
            if w > T::zero() {
                let share = w * mj * (area_j / grid.cell_area(i));
                next[i] = next[i] + share;
                on_transfer(j, i, share * grid.cell_area(i));
            }
        }
    }
    Ok((DensityField { values: next }, report))
}

fn redirect_blocked<T: Real>(grid: &Grid<T>, corners: &[usize; 4], weights: &mut [T; 4]) {
    let blocked: T = corners
        .iter()
        .zip(weights.iter())
        .filter(|(&c, _)| grid.is_obstacle(c))
        .fold(T::zero(), |acc, (_, &w)| acc + w);
    if blocked <= T::zero() {
        return;
    }
    let free_sum: T = corners
        .iter()
        .zip(weights.iter())
        .filter(|(&c, _)| !grid.is_obstacle(c))
        .fold(T::zero(), |acc, (_, &w)| acc + w);
    let free_count = corners.iter().filter(|&&c| !grid.is_obstacle(c)).count();
    for (c, w) in corners.iter().zip(weights.iter_mut()) {
        *w = if grid.is_obstacle(*c) {
            T::zero()
        } else if free_sum > T::zero() {
            *w / free_sum
        } else {
            T::one() / T::from_usize(free_count).unwrap()
        };
    }
}

/// Removes the mass standing on target nodes; returns the absorbed mass
/// `Σ_{i∈target} m_i |E_i|`.
pub fn absorb_target_in_place<T: Real>(m: &mut DensityField<T>, grid: &Grid<T>) -> T {
    let mut absorbed = T::zero();
    for (i, v) in m.values.iter_mut().enumerate() {
        if grid.status(i) == NodeStatus::Target && *v != T::zero() {
            absorbed = absorbed + *v * grid.cell_area(i);
            *v = T::zero();
        }
    }
    absorbed
}

pub fn absorb_target<T: Real>(m: &DensityField<T>, grid: &Grid<T>) -> (DensityField<T>, T) {
    let mut out = m.clone();
    let absorbed = absorb_target_in_place(&mut out, grid);
    (out, absorbed)
}
