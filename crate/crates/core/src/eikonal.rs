//! First-order fast marching solver for `|∇u| = s(x)`, `u = 0` on the target,
//! and the descent direction field `−∇u/|∇u|` derived from its solution.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::diagrams::DiagramSpec;
use crate::error::{Error, Result};
use crate::geometry::{Grid, NodeStatus};
use crate::real::Real;
use crate::transport::DensityField;

/// Per-node slowness; `+∞` on obstacle nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SlownessField<T> {
    values: Vec<T>,
}

impl<T: Real> SlownessField<T> {
    /// Slowness `1/f^δ(m_i)` of the current density.
    pub fn from_density(grid: &Grid<T>, m: &DensityField<T>, spec: &DiagramSpec<T>) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                if grid.is_obstacle(i) {
                    T::infinity()
                } else {
                    spec.slowness(m[i])
                }
            })
            .collect();
        SlownessField { values }
    }

    pub fn uniform(grid: &Grid<T>, s: T) -> Self {
        Self::from_fn(grid, |_| s)
    }

    /// Slowness from arbitrary per-node values; obstacle entries are forced to `+∞`.
    pub fn from_fn(grid: &Grid<T>, mut f: impl FnMut(usize) -> T) -> Self {
        let values = (0..grid.len())
            .map(|i| if grid.is_obstacle(i) { T::infinity() } else { f(i) })
            .collect();
        SlownessField { values }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }
}

impl<T> std::ops::Index<usize> for SlownessField<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.values[i]
    }
}

/// Solution of the eikonal equation plus the order in which nodes were fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField<T> {
    values: Vec<T>,
    acceptance_order: Vec<usize>,
}

impl<T: Real> PotentialField<T> {
    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn acceptance_order(&self) -> &[usize] {
        &self.acceptance_order
    }

    /// Free nodes that no front reached (walled off from the target).
    pub fn unreachable_count(&self, grid: &Grid<T>) -> usize {
        (0..grid.len())
            .filter(|&i| !grid.is_obstacle(i) && self.values[i].is_infinite())
            .count()
    }

    /// Builds a field from raw values (acceptance order left empty).
    pub fn from_values(values: Vec<T>) -> Self {
        PotentialField {
            values,
            acceptance_order: Vec::new(),
        }
    }
}

impl<T> std::ops::Index<usize> for PotentialField<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.values[i]
    }
}

/// Unit descent directions, or zero where the agent has no preferred motion.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionField<T> {
    dirs: Vec<[T; 2]>,
}

impl<T: Real> DirectionField<T> {
    pub fn zeros(n: usize) -> Self {
        DirectionField {
            dirs: vec![[T::zero(); 2]; n],
        }
    }

    pub fn from_vec(dirs: Vec<[T; 2]>) -> Self {
        DirectionField { dirs }
    }

    pub fn as_slice(&self) -> &[[T; 2]] {
        &self.dirs
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }
}

impl<T> std::ops::Index<usize> for DirectionField<T> {
    type Output = [T; 2];

    fn index(&self, i: usize) -> &[T; 2] {
        &self.dirs[i]
    }
}

/// Gradient magnitude below which the direction is zero, scaled with the
/// largest slowness `1/δ`.
pub fn default_eps_grad<T: Real>(delta: T) -> T {
    T::lit(1e-9) / delta
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Far,
    Trial,
    Accepted,
}

struct HeapEntry<T> {
    value: T,
    node: usize,
}

impl<T: Real> PartialEq for HeapEntry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Real> Eq for HeapEntry<T> {}

impl<T: Real> PartialOrd for HeapEntry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for HeapEntry<T> {
    // reversed: BinaryHeap is a max-heap; smallest value then smallest index pops first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .value
            .partial_cmp(&self.value)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Fast marching solve on the 4-neighbour stencil.
///
/// Each node takes the smallest accepted neighbour per axis, `a` (horizontal)
/// and `b` (vertical), and solves the upwind quadratic
/// `((u−a)⁺)² + ((u−b)⁺)² = h²s²`, falling back to `min(a,b) + h·s` when the
/// two-sided root does not exist.
pub fn solve_eikonal<T: Real>(grid: &Grid<T>, slowness: &SlownessField<T>) -> Result<PotentialField<T>> {
    let n = grid.len();
    if slowness.values.len() != n {
        return Err(Error::Argument(format!(
            "slowness has {} entries, grid has {n} nodes",
            slowness.values.len()
        )));
    }
    let mut u = vec![T::infinity(); n];
    let mut state = vec![State::Far; n];
    let mut order = Vec::with_capacity(n);
    let mut heap = BinaryHeap::new();

    for i in 0..n {
        if grid.status(i) == NodeStatus::Target {
            u[i] = T::zero();
            state[i] = State::Accepted;
            order.push(i);
        }
    }
    if order.is_empty() {
        return Err(Error::Argument("eikonal solve needs at least one target node".into()));
    }

    let h = grid.dx();
    let relax = |i: usize, u: &mut [T], state: &mut [State], heap: &mut BinaryHeap<HeapEntry<T>>| {
        for nb in grid
            .horizontal_neighbors(i)
            .into_iter()
            .chain(grid.vertical_neighbors(i))
            .flatten()
        {
            if state[nb] == State::Accepted || grid.is_obstacle(nb) {
                continue;
            }
            let candidate = local_update(grid, u, state, nb, h * slowness.values[nb]);
            if candidate < u[nb] {
                u[nb] = candidate;
                state[nb] = State::Trial;
                heap.push(HeapEntry {
                    value: candidate,
                    node: nb,
                });
            }
        }
    };

    for &t in &order {
        relax(t, &mut u, &mut state, &mut heap);
    }
    while let Some(HeapEntry { value, node }) = heap.pop() {
        if state[node] == State::Accepted || value > u[node] {
            continue;
        }
        state[node] = State::Accepted;
        order.push(node);
        relax(node, &mut u, &mut state, &mut heap);
    }

    Ok(PotentialField {
        values: u,
        acceptance_order: order,
    })
}

#[inline]
fn local_update<T: Real>(grid: &Grid<T>, u: &[T], state: &[State], i: usize, hs: T) -> T {
    let axis_min = |nbs: [Option<usize>; 2]| {
        nbs.into_iter()
            .flatten()
            .filter(|&j| state[j] == State::Accepted)
            .map(|j| u[j])
            .fold(T::infinity(), T::min)
    };
    let a = axis_min(grid.horizontal_neighbors(i));
    let b = axis_min(grid.vertical_neighbors(i));
    upwind_quadratic(a, b, hs)
}

#[inline]
fn upwind_quadratic<T: Real>(a: T, b: T, hs: T) -> T {
    if a.is_infinite() && b.is_infinite() {
        return T::infinity();
    }
    let diff = a - b;
    if diff.abs() <= hs {
        // the root is never below max(a, b); keep rounding from breaking causality
        let root = (a + b + (T::two() * hs * hs - diff * diff).sqrt()) * T::half();
        root.max(a.max(b))
    } else {
        a.min(b) + hs
    }
}

/// Upwind gradient of `u` at node `idx`: per axis, the one-sided difference
/// toward the smaller finite neighbour, zero if neither neighbour is smaller.
/// Obstacle, out-of-grid and unreached neighbours are ignored.
pub fn upwind_gradient<T: Real>(grid: &Grid<T>, u: &PotentialField<T>, idx: usize) -> [T; 2] {
    let ui = u[idx];
    if !ui.is_finite() {
        return [T::zero(); 2];
    }
    let h = grid.dx();
    let axis = |[lo, hi]: [Option<usize>; 2]| {
        let val = |j: Option<usize>| {
            j.filter(|&j| !grid.is_obstacle(j))
                .map(|j| u[j])
                .filter(|v| v.is_finite())
        };
        let (lo, hi) = (val(lo), val(hi));
        // ties go to the lower-index neighbour
        let (nb, sign) = match (lo, hi) {
            (Some(l), Some(r)) if r < l => (r, -T::one()),
            (Some(l), _) => (l, T::one()),
            (None, Some(r)) => (r, -T::one()),
            (None, None) => return T::zero(),
        };
        if nb < ui {
            sign * (ui - nb) / h
        } else {
            T::zero()
        }
    };
    [
        axis(grid.horizontal_neighbors(idx)),
        axis(grid.vertical_neighbors(idx)),
    ]
}

/// Normalised descent direction `−g/|g|` from the upwind gradient; zero on
/// target and obstacle nodes and where `|g| < eps_grad`.
pub fn direction_field<T: Real>(grid: &Grid<T>, u: &PotentialField<T>, eps_grad: T) -> DirectionField<T> {
    let dirs = (0..grid.len())
        .map(|i| {
            if grid.status(i) != NodeStatus::Free {
                return [T::zero(); 2];
            }
            let [gx, gy] = upwind_gradient(grid, u, i);
            let norm = gx.hypot(gy);
            if norm < eps_grad || norm == T::zero() {
                [T::zero(); 2]
            } else {
                [-gx / norm, -gy / norm]
            }
        })
        .collect();
    DirectionField { dirs }
}
