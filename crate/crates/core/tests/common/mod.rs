#![allow(dead_code)]

use hughes_core::io::{parse_scenario, REFERENCE_SCENARIO};
use hughes_core::{build_grid, Grid64, Rect64, Scenario64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rect(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Rect64 {
    Rect64::new(xmin, xmax, ymin, ymax).unwrap()
}

pub fn reference_scenario() -> Scenario64 {
    parse_scenario(REFERENCE_SCENARIO).unwrap()
}

/// Gauss-Seidel sweeps of the 4-neighbour upwind update until nothing moves.
///
/// Written from scratch so it shares no code with the fast-marching solver.
pub fn label_correcting(grid: &Grid64, slowness: &[f64]) -> Vec<f64> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let h = grid.dx();
    let blocked = |p: usize, q: usize| grid.is_obstacle(q * nx + p);
    let mut u: Vec<f64> = (0..grid.len())
        .map(|i| if grid.status(i) == hughes_core::NodeStatus::Target { 0.0 } else { f64::INFINITY })
        .collect();
    loop {
        let mut changed = false;
        for q in 0..ny {
            for p in 0..nx {
                let i = q * nx + p;
                if grid.status(i) != hughes_core::NodeStatus::Free {
                    continue;
                }
                let pick = |a: Option<(usize, usize)>, b: Option<(usize, usize)>, u: &[f64]| {
                    [a, b]
                        .into_iter()
                        .flatten()
                        .filter(|&(pp, qq)| !blocked(pp, qq))
                        .map(|(pp, qq)| u[qq * nx + pp])
                        .fold(f64::INFINITY, f64::min)
                };
                let a = pick(p.checked_sub(1).map(|pp| (pp, q)), (p + 1 < nx).then_some((p + 1, q)), &u);
                let b = pick(q.checked_sub(1).map(|qq| (p, qq)), (q + 1 < ny).then_some((p, q + 1)), &u);
                let hs = h * slowness[i];
                let cand = if a.is_infinite() && b.is_infinite() {
                    f64::INFINITY
                } else if (a - b).abs() >= hs {
                    a.min(b) + hs
                } else {
                    0.5 * (a + b + (2.0 * hs * hs - (a - b) * (a - b)).sqrt())
                };
                if cand < u[i] && (u[i] - cand) > 1e-15 * cand.max(1.0) {
                    u[i] = cand;
                    changed = true;
                }
            }
        }
        if !changed {
            return u;
        }
    }
}

/// 9x9 grid on [0,1]^2 with a random set of one-node walls and a random
/// target node that is never walled.
pub fn random_masked_grid(rng: &mut ChaCha8Rng) -> Grid64 {
    let dx = 0.125;
    let half = 0.25 * dx;
    let node_rect = |p: usize, q: usize| {
        let (x, y) = (p as f64 * dx, q as f64 * dx);
        rect(x - half, x + half, y - half, y + half)
    };
    let tp = rng.gen_range(0..9);
    let tq = rng.gen_range(0..9);
    let mut walls = Vec::new();
    for q in 0..9 {
        for p in 0..9 {
            if (p, q) != (tp, tq) && rng.gen_bool(0.2) {
                walls.push(node_rect(p, q));
            }
        }
    }
    build_grid(rect(0.0, 1.0, 0.0, 1.0), &walls, node_rect(tp, tq), dx).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            if x.is_infinite() && y.is_infinite() {
                0.0
            } else {
                (x - y).abs()
            }
        })
        .fold(0.0, f64::max)
}
