//! Uniform node lattice over a rectangular domain with rectangular obstacles.
//!
//! Nodes sit at `origin + (p·dx, q·dx)` and are stored row-major: index
//! `q·nx + p`, so row `q = 0` is the bottom edge of the domain. Each node owns
//! the square dual cell `[x − dx/2, x + dx/2] × [y − dx/2, y + dx/2]` of area
//! `dx²`, and the transport scheme interpolates with bilinear (Q1) hat
//! functions attached to the nodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::transport::DensityField;

/// Relative tolerance (in units of `dx`) for point-in-rectangle tests.
const MEMBERSHIP_TOL: f64 = 1e-9;
/// Distance (in units of `dx`) a projected foot is pushed off an obstacle face.
const FREE_NUDGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: &Point<T>) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Closed axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect<T> {
    pub xmin: T,
    pub xmax: T,
    pub ymin: T,
    pub ymax: T,
}

impl<T: Real> Rect<T> {
    pub fn new(xmin: T, xmax: T, ymin: T, ymax: T) -> Result<Self> {
        let r = Rect {
            xmin,
            xmax,
            ymin,
            ymax,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.xmin, self.xmax, self.ymin, self.ymax]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.xmin < self.xmax) || !(self.ymin < self.ymax) {
            return Err(Error::Config(format!(
                "degenerate rectangle [{}, {}] x [{}, {}]",
                self.xmin, self.xmax, self.ymin, self.ymax
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> T {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> T {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point<T> {
        Point::new(
            (self.xmin + self.xmax) * T::half(),
            (self.ymin + self.ymax) * T::half(),
        )
    }

    /// Closed membership test, enlarged by `tol` on every side.
    pub fn contains(&self, p: Point<T>, tol: T) -> bool {
        p.x >= self.xmin - tol && p.x <= self.xmax + tol && p.y >= self.ymin - tol && p.y <= self.ymax + tol
    }

    /// Overlap rectangle; `None` when the interiors are disjoint.
    pub fn intersection(&self, other: &Rect<T>) -> Option<Rect<T>> {
        let r = Rect {
            xmin: self.xmin.max(other.xmin),
            xmax: self.xmax.min(other.xmax),
            ymin: self.ymin.max(other.ymin),
            ymax: self.ymax.min(other.ymax),
        };
        (r.xmin < r.xmax && r.ymin < r.ymax).then_some(r)
    }

    /// True when the closed rectangles share at least one point.
    pub fn touches(&self, other: &Rect<T>) -> bool {
        self.xmin <= other.xmax && other.xmin <= self.xmax && self.ymin <= other.ymax && other.ymin <= self.ymax
    }

    pub fn cast<U: Real>(&self) -> Rect<U> {
        let c = |v: T| U::lit(v.to_f64().unwrap());
        Rect {
            xmin: c(self.xmin),
            xmax: c(self.xmax),
            ymin: c(self.ymin),
            ymax: c(self.ymax),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeStatus {
    Free,
    Obstacle,
    Target,
}

#[derive(Debug, Clone)]
pub struct Grid<T> {
    nx: usize,
    ny: usize,
    dx: T,
    origin: Point<T>,
    status: Vec<NodeStatus>,
    cell_area: Vec<T>,
    /// Bounding box of the node lattice; the computational domain.
    bounds: Rect<T>,
    obstacles: Vec<Rect<T>>,
    target: Rect<T>,
}

impl<T: Real> Grid<T> {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Effective spacing, re-derived so that the lattice spans the domain width.
    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn origin(&self) -> Point<T> {
        self.origin
    }

    pub fn bounds(&self) -> &Rect<T> {
        &self.bounds
    }

    pub fn obstacles(&self) -> &[Rect<T>] {
        &self.obstacles
    }

    pub fn target(&self) -> &Rect<T> {
        &self.target
    }

    #[inline]
    pub fn index(&self, p: usize, q: usize) -> usize {
        debug_assert!(p < self.nx && q < self.ny);
        q * self.nx + p
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    #[inline]
    pub fn node(&self, idx: usize) -> Point<T> {
        let (p, q) = self.coords(idx);
        self.node_at(p, q)
    }

    #[inline]
    pub fn node_at(&self, p: usize, q: usize) -> Point<T> {
        Point::new(
            self.origin.x + T::from_usize(p).unwrap() * self.dx,
            self.origin.y + T::from_usize(q).unwrap() * self.dx,
        )
    }

    #[inline]
    pub fn status(&self, idx: usize) -> NodeStatus {
        self.status[idx]
    }

    pub fn statuses(&self) -> &[NodeStatus] {
        &self.status
    }

    #[inline]
    pub fn is_obstacle(&self, idx: usize) -> bool {
        self.status[idx] == NodeStatus::Obstacle
    }

    /// Dual control volume area `|E_i|`.
    #[inline]
    pub fn cell_area(&self, idx: usize) -> T {
        self.cell_area[idx]
    }

    pub fn cell_areas(&self) -> &[T] {
        &self.cell_area
    }

    pub fn count(&self, status: NodeStatus) -> usize {
        self.status.iter().filter(|&&s| s == status).count()
    }

    /// Horizontal neighbours (left, right) of a node, if inside the lattice.
    #[inline]
    pub fn horizontal_neighbors(&self, idx: usize) -> [Option<usize>; 2] {
        let (p, _) = self.coords(idx);
        [
            (p > 0).then(|| idx - 1),
            (p + 1 < self.nx).then(|| idx + 1),
        ]
    }

    /// Vertical neighbours (below, above) of a node, if inside the lattice.
    #[inline]
    pub fn vertical_neighbors(&self, idx: usize) -> [Option<usize>; 2] {
        let (_, q) = self.coords(idx);
        [
            (q > 0).then(|| idx - self.nx),
            (q + 1 < self.ny).then(|| idx + self.nx),
        ]
    }

    fn membership_tol(&self) -> T {
        self.dx * T::lit(MEMBERSHIP_TOL)
    }

    /// Locates the lattice cell containing `p`. Points on a shared cell edge go
    /// to the lower-index cell; coordinates within rounding of a node line snap
    /// onto it so that node hits produce exact unit weights.
    pub(crate) fn locate(&self, p: Point<T>) -> CellLocation<T> {
        let (ip, s) = Self::locate_axis((p.x - self.origin.x) / self.dx, self.nx);
        let (iq, t) = Self::locate_axis((p.y - self.origin.y) / self.dx, self.ny);
        CellLocation { p: ip, q: iq, s, t }
    }

    fn locate_axis(f: T, n: usize) -> (usize, T) {
        let last = T::from_usize(n - 1).unwrap();
        let mut f = f.max(T::zero()).min(last);
        let nearest = f.round();
        let snap = T::epsilon() * T::lit(16.0) * T::one().max(f.abs());
        if (f - nearest).abs() <= snap {
            f = nearest;
        }
        let cell = if f <= T::zero() {
            0
        } else {
            (f.ceil().to_usize().unwrap() - 1).min(n - 2)
        };
        let s = f - T::from_usize(cell).unwrap();
        (cell, s.max(T::zero()).min(T::one()))
    }

    fn cell_has_free_corner(&self, loc: &CellLocation<T>) -> bool {
        loc.corners(self).iter().any(|&c| !self.is_obstacle(c))
    }
}

/// Cell of the lattice plus local coordinates `(s, t) ∈ [0,1]²` inside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct CellLocation<T> {
    pub p: usize,
    pub q: usize,
    pub s: T,
    pub t: T,
}

impl<T: Real> CellLocation<T> {
    /// Corner indices: lower-left, lower-right, upper-left, upper-right.
    #[inline]
    pub fn corners(&self, grid: &Grid<T>) -> [usize; 4] {
        let ll = grid.index(self.p, self.q);
        [ll, ll + 1, ll + grid.nx, ll + grid.nx + 1]
    }

    /// Bilinear weights matching [`CellLocation::corners`].
    #[inline]
    pub fn weights(&self) -> [T; 4] {
        let (s, t) = (self.s, self.t);
        let (s1, t1) = (T::one() - s, T::one() - t);
        [s1 * t1, s * t1, s1 * t, s * t]
    }
}

/// Nonzero Q1 basis-function values at a point: at most the four corners of
/// one cell, nonnegative, summing to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisWeights<T> {
    entries: [(usize, T); 4],
    len: usize,
}

impl<T: Real> BasisWeights<T> {
    pub fn as_slice(&self) -> &[(usize, T)] {
        &self.entries[..self.len]
    }

    pub fn iter(&self) -> impl Iterator<Item = &(usize, T)> {
        self.as_slice().iter()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn weight_of(&self, node: usize) -> T {
        self.iter()
            .find(|(i, _)| *i == node)
            .map_or(T::zero(), |&(_, w)| w)
    }

    fn from_location(loc: &CellLocation<T>, grid: &Grid<T>) -> Self {
        let mut entries = [(0usize, T::zero()); 4];
        let mut len = 0;
        for (node, w) in loc.corners(grid).into_iter().zip(loc.weights()) {
            if w > T::zero() {
                entries[len] = (node, w);
                len += 1;
            }
        }
        BasisWeights { entries, len }
    }
}

/// Outcome of [`reflect`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reflected<T> {
    pub point: Point<T>,
    /// The mirrored point was still outside and had to be clamped.
    pub clamped: bool,
}

/// Builds the node lattice and masks.
///
/// `nx = round(width/dx) + 1`; the spacing is then re-derived as
/// `width/(nx − 1)` and `ny = round(height/dx') + 1`. Nodes inside the closed
/// union of obstacles are `Obstacle` (walls win ties), remaining nodes inside
/// the closed target are `Target`.
pub fn build_grid<T: Real>(domain: Rect<T>, obstacles: &[Rect<T>], target: Rect<T>, dx: T) -> Result<Grid<T>> {
    if !(dx > T::zero()) || !dx.is_finite() {
        return Err(Error::Argument(format!("grid spacing must be positive, got {dx}")));
    }
    domain.validate()?;
    target.validate()?;
    if !target.touches(&domain) {
        return Err(Error::Config("target does not intersect the domain".into()));
    }
    for (k, o) in obstacles.iter().enumerate() {
        o.validate()?;
        if !o.touches(&domain) {
            return Err(Error::Config(format!("obstacle #{k} does not intersect the domain")));
        }
    }

    let nx = (domain.width() / dx).round().to_usize().unwrap_or(0) + 1;
    if nx < 2 {
        return Err(Error::Argument(format!("spacing {dx} too coarse for the domain width")));
    }
    let dx = domain.width() / T::from_usize(nx - 1).unwrap();
    let ny = (domain.height() / dx).round().to_usize().unwrap_or(0) + 1;
    if ny < 2 {
        return Err(Error::Argument("spacing too coarse for the domain height".into()));
    }
    let origin = Point::new(domain.xmin, domain.ymin);
    let bounds = Rect {
        xmin: domain.xmin,
        xmax: domain.xmin + T::from_usize(nx - 1).unwrap() * dx,
        ymin: domain.ymin,
        ymax: domain.ymin + T::from_usize(ny - 1).unwrap() * dx,
    };

    let mut grid = Grid {
        nx,
        ny,
        dx,
        origin,
        status: vec![NodeStatus::Free; nx * ny],
        cell_area: vec![dx * dx; nx * ny],
        bounds,
        obstacles: obstacles.to_vec(),
        target,
    };
    let tol = grid.membership_tol();
    for idx in 0..grid.len() {
        let x = grid.node(idx);
        grid.status[idx] = if obstacles.iter().any(|o| o.contains(x, tol)) {
            NodeStatus::Obstacle
        } else if target.contains(x, tol) {
            NodeStatus::Target
        } else {
            NodeStatus::Free
        };
    }
    if grid.count(NodeStatus::Target) == 0 {
        return Err(Error::Config(
            "target contains no grid node outside the obstacles (refine dx or enlarge the target)".into(),
        ));
    }
    Ok(grid)
}

/// Mirrors `z` back into `domain` across the violated face(s).
///
/// Points inside the closed rectangle are returned unchanged. If a single
/// mirror is not enough (step longer than the domain), the result is clamped
/// and flagged.
pub fn reflect<T: Real>(z: Point<T>, domain: &Rect<T>) -> Reflected<T> {
    let (x, cx) = reflect_axis(z.x, domain.xmin, domain.xmax);
    let (y, cy) = reflect_axis(z.y, domain.ymin, domain.ymax);
    Reflected {
        point: Point::new(x, y),
        clamped: cx || cy,
    }
}

fn reflect_axis<T: Real>(v: T, lo: T, hi: T) -> (T, bool) {
    let m = if v < lo {
        lo + lo - v
    } else if v > hi {
        hi + hi - v
    } else {
        return (v, false);
    };
    if m < lo {
        (lo, true)
    } else if m > hi {
        (hi, true)
    } else {
        (m, false)
    }
}

/// Q1 interpolation weights of the cell containing `p`.
pub fn basis_weights<T: Real>(p: Point<T>, grid: &Grid<T>) -> Result<BasisWeights<T>> {
    let tol = grid.membership_tol();
    if !grid.bounds.contains(p, tol) {
        return Err(Error::Argument(format!(
            "point ({}, {}) lies outside the grid; reflect it first",
            p.x, p.y
        )));
    }
    Ok(BasisWeights::from_location(&grid.locate(p), grid))
}

/// Moves a characteristic foot out of fully blocked cells.
///
/// A point whose cell has at least one non-obstacle corner is returned as is.
/// Otherwise it goes to the nearest face of the obstacle rectangles containing
/// it, pushed `dx·1e-6` to the free side (ties prefer lower x, then lower y).
/// When no face qualifies, the nearest non-obstacle node is used.
pub fn project_free<T: Real>(p: Point<T>, grid: &Grid<T>) -> Result<Point<T>> {
    let loc = grid.locate(p);
    if grid.cell_has_free_corner(&loc) {
        return Ok(p);
    }
    let tol = grid.membership_tol();
    let nudge = grid.dx * T::lit(FREE_NUDGE);

    let mut best: Option<(T, Point<T>)> = None;
    for o in grid.obstacles.iter().filter(|o| o.contains(p, tol)) {
        let candidates = [
            (p.x - o.xmin, Point::new(o.xmin - nudge, p.y)),
            (o.xmax - p.x, Point::new(o.xmax + nudge, p.y)),
            (p.y - o.ymin, Point::new(p.x, o.ymin - nudge)),
            (o.ymax - p.y, Point::new(p.x, o.ymax + nudge)),
        ];
        for (d, c) in candidates {
            let d = d.max(T::zero());
            if !grid.bounds.contains(c, T::zero()) {
                continue;
            }
            if grid.obstacles.iter().any(|w| strictly_inside(w, c)) {
                continue;
            }
            if !grid.cell_has_free_corner(&grid.locate(c)) {
                continue;
            }
            let better = match best {
                None => true,
                Some((bd, bc)) => {
                    if (d - bd).abs() <= tol {
                        (c.x, c.y) < (bc.x, bc.y)
                    } else {
                        d < bd
                    }
                }
            };
            if better {
                best = Some((d, c));
            }
        }
    }
    if let Some((_, c)) = best {
        return Ok(c);
    }

    (0..grid.len())
        .filter(|&i| !grid.is_obstacle(i))
        .map(|i| (grid.node(i).dist(&p), i))
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(_, i)| grid.node(i))
        .ok_or_else(|| Error::Config("grid has no free node".into()))
}

fn strictly_inside<T: Real>(r: &Rect<T>, p: Point<T>) -> bool {
    p.x > r.xmin && p.x < r.xmax && p.y > r.ymin && p.y < r.ymax
}

/// Cell averages of a piecewise-constant datum given as rectangles with
/// values; later rectangles override earlier ones where they overlap.
///
/// Each node's dual cell is clipped to the lattice bounds before averaging,
/// so a region covering the whole domain yields its value on boundary nodes
/// too. Obstacle nodes get zero.
pub fn rasterize_density<T: Real>(regions: &[(Rect<T>, T)], grid: &Grid<T>) -> Result<DensityField<T>> {
    for (r, v) in regions {
        r.validate()?;
        if !(*v >= T::zero()) || !v.is_finite() {
            return Err(Error::Argument(format!("initial density must be nonnegative, got {v}")));
        }
    }
    let h = grid.dx * T::half();
    let mut values = vec![T::zero(); grid.len()];
    for (idx, value) in values.iter_mut().enumerate() {
        if grid.is_obstacle(idx) {
            continue;
        }
        let x = grid.node(idx);
        let cell = Rect {
            xmin: x.x - h,
            xmax: x.x + h,
            ymin: x.y - h,
            ymax: x.y + h,
        };
        let Some(cell) = cell.intersection(&grid.bounds) else {
            continue;
        };
        *value = covered_integral(&cell, regions) / cell.area();
    }
    Ok(DensityField::from_vec(values))
}

/// Exact integral over `cell` of the layered piecewise-constant datum.
fn covered_integral<T: Real>(cell: &Rect<T>, regions: &[(Rect<T>, T)]) -> T {
    let clipped: Vec<(Rect<T>, T)> = regions
        .iter()
        .filter_map(|(r, v)| r.intersection(cell).map(|c| (c, *v)))
        .collect();
    match clipped.as_slice() {
        [] => return T::zero(),
        [(r, v)] => return r.area() * *v,
        _ => {}
    }
    let mut xs: Vec<T> = vec![cell.xmin, cell.xmax];
    let mut ys: Vec<T> = vec![cell.ymin, cell.ymax];
    for (r, _) in &clipped {
        xs.extend([r.xmin, r.xmax]);
        ys.extend([r.ymin, r.ymax]);
    }
    let sort = |v: &mut Vec<T>| {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup();
    };
    sort(&mut xs);
    sort(&mut ys);

    let mut total = T::zero();
    for xw in xs.windows(2) {
        for yw in ys.windows(2) {
            let mid = Point::new((xw[0] + xw[1]) * T::half(), (yw[0] + yw[1]) * T::half());
            if let Some((_, v)) = clipped.iter().rev().find(|(r, _)| strictly_inside(r, mid)) {
                total = total + (xw[1] - xw[0]) * (yw[1] - yw[0]) * *v;
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Rect<f64> {
        Rect::new(0.0, 1.0, 0.0, 1.0).unwrap()
    }

    fn rect(a: f64, b: f64, c: f64, d: f64) -> Rect<f64> {
        Rect::new(a, b, c, d).unwrap()
    }

    fn two_door_walls() -> Vec<Rect<f64>> {
        vec![
            rect(0.55, 0.6, 0.0, 0.05),
            rect(0.55, 0.6, 0.2, 0.45),
            rect(0.55, 0.6, 0.6, 1.0),
        ]
    }

    #[test]
    fn coarse_grid_misses_thin_target() {
        let err = build_grid(unit(), &[], rect(0.88, 0.92, 0.1, 0.95), 0.5).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn nonpositive_spacing_is_argument_error() {
        let err = build_grid(unit(), &[], rect(0.8, 1.0, 0.0, 1.0), 0.0).unwrap_err();
        assert!(matches!(err, Error::Argument(_)));
        let err = build_grid(unit(), &[], rect(0.8, 1.0, 0.0, 1.0), -0.1).unwrap_err();
        assert!(matches!(err, Error::Argument(_)));
    }

    #[test]
    fn obstacle_between_nodes_masks_nothing() {
        let g = build_grid(unit(), &[rect(0.55, 0.6, 0.0, 0.05)], rect(0.75, 1.0, 0.0, 1.0), 0.25).unwrap();
        assert_eq!((g.nx(), g.ny()), (5, 5));
        assert_eq!(g.count(NodeStatus::Obstacle), 0);
        // x = 0.75 and x = 1.0 columns are target
        assert_eq!(g.count(NodeStatus::Target), 10);
        assert!(g.cell_areas().iter().all(|&a| a == 0.0625));
    }

    #[test]
    fn two_door_lattice() {
        let g = build_grid(unit(), &two_door_walls(), rect(0.88, 0.92, 0.1, 0.95), 0.0077).unwrap();
        assert_eq!((g.nx(), g.ny()), (131, 131));
        assert!((g.dx() - 1.0 / 130.0).abs() < 1e-15);
        // walls occupy columns 72..=78; two doors of 19 rows each
        let open_rows: Vec<usize> = (0..131).filter(|&q| !g.is_obstacle(g.index(75, q))).collect();
        assert_eq!(open_rows, (7..=25).chain(59..=77).collect::<Vec<_>>());
        for p in 72..=78 {
            assert!(g.is_obstacle(g.index(p, 30)));
        }
        assert!(!g.is_obstacle(g.index(71, 30)));
        assert!(!g.is_obstacle(g.index(79, 30)));
        assert_eq!(g.count(NodeStatus::Target), 5 * 111);
    }

    #[test]
    fn walls_win_over_target() {
        let g = build_grid(unit(), &[rect(0.5, 1.0, 0.0, 0.5)], rect(0.5, 1.0, 0.0, 1.0), 0.25).unwrap();
        for idx in 0..g.len() {
            let x = g.node(idx);
            if x.x >= 0.5 && x.y <= 0.5 {
                assert_eq!(g.status(idx), NodeStatus::Obstacle);
            }
        }
        assert_eq!(g.count(NodeStatus::Target), 6);
    }

    #[test]
    fn reflect_examples() {
        let d = unit();
        assert_eq!(reflect(Point::new(0.5, 0.5), &d).point, Point::new(0.5, 0.5));
        let r = reflect(Point::new(1.05, 0.5), &d);
        assert!((r.point.x - 0.95).abs() < 1e-15 && r.point.y == 0.5 && !r.clamped);
        let r = reflect(Point::new(-0.02, -0.03), &d);
        assert!((r.point.x - 0.02).abs() < 1e-15 && (r.point.y - 0.03).abs() < 1e-15);
    }

    #[test]
    fn reflect_clamps_overlong_steps() {
        let r = reflect(Point::new(2.5, 0.5), &unit());
        assert!(r.clamped);
        assert_eq!(r.point, Point::new(0.0, 0.5));
    }

    #[test]
    fn basis_weights_examples() {
        let g = build_grid(unit(), &[], rect(0.9, 1.0, 0.0, 1.0), 0.25).unwrap();
        let j = g.index(2, 3);
        let w = basis_weights(g.node(j), &g).unwrap();
        assert_eq!(w.as_slice(), &[(j, 1.0)]);

        let w = basis_weights(Point::new(0.375, 0.625), &g).unwrap();
        assert_eq!(w.len(), 4);
        assert!(w.iter().all(|&(_, v)| v == 0.25));
        let corners = [g.index(1, 2), g.index(2, 2), g.index(1, 3), g.index(2, 3)];
        for c in corners {
            assert_eq!(w.weight_of(c), 0.25);
        }

        let w = basis_weights(Point::new(0.375, 0.5), &g).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w.weight_of(g.index(1, 2)), 0.5);
        assert_eq!(w.weight_of(g.index(2, 2)), 0.5);

        assert!(basis_weights(Point::new(1.2, 0.5), &g).is_err());
    }

    #[test]
    fn nodes_hit_exactly_on_irrational_spacing() {
        let g = build_grid(unit(), &two_door_walls(), rect(0.88, 0.92, 0.1, 0.95), 0.0077).unwrap();
        for idx in (0..g.len()).step_by(37) {
            let w = basis_weights(g.node(idx), &g).unwrap();
            assert_eq!(w.as_slice(), &[(idx, 1.0)]);
        }
    }

    #[test]
    fn project_free_identity_in_free_space() {
        let g = build_grid(unit(), &two_door_walls(), rect(0.88, 0.92, 0.1, 0.95), 0.0077).unwrap();
        let p = Point::new(0.3, 0.7);
        assert_eq!(project_free(p, &g).unwrap(), p);
        // cells straddling the wall face keep a free corner
        let p = Point::new(0.551, 0.3);
        assert_eq!(project_free(p, &g).unwrap(), p);
    }

    #[test]
    fn project_free_center_of_wall() {
        let g = build_grid(unit(), &two_door_walls(), rect(0.88, 0.92, 0.1, 0.95), 0.0077).unwrap();
        let q = project_free(Point::new(0.575, 0.325), &g).unwrap();
        let eps = g.dx() * 1e-6;
        // distances to both faces tie (within rounding); the lower x wins
        assert!((q.x - (0.55 - eps)).abs() < 1e-15, "{q:?}");
        assert_eq!(q.y, 0.325);
    }

    #[test]
    fn project_free_nearer_face_wins() {
        let g = build_grid(unit(), &two_door_walls(), rect(0.88, 0.92, 0.1, 0.95), 0.0077).unwrap();
        let q = project_free(Point::new(0.59, 0.3), &g).unwrap();
        assert!((q.x - (0.6 + g.dx() * 1e-6)).abs() < 1e-15, "{q:?}");
        // close to the top face of the middle wall
        let q = project_free(Point::new(0.575, 0.44), &g).unwrap();
        assert!((q.y - (0.45 + g.dx() * 1e-6)).abs() < 1e-15, "{q:?}");
    }

    #[test]
    fn project_free_point_on_face() {
        let g = build_grid(unit(), &[rect(0.5, 0.75, 0.25, 0.75)], rect(0.0, 0.1, 0.0, 1.0), 0.25).unwrap();
        let q = project_free(Point::new(0.75, 0.5), &g).unwrap();
        assert_eq!(q, Point::new(0.75 + 0.25 * 1e-6, 0.5));
        assert!(g.cell_has_free_corner(&g.locate(q)));
    }

    #[test]
    fn rasterize_full_cover() {
        let g = build_grid(unit(), &two_door_walls(), rect(0.88, 0.92, 0.1, 0.95), 0.0077).unwrap();
        let m = rasterize_density(&[(unit(), 0.7)], &g).unwrap();
        for idx in 0..g.len() {
            let expected = if g.is_obstacle(idx) { 0.0 } else { 0.7 };
            assert!((m[idx] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn rasterize_single_dual_cell() {
        let g = build_grid(unit(), &[], rect(0.9, 1.0, 0.0, 1.0), 0.25).unwrap();
        // dual cell of node (2,2) shifted right by a quarter cell
        let r = rect(0.375 + 0.0625, 0.625 + 0.0625, 0.375, 0.625);
        let m = rasterize_density(&[(r, 1.0)], &g).unwrap();
        assert!((m[g.index(2, 2)] - 0.75).abs() < 1e-15);
        assert!((m[g.index(3, 2)] - 0.25).abs() < 1e-15);
        assert_eq!(m[g.index(1, 2)], 0.0);
        assert_eq!(m[g.index(2, 3)], 0.0);
        let exact = rasterize_density(&[(rect(0.375, 0.625, 0.375, 0.625), 1.0)], &g).unwrap();
        assert_eq!(exact[g.index(2, 2)], 1.0);
        assert!((exact.total_mass(&g) - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn rasterize_later_regions_override() {
        let g = build_grid(unit(), &[], rect(0.9, 1.0, 0.0, 1.0), 0.25).unwrap();
        let big = rect(0.0, 1.0, 0.0, 1.0);
        let cell = rect(0.375, 0.625, 0.375, 0.5);
        let m = rasterize_density(&[(big, 0.4), (cell, 1.0)], &g).unwrap();
        assert!((m[g.index(2, 2)] - 0.7).abs() < 1e-15);
        assert!((m[g.index(0, 0)] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn rasterize_rejects_negative_values() {
        let g = build_grid(unit(), &[], rect(0.9, 1.0, 0.0, 1.0), 0.25).unwrap();
        let err = rasterize_density(&[(unit(), -0.1)], &g).unwrap_err();
        assert!(matches!(err, Error::Argument(_)));
    }

    #[test]
    fn rasterize_reference_initial_mass() {
        let g = build_grid(unit(), &two_door_walls(), rect(0.88, 0.92, 0.1, 0.95), 0.0077).unwrap();
        let m = rasterize_density(&[(rect(0.1, 0.3, 0.1, 0.9), 0.7)], &g).unwrap();
        let exact = 0.7 * 0.2 * 0.8;
        let tol = 2.0 * g.dx() * 2.0 * (0.2 + 0.8);
        assert!((m.total_mass(&g) - exact).abs() <= tol);
        assert!((m.total_mass(&g) - exact).abs() < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let d = Rect::new(0.0f32, 1.0, 0.0, 1.0).unwrap();
        let g = build_grid(d, &[], Rect::new(0.9f32, 1.0, 0.0, 1.0).unwrap(), 0.1).unwrap();
        assert_eq!(g.nx(), 11);
        let w = basis_weights(Point::new(0.55f32, 0.55), &g).unwrap();
        let sum: f32 = w.iter().map(|&(_, v)| v).sum();
        assert!((sum - 1.0).abs() < 1e-6);
    }
}
