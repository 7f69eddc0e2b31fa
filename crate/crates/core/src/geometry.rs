//! Grid discretization of the deployment region plus the exact and relaxed
//! distance / line-of-sight predicates built on top of it.
//!
//! Coordinates are meters with the origin at the lower-left corner of the
//! region. Cells are addressed as `(col, row)`; cell `(c, r)` spans
//! `[c*s, (c+1)*s] x [r*s, (r+1)*s]` for cell size `s`.

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub col: usize,
    pub row: usize,
}

impl Cell {
    pub const fn new(col: usize, row: usize) -> Self {
        Cell { col, row }
    }
}

/// Closed axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    /// Corners in counter-clockwise order starting at the lower-left one.
    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.x_min, self.y_min),
            Point::new(self.x_max, self.y_min),
            Point::new(self.x_max, self.y_max),
            Point::new(self.x_min, self.y_max),
        ]
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn contains_strictly(&self, p: Point) -> bool {
        p.x > self.x_min && p.x < self.x_max && p.y > self.y_min && p.y < self.y_max
    }

    /// Euclidean distance from `p` to the closed rectangle (0 inside).
    pub fn distance_to(&self, p: Point) -> f64 {
        let dx = (self.x_min - p.x).max(0.0).max(p.x - self.x_max);
        let dy = (self.y_min - p.y).max(0.0).max(p.y - self.y_max);
        dx.hypot(dy)
    }
}

/// Omni-directional sensor model. `beta = comm_radius / sensing_radius` is
/// always derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub type_id: usize,
    pub sensing_radius: f64,
    pub comm_radius: f64,
}

impl SensorSpec {
    pub fn new(type_id: usize, sensing_radius: f64, comm_radius: f64) -> Result<Self, GeometryError> {
        if !(sensing_radius > 0.0 && sensing_radius.is_finite()) {
            return Err(GeometryError::InvalidRadius(sensing_radius));
        }
        if !(comm_radius > 0.0 && comm_radius.is_finite()) {
            return Err(GeometryError::InvalidRadius(comm_radius));
        }
        Ok(SensorSpec {
            type_id,
            sensing_radius,
            comm_radius,
        })
    }

    pub fn beta(&self) -> f64 {
        self.comm_radius / self.sensing_radius
    }
}

/// Discretized deployment area. `occupancy[row * width + col]` is true for
/// obstacle cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRegion {
    width: usize,
    height: usize,
    cell_size: f64,
    occupancy: Vec<bool>,
}

impl GridRegion {
    pub fn new(width: usize, height: usize, cell_size: f64, occupancy: Vec<bool>) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 {
            return Err(GeometryError::EmptyGrid);
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(GeometryError::InvalidCellSize(cell_size));
        }
        if occupancy.len() != width * height {
            return Err(GeometryError::OccupancyLength {
                expected: width * height,
                found: occupancy.len(),
            });
        }
        Ok(GridRegion {
            width,
            height,
            cell_size,
            occupancy,
        })
    }

    /// Region with no obstacles.
    pub fn open(width: usize, height: usize, cell_size: f64) -> Result<Self, GeometryError> {
        Self::new(width, height, cell_size, vec![false; width * height])
    }

    /// Region with the listed cells occupied.
    pub fn with_obstacles(
        width: usize,
        height: usize,
        cell_size: f64,
        occupied: &[Cell],
    ) -> Result<Self, GeometryError> {
        let mut region = Self::open(width, height, cell_size)?;
        for &c in occupied {
            if c.col >= width || c.row >= height {
                return Err(GeometryError::CellOutOfBounds(c));
            }
            region.set_occupied(c, true);
        }
        Ok(region)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    pub fn index(&self, c: Cell) -> usize {
        c.row * self.width + c.col
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.col < self.width && c.row < self.height
    }

    pub fn is_occupied(&self, c: Cell) -> bool {
        self.occupancy[self.index(c)]
    }

    pub fn set_occupied(&mut self, c: Cell, occupied: bool) {
        let i = self.index(c);
        self.occupancy[i] = occupied;
    }

    /// Open cells in row-major order.
    pub fn open_cells(&self) -> Vec<Cell> {
        (0..self.cell_count())
            .filter(|&i| !self.occupancy[i])
            .map(|i| self.cell_at(i))
            .collect()
    }

    pub fn occupied_cells(&self) -> Vec<Cell> {
        (0..self.cell_count())
            .filter(|&i| self.occupancy[i])
            .map(|i| self.cell_at(i))
            .collect()
    }

    pub fn open_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| !o).count()
    }

    pub fn occupied_count(&self) -> usize {
        self.cell_count() - self.open_count()
    }

    pub fn extent(&self) -> f64 {
        self.occupied_count() as f64 / self.cell_count() as f64
    }

    pub fn cell_rect(&self, c: Cell) -> Rect {
        let s = self.cell_size;
        Rect {
            x_min: c.col as f64 * s,
            y_min: c.row as f64 * s,
            x_max: (c.col + 1) as f64 * s,
            y_max: (c.row + 1) as f64 * s,
        }
    }

    pub fn cell_center(&self, c: Cell) -> Point {
        self.cell_rect(c).center()
    }

    pub fn cell_corners(&self, c: Cell) -> [Point; 4] {
        self.cell_rect(c).corners()
    }

    /// Grid point `(i, j)` in meters, `0 <= i <= width`, `0 <= j <= height`.
    pub fn grid_point(&self, i: usize, j: usize) -> Point {
        Point::new(i as f64 * self.cell_size, j as f64 * self.cell_size)
    }

    pub fn bounds(&self) -> Rect {
        Rect {
            x_min: 0.0,
            y_min: 0.0,
            x_max: self.width as f64 * self.cell_size,
            y_max: self.height as f64 * self.cell_size,
        }
    }

    /// Cell containing `p`, if any. Points on shared edges resolve to the
    /// upper/right cell except on the outer boundary.
    pub fn cell_of(&self, p: Point) -> Option<Cell> {
        if !self.bounds().contains(p) {
            return None;
        }
        let col = ((p.x / self.cell_size).floor() as usize).min(self.width - 1);
        let row = ((p.y / self.cell_size).floor() as usize).min(self.height - 1);
        Some(Cell::new(col, row))
    }

    /// True if `p` lies in the closed rectangle of any occupied cell.
    pub fn point_in_obstacle(&self, p: Point) -> bool {
        self.cells_touching(p, p)
            .any(|c| self.is_occupied(c) && self.cell_rect(c).contains(p))
    }

    /// Cells whose closed rectangles can touch the closed bounding box of
    /// `a` and `b`.
    pub fn cells_touching(&self, a: Point, b: Point) -> impl Iterator<Item = Cell> {
        let s = self.cell_size;
        let span = |lo: f64, hi: f64, n: usize| -> (usize, usize) {
            let first = ((lo / s).floor() - 1.0).max(0.0);
            let last = (hi / s).floor().min(n as f64 - 1.0);
            if last < 0.0 || first > last {
                (1, 0)
            } else {
                (first as usize, last as usize)
            }
        };
        let (c0, c1) = span(a.x.min(b.x), a.x.max(b.x), self.width);
        let (r0, r1) = span(a.y.min(b.y), a.y.max(b.y), self.height);
        (r0..=r1).flat_map(move |r| (c0..=c1).map(move |c| Cell::new(c, r)))
    }
}

/// Euclidean distance.
pub fn exact_distance(p: Point, q: Point) -> f64 {
    (p.x - q.x).hypot(p.y - q.y)
}

/// Signed side of `x` relative to the directed line `p -> q`.
#[inline]
fn line_side(p: Point, q: Point, x: Point) -> f64 {
    (q.x - p.x) * (x.y - p.y) - (q.y - p.y) * (x.x - p.x)
}

/// All four corners of `o` strictly on one side of the line through `p`, `q`.
pub fn separated_by_line(p: Point, q: Point, o: &Rect) -> bool {
    let mut sign = 0.0;
    for c in o.corners() {
        let f = line_side(p, q, c);
        if f == 0.0 {
            return false;
        }
        if sign == 0.0 {
            sign = f.signum();
        } else if f.signum() != sign {
            return false;
        }
    }
    true
}

/// Both points on the outer side of one face of `o`. Each point may lie on
/// the face's supporting line but not both, so the open segment stays in the
/// open outer half-plane.
pub fn separated_by_face(p: Point, q: Point, o: &Rect) -> bool {
    let outside = |a: f64, b: f64, bound: f64, below: bool| {
        if below {
            a <= bound && b <= bound && (a < bound || b < bound)
        } else {
            a >= bound && b >= bound && (a > bound || b > bound)
        }
    };
    outside(p.x, q.x, o.x_min, true)
        || outside(p.x, q.x, o.x_max, false)
        || outside(p.y, q.y, o.y_min, true)
        || outside(p.y, q.y, o.y_max, false)
}

/// Obstacle `o` does not block the line of sight between `p` and `q`.
pub fn unblocked_by(p: Point, q: Point, o: &Rect) -> bool {
    separated_by_line(p, q, o) || separated_by_face(p, q, o)
}

/// Line of sight between `p` and `q`: no occupied cell meets the open
/// segment `pq`. Grazing a rectangle anywhere strictly between the endpoints
/// counts as blocked; the endpoints themselves may sit on an obstacle
/// boundary (coverage locations are cell corners, which are routinely shared
/// with obstacle cells).
pub fn exact_los(p: Point, q: Point, region: &GridRegion) -> bool {
    if p == q {
        return true;
    }
    region
        .cells_touching(p, q)
        .filter(|&c| region.is_occupied(c))
        .all(|c| unblocked_by(p, q, &region.cell_rect(c)))
}

/// Largest distance between any point of `a` and any point of `b`.
pub fn relaxed_distance(a: Cell, b: Cell, region: &GridRegion) -> f64 {
    debug_assert!(!region.is_occupied(a) && !region.is_occupied(b));
    let ca = region.cell_corners(a);
    let cb = region.cell_corners(b);
    ca.iter()
        .flat_map(|p| cb.iter().map(move |q| exact_distance(*p, *q)))
        .fold(0.0, f64::max)
}

/// Conservative cell-to-cell visibility: no occupied cell overlaps the
/// interior of the convex hull of the two cells. Every open segment from an
/// interior point of one cell to any point of the other lies inside that
/// interior, so this implies [`exact_los`] for all such pairs.
pub fn relaxed_visibility(a: Cell, b: Cell, region: &GridRegion) -> bool {
    debug_assert!(!region.is_occupied(a) && !region.is_occupied(b));
    if a == b {
        return true;
    }
    let mut pts: Vec<Point> = region.cell_corners(a).to_vec();
    pts.extend_from_slice(&region.cell_corners(b));
    let hull = convex_hull(&pts);
    let ra = region.cell_rect(a);
    let rb = region.cell_rect(b);
    let lo = Point::new(ra.x_min.min(rb.x_min), ra.y_min.min(rb.y_min));
    let hi = Point::new(ra.x_max.max(rb.x_max), ra.y_max.max(rb.y_max));
    region
        .cells_touching(lo, hi)
        .filter(|&c| region.is_occupied(c))
        .all(|c| !interiors_overlap(&hull, &region.cell_rect(c)))
}

/// Occupied cells overlapping the interior of the convex hull of `rect` and
/// `p`. When this is empty every point strictly inside `rect` sees `p`.
pub fn hull_blockers(region: &GridRegion, rect: &Rect, p: Point) -> Vec<Cell> {
    let mut pts: Vec<Point> = rect.corners().to_vec();
    pts.push(p);
    let hull = convex_hull(&pts);
    let lo = Point::new(rect.x_min.min(p.x), rect.y_min.min(p.y));
    let hi = Point::new(rect.x_max.max(p.x), rect.y_max.max(p.y));
    region
        .cells_touching(lo, hi)
        .filter(|&c| region.is_occupied(c) && interiors_overlap(&hull, &region.cell_rect(c)))
        .collect()
}

/// Part of a convex polygon satisfying `a . p <= b`.
pub fn clip_half_plane(poly: &[Point], a: [f64; 2], b: f64) -> Vec<Point> {
    let f = |p: Point| a[0] * p.x + a[1] * p.y - b;
    let mut out = Vec::with_capacity(poly.len() + 1);
    let Some(&last) = poly.last() else {
        return out;
    };
    let mut prev = last;
    for &cur in poly {
        let (fp, fc) = (f(prev), f(cur));
        if fc <= 0.0 {
            if fp > 0.0 {
                let t = fp / (fp - fc);
                out.push(Point::new(prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)));
            }
            out.push(cur);
        } else if fp <= 0.0 {
            let t = fp / (fp - fc);
            out.push(Point::new(prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)));
        }
        prev = cur;
    }
    out
}

/// Andrew's monotone chain; counter-clockwise, no collinear points.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Point, a: Point, b: Point| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Positive-area overlap between a convex polygon and a rectangle, decided
/// by the separating axis test with touching treated as separated.
fn interiors_overlap(poly: &[Point], rect: &Rect) -> bool {
    let rc = rect.corners();
    let separated_on = |ax: f64, ay: f64| {
        let proj = |p: &Point| p.x * ax + p.y * ay;
        let (mut a0, mut a1) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in poly {
            let v = proj(p);
            a0 = a0.min(v);
            a1 = a1.max(v);
        }
        let (mut b0, mut b1) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in &rc {
            let v = proj(p);
            b0 = b0.min(v);
            b1 = b1.max(v);
        }
        a1 <= b0 || b1 <= a0
    };
    if separated_on(1.0, 0.0) || separated_on(0.0, 1.0) {
        return false;
    }
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if separated_on(-(b.y - a.y), b.x - a.x) {
            return false;
        }
    }
    true
}

/// Rasterize simple polygons (meters) onto a grid. A cell becomes occupied
/// when a polygon overlaps its rectangle with positive area.
pub fn discretize_obstacles(
    polygons: &[Vec<Point>],
    width: usize,
    height: usize,
    cell_size: f64,
) -> Result<GridRegion, GeometryError> {
    let mut region = GridRegion::open(width, height, cell_size)?;
    for (i, poly) in polygons.iter().enumerate() {
        if poly.len() < 3 {
            return Err(GeometryError::DegeneratePolygon(i));
        }
        if poly.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let (mut lo, mut hi) = (poly[0], poly[0]);
        for p in poly {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let cells: Vec<Cell> = region.cells_touching(lo, hi).collect();
        let tiny = 1e-12 * cell_size * cell_size;
        for c in cells {
            if region.is_occupied(c) {
                continue;
            }
            let clipped = clip_to_rect(poly, &region.cell_rect(c));
            if polygon_area(&clipped).abs() > tiny {
                region.set_occupied(c, true);
            }
        }
    }
    Ok(region)
}

/// Sutherland-Hodgman clip of an arbitrary simple polygon against a
/// rectangle. The signed area of the result equals the overlap area.
fn clip_to_rect(poly: &[Point], rect: &Rect) -> Vec<Point> {
    type Inside = fn(Point, &Rect) -> bool;
    type Cut = fn(Point, Point, &Rect) -> Point;
    let edges: [(Inside, Cut); 4] = [
        (|p, r| p.x >= r.x_min, |a, b, r| lerp_x(a, b, r.x_min)),
        (|p, r| p.x <= r.x_max, |a, b, r| lerp_x(a, b, r.x_max)),
        (|p, r| p.y >= r.y_min, |a, b, r| lerp_y(a, b, r.y_min)),
        (|p, r| p.y <= r.y_max, |a, b, r| lerp_y(a, b, r.y_max)),
    ];
    let mut out: Vec<Point> = poly.to_vec();
    for (inside, cut) in edges {
        if out.is_empty() {
            break;
        }
        let input = std::mem::take(&mut out);
        let mut prev = *input.last().unwrap();
        for &cur in &input {
            match (inside(cur, rect), inside(prev, rect)) {
                (true, true) => out.push(cur),
                (true, false) => {
                    out.push(cut(prev, cur, rect));
                    out.push(cur);
                }
                (false, true) => out.push(cut(prev, cur, rect)),
                (false, false) => {}
            }
            prev = cur;
        }
    }
    out
}

fn lerp_x(a: Point, b: Point, x: f64) -> Point {
    let t = (x - a.x) / (b.x - a.x);
    Point::new(x, a.y + t * (b.y - a.y))
}

fn lerp_y(a: Point, b: Point, y: f64) -> Point {
    let t = (y - a.y) / (b.y - a.y);
    Point::new(a.x + t * (b.x - a.x), y)
}

pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    0.5 * acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(w: usize, h: usize, occ: &[(usize, usize)]) -> GridRegion {
        let cells: Vec<Cell> = occ.iter().map(|&(c, r)| Cell::new(c, r)).collect();
        GridRegion::with_obstacles(w, h, 1.0, &cells).unwrap()
    }

    /// Point-sampling oracle for polygon/cell overlap.
    fn sampled_overlap(poly: &[Point], rect: &Rect) -> bool {
        let inside = |p: Point| {
            let mut c = false;
            let n = poly.len();
            for i in 0..n {
                let a = poly[i];
                let b = poly[(i + n - 1) % n];
                if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
                    c = !c;
                }
            }
            c
        };
        let m = 40;
        (1..m).any(|i| {
            (1..m).any(|j| {
                let p = Point::new(
                    rect.x_min + (rect.x_max - rect.x_min) * i as f64 / m as f64,
                    rect.y_min + (rect.y_max - rect.y_min) * j as f64 / m as f64,
                );
                inside(p)
            })
        })
    }

    #[test]
    fn discretize_empty_and_aligned() {
        let r = discretize_obstacles(&[], 4, 4, 1.0).unwrap();
        assert_eq!(r.occupied_count(), 0);
        let square = vec![
            Point::new(1.0, 1.0),
            Point::new(2.0, 1.0),
            Point::new(2.0, 2.0),
            Point::new(1.0, 2.0),
        ];
        let r = discretize_obstacles(&[square], 4, 4, 1.0).unwrap();
        assert_eq!(r.occupied_cells(), vec![Cell::new(1, 1)]);
    }

    #[test]
    fn discretize_corner_triangle_matches_sampling() {
        let tri = vec![Point::new(0.0, 0.0), Point::new(1.6, 0.0), Point::new(0.0, 0.5)];
        let r = discretize_obstacles(std::slice::from_ref(&tri), 4, 4, 1.0).unwrap();
        assert!(r.is_occupied(Cell::new(0, 0)));
        assert!(r.is_occupied(Cell::new(1, 0)));
        for c in (0..16).map(|i| r.cell_at(i)) {
            assert_eq!(r.is_occupied(c), sampled_overlap(&tri, &r.cell_rect(c)), "{c:?}");
        }
    }

    #[test]
    fn discretize_edge_touch_leaves_cell_open() {
        let sq = vec![
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 1.0),
            Point::new(1.0, 1.0),
        ];
        let r = discretize_obstacles(&[sq], 3, 2, 1.0).unwrap();
        assert_eq!(r.occupied_cells(), vec![Cell::new(1, 0)]);
    }

    #[test]
    fn discretize_rejects_degenerate() {
        let bad = vec![Point::new(0.0, 0.0), Point::new(1.0, 1.0)];
        assert!(matches!(
            discretize_obstacles(&[bad], 2, 2, 1.0),
            Err(GeometryError::DegeneratePolygon(0))
        ));
    }

    #[test]
    fn los_examples() {
        let free = unit(4, 4, &[]);
        assert!(exact_los(Point::new(0.1, 0.2), Point::new(3.9, 3.7), &free));
        let r = unit(4, 4, &[(1, 1)]);
        assert!(!exact_los(Point::new(0.5, 0.5), Point::new(2.5, 2.5), &r));
        assert!(exact_los(Point::new(0.5, 0.5), Point::new(0.5, 2.5), &r));
    }

    #[test]
    fn los_grazing_and_endpoints() {
        let r = unit(4, 4, &[(1, 1)]);
        // Passing exactly through a corner between the endpoints is blocked.
        assert!(!exact_los(Point::new(0.5, 1.5), Point::new(1.5, 0.5), &r));
        // Running along an obstacle edge is blocked.
        assert!(!exact_los(Point::new(0.0, 1.0), Point::new(3.0, 1.0), &r));
        // Ending on an obstacle corner from outside is visible.
        assert!(exact_los(Point::new(0.5, 0.5), Point::new(1.0, 1.0), &r));
        assert!(exact_los(Point::new(3.5, 0.5), Point::new(1.0, 1.0), &r));
        // Ending on the corner but approaching through the obstacle is not.
        assert!(!exact_los(Point::new(2.5, 2.5), Point::new(1.0, 1.0), &r));
    }

    #[test]
    fn distances() {
        assert_eq!(exact_distance(Point::new(0.0, 0.0), Point::new(3.0, 4.0)), 5.0);
        assert_eq!(exact_distance(Point::new(1.0, 2.0), Point::new(1.0, 2.0)), 0.0);
        assert_eq!(exact_distance(Point::new(1.0, 2.0), Point::new(4.0, 6.0)), 5.0);
        let r = unit(4, 1, &[]);
        let c = |i| Cell::new(i, 0);
        assert!((relaxed_distance(c(0), c(0), &r) - 2f64.sqrt()).abs() < 1e-12);
        assert!((relaxed_distance(c(0), c(1), &r) - 5f64.sqrt()).abs() < 1e-12);
        assert!((relaxed_distance(c(0), c(3), &r) - 17f64.sqrt()).abs() < 1e-12);
        assert_eq!(relaxed_distance(c(1), c(3), &r), relaxed_distance(c(3), c(1), &r));
    }

    #[test]
    fn relaxed_visibility_examples() {
        let free = unit(3, 3, &[]);
        assert!(relaxed_visibility(Cell::new(0, 0), Cell::new(2, 2), &free));
        let r = unit(3, 3, &[(1, 1)]);
        assert!(!relaxed_visibility(Cell::new(0, 0), Cell::new(2, 2), &r));
        let r = unit(3, 3, &[(2, 1)]);
        assert!(relaxed_visibility(Cell::new(0, 0), Cell::new(0, 2), &r));
        // A cell touching an obstacle along an edge still sees itself.
        let r = unit(2, 2, &[(1, 1)]);
        assert!(relaxed_visibility(Cell::new(1, 0), Cell::new(1, 0), &r));
        assert!(relaxed_visibility(Cell::new(0, 0), Cell::new(1, 0), &r));
    }

    #[test]
    fn spec_rejects_bad_radii() {
        assert!(SensorSpec::new(0, 0.0, 1.0).is_err());
        assert!(SensorSpec::new(0, 1.0, -1.0).is_err());
        assert_eq!(SensorSpec::new(0, 2.0, 4.0).unwrap().beta(), 2.0);
    }
}
