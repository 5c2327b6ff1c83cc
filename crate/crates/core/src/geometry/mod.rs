//! Planar geometry kernel: primitives, ray casting, plane sweep, planar
//! subdivision faces and the imaging-adapted workspace partition.

mod hull;
mod partition;
mod predicates;
mod raycast;
mod subdivision;
mod sweep;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

pub use hull::{convex_decomposition, convex_hull};
pub use partition::{
    generate_partition_segments, wksp_partition, AggregateRegion, PartitionOptions,
    PartitionResult, RegionKind,
};
pub use predicates::{orient2d, Orientation};
pub use raycast::{cast_ray, direction, first_hit, ray_segment_intersection, RayHit};
pub use subdivision::{build_planar_subdivision, extract_faces, PlanarSubdivision};
pub use sweep::{plane_sweep_intersections, SweepIntersection};

/// Absolute tolerance for coordinate comparisons and node snapping (meters).
pub const COORD_TOL: f64 = 1e-9;
/// Minimum distance for a ray hit to count; hits closer than this are the
/// ray origin itself.
pub const HIT_MIN_DIST: f64 = 1e-12;
/// Tolerance on the cross product of two unit vectors for "parallel".
pub const ANGLE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),
    #[error("degenerate segment: endpoints coincide at {0}")]
    DegenerateSegment(Point2),
    #[error("polygon needs at least 3 non-collinear vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon is not convex at vertex {0}")]
    NotConvex(usize),
    #[error("degenerate input: all points collinear")]
    DegenerateInput,
    #[error("invalid workspace: {0}")]
    InvalidWorkspace(String),
    #[error("invalid lidar configuration: {0}")]
    InvalidLidar(String),
    #[error("ray from {origin} at angle {angle} hits nothing")]
    NoHit { origin: Point2, angle: f64 },
    #[error("planar subdivision is inconsistent: {0}")]
    InconsistentSubdivision(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        Point2::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl Serialize for Point2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point2 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y] = <[f64; 2]>::deserialize(d)?;
        Ok(Point2::new(x, y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub p: Point2,
    pub q: Point2,
}

impl Segment {
    pub fn new(p: Point2, q: Point2) -> Result<Self, GeometryError> {
        if !p.is_finite() || !q.is_finite() {
            return Err(GeometryError::NonFinite("segment"));
        }
        if p == q {
            return Err(GeometryError::DegenerateSegment(p));
        }
        Ok(Self { p, q })
    }

    pub fn length(&self) -> f64 {
        self.p.dist(self.q)
    }

    /// Euclidean distance from `z` to the closed segment.
    pub fn distance_to(&self, z: Point2) -> f64 {
        let e = self.q - self.p;
        let len2 = e.dot(e);
        let t = if len2 > 0.0 {
            ((z - self.p).dot(e) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        z.dist(self.p.lerp(self.q, t))
    }

    /// Distance from `z` to the supporting line.
    pub fn line_distance(&self, z: Point2) -> f64 {
        let e = self.q - self.p;
        (e.cross(z - self.p)).abs() / e.norm()
    }
}

/// Counterclockwise, strictly convex polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    /// Validates and normalizes: drops repeated and collinear vertices and
    /// reorients clockwise input to counterclockwise.
    pub fn new(vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite("polygon"));
        }
        let mut v = simplify_ring(vertices);
        if v.len() < 3 {
            return Err(GeometryError::TooFewVertices(v.len()));
        }
        if signed_area(&v) < 0.0 {
            v.reverse();
        }
        let n = v.len();
        for i in 0..n {
            let a = v[(i + n - 1) % n];
            let b = v[i];
            let c = v[(i + 1) % n];
            if orient2d(a, b, c) != Orientation::CounterClockwise {
                return Err(GeometryError::NotConvex(i));
            }
        }
        Ok(Self { vertices: v })
    }

    /// Axis-aligned rectangle `[x0,x1] x [y0,y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeometryError> {
        Self::new(vec![
            Point2::new(x0, y0),
            Point2::new(x1, y0),
            Point2::new(x1, y1),
            Point2::new(x0, y1),
        ])
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edge `i` runs from vertex `i` to vertex `i+1`.
    pub fn edge(&self, i: usize) -> Segment {
        let n = self.vertices.len();
        Segment {
            p: self.vertices[i % n],
            q: self.vertices[(i + 1) % n],
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        (0..self.vertices.len()).map(move |i| self.edge(i))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Point2 {
        polygon_centroid(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|e| e.length()).sum()
    }

    /// Signed distances to every edge's supporting line, positive inside.
    pub fn edge_distances(&self, z: Point2) -> impl Iterator<Item = f64> + '_ {
        self.edges().map(move |e| {
            let d = e.q - e.p;
            d.cross(z - e.p) / d.norm()
        })
    }

    /// Closed containment with tolerance `tol`.
    pub fn contains(&self, z: Point2, tol: f64) -> bool {
        self.edge_distances(z).all(|d| d >= -tol)
    }

    /// Interior containment: at least `tol` away from every edge line.
    pub fn contains_strictly(&self, z: Point2, tol: f64) -> bool {
        self.edge_distances(z).all(|d| d > tol)
    }

    /// `true` if `z` lies on the boundary within `tol`.
    pub fn on_boundary(&self, z: Point2, tol: f64) -> bool {
        self.contains(z, tol) && self.edges().any(|e| e.distance_to(z) <= tol)
    }

    /// Inward half-planes `n . z >= c` with unit normals, one per edge.
    pub fn halfplanes(&self) -> Vec<(Point2, f64)> {
        self.edges()
            .map(|e| {
                let d = e.q - e.p;
                let len = d.norm();
                let n = Point2::new(-d.y / len, d.x / len);
                (n, n.dot(e.p))
            })
            .collect()
    }

    pub fn bbox(&self) -> (Point2, Point2) {
        bbox_of(&self.vertices)
    }

    /// Clips this polygon against another convex polygon; returns the area
    /// of the intersection.
    pub fn intersection_area(&self, other: &ConvexPolygon) -> f64 {
        let mut poly = self.vertices.clone();
        for e in other.edges() {
            if poly.is_empty() {
                break;
            }
            poly = clip_halfplane(&poly, e.p, e.q);
        }
        if poly.len() < 3 {
            0.0
        } else {
            signed_area(&poly).max(0.0)
        }
    }
}

fn clip_halfplane(poly: &[Point2], a: Point2, b: Point2) -> Vec<Point2> {
    let d = b - a;
    let side = |p: Point2| d.cross(p - a);
    let mut out = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let cur = poly[i];
        let nxt = poly[(i + 1) % n];
        let sc = side(cur);
        let sn = side(nxt);
        if sc >= 0.0 {
            out.push(cur);
        }
        if (sc >= 0.0) != (sn >= 0.0) {
            let t = sc / (sc - sn);
            out.push(cur.lerp(nxt, t));
        }
    }
    out
}

pub(crate) fn signed_area(v: &[Point2]) -> f64 {
    let n = v.len();
    if n < 3 {
        return 0.0;
    }
    let o = v[0];
    let mut s = 0.0;
    for i in 1..n - 1 {
        s += (v[i] - o).cross(v[i + 1] - o);
    }
    0.5 * s
}

pub(crate) fn polygon_centroid(v: &[Point2]) -> Point2 {
    let n = v.len();
    let o = v[0];
    let mut a = 0.0;
    let mut c = Point2::default();
    for i in 1..n.saturating_sub(1) {
        let p = v[i] - o;
        let q = v[i + 1] - o;
        let w = p.cross(q);
        a += w;
        c = c + (p + q) * w;
    }
    if a.abs() <= f64::MIN_POSITIVE {
        let s = v.iter().fold(Point2::default(), |acc, &p| acc + p);
        return s * (1.0 / n as f64);
    }
    o + c * (1.0 / (3.0 * a))
}

pub(crate) fn bbox_of(v: &[Point2]) -> (Point2, Point2) {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in v {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

/// Removes repeated vertices (within [`COORD_TOL`]) and vertices collinear
/// with their neighbours.
pub(crate) fn simplify_ring(vertices: Vec<Point2>) -> Vec<Point2> {
    let mut v: Vec<Point2> = Vec::with_capacity(vertices.len());
    for p in vertices {
        if v.last().map_or(true, |l: &Point2| l.dist(p) > COORD_TOL) {
            v.push(p);
        }
    }
    while v.len() > 1 && v[0].dist(*v.last().unwrap()) <= COORD_TOL {
        v.pop();
    }
    loop {
        let n = v.len();
        if n < 3 {
            return v;
        }
        let mut removed = false;
        for i in 0..n {
            let a = v[(i + n - 1) % n];
            let b = v[i];
            let c = v[(i + 1) % n];
            let base = c - a;
            let len = base.norm();
            let collinear = len <= COORD_TOL
                || (base.cross(b - a).abs() / len <= COORD_TOL && (b - a).dot(c - b) >= 0.0);
            if collinear {
                v.remove(i);
                removed = true;
                break;
            }
        }
        if !removed {
            return v;
        }
    }
}

/// Which polygon of the workspace an edge belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Owner {
    Boundary,
    Obstacle(usize),
}

/// Identifies one edge of the workspace boundary or of an obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId {
    pub owner: Owner,
    pub index: usize,
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.owner {
            Owner::Boundary => write!(f, "boundary[{}]", self.index),
            Owner::Obstacle(i) => write!(f, "obstacle{}[{}]", i, self.index),
        }
    }
}

/// Convex boundary polygon plus convex obstacles with disjoint interiors.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkspaceSpec {
    boundary: ConvexPolygon,
    obstacles: Vec<ConvexPolygon>,
}

impl WorkspaceSpec {
    pub fn new(
        boundary: ConvexPolygon,
        obstacles: Vec<ConvexPolygon>,
    ) -> Result<Self, GeometryError> {
        for (i, o) in obstacles.iter().enumerate() {
            if let Some(v) = o.vertices().iter().find(|&&v| !boundary.contains(v, COORD_TOL)) {
                return Err(GeometryError::InvalidWorkspace(format!(
                    "obstacle {i} vertex {v} lies outside the boundary"
                )));
            }
        }
        for i in 0..obstacles.len() {
            for j in i + 1..obstacles.len() {
                if !interiors_disjoint(&obstacles[i], &obstacles[j]) {
                    return Err(GeometryError::InvalidWorkspace(format!(
                        "obstacles {i} and {j} overlap"
                    )));
                }
            }
        }
        Ok(Self { boundary, obstacles })
    }

    pub fn boundary(&self) -> &ConvexPolygon {
        &self.boundary
    }

    pub fn obstacles(&self) -> &[ConvexPolygon] {
        &self.obstacles
    }

    pub fn polygon(&self, owner: Owner) -> &ConvexPolygon {
        match owner {
            Owner::Boundary => &self.boundary,
            Owner::Obstacle(i) => &self.obstacles[i],
        }
    }

    /// Boundary first, then obstacles in order.
    pub fn polygons(&self) -> impl Iterator<Item = (Owner, &ConvexPolygon)> {
        std::iter::once((Owner::Boundary, &self.boundary))
            .chain(self.obstacles.iter().enumerate().map(|(i, o)| (Owner::Obstacle(i), o)))
    }

    /// Every edge of the set O* in edge-id order.
    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, Segment)> + '_ {
        self.polygons().flat_map(|(owner, poly)| {
            poly.edges()
                .enumerate()
                .map(move |(index, s)| (EdgeId { owner, index }, s))
        })
    }

    pub fn edge(&self, id: EdgeId) -> Segment {
        self.polygon(id.owner).edge(id.index)
    }

    pub fn vertex_count(&self) -> usize {
        self.polygons().map(|(_, p)| p.len()).sum()
    }

    /// `true` if `z` is inside the boundary and outside every obstacle,
    /// at least `tol` away from all of O*.
    pub fn is_free(&self, z: Point2, tol: f64) -> bool {
        self.boundary.contains_strictly(z, tol)
            && self.obstacles.iter().all(|o| !o.contains(z, tol))
    }
}

fn interiors_disjoint(a: &ConvexPolygon, b: &ConvexPolygon) -> bool {
    let separated_by = |p: &ConvexPolygon, q: &ConvexPolygon| {
        p.edges().any(|e| {
            let d = e.q - e.p;
            let len = d.norm();
            q.vertices()
                .iter()
                .all(|&v| d.cross(v - e.p) / len <= COORD_TOL)
        })
    };
    separated_by(a, b) || separated_by(b, a)
}

/// Fixed-heading LiDAR with `laser_count` beams evenly spread over 2π.
#[derive(Debug, Clone, PartialEq)]
pub struct LidarSpec {
    laser_count: usize,
    heading: f64,
    primary: Vec<usize>,
}

impl LidarSpec {
    /// `primary` holds 1-based laser indices.
    pub fn new(laser_count: usize, heading: f64, primary: Vec<usize>) -> Result<Self, GeometryError> {
        if laser_count == 0 {
            return Err(GeometryError::InvalidLidar("laser_count must be positive".into()));
        }
        if !heading.is_finite() {
            return Err(GeometryError::InvalidLidar("heading must be finite".into()));
        }
        if primary.is_empty() {
            return Err(GeometryError::InvalidLidar("primary lasers must be nonempty".into()));
        }
        let mut primary = primary;
        primary.sort_unstable();
        primary.dedup();
        if let Some(&bad) = primary.iter().find(|&&k| k == 0 || k > laser_count) {
            return Err(GeometryError::InvalidLidar(format!(
                "primary laser index {bad} outside 1..={laser_count}"
            )));
        }
        Ok(Self {
            laser_count,
            heading,
            primary,
        })
    }

    /// All lasers are primary.
    pub fn all_primary(laser_count: usize, heading: f64) -> Result<Self, GeometryError> {
        Self::new(laser_count, heading, (1..=laser_count.max(1)).collect())
    }

    pub fn laser_count(&self) -> usize {
        self.laser_count
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    /// 1-based primary indices, sorted.
    pub fn primary_indices(&self) -> &[usize] {
        &self.primary
    }

    pub fn angle(&self, i: usize) -> f64 {
        self.heading + i as f64 * std::f64::consts::TAU / self.laser_count as f64
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.laser_count).map(|i| self.angle(i)).collect()
    }

    pub fn primary_angles(&self) -> Vec<f64> {
        self.primary.iter().map(|&k| self.angle(k - 1)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polygon_normalizes_orientation_and_collinear_points() {
        let p = ConvexPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.5),
            Point2::new(1.0, 0.0),
        ])
        .unwrap();
        assert_eq!(p.len(), 4);
        assert!((p.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn polygon_rejects_reflex_vertex() {
        let err = ConvexPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(1.0, 0.5),
            Point2::new(2.0, 2.0),
            Point2::new(0.0, 2.0),
        ]);
        assert!(matches!(err, Err(GeometryError::NotConvex(_))));
    }

    #[test]
    fn polygon_rejects_collinear_points() {
        let err = ConvexPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(2.0, 0.0),
        ]);
        assert!(matches!(err, Err(GeometryError::TooFewVertices(_))));
    }

    #[test]
    fn workspace_rejects_overlapping_obstacles() {
        let b = ConvexPolygon::rectangle(0.0, 0.0, 4.0, 4.0).unwrap();
        let o1 = ConvexPolygon::rectangle(1.0, 1.0, 2.0, 2.0).unwrap();
        let o2 = ConvexPolygon::rectangle(1.5, 1.5, 3.0, 3.0).unwrap();
        assert!(WorkspaceSpec::new(b.clone(), vec![o1.clone(), o2]).is_err());
        let touching = ConvexPolygon::rectangle(2.0, 1.0, 3.0, 2.0).unwrap();
        assert!(WorkspaceSpec::new(b, vec![o1, touching]).is_ok());
    }

    #[test]
    fn workspace_rejects_obstacle_outside() {
        let b = ConvexPolygon::rectangle(0.0, 0.0, 4.0, 4.0).unwrap();
        let o = ConvexPolygon::rectangle(3.0, 3.0, 5.0, 5.0).unwrap();
        assert!(WorkspaceSpec::new(b, vec![o]).is_err());
    }

    #[test]
    fn lidar_angles_are_evenly_spaced() {
        let l = LidarSpec::new(4, 0.0, vec![1]).unwrap();
        let a = l.angles();
        assert_eq!(a.len(), 4);
        assert!((a[1] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!(LidarSpec::new(4, 0.0, vec![]).is_err());
        assert!(LidarSpec::new(4, 0.0, vec![5]).is_err());
        assert!(LidarSpec::new(0, 0.0, vec![1]).is_err());
    }

    #[test]
    fn intersection_area_of_overlapping_squares() {
        let a = ConvexPolygon::rectangle(0.0, 0.0, 2.0, 2.0).unwrap();
        let b = ConvexPolygon::rectangle(1.0, 1.0, 3.0, 3.0).unwrap();
        assert!((a.intersection_area(&b) - 1.0).abs() < 1e-12);
        let c = ConvexPolygon::rectangle(2.0, 0.0, 3.0, 1.0).unwrap();
        assert!(a.intersection_area(&c).abs() < 1e-12);
    }
}
