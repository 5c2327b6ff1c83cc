use super::hull::{convex_decomposition, convex_hull};
use super::raycast::{cast_ray, direction};
use super::subdivision::{build_planar_subdivision, trace_cycles};
use super::sweep::Snapper;
use super::{
    bbox_of, signed_area, simplify_ring, ConvexPolygon, GeometryError, LidarSpec, Point2,
    Segment, WorkspaceSpec, ANGLE_TOL, COORD_TOL,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionOptions {
    /// Cast partition rays from the workspace boundary vertices as well as
    /// from obstacle vertices. Without them a convex boundary with lasers
    /// not parallel to its edges is not imaging-adapted.
    pub include_boundary_vertices: bool,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        Self {
            include_boundary_vertices: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Free,
    ObstacleInterior,
}

/// A face of the coarse partition computed from the primary lasers only.
///
/// Faces of the coarse partition need not be convex (a single primary laser
/// leaves reflex corners at obstacle vertices), so the exact face outline is
/// kept next to its convex hull.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRegion {
    /// Simple counterclockwise ring.
    pub outline: Vec<Point2>,
    pub hull: ConvexPolygon,
    pub kind: RegionKind,
}

impl AggregateRegion {
    pub fn is_convex(&self) -> bool {
        (self.hull.area() - signed_area(&self.outline)).abs() <= 1e-9 * self.hull.area().max(1e-300)
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.outline)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionResult {
    pub fine_regions: Vec<ConvexPolygon>,
    pub region_kind: Vec<RegionKind>,
    pub aggregate_regions: Vec<AggregateRegion>,
    pub fine_to_aggregate: Vec<usize>,
    /// Number of partition segments cast for the fine and coarse partitions.
    pub segment_counts: (usize, usize),
}

impl PartitionResult {
    pub fn free_regions(&self) -> impl Iterator<Item = (usize, &ConvexPolygon)> {
        self.fine_regions
            .iter()
            .enumerate()
            .filter(|(i, _)| self.region_kind[*i] == RegionKind::Free)
    }

    /// Fine regions grouped by aggregate index.
    pub fn aggregate_members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.aggregate_regions.len()];
        for (f, &a) in self.fine_to_aggregate.iter().enumerate() {
            m[a].push(f);
        }
        m
    }

    /// Index of a fine region containing `z` (closed, tolerance `tol`).
    pub fn locate(&self, z: Point2, tol: f64) -> Option<usize> {
        self.fine_regions.iter().position(|r| r.contains(z, tol))
    }
}

/// Whether moving from `v` along `dir` enters the closed polygon; `None`
/// when `v` is not on the polygon boundary.
fn entry_margin(poly: &ConvexPolygon, v: Point2, dir: Point2) -> Option<f64> {
    let mut margin: Option<f64> = None;
    for e in poly.edges() {
        if e.distance_to(v) <= COORD_TOL {
            let d = e.q - e.p;
            let c = (d * (1.0 / d.norm())).cross(dir);
            margin = Some(margin.map_or(c, |m: f64| m.min(c)));
        }
    }
    margin
}

/// Partition segments `Line(v, z)` for every vertex `v` of O* and every
/// angle, where `z` is the first hit of the ray from `v` pointing opposite
/// to the laser. Rays that run along an edge, enter an obstacle, or leave
/// the workspace at `v` are omitted.
pub fn generate_partition_segments(
    workspace: &WorkspaceSpec,
    angles: &[f64],
    options: PartitionOptions,
) -> Vec<Segment> {
    let mut origins: Vec<Point2> = Vec::new();
    if options.include_boundary_vertices {
        origins.extend_from_slice(workspace.boundary().vertices());
    }
    for o in workspace.obstacles() {
        origins.extend_from_slice(o.vertices());
    }
    let mut out = Vec::new();
    for &v in &origins {
        for &theta in angles {
            let dir = direction(theta + std::f64::consts::PI);
            if let Some(m) = entry_margin(workspace.boundary(), v, dir) {
                if m <= ANGLE_TOL {
                    continue;
                }
            }
            let blocked = workspace.obstacles().iter().any(|o| {
                entry_margin(o, v, dir).is_some_and(|m| m >= -ANGLE_TOL)
            });
            if blocked {
                continue;
            }
            let Some(hit) = cast_ray(v, dir, workspace) else {
                continue;
            };
            // Along the ray rather than on the hit edge, so axis-parallel
            // rays stay exactly axis-parallel.
            let q = v + dir * hit.distance;
            if q.dist(v) > COORD_TOL {
                out.push(Segment { p: v, q });
            }
        }
    }
    out
}

/// Snaps endpoints to shared nodes and removes duplicate segments
/// (including reversed copies).
fn dedup_segments(segments: impl IntoIterator<Item = Segment>) -> Vec<Segment> {
    let mut snap = Snapper::new(COORD_TOL);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for s in segments {
        let a = snap.snap(s.p);
        let b = snap.snap(s.q);
        if a == b {
            continue;
        }
        if seen.insert((a.min(b), a.max(b))) {
            out.push(Segment {
                p: snap.points[a],
                q: snap.points[b],
            });
        }
    }
    out
}

/// Bounded face rings of the arrangement of `segments`.
fn faces_of(segments: Vec<Segment>, expected_area: f64) -> Result<Vec<Vec<Point2>>, GeometryError> {
    let sub = build_planar_subdivision(&segments);
    let (cycles, negative) = trace_cycles(&sub);
    if negative != 1 {
        return Err(GeometryError::InconsistentSubdivision(format!(
            "expected one outer boundary cycle, found {negative}"
        )));
    }
    let mut faces = Vec::new();
    let mut total = 0.0;
    for (cyc, area) in cycles {
        if area > 0.0 {
            total += area;
            faces.push(cyc.into_iter().map(|i| sub.nodes[i]).collect::<Vec<_>>());
        }
    }
    if (total - expected_area).abs() > 1e-9 * expected_area {
        return Err(GeometryError::InconsistentSubdivision(format!(
            "face areas sum to {total}, workspace area is {expected_area}"
        )));
    }
    Ok(faces)
}

/// Even-odd point-in-ring test.
pub(crate) fn ring_contains(ring: &[Point2], z: Point2) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.y > z.y) != (b.y > z.y) {
            let x = a.x + (z.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if z.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn ring_distance(ring: &[Point2], z: Point2) -> f64 {
    (0..ring.len())
        .map(|i| Segment { p: ring[i], q: ring[(i + 1) % ring.len()] }.distance_to(z))
        .fold(f64::INFINITY, f64::min)
}

fn classify(workspace: &WorkspaceSpec, z: Point2) -> RegionKind {
    if workspace.obstacles().iter().any(|o| o.contains(z, 0.0)) {
        RegionKind::ObstacleInterior
    } else {
        RegionKind::Free
    }
}

/// Imaging-adapted partition: the fine partition from all lasers and the
/// coarse (aggregate) partition from the primary lasers.
pub fn wksp_partition(
    workspace: &WorkspaceSpec,
    lidar: &LidarSpec,
    options: PartitionOptions,
) -> Result<PartitionResult, GeometryError> {
    let edges: Vec<Segment> = workspace.edges().map(|(_, s)| s).collect();
    let fine_g = generate_partition_segments(workspace, &lidar.angles(), options);
    let coarse_g = generate_partition_segments(workspace, &lidar.primary_angles(), options);
    let area_w = workspace.boundary().area();
    let segment_counts = (fine_g.len(), coarse_g.len());

    let fine_faces = faces_of(dedup_segments(edges.iter().copied().chain(fine_g)), area_w)?;
    let mut fine_regions = Vec::with_capacity(fine_faces.len());
    for ring in fine_faces {
        let ring_area = signed_area(&ring);
        match convex_hull(&ring) {
            Ok(h) if (h.area() - ring_area).abs() <= 1e-9 * ring_area.max(1e-12) => fine_regions.push(h),
            Ok(_) => fine_regions.extend(convex_decomposition(&ring)?),
            // Slivers thinner than the snapping tolerance.
            Err(GeometryError::DegenerateInput) => {}
            Err(e) => return Err(e),
        }
    }
    let region_kind: Vec<RegionKind> =
        fine_regions.iter().map(|r| classify(workspace, r.centroid())).collect();

    let coarse_faces = faces_of(dedup_segments(edges.iter().copied().chain(coarse_g)), area_w)?;
    let mut aggregate_regions = Vec::with_capacity(coarse_faces.len());
    for ring in coarse_faces {
        let outline = simplify_ring(ring);
        let Ok(hull) = convex_hull(&outline) else {
            continue;
        };
        let inner = if (hull.area() - signed_area(&outline)).abs() <= 1e-9 * hull.area() {
            hull.centroid()
        } else {
            convex_decomposition(&outline)?[0].centroid()
        };
        aggregate_regions.push(AggregateRegion {
            kind: classify(workspace, inner),
            outline,
            hull,
        });
    }

    let boxes: Vec<(Point2, Point2)> = aggregate_regions.iter().map(|a| bbox_of(&a.outline)).collect();
    let fine_to_aggregate = fine_regions
        .iter()
        .map(|r| {
            let c = r.centroid();
            let hit = aggregate_regions.iter().enumerate().position(|(i, a)| {
                let (lo, hi) = boxes[i];
                c.x >= lo.x && c.x <= hi.x && c.y >= lo.y && c.y <= hi.y && ring_contains(&a.outline, c)
            });
            hit.unwrap_or_else(|| {
                (0..aggregate_regions.len())
                    .min_by(|&a, &b| {
                        ring_distance(&aggregate_regions[a].outline, c)
                            .total_cmp(&ring_distance(&aggregate_regions[b].outline, c))
                    })
                    .unwrap_or(0)
            })
        })
        .collect();

    Ok(PartitionResult {
        fine_regions,
        region_kind,
        aggregate_regions,
        fine_to_aggregate,
        segment_counts,
    })
}
