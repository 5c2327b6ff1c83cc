//! Per-region affine LiDAR maps `d_k(ζ) = P_k ζ + Q_k` and the brute-force
//! ray-casting image they are checked against.

use crate::geometry::{
    cast_ray, direction, first_hit, ConvexPolygon, EdgeId, GeometryError, LidarSpec,
    PartitionResult, Point2, RegionKind, WorkspaceSpec, COORD_TOL,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum inward offset applied to region vertices before casting from them.
pub const VERTEX_OFFSET: f64 = 1e-9;
/// Inward offset as a fraction of the vertex-to-centroid distance; keeps the
/// probe off the edges of sliver regions.
pub const VERTEX_FRACTION: f64 = 1e-6;
/// Tolerance of the region membership test in [`lidar_image_affine`].
pub const REGION_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImagingError {
    #[error("region is not imaging-adapted: laser at angle {angle} hits {expected} from the centroid but {found} from vertex {vertex}")]
    NotImagingAdapted {
        angle: f64,
        expected: EdgeId,
        found: String,
        vertex: Point2,
    },
    #[error("laser at angle {angle} is parallel to its hit edge {edge}")]
    ParallelDegenerate { angle: f64, edge: EdgeId },
    #[error("position {0} is outside the region")]
    OutOfRegion(Point2),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Portion `(a, b)` of workspace edge `source` seen by one laser from a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitEdge {
    pub a: Point2,
    pub b: Point2,
    pub source: EdgeId,
}

/// Affine image of one laser over one region. `ν = nu_a·ζ + nu_b` is the
/// position of the hit point along `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserMap {
    pub angle: f64,
    pub edge: HitEdge,
    #[serde(rename = "P")]
    pub p: [[f64; 2]; 2],
    #[serde(rename = "Q")]
    pub q: [f64; 2],
    pub nu_a: [f64; 2],
    pub nu_b: f64,
}

impl LaserMap {
    pub fn apply(&self, z: Point2) -> Point2 {
        Point2::new(
            self.p[0][0] * z.x + self.p[0][1] * z.y + self.q[0],
            self.p[1][0] * z.x + self.p[1][1] * z.y + self.q[1],
        )
    }

    pub fn nu(&self, z: Point2) -> f64 {
        self.nu_a[0] * z.x + self.nu_a[1] * z.y + self.nu_b
    }
}

/// Stacked affine LiDAR map of a region, lasers in [`LidarSpec`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineImagingMap {
    pub region: ConvexPolygon,
    pub lasers: Vec<LaserMap>,
}

impl AffineImagingMap {
    pub fn output_dim(&self) -> usize {
        2 * self.lasers.len()
    }

    /// Rows of the stacked map: `d = P ζ + Q` with `P` of shape `2N × 2`.
    pub fn stacked(&self) -> (Vec<[f64; 2]>, Vec<f64>) {
        let mut p = Vec::with_capacity(self.output_dim());
        let mut q = Vec::with_capacity(self.output_dim());
        for l in &self.lasers {
            p.push(l.p[0]);
            p.push(l.p[1]);
            q.push(l.q[0]);
            q.push(l.q[1]);
        }
        (p, q)
    }
}

fn inward(v: Point2, c: Point2) -> Point2 {
    let d = c - v;
    let n = d.norm();
    if n <= 2.0 * VERTEX_OFFSET {
        c
    } else {
        v + d * (VERTEX_OFFSET / n).max(VERTEX_FRACTION).min(0.5)
    }
}

/// Edge hit by the laser at `angle` from every point of `region`.
///
/// The edge identity comes from a cast at the centroid; `(a, b)` spans the
/// projections of the region vertices along the laser onto that edge. When
/// the projection has zero length (a sliver region) the whole edge is used.
pub fn hit_edge_for_region(
    region: &ConvexPolygon,
    angle: f64,
    workspace: &WorkspaceSpec,
) -> Result<HitEdge, ImagingError> {
    let u = direction(angle);
    let c = region.centroid();
    let source = first_hit(c, angle, workspace)?.edge;
    for &v in region.vertices() {
        let w = inward(v, c);
        match cast_ray(w, u, workspace) {
            Some(h) if h.edge == source => {}
            other => {
                return Err(ImagingError::NotImagingAdapted {
                    angle,
                    expected: source,
                    found: other.map_or_else(|| "nothing".to_string(), |h| h.edge.to_string()),
                    vertex: v,
                })
            }
        }
    }
    let seg = workspace.edge(source);
    let e = seg.q - seg.p;
    let denom = e.cross(u);
    if denom.abs() <= 1e-12 * e.norm() {
        return Err(ImagingError::ParallelDegenerate { angle, edge: source });
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in region.vertices() {
        let s = (v - seg.p).cross(u) / denom;
        lo = lo.min(s);
        hi = hi.max(s);
    }
    let (lo, hi) = (lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0));
    let (a, b) = if (hi - lo) * e.norm() > COORD_TOL {
        (seg.p + e * lo, seg.p + e * hi)
    } else {
        (seg.p, seg.q)
    };
    Ok(HitEdge { a, b, source })
}

/// Solves `ζ + r·u = a + ν·(b − a)` for `ν` as an affine function of `ζ` and
/// returns `d = a + ν·(b − a) − ζ` as `P ζ + Q`.
pub fn imaging_map(angle: f64, edge: HitEdge) -> Result<LaserMap, ImagingError> {
    let u = direction(angle);
    let e = edge.b - edge.a;
    let d = u.cross(e);
    if d.abs() <= 1e-12 * e.norm() {
        return Err(ImagingError::ParallelDegenerate {
            angle,
            edge: edge.source,
        });
    }
    let nu_a = [-u.y / d, u.x / d];
    let nu_b = edge.a.cross(u) / d;
    let p = [
        [e.x * nu_a[0] - 1.0, e.x * nu_a[1]],
        [e.y * nu_a[0], e.y * nu_a[1] - 1.0],
    ];
    let q = [edge.a.x + nu_b * e.x, edge.a.y + nu_b * e.y];
    Ok(LaserMap {
        angle,
        edge,
        p,
        q,
        nu_a,
        nu_b,
    })
}

/// Affine maps of every laser over `region`.
pub fn region_imaging(
    region: &ConvexPolygon,
    workspace: &WorkspaceSpec,
    lidar: &LidarSpec,
) -> Result<AffineImagingMap, ImagingError> {
    let lasers = lidar
        .angles()
        .into_iter()
        .map(|a| imaging_map(a, hit_edge_for_region(region, a, workspace)?))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AffineImagingMap {
        region: region.clone(),
        lasers,
    })
}

/// Imaging maps of every free fine region; obstacle regions get `None`.
pub fn partition_imaging(
    partition: &PartitionResult,
    workspace: &WorkspaceSpec,
    lidar: &LidarSpec,
) -> Result<Vec<Option<AffineImagingMap>>, ImagingError> {
    partition
        .fine_regions
        .par_iter()
        .zip(partition.region_kind.par_iter())
        .map(|(r, k)| match k {
            RegionKind::Free => region_imaging(r, workspace, lidar).map(Some),
            RegionKind::ObstacleInterior => Ok(None),
        })
        .collect()
}

/// `(d_1x, d_1y, …, d_Nx, d_Ny)` from the affine maps.
pub fn lidar_image_affine(position: Point2, maps: &AffineImagingMap) -> Result<Vec<f64>, ImagingError> {
    if !maps.region.contains(position, REGION_TOL) {
        return Err(ImagingError::OutOfRegion(position));
    }
    Ok(maps
        .lasers
        .iter()
        .flat_map(|l| {
            let d = l.apply(position);
            [d.x, d.y]
        })
        .collect())
}

/// `(r_i cos θ_i, r_i sin θ_i)` stacked over all lasers, `r_i` from ray casting.
pub fn lidar_image_bruteforce(
    position: Point2,
    workspace: &WorkspaceSpec,
    lidar: &LidarSpec,
) -> Result<Vec<f64>, GeometryError> {
    let mut out = Vec::with_capacity(2 * lidar.laser_count());
    for angle in lidar.angles() {
        let h = first_hit(position, angle, workspace)?;
        let u = direction(angle);
        out.push(h.distance * u.x);
        out.push(h.distance * u.y);
    }
    Ok(out)
}
