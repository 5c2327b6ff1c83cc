use super::{EdgeId, GeometryError, Point2, Segment, WorkspaceSpec, ANGLE_TOL, HIT_MIN_DIST};

/// Parameter slack when deciding whether a ray meets a segment at its endpoint.
const SEGMENT_PARAM_EPS: f64 = 1e-12;

/// Unit vector for `angle`, with components that are zero up to rounding
/// snapped to exactly zero so axis-aligned rays stay axis-aligned.
pub fn direction(angle: f64) -> Point2 {
    let (s, c) = angle.sin_cos();
    if c.abs() < 1e-15 {
        Point2::new(0.0, s.signum())
    } else if s.abs() < 1e-15 {
        Point2::new(c.signum(), 0.0)
    } else {
        Point2::new(c, s)
    }
}

/// Ray parameter and point where the ray from `origin` along unit vector `u`
/// meets `seg`.
pub(crate) fn ray_segment_param(origin: Point2, u: Point2, seg: &Segment) -> Option<(f64, Point2)> {
    let e = seg.q - seg.p;
    let elen = e.norm();
    let w = seg.p - origin;
    let denom = u.cross(e);
    if denom.abs() <= ANGLE_TOL * elen {
        if w.cross(e).abs() / elen > HIT_MIN_DIST * w.norm().max(1.0) {
            return None;
        }
        let tp = w.dot(u);
        let tq = (seg.q - origin).dot(u);
        let (lo, pt) = if tp <= tq { (tp, seg.p) } else { (tq, seg.q) };
        return (lo > HIT_MIN_DIST).then_some((lo, pt));
    }
    let t = w.cross(e) / denom;
    let s = w.cross(u) / denom;
    if t < 0.0 || s < -SEGMENT_PARAM_EPS || s > 1.0 + SEGMENT_PARAM_EPS {
        return None;
    }
    Some((t, seg.p.lerp(seg.q, s.clamp(0.0, 1.0))))
}

/// Nearest point of `seg` on the closed ray from `origin` at `angle`.
///
/// A collinear overlap yields the nearest overlap point at positive
/// distance; an origin lying inside the overlap yields `None`.
pub fn ray_segment_intersection(origin: Point2, angle: f64, seg: &Segment) -> Option<Point2> {
    ray_segment_param(origin, direction(angle), seg).map(|(_, p)| p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub point: Point2,
    pub edge: EdgeId,
    pub distance: f64,
}

/// Casts along unit direction `u` against every edge of O*; hits closer than
/// [`HIT_MIN_DIST`] are ignored. Ties go to the lowest edge id.
pub fn cast_ray(origin: Point2, u: Point2, workspace: &WorkspaceSpec) -> Option<RayHit> {
    let mut best: Option<RayHit> = None;
    for (id, seg) in workspace.edges() {
        let Some((t, point)) = ray_segment_param(origin, u, &seg) else {
            continue;
        };
        if t <= HIT_MIN_DIST {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => t < b.distance - HIT_MIN_DIST * b.distance.max(1.0),
        };
        if better {
            best = Some(RayHit {
                point,
                edge: id,
                distance: t,
            });
        }
    }
    best
}

/// First obstacle or boundary hit of the laser at `angle` from `origin`.
pub fn first_hit(origin: Point2, angle: f64, workspace: &WorkspaceSpec) -> Result<RayHit, GeometryError> {
    cast_ray(origin, direction(angle), workspace).ok_or(GeometryError::NoHit { origin, angle })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ConvexPolygon, Owner};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn seg(a: (f64, f64), b: (f64, f64)) -> Segment {
        Segment::new(Point2::new(a.0, a.1), Point2::new(b.0, b.1)).unwrap()
    }

    fn example_workspace() -> WorkspaceSpec {
        WorkspaceSpec::new(
            ConvexPolygon::rectangle(0.0, 0.0, 4.0, 4.0).unwrap(),
            vec![ConvexPolygon::rectangle(1.0, 1.0, 2.0, 2.0).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn axis_aligned_crossing() {
        let o = Point2::new(0.0, 0.0);
        assert_eq!(
            ray_segment_intersection(o, 0.0, &seg((2.0, -1.0), (2.0, 1.0))),
            Some(Point2::new(2.0, 0.0))
        );
    }

    #[test]
    fn diagonal_crossing() {
        let o = Point2::new(0.0, 0.0);
        let p = ray_segment_intersection(o, FRAC_PI_4, &seg((1.0, 0.0), (0.0, 1.0))).unwrap();
        assert!(p.dist(Point2::new(0.5, 0.5)) < 1e-15);
    }

    #[test]
    fn segment_behind_ray() {
        let o = Point2::new(0.0, 0.0);
        assert_eq!(ray_segment_intersection(o, PI, &seg((1.0, -1.0), (1.0, 1.0))), None);
    }

    #[test]
    fn collinear_overlap_returns_nearest_endpoint() {
        let o = Point2::new(0.0, 0.0);
        assert_eq!(
            ray_segment_intersection(o, 0.0, &seg((3.0, 0.0), (2.0, 0.0))),
            Some(Point2::new(2.0, 0.0))
        );
        assert_eq!(ray_segment_intersection(o, 0.0, &seg((-1.0, 0.0), (2.0, 0.0))), None);
    }

    #[test]
    fn first_hit_reaches_boundary() {
        let ws = example_workspace();
        let h = first_hit(Point2::new(0.5, 0.5), 0.0, &ws).unwrap();
        assert_eq!(h.point, Point2::new(4.0, 0.5));
        assert_eq!(h.edge, EdgeId { owner: Owner::Boundary, index: 1 });
    }

    #[test]
    fn first_hit_stops_at_obstacle() {
        let ws = example_workspace();
        let h = first_hit(Point2::new(0.5, 1.5), 0.0, &ws).unwrap();
        assert_eq!(h.point, Point2::new(1.0, 1.5));
        assert_eq!(h.edge, EdgeId { owner: Owner::Obstacle(0), index: 3 });
    }

    #[test]
    fn first_hit_straight_down() {
        let ws = example_workspace();
        let h = first_hit(Point2::new(0.5, 0.5), 3.0 * FRAC_PI_2, &ws).unwrap();
        assert_eq!(h.point, Point2::new(0.5, 0.0));
        assert_eq!(h.edge, EdgeId { owner: Owner::Boundary, index: 0 });
    }

    #[test]
    fn vertex_tie_goes_to_lowest_edge_id() {
        let ws = example_workspace();
        // Through the obstacle corner (1,1) exactly.
        let h = first_hit(Point2::new(0.5, 0.5), FRAC_PI_4, &ws).unwrap();
        assert!(h.point.dist(Point2::new(1.0, 1.0)) < 1e-12);
        assert_eq!(h.edge, EdgeId { owner: Owner::Obstacle(0), index: 0 });
    }

    #[test]
    fn outside_origin_has_no_hit() {
        let ws = example_workspace();
        assert!(first_hit(Point2::new(5.0, 5.0), 0.0, &ws).is_err());
    }
}
