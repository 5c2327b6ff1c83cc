use super::{orient2d, signed_area, simplify_ring, ConvexPolygon, GeometryError, Orientation, Point2};

/// Counterclockwise convex hull (monotone chain); collinear boundary points
/// are dropped.
pub fn convex_hull(points: &[Point2]) -> Result<ConvexPolygon, GeometryError> {
    if points.iter().any(|p| !p.is_finite()) {
        return Err(GeometryError::NonFinite("hull input"));
    }
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return Err(GeometryError::DegenerateInput);
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && orient2d(hull[hull.len() - 2], hull[hull.len() - 1], p)
                    != Orientation::CounterClockwise
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return Err(GeometryError::DegenerateInput);
    }
    ConvexPolygon::new(hull).map_err(|_| GeometryError::DegenerateInput)
}

/// Splits a simple counterclockwise polygon into convex pieces by ear
/// clipping followed by greedy diagonal removal.
pub fn convex_decomposition(ring: &[Point2]) -> Result<Vec<ConvexPolygon>, GeometryError> {
    let mut v = simplify_ring(ring.to_vec());
    if v.len() < 3 {
        return Err(GeometryError::TooFewVertices(v.len()));
    }
    if signed_area(&v) < 0.0 {
        v.reverse();
    }
    if let Ok(p) = ConvexPolygon::new(v.clone()) {
        return Ok(vec![p]);
    }
    let mut pieces: Vec<Vec<usize>> = ear_clip(&v)?.into_iter().map(|t| t.to_vec()).collect();
    loop {
        let mut merged = false;
        'outer: for i in 0..pieces.len() {
            for j in i + 1..pieces.len() {
                if let Some(m) = merge_if_convex(&pieces[i], &pieces[j], &v) {
                    pieces[i] = m;
                    pieces.swap_remove(j);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }
    pieces
        .into_iter()
        .map(|idx| ConvexPolygon::new(idx.into_iter().map(|i| v[i]).collect()))
        .collect()
}

fn ear_clip(v: &[Point2]) -> Result<Vec<[usize; 3]>, GeometryError> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    let mut tris = Vec::with_capacity(v.len() - 2);
    while idx.len() > 3 {
        let n = idx.len();
        let mut clipped = false;
        for k in 0..n {
            let (a, b, c) = (idx[(k + n - 1) % n], idx[k], idx[(k + 1) % n]);
            if orient2d(v[a], v[b], v[c]) != Orientation::CounterClockwise {
                continue;
            }
            let blocked = idx.iter().any(|&m| {
                m != a && m != b && m != c && in_triangle_closed(v[m], v[a], v[b], v[c])
            });
            if !blocked {
                tris.push([a, b, c]);
                idx.remove(k);
                clipped = true;
                break;
            }
        }
        if !clipped {
            return Err(GeometryError::InconsistentSubdivision(
                "polygon is not simple; ear clipping stalled".into(),
            ));
        }
    }
    tris.push([idx[0], idx[1], idx[2]]);
    Ok(tris)
}

fn in_triangle_closed(p: Point2, a: Point2, b: Point2, c: Point2) -> bool {
    orient2d(a, b, p) != Orientation::Clockwise
        && orient2d(b, c, p) != Orientation::Clockwise
        && orient2d(c, a, p) != Orientation::Clockwise
}

fn merge_if_convex(p: &[usize], q: &[usize], v: &[Point2]) -> Option<Vec<usize>> {
    let np = p.len();
    let nq = q.len();
    for i in 0..np {
        let (a, b) = (p[i], p[(i + 1) % np]);
        let Some(j) = (0..nq).find(|&j| q[j] == b && q[(j + 1) % nq] == a) else {
            continue;
        };
        // p walks a..b, then q continues from a around back to b.
        let mut ring = Vec::with_capacity(np + nq - 2);
        for k in 0..np {
            ring.push(p[(i + 1 + k) % np]);
        }
        for k in 2..nq {
            ring.push(q[(j + k) % nq]);
        }
        let m = ring.len();
        let convex = (0..m).all(|k| {
            orient2d(v[ring[(k + m - 1) % m]], v[ring[k]], v[ring[(k + 1) % m]])
                != Orientation::Clockwise
        });
        return convex.then_some(ring);
    }
    None
}
