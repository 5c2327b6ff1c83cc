//! Reference implementations used as test oracles. Each one is written
//! directly from the definitions, without sharing code paths with the
//! library beyond the plain data types.

#![allow(dead_code)]

use lidarsafe::geometry::{ConvexPolygon, Point2, Segment, WorkspaceSpec};
use lidarsafe::network::NeuralNetwork;
use rand::Rng;

pub fn cross(a: Point2, b: Point2) -> f64 {
    a.x * b.y - a.y * b.x
}

fn sub(a: Point2, b: Point2) -> Point2 {
    Point2::new(a.x - b.x, a.y - b.y)
}

/// Every edge of the workspace with a stable index: boundary first, then
/// obstacles in order.
pub fn all_edges(ws: &WorkspaceSpec) -> Vec<Segment> {
    let mut out: Vec<Segment> = ws.boundary().edges().collect();
    for o in ws.obstacles() {
        out.extend(o.edges());
    }
    out
}

/// First hit of the ray `origin + r·(cos θ, sin θ)`, `r > 1e-12`, against
/// `edges`: `(edge index, hit point, r)`.
pub fn cast(origin: Point2, angle: f64, edges: &[Segment]) -> Option<(usize, Point2, f64)> {
    let u = Point2::new(angle.cos(), angle.sin());
    let mut best: Option<(usize, Point2, f64)> = None;
    for (i, e) in edges.iter().enumerate() {
        let d = sub(e.q, e.p);
        let den = cross(u, d);
        if den.abs() < 1e-15 * d.norm() {
            continue;
        }
        let w = sub(e.p, origin);
        let r = cross(w, d) / den;
        let s = cross(w, u) / den;
        if r > 1e-12 && (-1e-12..=1.0 + 1e-12).contains(&s) && best.is_none_or(|b| r < b.2) {
            best = Some((i, Point2::new(origin.x + r * u.x, origin.y + r * u.y), r));
        }
    }
    best
}

/// `(r_i cos θ_i, r_i sin θ_i)` stacked over `angles`.
pub fn image(origin: Point2, angles: &[f64], edges: &[Segment]) -> Option<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * angles.len());
    for &a in angles {
        let (_, p, _) = cast(origin, a, edges)?;
        out.push(p.x - origin.x);
        out.push(p.y - origin.y);
    }
    Some(out)
}

pub fn point_segment_distance(z: Point2, s: &Segment) -> f64 {
    let d = sub(s.q, s.p);
    let t = (sub(z, s.p).dot(d) / d.dot(d)).clamp(0.0, 1.0);
    Point2::new(s.p.x + t * d.x - z.x, s.p.y + t * d.y - z.y).norm()
}

/// Uniform point in the interior of a convex polygon (fan triangulation).
pub fn sample_in<R: Rng + ?Sized>(rng: &mut R, poly: &[Point2]) -> Point2 {
    let v0 = poly[0];
    let areas: Vec<f64> = (1..poly.len() - 1)
        .map(|i| 0.5 * cross(sub(poly[i], v0), sub(poly[i + 1], v0)).abs())
        .collect();
    let total: f64 = areas.iter().sum();
    let mut pick = rng.gen_range(0.0..total);
    let mut k = 0;
    while k + 1 < areas.len() && pick >= areas[k] {
        pick -= areas[k];
        k += 1;
    }
    let (b, c) = (poly[k + 1], poly[k + 2]);
    let (mut r1, mut r2): (f64, f64) = (rng.gen_range(1e-6..1.0), rng.gen_range(1e-6..1.0));
    if r1 + r2 >= 1.0 {
        r1 = 1.0 - r1;
        r2 = 1.0 - r2;
    }
    let r0 = 1.0 - r1 - r2;
    Point2::new(r0 * v0.x + r1 * b.x + r2 * c.x, r0 * v0.y + r1 * b.y + r2 * c.y)
}

/// Half-plane `a·z + c ≥ 0`.
#[derive(Debug, Clone, Copy)]
pub struct HalfPlane {
    pub a: [f64; 2],
    pub c: f64,
}

impl HalfPlane {
    fn value(&self, z: Point2) -> f64 {
        self.a[0] * z.x + self.a[1] * z.y + self.c
    }
}

/// Interior side of every edge of a counterclockwise polygon.
pub fn polygon_halfplanes(poly: &[Point2]) -> Vec<HalfPlane> {
    (0..poly.len())
        .map(|i| {
            let p = poly[i];
            let q = poly[(i + 1) % poly.len()];
            // cross(q - p, z - p) >= 0
            let d = sub(q, p);
            HalfPlane {
                a: [-d.y, d.x],
                c: d.y * p.x - d.x * p.y,
            }
        })
        .collect()
}

/// Sutherland–Hodgman clip of a convex polygon (possibly degenerate) by a
/// half-plane relaxed by `tol` in distance.
pub fn clip(poly: &[Point2], h: HalfPlane, tol: f64) -> Vec<Point2> {
    let n = (h.a[0] * h.a[0] + h.a[1] * h.a[1]).sqrt();
    if n < 1e-12 {
        return if h.c >= -tol { poly.to_vec() } else { Vec::new() };
    }
    let val = |z: Point2| h.value(z) / n + tol;
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        let (vp, vq) = (val(p), val(q));
        if vp >= 0.0 {
            out.push(p);
        }
        if (vp >= 0.0) != (vq >= 0.0) {
            let t = vp / (vp - vq);
            out.push(Point2::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)));
        }
    }
    out
}

pub fn area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    0.5 * (0..n).map(|i| cross(poly[i], poly[(i + 1) % n])).sum::<f64>()
}

/// Area of the intersection of two convex counterclockwise polygons.
pub fn intersection_area(a: &[Point2], b: &[Point2]) -> f64 {
    let mut p = a.to_vec();
    for h in polygon_halfplanes(b) {
        p = clip(&p, h, 0.0);
        if p.is_empty() {
            return 0.0;
        }
    }
    area(&p)
}

/// Affine scalar `a·ζ + c` of the planar position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub a: [f64; 2],
    pub c: f64,
}

impl Affine {
    pub const ZERO: Affine = Affine { a: [0.0, 0.0], c: 0.0 };

    pub fn eval(&self, z: Point2) -> f64 {
        self.a[0] * z.x + self.a[1] * z.y + self.c
    }

    fn scale(self, k: f64) -> Affine {
        Affine {
            a: [k * self.a[0], k * self.a[1]],
            c: k * self.c,
        }
    }

    fn add(self, o: Affine) -> Affine {
        Affine {
            a: [self.a[0] + o.a[0], self.a[1] + o.a[1]],
            c: self.c + o.c,
        }
    }

    pub fn ge0(self) -> HalfPlane {
        HalfPlane { a: self.a, c: self.c }
    }

    pub fn le0(self) -> HalfPlane {
        HalfPlane {
            a: [-self.a[0], -self.a[1]],
            c: -self.c,
        }
    }
}

/// LiDAR image over a region as affine functions of the position, from
/// the edge each laser hits at `probe`: with edge line `e0 + s·e`, the range
/// is `r(ζ) = cross(e0 − ζ, e) / cross(u, e)`.
pub fn affine_image(probe: Point2, angles: &[f64], edges: &[Segment]) -> Vec<Affine> {
    let mut out = Vec::with_capacity(2 * angles.len());
    for &theta in angles {
        let (i, _, _) = cast(probe, theta, edges).expect("probe sees an edge");
        let (e0, e) = (edges[i].p, sub(edges[i].q, edges[i].p));
        let u = Point2::new(theta.cos(), theta.sin());
        let den = cross(u, e);
        // cross(e0 - ζ, e) = cross(e0, e) - ζx e_y + ζy e_x
        let r = Affine {
            a: [-e.y / den, e.x / den],
            c: cross(e0, e) / den,
        };
        out.push(r.scale(u.x));
        out.push(r.scale(u.y));
    }
    out
}

/// Pre-activation sign constraints of the phase pattern `phases` and the
/// resulting affine network output, for affine inputs `d`.
pub fn phase_constraints(net: &NeuralNetwork, d: &[Affine], phases: &[bool]) -> (Vec<HalfPlane>, Vec<Affine>) {
    let mut h: Vec<Affine> = d.to_vec();
    let mut constraints = Vec::new();
    let mut k = 0;
    let last = net.layers.len() - 1;
    for (l, layer) in net.layers.iter().enumerate() {
        let t: Vec<Affine> = layer
            .weights
            .iter()
            .zip(&layer.bias)
            .map(|(row, &b)| {
                row.iter()
                    .zip(&h)
                    .fold(Affine { a: [0.0, 0.0], c: b }, |acc, (&w, x)| acc.add(x.scale(w)))
            })
            .collect();
        if l == last {
            return (constraints, t);
        }
        h = t
            .into_iter()
            .map(|tj| {
                let on = phases[k];
                k += 1;
                if on {
                    constraints.push(tj.ge0());
                    tj
                } else {
                    constraints.push(tj.le0());
                    Affine::ZERO
                }
            })
            .collect();
    }
    unreachable!("network has an output layer")
}

/// `A ζ + B u` for planar dynamics with affine `u`.
pub fn successor(a: &[Vec<f64>], b: &[Vec<f64>], u: &[Affine]) -> [Affine; 2] {
    let mut out = [Affine::ZERO; 2];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = Affine {
            a: [a[i][0], a[i][1]],
            c: 0.0,
        };
        for (j, uj) in u.iter().enumerate() {
            acc = acc.add(uj.scale(b[i][j]));
        }
        *o = acc;
    }
    out
}

/// Half-planes requiring the affine point `p(ζ)` to lie in `poly`.
pub fn pullback(poly: &[Point2], p: &[Affine; 2]) -> Vec<HalfPlane> {
    polygon_halfplanes(poly)
        .into_iter()
        .map(|h| {
            let v = p[0].scale(h.a[0]).add(p[1].scale(h.a[1])).add(Affine {
                a: [0.0, 0.0],
                c: h.c,
            });
            v.ge0()
        })
        .collect()
}

pub fn feasible(region: &[Point2], constraints: &[HalfPlane], tol: f64) -> bool {
    let mut p = region.to_vec();
    for &h in constraints {
        p = clip(&p, h, tol);
        if p.is_empty() {
            return false;
        }
    }
    true
}

/// All `2^m` phase patterns, ReLU 0 as the most significant position.
pub fn all_phases(m: usize) -> Vec<Vec<bool>> {
    (0..1u64 << m)
        .map(|bits| (0..m).map(|j| bits >> (m - 1 - j) & 1 == 1).collect())
        .collect()
}

/// Every pairwise intersection of the segments: crossing points, touching
/// points and the endpoints of collinear overlaps. Points closer than `tol`
/// are merged, with the union of their segments.
pub fn naive_intersections(segs: &[Segment], tol: f64) -> Vec<(Point2, Vec<usize>)> {
    let mut raw: Vec<(Point2, usize, usize)> = Vec::new();
    for i in 0..segs.len() {
        for j in i + 1..segs.len() {
            for p in pair_points(&segs[i], &segs[j], tol) {
                raw.push((p, i, j));
            }
        }
    }
    let mut out: Vec<(Point2, Vec<usize>)> = Vec::new();
    for (p, i, j) in raw {
        match out.iter_mut().find(|(q, _)| q.dist(p) <= tol) {
            Some((_, s)) => s.extend([i, j]),
            None => out.push((p, vec![i, j])),
        }
    }
    for (_, s) in &mut out {
        s.sort_unstable();
        s.dedup();
    }
    out
}

/// Endpoints lying on the other segment (touchings and overlap ends);
/// otherwise the crossing of two segments that strictly straddle each
/// other's line.
fn pair_points(a: &Segment, b: &Segment, tol: f64) -> Vec<Point2> {
    let mut pts: Vec<Point2> = Vec::new();
    for (p, other) in [(a.p, b), (a.q, b), (b.p, a), (b.q, a)] {
        if point_segment_distance(p, other) <= tol && pts.iter().all(|q| q.dist(p) > tol) {
            pts.push(p);
        }
    }
    if !pts.is_empty() {
        return pts;
    }
    let r = sub(a.q, a.p);
    let s = sub(b.q, b.p);
    let side = |o: Point2, d: Point2, z: Point2| cross(d, sub(z, o)).signum();
    let straddle_a = side(a.p, r, b.p) * side(a.p, r, b.q) < 0.0;
    let straddle_b = side(b.p, s, a.p) * side(b.p, s, a.q) < 0.0;
    if !(straddle_a && straddle_b) {
        return Vec::new();
    }
    let t = cross(sub(b.p, a.p), s) / cross(r, s);
    let p = Point2::new(a.p.x + t * r.x, a.p.y + t * r.y);
    // Straddle signs of nearly collinear pieces are rounding noise.
    if point_segment_distance(p, a) <= tol && point_segment_distance(p, b) <= tol {
        vec![p]
    } else {
        Vec::new()
    }
}

/// Counterclockwise hull by gift wrapping (Jarvis march), starting at the
/// lowest-then-leftmost point; collinear points are skipped.
pub fn gift_wrap(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    let start = *pts
        .iter()
        .min_by(|a, b| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)))
        .expect("nonempty");
    let mut hull = vec![start];
    let mut cur = start;
    loop {
        let mut next = if pts[0] == cur { pts[1] } else { pts[0] };
        for &p in &pts {
            if p == cur {
                continue;
            }
            let c = cross(sub(next, cur), sub(p, cur));
            // p is clockwise of next, or collinear and farther.
            if c < 0.0 || (c == 0.0 && cur.dist(p) > cur.dist(next)) {
                next = p;
            }
        }
        if next == start {
            break;
        }
        hull.push(next);
        cur = next;
        if hull.len() > pts.len() {
            panic!("gift wrapping did not close");
        }
    }
    hull
}

/// Rotates a ring so that it starts at its lowest-then-leftmost vertex.
pub fn canonical_ring(ring: &[Point2]) -> Vec<Point2> {
    let k = (0..ring.len())
        .min_by(|&i, &j| ring[i].y.total_cmp(&ring[j].y).then(ring[i].x.total_cmp(&ring[j].x)))
        .expect("nonempty");
    ring[k..].iter().chain(&ring[..k]).copied().collect()
}

/// States that can reach an initially unsafe state, by forward search
/// from each state separately.
pub fn reach_unsafe(successors: &[Vec<usize>], unsafe0: &[bool]) -> Vec<bool> {
    let n = successors.len();
    (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(v) = stack.pop() {
                if unsafe0[v] {
                    return true;
                }
                for &t in &successors[v] {
                    if !seen[t] {
                        seen[t] = true;
                        stack.push(t);
                    }
                }
            }
            false
        })
        .collect()
}

pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> ConvexPolygon {
    ConvexPolygon::rectangle(x0, y0, x1, y1).expect("rectangle")
}

/// `[0, 8]²` with unit obstacles at `[2, 3]²` and `[5, 6]²`.
pub fn two_box_workspace() -> WorkspaceSpec {
    WorkspaceSpec::new(rect(0.0, 0.0, 8.0, 8.0), vec![rect(2.0, 2.0, 3.0, 3.0), rect(5.0, 5.0, 6.0, 6.0)])
        .expect("workspace")
}
pub mod cases;
