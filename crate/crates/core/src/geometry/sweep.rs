//! Bentley–Ottmann plane sweep.
//!
//! Ordering uses the sweep frame [`frame`], a fixed rotation whose axes are
//! not parallel to axis-aligned or regularly spaced laser directions, so
//! those segments are never parallel to the sweep line. Segments that are
//! nearly parallel to it anyway stay out of the status structure; their
//! intersections are computed against every segment after the sweep.
//! Events are processed
//! in `(y' desc, x' asc)` order of frame coordinates; all predicates and
//! reported points use the original coordinates. Every point that is
//! produced (segment endpoints and computed crossings) is snapped onto a
//! shared node when it lies within [`COORD_TOL`] of an existing one, and a
//! segment counts as passing through a node when it is within twice that
//! distance. The status structure is a vector kept in left-to-right order
//! just below the sweep line.

use super::{orient2d, Orientation, Point2, Segment, COORD_TOL};
use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

/// A point where two or more segments meet, with every incident segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepIntersection {
    pub point: Point2,
    /// Indices into the input slice, ascending.
    pub segments: Vec<usize>,
}

/// All pairwise intersection points (crossings, touchings and shared
/// endpoints), each reported once, in sweep order.
pub fn plane_sweep_intersections(segments: &[Segment]) -> Vec<SweepIntersection> {
    let out = run_sweep(segments);
    out.events
        .into_iter()
        .filter(|e| e.segments.len() >= 2)
        .map(|e| SweepIntersection {
            point: out.nodes[e.node],
            segments: e.segments,
        })
        .collect()
}

#[derive(Debug, Clone)]
pub(crate) struct NodeEvent {
    pub node: usize,
    pub segments: Vec<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct SweepOutput {
    pub nodes: Vec<Point2>,
    /// One entry per processed node, in sweep order, including nodes touched
    /// by a single segment.
    pub events: Vec<NodeEvent>,
}

pub(crate) fn run_sweep(segments: &[Segment]) -> SweepOutput {
    let mut sweep = Sweep::new(segments);
    sweep.run();
    sweep.add_flat_crossings(segments);
    let Sweep { snap, mut events, .. } = sweep;
    events.sort_by_key(|e| event_key(snap.points[e.node]));
    SweepOutput {
        nodes: snap.points,
        events,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Meet {
    None,
    Point(Point2),
    Overlap(Point2, Point2),
}

/// Tolerant intersection of two closed segments.
fn intersect(a: &Segment, b: &Segment, tol: f64) -> Meet {
    let (alo, ahi) = (
        Point2::new(a.p.x.min(a.q.x), a.p.y.min(a.q.y)),
        Point2::new(a.p.x.max(a.q.x), a.p.y.max(a.q.y)),
    );
    let (blo, bhi) = (
        Point2::new(b.p.x.min(b.q.x), b.p.y.min(b.q.y)),
        Point2::new(b.p.x.max(b.q.x), b.p.y.max(b.q.y)),
    );
    if alo.x > bhi.x + tol || blo.x > ahi.x + tol || alo.y > bhi.y + tol || blo.y > ahi.y + tol {
        return Meet::None;
    }
    let mut touches: Vec<Point2> = Vec::with_capacity(4);
    for (pt, other) in [(a.p, b), (a.q, b), (b.p, a), (b.q, a)] {
        if other.distance_to(pt) <= tol && touches.iter().all(|t| t.dist(pt) > tol) {
            touches.push(pt);
        }
    }
    match touches.len() {
        0 => {}
        1 => return Meet::Point(touches[0]),
        _ => {
            let first = touches[0];
            let far = touches
                .iter()
                .copied()
                .max_by(|x, y| x.dist(first).total_cmp(&y.dist(first)))
                .unwrap();
            return Meet::Overlap(first, far);
        }
    }
    let o1 = orient2d(a.p, a.q, b.p);
    let o2 = orient2d(a.p, a.q, b.q);
    let o3 = orient2d(b.p, b.q, a.p);
    let o4 = orient2d(b.p, b.q, a.q);
    let opposite = |x: Orientation, y: Orientation| {
        x != Orientation::Collinear && y != Orientation::Collinear && x != y
    };
    if !(opposite(o1, o2) && opposite(o3, o4)) {
        return Meet::None;
    }
    let ea = a.q - a.p;
    let eb = b.q - b.p;
    let t = ((b.p - a.p).cross(eb) / ea.cross(eb)).clamp(0.0, 1.0);
    // Rounding must not move the crossing outside either segment's box
    // (it would be swept after an endpoint of a horizontal segment).
    let q = a.p.lerp(a.q, t);
    let (lx, hx) = (alo.x.max(blo.x), ahi.x.min(bhi.x));
    let (ly, hy) = (alo.y.max(blo.y), ahi.y.min(bhi.y));
    Meet::Point(Point2::new(
        if lx <= hx { q.x.clamp(lx, hx) } else { q.x },
        if ly <= hy { q.y.clamp(ly, hy) } else { q.y },
    ))
}

/// Spatial hash that merges points closer than the snapping tolerance.
pub(crate) struct Snapper {
    pub points: Vec<Point2>,
    cells: HashMap<(i64, i64), Vec<usize>>,
    cell: f64,
    tol: f64,
}

impl Snapper {
    pub fn new(tol: f64) -> Self {
        Self {
            points: Vec::new(),
            cells: HashMap::new(),
            cell: tol * 64.0,
            tol,
        }
    }

    fn key(&self, p: Point2) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    pub fn find(&self, p: Point2) -> Option<usize> {
        let (kx, ky) = self.key(p);
        let mut best: Option<(f64, usize)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.cells.get(&(kx + dx, ky + dy)) {
                    for &i in ids {
                        let d = self.points[i].dist(p);
                        if d <= self.tol && best.map_or(true, |(bd, _)| d < bd) {
                            best = Some((d, i));
                        }
                    }
                }
            }
        }
        best.map(|(_, i)| i)
    }

    pub fn insert(&mut self, p: Point2) -> usize {
        let id = self.points.len();
        self.points.push(p);
        let k = self.key(p);
        self.cells.entry(k).or_default().push(id);
        id
    }

    pub fn snap(&mut self, p: Point2) -> usize {
        self.find(p).unwrap_or_else(|| self.insert(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct EventKey(OrdF64, OrdF64);

#[derive(Debug, Clone, Copy)]
struct OrdF64(f64);

impl PartialEq for OrdF64 {
    fn eq(&self, o: &Self) -> bool {
        self.0.total_cmp(&o.0) == Ordering::Equal
    }
}
impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0)
    }
}

/// Cosine and sine of the sweep frame rotation (0.5123 rad). The angle is
/// away from small-integer directions and from multiples of π/N for small N.
const FRAME_COS: f64 = 0.8716193925596574;
const FRAME_SIN: f64 = 0.490183266252464;

/// Coordinates in the sweep frame.
fn frame(p: Point2) -> Point2 {
    Point2::new(FRAME_COS * p.x + FRAME_SIN * p.y, FRAME_COS * p.y - FRAME_SIN * p.x)
}

fn event_key(p: Point2) -> EventKey {
    let f = frame(p);
    // Negate y so ascending key order is y descending; +0.0 folds -0.0.
    EventKey(OrdF64(-f.y + 0.0), OrdF64(f.x + 0.0))
}

/// Segments whose frame `y'` extent is too small for the event order to
/// be reliable.
fn is_flat(a: Point2, b: Point2) -> bool {
    let (fa, fb) = (frame(a), frame(b));
    (fa.y - fb.y).abs() <= FLAT_TOL * (fa.x - fb.x).abs() + 2.0 * COORD_TOL
}

/// Slope (in the sweep frame) below which a segment counts as flat.
const FLAT_TOL: f64 = 1e-7;

/// Frame angle of a direction pointing down from the sweep line, in
/// `[-π, -0]`; directions along the line (rounded either way) map to the
/// ends, so left-to-right order is ascending.
fn below_angle(d: Point2) -> f64 {
    let f = frame(d);
    let y = if f.y >= 0.0 { -0.0 } else { f.y };
    y.atan2(f.x)
}

#[derive(Debug, Clone, Copy)]
struct SweptSegment {
    lower: usize,
    up: Point2,
    lo: Point2,
}

impl SweptSegment {
    fn as_segment(&self) -> Segment {
        Segment {
            p: self.up,
            q: self.lo,
        }
    }
}

struct Sweep {
    segs: Vec<SweptSegment>,
    snap: Snapper,
    queue: BTreeMap<EventKey, usize>,
    upper_at: HashMap<usize, Vec<usize>>,
    lower_at: HashMap<usize, Vec<usize>>,
    point_at: HashMap<usize, Vec<usize>>,
    status: Vec<usize>,
    events: Vec<NodeEvent>,
    event_of: HashMap<usize, usize>,
    /// Degenerate and nearly sweep-parallel segments, kept out of the status.
    flat: Vec<usize>,
    /// Segments whose lower end lies within `contain_tol` above the sweep.
    recent: Vec<usize>,
    contain_tol: f64,
    near_tol: f64,
}

impl Sweep {
    fn new(input: &[Segment]) -> Self {
        let mut snap = Snapper::new(COORD_TOL);
        let mut segs = Vec::with_capacity(input.len());
        let mut upper_at: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut lower_at: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut point_at: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut queue = BTreeMap::new();
        let mut flat = Vec::new();
        for (id, s) in input.iter().enumerate() {
            let a = snap.snap(s.p);
            let b = snap.snap(s.q);
            let (pa, pb) = (snap.points[a], snap.points[b]);
            let (upper, lower) = if event_key(pa) <= event_key(pb) { (a, b) } else { (b, a) };
            segs.push(SweptSegment {
                lower,
                up: snap.points[upper],
                lo: snap.points[lower],
            });
            if upper == lower || is_flat(pa, pb) {
                // Points and segments along the sweep line only mark their
                // endpoints; their crossings are added after the sweep.
                point_at.entry(upper).or_default().push(id);
                point_at.entry(lower).or_default().push(id);
                flat.push(id);
            } else {
                upper_at.entry(upper).or_default().push(id);
                lower_at.entry(lower).or_default().push(id);
            }
            queue.insert(event_key(snap.points[upper]), upper);
            queue.insert(event_key(snap.points[lower]), lower);
        }
        Self {
            segs,
            snap,
            queue,
            upper_at,
            lower_at,
            point_at,
            status: Vec::new(),
            events: Vec::new(),
            event_of: HashMap::new(),
            flat,
            recent: Vec::new(),
            contain_tol: 2.0 * COORD_TOL,
            near_tol: 1e-7,
        }
    }

    /// Intersections of every flat segment with every other segment, merged
    /// into the node events.
    fn add_flat_crossings(&mut self, input: &[Segment]) {
        let flat = std::mem::take(&mut self.flat);
        for (k, &f) in flat.iter().enumerate() {
            for g in 0..input.len() {
                if g == f || flat[..k].contains(&g) {
                    continue;
                }
                let (sf, sg) = (self.segs[f].as_segment(), self.segs[g].as_segment());
                let points = match intersect(&sf, &sg, COORD_TOL) {
                    Meet::None => continue,
                    Meet::Point(q) => vec![q],
                    Meet::Overlap(a, b) => vec![a, b],
                };
                for q in points {
                    let n = self.snap.snap(q);
                    let ev = *self.event_of.entry(n).or_insert_with(|| {
                        self.events.push(NodeEvent {
                            node: n,
                            segments: Vec::new(),
                        });
                        self.events.len() - 1
                    });
                    let inc = &mut self.events[ev].segments;
                    for s in [f, g] {
                        if let Err(i) = inc.binary_search(&s) {
                            inc.insert(i, s);
                        }
                    }
                }
            }
        }
    }

    fn x_at(&self, s: usize, p: Point2) -> f64 {
        let sg = &self.segs[s];
        let (up, lo, p) = (frame(sg.up), frame(sg.lo), frame(p));
        let dy = up.y - lo.y;
        // Segments nearly parallel to the sweep line are ordered at the
        // event point when it lies within their x'-range.
        if dy <= self.contain_tol {
            p.x.clamp(up.x.min(lo.x), up.x.max(lo.x))
        } else {
            let t = ((p.y - lo.y) / dy).clamp(0.0, 1.0);
            lo.x + t * (up.x - lo.x)
        }
    }

    fn run(&mut self) {
        while let Some((key, node)) = self.queue.pop_first() {
            self.handle(key, node);
        }
    }

    fn handle(&mut self, key: EventKey, node: usize) {
        let p = self.snap.points[node];
        let upper: Vec<usize> = self.upper_at.get(&node).cloned().unwrap_or_default();
        let lower_here: Vec<usize> = self.lower_at.get(&node).cloned().unwrap_or_default();

        // Locate the contiguous block of status segments passing through p.
        let px = frame(p).x;
        let idx = self.status.partition_point(|&s| self.x_at(s, p) < px);
        let mut lo = idx;
        while lo > 0 && self.segs[self.status[lo - 1]].as_segment().distance_to(p) <= self.near_tol {
            lo -= 1;
        }
        let mut hi = idx;
        while hi < self.status.len()
            && self.segs[self.status[hi]].as_segment().distance_to(p) <= self.near_tol
        {
            hi += 1;
        }
        let mut through: Vec<usize> = self.status[lo..hi]
            .iter()
            .copied()
            .filter(|&s| self.segs[s].lower == node || self.segs[s].as_segment().distance_to(p) <= self.contain_tol)
            .collect();
        for &s in &lower_here {
            if !through.contains(&s) && self.status.contains(&s) {
                through.push(s);
            }
        }

        let mut incident: Vec<usize> = upper.iter().chain(through.iter()).copied().collect();
        if let Some(pts) = self.point_at.get(&node) {
            incident.extend(pts.iter().copied());
        }
        // Segments that ended marginally above p but pass through it.
        let py = frame(p).y;
        self.recent.retain(|&s| frame(self.segs[s].lo).y - py <= self.contain_tol);
        for &s in &self.recent {
            if self.segs[s].as_segment().distance_to(p) <= self.contain_tol {
                incident.push(s);
            }
        }
        incident.sort_unstable();
        incident.dedup();
        self.event_of.insert(node, self.events.len());
        self.events.push(NodeEvent {
            node,
            segments: incident,
        });

        self.status.retain(|s| !through.contains(s));
        self.recent.extend(through.iter().copied().filter(|&s| self.segs[s].lower == node));

        // Segments continuing below p, ordered left to right just below the
        // sweep line.
        let mut below: Vec<usize> = upper
            .iter()
            .copied()
            .chain(through.iter().copied().filter(|&s| self.segs[s].lower != node))
            .collect();
        below.sort_by(|&a, &b| {
            below_angle(self.segs[a].lo - p)
                .total_cmp(&below_angle(self.segs[b].lo - p))
                .then(a.cmp(&b))
        });
        below.dedup();

        let pos = self.status.partition_point(|&s| self.x_at(s, p) < px);
        let n_below = below.len();
        self.status.splice(pos..pos, below);

        let mut pending: Vec<(usize, usize)> = Vec::new();
        if n_below == 0 {
            if pos > 0 && pos < self.status.len() {
                pending.push((self.status[pos - 1], self.status[pos]));
            }
        } else {
            if pos > 0 {
                pending.push((self.status[pos - 1], self.status[pos]));
            }
            let last = pos + n_below - 1;
            if last + 1 < self.status.len() {
                pending.push((self.status[last], self.status[last + 1]));
            }
        }
        while let Some((a, b)) = pending.pop() {
            let Some((lo, hi)) = self.find_event(a, b, key, node) else {
                continue;
            };
            if lo > 0 {
                pending.push((self.status[lo - 1], self.status[lo]));
            }
            for i in lo..hi {
                pending.push((self.status[i], self.status[i + 1]));
            }
            if hi + 1 < self.status.len() {
                pending.push((self.status[hi], self.status[hi + 1]));
            }
        }
    }

    /// Queues the crossing of status neighbours `a` (left) and `b`. Returns
    /// the status range reordered when the crossing snapped onto an already
    /// processed node.
    fn find_event(&mut self, a: usize, b: usize, current: EventKey, current_node: usize) -> Option<(usize, usize)> {
        let sa = self.segs[a].as_segment();
        let sb = self.segs[b].as_segment();
        let q = match intersect(&sa, &sb, COORD_TOL) {
            Meet::Point(q) => q,
            // Overlap ends are segment endpoints and already queued.
            Meet::None | Meet::Overlap(..) => return None,
        };
        // A crossing computed marginally above the sweep line (rounding) is
        // moved onto it; both segments still pass within tolerance.
        let p = self.snap.points[current_node];
        let (fq, fp) = (frame(q), frame(p));
        let q = if event_key(q) <= current && (fq.y - fp.y).abs() <= COORD_TOL && fq.x > fp.x {
            // Inverse rotation of (fq.x, fp.y).
            Point2::new(FRAME_COS * fq.x - FRAME_SIN * fp.y, FRAME_SIN * fq.x + FRAME_COS * fp.y)
        } else {
            q
        };
        match self.snap.find(q) {
            Some(n) => {
                let k = event_key(self.snap.points[n]);
                if k > current {
                    self.queue.insert(k, n);
                    None
                } else {
                    self.late_crossing(a, b, n)
                }
            }
            None => {
                let k = event_key(q);
                let n = self.snap.insert(q);
                if k > current {
                    self.queue.insert(k, n);
                    None
                } else {
                    // Behind the sweep line on the current line (one segment is
                    // parallel to it): recorded as processed now.
                    self.event_of.insert(n, self.events.len());
                    self.events.push(NodeEvent {
                        node: n,
                        segments: Vec::new(),
                    });
                    self.late_crossing(a, b, n)
                }
            }
        }
    }

    /// Status neighbours meeting at processed node `n` that were not both
    /// recorded there (one reached the sweep line after `n`, within
    /// tolerance). Records them and restores the order below `n` of every
    /// status segment through `n`; returns the reordered status range.
    fn late_crossing(&mut self, a: usize, b: usize, n: usize) -> Option<(usize, usize)> {
        let &ev = self.event_of.get(&n)?;
        let inc = &mut self.events[ev].segments;
        if inc.binary_search(&a).is_ok() && inc.binary_search(&b).is_ok() {
            return None;
        }
        for s in [a, b] {
            if let Err(i) = inc.binary_search(&s) {
                inc.insert(i, s);
            }
        }
        let pn = self.snap.points[n];
        let inc = &self.events[ev].segments;
        let positions: Vec<usize> = (0..self.status.len())
            .filter(|&i| {
                let s = self.status[i];
                inc.binary_search(&s).is_ok() && self.segs[s].lower != n && self.segs[s].lo.dist(pn) > COORD_TOL
            })
            .collect();
        if positions.len() < 2 {
            return None;
        }
        let mut order: Vec<usize> = positions.iter().map(|&i| self.status[i]).collect();
        let before = order.clone();
        order.sort_by(|&x, &y| {
            below_angle(self.segs[x].lo - pn)
                .total_cmp(&below_angle(self.segs[y].lo - pn))
                .then(x.cmp(&y))
        });
        if order == before {
            return None;
        }
        for (&i, s) in positions.iter().zip(order) {
            self.status[i] = s;
        }
        Some((positions[0], *positions.last().expect("nonempty")))
    }
}
