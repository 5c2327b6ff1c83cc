use super::sweep::run_sweep;
use super::{signed_area, Point2, Segment};
use std::collections::BTreeSet;

/// Planar straight-line graph whose edges meet only at shared nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarSubdivision {
    pub nodes: Vec<Point2>,
    /// Undirected edges as `(low, high)` node indices, sorted.
    pub edges: Vec<(usize, usize)>,
}

impl PlanarSubdivision {
    pub fn component_count(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.nodes.len()).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
        (0..self.nodes.len()).filter(|&i| find(&mut parent, i) == i).count()
    }
}

/// Splits every segment at each node lying on it so that no two edges cross
/// except at nodes.
pub fn build_planar_subdivision(segments: &[Segment]) -> PlanarSubdivision {
    let out = run_sweep(segments);
    let mut remap = vec![usize::MAX; out.nodes.len()];
    let mut nodes = Vec::with_capacity(out.events.len());
    let mut on_segment: Vec<Vec<usize>> = vec![Vec::new(); segments.len()];
    for ev in &out.events {
        let id = nodes.len();
        remap[ev.node] = id;
        nodes.push(out.nodes[ev.node]);
        for &s in &ev.segments {
            on_segment[s].push(id);
        }
    }
    let mut edges = BTreeSet::new();
    for (s, ids) in on_segment.iter_mut().enumerate() {
        let seg = segments[s];
        let dir = seg.q - seg.p;
        ids.sort_by(|&a, &b| {
            (nodes[a] - seg.p)
                .dot(dir)
                .total_cmp(&(nodes[b] - seg.p).dot(dir))
                .then(a.cmp(&b))
        });
        ids.dedup();
        for w in ids.windows(2) {
            if w[0] != w[1] {
                edges.insert((w[0].min(w[1]), w[0].max(w[1])));
            }
        }
    }
    PlanarSubdivision {
        nodes,
        edges: edges.into_iter().collect(),
    }
}

/// Cycles of the subdivision traced with the face on the left, keeping
/// only those with positive area (bounded faces). At each node the walk
/// leaves along the edge immediately clockwise of the one it arrived on.
pub fn extract_faces(sub: &PlanarSubdivision) -> Vec<Vec<usize>> {
    let (cycles, _) = trace_cycles(sub);
    cycles
        .into_iter()
        .filter_map(|(c, area)| (area > 0.0).then_some(c))
        .collect()
}

/// All boundary cycles with their signed areas; degenerate (tree-like)
/// cycles are dropped. Second value: count of negative cycles.
pub(crate) fn trace_cycles(sub: &PlanarSubdivision) -> (Vec<(Vec<usize>, f64)>, usize) {
    let n = sub.nodes.len();
    let m = sub.edges.len();
    // half-edge 2e: a->b, 2e+1: b->a
    let origin = |h: usize| {
        let (a, b) = sub.edges[h / 2];
        if h % 2 == 0 {
            a
        } else {
            b
        }
    };
    let target = |h: usize| origin(h ^ 1);
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for h in 0..2 * m {
        out[origin(h)].push(h);
    }
    let mut slot = vec![0usize; 2 * m];
    for (v, list) in out.iter_mut().enumerate() {
        let pv = sub.nodes[v];
        list.sort_by(|&a, &b| {
            let da = sub.nodes[target(a)] - pv;
            let db = sub.nodes[target(b)] - pv;
            da.y.atan2(da.x).total_cmp(&db.y.atan2(db.x)).then(a.cmp(&b))
        });
        for (k, &h) in list.iter().enumerate() {
            slot[h] = k;
        }
    }
    let next = |h: usize| {
        let twin = h ^ 1;
        let v = origin(twin);
        let list = &out[v];
        let k = slot[twin];
        list[(k + list.len() - 1) % list.len()]
    };

    let (lo, hi) = super::bbox_of(&sub.nodes);
    let scale = (hi - lo).norm().max(1.0);
    let area_eps = 1e-15 * scale * scale;

    let mut seen = vec![false; 2 * m];
    let mut cycles = Vec::new();
    let mut negative = 0;
    for start in 0..2 * m {
        if seen[start] {
            continue;
        }
        let mut cyc = Vec::new();
        let mut h = start;
        while !seen[h] {
            seen[h] = true;
            cyc.push(origin(h));
            h = next(h);
        }
        let pts: Vec<Point2> = cyc.iter().map(|&i| sub.nodes[i]).collect();
        let area = signed_area(&pts);
        if area > area_eps {
            cycles.push((cyc, area));
        } else if area < -area_eps {
            negative += 1;
            cycles.push((cyc, area));
        }
    }
    (cycles, negative)
}
