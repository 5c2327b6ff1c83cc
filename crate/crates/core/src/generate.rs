//! Seeded generators for workspaces and networks used by benchmarks and
//! randomized tests.

use crate::geometry::{ConvexPolygon, Point2, WorkspaceSpec};
use crate::network::{Layer, NeuralNetwork};
use rand::Rng;
use std::f64::consts::TAU;

/// `n` points on the circle of radius `r` around `c`, at sorted random
/// angles separated by at least `0.3·TAU/n`.
pub fn random_circle_polygon<R: Rng + ?Sized>(rng: &mut R, c: Point2, r: f64, n: usize) -> ConvexPolygon {
    assert!(n >= 3);
    let min_gap = 0.3 * TAU / n as f64;
    loop {
        let offset = rng.gen_range(0.0..TAU);
        let mut angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let ok = (0..n).all(|i| {
            let next = if i + 1 < n { angles[i + 1] } else { angles[0] + TAU };
            next - angles[i] >= min_gap
        });
        if !ok {
            continue;
        }
        let pts = angles
            .iter()
            .map(|a| Point2::new(c.x + r * (a + offset).cos(), c.y + r * (a + offset).sin()))
            .collect();
        if let Ok(p) = ConvexPolygon::new(pts) {
            if p.len() == n {
                return p;
            }
        }
    }
}

/// Regular `n`-gon of circumradius `r` around `c`, first vertex at `phase`.
pub fn regular_polygon(c: Point2, r: f64, n: usize, phase: f64) -> ConvexPolygon {
    let pts = (0..n)
        .map(|i| {
            let a = phase + TAU * i as f64 / n as f64;
            Point2::new(c.x + r * a.cos(), c.y + r * a.sin())
        })
        .collect();
    ConvexPolygon::new(pts).expect("regular polygon is convex")
}

fn inradius(p: &ConvexPolygon, c: Point2) -> f64 {
    p.edges().map(|e| e.line_distance(c)).fold(f64::INFINITY, f64::min)
}

/// Convex boundary with `boundary_vertices` vertices (circumradius 10 around
/// the origin) and `obstacles` disjoint convex obstacles of 3 to 6 vertices.
pub fn random_workspace<R: Rng + ?Sized>(rng: &mut R, boundary_vertices: usize, obstacles: usize) -> WorkspaceSpec {
    loop {
        let boundary = random_circle_polygon(rng, Point2::new(0.0, 0.0), 10.0, boundary_vertices);
        let inner = inradius(&boundary, Point2::new(0.0, 0.0));
        if inner < 3.0 {
            continue;
        }
        let mut disks: Vec<(Point2, f64)> = Vec::new();
        let mut tries = 0;
        while disks.len() < obstacles && tries < 1000 {
            tries += 1;
            let rho = rng.gen_range(0.5..(0.25 * inner).max(0.6));
            let lim = inner - rho - 0.3;
            if lim <= 0.0 {
                continue;
            }
            let c = Point2::new(rng.gen_range(-lim..lim), rng.gen_range(-lim..lim));
            if c.norm() + rho > inner - 0.3 {
                continue;
            }
            if disks.iter().all(|&(d, r)| d.dist(c) > r + rho + 0.3) {
                disks.push((c, rho));
            }
        }
        if disks.len() < obstacles {
            continue;
        }
        let obs = disks
            .iter()
            .map(|&(c, r)| {
                let n = rng.gen_range(3..=6);
                random_circle_polygon(rng, c, r, n)
            })
            .collect();
        if let Ok(ws) = WorkspaceSpec::new(boundary, obs) {
            return ws;
        }
    }
}

/// Square boundary `[0, 20]²` with obstacles totalling `vertex_count`
/// vertices (split into polygons of 3 to 4 vertices), placed on a fixed
/// grid so that larger counts extend smaller ones.
pub fn benchmark_workspace(vertex_count: usize) -> WorkspaceSpec {
    let boundary = ConvexPolygon::rectangle(0.0, 0.0, 20.0, 20.0).expect("square");
    let mut sizes = Vec::new();
    let mut left = vertex_count;
    while left > 0 {
        let s = if left == 3 || left == 6 || left >= 7 && left % 4 == 3 { 3 } else { 4.min(left) };
        let s = if s < 3 { 3 } else { s };
        sizes.push(s);
        left = left.saturating_sub(s);
    }
    let slots = [
        (5.3, 5.1),
        (14.7, 14.6),
        (14.8, 5.4),
        (5.2, 14.9),
        (10.1, 10.2),
        (10.2, 3.3),
        (3.4, 10.3),
        (16.6, 10.1),
        (10.3, 16.7),
    ];
    let obstacles = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let (x, y) = slots[i % slots.len()];
            regular_polygon(Point2::new(x, y), 1.2, n, 0.37 + 0.61 * i as f64)
        })
        .collect();
    WorkspaceSpec::new(boundary, obstacles).expect("benchmark workspace is valid")
}

/// Dense network with weights uniform in `[-scale, scale]` and biases
/// uniform in `[-bias, bias]`.
pub fn random_network<R: Rng + ?Sized>(
    rng: &mut R,
    input_dim: usize,
    hidden: &[usize],
    output_dim: usize,
    scale: f64,
    bias: f64,
) -> NeuralNetwork {
    let mut layers = Vec::new();
    let mut cols = input_dim;
    for &rows in hidden.iter().chain(std::iter::once(&output_dim)) {
        let weights = (0..rows)
            .map(|_| (0..cols).map(|_| rng.gen_range(-scale..=scale)).collect())
            .collect();
        let b = (0..rows).map(|_| rng.gen_range(-bias..=bias)).collect();
        layers.push(Layer { weights, bias: b });
        cols = rows;
    }
    NeuralNetwork::new(layers, input_dim, output_dim).expect("generated network is well formed")
}

/// One-hidden-layer controller `u = k·(s⁺ − s⁻)` with `s = d_right + d_left`
/// (x) and `s = d_up + d_down` (y), using four ReLUs. Requires lasers at
/// angles 0, π/2, π, 3π/2 among `laser_count` (a multiple of 4), heading 0.
pub fn centering_network(laser_count: usize, gain: f64) -> NeuralNetwork {
    assert!(laser_count % 4 == 0 && laser_count > 0);
    let q = laser_count / 4;
    let dim = 2 * laser_count;
    let (right, up, left, down) = (0, q, 2 * q, 3 * q);
    let mut w = vec![vec![0.0; dim]; 4];
    w[0][2 * right] = 1.0;
    w[0][2 * left] = 1.0;
    w[1][2 * right] = -1.0;
    w[1][2 * left] = -1.0;
    w[2][2 * up + 1] = 1.0;
    w[2][2 * down + 1] = 1.0;
    w[3][2 * up + 1] = -1.0;
    w[3][2 * down + 1] = -1.0;
    NeuralNetwork::new(
        vec![
            Layer { weights: w, bias: vec![0.0; 4] },
            Layer {
                weights: vec![vec![gain, -gain, 0.0, 0.0], vec![0.0, 0.0, gain, -gain]],
                bias: vec![0.0, 0.0],
            },
        ],
        dim,
        2,
    )
    .expect("centering network is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn workspaces_are_valid_and_deterministic() {
        for seed in 0..20 {
            let a = random_workspace(&mut ChaCha8Rng::seed_from_u64(seed), 3 + (seed as usize % 10), seed as usize % 4);
            let b = random_workspace(&mut ChaCha8Rng::seed_from_u64(seed), 3 + (seed as usize % 10), seed as usize % 4);
            assert_eq!(a, b);
            assert_eq!(a.boundary().len(), 3 + (seed as usize % 10));
            assert_eq!(a.obstacles().len(), seed as usize % 4);
        }
    }

    #[test]
    fn benchmark_vertex_counts() {
        for v in [3, 4, 6, 7, 8, 10, 12, 20] {
            let ws = benchmark_workspace(v);
            let total: usize = ws.obstacles().iter().map(|o| o.len()).sum();
            assert_eq!(total, v, "{v}");
        }
    }

    #[test]
    fn centering_network_output() {
        let net = centering_network(4, 0.25);
        // Right wall 3 away, left wall 1 away: s = 3 - 1 = 2 -> u_x = 0.5.
        let u = net.eval(&[3.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -2.0]);
        assert_eq!(u, vec![0.5, -0.25]);
    }
}
