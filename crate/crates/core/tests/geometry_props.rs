mod common;

use common::*;
use lidarsafe::generate::random_workspace;
use lidarsafe::geometry::{
    build_planar_subdivision, convex_hull, extract_faces, first_hit, plane_sweep_intersections, wksp_partition,
    LidarSpec, PartitionOptions, Point2, RegionKind, Segment,
};
use lidarsafe::imaging::{lidar_image_affine, lidar_image_bruteforce, partition_imaging};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn float_segments(rng: &mut ChaCha8Rng, n: usize) -> Vec<Segment> {
    (0..n)
        .filter_map(|_| {
            let p = Point2::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0));
            let q = Point2::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0));
            Segment::new(p, q).ok()
        })
        .collect()
}

/// Endpoints on a coarse integer grid: shared endpoints, T-junctions and
/// collinear overlaps are common.
fn grid_segments(rng: &mut ChaCha8Rng, n: usize) -> Vec<Segment> {
    let mut out = Vec::new();
    while out.len() < n {
        let p = Point2::new(rng.gen_range(0..6) as f64, rng.gen_range(0..6) as f64);
        let q = Point2::new(rng.gen_range(0..6) as f64, rng.gen_range(0..6) as f64);
        if let Ok(s) = Segment::new(p, q) {
            if !out.contains(&s) && !out.contains(&Segment { p: s.q, q: s.p }) {
                out.push(s);
            }
        }
    }
    out
}

/// Random segments mixed with segments along one fixed direction (the
/// sweep algorithm's internal frame axis), stressing near-parallel handling.
fn directional_segments(rng: &mut ChaCha8Rng, n: usize, angle: f64) -> Vec<Segment> {
    let u = Point2::new(angle.cos(), angle.sin());
    (0..n)
        .filter_map(|i| {
            let p = Point2::new(rng.gen_range(0.0..20.0), rng.gen_range(0.0..20.0));
            let q = if i % 2 == 0 {
                let l = rng.gen_range(1.0..15.0);
                Point2::new(p.x + l * u.x, p.y + l * u.y)
            } else {
                Point2::new(rng.gen_range(0.0..20.0), rng.gen_range(0.0..20.0))
            };
            Segment::new(p, q).ok()
        })
        .collect()
}

fn assert_sweep_matches_naive(segs: &[Segment]) -> Result<(), TestCaseError> {
    let tol = 1e-9;
    let mut expected = naive_intersections(segs, tol);
    let mut got: Vec<(Point2, Vec<usize>)> =
        plane_sweep_intersections(segs).into_iter().map(|i| (i.point, i.segments)).collect();
    let key = |a: &(Point2, Vec<usize>), b: &(Point2, Vec<usize>)| a.0.x.total_cmp(&b.0.x).then(a.0.y.total_cmp(&b.0.y));
    expected.sort_by(key);
    got.sort_by(key);
    prop_assert_eq!(got.len(), expected.len(), "point counts differ: {:?} vs {:?}", got, expected);
    for (e, g) in expected.iter() {
        let m = got.iter().find(|(p, _)| p.dist(*e) <= tol);
        prop_assert!(m.is_some(), "missing intersection {:?}", e);
        prop_assert_eq!(&m.unwrap().1, g, "segments at {:?}", e);
    }
    Ok(())
}

fn edges_meet_only_at_nodes(nodes: &[Point2], edges: &[(usize, usize)]) -> bool {
    for i in 0..edges.len() {
        for j in i + 1..edges.len() {
            let (a, b) = (edges[i], edges[j]);
            let shared = [a.0, a.1].iter().any(|v| *v == b.0 || *v == b.1);
            let sa = Segment { p: nodes[a.0], q: nodes[a.1] };
            let sb = Segment { p: nodes[b.0], q: nodes[b.1] };
            let crossings = naive_intersections(&[sa, sb], 1e-9);
            for (p, _) in crossings {
                let at_shared_node = shared && [a.0, a.1].iter().any(|&v| nodes[v].dist(p) <= 1e-9);
                if !at_shared_node {
                    return false;
                }
            }
        }
    }
    true
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn sweep_equals_naive_on_float_segments(seed in any::<u64>(), n in 2usize..40) {
        let segs = float_segments(&mut ChaCha8Rng::seed_from_u64(seed), n);
        assert_sweep_matches_naive(&segs)?;
    }

    #[test]
    fn sweep_equals_naive_on_grid_segments(seed in any::<u64>(), n in 2usize..25) {
        let segs = grid_segments(&mut ChaCha8Rng::seed_from_u64(seed), n);
        assert_sweep_matches_naive(&segs)?;
    }

    #[test]
    fn sweep_equals_naive_with_parallel_families(seed in any::<u64>(), n in 2usize..30, axis in any::<bool>()) {
        let angle = if axis { 0.5123 } else { 0.5123 + std::f64::consts::FRAC_PI_2 };
        let segs = directional_segments(&mut ChaCha8Rng::seed_from_u64(seed), n, angle);
        assert_sweep_matches_naive(&segs)?;
        let sub = build_planar_subdivision(&segs);
        prop_assert!(edges_meet_only_at_nodes(&sub.nodes, &sub.edges));
    }

    #[test]
    fn hull_equals_gift_wrapping(seed in any::<u64>(), n in 3usize..60, grid in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Point2> = (0..n)
            .map(|_| if grid {
                Point2::new(rng.gen_range(0..8) as f64, rng.gen_range(0..8) as f64)
            } else {
                Point2::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0))
            })
            .collect();
        let oracle = gift_wrap(&pts);
        match convex_hull(&pts) {
            Ok(h) => prop_assert_eq!(canonical_ring(h.vertices()), canonical_ring(&oracle)),
            Err(_) => prop_assert!(oracle.len() < 3, "hull failed on non-degenerate input"),
        }
    }

    #[test]
    fn subdivision_is_planar_and_satisfies_euler(seed in any::<u64>(), n in 2usize..14, grid in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let segs = if grid { grid_segments(&mut rng, n) } else { float_segments(&mut rng, n) };
        let sub = build_planar_subdivision(&segs);
        prop_assert!(edges_meet_only_at_nodes(&sub.nodes, &sub.edges));
        let faces = extract_faces(&sub);
        // V - E + F = 1 + C with the unbounded face excluded from F.
        let (v, e, f, c) = (sub.nodes.len() as i64, sub.edges.len() as i64, faces.len() as i64, sub.component_count() as i64);
        prop_assert_eq!(v - e + f, c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn partition_covers_disjointly_and_is_imaging_adapted(
        seed in any::<u64>(),
        boundary in 3usize..9,
        obstacles in 0usize..3,
        lasers in 1usize..9,
        heading in 0.0f64..1.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ws = random_workspace(&mut rng, boundary, obstacles);
        let lidar = LidarSpec::all_primary(lasers, heading).unwrap();
        let p = wksp_partition(&ws, &lidar, PartitionOptions::default()).unwrap();
        let total = area(ws.boundary().vertices());
        let sum: f64 = p.fine_regions.iter().map(|r| area(r.vertices())).sum();
        prop_assert!((sum - total).abs() <= 1e-9 * total, "area {} vs {}", sum, total);
        for (i, a) in p.fine_regions.iter().enumerate() {
            prop_assert!(area(a.vertices()) > 0.0);
            for v in a.vertices() {
                prop_assert!(ws.boundary().contains(*v, 1e-9));
            }
            for b in &p.fine_regions[i + 1..] {
                let ov = intersection_area(a.vertices(), b.vertices());
                prop_assert!(ov <= 1e-9 * total, "overlap {}", ov);
            }
            let inside = ws.obstacles().iter().any(|o| o.contains(a.centroid(), 0.0));
            prop_assert_eq!(inside, p.region_kind[i] == RegionKind::ObstacleInterior);
        }
        let edges = all_edges(&ws);
        let angles = lidar.angles();
        let maps = partition_imaging(&p, &ws, &lidar).unwrap();
        for (r, region) in p.free_regions() {
            let probe = region.centroid();
            let expected: Vec<usize> = angles.iter().map(|&a| cast(probe, a, &edges).unwrap().0).collect();
            let m = maps[r].as_ref().unwrap();
            for _ in 0..5 {
                let z = sample_in(&mut rng, region.vertices());
                for (k, &a) in angles.iter().enumerate() {
                    let (_, hit, _) = cast(z, a, &edges).unwrap();
                    prop_assert!(point_segment_distance(hit, &edges[expected[k]]) <= 1e-9);
                }
                let want = image(z, &angles, &edges).unwrap();
                let got = lidar_image_affine(z, m).unwrap();
                for (g, w) in got.iter().zip(&want) {
                    prop_assert!((g - w).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn ray_casts_match_oracle(seed in any::<u64>(), lasers in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ws = random_workspace(&mut rng, 6, 2);
        let lidar = LidarSpec::all_primary(lasers, rng.gen_range(0.0..1.0)).unwrap();
        let edges = all_edges(&ws);
        for _ in 0..20 {
            let z = Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            if !ws.is_free(z, 1e-6) {
                continue;
            }
            for a in lidar.angles() {
                let h = first_hit(z, a, &ws).unwrap();
                let (_, p, r) = cast(z, a, &edges).unwrap();
                prop_assert!((h.distance - r).abs() <= 1e-9 && h.point.dist(p) <= 1e-9);
            }
            let d = lidar_image_bruteforce(z, &ws, &lidar).unwrap();
            let want = image(z, &lidar.angles(), &edges).unwrap();
            for (g, w) in d.iter().zip(&want) {
                prop_assert!((g - w).abs() <= 1e-9);
            }
        }
    }
}
