//! Random single-transition SMC instances and their exhaustive-enumeration
//! verdicts.

use super::{affine_image, all_edges, all_phases, feasible, phase_constraints, polygon_halfplanes, pullback, sample_in, successor, HalfPlane};
use lidarsafe::abstraction::{Dynamics, StateCell};
use lidarsafe::generate::{random_network, random_workspace};
use lidarsafe::geometry::{wksp_partition, LidarSpec, PartitionOptions, PartitionResult, Point2, WorkspaceSpec};
use lidarsafe::imaging::{lidar_image_affine, partition_imaging, AffineImagingMap};
use lidarsafe::network::NeuralNetwork;
use lidarsafe::smc::{feasible_parts, Conflict, LinearConstraint, MonotoneSmcProblem, SmcBudget};
use rand::Rng;

/// Margin (distance in the plane) separating clear verdicts from ones that
/// hinge on a touching contact.
pub const MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Sat,
    Unsat,
    /// Feasible only within the margin; either answer is acceptable.
    Borderline,
}

pub struct Instance {
    pub workspace: WorkspaceSpec,
    pub partition: PartitionResult,
    pub maps: Vec<Option<AffineImagingMap>>,
    pub net: NeuralNetwork,
    pub dynamics: Dynamics,
    pub from: usize,
    pub target: usize,
    angles: Vec<f64>,
}

impl Instance {
    /// Random workspace with four lasers, a random network with the given
    /// hidden widths and `x⁺ = x + 0.3·u`. Half of the targets are the
    /// region of a sampled successor, so both verdicts occur.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, hidden: &[usize]) -> Self {
        let (b, o) = (rng.gen_range(3..=7), rng.gen_range(0..=2));
        let workspace = random_workspace(rng, b, o);
        let lidar = LidarSpec::all_primary(4, rng.gen_range(0.0..1.0)).expect("lidar");
        let partition = wksp_partition(&workspace, &lidar, PartitionOptions::default()).expect("partition");
        let maps = partition_imaging(&partition, &workspace, &lidar).expect("imaging");
        let net = random_network(rng, 8, hidden, 2, 0.2, 1.0);
        let dynamics = Dynamics::planar(1.0, 0.3);
        let free: Vec<usize> = partition.free_regions().map(|(i, _)| i).collect();
        let from = free[rng.gen_range(0..free.len())];
        let mut target = rng.gen_range(0..partition.fine_regions.len());
        if rng.gen_bool(0.5) {
            let z = sample_in(rng, partition.fine_regions[from].vertices());
            let d = lidar_image_affine(z, maps[from].as_ref().unwrap()).unwrap();
            let u = net.eval(&d);
            let next = Point2::new(z.x + 0.3 * u[0], z.y + 0.3 * u[1]);
            if let Some(r) = partition.fine_regions.iter().position(|p| p.contains(next, 0.0)) {
                target = r;
            }
        }
        Self {
            angles: lidar.angles(),
            workspace,
            partition,
            maps,
            net,
            dynamics,
            from,
            target,
        }
    }

    pub fn from_cell(&self) -> StateCell {
        StateCell {
            region: self.partition.fine_regions[self.from].clone(),
            aux: Vec::new(),
        }
    }

    pub fn target_cell(&self) -> StateCell {
        StateCell {
            region: self.partition.fine_regions[self.target].clone(),
            aux: Vec::new(),
        }
    }

    pub fn from_maps(&self) -> &AffineImagingMap {
        self.maps[self.from].as_ref().expect("free region")
    }

    fn image(&self) -> Vec<super::Affine> {
        let edges = all_edges(&self.workspace);
        affine_image(self.partition.fine_regions[self.from].centroid(), &self.angles, &edges)
    }

    fn verdict(&self, extra: impl Fn(&[bool], &[super::Affine]) -> Vec<HalfPlane>) -> Vec<Verdict> {
        let region = self.partition.fine_regions[self.from].vertices();
        let d = self.image();
        all_phases(self.net.relu_count())
            .into_iter()
            .map(|ph| {
                let (mut cons, u) = phase_constraints(&self.net, &d, &ph);
                cons.extend(extra(&ph, &u));
                if feasible(region, &cons, -MARGIN) {
                    Verdict::Sat
                } else if feasible(region, &cons, MARGIN) {
                    Verdict::Borderline
                } else {
                    Verdict::Unsat
                }
            })
            .collect()
    }

    /// Per-phase feasibility of the region encoding (no successor).
    pub fn region_verdicts(&self) -> Vec<Verdict> {
        self.verdict(|_, _| Vec::new())
    }

    /// Exists a position in `from` whose successor lies in `target`.
    pub fn transition_verdict(&self) -> Verdict {
        let target = self.partition.fine_regions[self.target].vertices().to_vec();
        let v = self.verdict(|_, u| pullback(&target, &successor(&self.dynamics.a, &self.dynamics.b, u)));
        combine(&v)
    }

    /// Checks that the closed loop really maps `x` into the target cell.
    pub fn witness_is_genuine(&self, x: &[f64], tol: f64) -> bool {
        let z = Point2::new(x[0], x[1]);
        if !self.partition.fine_regions[self.from].contains(z, tol) {
            return false;
        }
        let Ok(d) = lidar_image_affine(z, self.from_maps()) else { return false };
        let u = self.net.eval(&d);
        let next = self.dynamics.step(x, &u);
        polygon_halfplanes(self.partition.fine_regions[self.target].vertices())
            .iter()
            .all(|h| {
                let n = (h.a[0] * h.a[0] + h.a[1] * h.a[1]).sqrt();
                (h.a[0] * next[0] + h.a[1] * next[1] + h.c) / n >= -tol
            })
    }
}

pub fn combine(v: &[Verdict]) -> Verdict {
    if v.contains(&Verdict::Sat) {
        Verdict::Sat
    } else if v.contains(&Verdict::Borderline) {
        Verdict::Borderline
    } else {
        Verdict::Unsat
    }
}

/// A conflict is infeasible with the base system and every literal is
/// needed: dropping any one of them makes the rest feasible.
pub fn conflict_is_minimal(p: &MonotoneSmcProblem, c: &Conflict, budget: &SmcBudget) -> Result<(), String> {
    let n = p.base.num_vars();
    let check = |skip: Option<usize>| {
        let mut parts: Vec<&[LinearConstraint]> = vec![&p.base.constraints];
        for (i, &l) in c.literals.iter().enumerate() {
            if Some(i) != skip {
                parts.push(p.literal_constraints(l));
            }
        }
        feasible_parts(n, &parts, budget.lp_tol).map(|o| o.is_feasible())
    };
    match check(None) {
        Ok(false) => {}
        other => return Err(format!("conflict {:?} not infeasible: {other:?}", c.literals)),
    }
    for i in 0..c.literals.len() {
        match check(Some(i)) {
            Ok(true) => {}
            other => return Err(format!("conflict {:?} without literal {i}: {other:?}", c.literals)),
        }
    }
    Ok(())
}
