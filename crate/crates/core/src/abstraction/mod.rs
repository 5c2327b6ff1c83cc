//! Finite-state abstraction over the fine partition, aggregate-pruned
//! transition checks, the backward unsafe fixed point, and a concrete
//! closed-loop simulator.

mod model;

pub use model::{Dynamics, ModelError, StateBounds, StateCell};

use crate::geometry::{
    ConvexPolygon, LidarSpec, PartitionResult, Point2, RegionKind, Segment, WorkspaceSpec, COORD_TOL,
};
use crate::imaging::{lidar_image_bruteforce, AffineImagingMap};
use crate::network::NeuralNetwork;
use crate::smc::{
    encode_region, encode_transition, escape_constraints, preprocess_region, smc_solve, Lit, PreprocessResult,
    SmcBudget, SmcError, SmcStatus, Target,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Fine region index plus one 0-based grid index per auxiliary dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AbstractState {
    pub region: usize,
    pub aux: Vec<usize>,
}

/// Coarse state: every fine state whose region lies in one aggregate region.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateState {
    pub aggregate: usize,
    pub members: Vec<usize>,
    /// Convex over-approximation used as the SMC target.
    pub cell: StateCell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub states: Vec<AbstractState>,
    pub cells: Vec<StateCell>,
    pub aggregates: Vec<AggregateState>,
    /// Aggregate index of each state.
    pub aggregate_of: Vec<usize>,
    pub bounds: StateBounds,
    counts: Vec<usize>,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Index of the sink state for successors leaving the state space.
    pub fn sink(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, s: &AbstractState) -> Option<usize> {
        if s.aux.len() != self.counts.len() || s.aux.iter().zip(&self.counts).any(|(k, c)| k >= c) {
            return None;
        }
        let per_region: usize = self.counts.iter().product();
        let mut idx = 0;
        for (k, c) in s.aux.iter().zip(&self.counts) {
            idx = idx * c + k;
        }
        let i = s.region * per_region + idx;
        (i < self.states.len()).then_some(i)
    }

    /// All states whose closed cell contains `x`.
    pub fn locate(&self, x: &[f64], tol: f64) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.cells[i].contains(x, tol)).collect()
    }

    pub fn full_aux(&self) -> Vec<(f64, f64)> {
        self.bounds.lower.iter().copied().zip(self.bounds.upper.iter().copied()).collect()
    }
}

/// States are ordered by region, then auxiliary indices lexicographically.
pub fn build_states(partition: &PartitionResult, bounds: &StateBounds) -> Result<StateSpace, ModelError> {
    let counts = bounds.counts()?;
    let mut grids: Vec<Vec<usize>> = vec![Vec::new()];
    for &c in &counts {
        grids = grids
            .into_iter()
            .flat_map(|g| {
                (0..c).map(move |k| {
                    let mut g = g.clone();
                    g.push(k);
                    g
                })
            })
            .collect();
    }
    let mut states = Vec::new();
    let mut cells = Vec::new();
    let mut aggregate_of = Vec::new();
    for (r, region) in partition.fine_regions.iter().enumerate() {
        for g in &grids {
            let aux = g.iter().enumerate().map(|(d, &k)| bounds.interval(d, k)).collect();
            states.push(AbstractState { region: r, aux: g.clone() });
            cells.push(StateCell { region: region.clone(), aux });
            aggregate_of.push(partition.fine_to_aggregate[r]);
        }
    }
    let full: Vec<(f64, f64)> = bounds.lower.iter().copied().zip(bounds.upper.iter().copied()).collect();
    let mut aggregates: Vec<AggregateState> = partition
        .aggregate_regions
        .iter()
        .enumerate()
        .map(|(a, ag)| AggregateState {
            aggregate: a,
            members: Vec::new(),
            cell: StateCell {
                region: ag.hull.clone(),
                aux: full.clone(),
            },
        })
        .collect();
    for (s, &a) in aggregate_of.iter().enumerate() {
        aggregates[a].members.push(s);
    }
    Ok(StateSpace {
        states,
        cells,
        aggregates,
        aggregate_of,
        bounds: bounds.clone(),
        counts,
    })
}

/// Which regions start out unsafe besides obstacle interiors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnsafeRule {
    /// Regions with a positive-length edge on the workspace boundary.
    #[default]
    BoundaryEdge,
    /// Regions touching any obstacle or the workspace boundary.
    StrictClosed,
}

fn edge_on_segment(e: &Segment, s: &Segment) -> bool {
    s.distance_to(e.p) <= COORD_TOL && s.distance_to(e.q) <= COORD_TOL
}

fn region_touches(region: &ConvexPolygon, poly: &ConvexPolygon) -> bool {
    region.vertices().iter().any(|&v| poly.edges().any(|e| e.distance_to(v) <= COORD_TOL))
        || poly.vertices().iter().any(|&v| region.edges().any(|e| e.distance_to(v) <= COORD_TOL))
}

/// Initially unsafe flags for every state plus the sink (last entry).
pub fn initial_unsafe(
    partition: &PartitionResult,
    space: &StateSpace,
    workspace: &WorkspaceSpec,
    rule: UnsafeRule,
) -> Vec<bool> {
    let region_unsafe: Vec<bool> = partition
        .fine_regions
        .iter()
        .zip(&partition.region_kind)
        .map(|(r, k)| {
            if *k == RegionKind::ObstacleInterior {
                return true;
            }
            match rule {
                UnsafeRule::BoundaryEdge => r
                    .edges()
                    .any(|e| workspace.boundary().edges().any(|b| edge_on_segment(&e, &b))),
                UnsafeRule::StrictClosed => workspace.polygons().any(|(_, p)| region_touches(r, p)),
            }
        })
        .collect();
    let mut out: Vec<bool> = space.states.iter().map(|s| region_unsafe[s.region]).collect();
    out.push(true);
    out
}

/// Everything the transition checks read.
#[derive(Debug, Clone, Copy)]
pub struct AbstractionInput<'a> {
    pub workspace: &'a WorkspaceSpec,
    pub partition: &'a PartitionResult,
    /// Per fine region; `None` for obstacle interiors.
    pub maps: &'a [Option<AffineImagingMap>],
    pub dynamics: &'a Dynamics,
    pub net: &'a NeuralNetwork,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionOptions {
    pub refine_intra: bool,
    pub budget: SmcBudget,
}

impl Default for TransitionOptions {
    fn default() -> Self {
        Self {
            refine_intra: false,
            budget: SmcBudget::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionStats {
    pub smc_checks: u64,
    pub aggregate_checks: u64,
    /// Aggregate checks that removed all member transitions at once.
    pub aggregate_pruned: u64,
    /// Checks that hit the resource limit (transition kept).
    pub resource_limits: u64,
    /// Checks with an inconclusive LP (transition kept).
    pub numerical_failures: u64,
}

impl TransitionStats {
    fn merge(&mut self, o: &TransitionStats) {
        self.smc_checks += o.smc_checks;
        self.aggregate_checks += o.aggregate_checks;
        self.aggregate_pruned += o.aggregate_pruned;
        self.resource_limits += o.resource_limits;
        self.numerical_failures += o.numerical_failures;
    }
}

/// `S_F = (F ∪ {sink}, δ_F)` with sorted successor lists.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSystem {
    pub successors: Vec<Vec<usize>>,
    pub unsafe0: Vec<bool>,
    pub stats: TransitionStats,
}

impl TransitionSystem {
    pub fn num_states(&self) -> usize {
        self.successors.len()
    }

    pub fn sink(&self) -> usize {
        self.successors.len() - 1
    }

    pub fn transition_count(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }

    pub fn has_transition(&self, s: usize, t: usize) -> bool {
        self.successors[s].binary_search(&t).is_ok()
    }

    /// Every ordered pair present: the starting point of pruning.
    pub fn complete(n_states: usize, unsafe0: Vec<bool>) -> Self {
        let all: Vec<usize> = (0..=n_states).collect();
        let mut successors = vec![all; n_states];
        successors.push(vec![n_states]);
        Self {
            successors,
            unsafe0,
            stats: TransitionStats::default(),
        }
    }
}

/// Reduced-encoding preprocessing of every free fine region.
pub fn preprocess_all(
    input: &AbstractionInput<'_>,
    space: &StateSpace,
    budget: &SmcBudget,
) -> Vec<Option<Result<PreprocessResult, SmcError>>> {
    let full = space.full_aux();
    input
        .maps
        .par_iter()
        .enumerate()
        .map(|(r, m)| {
            m.as_ref().map(|maps| {
                let cell = StateCell {
                    region: input.partition.fine_regions[r].clone(),
                    aux: full.clone(),
                };
                let p = encode_region(&cell, maps, input.net)?;
                preprocess_region(&p, budget)
            })
        })
        .collect()
}

enum Check {
    Unsat,
    Possible,
}

fn check(
    input: &AbstractionInput<'_>,
    from: &StateCell,
    maps: &AffineImagingMap,
    target: Target<'_>,
    clauses: &[Vec<Lit>],
    budget: &SmcBudget,
    stats: &mut TransitionStats,
) -> Result<Check, SmcError> {
    stats.smc_checks += 1;
    let mut p = encode_transition(input.dynamics, from, target, maps, input.net)?;
    p.add_clauses(clauses.iter().cloned());
    match smc_solve(&p, budget) {
        Ok(o) if o.status == SmcStatus::Unsat => Ok(Check::Unsat),
        Ok(_) => Ok(Check::Possible),
        Err(SmcError::ResourceLimit) => {
            stats.resource_limits += 1;
            Ok(Check::Possible)
        }
        Err(SmcError::Numerical(_)) => {
            stats.numerical_failures += 1;
            Ok(Check::Possible)
        }
        Err(e) => Err(e),
    }
}

/// Successors of one state after aggregate pruning and member refinement.
fn successors_of(
    input: &AbstractionInput<'_>,
    space: &StateSpace,
    s: usize,
    clauses: &[Vec<Lit>],
    escape: &[crate::smc::SuccessorConstraint],
    options: &TransitionOptions,
) -> Result<(Vec<usize>, TransitionStats), SmcError> {
    let mut stats = TransitionStats::default();
    let region = space.states[s].region;
    let Some(maps) = input.maps[region].as_ref() else {
        return Ok(((0..=space.len()).collect(), stats));
    };
    let from = &space.cells[s];
    let mut out = Vec::new();
    for ag in &space.aggregates {
        let own = space.aggregate_of[s] == ag.aggregate;
        if own && !options.refine_intra {
            out.extend_from_slice(&ag.members);
            continue;
        }
        if ag.members.len() > 1 {
            stats.aggregate_checks += 1;
            if let Check::Unsat = check(input, from, maps, Target::Cell(&ag.cell), clauses, &options.budget, &mut stats)? {
                stats.aggregate_pruned += 1;
                continue;
            }
        }
        for &t in &ag.members {
            let c = check(input, from, maps, Target::Cell(&space.cells[t]), clauses, &options.budget, &mut stats)?;
            if let Check::Possible = c {
                out.push(t);
            }
        }
    }
    for e in escape {
        if let Check::Possible = check(input, from, maps, Target::Constraint(e), clauses, &options.budget, &mut stats)? {
            out.push(space.sink());
            break;
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok((out, stats))
}

/// Starts from the complete relation and removes every transition whose
/// SMC check is UNSAT. `clauses[r]` are preloaded conflict clauses for
/// fine region `r` (may be empty).
pub fn compute_transitions(
    input: &AbstractionInput<'_>,
    space: &StateSpace,
    unsafe0: Vec<bool>,
    clauses: &[Vec<Vec<Lit>>],
    options: &TransitionOptions,
) -> Result<TransitionSystem, SmcError> {
    let escape = escape_constraints(&StateCell {
        region: input.workspace.boundary().clone(),
        aux: space.full_aux(),
    });
    let empty: Vec<Vec<Lit>> = Vec::new();
    let results: Vec<Result<(Vec<usize>, TransitionStats), SmcError>> = (0..space.len())
        .into_par_iter()
        .map(|s| {
            let r = space.states[s].region;
            let c = clauses.get(r).unwrap_or(&empty);
            successors_of(input, space, s, c, &escape, options)
        })
        .collect();
    let mut ts = TransitionSystem::complete(space.len(), unsafe0);
    for (s, r) in results.into_iter().enumerate() {
        let (succ, st) = r?;
        ts.successors[s] = succ;
        ts.stats.merge(&st);
    }
    Ok(ts)
}

/// Backward closure of `unsafe0` under the predecessor map; returns the
/// unsafe flags and the number of Pre iterations until the fixed point.
pub fn unsafe_fixed_point(ts: &TransitionSystem) -> (Vec<bool>, usize) {
    let n = ts.num_states();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (s, succ) in ts.successors.iter().enumerate() {
        for &t in succ {
            preds[t].push(s);
        }
    }
    let mut bad = ts.unsafe0.clone();
    let mut frontier: VecDeque<usize> = (0..n).filter(|&s| bad[s]).collect();
    let mut iterations = 0;
    while !frontier.is_empty() {
        iterations += 1;
        let mut next = VecDeque::new();
        for s in frontier {
            for &p in &preds[s] {
                if !bad[p] {
                    bad[p] = true;
                    next.push_back(p);
                }
            }
        }
        frontier = next;
    }
    (bad, iterations)
}

/// One cell of the safe set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafeCell {
    pub state: usize,
    pub region: usize,
    pub polygon: Vec<Point2>,
    pub aux: Vec<(f64, f64)>,
}

/// Union of the cells of non-unsafe states (sink excluded).
pub fn safe_set(space: &StateSpace, unsafe_flags: &[bool]) -> Vec<SafeCell> {
    (0..space.len())
        .filter(|&s| !unsafe_flags[s])
        .map(|s| SafeCell {
            state: s,
            region: space.states[s].region,
            polygon: space.cells[s].region.vertices().to_vec(),
            aux: space.cells[s].aux.clone(),
        })
        .collect()
}

pub fn safe_set_contains(cells: &[SafeCell], x: &[f64], tol: f64) -> bool {
    cells.iter().any(|c| {
        let z = Point2::new(x[0], x[1]);
        ConvexPolygon::new(c.polygon.clone()).is_ok_and(|p| p.contains(z, tol))
            && c.aux.iter().zip(&x[2..]).all(|(&(lo, hi), &v)| v >= lo - tol && v <= hi + tol)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    Collision,
    BoundaryContact,
    OutOfBounds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub trajectory: Vec<Vec<f64>>,
    pub safe: bool,
    /// First violation and the step at which it occurred.
    pub violation: Option<(usize, Violation)>,
}

/// Safety of one concrete state: tolerance `tol` around obstacles and walls.
pub fn position_violation(workspace: &WorkspaceSpec, bounds: &StateBounds, x: &[f64], tol: f64) -> Option<Violation> {
    let z = Point2::new(x[0], x[1]);
    if !bounds.contains(&x[2..], 0.0) {
        return Some(Violation::OutOfBounds);
    }
    if !workspace.boundary().contains(z, tol) {
        return Some(Violation::OutOfBounds);
    }
    if !workspace.boundary().contains_strictly(z, tol) {
        return Some(Violation::BoundaryContact);
    }
    if workspace.obstacles().iter().any(|o| o.contains(z, tol)) {
        return Some(Violation::Collision);
    }
    None
}

/// Iterates `x⁺ = A x + B f(d(x))` with the ray-cast LiDAR image for
/// `steps` steps, stopping at the first violation.
pub fn simulate(
    dynamics: &Dynamics,
    net: &NeuralNetwork,
    workspace: &WorkspaceSpec,
    lidar: &LidarSpec,
    bounds: &StateBounds,
    x0: &[f64],
    steps: usize,
) -> SimulationResult {
    let mut x = x0.to_vec();
    let mut trajectory = vec![x.clone()];
    for t in 0..=steps {
        if let Some(v) = position_violation(workspace, bounds, &x, COORD_TOL) {
            return SimulationResult {
                trajectory,
                safe: false,
                violation: Some((t, v)),
            };
        }
        if t == steps {
            break;
        }
        let Ok(d) = lidar_image_bruteforce(Point2::new(x[0], x[1]), workspace, lidar) else {
            return SimulationResult {
                trajectory,
                safe: false,
                violation: Some((t, Violation::OutOfBounds)),
            };
        };
        let u = net.eval(&d);
        x = dynamics.step(&x, &u);
        trajectory.push(x.clone());
    }
    SimulationResult {
        trajectory,
        safe: true,
        violation: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{wksp_partition, LidarSpec, PartitionOptions};

    fn example_partition() -> (WorkspaceSpec, PartitionResult) {
        let ws = WorkspaceSpec::new(
            ConvexPolygon::rectangle(0.0, 0.0, 4.0, 4.0).unwrap(),
            vec![ConvexPolygon::rectangle(1.0, 1.0, 2.0, 2.0).unwrap()],
        )
        .unwrap();
        let p = wksp_partition(&ws, &LidarSpec::all_primary(4, 0.0).unwrap(), PartitionOptions::default()).unwrap();
        (ws, p)
    }

    #[test]
    fn state_counts() {
        let (_, p) = example_partition();
        assert_eq!(build_states(&p, &StateBounds::none()).unwrap().len(), 9);
        let b = StateBounds { lower: vec![0.0], upper: vec![1.0], epsilon: 0.5 };
        let s = build_states(&p, &b).unwrap();
        assert_eq!(s.len(), 18);
        assert_eq!(s.index_of(&AbstractState { region: 3, aux: vec![1] }), Some(7));
        let b = StateBounds { lower: vec![0.0], upper: vec![1.0], epsilon: 1.0 };
        assert_eq!(build_states(&p, &b).unwrap().len(), 9);
        let members: usize = s.aggregates.iter().map(|a| a.members.len()).sum();
        assert_eq!(members, 18);
    }

    #[test]
    fn unsafe_rules_on_example() {
        let (ws, p) = example_partition();
        let s = build_states(&p, &StateBounds::none()).unwrap();
        let u = initial_unsafe(&p, &s, &ws, UnsafeRule::BoundaryEdge);
        assert!(u.iter().all(|&b| b));
        let u = initial_unsafe(&p, &s, &ws, UnsafeRule::StrictClosed);
        assert!(u.iter().all(|&b| b));
    }

    #[test]
    fn interior_region_is_initially_safe() {
        let ws = WorkspaceSpec::new(ConvexPolygon::rectangle(0.0, 0.0, 4.0, 4.0).unwrap(), vec![]).unwrap();
        let mut p = wksp_partition(&ws, &LidarSpec::all_primary(4, 0.0).unwrap(), PartitionOptions::default()).unwrap();
        // Replace the single face by a hand-made 3x3 grid.
        p.fine_regions = (0..9)
            .map(|i| {
                let (x, y) = ((i % 3) as f64, (i / 3) as f64);
                let w = [0.0, 1.0, 3.0, 4.0];
                ConvexPolygon::rectangle(w[x as usize], w[y as usize], w[x as usize + 1], w[y as usize + 1]).unwrap()
            })
            .collect();
        p.region_kind = vec![RegionKind::Free; 9];
        p.fine_to_aggregate = vec![0; 9];
        let s = build_states(&p, &StateBounds::none()).unwrap();
        let u = initial_unsafe(&p, &s, &ws, UnsafeRule::BoundaryEdge);
        assert_eq!(u.iter().filter(|&&b| !b).count(), 1);
        assert!(!u[4]);
        let u = initial_unsafe(&p, &s, &ws, UnsafeRule::StrictClosed);
        assert!(!u[4]);
    }

    fn graph(succ: Vec<Vec<usize>>, unsafe0: Vec<bool>) -> TransitionSystem {
        TransitionSystem {
            successors: succ,
            unsafe0,
            stats: TransitionStats::default(),
        }
    }

    #[test]
    fn fixed_point_chain_and_unreachable() {
        let ts = graph(vec![vec![1], vec![2], vec![2]], vec![false, false, true]);
        let (bad, _) = unsafe_fixed_point(&ts);
        assert_eq!(bad, vec![true, true, true]);
        let ts = graph(vec![vec![0], vec![2], vec![2]], vec![false, false, true]);
        let (bad, _) = unsafe_fixed_point(&ts);
        assert_eq!(bad, vec![false, true, true]);
        let again = graph(ts.successors.clone(), bad.clone());
        assert_eq!(unsafe_fixed_point(&again).0, bad);
    }

    #[test]
    fn simulate_bias_push_hits_obstacle() {
        let (ws, _) = example_partition();
        let lidar = LidarSpec::all_primary(4, 0.0).unwrap();
        let net = NeuralNetwork::constant(8, vec![0.0], vec![0.25, 0.0]).unwrap();
        let dy = Dynamics::planar(1.0, 1.0);
        let r = simulate(&dy, &net, &ws, &lidar, &StateBounds::none(), &[0.5, 1.5], 10);
        assert!(!r.safe);
        assert_eq!(r.violation, Some((2, Violation::Collision)));
        let zero = NeuralNetwork::constant(8, vec![0.0], vec![0.0, 0.0]).unwrap();
        let r = simulate(&dy, &zero, &ws, &lidar, &StateBounds::none(), &[0.5, 1.5], 50);
        assert!(r.safe);
        assert_eq!(r.trajectory.len(), 51);
    }
}
