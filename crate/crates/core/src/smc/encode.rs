use super::lp::{LinearConstraint, LinearConstraintSystem, Relation};
use super::sat::Lit;
use super::SmcError;
use crate::abstraction::{Dynamics, StateCell};
use crate::imaging::AffineImagingMap;
use crate::network::NeuralNetwork;
use std::ops::Range;

/// Positions of the real unknowns in the constraint system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarLayout {
    pub x: Range<usize>,
    /// Empty for the reduced (single-region) encoding.
    pub x_next: Range<usize>,
    pub u: Range<usize>,
    pub d: Range<usize>,
    /// Pre-activations per hidden layer.
    pub t: Vec<Range<usize>>,
    /// Activations per hidden layer.
    pub h: Vec<Range<usize>>,
}

/// Linear constraint `terms·x⁺ (rel) rhs` over the successor state.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessorConstraint {
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// What the successor state must satisfy.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    Cell(&'a StateCell),
    Constraint(&'a SuccessorConstraint),
}

/// Boolean ReLU indicators over a base linear system; indicator `j`
/// (cumulative over layers) activates `guarded[j][1]` when true and
/// `guarded[j][0]` when false.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneSmcProblem {
    pub base: LinearConstraintSystem,
    pub layout: VarLayout,
    pub widths: Vec<usize>,
    pub guarded: Vec<[Vec<LinearConstraint>; 2]>,
    pub learned: Vec<Vec<Lit>>,
}

impl MonotoneSmcProblem {
    pub fn num_bools(&self) -> usize {
        self.guarded.len()
    }

    pub fn guarded_count(&self) -> usize {
        self.guarded.iter().map(|g| g[0].len() + g[1].len()).sum()
    }

    pub fn literal_constraints(&self, l: Lit) -> &[LinearConstraint] {
        &self.guarded[l.var()][usize::from(l.is_positive())]
    }

    /// Indicator index of neuron `j` in hidden layer `layer` (both 0-based).
    pub fn indicator(&self, layer: usize, j: usize) -> usize {
        self.widths[..layer].iter().sum::<usize>() + j
    }

    pub fn add_clauses(&mut self, clauses: impl IntoIterator<Item = Vec<Lit>>) {
        self.learned.extend(clauses);
    }
}

fn region_constraints(sys: &mut LinearConstraintSystem, x: usize, cell: &StateCell) {
    for (n, c) in cell.region.halfplanes() {
        sys.push(LinearConstraint::ge(vec![(x, n.x), (x + 1, n.y)], c));
    }
    for (i, &(lo, hi)) in cell.aux.iter().enumerate() {
        sys.push(LinearConstraint::ge(vec![(x + 2 + i, 1.0)], lo));
        sys.push(LinearConstraint::le(vec![(x + 2 + i, 1.0)], hi));
    }
}

fn check_dims(
    dynamics: Option<&Dynamics>,
    from: &StateCell,
    maps: &AffineImagingMap,
    net: &NeuralNetwork,
) -> Result<(), SmcError> {
    if net.input_dim != maps.output_dim() {
        return Err(SmcError::DimensionMismatch(format!(
            "network input {} but LiDAR image has {} entries",
            net.input_dim,
            maps.output_dim()
        )));
    }
    if let Some(dy) = dynamics {
        if dy.input_dim() != net.output_dim {
            return Err(SmcError::DimensionMismatch(format!(
                "B has {} columns but network outputs {}",
                dy.input_dim(),
                net.output_dim
            )));
        }
        if dy.state_dim() != 2 + from.aux.len() {
            return Err(SmcError::DimensionMismatch(format!(
                "state dimension {} but cell has {} auxiliary intervals",
                dy.state_dim(),
                from.aux.len()
            )));
        }
    }
    Ok(())
}

fn build(
    dynamics: Option<&Dynamics>,
    from: &StateCell,
    target: Option<Target<'_>>,
    maps: &AffineImagingMap,
    net: &NeuralNetwork,
) -> Result<MonotoneSmcProblem, SmcError> {
    net.validate().map_err(|e| SmcError::DimensionMismatch(e.to_string()))?;
    check_dims(dynamics, from, maps, net)?;
    let n = 2 + from.aux.len();
    let m = net.output_dim;
    let mut sys = LinearConstraintSystem::new();
    let x = sys.add_vars("x", n);
    let x_next = if dynamics.is_some() { sys.add_vars("x_next", n) } else { x.end..x.end };
    let u = sys.add_vars("u", m);
    let d = sys.add_vars("d", maps.output_dim());
    let widths = net.hidden_widths();
    let mut t = Vec::new();
    let mut h = Vec::new();
    for (l, &w) in widths.iter().enumerate() {
        t.push(sys.add_vars(&format!("t{}", l + 1), w));
        h.push(sys.add_vars(&format!("h{}", l + 1), w));
    }

    region_constraints(&mut sys, x.start, from);

    if let Some(dy) = dynamics {
        for i in 0..n {
            let mut terms = vec![(x_next.start + i, 1.0)];
            terms.extend((0..n).map(|j| (x.start + j, -dy.a[i][j])));
            terms.extend((0..m).map(|j| (u.start + j, -dy.b[i][j])));
            sys.push(LinearConstraint::eq(terms, 0.0));
        }
    }

    let (p, q) = maps.stacked();
    for (k, (row, qk)) in p.iter().zip(&q).enumerate() {
        sys.push(LinearConstraint::eq(
            vec![(d.start + k, 1.0), (x.start, -row[0]), (x.start + 1, -row[1])],
            *qk,
        ));
    }

    // Layer equalities: inputs are d, then h^1..h^L.
    let last = net.layers.len() - 1;
    for (l, layer) in net.layers.iter().enumerate() {
        let input = if l == 0 { d.clone() } else { h[l - 1].clone() };
        let out = if l == last { u.clone() } else { t[l].clone() };
        for (i, (row, b)) in layer.weights.iter().zip(&layer.bias).enumerate() {
            let mut terms = vec![(out.start + i, 1.0)];
            terms.extend(row.iter().enumerate().filter(|(_, w)| **w != 0.0).map(|(j, w)| (input.start + j, -w)));
            sys.push(LinearConstraint::eq(terms, *b));
        }
    }

    match target {
        None => {}
        Some(Target::Cell(cell)) => {
            if cell.aux.len() != from.aux.len() {
                return Err(SmcError::DimensionMismatch("target cell auxiliary dimension".into()));
            }
            region_constraints(&mut sys, x_next.start, cell);
        }
        Some(Target::Constraint(c)) => {
            if c.terms.iter().any(|&(i, _)| i >= n) {
                return Err(SmcError::DimensionMismatch("successor constraint index".into()));
            }
            sys.push(LinearConstraint::new(
                c.terms.iter().map(|&(i, a)| (x_next.start + i, a)).collect(),
                c.relation,
                c.rhs,
            ));
        }
    }

    let mut guarded = Vec::with_capacity(net.relu_count());
    for (tl, hl) in t.iter().zip(&h) {
        for (tj, hj) in tl.clone().zip(hl.clone()) {
            let off = [
                LinearConstraint::eq(vec![(hj, 1.0)], 0.0),
                LinearConstraint::le(vec![(tj, 1.0)], 0.0),
            ];
            let on = [
                LinearConstraint::eq(vec![(hj, 1.0), (tj, -1.0)], 0.0),
                LinearConstraint::ge(vec![(tj, 1.0)], 0.0),
            ];
            guarded.push([off.to_vec(), on.to_vec()]);
        }
    }

    Ok(MonotoneSmcProblem {
        base: sys,
        layout: VarLayout { x, x_next, u, d, t, h },
        widths,
        guarded,
        learned: Vec::new(),
    })
}

/// Exists `x ∈ from` whose closed-loop successor satisfies `target`.
pub fn encode_transition(
    dynamics: &Dynamics,
    from: &StateCell,
    target: Target<'_>,
    maps: &AffineImagingMap,
    net: &NeuralNetwork,
) -> Result<MonotoneSmcProblem, SmcError> {
    build(Some(dynamics), from, Some(target), maps, net)
}

/// Region membership, imaging and network only.
pub fn encode_region(from: &StateCell, maps: &AffineImagingMap, net: &NeuralNetwork) -> Result<MonotoneSmcProblem, SmcError> {
    build(None, from, None, maps, net)
}

/// Closed complements of the workspace half-planes and of the auxiliary
/// bounds; their union covers every successor outside the state space.
pub fn escape_constraints(state_space: &StateCell) -> Vec<SuccessorConstraint> {
    let mut out: Vec<SuccessorConstraint> = state_space
        .region
        .halfplanes()
        .into_iter()
        .map(|(n, c)| SuccessorConstraint {
            terms: vec![(0, n.x), (1, n.y)],
            relation: Relation::Le,
            rhs: c,
        })
        .collect();
    for (i, &(lo, hi)) in state_space.aux.iter().enumerate() {
        out.push(SuccessorConstraint {
            terms: vec![(2 + i, 1.0)],
            relation: Relation::Le,
            rhs: lo,
        });
        out.push(SuccessorConstraint {
            terms: vec![(2 + i, 1.0)],
            relation: Relation::Ge,
            rhs: hi,
        });
    }
    out
}
