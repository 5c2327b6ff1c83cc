use super::encode::MonotoneSmcProblem;
use super::lp::{feasible_parts, LinearConstraint, LinearConstraintSystem, LpError, LpOutcome};
use super::sat::{blocking_clause, Lit, SatResult, SatSolver};
use super::SmcError;
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmcBudget {
    /// SAT-model / LP rounds per call.
    pub max_rounds: Option<u64>,
    /// Conflicts per SAT call.
    pub max_sat_conflicts: Option<u64>,
    pub time_limit: Option<Duration>,
    pub lp_tol: f64,
}

impl Default for SmcBudget {
    fn default() -> Self {
        Self {
            max_rounds: Some(100_000),
            max_sat_conflicts: Some(1_000_000),
            time_limit: None,
            lp_tol: super::lp::LP_TOL,
        }
    }
}

impl SmcBudget {
    pub fn unlimited() -> Self {
        Self {
            max_rounds: None,
            max_sat_conflicts: None,
            time_limit: None,
            lp_tol: super::lp::LP_TOL,
        }
    }
}

/// Literals whose conjunction with the base system is infeasible.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Conflict {
    pub literals: Vec<Lit>,
}

impl Conflict {
    /// The learned clause `¬l_1 ∨ … ∨ ¬l_k`.
    pub fn clause(&self) -> Vec<Lit> {
        self.literals.iter().map(|&l| !l).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SmcStatus {
    Sat,
    Unsat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub values: Vec<f64>,
    pub phases: Vec<bool>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SmcStats {
    pub rounds: u64,
    pub lp_calls: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmcOutcome {
    pub status: SmcStatus,
    pub witness: Option<Witness>,
    pub conflicts: Vec<Conflict>,
    pub stats: SmcStats,
}

fn model_literals(model: &[bool]) -> Vec<Lit> {
    model.iter().enumerate().map(|(v, &b)| Lit::new(v, b)).collect()
}

struct Checker<'a> {
    problem: &'a MonotoneSmcProblem,
    tol: f64,
    lp_calls: u64,
}

impl Checker<'_> {
    fn check(&mut self, lits: &[Lit]) -> Result<LpOutcome, LpError> {
        self.lp_calls += 1;
        let mut parts: Vec<&[LinearConstraint]> = Vec::with_capacity(lits.len() + 1);
        parts.push(&self.problem.base.constraints);
        parts.extend(lits.iter().map(|&l| self.problem.literal_constraints(l)));
        feasible_parts(self.problem.base.num_vars(), &parts, self.tol)
    }

    /// Deletion filter, dropping literals from the back first.
    fn deletion_filter(&mut self, lits: &[Lit]) -> Vec<Lit> {
        let mut keep: Vec<Lit> = lits.to_vec();
        let mut i = keep.len();
        while i > 0 {
            i -= 1;
            let mut trial = keep.clone();
            trial.remove(i);
            if let Ok(LpOutcome::Infeasible { .. }) = self.check(&trial) {
                keep = trial;
            }
        }
        keep
    }
}

/// Single-deletion-minimal subset of `literals` that remains infeasible
/// together with `base`. Literals later in the slice are dropped first.
pub fn extract_iis(
    base: &LinearConstraintSystem,
    literals: &[Lit],
    guarded: &[[Vec<LinearConstraint>; 2]],
    tol: f64,
) -> Result<Conflict, SmcError> {
    let problem = MonotoneSmcProblem {
        base: base.clone(),
        layout: super::encode::VarLayout {
            x: 0..0,
            x_next: 0..0,
            u: 0..0,
            d: 0..0,
            t: vec![],
            h: vec![],
        },
        widths: vec![guarded.len()],
        guarded: guarded.to_vec(),
        learned: vec![],
    };
    let mut c = Checker {
        problem: &problem,
        tol,
        lp_calls: 0,
    };
    match c.check(literals)? {
        LpOutcome::Feasible(_) => Err(SmcError::NotInfeasible),
        LpOutcome::Infeasible { .. } => Ok(Conflict {
            literals: c.deletion_filter(literals),
        }),
    }
}

struct Deadline {
    start: Instant,
    limit: Option<Duration>,
}

impl Deadline {
    fn expired(&self) -> bool {
        self.limit.is_some_and(|l| self.start.elapsed() > l)
    }
}

/// Lazy SAT + LP search over the ReLU indicators.
pub fn smc_solve(problem: &MonotoneSmcProblem, budget: &SmcBudget) -> Result<SmcOutcome, SmcError> {
    let deadline = Deadline {
        start: Instant::now(),
        limit: budget.time_limit,
    };
    let mut sat = SatSolver::new(problem.num_bools());
    for c in &problem.learned {
        sat.add_clause(c);
    }
    let mut checker = Checker {
        problem,
        tol: budget.lp_tol,
        lp_calls: 0,
    };
    let mut conflicts = Vec::new();
    let mut rounds = 0u64;
    loop {
        if deadline.expired() || budget.max_rounds.is_some_and(|m| rounds >= m) {
            return Err(SmcError::ResourceLimit);
        }
        rounds += 1;
        let model = match sat.solve(budget.max_sat_conflicts) {
            SatResult::Unsat => {
                return Ok(SmcOutcome {
                    status: SmcStatus::Unsat,
                    witness: None,
                    conflicts,
                    stats: SmcStats {
                        rounds,
                        lp_calls: checker.lp_calls,
                    },
                })
            }
            SatResult::Unknown => return Err(SmcError::ResourceLimit),
            SatResult::Sat(m) => m,
        };
        let lits = model_literals(&model);
        match checker.check(&lits).map_err(SmcError::Numerical)? {
            LpOutcome::Feasible(values) => {
                return Ok(SmcOutcome {
                    status: SmcStatus::Sat,
                    witness: Some(Witness { values, phases: model }),
                    conflicts,
                    stats: SmcStats {
                        rounds,
                        lp_calls: checker.lp_calls,
                    },
                })
            }
            LpOutcome::Infeasible { .. } => {
                let core = checker.deletion_filter(&lits);
                let conflict = Conflict { literals: core };
                sat.add_clause(&conflict.clause());
                if !conflict.literals.is_empty() {
                    conflicts.push(conflict);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessResult {
    pub feasible_phases: Vec<Vec<bool>>,
    pub conflicts: Vec<Conflict>,
    pub stats: SmcStats,
}

impl PreprocessResult {
    pub fn clauses(&self) -> Vec<Vec<Lit>> {
        self.conflicts.iter().map(Conflict::clause).collect()
    }
}

/// Enumerates every feasible phase pattern of `problem` (normally the
/// reduced single-region encoding), learning a conflict for each
/// infeasible candidate.
pub fn preprocess_region(problem: &MonotoneSmcProblem, budget: &SmcBudget) -> Result<PreprocessResult, SmcError> {
    let deadline = Deadline {
        start: Instant::now(),
        limit: budget.time_limit,
    };
    let mut sat = SatSolver::new(problem.num_bools());
    for c in &problem.learned {
        sat.add_clause(c);
    }
    let mut checker = Checker {
        problem,
        tol: budget.lp_tol,
        lp_calls: 0,
    };
    let mut feasible = Vec::new();
    let mut conflicts = Vec::new();
    let mut rounds = 0u64;
    loop {
        if deadline.expired() || budget.max_rounds.is_some_and(|m| rounds >= m) {
            return Err(SmcError::ResourceLimit);
        }
        rounds += 1;
        let model = match sat.solve(budget.max_sat_conflicts) {
            SatResult::Unsat => break,
            SatResult::Unknown => return Err(SmcError::ResourceLimit),
            SatResult::Sat(m) => m,
        };
        let lits = model_literals(&model);
        match checker.check(&lits).map_err(SmcError::Numerical)? {
            LpOutcome::Feasible(_) => {
                sat.add_clause(&blocking_clause(&model));
                feasible.push(model);
            }
            LpOutcome::Infeasible { .. } => {
                let conflict = Conflict {
                    literals: checker.deletion_filter(&lits),
                };
                sat.add_clause(&conflict.clause());
                if conflict.literals.is_empty() {
                    break;
                }
                conflicts.push(conflict);
            }
        }
    }
    feasible.sort();
    Ok(PreprocessResult {
        feasible_phases: feasible,
        conflicts,
        stats: SmcStats {
            rounds,
            lp_calls: checker.lp_calls,
        },
    })
}

/// Conflict clauses as DIMACS-style integer lists.
pub fn clauses_to_json(clauses: &[Vec<Lit>]) -> String {
    let v: Vec<Vec<i64>> = clauses.iter().map(|c| c.iter().map(|l| l.to_dimacs()).collect()).collect();
    serde_json::to_string(&v).expect("clauses serialize")
}

/// Parses a clause list; every literal must reference one of `num_bools`
/// indicators.
pub fn clauses_from_json(text: &str, num_bools: usize) -> Result<Vec<Vec<Lit>>, SmcError> {
    let v: Vec<Vec<i64>> = serde_json::from_str(text).map_err(|e| SmcError::Parse(e.to_string()))?;
    v.into_iter()
        .enumerate()
        .map(|(i, c)| {
            if c.is_empty() {
                return Err(SmcError::Parse(format!("clause {i} is empty")));
            }
            c.into_iter()
                .map(|x| match Lit::from_dimacs(x) {
                    Some(l) if l.var() < num_bools => Ok(l),
                    _ => Err(SmcError::Parse(format!("clause {i}: literal {x} outside 1..={num_bools}"))),
                })
                .collect()
        })
        .collect()
}
