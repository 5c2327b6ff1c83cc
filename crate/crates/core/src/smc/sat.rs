//! Small incremental CDCL solver: two watched literals, first-UIP learning,
//! activity-ordered decisions with phase saving. Clauses may be added
//! between calls to [`SatSolver::solve`].

use std::fmt;
use std::ops::Not;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    /// Largest representable variable index.
    pub const MAX_VAR: usize = (u32::MAX >> 1) as usize;

    pub fn new(var: usize, positive: bool) -> Self {
        assert!(var <= Self::MAX_VAR, "variable index {var} out of range");
        Lit((var as u32) << 1 | u32::from(!positive))
    }

    pub fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    fn code(self) -> usize {
        self.0 as usize
    }

    /// `±(var + 1)`.
    pub fn to_dimacs(self) -> i64 {
        let v = self.var() as i64 + 1;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }

    /// `None` for 0 and for variables beyond [`Lit::MAX_VAR`].
    pub fn from_dimacs(v: i64) -> Option<Self> {
        let var = usize::try_from(v.unsigned_abs().checked_sub(1)?).ok()?;
        (var <= Self::MAX_VAR).then(|| Lit::new(var, v > 0))
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(Vec<bool>),
    Unsat,
    /// Conflict budget exhausted.
    Unknown,
}

#[derive(Debug, Clone)]
pub struct SatSolver {
    num_vars: usize,
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    value: Vec<Option<bool>>,
    level: Vec<usize>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    phase: Vec<bool>,
    seen: Vec<bool>,
    unsat: bool,
    conflicts: u64,
}

impl SatSolver {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * num_vars],
            value: vec![None; num_vars],
            level: vec![0; num_vars],
            reason: vec![None; num_vars],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; num_vars],
            var_inc: 1.0,
            phase: vec![true; num_vars],
            seen: vec![false; num_vars],
            unsat: false,
            conflicts: 0,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// Total conflicts over all calls.
    pub fn conflicts(&self) -> u64 {
        self.conflicts
    }

    fn lit_value(&self, l: Lit) -> Option<bool> {
        self.value[l.var()].map(|v| v == l.is_positive())
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let v = l.var();
        self.value[v] = Some(l.is_positive());
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn backtrack(&mut self, lvl: usize) {
        if self.decision_level() <= lvl {
            return;
        }
        let start = self.trail_lim[lvl];
        for &l in &self.trail[start..] {
            let v = l.var();
            self.phase[v] = l.is_positive();
            self.value[v] = None;
            self.reason[v] = None;
        }
        self.trail.truncate(start);
        self.trail_lim.truncate(lvl);
        self.qhead = self.qhead.min(start);
    }

    /// Adds a clause; returns `false` once the clause set is unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        assert!(lits.iter().all(|l| l.var() < self.num_vars), "literal out of range");
        if self.unsat {
            return false;
        }
        self.backtrack(0);
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        if c.windows(2).any(|w| w[0] == !w[1]) {
            return true;
        }
        if c.iter().any(|&l| self.lit_value(l) == Some(true)) {
            return true;
        }
        c.retain(|&l| self.lit_value(l).is_none());
        match c.len() {
            0 => {
                self.unsat = true;
                false
            }
            1 => {
                self.enqueue(c[0], None);
                if self.propagate().is_some() {
                    self.unsat = true;
                }
                !self.unsat
            }
            _ => {
                self.attach(c);
                true
            }
        }
    }

    fn attach(&mut self, c: Vec<Lit>) -> usize {
        let id = self.clauses.len();
        self.watches[c[0].code()].push(id);
        self.watches[c[1].code()].push(id);
        self.clauses.push(c);
        id
    }

    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut kept = Vec::with_capacity(ws.len());
            let mut conflict = None;
            let mut i = 0;
            while i < ws.len() {
                let ci = ws[i];
                i += 1;
                if self.clauses[ci][0] == false_lit {
                    self.clauses[ci].swap(0, 1);
                }
                let first = self.clauses[ci][0];
                if self.lit_value(first) == Some(true) {
                    kept.push(ci);
                    continue;
                }
                let len = self.clauses[ci].len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[ci][k];
                    if self.lit_value(l) != Some(false) {
                        self.clauses[ci].swap(1, k);
                        self.watches[l.code()].push(ci);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                kept.push(ci);
                match self.lit_value(first) {
                    Some(false) => {
                        conflict = Some(ci);
                        kept.extend_from_slice(&ws[i..]);
                        break;
                    }
                    _ => self.enqueue(first, Some(ci)),
                }
            }
            self.watches[false_lit.code()] = kept;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            self.activity.iter_mut().for_each(|a| *a *= 1e-100);
            self.var_inc *= 1e-100;
        }
    }

    /// First-UIP learned clause (asserting literal first) and backjump level.
    fn analyze(&mut self, mut confl: usize) -> (Vec<Lit>, usize) {
        let mut learnt = vec![Lit(0)];
        let mut counter = 0;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        let current = self.decision_level();
        loop {
            let clause = self.clauses[confl].clone();
            let start = usize::from(p.is_some());
            for &q in &clause[start..] {
                let v = q.var();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump(v);
                    if self.level[v] >= current {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var()] {
                    break;
                }
            }
            let lit = self.trail[idx];
            p = Some(lit);
            self.seen[lit.var()] = false;
            counter -= 1;
            if counter == 0 {
                break;
            }
            confl = self.reason[lit.var()].expect("implied literal has a reason");
        }
        learnt[0] = !p.expect("conflict has a current-level literal");
        for l in &learnt[1..] {
            self.seen[l.var()] = false;
        }
        let mut back = 0;
        if learnt.len() > 1 {
            let (k, lvl) = learnt[1..]
                .iter()
                .enumerate()
                .map(|(k, l)| (k + 1, self.level[l.var()]))
                .max_by_key(|&(_, lvl)| lvl)
                .expect("nonempty");
            learnt.swap(1, k);
            back = lvl;
        }
        self.var_inc *= 1.0 / 0.95;
        (learnt, back)
    }

    fn pick_branch(&self) -> Option<Lit> {
        let mut best: Option<usize> = None;
        for v in 0..self.num_vars {
            if self.value[v].is_none() && best.is_none_or(|b| self.activity[v] > self.activity[b]) {
                best = Some(v);
            }
        }
        best.map(|v| Lit::new(v, self.phase[v]))
    }

    /// Searches for a model of the current clause set. `max_conflicts`
    /// bounds the conflicts of this call.
    pub fn solve(&mut self, max_conflicts: Option<u64>) -> SatResult {
        if self.unsat {
            return SatResult::Unsat;
        }
        self.backtrack(0);
        if self.propagate().is_some() {
            self.unsat = true;
            return SatResult::Unsat;
        }
        let mut local = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.conflicts += 1;
                local += 1;
                if self.decision_level() == 0 {
                    self.unsat = true;
                    return SatResult::Unsat;
                }
                let (learnt, back) = self.analyze(confl);
                self.backtrack(back);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let first = learnt[0];
                    let id = self.attach(learnt);
                    self.enqueue(first, Some(id));
                }
                if max_conflicts.is_some_and(|m| local >= m) {
                    self.backtrack(0);
                    return SatResult::Unknown;
                }
                continue;
            }
            match self.pick_branch() {
                None => {
                    let model = self.value.iter().map(|v| v.expect("all assigned")).collect();
                    self.backtrack(0);
                    return SatResult::Sat(model);
                }
                Some(l) => {
                    self.trail_lim.push(self.trail.len());
                    self.enqueue(l, None);
                }
            }
        }
    }
}

/// Clause forbidding exactly `model`.
pub fn blocking_clause(model: &[bool]) -> Vec<Lit> {
    model.iter().enumerate().map(|(v, &b)| Lit::new(v, !b)).collect()
}
