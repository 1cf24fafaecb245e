//! CNF data model, DIMACS I/O, assignment evaluation, pure-literal core
//! extraction, and a small complete DPLL solver used as a ground-truth
//! oracle.
//!
//! Variables are 1-based in the DIMACS text format and 0-based everywhere
//! else; the conversion happens only in [`parse_dimacs`] / [`write_dimacs`].

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use thiserror::Error;

/// One literal: a 0-based variable index and a polarity (+1 direct, -1 negated).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn new(var: usize, negated: bool) -> Self {
        Literal { var, negated }
    }

    /// The coefficient c_mi of this literal: +1 direct, -1 negated.
    #[inline]
    pub fn coeff(&self) -> f64 {
        if self.negated {
            -1.0
        } else {
            1.0
        }
    }

    /// True under a ±1 spin value for its variable.
    #[inline]
    pub fn satisfied_by(&self, spin: i8) -> bool {
        (spin > 0) != self.negated
    }
}

/// A disjunction of literals over distinct variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub literals: Vec<Literal>,
}

impl Clause {
    /// Builds a clause, rejecting repeated variables (tautologies included).
    pub fn new(literals: Vec<Literal>) -> Result<Self, FormulaError> {
        let mut seen = BTreeSet::new();
        for lit in &literals {
            if !seen.insert(lit.var) {
                return Err(FormulaError::DuplicateVariableInClause { var: lit.var + 1 });
            }
        }
        if literals.is_empty() {
            return Err(FormulaError::EmptyClause);
        }
        Ok(Clause { literals })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.literals.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }
}

/// A CNF formula: `num_vars` variables and a clause list.
///
/// Invariant: every clause references variables `< num_vars`, has distinct
/// variables, and is non-empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnfFormula {
    pub num_vars: usize,
    pub clauses: Vec<Clause>,
}

/// A discrete ±1 spin assignment, one entry per variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment(pub Vec<i8>);

impl Assignment {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Hamming distance to another assignment of the same length.
    pub fn hamming(&self, other: &Assignment) -> usize {
        self.0
            .iter()
            .zip(&other.0)
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// What survives iterated removal of clauses containing pure literals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreReport {
    pub remaining_clauses: BTreeSet<usize>,
    pub remaining_vars: BTreeSet<usize>,
    pub is_empty: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("malformed DIMACS header: {0}")]
    MalformedHeader(String),
    #[error("variable {var} out of range (num_vars = {num_vars})")]
    VariableOutOfRange { var: usize, num_vars: usize },
    #[error("variable {var} repeated within a clause")]
    DuplicateVariableInClause { var: usize },
    #[error("clause count mismatch: header declares {declared}, found {found}")]
    ClauseCountMismatch { declared: usize, found: usize },
    #[error("empty clause")]
    EmptyClause,
    #[error("assignment length {got} does not match num_vars {want}")]
    LengthMismatch { got: usize, want: usize },
}

impl CnfFormula {
    /// Builds a formula, validating clause variable ranges.
    pub fn new(num_vars: usize, clauses: Vec<Clause>) -> Result<Self, FormulaError> {
        for clause in &clauses {
            for lit in &clause.literals {
                if lit.var >= num_vars {
                    return Err(FormulaError::VariableOutOfRange {
                        var: lit.var + 1,
                        num_vars,
                    });
                }
            }
        }
        Ok(CnfFormula { num_vars, clauses })
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// Constraint density M/N.
    pub fn density(&self) -> f64 {
        self.clauses.len() as f64 / self.num_vars as f64
    }

    /// Counts violated clauses under a ±1 assignment.
    pub fn evaluate(&self, assignment: &Assignment) -> Result<(bool, usize), FormulaError> {
        if assignment.len() != self.num_vars {
            return Err(FormulaError::LengthMismatch {
                got: assignment.len(),
                want: self.num_vars,
            });
        }
        let violated = self
            .clauses
            .iter()
            .filter(|c| {
                !c.literals
                    .iter()
                    .any(|l| l.satisfied_by(assignment.0[l.var]))
            })
            .count();
        Ok((violated == 0, violated))
    }

    /// Iterated pure-literal removal: while some variable occurs in the
    /// remaining clauses with only one polarity, drop every clause
    /// containing it. The fixed point is order-independent.
    pub fn pure_literal_core(&self) -> CoreReport {
        let mut alive: Vec<bool> = vec![true; self.clauses.len()];
        loop {
            // polarity histogram over remaining clauses
            let mut pos = vec![0usize; self.num_vars];
            let mut neg = vec![0usize; self.num_vars];
            for (ci, clause) in self.clauses.iter().enumerate() {
                if !alive[ci] {
                    continue;
                }
                for lit in &clause.literals {
                    if lit.negated {
                        neg[lit.var] += 1;
                    } else {
                        pos[lit.var] += 1;
                    }
                }
            }
            let mut changed = false;
            for v in 0..self.num_vars {
                let occurs = pos[v] + neg[v];
                if occurs > 0 && (pos[v] == 0 || neg[v] == 0) {
                    for (ci, clause) in self.clauses.iter().enumerate() {
                        if alive[ci] && clause.literals.iter().any(|l| l.var == v) {
                            alive[ci] = false;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let remaining_clauses: BTreeSet<usize> = alive
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| a.then_some(i))
            .collect();
        let remaining_vars: BTreeSet<usize> = remaining_clauses
            .iter()
            .flat_map(|&ci| self.clauses[ci].literals.iter().map(|l| l.var))
            .collect();
        CoreReport {
            is_empty: remaining_clauses.is_empty(),
            remaining_clauses,
            remaining_vars,
        }
    }
}

/// Parses a DIMACS CNF document.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula, FormulaError> {
    let mut num_vars: Option<usize> = None;
    let mut declared_clauses = 0usize;
    let mut clauses: Vec<Clause> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();

    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('p') {
            if num_vars.is_some() {
                return Err(FormulaError::MalformedHeader("duplicate header".into()));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 || fields[0] != "p" || fields[1] != "cnf" {
                return Err(FormulaError::MalformedHeader(line.to_string()));
            }
            num_vars = Some(
                fields[2]
                    .parse()
                    .map_err(|_| FormulaError::MalformedHeader(line.to_string()))?,
            );
            declared_clauses = fields[3]
                .parse()
                .map_err(|_| FormulaError::MalformedHeader(line.to_string()))?;
            continue;
        }
        let n = num_vars
            .ok_or_else(|| FormulaError::MalformedHeader("missing `p cnf` header".into()))?;
        for tok in line.split_whitespace() {
            let val: i64 = tok
                .parse()
                .map_err(|_| FormulaError::MalformedHeader(format!("bad literal `{tok}`")))?;
            if val == 0 {
                clauses.push(Clause::new(std::mem::take(&mut current))?);
            } else {
                let var = val.unsigned_abs() as usize;
                if var > n {
                    return Err(FormulaError::VariableOutOfRange { var, num_vars: n });
                }
                current.push(Literal::new(var - 1, val < 0));
            }
        }
    }
    let num_vars =
        num_vars.ok_or_else(|| FormulaError::MalformedHeader("missing `p cnf` header".into()))?;
    if !current.is_empty() {
        clauses.push(Clause::new(current)?);
    }
    if clauses.len() != declared_clauses {
        return Err(FormulaError::ClauseCountMismatch {
            declared: declared_clauses,
            found: clauses.len(),
        });
    }
    CnfFormula::new(num_vars, clauses)
}

/// Writes canonical DIMACS: header, then one zero-terminated clause per line.
pub fn write_dimacs(formula: &CnfFormula) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "p cnf {} {}",
        formula.num_vars,
        formula.clauses.len()
    );
    for clause in &formula.clauses {
        for lit in &clause.literals {
            let v = (lit.var + 1) as i64;
            let _ = write!(out, "{} ", if lit.negated { -v } else { v });
        }
        let _ = writeln!(out, "0");
    }
    out
}

/// Outcome of the DPLL oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DpllResult {
    Sat(Assignment),
    Unsat,
    BudgetExceeded,
}

/// Complete DPLL with unit propagation and pure-literal elimination.
///
/// Branching is on the most frequent unassigned variable, positive polarity
/// first, which keeps the search deterministic. `decision_budget` bounds the
/// number of branch decisions; exhaustion is a value, not an error.
pub fn dpll_solve(formula: &CnfFormula, decision_budget: u64) -> DpllResult {
    let mut assign: Vec<i8> = vec![0; formula.num_vars];
    let mut budget = decision_budget;
    match dpll_rec(formula, &mut assign, &mut budget) {
        Some(true) => {
            // unconstrained variables default to +1
            for v in assign.iter_mut() {
                if *v == 0 {
                    *v = 1;
                }
            }
            let witness = Assignment(assign);
            debug_assert!(formula.evaluate(&witness).unwrap().0);
            DpllResult::Sat(witness)
        }
        Some(false) => DpllResult::Unsat,
        None => DpllResult::BudgetExceeded,
    }
}

/// Enumerates all satisfying assignments by exhaustive DPLL backtracking.
/// Free variables at a satisfying leaf are expanded to both polarities.
pub fn dpll_enumerate(formula: &CnfFormula) -> Vec<Assignment> {
    let mut assign: Vec<i8> = vec![0; formula.num_vars];
    let mut out = Vec::new();
    enumerate_rec(formula, &mut assign, &mut out);
    out.sort();
    out
}

fn enumerate_rec(formula: &CnfFormula, assign: &mut Vec<i8>, out: &mut Vec<Assignment>) {
    // unit propagation is unsound for enumeration only via pure literals,
    // so propagate units but never eliminate pure literals here
    let mut trail: Vec<usize> = Vec::new();
    loop {
        match propagate_step(formula, assign) {
            PropStep::Conflict => {
                for v in trail {
                    assign[v] = 0;
                }
                return;
            }
            PropStep::Unit(var, val) => {
                assign[var] = val;
                trail.push(var);
            }
            PropStep::None => break,
        }
    }
    if let Some((sat, _)) = partial_status(formula, assign) {
        if sat {
            expand_free(assign, 0, out);
            for v in trail {
                assign[v] = 0;
            }
            return;
        }
    }
    match first_unassigned(formula, assign) {
        None => {
            let full = Assignment(assign.iter().map(|&v| if v == 0 { 1 } else { v }).collect());
            if formula.evaluate(&full).unwrap().0 {
                out.push(full);
            }
        }
        Some(var) => {
            for val in [1i8, -1i8] {
                assign[var] = val;
                enumerate_rec(formula, assign, out);
                assign[var] = 0;
            }
        }
    }
    for v in trail {
        assign[v] = 0;
    }
}

fn expand_free(assign: &[i8], from: usize, out: &mut Vec<Assignment>) {
    if let Some(pos) = assign[from..].iter().position(|&v| v == 0) {
        let idx = from + pos;
        let mut a = assign.to_vec();
        a[idx] = 1;
        expand_free(&a, idx + 1, out);
        a[idx] = -1;
        expand_free(&a, idx + 1, out);
    } else {
        out.push(Assignment(assign.to_vec()));
    }
}

enum PropStep {
    Conflict,
    Unit(usize, i8),
    None,
}

/// One pass over the clauses: reports a conflict, a forced unit literal, or
/// neither. `assign` entries: 0 unassigned, ±1 assigned.
fn propagate_step(formula: &CnfFormula, assign: &[i8]) -> PropStep {
    for clause in &formula.clauses {
        let mut unassigned: Option<&Literal> = None;
        let mut n_unassigned = 0;
        let mut satisfied = false;
        for lit in &clause.literals {
            match assign[lit.var] {
                0 => {
                    n_unassigned += 1;
                    unassigned = Some(lit);
                }
                v => {
                    if lit.satisfied_by(v) {
                        satisfied = true;
                        break;
                    }
                }
            }
        }
        if satisfied {
            continue;
        }
        match n_unassigned {
            0 => return PropStep::Conflict,
            1 => {
                let lit = unassigned.unwrap();
                return PropStep::Unit(lit.var, if lit.negated { -1 } else { 1 });
            }
            _ => {}
        }
    }
    PropStep::None
}

/// (all clauses satisfied, violated count) over assigned variables only;
/// `None` if some clause is still undetermined.
fn partial_status(formula: &CnfFormula, assign: &[i8]) -> Option<(bool, usize)> {
    let mut all_sat = true;
    for clause in &formula.clauses {
        let mut satisfied = false;
        let mut undetermined = false;
        for lit in &clause.literals {
            match assign[lit.var] {
                0 => undetermined = true,
                v => {
                    if lit.satisfied_by(v) {
                        satisfied = true;
                        break;
                    }
                }
            }
        }
        if !satisfied {
            if undetermined {
                return None;
            }
            all_sat = false;
        }
    }
    Some((all_sat, 0))
}

fn first_unassigned(formula: &CnfFormula, assign: &[i8]) -> Option<usize> {
    // most frequent unassigned variable over not-yet-satisfied clauses
    let mut counts = vec![0usize; formula.num_vars];
    for clause in &formula.clauses {
        let satisfied = clause
            .literals
            .iter()
            .any(|l| assign[l.var] != 0 && l.satisfied_by(assign[l.var]));
        if satisfied {
            continue;
        }
        for lit in &clause.literals {
            if assign[lit.var] == 0 {
                counts[lit.var] += 1;
            }
        }
    }
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(v, _)| v)
}

fn dpll_rec(formula: &CnfFormula, assign: &mut Vec<i8>, budget: &mut u64) -> Option<bool> {
    let mut trail: Vec<usize> = Vec::new();
    // unit propagation to fixed point
    loop {
        match propagate_step(formula, assign) {
            PropStep::Conflict => {
                for v in trail {
                    assign[v] = 0;
                }
                return Some(false);
            }
            PropStep::Unit(var, val) => {
                assign[var] = val;
                trail.push(var);
            }
            PropStep::None => break,
        }
    }
    // pure-literal elimination
    loop {
        let mut pos = vec![false; formula.num_vars];
        let mut neg = vec![false; formula.num_vars];
        for clause in &formula.clauses {
            let satisfied = clause
                .literals
                .iter()
                .any(|l| assign[l.var] != 0 && l.satisfied_by(assign[l.var]));
            if satisfied {
                continue;
            }
            for lit in &clause.literals {
                if assign[lit.var] == 0 {
                    if lit.negated {
                        neg[lit.var] = true;
                    } else {
                        pos[lit.var] = true;
                    }
                }
            }
        }
        let mut changed = false;
        for v in 0..formula.num_vars {
            if assign[v] == 0 && (pos[v] != neg[v]) {
                assign[v] = if pos[v] { 1 } else { -1 };
                trail.push(v);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if let Some((sat, _)) = partial_status(formula, assign) {
        if sat {
            return Some(true);
        }
        // conflict under full evaluation of determined clauses
        for v in trail {
            assign[v] = 0;
        }
        return Some(false);
    }
    let var = match first_unassigned(formula, assign) {
        Some(v) => v,
        None => {
            let ok = partial_status(formula, assign).map(|(s, _)| s).unwrap_or(false);
            if !ok {
                for v in trail {
                    assign[v] = 0;
                }
            }
            return Some(ok);
        }
    };
    if *budget == 0 {
        for v in trail {
            assign[v] = 0;
        }
        return None;
    }
    *budget -= 1;
    for val in [1i8, -1i8] {
        assign[var] = val;
        match dpll_rec(formula, assign, budget) {
            Some(true) => return Some(true),
            Some(false) => {}
            None => {
                assign[var] = 0;
                for v in trail {
                    assign[v] = 0;
                }
                return None;
            }
        }
    }
    assign[var] = 0;
    for v in trail {
        assign[v] = 0;
    }
    Some(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(v: i64) -> Literal {
        Literal::new((v.unsigned_abs() - 1) as usize, v < 0)
    }

    fn cnf(num_vars: usize, clauses: &[&[i64]]) -> CnfFormula {
        CnfFormula::new(
            num_vars,
            clauses
                .iter()
                .map(|c| Clause::new(c.iter().map(|&v| lit(v)).collect()).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn parse_basic() {
        let f = parse_dimacs("p cnf 2 1\n1 -2 0").unwrap();
        assert_eq!(f.num_vars, 2);
        assert_eq!(f.clauses.len(), 1);
        assert_eq!(f.clauses[0].literals[0], lit(1));
        assert_eq!(f.clauses[0].literals[1], lit(-2));
    }

    #[test]
    fn parse_out_of_range() {
        assert_eq!(
            parse_dimacs("p cnf 2 1\n1 3 0"),
            Err(FormulaError::VariableOutOfRange { var: 3, num_vars: 2 })
        );
    }

    #[test]
    fn parse_rejects_duplicate_var() {
        assert!(matches!(
            parse_dimacs("p cnf 2 1\n1 -1 0"),
            Err(FormulaError::DuplicateVariableInClause { .. })
        ));
    }

    #[test]
    fn parse_clause_count_mismatch() {
        assert!(matches!(
            parse_dimacs("p cnf 2 2\n1 2 0"),
            Err(FormulaError::ClauseCountMismatch { .. })
        ));
    }

    #[test]
    fn parse_missing_header() {
        assert!(matches!(
            parse_dimacs("1 2 0"),
            Err(FormulaError::MalformedHeader(_))
        ));
    }

    #[test]
    fn write_basic() {
        let f = cnf(1, &[&[-1]]);
        assert_eq!(write_dimacs(&f), "p cnf 1 1\n-1 0\n");
        let f = cnf(3, &[&[1, 2, 3]]);
        assert_eq!(write_dimacs(&f), "p cnf 3 1\n1 2 3 0\n");
    }

    #[test]
    fn round_trip() {
        let f = cnf(4, &[&[1, -2, 3], &[-4, 2], &[3]]);
        assert_eq!(parse_dimacs(&write_dimacs(&f)).unwrap(), f);
    }

    #[test]
    fn evaluate_basic() {
        let f = cnf(2, &[&[1, -2]]);
        assert_eq!(f.evaluate(&Assignment(vec![1, 1])).unwrap(), (true, 0));
        let f = cnf(2, &[&[1, 2]]);
        assert_eq!(f.evaluate(&Assignment(vec![-1, -1])).unwrap(), (false, 1));
        assert!(matches!(
            f.evaluate(&Assignment(vec![1])),
            Err(FormulaError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn pure_literal_core_all_pure() {
        let f = cnf(3, &[&[1, 2, 3]]);
        assert!(f.pure_literal_core().is_empty);
    }

    #[test]
    fn pure_literal_core_no_removal() {
        // both variables appear in both polarities in every reduction step
        let f = cnf(2, &[&[1, 2], &[-1, 2], &[-2, 1], &[-1, -2]]);
        let core = f.pure_literal_core();
        assert!(!core.is_empty);
        assert_eq!(core.remaining_clauses.len(), 4);
    }

    #[test]
    fn dpll_unsat_pair() {
        let f = cnf(1, &[&[1], &[-1]]);
        assert_eq!(dpll_solve(&f, 1000), DpllResult::Unsat);
    }

    #[test]
    fn dpll_forced_by_units() {
        let f = cnf(2, &[&[1, 2], &[-1]]);
        match dpll_solve(&f, 1000) {
            DpllResult::Sat(w) => {
                assert_eq!(w.0, vec![-1, 1]);
                assert!(f.evaluate(&w).unwrap().0);
            }
            other => panic!("expected Sat, got {other:?}"),
        }
    }

    #[test]
    fn enumerate_simple() {
        let f = cnf(2, &[&[1, 2]]);
        let sols = dpll_enumerate(&f);
        assert_eq!(sols.len(), 3);
        assert!(!sols.contains(&Assignment(vec![-1, -1])));
    }

    #[test]
    fn enumerate_unsat() {
        let f = cnf(1, &[&[1], &[-1]]);
        assert!(dpll_enumerate(&f).is_empty());
    }
}
