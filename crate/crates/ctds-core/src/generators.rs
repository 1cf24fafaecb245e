//! Seeded random instance generation for the three ensembles studied
//! (random k-SAT, +1-in-3-SAT, random k-XORSAT), the XOR→CNF encoding, and
//! XORSAT leaf-removal core detection.
//!
//! Every generator is a deterministic function of its parameters and a
//! 64-bit seed (see [`crate::rng`] for the pinned stream algorithm).

use crate::formula::{Clause, CnfFormula, CoreReport, Literal};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use thiserror::Error;

/// Which random ensemble to draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ensemble {
    /// Random k-SAT at density α = M/N.
    RandomKSat { k: usize },
    /// Locked +1-in-3-SAT at density l = 3M/N.
    Lop1in3,
    /// Random k-XORSAT at density γ = M/N.
    XorSat { k: usize },
}

/// A fully resolved ensemble draw: the implied clause count is recorded
/// explicitly so archives are unambiguous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub ensemble: Ensemble,
    pub num_vars: usize,
    pub density: f64,
    pub seed: u64,
}

impl EnsembleSpec {
    /// Number of constraints implied by the density (nearest integer).
    pub fn num_constraints(&self) -> usize {
        let m = match self.ensemble {
            Ensemble::Lop1in3 => self.density * self.num_vars as f64 / 3.0,
            _ => self.density * self.num_vars as f64,
        };
        m.round() as usize
    }
}

/// A k-XORSAT instance: parity checks over distinct-variable tuples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct XorInstance {
    pub num_vars: usize,
    /// (0-based variable tuple, parity bit)
    pub checks: Vec<(Vec<usize>, u8)>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeneratorError {
    #[error("invalid dimensions: n = {n}, m = {m}, k = {k}")]
    InvalidDimensions { n: usize, m: usize, k: usize },
    #[error("malformed xor file: {0}")]
    MalformedXor(String),
}

/// Random k-SAT: each clause picks a uniform k-subset of variables and
/// independent fair-coin polarities. Duplicate clauses are permitted.
pub fn gen_random_ksat(
    n: usize,
    m: usize,
    k: usize,
    seed: u64,
) -> Result<CnfFormula, GeneratorError> {
    if n < k || k < 2 || m < 1 {
        return Err(GeneratorError::InvalidDimensions { n, m, k });
    }
    let mut rng = crate::rng::stream(seed);
    let mut clauses = Vec::with_capacity(m);
    for _ in 0..m {
        let vars = sample(&mut rng, n, k);
        let literals = vars
            .iter()
            .map(|v| Literal::new(v, rng.gen::<bool>()))
            .collect();
        clauses.push(Clause::new(literals).expect("distinct by construction"));
    }
    Ok(CnfFormula::new(n, clauses).expect("in range by construction"))
}

/// Random +1-in-3-SAT: `m` uniform positive triples, each encoded as four
/// CNF clauses (x∨y∨z) ∧ (¬x∨¬y) ∧ (¬x∨¬z) ∧ (¬y∨¬z), which is satisfied
/// exactly when one variable of the triple is true.
pub fn gen_lop_1in3(
    n: usize,
    m: usize,
    seed: u64,
) -> Result<(Vec<[usize; 3]>, CnfFormula), GeneratorError> {
    if n < 3 || m < 1 {
        return Err(GeneratorError::InvalidDimensions { n, m, k: 3 });
    }
    let mut rng = crate::rng::stream(seed);
    let mut triples = Vec::with_capacity(m);
    let mut clauses = Vec::with_capacity(4 * m);
    for _ in 0..m {
        let vars = sample(&mut rng, n, 3).into_vec();
        let [x, y, z] = [vars[0], vars[1], vars[2]];
        triples.push([x, y, z]);
        let pos = |v| Literal::new(v, false);
        let neg = |v| Literal::new(v, true);
        clauses.push(Clause::new(vec![pos(x), pos(y), pos(z)]).unwrap());
        clauses.push(Clause::new(vec![neg(x), neg(y)]).unwrap());
        clauses.push(Clause::new(vec![neg(x), neg(z)]).unwrap());
        clauses.push(Clause::new(vec![neg(y), neg(z)]).unwrap());
    }
    Ok((triples, CnfFormula::new(n, clauses).unwrap()))
}

/// Random k-XORSAT: `m` parity checks over uniform k-subsets with fair-coin
/// parity bits.
pub fn gen_xorsat(
    n: usize,
    m: usize,
    k: usize,
    seed: u64,
) -> Result<XorInstance, GeneratorError> {
    if n < k || k < 2 || m < 1 {
        return Err(GeneratorError::InvalidDimensions { n, m, k });
    }
    let mut rng = crate::rng::stream(seed);
    let checks = (0..m)
        .map(|_| {
            let vars = sample(&mut rng, n, k).into_vec();
            let y = rng.gen::<bool>() as u8;
            (vars, y)
        })
        .collect();
    Ok(XorInstance { num_vars: n, checks })
}

/// Encodes a XORSAT instance as CNF: one clause per falsifying parity
/// pattern of each check (2^{k-1} clauses per check; 4 for k = 3). The CNF
/// solution set equals the XOR solution set exactly.
pub fn encode_xorsat_cnf(instance: &XorInstance) -> CnfFormula {
    let mut clauses = Vec::new();
    for (vars, y) in &instance.checks {
        let k = vars.len();
        for pattern in 0..(1u32 << k) {
            let parity = (pattern.count_ones() % 2) as u8;
            if parity == *y {
                continue; // satisfying pattern, no clause
            }
            // clause violated exactly by this pattern: literal is positive
            // where the pattern bit is 0 (variable false), negated where 1
            let literals = vars
                .iter()
                .enumerate()
                .map(|(j, &v)| Literal::new(v, pattern >> j & 1 == 1))
                .collect();
            clauses.push(Clause::new(literals).unwrap());
        }
    }
    CnfFormula::new(instance.num_vars, clauses).unwrap()
}

/// Leaf removal: repeatedly delete any check containing a variable of
/// degree 1 until fixed point. The surviving checks are the core of
/// hyperloops; the fixed point is order-independent.
pub fn leaf_removal_core(instance: &XorInstance) -> CoreReport {
    let mut alive = vec![true; instance.checks.len()];
    let mut degree = vec![0usize; instance.num_vars];
    for (vars, _) in &instance.checks {
        for &v in vars {
            degree[v] += 1;
        }
    }
    // queue of checks to re-examine
    let mut changed = true;
    while changed {
        changed = false;
        for (ci, (vars, _)) in instance.checks.iter().enumerate() {
            if alive[ci] && vars.iter().any(|&v| degree[v] == 1) {
                alive[ci] = false;
                changed = true;
                for &v in vars {
                    degree[v] -= 1;
                }
            }
        }
    }
    let remaining_clauses: BTreeSet<usize> = alive
        .iter()
        .enumerate()
        .filter_map(|(i, &a)| a.then_some(i))
        .collect();
    let remaining_vars: BTreeSet<usize> = remaining_clauses
        .iter()
        .flat_map(|&ci| instance.checks[ci].0.iter().copied())
        .collect();
    CoreReport {
        is_empty: remaining_clauses.is_empty(),
        remaining_clauses,
        remaining_vars,
    }
}

/// Writes the xor text format: header `p xor N M`, then one line per check
/// `i j k : y` with 1-based variable indices.
pub fn write_xor(instance: &XorInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "p xor {} {}", instance.num_vars, instance.checks.len());
    for (vars, y) in &instance.checks {
        for v in vars {
            let _ = write!(out, "{} ", v + 1);
        }
        let _ = writeln!(out, ": {y}");
    }
    out
}

/// Parses the xor text format emitted by [`write_xor`].
pub fn parse_xor(text: &str) -> Result<XorInstance, GeneratorError> {
    let mut num_vars = None;
    let mut declared = 0usize;
    let mut checks = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('p') {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 || fields[1] != "xor" {
                return Err(GeneratorError::MalformedXor(line.to_string()));
            }
            num_vars = Some(
                fields[2]
                    .parse::<usize>()
                    .map_err(|_| GeneratorError::MalformedXor(line.to_string()))?,
            );
            declared = fields[3]
                .parse()
                .map_err(|_| GeneratorError::MalformedXor(line.to_string()))?;
            continue;
        }
        let n = num_vars
            .ok_or_else(|| GeneratorError::MalformedXor("missing `p xor` header".into()))?;
        let (vars_part, y_part) = line
            .split_once(':')
            .ok_or_else(|| GeneratorError::MalformedXor(line.to_string()))?;
        let vars: Vec<usize> = vars_part
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| GeneratorError::MalformedXor(line.to_string()))
                    .and_then(|v| {
                        if v >= 1 && v <= n {
                            Ok(v - 1)
                        } else {
                            Err(GeneratorError::MalformedXor(format!("variable {v} out of range")))
                        }
                    })
            })
            .collect::<Result<_, _>>()?;
        let y: u8 = y_part
            .trim()
            .parse()
            .map_err(|_| GeneratorError::MalformedXor(line.to_string()))?;
        if y > 1 || vars.is_empty() {
            return Err(GeneratorError::MalformedXor(line.to_string()));
        }
        checks.push((vars, y));
    }
    let num_vars =
        num_vars.ok_or_else(|| GeneratorError::MalformedXor("missing `p xor` header".into()))?;
    if checks.len() != declared {
        return Err(GeneratorError::MalformedXor(format!(
            "check count mismatch: declared {declared}, found {}",
            checks.len()
        )));
    }
    Ok(XorInstance { num_vars, checks })
}

/// Evaluates a XOR instance under a ±1 assignment (spin +1 means the Boolean
/// variable is true).
pub fn xor_satisfied(instance: &XorInstance, assignment: &crate::formula::Assignment) -> bool {
    instance.checks.iter().all(|(vars, y)| {
        let parity: u8 = vars
            .iter()
            .map(|&v| (assignment.0[v] > 0) as u8)
            .fold(0, |acc, b| acc ^ b);
        parity == *y
    })
}

/// Materializes an [`EnsembleSpec`] into a CNF formula (and the raw XOR
/// instance, when applicable).
pub fn generate(spec: &EnsembleSpec) -> Result<(CnfFormula, Option<XorInstance>), GeneratorError> {
    let n = spec.num_vars;
    let m = spec.num_constraints();
    match spec.ensemble {
        Ensemble::RandomKSat { k } => Ok((gen_random_ksat(n, m, k, spec.seed)?, None)),
        Ensemble::Lop1in3 => Ok((gen_lop_1in3(n, m, spec.seed)?.1, None)),
        Ensemble::XorSat { k } => {
            let inst = gen_xorsat(n, m, k, spec.seed)?;
            Ok((encode_xorsat_cnf(&inst), Some(inst)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Assignment;

    #[test]
    fn ksat_rejects_bad_dims() {
        assert!(gen_random_ksat(10, 0, 3, 1).is_err());
        assert!(gen_random_ksat(2, 5, 3, 1).is_err());
    }

    #[test]
    fn ksat_deterministic() {
        let a = gen_random_ksat(20, 85, 3, 7).unwrap();
        let b = gen_random_ksat(20, 85, 3, 7).unwrap();
        assert_eq!(a, b);
        let c = gen_random_ksat(20, 85, 3, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn ksat_occurrences_roughly_uniform() {
        // chi-square-style check: each variable's occurrence count within
        // 3 sigma of the multinomial expectation over 1e4 clauses
        let n = 100;
        let m = 10_000;
        let f = gen_random_ksat(n, m, 3, 99).unwrap();
        let mut counts = vec![0f64; n];
        for c in &f.clauses {
            for l in &c.literals {
                counts[l.var] += 1.0;
            }
        }
        let total = 3.0 * m as f64;
        let p = 1.0 / n as f64;
        let mean = total * p;
        let sd = (total * p * (1.0 - p)).sqrt();
        let outliers = counts
            .iter()
            .filter(|&&c| (c - mean).abs() > 3.0 * sd)
            .count();
        // ~0.27% expected beyond 3 sigma; allow a small margin
        assert!(outliers <= 3, "outliers = {outliers}");
    }

    #[test]
    fn lop_encoding_is_exactly_one() {
        let (triples, f) = gen_lop_1in3(3, 1, 5).unwrap();
        assert_eq!(triples.len(), 1);
        assert_eq!(f.clauses.len(), 4);
        let mut sat_count = 0;
        for bits in 0..8u8 {
            let a = Assignment(
                (0..3)
                    .map(|i| if bits >> i & 1 == 1 { 1 } else { -1 })
                    .collect(),
            );
            let (sat, _) = f.evaluate(&a).unwrap();
            let ones = (0..3).filter(|&i| bits >> i & 1 == 1).count();
            assert_eq!(sat, ones == 1);
            if sat {
                sat_count += 1;
            }
        }
        assert_eq!(sat_count, 3);
    }

    #[test]
    fn lop_density_bookkeeping() {
        // l = 2.28, n = 30 → m = round(2.28·30/3) = 23 constraints, 92 clauses
        let spec = EnsembleSpec {
            ensemble: Ensemble::Lop1in3,
            num_vars: 30,
            density: 2.28,
            seed: 0,
        };
        assert_eq!(spec.num_constraints(), 23);
        let (_, f) = gen_lop_1in3(30, spec.num_constraints(), 0).unwrap();
        assert_eq!(f.clauses.len(), 92);
    }

    #[test]
    fn xorsat_checks_distinct_vars() {
        let inst = gen_xorsat(15, 9, 3, 3).unwrap();
        assert_eq!(inst.checks.len(), 9);
        for (vars, _) in &inst.checks {
            let set: BTreeSet<_> = vars.iter().collect();
            assert_eq!(set.len(), 3);
        }
        assert_eq!(gen_xorsat(15, 9, 3, 3).unwrap(), inst);
    }

    #[test]
    fn xor_encoding_clause_patterns() {
        // check (1,2,3) with y = 1: the four even-parity excluding clauses
        let inst = XorInstance {
            num_vars: 3,
            checks: vec![(vec![0, 1, 2], 1)],
        };
        let f = encode_xorsat_cnf(&inst);
        assert_eq!(f.clauses.len(), 4);
        for bits in 0..8u8 {
            let a = Assignment(
                (0..3)
                    .map(|i| if bits >> i & 1 == 1 { 1 } else { -1 })
                    .collect(),
            );
            let parity = (bits.count_ones() % 2) as u8;
            assert_eq!(f.evaluate(&a).unwrap().0, parity == 1);
            assert_eq!(xor_satisfied(&inst, &a), parity == 1);
        }
    }

    #[test]
    fn leaf_removal_chain_empties() {
        // chain: checks share single variables pairwise; end checks always
        // hold a degree-1 variable
        let inst = XorInstance {
            num_vars: 7,
            checks: vec![(vec![0, 1, 2], 0), (vec![2, 3, 4], 1), (vec![4, 5, 6], 0)],
        };
        assert!(leaf_removal_core(&inst).is_empty);
    }

    #[test]
    fn leaf_removal_triangle_survives() {
        // triangle hyperloop: each variable has degree 2
        let inst = XorInstance {
            num_vars: 3,
            checks: vec![(vec![0, 1], 0), (vec![1, 2], 1), (vec![2, 0], 0)],
        };
        let core = leaf_removal_core(&inst);
        assert_eq!(core.remaining_clauses.len(), 3);
    }

    #[test]
    fn xor_round_trip() {
        let inst = gen_xorsat(15, 9, 3, 11).unwrap();
        let text = write_xor(&inst);
        assert_eq!(parse_xor(&text).unwrap(), inst);
    }
}
