//! Exact solution enumeration and clustering into connected components of
//! the Hamming-distance-1 graph.

use super::AnalysisError;
use crate::formula::{dpll_enumerate, Assignment, CnfFormula};
use std::collections::HashMap;

/// Default variable cap for exhaustive enumeration.
pub const ENUMERATION_CAP: usize = 26;

/// All satisfying assignments, sorted, via backtracking search.
pub fn enumerate_solutions(formula: &CnfFormula) -> Result<Vec<Assignment>, AnalysisError> {
    enumerate_solutions_capped(formula, ENUMERATION_CAP)
}

/// [`enumerate_solutions`] with an explicit feasibility cap. The search
/// prunes, so locked instances with few solutions stay cheap well past the
/// default cap; the caller owns that judgment.
pub fn enumerate_solutions_capped(
    formula: &CnfFormula,
    cap: usize,
) -> Result<Vec<Assignment>, AnalysisError> {
    if formula.num_vars > cap {
        return Err(AnalysisError::TooLarge {
            num_vars: formula.num_vars,
            cap,
        });
    }
    Ok(dpll_enumerate(formula))
}

/// A partition of solutions into clusters connected by single-variable
/// flips.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterSet {
    pub solutions: Vec<Assignment>,
    /// cluster_ids[i] is the cluster of solutions[i]; ids are dense, ordered
    /// by first appearance in the sorted solution list.
    pub cluster_ids: Vec<usize>,
    pub num_clusters: usize,
}

impl ClusterSet {
    /// Cluster id of a given solution, if it is one.
    pub fn cluster_of(&self, solution: &Assignment) -> Option<usize> {
        self.solutions
            .binary_search(solution)
            .ok()
            .map(|i| self.cluster_ids[i])
    }
}

/// Connected components of the Hamming-distance-1 graph restricted to the
/// solution set.
pub fn cluster_solutions(solutions: &[Assignment]) -> ClusterSet {
    let mut sorted: Vec<Assignment> = solutions.to_vec();
    sorted.sort();
    sorted.dedup();
    let index: HashMap<&Assignment, usize> =
        sorted.iter().enumerate().map(|(i, a)| (a, i)).collect();

    // union-find over solution indices
    let mut parent: Vec<usize> = (0..sorted.len()).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, sol) in sorted.iter().enumerate() {
        let mut flipped = sol.clone();
        for v in 0..sol.len() {
            flipped.0[v] = -flipped.0[v];
            if let Some(&j) = index.get(&flipped) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
            flipped.0[v] = -flipped.0[v];
        }
    }
    // dense ids in first-appearance order
    let mut id_of_root: HashMap<usize, usize> = HashMap::new();
    let mut cluster_ids = Vec::with_capacity(sorted.len());
    for i in 0..sorted.len() {
        let root = find(&mut parent, i);
        let next = id_of_root.len();
        let id = *id_of_root.entry(root).or_insert(next);
        cluster_ids.push(id);
    }
    ClusterSet {
        num_clusters: id_of_root.len(),
        solutions: sorted,
        cluster_ids,
    }
}
