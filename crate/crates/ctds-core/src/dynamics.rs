//! The continuous-time dynamics: product-form constraint functions, the
//! energies E and V, and the gradient flow driving analog spins toward
//! satisfying corners while clause weights grow exponentially.
//!
//! Clause weights are stored and integrated in log domain (`b_m = ln a_m`),
//! which turns their growth law into `db_m/dt = K_m` exactly; the raw `a_m`
//! is materialized only inside the spin-derivative terms. Without this the
//! weights overflow double range on hard instances.

use crate::formula::{Assignment, CnfFormula};
use thiserror::Error;

/// Default cap on log clause weights, in natural-log units. `exp(600)` is
/// still comfortably inside double range once multiplied by K factors ≤ 1.
pub const DEFAULT_LOG_A_CAP: f64 = 600.0;

#[derive(Debug, Error, PartialEq, Eq, Clone, Copy)]
pub enum DynamicsError {
    #[error("clause index out of range")]
    IndexOutOfRange,
    #[error("variable not in clause")]
    VariableNotInClause,
    #[error("clause weight overflow")]
    Overflow,
    #[error("guaranteed-basin bound requires uniform clause length")]
    MixedClauseLengths,
}

/// Overflow signal surfaced to the integrator's restart path.
#[derive(Debug, PartialEq, Eq, Clone, Copy)]
pub struct Overflow;

/// The point (s, ln a) of a trajectory in the extended phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousState {
    /// Analog spins, each in [-1, 1].
    pub s: Vec<f64>,
    /// Log clause weights b_m = ln a_m.
    pub log_a: Vec<f64>,
    /// Analog time.
    pub t: f64,
}

impl ContinuousState {
    /// Fresh state at t = 0 with all clause weights a_m(0) = 1.
    pub fn new(s: Vec<f64>, num_clauses: usize) -> Self {
        ContinuousState {
            s,
            log_a: vec![0.0; num_clauses],
            t: 0.0,
        }
    }
}

/// Per-clause data flattened for fast evaluation.
#[derive(Debug, Clone)]
struct CompiledClause {
    vars: Vec<u32>,
    coeffs: Vec<f64>,
    /// 2^{-k_m} for this clause's own length.
    prefactor: f64,
}

/// The compiled right-hand side of the flow for one formula.
#[derive(Debug, Clone)]
pub struct CtdsSystem {
    num_vars: usize,
    clauses: Vec<CompiledClause>,
    /// Overflow guard on b_m.
    pub log_a_cap: f64,
}

impl CtdsSystem {
    pub fn new(formula: &CnfFormula) -> Self {
        Self::with_cap(formula, DEFAULT_LOG_A_CAP)
    }

    pub fn with_cap(formula: &CnfFormula, log_a_cap: f64) -> Self {
        assert!(log_a_cap > 0.0);
        let clauses = formula
            .clauses
            .iter()
            .map(|c| CompiledClause {
                vars: c.literals.iter().map(|l| l.var as u32).collect(),
                coeffs: c.literals.iter().map(|l| l.coeff()).collect(),
                prefactor: (0.5f64).powi(c.len() as i32),
            })
            .collect();
        CtdsSystem {
            num_vars: formula.num_vars,
            clauses,
            log_a_cap,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// K_m(s) = 2^{-k_m} ∏ (1 - c_mi s_i); in [0,1] on the hypercube, zero
    /// iff clause m is satisfied.
    pub fn constraint_value(&self, s: &[f64], m: usize) -> Result<f64, DynamicsError> {
        let clause = self.clauses.get(m).ok_or(DynamicsError::IndexOutOfRange)?;
        let mut prod = clause.prefactor;
        for (j, &v) in clause.vars.iter().enumerate() {
            prod *= 1.0 - clause.coeffs[j] * s[v as usize];
        }
        Ok(prod)
    }

    /// K_mi(s) = 2^{-k_m} ∏_{j≠i} (1 - c_mj s_j), computed by omitting the
    /// i-th factor rather than dividing, so it stays finite at c_mi s_i = 1.
    pub fn constraint_partial(&self, s: &[f64], m: usize, var: usize) -> Result<f64, DynamicsError> {
        let clause = self.clauses.get(m).ok_or(DynamicsError::IndexOutOfRange)?;
        let pos = clause
            .vars
            .iter()
            .position(|&v| v as usize == var)
            .ok_or(DynamicsError::VariableNotInClause)?;
        let mut prod = clause.prefactor;
        for (j, &v) in clause.vars.iter().enumerate() {
            if j != pos {
                prod *= 1.0 - clause.coeffs[j] * s[v as usize];
            }
        }
        Ok(prod)
    }

    /// E(s) = Σ_m K_m².
    pub fn energy_e(&self, s: &[f64]) -> f64 {
        (0..self.clauses.len())
            .map(|m| {
                let k = self.constraint_value(s, m).unwrap();
                k * k
            })
            .sum()
    }

    /// V(s, a) = Σ_m a_m K_m², with a_m = exp(log_a_m). Signals overflow if
    /// any weight exceeds the cap or a term is non-finite.
    pub fn energy_v(&self, s: &[f64], log_a: &[f64]) -> Result<f64, Overflow> {
        let mut total = 0.0;
        for m in 0..self.clauses.len() {
            let b = log_a[m];
            if b > self.log_a_cap {
                return Err(Overflow);
            }
            let k = self.constraint_value(s, m).unwrap();
            let term = if k == 0.0 { 0.0 } else { b.exp() * k * k };
            if !term.is_finite() {
                return Err(Overflow);
            }
            total += term;
        }
        Ok(total)
    }

    /// Flow derivatives: ds_i/dt = Σ_m 2 a_m c_mi K_mi K_m (the negative
    /// V-gradient) and db_m/dt = K_m. `ds` and `dlog_a` are output buffers.
    pub fn rhs(
        &self,
        s: &[f64],
        log_a: &[f64],
        ds: &mut [f64],
        dlog_a: &mut [f64],
    ) -> Result<(), Overflow> {
        ds.fill(0.0);
        // scratch for omission products, reused across clauses; long clauses
        // (k > 32) spill to the heap
        let mut factors = [0.0f64; 32];
        let mut factors_heap: Vec<f64> = Vec::new();
        let mut suffix_heap: Vec<f64> = Vec::new();
        for (m, clause) in self.clauses.iter().enumerate() {
            let b = log_a[m];
            if b > self.log_a_cap {
                return Err(Overflow);
            }
            let k_len = clause.vars.len();
            let factors: &mut [f64] = if k_len <= 32 {
                &mut factors[..k_len]
            } else {
                factors_heap.resize(k_len, 0.0);
                &mut factors_heap[..]
            };
            let mut km = clause.prefactor;
            for j in 0..k_len {
                let f = 1.0 - clause.coeffs[j] * s[clause.vars[j] as usize];
                factors[j] = f;
                km *= f;
            }
            dlog_a[m] = km;
            if km == 0.0 {
                continue;
            }
            let scale = 2.0 * b.exp() * km;
            if !scale.is_finite() {
                return Err(Overflow);
            }
            // suffix products to form K_mi by omission
            let mut suffix_stack = [0.0f64; 32];
            let suffix: &mut [f64] = if k_len <= 32 {
                &mut suffix_stack[..k_len]
            } else {
                suffix_heap.resize(k_len, 0.0);
                &mut suffix_heap[..]
            };
            suffix[k_len - 1] = 1.0;
            for j in (0..k_len - 1).rev() {
                suffix[j] = suffix[j + 1] * factors[j + 1];
            }
            let mut prefix = clause.prefactor;
            for j in 0..k_len {
                let kmi = prefix * suffix[j];
                let term = scale * clause.coeffs[j] * kmi;
                if !term.is_finite() {
                    return Err(Overflow);
                }
                ds[clause.vars[j] as usize] += term;
                prefix *= factors[j];
            }
        }
        Ok(())
    }

    /// Whether a ±1 corner satisfies every clause (all K_m = 0 there).
    pub fn corner_satisfied(&self, spins: &[i8]) -> bool {
        self.clauses.iter().all(|c| {
            c.vars
                .iter()
                .zip(&c.coeffs)
                .any(|(&v, &coeff)| coeff * spins[v as usize] as f64 == 1.0)
        })
    }

    /// Analytic guaranteed-attraction test: true iff `s` lies in the orthant
    /// of the solution `s_star` and |s|² ≥ N - 1 + σ² with σ = (k-1)/(k+1).
    /// The bound is derived for uniform clause length; mixed-length input is
    /// refused.
    pub fn guaranteed_basin_test(
        &self,
        s: &[f64],
        s_star: &Assignment,
    ) -> Result<bool, DynamicsError> {
        let k = self.clauses[0].vars.len();
        if self.clauses.iter().any(|c| c.vars.len() != k) {
            return Err(DynamicsError::MixedClauseLengths);
        }
        let sigma = (k as f64 - 1.0) / (k as f64 + 1.0);
        let threshold = self.num_vars as f64 - 1.0 + sigma * sigma;
        let mut r2 = 0.0;
        for (i, &si) in s.iter().enumerate() {
            let sign = if si >= 0.0 { 1i8 } else { -1i8 };
            if si != 0.0 && sign != s_star.0[i] {
                return Ok(false);
            }
            if si == 0.0 {
                return Ok(false);
            }
            r2 += si * si;
        }
        Ok(r2 >= threshold)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_dimacs, Assignment};
    use approx::assert_relative_eq;
    use rand::Rng;

    fn three_clause() -> CtdsSystem {
        CtdsSystem::new(&parse_dimacs("p cnf 3 1\n1 2 3 0").unwrap())
    }

    #[test]
    fn constraint_value_corners() {
        let sys = three_clause();
        assert_eq!(sys.constraint_value(&[1.0, -1.0, -1.0], 0).unwrap(), 0.0);
        assert_eq!(sys.constraint_value(&[-1.0, -1.0, -1.0], 0).unwrap(), 1.0);
        assert_relative_eq!(
            sys.constraint_value(&[0.0, 0.0, 0.0], 0).unwrap(),
            0.125
        );
        assert_eq!(
            sys.constraint_value(&[0.0; 3], 5),
            Err(DynamicsError::IndexOutOfRange)
        );
    }

    #[test]
    fn constraint_partial_by_omission() {
        let sys = CtdsSystem::new(&parse_dimacs("p cnf 2 1\n1 2 0").unwrap());
        // w.r.t. x2 at s = (1, 0): 2^{-2}(1 - s1) = 0, finite despite the
        // satisfied literal
        assert_eq!(sys.constraint_partial(&[1.0, 0.0], 0, 1).unwrap(), 0.0);
        let sys3 = three_clause();
        for i in 0..3 {
            assert_relative_eq!(
                sys3.constraint_partial(&[0.0; 3], 0, i).unwrap(),
                0.125
            );
        }
        assert_eq!(
            sys3.constraint_partial(&[0.0; 3], 0, 7),
            Err(DynamicsError::VariableNotInClause)
        );
    }

    #[test]
    fn partial_identity_random_states() {
        // K_m = (1 - c_mi s_i) K_mi on random samples
        let f = crate::generators::gen_random_ksat(12, 40, 3, 21).unwrap();
        let sys = CtdsSystem::new(&f);
        let mut rng = crate::rng::stream(4);
        for _ in 0..1000 {
            let s: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let m = rng.gen_range(0..40);
            let clause = &f.clauses[m];
            let lit = clause.literals[rng.gen_range(0..clause.len())];
            let km = sys.constraint_value(&s, m).unwrap();
            let kmi = sys.constraint_partial(&s, m, lit.var).unwrap();
            assert_relative_eq!(
                km,
                (1.0 - lit.coeff() * s[lit.var]) * kmi,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn energy_e_matches_composition() {
        let f = crate::generators::gen_random_ksat(10, 30, 3, 5).unwrap();
        let sys = CtdsSystem::new(&f);
        let mut rng = crate::rng::stream(9);
        for _ in 0..50 {
            let s: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let direct = sys.energy_e(&s);
            let composed: f64 = (0..30)
                .map(|m| sys.constraint_value(&s, m).unwrap().powi(2))
                .sum();
            assert_relative_eq!(direct, composed, max_relative = 1e-12);
        }
    }

    #[test]
    fn energy_v_properties() {
        let f = crate::generators::gen_random_ksat(10, 30, 3, 5).unwrap();
        let sys = CtdsSystem::new(&f);
        let s: Vec<f64> = vec![0.3; 10];
        let ones = vec![0.0; 30];
        assert_relative_eq!(
            sys.energy_v(&s, &ones).unwrap(),
            sys.energy_e(&s),
            max_relative = 1e-12
        );
        // linearity in a: shifting all log weights by ln c scales V by c
        let shifted: Vec<f64> = ones.iter().map(|&b| b + 2.0f64.ln()).collect();
        assert_relative_eq!(
            sys.energy_v(&s, &shifted).unwrap(),
            2.0 * sys.energy_e(&s),
            max_relative = 1e-12
        );
        // overflow guard
        let big = vec![700.0; 30];
        assert_eq!(sys.energy_v(&s, &big), Err(Overflow));
    }

    #[test]
    fn energy_v_zero_at_solution_any_weights() {
        let f = parse_dimacs("p cnf 2 2\n1 2 0\n-1 2 0").unwrap();
        let sys = CtdsSystem::new(&f);
        let sol = [1.0, 1.0];
        let mut rng = crate::rng::stream(2);
        for _ in 0..10 {
            let log_a: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
            assert_eq!(sys.energy_v(&sol, &log_a).unwrap(), 0.0);
        }
    }

    #[test]
    fn rhs_at_solution_is_zero() {
        let f = parse_dimacs("p cnf 2 2\n1 2 0\n-1 2 0").unwrap();
        let sys = CtdsSystem::new(&f);
        let mut ds = vec![0.0; 2];
        let mut da = vec![0.0; 2];
        sys.rhs(&[1.0, 1.0], &[0.0, 0.0], &mut ds, &mut da).unwrap();
        assert_eq!(ds, vec![0.0, 0.0]);
        assert_eq!(da, vec![0.0, 0.0]);
    }

    #[test]
    fn rhs_single_clause_center() {
        // single clause at the center: ds_i/dt = 2·1·(1/8)·(1/8) = 1/32
        let sys = three_clause();
        let mut ds = vec![0.0; 3];
        let mut da = vec![0.0; 1];
        sys.rhs(&[0.0; 3], &[0.0], &mut ds, &mut da).unwrap();
        for d in &ds {
            assert_relative_eq!(*d, 1.0 / 32.0, max_relative = 1e-14);
        }
        assert_relative_eq!(da[0], 0.125, max_relative = 1e-14);
    }

    #[test]
    fn rhs_matches_finite_difference_gradient() {
        let f = crate::generators::gen_random_ksat(20, 80, 3, 77).unwrap();
        let sys = CtdsSystem::new(&f);
        let mut rng = crate::rng::stream(6);
        let mut ds = vec![0.0; 20];
        let mut da = vec![0.0; 80];
        for _ in 0..20 {
            let s: Vec<f64> = (0..20).map(|_| rng.gen_range(-0.9..0.9)).collect();
            let log_a: Vec<f64> = (0..80).map(|_| rng.gen_range(-0.5..0.5)).collect();
            sys.rhs(&s, &log_a, &mut ds, &mut da).unwrap();
            let h = 1e-6;
            for i in 0..20 {
                let mut sp = s.clone();
                let mut sm = s.clone();
                sp[i] += h;
                sm[i] -= h;
                let grad = -(sys.energy_v(&sp, &log_a).unwrap()
                    - sys.energy_v(&sm, &log_a).unwrap())
                    / (2.0 * h);
                assert_relative_eq!(ds[i], grad, max_relative = 1e-5, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn boundary_inflow() {
        // at s_i = ±1 the flow never points outward
        let f = crate::generators::gen_random_ksat(10, 40, 3, 13).unwrap();
        let sys = CtdsSystem::new(&f);
        let mut rng = crate::rng::stream(8);
        let mut ds = vec![0.0; 10];
        let mut da = vec![0.0; 40];
        for _ in 0..200 {
            let mut s: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let i = rng.gen_range(0..10);
            let edge = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            s[i] = edge;
            let log_a: Vec<f64> = (0..40).map(|_| rng.gen_range(0.0..2.0)).collect();
            sys.rhs(&s, &log_a, &mut ds, &mut da).unwrap();
            if edge > 0.0 {
                assert!(ds[i] <= 0.0);
            } else {
                assert!(ds[i] >= 0.0);
            }
            // auxiliary derivatives are never negative
            for d in &da {
                assert!(*d >= 0.0);
            }
        }
    }

    #[test]
    fn guaranteed_basin_threshold_arithmetic() {
        let f = crate::generators::gen_random_ksat(5, 10, 3, 1).unwrap();
        let sys = CtdsSystem::new(&f);
        let sol = Assignment(vec![1, 1, -1, 1, -1]);
        // the corner itself passes
        let corner: Vec<f64> = sol.0.iter().map(|&v| v as f64).collect();
        assert!(sys.guaranteed_basin_test(&corner, &sol).unwrap());
        // one coordinate at 0.4 < sigma = 0.5: |s|² = N - 1 + 0.16 < threshold
        let mut near = corner.clone();
        near[2] = -0.4;
        assert!(!sys.guaranteed_basin_test(&near, &sol).unwrap());
        // one coordinate at 0.6 > sigma passes
        near[2] = -0.6;
        assert!(sys.guaranteed_basin_test(&near, &sol).unwrap());
        // wrong orthant fails
        let mut wrong = corner;
        wrong[0] = -1.0;
        assert!(!sys.guaranteed_basin_test(&wrong, &sol).unwrap());
    }

    #[test]
    fn guaranteed_basin_refuses_mixed_lengths() {
        let f = parse_dimacs("p cnf 3 2\n1 2 3 0\n1 2 0").unwrap();
        let sys = CtdsSystem::new(&f);
        let sol = Assignment(vec![1, 1, 1]);
        assert_eq!(
            sys.guaranteed_basin_test(&[1.0, 1.0, 1.0], &sol),
            Err(DynamicsError::MixedClauseLengths)
        );
    }

    #[test]
    fn radial_growth_in_guaranteed_domain() {
        // d(Σ s_i²)/dt > 0 for states passing the test with some K_m > 0
        let f = crate::generators::gen_random_ksat(12, 40, 3, 31).unwrap();
        if let crate::formula::DpllResult::Sat(sol) = crate::formula::dpll_solve(&f, 1 << 20) {
            let sys = CtdsSystem::new(&f);
            let mut rng = crate::rng::stream(17);
            let mut ds = vec![0.0; 12];
            let mut da = vec![0.0; 40];
            let mut tested = 0;
            while tested < 50 {
                let s: Vec<f64> = sol
                    .0
                    .iter()
                    .map(|&v| v as f64 * rng.gen_range(0.97..1.0))
                    .collect();
                if !sys.guaranteed_basin_test(&s, &sol).unwrap() {
                    continue;
                }
                let log_a: Vec<f64> = (0..40).map(|_| rng.gen_range(0.0..1.0)).collect();
                sys.rhs(&s, &log_a, &mut ds, &mut da).unwrap();
                let r_dot: f64 = s.iter().zip(&ds).map(|(si, di)| 2.0 * si * di).sum();
                let any_violated = da.iter().any(|&k| k > 0.0);
                if any_violated {
                    assert!(r_dot > 0.0, "r_dot = {r_dot}");
                }
                tested += 1;
            }
        }
    }
}
