//! Trajectory orchestration: initial conditions, restart-on-overflow,
//! parallel multi-start solving, and batch execution over instance
//! ensembles.
//!
//! All randomness is derived from 64-bit seeds via [`crate::rng`], and
//! batch output is in canonical (N, instance index) order regardless of
//! how many workers execute it, so records are reproducible bit-for-bit.

use crate::dynamics::{ContinuousState, CtdsSystem};
use crate::formula::{dpll_solve, CnfFormula, DpllResult};
use crate::generators::{self, Ensemble};
use crate::integrator::{integrate, RunStatus, StepControl};
use crate::rng::splitmix64;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Record schema version stamped into every JSONL record and manifest.
pub const SCHEMA_VERSION: u32 = 1;

/// Ground-truth satisfiability of an instance, when known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SatOracle {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub control: StepControl,
    pub num_parallel_starts: usize,
    pub max_restarts_on_overflow: usize,
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            control: StepControl::default(),
            num_parallel_starts: 1,
            max_restarts_on_overflow: 4,
            seed: 0,
        }
    }
}

/// One instance's outcome, in the JSONL schema emitted by batch runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub schema_version: u32,
    pub instance_id: u64,
    pub num_vars: usize,
    pub num_clauses: usize,
    pub density: f64,
    pub sat_oracle: SatOracle,
    pub status: RunStatus,
    /// Analog time of the first start to solve (starts share one clock).
    pub t_solve: Option<f64>,
    /// Accepted steps summed over all starts and restarts.
    pub n_step_total: u64,
    /// Trajectory length of the winning start (start 0 when unsolved).
    pub length_l: f64,
    pub wall_time: f64,
    pub seed: u64,
    pub eps: f64,
}

/// A sweep over system sizes for one ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSpec {
    pub ensemble: Ensemble,
    pub density: f64,
    pub n_list: Vec<usize>,
    pub instances_per_n: usize,
    pub config: SolveConfig,
    /// Keep only DPLL-satisfiable instances, regenerating discards.
    pub oracle_filter: bool,
    /// DPLL decision budget per oracle call.
    pub oracle_budget: u64,
    pub seed: u64,
}

/// Derives a 64-bit seed for a keyed substream, e.g. (N, instance index).
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(a.wrapping_add(0x517c_c1b7_2722_0a95))) ^ splitmix64(b))
}

fn uniform_initial(sys: &CtdsSystem, rng: &mut impl Rng) -> ContinuousState {
    let s: Vec<f64> = (0..sys.num_vars()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    ContinuousState::new(s, sys.num_clauses())
}

/// Runs `num_parallel_starts` trajectories from i.i.d. uniform initial
/// conditions. All starts share one analog clock: `t_solve` is the minimum
/// analog time among solved starts. A start that overflows restarts from a
/// fresh initial condition with its clock (and step count) continuing.
pub fn solve(formula: &CnfFormula, config: &SolveConfig) -> SolveRecord {
    let sys = CtdsSystem::new(formula);
    let wall_start = std::time::Instant::now();

    struct StartResult {
        status: RunStatus,
        t_end: f64,
        n_step: u64,
        length_l: f64,
        witness: Option<crate::formula::Assignment>,
    }

    let starts = crate::parallel::map_indexed(config.num_parallel_starts, |start| {
        let mut t_acc = 0.0f64;
        let mut n_acc = 0u64;
        let mut len_acc = 0.0f64;
        let mut restarts = 0usize;
        loop {
            let mut rng = crate::rng::substream2(config.seed, start as u64, restarts as u64);
            let init = uniform_initial(&sys, &mut rng);
            let control = StepControl {
                t_max: config.control.t_max - t_acc,
                n_step_max: config.control.n_step_max.saturating_sub(n_acc),
                ..config.control
            };
            let out = integrate(&sys, init, &control, None);
            t_acc += out.t_final;
            n_acc += out.n_step;
            len_acc += out.length_l;
            match out.status {
                RunStatus::Overflow if restarts < config.max_restarts_on_overflow => {
                    restarts += 1;
                }
                status => {
                    return StartResult {
                        status,
                        t_end: t_acc,
                        n_step: n_acc,
                        length_l: len_acc,
                        witness: out.witness,
                    };
                }
            }
        }
    });

    let n_step_total: u64 = starts.iter().map(|r| r.n_step).sum();
    let winner = starts
        .iter()
        .filter(|r| r.status == RunStatus::Solved)
        .min_by(|a, b| a.t_end.total_cmp(&b.t_end));

    let (status, t_solve, length_l) = match winner {
        Some(w) => {
            // event correctness: re-verify the witness independently
            let witness = w.witness.as_ref().expect("solved start has witness");
            let (sat, _) = formula.evaluate(witness).expect("witness length");
            assert!(sat, "solved status failed independent re-verification");
            (RunStatus::Solved, Some(w.t_end), w.length_l)
        }
        None => {
            let status = if starts.iter().any(|r| r.status == RunStatus::TimeBudgetExceeded) {
                RunStatus::TimeBudgetExceeded
            } else if starts.iter().any(|r| r.status == RunStatus::StepBudgetExceeded) {
                RunStatus::StepBudgetExceeded
            } else {
                RunStatus::Overflow
            };
            (status, None, starts[0].length_l)
        }
    };

    SolveRecord {
        schema_version: SCHEMA_VERSION,
        instance_id: 0,
        num_vars: formula.num_vars,
        num_clauses: formula.num_clauses(),
        density: formula.density(),
        sat_oracle: SatOracle::Unknown,
        status,
        t_solve,
        n_step_total,
        length_l,
        wall_time: wall_start.elapsed().as_secs_f64(),
        seed: config.seed,
        eps: config.control.eps,
    }
}

/// One kept instance of a batch, with its formula seed and discard count.
#[derive(Debug, Clone)]
pub struct BatchInstance {
    pub n: usize,
    pub index: usize,
    pub formula_seed: u64,
    pub formula: CnfFormula,
    pub sat_oracle: SatOracle,
    /// UNSAT instances regenerated before this one was kept.
    pub discarded: usize,
}

/// Generates (and optionally oracle-filters) the instances of a batch, in
/// canonical order. Instance (N, i) depends only on (seed, N, i), never on
/// the rest of the batch.
pub fn batch_instances(batch: &BatchSpec) -> Vec<BatchInstance> {
    let mut slots: Vec<(usize, usize)> = Vec::new();
    for &n in &batch.n_list {
        for i in 0..batch.instances_per_n {
            slots.push((n, i));
        }
    }
    crate::parallel::map_slice(&slots, |&(n, i)| {
        let mut discarded = 0usize;
        loop {
            let formula_seed =
                derive_seed(batch.seed, n as u64, (i as u64) << 20 | discarded as u64);
            let spec = generators::EnsembleSpec {
                ensemble: batch.ensemble,
                num_vars: n,
                density: batch.density,
                seed: formula_seed,
            };
            let (formula, _) = generators::generate(&spec).expect("valid batch dimensions");
            if !batch.oracle_filter {
                return BatchInstance {
                    n,
                    index: i,
                    formula_seed,
                    formula,
                    sat_oracle: SatOracle::Unknown,
                    discarded,
                };
            }
            match dpll_solve(&formula, batch.oracle_budget) {
                DpllResult::Sat(_) => {
                    return BatchInstance {
                        n,
                        index: i,
                        formula_seed,
                        formula,
                        sat_oracle: SatOracle::Sat,
                        discarded,
                    };
                }
                DpllResult::Unsat => {
                    discarded += 1;
                }
                DpllResult::BudgetExceeded => {
                    // kept but flagged: the oracle could not decide in budget
                    return BatchInstance {
                        n,
                        index: i,
                        formula_seed,
                        formula,
                        sat_oracle: SatOracle::Unknown,
                        discarded,
                    };
                }
            }
        }
    })
}

/// Runs a batch end to end, one record per kept instance, in canonical
/// (N, instance index) order.
pub fn run_batch(batch: &BatchSpec) -> Vec<SolveRecord> {
    let instances = batch_instances(batch);
    crate::parallel::map_slice(&instances, |inst| {
        let config = SolveConfig {
            seed: derive_seed(batch.config.seed, inst.n as u64, inst.index as u64),
            ..batch.config
        };
        let mut record = solve(&inst.formula, &config);
        record.instance_id = derive_seed(batch.seed, inst.n as u64, inst.index as u64);
        record.sat_oracle = inst.sat_oracle;
        record
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_dimacs;

    #[test]
    fn easy_instance_solves() {
        let f = crate::generators::gen_random_ksat(30, 60, 3, 5).unwrap();
        let rec = solve(&f, &SolveConfig::default());
        assert_eq!(rec.status, RunStatus::Solved);
        assert!(rec.t_solve.is_some());
    }

    #[test]
    fn unsat_micro_instance_never_solves() {
        let f = parse_dimacs("p cnf 1 2\n1 0\n-1 0").unwrap();
        let config = SolveConfig {
            control: StepControl {
                t_max: 2.0,
                ..Default::default()
            },
            ..Default::default()
        };
        let rec = solve(&f, &config);
        assert_ne!(rec.status, RunStatus::Solved);
        assert!(rec.t_solve.is_none());
    }

    #[test]
    fn solve_is_deterministic_modulo_wall_time() {
        let f = crate::generators::gen_random_ksat(20, 85, 3, 3).unwrap();
        let config = SolveConfig {
            num_parallel_starts: 3,
            seed: 9,
            ..Default::default()
        };
        let mut a = solve(&f, &config);
        let mut b = solve(&f, &config);
        a.wall_time = 0.0;
        b.wall_time = 0.0;
        assert_eq!(a, b);
    }

    #[test]
    fn parallel_start_minimum() {
        let f = crate::generators::gen_random_ksat(20, 60, 3, 3).unwrap();
        let config = SolveConfig {
            num_parallel_starts: 4,
            seed: 2,
            ..Default::default()
        };
        let rec = solve(&f, &config);
        if rec.status == RunStatus::Solved {
            // the single-start times for each substream bound t_solve below
            let sys = CtdsSystem::new(&f);
            let t = rec.t_solve.unwrap();
            for start in 0..4u64 {
                let mut rng = crate::rng::substream2(2, start, 0);
                let init = uniform_initial(&sys, &mut rng);
                let out = integrate(&sys, init, &config.control, None);
                if out.status == RunStatus::Solved {
                    assert!(t <= out.t_final + 1e-12);
                }
            }
        }
    }

    #[test]
    fn batch_filtered_all_sat() {
        let batch = BatchSpec {
            ensemble: Ensemble::RandomKSat { k: 3 },
            density: 4.25,
            n_list: vec![20],
            instances_per_n: 30,
            config: SolveConfig::default(),
            oracle_filter: true,
            oracle_budget: 1 << 22,
            seed: 77,
        };
        let records = run_batch(&batch);
        assert_eq!(records.len(), 30);
        for r in &records {
            assert_eq!(r.sat_oracle, SatOracle::Sat);
        }
    }

    #[test]
    fn batch_empty_n_list() {
        let batch = BatchSpec {
            ensemble: Ensemble::RandomKSat { k: 3 },
            density: 3.0,
            n_list: vec![],
            instances_per_n: 5,
            config: SolveConfig::default(),
            oracle_filter: false,
            oracle_budget: 0,
            seed: 1,
        };
        assert!(run_batch(&batch).is_empty());
    }

    #[test]
    fn batch_deterministic_and_seed_isolated() {
        let base = BatchSpec {
            ensemble: Ensemble::RandomKSat { k: 3 },
            density: 3.5,
            n_list: vec![15, 20],
            instances_per_n: 4,
            config: SolveConfig::default(),
            oracle_filter: false,
            oracle_budget: 0,
            seed: 5,
        };
        let strip = |mut rs: Vec<SolveRecord>| {
            for r in &mut rs {
                r.wall_time = 0.0;
            }
            rs
        };
        let a = strip(run_batch(&base));
        let b = strip(run_batch(&base));
        assert_eq!(a, b);
        // records for N=20 are unchanged when N=15 is dropped
        let only20 = BatchSpec {
            n_list: vec![20],
            ..base
        };
        let c = strip(run_batch(&only20));
        assert_eq!(&a[4..], &c[..]);
    }
}
