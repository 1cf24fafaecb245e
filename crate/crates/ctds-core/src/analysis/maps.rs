//! Basin-of-attraction, search-time, and finite-size-Lyapunov maps over 2-D
//! slices of the hypercube, with box-counting boundary dimension and Wada
//! probes on top.

use super::clusters::{cluster_solutions, enumerate_solutions_capped, ClusterSet};
use super::AnalysisError;
use crate::dynamics::{ContinuousState, CtdsSystem, Overflow};
use crate::formula::{Assignment, CnfFormula};
use crate::integrator::{
    integrate, CashKarp, OdeSystem, RunStatus, StepControl,
};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// A 2-D slice of the hypercube: two varied coordinates on a grid, the rest
/// frozen to a background drawn from `background_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneSpec {
    pub var_i: usize,
    pub var_j: usize,
    /// (i_min, i_max, j_min, j_max), a window of [-1,1]².
    pub window: (f64, f64, f64, f64),
    /// (width, height): var_i varies along columns, var_j along rows.
    pub grid: (usize, usize),
    pub background_seed: u64,
}

impl PlaneSpec {
    /// Cell-center coordinates of (row, col).
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        let (i_min, i_max, j_min, j_max) = self.window;
        let (w, h) = self.grid;
        let x = i_min + (col as f64 + 0.5) * (i_max - i_min) / w as f64;
        let y = j_min + (row as f64 + 0.5) * (j_max - j_min) / h as f64;
        (x, y)
    }

    /// The frozen background state: i.i.d. uniform spins for every variable
    /// (the two varied ones get overwritten per cell).
    pub fn background(&self, num_vars: usize) -> Vec<f64> {
        let mut rng = crate::rng::stream(self.background_seed);
        (0..num_vars).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }
}

/// What a basin-map cell flowed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellLabel {
    /// Index into [`BasinMap::label_keys`].
    Label(u32),
    Unresolved,
}

/// How basin cells are labeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelBy {
    /// Each distinct reached solution is its own label.
    Solution,
    /// Labels are solution clusters from exhaustive enumeration, with the
    /// given variable cap.
    Cluster { enumeration_cap: usize },
}

/// A labeled grid plus per-cell analog search times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinMap {
    pub plane: PlaneSpec,
    /// Row-major, length W·H.
    pub labels: Vec<CellLabel>,
    /// Analog t_solve per cell; None exactly where the cell is Unresolved.
    pub times: Vec<Option<f64>>,
    /// Representative assignment per label id (the solution reached, or the
    /// first solution of the cluster), stable across maps of one formula.
    pub label_keys: Vec<Assignment>,
}

impl BasinMap {
    pub fn unresolved_fraction(&self) -> f64 {
        let n = self.labels.len();
        self.labels
            .iter()
            .filter(|l| **l == CellLabel::Unresolved)
            .count() as f64
            / n as f64
    }

    pub fn distinct_labels(&self) -> usize {
        self.label_keys.len()
    }
}

/// Integrates one trajectory per grid cell and labels each cell by the
/// solution (or cluster) it flows to, recording the analog search time.
pub fn basin_map(
    formula: &CnfFormula,
    plane: &PlaneSpec,
    control: &StepControl,
    label_by: LabelBy,
) -> Result<BasinMap, AnalysisError> {
    let sys = CtdsSystem::new(formula);
    let clusters: Option<ClusterSet> = match label_by {
        LabelBy::Solution => None,
        LabelBy::Cluster { enumeration_cap } => {
            let sols = enumerate_solutions_capped(formula, enumeration_cap)?;
            Some(cluster_solutions(&sols))
        }
    };
    let (w, h) = plane.grid;
    let background = plane.background(formula.num_vars);

    let cells: Vec<Option<(Assignment, f64)>> = crate::parallel::map_indexed(w * h, |idx| {
        let (row, col) = (idx / w, idx % w);
        let (x, y) = plane.cell_center(row, col);
        let mut s = background.clone();
        s[plane.var_i] = x;
        s[plane.var_j] = y;
        let out = integrate(&sys, ContinuousState::new(s, formula.num_clauses()), control, None);
        match out.status {
            RunStatus::Solved => Some((out.witness.unwrap(), out.t_final)),
            _ => None,
        }
    });

    // assign label ids deterministically in row-major first-appearance order
    let mut label_keys: Vec<Assignment> = Vec::new();
    let mut id_of_key: HashMap<Assignment, u32> = HashMap::new();
    let mut labels = Vec::with_capacity(w * h);
    let mut times = Vec::with_capacity(w * h);
    for cell in cells {
        match cell {
            None => {
                labels.push(CellLabel::Unresolved);
                times.push(None);
            }
            Some((witness, t)) => {
                let key = match &clusters {
                    None => witness,
                    Some(cs) => {
                        let cid = cs
                            .cluster_of(&witness)
                            .expect("witness must be an enumerated solution");
                        // representative: first solution of the cluster
                        let rep_idx = cs
                            .cluster_ids
                            .iter()
                            .position(|&c| c == cid)
                            .expect("cluster non-empty");
                        cs.solutions[rep_idx].clone()
                    }
                };
                let next = label_keys.len() as u32;
                let id = *id_of_key.entry(key.clone()).or_insert_with(|| {
                    label_keys.push(key);
                    next
                });
                labels.push(CellLabel::Label(id));
                times.push(Some(t));
            }
        }
    }
    Ok(BasinMap {
        plane: plane.clone(),
        labels,
        times,
        label_keys,
    })
}

/// Two copies of a system integrated in lockstep, for trajectory-separation
/// measurements.
struct PairSystem<'a, S: OdeSystem> {
    inner: &'a S,
}

impl<S: OdeSystem> OdeSystem for PairSystem<'_, S> {
    fn dim(&self) -> usize {
        2 * self.inner.dim()
    }
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), Overflow> {
        let d = self.inner.dim();
        self.inner.eval(t, &y[..d], &mut dy[..d])?;
        self.inner.eval(t, &y[d..], &mut dy[d..])
    }
}

/// Integrates a reference/perturbed pair until their separation over the
/// first `sep_dims` coordinates reaches `target`, returning the time τ it
/// took. `clamp` is applied to each half after every accepted step. Returns
/// None if the separation never reaches the target within budget (including
/// the pair settling onto an attractor).
pub fn separation_time<S: OdeSystem>(
    sys: &S,
    y_ref: &[f64],
    y_pert: &[f64],
    sep_dims: usize,
    target: f64,
    control: &StepControl,
    clamp: impl Fn(&mut [f64]),
) -> Option<f64> {
    let pair = PairSystem { inner: sys };
    let d = sys.dim();
    let mut y = Vec::with_capacity(2 * d);
    y.extend_from_slice(y_ref);
    y.extend_from_slice(y_pert);
    let mut dydt = vec![0.0; 2 * d];
    let mut yout = vec![0.0; 2 * d];
    let mut stepper = CashKarp::new(2 * d);
    let mut t = 0.0f64;
    let mut h = control.h_init.clamp(control.h_min, control.h_max);
    let mut n_step: u64 = 0;

    let separation = |y: &[f64]| -> f64 {
        (0..sep_dims)
            .map(|i| (y[i] - y[d + i]).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    if separation(&y) >= target {
        return Some(0.0);
    }
    while t < control.t_max && n_step < control.n_step_max {
        if pair.eval(t, &y, &mut dydt).is_err() {
            return None;
        }
        // settled onto a fixed point: separation frozen
        if dydt.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-14 {
            return None;
        }
        let mut h_try = h.min(control.t_max - t).max(control.h_min);
        let err;
        loop {
            match stepper.step(&pair, t, &y, &dydt, h_try, &mut yout) {
                Err(Overflow) => return None,
                Ok(e) if e <= control.eps || h_try <= control.h_min => {
                    err = e;
                    break;
                }
                Ok(e) => {
                    let factor = (control.safety * (control.eps / e).powf(0.25)).max(0.1);
                    h_try = (h_try * factor).max(control.h_min);
                }
            }
        }
        y.copy_from_slice(&yout);
        clamp(&mut y[..d]);
        clamp(&mut y[d..]);
        t += h_try;
        n_step += 1;
        if separation(&y) >= target {
            return Some(t);
        }
        let factor = if err > 0.0 {
            (control.safety * (control.eps / err).powf(0.2)).min(5.0)
        } else {
            5.0
        };
        h = (h_try * factor).clamp(control.h_min, control.h_max);
    }
    None
}

/// Local FSLE at one starting point: perturbations of size `eps0` in
/// `num_directions` random directions, each contributing τ^{-1} ln(ratio)
/// (or 0 when the separation never reaches ratio·eps0 within budget).
pub fn fsle_for_system<S: OdeSystem>(
    sys: &S,
    y_ref: &[f64],
    sep_dims: usize,
    eps0: f64,
    ratio: f64,
    num_directions: usize,
    control: &StepControl,
    clamp: impl Fn(&mut [f64]) + Copy,
    rng: &mut impl Rng,
) -> f64 {
    assert!(eps0 > 0.0 && ratio > 1.0);
    let mut total = 0.0;
    for _ in 0..num_directions {
        // uniform direction on the sep_dims-sphere
        let mut dir: Vec<f64> = (0..sep_dims).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut dir {
            *v /= norm;
        }
        let mut y_pert = y_ref.to_vec();
        for i in 0..sep_dims {
            y_pert[i] += eps0 * dir[i];
        }
        clamp(&mut y_pert);
        if let Some(tau) = separation_time(
            sys,
            y_ref,
            &y_pert,
            sep_dims,
            ratio * eps0,
            control,
            clamp,
        ) {
            if tau > 0.0 {
                total += ratio.ln() / tau;
            }
        }
    }
    total / num_directions as f64
}

/// A grid of local finite-size Lyapunov exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsleMap {
    pub plane: PlaneSpec,
    /// Row-major φ values, all ≥ 0.
    pub phi: Vec<f64>,
    pub eps0: f64,
    pub ratio: f64,
    pub num_directions: usize,
}

impl FsleMap {
    pub fn mean_phi(&self) -> f64 {
        self.phi.iter().sum::<f64>() / self.phi.len() as f64
    }
}

/// FSLE over a plane: per cell, the reference and `num_directions` perturbed
/// trajectories are integrated in lockstep; φ averages τ^{-1} ln(ratio) over
/// directions. Separation is measured in s-space only; perturbed starts
/// share the reference's clause weights a_m(0) = 1.
pub fn fsle_map(
    formula: &CnfFormula,
    plane: &PlaneSpec,
    eps0: f64,
    ratio: f64,
    num_directions: usize,
    control: &StepControl,
) -> FsleMap {
    let sys = CtdsSystem::new(formula);
    let n = formula.num_vars;
    let m = formula.num_clauses();
    let (w, h) = plane.grid;
    let background = plane.background(n);
    let clamp = |half: &mut [f64]| {
        for v in half.iter_mut().take(n) {
            *v = v.clamp(-1.0, 1.0);
        }
    };
    let phi = crate::parallel::map_indexed(w * h, |idx| {
        let (row, col) = (idx / w, idx % w);
        let (x, y) = plane.cell_center(row, col);
        let mut y_ref = vec![0.0; n + m];
        y_ref[..n].copy_from_slice(&background);
        y_ref[plane.var_i] = x;
        y_ref[plane.var_j] = y;
        let mut rng = crate::rng::substream(plane.background_seed, idx as u64);
        fsle_for_system(
            &sys,
            &y_ref,
            n,
            eps0,
            ratio,
            num_directions,
            control,
            clamp,
            &mut rng,
        )
    });
    FsleMap {
        plane: plane.clone(),
        phi,
        eps0,
        ratio,
        num_directions,
    }
}

/// Boundary-cell counts per dyadic box size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCounts {
    /// (box size g in fine cells, boundary boxes at that size)
    pub counts: Vec<(usize, usize)>,
    pub dimension: f64,
}

/// Box-counting boundary dimension of a basin map. A box of side `g` fine
/// cells is a boundary box if it covers ≥ 2 distinct labels; the dimension
/// is minus the slope of log B(g) vs log g over the dyadic sizes.
pub fn boundary_dimension(
    map: &BasinMap,
    max_unresolved: f64,
) -> Result<BoxCounts, AnalysisError> {
    let unresolved = map.unresolved_fraction();
    if unresolved > max_unresolved {
        return Err(AnalysisError::UnresolvedCells(unresolved));
    }
    if map.distinct_labels() < 2 {
        return Err(AnalysisError::NoBoundary);
    }
    let (w, h) = map.plane.grid;
    let mut counts = Vec::new();
    let mut g = 2usize;
    while w % g == 0 && h % g == 0 && w / g >= 2 && h / g >= 2 {
        let mut boundary = 0usize;
        for by in (0..h).step_by(g) {
            for bx in (0..w).step_by(g) {
                let mut first: Option<u32> = None;
                let mut is_boundary = false;
                'block: for row in by..by + g {
                    for col in bx..bx + g {
                        if let CellLabel::Label(id) = map.labels[row * w + col] {
                            match first {
                                None => first = Some(id),
                                Some(f) if f != id => {
                                    is_boundary = true;
                                    break 'block;
                                }
                                _ => {}
                            }
                        }
                    }
                }
                if is_boundary {
                    boundary += 1;
                }
            }
        }
        counts.push((g, boundary));
        g *= 2;
    }
    let points: Vec<(f64, f64)> = counts
        .iter()
        .filter(|(_, b)| *b > 0)
        .map(|&(g, b)| ((g as f64).ln(), (b as f64).ln()))
        .collect();
    if points.len() < 2 {
        return Err(AnalysisError::NoBoundary);
    }
    let (slope, _, _) = super::fits::linear_regression(&points);
    Ok(BoxCounts {
        counts,
        dimension: -slope,
    })
}

/// Label inventories across nested magnifications.
#[derive(Debug, Clone, PartialEq)]
pub struct WadaReport {
    /// Distinct label keys present at each zoom level.
    pub zoom_labels: Vec<Vec<Assignment>>,
    /// True when ≥ 3 labels persist at every magnification.
    pub wada_consistent: bool,
}

/// Re-renders each zoom window by fresh integration and reports the basin
/// labels present at every magnification.
pub fn wada_probe(
    formula: &CnfFormula,
    base_plane: &PlaneSpec,
    zoom_windows: &[(f64, f64, f64, f64)],
    control: &StepControl,
    label_by: LabelBy,
) -> Result<WadaReport, AnalysisError> {
    let mut zoom_labels = Vec::new();
    for window in zoom_windows {
        let plane = PlaneSpec {
            window: *window,
            ..base_plane.clone()
        };
        let map = basin_map(formula, &plane, control, label_by)?;
        let mut keys = map.label_keys.clone();
        keys.sort();
        zoom_labels.push(keys);
    }
    let wada_consistent =
        !zoom_labels.is_empty() && zoom_labels.iter().all(|labels| labels.len() >= 3);
    Ok(WadaReport {
        zoom_labels,
        wada_consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_dimacs;

    fn unit_plane(seed: u64, grid: (usize, usize)) -> PlaneSpec {
        PlaneSpec {
            var_i: 0,
            var_j: 1,
            window: (-1.0, 1.0, -1.0, 1.0),
            grid,
            background_seed: seed,
        }
    }

    #[test]
    fn single_attractor_formula_constant_map() {
        // (x1) alone: every cell flows to the one solution in s1
        let f = parse_dimacs("p cnf 2 2\n1 0\n1 2 0").unwrap();
        let map = basin_map(
            &f,
            &unit_plane(3, (8, 8)),
            &StepControl::default(),
            LabelBy::Cluster { enumeration_cap: 26 },
        )
        .unwrap();
        assert_eq!(map.unresolved_fraction(), 0.0);
        assert_eq!(map.distinct_labels(), 1);
        assert!(map.times.iter().all(|t| t.is_some()));
    }

    #[test]
    fn maps_are_deterministic() {
        let f = crate::generators::gen_random_ksat(8, 20, 3, 4).unwrap();
        let p = unit_plane(9, (6, 6));
        let a = basin_map(&f, &p, &StepControl::default(), LabelBy::Solution).unwrap();
        let b = basin_map(&f, &p, &StepControl::default(), LabelBy::Solution).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn half_plane_boundary_dimension_is_one() {
        // synthetic two-label map with a straight vertical boundary; the
        // split sits off the dyadic block grid so every box size sees it
        let plane = unit_plane(0, (64, 64));
        let mut labels = Vec::new();
        for _row in 0..64 {
            for col in 0..64 {
                labels.push(CellLabel::Label(u32::from(col >= 31)));
            }
        }
        let map = BasinMap {
            plane,
            labels,
            times: vec![Some(1.0); 64 * 64],
            label_keys: vec![Assignment(vec![1]), Assignment(vec![-1])],
        };
        let bc = boundary_dimension(&map, 0.1).unwrap();
        assert!((bc.dimension - 1.0).abs() <= 0.05, "dim = {}", bc.dimension);
    }

    #[test]
    fn single_label_map_has_no_boundary() {
        let plane = unit_plane(0, (16, 16));
        let map = BasinMap {
            plane,
            labels: vec![CellLabel::Label(0); 256],
            times: vec![Some(1.0); 256],
            label_keys: vec![Assignment(vec![1])],
        };
        assert_eq!(boundary_dimension(&map, 0.1), Err(AnalysisError::NoBoundary));
    }

    #[test]
    fn fsle_recovers_linear_separation_rate() {
        // harnessed flow dy/dt = λ y: uniform exponential separation at λ
        struct Linear {
            rate: f64,
            dim: usize,
        }
        impl OdeSystem for Linear {
            fn dim(&self) -> usize {
                self.dim
            }
            fn eval(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), Overflow> {
                for i in 0..y.len() {
                    dy[i] = self.rate * y[i];
                }
                Ok(())
            }
        }
        let lambda = 0.7;
        let sys = Linear { rate: lambda, dim: 4 };
        let control = StepControl {
            eps: 1e-8,
            t_max: 100.0,
            ..Default::default()
        };
        let y_ref = vec![0.05, -0.02, 0.01, 0.03];
        let mut rng = crate::rng::stream(11);
        let phi = fsle_for_system(
            &sys,
            &y_ref,
            4,
            1e-6,
            30.0,
            20,
            &control,
            |_| {},
            &mut rng,
        );
        assert!(
            (phi - lambda).abs() / lambda < 0.05,
            "phi = {phi}, lambda = {lambda}"
        );
    }

    #[test]
    fn fsle_zero_at_sat_corner() {
        let f = parse_dimacs("p cnf 2 1\n1 2 0").unwrap();
        let plane = PlaneSpec {
            var_i: 0,
            var_j: 1,
            // a window pinned at the satisfied corner
            window: (0.999, 1.0, 0.999, 1.0),
            grid: (2, 2),
            background_seed: 1,
        };
        let control = StepControl {
            t_max: 5.0,
            ..Default::default()
        };
        let map = fsle_map(&f, &plane, 1e-6, 30.0, 5, &control);
        for &phi in &map.phi {
            assert!(phi.abs() < 1e-6, "phi = {phi}");
        }
    }

    #[test]
    fn wada_single_attractor_not_consistent() {
        let f = parse_dimacs("p cnf 2 2\n1 0\n1 2 0").unwrap();
        let base = unit_plane(3, (8, 8));
        let report = wada_probe(
            &f,
            &base,
            &[(-1.0, 1.0, -1.0, 1.0), (-0.5, 0.5, -0.5, 0.5)],
            &StepControl::default(),
            LabelBy::Cluster { enumeration_cap: 26 },
        )
        .unwrap();
        assert!(!report.wada_consistent);
        assert!(report.zoom_labels.iter().all(|l| l.len() == 1));
    }
}
