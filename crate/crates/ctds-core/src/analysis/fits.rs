//! Survival-function construction and the decay-law fits built on it:
//! exponential decay in analog time, power-law decay in step count, and the
//! power-law size scaling of both exponents.

use super::AnalysisError;
use serde::{Deserialize, Serialize};

/// Default survival window for decay fits.
pub const DEFAULT_WINDOW: (f64, f64) = (0.02, 0.5);

/// Fitted parameters of one decay or scaling law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FitModel {
    /// p(t) = r e^{-λ t}
    ExpDecay { rate: f64, amplitude: f64 },
    /// λ(N) = b N^{-β}
    RateLaw { prefactor: f64, exponent: f64 },
    /// p(n) = u (v + n)^{-η}
    StepPowerLaw { eta: f64, u: f64, v: f64 },
    /// η(N) = d N^{-δ}
    EtaLaw { prefactor: f64, exponent: f64 },
}

/// A fit result with its goodness and the window it was computed over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: FitModel,
    pub r_squared: f64,
    /// Survival window (p_lo, p_hi) for decay fits; None for size-scaling
    /// laws.
    pub window: Option<(f64, f64)>,
    /// Number of points the regression actually used.
    pub points_used: usize,
}

/// Ordinary least squares of y on x over (x, y) pairs; returns
/// (slope, intercept, R²).
pub(crate) fn linear_regression(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy > 0.0 {
        (sxy * sxy) / (sxx * syy)
    } else {
        1.0
    };
    (slope, intercept, r_squared)
}

/// Empirical survival function from solve events. `events` are the values
/// (times or step counts) of the runs that did solve; `total` counts all
/// runs including censored ones that never did. Returns (value, p) pairs
/// with p the fraction still unsolved just after each event, p > 0 only.
pub fn survival_points(events: &[f64], total: usize) -> Vec<(f64, f64)> {
    assert!(events.len() <= total);
    let mut sorted = events.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (x, 1.0 - (i + 1) as f64 / total as f64))
        .filter(|&(_, p)| p > 0.0)
        .collect()
}

fn window_points(
    points: &[(f64, f64)],
    window: (f64, f64),
) -> Result<Vec<(f64, f64)>, AnalysisError> {
    let (p_lo, p_hi) = window;
    assert!(p_lo > 0.0 && p_hi > p_lo && p_hi <= 1.0);
    let selected: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(_, p)| p >= p_lo && p <= p_hi)
        .collect();
    let distinct_x = {
        let mut xs: Vec<f64> = selected.iter().map(|p| p.0).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
        xs.len()
    };
    if selected.len() < 2 || distinct_x < 2 {
        return Err(AnalysisError::DegenerateWindow);
    }
    Ok(selected)
}

/// Fits p(t) = r e^{-λ t} to the survival function of `times` (solved runs
/// out of `total`) over the given window, by least squares of ln p vs t.
pub fn fit_exponential_decay(
    times: &[f64],
    total: usize,
    window: (f64, f64),
) -> Result<ScalingFit, AnalysisError> {
    if total < 50 {
        return Err(AnalysisError::InsufficientData {
            need: 50,
            got: total,
        });
    }
    let surv = survival_points(times, total);
    let pts = window_points(&surv, window)?;
    let log_pts: Vec<(f64, f64)> = pts.iter().map(|&(t, p)| (t, p.ln())).collect();
    let (slope, intercept, r_squared) = linear_regression(&log_pts);
    Ok(ScalingFit {
        model: FitModel::ExpDecay {
            rate: -slope,
            amplitude: intercept.exp(),
        },
        r_squared,
        window: Some(window),
        points_used: log_pts.len(),
    })
}

/// Fits p(n) = u (v + n)^{-η} to the survival function of step counts, grid
/// searching the shift v and keeping the best R².
pub fn fit_step_powerlaw(
    steps: &[f64],
    total: usize,
    window: (f64, f64),
) -> Result<ScalingFit, AnalysisError> {
    if total < 50 {
        return Err(AnalysisError::InsufficientData {
            need: 50,
            got: total,
        });
    }
    let surv = survival_points(steps, total);
    let pts = window_points(&surv, window)?;
    let max_n = pts.iter().map(|p| p.0).fold(0.0f64, f64::max).max(1.0);

    // v candidates: 0 plus a geometric sweep up to the largest step count
    let mut candidates = vec![0.0];
    let grid = 60;
    for i in 0..=grid {
        candidates.push(max_n.powf(i as f64 / grid as f64));
    }

    let mut best: Option<(f64, f64, f64, f64)> = None; // (v, slope, intercept, r²)
    for &v in &candidates {
        let log_pts: Vec<(f64, f64)> =
            pts.iter().map(|&(n, p)| ((v + n).ln(), p.ln())).collect();
        if !log_pts.iter().all(|p| p.0.is_finite()) {
            continue;
        }
        let (slope, intercept, r_squared) = linear_regression(&log_pts);
        if best.map_or(true, |b| r_squared > b.3) {
            best = Some((v, slope, intercept, r_squared));
        }
    }
    let (v, slope, intercept, r_squared) = best.ok_or(AnalysisError::DegenerateWindow)?;
    Ok(ScalingFit {
        model: FitModel::StepPowerLaw {
            eta: -slope,
            u: intercept.exp(),
            v,
        },
        r_squared,
        window: Some(window),
        points_used: pts.len(),
    })
}

fn fit_loglog(
    pairs: &[(f64, f64)],
    make: impl Fn(f64, f64) -> FitModel,
) -> Result<ScalingFit, AnalysisError> {
    let mut ns: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    ns.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ns.dedup();
    if ns.len() < 3 {
        return Err(AnalysisError::InsufficientData {
            need: 3,
            got: ns.len(),
        });
    }
    let log_pts: Vec<(f64, f64)> = pairs.iter().map(|&(n, y)| (n.ln(), y.ln())).collect();
    let (slope, intercept, r_squared) = linear_regression(&log_pts);
    Ok(ScalingFit {
        model: make(intercept.exp(), -slope),
        r_squared,
        window: None,
        points_used: log_pts.len(),
    })
}

/// Fits λ(N) = b N^{-β} over (N, λ) pairs; needs ≥ 3 distinct N.
pub fn fit_rate_scaling(pairs: &[(f64, f64)]) -> Result<ScalingFit, AnalysisError> {
    fit_loglog(pairs, |prefactor, exponent| FitModel::RateLaw {
        prefactor,
        exponent,
    })
}

/// Fits η(N) = d N^{-δ} over (N, η) pairs; needs ≥ 3 distinct N.
pub fn fit_eta_scaling(pairs: &[(f64, f64)]) -> Result<ScalingFit, AnalysisError> {
    fit_loglog(pairs, |prefactor, exponent| FitModel::EtaLaw {
        prefactor,
        exponent,
    })
}

/// Predicted analog time to leave a fraction p of instances unsolved at
/// size n: t(p, n) = b^{-1} n^β ln(r / p), from a fitted rate law and the
/// decay amplitude r.
pub fn rate_law_time(rate_fit: &ScalingFit, r: f64, p: f64, n: f64) -> f64 {
    match rate_fit.model {
        FitModel::RateLaw { prefactor, exponent } => {
            n.powf(exponent) * (r / p).ln() / prefactor
        }
        _ => panic!("rate_law_time needs a RateLaw fit"),
    }
}
