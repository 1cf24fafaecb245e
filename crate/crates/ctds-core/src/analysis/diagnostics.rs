//! Time-series diagnostics over recorded traces, mainly for spotting
//! intermittent slowdowns on hard instances.

use super::AnalysisError;
use crate::integrator::TrajectoryPoint;

/// Aligned columns extracted from a trace, plus summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsBundle {
    pub t: Vec<f64>,
    pub e: Vec<f64>,
    pub v: Vec<f64>,
    pub speed: Vec<f64>,
    /// Rate of change of speed, central divided differences over the
    /// (non-uniform) sample times; one-sided at the ends.
    pub accel: Vec<f64>,
    /// One column per selected spin index.
    pub s_columns: Vec<Vec<f64>>,
    /// Clause weights a_m = e^{b_m}, one column per selected clause.
    pub a_columns: Vec<Vec<f64>>,
    /// Excess kurtosis of speed increments; heavy-tailed (intermittent)
    /// dynamics push this up.
    pub speed_increment_kurtosis: f64,
}

/// Excess kurtosis m4/m2² − 3; 0 for fewer than 4 values or zero variance.
fn excess_kurtosis(values: &[f64]) -> f64 {
    if values.len() < 4 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if m2 <= 0.0 {
        return 0.0;
    }
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    m4 / (m2 * m2) - 3.0
}

/// Unpacks a trace into aligned series and computes intermittency summary
/// statistics. Needs at least 3 points.
pub fn trajectory_diagnostics(
    trace: &[TrajectoryPoint],
) -> Result<DiagnosticsBundle, AnalysisError> {
    if trace.len() < 3 {
        return Err(AnalysisError::TraceTooShort);
    }
    let n = trace.len();
    let t: Vec<f64> = trace.iter().map(|p| p.t).collect();
    let e: Vec<f64> = trace.iter().map(|p| p.e).collect();
    let v: Vec<f64> = trace.iter().map(|p| p.v).collect();
    let speed: Vec<f64> = trace.iter().map(|p| p.speed).collect();

    let mut accel = vec![0.0; n];
    accel[0] = (speed[1] - speed[0]) / (t[1] - t[0]);
    accel[n - 1] = (speed[n - 1] - speed[n - 2]) / (t[n - 1] - t[n - 2]);
    for i in 1..n - 1 {
        accel[i] = (speed[i + 1] - speed[i - 1]) / (t[i + 1] - t[i - 1]);
    }

    let num_s = trace[0].s_sel.len();
    let s_columns: Vec<Vec<f64>> = (0..num_s)
        .map(|j| trace.iter().map(|p| p.s_sel[j]).collect())
        .collect();
    let num_a = trace[0].log_a_sel.len();
    let a_columns: Vec<Vec<f64>> = (0..num_a)
        .map(|j| trace.iter().map(|p| p.log_a_sel[j].exp()).collect())
        .collect();

    let increments: Vec<f64> = speed.windows(2).map(|w| w[1] - w[0]).collect();
    let speed_increment_kurtosis = excess_kurtosis(&increments);

    Ok(DiagnosticsBundle {
        t,
        e,
        v,
        speed,
        accel,
        s_columns,
        a_columns,
        speed_increment_kurtosis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(t: f64, speed: f64) -> TrajectoryPoint {
        TrajectoryPoint {
            t,
            e: 0.5,
            v: 0.5,
            speed,
            accel: 0.0,
            s_sel: vec![0.1],
            log_a_sel: vec![0.0],
        }
    }

    #[test]
    fn short_trace_rejected() {
        let trace = vec![point(0.0, 1.0), point(1.0, 1.0)];
        assert_eq!(
            trajectory_diagnostics(&trace),
            Err(AnalysisError::TraceTooShort)
        );
    }

    #[test]
    fn constant_speed_zero_acceleration() {
        let trace: Vec<_> = (0..10).map(|i| point(i as f64 * 0.3, 2.0)).collect();
        let bundle = trajectory_diagnostics(&trace).unwrap();
        assert!(bundle.accel.iter().all(|a| a.abs() < 1e-12));
        assert_eq!(bundle.speed_increment_kurtosis, 0.0);
    }

    #[test]
    fn nonuniform_times_linear_speed_constant_accel() {
        // speed = 3t on irregular sample times: central divided differences
        // are exact for a linear function
        let ts = [0.0, 0.1, 0.35, 0.5, 1.0, 1.1, 2.0];
        let trace: Vec<_> = ts.iter().map(|&t| point(t, 3.0 * t)).collect();
        let bundle = trajectory_diagnostics(&trace).unwrap();
        for a in &bundle.accel {
            assert!((a - 3.0).abs() < 1e-12, "a = {a}");
        }
    }

    #[test]
    fn spiky_increments_have_higher_kurtosis() {
        // smooth ramp vs. mostly-flat series with rare large jumps
        let smooth: Vec<_> = (0..200).map(|i| point(i as f64, i as f64 * 0.01)).collect();
        let spiky: Vec<_> = (0..200)
            .map(|i| point(i as f64, if i % 50 == 0 { 5.0 } else { 0.1 }))
            .collect();
        let k_smooth = trajectory_diagnostics(&smooth)
            .unwrap()
            .speed_increment_kurtosis;
        let k_spiky = trajectory_diagnostics(&spiky)
            .unwrap()
            .speed_increment_kurtosis;
        assert!(k_spiky > k_smooth);
    }

    #[test]
    fn a_columns_exponentiate_log_weights() {
        let mut trace: Vec<_> = (0..3).map(|i| point(i as f64, 1.0)).collect();
        for (i, p) in trace.iter_mut().enumerate() {
            p.log_a_sel = vec![i as f64];
        }
        let bundle = trajectory_diagnostics(&trace).unwrap();
        assert!((bundle.a_columns[0][2] - 2.0f64.exp()).abs() < 1e-12);
    }
}
