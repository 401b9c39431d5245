//! Scalar metrics over a run's log.

use serde::{Deserialize, Serialize};

use super::log::{LogRow, TimeSeriesLog};
use crate::trajectory::Phase;

/// Trailing window for steady-state means, s.
pub const STEADY_WINDOW_S: f64 = 5.0;
/// Consecutive rows a threshold crossing must persist for.
pub const DEBOUNCE_ROWS: usize = 3;
pub const CONVERGED_MM: f64 = 5.0;
pub const RECONVERGED_MM: f64 = 3.0;
pub const HIGH_FORCE_N: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SummaryMetrics {
    /// Mean e over the steady window, mm.
    pub e_converged: Option<f64>,
    /// First time e < 5 mm, relative to the start of force control, s.
    pub t_below_5mm: Option<f64>,
    /// Total time the measured force exceeds 20 N, s.
    pub t_above_20n: Option<f64>,
    /// Mean |(tau_x, tau_y)| / F_c over the steady window, mm.
    pub steady_ratio: Option<f64>,
    /// Smallest true reaction force while the head moves, N.
    pub min_fc_during_motion: Option<f64>,
    /// Time from the last target change until e < 3 mm, s.
    pub t_reconverge_3mm: Option<f64>,
    /// Error when force control engaged, mm.
    pub e_initial: Option<f64>,
    pub steady_abs_e_n: Option<f64>,
    pub steady_abs_e_p: Option<f64>,
    pub steady_theta_deg: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// Index of the first row starting a run of `DEBOUNCE_ROWS` rows with
/// `e < limit`.
fn first_below(rows: &[LogRow], limit: f64) -> Option<usize> {
    let mut run = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.e < limit {
            run += 1;
            if run == DEBOUNCE_ROWS {
                return Some(i + 1 - DEBOUNCE_ROWS);
            }
        } else {
            run = 0;
        }
    }
    None
}

fn row_period(rows: &[LogRow]) -> Option<f64> {
    rows.windows(2).map(|w| w[1].t - w[0].t).reduce(f64::min)
}

/// Metrics over the force-control rows of `log` (all rows when the log has
/// no force-control phase).
pub fn summarize(log: &TimeSeriesLog) -> SummaryMetrics {
    let force_id = Phase::Force.id();
    let start = log.rows.iter().position(|r| r.phase == force_id);
    let rows: &[LogRow] = match start {
        Some(i) => &log.rows[i..],
        None => &log.rows,
    };
    let Some(first) = rows.first() else {
        return SummaryMetrics::default();
    };
    let last = rows[rows.len() - 1];
    let t0 = first.t;

    let steady: Vec<&LogRow> = rows.iter().filter(|r| r.t > last.t - STEADY_WINDOW_S).collect();
    let period = row_period(rows).unwrap_or(0.0);

    let moving = rows.windows(2).filter(|w| w[1].head_position() != w[0].head_position()).map(|w| w[1].f_true);
    let min_fc_during_motion = moving.reduce(f64::min);

    let retarget = rows.windows(2).rposition(|w| w[1].target() != w[0].target()).map(|i| i + 1);
    let t_reconverge_3mm = retarget.and_then(|k| {
        let after = &rows[k..];
        first_below(after, RECONVERGED_MM).map(|j| after[j].t - rows[k].t)
    });

    SummaryMetrics {
        e_converged: mean(steady.iter().map(|r| r.e)),
        t_below_5mm: first_below(rows, CONVERGED_MM).map(|i| rows[i].t - t0),
        t_above_20n: Some(rows.iter().filter(|r| r.f_c > HIGH_FORCE_N).count() as f64 * period),
        steady_ratio: mean(steady.iter().filter_map(|r| r.ratio)),
        min_fc_during_motion,
        t_reconverge_3mm,
        e_initial: Some(first.e),
        steady_abs_e_n: mean(steady.iter().map(|r| r.abs_e_n)),
        steady_abs_e_p: mean(steady.iter().map(|r| r.abs_e_p)),
        steady_theta_deg: mean(steady.iter().map(|r| r.theta_deg)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::log::tests::row;

    fn log_of(es: impl Iterator<Item = (f64, f64)>) -> TimeSeriesLog {
        let mut log = TimeSeriesLog::new();
        for (t, e) in es {
            log.push(row(t, e)).unwrap();
        }
        log
    }

    #[test]
    fn constant_error_never_converges() {
        let log = log_of((0..1000).map(|k| (k as f64 * 0.01, 10.0)));
        let s = summarize(&log);
        assert_eq!(s.t_below_5mm, None);
        assert_eq!(s.e_converged, Some(10.0));
        assert_eq!(s.min_fc_during_motion, None);
        assert_eq!(s.t_reconverge_3mm, None);
    }

    #[test]
    fn step_down_at_two_seconds() {
        let log = log_of((0..1000).map(|k| {
            let t = k as f64 * 0.01;
            (t, if t < 2.0 - 1e-9 { 10.0 } else { 4.0 })
        }));
        assert_eq!(summarize(&log).t_below_5mm, Some(2.0));
    }

    #[test]
    fn single_dip_is_debounced() {
        let log = log_of((0..100).map(|k| (k as f64 * 0.01, if k == 10 { 1.0 } else { 10.0 })));
        assert_eq!(summarize(&log).t_below_5mm, None);
    }

    #[test]
    fn force_time_and_ratio() {
        let mut log = TimeSeriesLog::new();
        for k in 0..100 {
            let mut r = row(k as f64 * 0.01, 1.0);
            r.f_c = if k < 30 { 25.0 } else { 5.0 };
            r.ratio = Some(0.5);
            log.push(r).unwrap();
        }
        let s = summarize(&log);
        assert!((s.t_above_20n.unwrap() - 0.3).abs() < 1e-9);
        assert_eq!(s.steady_ratio, Some(0.5));
    }

    #[test]
    fn empty_log_gives_nulls() {
        assert_eq!(summarize(&TimeSeriesLog::new()), SummaryMetrics::default());
    }
}
