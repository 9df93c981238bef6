use serde::{Deserialize, Serialize};

use super::train::TrainingTrace;
use crate::error::{invalid, Result};

/// Minimum ratio between the surrounding peaks and a gradient-norm minimum.
pub const DIP_PROMINENCE: f64 = 10.0;
/// Relative loss band that counts as flat.
pub const PLATEAU_RELATIVE_CHANGE: f64 = 1e-3;
/// Minimum plateau length as a fraction of all iterations.
pub const PLATEAU_MIN_FRACTION: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradNormDip {
    pub iter: usize,
    /// `min(left peak, right peak) / grad_norm` at the dip.
    pub depth: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateauSpan {
    pub start_iter: usize,
    pub end_iter: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SaddleMetrics {
    pub grad_norm_dips: Vec<GradNormDip>,
    pub plateau_spans: Vec<PlateauSpan>,
}

/// Gradient-norm dips (strict local minima whose lower surrounding peak is
/// at least [`DIP_PROMINENCE`] times higher; dips sharing a valley keep the
/// deepest one) and loss plateaus (maximal stretches within a relative band
/// of [`PLATEAU_RELATIVE_CHANGE`] lasting at least [`PLATEAU_MIN_FRACTION`]
/// of the run).
pub fn saddle_trace_metrics(trace: &TrainingTrace) -> Result<SaddleMetrics> {
    let cps = &trace.checkpoints;
    if cps.len() < 3 {
        return Err(invalid("saddle metrics need at least three checkpoints"));
    }
    let g: Vec<f64> = cps.iter().map(|c| c.grad_norm).collect();
    let n = g.len();
    let mut prefix_max = vec![0.0; n];
    let mut suffix_max = vec![0.0; n];
    for i in 1..n {
        prefix_max[i] = f64::max(prefix_max[i - 1], g[i - 1]);
    }
    for i in (0..n - 1).rev() {
        suffix_max[i] = f64::max(suffix_max[i + 1], g[i + 1]);
    }
    let mut dips: Vec<(usize, f64)> = Vec::new();
    for i in 1..n - 1 {
        if !(g[i] < g[i - 1] && g[i] < g[i + 1]) {
            continue;
        }
        let depth = prefix_max[i].min(suffix_max[i]) / g[i].max(f64::MIN_POSITIVE);
        if depth < DIP_PROMINENCE {
            continue;
        }
        if let Some(&(j, _)) = dips.last() {
            let between = g[j..=i].iter().copied().fold(0.0, f64::max);
            if between < DIP_PROMINENCE * g[j].max(g[i]) {
                if g[i] < g[j] {
                    dips.pop();
                    dips.push((i, depth));
                }
                continue;
            }
        }
        dips.push((i, depth));
    }

    let total = cps.last().map_or(0, |c| c.iter).max(1) as f64;
    let mut plateaus = Vec::new();
    let mut i = 0;
    while i < n {
        let base = cps[i].loss;
        let mut j = i;
        while j + 1 < n && (cps[j + 1].loss - base).abs() <= PLATEAU_RELATIVE_CHANGE * base.abs() {
            j += 1;
        }
        if (cps[j].iter - cps[i].iter) as f64 >= PLATEAU_MIN_FRACTION * total && j > i {
            plateaus.push(PlateauSpan {
                start_iter: cps[i].iter,
                end_iter: cps[j].iter,
            });
            i = j + 1;
        } else {
            i += 1;
        }
    }
    Ok(SaddleMetrics {
        grad_norm_dips: dips.into_iter().map(|(i, depth)| GradNormDip { iter: cps[i].iter, depth }).collect(),
        plateau_spans: plateaus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::Checkpoint;

    fn trace(values: &[(f64, f64)]) -> TrainingTrace {
        TrainingTrace {
            checkpoints: values
                .iter()
                .enumerate()
                .map(|(i, &(loss, grad_norm))| Checkpoint {
                    iter: i * 10,
                    loss,
                    grad_norm,
                })
                .collect(),
            final_params: vec![],
            final_loss: values.last().unwrap().0,
            final_grad_norm: values.last().unwrap().1,
            iters: (values.len() - 1) * 10,
            converged: false,
        }
    }

    #[test]
    fn monotone_has_no_dips() {
        let v: Vec<(f64, f64)> = (0..20).map(|i| (1.0 / (i + 1) as f64, 0.5f64.powi(i))).collect();
        assert!(saddle_trace_metrics(&trace(&v)).unwrap().grad_norm_dips.is_empty());
    }

    #[test]
    fn v_shape_has_one_dip() {
        let g = [1.0, 0.1, 0.01, 0.001, 0.01, 0.1, 1.0];
        let v: Vec<(f64, f64)> = g.iter().enumerate().map(|(i, &g)| (1.0 / (i + 1) as f64, g)).collect();
        let m = saddle_trace_metrics(&trace(&v)).unwrap();
        assert_eq!(m.grad_norm_dips.len(), 1);
        assert_eq!(m.grad_norm_dips[0].iter, 30);
        assert!((m.grad_norm_dips[0].depth - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn shallow_wiggles_are_ignored_and_valleys_merge() {
        let g = [1.0, 0.5, 0.6, 0.5, 1.0];
        let v: Vec<(f64, f64)> = g.iter().map(|&g| (1.0, g)).collect();
        assert!(saddle_trace_metrics(&trace(&v)).unwrap().grad_norm_dips.is_empty());
        let g = [1.0, 0.01, 0.02, 0.005, 1.0];
        let v: Vec<(f64, f64)> = g.iter().map(|&g| (1.0, g)).collect();
        let m = saddle_trace_metrics(&trace(&v)).unwrap();
        assert_eq!(m.grad_norm_dips.len(), 1);
        assert_eq!(m.grad_norm_dips[0].iter, 30);
    }

    #[test]
    fn plateau_detection() {
        let mut v: Vec<(f64, f64)> = (0..5).map(|i| (1.0 - 0.1 * i as f64, 1.0)).collect();
        v.extend((0..10).map(|_| (0.5, 1.0)));
        v.extend((0..5).map(|i| (0.4 - 0.05 * i as f64, 1.0)));
        let m = saddle_trace_metrics(&trace(&v)).unwrap();
        assert_eq!(m.plateau_spans.len(), 1);
        assert_eq!(m.plateau_spans[0].start_iter, 50);
        assert_eq!(m.plateau_spans[0].end_iter, 140);
        assert!(saddle_trace_metrics(&trace(&v[..2])).is_err());
    }
}
