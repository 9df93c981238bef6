//! Numerical certificates: vanishing gradients, Hessian spectra, loss along
//! paths and invariance of symmetry subspaces under gradient flow.

use std::io::Write;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::expansion::{replicant_region_of_units, PiecewisePath};
use crate::network::{hessian, sup_dist, sup_norm, Dataset, Objective, Permutation, TwoLayerPoint};

/// Default tolerance for counting vanishing Hessian eigenvalues.
pub const DEFAULT_NULL_TOL: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub loss: f64,
    pub grad_norm: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Passes iff the sup norm of the gradient is at most `tol`.
pub fn check_zero_gradient_of<O: Objective + ?Sized>(obj: &O, params: &[f64], tol: f64) -> CriticalityReport {
    let mut g = vec![0.0; params.len()];
    let loss = obj.loss_grad(params, &mut g);
    let grad_norm = sup_norm(&g);
    CriticalityReport {
        loss,
        grad_norm,
        tol,
        pass: grad_norm <= tol,
    }
}

pub fn check_zero_gradient(theta: &TwoLayerPoint, data: &Dataset, tol: f64) -> Result<CriticalityReport> {
    Ok(check_zero_gradient_of(&theta.objective(data)?, &theta.to_flat(), tol))
}

/// Eigenvalues of the Hessian (ascending) with summary statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub tol: f64,
    pub null_count: usize,
    pub negative_count: usize,
    pub min_eig: f64,
    pub max_eig: f64,
    pub trace: f64,
    pub loss_at_point: f64,
    pub grad_norm: f64,
}

impl SpectrumReport {
    /// `#{ |lambda| <= tol }`.
    pub fn null_count(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|l| l.abs() <= tol).count()
    }

    /// `min_eig < -tol`.
    pub fn is_strict_saddle(&self, tol: f64) -> bool {
        self.min_eig < -tol
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "index,eigenvalue")?;
        for (i, l) in self.eigenvalues.iter().enumerate() {
            writeln!(out, "{i},{l:?}")?;
        }
        Ok(())
    }
}

pub fn hessian_report_of<O: Objective + ?Sized>(obj: &O, params: &[f64], tol: f64) -> Result<SpectrumReport> {
    let h = hessian(obj, params)?;
    let trace = h.trace();
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    if eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite("hessian eigenvalue".into()));
    }
    eigenvalues.sort_by(f64::total_cmp);
    let mut g = vec![0.0; params.len()];
    let loss = obj.loss_grad(params, &mut g);
    Ok(SpectrumReport {
        null_count: eigenvalues.iter().filter(|l| l.abs() <= tol).count(),
        negative_count: eigenvalues.iter().filter(|&&l| l < -tol).count(),
        min_eig: eigenvalues.first().copied().unwrap_or(0.0),
        max_eig: eigenvalues.last().copied().unwrap_or(0.0),
        eigenvalues,
        tol,
        trace,
        loss_at_point: loss,
        grad_norm: sup_norm(&g),
    })
}

pub fn hessian_report(theta: &TwoLayerPoint, data: &Dataset, tol: f64) -> Result<SpectrumReport> {
    hessian_report_of(&theta.objective(data)?, &theta.to_flat(), tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathProfileRow {
    pub segment: usize,
    pub t: f64,
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathProfile {
    pub max_abs_deviation: f64,
    pub rows: Vec<PathProfileRow>,
}

impl PathProfile {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "segment,t,loss")?;
        for r in &self.rows {
            writeln!(out, "{},{:?},{:?}", r.segment, r.t, r.loss)?;
        }
        Ok(())
    }
}

/// Loss at `samples_per_segment` points of every segment and the largest
/// deviation from the loss at the start of the path. `shape` supplies the
/// activation and dimensions used to decode the flat points.
pub fn path_loss_profile(
    path: &PiecewisePath,
    shape: &TwoLayerPoint,
    data: &Dataset,
    samples_per_segment: usize,
) -> Result<PathProfile> {
    let unit = shape.unit_dim();
    if path.dim() % unit != 0 {
        return Err(invalid("path dimension is not a multiple of the unit dimension"));
    }
    let obj = shape.objective(data)?;
    let base = obj.loss(path.start());
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (segment, t, p) in path.samples(samples_per_segment)? {
        let loss = obj.loss(&p);
        worst = worst.max((loss - base).abs());
        rows.push(PathProfileRow { segment, t, loss });
    }
    Ok(PathProfile {
        max_abs_deviation: worst,
        rows,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    #[default]
    Rk4,
    Euler,
}

impl std::str::FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Integrator::Rk4),
            "euler" => Ok(Integrator::Euler),
            other => Err(Error::Parse(format!("unknown integrator '{other}'"))),
        }
    }
}

/// States of a fixed-step integration of `d theta / dt = -grad L(theta)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub step: f64,
    pub integrator: Integrator,
}

impl FlowTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectories hold the initial state")
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.states.first().map_or(0, Vec::len);
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((0..n).map(|i| format!("theta_{i}")))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut line = format!("{t:?}");
            for v in s {
                line.push_str(&format!(",{v:?}"));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// `1e-2 / (1 + |grad L(theta0)|_inf)`.
pub fn default_flow_step<O: Objective + ?Sized>(obj: &O, theta0: &[f64]) -> f64 {
    1e-2 / (1.0 + sup_norm(&obj.gradient(theta0)))
}

/// Integrates the gradient flow from `theta0` up to time `horizon` with a
/// fixed `step` (the last step is shortened to land on `horizon`).
pub fn gradient_flow<O: Objective + ?Sized>(
    obj: &O,
    theta0: &[f64],
    step: f64,
    horizon: f64,
    integrator: Integrator,
) -> Result<FlowTrajectory> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(invalid("flow step must be positive"));
    }
    if !(horizon >= step) {
        return Err(invalid("flow horizon must be at least one step"));
    }
    let n = theta0.len();
    let n_steps = (horizon / step - 1e-9).ceil() as usize;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut x = theta0.to_vec();
    times.push(0.0);
    states.push(x.clone());
    let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut tmp = vec![0.0; n];
    for s in 1..=n_steps {
        let t_prev = (s - 1) as f64 * step;
        let t = (s as f64 * step).min(horizon);
        let h = t - t_prev;
        match integrator {
            Integrator::Euler => {
                obj.loss_grad(&x, &mut k[0]);
                for (xi, g) in x.iter_mut().zip(&k[0]) {
                    *xi -= h * g;
                }
            }
            Integrator::Rk4 => {
                obj.loss_grad(&x, &mut k[0]);
                for stage in 1..4 {
                    let c = if stage == 3 { h } else { 0.5 * h };
                    for i in 0..n {
                        tmp[i] = x[i] - c * k[stage - 1][i];
                    }
                    obj.loss_grad(&tmp, &mut k[stage]);
                }
                for i in 0..n {
                    x[i] -= h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
                }
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("flow state at t = {t}")));
        }
        times.push(t);
        states.push(x.clone());
    }
    Ok(FlowTrajectory {
        times,
        states,
        step,
        integrator,
    })
}

/// Largest `|unit_i(t) - unit_j(t)|_inf` over all states and listed pairs.
pub fn subspace_invariance_check(traj: &FlowTrajectory, unit_dim: usize, pairs: &[(usize, usize)]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for s in &traj.states {
        let units = split_units(s, unit_dim)?;
        for &(i, j) in pairs {
            if i >= units.len() || j >= units.len() {
                return Err(invalid(format!("unit pair ({i}, {j}) out of range")));
            }
            worst = worst.max(sup_dist(units[i], units[j]));
        }
    }
    Ok(worst)
}

/// Smallest sup distance between any two units over the whole trajectory.
pub fn min_pairwise_distance(traj: &FlowTrajectory, unit_dim: usize) -> Result<f64> {
    let mut best = f64::INFINITY;
    for s in &traj.states {
        let units = split_units(s, unit_dim)?;
        for i in 0..units.len() {
            for j in (i + 1)..units.len() {
                best = best.min(sup_dist(units[i], units[j]));
            }
        }
    }
    Ok(best)
}

/// True iff the replicant region is the same at every state. Only defined
/// for one-dimensional units.
pub fn replicant_invariance_check(traj: &FlowTrajectory, unit_dim: usize) -> Result<bool> {
    if unit_dim != 1 {
        return Err(invalid(format!(
            "replicant regions are only flow-invariant for one-dimensional units, got {unit_dim}"
        )));
    }
    let region = |s: &Vec<f64>| -> Permutation {
        let units: Vec<Vec<f64>> = s.iter().map(|&v| vec![v]).collect();
        replicant_region_of_units(&units)
    };
    let Some(first) = traj.states.first() else {
        return Ok(true);
    };
    let r0 = region(first);
    Ok(traj.states.iter().all(|s| region(s) == r0))
}

fn split_units(state: &[f64], unit_dim: usize) -> Result<Vec<&[f64]>> {
    if unit_dim == 0 || state.len() % unit_dim != 0 {
        return Err(invalid("state length is not a multiple of the unit dimension"));
    }
    Ok(state.chunks(unit_dim).collect())
}
