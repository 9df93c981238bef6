use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};

/// Largest parameter count accepted by [`hessian`].
pub const HESSIAN_MAX_PARAMS: usize = 2000;

/// A differentiable scalar function of a flat parameter vector.
pub trait Objective {
    fn loss(&self, params: &[f64]) -> f64;

    /// Writes the gradient into `grad` (same length as `params`) and returns the loss.
    fn loss_grad(&self, params: &[f64], grad: &mut [f64]) -> f64;

    fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; params.len()];
        self.loss_grad(params, &mut g);
        g
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn loss(&self, params: &[f64]) -> f64 {
        (**self).loss(params)
    }

    fn loss_grad(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        (**self).loss_grad(params, grad)
    }
}

/// Objectives of the form `0.5 * |r(theta)|^2` with an explicit residual Jacobian.
pub trait LeastSquares: Objective {
    fn residual_count(&self) -> usize;

    /// Fills the residuals `r` and the Jacobian `jac` (`residual_count x params.len()`).
    fn residuals_jacobian(&self, params: &[f64], r: &mut [f64], jac: &mut DMatrix<f64>);
}

/// Central differences of the loss; coordinate `i` uses step `step * max(1, |theta_i|)`.
pub fn gradient_fd<O: Objective + ?Sized>(obj: &O, params: &[f64], step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid("finite-difference step must be positive"));
    }
    let mut x = params.to_vec();
    let mut out = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let h = step * params[i].abs().max(1.0);
        x[i] = params[i] + h;
        let up = obj.loss(&x);
        x[i] = params[i] - h;
        let down = obj.loss(&x);
        x[i] = params[i];
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

/// Hessian from central differences of the analytic gradient with
/// `h_i = 1e-4 * (1 + |theta_i|)`, symmetrized as `(H + H^T) / 2`.
pub fn hessian<O: Objective + ?Sized>(obj: &O, params: &[f64]) -> Result<DMatrix<f64>> {
    let n = params.len();
    if n > HESSIAN_MAX_PARAMS {
        return Err(Error::SizeGuard {
            what: "hessian parameter count",
            value: n,
            limit: HESSIAN_MAX_PARAMS,
        });
    }
    let mut x = params.to_vec();
    let mut g_up = vec![0.0; n];
    let mut g_down = vec![0.0; n];
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        let step = 1e-4 * (1.0 + params[i].abs());
        x[i] = params[i] + step;
        obj.loss_grad(&x, &mut g_up);
        x[i] = params[i] - step;
        obj.loss_grad(&x, &mut g_down);
        x[i] = params[i];
        for j in 0..n {
            h[(j, i)] = (g_up[j] - g_down[j]) / (2.0 * step);
        }
    }
    let sym = (&h + h.transpose()) * 0.5;
    Ok(sym)
}

/// `log(0.5 * ((w1 + w2 - a)^2 + (w1 * w2 - b)^2) + 1)` and its gradient.
pub fn toy_sym_loss(w1: f64, w2: f64, a: f64, b: f64) -> (f64, [f64; 2]) {
    let u = w1 + w2 - a;
    let v = w1 * w2 - b;
    let q = 0.5 * (u * u + v * v) + 1.0;
    (q.ln(), [(u + v * w2) / q, (u + v * w1) / q])
}

/// The two-unit toy loss as an [`Objective`] on `[w1, w2]` (unit dimension 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToySymmetricLoss {
    pub a: f64,
    pub b: f64,
}

impl Default for ToySymmetricLoss {
    fn default() -> Self {
        ToySymmetricLoss { a: 3.0, b: 2.0 }
    }
}

impl Objective for ToySymmetricLoss {
    fn loss(&self, params: &[f64]) -> f64 {
        toy_sym_loss(params[0], params[1], self.a, self.b).0
    }

    fn loss_grad(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        let (l, g) = toy_sym_loss(params[0], params[1], self.a, self.b);
        grad.copy_from_slice(&g);
        l
    }
}

/// `0.5 * |theta|^2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QuadraticLoss;

impl Objective for QuadraticLoss {
    fn loss(&self, params: &[f64]) -> f64 {
        0.5 * params.iter().map(|x| x * x).sum::<f64>()
    }

    fn loss_grad(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        grad.copy_from_slice(params);
        self.loss(params)
    }
}
