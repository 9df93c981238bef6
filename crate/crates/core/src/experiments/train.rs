use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use nalgebra::{DMatrix, DVector};

use crate::network::{hessian, sup_norm, LeastSquares, Objective};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    #[default]
    Adam,
    Gd,
}

/// Full-batch first-order training settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub target_loss: f64,
    pub seed: u64,
    /// Iterations between recorded checkpoints.
    pub checkpoint_every: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            optimizer: Optimizer::Adam,
            learning_rate: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_iters: 200_000,
            target_loss: 1e-7,
            seed: 0,
            checkpoint_every: 100,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("learning_rate must be positive"));
        }
        if !(self.target_loss > 0.0) {
            return Err(invalid("target_loss must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.epsilon > 0.0) {
            return Err(invalid("adam parameters out of range"));
        }
        if self.checkpoint_every == 0 {
            return Err(invalid("checkpoint_every must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub iter: usize,
    pub loss: f64,
    pub grad_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub checkpoints: Vec<Checkpoint>,
    pub final_params: Vec<f64>,
    pub final_loss: f64,
    pub final_grad_norm: f64,
    /// Number of parameter updates performed.
    pub iters: usize,
    pub converged: bool,
}

/// Minimizes `obj` from `init` until the loss reaches `cfg.target_loss` or
/// `cfg.max_iters` updates have been made. The gradient is always taken on
/// the full objective.
pub fn train<O: Objective + ?Sized>(obj: &O, init: &[f64], cfg: &TrainingConfig) -> Result<TrainingTrace> {
    cfg.validate()?;
    let n = init.len();
    let mut theta = init.to_vec();
    let mut g = vec![0.0; n];
    let mut m1 = vec![0.0; n];
    let mut m2 = vec![0.0; n];
    let (mut p1, mut p2) = (1.0, 1.0);
    let mut checkpoints = Vec::new();
    let mut iters = 0;
    loop {
        let loss = obj.loss_grad(&theta, &mut g);
        if !loss.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("training loss at iteration {iters}")));
        }
        let done = loss <= cfg.target_loss || iters == cfg.max_iters;
        if iters % cfg.checkpoint_every == 0 || done {
            checkpoints.push(Checkpoint {
                iter: iters,
                loss,
                grad_norm: sup_norm(&g),
            });
        }
        if done {
            return Ok(TrainingTrace {
                checkpoints,
                final_params: theta,
                final_loss: loss,
                final_grad_norm: sup_norm(&g),
                iters,
                converged: loss <= cfg.target_loss,
            });
        }
        match cfg.optimizer {
            Optimizer::Gd => {
                for (t, gi) in theta.iter_mut().zip(&g) {
                    *t -= cfg.learning_rate * gi;
                }
            }
            Optimizer::Adam => {
                p1 *= cfg.beta1;
                p2 *= cfg.beta2;
                let (c1, c2) = (1.0 / (1.0 - p1), 1.0 / (1.0 - p2));
                for i in 0..n {
                    m1[i] = cfg.beta1 * m1[i] + (1.0 - cfg.beta1) * g[i];
                    m2[i] = cfg.beta2 * m2[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                    theta[i] -= cfg.learning_rate * (m1[i] * c1) / ((m2[i] * c2).sqrt() + cfg.epsilon);
                }
            }
        }
        iters += 1;
    }
}

/// Outcome of [`refine`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub params: Vec<f64>,
    pub loss: f64,
    pub grad_norm: f64,
    pub iters: usize,
    pub reached: bool,
}

/// Plain gradient descent with a step that shrinks on rejection and grows
/// slowly on acceptance. A step is accepted when it gives sufficient loss
/// decrease, or, once loss differences fall below rounding, when the loss
/// does not increase beyond rounding and the gradient norm drops. Stops at
/// `|grad|_inf <= tol` or after `budget` gradient evaluations.
pub fn refine<O: Objective + ?Sized>(obj: &O, init: &[f64], tol: f64, budget: usize) -> Refinement {
    let n = init.len();
    let mut x = init.to_vec();
    let mut g = vec![0.0; n];
    let mut loss = obj.loss_grad(&x, &mut g);
    let mut gnorm = sup_norm(&g);
    let mut trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];
    let mut step = 1.0;
    let mut evals = 0;
    while gnorm > tol && evals < budget {
        for i in 0..n {
            trial[i] = x[i] - step * g[i];
        }
        let l_trial = obj.loss_grad(&trial, &mut g_trial);
        evals += 1;
        let g2: f64 = g.iter().map(|v| v * v).sum();
        let gnorm_trial = sup_norm(&g_trial);
        let slack = 8.0 * f64::EPSILON * loss.abs().max(f64::MIN_POSITIVE);
        let armijo = l_trial <= loss - 1e-4 * step * g2;
        let flat = l_trial <= loss + slack && gnorm_trial < gnorm;
        if l_trial.is_finite() && (armijo || flat) {
            std::mem::swap(&mut x, &mut trial);
            std::mem::swap(&mut g, &mut g_trial);
            loss = l_trial;
            gnorm = gnorm_trial;
            step *= 1.2;
        } else {
            step *= 0.5;
            if step < 1e-30 {
                break;
            }
        }
    }
    Refinement {
        params: x,
        loss,
        grad_norm: gnorm,
        iters: evals,
        reached: gnorm <= tol,
    }
}

/// Damped Newton iteration towards a nearby critical point, using the
/// finite-difference [`hessian`]. A step solves `(H + mu I) d = -g` and is
/// accepted when it lowers the Euclidean gradient norm, or when the loss
/// drops while `H + mu I` is positive definite; `mu` shrinks on acceptance
/// and grows on rejection. Stops at `|grad|_inf <= tol` or after `budget` solves.
pub fn refine_newton<O: Objective + ?Sized>(obj: &O, init: &[f64], tol: f64, budget: usize) -> Result<Refinement> {
    let n = init.len();
    let norm2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut x = init.to_vec();
    let mut g = vec![0.0; n];
    let mut loss = obj.loss_grad(&x, &mut g);
    let mut trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];
    let mut mu = 0.0;
    let mut solves = 0;
    'outer: while sup_norm(&g) > tol && solves < budget {
        let h = hessian(obj, &x)?;
        let scale = h.amax().max(f64::MIN_POSITIVE);
        loop {
            if solves >= budget || mu > 1e8 * scale {
                break 'outer;
            }
            solves += 1;
            let damped = &h + DMatrix::identity(n, n) * mu;
            let convex = damped.clone().cholesky().is_some();
            let rhs = -DVector::from_column_slice(&g);
            let Some(d) = damped.lu().solve(&rhs) else {
                mu = (mu * 4.0).max(1e-12 * scale);
                continue;
            };
            for i in 0..n {
                trial[i] = x[i] + d[i];
            }
            let l_trial = obj.loss_grad(&trial, &mut g_trial);
            let better = norm2(&g_trial) < norm2(&g) || (convex && l_trial < loss);
            if l_trial.is_finite() && better {
                std::mem::swap(&mut x, &mut trial);
                std::mem::swap(&mut g, &mut g_trial);
                loss = l_trial;
                mu /= 4.0;
                if mu < 1e-14 * scale {
                    mu = 0.0;
                }
                break;
            }
            mu = (mu * 4.0).max(1e-12 * scale);
        }
    }
    let grad_norm = sup_norm(&g);
    Ok(Refinement {
        params: x,
        loss,
        grad_norm,
        iters: solves,
        reached: grad_norm <= tol,
    })
}

/// Levenberg-Marquardt on the residuals of a least-squares objective, with
/// Marquardt's diagonal scaling. Stops once the loss is at most
/// `target_loss`, the damping saturates, or after `budget` linear solves.
pub fn refine_least_squares<O: LeastSquares + ?Sized>(
    obj: &O,
    init: &[f64],
    target_loss: f64,
    budget: usize,
) -> Refinement {
    let n = init.len();
    let rows = obj.residual_count();
    let mut x = init.to_vec();
    let mut r = vec![0.0; rows];
    let mut jac = DMatrix::zeros(rows, n);
    let mut lambda = 1e-3;
    let mut solves = 0;
    let mut trial = vec![0.0; n];
    obj.residuals_jacobian(&x, &mut r, &mut jac);
    let mut loss = 0.5 * r.iter().map(|v| v * v).sum::<f64>();
    let mut g = jac.tr_mul(&DVector::from_column_slice(&r));
    'outer: while loss > target_loss && solves < budget {
        let a = jac.tr_mul(&jac);
        let floor = 1e-12 * a.diagonal().max().max(f64::MIN_POSITIVE);
        loop {
            if solves >= budget || lambda > 1e16 {
                break 'outer;
            }
            solves += 1;
            let mut damped = a.clone();
            for i in 0..n {
                damped[(i, i)] += lambda * a[(i, i)].max(floor);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 4.0;
                continue;
            };
            let delta = chol.solve(&(-&g));
            for i in 0..n {
                trial[i] = x[i] + delta[i];
            }
            let l_trial = obj.loss(&trial);
            if l_trial.is_finite() && l_trial < loss {
                std::mem::swap(&mut x, &mut trial);
                lambda = (lambda / 3.0).max(1e-15);
                obj.residuals_jacobian(&x, &mut r, &mut jac);
                loss = 0.5 * r.iter().map(|v| v * v).sum::<f64>();
                g = jac.tr_mul(&DVector::from_column_slice(&r));
                break;
            }
            lambda *= 4.0;
        }
    }
    Refinement {
        grad_norm: g.amax(),
        params: x,
        loss,
        iters: solves,
        reached: loss <= target_loss,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::QuadraticLoss;

    #[test]
    fn stops_immediately_at_target() {
        let cfg = TrainingConfig::default();
        let t = train(&QuadraticLoss, &[0.0, 0.0], &cfg).unwrap();
        assert!(t.converged);
        assert_eq!(t.iters, 0);
        assert_eq!(t.checkpoints.len(), 1);
    }

    #[test]
    fn adam_and_gd_reach_target_on_quadratic() {
        for optimizer in [Optimizer::Adam, Optimizer::Gd] {
            let cfg = TrainingConfig {
                optimizer,
                learning_rate: 0.1,
                target_loss: 1e-12,
                ..TrainingConfig::default()
            };
            let t = train(&QuadraticLoss, &[1.0, -2.0], &cfg).unwrap();
            assert!(t.converged, "{optimizer:?}");
            assert!(t.final_loss <= 1e-12);
            assert!(t.checkpoints.windows(2).all(|w| w[0].iter < w[1].iter));
        }
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = TrainingConfig {
            max_iters: 500,
            target_loss: 1e-30,
            ..TrainingConfig::default()
        };
        let a = train(&QuadraticLoss, &[0.3, 0.7], &cfg).unwrap();
        let b = train(&QuadraticLoss, &[0.3, 0.7], &cfg).unwrap();
        assert_eq!(a, b);
        assert!(!a.converged);
        assert_eq!(a.iters, 500);
    }

    #[test]
    fn refine_reaches_tight_tolerance() {
        let r = refine(&QuadraticLoss, &[3.0, -1.0], 1e-14, 10_000);
        assert!(r.reached);
        assert!(r.grad_norm <= 1e-14);
    }

    #[test]
    fn newton_finds_the_toy_saddle() {
        use crate::network::{toy_sym_loss, ToySymmetricLoss};
        let toy = ToySymmetricLoss::default();
        // On w1 = w2 = w the gradient numerator is (2w - 3) + w (w^2 - 2) = w^3 - 3.
        let w = 3f64.cbrt();
        let r = refine_newton(&toy, &[w + 0.05, w + 0.05], 1e-13, 100).unwrap();
        assert!(r.reached);
        assert!((r.params[0] - w).abs() < 1e-10 && (r.params[1] - w).abs() < 1e-10);
        assert!(toy_sym_loss(w, w, 3.0, 2.0).1[0].abs() < 1e-14);
    }

    #[test]
    fn least_squares_solves_consistent_system() {
        let r = refine_least_squares(&Line, &[5.0, -3.0], 1e-28, 100);
        assert!(r.reached, "{r:?}");
        assert!((r.params[0] - 2.0).abs() < 1e-12 && (r.params[1] + 1.0).abs() < 1e-12);
    }

    /// Residuals `a * t_k + b - (2 t_k - 1)` for `t_k = 0, 1, 2`.
    struct Line;

    impl Objective for Line {
        fn loss(&self, p: &[f64]) -> f64 {
            (0..3).map(|k| (p[0] * k as f64 + p[1] - (2.0 * k as f64 - 1.0)).powi(2)).sum::<f64>() * 0.5
        }

        fn loss_grad(&self, p: &[f64], g: &mut [f64]) -> f64 {
            g.fill(0.0);
            for k in 0..3 {
                let t = k as f64;
                let e = p[0] * t + p[1] - (2.0 * t - 1.0);
                g[0] += e * t;
                g[1] += e;
            }
            self.loss(p)
        }
    }

    impl LeastSquares for Line {
        fn residual_count(&self) -> usize {
            3
        }

        fn residuals_jacobian(&self, p: &[f64], r: &mut [f64], jac: &mut DMatrix<f64>) {
            for k in 0..3 {
                let t = k as f64;
                r[k] = p[0] * t + p[1] - (2.0 * t - 1.0);
                jac[(k, 0)] = t;
                jac[(k, 1)] = 1.0;
            }
        }
    }

    #[test]
    fn config_validation() {
        let bad = TrainingConfig {
            learning_rate: 0.0,
            ..TrainingConfig::default()
        };
        assert!(train(&QuadraticLoss, &[1.0], &bad).is_err());
        let json = serde_json::json!({"optimizer": "gd", "learning_rate": 0.5});
        let cfg: TrainingConfig = serde_json::from_value(json).unwrap();
        assert_eq!(cfg.optimizer, Optimizer::Gd);
        assert_eq!(cfg.max_iters, 200_000);
    }
}
