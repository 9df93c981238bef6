use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::dataset::Dataset;
use super::objective::{self, LeastSquares, Objective};
use super::permutation::Permutation;
use crate::error::{invalid, Error, Result};

/// One hidden unit: incoming weights `w` (length `d_in`) and outgoing
/// weights `a` (length `d_out`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neuron {
    pub w: Vec<f64>,
    pub a: Vec<f64>,
}

impl Neuron {
    pub fn new(w: Vec<f64>, a: Vec<f64>) -> Self {
        Neuron { w, a }
    }
}

/// Parameters of a bias-free two-layer network `f(x) = sum_i a_i sigma(w_i . x)`.
///
/// Flat vectors use unit-major layout: `[w_0, a_0, w_1, a_1, ..]`, so a
/// permutation of neurons is a permutation of contiguous blocks of
/// `d_in + d_out` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoLayerPoint {
    activation: Activation,
    d_in: usize,
    d_out: usize,
    neurons: Vec<Neuron>,
}

impl TwoLayerPoint {
    pub fn new(activation: Activation, d_in: usize, d_out: usize, neurons: Vec<Neuron>) -> Result<Self> {
        if d_in == 0 || d_out == 0 {
            return Err(invalid("d_in and d_out must be positive"));
        }
        if neurons.is_empty() {
            return Err(invalid("a network needs at least one hidden neuron"));
        }
        for n in &neurons {
            if n.w.len() != d_in {
                return Err(Error::DimensionMismatch {
                    expected: d_in,
                    got: n.w.len(),
                });
            }
            if n.a.len() != d_out {
                return Err(Error::DimensionMismatch {
                    expected: d_out,
                    got: n.a.len(),
                });
            }
        }
        Ok(TwoLayerPoint {
            activation,
            d_in,
            d_out,
            neurons,
        })
    }

    pub fn from_flat(activation: Activation, d_in: usize, d_out: usize, flat: &[f64]) -> Result<Self> {
        let unit = d_in + d_out;
        if unit == 0 || flat.is_empty() || flat.len() % unit != 0 {
            return Err(invalid(format!(
                "flat vector of length {} is not a multiple of the unit size {unit}",
                flat.len()
            )));
        }
        let neurons = flat
            .chunks(unit)
            .map(|c| Neuron::new(c[..d_in].to_vec(), c[d_in..].to_vec()))
            .collect();
        TwoLayerPoint::new(activation, d_in, d_out, neurons)
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn width(&self) -> usize {
        self.neurons.len()
    }

    /// `D = d_in + d_out`.
    pub fn unit_dim(&self) -> usize {
        self.d_in + self.d_out
    }

    pub fn param_count(&self) -> usize {
        self.width() * self.unit_dim()
    }

    pub fn neurons(&self) -> &[Neuron] {
        &self.neurons
    }

    pub fn neuron(&self, i: usize) -> &Neuron {
        &self.neurons[i]
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for n in &self.neurons {
            out.extend_from_slice(&n.w);
            out.extend_from_slice(&n.a);
        }
        out
    }

    /// Same shape and activation, new parameters.
    pub fn with_flat(&self, flat: &[f64]) -> Result<Self> {
        if flat.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                got: flat.len(),
            });
        }
        TwoLayerPoint::from_flat(self.activation, self.d_in, self.d_out, flat)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d_in {
            return Err(Error::DimensionMismatch {
                expected: self.d_in,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.d_out];
        for n in &self.neurons {
            let s = self.activation.value(dot(&n.w, x));
            for (o, a) in out.iter_mut().zip(&n.a) {
                *o += a * s;
            }
        }
        Ok(out)
    }

    fn check_data(&self, data: &Dataset) -> Result<()> {
        if data.d_in() != self.d_in {
            return Err(Error::DimensionMismatch {
                expected: self.d_in,
                got: data.d_in(),
            });
        }
        if data.d_out() != self.d_out {
            return Err(Error::DimensionMismatch {
                expected: self.d_out,
                got: data.d_out(),
            });
        }
        Ok(())
    }

    pub fn objective<'a>(&self, data: &'a Dataset) -> Result<TwoLayerObjective<'a>> {
        self.check_data(data)?;
        Ok(TwoLayerObjective {
            activation: self.activation,
            d_in: self.d_in,
            d_out: self.d_out,
            data,
        })
    }

    /// Mean over samples of `0.5 * |f(x) - y|^2`.
    pub fn loss(&self, data: &Dataset) -> Result<f64> {
        Ok(self.objective(data)?.loss(&self.to_flat()))
    }

    /// Analytic gradient in the flat layout of [`to_flat`](Self::to_flat).
    pub fn gradient(&self, data: &Dataset) -> Result<Vec<f64>> {
        let obj = self.objective(data)?;
        let mut g = vec![0.0; self.param_count()];
        obj.loss_grad(&self.to_flat(), &mut g);
        Ok(g)
    }

    /// Central-difference gradient with per-coordinate step `step * max(1, |theta_i|)`.
    pub fn gradient_fd(&self, data: &Dataset, step: f64) -> Result<Vec<f64>> {
        let obj = self.objective(data)?;
        objective::gradient_fd(&obj, &self.to_flat(), step)
    }

    pub fn hessian(&self, data: &Dataset) -> Result<nalgebra::DMatrix<f64>> {
        let obj = self.objective(data)?;
        objective::hessian(&obj, &self.to_flat())
    }

    /// `P_pi theta`: neuron `i` of the result is neuron `pi(i)` of `self`.
    pub fn permute(&self, pi: &Permutation) -> Result<Self> {
        let neurons = pi.permute_items(&self.neurons)?;
        Ok(TwoLayerPoint { neurons, ..self.clone() })
    }

    /// Pairwise-distinct incoming vectors and no vanishing outgoing vector,
    /// both judged in the sup norm against `tol`.
    pub fn is_irreducible(&self, tol: f64) -> bool {
        let m = self.width();
        for i in 0..m {
            if sup_norm(&self.neurons[i].a) <= tol {
                return false;
            }
            for j in (i + 1)..m {
                if sup_dist(&self.neurons[i].w, &self.neurons[j].w) <= tol {
                    return false;
                }
            }
        }
        true
    }

    /// Single-linkage clusters of neuron indices whose incoming vectors are
    /// chained by sup-distance `<= tol`. Clusters are ordered by their
    /// smallest member and members are ascending.
    pub fn incoming_clusters(&self, tol: f64) -> Vec<Vec<usize>> {
        let ws: Vec<&[f64]> = self.neurons.iter().map(|n| n.w.as_slice()).collect();
        single_linkage(&ws, tol)
    }

    /// Merges neurons sharing an incoming vector (summing outgoing vectors),
    /// then drops neurons whose outgoing vector vanishes. Returns `None`
    /// when nothing survives (the zero function).
    pub fn reduce(&self, tol: f64) -> Option<Self> {
        let mut neurons: Vec<Neuron> = Vec::new();
        for cluster in self.incoming_clusters(tol) {
            let mut a = vec![0.0; self.d_out];
            for &i in &cluster {
                for (s, v) in a.iter_mut().zip(&self.neurons[i].a) {
                    *s += v;
                }
            }
            if sup_norm(&a) > tol {
                neurons.push(Neuron::new(self.neurons[cluster[0]].w.clone(), a));
            }
        }
        if neurons.is_empty() {
            return None;
        }
        Some(TwoLayerPoint { neurons, ..self.clone() })
    }

    /// Finds `pi` with `P_pi other ≈ self` (sup-distance `<= tol` on every unit).
    pub fn match_permutation(&self, other: &TwoLayerPoint, tol: f64) -> Option<Permutation> {
        if self.width() != other.width() || self.d_in != other.d_in || self.d_out != other.d_out {
            return None;
        }
        let mut used = vec![false; other.width()];
        let mut images = Vec::with_capacity(self.width());
        for n in &self.neurons {
            let found = other.neurons.iter().enumerate().find(|(j, o)| {
                !used[*j] && sup_dist(&n.w, &o.w) <= tol && sup_dist(&n.a, &o.a) <= tol
            });
            let (j, _) = found?;
            used[j] = true;
            images.push(j);
        }
        Permutation::new(images).ok()
    }

    /// Largest output difference over the given probe inputs.
    pub fn function_distance(&self, other: &TwoLayerPoint, probes: &[Vec<f64>]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for x in probes {
            let a = self.forward(x)?;
            let b = other.forward(x)?;
            worst = worst.max(sup_dist(&a, &b));
        }
        Ok(worst)
    }
}

/// Loss and gradient of a two-layer network as a function of its flat parameters.
#[derive(Clone, Copy, Debug)]
pub struct TwoLayerObjective<'a> {
    activation: Activation,
    d_in: usize,
    d_out: usize,
    data: &'a Dataset,
}

impl Objective for TwoLayerObjective<'_> {
    fn loss(&self, params: &[f64]) -> f64 {
        self.eval(params, None)
    }

    fn loss_grad(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        self.eval(params, Some(grad))
    }
}

impl LeastSquares for TwoLayerObjective<'_> {
    fn residual_count(&self) -> usize {
        self.data.len() * self.d_out
    }

    /// Residuals `(f(x_k) - y_k)_o / sqrt(N)`, indexed `k * d_out + o`.
    fn residuals_jacobian(&self, params: &[f64], r: &mut [f64], jac: &mut nalgebra::DMatrix<f64>) {
        let (d_in, d_out) = (self.d_in, self.d_out);
        let unit = d_in + d_out;
        let m = params.len() / unit;
        let scale = 1.0 / (self.data.len() as f64).sqrt();
        r.fill(0.0);
        jac.fill(0.0);
        for k in 0..self.data.len() {
            let x = self.data.input(k);
            let row0 = k * d_out;
            for i in 0..m {
                let block = &params[i * unit..(i + 1) * unit];
                let (v, dv) = self.activation.eval(dot(&block[..d_in], x));
                for o in 0..d_out {
                    let a = block[d_in + o];
                    r[row0 + o] += a * v;
                    for (j, xj) in x.iter().enumerate() {
                        jac[(row0 + o, i * unit + j)] = a * dv * xj * scale;
                    }
                    jac[(row0 + o, i * unit + d_in + o)] = v * scale;
                }
            }
            for (o, y) in self.data.target(k).iter().enumerate() {
                r[row0 + o] = (r[row0 + o] - y) * scale;
            }
        }
    }
}

impl TwoLayerObjective<'_> {
    fn eval(&self, params: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let (d_in, d_out) = (self.d_in, self.d_out);
        let unit = d_in + d_out;
        let m = params.len() / unit;
        let mut s = vec![0.0; m];
        let mut ds = vec![0.0; m];
        let mut y_hat = vec![0.0; d_out];
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }
        let mut total = 0.0;
        for k in 0..self.data.len() {
            let x = self.data.input(k);
            let y = self.data.target(k);
            y_hat.fill(0.0);
            for i in 0..m {
                let block = &params[i * unit..(i + 1) * unit];
                let (v, dv) = self.activation.eval(dot(&block[..d_in], x));
                s[i] = v;
                ds[i] = dv;
                for (o, a) in y_hat.iter_mut().zip(&block[d_in..]) {
                    *o += a * v;
                }
            }
            let mut sq = 0.0;
            for (o, t) in y_hat.iter_mut().zip(y) {
                *o -= t;
                sq += *o * *o;
            }
            total += 0.5 * sq;
            if let Some(g) = grad.as_deref_mut() {
                for i in 0..m {
                    let block = &params[i * unit..(i + 1) * unit];
                    let gb = &mut g[i * unit..(i + 1) * unit];
                    let back = dot(&block[d_in..], &y_hat) * ds[i];
                    for (gw, xv) in gb[..d_in].iter_mut().zip(x) {
                        *gw += back * xv;
                    }
                    for (ga, e) in gb[d_in..].iter_mut().zip(&y_hat) {
                        *ga += e * s[i];
                    }
                }
            }
        }
        let scale = 1.0 / self.data.len() as f64;
        if let Some(g) = grad {
            g.iter_mut().for_each(|v| *v *= scale);
        }
        total * scale
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[inline]
pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Connected components of the graph linking vectors at sup-distance `<= tol`.
pub(crate) fn single_linkage(vectors: &[&[f64]], tol: f64) -> Vec<Vec<usize>> {
    let n = vectors.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if sup_dist(vectors[i], vectors[j]) <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut index_of_root = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if index_of_root[root] == usize::MAX {
            index_of_root[root] = clusters.len();
            clusters.push(Vec::new());
        }
        clusters[index_of_root[root]].push(i);
    }
    clusters
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng, act: Activation, m: usize, d_in: usize, d_out: usize) -> TwoLayerPoint {
        let flat: Vec<f64> = (0..m * (d_in + d_out)).map(|_| rng.random_range(-1.5..1.5)).collect();
        TwoLayerPoint::from_flat(act, d_in, d_out, &flat).unwrap()
    }

    fn random_data(rng: &mut ChaCha8Rng, n: usize, d_in: usize, d_out: usize) -> Dataset {
        let x = (0..n * d_in).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y = (0..n * d_out).map(|_| rng.random_range(-1.0..1.0)).collect();
        Dataset::new(d_in, d_out, x, y).unwrap()
    }

    #[test]
    fn forward_of_silent_network_is_zero() {
        let p = TwoLayerPoint::new(
            Activation::Sigmoid,
            2,
            3,
            vec![Neuron::new(vec![0.3, -1.0], vec![0.0; 3]); 4],
        )
        .unwrap();
        assert_eq!(p.forward(&[1.0, 2.0]).unwrap(), vec![0.0; 3]);
        assert!(p.forward(&[1.0]).is_err());
        let t = TwoLayerPoint::new(Activation::Tanh, 1, 1, vec![Neuron::new(vec![0.0], vec![2.5])]).unwrap();
        assert_eq!(t.forward(&[3.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn permutation_invariance_of_forward_and_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_point(&mut rng, Activation::Softplus, 5, 3, 2);
        let data = random_data(&mut rng, 20, 3, 2);
        let pi = Permutation::new(vec![3, 0, 4, 1, 2]).unwrap();
        let q = p.permute(&pi).unwrap();
        let x = [0.2, -1.0, 0.5];
        assert!(sup_dist(&p.forward(&x).unwrap(), &q.forward(&x).unwrap()) <= 1e-14);
        assert!((p.loss(&data).unwrap() - q.loss(&data).unwrap()).abs() <= 1e-13);
        // canonical-order accumulation makes the two bit-identical
        let terms = |pt: &TwoLayerPoint| {
            let mut t: Vec<f64> = pt
                .neurons()
                .iter()
                .map(|n| n.a[0] * pt.activation().value(dot(&n.w, &x)))
                .collect();
            t.sort_by(f64::total_cmp);
            t.iter().sum::<f64>()
        };
        assert_eq!(terms(&p).to_bits(), terms(&q).to_bits());
    }

    #[test]
    fn loss_of_single_scalar_sample() {
        let p = TwoLayerPoint::new(Activation::Tanh, 1, 1, vec![Neuron::new(vec![0.0], vec![1.0])]).unwrap();
        let data = Dataset::new(1, 1, vec![0.7], vec![-2.0]).unwrap();
        // prediction 0, target -2: 0.5 * 4
        assert!((p.loss(&data).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn interpolation_point_has_zero_loss_and_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let teacher = random_point(&mut rng, Activation::blended(1.0, 4.0).unwrap(), 3, 2, 1);
        let xs: Vec<f64> = (0..40).map(|_| rng.random_range(-2.0..2.0)).collect();
        let ys: Vec<f64> = xs.chunks(2).map(|x| teacher.forward(x).unwrap()[0]).collect();
        let data = Dataset::new(2, 1, xs, ys).unwrap();
        assert!(teacher.loss(&data).unwrap() < 1e-28);
        assert!(sup_norm(&teacher.gradient(&data).unwrap()) <= 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let acts = [
            Activation::Softplus,
            Activation::Sigmoid,
            Activation::Tanh,
            Activation::blended(1.0, 4.0).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for act in acts {
            for _ in 0..20 {
                let m = rng.random_range(1..=4);
                let d_in = rng.random_range(1..=3);
                let d_out = rng.random_range(1..=2);
                let p = random_point(&mut rng, act, m, d_in, d_out);
                let data = random_data(&mut rng, 15, d_in, d_out);
                let g = p.gradient(&data).unwrap();
                let fd = p.gradient_fd(&data, 1e-5).unwrap();
                let err = sup_dist(&g, &fd) / sup_norm(&fd).max(1e-8);
                assert!(err <= 1e-5, "{act:?}: relative error {err}");
            }
        }
    }

    #[test]
    fn residual_jacobian_matches_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let p = random_point(&mut rng, Activation::blended(1.0, 4.0).unwrap(), 3, 2, 2);
        let data = random_data(&mut rng, 10, 2, 2);
        let obj = p.objective(&data).unwrap();
        let n = obj.residual_count();
        let mut r = vec![0.0; n];
        let mut jac = nalgebra::DMatrix::zeros(n, p.param_count());
        obj.residuals_jacobian(&p.to_flat(), &mut r, &mut jac);
        let half_sq: f64 = 0.5 * r.iter().map(|v| v * v).sum::<f64>();
        assert!((half_sq - p.loss(&data).unwrap()).abs() <= 1e-14);
        let jt_r = jac.transpose() * nalgebra::DVector::from_vec(r);
        let g = p.gradient(&data).unwrap();
        assert!(sup_dist(jt_r.as_slice(), &g) <= 1e-14);
    }

    #[test]
    fn gradient_is_permutation_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_point(&mut rng, Activation::Sigmoid, 4, 2, 2);
        let data = random_data(&mut rng, 30, 2, 2);
        let pi = Permutation::new(vec![2, 3, 1, 0]).unwrap();
        let lhs = p.permute(&pi).unwrap().gradient(&data).unwrap();
        let rhs = pi.permute_blocks(&p.gradient(&data).unwrap(), p.unit_dim()).unwrap();
        assert!(sup_dist(&lhs, &rhs) <= 1e-13);
    }

    #[test]
    fn permute_identity_and_transposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_point(&mut rng, Activation::Tanh, 3, 2, 1);
        assert_eq!(p.permute(&Permutation::identity(3)).unwrap(), p);
        let t = Permutation::transposition(3, 0, 2).unwrap();
        assert_eq!(p.permute(&t).unwrap().permute(&t).unwrap(), p);
        assert!(p.permute(&Permutation::identity(4)).is_err());
    }

    #[test]
    fn irreducibility() {
        let act = Activation::Sigmoid;
        let dup = TwoLayerPoint::new(
            act,
            2,
            1,
            vec![Neuron::new(vec![1.0, 2.0], vec![1.0]), Neuron::new(vec![1.0, 2.0], vec![-3.0])],
        )
        .unwrap();
        assert!(!dup.is_irreducible(1e-9));
        let silent = TwoLayerPoint::new(
            act,
            2,
            1,
            vec![Neuron::new(vec![1.0, 2.0], vec![1.0]), Neuron::new(vec![0.0, 2.0], vec![0.0])],
        )
        .unwrap();
        assert!(!silent.is_irreducible(1e-9));
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let normal = rand_distr::StandardNormal;
        for _ in 0..100 {
            let flat: Vec<f64> = (0..5 * 3).map(|_| rng.sample::<f64, _>(normal)).collect();
            let p = TwoLayerPoint::from_flat(act, 2, 1, &flat).unwrap();
            assert!(p.is_irreducible(1e-9));
        }
    }

    #[test]
    fn reduce_merges_and_drops() {
        let act = Activation::Softplus;
        let base = TwoLayerPoint::new(
            act,
            2,
            1,
            vec![Neuron::new(vec![0.5, -0.5], vec![1.5]), Neuron::new(vec![-1.0, 0.2], vec![-0.7])],
        )
        .unwrap();
        assert_eq!(base.reduce(1e-12).unwrap(), base);
        // zero-type pair (c, -c) plus a split copy of neuron 0
        let c = 0.83;
        let wider = TwoLayerPoint::new(
            act,
            2,
            1,
            vec![
                Neuron::new(vec![0.5, -0.5], vec![0.5]),
                Neuron::new(vec![2.0, 2.0], vec![c]),
                Neuron::new(vec![-1.0, 0.2], vec![-0.7]),
                Neuron::new(vec![2.0, 2.0], vec![-c]),
                Neuron::new(vec![0.5, -0.5], vec![1.0]),
            ],
        )
        .unwrap();
        let red = wider.reduce(1e-12).unwrap();
        assert_eq!(red.width(), 2);
        assert!(red.match_permutation(&base, 1e-12).is_some());
        assert_eq!(red.reduce(1e-12).unwrap(), red);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let probes: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]).collect();
        assert!(wider.function_distance(&base, &probes).unwrap() <= 1e-12);
        let silent = TwoLayerPoint::new(act, 1, 1, vec![Neuron::new(vec![1.0], vec![0.0])]).unwrap();
        assert!(silent.reduce(1e-12).is_none());
    }

    #[test]
    fn zero_type_group_deletion_preserves_function() {
        let act = Activation::Tanh;
        let with_group = TwoLayerPoint::new(
            act,
            1,
            2,
            vec![
                Neuron::new(vec![0.4], vec![1.0, -1.0]),
                Neuron::new(vec![-2.0], vec![0.3, 0.9]),
                Neuron::new(vec![-2.0], vec![-0.1, -0.4]),
                Neuron::new(vec![-2.0], vec![-0.2, -0.5]),
            ],
        )
        .unwrap();
        let without = TwoLayerPoint::new(act, 1, 2, vec![Neuron::new(vec![0.4], vec![1.0, -1.0])]).unwrap();
        let probes: Vec<Vec<f64>> = (-10..=10).map(|i| vec![i as f64 * 0.4]).collect();
        assert!(with_group.function_distance(&without, &probes).unwrap() <= 1e-12);
        assert_eq!(with_group.reduce(1e-9).unwrap().width(), 1);
    }

    #[test]
    fn single_linkage_is_transitive() {
        let a = [0.0];
        let b = [0.9];
        let c = [1.8];
        let d = [5.0];
        let clusters = single_linkage(&[&a, &b, &c, &d], 1.0);
        assert_eq!(clusters, vec![vec![0, 1, 2], vec![3]]);
    }
}
