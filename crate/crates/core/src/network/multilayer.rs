use super::activation::Activation;
use super::dataset::Dataset;
use super::objective::{self, Objective};
use super::point::{dot, Neuron, TwoLayerPoint};
use crate::error::{invalid, Error, Result};

/// Bias-free network `W_L sigma(W_{L-1} ... sigma(W_1 x))`.
///
/// `widths` is `(r_0 = d_in, r_1, .., r_L = d_out)` and layer `l` (1-based)
/// stores `W_l` row-major with shape `r_l x r_{l-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiLayerPoint {
    activation: Activation,
    widths: Vec<usize>,
    layers: Vec<Vec<f64>>,
}

impl MultiLayerPoint {
    pub fn new(activation: Activation, widths: Vec<usize>, layers: Vec<Vec<f64>>) -> Result<Self> {
        if widths.len() < 3 {
            return Err(invalid("a layered network needs at least one hidden layer"));
        }
        if widths.contains(&0) {
            return Err(invalid("layer widths must be positive"));
        }
        if layers.len() != widths.len() - 1 {
            return Err(Error::DimensionMismatch {
                expected: widths.len() - 1,
                got: layers.len(),
            });
        }
        for (l, w) in layers.iter().enumerate() {
            let expected = widths[l + 1] * widths[l];
            if w.len() != expected {
                return Err(Error::DimensionMismatch { expected, got: w.len() });
            }
        }
        Ok(MultiLayerPoint {
            activation,
            widths,
            layers,
        })
    }

    pub fn from_flat(activation: Activation, widths: Vec<usize>, flat: &[f64]) -> Result<Self> {
        let expected = param_count(&widths);
        if flat.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: flat.len(),
            });
        }
        let mut layers = Vec::with_capacity(widths.len().saturating_sub(1));
        let mut offset = 0;
        for l in 1..widths.len() {
            let n = widths[l] * widths[l - 1];
            layers.push(flat[offset..offset + n].to_vec());
            offset += n;
        }
        MultiLayerPoint::new(activation, widths, layers)
    }

    /// The layered view of a two-layer network.
    pub fn from_two_layer(p: &TwoLayerPoint) -> Self {
        let m = p.width();
        let w1 = p.neurons().iter().flat_map(|n| n.w.iter().copied()).collect();
        let mut w2 = vec![0.0; p.d_out() * m];
        for (i, n) in p.neurons().iter().enumerate() {
            for (o, a) in n.a.iter().enumerate() {
                w2[o * m + i] = *a;
            }
        }
        MultiLayerPoint {
            activation: p.activation(),
            widths: vec![p.d_in(), m, p.d_out()],
            layers: vec![w1, w2],
        }
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn hidden_widths(&self) -> &[usize] {
        &self.widths[1..self.widths.len() - 1]
    }

    pub fn d_in(&self) -> usize {
        self.widths[0]
    }

    pub fn d_out(&self) -> usize {
        *self.widths.last().unwrap()
    }

    /// Number of weight matrices `L`.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Vec<f64>] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        param_count(&self.widths)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.layers.concat()
    }

    pub fn with_flat(&self, flat: &[f64]) -> Result<Self> {
        MultiLayerPoint::from_flat(self.activation, self.widths.clone(), flat)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d_in() {
            return Err(Error::DimensionMismatch {
                expected: self.d_in(),
                got: x.len(),
            });
        }
        let mut h = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, w) in self.layers.iter().enumerate() {
            let cols = self.widths[l];
            let mut z: Vec<f64> = w.chunks(cols).map(|row| dot(row, &h)).collect();
            if l < last {
                z.iter_mut().for_each(|v| *v = self.activation.value(*v));
            }
            h = z;
        }
        Ok(h)
    }

    pub fn objective<'a>(&self, data: &'a Dataset) -> Result<MultiLayerObjective<'a>> {
        if data.d_in() != self.d_in() {
            return Err(Error::DimensionMismatch {
                expected: self.d_in(),
                got: data.d_in(),
            });
        }
        if data.d_out() != self.d_out() {
            return Err(Error::DimensionMismatch {
                expected: self.d_out(),
                got: data.d_out(),
            });
        }
        Ok(MultiLayerObjective {
            activation: self.activation,
            widths: self.widths.clone(),
            data,
        })
    }

    pub fn loss(&self, data: &Dataset) -> Result<f64> {
        Ok(self.objective(data)?.loss(&self.to_flat()))
    }

    pub fn gradient(&self, data: &Dataset) -> Result<Vec<f64>> {
        Ok(self.objective(data)?.gradient(&self.to_flat()))
    }

    pub fn gradient_fd(&self, data: &Dataset, step: f64) -> Result<Vec<f64>> {
        objective::gradient_fd(&self.objective(data)?, &self.to_flat(), step)
    }

    pub fn hessian(&self, data: &Dataset) -> Result<nalgebra::DMatrix<f64>> {
        objective::hessian(&self.objective(data)?, &self.to_flat())
    }

    fn check_hidden(&self, layer: usize) -> Result<()> {
        if layer == 0 || layer >= self.widths.len() - 1 {
            return Err(invalid(format!(
                "hidden layer index {layer} outside 1..={}",
                self.widths.len() - 2
            )));
        }
        Ok(())
    }

    /// The two-layer block around hidden layer `layer` (1-based): neuron `i`
    /// has incoming row `i` of `W_layer` and outgoing column `i` of `W_{layer+1}`.
    pub fn hidden_block(&self, layer: usize) -> Result<TwoLayerPoint> {
        self.check_hidden(layer)?;
        let (r_prev, r, r_next) = (self.widths[layer - 1], self.widths[layer], self.widths[layer + 1]);
        let w_in = &self.layers[layer - 1];
        let w_out = &self.layers[layer];
        let neurons = (0..r)
            .map(|i| {
                let w = w_in[i * r_prev..(i + 1) * r_prev].to_vec();
                let a = (0..r_next).map(|o| w_out[o * r + i]).collect();
                Neuron::new(w, a)
            })
            .collect();
        TwoLayerPoint::new(self.activation, r_prev, r_next, neurons)
    }

    /// Replaces the block around hidden layer `layer`; its width may change.
    pub fn with_hidden_block(&self, layer: usize, block: &TwoLayerPoint) -> Result<Self> {
        self.check_hidden(layer)?;
        let (r_prev, r_next) = (self.widths[layer - 1], self.widths[layer + 1]);
        if block.d_in() != r_prev || block.d_out() != r_next {
            return Err(invalid(format!(
                "block shape ({}, {}) does not fit between widths {r_prev} and {r_next}",
                block.d_in(),
                block.d_out()
            )));
        }
        let m = block.width();
        let mut out = self.clone();
        out.widths[layer] = m;
        out.layers[layer - 1] = block.neurons().iter().flat_map(|n| n.w.iter().copied()).collect();
        let mut w_out = vec![0.0; r_next * m];
        for (i, n) in block.neurons().iter().enumerate() {
            for (o, a) in n.a.iter().enumerate() {
                w_out[o * m + i] = *a;
            }
        }
        out.layers[layer] = w_out;
        Ok(out)
    }

    /// Every hidden-layer block is irreducible.
    pub fn is_irreducible(&self, tol: f64) -> bool {
        (1..self.widths.len() - 1).all(|l| self.hidden_block(l).map(|b| b.is_irreducible(tol)).unwrap_or(false))
    }
}

pub(crate) fn param_count(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| w[0] * w[1]).sum()
}

/// Loss and backpropagated gradient of a layered network over its flat parameters.
#[derive(Clone, Debug)]
pub struct MultiLayerObjective<'a> {
    activation: Activation,
    widths: Vec<usize>,
    data: &'a Dataset,
}

impl Objective for MultiLayerObjective<'_> {
    fn loss(&self, params: &[f64]) -> f64 {
        self.eval(params, None)
    }

    fn loss_grad(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        self.eval(params, Some(grad))
    }
}

impl MultiLayerObjective<'_> {
    fn eval(&self, params: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let widths = &self.widths;
        let n_layers = widths.len() - 1;
        let mut offsets = Vec::with_capacity(n_layers + 1);
        offsets.push(0);
        for l in 0..n_layers {
            offsets.push(offsets[l] + widths[l] * widths[l + 1]);
        }
        // acts[l] is the input to layer l (acts[0] = x); derivs[l] is sigma' at hidden layer l+1
        let mut acts: Vec<Vec<f64>> = widths[..n_layers].iter().map(|&w| vec![0.0; w]).collect();
        let mut derivs: Vec<Vec<f64>> = widths[1..n_layers].iter().map(|&w| vec![0.0; w]).collect();
        let mut out = vec![0.0; widths[n_layers]];
        let mut delta: Vec<f64> = Vec::new();
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }
        let mut total = 0.0;
        for k in 0..self.data.len() {
            acts[0].copy_from_slice(self.data.input(k));
            for l in 0..n_layers {
                let w = &params[offsets[l]..offsets[l + 1]];
                let cols = widths[l];
                if l + 1 < n_layers {
                    let (prev, next) = acts.split_at_mut(l + 1);
                    for (i, row) in w.chunks(cols).enumerate() {
                        let (v, dv) = self.activation.eval(dot(row, &prev[l]));
                        next[0][i] = v;
                        derivs[l][i] = dv;
                    }
                } else {
                    for (o, row) in out.iter_mut().zip(w.chunks(cols)) {
                        *o = dot(row, &acts[l]);
                    }
                }
            }
            let mut sq = 0.0;
            for (o, t) in out.iter_mut().zip(self.data.target(k)) {
                *o -= t;
                sq += *o * *o;
            }
            total += 0.5 * sq;
            let Some(g) = grad.as_deref_mut() else { continue };
            delta.clear();
            delta.extend_from_slice(&out);
            for l in (0..n_layers).rev() {
                let cols = widths[l];
                let w = &params[offsets[l]..offsets[l + 1]];
                let gw = &mut g[offsets[l]..offsets[l + 1]];
                for (i, d) in delta.iter().enumerate() {
                    for (gv, h) in gw[i * cols..(i + 1) * cols].iter_mut().zip(&acts[l]) {
                        *gv += d * h;
                    }
                }
                if l > 0 {
                    let mut back = vec![0.0; cols];
                    for (i, d) in delta.iter().enumerate() {
                        for (b, wv) in back.iter_mut().zip(&w[i * cols..(i + 1) * cols]) {
                            *b += wv * d;
                        }
                    }
                    for (b, s) in back.iter_mut().zip(&derivs[l - 1]) {
                        *b *= s;
                    }
                    delta = back;
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::point::sup_dist;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_multi(rng: &mut ChaCha8Rng, act: Activation, widths: Vec<usize>) -> MultiLayerPoint {
        let n = param_count(&widths);
        let flat: Vec<f64> = (0..n).map(|_| rng.random_range(-1.2..1.2)).collect();
        MultiLayerPoint::from_flat(act, widths, &flat).unwrap()
    }

    #[test]
    fn two_layer_view_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let flat: Vec<f64> = (0..3 * 5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = TwoLayerPoint::from_flat(Activation::Tanh, 3, 2, &flat).unwrap();
        let q = MultiLayerPoint::from_two_layer(&p);
        for _ in 0..20 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            assert!(sup_dist(&p.forward(&x).unwrap(), &q.forward(&x).unwrap()) <= 1e-14);
        }
        assert_eq!(q.hidden_block(1).unwrap(), p);
    }

    #[test]
    fn zero_weights_give_zero_output() {
        // widths (1,1,1): out = W2 * sigma(W1 x) = 0 * sigma(0) = 0; with W2 = 2 and sigmoid: 2 * 0.5
        let p = MultiLayerPoint::new(Activation::Sigmoid, vec![1, 1, 1], vec![vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(p.forward(&[3.0]).unwrap(), vec![1.0]);
        let p = MultiLayerPoint::new(Activation::Sigmoid, vec![1, 1, 1, 1], vec![vec![0.0], vec![0.0], vec![3.0]]).unwrap();
        assert_eq!(p.forward(&[-7.0]).unwrap(), vec![1.5]);
        let t = MultiLayerPoint::new(Activation::Tanh, vec![1, 1, 1, 1], vec![vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(t.forward(&[0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn backprop_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for act in [Activation::Softplus, Activation::Tanh, Activation::blended(1.0, 4.0).unwrap()] {
            for widths in [vec![2, 3, 1], vec![2, 3, 2, 2], vec![1, 2, 3, 2, 1]] {
                let p = random_multi(&mut rng, act, widths.clone());
                let n = 12;
                let x = (0..n * widths[0]).map(|_| rng.random_range(-2.0..2.0)).collect();
                let y = (0..n * widths.last().unwrap()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let data = Dataset::new(widths[0], *widths.last().unwrap(), x, y).unwrap();
                let g = p.gradient(&data).unwrap();
                let fd = p.gradient_fd(&data, 1e-5).unwrap();
                let scale = fd.iter().fold(1e-8f64, |m, v| m.max(v.abs()));
                assert!(sup_dist(&g, &fd) / scale <= 1e-5);
            }
        }
    }

    #[test]
    fn block_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = random_multi(&mut rng, Activation::Sigmoid, vec![2, 2, 2, 1]);
        for l in 1..=2 {
            let b = p.hidden_block(l).unwrap();
            assert_eq!(p.with_hidden_block(l, &b).unwrap(), p);
        }
        assert!(p.hidden_block(0).is_err());
        assert!(p.hidden_block(3).is_err());
        assert!(p.is_irreducible(1e-9));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(MultiLayerPoint::new(Activation::Tanh, vec![1, 1], vec![vec![1.0]]).is_err());
        assert!(MultiLayerPoint::new(Activation::Tanh, vec![1, 2, 1], vec![vec![1.0], vec![1.0, 1.0]]).is_err());
    }
}
