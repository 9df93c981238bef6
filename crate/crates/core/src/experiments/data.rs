use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::network::{Activation, Dataset, MultiLayerPoint, Neuron, TwoLayerPoint};

/// Square input grid `{-h, -h + s, .., h}^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub half_extent: f64,
    pub step: f64,
}

impl Grid {
    /// 41 x 41 points on `[-5, 5]^2`.
    pub const FULL: Grid = Grid {
        half_extent: 5.0,
        step: 0.25,
    };
    /// 21 x 21 points on `[-5, 5]^2`.
    pub const DESK: Grid = Grid {
        half_extent: 5.0,
        step: 0.5,
    };

    pub fn points_per_axis(&self) -> Result<usize> {
        if !(self.half_extent > 0.0 && self.step > 0.0) {
            return Err(invalid("grid extent and step must be positive"));
        }
        let intervals = 2.0 * self.half_extent / self.step;
        let n = intervals.round();
        if (intervals - n).abs() > 1e-9 * intervals.max(1.0) {
            return Err(invalid(format!(
                "grid step {} does not divide the range [-{h}, {h}]",
                self.step,
                h = self.half_extent
            )));
        }
        Ok(n as usize + 1)
    }

    /// Grid points, first coordinate varying slowest.
    pub fn points(&self) -> Result<Vec<[f64; 2]>> {
        let n = self.points_per_axis()?;
        let coord = |i: usize| -self.half_extent + i as f64 * self.step;
        Ok((0..n).flat_map(|i| (0..n).map(move |j| [coord(i), coord(j)])).collect())
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid::DESK
    }
}

/// Inputs on `grid`, targets produced by `teacher`.
pub fn teacher_dataset(teacher: &TwoLayerPoint, grid: Grid) -> Result<Dataset> {
    if teacher.d_in() != 2 {
        return Err(invalid("grid datasets need a teacher with two inputs"));
    }
    let pts = grid.points()?;
    let mut xs = Vec::with_capacity(pts.len() * 2);
    let mut ys = Vec::with_capacity(pts.len() * teacher.d_out());
    for p in &pts {
        xs.extend_from_slice(p);
        ys.extend(teacher.forward(p)?);
    }
    Dataset::new(2, teacher.d_out(), xs, ys)
}

/// Same as [`teacher_dataset`] for a layered teacher.
pub fn multilayer_teacher_dataset(teacher: &MultiLayerPoint, grid: Grid) -> Result<Dataset> {
    if teacher.d_in() != 2 {
        return Err(invalid("grid datasets need a teacher with two inputs"));
    }
    let pts = grid.points()?;
    let mut xs = Vec::with_capacity(pts.len() * 2);
    let mut ys = Vec::with_capacity(pts.len() * teacher.d_out());
    for p in &pts {
        xs.extend_from_slice(p);
        ys.extend(teacher.forward(p)?);
    }
    Dataset::new(2, teacher.d_out(), xs, ys)
}

/// Incoming weights of the four-neuron reference teacher.
pub const TEACHER_WEIGHTS: [[f64; 2]; 4] = [[0.6, 0.5], [-0.5, 0.5], [-0.2, -0.6], [0.1, -0.6]];

/// Width-4 teacher with incoming weights [`TEACHER_WEIGHTS`] and unit outputs.
pub fn reference_teacher(activation: Activation) -> TwoLayerPoint {
    let neurons = TEACHER_WEIGHTS.iter().map(|w| Neuron::new(w.to_vec(), vec![1.0])).collect();
    TwoLayerPoint::new(activation, 2, 1, neurons).expect("fixed teacher shape is valid")
}

/// Glorot-uniform bound `sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Every weight matrix drawn uniformly on `[-b, b]` with the Glorot bound of
/// its shape, first layer first, row-major.
pub fn init_glorot<R: Rng + ?Sized>(
    rng: &mut R,
    activation: Activation,
    d_in: usize,
    hidden: &[usize],
    d_out: usize,
) -> Result<MultiLayerPoint> {
    let mut widths = Vec::with_capacity(hidden.len() + 2);
    widths.push(d_in);
    widths.extend_from_slice(hidden);
    widths.push(d_out);
    let layers = widths
        .windows(2)
        .map(|w| {
            let b = glorot_bound(w[0], w[1]);
            (0..w[0] * w[1]).map(|_| rng.random_range(-b..=b)).collect()
        })
        .collect();
    MultiLayerPoint::new(activation, widths, layers)
}

/// [`init_glorot`] with a single hidden layer of width `m`.
pub fn init_glorot_two_layer<R: Rng + ?Sized>(
    rng: &mut R,
    activation: Activation,
    d_in: usize,
    m: usize,
    d_out: usize,
) -> Result<TwoLayerPoint> {
    init_glorot(rng, activation, d_in, &[m], d_out)?.hidden_block(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_sizes() {
        assert_eq!(Grid::FULL.points().unwrap().len(), 1681);
        assert_eq!(Grid::DESK.points().unwrap().len(), 441);
        let pts = Grid::DESK.points().unwrap();
        assert_eq!(pts[0], [-5.0, -5.0]);
        assert_eq!(pts[440], [5.0, 5.0]);
        assert!(Grid { half_extent: 5.0, step: 0.3 }.points().is_err());
    }

    #[test]
    fn teacher_fits_its_own_data() {
        let t = reference_teacher(Activation::Sigmoid);
        assert!(t.is_irreducible(1e-6));
        assert_eq!(t.neurons().iter().map(|n| n.a[0]).collect::<Vec<_>>(), vec![1.0; 4]);
        let data = teacher_dataset(&t, Grid::FULL).unwrap();
        assert_eq!(data.len(), 1681);
        assert_eq!(t.loss(&data).unwrap(), 0.0);
    }

    #[test]
    fn zero_teacher_gives_constant_targets() {
        let t = TwoLayerPoint::new(
            Activation::Sigmoid,
            2,
            1,
            vec![Neuron::new(vec![0.0, 0.0], vec![1.5]), Neuron::new(vec![0.0, 0.0], vec![0.5])],
        )
        .unwrap();
        let data = teacher_dataset(&t, Grid::DESK).unwrap();
        assert!(data.targets().iter().all(|&y| y == 0.5 * 2.0));
        let one_d = TwoLayerPoint::new(Activation::Sigmoid, 1, 1, vec![Neuron::new(vec![1.0], vec![1.0])]).unwrap();
        assert!(teacher_dataset(&one_d, Grid::DESK).is_err());
    }

    #[test]
    fn glorot_bounds_and_determinism() {
        assert!((glorot_bound(2, 5) - (6.0f64 / 7.0).sqrt()).abs() < 1e-15);
        let a = init_glorot(&mut ChaCha8Rng::seed_from_u64(9), Activation::Tanh, 2, &[5], 1).unwrap();
        let b = init_glorot(&mut ChaCha8Rng::seed_from_u64(9), Activation::Tanh, 2, &[5], 1).unwrap();
        assert_eq!(a, b);
        let bound = glorot_bound(2, 5);
        assert!(a.layers()[0].iter().all(|v| v.abs() <= bound));
    }

    #[test]
    fn glorot_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = init_glorot(&mut rng, Activation::Tanh, 100, &[100], 1).unwrap();
        let w = &p.layers()[0];
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / w.len() as f64;
        let expected = glorot_bound(100, 100).powi(2) / 3.0;
        assert!((var / expected - 1.0).abs() < 0.05);
    }
}
