use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::combinatorics::Composition;
use crate::error::{invalid, Error, Result};
use crate::network::{sup_dist, sup_norm, Neuron, Permutation, TwoLayerPoint};

/// A point of a permuted affine subspace `P_pi Gamma_s(theta_r)`.
///
/// Before permutation the width-`m` point lists the `k[0]` copies of
/// source neuron 0, then the copies of neuron 1 and so on, followed by the
/// zero-type groups in order. Copy `i` of source neuron `t` has incoming
/// vector `w_t` and outgoing vector `a_splits[t][i]`; member `i` of zero-type
/// group `g` has incoming vector `w_prime[g]` and outgoing `alpha_splits[g][i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionSpec {
    pub k: Vec<u32>,
    pub b: Vec<u32>,
    pub w_prime: Vec<Vec<f64>>,
    pub a_splits: Vec<Vec<Vec<f64>>>,
    pub alpha_splits: Vec<Vec<Vec<f64>>>,
    pub pi: Permutation,
}

impl ExpansionSpec {
    /// One copy of every neuron, no zero-type groups, identity permutation.
    pub fn trivial(theta: &TwoLayerPoint) -> Self {
        ExpansionSpec {
            k: vec![1; theta.width()],
            b: Vec::new(),
            w_prime: Vec::new(),
            a_splits: theta.neurons().iter().map(|n| vec![n.a.clone()]).collect(),
            alpha_splits: Vec::new(),
            pi: Permutation::identity(theta.width()),
        }
    }

    pub fn composition(&self) -> Result<Composition> {
        Composition::new(self.k.clone(), self.b.clone())
    }

    pub fn source_width(&self) -> usize {
        self.k.len()
    }

    pub fn target_width(&self) -> usize {
        self.k.iter().chain(&self.b).map(|&v| v as usize).sum()
    }

    /// Dimension of the affine subspace: `(m - r - j) d_out + j d_in`.
    pub fn free_dimension(&self, d_in: usize, d_out: usize) -> usize {
        let (m, r, j) = (self.target_width(), self.source_width(), self.b.len());
        (m - r - j) * d_out + j * d_in
    }

    /// Shape checks that do not need the source point.
    pub fn validate_shape(&self, d_in: usize, d_out: usize) -> Result<()> {
        self.composition()?;
        let m = self.target_width();
        if self.pi.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: self.pi.len(),
            });
        }
        if self.a_splits.len() != self.k.len() {
            return Err(invalid("a_splits needs one entry per source neuron"));
        }
        if self.w_prime.len() != self.b.len() || self.alpha_splits.len() != self.b.len() {
            return Err(invalid("w_prime and alpha_splits need one entry per zero-type group"));
        }
        for (splits, &k) in self.a_splits.iter().zip(&self.k) {
            if splits.len() != k as usize || splits.iter().any(|v| v.len() != d_out) {
                return Err(invalid("a_splits entry does not match k or d_out"));
            }
        }
        for (splits, &b) in self.alpha_splits.iter().zip(&self.b) {
            if splits.len() != b as usize || splits.iter().any(|v| v.len() != d_out) {
                return Err(invalid("alpha_splits entry does not match b or d_out"));
            }
        }
        if self.w_prime.iter().any(|w| w.len() != d_in) {
            return Err(invalid("w_prime vectors must have length d_in"));
        }
        Ok(())
    }
}

/// Builds the point of `P_pi Gamma_s(theta)` addressed by `spec`.
///
/// `tol` is used for the irreducibility check of `theta`, for the split-sum
/// constraints and for the separation of zero-type incoming vectors.
pub fn expand_point(theta: &TwoLayerPoint, spec: &ExpansionSpec, tol: f64) -> Result<TwoLayerPoint> {
    let (d_in, d_out) = (theta.d_in(), theta.d_out());
    if spec.source_width() != theta.width() {
        return Err(Error::DimensionMismatch {
            expected: theta.width(),
            got: spec.source_width(),
        });
    }
    spec.validate_shape(d_in, d_out)?;
    if !theta.is_irreducible(tol) {
        return Err(Error::Reducible("source point of an expansion".into()));
    }
    for (t, splits) in spec.a_splits.iter().enumerate() {
        let sum = vector_sum(splits, d_out);
        if sup_dist(&sum, &theta.neuron(t).a) > tol {
            return Err(invalid(format!("outgoing splits of neuron {t} do not sum to a_{t}")));
        }
    }
    for (g, splits) in spec.alpha_splits.iter().enumerate() {
        if sup_norm(&vector_sum(splits, d_out)) > tol {
            return Err(invalid(format!("zero-type group {g} outputs do not sum to zero")));
        }
    }
    for (g, w) in spec.w_prime.iter().enumerate() {
        let clash_source = theta.neurons().iter().any(|n| sup_dist(&n.w, w) <= tol);
        let clash_group = spec.w_prime[..g].iter().any(|v| sup_dist(v, w) <= tol);
        if clash_source || clash_group {
            return Err(invalid(format!("zero-type vector {g} collides with another incoming vector")));
        }
    }
    let mut canonical = Vec::with_capacity(spec.target_width());
    for (t, splits) in spec.a_splits.iter().enumerate() {
        for a in splits {
            canonical.push(Neuron::new(theta.neuron(t).w.clone(), a.clone()));
        }
    }
    for (w, splits) in spec.w_prime.iter().zip(&spec.alpha_splits) {
        for a in splits {
            canonical.push(Neuron::new(w.clone(), a.clone()));
        }
    }
    TwoLayerPoint::new(theta.activation(), d_in, d_out, canonical)?.permute(&spec.pi)
}

fn vector_sum(vs: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut s = vec![0.0; dim];
    for v in vs {
        for (a, x) in s.iter_mut().zip(v) {
            *a += x;
        }
    }
    s
}

/// Replication of a critical point: copy `i` of neuron `t` carries
/// `beta[t][i] * a_t`, with `sum_i beta[t][i] = 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalSplit {
    k: Vec<u32>,
    beta: Vec<Vec<f64>>,
    pi: Permutation,
}

#[derive(Deserialize)]
struct CriticalSplitRepr {
    k: Vec<u32>,
    beta: Vec<Vec<f64>>,
    pi: Permutation,
}

impl<'de> Deserialize<'de> for CriticalSplit {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = CriticalSplitRepr::deserialize(d)?;
        CriticalSplit::from_parts(r.k, r.beta, r.pi).map_err(serde::de::Error::custom)
    }
}

impl CriticalSplit {
    /// `free[t]` lists the first `k_t - 1` coefficients of group `t`; the
    /// last one is set to `1 - sum(free[t])`.
    pub fn new(free: Vec<Vec<f64>>, pi: Permutation) -> Result<Self> {
        let k: Vec<u32> = free.iter().map(|f| f.len() as u32 + 1).collect();
        let beta = free
            .into_iter()
            .map(|mut f| {
                let last = 1.0 - f.iter().sum::<f64>();
                f.push(last);
                f
            })
            .collect();
        CriticalSplit::from_parts(k, beta, pi)
    }

    /// Validates full coefficient lists; each group must sum to 1 within `1e-12`.
    pub fn from_parts(k: Vec<u32>, beta: Vec<Vec<f64>>, pi: Permutation) -> Result<Self> {
        if k.is_empty() || k.contains(&0) {
            return Err(invalid("k entries must be >= 1"));
        }
        if beta.len() != k.len() || beta.iter().zip(&k).any(|(b, &k)| b.len() != k as usize) {
            return Err(invalid("beta must list k_t coefficients for every group"));
        }
        if beta.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("beta coefficient".into()));
        }
        for (t, b) in beta.iter().enumerate() {
            if (b.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(invalid(format!("beta coefficients of group {t} do not sum to 1")));
            }
        }
        let m: usize = k.iter().map(|&v| v as usize).sum();
        if pi.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: pi.len(),
            });
        }
        Ok(CriticalSplit { k, beta, pi })
    }

    /// All `k_t = 1`.
    pub fn identity(r: usize, pi: Permutation) -> Result<Self> {
        CriticalSplit::new(vec![Vec::new(); r], pi)
    }

    /// Random split: `k` uniform over compositions of `m` into `r` parts,
    /// free coefficients uniform on `[-spread, 1 + spread]`, random `pi`.
    pub fn sample<R: Rng + ?Sized>(r: usize, m: usize, spread: f64, rng: &mut R) -> Result<Self> {
        if r == 0 || m < r {
            return Err(invalid("critical split needs 1 <= r <= m"));
        }
        let k = random_composition(m, r, rng);
        let free = k
            .iter()
            .map(|&kt| (1..kt).map(|_| rng.random_range(-spread..=1.0 + spread)).collect())
            .collect();
        let mut images: Vec<usize> = (0..m).collect();
        images.shuffle(rng);
        CriticalSplit::new(free, Permutation::new(images)?)
    }

    pub fn k(&self) -> &[u32] {
        &self.k
    }

    pub fn beta(&self) -> &[Vec<f64>] {
        &self.beta
    }

    pub fn pi(&self) -> &Permutation {
        &self.pi
    }

    pub fn source_width(&self) -> usize {
        self.k.len()
    }

    pub fn target_width(&self) -> usize {
        self.pi.len()
    }

    /// Dimension of the critical subspace: `m - r`.
    pub fn free_dimension(&self) -> usize {
        self.target_width() - self.source_width()
    }

    /// `max_t sum_i |beta_t^i|`, the factor bounding gradient growth.
    pub fn amplification(&self) -> f64 {
        self.beta
            .iter()
            .map(|b| b.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// The symmetry-induced point built from `theta` by `split`.
pub fn expand_critical(theta: &TwoLayerPoint, split: &CriticalSplit) -> Result<TwoLayerPoint> {
    if split.source_width() != theta.width() {
        return Err(Error::DimensionMismatch {
            expected: theta.width(),
            got: split.source_width(),
        });
    }
    let mut canonical = Vec::with_capacity(split.target_width());
    for (n, betas) in theta.neurons().iter().zip(&split.beta) {
        for &beta in betas {
            canonical.push(Neuron::new(n.w.clone(), n.a.iter().map(|a| beta * a).collect()));
        }
    }
    TwoLayerPoint::new(theta.activation(), theta.d_in(), theta.d_out(), canonical)?.permute(&split.pi)
}

/// Uniform random composition of `total` into `parts` positive parts.
pub(crate) fn random_composition<R: Rng + ?Sized>(total: usize, parts: usize, rng: &mut R) -> Vec<u32> {
    let mut cuts: Vec<usize> = rand::seq::index::sample(rng, total - 1, parts - 1)
        .into_iter()
        .map(|c| c + 1)
        .collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(total)) {
        out.push((c - prev) as u32);
        prev = c;
    }
    out
}

/// Draws a random point of the expansion manifold of `theta` at width `m`.
///
/// The number of zero-type groups `j` is uniform on `0..=m-r`, the shape
/// `(k, b)` is uniform over compositions of `m` into `r + j` parts, outgoing
/// splits are uniform on the simplex, zero-type outputs are Gaussian
/// projected onto the zero-sum hyperplane and zero-type incoming vectors are
/// Gaussian, redrawn until they are `tol`-separated from all other incoming vectors.
pub fn sample_expansion<R: Rng + ?Sized>(
    theta: &TwoLayerPoint,
    m: usize,
    tol: f64,
    rng: &mut R,
) -> Result<(ExpansionSpec, TwoLayerPoint)> {
    let r = theta.width();
    if m < r {
        return Err(invalid(format!("target width {m} is below the source width {r}")));
    }
    let (d_in, d_out) = (theta.d_in(), theta.d_out());
    let j = rng.random_range(0..=m - r);
    let parts = random_composition(m, r + j, rng);
    let (k, b) = (parts[..r].to_vec(), parts[r..].to_vec());

    let a_splits = theta
        .neurons()
        .iter()
        .zip(&k)
        .map(|(n, &kt)| {
            let raw: Vec<f64> = (0..kt).map(|_| Exp1.sample(rng)).collect();
            let total: f64 = raw.iter().sum();
            let mut splits: Vec<Vec<f64>> = raw[..raw.len() - 1]
                .iter()
                .map(|u| n.a.iter().map(|a| a * u / total).collect())
                .collect();
            let rest: Vec<f64> = n
                .a
                .iter()
                .enumerate()
                .map(|(o, a)| a - splits.iter().map(|s| s[o]).sum::<f64>())
                .collect();
            splits.push(rest);
            splits
        })
        .collect();

    let mut w_prime: Vec<Vec<f64>> = Vec::with_capacity(j);
    while w_prime.len() < j {
        let w: Vec<f64> = (0..d_in).map(|_| StandardNormal.sample(rng)).collect();
        let clash = theta.neurons().iter().map(|n| &n.w).chain(&w_prime).any(|v| sup_dist(v, &w) <= tol);
        if !clash {
            w_prime.push(w);
        }
    }

    let alpha_splits = b
        .iter()
        .map(|&bt| {
            let bt = bt as usize;
            let raw: Vec<Vec<f64>> = (0..bt)
                .map(|_| (0..d_out).map(|_| StandardNormal.sample(rng)).collect())
                .collect();
            let mut out: Vec<Vec<f64>> = Vec::with_capacity(bt);
            for v in &raw[..bt - 1] {
                out.push(
                    v.iter()
                        .enumerate()
                        .map(|(o, x)| x - raw.iter().map(|u| u[o]).sum::<f64>() / bt as f64)
                        .collect(),
                );
            }
            let last = (0..d_out).map(|o| -out.iter().map(|u| u[o]).sum::<f64>()).collect();
            out.push(last);
            out
        })
        .collect();

    let mut images: Vec<usize> = (0..m).collect();
    images.shuffle(rng);
    let spec = ExpansionSpec {
        k,
        b,
        w_prime,
        a_splits,
        alpha_splits,
        pi: Permutation::new(images)?,
    };
    let point = expand_point(theta, &spec, tol)?;
    Ok((spec, point))
}
