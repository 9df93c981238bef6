use rand::Rng;

use super::spec::{expand_point, sample_expansion, ExpansionSpec};
use crate::error::{invalid, Error, Result};
use crate::network::MultiLayerPoint;

/// Expands every hidden layer of `theta` to the widths `m_vec`, working from
/// the last hidden layer back to the first. `specs[l]` addresses hidden
/// layer `l + 1` and must be written for the block as it is when that layer
/// is expanded, i.e. with outgoing dimension already equal to the expanded
/// width of the following layer.
pub fn multilayer_expand(
    theta: &MultiLayerPoint,
    m_vec: &[usize],
    specs: &[ExpansionSpec],
    tol: f64,
) -> Result<MultiLayerPoint> {
    let hidden = theta.hidden_widths().len();
    if m_vec.len() != hidden || specs.len() != hidden {
        return Err(Error::DimensionMismatch {
            expected: hidden,
            got: if m_vec.len() != hidden { m_vec.len() } else { specs.len() },
        });
    }
    let mut current = theta.clone();
    for l in (1..=hidden).rev() {
        if m_vec[l - 1] < theta.hidden_widths()[l - 1] {
            return Err(invalid(format!("hidden layer {l} cannot shrink")));
        }
        if specs[l - 1].target_width() != m_vec[l - 1] {
            return Err(invalid(format!("spec for hidden layer {l} does not reach width {}", m_vec[l - 1])));
        }
        let block = current.hidden_block(l)?;
        let expanded = expand_point(&block, &specs[l - 1], tol)?;
        current = current.with_hidden_block(l, &expanded)?;
    }
    Ok(current)
}

/// Random layer-by-layer expansion to `m_vec` (last hidden layer first).
pub fn sample_multilayer_expansion<R: Rng + ?Sized>(
    theta: &MultiLayerPoint,
    m_vec: &[usize],
    tol: f64,
    rng: &mut R,
) -> Result<(Vec<ExpansionSpec>, MultiLayerPoint)> {
    let hidden = theta.hidden_widths().len();
    if m_vec.len() != hidden {
        return Err(Error::DimensionMismatch {
            expected: hidden,
            got: m_vec.len(),
        });
    }
    let mut current = theta.clone();
    let mut specs = vec![None; hidden];
    for l in (1..=hidden).rev() {
        let block = current.hidden_block(l)?;
        let (spec, expanded) = sample_expansion(&block, m_vec[l - 1], tol, rng)?;
        current = current.with_hidden_block(l, &expanded)?;
        specs[l - 1] = Some(spec);
    }
    Ok((specs.into_iter().map(|s| s.expect("every layer expanded")).collect(), current))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Activation, Permutation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_net(rng: &mut ChaCha8Rng, widths: Vec<usize>) -> MultiLayerPoint {
        let n: usize = widths.windows(2).map(|w| w[0] * w[1]).sum();
        let flat: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        MultiLayerPoint::from_flat(Activation::Tanh, widths, &flat).unwrap()
    }

    fn residual(a: &MultiLayerPoint, b: &MultiLayerPoint, rng: &mut ChaCha8Rng) -> f64 {
        (0..50)
            .map(|_| {
                let x: Vec<f64> = (0..a.d_in()).map(|_| rng.random_range(-3.0..3.0)).collect();
                crate::network::sup_dist(&a.forward(&x).unwrap(), &b.forward(&x).unwrap())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn same_widths_only_permute() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let theta = random_net(&mut rng, vec![2, 2, 2, 1]);
        let swap = Permutation::new(vec![1, 0]).unwrap();
        let mut spec2 = ExpansionSpec::trivial(&theta.hidden_block(2).unwrap());
        spec2.pi = swap.clone();
        let mid = theta
            .with_hidden_block(2, &expand_point(&theta.hidden_block(2).unwrap(), &spec2, 1e-12).unwrap())
            .unwrap();
        let mut spec1 = ExpansionSpec::trivial(&mid.hidden_block(1).unwrap());
        spec1.pi = swap;
        let specs = vec![spec1, spec2];
        let p = multilayer_expand(&theta, &[2, 2], &specs, 1e-12).unwrap();
        assert_eq!(p.widths(), theta.widths());
        assert!(residual(&p, &theta, &mut rng) <= 1e-12);
    }

    #[test]
    fn one_layer_expanded_inside_three_layer_net() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let theta = random_net(&mut rng, vec![2, 2, 2, 1]);
        let block = theta.hidden_block(2).unwrap();
        let (spec2, _) = sample_expansion(&block, 3, 1e-9, &mut rng).unwrap();
        let mid = theta.with_hidden_block(2, &expand_point(&block, &spec2, 1e-9).unwrap()).unwrap();
        let spec1 = ExpansionSpec::trivial(&mid.hidden_block(1).unwrap());
        let p = multilayer_expand(&theta, &[2, 3], &[spec1, spec2], 1e-9).unwrap();
        assert_eq!(p.hidden_widths(), &[2, 3]);
        assert!(residual(&p, &theta, &mut rng) <= 1e-12);
    }

    #[test]
    fn both_layers_expanded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let theta = random_net(&mut rng, vec![2, 2, 2, 1]);
            let (_, p) = sample_multilayer_expansion(&theta, &[3, 3], 1e-9, &mut rng).unwrap();
            assert_eq!(p.hidden_widths(), &[3, 3]);
            assert!(residual(&p, &theta, &mut rng) <= 1e-12);
            // the first hidden block only changed by the first expansion's shape
            let red = p.hidden_block(1).unwrap().reduce(1e-9).unwrap();
            assert_eq!(red.width(), 2);
        }
    }

    #[test]
    fn rejects_shrinking_and_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let theta = random_net(&mut rng, vec![1, 3, 1]);
        let spec = ExpansionSpec::trivial(&theta.hidden_block(1).unwrap());
        assert!(multilayer_expand(&theta, &[2], &[spec.clone()], 1e-9).is_err());
        assert!(multilayer_expand(&theta, &[3, 3], &[spec], 1e-9).is_err());
    }
}
