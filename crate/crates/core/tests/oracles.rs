//! Counts and expansions checked against oracles that share no code with
//! the library: textbook recurrences, brute-force enumeration over labelings
//! and direct numerical comparison.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lsym::combinatorics::*;
use lsym::expansion::{enumerate_subspace_labels, expand_point, sample_expansion};
use lsym::network::{Activation, TwoLayerPoint};

fn big(v: u64) -> BigUint {
    BigUint::from(v)
}

/// Stirling numbers of the second kind from `S(n, k) = k S(n-1, k) + S(n-1, k-1)`.
fn stirling2(n_max: usize) -> Vec<Vec<BigUint>> {
    let mut s = vec![vec![BigUint::zero(); n_max + 1]; n_max + 1];
    s[0][0] = BigUint::one();
    for n in 1..=n_max {
        for k in 1..=n {
            s[n][k] = big(k as u64) * &s[n - 1][k] + &s[n - 1][k - 1];
        }
    }
    s
}

/// Bell numbers from `B(n+1) = sum_k binom(n, k) B(k)`, with binomials from Pascal's triangle.
fn bell(n_max: usize) -> Vec<BigUint> {
    let mut pascal = vec![vec![BigUint::zero(); n_max + 1]; n_max + 1];
    for n in 0..=n_max {
        pascal[n][0] = BigUint::one();
        for k in 1..=n {
            pascal[n][k] = &pascal[n - 1][k - 1] + &pascal[n - 1][k];
        }
    }
    let mut b = vec![BigUint::one()];
    for n in 0..n_max {
        let next = (0..=n).map(|k| &pascal[n][k] * &b[k]).sum();
        b.push(next);
    }
    b
}

fn fact(n: u64) -> BigUint {
    (1..=n).map(big).product()
}

/// Counts maps from `m` neurons to `r` teacher symbols plus unlabeled
/// zero-type groups (restricted growth), with every teacher symbol used.
fn brute_force_labelings(r: usize, m: usize, zero_type: bool) -> u64 {
    fn go(pos: usize, m: usize, r: usize, used: u32, groups: usize, zero_type: bool) -> u64 {
        if pos == m {
            return (used.count_ones() as usize == r) as u64;
        }
        let mut n: u64 = (0..r).map(|s| go(pos + 1, m, r, used | (1 << s), groups, zero_type)).sum();
        if zero_type {
            // join one of the open groups or open a new one
            n += groups as u64 * go(pos + 1, m, r, used, groups, zero_type);
            n += go(pos + 1, m, r, used, groups + 1, zero_type);
        }
        n
    }
    go(0, m, r, 0, 0, zero_type)
}

#[test]
fn critical_count_is_factorial_times_stirling() {
    let s = stirling2(15);
    for m in 1..=15u32 {
        for r in 1..=m {
            let expected = fact(r as u64) * &s[m as usize][r as usize];
            assert_eq!(critical_subspace_count(r, m).value(), &expected, "G({r}, {m})");
        }
    }
}

#[test]
fn zero_type_groupings_are_bell_numbers() {
    let b = bell(12);
    for u in 1..=12u32 {
        assert_eq!(zero_type_groupings(u).value(), &b[u as usize], "g({u})");
    }
}

#[test]
fn minima_count_from_stirling_and_bell() {
    // choose the u zero-type neurons, group them, surject the rest onto r symbols
    let s = stirling2(20);
    let b = bell(20);
    for m in 1..=20u64 {
        for r in 1..=m {
            let mut expected = BigUint::zero();
            for u in 0..=m - r {
                let choose = fact(m) / (fact(u) * fact(m - u));
                expected += choose * &b[u as usize] * fact(r) * &s[(m - u) as usize][r as usize];
            }
            assert_eq!(minima_subspace_count(r as u32, m as u32).unwrap().value(), &expected, "T({r}, {m})");
        }
    }
}

#[test]
fn counts_match_brute_force_labelings() {
    for m in 1..=7usize {
        for r in 1..=m {
            let t = brute_force_labelings(r, m, true);
            assert_eq!(minima_subspace_count(r as u32, m as u32).unwrap().value(), &big(t), "T({r}, {m})");
            assert_eq!(minima_subspace_count_enumerated(r as u32, m as u32).unwrap().value(), &big(t), "T({r}, {m}) enumerated");
            let g = brute_force_labelings(r, m, false);
            assert_eq!(critical_subspace_count(r as u32, m as u32).value(), &big(g), "G({r}, {m})");
        }
    }
}

#[test]
fn enumerated_labels_match_counts() {
    for m in 1..=6usize {
        for r in 1..=m {
            let all = enumerate_subspace_labels(r, m, true).unwrap();
            assert_eq!(big(all.len() as u64), brute_force_labelings(r, m, true).into());
            let critical = enumerate_subspace_labels(r, m, false).unwrap();
            assert_eq!(big(critical.len() as u64), brute_force_labelings(r, m, false).into());
        }
    }
}

/// All partitions of `n` into exactly `j` parts, as multiplicities `c[i]` of part size `i`.
fn partition_types(n: usize, j: usize) -> Vec<Vec<usize>> {
    fn go(rest: usize, parts: usize, max: usize, c: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 && parts == 0 {
            out.push(c.clone());
            return;
        }
        if rest == 0 || parts == 0 {
            return;
        }
        for size in (1..=max.min(rest)).rev() {
            c[size] += 1;
            go(rest - size, parts - 1, size, c, out);
            c[size] -= 1;
        }
    }
    let mut out = Vec::new();
    go(n, j, n, &mut vec![0; n + 1], &mut out);
    out
}

#[test]
fn recounting_by_partition_type() {
    for n in 1..=8usize {
        for j in 1..=n {
            let mut sum = BigUint::zero();
            for c in partition_types(n, j) {
                let mut den = BigUint::one();
                for (i, &ci) in c.iter().enumerate().skip(1) {
                    den *= fact(i as u64).pow(ci as u32) * fact(ci as u64);
                }
                sum += fact(n as u64) / den;
            }
            let g = critical_subspace_count(j as u32, n as u32).into_inner();
            assert_eq!(g, sum * fact(j as u64), "G({j}, {n})");
        }
    }
}

#[test]
fn minima_dominate_critical_counts() {
    for m in 1..=25u32 {
        for r in 1..=m {
            let t = minima_subspace_count(r, m).unwrap();
            let g = critical_subspace_count(r, m);
            if m == r {
                assert_eq!(t, g);
            } else {
                assert!(t.value() > g.value(), "T({r}, {m}) vs G");
            }
        }
    }
}

#[test]
fn ratios_are_reduced_fractions_of_counts() {
    for (k, r_star, m) in [(1, 3, 5), (2, 6, 9), (0, 4, 4), (3, 10, 30)] {
        let ratio = saddle_ratio(k, r_star, m).unwrap();
        let g = critical_subspace_count(r_star - k, m).into_inner();
        let t = minima_subspace_count(r_star, m).unwrap().into_inner();
        assert_eq!(ratio.numerator().into_inner() * &t, ratio.denominator().into_inner() * &g);
    }
}

fn random_point(rng: &mut ChaCha8Rng, act: Activation, r: usize, d_in: usize, d_out: usize) -> TwoLayerPoint {
    let flat: Vec<f64> = (0..r * (d_in + d_out)).map(|_| rng.random_range(-2.0..2.0)).collect();
    TwoLayerPoint::from_flat(act, d_in, d_out, &flat).unwrap()
}

fn max_forward_gap(a: &TwoLayerPoint, b: &TwoLayerPoint, rng: &mut ChaCha8Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let x: Vec<f64> = (0..a.d_in()).map(|_| rng.random_range(-5.0..5.0)).collect();
        let (ya, yb) = (a.forward(&x).unwrap(), b.forward(&x).unwrap());
        for (u, v) in ya.iter().zip(&yb) {
            worst = worst.max((u - v).abs());
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expansion_keeps_the_function(seed in any::<u64>(), r in 1usize..=4, extra in 0usize..=4, d_in in 1usize..=3, d_out in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = random_point(&mut rng, Activation::Tanh, r, d_in, d_out);
        prop_assume!(theta.is_irreducible(1e-3));
        let (spec, wide) = sample_expansion(&theta, r + extra, 1e-6, &mut rng).unwrap();
        prop_assert_eq!(wide.width(), r + extra);
        prop_assert!(max_forward_gap(&theta, &wide, &mut rng) <= 1e-12);
        let again = expand_point(&theta, &spec, 1e-6).unwrap();
        prop_assert_eq!(again.to_flat(), wide.to_flat());
        let back = wide.reduce(1e-9).unwrap();
        prop_assert!(back.match_permutation(&theta, 1e-9).is_some());
    }

    #[test]
    fn recursion_identity(r in 1u32..=15, m in 1u32..=15) {
        let mut lhs = BigUint::zero();
        for l in 1..=r {
            lhs += binomial(r as u64, l as u64) * critical_subspace_count(l, m).into_inner();
        }
        prop_assert_eq!(lhs, big(r as u64).pow(m));
    }
}
