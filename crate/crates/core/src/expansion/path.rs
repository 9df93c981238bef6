use serde::{Deserialize, Serialize};

use super::classify::{classify_neurons, NeuronClassification, NeuronLabel};
use crate::error::{invalid, Error, Result};
use crate::network::{Permutation, TwoLayerPoint};

/// A straight piece `t -> start + t (end - start)`, `t` in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

impl Segment {
    pub fn point(&self, t: f64) -> Vec<f64> {
        if t == 1.0 {
            return self.end.clone();
        }
        self.start.iter().zip(&self.end).map(|(s, e)| s + t * (e - s)).collect()
    }

    pub fn is_degenerate(&self) -> bool {
        self.start == self.end
    }
}

/// Consecutive line segments in a flat parameter space; each segment starts
/// exactly where the previous one ends.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PiecewisePath {
    segments: Vec<Segment>,
}

impl<'de> Deserialize<'de> for PiecewisePath {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let segments = Vec::<Segment>::deserialize(d)?;
        PiecewisePath::new(segments).map_err(serde::de::Error::custom)
    }
}

impl PiecewisePath {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let Some(first) = segments.first() else {
            return Err(invalid("a path needs at least one segment"));
        };
        let dim = first.start.len();
        for (i, s) in segments.iter().enumerate() {
            if s.start.len() != dim || s.end.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.start.len().max(s.end.len()),
                });
            }
            if i > 0 && segments[i - 1].end != s.start {
                return Err(invalid(format!("segment {i} does not start where segment {} ends", i - 1)));
            }
        }
        Ok(PiecewisePath { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.segments[0].start.len()
    }

    pub fn start(&self) -> &[f64] {
        &self.segments[0].start
    }

    pub fn end(&self) -> &[f64] {
        &self.segments[self.segments.len() - 1].end
    }

    /// `per_segment` evenly spaced points on every segment, endpoints included,
    /// as `(segment, t, point)`.
    pub fn samples(&self, per_segment: usize) -> Result<Vec<(usize, f64, Vec<f64>)>> {
        if per_segment < 2 {
            return Err(invalid("at least two samples per segment are needed"));
        }
        let mut out = Vec::with_capacity(self.len() * per_segment);
        for (i, s) in self.segments.iter().enumerate() {
            for q in 0..per_segment {
                let t = q as f64 / (per_segment - 1) as f64;
                out.push((i, t, s.point(t)));
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Writes `pi` as a product of transpositions that all involve `base`.
///
/// With the returned list `[t_1, .., t_n]`, `t_1 ∘ t_2 ∘ .. ∘ t_n = pi`.
/// A cycle through `base` costs one transposition less than its length, any
/// other cycle one more.
pub fn transposition_decomposition(pi: &Permutation, base: usize) -> Result<Vec<(usize, usize)>> {
    if base >= pi.len() {
        return Err(invalid(format!("base slot {base} outside a permutation of {}", pi.len())));
    }
    let mut out = Vec::new();
    for cycle in pi.cycles() {
        if let Some(at) = cycle.iter().position(|&c| c == base) {
            let mut rot = cycle[at..].to_vec();
            rot.extend_from_slice(&cycle[..at]);
            out.extend(rot[1..].iter().rev().map(|&c| (base, c)));
        } else {
            out.push((base, cycle[0]));
            out.extend(cycle[1..].iter().rev().map(|&c| (base, c)));
            out.push((base, cycle[0]));
        }
    }
    Ok(out)
}

/// Slot structure of a manifold point: copy label per slot and zero-type
/// groups identified by their smallest member.
#[derive(Clone, Debug, PartialEq, Eq)]
enum SlotKey {
    Copy(usize),
    Zero(usize),
}

struct Structured {
    classes: NeuronClassification,
    keys: Vec<SlotKey>,
}

fn structure(p: &TwoLayerPoint, theta: &TwoLayerPoint, tol: f64, name: &str) -> Result<Structured> {
    if p.d_in() != theta.d_in() || p.d_out() != theta.d_out() {
        return Err(invalid(format!("{name} does not have the shape of the source point")));
    }
    let reduced = p
        .reduce(tol)
        .ok_or_else(|| Error::NotInManifold(format!("{name} reduces to the zero network")))?;
    if reduced.match_permutation(theta, tol * p.width() as f64).is_none() {
        return Err(Error::NotInManifold(format!("{name} does not reduce to the source point")));
    }
    let classes = classify_neurons(p, theta, tol)?;
    if !classes.consistent {
        return Err(Error::NotInManifold(format!("{name} has inconsistent neuron groups")));
    }
    let keys = classes
        .labels
        .iter()
        .map(|l| match *l {
            NeuronLabel::Copy { teacher } => SlotKey::Copy(teacher),
            NeuronLabel::ZeroType { group } => SlotKey::Zero(classes.zero_type[group].members[0]),
        })
        .collect();
    Ok(Structured { classes, keys })
}

/// Representative with all output mass of each copy group on its first
/// member (set to the source outgoing vector) and every other output zeroed.
/// Returns the flat point and, per source neuron, its active slot.
fn representative(p: &TwoLayerPoint, s: &Structured, theta: &TwoLayerPoint) -> (Vec<f64>, Vec<usize>) {
    let (d_in, unit) = (p.d_in(), p.unit_dim());
    let mut flat = p.to_flat();
    for i in 0..p.width() {
        flat[i * unit + d_in..(i + 1) * unit].fill(0.0);
    }
    let mut active = Vec::with_capacity(theta.width());
    for g in &s.classes.copies {
        let slot = g.members[0];
        flat[slot * unit + d_in..(slot + 1) * unit].copy_from_slice(&theta.neuron(g.teacher).a);
        active.push(slot);
    }
    (flat, active)
}

struct PathBuilder {
    current: Vec<f64>,
    segments: Vec<Segment>,
}

impl PathBuilder {
    fn move_to(&mut self, next: Vec<f64>) {
        if next != self.current {
            let start = std::mem::replace(&mut self.current, next);
            self.segments.push(Segment {
                start,
                end: self.current.clone(),
            });
        }
    }
}

/// A piecewise-linear path from `a` to `b` inside the expansion manifold of
/// `theta`, along which the network function never changes.
///
/// Both endpoints are first moved within their own affine subspace to a
/// representative in which every source neuron is carried by a single slot
/// and all other outputs vanish. The representatives are then related by a
/// permutation of slots, which is realized as a sequence of base-slot
/// transpositions; each transposition with an active slot costs three
/// segments (slide the idle base slot onto the active incoming vector,
/// transfer the output, slide the freed slot back).
pub fn build_path(a: &TwoLayerPoint, b: &TwoLayerPoint, theta: &TwoLayerPoint, tol: f64) -> Result<PiecewisePath> {
    if !theta.is_irreducible(tol) {
        return Err(Error::Reducible("source point of a path".into()));
    }
    if a.width() != b.width() {
        return Err(Error::DimensionMismatch {
            expected: a.width(),
            got: b.width(),
        });
    }
    if a.width() <= theta.width() {
        return Err(invalid("paths need a target width larger than the source width"));
    }
    let sa = structure(a, theta, tol, "start point")?;
    let sb = structure(b, theta, tol, "end point")?;
    let (fa, fb) = (a.to_flat(), b.to_flat());
    if fa == fb {
        return PiecewisePath::new(vec![Segment { start: fa.clone(), end: fb }]);
    }
    if sa.keys == sb.keys {
        return PiecewisePath::new(vec![Segment { start: fa, end: fb }]);
    }

    let m = a.width();
    let (d_in, unit) = (a.d_in(), a.unit_dim());
    let (rep_a, act_a) = representative(a, &sa, theta);
    let (rep_b, act_b) = representative(b, &sb, theta);
    let mut is_active = vec![false; m];
    act_a.iter().for_each(|&s| is_active[s] = true);
    let base = sa
        .keys
        .iter()
        .position(|k| matches!(k, SlotKey::Zero(_)))
        .or_else(|| (0..m).find(|&i| !is_active[i]))
        .expect("a wider point has an idle slot");

    // sigma(p) is the label (slot of rep_a) that must end up at slot p.
    let mut sigma = vec![usize::MAX; m];
    for (t, &p) in act_b.iter().enumerate() {
        sigma[p] = act_a[t];
    }
    let mut idle_a = (0..m).filter(|&i| !is_active[i]);
    for s in sigma.iter_mut().filter(|s| **s == usize::MAX) {
        *s = idle_a.next().expect("idle slot counts agree");
    }
    let sigma = Permutation::new(sigma)?;

    let mut builder = PathBuilder {
        current: fa,
        segments: Vec::new(),
    };
    builder.move_to(rep_a);
    let mut pos_of: Vec<usize> = (0..m).collect();
    for (base_label, label) in transposition_decomposition(&sigma.inverse(), base)? {
        let (pb, pl) = (pos_of[base_label], pos_of[label]);
        if is_active[label] {
            let w_b = pb * unit..pb * unit + d_in;
            let a_b = pb * unit + d_in..(pb + 1) * unit;
            let w_l = pl * unit..pl * unit + d_in;
            let a_l = pl * unit + d_in..(pl + 1) * unit;
            let parked = builder.current[w_b.clone()].to_vec();

            let mut next = builder.current.clone();
            next.copy_within(w_l.clone(), w_b.start);
            builder.move_to(next);

            let mut next = builder.current.clone();
            next.copy_within(a_l.clone(), a_b.start);
            next[a_l].fill(0.0);
            builder.move_to(next);

            let mut next = builder.current.clone();
            next[w_l].copy_from_slice(&parked);
            builder.move_to(next);
        }
        pos_of.swap(base_label, label);
    }
    builder.move_to(rep_b);
    builder.move_to(fb);
    PiecewisePath::new(builder.segments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::sample_expansion;
    use crate::network::{Activation, Neuron};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn compose_all(m: usize, ts: &[(usize, usize)]) -> Permutation {
        ts.iter().fold(Permutation::identity(m), |acc, &(i, j)| {
            acc.compose(&Permutation::transposition(m, i, j).unwrap()).unwrap()
        })
    }

    #[test]
    fn decomposition_examples() {
        assert!(transposition_decomposition(&Permutation::identity(4), 0).unwrap().is_empty());
        let t = Permutation::transposition(4, 0, 2).unwrap();
        assert_eq!(transposition_decomposition(&t, 0).unwrap(), vec![(0, 2)]);
        for cycle in [vec![1, 2, 0], vec![2, 0, 1]] {
            let pi = Permutation::new(cycle).unwrap();
            let ts = transposition_decomposition(&pi, 0).unwrap();
            assert!(ts.len() <= 4);
            assert_eq!(compose_all(3, &ts), pi);
        }
        let pi = Permutation::new(vec![0, 2, 3, 1]).unwrap();
        let ts = transposition_decomposition(&pi, 0).unwrap();
        assert_eq!(ts.len(), 4);
        assert_eq!(compose_all(4, &ts), pi);
    }

    #[test]
    fn decomposition_of_random_permutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            let m = rng.random_range(1..9);
            let mut v: Vec<usize> = (0..m).collect();
            rand::seq::SliceRandom::shuffle(v.as_mut_slice(), &mut rng);
            let pi = Permutation::new(v).unwrap();
            let base = rng.random_range(0..m);
            let ts = transposition_decomposition(&pi, base).unwrap();
            assert!(ts.iter().all(|&(b, _)| b == base));
            assert_eq!(compose_all(m, &ts), pi);
        }
    }

    fn source(rng: &mut ChaCha8Rng, r: usize) -> TwoLayerPoint {
        let flat: Vec<f64> = (0..r * 3).map(|_| rng.sample(StandardNormal)).collect();
        TwoLayerPoint::from_flat(Activation::Sigmoid, 2, 1, &flat).unwrap()
    }

    fn max_deviation(path: &PiecewisePath, theta: &TwoLayerPoint, probes: &[Vec<f64>]) -> f64 {
        let shape = |flat: &[f64]| TwoLayerPoint::from_flat(theta.activation(), theta.d_in(), theta.d_out(), flat).unwrap();
        path.samples(11)
            .unwrap()
            .iter()
            .map(|(_, _, p)| shape(p).function_distance(theta, probes).unwrap())
            .fold(0.0, f64::max)
    }

    #[test]
    fn neighbouring_subspace_takes_three_segments() {
        let theta = TwoLayerPoint::new(Activation::Sigmoid, 2, 1, vec![Neuron::new(vec![0.6, 0.5], vec![1.0])]).unwrap();
        let a = TwoLayerPoint::new(
            Activation::Sigmoid,
            2,
            1,
            vec![Neuron::new(vec![0.6, 0.5], vec![1.0]), Neuron::new(vec![-1.0, 2.0], vec![0.0])],
        )
        .unwrap();
        let b = a.permute(&Permutation::transposition(2, 0, 1).unwrap()).unwrap();
        let path = build_path(&a, &b, &theta, 1e-12).unwrap();
        assert_eq!(path.len(), 3);
        assert_eq!(path.start(), a.to_flat().as_slice());
        assert_eq!(path.end(), b.to_flat().as_slice());
    }

    #[test]
    fn degenerate_and_same_subspace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let theta = source(&mut rng, 2);
        let (spec, a) = sample_expansion(&theta, 4, 1e-9, &mut rng).unwrap();
        let p = build_path(&a, &a, &theta, 1e-9).unwrap();
        assert_eq!(p.len(), 1);
        assert!(p.segments()[0].is_degenerate());
        // rescale one split inside the same subspace
        let mut spec2 = spec.clone();
        if let Some(t) = spec2.k.iter().position(|&k| k >= 2) {
            let (x, y) = (spec2.a_splits[t][0][0], spec2.a_splits[t][1][0]);
            spec2.a_splits[t][0][0] = x + 0.3;
            spec2.a_splits[t][1][0] = y - 0.3;
            let b = crate::expansion::expand_point(&theta, &spec2, 1e-9).unwrap();
            assert_eq!(build_path(&a, &b, &theta, 1e-9).unwrap().len(), 1);
        }
    }

    #[test]
    fn random_paths_preserve_function() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let probes: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]).collect();
        for (r, m) in [(1, 2), (2, 3), (3, 4), (2, 5)] {
            for _ in 0..20 {
                let theta = source(&mut rng, r);
                let (_, a) = sample_expansion(&theta, m, 1e-9, &mut rng).unwrap();
                let (_, b) = sample_expansion(&theta, m, 1e-9, &mut rng).unwrap();
                let path = build_path(&a, &b, &theta, 1e-9).unwrap();
                assert_eq!(path.start(), a.to_flat().as_slice());
                assert_eq!(path.end(), b.to_flat().as_slice());
                assert!(path.len() <= 3 * 2 * m + 3);
                assert!(max_deviation(&path, &theta, &probes) <= 1e-12);
            }
        }
    }

    #[test]
    fn rejects_points_outside_the_manifold() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let theta = source(&mut rng, 2);
        let (_, a) = sample_expansion(&theta, 3, 1e-9, &mut rng).unwrap();
        let other = source(&mut rng, 3);
        assert!(matches!(build_path(&a, &other, &theta, 1e-9), Err(Error::NotInManifold(_))));
        assert!(build_path(&theta, &theta, &theta, 1e-9).is_err());
    }

    #[test]
    fn path_json_round_trip() {
        let seg = |s: f64, e: f64| Segment { start: vec![s], end: vec![e] };
        let p = PiecewisePath::new(vec![seg(0.0, 1.0), seg(1.0, 2.0)]).unwrap();
        let json = p.to_json().unwrap();
        assert_eq!(json, r#"[{"start":[0.0],"end":[1.0]},{"start":[1.0],"end":[2.0]}]"#);
        assert_eq!(serde_json::from_str::<PiecewisePath>(&json).unwrap(), p);
        assert!(serde_json::from_str::<PiecewisePath>(r#"[{"start":[0.0],"end":[1.0]},{"start":[1.5],"end":[2.0]}]"#).is_err());
        assert!(PiecewisePath::new(vec![]).is_err());
    }
}
