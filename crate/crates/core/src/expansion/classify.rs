use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::network::{single_linkage, sup_dist, sup_norm, Permutation, TwoLayerPoint};

/// Role of one student neuron relative to a teacher.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NeuronLabel {
    Copy { teacher: usize },
    ZeroType { group: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CopyGroup {
    pub teacher: usize,
    pub members: Vec<usize>,
    pub output_sum: Vec<f64>,
    /// `|output_sum - a_teacher|_inf`.
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroTypeGroup {
    pub members: Vec<usize>,
    /// `|sum of member outputs|_inf`.
    pub residual: f64,
}

/// Partition of a student's neurons into teacher copies and zero-type groups.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuronClassification {
    pub tol: f64,
    pub labels: Vec<NeuronLabel>,
    pub copies: Vec<CopyGroup>,
    pub zero_type: Vec<ZeroTypeGroup>,
    pub consistent: bool,
}

impl NeuronClassification {
    /// Histogram keyed by `"copy"` and `"zero_type_<size>"`, counting neurons.
    pub fn histogram(&self) -> BTreeMap<String, usize> {
        let mut h = BTreeMap::new();
        let copies: usize = self.copies.iter().map(|c| c.members.len()).sum();
        h.insert("copy".to_string(), copies);
        for g in &self.zero_type {
            *h.entry(format!("zero_type_{}", g.members.len())).or_insert(0) += g.members.len();
        }
        h
    }

    pub fn group_size(&self, neuron: usize) -> usize {
        match self.labels[neuron] {
            NeuronLabel::Copy { teacher } => self.copies[teacher].members.len(),
            NeuronLabel::ZeroType { group } => self.zero_type[group].members.len(),
        }
    }

    pub fn max_zero_type_residual(&self) -> f64 {
        self.zero_type.iter().map(|g| g.residual).fold(0.0, f64::max)
    }

    pub fn max_copy_deviation(&self) -> f64 {
        self.copies.iter().map(|g| g.deviation).fold(0.0, f64::max)
    }
}

/// Labels each student neuron as a copy of the teacher neuron whose incoming
/// vector lies within `tol`, then clusters the rest by incoming vector
/// (single linkage) into zero-type groups. Consistency requires every copy
/// group to sum to its teacher's outgoing vector and every zero-type group
/// to sum to zero, both within `tol`.
pub fn classify_neurons(student: &TwoLayerPoint, teacher: &TwoLayerPoint, tol: f64) -> Result<NeuronClassification> {
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    if student.d_in() != teacher.d_in() || student.d_out() != teacher.d_out() {
        return Err(invalid("student and teacher shapes differ"));
    }
    let tw = teacher.neurons();
    for i in 0..tw.len() {
        for j in (i + 1)..tw.len() {
            if sup_dist(&tw[i].w, &tw[j].w) <= 2.0 * tol {
                return Err(Error::Reducible(format!(
                    "teacher neurons {i} and {j} are not separated at tolerance {tol}"
                )));
            }
        }
    }
    let mut labels = vec![None; student.width()];
    let mut copies: Vec<CopyGroup> = (0..tw.len())
        .map(|t| CopyGroup {
            teacher: t,
            members: Vec::new(),
            output_sum: vec![0.0; student.d_out()],
            deviation: 0.0,
        })
        .collect();
    let mut rest = Vec::new();
    for (i, n) in student.neurons().iter().enumerate() {
        match tw.iter().position(|t| sup_dist(&t.w, &n.w) <= tol) {
            Some(t) => {
                labels[i] = Some(NeuronLabel::Copy { teacher: t });
                copies[t].members.push(i);
                for (s, a) in copies[t].output_sum.iter_mut().zip(&n.a) {
                    *s += a;
                }
            }
            None => rest.push(i),
        }
    }
    for c in &mut copies {
        c.deviation = sup_dist(&c.output_sum, &tw[c.teacher].a);
    }
    let ws: Vec<&[f64]> = rest.iter().map(|&i| student.neuron(i).w.as_slice()).collect();
    let mut zero_type = Vec::new();
    for (g, cluster) in single_linkage(&ws, tol).into_iter().enumerate() {
        let members: Vec<usize> = cluster.into_iter().map(|c| rest[c]).collect();
        let mut sum = vec![0.0; student.d_out()];
        for &i in &members {
            labels[i] = Some(NeuronLabel::ZeroType { group: g });
            for (s, a) in sum.iter_mut().zip(&student.neuron(i).a) {
                *s += a;
            }
        }
        zero_type.push(ZeroTypeGroup {
            members,
            residual: sup_norm(&sum),
        });
    }
    let consistent = copies.iter().all(|c| c.deviation <= tol) && zero_type.iter().all(|g| g.residual <= tol);
    Ok(NeuronClassification {
        tol,
        labels: labels.into_iter().map(|l| l.expect("every neuron is labeled")).collect(),
        copies,
        zero_type,
        consistent,
    })
}

/// The permutation sorting units `[w_i, a_i]` into non-increasing
/// lexicographic order; equal units keep their original order.
pub fn replicant_region(theta: &TwoLayerPoint) -> Permutation {
    let units: Vec<Vec<f64>> = theta
        .neurons()
        .iter()
        .map(|n| n.w.iter().chain(&n.a).copied().collect())
        .collect();
    replicant_region_of_units(&units)
}

pub(crate) fn replicant_region_of_units(units: &[Vec<f64>]) -> Permutation {
    let mut order: Vec<usize> = (0..units.len()).collect();
    order.sort_by(|&i, &j| {
        for (x, y) in units[i].iter().zip(&units[j]) {
            match y.total_cmp(x) {
                std::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
        std::cmp::Ordering::Equal
    });
    Permutation::new(order).expect("sorted indices form a permutation")
}

/// Largest width accepted by [`enumerate_subspace_labels`].
pub const LABEL_ENUMERATION_MAX_WIDTH: usize = 8;

/// Symbol attached to one slot of a width-`m` subspace label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SlotSymbol {
    /// Carries the incoming vector of source neuron `t`.
    Source(usize),
    /// Belongs to the `g`-th zero-type group, numbered by first appearance.
    ZeroType(usize),
}

/// Every distinct way to assign incoming-vector symbols to `m` slots such
/// that each of the `r` source symbols appears at least once; zero-type
/// groups are unlabeled, so they are numbered in order of first appearance.
/// With `allow_zero_type = false` only source symbols are used.
pub fn enumerate_subspace_labels(r: usize, m: usize, allow_zero_type: bool) -> Result<Vec<Vec<SlotSymbol>>> {
    if m > LABEL_ENUMERATION_MAX_WIDTH {
        return Err(Error::SizeGuard {
            what: "label enumeration width",
            value: m,
            limit: LABEL_ENUMERATION_MAX_WIDTH,
        });
    }
    fn rec(
        r: usize,
        m: usize,
        allow_zero: bool,
        slot: Vec<SlotSymbol>,
        groups: usize,
        out: &mut Vec<Vec<SlotSymbol>>,
    ) {
        if slot.len() == m {
            let mut used = vec![false; r];
            for s in &slot {
                if let SlotSymbol::Source(t) = s {
                    used[*t] = true;
                }
            }
            if used.iter().all(|&u| u) {
                out.push(slot);
            }
            return;
        }
        for t in 0..r {
            let mut next = slot.clone();
            next.push(SlotSymbol::Source(t));
            rec(r, m, allow_zero, next, groups, out);
        }
        if allow_zero {
            for g in 0..=groups {
                let mut next = slot.clone();
                next.push(SlotSymbol::ZeroType(g));
                rec(r, m, allow_zero, next, groups.max(g + 1), out);
            }
        }
    }
    let mut out = Vec::new();
    rec(r, m, allow_zero_type, Vec::with_capacity(m), 0, &mut out);
    Ok(out)
}
