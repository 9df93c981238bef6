use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bijection of `{0, .., m-1}`.
///
/// Acting on a list of units, `P_pi (u_0, .., u_{m-1}) = (u_{pi(0)}, .., u_{pi(m-1)})`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Permutation::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.0
    }
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; images.len()];
        for &i in &images {
            if i >= images.len() || seen[i] {
                return Err(Error::InvalidPermutation(format!("{images:?}")));
            }
            seen[i] = true;
        }
        Ok(Permutation(images))
    }

    pub fn identity(m: usize) -> Self {
        Permutation((0..m).collect())
    }

    pub fn transposition(m: usize, i: usize, j: usize) -> Result<Self> {
        if i >= m || j >= m {
            return Err(Error::InvalidPermutation(format!("({i} {j}) on {m} points")));
        }
        let mut v: Vec<usize> = (0..m).collect();
        v.swap(i, j);
        Ok(Permutation(v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &p)| i == p)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &p) in self.0.iter().enumerate() {
            inv[p] = i;
        }
        Permutation(inv)
    }

    /// `self ∘ other`: first `other`, then `self`.
    pub fn compose(&self, other: &Permutation) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(Permutation(other.0.iter().map(|&i| self.0[i]).collect()))
    }

    /// Reorders `items` so that slot `i` receives `items[pi(i)]`.
    pub fn permute_items<T: Clone>(&self, items: &[T]) -> Result<Vec<T>> {
        if items.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: items.len(),
            });
        }
        Ok(self.0.iter().map(|&i| items[i].clone()).collect())
    }

    /// Same as [`permute_items`](Self::permute_items) on a flat vector of
    /// `len()` contiguous blocks of `block` entries.
    pub fn permute_blocks(&self, flat: &[f64], block: usize) -> Result<Vec<f64>> {
        if flat.len() != self.len() * block {
            return Err(Error::DimensionMismatch {
                expected: self.len() * block,
                got: flat.len(),
            });
        }
        let mut out = Vec::with_capacity(flat.len());
        for &i in &self.0 {
            out.extend_from_slice(&flat[i * block..(i + 1) * block]);
        }
        Ok(out)
    }

    /// Disjoint cycles of length >= 2, each starting at its smallest element,
    /// listed as `(c_0, pi(c_0), pi(pi(c_0)), ..)`.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut next = self.0[start];
            while next != start {
                seen[next] = true;
                cycle.push(next);
                next = self.0[next];
            }
            if cycle.len() > 1 {
                out.push(cycle);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        assert!(Permutation::new(vec![1, 0, 2]).is_ok());
        assert!(serde_json::from_str::<Permutation>("[1,1]").is_err());
    }

    #[test]
    fn inverse_and_compose() {
        let p = Permutation::new(vec![2, 0, 3, 1]).unwrap();
        let id = p.compose(&p.inverse()).unwrap();
        assert!(id.is_identity());
        let items = ["a", "b", "c", "d"];
        let once = p.permute_items(&items).unwrap();
        assert_eq!(once, vec!["c", "a", "d", "b"]);
        // permuting by q then by p equals permuting by (q ∘ p)
        let q = Permutation::new(vec![1, 2, 3, 0]).unwrap();
        let twice = p.permute_items(&q.permute_items(&items).unwrap()).unwrap();
        assert_eq!(twice, q.compose(&p).unwrap().permute_items(&items).unwrap());
    }

    #[test]
    fn cycles_of_three_cycle() {
        let p = Permutation::new(vec![1, 2, 0, 3]).unwrap();
        assert_eq!(p.cycles(), vec![vec![0, 1, 2]]);
    }
}
