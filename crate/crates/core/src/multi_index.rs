//! Multi-indices over a fixed number of variables, in graded order.

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

/// Exponent vector `m = (m_1, ..., m_n)` of a monomial `z^m`.
///
/// Ordered by degree first; within a degree, the index with the larger entry
/// at the first differing position comes first, so `(1, 0, ..., 0)` leads
/// degree one and `(0, ..., 0, 1)` closes it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn zero(vars: usize) -> Self {
        Self(vec![0; vars])
    }

    /// The unit index `e_k` over `vars` variables.
    pub fn unit(vars: usize, k: usize) -> Self {
        let mut e = vec![0; vars];
        e[k] = 1;
        Self(e)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn vars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `m! = prod m_k!` as a float.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&k| (1..=k).map(f64::from).product::<f64>()).product()
    }

    /// `ln m!`.
    pub fn ln_factorial(&self) -> f64 {
        self.0.iter().map(|&k| (1..=k).map(|j| f64::from(j).ln()).sum::<f64>()).sum()
    }

    /// Concatenation `(self; other)`.
    pub fn join(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().chain(&other.0).copied().collect())
    }

    /// Entries `range` as a new index.
    pub fn slice(&self, range: std::ops::Range<usize>) -> MultiIndex {
        MultiIndex(self.0[range].to_vec())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
            .then_with(|| self.0.len().cmp(&other.0.len()))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// All indices over `vars` variables of degree exactly `degree`, in order.
pub fn indices_of_degree(vars: usize, degree: u32) -> Vec<MultiIndex> {
    fn fill(prefix: &mut Vec<u32>, remaining_vars: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
        if remaining_vars == 1 {
            prefix.push(remaining);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for k in (0..=remaining).rev() {
            prefix.push(k);
            fill(prefix, remaining_vars - 1, remaining - k, out);
            prefix.pop();
        }
    }
    if vars == 0 {
        return if degree == 0 { vec![MultiIndex(Vec::new())] } else { Vec::new() };
    }
    let mut out = Vec::new();
    fill(&mut Vec::with_capacity(vars), vars, degree, &mut out);
    out
}

/// All indices of degree `<= max_degree`, in order;
/// there are `binom(vars + max_degree, vars)` of them.
pub fn enumerate_indices(vars: usize, max_degree: u32) -> Vec<MultiIndex> {
    (0..=max_degree).flat_map(|k| indices_of_degree(vars, k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_indices(2, 1), vec![m(&[0, 0]), m(&[1, 0]), m(&[0, 1])]);
        assert_eq!(enumerate_indices(1, 3), vec![m(&[0]), m(&[1]), m(&[2]), m(&[3])]);
        assert_eq!(indices_of_degree(2, 2), vec![m(&[2, 0]), m(&[1, 1]), m(&[0, 2])]);
    }

    #[test]
    fn enumeration_is_sorted_and_counted() {
        let all = enumerate_indices(3, 4);
        assert_eq!(all.len(), 35);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn factorials() {
        assert_eq!(m(&[2, 3]).factorial(), 12.0);
        assert!((m(&[2, 3]).ln_factorial() - 12f64.ln()).abs() < 1e-14);
        assert_eq!(MultiIndex::zero(3).factorial(), 1.0);
    }
}
