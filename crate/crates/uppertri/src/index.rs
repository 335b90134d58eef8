//! Multi-indices in N_0^d and finite windows of them.
//!
//! The linear order used everywhere is graded lexicographic: compare total
//! degree first, then coordinates left to right. It refines the componentwise
//! partial order, which is what makes elimination from the last position
//! well defined on windows.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// A point of N_0^d, d >= 1.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    /// Builds a multi-index from its coordinates. Panics on an empty slice;
    /// dimension zero has no meaning here.
    pub fn new(coords: &[u32]) -> Self {
        assert!(!coords.is_empty(), "multi-index needs at least one coordinate");
        MultiIndex(coords.to_vec())
    }

    pub fn d(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[u32] {
        &self.0
    }

    pub fn coord(&self, k: usize) -> u32 {
        self.0[k]
    }

    /// Total degree |I|.
    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }

    /// Componentwise partial order: I <= K in every coordinate.
    /// This is the admissibility predicate for upper patterns.
    pub fn leq(&self, other: &MultiIndex) -> bool {
        assert_eq!(self.d(), other.d(), "comparing multi-indices of unequal dimension");
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Multi-index factorial I! = prod_k (i_k)!, as a float.
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&c| (1..=c as u64).map(|k| k as f64).product::<f64>())
            .product()
    }

    /// Position of this index in the graded lexicographic enumeration of all
    /// of N_0^d. Positions are 0-based.
    pub fn graded_rank(&self) -> u64 {
        let d = self.d();
        let m = self.degree();
        // indices of strictly smaller degree come first
        let mut rank: u64 = (0..m).map(|s| compositions(s, d)).sum();
        // then lexicographically smaller indices of equal degree
        let mut rem = m;
        for (k, &ik) in self.0.iter().enumerate() {
            let parts_after = d - k - 1;
            for v in 0..ik as u64 {
                rank += compositions(rem - v, parts_after);
            }
            rem -= ik as u64;
        }
        rank
    }
}

/// Number of d-part compositions of s, i.e. |{I in N_0^d : |I| = s}|.
fn compositions(s: u64, d: usize) -> u64 {
    if d == 0 {
        return u64::from(s == 0);
    }
    binomial(s + d as u64 - 1, d as u64 - 1)
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        assert_eq!(self.d(), other.d(), "comparing multi-indices of unequal dimension");
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// The box [0, n]^d, enumerated once in graded lexicographic order.
#[derive(Clone, Debug)]
pub struct Window {
    d: usize,
    n: u32,
    indices: Vec<MultiIndex>,
}

/// Hard cap on window cardinality; beyond this the dense sections this crate
/// builds stop being a sensible representation.
const MAX_WINDOW_CARD: u128 = 1 << 22;

impl Window {
    pub fn new(d: usize, n: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("window dimension d must be >= 1".into()));
        }
        let card = (n as u128 + 1).pow(d as u32);
        if card > MAX_WINDOW_CARD {
            return Err(Error::InvalidInput(format!(
                "window [0,{n}]^{d} has {card} points, beyond the supported size"
            )));
        }
        let mut indices = Vec::with_capacity(card as usize);
        let mut cur = vec![0u32; d];
        'outer: loop {
            indices.push(MultiIndex::new(&cur));
            // odometer over [0, n]^d
            for k in (0..d).rev() {
                if cur[k] < n {
                    cur[k] += 1;
                    continue 'outer;
                }
                cur[k] = 0;
            }
            break;
        }
        indices.sort();
        Ok(Window { d, n, indices })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn bound(&self) -> u32 {
        self.n
    }

    /// Cardinality (n+1)^d.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// All window indices in graded lexicographic order.
    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn contains(&self, i: &MultiIndex) -> bool {
        i.d() == self.d && i.coords().iter().all(|&c| c <= self.n)
    }

    /// 0-based position of `i` in the enumeration.
    pub fn position(&self, i: &MultiIndex) -> Option<usize> {
        if !self.contains(i) {
            return None;
        }
        self.indices.binary_search(i).ok()
    }
}
