//! Admissible zero patterns over windows of multi-indices.
//!
//! The pattern of interest is the tensor one: an entry at block position
//! (I, K) is allowed exactly when I <= K componentwise. For d = 1 this is the
//! ordinary upper triangle; for d >= 2 it is strictly smaller than the upper
//! triangle induced by the graded lexicographic layout, which is where
//! factorization can genuinely fail on square windows.

use crate::index::{MultiIndex, Window};

/// A rows-by-cols admissibility predicate between two ordered index lists.
#[derive(Clone, Debug)]
pub struct Pattern {
    rows: Vec<MultiIndex>,
    cols: Vec<MultiIndex>,
}

impl Pattern {
    /// Square tensor-order pattern over a window: allowed(I, K) iff I <= K
    /// componentwise.
    pub fn nest_tensor(w: &Window) -> Pattern {
        Pattern {
            rows: w.indices().to_vec(),
            cols: w.indices().to_vec(),
        }
    }

    /// Tensor-order pattern whose columns are the window followed by
    /// `extra` universal columns that dominate every window index.
    pub fn nest_tensor_augmented(w: &Window, extra: usize) -> Pattern {
        let mut cols = w.indices().to_vec();
        cols.extend(universal_columns(w, extra));
        Pattern {
            rows: w.indices().to_vec(),
            cols,
        }
    }

    /// Admissibility at block positions (i, k) in the stored lists.
    pub fn allowed(&self, i: usize, k: usize) -> bool {
        self.rows[i].leq(&self.cols[k])
    }

    pub fn rows(&self) -> &[MultiIndex] {
        &self.rows
    }

    pub fn cols(&self) -> &[MultiIndex] {
        &self.cols
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn col_count(&self) -> usize {
        self.cols.len()
    }

    pub fn is_square_window(&self) -> bool {
        self.rows == self.cols
    }

    pub fn d(&self) -> usize {
        self.rows.first().map_or(1, MultiIndex::d)
    }
}

/// Fresh column indices beyond the window: K(t) = (n+1+t, n+1, ..., n+1).
/// Every window index is componentwise <= every K(t), and the K(t) are
/// pairwise distinct, so new columns never collide with old ones.
pub fn universal_columns(w: &Window, extra: usize) -> Vec<MultiIndex> {
    let n = w.bound();
    (0..extra)
        .map(|t| {
            let mut coords = vec![n + 1; w.d()];
            coords[0] = n + 1 + t as u32;
            MultiIndex::new(&coords)
        })
        .collect()
}
