//! Cholesky factorization in both orientations, pattern feasibility, and
//! column augmentation.
//!
//! The standard factorization of a positive semidefinite R eliminates from
//! the first entry and yields a lower triangular L with R = L L^*. Running
//! the same elimination from the *last* entry yields an upper triangular U
//! with R = U U^*. The two are exchanged by flipping both index axes:
//!
//! ```text
//!     reverse_cholesky(R) = flip( cholesky_ll( flip(R) ) )
//! ```
//!
//! and this module implements the reverse orientation exactly that way, so
//! the identity holds bitwise.
//!
//! For an invertible R the upper factor is unique up to a diagonal unitary
//! on the right; the canonical gauge fixed here makes every diagonal entry
//! real and nonnegative, which pins the factor down completely and makes
//! round trips exact.
//!
//! Feasibility of factoring inside a tensor pattern on a d >= 2 window is
//! decided by inspecting the canonical factor: any pattern-supported factor
//! of an invertible Q is an invertible block upper triangular matrix, hence
//! equals the canonical U times a block diagonal unitary and shares its
//! block zero pattern. So Q factors in the pattern exactly when the
//! off-pattern blocks of U vanish; the nonvanishing ones are returned as a
//! certificate. When they do not vanish, a rectangular factor always exists
//! after adjoining fresh columns that dominate the whole window (there is
//! always room one step beyond the window bound), and `hotel_factor` builds
//! it by parking a square or thin factor of Q in those columns.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::index::{MultiIndex, Window};
use crate::linalg;
use crate::matrix::{psd_check, DenseMatrix};
use crate::pattern::Pattern;
use crate::tol;

/// A factor B with B B^* equal to the input, plus bookkeeping.
#[derive(Clone, Debug)]
pub struct FactorResult {
    pub factor: DenseMatrix,
    /// Frobenius norm of B B^* minus the input.
    pub residual_fro: f64,
    /// Number of strictly positive pivots (square factors) or columns kept
    /// (thin factors).
    pub rank: usize,
    /// True when the factor is square triangular with real nonnegative
    /// diagonal, the gauge in which factors are unique.
    pub canonical: bool,
}

/// Outcome of the pattern feasibility decision on a square window.
#[derive(Clone, Debug)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Off-pattern block positions of the canonical factor with entries
    /// above the zero threshold, in scan order.
    pub certificate: Vec<(MultiIndex, MultiIndex)>,
    /// The canonical factor when feasible.
    pub factor: Option<DenseMatrix>,
}

/// Verification outcome for a proposed factor.
#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub ok: bool,
    pub residual_fro: f64,
    /// Block positions with off-pattern mass, when a pattern was supplied.
    pub pattern_violations: Vec<(MultiIndex, MultiIndex)>,
}

/// Lower Cholesky with elimination from the first entry: R = L L^* with L
/// lower triangular and real nonnegative diagonal.
///
/// `pivot_tol` is relative to the largest diagonal entry of R. A pivot
/// inside `[-tol, tol]` produces a zero column, which is the correct
/// continuation for semidefinite input; a pivot below `-tol` rejects the
/// matrix as indefinite.
pub fn cholesky_ll(r: &DenseMatrix, pivot_tol: f64) -> Result<FactorResult> {
    r.require_hermitian()?;
    if !r.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let n = r.rows();
    let max_diag = (0..n).map(|j| r[(j, j)].re).fold(0.0f64, f64::max);
    let threshold = pivot_tol * max_diag.max(0.0);

    let mut l = DenseMatrix::zeros(n, n);
    let mut rank = 0usize;
    for j in 0..n {
        let mut pivot = r[(j, j)].re;
        for k in 0..j {
            pivot -= l[(j, k)].norm_sqr();
        }
        if pivot < -threshold {
            return Err(Error::Indefinite { pivot, index: j });
        }
        if pivot <= threshold {
            // semidefinite: the whole column is dropped
            continue;
        }
        let d = pivot.sqrt();
        l[(j, j)] = Complex64::new(d, 0.0);
        rank += 1;
        for i in (j + 1)..n {
            let mut acc = r[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / d;
        }
    }

    let residual_fro = l.gram().sub(r).frobenius_norm();
    Ok(FactorResult {
        factor: l,
        residual_fro,
        rank,
        canonical: true,
    })
}

/// Upper Cholesky with elimination from the last entry: R = U U^* with U
/// upper triangular and real nonnegative diagonal. Implemented as the flip
/// conjugation of `cholesky_ll`, so the duality is exact by construction.
pub fn reverse_cholesky(r: &DenseMatrix, pivot_tol: f64) -> Result<FactorResult> {
    let inner = cholesky_ll(&r.flip(), pivot_tol)?;
    let factor = inner.factor.flip();
    let residual_fro = factor.gram().sub(r).frobenius_norm();
    Ok(FactorResult {
        factor,
        residual_fro,
        rank: inner.rank,
        canonical: true,
    })
}

/// Decides whether an invertible PSD Q on a square window factors as
/// B B^* with B supported on the pattern.
///
/// `c` is the block size: matrix position (i*c+s, k*c+t) belongs to block
/// position (i, k). `zero_tol` classifies factor entries as zero relative to
/// the largest factor entry.
///
/// Singular input is rejected: without invertibility the canonical factor
/// no longer certifies infeasibility.
pub fn poset_feasibility(
    q: &DenseMatrix,
    pat: &Pattern,
    c: usize,
    zero_tol: f64,
) -> Result<FeasibilityReport> {
    if !pat.is_square_window() {
        return Err(Error::InvalidInput(
            "feasibility needs a square window pattern".into(),
        ));
    }
    if c == 0 {
        return Err(Error::InvalidInput("block size c must be >= 1".into()));
    }
    let nblk = pat.row_count();
    if q.rows() != nblk * c || !q.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "Q is {}x{} but the pattern has {} block rows of size {}",
            q.rows(),
            q.cols(),
            nblk,
            c
        )));
    }
    let psd = psd_check(q, tol::PSD_TOL)?;
    if !psd.is_psd {
        return Err(Error::Indefinite {
            pivot: psd.min_eig,
            index: 0,
        });
    }
    if psd.rank < q.rows() {
        return Err(Error::Singular(format!(
            "rank {} < {}; feasibility is only decided for invertible Q",
            psd.rank,
            q.rows()
        )));
    }

    let u = reverse_cholesky(q, tol::PIVOT_TOL)?.factor;
    let threshold = zero_tol * u.max_abs();
    let mut certificate = Vec::new();
    for i in 0..nblk {
        for k in 0..nblk {
            if pat.allowed(i, k) {
                continue;
            }
            let block = u.block(i * c, (i + 1) * c, k * c, (k + 1) * c);
            if block.max_abs() > threshold {
                certificate.push((pat.rows()[i].clone(), pat.cols()[k].clone()));
            }
        }
    }
    let feasible = certificate.is_empty();
    Ok(FeasibilityReport {
        feasible,
        factor: feasible.then_some(u),
        certificate,
    })
}

/// Factors a PSD window section as B B^* with B supported entirely on
/// `extra_cols` fresh columns beyond the window. Works whether or not the
/// square window admits a pattern factor, because the fresh columns dominate
/// every row index.
///
/// The parked factor is the canonical square one when there is room for it
/// (`extra_cols >= window cardinality`), otherwise the thin eigenvalue
/// square root, which needs only `rank` columns. `extra_cols` counts lattice
/// columns; each carries `c` matrix columns.
pub fn hotel_factor(
    q: &DenseMatrix,
    w: &Window,
    c: usize,
    extra_cols: usize,
) -> Result<FactorResult> {
    if c == 0 {
        return Err(Error::InvalidInput("block size c must be >= 1".into()));
    }
    let nblk = w.len();
    if q.rows() != nblk * c || !q.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "Q is {}x{} but the window has {} positions of block size {}",
            q.rows(),
            q.cols(),
            nblk,
            c
        )));
    }
    let psd = psd_check(q, tol::PSD_TOL)?;
    if !psd.is_psd {
        return Err(Error::Indefinite {
            pivot: psd.min_eig,
            index: 0,
        });
    }
    if extra_cols * c < psd.rank {
        return Err(Error::InvalidInput(format!(
            "{} extra columns of block size {} cannot hold a rank {} factor",
            extra_cols, c, psd.rank
        )));
    }

    let parked = if extra_cols >= nblk {
        reverse_cholesky(q, tol::PIVOT_TOL)?.factor
    } else {
        thin_psd_factor(q, psd.rank)?
    };

    let mut b = DenseMatrix::zeros(nblk * c, (nblk + extra_cols) * c);
    b.set_block(0, nblk * c, &parked);
    let residual_fro = parked.gram().sub(q).frobenius_norm();
    Ok(FactorResult {
        factor: b,
        residual_fro,
        rank: psd.rank,
        canonical: false,
    })
}

/// Thin factor G with G G^* = Q and `rank` columns, from the
/// eigendecomposition with eigenvalues in descending order.
fn thin_psd_factor(q: &DenseMatrix, rank: usize) -> Result<DenseMatrix> {
    let (eigs, vecs) = linalg::herm_eigen(q)?;
    let n = q.rows();
    let mut g = DenseMatrix::zeros(n, rank);
    // eigs ascend; take the top `rank` in descending order
    for (col, k) in (0..eigs.len()).rev().take(rank).enumerate() {
        let s = eigs[k].max(0.0).sqrt();
        for i in 0..n {
            g[(i, col)] = vecs[(i, k)] * s;
        }
    }
    Ok(g)
}

/// Checks ||B B^* - Q||_F <= tol * (1 + ||Q||_F) and, when a pattern is
/// supplied, that B has no off-pattern mass. The pattern's column list must
/// cover B's columns, so augmented factors verify against the augmented
/// pattern.
pub fn verify_factor(
    b: &DenseMatrix,
    q: &DenseMatrix,
    pat: Option<(&Pattern, usize)>,
    verify_tol: f64,
) -> Result<VerifyReport> {
    if b.rows() != q.rows() || !q.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "factor is {}x{}, input is {}x{}",
            b.rows(),
            b.cols(),
            q.rows(),
            q.cols()
        )));
    }
    let residual_fro = b.gram().sub(q).frobenius_norm();
    let mut pattern_violations = Vec::new();
    if let Some((pat, c)) = pat {
        if c == 0 {
            return Err(Error::InvalidInput("block size c must be >= 1".into()));
        }
        if b.rows() != pat.row_count() * c || b.cols() != pat.col_count() * c {
            return Err(Error::DimensionMismatch(format!(
                "factor is {}x{} but the pattern is {}x{} blocks of size {}",
                b.rows(),
                b.cols(),
                pat.row_count(),
                pat.col_count(),
                c
            )));
        }
        let threshold = tol::ZERO_TOL * b.max_abs();
        for i in 0..pat.row_count() {
            for k in 0..pat.col_count() {
                if pat.allowed(i, k) {
                    continue;
                }
                let block = b.block(i * c, (i + 1) * c, k * c, (k + 1) * c);
                if block.max_abs() > threshold {
                    pattern_violations.push((pat.rows()[i].clone(), pat.cols()[k].clone()));
                }
            }
        }
    }
    let ok = residual_fro <= verify_tol * (1.0 + q.frobenius_norm()) && pattern_violations.is_empty();
    Ok(VerifyReport {
        ok,
        residual_fro,
        pattern_violations,
    })
}

/// The 4x4 instance over the window [0,1]^2 whose canonical factor has mass
/// at the one upper-triangular position outside the tensor pattern. Returns
/// (U, Q = U U^*); U is the identity plus a single off-pattern unit entry.
pub fn counterexample_instance() -> (DenseMatrix, DenseMatrix) {
    let mut u = DenseMatrix::identity(4);
    // positions 1 and 2 in the graded-lex window are (0,1) and (1,0),
    // which are incomparable
    u[(1, 2)] = Complex64::new(1.0, 0.0);
    let q = u.gram();
    (u, q)
}
