//! Eigenvalue plumbing on top of nalgebra, kept behind a narrow interface so
//! the rest of the crate never touches the backing library directly.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

fn to_na(m: &DenseMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

/// Eigendecomposition of a hermitian matrix. Returns the eigenvalues in
/// ascending order and the matching eigenvector columns. The input is
/// hermitized first; callers are expected to have validated it.
pub fn herm_eigen(m: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if m.rows() == 0 {
        return Ok((Vec::new(), DenseMatrix::zeros(0, 0)));
    }
    if !m.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let se = to_na(&m.hermitize()).symmetric_eigen();
    let n = m.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        se.eigenvalues[a]
            .partial_cmp(&se.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let eigs: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    if eigs.iter().any(|e| !e.is_finite()) {
        return Err(Error::Eigen("hermitian eigensolver returned non-finite values".into()));
    }
    let vecs = DenseMatrix::from_fn(n, n, |i, j| se.eigenvectors[(i, order[j])]);
    Ok((eigs, vecs))
}

/// Largest eigenvalue of a hermitian matrix, 0 for the empty matrix.
pub fn herm_max_eig(m: &DenseMatrix) -> Result<f64> {
    let (eigs, _) = herm_eigen(m)?;
    Ok(eigs.last().copied().unwrap_or(0.0))
}

/// All roots of `c_0 + c_1 z + ... + c_n z^n` with `c_n != 0`, via the
/// companion matrix, each polished by a couple of Newton steps. Multiple
/// roots come back as clusters with the usual k-th root sensitivity; callers
/// that care must cluster them.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = coeffs.len();
    if n < 2 {
        return Ok(Vec::new());
    }
    let lead = coeffs[n - 1];
    if lead.norm() == 0.0 {
        return Err(Error::InvalidInput("polynomial leading coefficient is zero".into()));
    }
    let deg = n - 1;
    // monic companion: last column carries -c_k / c_n
    let mut comp = DMatrix::from_element(deg, deg, Complex64::ZERO);
    for i in 1..deg {
        comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -coeffs[i] / lead;
    }
    let schur = comp.schur();
    let eigs = schur
        .eigenvalues()
        .ok_or_else(|| Error::Eigen("complex Schur did not yield eigenvalues".into()))?;
    let mut roots: Vec<Complex64> = eigs.iter().copied().collect();
    for r in roots.iter_mut() {
        *r = newton_polish(coeffs, *r);
    }
    roots.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(roots)
}

fn eval_poly(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    // Horner for p and p'
    let mut p = Complex64::ZERO;
    let mut dp = Complex64::ZERO;
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn newton_polish(coeffs: &[Complex64], mut z: Complex64) -> Complex64 {
    for _ in 0..3 {
        let (p, dp) = eval_poly(coeffs, z);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        // a full Newton step near a multiple root overshoots; only accept
        // steps that actually reduce |p|
        let cand = z - step;
        if eval_poly(coeffs, cand).0.norm() < p.norm() {
            z = cand;
        } else {
            break;
        }
    }
    z
}

/// Solves the hermitian system `(M + shift I) x = b` through the
/// eigendecomposition of M. Intended for regularized Gram solves.
pub fn herm_solve_shifted(m: &DenseMatrix, shift: f64, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let (eigs, vecs) = herm_eigen(m)?;
    let n = eigs.len();
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} vs matrix size {}",
            b.len(),
            n
        )));
    }
    let mut x = vec![Complex64::ZERO; n];
    for k in 0..n {
        let denom = eigs[k] + shift;
        if denom == 0.0 {
            continue;
        }
        // <v_k, b> / (lambda_k + shift) * v_k
        let mut proj = Complex64::ZERO;
        for i in 0..n {
            proj += vecs[(i, k)].conj() * b[i];
        }
        let w = proj / denom;
        for i in 0..n {
            x[i] += w * vecs[(i, k)];
        }
    }
    Ok(x)
}
