//! Range comparison of factors.
//!
//! Two factors A and C with A A^* <= lambda C C^* and C C^* <= mu A A^*
//! have the same range, and the optimal constants are eigenvalue extremes
//! of one quadratic form compressed to the range of the other. Containment
//! failures make a constant genuinely infinite, which is reported as a
//! value of its own rather than an error: an unbounded ratio is a valid
//! answer to the question.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::factor::{self, FeasibilityReport};
use crate::index::Window;
use crate::linalg::{herm_eigen, herm_max_eig};
use crate::matrix::{psd_check, DenseMatrix};
use crate::pattern;
use crate::tol;

/// Eigendecomposition of B B^* above the rank cut: orthonormal basis
/// columns for the range and the matching eigenvalues, largest first.
#[derive(Clone, Debug)]
pub struct RangeSpace {
    dim: usize,
    basis: DenseMatrix,
    eigs: Vec<f64>,
}

impl RangeSpace {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.eigs.len()
    }

    pub fn eigs(&self) -> &[f64] {
        &self.eigs
    }

    pub fn basis(&self) -> &DenseMatrix {
        &self.basis
    }

    /// Distance from y to the range.
    pub fn defect(&self, y: &[Complex64]) -> f64 {
        assert_eq!(y.len(), self.dim);
        let mut rem: Vec<Complex64> = y.to_vec();
        for j in 0..self.rank() {
            let p: Complex64 = (0..self.dim).map(|i| self.basis[(i, j)].conj() * y[i]).sum();
            for (i, r) in rem.iter_mut().enumerate() {
                *r -= p * self.basis[(i, j)];
            }
        }
        rem.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn contains(&self, y: &[Complex64], tol: f64) -> bool {
        let scale = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        self.defect(y) <= tol * (1.0 + scale)
    }

    /// Norm of the shortest preimage: |y|_B = min { |x| : B x = y }, which
    /// is the weighted spectral sum over the range basis. Vectors outside
    /// the range have no preimage at all.
    pub fn range_norm(&self, y: &[Complex64]) -> Result<f64> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "vector has {} components, space lives in dimension {}",
                y.len(),
                self.dim
            )));
        }
        if !self.contains(y, tol::RANGE_TOL) {
            return Err(Error::RangeMismatch(format!(
                "vector is not in the range, defect {:e}",
                self.defect(y)
            )));
        }
        let mut acc = 0.0f64;
        for (j, &lam) in self.eigs.iter().enumerate() {
            let p: Complex64 = (0..self.dim).map(|i| self.basis[(i, j)].conj() * y[i]).sum();
            acc += p.norm_sqr() / lam;
        }
        Ok(acc.sqrt())
    }
}

/// Range of a factor B through the spectral decomposition of B B^*.
pub fn range_space(b: &DenseMatrix) -> Result<RangeSpace> {
    let g = b.gram();
    let (eigs, vecs) = herm_eigen(&g)?;
    let lam_max = eigs.last().copied().unwrap_or(0.0).max(0.0);
    let cut = tol::PSD_TOL * lam_max;
    let kept: Vec<usize> = (0..eigs.len()).filter(|&i| eigs[i] > cut).collect();
    let mut basis = DenseMatrix::zeros(b.rows(), kept.len());
    let mut out = Vec::with_capacity(kept.len());
    // largest first
    for (col, &i) in kept.iter().rev().enumerate() {
        for r in 0..b.rows() {
            basis[(r, col)] = vecs[(r, i)];
        }
        out.push(eigs[i]);
    }
    Ok(RangeSpace {
        dim: b.rows(),
        basis,
        eigs: out,
    })
}

/// sigma_max((I - P_other) basis_self): how far self's range sticks out of
/// the other's.
fn containment_defect(inner: &RangeSpace, outer: &RangeSpace) -> Result<f64> {
    if inner.rank() == 0 {
        return Ok(0.0);
    }
    let n = inner.dim;
    let mut m = inner.basis.clone();
    for j in 0..inner.rank() {
        let col: Vec<Complex64> = (0..n).map(|i| m[(i, j)]).collect();
        for q in 0..outer.rank() {
            let p: Complex64 = (0..n).map(|i| outer.basis[(i, q)].conj() * col[i]).sum();
            for i in 0..n {
                m[(i, j)] -= p * outer.basis[(i, q)];
            }
        }
    }
    let small = m.adjoint().mul(&m);
    Ok(herm_max_eig(&small)?.max(0.0).sqrt())
}

#[derive(Clone, Debug)]
pub struct RangeEqualReport {
    pub equal: bool,
    /// How far range(A) sticks out of range(C).
    pub defect_a_in_c: f64,
    /// How far range(C) sticks out of range(A).
    pub defect_c_in_a: f64,
}

/// Compares the ranges of two factors by projector defect in both
/// directions.
pub fn range_equal(a: &DenseMatrix, c: &DenseMatrix, tol: f64) -> Result<RangeEqualReport> {
    if a.rows() != c.rows() {
        return Err(Error::DimensionMismatch(format!(
            "factors act on different spaces: {} vs {} rows",
            a.rows(),
            c.rows()
        )));
    }
    let ra = range_space(a)?;
    let rc = range_space(c)?;
    let defect_a_in_c = containment_defect(&ra, &rc)?;
    let defect_c_in_a = containment_defect(&rc, &ra)?;
    Ok(RangeEqualReport {
        equal: defect_a_in_c <= tol && defect_c_in_a <= tol,
        defect_a_in_c,
        defect_c_in_a,
    })
}

/// A majorization constant: finite when the ranges nest, infinite when
/// they do not.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DouglasBound {
    Finite(f64),
    Infinite,
}

impl DouglasBound {
    pub fn is_finite(&self) -> bool {
        matches!(self, DouglasBound::Finite(_))
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            DouglasBound::Finite(x) => Some(x),
            DouglasBound::Infinite => None,
        }
    }
}

impl std::fmt::Display for DouglasBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DouglasBound::Finite(x) => write!(f, "{x}"),
            DouglasBound::Infinite => write!(f, "infinity"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DouglasReport {
    /// Least lambda with A A^* <= lambda C C^*.
    pub lambda: DouglasBound,
    /// Least mu with C C^* <= mu A A^*.
    pub mu: DouglasBound,
}

/// Optimal majorization constants between A A^* and C C^*. The constant is
/// the top eigenvalue of one form compressed to the range of the other;
/// it is infinite exactly when the range containment fails.
pub fn douglas_constants(a: &DenseMatrix, c: &DenseMatrix, tol: f64) -> Result<DouglasReport> {
    if a.rows() != c.rows() {
        return Err(Error::DimensionMismatch(format!(
            "factors act on different spaces: {} vs {} rows",
            a.rows(),
            c.rows()
        )));
    }
    let ra = range_space(a)?;
    let rc = range_space(c)?;
    let lambda = majorization_bound(a, &ra, &rc, tol)?;
    let mu = majorization_bound(c, &rc, &ra, tol)?;
    Ok(DouglasReport { lambda, mu })
}

/// Least t with F F^* <= t G G^*, where `rf` and `rg` are the ranges of F
/// and G.
fn majorization_bound(
    f: &DenseMatrix,
    rf: &RangeSpace,
    rg: &RangeSpace,
    tol: f64,
) -> Result<DouglasBound> {
    if containment_defect(rf, rg)? > tol {
        return Ok(DouglasBound::Infinite);
    }
    if rg.rank() == 0 {
        // both ranges are trivial, the forms are zero
        return Ok(DouglasBound::Finite(0.0));
    }
    // M = W^H (F F^*) W with W = V Lambda^{-1/2}; equivalently the Gram of
    // F^* W
    let n = rf.dim;
    let mut w = rg.basis.clone();
    for j in 0..rg.rank() {
        let s = rg.eigs[j].sqrt().recip();
        for i in 0..n {
            w[(i, j)] *= s;
        }
    }
    let fw = f.adjoint().mul(&w);
    let m = fw.adjoint().mul(&fw);
    Ok(DouglasBound::Finite(herm_max_eig(&m)?.max(0.0)))
}

/// End-to-end walk over one windowed instance: form Q = A A^*, test
/// square-pattern feasibility, fall back to column augmentation when the
/// pattern refuses, and compare A against a reference factor when one is
/// available. With no reference, the identity stands in whenever Q is
/// invertible.
#[derive(Clone, Debug)]
pub struct TensorNestReport {
    /// None when Q is singular, which the square feasibility test refuses
    /// outright.
    pub feasibility: Option<FeasibilityReport>,
    pub augmented: bool,
    pub factor: DenseMatrix,
    pub residual_fro: f64,
    pub douglas: Option<DouglasReport>,
}

pub fn tensornest_demo(
    a: &DenseMatrix,
    w: &Window,
    c: usize,
    reference: Option<&DenseMatrix>,
    extra_cols: usize,
) -> Result<TensorNestReport> {
    let n = w.len() * c;
    if a.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "factor has {} rows, window with block size {c} needs {n}",
            a.rows()
        )));
    }
    let q = a.gram();
    let pat = pattern::Pattern::nest_tensor(w);
    let feasibility = match factor::poset_feasibility(&q, &pat, c, tol::ZERO_TOL) {
        Ok(rep) => Some(rep),
        Err(Error::Singular(_)) => None,
        Err(e) => return Err(e),
    };
    let feasible = feasibility.as_ref().is_some_and(|r| r.feasible);
    let (factor, residual_fro, augmented) = if feasible {
        let u = feasibility
            .as_ref()
            .and_then(|r| r.factor.clone())
            .expect("feasible reports carry their factor");
        let res = u.gram().sub(&q).frobenius_norm();
        (u, res, false)
    } else {
        let hotel = factor::hotel_factor(&q, w, c, extra_cols)?;
        (hotel.factor, hotel.residual_fro, true)
    };

    let invertible = psd_check(&q, tol::PSD_TOL)?.rank == n;
    let douglas = match reference {
        Some(r) => Some(douglas_constants(a, r, tol::RANGE_TOL)?),
        None if invertible => {
            let id = DenseMatrix::identity(n);
            Some(douglas_constants(a, &id, tol::RANGE_TOL)?)
        }
        None => None,
    };
    Ok(TensorNestReport {
        feasibility,
        augmented,
        factor,
        residual_fro,
        douglas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cvec(xs: &[f64]) -> Vec<Complex64> {
        xs.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    #[test]
    fn range_space_finds_rank_and_membership() {
        let b = DenseMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0], &[1.0, 1.0]]);
        let r = range_space(&b).unwrap();
        assert_eq!(r.rank(), 2);
        assert!(r.eigs()[0] >= r.eigs()[1]);
        assert!(r.contains(&cvec(&[1.0, 0.0, 1.0]), 1e-10));
        assert!(r.contains(&cvec(&[0.0, 0.0, 1.0]), 1e-10));
        assert!(!r.contains(&cvec(&[0.0, 1.0, 0.0]), 1e-10));
    }

    #[test]
    fn range_norm_is_the_shortest_preimage() {
        let b = DenseMatrix::from_real_rows(&[&[2.0, 0.0], &[0.0, 0.0]]);
        let r = range_space(&b).unwrap();
        // B x = (2, 0) has shortest solution x = (1, 0)
        let norm = r.range_norm(&cvec(&[2.0, 0.0])).unwrap();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(matches!(
            r.range_norm(&cvec(&[0.0, 1.0])),
            Err(Error::RangeMismatch(_))
        ));
    }

    #[test]
    fn ranges_survive_invertible_recombination() {
        let a = DenseMatrix::from_real_rows(&[&[1.0, 2.0], &[0.0, 1.0], &[3.0, 0.0]]);
        let g = DenseMatrix::from_real_rows(&[&[2.0, 1.0], &[-1.0, 1.0]]);
        let c = a.mul(&g);
        let rep = range_equal(&a, &c, tol::RANGE_TOL).unwrap();
        assert!(rep.equal, "defects {:e} {:e}", rep.defect_a_in_c, rep.defect_c_in_a);
    }

    #[test]
    fn range_comparison_sees_one_sided_growth() {
        let a = DenseMatrix::from_real_rows(&[&[1.0], &[0.0], &[0.0]]);
        let c = DenseMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]]);
        let rep = range_equal(&a, &c, tol::RANGE_TOL).unwrap();
        assert!(!rep.equal);
        assert!(rep.defect_a_in_c < 1e-10);
        assert!(rep.defect_c_in_a > 0.9);
    }

    #[test]
    fn douglas_constants_on_scaled_identities() {
        let a = DenseMatrix::identity(3).scale(Complex64::new(2.0, 0.0));
        let c = DenseMatrix::identity(3);
        let rep = douglas_constants(&a, &c, tol::RANGE_TOL).unwrap();
        match rep.lambda {
            DouglasBound::Finite(x) => assert!((x - 4.0).abs() < 1e-12),
            DouglasBound::Infinite => panic!("lambda should be finite"),
        }
        match rep.mu {
            DouglasBound::Finite(x) => assert!((x - 0.25).abs() < 1e-12),
            DouglasBound::Infinite => panic!("mu should be finite"),
        }
    }

    #[test]
    fn douglas_constants_go_infinite_without_containment() {
        let a = DenseMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let c = DenseMatrix::identity(2);
        let rep = douglas_constants(&a, &c, tol::RANGE_TOL).unwrap();
        match rep.lambda {
            DouglasBound::Finite(x) => assert!((x - 1.0).abs() < 1e-10),
            DouglasBound::Infinite => panic!("lambda should be finite"),
        }
        assert_eq!(rep.mu, DouglasBound::Infinite);
        assert!(!rep.mu.is_finite());
        assert_eq!(rep.mu.to_string(), "infinity");
    }

    #[test]
    fn douglas_constants_of_a_factor_with_itself_are_one() {
        let a = DenseMatrix::from_real_rows(&[&[1.0, 0.5], &[0.0, 2.0], &[0.3, 0.0]]);
        let rep = douglas_constants(&a, &a, tol::RANGE_TOL).unwrap();
        for b in [rep.lambda, rep.mu] {
            match b {
                DouglasBound::Finite(x) => assert!((x - 1.0).abs() < 1e-10, "bound {x}"),
                DouglasBound::Infinite => panic!("self comparison is finite"),
            }
        }
    }

    #[test]
    fn zero_factors_compare_trivially() {
        let z = DenseMatrix::zeros(3, 2);
        let rep = douglas_constants(&z, &z, tol::RANGE_TOL).unwrap();
        assert_eq!(rep.lambda, DouglasBound::Finite(0.0));
        assert_eq!(rep.mu, DouglasBound::Finite(0.0));
    }

    #[test]
    fn demo_walks_the_feasible_path() {
        let w = Window::new(1, 2).unwrap();
        let a = DenseMatrix::from_real_rows(&[
            &[1.0, 0.5, 0.0],
            &[0.0, 1.0, 0.5],
            &[0.0, 0.0, 1.0],
        ]);
        let rep = tensornest_demo(&a, &w, 1, None, 0).unwrap();
        assert!(rep.feasibility.as_ref().unwrap().feasible);
        assert!(!rep.augmented);
        assert!(rep.residual_fro < 1e-12);
        let d = rep.douglas.expect("invertible Q defaults to the identity");
        assert!(d.lambda.is_finite() && d.mu.is_finite());
    }

    #[test]
    fn demo_augments_the_counterexample() {
        let (u, _q) = factor::counterexample_instance();
        let w = Window::new(2, 1).unwrap();
        let rep = tensornest_demo(&u, &w, 1, None, 4).unwrap();
        let feas = rep.feasibility.as_ref().unwrap();
        assert!(!feas.feasible);
        assert_eq!(feas.certificate.len(), 1);
        assert!(rep.augmented);
        assert_eq!(rep.factor.cols(), 8);
        assert!(rep.residual_fro < 1e-12);
        assert!(rep.douglas.is_some());
    }
}
