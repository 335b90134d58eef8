//! Scalar Toeplitz symbols and their spectral factorizations.
//!
//! A symbol here is a nonnegative trigonometric polynomial
//! p(t) = sum_k c(k) e^{ikt} with c(-k) = conj(c(k)), stored by its
//! coefficients for k >= 0. Two routes produce the analytic factor f with
//! p = |f|^2 on the circle, f(0) > 0, and all zeros of f outside the open
//! unit disk:
//!
//! * `fejer_riesz` works in the root domain: the lifted polynomial
//!   z^m p(z) has roots in pairs (r, 1/conj(r)); picking one per pair and
//!   forming B prod_j (1 - conj(r_j) z) gives the outer factor directly.
//! * `bauer_factor` works in the matrix domain: the factor of the n x n
//!   Toeplitz section, eliminated from the last entry, is again Toeplitz up
//!   to boundary effects, and its interior column reproduces the
//!   coefficients of f as n grows.
//!
//! Both land on the same factor, which is what makes them useful as checks
//! on one another.

use num_complex::Complex64;

use crate::blockop::{ConvergenceReport, SectionSource};
use crate::error::{Error, Result};
use crate::factor;
use crate::index::Window;
use crate::matrix::DenseMatrix;
use crate::tol;

/// Trigonometric polynomial with hermitian coefficients, stored for k >= 0.
/// c(0) is real; trailing zero coefficients are trimmed on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Symbol {
    coeffs: Vec<Complex64>,
}

impl Symbol {
    /// `coeffs[k]` is c(k). c(0) must be real up to roundoff; its imaginary
    /// part is dropped. Negative-k coefficients are implied by symmetry.
    pub fn new(mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("symbol needs at least c(0)".into()));
        }
        if !coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::InvalidInput("symbol has non-finite coefficients".into()));
        }
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        if coeffs[0].im.abs() > tol::HERM_TOL * (1.0 + scale) {
            return Err(Error::InvalidInput(format!(
                "c(0) must be real, has imaginary part {:e}",
                coeffs[0].im
            )));
        }
        coeffs[0].im = 0.0;
        while coeffs.len() > 1 && *coeffs.last().unwrap() == Complex64::ZERO {
            coeffs.pop();
        }
        Ok(Symbol { coeffs })
    }

    /// Highest stored frequency.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// c(k) for any integer k, negative frequencies by symmetry.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let idx = k.unsigned_abs() as usize;
        match self.coeffs.get(idx) {
            None => Complex64::ZERO,
            Some(&c) if k >= 0 => c,
            Some(&c) => c.conj(),
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// p(t), real by symmetry.
    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = self.coeffs[0].re;
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            acc += 2.0 * (c * Complex64::new(0.0, k as f64 * t).exp()).re;
        }
        acc
    }

    /// Largest value on a uniform grid, a cheap scale for tolerances.
    fn grid_max(&self, grid: usize) -> f64 {
        (0..grid)
            .map(|j| self.eval(std::f64::consts::TAU * j as f64 / grid as f64))
            .fold(0.0f64, f64::max)
    }

    /// Rejects symbols that dip below zero on a uniform grid.
    fn require_nonnegative(&self, grid: usize) -> Result<()> {
        let max = self.grid_max(grid);
        for j in 0..grid {
            let t = std::f64::consts::TAU * j as f64 / grid as f64;
            let v = self.eval(t);
            if v < -tol::SYMBOL_NEG_TOL * (1.0 + max) {
                return Err(Error::NotFactorable(format!(
                    "symbol is negative at t = {t:.6}: p = {v:e}"
                )));
            }
        }
        Ok(())
    }
}

/// Polynomial f(z) = sum_k a(k) z^k with finitely many coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticFactor {
    coeffs: Vec<Complex64>,
}

impl AnalyticFactor {
    pub fn new(mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("factor needs at least a(0)".into()));
        }
        if !coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::InvalidInput("factor has non-finite coefficients".into()));
        }
        while coeffs.len() > 1 && *coeffs.last().unwrap() == Complex64::ZERO {
            coeffs.pop();
        }
        Ok(AnalyticFactor { coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(Complex64::ZERO)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::ZERO, |acc, &c| acc * z + c)
    }

    /// |f|^2 as a symbol: c(k) = sum_t a(t+k) conj(a(t)).
    pub fn to_symbol(&self) -> Symbol {
        let m = self.degree();
        let coeffs = (0..=m)
            .map(|k| {
                (0..=m - k)
                    .map(|t| self.coeffs[t + k] * self.coeffs[t].conj())
                    .sum()
            })
            .collect();
        Symbol::new(coeffs).expect("autocorrelation at lag 0 is real")
    }
}

/// n x n hermitian Toeplitz section with entry c(i - j) at (i, j).
pub fn toeplitz_matrix(sym: &Symbol, n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| sym.coeff(i as i64 - j as i64))
}

impl SectionSource for Symbol {
    fn d(&self) -> usize {
        1
    }

    fn c(&self) -> usize {
        1
    }

    fn section(&self, w: &Window) -> Result<DenseMatrix> {
        if w.d() != 1 {
            return Err(Error::DimensionMismatch(
                "toeplitz sections are one dimensional".into(),
            ));
        }
        Ok(toeplitz_matrix(self, w.len()))
    }
}

/// Root-domain spectral factorization. Fails on symbols that are genuinely
/// negative somewhere or whose root pairing cannot be reconciled with
/// p = |f|^2 on a verification grid.
pub fn fejer_riesz(sym: &Symbol) -> Result<AnalyticFactor> {
    let m = sym.degree();
    let grid = 4 * m + 16;
    sym.require_nonnegative(grid)?;

    if m == 0 {
        let c0 = sym.coeff(0).re;
        if c0 < 0.0 {
            return Err(Error::NotFactorable(format!("constant symbol {c0:e} < 0")));
        }
        return AnalyticFactor::new(vec![Complex64::new(c0.sqrt(), 0.0)]);
    }

    // roots of the lift z^m p(z) = sum_{j=0}^{2m} c(j - m) z^j
    let lifted: Vec<Complex64> = (0..=2 * m as i64).map(|j| sym.coeff(j - m as i64)).collect();
    let roots = crate::linalg::polynomial_roots(&lifted)?;
    debug_assert_eq!(roots.len(), 2 * m);

    // pair each root with the nearest candidate for its circle reflection
    let mut unused: Vec<Complex64> = roots;
    let mut selected = Vec::with_capacity(m);
    while let Some(r) = unused.pop() {
        if r == Complex64::ZERO {
            return Err(Error::NotFactorable(
                "lifted polynomial has a root at the origin".into(),
            ));
        }
        let reflect = 1.0 / r.conj();
        let (pos, _) = unused
            .iter()
            .enumerate()
            .min_by(|a, b| {
                let da = (a.1 - reflect).norm();
                let db = (b.1 - reflect).norm();
                da.total_cmp(&db)
            })
            .ok_or_else(|| Error::NotFactorable("odd number of roots to pair".into()))?;
        let s = unused.swap_remove(pos);
        let boundary =
            (r.norm() - 1.0).abs() <= tol::ROOT_TOL && (s.norm() - 1.0).abs() <= tol::ROOT_TOL;
        if boundary {
            // a circle zero of even multiplicity: both members sit on the
            // circle, keep their projected midpoint once
            let mid = 0.5 * (r + s);
            if mid == Complex64::ZERO {
                return Err(Error::NotFactorable(
                    "boundary pair straddles the origin".into(),
                ));
            }
            selected.push(mid / mid.norm());
        } else {
            selected.push(if r.norm() <= s.norm() { r } else { s });
        }
    }

    // f(z) = B prod_j (1 - conj(r_j) z), zeros at the reflections 1/conj(r_j)
    let mut coeffs = vec![Complex64::ZERO; m + 1];
    coeffs[0] = Complex64::ONE;
    for (deg, r) in selected.iter().enumerate() {
        let w = -r.conj();
        for k in (0..=deg).rev() {
            let t = coeffs[k] * w;
            coeffs[k + 1] += t;
        }
    }
    let root_prod: f64 = selected.iter().map(|r| r.norm()).product();
    if root_prod == 0.0 {
        return Err(Error::NotFactorable("selected root at the origin".into()));
    }
    let b = (sym.coeff(m as i64).norm() / root_prod).sqrt();
    for c in &mut coeffs {
        *c *= b;
    }
    let f = AnalyticFactor::new(coeffs)?;

    // the factorization is only accepted if it reproduces p on the grid
    let max = sym.grid_max(grid).max(1.0);
    for j in 0..grid {
        let t = std::f64::consts::TAU * j as f64 / grid as f64;
        let z = Complex64::new(0.0, t).exp();
        let got = f.eval(z).norm_sqr();
        if (got - sym.eval(t)).abs() > tol::FEJER_GRID_TOL * max {
            return Err(Error::NotFactorable(format!(
                "|f|^2 misses the symbol at t = {t:.6} by {:e}; a circle zero \
                 of odd multiplicity has no factorization",
                (got - sym.eval(t)).abs()
            )));
        }
    }
    Ok(f)
}

/// Matrix-domain spectral factorization: factor Toeplitz sections of
/// doubling size from the last entry and read the factor coefficients off an
/// interior column. The ladder runs from max(8, 2 deg + 2) up to `n`, and
/// convergence means the read coefficients stopped moving.
pub fn bauer_factor(
    sym: &Symbol,
    n: usize,
    conv_tol: f64,
) -> Result<(AnalyticFactor, ConvergenceReport)> {
    let m = sym.degree();
    if n < 2 * m + 2 {
        return Err(Error::WindowTooSmall(format!(
            "bauer needs n >= 2 deg + 2 = {}, got {n}",
            2 * m + 2
        )));
    }
    sym.require_nonnegative(4 * m + 16)?;

    let lo = (2 * m + 2).max(8).min(n);
    let mut sizes = Vec::new();
    let mut s = n;
    while s >= lo {
        sizes.push(s);
        if s == lo {
            break;
        }
        s /= 2;
        if s < lo {
            break;
        }
    }
    sizes.reverse();

    let mut prev: Option<Vec<Complex64>> = None;
    let mut deltas = Vec::with_capacity(sizes.len());
    let mut residuals = Vec::with_capacity(sizes.len());
    let mut est = Vec::new();
    for &size in &sizes {
        let t = toeplitz_matrix(sym, size);
        let u = factor::reverse_cholesky(&t, tol::PIVOT_TOL)?.factor;
        // interior column: U approximates the Toeplitz factor with
        // U[i][k] = conj(a(k - i)), so a(k) sits k rows above the diagonal
        let j0 = size / 2;
        est = (0..=m).map(|k| u[(j0 - k, j0)].conj()).collect();
        deltas.push(prev.as_ref().map(|p| {
            est.iter()
                .zip(p)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0f64, f64::max)
        }));
        // coefficient-space defect of the current estimate
        let defect = (0..=m as i64)
            .map(|k| {
                let acf: Complex64 = (0..=m - k as usize)
                    .map(|t| est[t + k as usize] * est[t].conj())
                    .sum();
                (acf - sym.coeff(k)).norm()
            })
            .fold(0.0f64, f64::max);
        residuals.push(defect);
        prev = Some(est.clone());
    }

    let converged = match deltas.last().copied().flatten() {
        Some(d) => d <= conv_tol,
        // a single rung has no delta; fall back to the defect
        None => residuals.last().is_some_and(|&r| r <= conv_tol),
    };
    let report = ConvergenceReport {
        schedule: sizes.iter().map(|&s| s as u32).collect(),
        deltas,
        residuals,
        converged,
    };
    Ok((AnalyticFactor::new(est)?, report))
}

#[derive(Clone, Debug)]
pub struct ToeplitzVerifyReport {
    pub ok: bool,
    pub residual_fro: f64,
    pub n: usize,
}

/// Checks p = |f|^2 in the matrix domain: the banded upper Toeplitz matrix
/// U built from f at size n + deg f satisfies (U U^*)|_{n x n} = T_p(n)
/// exactly, so the residual is pure roundoff when f is right.
pub fn verify_toeplitz_factor(f: &AnalyticFactor, sym: &Symbol, n: usize) -> ToeplitzVerifyReport {
    let m = f.degree();
    let size = n + m;
    let u = DenseMatrix::from_fn(size, size, |i, k| {
        if k >= i && k - i <= m {
            f.coeff(k - i).conj()
        } else {
            Complex64::ZERO
        }
    });
    let t = toeplitz_matrix(sym, n);
    let prod = u.gram();
    let residual_fro = prod.block(0, n, 0, n).sub(&t).frobenius_norm();
    let ok = residual_fro <= tol::TOEPLITZ_VERIFY_TOL * (1.0 + t.frobenius_norm());
    ToeplitzVerifyReport {
        ok,
        residual_fro,
        n,
    }
}

#[derive(Clone, Debug)]
pub struct LogIntegrabilityReport {
    /// Mean of log p over the grid points that were kept. This is
    /// 2 log f(0) for a factorable symbol.
    pub value: f64,
    pub grid: usize,
    pub excluded: usize,
}

/// Mean of log p on a uniform grid, excluding points within a relative
/// floor of zero so circle zeros do not poison the quadrature. A symbol
/// that is zero on most of the grid is reported as -inf.
pub fn log_integrability(sym: &Symbol, grid: usize) -> Result<LogIntegrabilityReport> {
    if grid == 0 {
        return Err(Error::InvalidInput("log integrability needs a grid".into()));
    }
    let max = sym.grid_max(grid);
    let floor = tol::LOG_ZERO_FLOOR * max;
    let mut acc = 0.0f64;
    let mut kept = 0usize;
    for j in 0..grid {
        let t = std::f64::consts::TAU * j as f64 / grid as f64;
        let v = sym.eval(t);
        if v <= floor {
            continue;
        }
        acc += v.ln();
        kept += 1;
    }
    let value = if kept == 0 { f64::NEG_INFINITY } else { acc / kept as f64 };
    Ok(LogIntegrabilityReport {
        value,
        grid,
        excluded: grid - kept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(coeffs: &[(f64, f64)]) -> Symbol {
        Symbol::new(coeffs.iter().map(|&(re, im)| Complex64::new(re, im)).collect()).unwrap()
    }

    fn fac(coeffs: &[(f64, f64)]) -> AnalyticFactor {
        AnalyticFactor::new(coeffs.iter().map(|&(re, im)| Complex64::new(re, im)).collect())
            .unwrap()
    }

    #[test]
    fn toeplitz_section_lays_out_diagonals() {
        let p = sym(&[(1.25, 0.0), (0.5, 0.0)]);
        let t = toeplitz_matrix(&p, 3);
        let want = DenseMatrix::from_real_rows(&[
            &[1.25, 0.5, 0.0],
            &[0.5, 1.25, 0.5],
            &[0.0, 0.5, 1.25],
        ]);
        assert_eq!(t, want);
    }

    #[test]
    fn complex_symbol_sections_are_hermitian() {
        let f = fac(&[(1.0, 0.0), (0.0, 1.0)]);
        let p = f.to_symbol();
        assert_eq!(p.coeff(1), Complex64::new(0.0, 1.0));
        assert_eq!(p.coeff(-1), Complex64::new(0.0, -1.0));
        let t = toeplitz_matrix(&p, 4);
        assert_eq!(t.hermitian_defect(), 0.0);
        assert_eq!(t[(1, 0)], Complex64::new(0.0, 1.0));
    }

    #[test]
    fn symbol_rejects_imaginary_mean() {
        let res = Symbol::new(vec![Complex64::new(1.0, 0.5)]);
        assert!(res.is_err());
    }

    #[test]
    fn fejer_riesz_factors_the_textbook_symbol() {
        let p = sym(&[(1.25, 0.0), (0.5, 0.0)]);
        let f = fejer_riesz(&p).unwrap();
        assert_eq!(f.degree(), 1);
        assert!((f.coeff(0) - Complex64::ONE).norm() < 1e-12);
        assert!((f.coeff(1) - Complex64::new(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn fejer_riesz_on_a_constant_takes_the_square_root() {
        let p = sym(&[(4.0, 0.0)]);
        let f = fejer_riesz(&p).unwrap();
        assert_eq!(f.degree(), 0);
        assert!((f.coeff(0) - Complex64::new(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn fejer_riesz_handles_a_double_circle_zero() {
        // p(t) = 2 + 2 cos t = |1 + z|^2 vanishes at t = pi
        let p = sym(&[(2.0, 0.0), (1.0, 0.0)]);
        let f = fejer_riesz(&p).unwrap();
        assert!((f.coeff(0) - Complex64::ONE).norm() < 1e-7);
        assert!((f.coeff(1) - Complex64::ONE).norm() < 1e-7);
    }

    #[test]
    fn fejer_riesz_recovers_a_complex_outer_factor() {
        // zeros at 2.5i and -10/3, both outside the closed disk, f(0) = 1
        let f0 = fac(&[(1.0, 0.0), (0.3, 0.4), (0.0, 0.12)]);
        let p = f0.to_symbol();
        let f = fejer_riesz(&p).unwrap();
        assert_eq!(f.degree(), f0.degree());
        for k in 0..=f.degree() {
            assert!(
                (f.coeff(k) - f0.coeff(k)).norm() < 1e-9,
                "coefficient {k}: {} vs {}",
                f.coeff(k),
                f0.coeff(k)
            );
        }
    }

    #[test]
    fn fejer_riesz_rejects_signed_symbols() {
        assert!(matches!(
            fejer_riesz(&sym(&[(-1.0, 0.0)])),
            Err(Error::NotFactorable(_))
        ));
        // p(t) = cos t changes sign
        assert!(matches!(
            fejer_riesz(&sym(&[(0.0, 0.0), (0.5, 0.0)])),
            Err(Error::NotFactorable(_))
        ));
    }

    #[test]
    fn bauer_ladder_reproduces_the_factor() {
        let p = sym(&[(1.25, 0.0), (0.5, 0.0)]);
        let (f, rep) = bauer_factor(&p, 64, tol::CONV_TOL).unwrap();
        assert!(rep.converged, "deltas: {:?}", rep.deltas);
        assert_eq!(rep.schedule.last(), Some(&64));
        assert!((f.coeff(0) - Complex64::ONE).norm() < 1e-8);
        assert!((f.coeff(1) - Complex64::new(0.5, 0.0)).norm() < 1e-8);
        assert!(rep.residuals.last().unwrap() < &1e-8);
    }

    #[test]
    fn bauer_and_fejer_riesz_agree_on_a_complex_symbol() {
        let f0 = fac(&[(2.0, 0.0), (0.5, -0.3), (0.1, 0.2)]);
        let p = f0.to_symbol();
        let a = fejer_riesz(&p).unwrap();
        let (b, rep) = bauer_factor(&p, 128, tol::CONV_TOL).unwrap();
        assert!(rep.converged);
        for k in 0..=p.degree() {
            assert!((a.coeff(k) - b.coeff(k)).norm() < 1e-7, "coefficient {k}");
        }
    }

    #[test]
    fn bauer_rejects_too_small_sections() {
        let p = sym(&[(1.25, 0.0), (0.5, 0.0)]);
        assert!(matches!(
            bauer_factor(&p, 3, 1e-8),
            Err(Error::WindowTooSmall(_))
        ));
    }

    #[test]
    fn verify_catches_right_and_wrong_factors() {
        let p = sym(&[(1.25, 0.0), (0.5, 0.0)]);
        let good = verify_toeplitz_factor(&fac(&[(1.0, 0.0), (0.5, 0.0)]), &p, 24);
        assert!(good.ok, "residual {:e}", good.residual_fro);
        assert!(good.residual_fro < 1e-13);
        let bad = verify_toeplitz_factor(&fac(&[(1.0, 0.0), (0.6, 0.0)]), &p, 24);
        assert!(!bad.ok);
    }

    #[test]
    fn log_mean_matches_twice_the_log_of_f_at_zero() {
        let rep = log_integrability(&sym(&[(1.25, 0.0), (0.5, 0.0)]), 4096).unwrap();
        assert!(rep.value.abs() < 1e-9, "value {:e}", rep.value);
        assert_eq!(rep.excluded, 0);
        // |2 + z|^2 has c(0) = 5, c(1) = 2 and f(0) = 2
        let rep = log_integrability(&sym(&[(5.0, 0.0), (2.0, 0.0)]), 4096).unwrap();
        assert!((rep.value - 2.0 * 2.0f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn log_mean_excludes_circle_zeros() {
        // p = 2 + 2 cos t vanishes at t = pi, an even grid hits it exactly
        let rep = log_integrability(&sym(&[(2.0, 0.0), (1.0, 0.0)]), 4096).unwrap();
        assert!(rep.excluded >= 1);
        assert!(rep.value.is_finite());
        let rep = log_integrability(&sym(&[(0.0, 0.0)]), 64).unwrap();
        assert_eq!(rep.value, f64::NEG_INFINITY);
        assert_eq!(rep.excluded, 64);
    }

    #[test]
    fn symbol_sections_come_from_the_source_trait() {
        let p = sym(&[(1.25, 0.0), (0.5, 0.0)]);
        let w = Window::new(1, 2).unwrap();
        let s = SectionSource::section(&p, &w).unwrap();
        assert_eq!(s, toeplitz_matrix(&p, 3));
        assert_eq!(SectionSource::d(&p), 1);
        assert_eq!(SectionSource::c(&p), 1);
    }

    #[test]
    fn truncation_study_runs_over_a_symbol() {
        let p = sym(&[(1.25, 0.0), (0.5, 0.0)]);
        let rep = crate::blockop::truncation_study(&p, &[8, 16, 32, 64], 4, 1e-8).unwrap();
        assert!(rep.converged, "deltas {:?}", rep.deltas);
    }
}
