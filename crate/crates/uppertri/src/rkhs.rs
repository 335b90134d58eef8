//! The function-space view of a block operator.
//!
//! A hermitian PSD operator Q over the lattice is the Gram matrix of the
//! monomials z^I in a reproducing kernel space with kernel
//! K(z, w) = sum_{I,K} z^I Q_{I,K} conj(w^K), taking values in c x c
//! matrices. The columns of Q are the kernel sections: phi_{J,v} has
//! coefficient Q_{I,J} v at I, and inner products of sections read off Q
//! directly. Everything in this module is exact linear algebra over the
//! stored support; the only analytic ingredient is the geometric tail bound
//! for kernels known to be truncations.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::blockop::BlockOperator;
use crate::error::{Error, Result};
use crate::index::{MultiIndex, Window};
use crate::linalg::{herm_eigen, herm_solve_shifted};
use crate::matrix::DenseMatrix;
use crate::tol;

/// Polynomial with C^c coefficients, stored sparsely by multi-index.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyFunction {
    d: usize,
    c: usize,
    coeffs: BTreeMap<MultiIndex, Vec<Complex64>>,
}

impl PolyFunction {
    pub fn zero(d: usize, c: usize) -> Self {
        PolyFunction {
            d,
            c,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn coeff(&self, i: &MultiIndex) -> Option<&[Complex64]> {
        self.coeffs.get(i).map(Vec::as_slice)
    }

    pub fn support(&self) -> impl Iterator<Item = (&MultiIndex, &[Complex64])> {
        self.coeffs.iter().map(|(i, v)| (i, v.as_slice()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// self += s * other, dropping coefficients that cancel exactly.
    pub fn add_scaled(&mut self, other: &PolyFunction, s: Complex64) {
        assert_eq!((self.d, self.c), (other.d, other.c));
        for (i, v) in &other.coeffs {
            let entry = self
                .coeffs
                .entry(i.clone())
                .or_insert_with(|| vec![Complex64::ZERO; self.c]);
            for (a, b) in entry.iter_mut().zip(v) {
                *a += s * b;
            }
            if entry.iter().all(|z| *z == Complex64::ZERO) {
                self.coeffs.remove(i);
            }
        }
    }

    /// Pointwise value, a vector in C^c.
    pub fn eval(&self, z: &[Complex64]) -> Result<Vec<Complex64>> {
        if z.len() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, function expects {}",
                z.len(),
                self.d
            )));
        }
        let mut acc = vec![Complex64::ZERO; self.c];
        for (i, v) in &self.coeffs {
            let m = monomial(z, i);
            for (a, b) in acc.iter_mut().zip(v) {
                *a += m * b;
            }
        }
        Ok(acc)
    }
}

fn monomial(z: &[Complex64], i: &MultiIndex) -> Complex64 {
    z.iter()
        .zip(i.coords())
        .map(|(zj, &e)| zj.powu(e))
        .product()
}

fn check_direction(op: &BlockOperator, v: &[Complex64]) -> Result<()> {
    if v.len() != op.c() {
        return Err(Error::DimensionMismatch(format!(
            "direction has {} components, operator blocks are {}",
            v.len(),
            op.c()
        )));
    }
    Ok(())
}

fn check_index(op: &BlockOperator, j: &MultiIndex) -> Result<()> {
    if j.d() != op.d() {
        return Err(Error::DimensionMismatch(format!(
            "index {j:?} has dimension {}, operator has {}",
            j.d(),
            op.d()
        )));
    }
    Ok(())
}

/// Apply a c x c block to a direction vector.
fn block_apply(b: &DenseMatrix, v: &[Complex64]) -> Vec<Complex64> {
    (0..b.rows())
        .map(|r| (0..b.cols()).map(|s| b[(r, s)] * v[s]).sum())
        .collect()
}

/// Kernel section phi_{J,v}: the polynomial with coefficient Q_{I,J} v at
/// every stored I of column J.
pub fn phi(op: &BlockOperator, j: &MultiIndex, v: &[Complex64]) -> Result<PolyFunction> {
    check_index(op, j)?;
    check_direction(op, v)?;
    let mut f = PolyFunction::zero(op.d(), op.c());
    for (i, block) in op.column(j) {
        let coeff = block_apply(block, v);
        if coeff.iter().any(|z| *z != Complex64::ZERO) {
            f.coeffs.insert(i.clone(), coeff);
        }
    }
    Ok(f)
}

/// Inner product of two kernel sections:
/// (phi_{J1,v1}, phi_{J2,v2}) = v2^H Q_{J2,J1} v1.
pub fn gram(
    op: &BlockOperator,
    j1: &MultiIndex,
    v1: &[Complex64],
    j2: &MultiIndex,
    v2: &[Complex64],
) -> Result<Complex64> {
    check_index(op, j1)?;
    check_index(op, j2)?;
    check_direction(op, v1)?;
    check_direction(op, v2)?;
    let Some(block) = op.block(j2, j1) else {
        return Ok(Complex64::ZERO);
    };
    let bv = block_apply(block, v1);
    Ok(v2.iter().zip(&bv).map(|(a, b)| a.conj() * b).sum())
}

/// Gram matrix of a list of sections, entry (l, k) = (phi_k, phi_l).
pub fn gram_matrix(
    op: &BlockOperator,
    basis: &[(MultiIndex, Vec<Complex64>)],
) -> Result<DenseMatrix> {
    let n = basis.len();
    let mut g = DenseMatrix::zeros(n, n);
    for (l, (jl, vl)) in basis.iter().enumerate() {
        for (k, (jk, vk)) in basis.iter().enumerate() {
            g[(l, k)] = gram(op, jk, vk, jl, vl)?;
        }
    }
    Ok(g.hermitize())
}

/// The coefficient functional at J scaled by J!: L_J f = J! f_J in C^c.
pub fn apply_functional(f: &PolyFunction, j: &MultiIndex) -> Vec<Complex64> {
    let scale = Complex64::new(j.factorial(), 0.0);
    match f.coeff(j) {
        Some(v) => v.iter().map(|z| scale * z).collect(),
        None => vec![Complex64::ZERO; f.c()],
    }
}

/// The same functional applied to a sum of kernel sections given by its
/// span data: L_J (sum_m phi_{J_m, v_m}) = J! sum_m Q_{J, J_m} v_m. Agrees
/// with `apply_functional` on the assembled polynomial, addend for addend.
pub fn apply_span(
    op: &BlockOperator,
    span: &[(MultiIndex, Vec<Complex64>)],
    j: &MultiIndex,
) -> Result<Vec<Complex64>> {
    check_index(op, j)?;
    let mut acc = vec![Complex64::ZERO; op.c()];
    for (jm, vm) in span {
        check_index(op, jm)?;
        check_direction(op, vm)?;
        if let Some(block) = op.block(j, jm) {
            for (a, b) in acc.iter_mut().zip(block_apply(block, vm)) {
                *a += b;
            }
        }
    }
    let scale = Complex64::new(j.factorial(), 0.0);
    Ok(acc.into_iter().map(|z| scale * z).collect())
}

/// Largest coordinate modulus over a point set, required to sit strictly
/// inside the unit polydisk.
fn polydisk_radius(d: usize, points: &[Vec<Complex64>]) -> Result<f64> {
    let mut rho = 0.0f64;
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, expected {d}",
                p.len()
            )));
        }
        for z in p {
            rho = rho.max(z.norm());
        }
    }
    if rho >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "points must lie strictly inside the unit polydisk, \
             largest coordinate modulus is {rho}"
        )));
    }
    Ok(rho)
}

#[derive(Clone, Debug)]
pub struct FunctionalNormReport {
    /// J! sqrt(lambda_max(Q_JJ)), the exact operator norm of L_J.
    pub value: f64,
    /// Best ratio |L_J f| / |f| over sampled unit sections; meets `value`
    /// at the top eigenvector of Q_JJ.
    pub sampled_lower: f64,
}

/// Norm of the scaled coefficient functional L_J, with an independent
/// sampled lower bound from applying L_J to normalized kernel sections.
pub fn functional_norm(op: &BlockOperator, j: &MultiIndex) -> Result<FunctionalNormReport> {
    check_index(op, j)?;
    let c = op.c();
    let qjj = match op.block(j, j) {
        Some(b) => b.clone(),
        None => DenseMatrix::zeros(c, c),
    };
    let (eigs, vecs) = herm_eigen(&qjj)?;
    let lam = eigs.last().copied().unwrap_or(0.0).max(0.0);
    let fact = j.factorial();
    let value = fact * lam.sqrt();

    let mut sampled_lower = 0.0f64;
    let mut candidates: Vec<Vec<Complex64>> = (0..c)
        .map(|s| {
            (0..c)
                .map(|r| {
                    if r == s {
                        Complex64::ONE
                    } else {
                        Complex64::ZERO
                    }
                })
                .collect()
        })
        .collect();
    candidates.push((0..c).map(|r| vecs[(r, c - 1)]).collect());
    for v in candidates {
        // f = phi_{J,v} has |f|^2 = v^H Q_JJ v and L_J f = J! Q_JJ v
        let qv = block_apply(&qjj, &v);
        let norm_sq: f64 = v
            .iter()
            .zip(&qv)
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        if norm_sq <= 0.0 {
            continue;
        }
        let lv: f64 = qv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        sampled_lower = sampled_lower.max(fact * lv / norm_sq.sqrt());
    }
    Ok(FunctionalNormReport {
        value,
        sampled_lower,
    })
}

#[derive(Clone, Debug)]
pub struct CminReport {
    /// sqrt of the largest pencil eigenvalue of the column against the
    /// window section.
    pub value: f64,
    /// sqrt(lambda_max(Q_JJ)) restricted to the chosen direction; the
    /// pencil value equals this whenever J lies in the window.
    pub column_bound: f64,
    /// sqrt(lambda_max(Q_w)), a ceiling for the pencil value.
    pub window_bound: f64,
}

/// Largest generalized eigenvalue of the column energy at J against the
/// window section, on the range of the section. With a direction v the
/// column is compressed to the ray through v first.
pub fn cmin(
    op: &BlockOperator,
    j: &MultiIndex,
    window_n: u32,
    v: Option<&[Complex64]>,
) -> Result<CminReport> {
    check_index(op, j)?;
    if let Some(v) = v {
        check_direction(op, v)?;
    }
    let w = Window::new(op.d(), window_n)?;
    let Some(jp) = w.position(j) else {
        return Err(Error::WindowTooSmall(format!(
            "index {j:?} is outside the window [0, {window_n}]^{}",
            op.d()
        )));
    };
    // the pencil sees the whole column, so none of it may escape
    for (i, block) in op.column(j) {
        if block.max_abs() > 0.0 && !w.contains(i) {
            return Err(Error::WindowTooSmall(format!(
                "column {j:?} has support at {i:?}, outside the window [0, {window_n}]^{}",
                op.d()
            )));
        }
    }
    let c = op.c();
    let qw = op.section(&w)?;
    let (eigs, vecs) = herm_eigen(&qw)?;
    let lam_max = eigs.last().copied().unwrap_or(0.0).max(0.0);
    let cut = tol::PSD_TOL * lam_max;
    for &e in &eigs {
        if e < -cut.max(tol::PSD_TOL) {
            return Err(Error::Indefinite {
                pivot: e,
                index: 0,
            });
        }
    }

    // W = V_r Lambda_r^{-1/2} spans the range with Q_w-orthonormal columns
    let kept: Vec<usize> = (0..eigs.len()).filter(|&i| eigs[i] > cut).collect();
    let n = qw.rows();
    let qj = qw.block(0, n, jp * c, jp * c + c);
    let qj = match v {
        // compress to the ray: q_J v / |v|
        Some(v) => {
            let vn: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if vn == 0.0 {
                return Err(Error::InvalidInput("direction vector is zero".into()));
            }
            let mut col = DenseMatrix::zeros(n, 1);
            for r in 0..n {
                col[(r, 0)] = (0..c).map(|s| qj[(r, s)] * v[s]).sum::<Complex64>() / vn;
            }
            col
        }
        None => qj,
    };

    // B = W^H q_J, then the pencil top is lambda_max(B^H B)
    let mut b = DenseMatrix::zeros(kept.len(), qj.cols());
    for (row, &ei) in kept.iter().enumerate() {
        let scale = eigs[ei].sqrt().recip();
        for col in 0..qj.cols() {
            let mut acc = Complex64::ZERO;
            for r in 0..n {
                acc += vecs[(r, ei)].conj() * qj[(r, col)];
            }
            b[(row, col)] = scale * acc;
        }
    }
    let small = b.adjoint().mul(&b);
    let value = crate::linalg::herm_max_eig(&small)?.max(0.0).sqrt();

    let qjj = match op.block(j, j) {
        Some(b) => b.clone(),
        None => DenseMatrix::zeros(c, c),
    };
    let column_bound = match v {
        Some(v) => {
            let vn2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            let qv = block_apply(&qjj, v);
            let num: f64 = v.iter().zip(&qv).map(|(a, b)| (a.conj() * b).re).sum();
            (num.max(0.0) / vn2).sqrt()
        }
        None => crate::linalg::herm_max_eig(&qjj)?.max(0.0).sqrt(),
    };
    Ok(CminReport {
        value,
        column_bound,
        window_bound: lam_max.sqrt(),
    })
}

/// Ambient description of a stored operator: either the store is the whole
/// kernel, or it is the restriction to [0, R]^d of a kernel whose blocks
/// are bounded by `norm_estimate`.
#[derive(Clone, Copy, Debug)]
pub struct KernelSpec {
    pub truncation_radius: Option<u32>,
    pub norm_estimate: f64,
}

impl KernelSpec {
    /// The stored support is everything.
    pub fn exact() -> Self {
        KernelSpec {
            truncation_radius: None,
            norm_estimate: 0.0,
        }
    }

    /// The store is a truncation at radius `r`; the entry bound is read off
    /// the largest stored block.
    pub fn truncated(op: &BlockOperator, r: u32) -> Self {
        let mut norm_estimate = 0.0f64;
        for k in op.column_indices() {
            for (_, b) in op.column(k) {
                norm_estimate = norm_estimate.max(b.max_abs());
            }
        }
        KernelSpec {
            truncation_radius: Some(r),
            norm_estimate,
        }
    }

    /// Bound on the kernel mass outside the stored box, per matrix entry,
    /// at points whose coordinates all have modulus <= rho < 1:
    /// sum over index pairs not both in the box of rho^(|I| + |K|).
    pub fn tail_bound(&self, d: usize, points: &[Vec<Complex64>]) -> Result<f64> {
        let Some(r) = self.truncation_radius else {
            return Ok(0.0);
        };
        let mut rho = 0.0f64;
        for p in points {
            for z in p {
                rho = rho.max(z.norm());
            }
        }
        if rho >= 1.0 {
            return Err(Error::InvalidInput(format!(
                "tail control needs points strictly inside the unit polydisk, \
                 largest coordinate modulus is {rho}"
            )));
        }
        let full = (1.0 - rho).recip().powi(2 * d as i32);
        let boxed = ((1.0 - rho.powi(r as i32 + 1)) / (1.0 - rho)).powi(2 * d as i32);
        Ok(self.norm_estimate * (full - boxed))
    }
}

/// K(z, w) over the stored support, a c x c matrix.
pub fn kernel_eval(
    op: &BlockOperator,
    z: &[Complex64],
    w: &[Complex64],
) -> Result<DenseMatrix> {
    if z.len() != op.d() || w.len() != op.d() {
        return Err(Error::DimensionMismatch(format!(
            "points need {} coordinates",
            op.d()
        )));
    }
    let c = op.c();
    let mut acc = DenseMatrix::zeros(c, c);
    for k in op.column_indices() {
        let wk = monomial(w, k).conj();
        if wk == Complex64::ZERO {
            continue;
        }
        for (i, block) in op.column(k) {
            let zi = monomial(z, i);
            if zi == Complex64::ZERO {
                continue;
            }
            let s = zi * wk;
            for r in 0..c {
                for t in 0..c {
                    acc[(r, t)] += s * block[(r, t)];
                }
            }
        }
    }
    Ok(acc)
}

/// Kernel value at a point pair inside the open polydisk, with the
/// certified bound on what the truncation cut away.
pub fn kernel_eval_with_tail(
    op: &BlockOperator,
    spec: &KernelSpec,
    z: &[Complex64],
    w: &[Complex64],
) -> Result<(DenseMatrix, f64)> {
    let points = [z.to_vec(), w.to_vec()];
    polydisk_radius(op.d(), &points)?;
    let tail = spec.tail_bound(op.d(), &points)?;
    Ok((kernel_eval(op, z, w)?, tail))
}

#[derive(Clone, Debug)]
pub struct PositivityReport {
    pub ok: bool,
    pub min_eig: f64,
    /// Spectral slack granted for kernel mass outside the stored box.
    pub tail: f64,
}

/// Samples the kernel on a finite point set and checks the block Gram
/// matrix for positivity, up to the declared truncation tail.
pub fn kernel_positivity_sample(
    op: &BlockOperator,
    spec: &KernelSpec,
    points: &[Vec<Complex64>],
    tolerance: f64,
) -> Result<PositivityReport> {
    if points.is_empty() {
        return Err(Error::InvalidInput("positivity check needs points".into()));
    }
    polydisk_radius(op.d(), points)?;
    let c = op.c();
    let n = points.len();
    let entry_tail = spec.tail_bound(op.d(), points)?;
    let mut g = DenseMatrix::zeros(n * c, n * c);
    for (i, zi) in points.iter().enumerate() {
        for (j, zj) in points.iter().enumerate() {
            let block = kernel_eval(op, zi, zj)?;
            g.set_block(i * c, j * c, &block);
        }
    }
    let g = g.hermitize();
    let (eigs, _) = herm_eigen(&g)?;
    let min_eig = eigs.first().copied().unwrap_or(0.0);
    // entrywise tail lifts to the spectrum through the Frobenius bound
    let tail = entry_tail * (n * c) as f64;
    Ok(PositivityReport {
        ok: min_eig >= -(tolerance + tail),
        min_eig,
        tail,
    })
}

#[derive(Clone, Debug)]
pub struct DensityReport {
    /// Distance from the kernel section at the target to the span of the
    /// basis sections.
    pub error: f64,
    pub coefficients: Vec<Complex64>,
}

/// Projects the kernel section K(., w) v onto the span of the given
/// sections and reports the projection coefficients and the residual
/// distance. The normal equations are regularized by a relative shift, so
/// rank-deficient spans are fine.
pub fn density_projection(
    op: &BlockOperator,
    basis: &[(MultiIndex, Vec<Complex64>)],
    w: &[Complex64],
    v: &[Complex64],
) -> Result<DensityReport> {
    check_direction(op, v)?;
    polydisk_radius(op.d(), std::slice::from_ref(&w.to_vec()))?;
    if basis.is_empty() {
        return Err(Error::InvalidInput("projection needs a basis".into()));
    }
    let g = gram_matrix(op, basis)?;
    let (eigs, _) = herm_eigen(&g)?;
    let shift = tol::TIKHONOV * eigs.last().copied().unwrap_or(0.0).max(1.0);

    // beta_l = (phi_l, K_w v) through the reproducing identity
    let mut beta = Vec::with_capacity(basis.len());
    for (jl, vl) in basis {
        let fl = phi(op, jl, vl)?;
        let at_w = fl.eval(w)?;
        let b: Complex64 = at_w.iter().zip(v).map(|(f, vs)| f * vs.conj()).sum();
        beta.push(b);
    }
    let beta_conj: Vec<Complex64> = beta.iter().map(|z| z.conj()).collect();
    let x = herm_solve_shifted(&g, shift, &beta_conj)?;

    // |K_w v|^2 = v^H K(w, w) v
    let kww = kernel_eval(op, w, w)?;
    let kv = block_apply(&kww, v);
    let target_sq: f64 = v.iter().zip(&kv).map(|(a, b)| (a.conj() * b).re).sum();

    let cross: Complex64 = x.iter().zip(&beta).map(|(xk, bk)| xk * bk).sum();
    let mut quad = Complex64::ZERO;
    for (l, xl) in x.iter().enumerate() {
        for (k, xk) in x.iter().enumerate() {
            quad += xl.conj() * g[(l, k)] * xk;
        }
    }
    let err_sq = (target_sq - 2.0 * cross.re + quad.re).max(0.0);
    Ok(DensityReport {
        error: err_sq.sqrt(),
        coefficients: x,
    })
}

#[derive(Clone, Debug)]
pub struct OnbSystem {
    pub functions: Vec<PolyFunction>,
    /// Column j holds the coordinates of functions[j] over the input basis.
    pub coordinates: DenseMatrix,
    /// Residual norm each kept member had before normalization.
    pub norms: Vec<f64>,
    pub dropped: usize,
}

/// Orthonormalizes kernel sections by modified Gram-Schmidt in the metric
/// of the space. Members whose residual falls below a relative floor are
/// dropped, so linearly dependent inputs shrink the system instead of
/// poisoning it.
pub fn onb_polynomials(
    op: &BlockOperator,
    basis: &[(MultiIndex, Vec<Complex64>)],
) -> Result<OnbSystem> {
    if basis.is_empty() {
        return Err(Error::InvalidInput("orthonormalization needs a basis".into()));
    }
    let l = basis.len();
    let g = gram_matrix(op, basis)?;
    let inner = |x: &[Complex64], y: &[Complex64]| -> Complex64 {
        // (sum x_k phi_k, sum y_l phi_l) = y^H G x
        let mut acc = Complex64::ZERO;
        for (row, yl) in y.iter().enumerate() {
            let mut gx = Complex64::ZERO;
            for (col, xk) in x.iter().enumerate() {
                gx += g[(row, col)] * xk;
            }
            acc += yl.conj() * gx;
        }
        acc
    };
    let floor = (0..l)
        .map(|k| g[(k, k)].re.max(0.0).sqrt())
        .fold(0.0f64, f64::max)
        * tol::GS_TOL;

    let mut kept: Vec<Vec<Complex64>> = Vec::new();
    let mut norms = Vec::new();
    let mut dropped = 0usize;
    for k in 0..l {
        let mut x = vec![Complex64::ZERO; l];
        x[k] = Complex64::ONE;
        // two passes keep the system orthonormal even for nearly dependent
        // inputs
        for _ in 0..2 {
            for q in &kept {
                let p = inner(&x, q);
                for (xi, qi) in x.iter_mut().zip(q) {
                    *xi -= p * qi;
                }
            }
        }
        let norm = inner(&x, &x).re.max(0.0).sqrt();
        if norm <= floor {
            dropped += 1;
            continue;
        }
        for xi in &mut x {
            *xi /= norm;
        }
        kept.push(x);
        norms.push(norm);
    }

    let mut coordinates = DenseMatrix::zeros(l, kept.len());
    let mut functions = Vec::with_capacity(kept.len());
    for (j, x) in kept.iter().enumerate() {
        let mut f = PolyFunction::zero(op.d(), op.c());
        for (k, xk) in x.iter().enumerate() {
            if *xk == Complex64::ZERO {
                continue;
            }
            let (jk, vk) = &basis[k];
            f.add_scaled(&phi(op, jk, vk)?, *xk);
            coordinates[(k, j)] = *xk;
        }
        functions.push(f);
    }
    Ok(OnbSystem {
        functions,
        coordinates,
        norms,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DenseMatrix;

    fn mi(coords: &[u32]) -> MultiIndex {
        MultiIndex::new(coords)
    }

    fn one() -> Vec<Complex64> {
        vec![Complex64::ONE]
    }

    /// Identity operator on [0, m], d = 1, c = 1: the monomial kernel
    /// truncated to degrees 0..=m.
    fn identity_op(m: u32) -> BlockOperator {
        BlockOperator::from_upper(
            1,
            1,
            (0..=m).map(|k| {
                (
                    mi(&[k]),
                    mi(&[k]),
                    DenseMatrix::from_real_rows(&[&[1.0]]),
                )
            }),
        )
        .unwrap()
    }

    /// Tridiagonal operator on [0, m]: 1.25 on the diagonal, 0.5 off it.
    fn band_op(m: u32) -> BlockOperator {
        let mut entries = Vec::new();
        for k in 0..=m {
            entries.push((mi(&[k]), mi(&[k]), DenseMatrix::from_real_rows(&[&[1.25]])));
            if k > 0 {
                entries.push((
                    mi(&[k - 1]),
                    mi(&[k]),
                    DenseMatrix::from_real_rows(&[&[0.5]]),
                ));
            }
        }
        BlockOperator::from_upper(1, 1, entries).unwrap()
    }

    #[test]
    fn sections_of_the_identity_are_monomials() {
        let op = identity_op(5);
        let f = phi(&op, &mi(&[2]), &one()).unwrap();
        assert_eq!(f.support().count(), 1);
        assert_eq!(f.coeff(&mi(&[2])), Some(&[Complex64::ONE][..]));
        let v = f.eval(&[Complex64::new(0.5, 0.0)]).unwrap();
        assert!((v[0] - Complex64::new(0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn sections_of_a_band_pick_up_the_column() {
        let op = band_op(4);
        let f = phi(&op, &mi(&[1]), &one()).unwrap();
        let want = [(0u32, 0.5), (1, 1.25), (2, 0.5)];
        assert_eq!(f.support().count(), want.len());
        for (k, x) in want {
            assert_eq!(f.coeff(&mi(&[k])), Some(&[Complex64::new(x, 0.0)][..]));
        }
    }

    #[test]
    fn gram_reads_the_operator_entry() {
        let op = band_op(4);
        let g = gram(&op, &mi(&[1]), &one(), &mi(&[2]), &one()).unwrap();
        assert_eq!(g, Complex64::new(0.5, 0.0));
        let g = gram(&op, &mi(&[1]), &one(), &mi(&[3]), &one()).unwrap();
        assert_eq!(g, Complex64::ZERO);
        // hermitian pairing
        let a = gram(&op, &mi(&[2]), &one(), &mi(&[1]), &one()).unwrap();
        assert_eq!(a, g.conj() + Complex64::new(0.5, 0.0));
    }

    #[test]
    fn functional_applies_with_the_factorial_weight() {
        let op = identity_op(5);
        let f = phi(&op, &mi(&[3]), &one()).unwrap();
        let lv = apply_functional(&f, &mi(&[3]));
        assert_eq!(lv, vec![Complex64::new(6.0, 0.0)]);
        assert_eq!(apply_functional(&f, &mi(&[2])), vec![Complex64::ZERO]);
    }

    #[test]
    fn functional_norm_meets_its_sampled_bound() {
        let op = identity_op(5);
        let rep = functional_norm(&op, &mi(&[3])).unwrap();
        assert!((rep.value - 6.0).abs() < 1e-12);
        assert!((rep.sampled_lower - rep.value).abs() < 1e-10);

        let op = band_op(6);
        let rep = functional_norm(&op, &mi(&[2])).unwrap();
        assert!((rep.value - 2.0 * 1.25f64.sqrt()).abs() < 1e-12);
        assert!(rep.sampled_lower <= rep.value + 1e-12);
        assert!((rep.sampled_lower - rep.value).abs() < 1e-10);
    }

    #[test]
    fn cmin_of_the_identity_is_one() {
        let op = identity_op(6);
        let rep = cmin(&op, &mi(&[3]), 6, None).unwrap();
        assert!((rep.value - 1.0).abs() < 1e-8);
        assert!((rep.column_bound - 1.0).abs() < 1e-12);
        assert!((rep.window_bound - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cmin_pencil_matches_the_column_bound_inside_the_window() {
        let op = band_op(8);
        let rep = cmin(&op, &mi(&[4]), 8, None).unwrap();
        assert!(
            (rep.value - 1.25f64.sqrt()).abs() < 1e-8,
            "value {} vs {}",
            rep.value,
            1.25f64.sqrt()
        );
        assert!((rep.column_bound - 1.25f64.sqrt()).abs() < 1e-12);
        assert!(rep.value <= rep.window_bound + 1e-8);
        // directions pass through the quadratic form
        let rep = cmin(&op, &mi(&[4]), 8, Some(&one())).unwrap();
        assert!((rep.value - 1.25f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn cmin_of_a_lone_column_is_its_norm() {
        let op = BlockOperator::from_upper(
            1,
            1,
            vec![(mi(&[2]), mi(&[2]), DenseMatrix::from_real_rows(&[&[4.0]]))],
        )
        .unwrap();
        let rep = cmin(&op, &mi(&[2]), 4, None).unwrap();
        assert!((rep.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn cmin_rejects_indices_outside_the_window() {
        let op = identity_op(6);
        assert!(matches!(
            cmin(&op, &mi(&[9]), 6, None),
            Err(Error::WindowTooSmall(_))
        ));
        // the index fits but its column support does not
        let op = band_op(12);
        assert!(matches!(
            cmin(&op, &mi(&[8]), 8, None),
            Err(Error::WindowTooSmall(_))
        ));
        assert!(cmin(&op, &mi(&[7]), 8, None).is_ok());
    }

    #[test]
    fn span_functional_matches_the_assembled_polynomial() {
        let op = band_op(5);
        let span = vec![
            (mi(&[1]), vec![Complex64::new(1.0, 0.5)]),
            (mi(&[3]), vec![Complex64::new(-0.25, 2.0)]),
        ];
        let mut f = PolyFunction::zero(1, 1);
        for (jm, vm) in &span {
            f.add_scaled(&phi(&op, jm, vm).unwrap(), Complex64::ONE);
        }
        for j in 0..=5 {
            let a = apply_span(&op, &span, &mi(&[j])).unwrap();
            let b = apply_functional(&f, &mi(&[j]));
            assert_eq!(a, b, "functional at ({j})");
        }
    }

    #[test]
    fn kernel_matches_the_geometric_sum() {
        let op = identity_op(50);
        let z = vec![Complex64::new(0.5, 0.0)];
        let k = kernel_eval(&op, &z, &z).unwrap();
        // sum over 0..=50 of 0.25^k, effectively 1 / (1 - 0.25)
        let want = (1.0 - 0.25f64.powi(51)) / 0.75;
        assert!((k[(0, 0)].re - want).abs() < 1e-14);
    }

    #[test]
    fn tail_bound_controls_the_truncation() {
        let op = identity_op(10);
        let spec = KernelSpec::truncated(&op, 10);
        let pts = vec![vec![Complex64::new(0.5, 0.0)]];
        let tail = spec.tail_bound(1, &pts).unwrap();
        // true tail at rho = 0.5: sum_{(i,k) not both <= 10} 0.5^{i+k}
        let full = 4.0;
        let boxed = ((1.0 - 0.5f64.powi(11)) / 0.5).powi(2);
        assert!((tail - (full - boxed)).abs() < 1e-12);
        // exact kernels have no tail
        assert_eq!(KernelSpec::exact().tail_bound(1, &pts).unwrap(), 0.0);
        // points on the boundary are rejected
        let bad = vec![vec![Complex64::ONE]];
        assert!(spec.tail_bound(1, &bad).is_err());
    }

    #[test]
    fn sampled_kernel_grams_are_positive() {
        let op = band_op(8);
        let pts: Vec<Vec<Complex64>> = (0..5)
            .map(|k| vec![Complex64::new(0.0, 0.6 * k as f64).exp() * 0.55])
            .collect();
        let rep = kernel_positivity_sample(&op, &KernelSpec::exact(), &pts, 1e-8).unwrap();
        assert!(rep.ok, "min eig {:e}", rep.min_eig);
        assert_eq!(rep.tail, 0.0);
        let spec = KernelSpec::truncated(&op, 8);
        let rep = kernel_positivity_sample(&op, &spec, &pts, 1e-8).unwrap();
        assert!(rep.ok);
        assert!(rep.tail > 0.0);
    }

    #[test]
    fn projection_error_is_the_geometric_tail() {
        let op = identity_op(5);
        let basis: Vec<_> = (0..3).map(|k| (mi(&[k]), one())).collect();
        let w = vec![Complex64::new(0.5, 0.0)];
        let rep = density_projection(&op, &basis, &w, &one()).unwrap();
        // distance^2 from K_w to span(1, z, z^2) is sum_{k=3}^5 0.25^k
        let want: f64 = (3..=5).map(|k| 0.25f64.powi(k)).sum();
        assert!(
            (rep.error.powi(2) - want).abs() < 1e-10,
            "err^2 {} want {}",
            rep.error.powi(2),
            want
        );
        // projection coefficients reproduce the kernel section values
        for (k, x) in rep.coefficients.iter().enumerate() {
            assert!((x - Complex64::new(0.5f64.powi(k as i32), 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn projection_error_shrinks_with_the_basis() {
        let op = band_op(6);
        let w = vec![Complex64::new(0.3, 0.2)];
        let mut last = f64::INFINITY;
        for l in 1..=6 {
            let basis: Vec<_> = (0..l).map(|k| (mi(&[k]), one())).collect();
            let rep = density_projection(&op, &basis, &w, &one()).unwrap();
            assert!(rep.error <= last + 1e-12, "basis {l}: {} > {last}", rep.error);
            last = rep.error;
        }
    }

    #[test]
    fn orthonormalization_returns_an_orthonormal_system() {
        let op = band_op(6);
        let basis: Vec<_> = (0..4).map(|k| (mi(&[k]), one())).collect();
        let sys = onb_polynomials(&op, &basis).unwrap();
        assert_eq!(sys.functions.len(), 4);
        assert_eq!(sys.dropped, 0);
        let g = gram_matrix(&op, &basis).unwrap();
        // Gram of the output system through the coordinates
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = Complex64::ZERO;
                for r in 0..4 {
                    for s in 0..4 {
                        acc += sys.coordinates[(r, j)].conj()
                            * g[(r, s)]
                            * sys.coordinates[(s, i)];
                    }
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (acc - Complex64::new(want, 0.0)).norm() < 1e-10,
                    "entry ({i},{j}) = {acc}"
                );
            }
        }
    }

    #[test]
    fn orthonormalization_drops_dependent_members() {
        let op = identity_op(4);
        let basis = vec![
            (mi(&[0]), one()),
            (mi(&[1]), one()),
            (mi(&[1]), one()),
        ];
        let sys = onb_polynomials(&op, &basis).unwrap();
        assert_eq!(sys.functions.len(), 2);
        assert_eq!(sys.dropped, 1);
        // identity metric: the output functions are the monomials
        assert_eq!(
            sys.functions[0].coeff(&mi(&[0])),
            Some(&[Complex64::ONE][..])
        );
    }

    #[test]
    fn polynomials_combine_linearly() {
        let op = band_op(3);
        let mut f = phi(&op, &mi(&[1]), &one()).unwrap();
        let g = phi(&op, &mi(&[1]), &one()).unwrap();
        f.add_scaled(&g, -Complex64::ONE);
        assert!(f.is_zero());
    }
}
