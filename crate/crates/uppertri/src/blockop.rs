//! Hermitian block operators over the index lattice, stored one column at a
//! time, together with the truncation machinery: extract growing window
//! sections, factor each from the last entry, and watch the factor entries
//! stabilize.
//!
//! An operator here is a hermitian array Q = (Q_{I,J}) of c x c blocks over
//! multi-indices, with finitely many nonzero blocks. Only the upper
//! representative of each block pair is given at construction; the mirror is
//! stored explicitly so that window extraction is a plain lookup and the
//! extracted section is hermitian to the last bit.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::factor::{self, FactorResult};
use crate::index::{MultiIndex, Window};
use crate::matrix::{psd_check, DenseMatrix};
use crate::tol;

/// Hermitian block operator with finite support. `columns[K][I]` holds the
/// block Q_{I,K}; both orientations of each pair are present.
#[derive(Clone, Debug)]
pub struct BlockOperator {
    d: usize,
    c: usize,
    columns: BTreeMap<MultiIndex, BTreeMap<MultiIndex, DenseMatrix>>,
}

impl BlockOperator {
    /// Builds the operator from upper representatives: each entry gives
    /// Q_{I,K} with I <= K in graded lexicographic order. Diagonal blocks
    /// must be hermitian; they are hermitized on the way in so extracted
    /// sections are exactly hermitian. The mirror Q_{K,I} = Q_{I,K}^* is
    /// filled in automatically.
    pub fn from_upper(
        d: usize,
        c: usize,
        entries: impl IntoIterator<Item = (MultiIndex, MultiIndex, DenseMatrix)>,
    ) -> Result<Self> {
        if d == 0 || c == 0 {
            return Err(Error::InvalidInput("operator needs d >= 1 and c >= 1".into()));
        }
        let mut columns: BTreeMap<MultiIndex, BTreeMap<MultiIndex, DenseMatrix>> = BTreeMap::new();
        for (i, k, block) in entries {
            if i.d() != d || k.d() != d {
                return Err(Error::DimensionMismatch(format!(
                    "index dimension of ({i:?}, {k:?}) is not {d}"
                )));
            }
            if block.rows() != c || block.cols() != c {
                return Err(Error::DimensionMismatch(format!(
                    "block at ({i:?}, {k:?}) is {}x{}, expected {c}x{c}",
                    block.rows(),
                    block.cols()
                )));
            }
            if !block.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "block at ({i:?}, {k:?}) has non-finite entries"
                )));
            }
            if i > k {
                return Err(Error::InvalidInput(format!(
                    "entry ({i:?}, {k:?}) is not an upper representative"
                )));
            }
            let stored = if i == k {
                block.require_hermitian().map_err(|e| {
                    Error::InvalidInput(format!("diagonal block at {i:?} is not hermitian: {e}"))
                })?;
                block.hermitize()
            } else {
                block
            };
            let mirror = (i != k).then(|| stored.adjoint());
            if columns
                .entry(k.clone())
                .or_default()
                .insert(i.clone(), stored)
                .is_some()
            {
                return Err(Error::InvalidInput(format!(
                    "duplicate entry at ({i:?}, {k:?})"
                )));
            }
            if let Some(m) = mirror {
                columns.entry(i).or_default().insert(k, m);
            }
        }
        Ok(BlockOperator { d, c, columns })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn c(&self) -> usize {
        self.c
    }

    /// Stored block at (I, K), if any.
    pub fn block(&self, i: &MultiIndex, k: &MultiIndex) -> Option<&DenseMatrix> {
        self.columns.get(k).and_then(|col| col.get(i))
    }

    /// Column indices with at least one stored block, in graded-lex order.
    pub fn column_indices(&self) -> impl Iterator<Item = &MultiIndex> {
        self.columns.keys()
    }

    /// Stored rows of one column, in graded-lex order.
    pub fn column(&self, k: &MultiIndex) -> impl Iterator<Item = (&MultiIndex, &DenseMatrix)> {
        self.columns.get(k).into_iter().flat_map(|col| col.iter())
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Smallest window bound containing every stored index.
    pub fn support_bound(&self) -> u32 {
        self.columns
            .iter()
            .flat_map(|(k, col)| col.keys().chain(std::iter::once(k)))
            .flat_map(|i| i.coords().iter().copied())
            .max()
            .unwrap_or(0)
    }

    /// Dense hermitian section on the window, in graded-lex-by-block layout:
    /// matrix row i*c+s is component s of window position i. Stored blocks
    /// outside the window do not appear.
    pub fn section(&self, w: &Window) -> Result<DenseMatrix> {
        if w.d() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "window dimension {} vs operator dimension {}",
                w.d(),
                self.d
            )));
        }
        let c = self.c;
        let mut m = DenseMatrix::zeros(w.len() * c, w.len() * c);
        for (k, col) in &self.columns {
            let Some(kp) = w.position(k) else { continue };
            for (i, block) in col {
                let Some(ip) = w.position(i) else { continue };
                m.set_block(ip * c, kp * c, block);
            }
        }
        Ok(m)
    }

    /// Per-column and per-row support profile of the stored nonzero blocks.
    pub fn support_profile(&self) -> SupportProfile {
        let mut per_column = BTreeMap::new();
        let mut per_row: BTreeMap<MultiIndex, u64> = BTreeMap::new();
        for (k, col) in &self.columns {
            let mut max_rank: Option<u64> = None;
            for (i, block) in col {
                if block.max_abs() == 0.0 {
                    continue;
                }
                let ir = i.graded_rank();
                max_rank = Some(max_rank.map_or(ir, |m| m.max(ir)));
                let kr = k.graded_rank();
                per_row
                    .entry(i.clone())
                    .and_modify(|m| *m = (*m).max(kr))
                    .or_insert(kr);
            }
            if let Some(m) = max_rank {
                per_column.insert(k.clone(), m);
            }
        }
        SupportProfile { per_column, per_row }
    }

    /// Every stored operator has finite columns by construction; the report
    /// exists for the sake of the profile and for symmetry with rule-based
    /// sources.
    pub fn finite_column_check(&self) -> FiniteColumnReport {
        FiniteColumnReport {
            ok: true,
            profile: self.support_profile(),
        }
    }
}

/// Support radii: for each column K the largest graded-lex rank of a nonzero
/// row, and for each row I the largest graded-lex rank of a nonzero column.
#[derive(Clone, Debug)]
pub struct SupportProfile {
    pub per_column: BTreeMap<MultiIndex, u64>,
    pub per_row: BTreeMap<MultiIndex, u64>,
}

#[derive(Clone, Debug)]
pub struct FiniteColumnReport {
    pub ok: bool,
    pub profile: SupportProfile,
}

/// Pattern-admissible block factor: `columns[K][I]` holds U_{I,K} with
/// I <= K componentwise. Not hermitian, not mirrored.
#[derive(Clone, Debug)]
pub struct UpperFactor {
    d: usize,
    c: usize,
    columns: BTreeMap<MultiIndex, BTreeMap<MultiIndex, DenseMatrix>>,
}

impl UpperFactor {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn block(&self, i: &MultiIndex, k: &MultiIndex) -> Option<&DenseMatrix> {
        self.columns.get(k).and_then(|col| col.get(i))
    }

    /// Dense square layout on the window. Because each within-block diagonal
    /// is upper triangular with positive diagonal and graded-lex refines the
    /// componentwise order, the result is upper triangular in the canonical
    /// gauge.
    pub fn section(&self, w: &Window) -> Result<DenseMatrix> {
        if w.d() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "window dimension {} vs factor dimension {}",
                w.d(),
                self.d
            )));
        }
        let c = self.c;
        let mut m = DenseMatrix::zeros(w.len() * c, w.len() * c);
        for (k, col) in &self.columns {
            let Some(kp) = w.position(k) else { continue };
            for (i, block) in col {
                let Some(ip) = w.position(i) else { continue };
                m.set_block(ip * c, kp * c, block);
            }
        }
        Ok(m)
    }
}

/// Row support law for generated factors, relative to the column index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupportLaw {
    /// Rows I with I <= K and K_j - I_j <= b in every coordinate. Band(0)
    /// keeps only the diagonal.
    Band(u32),
}

impl SupportLaw {
    fn admits(&self, i: &MultiIndex, k: &MultiIndex) -> bool {
        match *self {
            SupportLaw::Band(b) => i
                .coords()
                .iter()
                .zip(k.coords())
                .all(|(&ic, &kc)| ic <= kc && kc - ic <= b),
        }
    }
}

/// A generated instance: the planted factor U and Q = U U^* assembled
/// exactly on the window, stored as a block operator.
#[derive(Clone, Debug)]
pub struct GeneratedInstance {
    pub u: UpperFactor,
    pub q: BlockOperator,
}

/// Draws a pattern-admissible upper factor U on the window [0,n]^d with the
/// given row support law and assembles Q = U U^*.
///
/// Within-column blocks: the diagonal block U_{K,K} is upper triangular with
/// real diagonal drawn from [0.5, 1.5), so the dense window section of U is
/// upper triangular in the canonical gauge and the round trip through
/// elimination recovers it exactly. Off-diagonal blocks are dense complex.
///
/// The draw is fully determined by `seed`: a fixed-algorithm stream cipher
/// generator is consumed in graded-lex column order, graded-lex row order
/// within a column, row-major within a block, real part before imaginary.
pub fn gen_upper(
    d: usize,
    c: usize,
    n: u32,
    law: SupportLaw,
    seed: u64,
) -> Result<GeneratedInstance> {
    if c == 0 {
        return Err(Error::InvalidInput("block size c must be >= 1".into()));
    }
    let w = Window::new(d, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = |rng: &mut ChaCha8Rng| rng.random::<f64>() - 0.5;

    let mut columns: BTreeMap<MultiIndex, BTreeMap<MultiIndex, DenseMatrix>> = BTreeMap::new();
    for k in w.indices() {
        let mut col = BTreeMap::new();
        for i in w.indices() {
            if !law.admits(i, k) {
                continue;
            }
            let block = if i == k {
                DenseMatrix::from_fn(c, c, |r, s| match r.cmp(&s) {
                    std::cmp::Ordering::Less => Complex64::new(unit(&mut rng), unit(&mut rng)),
                    std::cmp::Ordering::Equal => Complex64::new(0.5 + rng.random::<f64>(), 0.0),
                    std::cmp::Ordering::Greater => Complex64::ZERO,
                })
            } else {
                DenseMatrix::from_fn(c, c, |_, _| Complex64::new(unit(&mut rng), unit(&mut rng)))
            };
            col.insert(i.clone(), block);
        }
        columns.insert(k.clone(), col);
    }
    let u = UpperFactor { d, c, columns };

    // Q_{I,J} = sum over columns K >= I, K >= J of U_{I,K} U_{J,K}^*,
    // assembled for upper pairs only; the mirror is implied.
    let mut entries = Vec::new();
    for (jp, j) in w.indices().iter().enumerate() {
        for i in &w.indices()[..=jp] {
            let mut acc = DenseMatrix::zeros(c, c);
            let mut any = false;
            for col in u.columns.values() {
                let (Some(ui), Some(uj)) = (col.get(i), col.get(j)) else {
                    continue;
                };
                acc = acc.add(&ui.mul(&uj.adjoint()));
                any = true;
            }
            if any && acc.max_abs() > 0.0 {
                entries.push((i.clone(), j.clone(), acc));
            }
        }
    }
    let q = BlockOperator::from_upper(d, c, entries)?;
    Ok(GeneratedInstance { u, q })
}

/// Anything that can produce dense hermitian sections on growing windows.
pub trait SectionSource {
    fn d(&self) -> usize;
    fn c(&self) -> usize;
    fn section(&self, w: &Window) -> Result<DenseMatrix>;
}

impl SectionSource for BlockOperator {
    fn d(&self) -> usize {
        self.d
    }

    fn c(&self) -> usize {
        self.c
    }

    fn section(&self, w: &Window) -> Result<DenseMatrix> {
        BlockOperator::section(self, w)
    }
}

/// One factorization ladder: for each window bound in the schedule, the max
/// entrywise change of the factor on the comparison window since the
/// previous step, and the factorization defect of the current factor
/// restricted to the comparison window.
#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub schedule: Vec<u32>,
    /// None for the first step, which has nothing to compare against.
    pub deltas: Vec<Option<f64>>,
    pub residuals: Vec<f64>,
    pub converged: bool,
}

impl ConvergenceReport {
    pub fn last_delta(&self) -> Option<f64> {
        self.deltas.last().copied().flatten()
    }
}

/// Factors sections on the scheduled windows from the last entry and records
/// entrywise deltas of the factor on the fixed comparison window [0,
/// compare_n], plus the factorization defect there. d = 1 only: on higher
/// dimensional windows square factors can fail to exist in the pattern, so
/// plain truncation is not the right object to iterate.
pub fn truncation_study(
    src: &dyn SectionSource,
    schedule: &[u32],
    compare_n: u32,
    conv_tol: f64,
) -> Result<ConvergenceReport> {
    if src.d() != 1 {
        return Err(Error::InvalidInput(format!(
            "truncation study runs on d = 1 sources, got d = {}",
            src.d()
        )));
    }
    if schedule.is_empty() {
        return Err(Error::InvalidInput("empty truncation schedule".into()));
    }
    if !schedule.windows(2).all(|p| p[0] < p[1]) {
        return Err(Error::InvalidInput(
            "truncation schedule must be strictly increasing".into(),
        ));
    }
    if compare_n > schedule[0] {
        return Err(Error::WindowTooSmall(format!(
            "comparison window bound {} exceeds the first scheduled bound {}",
            compare_n, schedule[0]
        )));
    }

    let c = src.c();
    let cw = (compare_n as usize + 1) * c;
    let mut prev: Option<DenseMatrix> = None;
    let mut deltas = Vec::with_capacity(schedule.len());
    let mut residuals = Vec::with_capacity(schedule.len());
    for &n in schedule {
        let w = Window::new(1, n)?;
        let p = src.section(&w)?;
        let u = factor::reverse_cholesky(&p, tol::PIVOT_TOL)?.factor;
        let ucw = u.block(0, cw, 0, cw);
        deltas.push(prev.as_ref().map(|q| ucw.sub(q).max_abs()));
        residuals.push(window_defect(&u, &p, cw));
        prev = Some(ucw);
    }
    let converged = deltas.last().copied().flatten().is_some_and(|d| d <= conv_tol);
    Ok(ConvergenceReport {
        schedule: schedule.to_vec(),
        deltas,
        residuals,
        converged,
    })
}

/// ||(U U^*) - P||_F restricted to the leading cw x cw block, with the
/// product taken over all of U's columns before restricting.
fn window_defect(u: &DenseMatrix, p: &DenseMatrix, cw: usize) -> f64 {
    let mut acc = 0.0f64;
    for i in 0..cw {
        for j in 0..cw {
            let mut s = Complex64::ZERO;
            for k in i.max(j)..u.cols() {
                s += u[(i, k)] * u[(j, k)].conj();
            }
            acc += (s - p[(i, j)]).norm_sqr();
        }
    }
    acc.sqrt()
}

/// Factors a finitely supported operator on the output window.
///
/// For d = 1 this grows windows geometrically (doubling from
/// max(8, out_n)) until the factor stops moving on the output window, then
/// returns the stabilized factor restricted to the output rows with every
/// column it touches, a rectangular upper slab. Because the operator is
/// finitely supported, growth past the support reproduces the factor
/// exactly and the deltas drop to zero.
///
/// For d >= 2 a square pattern factor need not exist, so the section is
/// factored by column augmentation with just enough fresh columns to hold
/// its rank.
pub fn factor_eventually_zero(
    op: &BlockOperator,
    out_n: u32,
    conv_tol: f64,
) -> Result<(FactorResult, ConvergenceReport)> {
    let c = op.c();
    let out_w = Window::new(op.d(), out_n)?;
    if op.d() >= 2 {
        let p = op.section(&out_w)?;
        let rank = psd_check(&p, tol::PSD_TOL)?.rank;
        let extra = rank.div_ceil(c);
        let res = factor::hotel_factor(&p, &out_w, c, extra)?;
        let ok = res.residual_fro <= conv_tol * (1.0 + p.frobenius_norm());
        let report = ConvergenceReport {
            schedule: vec![out_n],
            deltas: vec![None],
            residuals: vec![res.residual_fro],
            converged: ok,
        };
        return Ok((res, report));
    }

    let cw = (out_n as usize + 1) * c;
    let mut n = out_n.max(8);
    let mut schedule = Vec::new();
    let mut deltas: Vec<Option<f64>> = Vec::new();
    let mut residuals = Vec::new();
    let mut prev: Option<DenseMatrix> = None;
    let (u, p) = loop {
        let w = Window::new(1, n)?;
        let p = op.section(&w)?;
        let u = factor::reverse_cholesky(&p, tol::PIVOT_TOL)?.factor;
        let ucw = u.block(0, cw, 0, cw);
        let delta = prev.as_ref().map(|q| ucw.sub(q).max_abs());
        schedule.push(n);
        deltas.push(delta);
        residuals.push(window_defect(&u, &p, cw));
        prev = Some(ucw);
        if delta.is_some_and(|d| d <= conv_tol) {
            break (u, p);
        }
        if n >= tol::MAX_TRUNCATION_N {
            return Err(Error::Convergence {
                max_n: n as usize,
                last_delta: delta.unwrap_or(f64::INFINITY),
            });
        }
        n *= 2;
    };
    // keep every column the output rows touch; trailing all-zero columns go
    let mut col_end = cw;
    for k in (cw..u.cols()).rev() {
        if (0..cw).any(|i| u[(i, k)] != Complex64::ZERO) {
            col_end = k + 1;
            break;
        }
    }
    let slab = u.block(0, cw, 0, col_end);
    let residual_fro = slab
        .gram()
        .sub(&p.block(0, cw, 0, cw))
        .frobenius_norm();
    let rank = (0..cw).filter(|&j| u[(j, j)].re > 0.0).count();
    let result = FactorResult {
        factor: slab,
        residual_fro,
        rank,
        canonical: false,
    };
    let report = ConvergenceReport {
        schedule,
        deltas,
        residuals,
        converged: true,
    };
    Ok((result, report))
}
