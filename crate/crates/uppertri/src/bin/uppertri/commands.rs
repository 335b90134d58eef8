//! Subcommand implementations. Each returns the outputs and residuals for
//! the run report plus the exit code for answers that completed but came
//! back negative: a failed verification, an infeasible pattern, a ladder
//! that did not settle.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde_json::{json, Value};

use uppertri::blockop::{gen_upper, truncation_study, SectionSource, SupportLaw};
use uppertri::factor::{
    cholesky_ll, counterexample_instance, hotel_factor, poset_feasibility, reverse_cholesky,
    verify_factor,
};
use uppertri::index::{MultiIndex, Window};
use uppertri::matrix::{psd_check, DenseMatrix};
use uppertri::pattern::Pattern;
use uppertri::range::{douglas_constants, range_equal, tensornest_demo, DouglasBound};
use uppertri::rkhs::{
    cmin, density_projection, functional_norm, gram_matrix, onb_polynomials,
};
use uppertri::toeplitz::{
    bauer_factor, fejer_riesz, log_integrability, toeplitz_matrix, verify_toeplitz_factor,
};
use uppertri::{io, tol, Error, Result};

use crate::report::{self, ReportBuilder};
use crate::{Command, Method, PatternKind, RangeOp, RkhsOp, ToeplitzOp};

pub struct Outcome {
    pub outputs: Value,
    pub residuals: Value,
    pub exit: i32,
}

impl Outcome {
    fn ok(outputs: Value, residuals: Value) -> Self {
        Outcome {
            outputs,
            residuals,
            exit: 0,
        }
    }
}

pub fn run(cmd: &Command, seed: u64, rb: &mut ReportBuilder) -> Result<Outcome> {
    match cmd {
        Command::Gen { d, c, n, band, out } => run_gen(rb, seed, *d, *c, *n, *band, out.as_deref()),
        Command::Factor {
            method,
            input,
            pattern,
            d,
            n,
            extra_cols,
            out,
        } => run_factor(rb, *method, input, *pattern, *d, *n, *extra_cols, out.as_deref()),
        Command::Verify {
            factor,
            input,
            pattern,
            d,
            n,
            tol,
        } => run_verify(rb, factor, input, *pattern, *d, *n, *tol),
        Command::Converge {
            input,
            schedule,
            compare_n,
            tol,
            csv,
        } => run_converge(rb, input, schedule, *compare_n, *tol, csv.as_deref()),
        Command::Rkhs {
            op,
            input,
            j,
            window,
            basis,
            v,
            point,
        } => run_rkhs(
            rb,
            *op,
            input,
            j.as_deref(),
            *window,
            basis.as_deref(),
            v.as_deref(),
            point.as_deref(),
        ),
        Command::Toeplitz {
            op,
            symbol,
            n,
            factor,
            tol,
            grid,
            csv,
            out,
        } => run_toeplitz(
            rb,
            *op,
            symbol,
            *n,
            factor.as_deref(),
            *tol,
            *grid,
            csv.as_deref(),
            out.as_deref(),
        ),
        Command::Range {
            op,
            a,
            c,
            d,
            n,
            reference,
            extra_cols,
            tol,
        } => run_range(
            rb,
            *op,
            a,
            c.as_deref(),
            *d,
            *n,
            reference.as_deref(),
            *extra_cols,
            *tol,
        ),
        Command::DemoCounterexample => run_demo_counterexample(rb),
    }
}

// ---- shared plumbing ----

/// Reads an input file, folding its bytes into the report digest.
fn read_input(rb: &mut ReportBuilder, label: &str, path: &Path) -> Result<String> {
    let bytes = fs::read(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    rb.file(label, &bytes);
    String::from_utf8(bytes)
        .map_err(|_| Error::Format(format!("{} is not UTF-8", path.display())))
}

fn write_output(path: &Path, text: &str) -> Result<String> {
    fs::write(path, text)
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))?;
    Ok(path.display().to_string())
}

fn need<T>(opt: Option<T>, flag: &str, why: &str) -> Result<T> {
    opt.ok_or_else(|| Error::InvalidInput(format!("{why} needs {flag}")))
}

fn refuse<T>(opt: &Option<T>, flag: &str, ctx: &str) -> Result<()> {
    if opt.is_some() {
        return Err(Error::InvalidInput(format!("{flag} does not apply to {ctx}")));
    }
    Ok(())
}

fn parse_complex(s: &str) -> Result<Complex64> {
    let whole = s.trim();
    let complain =
        || Error::InvalidInput(format!("cannot read complex entry {whole:?}; use re or re:im"));
    let (re, im) = match whole.split_once(':') {
        Some((r, i)) => (r, Some(i)),
        None => (whole, None),
    };
    let re: f64 = re.trim().parse().map_err(|_| complain())?;
    let im: f64 = match im {
        Some(i) => i.trim().parse().map_err(|_| complain())?,
        None => 0.0,
    };
    Ok(Complex64::new(re, im))
}

fn parse_vector(s: &str) -> Result<Vec<Complex64>> {
    s.split(',').map(parse_complex).collect()
}

fn parse_multi_index(s: &str) -> Result<MultiIndex> {
    let coords = s
        .split(',')
        .map(|t| {
            t.trim().parse::<u32>().map_err(|_| {
                Error::InvalidInput(format!(
                    "cannot read multi-index {s:?}; use comma separated nonnegative coordinates"
                ))
            })
        })
        .collect::<Result<Vec<u32>>>()?;
    Ok(MultiIndex::new(&coords))
}

fn parse_index_list(s: &str) -> Result<Vec<MultiIndex>> {
    s.split(';').map(parse_multi_index).collect()
}

/// Expands index-only basis data over the standard block directions, in
/// index order and direction order within each index.
fn unit_basis(indices: &[MultiIndex], c: usize) -> Vec<(MultiIndex, Vec<Complex64>)> {
    let mut out = Vec::with_capacity(indices.len() * c);
    for j in indices {
        for s in 0..c {
            let mut v = vec![Complex64::ZERO; c];
            v[s] = Complex64::ONE;
            out.push((j.clone(), v));
        }
    }
    out
}

fn index_pairs(pairs: &[(MultiIndex, MultiIndex)]) -> Value {
    Value::Array(
        pairs
            .iter()
            .map(|(i, k)| json!([report::index(i), report::index(k)]))
            .collect(),
    )
}

/// 1-based positions of certificate pairs in the window enumeration.
fn position_pairs(pairs: &[(MultiIndex, MultiIndex)], w: &Window) -> Value {
    Value::Array(
        pairs
            .iter()
            .map(|(i, k)| {
                let pi = w.position(i).expect("certificate row lies in the window");
                let pk = w.position(k).expect("certificate column lies in the window");
                json!([pi + 1, pk + 1])
            })
            .collect(),
    )
}

fn delta_values(deltas: &[Option<f64>]) -> Value {
    Value::Array(deltas.iter().map(|d| report::opt_num(*d)).collect())
}

fn float_values(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| report::num(*x)).collect())
}

// ---- gen ----

fn run_gen(
    rb: &mut ReportBuilder,
    seed: u64,
    d: usize,
    c: usize,
    n: u32,
    band: u32,
    out: Option<&Path>,
) -> Result<Outcome> {
    rb.arg("d", d);
    rb.arg("c", c);
    rb.arg("n", n);
    rb.arg("band", band);
    let inst = gen_upper(d, c, n, SupportLaw::Band(band), seed)?;
    let doc = io::write_operator(&inst.q);
    let mut outputs = json!({
        "d": d,
        "c": c,
        "n": n,
        "band": band,
        "columns": inst.q.column_indices().count(),
    });
    match out {
        Some(path) => {
            outputs["written"] = Value::String(write_output(path, &doc)?);
        }
        None => {
            outputs["operator"] = serde_json::from_str(&doc)
                .expect("generated operator document is valid JSON");
        }
    }
    Ok(Outcome::ok(outputs, json!({})))
}

// ---- factor ----

/// The factorization target plus window geometry when the input carries or
/// the flags supply one.
struct SectionInput {
    q: DenseMatrix,
    window: Option<(Window, usize)>,
}

/// Loads a matrix or operator document. Operator documents are cut to the
/// window [0,n]^d with n from the flag or the stored support bound; plain
/// matrices pick up window geometry only when both --d and --n are given.
fn load_section(
    rb: &mut ReportBuilder,
    label: &str,
    path: &Path,
    d: Option<usize>,
    n: Option<u32>,
) -> Result<SectionInput> {
    let text = read_input(rb, label, path)?;
    match io::sniff_kind(&text)? {
        io::DocKind::Matrix => {
            let q = io::read_matrix(&text)?;
            let window = match (d, n) {
                (Some(d), Some(n)) => {
                    let w = Window::new(d, n)?;
                    if w.is_empty() || q.rows() % w.len() != 0 {
                        return Err(Error::DimensionMismatch(format!(
                            "matrix with {} rows does not tile the {} window positions",
                            q.rows(),
                            w.len()
                        )));
                    }
                    let c = q.rows() / w.len();
                    Some((w, c))
                }
                (None, None) => None,
                _ => {
                    return Err(Error::InvalidInput(
                        "give both --d and --n, or neither".into(),
                    ))
                }
            };
            Ok(SectionInput { q, window })
        }
        io::DocKind::Operator => {
            let op = io::read_operator(&text)?;
            if d.is_some_and(|give| give != op.d()) {
                return Err(Error::InvalidInput(format!(
                    "--d {} contradicts the document dimension {}",
                    d.unwrap_or_default(),
                    op.d()
                )));
            }
            let bound = n.unwrap_or_else(|| op.support_bound());
            let w = Window::new(op.d(), bound)?;
            let q = op.section(&w)?;
            let c = op.c();
            Ok(SectionInput {
                q,
                window: Some((w, c)),
            })
        }
        io::DocKind::Coefficients => Err(Error::InvalidInput(
            "expected a matrix or operator document, found symbol coefficients".into(),
        )),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_factor(
    rb: &mut ReportBuilder,
    method: Method,
    input: &Path,
    pattern: Option<PatternKind>,
    d: Option<usize>,
    n: Option<u32>,
    extra_cols: Option<usize>,
    out: Option<&Path>,
) -> Result<Outcome> {
    rb.arg("method", method.name());
    if let Some(p) = pattern {
        rb.arg("pattern", p.name());
    }
    if let Some(d) = d {
        rb.arg("d", d);
    }
    if let Some(n) = n {
        rb.arg("n", n);
    }
    if let Some(e) = extra_cols {
        rb.arg("extraCols", e);
    }

    let patterned = matches!(method, Method::Poset | Method::Hotel);
    if !patterned {
        refuse(&pattern, "--pattern", "the cholesky and reverse methods")?;
        refuse(&extra_cols, "--extra-cols", "this method")?;
    }
    if method != Method::Hotel {
        refuse(&extra_cols, "--extra-cols", "this method")?;
    }

    let section = load_section(rb, "input", input, d, n)?;
    let q = section.q;

    match method {
        Method::Cholesky | Method::Reverse => {
            let res = if method == Method::Cholesky {
                cholesky_ll(&q, tol::PIVOT_TOL)?
            } else {
                reverse_cholesky(&q, tol::PIVOT_TOL)?
            };
            let mut outputs = json!({
                "factor": report::matrix(&res.factor),
                "rank": res.rank,
                "canonical": res.canonical,
            });
            if let Some(path) = out {
                outputs["written"] =
                    Value::String(write_output(path, &io::write_matrix(&res.factor))?);
            }
            Ok(Outcome::ok(
                outputs,
                json!({"frobenius": report::num(res.residual_fro)}),
            ))
        }
        Method::Poset => {
            let (w, c) = need(section.window, "--d and --n", "the poset method on a matrix")?;
            let pat = Pattern::nest_tensor(&w);
            let rep = poset_feasibility(&q, &pat, c, tol::ZERO_TOL)?;
            let mut outputs = json!({
                "feasible": rep.feasible,
                "certificate": index_pairs(&rep.certificate),
                "certificatePositions": position_pairs(&rep.certificate, &w),
            });
            let mut residuals = json!({});
            if let Some(u) = &rep.factor {
                outputs["factor"] = report::matrix(u);
                residuals["frobenius"] =
                    report::num(u.gram().sub(&q).frobenius_norm());
                if let Some(path) = out {
                    outputs["written"] = Value::String(write_output(path, &io::write_matrix(u))?);
                }
            }
            let exit = if rep.feasible { 0 } else { 2 };
            Ok(Outcome {
                outputs,
                residuals,
                exit,
            })
        }
        Method::Hotel => {
            let (w, c) = need(section.window, "--d and --n", "the hotel method on a matrix")?;
            let extra = match extra_cols {
                Some(e) => e,
                None => psd_check(&q, tol::PSD_TOL)?.rank.div_ceil(c),
            };
            let res = hotel_factor(&q, &w, c, extra)?;
            let mut outputs = json!({
                "factor": report::matrix(&res.factor),
                "rank": res.rank,
                "canonical": res.canonical,
                "extraColumns": extra,
            });
            if let Some(path) = out {
                outputs["written"] =
                    Value::String(write_output(path, &io::write_matrix(&res.factor))?);
            }
            Ok(Outcome::ok(
                outputs,
                json!({"frobenius": report::num(res.residual_fro)}),
            ))
        }
    }
}

// ---- verify ----

fn run_verify(
    rb: &mut ReportBuilder,
    factor: &Path,
    input: &Path,
    pattern: Option<PatternKind>,
    d: Option<usize>,
    n: Option<u32>,
    tol_flag: Option<f64>,
) -> Result<Outcome> {
    if let Some(p) = pattern {
        rb.arg("pattern", p.name());
    }
    if let Some(d) = d {
        rb.arg("d", d);
    }
    if let Some(n) = n {
        rb.arg("n", n);
    }
    let tolerance = tol_flag.unwrap_or(tol::VERIFY_TOL);
    rb.arg("tol", report::num(tolerance));

    let ftext = read_input(rb, "factor", factor)?;
    let b = io::read_matrix(&ftext)?;
    let section = load_section(rb, "input", input, d, n)?;
    let q = section.q;

    let pat = match pattern {
        None => None,
        Some(PatternKind::NestTensor) => {
            let (w, c) = need(
                section.window,
                "--d and --n",
                "pattern verification on a matrix",
            )?;
            if b.cols() % c != 0 {
                return Err(Error::DimensionMismatch(format!(
                    "factor has {} columns, not a multiple of the block size {c}",
                    b.cols()
                )));
            }
            let bcols = b.cols() / c;
            let pat = if bcols > w.len() {
                Pattern::nest_tensor_augmented(&w, bcols - w.len())
            } else {
                Pattern::nest_tensor(&w)
            };
            Some((pat, c))
        }
    };

    let rep = verify_factor(&b, &q, pat.as_ref().map(|(p, c)| (p, *c)), tolerance)?;
    let outputs = json!({
        "ok": rep.ok,
        "tolerance": report::num(tolerance),
        "patternViolations": index_pairs(&rep.pattern_violations),
    });
    let residuals = json!({"frobenius": report::num(rep.residual_fro)});
    Ok(Outcome {
        outputs,
        residuals,
        exit: if rep.ok { 0 } else { 1 },
    })
}

// ---- converge ----

fn run_converge(
    rb: &mut ReportBuilder,
    input: &Path,
    schedule: &[u32],
    compare_n: u32,
    tol_flag: Option<f64>,
    csv: Option<&Path>,
) -> Result<Outcome> {
    let schedule_text = schedule
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(",");
    rb.arg("schedule", &schedule_text);
    rb.arg("compareN", compare_n);
    let tolerance = tol_flag.unwrap_or(tol::CONV_TOL);
    rb.arg("tol", report::num(tolerance));

    let text = read_input(rb, "input", input)?;
    let src: Box<dyn SectionSource> = match io::sniff_kind(&text)? {
        io::DocKind::Operator => Box::new(io::read_operator(&text)?),
        io::DocKind::Coefficients => Box::new(io::read_symbol(&text)?),
        io::DocKind::Matrix => {
            return Err(Error::InvalidInput(
                "convergence studies want an operator or symbol document".into(),
            ))
        }
    };
    let rep = truncation_study(src.as_ref(), schedule, compare_n, tolerance)?;

    let mut outputs = json!({
        "schedule": rep.schedule,
        "deltas": delta_values(&rep.deltas),
        "residuals": float_values(&rep.residuals),
        "converged": rep.converged,
    });
    if let Some(path) = csv {
        outputs["csv"] = Value::String(write_output(path, &io::write_csv(&rep))?);
    }
    let residuals = json!({
        "finalDefect": report::opt_num(rep.residuals.last().copied()),
        "finalDelta": report::opt_num(rep.last_delta()),
    });
    Ok(Outcome {
        outputs,
        residuals,
        exit: if rep.converged { 0 } else { 4 },
    })
}

// ---- rkhs ----

#[allow(clippy::too_many_arguments)]
fn run_rkhs(
    rb: &mut ReportBuilder,
    op: RkhsOp,
    input: &Path,
    j: Option<&str>,
    window: Option<u32>,
    basis: Option<&str>,
    v: Option<&str>,
    point: Option<&str>,
) -> Result<Outcome> {
    rb.arg("op", op.name());
    for (key, val) in [("J", j), ("basis", basis), ("v", v), ("point", point)] {
        if let Some(val) = val {
            rb.arg(key, val);
        }
    }
    if let Some(w) = window {
        rb.arg("window", w);
    }

    let text = read_input(rb, "input", input)?;
    if !matches!(io::sniff_kind(&text)?, io::DocKind::Operator) {
        return Err(Error::InvalidInput(
            "kernel diagnostics want an operator document".into(),
        ));
    }
    let opr = io::read_operator(&text)?;

    let j_owned = j.map(|s| s.to_owned());
    let need_j = || -> Result<MultiIndex> {
        parse_multi_index(&need(j_owned.clone(), "--J", "this diagnostic")?)
    };
    let basis_indices = || -> Result<Vec<MultiIndex>> {
        parse_index_list(&need(basis.map(str::to_owned), "--basis", "this diagnostic")?)
    };

    match op {
        RkhsOp::Gram => {
            refuse(&j.map(str::to_owned), "--J", "the gram diagnostic")?;
            refuse(&window, "--window", "the gram diagnostic")?;
            refuse(&v.map(str::to_owned), "--v", "the gram diagnostic")?;
            refuse(&point.map(str::to_owned), "--point", "the gram diagnostic")?;
            let indices = basis_indices()?;
            let members = unit_basis(&indices, opr.c());
            let g = gram_matrix(&opr, &members)?;
            let outputs = json!({
                "gram": report::matrix(&g),
                "members": members.len(),
                "indices": Value::Array(indices.iter().map(report::index).collect()),
            });
            Ok(Outcome::ok(outputs, json!({})))
        }
        RkhsOp::Norm => {
            refuse(&window, "--window", "the norm diagnostic")?;
            refuse(&basis.map(str::to_owned), "--basis", "the norm diagnostic")?;
            refuse(&v.map(str::to_owned), "--v", "the norm diagnostic")?;
            refuse(&point.map(str::to_owned), "--point", "the norm diagnostic")?;
            let jj = need_j()?;
            let rep = functional_norm(&opr, &jj)?;
            let outputs = json!({
                "value": report::num(rep.value),
                "sampledLower": report::num(rep.sampled_lower),
            });
            let residuals = json!({
                "samplingGap": report::num(rep.value - rep.sampled_lower),
            });
            Ok(Outcome::ok(outputs, residuals))
        }
        RkhsOp::Cmin => {
            refuse(&basis.map(str::to_owned), "--basis", "the cmin diagnostic")?;
            refuse(&point.map(str::to_owned), "--point", "the cmin diagnostic")?;
            let jj = need_j()?;
            let wn = need(window, "--window", "the cmin diagnostic")?;
            let direction = v.map(parse_vector).transpose()?;
            let rep = cmin(&opr, &jj, wn, direction.as_deref())?;
            let outputs = json!({
                "value": report::num(rep.value),
                "columnBound": report::num(rep.column_bound),
                "windowBound": report::num(rep.window_bound),
            });
            let residuals = json!({
                "columnSlack": report::num(rep.value - rep.column_bound),
                "windowSlack": report::num(rep.window_bound - rep.value),
            });
            Ok(Outcome::ok(outputs, residuals))
        }
        RkhsOp::Density => {
            refuse(&j.map(str::to_owned), "--J", "the density diagnostic")?;
            refuse(&window, "--window", "the density diagnostic")?;
            let indices = basis_indices()?;
            let members = unit_basis(&indices, opr.c());
            let target = parse_vector(&need(
                point.map(str::to_owned),
                "--point",
                "the density diagnostic",
            )?)?;
            let direction = match v {
                Some(s) => parse_vector(s)?,
                None => {
                    let mut e0 = vec![Complex64::ZERO; opr.c()];
                    e0[0] = Complex64::ONE;
                    e0
                }
            };
            let rep = density_projection(&opr, &members, &target, &direction)?;
            let outputs = json!({
                "error": report::num(rep.error),
                "coefficients": Value::Array(rep.coefficients.iter().map(|z| report::pair(*z)).collect()),
                "members": members.len(),
            });
            let residuals = json!({"projection": report::num(rep.error)});
            Ok(Outcome::ok(outputs, residuals))
        }
        RkhsOp::Onb => {
            refuse(&j.map(str::to_owned), "--J", "the onb diagnostic")?;
            refuse(&window, "--window", "the onb diagnostic")?;
            refuse(&v.map(str::to_owned), "--v", "the onb diagnostic")?;
            refuse(&point.map(str::to_owned), "--point", "the onb diagnostic")?;
            let indices = basis_indices()?;
            let members = unit_basis(&indices, opr.c());
            let rep = onb_polynomials(&opr, &members)?;
            let g = gram_matrix(&opr, &members)?;
            let prod = rep.coordinates.adjoint().mul(&g).mul(&rep.coordinates);
            let defect = prod
                .sub(&DenseMatrix::identity(prod.rows()))
                .frobenius_norm();
            let outputs = json!({
                "kept": rep.functions.len(),
                "dropped": rep.dropped,
                "norms": float_values(&rep.norms),
                "coordinates": report::matrix(&rep.coordinates),
            });
            let residuals = json!({"orthonormality": report::num(defect)});
            Ok(Outcome::ok(outputs, residuals))
        }
    }
}

// ---- toeplitz ----

#[allow(clippy::too_many_arguments)]
fn run_toeplitz(
    rb: &mut ReportBuilder,
    op: ToeplitzOp,
    symbol: &Path,
    n: Option<usize>,
    factor: Option<&Path>,
    tol_flag: Option<f64>,
    grid: Option<usize>,
    csv: Option<&Path>,
    out: Option<&Path>,
) -> Result<Outcome> {
    rb.arg("op", op.name());
    if let Some(n) = n {
        rb.arg("n", n);
    }
    if let Some(t) = tol_flag {
        rb.arg("tol", report::num(t));
    }
    if let Some(g) = grid {
        rb.arg("grid", g);
    }

    let stext = read_input(rb, "symbol", symbol)?;
    let sym = io::read_symbol(&stext)?;

    match op {
        ToeplitzOp::Matrix => {
            refuse(&factor.map(Path::to_path_buf), "--factor", "the matrix op")?;
            refuse(&tol_flag, "--tol", "the matrix op")?;
            refuse(&grid, "--grid", "the matrix op")?;
            refuse(&csv.map(Path::to_path_buf), "--csv", "the matrix op")?;
            let size = need(n, "--n", "the matrix op")?;
            if size == 0 {
                return Err(Error::InvalidInput("section size must be >= 1".into()));
            }
            let t = toeplitz_matrix(&sym, size);
            let mut outputs = json!({
                "matrix": report::matrix(&t),
                "n": size,
            });
            if let Some(path) = out {
                outputs["written"] = Value::String(write_output(path, &io::write_matrix(&t))?);
            }
            let residuals = json!({"hermitianDefect": report::num(t.hermitian_defect())});
            Ok(Outcome::ok(outputs, residuals))
        }
        ToeplitzOp::FejerRiesz => {
            refuse(&n, "--n", "the fejer-riesz op")?;
            refuse(&factor.map(Path::to_path_buf), "--factor", "the fejer-riesz op")?;
            refuse(&tol_flag, "--tol", "the fejer-riesz op")?;
            refuse(&grid, "--grid", "the fejer-riesz op")?;
            refuse(&csv.map(Path::to_path_buf), "--csv", "the fejer-riesz op")?;
            let f = fejer_riesz(&sym)?;
            let defect = coefficient_defect(&f, &sym);
            let mut outputs = json!({
                "coeffs": Value::Array(f.coeffs().iter().map(|z| report::pair(*z)).collect()),
                "degree": f.degree(),
            });
            if let Some(path) = out {
                outputs["written"] = Value::String(write_output(path, &io::write_factor(&f))?);
            }
            let residuals = json!({"coefficientDefect": report::num(defect)});
            Ok(Outcome::ok(outputs, residuals))
        }
        ToeplitzOp::Bauer => {
            refuse(&factor.map(Path::to_path_buf), "--factor", "the bauer op")?;
            refuse(&grid, "--grid", "the bauer op")?;
            let size = need(n, "--n", "the bauer op")?;
            let tolerance = tol_flag.unwrap_or(tol::CONV_TOL);
            let (f, rep) = bauer_factor(&sym, size, tolerance)?;
            let mut outputs = json!({
                "coeffs": Value::Array(f.coeffs().iter().map(|z| report::pair(*z)).collect()),
                "degree": f.degree(),
                "schedule": rep.schedule,
                "deltas": delta_values(&rep.deltas),
                "residuals": float_values(&rep.residuals),
                "converged": rep.converged,
            });
            if let Some(path) = csv {
                outputs["csv"] = Value::String(write_output(path, &io::write_csv(&rep))?);
            }
            if let Some(path) = out {
                outputs["written"] = Value::String(write_output(path, &io::write_factor(&f))?);
            }
            let residuals = json!({
                "finalDefect": report::opt_num(rep.residuals.last().copied()),
                "finalDelta": report::opt_num(rep.last_delta()),
            });
            Ok(Outcome {
                outputs,
                residuals,
                exit: if rep.converged { 0 } else { 4 },
            })
        }
        ToeplitzOp::Logint => {
            refuse(&n, "--n", "the logint op")?;
            refuse(&factor.map(Path::to_path_buf), "--factor", "the logint op")?;
            refuse(&tol_flag, "--tol", "the logint op")?;
            refuse(&csv.map(Path::to_path_buf), "--csv", "the logint op")?;
            refuse(&out.map(Path::to_path_buf), "--out", "the logint op")?;
            let points = grid.unwrap_or(2048);
            let rep = log_integrability(&sym, points)?;
            let outputs = json!({
                "value": report::num(rep.value),
                "grid": rep.grid,
                "excluded": rep.excluded,
            });
            Ok(Outcome::ok(outputs, json!({})))
        }
        ToeplitzOp::Verify => {
            refuse(&tol_flag, "--tol", "the verify op")?;
            refuse(&grid, "--grid", "the verify op")?;
            refuse(&csv.map(Path::to_path_buf), "--csv", "the verify op")?;
            refuse(&out.map(Path::to_path_buf), "--out", "the verify op")?;
            let fpath = need(
                factor.map(Path::to_path_buf),
                "--factor",
                "the verify op",
            )?;
            let ftext = read_input(rb, "factor", &fpath)?;
            let f = io::read_factor(&ftext)?;
            let size = need(n, "--n", "the verify op")?;
            if size == 0 {
                return Err(Error::InvalidInput("verification window must be >= 1".into()));
            }
            let rep = verify_toeplitz_factor(&f, &sym, size);
            let outputs = json!({
                "ok": rep.ok,
                "n": rep.n,
            });
            let residuals = json!({"frobenius": report::num(rep.residual_fro)});
            Ok(Outcome {
                outputs,
                residuals,
                exit: if rep.ok { 0 } else { 1 },
            })
        }
    }
}

/// Largest coefficient gap between |f|^2 and the symbol.
fn coefficient_defect(f: &uppertri::toeplitz::AnalyticFactor, sym: &uppertri::toeplitz::Symbol) -> f64 {
    let back = f.to_symbol();
    let top = back.degree().max(sym.degree()) as i64;
    let mut defect = 0.0f64;
    for k in -top..=top {
        defect = defect.max((back.coeff(k) - sym.coeff(k)).norm());
    }
    defect
}

// ---- range ----

#[allow(clippy::too_many_arguments)]
fn run_range(
    rb: &mut ReportBuilder,
    op: RangeOp,
    a: &Path,
    c: Option<&Path>,
    d: Option<usize>,
    n: Option<u32>,
    reference: Option<&Path>,
    extra_cols: Option<usize>,
    tol_flag: Option<f64>,
) -> Result<Outcome> {
    rb.arg("op", op.name());
    if let Some(d) = d {
        rb.arg("d", d);
    }
    if let Some(n) = n {
        rb.arg("n", n);
    }
    if let Some(e) = extra_cols {
        rb.arg("extraCols", e);
    }
    let tolerance = tol_flag.unwrap_or(tol::RANGE_TOL);
    rb.arg("tol", report::num(tolerance));

    let atext = read_input(rb, "a", a)?;
    let am = io::read_matrix(&atext)?;

    match op {
        RangeOp::Equal | RangeOp::Constants => {
            refuse(&d, "--d", "this op")?;
            refuse(&n, "--n", "this op")?;
            refuse(&reference.map(Path::to_path_buf), "--reference", "this op")?;
            refuse(&extra_cols, "--extra-cols", "this op")?;
            let cpath = need(c.map(Path::to_path_buf), "--c", "this op")?;
            let ctext = read_input(rb, "c", &cpath)?;
            let cm = io::read_matrix(&ctext)?;
            if op == RangeOp::Equal {
                let rep = range_equal(&am, &cm, tolerance)?;
                let outputs = json!({
                    "equal": rep.equal,
                    "defectAInC": report::num(rep.defect_a_in_c),
                    "defectCInA": report::num(rep.defect_c_in_a),
                });
                let residuals = json!({
                    "aInC": report::num(rep.defect_a_in_c),
                    "cInA": report::num(rep.defect_c_in_a),
                });
                Ok(Outcome {
                    outputs,
                    residuals,
                    exit: if rep.equal { 0 } else { 1 },
                })
            } else {
                let rep = douglas_constants(&am, &cm, tolerance)?;
                let outputs = json!({
                    "lambda": bound_value(&rep.lambda),
                    "mu": bound_value(&rep.mu),
                });
                Ok(Outcome::ok(outputs, json!({})))
            }
        }
        RangeOp::Demo => {
            refuse(&c.map(Path::to_path_buf), "--c", "the demo op")?;
            let dd = need(d, "--d", "the demo op")?;
            let nn = need(n, "--n", "the demo op")?;
            let w = Window::new(dd, nn)?;
            if am.rows() % w.len() != 0 {
                return Err(Error::DimensionMismatch(format!(
                    "factor with {} rows does not tile the {} window positions",
                    am.rows(),
                    w.len()
                )));
            }
            let cblk = am.rows() / w.len();
            let refm = match reference {
                Some(path) => {
                    let rtext = read_input(rb, "reference", path)?;
                    Some(io::read_matrix(&rtext)?)
                }
                None => None,
            };
            let extra = extra_cols.unwrap_or_else(|| w.len());
            let rep = tensornest_demo(&am, &w, cblk, refm.as_ref(), extra)?;
            let outputs = json!({
                "feasible": rep.feasibility.as_ref().map(|f| Value::Bool(f.feasible)).unwrap_or(Value::Null),
                "certificate": rep.feasibility.as_ref()
                    .map(|f| index_pairs(&f.certificate))
                    .unwrap_or(Value::Null),
                "augmented": rep.augmented,
                "factor": report::matrix(&rep.factor),
                "douglas": rep.douglas.as_ref()
                    .map(|dg| json!({"lambda": bound_value(&dg.lambda), "mu": bound_value(&dg.mu)}))
                    .unwrap_or(Value::Null),
            });
            let residuals = json!({"frobenius": report::num(rep.residual_fro)});
            Ok(Outcome::ok(outputs, residuals))
        }
    }
}

fn bound_value(b: &DouglasBound) -> Value {
    match b {
        DouglasBound::Finite(x) => report::num(*x),
        DouglasBound::Infinite => Value::String("infinity".into()),
    }
}

// ---- demo-counterexample ----

/// The packaged 4x4 instance on the window [0,1]^2: its canonical
/// elimination factor has mass at the one incomparable position, the
/// pattern test certifies infeasibility there, and four fresh columns make
/// the factorization go through.
fn run_demo_counterexample(rb: &mut ReportBuilder) -> Result<Outcome> {
    rb.arg("instance", "tensor-window-4x4");
    let (planted, q) = counterexample_instance();
    let rev = reverse_cholesky(&q, tol::PIVOT_TOL)?;
    let w = Window::new(2, 1)?;
    let pat = Pattern::nest_tensor(&w);
    let feas = poset_feasibility(&q, &pat, 1, tol::ZERO_TOL)?;
    let hotel = hotel_factor(&q, &w, 1, 4)?;

    let recovered = rev.factor.sub(&planted).max_abs();
    let outputs = json!({
        "q": report::matrix(&q),
        "reverseFactor": report::matrix(&rev.factor),
        "feasible": feas.feasible,
        "certificate": index_pairs(&feas.certificate),
        "certificatePositions": position_pairs(&feas.certificate, &w),
        "hotelFactor": report::matrix(&hotel.factor),
        "extraColumns": 4,
    });
    let residuals = json!({
        "reverse": report::num(rev.residual_fro),
        "recovery": report::num(recovered),
        "hotel": report::num(hotel.residual_fro),
    });
    Ok(Outcome::ok(outputs, residuals))
}
