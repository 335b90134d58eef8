//! Acceptance gate for the whole toolkit. Each test covers one shipping
//! criterion end to end, prints a single PASS line on success, and pins its
//! tolerances here rather than in the library.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uppertri::blockop::{factor_eventually_zero, gen_upper, SupportLaw};
use uppertri::factor::{counterexample_instance, hotel_factor, poset_feasibility, reverse_cholesky, verify_factor};
use uppertri::index::{MultiIndex, Window};
use uppertri::linalg::herm_eigen;
use uppertri::matrix::DenseMatrix;
use uppertri::pattern::Pattern;
use uppertri::range::{douglas_constants, DouglasBound};
use uppertri::rkhs::{
    apply_functional, apply_span, cmin, density_projection, gram_matrix, kernel_positivity_sample,
    onb_polynomials, phi, KernelSpec,
};
use uppertri::toeplitz::{bauer_factor, fejer_riesz, log_integrability, verify_toeplitz_factor, AnalyticFactor};
use uppertri::tol;

const ROUND_TRIP_ENTRY_TOL: f64 = 1e-9;
const ROUND_TRIP_RESIDUAL_TOL: f64 = 1e-10;
const SEARCH_FLOOR: f64 = 1e-6;
const HOTEL_TOL: f64 = 1e-12;
const EVENTUAL_TOL: f64 = 1e-8;
const GRAM_EQ_TOL: f64 = 1e-14;
const PAIRING_TOL: f64 = 1e-10;
const CHAIN_TOL: f64 = 1e-8;
const ONB_TOL: f64 = 1e-10;
const TWO_METHOD_TOL: f64 = 1e-6;
const TOEPLITZ_RESIDUAL_TOL: f64 = 1e-10;
const LOG_MEAN_TOL: f64 = 1e-6;
const POSITIVITY_TOL: f64 = 1e-8;
const SHARPNESS_TOL: f64 = 1e-10;

fn pass(name: &str) {
    println!("acceptance {name}: PASS");
}

fn mi(coords: &[u32]) -> MultiIndex {
    MultiIndex::new(coords)
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>() - 0.5
}

fn cunit(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(unit(rng), unit(rng))
}

/// Upper triangular with diagonal in [1, 2) and off-diagonal mass scaled
/// down with the size, so elimination recovers it to high accuracy.
fn random_upper(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let scale = 0.3 / (n as f64).sqrt();
    let mut u = DenseMatrix::zeros(n, n);
    for i in 0..n {
        u[(i, i)] = Complex64::new(1.0 + rng.random::<f64>(), 0.0);
        for j in i + 1..n {
            u[(i, j)] = cunit(rng) * Complex64::new(2.0 * scale, 0.0);
        }
    }
    u
}

#[test]
fn round_trip_recovers_random_upper_factors() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for trial in 0..200 {
        let n = rng.random_range(1..=64);
        let u = random_upper(&mut rng, n);
        let p = u.gram();
        let rev = reverse_cholesky(&p, tol::PIVOT_TOL).expect("factorization");
        let entry_gap = rev.factor.sub(&u).max_abs();
        assert!(
            entry_gap <= ROUND_TRIP_ENTRY_TOL * u.max_abs(),
            "trial {trial}, n = {n}: entry gap {entry_gap:.3e}"
        );
        let residual = rev.factor.gram().sub(&p).frobenius_norm();
        assert!(
            residual <= ROUND_TRIP_RESIDUAL_TOL * p.frobenius_norm(),
            "trial {trial}, n = {n}: residual {residual:.3e}"
        );
    }
    pass("round-trip over 200 seeded upper factors");
}

/// Gradient descent on ||B B^* - Q||_F^2 over matrices supported on the
/// given positions, with an adaptive step. Returns the best residual the
/// restart reached.
fn masked_descent(q: &DenseMatrix, mask: &[(usize, usize)], rng: &mut ChaCha8Rng) -> f64 {
    let n = q.rows();
    let mut b = DenseMatrix::zeros(n, n);
    for &(i, k) in mask {
        b[(i, k)] = cunit(rng) * Complex64::new(2.0, 0.0);
    }
    let mut best = b.gram().sub(q).frobenius_norm();
    let mut step = 0.05f64;
    let mut flat = 0u32;
    for _ in 0..600 {
        let r = b.gram().sub(q);
        let g = r.mul(&b);
        let mut improved = false;
        while step > 1e-14 {
            let mut trial = b.clone();
            for &(i, k) in mask {
                trial[(i, k)] -= g[(i, k)] * Complex64::new(step, 0.0);
            }
            let res = trial.gram().sub(q).frobenius_norm();
            if res < best {
                improved = res < best * (1.0 - 1e-10);
                b = trial;
                best = res;
                step *= 1.25;
                break;
            }
            step *= 0.5;
        }
        flat = if improved { 0 } else { flat + 1 };
        if step <= 1e-14 || flat >= 8 || best < 1e-8 {
            break;
        }
    }
    best
}

#[test]
fn tensor_window_counterexample_has_no_pattern_factor() {
    let (planted, q) = counterexample_instance();
    let w = Window::new(2, 1).unwrap();
    let pat = Pattern::nest_tensor(&w);

    // the canonical factor pins the blame on the one incomparable pair
    let feas = poset_feasibility(&q, &pat, 1, tol::ZERO_TOL).unwrap();
    assert!(!feas.feasible);
    assert_eq!(feas.certificate, vec![(mi(&[0, 1]), mi(&[1, 0]))]);
    let positions: Vec<(usize, usize)> = feas
        .certificate
        .iter()
        .map(|(i, k)| (w.position(i).unwrap() + 1, w.position(k).unwrap() + 1))
        .collect();
    assert_eq!(positions, vec![(2, 3)]);

    // the randomized search oracle must be able to find factors at all
    let mask: Vec<(usize, usize)> = (0..4)
        .flat_map(|i| (0..4).map(move |k| (i, k)))
        .filter(|&(i, k)| pat.allowed(i, k))
        .collect();
    assert_eq!(mask.len(), 9);
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut v = DenseMatrix::zeros(4, 4);
    for &(i, k) in &mask {
        v[(i, k)] = if i == k {
            Complex64::new(1.0 + rng.random::<f64>(), 0.0)
        } else {
            cunit(&mut rng)
        };
    }
    let feasible_q = v.gram();
    let found = (0..50).any(|_| masked_descent(&feasible_q, &mask, &mut rng) < SEARCH_FLOOR);
    assert!(found, "search oracle cannot solve a solvable instance");

    // and on the counterexample it must find nothing across 10000 restarts
    let mut search_best = f64::INFINITY;
    for _ in 0..10_000 {
        search_best = search_best.min(masked_descent(&q, &mask, &mut rng));
        assert!(
            search_best >= SEARCH_FLOOR,
            "pattern factor found with residual {search_best:.3e}"
        );
    }

    // four fresh columns resolve it
    let hotel = hotel_factor(&q, &w, 1, 4).unwrap();
    let gap = hotel.factor.gram().sub(&q).max_abs();
    assert!(gap <= HOTEL_TOL, "hotel reconstruction off by {gap:.3e}");
    assert!(planted.sub(&reverse_cholesky(&q, tol::PIVOT_TOL).unwrap().factor).max_abs() < 1e-14);

    pass(&format!(
        "counterexample: certificate (2,3), best of 10000 searches {search_best:.3e}, hotel gap {gap:.3e}"
    ));
}

#[test]
fn banded_operators_factor_with_eventually_zero_columns() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for trial in 0..50u64 {
        let band = 1 + (trial % 4) as u32;
        let c = 1 + (trial % 2) as usize;
        let n = rng.random_range(16..=128);
        let out_n = rng.random_range(4..=12);
        let inst = gen_upper(1, c, n, SupportLaw::Band(band), 9000 + trial).unwrap();
        let (res, conv) = factor_eventually_zero(&inst.q, out_n, tol::CONV_TOL)
            .expect("stabilizing factorization");
        assert!(conv.converged, "trial {trial} did not settle");
        let last = conv.last_delta().unwrap_or(f64::INFINITY);
        assert!(
            last <= EVENTUAL_TOL,
            "trial {trial}: final delta {last:.3e}"
        );
        let cw = Window::new(1, out_n).unwrap();
        let q_cw = inst.q.section(&cw).unwrap();
        let rep = verify_factor(&res.factor, &q_cw, None, EVENTUAL_TOL).unwrap();
        assert!(
            rep.ok && rep.residual_fro <= EVENTUAL_TOL,
            "trial {trial}: residual {:.3e}",
            rep.residual_fro
        );
    }
    pass("50 banded instances settle and verify on the output window");
}

/// Random block operator plus the window it was generated on.
fn random_operator(rng: &mut ChaCha8Rng, seed: u64) -> (uppertri::blockop::BlockOperator, Window) {
    let d = rng.random_range(1..=2usize);
    let n = if d == 1 {
        rng.random_range(5..=9)
    } else {
        rng.random_range(1..=2)
    };
    let c = rng.random_range(1..=2usize);
    let band = rng.random_range(1..=2u32);
    let inst = gen_upper(d, c, n, SupportLaw::Band(band), seed).unwrap();
    (inst.q, Window::new(d, n).unwrap())
}

fn window_unit_basis(w: &Window, c: usize) -> Vec<(MultiIndex, Vec<Complex64>)> {
    let mut basis = Vec::new();
    for j in w.indices() {
        for s in 0..c {
            let mut v = vec![Complex64::ZERO; c];
            v[s] = Complex64::ONE;
            basis.push((j.clone(), v));
        }
    }
    basis
}

#[test]
fn kernel_identities_hold_on_random_windows() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for trial in 0..50u64 {
        let (op, w) = random_operator(&mut rng, 11_000 + trial);
        let c = op.c();
        let basis = window_unit_basis(&w, c);

        // (a) the section Gram of unit kernel directions is the section itself
        let g = gram_matrix(&op, &basis).unwrap();
        let section = op.section(&w).unwrap();
        let gap = g.sub(&section).max_abs();
        assert!(gap <= GRAM_EQ_TOL, "trial {trial}: gram gap {gap:.3e}");

        // (b) the coefficient functional reads the kernel column:
        //     L_J phi_{K,v} = J! Q_{J,K} v, through both application routes
        for _ in 0..4 {
            let jj = &w.indices()[rng.random_range(0..w.len())];
            let kk = &w.indices()[rng.random_range(0..w.len())];
            let v: Vec<Complex64> = (0..c).map(|_| cunit(&mut rng)).collect();
            let f = phi(&op, kk, &v).unwrap();
            let through_function = apply_functional(&f, jj);
            let through_span = apply_span(&op, &[(kk.clone(), v.clone())], jj).unwrap();
            let fact = jj.factorial();
            for s in 0..c {
                let expected = match op.block(jj, kk) {
                    Some(b) => {
                        let mut acc = Complex64::ZERO;
                        for t in 0..c {
                            acc += b[(s, t)] * v[t];
                        }
                        acc * Complex64::new(fact, 0.0)
                    }
                    None => Complex64::ZERO,
                };
                assert!((through_function[s] - expected).norm() <= PAIRING_TOL);
                assert!((through_span[s] - expected).norm() <= PAIRING_TOL);
            }
        }

        // (c) column bound <= pencil value <= window bound for every J
        for jj in w.indices() {
            let rep = cmin(&op, jj, w.bound(), None).unwrap();
            assert!(
                rep.column_bound <= rep.value + CHAIN_TOL,
                "trial {trial}, J = {jj:?}: {} vs {}",
                rep.column_bound,
                rep.value
            );
            assert!(
                rep.value <= rep.window_bound + CHAIN_TOL,
                "trial {trial}, J = {jj:?}: {} vs {}",
                rep.value,
                rep.window_bound
            );
        }

        // (d) projection error is nonincreasing along graded prefixes
        let point: Vec<Complex64> = (0..op.d())
            .map(|_| cunit(&mut rng) * Complex64::new(0.9, 0.0))
            .collect();
        let dir: Vec<Complex64> = {
            let mut v = vec![Complex64::ZERO; c];
            v[0] = Complex64::ONE;
            v
        };
        let mut prev = f64::INFINITY;
        for cut in 1..=w.len() {
            let prefix = window_unit_basis(&w, c)
                .into_iter()
                .take(cut * c)
                .collect::<Vec<_>>();
            let rep = density_projection(&op, &prefix, &point, &dir).unwrap();
            assert!(
                rep.error <= prev + PAIRING_TOL,
                "trial {trial}: error grew from {prev:.3e} to {:.3e} at cut {cut}",
                rep.error
            );
            prev = rep.error;
        }

        // (e) orthonormalization really is orthonormal in the kernel metric
        let onb = onb_polynomials(&op, &basis).unwrap();
        let prod = onb.coordinates.adjoint().mul(&g).mul(&onb.coordinates);
        let defect = prod.sub(&DenseMatrix::identity(prod.rows())).max_abs();
        assert!(defect <= ONB_TOL, "trial {trial}: onb defect {defect:.3e}");
    }
    pass("kernel identities on 50 random windows");
}

#[test]
fn spectral_factorization_methods_agree() {
    let factors = [
        vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)],
        vec![Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)],
        vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.3, 0.0),
            Complex64::new(0.1, 0.0),
        ],
    ];
    for (which, coeffs) in factors.iter().enumerate() {
        let sym = AnalyticFactor::new(coeffs.clone()).unwrap().to_symbol();
        let direct = fejer_riesz(&sym).unwrap();
        let (iterative, ladder) = bauer_factor(&sym, 512, tol::CONV_TOL).unwrap();
        assert!(ladder.converged, "symbol {which}: ladder did not settle");
        let m = direct.degree().max(iterative.degree());
        for k in 0..=m {
            let gap = (direct.coeff(k) - iterative.coeff(k)).norm();
            assert!(
                gap <= TWO_METHOD_TOL,
                "symbol {which}, coefficient {k}: methods differ by {gap:.3e}"
            );
        }

        let check = verify_toeplitz_factor(&direct, &sym, 128);
        assert!(
            check.ok && check.residual_fro <= TOEPLITZ_RESIDUAL_TOL,
            "symbol {which}: verification residual {:.3e}",
            check.residual_fro
        );

        let mean = log_integrability(&sym, 4096).unwrap();
        let expected = 2.0 * direct.coeff(0).norm().ln();
        assert!(
            (mean.value - expected).abs() <= LOG_MEAN_TOL,
            "symbol {which}: log mean {} vs {expected}",
            mean.value
        );
    }
    pass("direct and iterative spectral factors agree on three symbols");
}

#[test]
fn sampled_kernel_grams_stay_positive() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for trial in 0..20u64 {
        let (op, _) = random_operator(&mut rng, 21_000 + trial);
        let spec = KernelSpec::truncated(&op, op.support_bound());
        let points: Vec<Vec<Complex64>> = (0..6)
            .map(|_| {
                (0..op.d())
                    .map(|_| {
                        let r = 0.7 * rng.random::<f64>();
                        let t = std::f64::consts::TAU * rng.random::<f64>();
                        Complex64::from_polar(r, t)
                    })
                    .collect()
            })
            .collect();
        let rep = kernel_positivity_sample(&op, &spec, &points, POSITIVITY_TOL).unwrap();
        assert!(
            rep.ok,
            "trial {trial}: min eigenvalue {:.3e} under tail {:.3e}",
            rep.min_eig, rep.tail
        );
    }
    pass("kernel Gram positivity on 20 operators, 6 points each");
}

fn random_full(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| cunit(rng))
}

/// Well-conditioned invertible square factor: identity plus a damped
/// random perturbation.
fn random_invertible(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let mut m = random_full(rng, n, n).scale(Complex64::new(0.4, 0.0));
    for i in 0..n {
        m[(i, i)] += Complex64::ONE;
    }
    m
}

fn min_eig(m: &DenseMatrix) -> f64 {
    herm_eigen(m).unwrap().0.first().copied().unwrap_or(0.0)
}

#[test]
fn majorization_constants_are_sharp() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for trial in 0..50 {
        let n = rng.random_range(3..=8);
        let r = rng.random_range(1..=n);
        let b = random_full(&mut rng, n, r);
        let a = b.mul(&random_invertible(&mut rng, r));
        let c = b.mul(&random_invertible(&mut rng, r));
        let rep = douglas_constants(&a, &c, tol::RANGE_TOL).unwrap();
        let (DouglasBound::Finite(lambda), DouglasBound::Finite(_)) = (&rep.lambda, &rep.mu)
        else {
            panic!("trial {trial}: equal ranges must give finite constants");
        };
        let aa = a.gram();
        let cc = c.gram();
        let scale = aa.frobenius_norm() + lambda * cc.frobenius_norm();
        let holds = min_eig(&cc.scale(Complex64::new(*lambda, 0.0)).sub(&aa));
        assert!(
            holds >= -SHARPNESS_TOL * scale,
            "trial {trial}: domination fails at lambda, min eig {holds:.3e}"
        );
        let shaved = min_eig(&cc.scale(Complex64::new(0.999 * lambda, 0.0)).sub(&aa));
        assert!(
            shaved < -SHARPNESS_TOL * scale,
            "trial {trial}: shaving lambda by 0.1% still dominates, min eig {shaved:.3e}"
        );
    }

    // the infinite answer appears exactly when containment fails
    for trial in 0..10 {
        let n = rng.random_range(3..=6);
        let r = rng.random_range(1..=n - 1);
        let c = random_full(&mut rng, n, r);
        let a = DenseMatrix::identity(n);
        let rep = douglas_constants(&a, &c, tol::RANGE_TOL).unwrap();
        assert!(
            matches!(rep.lambda, DouglasBound::Infinite),
            "trial {trial}: full range inside a rank {r} range must be infinite"
        );
        assert!(
            rep.mu.is_finite(),
            "trial {trial}: the reverse direction is contained"
        );
    }
    pass("majorization constants sharp on 50 pairs, infinite exactly off containment");
}

#[test]
fn cli_demo_is_deterministic_and_exit_codes_are_reachable() {
    use std::process::Command;
    let bin = env!("CARGO_BIN_EXE_uppertri");
    let run = |args: &[&str]| Command::new(bin).args(args).output().expect("spawn");

    let first = run(&["demo-counterexample", "--no-timings"]);
    let second = run(&["demo-counterexample", "--no-timings"]);
    assert!(first.status.success());
    assert_eq!(first.status.code(), Some(0));
    assert!(!first.stdout.is_empty());
    assert_eq!(first.stdout, second.stdout, "demo runs differ");
    serde_json::from_slice::<serde_json::Value>(&first.stdout).expect("demo emits JSON");

    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).display().to_string();

    let (_, q) = counterexample_instance();
    std::fs::write(path("cex.json"), uppertri::io::write_matrix(&q)).unwrap();
    std::fs::write(path("eye.json"), uppertri::io::write_matrix(&DenseMatrix::identity(4))).unwrap();
    std::fs::write(
        path("wide.json"),
        uppertri::io::write_matrix(&DenseMatrix::identity(4).scale(Complex64::new(2.0, 0.0))),
    )
    .unwrap();
    let sym = AnalyticFactor::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)])
        .unwrap()
        .to_symbol();
    std::fs::write(path("sym.json"), uppertri::io::write_symbol(&sym)).unwrap();

    let codes = [
        (vec!["demo-counterexample".to_string()], 0),
        (
            vec![
                "verify".into(),
                "--factor".into(),
                path("wide.json"),
                "--input".into(),
                path("eye.json"),
            ],
            1,
        ),
        (
            vec![
                "factor".into(),
                "--method".into(),
                "poset".into(),
                "--input".into(),
                path("cex.json"),
                "--d".into(),
                "2".into(),
                "--n".into(),
                "1".into(),
            ],
            2,
        ),
        (vec!["factor".into(), "--definitely-not-a-flag".into()], 3),
        (
            vec![
                "converge".into(),
                "--input".into(),
                path("sym.json"),
                "--schedule".into(),
                "8,10".into(),
                "--compare-n".into(),
                "4".into(),
                "--tol".into(),
                "1e-18".into(),
            ],
            4,
        ),
    ];
    for (args, want) in &codes {
        let out = Command::new(bin).args(args).output().expect("spawn");
        assert_eq!(
            out.status.code(),
            Some(*want),
            "args {:?}: stderr {}",
            args,
            String::from_utf8_lossy(&out.stderr)
        );
    }
    pass("cli demo byte-stable, exit codes 0..4 reachable");
}
