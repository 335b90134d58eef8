//! Default tolerances, collected in one place so every operation scales its
//! checks the same way.
//!
//! | constant          | value  | scaled by                | used for                          |
//! |-------------------|--------|--------------------------|-----------------------------------|
//! | `HERM_TOL`        | 1e-12  | 1 + max abs entry        | hermitian input validation        |
//! | `PSD_TOL`         | 1e-10  | max eigenvalue           | psd acceptance and rank cut       |
//! | `PIVOT_TOL`       | 1e-12  | max diagonal entry       | zero pivot detection in Cholesky  |
//! | `ZERO_TOL`        | 1e-8   | max abs factor entry     | off-pattern zero classification   |
//! | `VERIFY_TOL`      | 1e-8   | 1 + Frobenius norm of Q  | factor verification residual      |
//! | `ROOT_TOL`        | 1e-8   | relative                 | root pairing on the unit circle   |
//! | `CONV_TOL`        | 1e-8   | absolute (entrywise)     | truncation convergence deltas     |
//! | `GS_TOL`          | 1e-10  | largest member norm      | Gram-Schmidt dependence cut       |
//! | `TIKHONOV`        | 1e-12  | max eigenvalue of Gram   | projection solve regularization   |
//! | `RANGE_TOL`       | 1e-10  | relative                 | range comparison and containment  |
//!
//! All are relative unless noted; the scaling factor is applied at the call
//! site so that a tolerance of 0 always means an exact check.

/// Hermitian defect allowance, relative to `1 + max |entry|`.
pub const HERM_TOL: f64 = 1e-12;

/// Eigenvalue floor for positive semidefiniteness, relative to the largest
/// eigenvalue. Also the rank cut: eigenvalues above `PSD_TOL * max_eig` count.
pub const PSD_TOL: f64 = 1e-10;

/// Pivot floor in Cholesky elimination, relative to the largest diagonal
/// entry of the input. Pivots inside `[-tol, tol]` produce a zero column;
/// pivots below `-tol` reject the input as indefinite.
pub const PIVOT_TOL: f64 = 1e-12;

/// Classification threshold for "this factor entry is zero", relative to the
/// largest absolute entry of the factor.
pub const ZERO_TOL: f64 = 1e-8;

/// Default residual gate for factor verification, relative to
/// `1 + ||Q||_F`.
pub const VERIFY_TOL: f64 = 1e-8;

/// Default residual gate for analytic factor verification against a Toeplitz
/// section, relative to `1 + ||T||_F`. The band identity is exact, so this
/// sits close to roundoff.
pub const TOEPLITZ_VERIFY_TOL: f64 = 1e-12;

/// Pairing tolerance for spectral factorization roots: `r` and `1/conj(r')`
/// must agree within `ROOT_TOL` (relative) to count as a pair, and a pair
/// whose members both sit within `ROOT_TOL` of the unit circle is treated as
/// a boundary root of even multiplicity.
pub const ROOT_TOL: f64 = 1e-8;

/// Relative gate for the grid check `|f|^2 = p` after spectral factorization.
/// Boundary zeros limit attainable root accuracy to about sqrt(eps), so this
/// is looser than the verification tolerances above.
pub const FEJER_GRID_TOL: f64 = 1e-7;

/// Negativity allowance when validating a symbol as nonnegative, relative to
/// its largest coefficient modulus.
pub const SYMBOL_NEG_TOL: f64 = 1e-10;

/// Entrywise delta threshold for truncation convergence (absolute).
pub const CONV_TOL: f64 = 1e-8;

/// Largest window bound the automatic truncation schedule will try.
pub const MAX_TRUNCATION_N: u32 = 1024;

/// Dependence cut in Gram-Schmidt, relative to the largest member norm.
pub const GS_TOL: f64 = 1e-10;

/// Tikhonov shift for the projection Gram solve, relative to the largest
/// eigenvalue of the Gram matrix.
pub const TIKHONOV: f64 = 1e-12;

/// Relative tolerance for range comparison and range containment checks.
pub const RANGE_TOL: f64 = 1e-10;

/// Points where the symbol falls at or below this floor (relative to its
/// maximum on the grid) are excluded from the log integral and counted.
pub const LOG_ZERO_FLOOR: f64 = 1e-13;
