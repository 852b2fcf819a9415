//! Small dense linear-algebra contract shared by the filter and bound code.
//!
//! Everything that factorizes, solves, or makes a rank decision lives here so
//! the policies (jitter escalation, rank tolerance) are set in exactly one
//! place. Covariance matrices in this crate are symmetric positive
//! (semi-)definite, so the factorization is the symmetric L·Lᵀ special case.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Relative tolerance separating true rank deficiency from float noise.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Relative symmetry tolerance required of factorization inputs.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Jitter ladder: εI is added with ε = factor·trace/dim, escalating ×10
/// until factorization succeeds or the ladder is exhausted.
const JITTER_LADDER: [f64; 6] = [0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8];

/// Pivot tolerance (relative to the largest diagonal entry) below which a
/// pivot is treated as an exact semi-definite zero direction.
const PSD_PIVOT_TOL: f64 = 1e-12;

/// Lower-triangular factor of a symmetric positive (semi-)definite matrix,
/// together with the diagonal jitter that was applied to obtain it.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    lower: DMatrix<f64>,
    jitter: f64,
}

impl SpdFactor {
    /// The lower-triangular factor L with L·Lᵀ = A + jitter·I.
    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    /// Diagonal jitter ε that was added before factorization (0 when none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// Solve (L·Lᵀ)·X = B by forward/back substitution.
    ///
    /// Requires strictly positive pivots; a semi-definite factor (one with a
    /// zeroed pivot) cannot be solved against.
    pub fn solve(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if b.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.nrows(),
            });
        }
        if self.lower.diagonal().iter().any(|&d| d <= 0.0) {
            return Err(Error::NotPositiveDefinite(
                "semi-definite factor has a zero pivot; system is not solvable".into(),
            ));
        }
        let l = &self.lower;
        let mut x = b.clone();
        for col in 0..x.ncols() {
            // forward: L y = b
            for i in 0..n {
                let mut s = x[(i, col)];
                for k in 0..i {
                    s -= l[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = s / l[(i, i)];
            }
            // backward: Lᵀ x = y
            for i in (0..n).rev() {
                let mut s = x[(i, col)];
                for k in i + 1..n {
                    s -= l[(k, i)] * x[(k, col)];
                }
                x[(i, col)] = s / l[(i, i)];
            }
        }
        Ok(x)
    }
}

/// Largest absolute entry; zero for empty matrices.
pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
}

/// Replace A by (A + Aᵀ)/2.
pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

fn check_square_symmetric(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite("non-finite entries".into()));
    }
    let scale = max_abs(a);
    for i in 0..a.nrows() {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::NotPositiveDefinite(format!(
                    "asymmetry at ({i},{j}) exceeds relative tolerance {SYMMETRY_TOL:e}"
                )));
            }
        }
    }
    Ok(())
}

/// Cholesky with a semi-definite pivot tolerance. Returns `None` when a pivot
/// is negative beyond tolerance; zero pivots zero out their column so exact
/// PSD inputs (e.g. a zero process-noise matrix) still factor.
fn raw_cholesky(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let max_diag = (0..n).fold(0.0_f64, |m, i| m.max(a[(i, i)].abs()));
    let floor = PSD_PIVOT_TOL * max_diag;
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d > floor {
            let p = d.sqrt();
            l[(j, j)] = p;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / p;
            }
        } else if d >= -floor {
            // semi-definite null direction
            l[(j, j)] = 0.0;
        } else {
            return None;
        }
    }
    Some(l)
}

/// Factor a symmetric positive (semi-)definite matrix as L·Lᵀ.
///
/// On failure the jitter policy adds εI with ε escalating from
/// 1e-12·trace/dim up to 1e-8·trace/dim before giving up. Exhausting the
/// ladder reports `NotPositiveDefinite`, which upstream code treats as
/// filter divergence.
pub fn spd_factor(a: &DMatrix<f64>) -> Result<SpdFactor> {
    check_square_symmetric(a)?;
    let dim = a.nrows().max(1) as f64;
    let eps_scale = (a.trace() / dim).max(0.0);
    for &factor in &JITTER_LADDER {
        let jitter = factor * eps_scale;
        let candidate = if jitter == 0.0 {
            raw_cholesky(a)
        } else {
            let mut aj = a.clone();
            for i in 0..a.nrows() {
                aj[(i, i)] += jitter;
            }
            raw_cholesky(&aj)
        };
        if let Some(lower) = candidate {
            return Ok(SpdFactor { lower, jitter });
        }
    }
    Err(Error::NotPositiveDefinite(format!(
        "factorization failed after jitter up to {:e}",
        JITTER_LADDER[JITTER_LADDER.len() - 1] * eps_scale
    )))
}

/// Solve A·X = B for SPD A without forming an explicit inverse.
pub fn solve_spd(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spd_factor(a)?.solve(b)
}

/// Number of singular values above `tol` times the largest singular value.
///
/// Deterministic for fixed input; the zero matrix has rank 0.
pub fn numeric_rank(a: &DMatrix<f64>, tol: f64) -> usize {
    let sv = a.clone().svd(false, false).singular_values;
    let max_sv = sv.iter().fold(0.0_f64, |m, &v| m.max(v));
    if max_sv == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&v| v > tol * max_sv).count()
}

/// Invert an SPD matrix via its symmetric factorization.
///
/// No jitter is applied here: a rank-deficient input must surface as
/// `SingularMatrix` (the bound it would feed is infinite), never as a
/// silently regularized inverse.
pub fn invert_spd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square_symmetric(a).map_err(|_| Error::SingularMatrix {
        rank: 0,
        dim: a.nrows(),
    })?;
    let dim = a.nrows();
    let rank = numeric_rank(a, DEFAULT_RANK_TOL);
    if rank < dim {
        return Err(Error::SingularMatrix { rank, dim });
    }
    let lower = raw_cholesky(a).ok_or(Error::SingularMatrix { rank, dim })?;
    let factor = SpdFactor { lower, jitter: 0.0 };
    factor
        .solve(&DMatrix::identity(dim, dim))
        .map_err(|_| Error::SingularMatrix { rank, dim })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use rand::Rng;

    fn random_matrix(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = seeded_rng(seed);
        DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
        let g = random_matrix(n, seed);
        &g * g.transpose() + DMatrix::identity(n, n) * 1e-3
    }

    #[test]
    fn factor_identity() {
        let a = DMatrix::identity(3, 3);
        let f = spd_factor(&a).unwrap();
        assert_eq!(f.lower(), &DMatrix::identity(3, 3));
        assert_eq!(f.jitter(), 0.0);
    }

    #[test]
    fn factor_diagonal() {
        let a = DMatrix::from_diagonal(&nalgebra::dvector![4.0, 9.0, 16.0]);
        let f = spd_factor(&a).unwrap();
        let expected = DMatrix::from_diagonal(&nalgebra::dvector![2.0, 3.0, 4.0]);
        assert_eq!(f.lower(), &expected);
    }

    #[test]
    fn factor_reconstructs_random_spd() {
        // A = G·Gᵀ from a fixed seed; reconstruction within 1e-9 relative.
        let g = random_matrix(9, 7);
        let a = &g * g.transpose();
        let f = spd_factor(&a).unwrap();
        let recon = f.lower() * f.lower().transpose();
        let err = max_abs(&(&recon - &a)) - f.jitter();
        assert!(err <= 1e-9 * max_abs(&a), "reconstruction error {err:e}");
    }

    #[test]
    fn factor_zero_matrix_is_zero() {
        let a = DMatrix::zeros(4, 4);
        let f = spd_factor(&a).unwrap();
        assert_eq!(f.lower(), &DMatrix::zeros(4, 4));
    }

    #[test]
    fn factor_rejects_negative_definite() {
        let a = DMatrix::from_diagonal(&nalgebra::dvector![-1.0, -2.0, -3.0]);
        assert!(matches!(spd_factor(&a), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn factor_rejects_asymmetric() {
        let mut a = DMatrix::identity(3, 3);
        a[(0, 1)] = 0.5;
        assert!(spd_factor(&a).is_err());
    }

    #[test]
    fn solve_identity_system() {
        let a = DMatrix::identity(3, 3);
        let b = DMatrix::from_column_slice(3, 1, &[1.0, -2.0, 3.0]);
        let x = solve_spd(&a, &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn solve_diagonal_system() {
        let a = DMatrix::from_diagonal(&nalgebra::dvector![2.0, 2.0, 2.0]);
        let b = DMatrix::from_column_slice(3, 1, &[2.0, 4.0, 6.0]);
        let x = solve_spd(&a, &b).unwrap();
        let expected = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        assert!(max_abs(&(&x - &expected)) <= 1e-12);
    }

    #[test]
    fn solve_recovers_known_solution() {
        for seed in 0..5u64 {
            let a = random_spd(9, 100 + seed);
            let x_true = random_matrix(9, 200 + seed);
            let b = &a * &x_true;
            let x = solve_spd(&a, &b).unwrap();
            let rel = max_abs(&(&x - &x_true)) / max_abs(&x_true);
            assert!(rel <= 1e-8, "seed {seed}: relative error {rel:e}");
            let resid = max_abs(&(&a * &x - &b));
            assert!(resid <= 1e-8 * max_abs(&b));
        }
    }

    #[test]
    fn rank_of_zero_identity_outer() {
        assert_eq!(numeric_rank(&DMatrix::zeros(3, 3), DEFAULT_RANK_TOL), 0);
        assert_eq!(numeric_rank(&DMatrix::identity(3, 3), DEFAULT_RANK_TOL), 3);
        let v = nalgebra::dvector![1.0, 2.0, 3.0];
        let outer = &v * v.transpose();
        assert_eq!(numeric_rank(&outer, DEFAULT_RANK_TOL), 1);
    }

    #[test]
    fn rank_invariant_under_permutation_and_rotation() {
        let a = {
            // rank-2 matrix: sum of two independent outer products
            let u = nalgebra::dvector![1.0, -1.0, 2.0];
            let v = nalgebra::dvector![0.5, 3.0, 1.0];
            &u * u.transpose() + &v * v.transpose()
        };
        assert_eq!(numeric_rank(&a, DEFAULT_RANK_TOL), 2);

        // row/column permutation
        let mut p = DMatrix::zeros(3, 3);
        p[(0, 2)] = 1.0;
        p[(1, 0)] = 1.0;
        p[(2, 1)] = 1.0;
        let permuted = &p * &a * p.transpose();
        assert_eq!(numeric_rank(&permuted, DEFAULT_RANK_TOL), 2);

        // fixed random rotation via QR of a seeded matrix
        let q = random_matrix(3, 11).qr().q();
        let rotated = &q * &a * q.transpose();
        assert_eq!(numeric_rank(&rotated, DEFAULT_RANK_TOL), 2);
    }

    #[test]
    fn invert_diagonal() {
        let a = DMatrix::from_diagonal(&nalgebra::dvector![2.0, 4.0, 8.0]);
        let inv = invert_spd(&a).unwrap();
        let expected = DMatrix::from_diagonal(&nalgebra::dvector![0.5, 0.25, 0.125]);
        assert!(max_abs(&(&inv - &expected)) <= 1e-12);
        let id = invert_spd(&DMatrix::identity(3, 3)).unwrap();
        assert!(max_abs(&(&id - &DMatrix::identity(3, 3))) <= 1e-12);
    }

    #[test]
    fn invert_random_spd() {
        for seed in 0..5u64 {
            let a = random_spd(9, 300 + seed);
            let inv = invert_spd(&a).unwrap();
            let resid = max_abs(&(&a * &inv - DMatrix::identity(9, 9)));
            assert!(resid <= 1e-8, "seed {seed}: residual {resid:e}");
        }
    }

    #[test]
    fn invert_rejects_singular() {
        let v = nalgebra::dvector![1.0, 2.0, 3.0];
        let outer = &v * v.transpose();
        assert!(matches!(
            invert_spd(&outer),
            Err(Error::SingularMatrix { rank: 1, dim: 3 })
        ));
    }

    #[test]
    fn solve_against_identity_matches_inverse() {
        for &n in &[3usize, 9] {
            for seed in 0..3u64 {
                let a = random_spd(n, 400 + seed);
                let x = solve_spd(&a, &DMatrix::identity(n, n)).unwrap();
                let inv = invert_spd(&a).unwrap();
                assert!(max_abs(&(&x - &inv)) <= 1e-8, "n={n} seed={seed}");
            }
        }
    }

    #[test]
    fn jitter_rescues_near_singular() {
        // Rank-deficient PSD plus a tiny negative perturbation: raw Cholesky
        // fails, the ladder should rescue it.
        let v = nalgebra::dvector![1.0, 1.0, 1.0];
        let mut a = &v * v.transpose();
        a[(2, 2)] -= 1e-13;
        let f = spd_factor(&a).unwrap();
        let recon = f.lower() * f.lower().transpose();
        assert!(max_abs(&(&recon - &a)) <= 1e-9 * max_abs(&a) + f.jitter() + 1e-12);
    }
}
