//! Dense helpers on top of `nalgebra`. Every inverse in the crate goes
//! through [`solve`] or [`solve_matrix`]; nothing is inverted explicitly.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};

/// Reciprocal condition numbers below this are treated as singular.
const RCOND_FLOOR: f64 = 1e-14;

fn check_square(a: &DMatrix<f64>, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "{what}: expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    check_square(a, what)?;
    if a.nrows() != b.len() {
        return Err(Error::Dimension(format!(
            "{what}: matrix is {}x{} but right-hand side has length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let x = a
        .clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Singular(what.to_string()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(what.to_string()));
    }
    Ok(x)
}

/// Solves `a X = b` column by column with a single factorization.
pub fn solve_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    check_square(a, what)?;
    if a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "{what}: matrix is {}x{} but right-hand side has {} rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    let x = a
        .clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Singular(what.to_string()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(what.to_string()));
    }
    Ok(x)
}

pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    SVD::new(a.clone(), false, false).singular_values
}

/// 2-norm condition number, `inf` for a numerically singular matrix.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = singular_values(a);
    let max = sv.max();
    let min = sv.min();
    if max == 0.0 || min <= max * RCOND_FLOOR * 1e-2 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Number of singular values above `tol * max(1, sigma_max)`.
pub fn rank(a: &DMatrix<f64>, tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = singular_values(a);
    let cutoff = tol * sv.max().max(1.0);
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// Smallest eigenvalue of the symmetric part `(a + aᵀ) / 2`.
pub fn min_symmetric_eigenvalue(a: &DMatrix<f64>) -> Result<f64> {
    check_square(a, "symmetric part")?;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix passed to the eigensolver".into()));
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym).eigenvalues;
    Ok(eig.min())
}

/// Spectral radius of a square matrix.
///
/// Uses the real Schur form; if the QR sweep fails to converge the radius
/// is estimated from `‖a^k‖^(1/k)` with `k = 512` instead.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    if let Some(schur) = a.clone().try_schur(f64::EPSILON, 10_000) {
        return schur
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
    }
    const STEPS: usize = 512;
    let mut m = a.clone();
    let mut log_scale = 0.0;
    for _ in 1..STEPS {
        let norm = m.norm();
        if norm == 0.0 {
            return 0.0;
        }
        m /= norm;
        log_scale += norm.ln();
        m = &m * a;
    }
    ((log_scale + m.norm().ln()) / STEPS as f64).exp()
}

pub fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn diag(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_recovers_known_solution() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 2.0, 3.0]);
        let x = DVector::from_vec(vec![1.0, -2.0]);
        let b = &a * &x;
        let got = solve(&a, &b, "test").unwrap();
        assert!((got - x).amax() < 1e-14);
    }

    #[test]
    fn singular_solve_is_an_error() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(solve(&a, &b, "x"), Err(Error::Singular(_))));
    }

    #[test]
    fn radius_of_nilpotent_and_stochastic() {
        let nil = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert!(spectral_radius(&nil) < 1e-6);
        let p = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]);
        assert!((spectral_radius(&p) - 1.0).abs() < 1e-12);
        assert!((spectral_radius(&(p * 0.9)) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn rank_detects_dependent_columns() {
        let phi = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert_eq!(rank(&phi, 1e-10), 1);
        assert_eq!(rank(&DMatrix::identity(3, 3), 1e-10), 3);
    }

    #[test]
    fn identity_has_unit_symmetric_eigenvalue() {
        let m = min_symmetric_eigenvalue(&DMatrix::identity(4, 4)).unwrap();
        assert!((m - 1.0).abs() < 1e-15);
    }
}
