//! Dense decompositions shared by the solvers and the theory checks.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value cutoff used for rank decisions.
pub const RANK_CUTOFF: f64 = 1e-10;

/// Orthonormal basis of the column space of `a` (left singular vectors whose
/// singular values exceed `RANK_CUTOFF * sigma_max`).
pub fn range_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = a.shape();
    if n == 0 || m == 0 {
        return DMatrix::zeros(n, 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return DMatrix::zeros(n, 0);
    }
    let keep: alloc::vec::Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > RANK_CUTOFF * smax)
        .map(|(i, _)| i)
        .collect();
    u.select_columns(keep.iter())
}

/// Numerical rank with the crate-wide relative cutoff.
pub fn rank(a: &DMatrix<f64>) -> usize {
    if a.is_empty() {
        return 0;
    }
    let s = a.clone().singular_values();
    let smax = s.max();
    s.iter().filter(|v| **v > RANK_CUTOFF * smax).count()
}

/// Orthonormal basis of `ker(a)` as the columns of a `p × d` matrix.
///
/// Wide matrices are padded with zero rows to square shape so the full set
/// of right singular vectors is available.
pub fn kernel_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = a.shape();
    let padded = if n < p {
        let mut sq = DMatrix::zeros(p, p);
        sq.view_mut((0, 0), (n, p)).copy_from(a);
        sq
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.max();
    let null: alloc::vec::Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| smax == 0.0 || **s <= RANK_CUTOFF * smax)
        .map(|(i, _)| i)
        .collect();
    v_t.select_rows(null.iter()).transpose()
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = a.clone().svd(true, true);
    let eps = RANK_CUTOFF * svd.singular_values.max();
    svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

/// Orthogonal projection of `y` onto the column space of `a`.
pub fn project_onto_range(a: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let u = range_basis(a);
    &u * (u.transpose() * y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_of_row_vector() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let k = kernel_basis(&a);
        assert_eq!(k.shape(), (2, 1));
        assert!((&a * &k).abs().max() < 1e-14);
        // proportional to (2, -1)
        assert!((k[(0, 0)] + 2.0 * k[(1, 0)]).abs() < 1e-12);
    }

    #[test]
    fn kernel_of_full_rank_is_empty() {
        let a = DMatrix::<f64>::identity(3, 3);
        assert_eq!(kernel_basis(&a).ncols(), 0);
        assert_eq!(rank(&a), 3);
    }

    #[test]
    fn range_basis_detects_centering_deficiency() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 2.0, -1.0, 1.0, -1.0, 0.0, -1.0, -1.0]);
        assert_eq!(range_basis(&a).ncols(), 2);
    }

    #[test]
    fn lstsq_projects() {
        let a = DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 1.0]);
        let b = DVector::from_column_slice(&[1.0, 2.0, 6.0]);
        assert!((lstsq(&a, &b)[0] - 3.0).abs() < 1e-12);
        assert!((project_onto_range(&a, &b) - DVector::from_element(3, 3.0)).amax() < 1e-12);
    }
}
