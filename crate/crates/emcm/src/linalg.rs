//! Small dense linear-algebra helpers used across the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Relative pivot floor below which an LU factorization is treated as singular.
const PIVOT_FLOOR: f64 = 1e-14;

/// Largest absolute entry of a real matrix.
pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Largest absolute deviation from symmetry.
pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows().min(m.ncols());
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Largest absolute deviation from symmetry of a complex matrix.
pub(crate) fn max_asymmetry_c(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows().min(m.ncols());
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).norm());
        }
    }
    worst
}

/// Force exact symmetry by averaging with the transpose.
pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}

/// LU solve of a complex system with a relative pivot check; `None` when the
/// matrix is singular to working precision.
pub(crate) fn solve_c(
    a: DMatrix<Complex64>,
    rhs: &DMatrix<Complex64>,
) -> Option<DMatrix<Complex64>> {
    let lu = a.lu();
    let u = lu.u();
    let n = u.nrows().min(u.ncols());
    let mut min_p = f64::INFINITY;
    let mut max_p = 0.0_f64;
    for i in 0..n {
        let p = u[(i, i)].norm();
        min_p = min_p.min(p);
        max_p = max_p.max(p);
    }
    if max_p == 0.0 || min_p < PIVOT_FLOOR * max_p {
        return None;
    }
    lu.solve(rhs)
}

/// LU solve of a real system with the same pivot check as [`solve_c`].
pub(crate) fn solve_r(a: DMatrix<f64>, rhs: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let lu = a.lu();
    let u = lu.u();
    let n = u.nrows().min(u.ncols());
    let mut min_p = f64::INFINITY;
    let mut max_p = 0.0_f64;
    for i in 0..n {
        let p = u[(i, i)].abs();
        min_p = min_p.min(p);
        max_p = max_p.max(p);
    }
    if max_p == 0.0 || min_p < PIVOT_FLOOR * max_p {
        return None;
    }
    lu.solve(rhs)
}

/// Symmetric eigendecomposition with eigenvalues (and matching eigenvectors)
/// sorted ascending.
pub(crate) fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let se = m.clone().symmetric_eigen();
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let values = DVector::from_iterator(n, order.iter().map(|&i| se.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Promote a real matrix to complex.
pub(crate) fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}
