//! Orthogonal changes of basis of the resonator state space, and
//! coupling-matrix comparison diagnostics.
//!
//! The port response is invariant under any orthogonal transform `Q` of the
//! resonator block (`C -> C Q`, `K -> Q' K Q`); eigendecomposition of `K`
//! recovers the transversal (diagonal) form from a dense one.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::impedance::EmCouplingMatrix;
use crate::linalg;

/// Real orthogonal change of basis for the resonator state space.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisTransform {
    q: DMatrix<f64>,
}

impl BasisTransform {
    /// Orthogonality tolerance on `max |Q'Q - I|`.
    pub const ORTHOGONALITY_TOL: f64 = 1e-12;

    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        if q.nrows() != q.ncols() {
            return Err(Error::DimensionMismatch {
                expected: "square matrix".into(),
                found: format!("{} x {}", q.nrows(), q.ncols()),
            });
        }
        let gram = q.transpose() * &q;
        let eye = DMatrix::identity(q.nrows(), q.ncols());
        let deviation = linalg::max_abs(&(gram - eye));
        if deviation > Self::ORTHOGONALITY_TOL {
            return Err(Error::NotOrthogonal { deviation });
        }
        Ok(Self { q })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// The inverse transform (transpose, since `Q` is orthogonal).
    pub fn inverse(&self) -> Self {
        Self {
            q: self.q.transpose(),
        }
    }
}

/// Transform the coupling-matrix pair: `C' = C Q`, `K' = Q' K Q`.
///
/// The impedance (and therefore the S parameters) of the transformed system
/// is identical to the original at every frequency.
pub fn apply_basis(
    emcm: &EmCouplingMatrix,
    transform: &BasisTransform,
) -> Result<EmCouplingMatrix> {
    if transform.dim() != emcm.order() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} x {} transform", emcm.order(), emcm.order()),
            found: format!("{} x {}", transform.dim(), transform.dim()),
        });
    }
    let q = transform.matrix();
    let c = emcm.c() * q;
    let k = linalg::symmetrize(&(q.transpose() * emcm.k() * q));
    EmCouplingMatrix::new(c, k)
}

/// Diagonalize the resonator block: returns the transversal form (ascending
/// eigenvalues on the diagonal of `K`) together with the transform `Q` that
/// produced it, so `apply_basis(result, Q')` recovers the input.
///
/// Eigenvector signs are fixed so that the largest-magnitude component of
/// each column is positive, making the output reproducible; two results that
/// differ by a diagonal +-1 similarity are physically equivalent.
pub fn to_transversal(emcm: &EmCouplingMatrix) -> (EmCouplingMatrix, BasisTransform) {
    let (values, mut q) = linalg::sorted_symmetric_eigen(emcm.k());
    let n = values.len();
    for j in 0..n {
        let col = q.column(j);
        let mut lead = 0;
        let mut best = 0.0_f64;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                lead = i;
            }
        }
        if q[(lead, j)] < 0.0 {
            let negated = -q.column(j);
            q.set_column(j, &negated);
        }
    }
    let c = emcm.c() * &q;
    let k = DMatrix::from_diagonal(&values);
    let transversal = EmCouplingMatrix::new(c, k).expect("diagonal block is symmetric");
    let transform = BasisTransform { q };
    (transversal, transform)
}

/// One entry of a coupling-matrix comparison.
///
/// `row` and `col` are 1-based positions in the printed (P+N) x (P+N) layout,
/// ports first, upper triangle only.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonEntry {
    pub row: usize,
    pub col: usize,
    pub value_a: f64,
    pub value_b: f64,
    pub delta: f64,
}

/// Ranked difference report between two coupling matrices of equal size.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    entries: Vec<ComparisonEntry>,
}

impl ComparisonReport {
    /// Entries sorted by descending |delta|, ties broken by (row, col).
    pub fn entries(&self) -> &[ComparisonEntry] {
        &self.entries
    }

    /// Entries with |delta| at or above `threshold`.
    pub fn above(&self, threshold: f64) -> Vec<&ComparisonEntry> {
        self.entries
            .iter()
            .filter(|e| e.delta >= threshold)
            .collect()
    }
}

/// Rank the largest entry-wise changes between two symmetric coupling
/// matrices. Symmetric pairs are collapsed to the upper triangle and exact
/// zero deltas are dropped; at most `top_k` entries are returned.
pub fn compare_coupling(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    top_k: usize,
) -> Result<ComparisonReport> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: format!("{:?}", a.shape()),
            found: format!("{:?}", b.shape()),
        });
    }
    let n = a.nrows();
    let mut entries = Vec::new();
    for i in 0..n {
        for j in i..n {
            let delta = (a[(i, j)] - b[(i, j)]).abs();
            if delta > 0.0 {
                entries.push(ComparisonEntry {
                    row: i + 1,
                    col: j + 1,
                    value_a: a[(i, j)],
                    value_b: b[(i, j)],
                    delta,
                });
            }
        }
    }
    entries.sort_by(|x, y| {
        y.delta
            .partial_cmp(&x.delta)
            .unwrap()
            .then(x.row.cmp(&y.row))
            .then(x.col.cmp(&y.col))
    });
    entries.truncate(top_k);
    Ok(ComparisonReport { entries })
}

/// Fix the sign gauge of a full ports-first coupling matrix.
///
/// Coupling matrices related by a diagonal +-1 similarity of the resonator
/// block have identical responses. This picks the representative in which,
/// for each resonator column in turn, the first nonzero coupling to an
/// already-fixed index (ports count as fixed) is positive. Used to compare
/// fitted matrices up to the sign-flip equivalence.
pub fn canonical_signs(full: &DMatrix<f64>, ports: usize) -> DMatrix<f64> {
    let total = full.nrows();
    let mut signs = vec![1.0_f64; total];
    for j in ports..total {
        let mut sign = 1.0;
        for i in 0..j {
            let v = full[(i, j)] * signs[i];
            if v.abs() > 1e-9 {
                sign = v.signum();
                break;
            }
        }
        signs[j] = sign;
    }
    let mut out = full.clone();
    for i in 0..total {
        for j in 0..total {
            out[(i, j)] = full[(i, j)] * signs[i] * signs[j];
        }
    }
    out
}
