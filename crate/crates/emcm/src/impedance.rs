//! Evaluation of the pole-residue impedance series, its in-band/out-of-band
//! split, the coupling-matrix form of the in-band part, and conversion of
//! impedance to scattering parameters.
//!
//! The in-band terms of a model assemble into the coupling-matrix pair
//! `(C, K)`: `K = diag(k_1^2 .. k_N^2)` holds the squared eigenresonances and
//! the columns of `C` are the port-coupling vectors. The in-band impedance is
//! then the resolvent form
//!
//! ```text
//! Z_inband(k) = j k eta0 * C (K - k^2 I)^-1 C'
//! ```
//!
//! which agrees with the direct series sum at every non-resonant wavenumber.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{FrequencyBand, PoleResidueModel, PoleResidueTerm, PortRole, PortVector};

/// Relative distance to a pole below which evaluation refuses to proceed.
pub const POLE_TOLERANCE: f64 = 1e-12;

/// Port-coupling block `C` (P x N) and resonator block `K` (N x N) of the
/// second-order dynamical system behind the in-band impedance.
///
/// `K` is symmetric and positive semidefinite; it is diagonal in the
/// transversal (eigenmode) basis and dense after a change of basis to
/// local-resonator-like coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EmCouplingMatrix {
    c: DMatrix<f64>,
    k: DMatrix<f64>,
}

impl EmCouplingMatrix {
    /// Build from the port block `c` (P x N) and resonator block `k` (N x N).
    ///
    /// `k` must be symmetric to 1e-12 relative. Positive semidefiniteness is
    /// not verified here (it needs an eigendecomposition); operations that
    /// rely on it check and report instead.
    pub fn new(c: DMatrix<f64>, k: DMatrix<f64>) -> Result<Self> {
        if k.nrows() != k.ncols() || c.ncols() != k.nrows() {
            return Err(Error::DimensionMismatch {
                expected: "C: P x N and K: N x N".into(),
                found: format!(
                    "C: {} x {}, K: {} x {}",
                    c.nrows(),
                    c.ncols(),
                    k.nrows(),
                    k.ncols()
                ),
            });
        }
        let scale = linalg::max_abs(&k).max(1.0);
        let asym = linalg::max_asymmetry(&k);
        if asym > 1e-12 * scale {
            return Err(Error::DimensionMismatch {
                expected: "symmetric K".into(),
                found: format!("max |K - K'| = {asym}"),
            });
        }
        Ok(Self { c, k })
    }

    /// Port-coupling block, P x N.
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// Resonator block, N x N symmetric.
    pub fn k(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn ports(&self) -> usize {
        self.c.nrows()
    }

    pub fn order(&self) -> usize {
        self.k.nrows()
    }

    /// Assemble the full (P+N) x (P+N) matrix `[[0, C], [C', K]]`, ports first.
    pub fn full_matrix(&self) -> DMatrix<f64> {
        let p = self.ports();
        let n = self.order();
        let mut full = DMatrix::zeros(p + n, p + n);
        full.view_mut((0, p), (p, n)).copy_from(&self.c);
        full.view_mut((p, 0), (n, p)).copy_from(&self.c.transpose());
        full.view_mut((p, p), (n, n)).copy_from(&self.k);
        full
    }

    /// Split a full ports-first matrix back into `(C, K)` blocks.
    pub fn from_full_matrix(full: &DMatrix<f64>, ports: usize) -> Result<Self> {
        if full.nrows() != full.ncols() || full.nrows() <= ports {
            return Err(Error::DimensionMismatch {
                expected: format!("square matrix larger than {ports}"),
                found: format!("{} x {}", full.nrows(), full.ncols()),
            });
        }
        let n = full.nrows() - ports;
        let c = full.view((0, ports), (ports, n)).into_owned();
        let k = full.view((ports, ports), (n, n)).into_owned();
        Self::new(c, k)
    }

    /// Check positive semidefiniteness of `K` (smallest eigenvalue >= -tol).
    pub fn validate_psd(&self, tol: f64) -> Result<()> {
        let (values, _) = linalg::sorted_symmetric_eigen(&self.k);
        if !values.is_empty() && values[0] < -tol {
            return Err(Error::NotPositiveDefinite {
                eigenvalue: values[0],
            });
        }
        Ok(())
    }
}

/// Which state space a solved amplitude vector lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateBasis {
    /// Exact electromagnetic state of the second-order system.
    ExactEm,
    /// Approximate state of the narrowband (first-order) system.
    Narrowband,
}

/// Resonator amplitude vector produced by [`solve_state`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateSolution {
    pub amplitudes: DVector<Complex64>,
    pub basis: StateBasis,
}

/// Evaluate the full pole-residue series at wavenumber `k` (rad/m).
///
/// Returns `PoleHit` when `k` is within [`POLE_TOLERANCE`] (relative) of any
/// pole of the series.
pub fn eval_impedance(model: &PoleResidueModel, k: f64) -> Result<DMatrix<Complex64>> {
    eval_impedance_terms(&model.terms, model.ports, model.eta0, k)
}

/// Evaluate the series restricted to `terms`; used for the in-band and
/// out-of-band partial impedances.
pub fn eval_impedance_terms(
    terms: &[PoleResidueTerm],
    ports: usize,
    eta0: f64,
    k: f64,
) -> Result<DMatrix<Complex64>> {
    if !k.is_finite() || k <= 0.0 {
        return Err(Error::NonPositive {
            field: "k",
            value: k,
        });
    }
    let mut sum = DMatrix::<f64>::zeros(ports, ports);
    for (i, term) in terms.iter().enumerate() {
        if term.c.len() != ports {
            return Err(Error::LengthMismatch {
                term: i,
                expected: ports,
                found: term.c.len(),
            });
        }
        let near = if term.k_n > 0.0 {
            (k - term.k_n).abs() / term.k_n < POLE_TOLERANCE
        } else {
            false // k > 0 keeps the static pole at k = 0 out of reach
        };
        if near {
            return Err(Error::PoleHit { k, pole: term.k_n });
        }
        let denom = term.k_n * term.k_n - k * k;
        sum.syger(1.0 / denom, &term.c, &term.c, 1.0);
    }
    // syger fills the lower triangle only; mirror it.
    for i in 0..ports {
        for j in (i + 1)..ports {
            sum[(i, j)] = sum[(j, i)];
        }
    }
    let jk_eta = Complex64::new(0.0, k * eta0);
    Ok(sum.map(|v| jk_eta * v))
}

/// Partition the model's terms into in-band and out-of-band sets for `band`.
///
/// The interval is closed: a pole exactly on a band edge counts as in-band.
/// Returned terms carry corrected `inband` flags; the partition is exhaustive
/// and disjoint, so the two partial impedances sum to the full series.
pub fn split_inband(
    model: &PoleResidueModel,
    band: &FrequencyBand,
) -> (Vec<PoleResidueTerm>, Vec<PoleResidueTerm>) {
    let mut inband = Vec::new();
    let mut outofband = Vec::new();
    for term in &model.terms {
        let mut term = term.clone();
        if band.contains_k(term.k_n) {
            term.inband = true;
            inband.push(term);
        } else {
            term.inband = false;
            outofband.push(term);
        }
    }
    (inband, outofband)
}

/// Assemble the transversal coupling-matrix pair from in-band terms:
/// `K = diag(k_n^2)`, columns of `C` are the coupling vectors.
pub fn em_coupling_from_inband(terms: &[PoleResidueTerm]) -> Result<EmCouplingMatrix> {
    if terms.is_empty() {
        return Err(Error::EmptyInBand);
    }
    let ports = terms[0].c.len();
    let n = terms.len();
    let mut c = DMatrix::zeros(ports, n);
    let mut k = DMatrix::zeros(n, n);
    for (j, term) in terms.iter().enumerate() {
        if term.c.len() != ports {
            return Err(Error::LengthMismatch {
                term: j,
                expected: ports,
                found: term.c.len(),
            });
        }
        c.set_column(j, &term.c);
        k[(j, j)] = term.k_n * term.k_n;
    }
    EmCouplingMatrix::new(c, k)
}

/// In-band impedance in resolvent form, `Z = j k eta0 C (K - k^2 I)^-1 C'`.
pub fn impedance_from_em(emcm: &EmCouplingMatrix, eta0: f64, k: f64) -> Result<DMatrix<Complex64>> {
    let k2 = k * k;
    let shifted = emcm.k() - k2 * DMatrix::identity(emcm.order(), emcm.order());
    let rhs = emcm.c().transpose();
    let solved = linalg::solve_r(shifted, &rhs).ok_or(Error::SingularShift { shift: k2 })?;
    let real_part = emcm.c() * solved;
    let jk_eta = Complex64::new(0.0, k * eta0);
    Ok(real_part.map(|v| jk_eta * v))
}

/// Solve the second-order system for the resonator state driven by port
/// currents: `E = -(K - k^2 I)^-1 C' i`.
///
/// The port voltages follow as `v_inband = -j k eta0 C E`.
pub fn solve_state(
    emcm: &EmCouplingMatrix,
    _eta0: f64,
    k: f64,
    drive: &PortVector,
) -> Result<StateSolution> {
    if drive.role != PortRole::Current {
        return Err(Error::InvalidArgument(
            "solve_state drives the system with port currents".into(),
        ));
    }
    if drive.values.len() != emcm.ports() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} port entries", emcm.ports()),
            found: format!("{}", drive.values.len()),
        });
    }
    let k2 = k * k;
    let n = emcm.order();
    let shifted = linalg::to_complex(&(emcm.k() - k2 * DMatrix::identity(n, n)));
    let rhs_vec = linalg::to_complex(&emcm.c().transpose()) * &drive.values;
    let rhs = DMatrix::from_column_slice(n, 1, rhs_vec.as_slice());
    let solved = linalg::solve_c(shifted, &rhs).ok_or(Error::SingularShift { shift: k2 })?;
    let amplitudes = DVector::from_iterator(n, solved.column(0).iter().map(|v| -v));
    Ok(StateSolution {
        amplitudes,
        basis: StateBasis::ExactEm,
    })
}

/// Convert an impedance matrix to scattering parameters with reference
/// impedance `z_ref`: `S = (Z/z_ref - I)(Z/z_ref + I)^-1`.
pub fn z_to_s(z: &DMatrix<Complex64>, z_ref: f64) -> Result<DMatrix<Complex64>> {
    if z.nrows() != z.ncols() {
        return Err(Error::DimensionMismatch {
            expected: "square impedance matrix".into(),
            found: format!("{} x {}", z.nrows(), z.ncols()),
        });
    }
    if !z_ref.is_finite() || z_ref <= 0.0 {
        return Err(Error::NonPositive {
            field: "z_ref",
            value: z_ref,
        });
    }
    let p = z.nrows();
    let w = z / Complex64::new(z_ref, 0.0);
    let eye = DMatrix::<Complex64>::identity(p, p);
    let plus = &w + &eye;
    let minus = &w - &eye;
    // (W - I)(W + I)^-1 is symmetric for symmetric W; solve the transposed
    // system so no explicit inverse is formed.
    let y = linalg::solve_c(plus, &minus).ok_or(Error::SingularConversion)?;
    Ok(y.transpose())
}

/// Scattering-parameter frequency sweep with its reference impedance.
#[derive(Debug, Clone, PartialEq)]
pub struct SParameterSweep {
    frequencies_hz: Vec<f64>,
    matrices: Vec<DMatrix<Complex64>>,
    z_ref: f64,
}

impl SParameterSweep {
    /// Symmetry tolerance enforced on every stored matrix.
    pub const SYMMETRY_TOL: f64 = 1e-10;

    pub fn new(
        frequencies_hz: Vec<f64>,
        matrices: Vec<DMatrix<Complex64>>,
        z_ref: f64,
    ) -> Result<Self> {
        if frequencies_hz.len() != matrices.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} matrices", frequencies_hz.len()),
                found: format!("{}", matrices.len()),
            });
        }
        for m in &matrices {
            let asym = linalg::max_asymmetry_c(m);
            if asym > Self::SYMMETRY_TOL {
                return Err(Error::DimensionMismatch {
                    expected: "reciprocal (symmetric) S matrices".into(),
                    found: format!("max asymmetry {asym}"),
                });
            }
        }
        Ok(Self {
            frequencies_hz,
            matrices,
            z_ref,
        })
    }

    pub fn frequencies_hz(&self) -> &[f64] {
        &self.frequencies_hz
    }

    pub fn matrices(&self) -> &[DMatrix<Complex64>] {
        &self.matrices
    }

    pub fn z_ref(&self) -> f64 {
        self.z_ref
    }

    pub fn len(&self) -> usize {
        self.frequencies_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies_hz.is_empty()
    }

    pub fn ports(&self) -> usize {
        self.matrices.first().map_or(0, |m| m.nrows())
    }
}

/// Evaluate S parameters of the full series model over a uniform frequency
/// grid. Grid points are evaluated independently, so the result does not
/// depend on evaluation order.
pub fn sweep_s_parameters(
    model: &PoleResidueModel,
    f_start_hz: f64,
    f_stop_hz: f64,
    points: usize,
    z_ref: f64,
) -> Result<SParameterSweep> {
    if points == 0 {
        return Err(Error::InvalidArgument(
            "sweep needs at least 1 point".into(),
        ));
    }
    if !f_start_hz.is_finite() || f_start_hz <= 0.0 || f_stop_hz < f_start_hz {
        return Err(Error::InvalidArgument(format!(
            "bad sweep range [{f_start_hz}, {f_stop_hz}]"
        )));
    }
    let mut freqs = Vec::with_capacity(points);
    let mut mats = Vec::with_capacity(points);
    for i in 0..points {
        let f = if points == 1 {
            f_start_hz
        } else {
            f_start_hz + (f_stop_hz - f_start_hz) * i as f64 / (points - 1) as f64
        };
        let k = crate::model::wavenumber(f);
        let z = eval_impedance(model, k)?;
        let s = z_to_s(&z, z_ref)?;
        freqs.push(f);
        mats.push(s);
    }
    SParameterSweep::new(freqs, mats, z_ref)
}

/// True when the impedance matrix is purely imaginary to `tol`, as it must be
/// for a lossless model (real couplings, real poles) on the real-k axis.
pub fn is_lossless(z: &DMatrix<Complex64>, tol: f64) -> bool {
    z.iter().all(|v| v.re.abs() <= tol)
}
