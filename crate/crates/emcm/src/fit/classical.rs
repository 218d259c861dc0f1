//! Transmission/reflection-zero extraction from classical coupling matrices
//! and damped least-squares fitting of a masked coupling matrix to zero/pole
//! targets.
//!
//! Zeros are located by scanning the rational response on a grid and
//! polishing each bracketed minimum with bisection on the derivative of the
//! squared magnitude. This works uniformly for any topology and port count,
//! where submatrix eigenvalue shortcuts do not.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::impedance::z_to_s;
use crate::narrowband::{eval_classical, ClassicalCouplingMatrix};

/// Magnitude below which a polished |S21| minimum counts as a transmission
/// zero. True zeros polish far below this.
const TZ_MAGNITUDE: f64 = 1e-6;

/// Acceptance threshold for reflection zeros. Looser than the transmission
/// threshold: |S11| minima of a coupling matrix printed to four decimals
/// bottom out around 1e-4 instead of touching zero.
const RZ_MAGNITUDE: f64 = 1e-3;

/// Acceptance threshold for the fit's internal reflection-dip tracking. A
/// detuned iterate's |S11| minima are lifted well off zero but remain sharp,
/// smooth functions of the couplings; tracking them at any depth keeps the
/// location objective defined along the whole descent path. They coincide
/// with true reflection zeros once the fit converges.
const DIP_MAGNITUDE: f64 = 0.9;

/// Bisection tolerance on the zero location in normalized frequency.
const REFINE_TOL: f64 = 1e-12;

/// Zeros and natural frequencies of a classical prototype, all in the
/// normalized low-pass variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroSet {
    /// Normalized frequencies where |S21| vanishes, ascending.
    pub transmission_zeros: Vec<f64>,
    /// Normalized frequencies where |S11| vanishes, ascending.
    pub reflection_zeros: Vec<f64>,
    /// Eigen-frequencies of the port-terminated network (complex, ascending
    /// by real part).
    pub prototype_poles: Vec<Complex64>,
}

/// |S_rc| at normalized frequency `kn`, or `None` when the prototype is
/// singular there (the scan treats such points as "no minimum").
fn s_magnitude(
    ccm: &ClassicalCouplingMatrix,
    z_ref: f64,
    kn: f64,
    row: usize,
    col: usize,
) -> Option<f64> {
    let z = eval_classical(ccm, kn).ok()?;
    let s = z_to_s(&z, z_ref).ok()?;
    Some(s[(row, col)].norm())
}

/// d|S_rc|^2/dK by central differences; used only to steer the bisection.
fn s_mag_slope(
    ccm: &ClassicalCouplingMatrix,
    z_ref: f64,
    kn: f64,
    h: f64,
    row: usize,
    col: usize,
) -> Option<f64> {
    let plus = s_magnitude(ccm, z_ref, kn + h, row, col)?;
    let minus = s_magnitude(ccm, z_ref, kn - h, row, col)?;
    Some((plus * plus - minus * minus) / (2.0 * h))
}

/// One parabolic-interpolation step on |S_rc|^2 about `kn`.
///
/// The bisection result is quantized at the tolerance level, which feeds
/// visible noise into finite-difference Jacobians over the zero locations;
/// the interpolated minimizer is smooth in the matrix entries and accurate
/// to O(h^2) for the near-quadratic magnitude around a zero.
fn parabolic_polish(
    ccm: &ClassicalCouplingMatrix,
    z_ref: f64,
    kn: f64,
    row: usize,
    col: usize,
) -> Option<f64> {
    let h = 1e-6;
    let g = |at: f64| s_magnitude(ccm, z_ref, at, row, col).map(|m| m * m);
    let g_minus = g(kn - h)?;
    let g_center = g(kn)?;
    let g_plus = g(kn + h)?;
    let curvature = g_plus - 2.0 * g_center + g_minus;
    if curvature <= 0.0 {
        return Some(kn);
    }
    let step = -0.5 * h * (g_plus - g_minus) / curvature;
    Some(kn + step.clamp(-h, h))
}

/// Polish a bracketed minimum of |S_rc| down to [`REFINE_TOL`] in `kn`.
fn refine_minimum(
    ccm: &ClassicalCouplingMatrix,
    z_ref: f64,
    mut lo: f64,
    mut hi: f64,
    row: usize,
    col: usize,
) -> Option<f64> {
    let h = 1e-7 * (hi - lo).max(1e-9);
    let slope_lo = s_mag_slope(ccm, z_ref, lo, h, row, col)?;
    let slope_hi = s_mag_slope(ccm, z_ref, hi, h, row, col)?;
    if slope_lo > 0.0 || slope_hi < 0.0 {
        // The bracket does not straddle a descending-to-ascending minimum;
        // fall back to golden-section on the magnitude itself.
        let seed = golden_section(ccm, z_ref, lo, hi, row, col)?;
        return parabolic_polish(ccm, z_ref, seed, row, col);
    }
    for _ in 0..200 {
        if hi - lo < REFINE_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match s_mag_slope(ccm, z_ref, mid, h, row, col) {
            Some(s) if s < 0.0 => lo = mid,
            Some(_) => hi = mid,
            None => return None,
        }
    }
    parabolic_polish(ccm, z_ref, 0.5 * (lo + hi), row, col)
}

fn golden_section(
    ccm: &ClassicalCouplingMatrix,
    z_ref: f64,
    mut lo: f64,
    mut hi: f64,
    row: usize,
    col: usize,
) -> Option<f64> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = s_magnitude(ccm, z_ref, x1, row, col)?;
    let mut f2 = s_magnitude(ccm, z_ref, x2, row, col)?;
    for _ in 0..200 {
        if hi - lo < REFINE_TOL {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = s_magnitude(ccm, z_ref, x1, row, col)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = s_magnitude(ccm, z_ref, x2, row, col)?;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Scan |S_rc| over the grid and return every polished zero below the
/// acceptance magnitude, ascending.
#[allow(clippy::too_many_arguments)]
fn scan_zeros(
    ccm: &ClassicalCouplingMatrix,
    z_ref: f64,
    k_lo: f64,
    k_hi: f64,
    grid: usize,
    row: usize,
    col: usize,
    accept: f64,
) -> Vec<f64> {
    let step = (k_hi - k_lo) / (grid - 1) as f64;
    let mags: Vec<Option<f64>> = (0..grid)
        .map(|i| s_magnitude(ccm, z_ref, k_lo + step * i as f64, row, col))
        .collect();
    let mut zeros = Vec::new();
    for i in 1..grid - 1 {
        let (Some(prev), Some(here), Some(next)) = (mags[i - 1], mags[i], mags[i + 1]) else {
            continue;
        };
        if here <= prev && here <= next {
            let lo = k_lo + step * (i - 1) as f64;
            let hi = k_lo + step * (i + 1) as f64;
            if let Some(kn) = refine_minimum(ccm, z_ref, lo, hi, row, col) {
                if let Some(mag) = s_magnitude(ccm, z_ref, kn, row, col) {
                    if mag < accept {
                        zeros.push(kn);
                    }
                }
            }
        }
    }
    zeros.sort_by(|a, b| a.partial_cmp(b).unwrap());
    zeros.dedup_by(|a, b| (*a - *b).abs() < 1e-8);
    zeros
}

/// Natural frequencies of the prototype terminated in `z_ref` at every port:
/// the eigenvalues of `-M + j D'D / z_ref` in the normalized variable.
pub fn prototype_poles(ccm: &ClassicalCouplingMatrix, z_ref: f64) -> Result<Vec<Complex64>> {
    let n = ccm.order();
    let gram = ccm.d().transpose() * ccm.d() / z_ref;
    let mut system = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            system[(i, j)] = Complex64::new(-ccm.m()[(i, j)], gram[(i, j)]);
        }
    }
    let schur = system
        .try_schur(1e-14, 100_000)
        .ok_or_else(|| Error::InvalidArgument("pole eigenvalue iteration failed".into()))?;
    let t = schur.unpack().1;
    let mut poles: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    poles.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    Ok(poles)
}

/// Extract transmission zeros, reflection zeros and prototype poles by
/// scanning `[k_lo, k_hi]` with `grid` points and polishing each minimum.
///
/// Transmission zeros are read off |S21| (ports 1 to 2) and reflection zeros
/// off |S11|; single-port prototypes report no transmission zeros. Empty
/// lists simply mean nothing was found in range.
pub fn find_zeros(
    ccm: &ClassicalCouplingMatrix,
    z_ref: f64,
    k_lo: f64,
    k_hi: f64,
    grid: usize,
) -> Result<ZeroSet> {
    if grid < 11 {
        return Err(Error::InvalidArgument(format!(
            "zero scan needs at least 11 grid points, got {grid}"
        )));
    }
    if k_hi <= k_lo || !k_hi.is_finite() || !k_lo.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "bad scan range [{k_lo}, {k_hi}]"
        )));
    }
    let transmission_zeros = if ccm.ports() >= 2 {
        scan_zeros(ccm, z_ref, k_lo, k_hi, grid, 1, 0, TZ_MAGNITUDE)
    } else {
        Vec::new()
    };
    let reflection_zeros = scan_zeros(ccm, z_ref, k_lo, k_hi, grid, 0, 0, RZ_MAGNITUDE);
    let poles = prototype_poles(ccm, z_ref)?;
    Ok(ZeroSet {
        transmission_zeros,
        reflection_zeros,
        prototype_poles: poles,
    })
}

/// Boolean pattern of couplings allowed to be nonzero, over the full
/// ports-first (P+N) x (P+N) layout.
///
/// The port-port block is always disallowed and the resonator diagonal always
/// allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyMask {
    allowed: DMatrix<bool>,
    ports: usize,
}

impl TopologyMask {
    pub fn new(mut allowed: DMatrix<bool>, ports: usize) -> Result<Self> {
        if allowed.nrows() != allowed.ncols() || allowed.nrows() <= ports {
            return Err(Error::DimensionMismatch {
                expected: format!("square mask larger than {ports}"),
                found: format!("{} x {}", allowed.nrows(), allowed.ncols()),
            });
        }
        let total = allowed.nrows();
        for i in 0..total {
            for j in 0..total {
                if allowed[(i, j)] != allowed[(j, i)] {
                    return Err(Error::DimensionMismatch {
                        expected: "symmetric mask".into(),
                        found: format!("asymmetric at ({}, {})", i + 1, j + 1),
                    });
                }
            }
        }
        for i in 0..ports {
            for j in 0..ports {
                allowed[(i, j)] = false;
            }
        }
        for i in ports..total {
            allowed[(i, i)] = true;
        }
        Ok(Self { allowed, ports })
    }

    /// Mask matching the nonzero pattern of `full` (plus the resonator
    /// diagonal, which is always tunable).
    pub fn from_nonzeros(full: &DMatrix<f64>, ports: usize) -> Result<Self> {
        let allowed = full.map(|v| v.abs() > 1e-12);
        Self::new(allowed, ports)
    }

    pub fn ports(&self) -> usize {
        self.ports
    }

    pub fn size(&self) -> usize {
        self.allowed.nrows()
    }

    pub fn allows(&self, row: usize, col: usize) -> bool {
        self.allowed[(row, col)]
    }

    /// Free parameter positions: the upper triangle (diagonal included) of
    /// every allowed entry outside the port-port block.
    pub fn free_entries(&self) -> Vec<(usize, usize)> {
        let total = self.size();
        let mut free = Vec::new();
        for i in 0..total {
            for j in i..total {
                if self.allowed[(i, j)] {
                    free.push((i, j));
                }
            }
        }
        free
    }

    /// Error if `full` has a nonzero entry outside the mask.
    pub fn check(&self, full: &DMatrix<f64>) -> Result<()> {
        if full.nrows() != self.size() {
            return Err(Error::DimensionMismatch {
                expected: format!("{0} x {0}", self.size()),
                found: format!("{} x {}", full.nrows(), full.ncols()),
            });
        }
        for i in 0..self.size() {
            for j in i..self.size() {
                if !self.allowed[(i, j)] && full[(i, j)].abs() > 1e-12 {
                    return Err(Error::MaskViolation {
                        row: i + 1,
                        col: j + 1,
                    });
                }
            }
        }
        Ok(())
    }
}

/// What the classical fit should reproduce.
#[derive(Debug, Clone)]
pub enum FitTargets {
    /// Match transmission zeros, reflection zeros and prototype poles.
    Zeros(ZeroSet),
    /// Match sampled S matrices on a normalized-frequency grid.
    SampledS {
        kn: Vec<f64>,
        matrices: Vec<DMatrix<Complex64>>,
    },
}

/// Knobs of [`fit_classical`]. The weights let callers trade off the three
/// target families; they default to equal.
#[derive(Debug, Clone)]
pub struct ClassicalFitOptions {
    pub max_iters: usize,
    /// Stop when the residual norm falls at or below this.
    pub tol: f64,
    pub weight_tz: f64,
    pub weight_rz: f64,
    pub weight_pole: f64,
    /// Termination impedance (prototype convention is 1).
    pub z_ref: f64,
    /// Scan window used when locating an iterate's own zeros. The grid only
    /// brackets minima (refinement sets the accuracy), so it just needs to
    /// separate neighboring zeros.
    pub scan_lo: f64,
    pub scan_hi: f64,
    pub scan_grid: usize,
}

impl Default for ClassicalFitOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-9,
            weight_tz: 1.0,
            weight_rz: 1.0,
            weight_pole: 1.0,
            z_ref: 1.0,
            scan_lo: -10.0,
            scan_hi: 10.0,
            scan_grid: 801,
        }
    }
}

/// Result of [`fit_classical`].
#[derive(Debug, Clone)]
pub struct ClassicalFitReport {
    pub ccm: ClassicalCouplingMatrix,
    /// Euclidean norm of the weighted target mismatch at the returned matrix.
    pub residual: f64,
    pub iterations: usize,
    /// False when the damping loop hit `max_iters` before reaching `tol`;
    /// the best iterate is returned either way.
    pub converged: bool,
}

/// S entry at normalized frequency `kn`, nudging off exact prototype
/// resonances so the objective stays evaluable everywhere.
fn s_entry(
    ccm: &ClassicalCouplingMatrix,
    z_ref: f64,
    kn: f64,
    row: usize,
    col: usize,
) -> Result<Complex64> {
    for attempt in 0..3 {
        let shift = kn + attempt as f64 * 1e-9;
        if let Ok(z) = eval_classical(ccm, shift) {
            return Ok(z_to_s(&z, z_ref)?[(row, col)]);
        }
    }
    Err(Error::SingularShift { shift: -kn })
}

/// Weighted mismatch of the matrix against the targets.
///
/// Zero/pole targets enter as the real and imaginary parts of S21 at each
/// target transmission zero and S11 at each target reflection zero (both
/// vanish exactly when the matrix has a zero there), plus positional
/// differences of the sorted prototype poles. Evaluating S at the target
/// locations keeps the residual smooth and of fixed dimension even while an
/// iterate's own zeros are off the real axis, which happens for asymmetric
/// perturbations.
fn residual_vector(
    ccm: &ClassicalCouplingMatrix,
    targets: &FitTargets,
    opts: &ClassicalFitOptions,
) -> Result<DVector<f64>> {
    let mut out = Vec::new();
    match targets {
        FitTargets::Zeros(zs) => {
            for &kt in &zs.transmission_zeros {
                let s = s_entry(ccm, opts.z_ref, kt, 1, 0)?;
                out.push(opts.weight_tz * s.re);
                out.push(opts.weight_tz * s.im);
            }
            for &kr in &zs.reflection_zeros {
                let s = s_entry(ccm, opts.z_ref, kr, 0, 0)?;
                out.push(opts.weight_rz * s.re);
                out.push(opts.weight_rz * s.im);
            }
            if !zs.prototype_poles.is_empty() {
                let found = prototype_poles(ccm, opts.z_ref)?;
                for (got, want) in found.iter().zip(&zs.prototype_poles) {
                    let d = got - want;
                    out.push(opts.weight_pole * d.re);
                    out.push(opts.weight_pole * d.im);
                }
            }
        }
        FitTargets::SampledS { kn, matrices } => {
            for (kn, target) in kn.iter().zip(matrices) {
                let z = eval_classical(ccm, *kn)?;
                let s = z_to_s(&z, opts.z_ref)?;
                for (got, want) in s.iter().zip(target.iter()) {
                    out.push(got.re - want.re);
                    out.push(got.im - want.im);
                }
            }
        }
    }
    Ok(DVector::from_vec(out))
}

fn matrix_from_params(
    template: &ClassicalCouplingMatrix,
    free: &[(usize, usize)],
    params: &DVector<f64>,
    ports: usize,
) -> ClassicalCouplingMatrix {
    let mut full = template.full_matrix();
    for (idx, &(i, j)) in free.iter().enumerate() {
        full[(i, j)] = params[idx];
        full[(j, i)] = params[idx];
    }
    ClassicalCouplingMatrix::from_full_matrix(&full, ports, *template.band())
        .expect("masked update preserves symmetry")
}

/// Location-based mismatch per the fit's reported metric: distances of the
/// matrix's own (detected) zeros to the targets and positional pole
/// differences. `None` when the detected zero counts do not match the
/// targets, which happens while an iterate's zeros are off the real axis.
fn location_residual(
    ccm: &ClassicalCouplingMatrix,
    zs: &ZeroSet,
    opts: &ClassicalFitOptions,
) -> Result<Option<DVector<f64>>> {
    let tz = if ccm.ports() >= 2 {
        scan_zeros(
            ccm,
            opts.z_ref,
            opts.scan_lo,
            opts.scan_hi,
            opts.scan_grid,
            1,
            0,
            TZ_MAGNITUDE,
        )
    } else {
        Vec::new()
    };
    let rz = scan_zeros(
        ccm,
        opts.z_ref,
        opts.scan_lo,
        opts.scan_hi,
        opts.scan_grid,
        0,
        0,
        DIP_MAGNITUDE,
    );
    let found = ZeroSet {
        transmission_zeros: tz,
        reflection_zeros: rz,
        prototype_poles: prototype_poles(ccm, opts.z_ref)?,
    };
    if found.transmission_zeros.len() != zs.transmission_zeros.len()
        || found.reflection_zeros.len() != zs.reflection_zeros.len()
    {
        return Ok(None);
    }
    let mut out = Vec::new();
    for (got, want) in found.transmission_zeros.iter().zip(&zs.transmission_zeros) {
        out.push(opts.weight_tz * (got - want));
    }
    for (got, want) in found.reflection_zeros.iter().zip(&zs.reflection_zeros) {
        out.push(opts.weight_rz * (got - want));
    }
    let n = zs.prototype_poles.len().min(found.prototype_poles.len());
    for i in 0..n {
        let d = found.prototype_poles[i] - zs.prototype_poles[i];
        out.push(opts.weight_pole * d.re);
        out.push(opts.weight_pole * d.im);
    }
    Ok(Some(DVector::from_vec(out)))
}

/// One damped least-squares pass over the masked free entries.
///
/// Steps are built from the truncated SVD of the finite-difference Jacobian:
/// singular directions below 1e-7 of the largest carry no step component.
/// Zero/pole locations do not always pin every masked entry (the depth of a
/// lifted reflection dip is invisible to them), and an untruncated step
/// would drift along such quasi-null directions instead of converging onto
/// the nearest consistent matrix.
///
/// `residual_fn` may report `None` ("objective undefined here"): a `None`
/// trial is treated as a rejected step, a `None` during the Jacobian ends
/// the pass with the best iterate so far.
#[allow(clippy::too_many_arguments)]
fn damped_least_squares(
    init: &ClassicalCouplingMatrix,
    free: &[(usize, usize)],
    ports: usize,
    start: DVector<f64>,
    start_residual: DVector<f64>,
    opts: &ClassicalFitOptions,
    iterations_used: usize,
    residual_fn: &mut dyn FnMut(&ClassicalCouplingMatrix) -> Result<Option<DVector<f64>>>,
) -> Result<(DVector<f64>, f64, usize, bool)> {
    let mut params = start;
    let mut residual = start_residual;
    let mut cost = residual.norm_squared();
    let mut best_params = params.clone();
    let mut best_cost = cost;
    let mut iterations = iterations_used;
    if cost.sqrt() <= opts.tol {
        return Ok((best_params, cost.sqrt(), iterations, true));
    }

    let n = free.len();
    let mut lambda = 1e-3;
    let fd_step = 1e-6;
    'outer: for _ in iterations_used..opts.max_iters {
        iterations += 1;
        // Central-difference Jacobian over the free entries.
        let m = residual.len();
        let mut jac = DMatrix::zeros(m, n);
        for p in 0..n {
            let mut plus = params.clone();
            let mut minus = params.clone();
            plus[p] += fd_step;
            minus[p] -= fd_step;
            let r_plus = residual_fn(&matrix_from_params(init, free, &plus, ports))?;
            let r_minus = residual_fn(&matrix_from_params(init, free, &minus, ports))?;
            let (Some(r_plus), Some(r_minus)) = (r_plus, r_minus) else {
                break 'outer;
            };
            if r_plus.len() != m || r_minus.len() != m {
                break 'outer;
            }
            let column = (r_plus - r_minus) / (2.0 * fd_step);
            jac.set_column(p, &column);
        }
        let svd = jac.svd(true, true);
        let u = svd.u.as_ref().expect("svd with u");
        let v_t = svd.v_t.as_ref().expect("svd with v_t");
        let sigma = &svd.singular_values;
        let sigma_max = sigma.max();
        if sigma_max <= 0.0 {
            break;
        }
        let projected = u.transpose() * &residual;

        let mut accepted = false;
        for _ in 0..25 {
            // Damped pseudo-inverse over the kept singular directions.
            let mut coeffs = DVector::zeros(sigma.len());
            for i in 0..sigma.len() {
                if sigma[i] >= 1e-7 * sigma_max {
                    coeffs[i] = projected[i] * sigma[i]
                        / (sigma[i] * sigma[i] + lambda * sigma_max * sigma_max);
                }
            }
            let step = v_t.transpose() * coeffs;
            let trial_params = &params - step;
            let trial_ccm = matrix_from_params(init, free, &trial_params, ports);
            let trial = residual_fn(&trial_ccm)?;
            let trial_cost = match &trial {
                Some(r) if r.len() == m => r.norm_squared(),
                _ => f64::INFINITY,
            };
            if trial_cost < cost {
                params = trial_params;
                residual = trial.unwrap();
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-15);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }

        if cost < best_cost {
            best_cost = cost;
            best_params = params.clone();
        }
        if best_cost.sqrt() <= opts.tol {
            return Ok((best_params, best_cost.sqrt(), iterations, true));
        }
        if !accepted {
            break;
        }
    }
    Ok((best_params, best_cost.sqrt(), iterations, false))
}

/// Central-difference Jacobian of `residual_fn` over the free entries;
/// `None` when the residual is undefined or changes arity nearby.
fn fd_jacobian(
    init: &ClassicalCouplingMatrix,
    free: &[(usize, usize)],
    ports: usize,
    params: &DVector<f64>,
    arity: usize,
    residual_fn: &mut dyn FnMut(&ClassicalCouplingMatrix) -> Result<Option<DVector<f64>>>,
) -> Result<Option<DMatrix<f64>>> {
    let n = free.len();
    let fd_step = 1e-6;
    let mut jac = DMatrix::zeros(arity, n);
    for p in 0..n {
        let mut plus = params.clone();
        let mut minus = params.clone();
        plus[p] += fd_step;
        minus[p] -= fd_step;
        let r_plus = residual_fn(&matrix_from_params(init, free, &plus, ports))?;
        let r_minus = residual_fn(&matrix_from_params(init, free, &minus, ports))?;
        let (Some(r_plus), Some(r_minus)) = (r_plus, r_minus) else {
            return Ok(None);
        };
        if r_plus.len() != arity || r_minus.len() != arity {
            return Ok(None);
        }
        jac.set_column(p, &((r_plus - r_minus) / (2.0 * fd_step)));
    }
    Ok(Some(jac))
}

/// Fit the masked free entries of a classical coupling matrix so its zeros
/// and poles (or sampled S response) match the targets.
///
/// Damped least squares over the free entries: the damping factor is
/// multiplied by 10 whenever a step increases the objective and divided by 3
/// when a step is accepted; the objective is non-increasing over accepted
/// steps and entries outside the mask stay exactly zero.
///
/// Zero/pole targets run in two phases. While an iterate's own zeros are
/// undetectable (asymmetric perturbations push reflection-zero minima off
/// zero), the objective evaluates S at the target locations, which is smooth
/// and always defined; once the matrix is close enough that every target has
/// a detected counterpart, the fit switches to the distances of the computed
/// zeros/poles to the targets, which is also the metric of the reported
/// residual.
pub fn fit_classical(
    targets: &FitTargets,
    mask: &TopologyMask,
    init: &ClassicalCouplingMatrix,
    opts: &ClassicalFitOptions,
) -> Result<ClassicalFitReport> {
    match targets {
        FitTargets::Zeros(zs) => {
            if zs.transmission_zeros.is_empty()
                && zs.reflection_zeros.is_empty()
                && zs.prototype_poles.is_empty()
            {
                return Err(Error::InvalidArgument("empty target set".into()));
            }
        }
        FitTargets::SampledS { kn, matrices } => {
            if kn.is_empty() || kn.len() != matrices.len() {
                return Err(Error::InvalidArgument("empty or ragged S targets".into()));
            }
        }
    }
    let full_init = init.full_matrix();
    if full_init.nrows() != mask.size() {
        return Err(Error::DimensionMismatch {
            expected: format!("{0} x {0}", mask.size()),
            found: format!("{} x {}", full_init.nrows(), full_init.ncols()),
        });
    }
    mask.check(&full_init)?;

    let free = mask.free_entries();
    let ports = mask.ports();
    let start = DVector::from_iterator(free.len(), free.iter().map(|&(i, j)| full_init[(i, j)]));

    let finish = |params: &DVector<f64>, residual: f64, iterations: usize, converged: bool| {
        let ccm = matrix_from_params(init, &free, params, ports);
        debug_assert!(mask.check(&ccm.full_matrix()).is_ok());
        ClassicalFitReport {
            ccm,
            residual,
            iterations,
            converged,
        }
    };

    match targets {
        FitTargets::SampledS { .. } => {
            let mut f =
                |ccm: &ClassicalCouplingMatrix| residual_vector(ccm, targets, opts).map(Some);
            let r0 = residual_vector(init, targets, opts)?;
            let (params, residual, iterations, converged) =
                damped_least_squares(init, &free, ports, start, r0, opts, 0, &mut f)?;
            Ok(finish(&params, residual, iterations, converged))
        }
        FitTargets::Zeros(zs) => {
            // Zero iterations when the start already satisfies the targets.
            if let Some(r0) = location_residual(init, zs, opts)? {
                if r0.norm() <= opts.tol {
                    return Ok(finish(&start, r0.norm(), 0, true));
                }
            }
            // Phase one: the value surrogate. Its optimum pins the depth
            // information (how deep each reflection dip is) that the zero
            // locations alone leave free.
            let mut surrogate =
                |ccm: &ClassicalCouplingMatrix| residual_vector(ccm, targets, opts).map(Some);
            let r0 = residual_vector(init, targets, opts)?;
            let (params, surrogate_residual, iterations, _) =
                damped_least_squares(init, &free, ports, start, r0, opts, 0, &mut surrogate)?;
            // Phase two: polish in the reported metric, the distances of the
            // computed zeros/poles to the targets.
            //
            // The surrogate optimum is a strict local minimum of the location
            // metric: reflection-value targets are unreachable for matrices
            // printed to finite precision, which displaces the surrogate
            // optimum a little along a direction the zero locations barely
            // see. Damped steps cannot leave that basin, so the polish is
            // restarted from small kicks along the softest directions of the
            // location Jacobian; among the consistent endpoints the one
            // requiring the smallest correction wins, which discriminates the
            // true matrix from the spurious far solution that also
            // interpolates the targets.
            let mut locator = |ccm: &ClassicalCouplingMatrix| location_residual(ccm, zs, opts);
            let anchor = params;
            let iterations = iterations.min(opts.max_iters.saturating_sub(1));
            let ccm = matrix_from_params(init, &free, &anchor, ports);
            let Some(r_anchor) = locator(&ccm)? else {
                return Ok(finish(&anchor, surrogate_residual, iterations, false));
            };

            let mut starts = vec![anchor.clone()];
            if let Some(jac) =
                fd_jacobian(init, &free, ports, &anchor, r_anchor.len(), &mut locator)?
            {
                let svd = jac.svd(false, true);
                let v_t = svd.v_t.as_ref().expect("svd with v_t");
                let sigma = &svd.singular_values;
                let mut order: Vec<usize> = (0..sigma.len()).collect();
                order.sort_by(|&a, &b| sigma[a].partial_cmp(&sigma[b]).unwrap());
                for &dir in order.iter().take(3) {
                    let v = v_t.row(dir).transpose();
                    for sign in [1.0, -1.0] {
                        starts.push(&anchor + &v * (sign * 3e-5));
                    }
                }
            }

            let mut fallback = (anchor.clone(), r_anchor.norm(), false);
            let mut qualified: Option<(DVector<f64>, f64, bool, f64)> = None;
            let mut spent = iterations;
            for start in starts {
                let start_ccm = matrix_from_params(init, &free, &start, ports);
                let Some(r0) = locator(&start_ccm)? else {
                    continue;
                };
                let mut stage_opts = opts.clone();
                stage_opts.max_iters = 12;
                let (p, residual, used, converged) = damped_least_squares(
                    init,
                    &free,
                    ports,
                    start,
                    r0,
                    &stage_opts,
                    0,
                    &mut locator,
                )?;
                spent = (spent + used).min(opts.max_iters);
                let displacement = (&p - &anchor).norm();
                if residual <= opts.tol.max(1e-8) {
                    if qualified
                        .as_ref()
                        .is_none_or(|(_, _, _, d)| displacement < *d)
                    {
                        qualified = Some((p, residual, converged, displacement));
                    }
                    // A consistent endpoint within a few kick lengths of the
                    // anchor cannot be the far interpolant; stop probing.
                    if displacement < 3e-4 {
                        break;
                    }
                } else if residual < fallback.1 {
                    fallback = (p, residual, converged);
                }
                if spent >= opts.max_iters {
                    break;
                }
            }
            match qualified {
                Some((p, residual, converged, _)) => Ok(finish(&p, residual, spent, converged)),
                None => Ok(finish(&fallback.0, fallback.1, spent, fallback.2)),
            }
        }
    }
}
