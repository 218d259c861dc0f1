//! Domain types shared by the whole crate: frequency bands, pole-residue
//! impedance models and port excitation vectors.
//!
//! A coupled-resonator device is represented by its impedance matrix written
//! as a pole-residue series over the eigenmodes of the enclosed problem,
//!
//! ```text
//! Z(k) = j k eta0 * sum_n  c_n c_n' / (k_n^2 - k^2)
//! ```
//!
//! where every residue is rank-1 by construction: each term stores only the
//! resonance wavenumber `k_n` and the real port-coupling vector `c_n`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s), exact by definition.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Intrinsic impedance of free space (ohm).
pub const ETA0: f64 = 376.730_313_668;

/// Analysis band `[f1, f2]` with its derived narrowband parameters.
///
/// `f0 = sqrt(f1 f2)` is the geometric center, `k0 = 2 pi f0 / c` the center
/// wavenumber and `delta = (f2 - f1) / f0` the fractional bandwidth. These
/// drive every normalized-frequency map in [`crate::narrowband`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyBand {
    f1_hz: f64,
    f2_hz: f64,
    f0_hz: f64,
    k0: f64,
    delta: f64,
}

impl FrequencyBand {
    /// Build a band from its edge frequencies in Hz.
    pub fn new(f1_hz: f64, f2_hz: f64) -> Result<Self> {
        if !f1_hz.is_finite() || f1_hz <= 0.0 {
            return Err(Error::NonPositive {
                field: "f1_hz",
                value: f1_hz,
            });
        }
        if !f2_hz.is_finite() || f2_hz <= 0.0 {
            return Err(Error::NonPositive {
                field: "f2_hz",
                value: f2_hz,
            });
        }
        if f2_hz <= f1_hz {
            return Err(Error::Reversed {
                f1: f1_hz,
                f2: f2_hz,
            });
        }
        let f0_hz = (f1_hz * f2_hz).sqrt();
        let k0 = 2.0 * std::f64::consts::PI * f0_hz / SPEED_OF_LIGHT;
        let delta = (f2_hz - f1_hz) / f0_hz;
        Ok(Self {
            f1_hz,
            f2_hz,
            f0_hz,
            k0,
            delta,
        })
    }

    pub fn f1_hz(&self) -> f64 {
        self.f1_hz
    }

    pub fn f2_hz(&self) -> f64 {
        self.f2_hz
    }

    /// Geometric center frequency `sqrt(f1 f2)` in Hz.
    pub fn f0_hz(&self) -> f64 {
        self.f0_hz
    }

    /// Center wavenumber `2 pi f0 / c` in rad/m.
    pub fn k0(&self) -> f64 {
        self.k0
    }

    /// Fractional bandwidth `(f2 - f1) / f0`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Lower band edge as a wavenumber (rad/m).
    pub fn k1(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.f1_hz / SPEED_OF_LIGHT
    }

    /// Upper band edge as a wavenumber (rad/m).
    pub fn k2(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.f2_hz / SPEED_OF_LIGHT
    }

    /// Whether `k` lies inside the closed interval `[k1, k2]`.
    ///
    /// Band edges count as in-band; this is the classification used by
    /// [`crate::impedance::split_inband`].
    pub fn contains_k(&self, k: f64) -> bool {
        k >= self.k1() && k <= self.k2()
    }
}

/// Convert a frequency in Hz to a wavenumber in rad/m.
pub fn wavenumber(f_hz: f64) -> f64 {
    2.0 * std::f64::consts::PI * f_hz / SPEED_OF_LIGHT
}

/// Convert a wavenumber in rad/m to a frequency in Hz.
pub fn frequency(k: f64) -> f64 {
    k * SPEED_OF_LIGHT / (2.0 * std::f64::consts::PI)
}

/// One rank-1 term of the pole-residue series.
///
/// `k_n = 0` with `inband = false` represents the static contribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleResidueTerm {
    /// Resonance wavenumber in rad/m, `>= 0`.
    pub k_n: f64,
    /// Real coupling coefficients to each port, length = port count.
    pub c: DVector<f64>,
    /// Whether this term lies inside the analysis band.
    pub inband: bool,
}

impl PoleResidueTerm {
    pub fn new(k_n: f64, c: Vec<f64>, inband: bool) -> Self {
        Self {
            k_n,
            c: DVector::from_vec(c),
            inband,
        }
    }
}

/// Rank-1 pole-residue impedance model of a multiport device.
///
/// Coupling vectors are real (lossless device); units of `c` are such that
/// the series evaluates to ohms.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleResidueModel {
    /// Number of ports P.
    pub ports: usize,
    /// Ordered list of series terms.
    pub terms: Vec<PoleResidueTerm>,
    /// Intrinsic impedance in ohms; defaults to the free-space value.
    pub eta0: f64,
}

impl PoleResidueModel {
    pub fn new(ports: usize, terms: Vec<PoleResidueTerm>) -> Self {
        Self {
            ports,
            terms,
            eta0: ETA0,
        }
    }

    pub fn with_eta0(mut self, eta0: f64) -> Self {
        self.eta0 = eta0;
        self
    }

    /// Number of in-band terms (the order N of the coupled-resonator circuit).
    pub fn order(&self) -> usize {
        self.terms.iter().filter(|t| t.inband).count()
    }

    /// Report-style validation; empty iff the model is well-formed.
    pub fn validate(&self) -> Vec<ModelViolation> {
        validate_model(self)
    }
}

/// A single validation finding from [`validate_model`].
#[derive(Debug, Clone, PartialEq)]
pub enum ModelViolation {
    /// Port count is zero.
    NoPorts,
    /// Two in-band terms share the same pole.
    DuplicatePole {
        term_a: usize,
        term_b: usize,
        k_n: f64,
    },
    /// A term's coupling vector length differs from the port count.
    LengthMismatch {
        term: usize,
        expected: usize,
        found: usize,
    },
    /// A pole or coupling entry is NaN or infinite.
    NonFinite { term: usize },
    /// A pole wavenumber is negative.
    NegativePole { term: usize, k_n: f64 },
}

impl std::fmt::Display for ModelViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::NoPorts => write!(f, "model has no ports"),
            Self::DuplicatePole {
                term_a,
                term_b,
                k_n,
            } => write!(
                f,
                "terms {term_a} and {term_b} are both in-band at k_n = {k_n}"
            ),
            Self::LengthMismatch {
                term,
                expected,
                found,
            } => write!(
                f,
                "term {term}: coupling vector has {found} entries, expected {expected}"
            ),
            Self::NonFinite { term } => write!(f, "term {term} has a non-finite entry"),
            Self::NegativePole { term, k_n } => {
                write!(f, "term {term} has negative pole k_n = {k_n}")
            }
        }
    }
}

/// Check a model against its structural invariants.
///
/// Returns every violation found rather than stopping at the first; an empty
/// list means the model is safe to evaluate. An empty term list is legal (the
/// zero-impedance model).
pub fn validate_model(model: &PoleResidueModel) -> Vec<ModelViolation> {
    let mut violations = Vec::new();
    if model.ports == 0 {
        violations.push(ModelViolation::NoPorts);
    }
    for (i, term) in model.terms.iter().enumerate() {
        if term.c.len() != model.ports {
            violations.push(ModelViolation::LengthMismatch {
                term: i,
                expected: model.ports,
                found: term.c.len(),
            });
        }
        if !term.k_n.is_finite() || term.c.iter().any(|v| !v.is_finite()) {
            violations.push(ModelViolation::NonFinite { term: i });
        }
        if term.k_n < 0.0 {
            violations.push(ModelViolation::NegativePole {
                term: i,
                k_n: term.k_n,
            });
        }
    }
    // Duplicate in-band poles: exact equality, the in-band poles of a valid
    // model are distinct by construction.
    for i in 0..model.terms.len() {
        if !model.terms[i].inband {
            continue;
        }
        for j in (i + 1)..model.terms.len() {
            if model.terms[j].inband && model.terms[i].k_n == model.terms[j].k_n {
                violations.push(ModelViolation::DuplicatePole {
                    term_a: i,
                    term_b: j,
                    k_n: model.terms[i].k_n,
                });
            }
        }
    }
    violations
}

/// Role of a port excitation vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortRole {
    Voltage,
    Current,
}

/// Complex excitation at the ports, tagged with its role in `v = Z i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PortVector {
    pub values: DVector<Complex64>,
    pub role: PortRole,
}

impl PortVector {
    pub fn currents(values: Vec<Complex64>) -> Self {
        Self {
            values: DVector::from_vec(values),
            role: PortRole::Current,
        }
    }

    pub fn voltages(values: Vec<Complex64>) -> Self {
        Self {
            values: DVector::from_vec(values),
            role: PortRole::Voltage,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn band_derivations() {
        let band = FrequencyBand::new(12.21e9, 12.26e9).unwrap();
        // Independent arithmetic: f0 = sqrt(f1 f2), delta = (f2 - f1) / f0.
        assert_relative_eq!(band.f0_hz(), 12.234_974e9, max_relative = 1e-6);
        assert_relative_eq!(band.delta(), 4.0866e-3, max_relative = 1e-4);
        assert_relative_eq!(
            band.f0_hz() * band.f0_hz(),
            band.f1_hz() * band.f2_hz(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            band.k0(),
            2.0 * std::f64::consts::PI * band.f0_hz() / SPEED_OF_LIGHT,
            max_relative = 1e-15
        );
        // Reading the edges back is the identity.
        assert_eq!(band.f1_hz(), 12.21e9);
        assert_eq!(band.f2_hz(), 12.26e9);
    }

    #[test]
    fn diplexer_band() {
        let band = FrequencyBand::new(2.478e9, 2.718e9).unwrap();
        assert!(band.delta() > 0.0 && band.delta() < 2.0);
        assert_relative_eq!(band.f0_hz(), (2.478e9f64 * 2.718e9).sqrt());
    }

    #[test]
    fn band_rejects_reversed_edges() {
        match FrequencyBand::new(12.26e9, 12.21e9) {
            Err(Error::Reversed { .. }) => {}
            other => panic!("expected Reversed, got {other:?}"),
        }
    }

    #[test]
    fn band_rejects_nonpositive_edge() {
        match FrequencyBand::new(0.0, 1e9) {
            Err(Error::NonPositive { field, .. }) => assert_eq!(field, "f1_hz"),
            other => panic!("expected NonPositive, got {other:?}"),
        }
        assert!(FrequencyBand::new(-1e9, 1e9).is_err());
    }

    #[test]
    fn validate_reports_duplicate_inband_poles() {
        let model = PoleResidueModel::new(
            1,
            vec![
                PoleResidueTerm::new(2.0, vec![1.0], true),
                PoleResidueTerm::new(2.0, vec![0.5], true),
            ],
        );
        let report = model.validate();
        assert!(matches!(
            report.as_slice(),
            [ModelViolation::DuplicatePole { k_n, .. }] if *k_n == 2.0
        ));
    }

    #[test]
    fn validate_accepts_empty_model() {
        let model = PoleResidueModel::new(2, vec![]);
        assert!(model.validate().is_empty());
    }

    #[test]
    fn validate_reports_length_mismatch() {
        let model = PoleResidueModel::new(2, vec![PoleResidueTerm::new(1.0, vec![1.0], false)]);
        assert!(matches!(
            model.validate().as_slice(),
            [ModelViolation::LengthMismatch {
                expected: 2,
                found: 1,
                ..
            }]
        ));
    }

    #[test]
    fn validate_reports_nonfinite_and_negative() {
        let model = PoleResidueModel::new(
            1,
            vec![
                PoleResidueTerm::new(f64::NAN, vec![1.0], false),
                PoleResidueTerm::new(-1.0, vec![1.0], false),
            ],
        );
        let report = model.validate();
        assert!(report.contains(&ModelViolation::NonFinite { term: 0 }));
        assert!(report.contains(&ModelViolation::NegativePole { term: 1, k_n: -1.0 }));
    }

    #[test]
    fn duplicate_outofband_poles_are_legal() {
        // Only in-band poles must be distinct; the static term and repeated
        // out-of-band approximations are fine.
        let model = PoleResidueModel::new(
            1,
            vec![
                PoleResidueTerm::new(5.0, vec![1.0], false),
                PoleResidueTerm::new(5.0, vec![0.5], false),
            ],
        );
        assert!(model.validate().is_empty());
    }
}
