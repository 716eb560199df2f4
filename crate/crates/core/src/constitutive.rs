//! Material tensors of a non-dispersive bi-anisotropic medium.
//!
//! The constitutive relations are
//!
//! ```text
//! D = eps1·E + eps2·B
//! H = mu1·E  + mu2·B
//! ```
//!
//! with all four tensors real, constant and expressed in SI units. Onsager
//! reciprocity requires `eps1 = eps1ᵀ`, `mu2 = mu2ᵀ` and `eps2 = −mu1ᵀ`.
//!
//! This module also maps a stationary spacetime metric (written in
//! Cartesian coordinates) onto the equivalent medium, and provides the
//! symmetric square root of `eps1` used to Hermitize the mode problem.

use std::fmt;

use nalgebra::{Matrix3, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{levi_civita, symmetric_eigen};

/// SI constants used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConstants {
    /// Reduced Planck constant (J·s).
    pub hbar: f64,
    /// Vacuum permittivity (F/m).
    pub eps0: f64,
    /// Vacuum permeability (H/m).
    pub mu0: f64,
    /// Speed of light (m/s).
    pub c: f64,
}

impl Default for PhysicalConstants {
    /// CODATA 2018 values; `eps0` is derived from `mu0` and `c` so that
    /// `eps0·mu0·c² = 1` holds to rounding.
    fn default() -> Self {
        let c = 299_792_458.0;
        let mu0 = 1.256_637_062_12e-6;
        Self {
            hbar: 1.054_571_817e-34,
            eps0: 1.0 / (mu0 * c * c),
            mu0,
            c,
        }
    }
}

impl PhysicalConstants {
    /// Vacuum wave impedance inverse, `√(eps0/mu0)`: the SI scale of
    /// `eps2` and `mu1`.
    pub fn admittance(&self) -> f64 {
        (self.eps0 / self.mu0).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("hbar", self.hbar),
            ("eps0", self.eps0),
            ("mu0", self.mu0),
            ("c", self.c),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "constant {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// The four constitutive tensors plus the constants they are expressed in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstitutiveTensors {
    pub eps1: Matrix3<f64>,
    pub eps2: Matrix3<f64>,
    pub mu1: Matrix3<f64>,
    pub mu2: Matrix3<f64>,
    pub constants: PhysicalConstants,
}

impl ConstitutiveTensors {
    pub fn vacuum(constants: PhysicalConstants) -> Self {
        Self::isotropic(1.0, 1.0, constants)
    }

    /// Isotropic medium with relative permittivity `eps_r` and relative
    /// permeability `mu_r` (so `mu2 = I / (mu_r·mu0)`).
    pub fn isotropic(eps_r: f64, mu_r: f64, constants: PhysicalConstants) -> Self {
        Self {
            eps1: Matrix3::identity() * (eps_r * constants.eps0),
            eps2: Matrix3::zeros(),
            mu1: Matrix3::zeros(),
            mu2: Matrix3::identity() / (mu_r * constants.mu0),
            constants,
        }
    }

    /// Non-magnetic uniaxial dielectric with optic axis along `z`.
    pub fn uniaxial(eps_ordinary: f64, eps_extraordinary: f64, constants: PhysicalConstants) -> Self {
        let mut t = Self::vacuum(constants);
        t.eps1 = Matrix3::from_diagonal(&nalgebra::Vector3::new(
            eps_ordinary,
            eps_ordinary,
            eps_extraordinary,
        )) * constants.eps0;
        t
    }

    /// Build from dimensionless tensors: `eps1 = eps0·eps_rel`,
    /// `mu2 = mu2_rel / mu0`, `eps2 = √(eps0/mu0)·eps2_rel`, same for `mu1`.
    pub fn from_relative(
        eps1_rel: Matrix3<f64>,
        eps2_rel: Matrix3<f64>,
        mu1_rel: Matrix3<f64>,
        mu2_rel: Matrix3<f64>,
        constants: PhysicalConstants,
    ) -> Self {
        let y = constants.admittance();
        Self {
            eps1: eps1_rel * constants.eps0,
            eps2: eps2_rel * y,
            mu1: mu1_rel * y,
            mu2: mu2_rel / constants.mu0,
            constants,
        }
    }

    /// The inverse of [`from_relative`](Self::from_relative): tensors in
    /// units of `eps0`, `√(eps0/mu0)`, `√(eps0/mu0)` and `1/mu0`.
    pub fn to_relative(&self) -> [Matrix3<f64>; 4] {
        let y = self.constants.admittance();
        [
            self.eps1 / self.constants.eps0,
            self.eps2 / y,
            self.mu1 / y,
            self.mu2 * self.constants.mu0,
        ]
    }

    /// Rotate every tensor by the proper rotation `r`: `T → r·T·rᵀ`.
    pub fn rotated(&self, r: &Matrix3<f64>) -> Self {
        let rot = |m: &Matrix3<f64>| r * m * r.transpose();
        Self {
            eps1: rot(&self.eps1),
            eps2: rot(&self.eps2),
            mu1: rot(&self.mu1),
            mu2: rot(&self.mu2),
            constants: self.constants,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.eps1, self.eps2, self.mu1, self.mu2]
            .iter()
            .all(|m| m.iter().all(|x| x.is_finite()))
    }

    /// True when the magnetoelectric tensors vanish identically.
    pub fn is_magnetoelectric_free(&self) -> bool {
        self.eps2.iter().all(|x| *x == 0.0) && self.mu1.iter().all(|x| *x == 0.0)
    }
}

/// One of the checks performed by [`validate_onsager`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    Eps1Symmetric,
    Mu2Symmetric,
    Eps2EqualsMinusMu1Transpose,
    Eps1PositiveDefinite,
    Mu2PositiveDefinite,
}

impl Constraint {
    pub fn name(self) -> &'static str {
        match self {
            Constraint::Eps1Symmetric => "onsager:eps1_symmetric",
            Constraint::Mu2Symmetric => "onsager:mu2_symmetric",
            Constraint::Eps2EqualsMinusMu1Transpose => "onsager:eps2_equals_minus_mu1_transpose",
            Constraint::Eps1PositiveDefinite => "eps1_positive_definite",
            Constraint::Mu2PositiveDefinite => "mu2_positive_definite",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: Constraint,
    /// Largest absolute deviation (for definiteness checks: minus the
    /// smallest eigenvalue of the symmetric part).
    pub deviation: f64,
    /// `deviation` divided by the magnitude of the tensors involved.
    pub relative: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violation(&self, c: Constraint) -> Option<&Violation> {
        self.violations.iter().find(|v| v.constraint == c)
    }

    /// `Ok(self)` when clean, otherwise a validation error.
    pub fn into_result(self) -> Result<Self> {
        if self.is_ok() {
            Ok(self)
        } else {
            Err(Error::Validation(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "no violations");
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| format!("{} (deviation {:.3e}, relative {:.3e})", v.constraint.name(), v.deviation, v.relative))
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

fn max_abs(m: &Matrix3<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Check Onsager reciprocity and positive definiteness of `eps1`, `mu2`.
///
/// Deviations are judged relative to the largest entry of the tensors
/// involved, so `tol` is dimensionless.
pub fn validate_onsager(t: &ConstitutiveTensors, tol: f64) -> Result<ValidationReport> {
    if !t.is_finite() {
        return Err(Error::InvalidInput("constitutive tensors contain non-finite entries".into()));
    }
    let mut violations = Vec::new();
    let mut check = |constraint, deviation: f64, scale: f64| {
        let relative = if scale > 0.0 { deviation / scale } else { 0.0 };
        if relative > tol {
            violations.push(Violation {
                constraint,
                deviation,
                relative,
            });
        }
    };

    check(
        Constraint::Eps1Symmetric,
        max_abs(&(t.eps1 - t.eps1.transpose())),
        max_abs(&t.eps1),
    );
    check(
        Constraint::Mu2Symmetric,
        max_abs(&(t.mu2 - t.mu2.transpose())),
        max_abs(&t.mu2),
    );
    check(
        Constraint::Eps2EqualsMinusMu1Transpose,
        max_abs(&(t.eps2 + t.mu1.transpose())),
        max_abs(&t.eps2).max(max_abs(&t.mu1)),
    );

    for (constraint, m) in [
        (Constraint::Eps1PositiveDefinite, &t.eps1),
        (Constraint::Mu2PositiveDefinite, &t.mu2),
    ] {
        let sym = (m + m.transpose()) * 0.5;
        let min_eig = symmetric_eigen(&sym).0.min();
        if !(min_eig > 0.0) {
            let scale = max_abs(m);
            violations.push(Violation {
                constraint,
                deviation: -min_eig,
                relative: if scale > 0.0 { -min_eig / scale } else { f64::INFINITY },
            });
        }
    }

    Ok(ValidationReport { violations })
}

/// A stationary spacetime metric in Cartesian coordinates with signature
/// `(−,+,+,+)`; index 0 is time (scaled by `c`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimeMetric {
    g: Matrix4<f64>,
}

impl SpacetimeMetric {
    pub fn new(g: Matrix4<f64>) -> Result<Self> {
        if !g.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("metric contains non-finite entries".into()));
        }
        let scale = g.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        let asym = (g - g.transpose()).iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        if asym > 1e-12 * scale {
            return Err(Error::InvalidInput(format!("metric is not symmetric (deviation {asym:.3e})")));
        }
        if !(g[(0, 0)] < 0.0) {
            return Err(Error::InvalidInput(format!(
                "metric must have signature (-,+,+,+) with g00 < 0, got g00 = {}",
                g[(0, 0)]
            )));
        }
        let det = g.determinant();
        if !(det < 0.0) {
            return Err(Error::SingularMetric(format!("det(g) must be negative, got {det:.6e}")));
        }
        Ok(Self { g: (g + g.transpose()) * 0.5 })
    }

    pub fn minkowski() -> Self {
        Self {
            g: Matrix4::from_diagonal(&nalgebra::Vector4::new(-1.0, 1.0, 1.0, 1.0)),
        }
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.g
    }
}

/// Tensors of the medium equivalent to the metric `m`.
///
/// The formulas are evaluated in dimensionless form and then scaled by
/// `eps0` (for `eps1`), `1/mu0` (for `mu2`) and `√(eps0/mu0)` (for `eps2`,
/// `mu1`), so flat spacetime maps onto vacuum.
pub fn metric_to_constitutive(
    m: &SpacetimeMetric,
    constants: PhysicalConstants,
) -> Result<ConstitutiveTensors> {
    let g = m.matrix();
    let det = g.determinant();
    if !(det < 0.0) {
        return Err(Error::SingularMetric(format!("det(g) = {det:.6e}")));
    }
    let ginv = g
        .try_inverse()
        .ok_or_else(|| Error::SingularMetric("metric is not invertible".into()))?;
    let root = (-det).sqrt();
    let g00 = g[(0, 0)];
    let g0 = |a: usize| g[(0, a + 1)];
    let gs = |a: usize, b: usize| g[(a + 1, b + 1)];

    let mut eps1 = Matrix3::zeros();
    let mut eps2 = Matrix3::zeros();
    let mut mu1 = Matrix3::zeros();
    let mut mu2 = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let mut cross = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    let e1 = levi_civita(i, a, b);
                    if e1 == 0.0 {
                        continue;
                    }
                    for mm in 0..3 {
                        for n in 0..3 {
                            let e2 = levi_civita(mm, n, j);
                            if e2 != 0.0 {
                                cross += e1 * e2 * g0(a) * g0(n) * gs(b, mm);
                            }
                        }
                    }
                }
            }
            eps1[(i, j)] = -root * ginv[(i + 1, j + 1)] / g00 - cross / (g00 * root);

            let mut e2sum = 0.0;
            let mut m1sum = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    e2sum += levi_civita(i, a, b) * gs(b, j) * g0(a);
                    m1sum += levi_civita(a, b, j) * g0(b) * gs(i, a);
                }
            }
            eps2[(i, j)] = -e2sum / root;
            mu1[(i, j)] = -m1sum / root;
            mu2[(i, j)] = -g00 / root * gs(i, j);
        }
    }

    if eps1.determinant().abs() <= f64::EPSILON * max_abs(&eps1).powi(3)
        || mu2.determinant().abs() <= f64::EPSILON * max_abs(&mu2).powi(3)
    {
        return Err(Error::SingularMetric(
            "spatial block yields singular permittivity or inverse permeability".into(),
        ));
    }

    Ok(ConstitutiveTensors::from_relative(eps1, eps2, mu1, mu2, constants))
}

/// Principal (symmetric positive-definite) square root `C` of `eps1`,
/// so that `C·C = eps1`.
pub fn factor_epsilon(eps1: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let scale = max_abs(eps1);
    if !eps1.iter().all(|x| x.is_finite()) || scale == 0.0 {
        return Err(Error::Factorization("permittivity must be finite and nonzero".into()));
    }
    if max_abs(&(eps1 - eps1.transpose())) > 1e-12 * scale {
        return Err(Error::Factorization("permittivity is not symmetric".into()));
    }
    let (values, vectors) = symmetric_eigen(eps1);
    if let Some(bad) = values.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::Factorization(format!(
            "permittivity is not positive definite (eigenvalue {bad:.6e})"
        )));
    }
    let root = values.map(f64::sqrt);
    let c = vectors * Matrix3::from_diagonal(&root) * vectors.transpose();
    Ok((c + c.transpose()) * 0.5)
}
