//! `eps1`-weighted longitudinal/transverse split of vector fields, per
//! Fourier component.
//!
//! In a homogeneous medium the projection kernels are diagonal in `q`:
//!
//! ```text
//! P∥_ij(q) = q_i (eps1·q)_j / (qᵀ eps1 q),    P⊥ = I − P∥
//! ```
//!
//! `P⊥F` is `eps1`-transverse (`qᵀ eps1 P⊥F = 0`), `P∥F` is parallel to `q`
//! (curl-free), and `P⊥ᵀF` is plainly transverse (`q·P⊥ᵀF = 0`).

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::Serialize;

use crate::constitutive::ConstitutiveTensors;
use crate::dispersion::{normalized_amplitude, solve_branches};
use crate::error::{Error, Result};
use crate::tensor::{cnorm, to_complex_matrix, CMatrix3, CVector3};

/// One Fourier component `F(q)` of a vector field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierField {
    pub q: Vector3<f64>,
    pub f: CVector3,
}

impl FourierField {
    pub fn new(q: Vector3<f64>, f: CVector3) -> Result<Self> {
        if !q.iter().all(|x| x.is_finite()) || !f.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidInput("Fourier field has non-finite entries".into()));
        }
        Ok(Self { q, f })
    }
}

/// Fourier transform of the scalar Green function of `∇·(eps1∇G) = −δ`:
/// `Ĝ(q) = 1/(qᵀ eps1 q)`.
pub fn green_scalar_fourier(q: &Vector3<f64>, eps1: &Matrix3<f64>) -> Result<f64> {
    let d = q.dot(&(eps1 * q));
    if q.norm() == 0.0 {
        return Err(Error::ZeroWavevector("scalar Green function is singular at q = 0"));
    }
    Ok(1.0 / d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectorPair {
    pub p_par: Matrix3<f64>,
    pub p_perp: Matrix3<f64>,
}

/// Largest deviations from the projector identities, relative to unity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectorChecks {
    pub complementarity: f64,
    pub idempotence_par: f64,
    pub idempotence_perp: f64,
    /// `max |qᵀ eps1 P⊥| / (|q| ‖eps1‖)`
    pub eps_transversality: f64,
    /// `max |P⊥ q| / |q|`
    pub row_transversality: f64,
}

impl ProjectorChecks {
    pub fn max(&self) -> f64 {
        [
            self.complementarity,
            self.idempotence_par,
            self.idempotence_perp,
            self.eps_transversality,
            self.row_transversality,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn projector_pair(q: &Vector3<f64>, eps1: &Matrix3<f64>) -> Result<ProjectorPair> {
    if q.norm() == 0.0 {
        return Err(Error::ZeroWavevector("projectors are undefined at q = 0"));
    }
    let g = green_scalar_fourier(q, eps1)?;
    let p_par = q * (eps1 * q).transpose() * g;
    Ok(ProjectorPair {
        p_par,
        p_perp: Matrix3::identity() - p_par,
    })
}

impl ProjectorPair {
    pub fn checks(&self, q: &Vector3<f64>, eps1: &Matrix3<f64>) -> ProjectorChecks {
        let m = |x: Matrix3<f64>| x.abs().max();
        let qn = q.norm();
        ProjectorChecks {
            complementarity: m(self.p_par + self.p_perp - Matrix3::identity()),
            idempotence_par: m(self.p_par * self.p_par - self.p_par),
            idempotence_perp: m(self.p_perp * self.p_perp - self.p_perp),
            eps_transversality: (q.transpose() * eps1 * self.p_perp).abs().max() / (qn * eps1.abs().max()),
            row_transversality: (self.p_perp * q).abs().max() / qn,
        }
    }
}

/// Split `F` into its `eps1`-longitudinal and `eps1`-transverse parts.
pub fn decompose(field: &FourierField, eps1: &Matrix3<f64>) -> Result<(CVector3, CVector3)> {
    if field.q.norm() == 0.0 {
        return Err(Error::ZeroWavevector("decomposition is undefined at q = 0"));
    }
    let p = projector_pair(&field.q, eps1)?;
    let par = to_complex_matrix(&p.p_par) * field.f;
    Ok((par, field.f - par))
}

/// Plainly transverse part via the adjoint projector: `F⊤ = P⊥ᵀ F`.
pub fn transverse_of_covector(field: &FourierField, eps1: &Matrix3<f64>) -> Result<CVector3> {
    if field.q.norm() == 0.0 {
        return Err(Error::ZeroWavevector("adjoint projection is undefined at q = 0"));
    }
    let p = projector_pair(&field.q, eps1)?;
    Ok(to_complex_matrix(&p.p_perp.transpose()) * field.f)
}

/// Completeness of the transverse modes at `q`:
/// `Σ_{ρ≠0,λ} (2π)³ F_i (eps1·F)_j*`, which equals `P⊥_ij(q)`.
pub fn mode_sum(q: &Vector3<f64>, medium: &ConstitutiveTensors) -> Result<CMatrix3> {
    let branches = solve_branches(q, medium)?;
    let e = to_complex_matrix(&medium.eps1);
    let scale = Complex64::new((2.0 * PI).powi(3), 0.0);
    let mut sum = CMatrix3::zeros();
    for b in branches.iter().filter(|b| !b.is_longitudinal_zero_mode) {
        for x in &b.x {
            let a = normalized_amplitude(x, &medium.eps1);
            sum += a * (e * a).adjoint() * scale;
        }
    }
    Ok(sum)
}

/// Residuals of a decomposition, used in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionChecks {
    /// `|F∥ + F⊥ − F| / |F|`
    pub reconstruction: f64,
    /// `|qᵀ eps1 F⊥| / (|q| ‖eps1‖ |F|)`
    pub eps_transversality: f64,
    /// `|q × F∥| / (|q| |F|)`
    pub longitudinal_parallel: f64,
}

pub fn decomposition_checks(
    field: &FourierField,
    eps1: &Matrix3<f64>,
    parts: &(CVector3, CVector3),
) -> DecompositionChecks {
    let scale = cnorm(&field.f).max(f64::MIN_POSITIVE);
    let qn = field.q.norm();
    let qc = crate::tensor::to_complex_vector(&field.q);
    let eq = crate::tensor::to_complex_vector(&(eps1 * field.q));
    DecompositionChecks {
        reconstruction: cnorm(&(parts.0 + parts.1 - field.f)) / scale,
        eps_transversality: eq.dot(&parts.1).norm() / (qn * eps1.abs().max() * scale),
        longitudinal_parallel: cnorm(&qc.cross(&parts.0)) / (qn * scale),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::PhysicalConstants;
    use crate::tensor::to_complex_vector;

    const EPS0: f64 = 8.854e-12;

    fn aniso() -> Matrix3<f64> {
        Matrix3::new(2.0, 0.3, 0.1, 0.3, 1.4, -0.2, 0.1, -0.2, 3.0) * EPS0
    }

    #[test]
    fn green_isotropic_and_diagonal() {
        let g = green_scalar_fourier(&Vector3::new(0.0, 1.0, 0.0), &(Matrix3::identity() * EPS0)).unwrap();
        assert!((g - 1.0 / EPS0).abs() < 1e-12 / EPS0);
        let e = Matrix3::from_diagonal(&Vector3::new(2.0, 1.0, 1.0)) * EPS0;
        let g = green_scalar_fourier(&Vector3::x(), &e).unwrap();
        assert!((g - 1.0 / (2.0 * EPS0)).abs() < 1e-12 / EPS0);
    }

    #[test]
    fn green_is_even() {
        let q = Vector3::new(0.3, -2.0, 1.1);
        let a = green_scalar_fourier(&q, &aniso()).unwrap();
        let b = green_scalar_fourier(&(-q), &aniso()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn isotropic_projector_is_qq() {
        let q = Vector3::new(1.0, 2.0, -2.0);
        let p = projector_pair(&q, &(Matrix3::identity() * EPS0)).unwrap();
        let qh = q.normalize();
        assert!((p.p_par - qh * qh.transpose()).abs().max() < 1e-15);
    }

    #[test]
    fn longitudinal_fixed_point() {
        let q = Vector3::new(0.2, 0.9, -0.4);
        let p = projector_pair(&q, &aniso()).unwrap();
        assert!((p.p_par * q - q).norm() < 1e-14 * q.norm());
        assert!(p.checks(&q, &aniso()).max() < 1e-13);
    }

    #[test]
    fn zero_q_is_an_error() {
        assert!(green_scalar_fourier(&Vector3::zeros(), &aniso()).is_err());
        assert!(projector_pair(&Vector3::zeros(), &aniso()).is_err());
        let f = FourierField::new(Vector3::zeros(), CVector3::zeros()).unwrap();
        assert!(decompose(&f, &aniso()).is_err());
        assert!(transverse_of_covector(&f, &aniso()).is_err());
    }

    #[test]
    fn parallel_field_has_no_transverse_part() {
        let q = Vector3::new(0.0, 3.0, 4.0);
        let f = FourierField::new(q, to_complex_vector(&q) * Complex64::new(0.5, -1.0)).unwrap();
        let (par, perp) = decompose(&f, &(Matrix3::identity() * EPS0)).unwrap();
        let scale = cnorm(&f.f);
        assert!(cnorm(&perp) < 1e-15 * scale);
        assert!(cnorm(&(par - f.f)) < 1e-15 * scale);
    }

    #[test]
    fn eps_transverse_field_has_no_longitudinal_part() {
        let q = Vector3::new(0.5, -0.1, 0.7);
        let e = aniso();
        // Any vector orthogonal to eps1·q is eps1-transverse.
        let t = (e * q).cross(&Vector3::new(1.0, 0.0, 0.0));
        let f = FourierField::new(q, to_complex_vector(&t)).unwrap();
        let (par, _) = decompose(&f, &e).unwrap();
        assert!(cnorm(&par) < 1e-15 * t.norm());
    }

    #[test]
    fn adjoint_projection_is_divergence_free() {
        let q = Vector3::new(0.5, -0.1, 0.7);
        let f = FourierField::new(q, to_complex_vector(&q)).unwrap();
        let t = transverse_of_covector(&f, &aniso()).unwrap();
        assert!(to_complex_vector(&q).dot(&t).norm() < 1e-13 * q.norm_squared());
        // Isotropic case coincides with the forward projector.
        let iso = Matrix3::identity() * EPS0;
        let g = FourierField::new(q, CVector3::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0), Complex64::new(-1.0, 0.5))).unwrap();
        let a = transverse_of_covector(&g, &iso).unwrap();
        let (_, b) = decompose(&g, &iso).unwrap();
        assert!(cnorm(&(a - b)) < 1e-15);
    }

    #[test]
    fn mode_sum_reproduces_transverse_projector() {
        let c = PhysicalConstants::default();
        let mut t = ConstitutiveTensors::vacuum(c);
        t.eps1 = aniso() / EPS0 * c.eps0;
        let q = Vector3::new(0.4, -1.2, 0.9) * 1e6;
        let s = mode_sum(&q, &t).unwrap();
        let p = projector_pair(&q, &t.eps1).unwrap();
        let d = s - to_complex_matrix(&p.p_perp);
        assert!(crate::tensor::cmax(&d) < 1e-12);
    }
}
