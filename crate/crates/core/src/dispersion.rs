//! Plane-wave dispersion branches of a homogeneous medium.
//!
//! For a plane wave `A = X e^{i(q·r − ωt)}` the wave equation
//! `∇×mu2∇×A = −eps1 ∂²A/∂t²` becomes the generalized symmetric-definite
//! eigenproblem
//!
//! ```text
//! Λ(q, mu2) X = ω² eps1 X,    Λ_ij = −ϵ_iαβ ϵ_rsj mu2_βr q_α q_s
//! ```
//!
//! It is solved in the Hermitized form `C⁻¹ΛC⁻¹ f = ω² f` with `C` the
//! principal square root of `eps1`, so the spectrum is real by construction
//! and the vectors `X = C⁻¹f` come out `eps1`-orthonormal.
//!
//! Roots are homogeneous of degree one in `|q|`: `ω(s·q) = s·ω(q)`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::Serialize;

use crate::constitutive::{factor_epsilon, validate_onsager, ConstitutiveTensors};
use crate::error::{Error, Result};
use crate::tensor::{cnorm, levi_civita, symmetric_eigen, to_complex_matrix, to_complex_vector, CVector3};

/// Relative gap below which two squared frequencies form one branch.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// A wavevector split into direction and magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveVector {
    qhat: Vector3<f64>,
    magnitude: f64,
}

impl WaveVector {
    pub fn new(qhat: Vector3<f64>, magnitude: f64) -> Result<Self> {
        if !((qhat.norm() - 1.0).abs() <= 1e-14) {
            return Err(Error::InvalidInput(format!(
                "direction must be a unit vector, |qhat| = {}",
                qhat.norm()
            )));
        }
        if !(magnitude.is_finite() && magnitude >= 0.0) {
            return Err(Error::InvalidInput(format!("invalid wavevector magnitude {magnitude}")));
        }
        Ok(Self { qhat, magnitude })
    }

    pub fn from_vector(q: &Vector3<f64>) -> Result<Self> {
        let m = q.norm();
        if !m.is_finite() {
            return Err(Error::InvalidInput("non-finite wavevector".into()));
        }
        if m == 0.0 {
            return Err(Error::ZeroWavevector("wavevector direction is undefined"));
        }
        Ok(Self {
            qhat: q / m,
            magnitude: m,
        })
    }

    pub fn qhat(&self) -> Vector3<f64> {
        self.qhat
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn vector(&self) -> Vector3<f64> {
        self.qhat * self.magnitude
    }
}

/// One root `ω_ρ(q)` of `det[Λ − ω² eps1] = 0` together with its
/// polarization vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionBranch {
    /// Branch label; 0 is always the longitudinal zero mode, the rest are
    /// sorted by ascending frequency.
    pub rho: usize,
    /// Angular frequency (rad/s) at the wavevector the branch was solved for.
    pub omega: f64,
    pub lambda_count: usize,
    /// Real polarization vectors stored as complex, `eps1`-orthonormal.
    #[serde(skip)]
    pub x: Vec<CVector3>,
    pub is_longitudinal_zero_mode: bool,
}

impl DispersionBranch {
    /// Real parts of the polarization vectors.
    pub fn x_real(&self) -> Vec<Vector3<f64>> {
        self.x.iter().map(|v| v.map(|z| z.re)).collect()
    }
}

/// `Λ_ij = −ϵ_iαβ ϵ_rsj mu2_βr q_α q_s`.
pub fn lambda_matrix(q: &Vector3<f64>, mu2: &Matrix3<f64>) -> Matrix3<f64> {
    let mut out = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let mut s = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    let e1 = levi_civita(i, a, b);
                    if e1 == 0.0 {
                        continue;
                    }
                    for r in 0..3 {
                        for ss in 0..3 {
                            let e2 = levi_civita(r, ss, j);
                            if e2 != 0.0 {
                                s -= e1 * e2 * mu2[(b, r)] * q[a] * q[ss];
                            }
                        }
                    }
                }
            }
            out[(i, j)] = s;
        }
    }
    out
}

fn check_mode_tensors(t: &ConstitutiveTensors) -> Result<()> {
    if !t.is_magnetoelectric_free() {
        return Err(Error::MagnetoelectricUnsupported);
    }
    let report = validate_onsager(t, 1e-10)?;
    if !report.is_ok() {
        return Err(Error::Eigenproblem(format!("tensors unsuitable for the mode problem: {report}")));
    }
    Ok(())
}

/// Generalized eigen-decomposition of `(Λ(q), eps1)`: ascending `ω²` and
/// `eps1`-orthonormal real vectors. The first pair is the exact null mode
/// `X ∥ q`.
pub(crate) fn generalized_eigen(
    q: &Vector3<f64>,
    t: &ConstitutiveTensors,
) -> Result<([f64; 3], [Vector3<f64>; 3])> {
    let c = factor_epsilon(&t.eps1)?;
    let c_inv = c
        .try_inverse()
        .ok_or_else(|| Error::Eigenproblem("permittivity square root is singular".into()))?;
    let lam = lambda_matrix(q, &t.mu2);
    let h = c_inv * lam * c_inv;
    let h = (h + h.transpose()) * 0.5;
    let (eigenvalues, eigenvectors) = symmetric_eigen(&h);

    let mut order = [0usize, 1, 2];
    order.sort_by(|a, b| eigenvalues[*a].total_cmp(&eigenvalues[*b]));
    let scale = eigenvalues.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Eigenproblem("degenerate operator (zero wavevector?)".into()));
    }

    let mut values = [0.0; 3];
    let mut vectors = [Vector3::zeros(); 3];
    for (slot, &k) in order.iter().enumerate() {
        values[slot] = eigenvalues[k];
        vectors[slot] = c_inv * eigenvectors.column(k);
    }
    // Λq = 0 identically, so the null mode is known in closed form.
    if values[0].abs() > 1e-10 * scale {
        return Err(Error::Eigenproblem(format!(
            "expected a single zero root, smallest eigenvalue is {:.3e} (scale {scale:.3e})",
            values[0]
        )));
    }
    if values[1] <= 1e-10 * scale {
        return Err(Error::Eigenproblem("more than one zero root".into()));
    }
    let qhat = q.normalize();
    values[0] = 0.0;
    vectors[0] = qhat / (qhat.dot(&(t.eps1 * qhat))).sqrt();
    Ok((values, vectors))
}

/// Flip `v` so that its largest-magnitude component is positive.
fn canonical_sign(v: Vector3<f64>) -> Vector3<f64> {
    let k = v.iamax();
    if v[k] < 0.0 {
        -v
    } else {
        v
    }
}

/// Deterministic `eps1`-orthonormal basis of a degenerate subspace spanned
/// by `span` (itself `eps1`-orthonormal): project `e_z, e_y, e_x` in turn and
/// Gram–Schmidt the projections.
fn canonical_basis(span: &[Vector3<f64>], eps1: &Matrix3<f64>) -> Vec<Vector3<f64>> {
    if span.len() == 1 {
        return vec![canonical_sign(span[0])];
    }
    let inner = |a: &Vector3<f64>, b: &Vector3<f64>| a.dot(&(eps1 * b));
    let mut basis: Vec<Vector3<f64>> = Vec::with_capacity(span.len());
    for axis in [2usize, 1, 0] {
        if basis.len() == span.len() {
            break;
        }
        let mut e = Vector3::zeros();
        e[axis] = 1.0;
        let mut v: Vector3<f64> = span.iter().map(|x| x * inner(x, &e)).sum();
        for b in &basis {
            v -= b * inner(b, &v);
        }
        let n2 = inner(&v, &v);
        if n2 > 1e-6 * inner(&e, &e) {
            basis.push(v / n2.sqrt());
        }
    }
    // Fallback for pathological geometry: keep the solver's vectors.
    if basis.len() < span.len() {
        return span.iter().map(|v| canonical_sign(*v)).collect();
    }
    basis
}

/// All roots of the dispersion determinant at wavevector `q`, branch 0 being
/// the longitudinal zero mode.
pub fn solve_branches(q: &Vector3<f64>, t: &ConstitutiveTensors) -> Result<Vec<DispersionBranch>> {
    if !q.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidInput("non-finite wavevector".into()));
    }
    if q.norm() == 0.0 {
        return Err(Error::ZeroWavevector("dispersion roots are all zero at q = 0"));
    }
    check_mode_tensors(t)?;
    let (values, vectors) = generalized_eigen(q, t)?;
    let max = values[2];

    let mut branches = vec![DispersionBranch {
        rho: 0,
        omega: 0.0,
        lambda_count: 1,
        x: vec![to_complex_vector(&vectors[0])],
        is_longitudinal_zero_mode: true,
    }];

    let mut k = 1;
    while k < 3 {
        let mut end = k + 1;
        while end < 3 && (values[end] - values[k]).abs() <= DEGENERACY_TOL * max {
            end += 1;
        }
        let w2 = values[k..end].iter().sum::<f64>() / (end - k) as f64;
        let basis = canonical_basis(&vectors[k..end], &t.eps1);
        branches.push(DispersionBranch {
            rho: branches.len(),
            omega: w2.max(0.0).sqrt(),
            lambda_count: basis.len(),
            x: basis.iter().map(to_complex_vector).collect(),
            is_longitudinal_zero_mode: false,
        });
        k = end;
    }
    Ok(branches)
}

/// Phase speed `v_ρ(q̂) = ω_ρ(q̂)` of branch `rho` at unit wavevector.
pub fn phase_speed(rho: usize, qhat: &Vector3<f64>, t: &ConstitutiveTensors) -> Result<f64> {
    let q = WaveVector::from_vector(qhat)?;
    let branches = solve_branches(&q.qhat(), t)?;
    let b = branches
        .get(rho)
        .ok_or_else(|| Error::InvalidInput(format!("no branch {rho} in direction {:?}", qhat.as_slice())))?;
    if b.is_longitudinal_zero_mode {
        return Err(Error::LongitudinalBranch);
    }
    Ok(b.omega)
}

/// Phase speed of every transverse polarization at unit direction `qhat`,
/// flattened over (branch, λ); degenerate branches repeat their speed.
pub fn polarization_speeds(
    qhat: &Vector3<f64>,
    t: &ConstitutiveTensors,
) -> Result<Vec<(usize, Vector3<f64>, f64)>> {
    let branches = solve_branches(qhat, t)?;
    let mut out = Vec::with_capacity(2);
    for b in branches.iter().filter(|b| !b.is_longitudinal_zero_mode) {
        for x in b.x_real() {
            out.push((b.rho, x, b.omega));
        }
    }
    Ok(out)
}

/// Continuum-normalized plane-wave mode `F = amplitude · e^{iq·r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWaveMode {
    pub omega: f64,
    pub q: WaveVector,
    pub x: CVector3,
    /// `X / ((2π)^{3/2} √(X†·eps1·X))`.
    pub amplitude: CVector3,
}

impl PlaneWaveMode {
    pub fn new(omega: f64, q: WaveVector, x: CVector3, eps1: &Matrix3<f64>) -> Self {
        let amplitude = normalized_amplitude(&x, eps1);
        Self {
            omega,
            q,
            x,
            amplitude,
        }
    }

    /// Mode for polarization `lambda` of `branch`, which must have been
    /// solved at `q`.
    pub fn from_branch(branch: &DispersionBranch, lambda: usize, q: WaveVector, eps1: &Matrix3<f64>) -> Result<Self> {
        let x = branch
            .x
            .get(lambda)
            .ok_or_else(|| Error::InvalidInput(format!("branch {} has no polarization {lambda}", branch.rho)))?;
        Ok(Self::new(branch.omega, q, *x, eps1))
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }
}

/// `X / ((2π)^{3/2} √(X†·eps1·X))`.
pub fn normalized_amplitude(x: &CVector3, eps1: &Matrix3<f64>) -> CVector3 {
    let e = to_complex_matrix(eps1);
    let norm2 = x.dotc(&(e * x)).re;
    x / Complex64::new((2.0 * PI).powf(1.5) * norm2.sqrt(), 0.0)
}

/// Relative residuals of the four source-free Maxwell equations for a plane
/// wave with `E = iωF`, `B = iq×F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxwellResidual {
    /// `∇·B = 0`
    pub gauss_magnetic: f64,
    /// `∇×E = −∂B/∂t`
    pub faraday: f64,
    /// `∇·D = 0`
    pub gauss_electric: f64,
    /// `∇×H = ∂D/∂t`
    pub ampere: f64,
}

impl MaxwellResidual {
    pub fn max(&self) -> f64 {
        self.gauss_magnetic
            .max(self.faraday)
            .max(self.gauss_electric)
            .max(self.ampere)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

pub fn maxwell_residual(mode: &PlaneWaveMode, t: &ConstitutiveTensors) -> MaxwellResidual {
    let i = Complex64::i();
    let w = Complex64::new(mode.omega, 0.0);
    let q = to_complex_vector(&mode.q.vector());
    let f = mode.amplitude;
    let e = f * (i * w);
    let b = q.cross(&f) * i;
    let d = to_complex_matrix(&t.eps1) * e + to_complex_matrix(&t.eps2) * b;
    let h = to_complex_matrix(&t.mu1) * e + to_complex_matrix(&t.mu2) * b;
    let qn = mode.q.magnitude();
    let wn = mode.omega.abs();

    // Fourier factors: ∇ → iq, ∂t → −iω.
    let div_b = (q.dot(&b) * i).norm();
    let faraday = cnorm(&(q.cross(&e) * i - b * (i * w)));
    let div_d = (q.dot(&d) * i).norm();
    let ampere = cnorm(&(q.cross(&h) * i + d * (i * w)));

    MaxwellResidual {
        gauss_magnetic: ratio(div_b, qn * cnorm(&b)),
        faraday: ratio(faraday, qn * cnorm(&e) + wn * cnorm(&b)),
        gauss_electric: ratio(div_d, qn * cnorm(&d)),
        ampere: ratio(ampere, qn * cnorm(&h) + wn * cnorm(&d)),
    }
}
