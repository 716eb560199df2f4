//! Small-cavity local-field correction.
//!
//! An atom sits at the center of a spherical hole of radius `R` cut into a
//! homogeneous medium. The mode function near the origin obeys a pair of
//! linear consistency conditions for its value `F(0)` and its second
//! derivatives `F_{s,αn}(0)`:
//!
//! ```text
//! Γ1·F      = a + Δ1·F''
//! Δ2·F''    = −a⊗q⊗q + Γ2·F
//! ```
//!
//! where `a` is the normalized plane-wave amplitude. The four tensors are
//! integrals over `p` of `sin(|p|R)/|p|³ · [Λ(p) − ω²ε − i0]⁻¹` contracted
//! with the material contrast between medium and hole.
//!
//! Writing `p = s·p̂`, the resolvent along a ray is diagonal in the
//! generalized eigenbasis of `(Λ(p̂), ε)`, so the radial integrals reduce to
//! two universal functions of `x = ωR/√κ`:
//!
//! ```text
//! I0(x) = ∫₀^∞ sin(ux) / (u (u² − 1 − i0)) du
//! I2(x) = ∫₀^∞ u sin(ux) / (u² − 1 − i0) du
//! ```
//!
//! Each is split into a principal value on `[0, 2]`, the `iπ` residue at
//! `u = 1` and a tail on `[2, ∞)` that is rotated onto `u = 2 + it`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constitutive::{validate_onsager, ConstitutiveTensors};
use crate::dispersion::{generalized_eigen, lambda_matrix, normalized_amplitude, WaveVector};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, si_complement_asymptotic, SphereGrid, Tolerance};
use crate::tensor::{cnorm, levi_civita, to_complex_matrix, triple, CMatrix3, CVector3};

/// Condition number of the flattened `Δ2` above which the system is rejected.
pub const DELTA2_CONDITION_LIMIT: f64 = 1e10;
/// Condition number of `Q` above which it is treated as singular.
pub const Q_CONDITION_LIMIT: f64 = 1e12;
/// `ωR/v_min` above which the long-wavelength expansion is flagged.
pub const LONG_WAVELENGTH_WARNING: f64 = 0.1;
/// Interval budget floor for the finite-shift radial integrals.
const REGULARIZED_MIN_INTERVALS: usize = 8000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Spherical hole of radius `radius` in `medium`, filled with `hole`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityConfig {
    pub radius: f64,
    pub medium: ConstitutiveTensors,
    pub hole: ConstitutiveTensors,
}

impl CavityConfig {
    /// Vacuum hole (same constants as the medium).
    pub fn new(radius: f64, medium: ConstitutiveTensors) -> Result<Self> {
        Self::with_hole(radius, medium, ConstitutiveTensors::vacuum(medium.constants))
    }

    pub fn with_hole(radius: f64, medium: ConstitutiveTensors, hole: ConstitutiveTensors) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidInput(format!("cavity radius must be positive, got {radius}")));
        }
        for (name, t) in [("medium", &medium), ("hole", &hole)] {
            if !t.is_magnetoelectric_free() {
                return Err(Error::MagnetoelectricUnsupported);
            }
            let report = validate_onsager(t, 1e-10)?;
            if !report.is_ok() {
                return Err(Error::InvalidInput(format!("{name} tensors: {report}")));
            }
        }
        Ok(Self { radius, medium, hole })
    }

    /// True when medium and hole tensors coincide.
    pub fn is_contrast_free(&self) -> bool {
        self.medium.eps1 == self.hole.eps1 && self.medium.mu2 == self.hole.mu2
    }
}

/// Angular grid and radial tolerance for the correction integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub n_theta: usize,
    pub n_phi: usize,
    pub radial: Tolerance,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            n_theta: 32,
            n_phi: 64,
            radial: Tolerance::default(),
        }
    }
}

impl QuadratureSpec {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        Self {
            n_theta,
            n_phi,
            ..Self::default()
        }
    }

    /// Twice the angular nodes and a hundredfold tighter radial tolerance.
    pub fn refined(&self) -> Self {
        Self {
            n_theta: 2 * self.n_theta,
            n_phi: 2 * self.n_phi,
            radial: Tolerance {
                abs: self.radial.abs * 1e-2,
                rel: self.radial.rel * 1e-2,
                max_intervals: 2 * self.radial.max_intervals,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_theta < 2 || self.n_phi < 2 || self.n_phi % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "angular grid {}x{} invalid: need n_theta >= 2 and even n_phi >= 2",
                self.n_theta, self.n_phi
            )));
        }
        let t = self.radial;
        if !(t.rel >= 0.0 && t.abs >= 0.0 && (t.rel > 0.0 || t.abs > 0.0) && t.max_intervals >= 1) {
            return Err(Error::InvalidInput("radial tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> SphereGrid {
        SphereGrid::new(self.n_theta, self.n_phi)
    }
}

/// `[Λ(p) − ω²·eps1 − iηI]⁻¹`.
pub fn resolvent(p: &Vector3<f64>, omega: f64, medium: &ConstitutiveTensors, eta: f64) -> Result<CMatrix3> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidInput(format!("resolvent shift must be positive, got {eta}")));
    }
    let a = lambda_matrix(p, &medium.mu2) - medium.eps1 * (omega * omega);
    let m = to_complex_matrix(&a) - CMatrix3::identity() * Complex64::new(0.0, eta);
    m.try_inverse()
        .ok_or_else(|| Error::Factorization("shifted resolvent matrix is singular".into()))
}

/// Universal radial integrals `(I0(x), I2(x))` with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialIntegrals {
    pub i0: Complex64,
    pub i2: Complex64,
    pub error: f64,
    pub evaluations: usize,
}

/// Evaluate `I0(x)` and `I2(x)` for `x > 0`.
pub fn radial_integrals(x: f64, tol: Tolerance) -> RadialIntegrals {
    let h0 = |u: f64| if u == 0.0 { x } else { (u * x).sin() / u };
    let h2 = |u: f64| u * (u * x).sin();

    // Principal value on [0, 2], folded about the pole.
    let pv = integrate(
        |t| {
            let (up, um) = (1.0 + t, 1.0 - t);
            [
                (h0(up) / (up + 1.0) - h0(um) / (um + 1.0)) / t,
                (h2(up) / (up + 1.0) - h2(um) / (um + 1.0)) / t,
            ]
        },
        0.0,
        1.0,
        &[],
        tol,
    );

    let residue = Complex64::new(0.0, 0.5 * PI * x.sin());

    // Tail: ∫₂^∞ φ(u) sin(ux) du = Im[i e^{2ix} ∫₀^∞ φ(2 + it) e^{−tx} dt].
    let phi0 = |u: Complex64| ONE / (u * (u * u - 1.0));
    let phi2 = |u: Complex64| u / (u * u - 1.0);
    let eval = |t: f64| {
        let u = Complex64::new(2.0, t);
        let damp = (-t * x).exp();
        let (a, b) = (phi0(u) * damp, phi2(u) * damp);
        [a.re, a.im, b.re, b.im]
    };
    let t_max = 50.0 / x;
    let near = integrate(eval, 0.0, t_max.min(2.0), &[], tol);
    let mut tail = near.value;
    let mut error = pv.error + near.error;
    let mut evaluations = pv.evaluations + near.evaluations;
    if t_max > 2.0 {
        // t = 2·e^y resolves the slow 1/t decay out to t·x = 50.
        let far = integrate(
            |y| {
                let t = 2.0 * y.exp();
                let v = eval(t);
                [v[0] * t, v[1] * t, v[2] * t, v[3] * t]
            },
            0.0,
            (t_max / 2.0).ln(),
            &[],
            tol,
        );
        for k in 0..4 {
            tail[k] += far.value[k];
        }
        error += far.error;
        evaluations += far.evaluations;
    }
    let rot = Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, 2.0 * x);
    let t0 = (rot * Complex64::new(tail[0], tail[1])).im;
    let t2 = (rot * Complex64::new(tail[2], tail[3])).im;

    RadialIntegrals {
        i0: Complex64::new(pv.value[0] + t0, 0.0) + residue,
        i2: Complex64::new(pv.value[1] + t2, 0.0) + residue,
        error,
        evaluations,
    }
}

/// Quadrature and conditioning diagnostics of a [`LocalFieldSystem`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalFieldDiagnostics {
    pub method: String,
    pub n_theta: usize,
    pub n_phi: usize,
    pub rays: usize,
    pub radial_evaluations: usize,
    /// Radial quadrature error of the `n = 0` and `n = 2` kernels, relative
    /// to their angular integrals.
    pub radial_error_a0: f64,
    pub radial_error_a2: f64,
    pub poles_per_ray_min: usize,
    pub poles_per_ray_max: usize,
    pub delta2_condition: f64,
    pub q_condition: f64,
    /// Odd-parity remainder of the angular sum; the neglected surface term
    /// is proportional to it and vanishes for an inversion-symmetric grid.
    pub surface_parity_defect: f64,
    /// `ωR / v_min`.
    pub long_wavelength_parameter: f64,
    pub warnings: Vec<String>,
}

/// The correction tensors at one frequency together with `Q`.
///
/// Rank-4 and rank-6 tensors are stored flattened with [`triple`]:
/// `delta1` is `3 × 27` with columns `(s α n)`, `gamma2` is `27 × 3` with
/// rows `(i δ γ)`, `delta2` is `27 × 27` with rows `(i δ γ)` and columns
/// `(s α n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFieldSystem {
    pub omega: f64,
    pub radius: f64,
    pub gamma1: CMatrix3,
    pub delta1: DMatrix<Complex64>,
    pub gamma2: DMatrix<Complex64>,
    pub delta2: DMatrix<Complex64>,
    pub delta2_inv: DMatrix<Complex64>,
    pub q: CMatrix3,
    pub q_inv: CMatrix3,
    pub diagnostics: LocalFieldDiagnostics,
}

/// Angular integrals `A0 = ∫dΩ K0(p̂)` and `A2[δ][γ] = ∫dΩ p̂_δ p̂_γ K2(p̂)`.
struct Kernels {
    a0: CMatrix3,
    a2: [[CMatrix3; 3]; 3],
    err0: f64,
    err2: f64,
    evaluations: usize,
    poles: (usize, usize),
    parity: f64,
    v_min: f64,
}

/// Per-ray contribution before weighting.
struct Ray {
    k0: CMatrix3,
    k2: CMatrix3,
    err0: f64,
    err2: f64,
    evaluations: usize,
    poles: usize,
    v_min: f64,
}

fn outer(v: &Vector3<f64>) -> Matrix3<f64> {
    v * v.transpose()
}

fn frobenius(m: &CMatrix3) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn plemelj_ray(phat: &Vector3<f64>, omega: f64, cavity: &CavityConfig, tol: Tolerance) -> Result<Ray> {
    let medium = &cavity.medium;
    let (kappa, v) = generalized_eigen(phat, medium).map_err(|e| Error::PoleLocation(e.to_string()))?;
    let w2 = omega * omega;
    // Longitudinal part: the n = 0 radial integral is π/2, the n = 2 one
    // vanishes (Abel limit of ∫ s sin(sR) ds).
    let mut k0 = to_complex_matrix(&outer(&v[0])) * Complex64::new(-0.5 * PI / w2, 0.0);
    let mut k2 = CMatrix3::zeros();
    let (mut err0, mut err2, mut evaluations) = (0.0, 0.0, 0);
    for a in 1..3 {
        if !(kappa[a] > 0.0 && kappa[a].is_finite()) {
            return Err(Error::PoleLocation(format!(
                "non-positive transverse eigenvalue {:.3e} along {:?}",
                kappa[a],
                phat.as_slice()
            )));
        }
        let speed = kappa[a].sqrt();
        let r = radial_integrals(omega * cavity.radius / speed, tol);
        let vv = to_complex_matrix(&outer(&v[a]));
        k0 += vv * (r.i0 / w2);
        k2 += vv * (r.i2 / kappa[a]);
        let n = v[a].norm_squared();
        err0 += n * r.error / w2;
        err2 += n * r.error / kappa[a];
        evaluations += r.evaluations;
    }
    Ok(Ray {
        k0,
        k2,
        err0,
        err2,
        evaluations,
        poles: 2,
        v_min: kappa[1].sqrt(),
    })
}

/// Full-matrix radial integrals at finite `η` (cross-check path).
fn regularized_ray(pdir: &Vector3<f64>, omega: f64, cavity: &CavityConfig, eta: f64, tol: Tolerance) -> Result<Ray> {
    let medium = &cavity.medium;
    let r = cavity.radius;
    let (kappa, _) = generalized_eigen(pdir, medium).map_err(|e| Error::PoleLocation(e.to_string()))?;
    let s_max = 400.0 * PI / r;

    let eye = CMatrix3::identity();
    let b = to_complex_matrix(&(medium.eps1 * (omega * omega))) + eye * Complex64::new(0.0, eta);
    let lam = to_complex_matrix(&lambda_matrix(pdir, &medium.mu2));
    let m_of = |s: f64| (lam * Complex64::new(s * s, 0.0) - b).try_inverse();
    let pc = crate::tensor::to_complex_vector(pdir);
    let m_inf = pc * pc.transpose() / (-pc.dot(&(b * pc)));

    let mut cuts: Vec<f64> = Vec::new();
    let mut poles = 0;
    for &k in &kappa[1..] {
        if k > 0.0 {
            let s = omega / k.sqrt();
            poles += 1;
            cuts.push(s);
            for j in 1..=8 {
                let d = s * 10f64.powi(-j);
                cuts.push(s - d);
                cuts.push(s + d);
            }
        }
    }
    let period = PI / r;
    let mut j = 1.0;
    while j * period < s_max {
        cuts.push(j * period);
        j += 1.0;
    }
    cuts.sort_by(f64::total_cmp);

    let mut failed = false;
    let est = integrate(
        |s| {
            let mut out = [0.0; 36];
            let Some(m) = m_of(s) else {
                failed = true;
                return out;
            };
            let f0 = if s == 0.0 { r } else { (s * r).sin() / s };
            let f2 = s * (s * r).sin();
            let d2 = m - m_inf;
            for (k, (z0, z2)) in m.iter().zip(d2.iter()).enumerate() {
                let a = z0 * f0;
                let c = z2 * f2;
                out[2 * k] = a.re;
                out[2 * k + 1] = a.im;
                out[18 + 2 * k] = c.re;
                out[18 + 2 * k + 1] = c.im;
            }
            out
        },
        0.0,
        s_max,
        &cuts,
        tol,
    );
    if failed {
        return Err(Error::Factorization("shifted resolvent singular on the radial path".into()));
    }
    let mut k0 = CMatrix3::zeros();
    let mut k2 = CMatrix3::zeros();
    for k in 0..9 {
        k0[k] = Complex64::new(est.value[2 * k], est.value[2 * k + 1]);
        k2[k] = Complex64::new(est.value[18 + 2 * k], est.value[18 + 2 * k + 1]);
    }
    // Tails beyond s_max: M ≈ M∞ + N/s².
    let sr = s_max * r;
    let tail = Complex64::new(si_complement_asymptotic(sr), 0.0);
    let m_end = m_of(s_max).ok_or_else(|| Error::Factorization("singular resolvent at cutoff".into()))?;
    k0 += m_end * tail;
    let n_coef = (m_end - m_inf) * Complex64::new(s_max * s_max, 0.0);
    k2 += n_coef * tail;
    Ok(Ray {
        k0,
        k2,
        err0: est.error,
        err2: est.error,
        evaluations: est.evaluations,
        poles,
        v_min: kappa[1].max(0.0).sqrt(),
    })
}

fn angular_kernels<F>(grid: &SphereGrid, ray: F) -> Result<Kernels>
where
    F: Fn(&Vector3<f64>) -> Result<Ray> + Sync,
{
    let rays: Vec<Result<Ray>> = grid.directions.par_iter().map(&ray).collect();
    let mut a0 = CMatrix3::zeros();
    let mut a2 = [[CMatrix3::zeros(); 3]; 3];
    let mut odd = [CMatrix3::zeros(); 3];
    let mut abs_sum = 0.0;
    let (mut err0, mut err2, mut evaluations) = (0.0, 0.0, 0);
    let mut poles = (usize::MAX, 0);
    let mut v_min = f64::INFINITY;
    for ((p, &w), r) in grid.directions.iter().zip(&grid.weights).zip(rays) {
        let r = r?;
        let wc = Complex64::new(w, 0.0);
        a0 += r.k0 * wc;
        for d in 0..3 {
            odd[d] += r.k0 * Complex64::new(w * p[d], 0.0);
            for g in 0..3 {
                a2[d][g] += r.k2 * Complex64::new(w * p[d] * p[g], 0.0);
            }
        }
        abs_sum += w * frobenius(&r.k0);
        err0 += w * r.err0;
        err2 += w * r.err2;
        evaluations += r.evaluations;
        poles = (poles.0.min(r.poles), poles.1.max(r.poles));
        v_min = v_min.min(r.v_min);
    }
    let parity = odd.iter().map(frobenius).fold(0.0, f64::max) / abs_sum.max(f64::MIN_POSITIVE);
    let a2_norm = a2.iter().flatten().map(frobenius).map(|x| x * x).sum::<f64>().sqrt();
    Ok(Kernels {
        a0,
        a2,
        err0: err0 / frobenius(&a0).max(f64::MIN_POSITIVE),
        err2: err2 / a2_norm.max(f64::MIN_POSITIVE),
        evaluations,
        poles,
        parity,
        v_min,
    })
}

/// Magnetic contrast `C[j][α][n][s] = ϵ_jαβ ϵ_mns Δμ_βm`.
fn magnetic_contrast(dmu: &Matrix3<f64>) -> [[[[f64; 3]; 3]; 3]; 3] {
    let mut c = [[[[0.0; 3]; 3]; 3]; 3];
    for (j, cj) in c.iter_mut().enumerate() {
        for (al, cja) in cj.iter_mut().enumerate() {
            for (n, cjan) in cja.iter_mut().enumerate() {
                for (s, out) in cjan.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for b in 0..3 {
                        for m in 0..3 {
                            acc += levi_civita(j, al, b) * levi_civita(m, n, s) * dmu[(b, m)];
                        }
                    }
                    *out = acc;
                }
            }
        }
    }
    c
}

fn singular_values(m: &DMatrix<Complex64>) -> (f64, f64) {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    (max, min)
}

fn condition(m: &DMatrix<Complex64>) -> f64 {
    let (max, min) = singular_values(m);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn assemble(omega: f64, cavity: &CavityConfig, k: Kernels, quad: &QuadratureSpec, method: &str) -> Result<LocalFieldSystem> {
    let w2 = omega * omega;
    let pref = Complex64::new(1.0 / (2.0 * PI * PI), 0.0);
    let deps = to_complex_matrix(&(cavity.medium.eps1 - cavity.hole.eps1));
    let c = magnetic_contrast(&(cavity.medium.mu2 - cavity.hole.mu2));

    let gamma1 = CMatrix3::identity() + k.a0 * deps * (pref * w2);

    let mut delta1 = DMatrix::from_element(3, 27, ZERO);
    let mut gamma2 = DMatrix::from_element(27, 3, ZERO);
    let mut delta2 = DMatrix::<Complex64>::identity(27, 27);
    for i in 0..3 {
        for s in 0..3 {
            for al in 0..3 {
                for n in 0..3 {
                    let mut acc = ZERO;
                    for j in 0..3 {
                        acc += k.a0[(i, j)] * c[j][al][n][s];
                    }
                    delta1[(i, triple(s, al, n))] = acc * pref;
                }
            }
        }
        for d in 0..3 {
            for g in 0..3 {
                let row = triple(i, d, g);
                let a2 = &k.a2[d][g];
                let contrast = a2 * deps * (pref * w2);
                for m in 0..3 {
                    gamma2[(row, m)] = contrast[(i, m)];
                }
                for s in 0..3 {
                    for al in 0..3 {
                        for n in 0..3 {
                            let mut acc = ZERO;
                            for j in 0..3 {
                                acc += a2[(i, j)] * c[j][al][n][s];
                            }
                            delta2[(row, triple(s, al, n))] += acc * pref;
                        }
                    }
                }
            }
        }
    }

    let delta2_condition = condition(&delta2);
    if !(delta2_condition <= DELTA2_CONDITION_LIMIT) {
        return Err(Error::IllConditioned {
            condition: delta2_condition,
        });
    }
    let delta2_inv = delta2
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::IllConditioned {
            condition: f64::INFINITY,
        })?;
    let correction = &delta1 * &delta2_inv * &gamma2;
    let mut q = gamma1;
    for i in 0..3 {
        for m in 0..3 {
            q[(i, m)] -= correction[(i, m)];
        }
    }
    let qd = DMatrix::from_fn(3, 3, |i, j| q[(i, j)]);
    let q_condition = condition(&qd);
    if !(q_condition <= Q_CONDITION_LIMIT) {
        return Err(Error::SingularQ { condition: q_condition });
    }
    let q_inv = q.try_inverse().ok_or(Error::SingularQ {
        condition: f64::INFINITY,
    })?;

    let lw = omega * cavity.radius / k.v_min;
    let mut warnings = Vec::new();
    if lw > LONG_WAVELENGTH_WARNING {
        warnings.push(format!(
            "omega*R/v_min = {lw:.3e} exceeds {LONG_WAVELENGTH_WARNING}; the small-cavity expansion may be inaccurate"
        ));
    }
    let finite = gamma1.iter().chain(q.iter()).chain(delta2_inv.iter()).chain(delta1.iter()).chain(gamma2.iter()).all(|z| z.re.is_finite() && z.im.is_finite());
    if !finite {
        return Err(Error::Convergence {
            what: "local-field tensors".into(),
            estimate: f64::INFINITY,
        });
    }

    Ok(LocalFieldSystem {
        omega,
        radius: cavity.radius,
        gamma1,
        delta1,
        gamma2,
        delta2,
        delta2_inv,
        q,
        q_inv,
        diagnostics: LocalFieldDiagnostics {
            method: method.into(),
            n_theta: quad.n_theta,
            n_phi: quad.n_phi,
            rays: quad.n_theta * quad.n_phi,
            radial_evaluations: k.evaluations,
            radial_error_a0: k.err0,
            radial_error_a2: k.err2,
            poles_per_ray_min: k.poles.0,
            poles_per_ray_max: k.poles.1,
            delta2_condition,
            q_condition,
            surface_parity_defect: k.parity,
            long_wavelength_parameter: lw,
            warnings,
        },
    })
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidInput(format!("frequency must be positive, got {omega}")));
    }
    Ok(())
}

/// The correction system in the `η → 0⁺` limit.
pub fn correction_tensors(omega: f64, cavity: &CavityConfig, quad: &QuadratureSpec) -> Result<LocalFieldSystem> {
    check_omega(omega)?;
    quad.validate()?;
    let grid = quad.grid();
    if cavity.is_contrast_free() {
        // Every integrand carries a zero contrast factor.
        let v_min = grid
            .directions
            .iter()
            .map(|p| generalized_eigen(p, &cavity.medium).map(|(k, _)| k[1].sqrt()))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::PoleLocation(e.to_string()))?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let k = Kernels {
            a0: CMatrix3::zeros(),
            a2: [[CMatrix3::zeros(); 3]; 3],
            err0: 0.0,
            err2: 0.0,
            evaluations: 0,
            poles: (2, 2),
            parity: 0.0,
            v_min,
        };
        return assemble(omega, cavity, k, quad, "no_contrast");
    }
    let tol = quad.radial;
    let k = angular_kernels(&grid, |p| plemelj_ray(p, omega, cavity, tol))?;
    assemble(omega, cavity, k, quad, "plemelj")
}

/// The correction system at finite shift `eta` (same units as `ω²·eps1`),
/// integrating the full resolvent numerically along each ray.
pub fn correction_tensors_regularized(
    omega: f64,
    cavity: &CavityConfig,
    quad: &QuadratureSpec,
    eta: f64,
) -> Result<LocalFieldSystem> {
    check_omega(omega)?;
    quad.validate()?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidInput(format!("shift must be positive, got {eta}")));
    }
    let grid = quad.grid();
    let tol = Tolerance {
        max_intervals: quad.radial.max_intervals.max(REGULARIZED_MIN_INTERVALS),
        ..quad.radial
    };
    let k = angular_kernels(&grid, |p| regularized_ray(p, omega, cavity, eta, tol))?;
    assemble(omega, cavity, k, quad, "regularized")
}

/// Corrected mode amplitude at the cavity center plus consistency checks.
#[derive(Debug, Clone, PartialEq)]
pub struct OriginMode {
    /// `F(0)`.
    pub field: CVector3,
    /// Plane-wave amplitude `X / ((2π)^{3/2} √(X†εX))`.
    pub uncorrected: CVector3,
    /// `F_{s,αn}(0)` flattened with [`triple`]`(s, α, n)`.
    pub second_derivatives: DVector<Complex64>,
    /// `|Γ1·F − a − Δ1·F''| / |a|`.
    pub closure_residual: f64,
}

/// `F(0)` for polarization vector `x` of a mode with wavevector `q`, using a
/// system computed at that mode's frequency.
pub fn mode_at_origin(x: &CVector3, q: &WaveVector, cavity: &CavityConfig, system: &LocalFieldSystem) -> Result<OriginMode> {
    let a = normalized_amplitude(x, &cavity.medium.eps1);
    let qv = q.vector();
    let mut aqq = DVector::from_element(27, ZERO);
    for i in 0..3 {
        for d in 0..3 {
            for g in 0..3 {
                aqq[triple(i, d, g)] = a[i] * (qv[d] * qv[g]);
            }
        }
    }
    let coupled = &system.delta1 * (&system.delta2_inv * &aqq);
    let rhs = a - CVector3::new(coupled[0], coupled[1], coupled[2]);
    let field = system.q_inv * rhs;

    let fd = DVector::from_column_slice(field.as_slice());
    let second = &system.delta2_inv * (&system.gamma2 * &fd - &aqq);
    let d1f = &system.delta1 * &second;
    let r = system.gamma1 * field - a - CVector3::new(d1f[0], d1f[1], d1f[2]);
    let scale = cnorm(&a).max(f64::MIN_POSITIVE);
    Ok(OriginMode {
        field,
        uncorrected: a,
        second_derivatives: second,
        closure_residual: cnorm(&r) / scale,
    })
}
