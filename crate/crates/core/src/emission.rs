//! Spontaneous emission of a two-level atom at the center of the cavity.
//!
//! The golden-rule amplitude decay constant
//!
//! ```text
//! γ = (π/2ħ) Σ_{ρ,λ} ∫d³q ω_ρ(q) δ(ω_ρ(q) − ω₀) |d·F(ρ,λ,q,0)|²
//! ```
//!
//! is reduced to an integral over the isofrequency surfaces. Because
//! `ω_ρ(q) = v_ρ(q̂)|q|`, the radial delta function fixes
//! `|q| = q₀(q̂) = ω₀/v_ρ(q̂)` with Jacobian `q₀²/v_ρ`.
//!
//! `γ` is the amplitude constant: `|c(t)| ~ e^{−γt}` and the excited-state
//! population decays at `2γ`.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;

use crate::constitutive::{ConstitutiveTensors, PhysicalConstants};
use crate::dispersion::{normalized_amplitude, phase_speed, polarization_speeds, WaveVector};
use crate::error::{Error, Result};
use crate::localfield::{correction_tensors, mode_at_origin, CavityConfig, LocalFieldSystem, QuadratureSpec};
use crate::quadrature::SphereGrid;
use crate::tensor::{to_complex_vector, CVector3};

/// Relative difference between the full and half angular grids accepted as
/// converged.
pub const ANGULAR_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoLevelAtom {
    /// Transition frequency (rad/s).
    pub omega0: f64,
    /// Dipole matrix element (C·m), charge included.
    pub dipole: Vector3<f64>,
}

impl TwoLevelAtom {
    pub fn new(omega0: f64, dipole: Vector3<f64>) -> Result<Self> {
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(Error::InvalidInput(format!("transition frequency must be positive, got {omega0}")));
        }
        if !dipole.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("dipole has non-finite entries".into()));
        }
        Ok(Self { omega0, dipole })
    }
}

/// Contribution of one polarization sheet, sheets ordered by phase speed
/// (slowest first) in every direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchContribution {
    pub sheet: usize,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayResult {
    /// Amplitude decay constant (1/s).
    pub gamma: f64,
    pub branch_contributions: Vec<BranchContribution>,
    /// `|γ − γ_half|` with `γ_half` from the grid with half the nodes.
    pub error_estimate: f64,
    pub converged: bool,
    pub n_theta: usize,
    pub n_phi: usize,
    pub cavity_corrected: bool,
    /// Largest local-field closure residual over all modes (0 when
    /// uncorrected).
    pub max_closure_residual: f64,
}

/// `q₀ = ω₀ / v_ρ(q̂)` on branch `rho` (numbering of
/// [`solve_branches`](crate::dispersion::solve_branches)).
pub fn isofrequency_radius(qhat: &Vector3<f64>, rho: usize, medium: &ConstitutiveTensors, omega0: f64) -> Result<f64> {
    if !(omega0.is_finite() && omega0 > 0.0) {
        return Err(Error::InvalidInput(format!("frequency must be positive, got {omega0}")));
    }
    Ok(omega0 / phase_speed(rho, qhat, medium)?)
}

/// `ω₀³‖d‖² / (6π ε₀ ħ c³)`.
pub fn free_space_rate(atom: &TwoLevelAtom, constants: &PhysicalConstants) -> f64 {
    atom.omega0.powi(3) * atom.dipole.norm_squared()
        / (6.0 * PI * constants.eps0 * constants.hbar * constants.c.powi(3))
}

/// Per-direction data shared by the decay rate and the mode discretization:
/// for each polarization sheet, `(v, |d·F(0)|², closure residual)`.
pub(crate) fn direction_couplings(
    qhat: &Vector3<f64>,
    atom: &TwoLevelAtom,
    medium: &ConstitutiveTensors,
    cavity: Option<(&CavityConfig, &LocalFieldSystem)>,
) -> Result<Vec<(f64, f64, f64)>> {
    let d = to_complex_vector(&atom.dipole);
    let mut out = Vec::with_capacity(2);
    for (_, x, v) in polarization_speeds(qhat, medium)? {
        let xc = to_complex_vector(&x);
        let (f, res): (CVector3, f64) = match cavity {
            None => (normalized_amplitude(&xc, &medium.eps1), 0.0),
            Some((cav, sys)) => {
                let q = WaveVector::new(*qhat, atom.omega0 / v)?;
                let m = mode_at_origin(&xc, &q, cav, sys)?;
                (m.field, m.closure_residual)
            }
        };
        out.push((v, d.dot(&f).norm_sqr(), res));
    }
    Ok(out)
}

fn surface_sum(
    grid: &SphereGrid,
    atom: &TwoLevelAtom,
    medium: &ConstitutiveTensors,
    cavity: Option<(&CavityConfig, &LocalFieldSystem)>,
) -> Result<(Vec<f64>, f64)> {
    let w0 = atom.omega0;
    let pref = PI / (2.0 * medium.constants.hbar);
    let per_ray: Vec<Result<Vec<(f64, f64, f64)>>> = grid
        .directions
        .par_iter()
        .map(|p| direction_couplings(p, atom, medium, cavity))
        .collect();
    let mut sheets = vec![0.0; 2];
    let mut closure = 0.0_f64;
    for (r, &w) in per_ray.into_iter().zip(&grid.weights) {
        for (k, (v, df2, res)) in r?.into_iter().enumerate() {
            let q0 = w0 / v;
            sheets[k] += pref * w * (q0 * q0 / v) * w0 * df2;
            closure = closure.max(res);
        }
    }
    Ok((sheets, closure))
}

fn half(quad: &QuadratureSpec) -> SphereGrid {
    let nt = (quad.n_theta / 2).max(2);
    let np = ((quad.n_phi / 2).max(2) + 1) & !1;
    SphereGrid::new(nt, np)
}

fn finish(quad: &QuadratureSpec, full: (Vec<f64>, f64), half_gamma: f64, corrected: bool) -> DecayResult {
    let gamma: f64 = full.0.iter().sum();
    let error_estimate = (gamma - half_gamma).abs();
    DecayResult {
        gamma,
        branch_contributions: full
            .0
            .iter()
            .enumerate()
            .map(|(sheet, &gamma)| BranchContribution { sheet, gamma })
            .collect(),
        error_estimate,
        converged: error_estimate <= ANGULAR_TOLERANCE * gamma || gamma == 0.0,
        n_theta: quad.n_theta,
        n_phi: quad.n_phi,
        cavity_corrected: corrected,
        max_closure_residual: full.1,
    }
}

/// Decay rate with a precomputed local-field system (which must have been
/// computed at `atom.omega0`); no convergence check.
pub fn decay_rate_with_system(
    atom: &TwoLevelAtom,
    cavity: &CavityConfig,
    system: &LocalFieldSystem,
    quad: &QuadratureSpec,
) -> Result<DecayResult> {
    quad.validate()?;
    if system.omega != atom.omega0 {
        return Err(Error::InvalidInput(format!(
            "local-field system computed at {} rad/s, atom at {} rad/s",
            system.omega, atom.omega0
        )));
    }
    let ctx = Some((cavity, system));
    let full = surface_sum(&quad.grid(), atom, &cavity.medium, ctx)?;
    let coarse = surface_sum(&half(quad), atom, &cavity.medium, ctx)?;
    Ok(finish(quad, full, coarse.0.iter().sum(), true))
}

/// Cavity-corrected decay rate. Fails with a convergence error when the
/// half-grid estimate exceeds [`ANGULAR_TOLERANCE`].
pub fn decay_rate(atom: &TwoLevelAtom, cavity: &CavityConfig, quad: &QuadratureSpec) -> Result<DecayResult> {
    let system = correction_tensors(atom.omega0, cavity, quad)?;
    let r = decay_rate_with_system(atom, cavity, &system, quad)?;
    require_converged(r)
}

/// Decay rate with the bare plane-wave amplitude (no cavity).
pub fn decay_rate_uncorrected(atom: &TwoLevelAtom, medium: &ConstitutiveTensors, quad: &QuadratureSpec) -> Result<DecayResult> {
    quad.validate()?;
    let full = surface_sum(&quad.grid(), atom, medium, None)?;
    let coarse = surface_sum(&half(quad), atom, medium, None)?;
    require_converged(finish(quad, full, coarse.0.iter().sum(), false))
}

fn require_converged(r: DecayResult) -> Result<DecayResult> {
    if r.converged {
        Ok(r)
    } else {
        Err(Error::Convergence {
            what: "angular decay-rate quadrature".into(),
            estimate: r.error_estimate / r.gamma,
        })
    }
}
