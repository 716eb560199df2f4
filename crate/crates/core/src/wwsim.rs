//! Weisskopf–Wigner dynamics of a two-level atom coupled to a discretized
//! mode continuum.
//!
//! In the single-excitation sector and the rotating frame of the atom
//!
//! ```text
//! i dc/dt   = Σ_k g_k M_k
//! i dM_k/dt = Δ_k M_k + g_k c,      Δ_k = ω_k − ω₀
//! ```
//!
//! The window `[ω_min, ω_max]` is cut into uniform frequency bins. Every
//! (direction, polarization) pair inside a bin has the same detuning, so
//! only their coupling-weighted combination interacts with the atom; each
//! bin is therefore represented exactly by one mode with
//! `g_j² = Σ_{q̂,λ} g²`. Without a cavity the per-bin coupling is
//!
//! ```text
//! g_j² = (ω₀²/ħ²)(ħ/2ω_j) Δω Σ_{q̂,λ} w_q̂ (ω_j²/v³) |d·F|²
//! ```
//!
//! The integrator is a Strang splitting of the detuning phases and the
//! rank-two coupling, each applied exactly, so every step is unitary.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constitutive::ConstitutiveTensors;
use crate::emission::{direction_couplings, TwoLevelAtom};
use crate::error::{Error, Result};
use crate::quadrature::SphereGrid;

/// Largest `dt · max|Δ_k|` accepted by [`evolve`].
pub const MAX_PHASE_STEP: f64 = 0.1;
/// Norm drift tolerated over a run.
pub const NORM_DRIFT_LIMIT: f64 = 1e-9;
/// Smallest `|c|` accepted inside a fit window.
pub const UNDERFLOW_FLOOR: f64 = 1e-12;

/// Discretization counts: frequency bins and the angular grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeCounts {
    pub frequency_bins: usize,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for ModeCounts {
    fn default() -> Self {
        Self {
            frequency_bins: 2000,
            n_theta: 16,
            n_phi: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscreteMode {
    pub omega: f64,
    pub coupling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteModeSet {
    pub modes: Vec<DiscreteMode>,
    pub window: (f64, f64),
    pub bin_width: f64,
    pub counts: ModeCounts,
    pub omega0: f64,
    /// `Σ_{q̂,λ} w |d·F|² / v³` over the isofrequency shells; the whole
    /// frequency dependence of the coupling density factors out of it.
    pub shell_sum: f64,
    pub hbar: f64,
}

impl DiscreteModeSet {
    /// Continuum coupling density `Σ g²/Δω` at frequency `omega`.
    pub fn coupling_density(&self, omega: f64) -> f64 {
        let w0 = self.omega0;
        (w0 * w0 / (self.hbar * self.hbar)) * (self.hbar / (2.0 * omega)) * omega * omega * self.shell_sum
    }

    /// `π Σ g²/Δω` at `ω₀`: the golden-rule rate the dynamics should show.
    pub fn golden_rule_rate(&self) -> f64 {
        PI * self.coupling_density(self.omega0)
    }

    /// `Σ_k g_k²`, the curvature of `1 − |c|²` at `t = 0`.
    pub fn coupling_sum(&self) -> f64 {
        self.modes.iter().map(|m| m.coupling * m.coupling).sum()
    }

    /// A set with explicit modes (for analytic checks).
    pub fn from_modes(modes: Vec<DiscreteMode>, omega0: f64) -> Self {
        let lo = modes.iter().map(|m| m.omega).fold(omega0, f64::min);
        let hi = modes.iter().map(|m| m.omega).fold(omega0, f64::max);
        Self {
            counts: ModeCounts {
                frequency_bins: modes.len(),
                n_theta: 0,
                n_phi: 0,
            },
            modes,
            window: (lo, hi),
            bin_width: 0.0,
            omega0,
            shell_sum: 0.0,
            hbar: 1.0,
        }
    }
}

/// Sample the continuum of `medium` (no cavity) over `window`.
pub fn discretize_modes(
    medium: &ConstitutiveTensors,
    atom: &TwoLevelAtom,
    window: (f64, f64),
    counts: ModeCounts,
) -> Result<DiscreteModeSet> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < atom.omega0 && atom.omega0 < hi) {
        return Err(Error::Config(format!(
            "window [{lo}, {hi}] must be positive and contain omega0 = {}",
            atom.omega0
        )));
    }
    if counts.frequency_bins < 2 || counts.n_theta < 2 || counts.n_phi < 2 {
        return Err(Error::Config("mode counts must be at least 2 per dimension".into()));
    }
    let grid = SphereGrid::new(counts.n_theta, counts.n_phi);
    let per_ray: Vec<Result<Vec<(f64, f64, f64)>>> = grid
        .directions
        .par_iter()
        .map(|p| direction_couplings(p, atom, medium, None))
        .collect();
    let mut shell_sum = 0.0;
    for (r, &w) in per_ray.into_iter().zip(&grid.weights) {
        for (v, df2, _) in r? {
            shell_sum += w * df2 / (v * v * v);
        }
    }
    let bin_width = (hi - lo) / counts.frequency_bins as f64;
    let mut set = DiscreteModeSet {
        modes: Vec::with_capacity(counts.frequency_bins),
        window,
        bin_width,
        counts,
        omega0: atom.omega0,
        shell_sum,
        hbar: medium.constants.hbar,
    };
    for j in 0..counts.frequency_bins {
        let omega = lo + (j as f64 + 0.5) * bin_width;
        let coupling = (set.coupling_density(omega) * bin_width).sqrt();
        set.modes.push(DiscreteMode { omega, coupling });
    }
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveOptions {
    /// Store a sample every this many steps (the last step is always kept).
    pub record_every: usize,
    /// Also store the mode amplitudes at each sample.
    pub record_modes: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            record_every: 1,
            record_modes: false,
        }
    }
}

/// Sampled solution. Amplitudes are in the atom's rotating frame; the lab
/// frame amplitude is `c · e^{−iω₀t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionTrajectory {
    pub omega0: f64,
    pub times: Vec<f64>,
    pub c: Vec<Complex64>,
    pub norm: Vec<f64>,
    /// Mode amplitudes per sample, empty unless requested.
    pub modes: Vec<Vec<Complex64>>,
    pub max_norm_drift: f64,
}

impl EmissionTrajectory {
    /// `c(t)` in the lab frame.
    pub fn lab_amplitude(&self, k: usize) -> Complex64 {
        self.c[k] * Complex64::from_polar(1.0, -self.omega0 * self.times[k])
    }
}

/// Integrate from `c = 1`, `M = 0` up to `t_final`.
pub fn evolve(set: &DiscreteModeSet, t_final: f64, dt: f64, options: EvolveOptions) -> Result<EmissionTrajectory> {
    if !(dt > 0.0 && dt.is_finite() && t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::Config(format!("invalid time stepping: t_final = {t_final}, dt = {dt}")));
    }
    let detuning: Vec<f64> = set.modes.iter().map(|m| m.omega - set.omega0).collect();
    let max_det = detuning.iter().fold(0.0_f64, |a, d| a.max(d.abs()));
    if dt * max_det >= MAX_PHASE_STEP {
        return Err(Error::StepTooLarge {
            product: dt * max_det,
            limit: MAX_PHASE_STEP,
        });
    }
    let every = options.record_every.max(1);
    let steps = (t_final / dt).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { t_final / steps as f64 };

    let g: Vec<f64> = set.modes.iter().map(|m| m.coupling).collect();
    let g_norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let u: Vec<f64> = if g_norm > 0.0 { g.iter().map(|x| x / g_norm).collect() } else { vec![0.0; g.len()] };
    let half_phase: Vec<Complex64> = detuning.iter().map(|d| Complex64::from_polar(1.0, -0.5 * d * h)).collect();
    let (cos_g, sin_g) = ((g_norm * h).cos(), (g_norm * h).sin());
    let i = Complex64::new(0.0, 1.0);

    let mut c = Complex64::new(1.0, 0.0);
    let mut m = vec![Complex64::new(0.0, 0.0); g.len()];
    let mut traj = EmissionTrajectory {
        omega0: set.omega0,
        times: Vec::with_capacity(steps / every + 2),
        c: Vec::with_capacity(steps / every + 2),
        norm: Vec::with_capacity(steps / every + 2),
        modes: Vec::new(),
        max_norm_drift: 0.0,
    };
    let norm_of = |c: Complex64, m: &[Complex64]| c.norm_sqr() + m.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let record = |traj: &mut EmissionTrajectory, t: f64, c: Complex64, m: &[Complex64]| {
        let n = norm_of(c, m);
        traj.max_norm_drift = traj.max_norm_drift.max((n - 1.0).abs());
        traj.times.push(t);
        traj.c.push(c);
        traj.norm.push(n);
        if options.record_modes {
            traj.modes.push(m.to_vec());
        }
    };
    record(&mut traj, 0.0, c, &m);

    for step in 1..=steps {
        for (mk, p) in m.iter_mut().zip(&half_phase) {
            *mk *= p;
        }
        // exp(−i h G (|c⟩⟨u| + |u⟩⟨c|)) on the bright mode u.
        let proj: Complex64 = m.iter().zip(&u).map(|(z, w)| z * w).sum();
        let c_new = c * cos_g - i * sin_g * proj;
        let delta = proj * (cos_g - 1.0) - i * sin_g * c;
        for (mk, w) in m.iter_mut().zip(&u) {
            *mk += delta * w;
        }
        c = c_new;
        for (mk, p) in m.iter_mut().zip(&half_phase) {
            *mk *= p;
        }
        if step % every == 0 || step == steps {
            record(&mut traj, step as f64 * h, c, &m);
        }
    }
    if traj.max_norm_drift > NORM_DRIFT_LIMIT {
        return Err(Error::Stability {
            drift: traj.max_norm_drift,
            limit: NORM_DRIFT_LIMIT,
        });
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub gamma_fit: f64,
    /// Frequency shift: the lab-frame phase slope is `−ω₀ − δω`.
    pub delta_omega_fit: f64,
    /// RMS residual of the `ln|c|` fit.
    pub residual: f64,
    /// RMS residual of the phase fit (rad).
    pub phase_residual: f64,
    pub samples: usize,
    pub window: (f64, f64),
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    (slope, icpt, rms)
}

/// Least-squares fit of `ln|c|` and of the unwrapped phase over
/// `window = (t_start, t_end)`.
pub fn fit_decay(traj: &EmissionTrajectory, window: (f64, f64)) -> Result<DecayFit> {
    let idx: Vec<usize> = (0..traj.times.len())
        .filter(|&k| traj.times[k] >= window.0 && traj.times[k] <= window.1)
        .collect();
    if idx.len() < 3 {
        return Err(Error::Config(format!(
            "fit window [{}, {}] holds {} samples, need at least 3",
            window.0,
            window.1,
            idx.len()
        )));
    }
    let mut t = Vec::with_capacity(idx.len());
    let mut ln = Vec::with_capacity(idx.len());
    let mut phase = Vec::with_capacity(idx.len());
    let mut last: Option<f64> = None;
    let mut offset = 0.0;
    for &k in &idx {
        let z = traj.c[k];
        if z.norm() < UNDERFLOW_FLOOR {
            return Err(Error::Underflow {
                value: z.norm(),
                time: traj.times[k],
            });
        }
        let mut a = z.arg();
        if let Some(p) = last {
            while a + offset - p > PI {
                offset -= 2.0 * PI;
            }
            while a + offset - p < -PI {
                offset += 2.0 * PI;
            }
        }
        a += offset;
        last = Some(a);
        t.push(traj.times[k]);
        ln.push(z.norm().ln());
        phase.push(a);
    }
    let (s_ln, _, r_ln) = linear_fit(&t, &ln);
    let (s_ph, _, r_ph) = linear_fit(&t, &phase);
    Ok(DecayFit {
        gamma_fit: -s_ln,
        delta_omega_fit: -s_ph,
        residual: r_ln,
        phase_residual: r_ph,
        samples: t.len(),
        window,
    })
}

/// Window, step and duration suggested for a golden-rule rate `gamma`:
/// `bins` bins of width `γ/4` centered on `ω₀`, `dt·W/2 = 0.05`, run to
/// `4/γ`, fit over `[0.5/γ, 3.5/γ]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationPlan {
    pub window: (f64, f64),
    pub t_final: f64,
    pub dt: f64,
    pub fit_window: (f64, f64),
}

impl SimulationPlan {
    pub fn suggest(omega0: f64, gamma: f64, bins: usize) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) || bins < 2 {
            return Err(Error::Config(format!(
                "cannot plan a run for rate {gamma} with {bins} bins"
            )));
        }
        let half = 0.125 * gamma * bins as f64;
        if half >= omega0 {
            return Err(Error::Config("window would extend below zero frequency".into()));
        }
        Ok(Self {
            window: (omega0 - half, omega0 + half),
            t_final: 4.0 / gamma,
            dt: 0.05 / half,
            fit_window: (0.5 / gamma, 3.5 / gamma),
        })
    }
}

/// Convenience wrapper: the atom's dipole and frequency must match those
/// the set was built for.
pub fn run(
    medium: &ConstitutiveTensors,
    atom: &TwoLevelAtom,
    plan: &SimulationPlan,
    counts: ModeCounts,
    options: EvolveOptions,
) -> Result<(DiscreteModeSet, EmissionTrajectory, DecayFit)> {
    let set = discretize_modes(medium, atom, plan.window, counts)?;
    let traj = evolve(&set, plan.t_final, plan.dt, options)?;
    let fit = fit_decay(&traj, plan.fit_window)?;
    Ok((set, traj, fit))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::PhysicalConstants;
    use crate::emission::free_space_rate;
    use nalgebra::Vector3;

    #[test]
    fn no_modes_keeps_atom_excited() {
        let set = DiscreteModeSet::from_modes(vec![], 1.0);
        let tr = evolve(&set, 10.0, 0.1, EvolveOptions::default()).unwrap();
        assert!(tr.c.iter().all(|z| *z == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn single_resonant_mode_rabi() {
        let g = 0.3;
        let set = DiscreteModeSet::from_modes(vec![DiscreteMode { omega: 5.0, coupling: g }], 5.0);
        let tr = evolve(&set, 20.0, 0.01, EvolveOptions::default()).unwrap();
        for (t, c) in tr.times.iter().zip(&tr.c) {
            assert!((c.norm() - (g * t).cos().abs()).abs() < 1e-12);
        }
        assert!(tr.max_norm_drift < 1e-12);
    }

    #[test]
    fn synthetic_exponential_is_recovered() {
        let (w0, g) = (3.0, 0.2);
        let times: Vec<f64> = (0..200).map(|k| k as f64 * 0.05).collect();
        // Rotating frame: c = e^{−γt} (δω = 0).
        let c = times.iter().map(|t| Complex64::new((-g * t).exp(), 0.0)).collect();
        let tr = EmissionTrajectory {
            omega0: w0,
            norm: vec![1.0; times.len()],
            times,
            c,
            modes: vec![],
            max_norm_drift: 0.0,
        };
        let f = fit_decay(&tr, (0.0, 10.0)).unwrap();
        assert!((f.gamma_fit - g).abs() < 1e-10);
        assert!(f.delta_omega_fit.abs() < 1e-10);
    }

    #[test]
    fn underflow_is_reported() {
        let times: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let c = times.iter().map(|t| Complex64::new((-5.0 * t).exp(), 0.0)).collect();
        let tr = EmissionTrajectory {
            omega0: 1.0,
            norm: vec![1.0; 10],
            times,
            c,
            modes: vec![],
            max_norm_drift: 0.0,
        };
        assert!(matches!(fit_decay(&tr, (0.0, 9.0)), Err(Error::Underflow { .. })));
    }

    #[test]
    fn zero_dipole_gives_zero_couplings_and_window_checks() {
        let c = PhysicalConstants::default();
        let t = ConstitutiveTensors::vacuum(c);
        let a = TwoLevelAtom::new(1e15, Vector3::zeros()).unwrap();
        let counts = ModeCounts { frequency_bins: 10, n_theta: 4, n_phi: 8 };
        let s = discretize_modes(&t, &a, (0.9e15, 1.1e15), counts).unwrap();
        assert!(s.modes.iter().all(|m| m.coupling == 0.0));
        assert!(discretize_modes(&t, &a, (1.1e15, 1.2e15), counts).is_err());
    }

    #[test]
    fn vacuum_golden_rule_from_weights() {
        let c = PhysicalConstants::default();
        let t = ConstitutiveTensors::vacuum(c);
        let a = TwoLevelAtom::new(1e15, Vector3::new(0.0, 1e-29, 0.0)).unwrap();
        let counts = ModeCounts { frequency_bins: 100, n_theta: 8, n_phi: 16 };
        let s = discretize_modes(&t, &a, (0.99e15, 1.01e15), counts).unwrap();
        let g0 = free_space_rate(&a, &c);
        assert!((s.golden_rule_rate() / g0 - 1.0).abs() < 1e-2);
        // Summed weights over bins against the continuum density at ω₀.
        let sum: f64 = s.coupling_sum();
        let flat = s.coupling_density(a.omega0) * (s.window.1 - s.window.0);
        assert!((sum / flat - 1.0).abs() < 1e-2);
        // Halving the window at fixed density leaves the on-shell density unchanged.
        let half = discretize_modes(&t, &a, (0.995e15, 1.005e15), ModeCounts { frequency_bins: 50, ..counts }).unwrap();
        assert!((half.coupling_density(a.omega0) / s.coupling_density(a.omega0) - 1.0).abs() < 1e-10);
        assert!((half.bin_width / s.bin_width - 1.0).abs() < 1e-10);
    }

    /// `n` equally spaced modes over `ω₀ ± half` with flat density `γ/π`.
    fn flat_band(omega0: f64, half: f64, n: usize, gamma: f64) -> DiscreteModeSet {
        let width = 2.0 * half / n as f64;
        let g = (gamma / PI * width).sqrt();
        let modes = (0..n)
            .map(|j| DiscreteMode {
                omega: omega0 - half + (j as f64 + 0.5) * width,
                coupling: g,
            })
            .collect();
        DiscreteModeSet::from_modes(modes, omega0)
    }

    #[test]
    fn flat_continuum_decays_exponentially() {
        let gamma = 0.05;
        let set = flat_band(100.0, 20.0, 4000, gamma);
        let tr = evolve(&set, 4.0 / gamma, 0.004, EvolveOptions { record_every: 10, record_modes: false }).unwrap();
        for (t, c) in tr.times.iter().zip(&tr.c) {
            if *t > 0.5 / gamma {
                assert!((c.norm().ln() + gamma * t).abs() < 1e-2, "t = {t}");
            }
        }
        let f = fit_decay(&tr, (0.5 / gamma, 3.5 / gamma)).unwrap();
        assert!((f.gamma_fit / gamma - 1.0).abs() < 1e-2);
        assert!(tr.max_norm_drift < 1e-9);
    }

    #[test]
    fn short_time_loss_is_quadratic_in_coupling_sum() {
        let set = flat_band(100.0, 20.0, 4000, 0.05);
        let tr = evolve(&set, 1e-3, 1e-5, EvolveOptions::default()).unwrap();
        let sum = set.coupling_sum();
        for (t, c) in tr.times.iter().zip(&tr.c).skip(10) {
            let loss = 1.0 - c.norm_sqr();
            assert!((loss / (sum * t * t) - 1.0).abs() < 1e-2, "t = {t}");
        }
    }

    #[test]
    fn fit_converges_with_mode_count_at_fixed_window() {
        let gamma = 0.05;
        let mut errors = Vec::new();
        // Every count keeps the recurrence time 2π/Δω beyond the fit window;
        // the errors fall toward the finite-window bias.
        for n in [450, 500, 600, 800, 1200, 1600, 3200] {
            let set = flat_band(100.0, 20.0, n, gamma);
            let tr = evolve(&set, 4.0 / gamma, 0.0045, EvolveOptions { record_every: 5, record_modes: false }).unwrap();
            let f = fit_decay(&tr, (0.5 / gamma, 3.5 / gamma)).unwrap();
            errors.push((f.gamma_fit / gamma - 1.0).abs());
        }
        assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
        assert!(errors[errors.len() - 1] < 2e-3, "{errors:?}");
    }

    #[test]
    fn step_too_large_is_rejected() {
        let set = DiscreteModeSet::from_modes(vec![DiscreteMode { omega: 10.0, coupling: 0.1 }], 5.0);
        assert!(matches!(evolve(&set, 1.0, 0.1, EvolveOptions::default()), Err(Error::StepTooLarge { .. })));
    }
}
