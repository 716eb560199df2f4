//! Time evolution of the excited-state amplitude coupled to a discretized
//! continuum, compared with the golden-rule rate.

use aniso::emission::{decay_rate_uncorrected, TwoLevelAtom};
use aniso::localfield::QuadratureSpec;
use aniso::wwsim::{run as simulate, EvolveOptions, ModeCounts, SimulationPlan};
use aniso::{ConstitutiveTensors, PhysicalConstants, Result};
use nalgebra::Vector3;

/// Ratio of the fitted decay constant to the golden-rule value.
pub fn run(verbose: bool) -> Result<f64> {
    let k = PhysicalConstants::default();
    let medium = ConstitutiveTensors::uniaxial(2.25, 2.6, k);
    let atom = TwoLevelAtom::new(2.0e15, Vector3::new(0.5, 0.0, 1.0) * 1e-29)?;
    let counts = ModeCounts::default();
    let quad = QuadratureSpec::new(counts.n_theta, counts.n_phi);
    let golden = decay_rate_uncorrected(&atom, &medium, &quad)?.gamma;
    let plan = SimulationPlan::suggest(atom.omega0, golden, counts.frequency_bins)?;
    let options = EvolveOptions {
        record_every: 20,
        record_modes: false,
    };
    let (set, traj, fit) = simulate(&medium, &atom, &plan, counts, options)?;
    if verbose {
        println!("modes {}  bin width {:.3e} rad/s", set.modes.len(), set.bin_width);
        println!("golden rule   {golden:.6e} 1/s");
        println!("fitted        {:.6e} 1/s  (shift {:.3e} rad/s)", fit.gamma_fit, fit.delta_omega_fit);
        println!("norm drift    {:.2e}", traj.max_norm_drift);
        println!("{:>12} {:>12} {:>12}", "t*gamma", "|c|^2", "exp(-2gt)");
        let stride = (traj.times.len() / 8).max(1);
        for i in (0..traj.times.len()).step_by(stride) {
            let t = traj.times[i];
            println!("{:>12.4} {:>12.6} {:>12.6}", t * golden, traj.c[i].norm_sqr(), (-2.0 * golden * t).exp());
        }
    }
    Ok(fit.gamma_fit / golden)
}

fn main() -> Result<()> {
    run(true).map(|_| ())
}
