//! Emission rate of an atom in a small empty cavity inside a dielectric,
//! against `γ/γ_vac = n (3ε/(2ε+1))²`.

use aniso::emission::{decay_rate, decay_rate_uncorrected, free_space_rate, TwoLevelAtom};
use aniso::localfield::{CavityConfig, QuadratureSpec};
use aniso::{ConstitutiveTensors, PhysicalConstants, Result};
use nalgebra::Vector3;

/// Largest relative deviation from the real-cavity formula.
pub fn run(verbose: bool) -> Result<f64> {
    let k = PhysicalConstants::default();
    let atom = TwoLevelAtom::new(2.4e15, Vector3::new(0.0, 0.6e-29, 0.8e-29))?;
    let radius = 1e-3 * k.c / atom.omega0;
    let vacuum = free_space_rate(&atom, &k);
    let quad = QuadratureSpec::default();
    let mut worst = 0.0_f64;
    if verbose {
        println!("free-space rate {vacuum:.6e} 1/s");
        println!("{:>6} {:>12} {:>12} {:>12}", "eps", "bulk", "cavity", "formula");
    }
    for eps in [1.0, 1.5, 2.25, 4.0, 9.0] {
        let medium = ConstitutiveTensors::isotropic(eps, 1.0, k);
        let bulk = decay_rate_uncorrected(&atom, &medium, &quad)?;
        let cav = decay_rate(&atom, &CavityConfig::new(radius, medium)?, &quad)?;
        let formula = eps.sqrt() * (3.0 * eps / (2.0 * eps + 1.0)).powi(2);
        let ratio = cav.gamma / vacuum;
        worst = worst.max((ratio / formula - 1.0).abs());
        if verbose {
            println!("{:>6.2} {:>12.6} {:>12.6} {:>12.6}", eps, bulk.gamma / vacuum, ratio, formula);
        }
    }
    Ok(worst)
}

fn main() -> Result<()> {
    run(true).map(|_| ())
}
