//! Orientation dependence of the emission rate in a uniaxial crystal,
//! resolved by polarization sheet.

use aniso::emission::{decay_rate_uncorrected, free_space_rate, TwoLevelAtom};
use aniso::localfield::QuadratureSpec;
use aniso::{ConstitutiveTensors, PhysicalConstants, Result};
use nalgebra::Vector3;

/// Rates (in units of the free-space rate) for a dipole tilted from the
/// optic axis by `0, π/8, …, π/2`.
pub fn run(verbose: bool) -> Result<Vec<f64>> {
    let k = PhysicalConstants::default();
    let crystal = ConstitutiveTensors::uniaxial(2.75, 2.21, k);
    let quad = QuadratureSpec::default();
    let mut out = Vec::new();
    if verbose {
        println!("{:>8} {:>10} {:>10} {:>10}", "tilt", "total", "sheet 0", "sheet 1");
    }
    for j in 0..=4 {
        let tilt = j as f64 * std::f64::consts::FRAC_PI_8;
        let atom = TwoLevelAtom::new(2.0e15, Vector3::new(tilt.sin(), 0.0, tilt.cos()) * 1e-29)?;
        let vac = free_space_rate(&atom, &k);
        let r = decay_rate_uncorrected(&atom, &crystal, &quad)?;
        out.push(r.gamma / vac);
        if verbose {
            let sheet = |s: usize| r.branch_contributions.get(s).map_or(0.0, |b| b.gamma / vac);
            println!("{:>8.4} {:>10.6} {:>10.6} {:>10.6}", tilt, r.gamma / vac, sheet(0), sheet(1));
        }
    }
    Ok(out)
}

fn main() -> Result<()> {
    run(true).map(|_| ())
}
