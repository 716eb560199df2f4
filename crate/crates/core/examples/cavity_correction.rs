//! Local-field correction tensors for an atom in a small vacuum cavity.
//!
//! For an isotropic dielectric the tensors reduce to scalars with closed
//! forms in `x = ωR√ε/c`; an anisotropic magnetodielectric host shows the
//! full tensor structure and the closure diagnostics.

use aniso::localfield::{correction_tensors, CavityConfig, QuadratureSpec};
use aniso::{ConstitutiveTensors, PhysicalConstants, Result};
use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

/// Relative deviation of `Γ1` from the isotropic closed form.
pub fn run(verbose: bool) -> Result<f64> {
    let k = PhysicalConstants::default();
    let omega = 3.0e15;
    let radius = 2e-3 * k.c / omega;

    let eps_r = 2.25;
    let glass = CavityConfig::new(radius, ConstitutiveTensors::isotropic(eps_r, 1.0, k))?;
    let sys = correction_tensors(omega, &glass, &QuadratureSpec::default())?;
    let x = omega * radius * f64::sqrt(eps_r) / k.c;
    let de = (eps_r - 1.0) / (3.0 * eps_r);
    let expected = 1.0 - de + 2.0 * de * (Complex64::new(0.0, x).exp() - 1.0);
    let dev = (sys.gamma1[(0, 0)] - expected).norm() / expected.norm();

    let mut host = ConstitutiveTensors::vacuum(k);
    host.eps1 = Matrix3::new(2.0, 0.2, 0.0, 0.2, 2.6, 0.0, 0.0, 0.0, 3.2) * k.eps0;
    host.mu2 = Matrix3::from_diagonal(&Vector3::new(0.9, 0.8, 0.95)) / k.mu0;
    let crystal = CavityConfig::new(radius, host)?;
    let full = correction_tensors(omega, &crystal, &QuadratureSpec::default())?;

    if verbose {
        println!("isotropic host, eps_r = {eps_r}, x = {x:.3e}");
        println!("  Gamma1_xx = {:.10}", sys.gamma1[(0, 0)]);
        println!("  closed form {:.10}  (relative deviation {dev:.2e})", expected);
        println!("  static limit 1 - (eps-1)/(3 eps) = {:.10}", 1.0 - de);
        println!("anisotropic magnetodielectric host");
        println!("  Q =\n{:.6}", full.q.map(|z| z.re));
        println!("  Im Q =\n{:.3e}", full.q.map(|z| z.im));
        let d = &full.diagnostics;
        println!(
            "  rays {}  radial error {:.1e}  cond(Delta2) {:.2e}  cond(Q) {:.2e}",
            d.rays,
            d.radial_error_a0.max(d.radial_error_a2),
            d.delta2_condition,
            d.q_condition
        );
        for w in &d.warnings {
            println!("  warning: {w}");
        }
    }
    Ok(dev)
}

fn main() -> Result<()> {
    run(true).map(|_| ())
}
