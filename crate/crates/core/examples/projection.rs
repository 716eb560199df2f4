//! Splitting a Fourier-space field into its `eps1`-longitudinal and
//! `eps1`-transverse parts.

use aniso::projection::{decompose, decomposition_checks, projector_pair, FourierField};
use aniso::tensor::CVector3;
use aniso::{PhysicalConstants, Result};
use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

/// Worst projector identity residual and worst decomposition residual.
pub fn run(verbose: bool) -> Result<(f64, f64)> {
    let eps1 = Matrix3::new(2.4, 0.3, -0.2, 0.3, 1.9, 0.1, -0.2, 0.1, 3.1) * PhysicalConstants::default().eps0;
    let q = Vector3::new(2.0e6, -1.0e6, 3.5e6);
    let pair = projector_pair(&q, &eps1)?;
    let checks = pair.checks(&q, &eps1);

    let f = CVector3::new(Complex64::new(1.0, 0.5), Complex64::new(-0.3, 0.0), Complex64::new(0.2, -1.1));
    let field = FourierField::new(q, f)?;
    let parts = decompose(&field, &eps1)?;
    let d = decomposition_checks(&field, &eps1, &parts);
    let (par, perp) = parts;
    let worst = d.reconstruction.max(d.eps_transversality).max(d.longitudinal_parallel);
    if verbose {
        println!("P_par  =\n{:.6}", pair.p_par);
        println!("P_perp =\n{:.6}", pair.p_perp);
        println!("projector identities: {:.2e}", checks.max());
        println!("longitudinal part: {par:.6}");
        println!("transverse part:   {perp:.6}");
        println!("q . eps1 . F_perp relative: {:.2e}", d.eps_transversality);
    }
    Ok((checks.max(), worst))
}

fn main() -> Result<()> {
    run(true).map(|_| ())
}
