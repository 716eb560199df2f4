//! The static Schwarzschild exterior as an equivalent optical medium.
//!
//! In isotropic coordinates the metric maps to `eps = mu = n I` with
//! `n = (1 + M/2r)³ / (1 − M/2r)`.

use aniso::constitutive::{metric_to_constitutive, validate_onsager};
use aniso::{PhysicalConstants, Result, SpacetimeMetric};
use nalgebra::Matrix4;

fn isotropic_metric(m_over_r: f64) -> Matrix4<f64> {
    let h = 0.5 * m_over_r;
    let lapse = ((1.0 - h) / (1.0 + h)).powi(2);
    let conformal = (1.0 + h).powi(4);
    Matrix4::from_diagonal(&nalgebra::Vector4::new(-lapse, conformal, conformal, conformal))
}

/// Largest relative deviation of the relative permittivity and inverse
/// permeability from the index formula over a radial sweep.
pub fn run(verbose: bool) -> Result<f64> {
    let k = PhysicalConstants::default();
    let mut worst = 0.0_f64;
    if verbose {
        println!("{:>8} {:>14} {:>14}", "r/M", "eps_r", "n(r)");
    }
    for r in [1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 100.0] {
        let metric = SpacetimeMetric::new(isotropic_metric(1.0 / r))?;
        let medium = metric_to_constitutive(&metric, k)?;
        validate_onsager(&medium, 1e-12)?.into_result()?;
        let [eps_r, _, _, mu2_r] = medium.to_relative();
        let h = 0.5 / r;
        let n = (1.0 + h).powi(3) / (1.0 - h);
        for i in 0..3 {
            worst = worst.max((eps_r[(i, i)] / n - 1.0).abs());
            worst = worst.max((mu2_r[(i, i)] * n - 1.0).abs());
        }
        if verbose {
            println!("{:>8.2} {:>14.10} {:>14.10}", r, eps_r[(0, 0)], n);
        }
    }
    if verbose {
        println!("max relative deviation: {worst:.2e}");
    }
    Ok(worst)
}

fn main() -> Result<()> {
    run(true).map(|_| ())
}
