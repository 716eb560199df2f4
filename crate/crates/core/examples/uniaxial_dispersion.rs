//! Ordinary and extraordinary branches of a uniaxial crystal.
//!
//! Sweeps the angle between the wavevector and the optic axis and compares
//! the extraordinary index with `1/n² = cos²θ/n_o² + sin²θ/n_e²`.

use aniso::dispersion::solve_branches;
use aniso::{ConstitutiveTensors, PhysicalConstants, Result};
use nalgebra::Vector3;

/// Largest relative deviation of the extraordinary index from the ellipse.
pub fn run(verbose: bool) -> Result<f64> {
    let k = PhysicalConstants::default();
    let (n_o, n_e) = (1.658_f64, 1.486_f64);
    let crystal = ConstitutiveTensors::uniaxial(n_o * n_o, n_e * n_e, k);
    let mut worst = 0.0_f64;
    if verbose {
        println!("{:>8} {:>12} {:>12} {:>12}", "theta", "n_slow", "n_fast", "n_e(theta)");
    }
    for step in 0..=9 {
        let theta = step as f64 * std::f64::consts::FRAC_PI_2 / 9.0;
        let qhat = Vector3::new(theta.sin(), 0.0, theta.cos());
        let branches = solve_branches(&qhat, &crystal)?;
        let mut n: Vec<f64> = branches
            .iter()
            .filter(|b| !b.is_longitudinal_zero_mode)
            .flat_map(|b| vec![k.c / b.omega; b.lambda_count])
            .collect();
        n.sort_by(|a, b| b.total_cmp(a));
        let expected = 1.0 / (theta.cos().powi(2) / (n_o * n_o) + theta.sin().powi(2) / (n_e * n_e)).sqrt();
        // Negative crystal: the ordinary wave is the slow one.
        worst = worst.max((n[1] / expected - 1.0).abs());
        if verbose {
            println!("{:>8.4} {:>12.8} {:>12.8} {:>12.8}", theta, n[0], n[1], expected);
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
