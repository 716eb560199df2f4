use aniso::constitutive::{factor_epsilon, metric_to_constitutive, validate_onsager};
use aniso::dispersion::{lambda_matrix, solve_branches};
use aniso::emission::{decay_rate, decay_rate_uncorrected, TwoLevelAtom};
use aniso::localfield::{CavityConfig, QuadratureSpec};
use aniso::projection::projector_pair;
use aniso::tensor::symmetric_eigen;
use aniso::{ConstitutiveTensors, PhysicalConstants, SpacetimeMetric};
use nalgebra::{Matrix3, Matrix4, Rotation3, Vector3};
use proptest::prelude::*;

fn rotation() -> impl Strategy<Value = Matrix3<f64>> {
    (-PI..PI, -PI..PI, -PI..PI).prop_map(|(a, b, c)| Rotation3::from_euler_angles(a, b, c).into_inner())
}

const PI: f64 = std::f64::consts::PI;

/// Symmetric positive definite with eigenvalues in `[lo, hi]`.
fn spd(lo: f64, hi: f64) -> impl Strategy<Value = Matrix3<f64>> {
    (rotation(), [lo..hi, lo..hi, lo..hi]).prop_map(|(r, d)| {
        let m = r * Matrix3::from_diagonal(&Vector3::from(d)) * r.transpose();
        (m + m.transpose()) * 0.5
    })
}

fn direction() -> impl Strategy<Value = Vector3<f64>> {
    (-1.0..1.0f64, 0.0..2.0 * PI).prop_map(|(z, phi)| {
        let s = (1.0 - z * z).sqrt();
        Vector3::new(s * phi.cos(), s * phi.sin(), z)
    })
}

fn medium(eps: Matrix3<f64>, mu2: Matrix3<f64>) -> ConstitutiveTensors {
    let k = PhysicalConstants::default();
    let mut t = ConstitutiveTensors::vacuum(k);
    t.eps1 = eps * k.eps0;
    t.mu2 = mu2 / k.mu0;
    t
}

proptest! {
    #[test]
    fn metric_map_satisfies_onsager(
        spatial in spd(0.3, 3.0),
        g00 in -3.0..-0.3f64,
        shift in [-0.2..0.2f64, -0.2..0.2, -0.2..0.2],
    ) {
        let mut g = Matrix4::zeros();
        g[(0, 0)] = g00;
        for i in 0..3 {
            g[(0, i + 1)] = shift[i];
            g[(i + 1, 0)] = shift[i];
            for j in 0..3 {
                g[(i + 1, j + 1)] = spatial[(i, j)];
            }
        }
        let t = metric_to_constitutive(&SpacetimeMetric::new(g).unwrap(), PhysicalConstants::default()).unwrap();
        let report = validate_onsager(&t, 1e-12).unwrap();
        prop_assert!(report.is_ok(), "{}", report);
    }

    #[test]
    fn jacobi_eigen_reconstructs(m in spd(0.1, 10.0), s in -5.0..5.0f64) {
        // Shift to make the matrix indefinite half the time.
        let h = m - Matrix3::identity() * s;
        let (vals, vecs) = symmetric_eigen(&h);
        let back = vecs * Matrix3::from_diagonal(&vals) * vecs.transpose();
        prop_assert!((back - h).abs().max() < 1e-13 * h.abs().max().max(1.0));
    }

    #[test]
    fn epsilon_square_root(eps in spd(0.5, 20.0)) {
        let c = factor_epsilon(&eps).unwrap();
        prop_assert!((c * c - eps).abs().max() < 1e-13 * eps.abs().max());
        prop_assert!((c - c.transpose()).abs().max() == 0.0);
        prop_assert!(symmetric_eigen(&c).0.min() > 0.0);
    }

    #[test]
    fn projectors_are_complementary(eps in spd(1.0, 10.0), q in direction(), scale in -3.0..9.0f64) {
        let q = q * 10f64.powf(scale);
        let p = projector_pair(&q, &eps).unwrap();
        prop_assert!(p.checks(&q, &eps).max() < 1e-12);
    }

    #[test]
    fn lambda_annihilates_wavevector(mu2 in spd(0.2, 5.0), q in direction()) {
        let l = lambda_matrix(&q, &mu2);
        prop_assert!((l * q).norm() < 1e-14 * l.norm());
        prop_assert!((l - l.transpose()).abs().max() < 1e-15 * l.norm());
    }

    #[test]
    fn branches_are_rotation_covariant(eps in spd(1.0, 10.0), mu2 in spd(0.5, 2.0), q in direction(), r in rotation()) {
        let t = medium(eps, mu2);
        let a = solve_branches(&(q * 1e7), &t).unwrap();
        let b = solve_branches(&(r * q * 1e7), &t.rotated(&r)).unwrap();
        let speeds = |v: &[aniso::dispersion::DispersionBranch]| {
            v.iter().flat_map(|b| vec![b.omega; b.lambda_count]).collect::<Vec<_>>()
        };
        for (x, y) in speeds(&a).iter().zip(speeds(&b).iter()) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{x} vs {y}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn bulk_rate_is_rotation_invariant(eps in spd(1.5, 4.0), d in direction(), r in rotation()) {
        let t = medium(eps, Matrix3::identity());
        let quad = QuadratureSpec::default();
        let a = decay_rate_uncorrected(&TwoLevelAtom::new(2e15, d * 1e-29).unwrap(), &t, &quad).unwrap();
        let b = decay_rate_uncorrected(&TwoLevelAtom::new(2e15, r * d * 1e-29).unwrap(), &t.rotated(&r), &quad).unwrap();
        prop_assert!((a.gamma / b.gamma - 1.0).abs() < 1e-6, "{} vs {}", a.gamma, b.gamma);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn cavity_rate_is_rotation_invariant(eps in spd(1.5, 3.0), d in direction(), r in rotation()) {
        let t = medium(eps, Matrix3::identity());
        let quad = QuadratureSpec::default();
        let radius = 1e-3 * 299_792_458.0 / 2e15;
        let a = decay_rate(&TwoLevelAtom::new(2e15, d * 1e-29).unwrap(), &CavityConfig::new(radius, t).unwrap(), &quad).unwrap();
        let rt = t.rotated(&r);
        let b = decay_rate(&TwoLevelAtom::new(2e15, r * d * 1e-29).unwrap(), &CavityConfig::new(radius, rt).unwrap(), &quad).unwrap();
        prop_assert!((a.gamma / b.gamma - 1.0).abs() < 1e-6, "{} vs {}", a.gamma, b.gamma);
    }
}
