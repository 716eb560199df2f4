//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints exactly one `PASS`/`FAIL` line; exits nonzero if any
//! criterion fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use aniso::constitutive::{metric_to_constitutive, validate_onsager, ConstitutiveTensors, PhysicalConstants, SpacetimeMetric};
use aniso::dispersion::{maxwell_residual, solve_branches, PlaneWaveMode, WaveVector};
use aniso::emission::{decay_rate, decay_rate_uncorrected, TwoLevelAtom};
use aniso::localfield::{correction_tensors, correction_tensors_regularized, CavityConfig, QuadratureSpec};
use aniso::projection::{mode_sum, projector_pair};
use aniso::tensor::CMatrix3;
use aniso::wwsim::{run, EvolveOptions, ModeCounts, SimulationPlan};
use nalgebra::{Matrix3, Matrix4, Rotation3, Unit, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances.
const VACUUM_RATE_TOL: f64 = 5e-3;
const VACUUM_RUNTIME_S: f64 = 10.0;
const GLAUBER_TOL: f64 = 2e-2;
const UNIAXIAL_TOL: f64 = 1e-10;
const ONSAGER_TOL: f64 = 1e-12;
const PROJECTOR_TOL: f64 = 1e-12;
const MODE_SUM_TOL: f64 = 1e-10;
const MAXWELL_TOL: f64 = 1e-10;
const REFINEMENT_TOL: f64 = 1e-4;
const REGULARIZED_TOL: f64 = 1e-2;
const WWSIM_TOL: f64 = 5e-2;
const UNITARITY_TOL: f64 = 1e-9;
const WWSIM_RUNTIME_S: f64 = 60.0;

const SAMPLES: usize = 1000;

type Outcome = (bool, String);

/// `ω₀³d²/(6π ε₀ ħ c³)`, written out independently of the library.
fn vacuum_rate_oracle(omega0: f64, d: f64, k: &PhysicalConstants) -> f64 {
    omega0 * omega0 * omega0 * d * d / (6.0 * PI * k.eps0 * k.hbar * k.c * k.c * k.c)
}

/// Real-cavity factor: `n (3ε/(2ε+1))²` for an isotropic dielectric.
fn glauber_oracle(eps_r: f64) -> f64 {
    eps_r.sqrt() * (3.0 * eps_r / (2.0 * eps_r + 1.0)).powi(2)
}

/// Extraordinary index at angle `theta` to the optic axis.
fn extraordinary_index(n_o: f64, n_e: f64, theta: f64) -> f64 {
    1.0 / (theta.cos().powi(2) / (n_o * n_o) + theta.sin().powi(2) / (n_e * n_e)).sqrt()
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    let axis = Unit::new_normalize(Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    Rotation3::from_axis_angle(&axis, rng.gen_range(0.0..2.0 * PI)).into_inner()
}

fn random_spd(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Matrix3<f64> {
    let r = random_rotation(rng);
    let d = Vector3::new(rng.gen_range(lo..hi), rng.gen_range(lo..hi), rng.gen_range(lo..hi));
    let m = r * Matrix3::from_diagonal(&d) * r.transpose();
    (m + m.transpose()) * 0.5
}

fn random_direction(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn c1_vacuum_rate() -> Outcome {
    let k = PhysicalConstants::default();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("thread pool");
    let atom = TwoLevelAtom::new(2.0e15, Vector3::new(0.3e-29, -0.2e-29, 0.9e-29)).expect("atom");
    let start = Instant::now();
    let r = pool.install(|| {
        let cav = CavityConfig::new(1e-3 * k.c / atom.omega0, ConstitutiveTensors::vacuum(k))?;
        decay_rate(&atom, &cav, &QuadratureSpec::default())
    });
    let elapsed = start.elapsed().as_secs_f64();
    match r {
        Ok(r) => {
            let ratio = r.gamma / vacuum_rate_oracle(atom.omega0, atom.dipole.norm(), &k);
            (
                (ratio - 1.0).abs() < VACUUM_RATE_TOL && elapsed < VACUUM_RUNTIME_S,
                format!("gamma/gamma_oracle = {ratio:.12}, runtime {elapsed:.3} s (1 thread)"),
            )
        }
        Err(e) => (false, format!("error: {e}")),
    }
}

fn c2_glauber() -> Outcome {
    let k = PhysicalConstants::default();
    let omega = 2.0e15;
    let atom = TwoLevelAtom::new(omega, Vector3::new(0.0, 0.0, 1e-29)).expect("atom");
    let g_vac = vacuum_rate_oracle(omega, 1e-29, &k);
    let mut worst = 0.0_f64;
    let mut parts = Vec::new();
    for eps_r in [1.5, 2.25, 4.0] {
        let medium = ConstitutiveTensors::isotropic(eps_r, 1.0, k);
        let cav = match CavityConfig::new(1e-3 * k.c / omega, medium) {
            Ok(c) => c,
            Err(e) => return (false, format!("error: {e}")),
        };
        match decay_rate(&atom, &cav, &QuadratureSpec::default()) {
            Ok(r) => {
                let ratio = r.gamma / g_vac;
                let dev = ratio / glauber_oracle(eps_r) - 1.0;
                worst = worst.max(dev.abs());
                parts.push(format!("eps={eps_r}: {ratio:.6} vs {:.6}", glauber_oracle(eps_r)));
            }
            Err(e) => return (false, format!("eps={eps_r}: error {e}")),
        }
    }
    (worst < GLAUBER_TOL, format!("{}; max rel dev {worst:.2e}", parts.join(", ")))
}

fn c3_uniaxial() -> Outcome {
    let k = PhysicalConstants::default();
    let (n_o, n_e) = (1.5_f64, 1.9_f64);
    let t = ConstitutiveTensors::uniaxial(n_o * n_o, n_e * n_e, k);
    let mut worst = 0.0_f64;
    for j in 0..20 {
        let theta = (j as f64 + 0.5) * PI / 20.0;
        let phi = 0.37 * j as f64;
        let qhat = Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
        let branches = match solve_branches(&qhat, &t) {
            Ok(b) => b,
            Err(e) => return (false, format!("error: {e}")),
        };
        // The ordinary wave is polarized along ẑ × q̂.
        let ord = Vector3::z().cross(&qhat).normalize();
        let mut found = None;
        for b in branches.iter().filter(|b| !b.is_longitudinal_zero_mode) {
            for x in b.x_real() {
                if x.normalize().dot(&ord).abs() < 1e-6 {
                    found = Some(b.omega);
                }
            }
        }
        let Some(v) = found else {
            return (false, format!("no extraordinary polarization at theta = {theta}"));
        };
        let n = k.c / v;
        worst = worst.max((n / extraordinary_index(n_o, n_e, theta) - 1.0).abs());
    }
    (worst < UNIAXIAL_TOL, format!("20 angles, max rel index error {worst:.2e}"))
}

fn c4_metric_onsager() -> Outcome {
    let k = PhysicalConstants::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0_f64;
    for n in 0..SAMPLES {
        let spatial = random_spd(&mut rng, 0.5, 2.0);
        let mut g = Matrix4::zeros();
        g[(0, 0)] = rng.gen_range(-2.0..-0.5);
        for i in 0..3 {
            let s = rng.gen_range(-0.2..0.2);
            g[(0, i + 1)] = s;
            g[(i + 1, 0)] = s;
            for j in 0..3 {
                g[(i + 1, j + 1)] = spatial[(i, j)];
            }
        }
        let result = SpacetimeMetric::new(g)
            .and_then(|m| metric_to_constitutive(&m, k))
            .and_then(|t| validate_onsager(&t, ONSAGER_TOL));
        match result {
            Ok(r) if r.is_ok() => {}
            Ok(r) => return (false, format!("sample {n}: {r}")),
            Err(e) => return (false, format!("sample {n}: error {e}")),
        }
        let t = metric_to_constitutive(&SpacetimeMetric::new(g).unwrap(), k).unwrap();
        worst = worst.max(((t.eps2 + t.mu1.transpose()).abs().max()) / t.eps2.abs().max().max(f64::MIN_POSITIVE));
    }
    let flat = metric_to_constitutive(&SpacetimeMetric::minkowski(), k).expect("minkowski");
    let vac = ConstitutiveTensors::vacuum(k);
    let exact = flat.eps1 == vac.eps1 && flat.mu2 == vac.mu2 && flat.eps2 == Matrix3::zeros() && flat.mu1 == Matrix3::zeros();
    (
        exact,
        format!("{SAMPLES} random metrics pass at {ONSAGER_TOL:e} (max eps2+mu1^T rel {worst:.1e}); Minkowski exact: {exact}"),
    )
}

fn c5_projectors() -> Outcome {
    let k = PhysicalConstants::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_p, mut worst_s) = (0.0_f64, 0.0_f64);
    for n in 0..SAMPLES {
        let mut t = ConstitutiveTensors::vacuum(k);
        t.eps1 = random_spd(&mut rng, 1.0, 10.0) * k.eps0;
        t.mu2 = random_spd(&mut rng, 0.5, 2.0) / k.mu0;
        let q = random_direction(&mut rng) * 10f64.powf(rng.gen_range(3.0..9.0));
        let p = match projector_pair(&q, &t.eps1) {
            Ok(p) => p,
            Err(e) => return (false, format!("sample {n}: {e}")),
        };
        worst_p = worst_p.max(p.checks(&q, &t.eps1).max());
        match mode_sum(&q, &t) {
            Ok(s) => {
                let d: CMatrix3 = s - p.p_perp.map(|x| Complex64::new(x, 0.0));
                worst_s = worst_s.max(d.iter().fold(0.0, |a, z| a.max(z.norm())));
            }
            Err(e) => return (false, format!("sample {n}: {e}")),
        }
    }
    (
        worst_p < PROJECTOR_TOL && worst_s < MODE_SUM_TOL,
        format!("{SAMPLES} samples: projector identities {worst_p:.2e}, mode sum {worst_s:.2e}"),
    )
}

fn c6_maxwell() -> Outcome {
    let k = PhysicalConstants::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0_f64;
    for n in 0..SAMPLES {
        let mut t = ConstitutiveTensors::vacuum(k);
        t.eps1 = random_spd(&mut rng, 1.0, 10.0) * k.eps0;
        t.mu2 = random_spd(&mut rng, 0.5, 2.0) / k.mu0;
        let q = random_direction(&mut rng) * 1e7;
        let wv = WaveVector::from_vector(&q).unwrap();
        let branches = match solve_branches(&q, &t) {
            Ok(b) => b,
            Err(e) => return (false, format!("sample {n}: {e}")),
        };
        for b in branches.iter().filter(|b| !b.is_longitudinal_zero_mode) {
            for lambda in 0..b.lambda_count {
                let mode = PlaneWaveMode::from_branch(b, lambda, wv, &t.eps1).unwrap();
                worst = worst.max(maxwell_residual(&mode, &t).max());
            }
        }
    }
    (worst <= MAXWELL_TOL, format!("{SAMPLES} media, max residual {worst:.2e}"))
}

fn rel_diff(a: &CMatrix3, b: &CMatrix3) -> f64 {
    let n = |m: &CMatrix3| m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    n(&(a - b)) / n(b)
}

fn c7_local_field() -> Outcome {
    let k = PhysicalConstants::default();
    let omega = 2.0e15;
    let mut notes = Vec::new();
    let mut ok = true;

    // Zero contrast.
    let aniso = {
        let mut t = ConstitutiveTensors::vacuum(k);
        t.eps1 = Matrix3::new(2.0, 0.3, 0.0, 0.3, 2.5, 0.1, 0.0, 0.1, 3.0) * k.eps0;
        t.mu2 = Matrix3::from_diagonal(&Vector3::new(0.8, 0.9, 0.7)) / k.mu0;
        t
    };
    let trivial = CavityConfig::with_hole(1e-3 * k.c / omega, aniso, aniso)
        .and_then(|c| correction_tensors(omega, &c, &QuadratureSpec::default()));
    match trivial {
        Ok(s) => {
            let exact = s.q == CMatrix3::identity();
            ok &= exact;
            notes.push(format!("zero contrast Q == I: {exact}"));
        }
        Err(e) => return (false, format!("zero contrast: {e}")),
    }

    // Refinement, anisotropic magnetodielectric in a vacuum hole.
    let cav = CavityConfig::new(1e-3 * k.c / omega, aniso).unwrap();
    let base = correction_tensors(omega, &cav, &QuadratureSpec::default());
    let fine = correction_tensors(omega, &cav, &QuadratureSpec::default().refined());
    match (base, fine) {
        (Ok(a), Ok(b)) => {
            let d = rel_diff(&a.q, &b.q);
            ok &= d < REFINEMENT_TOL;
            notes.push(format!("refinement dQ {d:.2e}, radial err {:.1e}", a.diagnostics.radial_error_a0.max(a.diagnostics.radial_error_a2)));
        }
        (Err(e), _) | (_, Err(e)) => return (false, format!("refinement: {e}")),
    }

    // Finite-shift brute force against the Plemelj limit, isotropic case.
    let iso = CavityConfig::new(1e-2 * k.c / omega, ConstitutiveTensors::isotropic(2.25, 1.0, k)).unwrap();
    // Any grid is exact for an isotropic kernel; keep the brute force cheap.
    let quad = QuadratureSpec::new(2, 4);
    let eta = 1e-4 * omega * omega * k.eps0;
    match (correction_tensors(omega, &iso, &quad), correction_tensors_regularized(omega, &iso, &quad, eta)) {
        (Ok(a), Ok(b)) => {
            let eye = CMatrix3::identity();
            let d = rel_diff(&(b.q - eye), &(a.q - eye));
            ok &= d < REGULARIZED_TOL;
            notes.push(format!("regularized vs limit (Q - I) {d:.2e}"));
        }
        (Err(e), _) | (_, Err(e)) => return (false, format!("regularized: {e}")),
    }
    (ok, notes.join("; "))
}

fn c8_wwsim() -> Outcome {
    let k = PhysicalConstants::default();
    let omega0 = 2.0e15;
    let atom = TwoLevelAtom::new(omega0, Vector3::new(0.0, 0.0, 1e-29)).unwrap();
    let counts = ModeCounts {
        frequency_bins: 2000,
        n_theta: 32,
        n_phi: 64,
    };
    let quad = QuadratureSpec::new(counts.n_theta, counts.n_phi);
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, medium) in [("vacuum", ConstitutiveTensors::vacuum(k)), ("eps=2.25", ConstitutiveTensors::isotropic(2.25, 1.0, k))] {
        let reference = match decay_rate_uncorrected(&atom, &medium, &quad) {
            Ok(r) => r.gamma,
            Err(e) => return (false, format!("{name}: {e}")),
        };
        let start = Instant::now();
        let outcome = SimulationPlan::suggest(omega0, reference, counts.frequency_bins)
            .and_then(|plan| run(&medium, &atom, &plan, counts, EvolveOptions::default()));
        let elapsed = start.elapsed().as_secs_f64();
        match outcome {
            Ok((set, traj, fit)) => {
                let dev = fit.gamma_fit / reference - 1.0;
                let pass = dev.abs() < WWSIM_TOL && traj.max_norm_drift < UNITARITY_TOL && elapsed < WWSIM_RUNTIME_S && set.modes.len() == 2000;
                ok &= pass;
                notes.push(format!(
                    "{name}: fit/decay - 1 = {dev:.2e}, drift {:.1e}, {:.2} s",
                    traj.max_norm_drift, elapsed
                ));
            }
            Err(e) => return (false, format!("{name}: {e}")),
        }
    }
    (ok, notes.join("; "))
}

fn c9_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_aniso");
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let m = |f: &str| data.join(f).display().to_string();
    let dir = tempfile::tempdir().expect("tempdir");
    let material_out = dir.path().join("metric-material.json").display().to_string();
    let commands: Vec<Vec<String>> = vec![
        vec!["dispersion".into(), "--material".into(), m("calcite.json"), "--q".into(), "1e7,2e6,-3e6".into()],
        vec!["project".into(), "--material".into(), m("magnetodielectric.json"), "--q".into(), "1,2,3".into(), "--field".into(), "1,0,0".into(), "--field-imag".into(), "0,1,0".into()],
        vec!["metric".into(), "--metric".into(), m("schwarzschild.json"), "--out".into(), material_out],
        vec!["localfield".into(), "--material".into(), m("magnetodielectric.json"), "--omega".into(), "2e15".into(), "--R".into(), "1.5e-10".into(), "--quad".into(), "16x32".into()],
        vec!["decay".into(), "--material".into(), m("calcite.json"), "--omega0".into(), "2e15".into(), "--dipole".into(), "1e-29,0,1e-29".into()],
        vec!["wwsim".into(), "--material".into(), m("glass.json"), "--omega0".into(), "2e15".into(), "--dipole".into(), "0,0,1e-29".into(), "--modes".into(), "400".into()],
    ];
    let mut names = Vec::new();
    for args in &commands {
        let run = || Command::new(bin).args(args).env("ANISO_THREADS", "4").output();
        let (a, b) = match (run(), run()) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return (false, format!("{}: could not launch binary", args[0])),
        };
        if !a.status.success() {
            return (false, format!("{}: exit {:?}: {}", args[0], a.status.code(), String::from_utf8_lossy(&a.stderr)));
        }
        if a.stdout != b.stdout || a.stdout.is_empty() {
            return (false, format!("{}: outputs differ", args[0]));
        }
        names.push(args[0].clone());
    }
    (true, format!("byte-identical JSON for {}", names.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 vacuum decay-rate oracle", c1_vacuum_rate),
        ("2 isotropic real-cavity limit", c2_glauber),
        ("3 uniaxial dispersion", c3_uniaxial),
        ("4 metric map Onsager closure", c4_metric_onsager),
        ("5 projector algebra and mode sum", c5_projectors),
        ("6 Maxwell residual of modes", c6_maxwell),
        ("7 local-field triviality and convergence", c7_local_field),
        ("8 dynamics vs golden rule", c8_wwsim),
        ("9 CLI determinism", c9_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let (pass, detail) = f();
        if !pass {
            failed += 1;
        }
        let secs = start.elapsed().as_secs_f64();
        println!("acceptance {name}: {} ({detail}) [{secs:.1} s]", if pass { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
