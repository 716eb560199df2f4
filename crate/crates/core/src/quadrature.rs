//! Numerical integration building blocks.
//!
//! * Gauss–Legendre nodes on `[-1, 1]` (Newton iteration on the three-term
//!   recurrence).
//! * A product rule on the unit sphere: Gauss–Legendre in `cos θ` times the
//!   uniform (trapezoidal) rule in `φ`.
//! * Globally adaptive 21-point Gauss–Kronrod integration of vector-valued
//!   integrands on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes in ascending order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, refined by Newton.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Product quadrature on the unit sphere with total weight `4π`.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    pub n_theta: usize,
    pub n_phi: usize,
    pub directions: Vec<Vector3<f64>>,
    pub weights: Vec<f64>,
}

impl SphereGrid {
    /// Nodes are ordered with `cos θ` outermost and `φ` innermost. For even
    /// `n_phi` the node set is closed under inversion `p̂ → -p̂`.
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        assert!(n_theta >= 1 && n_phi >= 1);
        let (ct, wt) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut directions = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (c, w) in ct.iter().zip(&wt) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = (j as f64 + 0.5) * dphi;
                directions.push(Vector3::new(s * phi.cos(), s * phi.sin(), *c));
                weights.push(w * dphi);
            }
        }
        Self {
            n_theta,
            n_phi,
            directions,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Polar and azimuthal angles of node `k`.
    pub fn angles(&self, k: usize) -> (f64, f64) {
        let d = self.directions[k];
        (d.z.clamp(-1.0, 1.0).acos(), d.y.atan2(d.x).rem_euclid(2.0 * PI))
    }
}

/// Settings for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 0.0,
            rel: 1e-10,
            max_intervals: 2000,
        }
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Estimate<const N: usize> {
    pub value: [f64; N],
    /// Sum of the per-interval Kronrod-vs-Gauss differences (max-norm).
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_600_525_635,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for the odd-indexed Kronrod abscissae XGK[1], XGK[3], ...
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

struct Segment<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: f64,
}

impl<const N: usize> PartialEq for Segment<N> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<const N: usize> Eq for Segment<N> {}
impl<const N: usize> PartialOrd for Segment<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Segment<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<const N: usize, F>(f: &mut F, a: f64, b: f64) -> Segment<N>
where
    F: FnMut(f64) -> [f64; N],
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    for n in 0..N {
        k[n] = WGK[10] * fc[n];
    }
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for n in 0..N {
            let s = f1[n] + f2[n];
            k[n] += WGK[j] * s;
            if j % 2 == 1 {
                g[n] += WG[j / 2] * s;
            }
        }
    }
    let mut value = [0.0; N];
    let mut error: f64 = 0.0;
    for n in 0..N {
        value[n] = k[n] * h;
        error = error.max(((k[n] - g[n]) * h).abs());
    }
    Segment { a, b, value, error }
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// `breakpoints` (which may be empty) seed the initial partition; points
/// outside `(a, b)` are ignored. Integrable endpoint singularities are fine
/// because the rule never evaluates at interval ends.
pub fn integrate<const N: usize, F>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: Tolerance,
) -> Estimate<N>
where
    F: FnMut(f64) -> [f64; N],
{
    let mut cuts = vec![a];
    let mut inner: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > a && *x < b)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    cuts.extend(inner);
    cuts.push(b);

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            heap.push(kronrod21(&mut f, w[0], w[1]));
            evaluations += 21;
        }
    }

    let total = |heap: &BinaryHeap<Segment<N>>| {
        let mut v = [0.0; N];
        let mut e = 0.0;
        for s in heap.iter() {
            for n in 0..N {
                v[n] += s.value[n];
            }
            e += s.error;
        }
        (v, e)
    };

    let mut converged = false;
    loop {
        let (value, error) = total(&heap);
        let scale = value.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if error <= tol.abs.max(tol.rel * scale) {
            converged = true;
            break;
        }
        if heap.len() >= tol.max_intervals {
            break;
        }
        let worst = heap.pop().expect("non-empty partition");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Interval cannot be split further in floating point.
            heap.push(worst);
            break;
        }
        heap.push(kronrod21(&mut f, worst.a, mid));
        heap.push(kronrod21(&mut f, mid, worst.b));
        evaluations += 42;
    }

    // Deterministic final summation order: by interval position.
    let mut segments = heap.into_vec();
    segments.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = [0.0; N];
    let mut error = 0.0;
    for s in &segments {
        for n in 0..N {
            value[n] += s.value[n];
        }
        error += s.error;
    }
    Estimate {
        value,
        error,
        evaluations,
        converged,
    }
}

/// `π/2 − Si(x)` for large positive `x` (asymptotic auxiliary functions).
/// Accurate to roughly `1e-13` for `x ≥ 40`.
pub fn si_complement_asymptotic(x: f64) -> f64 {
    debug_assert!(x >= 20.0);
    let inv2 = 1.0 / (x * x);
    // f(x) ~ (1/x) Σ (-1)^k (2k)! / x^{2k},  g(x) ~ (1/x²) Σ (-1)^k (2k+1)! / x^{2k}
    let mut f = 0.0;
    let mut g = 0.0;
    let mut term_f = 1.0;
    let mut term_g = 1.0;
    for k in 0..8 {
        f += term_f;
        g += term_g;
        let kf = k as f64;
        term_f *= -(2.0 * kf + 1.0) * (2.0 * kf + 2.0) * inv2;
        term_g *= -(2.0 * kf + 2.0) * (2.0 * kf + 3.0) * inv2;
    }
    f /= x;
    g *= inv2;
    f * x.cos() + g * x.sin()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 16, 32, 64] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn kronrod_tables_are_consistent() {
        let sk: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        let sg: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((sk - 2.0).abs() < 1e-14);
        assert!((sg - 2.0).abs() < 1e-14);
        // A single GK21 panel is exact for degree 31.
        let est = integrate(|x| [x.powi(30), x.powi(20)], -1.0, 1.0, &[], Tolerance::default());
        assert!((est.value[0] - 2.0 / 31.0).abs() < 1e-14);
        assert!((est.value[1] - 2.0 / 21.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let est = integrate(|x| [1.0 / x.sqrt()], 0.0, 1.0, &[], Tolerance::default());
        assert!(est.converged);
        assert!((est.value[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn sphere_grid_weights_and_moments() {
        let g = SphereGrid::new(8, 16);
        let total: f64 = g.weights.iter().sum();
        assert!((total - 4.0 * PI).abs() < 1e-12);
        let zz: f64 = g.directions.iter().zip(&g.weights).map(|(d, w)| w * d.z * d.z).sum();
        let xx: f64 = g.directions.iter().zip(&g.weights).map(|(d, w)| w * d.x * d.x).sum();
        assert!((zz - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!((xx - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn si_complement_matches_quadrature() {
        let x = 60.0;
        // π/2 − Si(x) = ∫_x^∞ sin t / t dt, evaluated through ∫_0^x.
        let est = integrate(
            |t| [if t == 0.0 { 1.0 } else { t.sin() / t }],
            0.0,
            x,
            &(1..20).map(|k| k as f64 * PI).collect::<Vec<_>>(),
            Tolerance { abs: 0.0, rel: 1e-14, max_intervals: 5000 },
        );
        let reference = PI / 2.0 - est.value[0];
        assert!((si_complement_asymptotic(x) - reference).abs() < 1e-12);
    }
}
