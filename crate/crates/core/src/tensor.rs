//! Small index-notation helpers shared by the physics modules.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

pub type CVector3 = Vector3<Complex64>;
pub type CMatrix3 = Matrix3<Complex64>;

/// Three-dimensional Levi-Civita symbol `ϵ_ijk` for indices in `0..3`.
#[inline]
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Matrix of the cross product: `cross_matrix(v) * u == v × u`.
pub fn cross_matrix(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

pub fn to_complex_vector(v: &Vector3<f64>) -> CVector3 {
    v.map(|x| Complex64::new(x, 0.0))
}

pub fn to_complex_matrix(m: &Matrix3<f64>) -> CMatrix3 {
    m.map(|x| Complex64::new(x, 0.0))
}

/// `‖v‖₂` of a complex vector.
pub fn cnorm(v: &CVector3) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entry modulus of a complex matrix.
pub fn cmax(m: &CMatrix3) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Flattened index of the triple `(a, b, c)` in `0..27`.
#[inline]
pub fn triple(a: usize, b: usize, c: usize) -> usize {
    9 * a + 3 * b + c
}

/// Eigen-decomposition of a real symmetric matrix by cyclic Jacobi
/// rotations: eigenvalues (unsorted) and orthonormal eigenvector columns.
/// Residuals `‖Av − λv‖` are at rounding level relative to `‖A‖`.
pub fn symmetric_eigen(a: &Matrix3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
    let mut a = (a + a.transpose()) * 0.5;
    let mut v = Matrix3::identity();
    let norm2 = a.norm_squared();
    if norm2 == 0.0 || !norm2.is_finite() {
        return (a.diagonal(), v);
    }
    for _ in 0..64 {
        let off = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        if off <= (f64::EPSILON * f64::EPSILON * 1e-2) * norm2 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
            let c = 1.0 / t.hypot(1.0);
            let s = t * c;
            let mut j = Matrix3::identity();
            j[(p, p)] = c;
            j[(q, q)] = c;
            j[(p, q)] = s;
            j[(q, p)] = -s;
            a = j.transpose() * a * j;
            a = (a + a.transpose()) * 0.5;
            a[(p, q)] = 0.0;
            a[(q, p)] = 0.0;
            v *= j;
        }
    }
    (a.diagonal(), v)
}
