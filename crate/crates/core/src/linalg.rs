//! Small fixed-size helpers for the 2×2 complex matrices that carry the
//! `(a, a†)` structure throughout the crate.

use nalgebra::Matrix2;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A real number as a complex scalar (nalgebra's complex matrices only
/// scale by their own element type).
#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// The commutator metric `Z = diag(1, -1)` of the `(a, a†)` basis.
#[inline]
pub fn z() -> Mat2 {
    Mat2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
}

/// `σx`, which swaps `a ↔ a†`.
#[inline]
pub fn sigma_x() -> Mat2 {
    Mat2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
}

/// `Z·M` without a full multiplication (negates the second row).
#[inline]
pub fn z_left(m: &Mat2) -> Mat2 {
    Mat2::new(m[(0, 0)], m[(0, 1)], -m[(1, 0)], -m[(1, 1)])
}

/// `M·Z` without a full multiplication (negates the second column).
#[inline]
pub fn z_right(m: &Mat2) -> Mat2 {
    Mat2::new(m[(0, 0)], -m[(0, 1)], m[(1, 0)], -m[(1, 1)])
}

/// Largest entry modulus.
#[inline]
pub fn max_abs(m: &Mat2) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.norm()))
}

/// Singular values `(σ_max, σ_min)` of a 2×2 complex matrix in closed form.
pub fn singular_values(m: &Mat2) -> (f64, f64) {
    let fro2: f64 = m.iter().map(|x| x.norm_sqr()).sum();
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).norm();
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    let s_max2 = 0.5 * (fro2 + disc);
    let s_max = s_max2.sqrt();
    // σ_min from the determinant avoids the cancellation in (fro2 - disc).
    let s_min = if s_max > 0.0 { det / s_max } else { 0.0 };
    (s_max, s_min)
}

/// Inverse of a 2×2 matrix together with its 2-norm condition number.
pub fn inverse_with_condition(m: &Mat2) -> Option<(Mat2, f64)> {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    if det.norm() == 0.0 || !det.is_finite() {
        return None;
    }
    let inv = Mat2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det;
    let (s_max, s_min) = singular_values(m);
    let cond = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    Some((inv, cond))
}

/// Mirror of a matrix under the `a ↔ a†` exchange: `σx M* σx`.
#[inline]
pub fn bar(m: &Mat2) -> Mat2 {
    Mat2::new(m[(1, 1)].conj(), m[(1, 0)].conj(), m[(0, 1)].conj(), m[(0, 0)].conj())
}

pub fn is_finite(m: &Mat2) -> bool {
    m.iter().all(|x| x.is_finite())
}
