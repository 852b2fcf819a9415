//! Point-dipole magnetostatics.
//!
//! The target is modeled as a single magnetic dipole with moment `M` (A·m²).
//! For a sensor displaced from the target by `d` (meters, sensor position
//! minus target position, r = ‖d‖ > 0) the flux density is
//!
//! ```text
//! B(d) = μ₀/(4π r⁵) · (3 d dᵀ − r² I₃) · M        [tesla]
//! ```
//!
//! along with its spatial Jacobian, its norm, and the gradient of the norm —
//! the four kernels everything else (measurement models, Fisher information)
//! is built from.

use nalgebra::{Matrix3, RowVector3, Vector3};

use crate::{Error, Result};

/// μ₀/4π in T·m/A. Seawater's relative permeability differs from vacuum by
/// less than 1e-5, far below sensor noise, so the vacuum value is used.
pub const MU0_OVER_FOUR_PI: f64 = 1e-7;

fn distance(displacement: &Vector3<f64>) -> Result<f64> {
    let r = displacement.norm();
    if r == 0.0 {
        return Err(Error::DegenerateGeometry);
    }
    Ok(r)
}

/// Dipole flux density at displacement `d` (tesla). Falls off as r⁻³.
pub fn field(displacement: &Vector3<f64>, moment: &Vector3<f64>) -> Result<Vector3<f64>> {
    let r = distance(displacement)?;
    let r2 = r * r;
    let m_dot_d = moment.dot(displacement);
    let b = (displacement * (3.0 * m_dot_d) - moment * r2) * (MU0_OVER_FOUR_PI / (r2 * r2 * r));
    Ok(b)
}

/// Jacobian of the field with respect to the displacement (T/m):
///
/// ```text
/// J = μ₀/(4π) · 3/r⁷ · (r²(M·d)I₃ + r² d Mᵀ + r² M dᵀ − 5(M·d) d dᵀ)
/// ```
///
/// Symmetric, falls off as r⁻⁴, and has rank 3 for generic d ≠ 0, M ≠ 0.
pub fn jacobian(displacement: &Vector3<f64>, moment: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let r = distance(displacement)?;
    let r2 = r * r;
    let m_dot_d = moment.dot(displacement);
    let scale = MU0_OVER_FOUR_PI * 3.0 / (r2 * r2 * r2 * r);
    let dm = displacement * moment.transpose();
    let j = (Matrix3::identity() * (r2 * m_dot_d) + (dm + dm.transpose()) * r2
        - displacement * displacement.transpose() * (5.0 * m_dot_d))
        * scale;
    Ok(j)
}

/// Euclidean norm of the dipole field (tesla).
pub fn field_norm(displacement: &Vector3<f64>, moment: &Vector3<f64>) -> Result<f64> {
    Ok(field(displacement, moment)?.norm())
}

/// Gradient of the field norm with respect to the displacement (row, T/m):
/// ∇‖B‖ = Bᵀ J / ‖B‖.
///
/// Undefined where the field vanishes (`ZeroField`); for a dipole that only
/// happens at M = 0, and the Fisher-information layer maps it to a zero
/// information contribution.
pub fn norm_gradient(
    displacement: &Vector3<f64>,
    moment: &Vector3<f64>,
) -> Result<RowVector3<f64>> {
    let b = field(displacement, moment)?;
    let norm = b.norm();
    if norm == 0.0 {
        return Err(Error::ZeroField);
    }
    let j = jacobian(displacement, moment)?;
    Ok(b.transpose() * j / norm)
}
