//! Feedback-stabilised inverted pendulum used as the reference experiment.
//!
//! `ẋ₁ = x₂`, `ẋ₂ = (g/L) sin x₁ + k₁ x₁ + k₂ x₂`, with additive noise `σ dW`
//! on the velocity only.

use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::SystemModel;
use crate::interval::Interval;
use crate::reach::InclusionFunction;
use crate::setcalc::{IntervalBox, WeightedNorm};
use crate::{Matrix, Vector};

pub const G_OVER_L: f64 = 10.0;
pub const K1: f64 = -20.0;
pub const K2: f64 = -20.0;
pub const SIGMA: f64 = 0.1;

/// Reference contraction rate achieved by [`reference_p`] on [`hull`].
pub const REFERENCE_C_P: f64 = -0.5;

/// Closed-loop model with its analytic Jacobian.
pub fn system() -> SystemModel {
    SystemModel::new(2, 0, 2, |_, x, _| Vector::from_column_slice(&[x[1], drift2(x[0], x[1])]))
        .with_constant_diffusion(diffusion())
        .expect("2x2 diffusion")
        .with_state_jacobian(|_, x, _| jacobian(x[0]))
}

fn drift2(x1: f64, x2: f64) -> f64 {
    G_OVER_L * x1.sin() + K1 * x1 + K2 * x2
}

pub fn jacobian(x1: f64) -> Matrix {
    Matrix::from_row_slice(2, 2, &[0.0, 1.0, G_OVER_L * x1.cos() + K1, K2])
}

/// `[0 0; 0 σ]`, so that `σσᵀ` only excites the velocity.
pub fn diffusion() -> Matrix {
    Matrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, SIGMA])
}

/// Single noise column `(0, σ)ᵀ`.
pub fn diffusion_column() -> Matrix {
    Matrix::from_column_slice(2, 1, &[0.0, SIGMA])
}

/// Jacobians at `cos x₁ = ±1`: every `D_x f(x)` is a convex combination of these.
pub fn hull() -> Vec<Matrix> {
    vec![jacobian(0.0), jacobian(core::f64::consts::PI)]
}

/// Two-decimal certificate matrix that achieves [`REFERENCE_C_P`] on [`hull`].
pub fn reference_p() -> Matrix {
    Matrix::from_row_slice(2, 2, &[35.68, 2.21, 2.21, 1.27])
}

pub fn reference_norm() -> WeightedNorm {
    WeightedNorm::new(reference_p()).expect("reference P is SPD")
}

/// Coordinate change used with the interval method.
pub fn transform() -> Matrix {
    Matrix::from_row_slice(2, 2, &[1.0, 0.2, 1.0, 0.0])
}

/// Initial state box `|x₁| ≤ π/10`, `|x₂| ≤ 0.2`.
pub fn initial_box() -> IntervalBox {
    IntervalBox::symmetric(&[core::f64::consts::PI / 10.0, 0.2]).expect("valid")
}

/// Corner `(π/10, 0.2)` of [`initial_box`].
pub fn initial_corner() -> Vector {
    Vector::from_column_slice(&[core::f64::consts::PI / 10.0, 0.2])
}

/// Box `Y̅₀ = ±(π/10)(1.04, 1)` in transformed coordinates.
pub fn transformed_box() -> IntervalBox {
    let r = core::f64::consts::PI / 10.0;
    IntervalBox::symmetric(&[1.04 * r, r]).expect("valid")
}

/// Face-pinned natural interval extension of the drift.
pub fn natural_inclusion() -> InclusionFunction {
    InclusionFunction::natural(2, 0, |_, x: &[Interval], _| {
        vec![x[1], x[0].sin().scale(G_OVER_L) + x[0].scale(K1) + x[1].scale(K2)]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{compute_dp, verify_certificate, VertexHull};
    use crate::dynamics::{integrate_ode, InputSignal};
    use crate::reach::{monotone_check, transform_system};

    #[test]
    fn jacobian_at_origin() {
        let sys = system();
        let j = sys.state_jacobian(0.0, &Vector::zeros(2), &Vector::zeros(0)).unwrap();
        assert_eq!(j, Matrix::from_row_slice(2, 2, &[0.0, 1.0, -10.0, -20.0]));
        let fd = crate::dynamics::jacobian_fd(&system(), 0.0, &initial_corner(), &Vector::zeros(0)).unwrap();
        assert!((fd - jacobian(initial_corner()[0])).amax() < 1e-6);
    }

    #[test]
    fn closed_loop_converges() {
        let x0 = Vector::from_column_slice(&[core::f64::consts::PI / 10.0, 0.0]);
        let tr = integrate_ode(&system(), &x0, &InputSignal::none(), 4.0, 1e-3).unwrap();
        assert!(tr.last().unwrap().norm() < x0.norm());
    }

    #[test]
    fn reference_certificate() {
        let h = VertexHull::new(hull()).unwrap();
        let rep = verify_certificate(&h, &reference_norm(), REFERENCE_C_P, 0.05);
        assert!(rep.passed);
        let dp = compute_dp(&diffusion_column(), &reference_norm()).unwrap();
        assert!((dp - 0.0127).abs() < 1e-3);
    }

    #[test]
    fn transformed_model_is_cooperative_on_y0() {
        let ts = transform_system(&transform(), &system()).unwrap();
        let rep = monotone_check(&ts, &transformed_box(), None, 10_000).unwrap();
        assert!(rep.passed, "{rep:?}");
    }
}
