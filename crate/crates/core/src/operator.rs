//! The normalized p-Laplacian acting on jets, its semicontinuous
//! envelopes at vanishing gradient, and the equation residual.
//!
//! On the classical branch (|Du| above the threshold tau)
//!
//!   A_p u = (1/p) tr(D^2 u) + ((p-2)/p) <D^2 u v, v>,   v = Du/|Du|.
//!
//! Where the gradient vanishes the directional term is replaced by the
//! smallest (supersolution side) or largest (subsolution side) eigenvalue
//! of the Hessian.

use nalgebra::DMatrix;

use crate::jet::Jet2;
use crate::params::PParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Classical,
    EnvelopeLower,
    EnvelopeUpper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeSide {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorValue {
    pub value: f64,
    pub branch: Branch,
}

/// Extreme eigenvalues of a symmetric matrix, ascending deterministic
/// order. The matrix is rescaled by its largest entry first: barrier
/// Hessians reach magnitudes near 1e250 where the factorization itself
/// would overflow.
fn eigen_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let scale = m.amax();
    if scale == 0.0 {
        return (0.0, 0.0);
    }
    if !scale.is_finite() {
        return (f64::NAN, f64::NAN);
    }
    let eig = (m / scale).symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    (vals[0] * scale, *vals.last().unwrap() * scale)
}

/// Envelope value (1/p) tr(D^2 u) + ((p-2)/p) lambda, with lambda the
/// smallest (lower side) or largest (upper side) eigenvalue.
pub fn eval_envelope(d2u: &DMatrix<f64>, params: &PParams, side: EnvelopeSide) -> f64 {
    let (lo, hi) = eigen_extremes(d2u);
    let lambda = match side {
        EnvelopeSide::Lower => lo,
        EnvelopeSide::Upper => hi,
    };
    params.trace_coeff() * d2u.trace() + params.dir_coeff() * lambda
}

/// Evaluate A_p on a jet, falling back to the requested envelope when the
/// gradient norm is at most tau.
pub fn eval_operator_sided(
    jet: &Jet2,
    params: &PParams,
    tau: f64,
    side: EnvelopeSide,
) -> OperatorValue {
    assert!(tau > 0.0, "vanishing-gradient threshold must be positive");
    let g = jet.grad_norm();
    if g > tau {
        let v = &jet.du / g;
        let dir = (&jet.d2u * &v).dot(&v);
        OperatorValue {
            value: params.trace_coeff() * jet.d2u.trace() + params.dir_coeff() * dir,
            branch: Branch::Classical,
        }
    } else {
        let value = eval_envelope(&jet.d2u, params, side);
        let branch = match side {
            EnvelopeSide::Lower => Branch::EnvelopeLower,
            EnvelopeSide::Upper => Branch::EnvelopeUpper,
        };
        OperatorValue { value, branch }
    }
}

/// Default orientation: lower envelope (supersolution tests).
pub fn eval_operator(jet: &Jet2, params: &PParams, tau: f64) -> OperatorValue {
    eval_operator_sided(jet, params, tau, EnvelopeSide::Lower)
}

/// Equation residual u_t - A_p u. Positive residual certifies a classical
/// supersolution at the point, negative a subsolution.
pub fn residual_sided(jet: &Jet2, params: &PParams, tau: f64, side: EnvelopeSide) -> f64 {
    jet.ut - eval_operator_sided(jet, params, tau, side).value
}

pub fn residual(jet: &Jet2, params: &PParams, tau: f64) -> f64 {
    residual_sided(jet, params, tau, EnvelopeSide::Lower)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::DEFAULT_TAU;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn jet(u: f64, ut: f64, du: Vec<f64>, d2u: Vec<Vec<f64>>) -> Jet2 {
        let n = du.len();
        let m = DMatrix::from_fn(n, n, |i, j| d2u[i][j]);
        Jet2::new(u, ut, DVector::from_vec(du), m).unwrap()
    }

    #[test]
    fn half_square_norm_quadratic() {
        // u = |x|^2/2 at x = (1, 0): du = x, d2u = I; value = (n+p-2)/p
        let q = PParams::new(2.0, 2).unwrap();
        let j = jet(0.5, 0.0, vec![1.0, 0.0], vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let out = eval_operator(&j, &q, DEFAULT_TAU);
        assert_eq!(out.branch, Branch::Classical);
        assert_relative_eq!(out.value, 1.0);
    }

    #[test]
    fn radial_square_gives_alpha() {
        // u = |x|^2: du = 2x, d2u = 2I; A_p u = alpha for every p
        for &(p, n) in &[(2.0, 1), (3.0, 2), (10.0, 3), (f64::INFINITY, 2)] {
            let q = PParams::new(p, n).unwrap();
            let x: Vec<f64> = (0..n).map(|i| if i == 0 { 0.7 } else { -0.2 }).collect();
            let du: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
            let d2u = (0..n)
                .map(|i| (0..n).map(|j| if i == j { 2.0 } else { 0.0 }).collect())
                .collect();
            let j = jet(0.0, 0.0, du, d2u);
            let out = eval_operator(&j, &q, DEFAULT_TAU);
            assert_relative_eq!(out.value, q.alpha, max_relative = 1e-12);
        }
    }

    #[test]
    fn envelope_sides_on_saddle() {
        let q = PParams::new(4.0, 2).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert_relative_eq!(eval_envelope(&m, &q, EnvelopeSide::Lower), -0.5);
        assert_relative_eq!(eval_envelope(&m, &q, EnvelopeSide::Upper), 0.5);
    }

    #[test]
    fn envelope_consistency_on_scalar_identity() {
        // d2u = c I: both envelopes and the classical value agree (= c*alpha/2)
        for &(p, n, c) in &[(3.0, 2, 0.8), (5.0, 3, -1.2), (f64::INFINITY, 2, 0.5)] {
            let q = PParams::new(p, n).unwrap();
            let m = DMatrix::from_diagonal_element(n, n, c);
            let lo = eval_envelope(&m, &q, EnvelopeSide::Lower);
            let hi = eval_envelope(&m, &q, EnvelopeSide::Upper);
            assert_relative_eq!(lo, hi, max_relative = 1e-12);
            assert_relative_eq!(lo, c * q.alpha / 2.0, max_relative = 1e-12);
            let du = DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.3 });
            let j = Jet2::new(0.0, 0.0, du, m.clone()).unwrap();
            let classical = eval_operator(&j, &q, DEFAULT_TAU);
            assert_eq!(classical.branch, Branch::Classical);
            assert_relative_eq!(classical.value, lo, max_relative = 1e-12);
        }
    }

    #[test]
    fn p2_reduces_to_half_trace() {
        let q = PParams::new(2.0, 2).unwrap();
        let j = jet(
            0.0,
            0.0,
            vec![0.3, -0.9],
            vec![vec![2.0, 0.7], vec![0.7, -1.0]],
        );
        let out = eval_operator(&j, &q, DEFAULT_TAU);
        assert_relative_eq!(out.value, 0.5 * (2.0 - 1.0), max_relative = 1e-12);
    }

    #[test]
    fn rotation_invariance_2d() {
        let q = PParams::new(7.0, 2).unwrap();
        let j = jet(
            0.0,
            0.0,
            vec![0.4, -1.1],
            vec![vec![1.5, -0.3], vec![-0.3, 0.2]],
        );
        let base = eval_operator(&j, &q, DEFAULT_TAU).value;
        for k in 1..8 {
            let th = k as f64 * 0.77;
            let r = DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
            let du = &r * &j.du;
            let d2u = &r * &j.d2u * r.transpose();
            let d2u = (&d2u + d2u.transpose()) * 0.5;
            let jr = Jet2::new(0.0, 0.0, du, d2u).unwrap();
            let rot = eval_operator(&jr, &q, DEFAULT_TAU).value;
            assert!((rot - base).abs() < 1e-10, "rotation changed value: {base} vs {rot}");
        }
    }

    #[test]
    fn residual_of_constant_field_is_zero() {
        let q = PParams::new(3.0, 2).unwrap();
        let j = jet(5.0, 0.0, vec![0.0, 0.0], vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert_eq!(residual(&j, &q, DEFAULT_TAU), 0.0);
    }

    #[test]
    fn perturbing_a_solution_by_eps_over_remaining_time_shifts_the_residual() {
        // h + eps/(T - t) adds exactly eps/(T - t)^2 to the residual:
        // eps = 0.1, T - t = 0.5 gives 0.4
        use crate::solutions::{fundamental, TimeSign};
        let q = PParams::new(3.0, 2).unwrap();
        let sol = fundamental(&q, TimeSign::Positive).unwrap();
        let (eps, cap_t) = (0.1, 1.5);
        let pt = crate::geometry::Point::new(vec![0.6, -0.4], 1.0);
        let mut tilde = sol.jet(&pt);
        tilde.u += eps / (cap_t - pt.t);
        tilde.ut += eps / (cap_t - pt.t).powi(2);
        let res = residual(&tilde, &q, DEFAULT_TAU);
        assert_relative_eq!(res, 0.4, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn degree_one_homogeneity(
            s in 0.1f64..10.0,
            gx in -2.0f64..2.0,
            gy in 0.5f64..2.0,
            a in -2.0f64..2.0,
            b in -2.0f64..2.0,
            c in -2.0f64..2.0,
            ut in -2.0f64..2.0,
        ) {
            let q = PParams::new(3.5, 2).unwrap();
            let j = jet(0.0, ut, vec![gx, gy], vec![vec![a, b], vec![b, c]]);
            let lhs = eval_operator(&j.scaled(s), &q, 1e-12).value;
            let rhs = s * eval_operator(&j, &q, 1e-12).value;
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn envelopes_bracket_the_classical_value(
            p in 2.0f64..50.0,
            gx in -2.0f64..2.0,
            gy in 0.5f64..2.0,
            a in -2.0f64..2.0,
            b in -2.0f64..2.0,
            c in -2.0f64..2.0,
        ) {
            // for p >= 2 the directional coefficient is nonnegative, so
            // lambda_min <= <A v, v> <= lambda_max brackets the operator
            let q = PParams::new(p, 2).unwrap();
            let j = jet(0.0, 0.0, vec![gx, gy], vec![vec![a, b], vec![b, c]]);
            let mid = eval_operator(&j, &q, 1e-12).value;
            let lo = eval_envelope(&j.d2u, &q, EnvelopeSide::Lower);
            let hi = eval_envelope(&j.d2u, &q, EnvelopeSide::Upper);
            prop_assert!(lo <= mid + 1e-10 && mid <= hi + 1e-10, "{lo} {mid} {hi}");
        }
    }
}
