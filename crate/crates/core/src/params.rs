//! Equation parameters for u_t = (1/p)|Du|^{2-p} Delta_p u.
//!
//! The constants alpha = 2(p+n-2)/p and beta = 4(p-1)/p govern the
//! self-similar solution t^{-alpha/beta} exp(-|x|^2/(beta t)) and every
//! barrier construction built on it. At p = inf they take the limit
//! values alpha = 2, beta = 4. The exponent nu = (p-n)/(p-1) drives the
//! radial change of variables and degenerates at p = n.

use crate::error::{Error, Result};

/// Default vanishing-gradient threshold for analytic jets. Discrete jets
/// should use the grid spacing h instead.
pub const DEFAULT_TAU: f64 = 1e-8;

/// Parameters of the normalized p-parabolic equation in dimension n.
///
/// `p` is stored as an f64 and may be `f64::INFINITY` for the limit
/// equation u_t = normalized infinity-Laplacian of u.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PParams {
    p: f64,
    n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub nu: Option<f64>,
}

impl PParams {
    /// Build parameters, rejecting p <= 1 and n = 0.
    pub fn new(p: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(n));
        }
        if p.is_nan() || p <= 1.0 {
            return Err(Error::InvalidP(p));
        }
        let (alpha, beta) = if p.is_infinite() {
            (2.0, 4.0)
        } else {
            (2.0 * (p + n as f64 - 2.0) / p, 4.0 * (p - 1.0) / p)
        };
        let nu = if p.is_infinite() || p == n as f64 {
            None
        } else {
            Some((p - n as f64) / (p - 1.0))
        };
        Ok(PParams { p, n, alpha, beta, nu })
    }

    /// The limit equation u_t = Delta_inf^N u.
    pub fn infinite(n: usize) -> Result<Self> {
        Self::new(f64::INFINITY, n)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_infinite(&self) -> bool {
        self.p.is_infinite()
    }

    /// Coefficient of tr(D^2 u): 1/p, zero in the limit p = inf.
    pub fn trace_coeff(&self) -> f64 {
        if self.p.is_infinite() {
            0.0
        } else {
            1.0 / self.p
        }
    }

    /// Coefficient of the gradient-direction second derivative: (p-2)/p,
    /// one in the limit p = inf.
    pub fn dir_coeff(&self) -> f64 {
        if self.p.is_infinite() {
            1.0
        } else {
            (self.p - 2.0) / self.p
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constants_p2_n1() {
        let q = PParams::new(2.0, 1).unwrap();
        assert_relative_eq!(q.alpha, 1.0);
        assert_relative_eq!(q.beta, 2.0);
        assert_relative_eq!(q.nu.unwrap(), 1.0);
    }

    #[test]
    fn nu_absent_at_p_equal_n() {
        let q = PParams::new(3.0, 3).unwrap();
        assert_relative_eq!(q.alpha, 8.0 / 3.0);
        assert_relative_eq!(q.beta, 8.0 / 3.0);
        assert!(q.nu.is_none());
    }

    #[test]
    fn infinite_limit_constants() {
        let q = PParams::infinite(5).unwrap();
        assert_eq!(q.alpha, 2.0);
        assert_eq!(q.beta, 4.0);
        assert!(q.nu.is_none());
        assert_eq!(q.trace_coeff(), 0.0);
        assert_eq!(q.dir_coeff(), 1.0);
    }

    #[test]
    fn limit_approached_by_large_p() {
        let q = PParams::new(1e6, 1).unwrap();
        assert!((q.alpha - 2.0).abs() < 1e-5);
        assert!((q.beta - 4.0).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(PParams::new(1.0, 1).is_err());
        assert!(PParams::new(0.5, 1).is_err());
        assert!(PParams::new(f64::NAN, 1).is_err());
        assert!(PParams::new(2.0, 0).is_err());
    }

    #[test]
    fn invariant_ranges() {
        for &(p, n) in &[(1.5, 1), (2.0, 2), (3.0, 3), (10.0, 4), (1e6, 2)] {
            let q = PParams::new(p, n).unwrap();
            assert!(q.alpha > 0.0);
            assert!(q.beta > 0.0 && q.beta <= 4.0);
            if let Some(nu) = q.nu {
                assert_relative_eq!(nu, (p - n as f64) / (p - 1.0));
            }
        }
    }
}
