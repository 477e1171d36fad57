//! Second-order space-time jets and the finite-difference jet oracle.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Value, time derivative, spatial gradient and spatial Hessian of a
/// scalar field at one space-time point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub u: f64,
    pub ut: f64,
    pub du: DVector<f64>,
    pub d2u: DMatrix<f64>,
}

impl Jet2 {
    /// Build a jet, checking the Hessian is symmetric to 1e-12 per entry.
    pub fn new(u: f64, ut: f64, du: DVector<f64>, d2u: DMatrix<f64>) -> Result<Self> {
        let n = du.len();
        if d2u.nrows() != n || d2u.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "hessian is {}x{} but gradient has length {}",
                d2u.nrows(),
                d2u.ncols(),
                n
            )));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if (d2u[(i, j)] - d2u[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "hessian asymmetric at ({i},{j}): {} vs {}",
                        d2u[(i, j)],
                        d2u[(j, i)]
                    )));
                }
            }
        }
        Ok(Jet2 { u, ut, du, d2u })
    }

    pub fn dim(&self) -> usize {
        self.du.len()
    }

    pub fn grad_norm(&self) -> f64 {
        self.du.norm()
    }

    /// Scale every component by s (the operator is degree-1 homogeneous).
    pub fn scaled(&self, s: f64) -> Jet2 {
        Jet2 {
            u: s * self.u,
            ut: s * self.ut,
            du: &self.du * s,
            d2u: &self.d2u * s,
        }
    }
}

/// Central second-order finite differences for the full jet. Mixed
/// Hessian entries come from the four-point cross stencil; the result is
/// symmetrized by averaging.
pub fn numeric_jet<F>(field: F, point: &Point, h: f64) -> Result<Jet2>
where
    F: Fn(&Point) -> f64,
{
    assert!(h > 0.0, "stencil width must be positive");
    let n = point.dim();
    let eval = |x: &[f64], t: f64| -> Result<f64> {
        let v = field(&Point::new(x.to_vec(), t));
        if !v.is_finite() {
            return Err(Error::NonFiniteField(format!("x={x:?}, t={t}")));
        }
        Ok(v)
    };

    let x0 = &point.x;
    let t0 = point.t;
    let u = eval(x0, t0)?;
    let ut = (eval(x0, t0 + h)? - eval(x0, t0 - h)?) / (2.0 * h);

    let mut du = DVector::zeros(n);
    let mut d2u = DMatrix::zeros(n, n);
    let mut xp = x0.clone();
    for i in 0..n {
        xp[i] = x0[i] + h;
        let fp = eval(&xp, t0)?;
        xp[i] = x0[i] - h;
        let fm = eval(&xp, t0)?;
        xp[i] = x0[i];
        du[i] = (fp - fm) / (2.0 * h);
        d2u[(i, i)] = (fp - 2.0 * u + fm) / (h * h);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let mut xs = x0.clone();
            xs[i] = x0[i] + h;
            xs[j] = x0[j] + h;
            let fpp = eval(&xs, t0)?;
            xs[j] = x0[j] - h;
            let fpm = eval(&xs, t0)?;
            xs[i] = x0[i] - h;
            let fmm = eval(&xs, t0)?;
            xs[j] = x0[j] + h;
            let fmp = eval(&xs, t0)?;
            let mixed = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            d2u[(i, j)] = mixed;
            d2u[(j, i)] = mixed;
        }
    }
    Ok(Jet2 { u, ut, du, d2u })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_on_affine_fields() {
        let a = [2.0, -3.0];
        let b = 0.7;
        let field = |p: &Point| a[0] * p.x[0] + a[1] * p.x[1] - b * p.t;
        let jet = numeric_jet(field, &Point::new(vec![0.3, -0.2], 1.1), 0.1).unwrap();
        assert_relative_eq!(jet.du[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(jet.du[1], -3.0, max_relative = 1e-12);
        assert_relative_eq!(jet.ut, -0.7, max_relative = 1e-12);
        assert!(jet.d2u.amax() < 1e-12);
    }

    #[test]
    fn exact_on_quadratics() {
        let field = |p: &Point| p.x.iter().map(|v| v * v).sum::<f64>();
        let jet = numeric_jet(field, &Point::new(vec![0.5, 1.5], 0.0), 0.25).unwrap();
        assert_relative_eq!(jet.d2u[(0, 0)], 2.0, max_relative = 1e-10);
        assert_relative_eq!(jet.d2u[(1, 1)], 2.0, max_relative = 1e-10);
        assert!(jet.d2u[(0, 1)].abs() < 1e-10);
    }

    #[test]
    fn second_order_convergence_on_smooth_field() {
        // error(h/2)/error(h) should sit near 1/4 for a smooth field
        let field = |p: &Point| (p.x[0] * 1.3).sin() * (-p.t * 0.7).exp();
        let pt = Point::new(vec![0.4], 0.8);
        let exact_ut = -0.7 * (0.4f64 * 1.3).sin() * (-0.8f64 * 0.7).exp();
        let err = |h: f64| {
            let j = numeric_jet(field, &pt, h).unwrap();
            (j.ut - exact_ut).abs()
        };
        let ratio = err(1e-3) / err(5e-4);
        assert!(
            (3.5..=4.5).contains(&ratio),
            "convergence ratio {ratio} outside [3.5, 4.5]"
        );
    }

    #[test]
    fn signals_non_finite_values() {
        let field = |p: &Point| 1.0 / p.x[0];
        let res = numeric_jet(field, &Point::new(vec![0.1], 0.0), 0.1);
        assert!(res.is_err());
    }

    #[test]
    fn rejects_asymmetric_hessian() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = 1.0;
        assert!(Jet2::new(0.0, 0.0, DVector::zeros(2), m).is_err());
    }
}
