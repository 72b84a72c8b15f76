//! Closed-form radially symmetric solutions on balls, used as reference solutions.
//!
//! On a ball of radius R in n dimensions the equation integrates once to
//! u_ρ/√(1+u_ρ²) = Hρ/n, giving
//!   u(ρ) = A + (n/H)(1 − √(1 − H²ρ²/n²)),
//! valid for ρ < n/H. At t = 0 the equation is Δv = H with v = A + Hρ²/(2n).

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialSolution {
    pub n_dim: usize,
    pub mean_curvature: f64,
    /// Value at the center.
    pub center_value: f64,
}

impl RadialSolution {
    /// Mean curvature solution with u(0) = `center_value`.
    pub fn new(n_dim: usize, mean_curvature: f64, center_value: f64) -> Self {
        Self {
            n_dim,
            mean_curvature,
            center_value,
        }
    }

    /// Solution on the ball of radius `radius` satisfying u_ρ + αu = 0 on the boundary.
    pub fn robin(n_dim: usize, mean_curvature: f64, alpha: f64, radius: f64) -> Result<Self> {
        let probe = Self::new(n_dim, mean_curvature, 0.0);
        let slope = probe.derivative(radius)?;
        let rise = probe.value(radius)?;
        Ok(Self::new(n_dim, mean_curvature, -(slope / alpha + rise)))
    }

    /// Largest radius on which the solution exists.
    pub fn max_radius(&self) -> f64 {
        self.n_dim as f64 / self.mean_curvature
    }

    pub fn value(&self, rho: f64) -> Result<f64> {
        let n = self.n_dim as f64;
        let h = self.mean_curvature;
        let s = h * rho / n;
        if s.abs() >= 1.0 {
            return Err(Error::OutOfDomain { x: rho, y: 0.0 });
        }
        Ok(self.center_value + (n / h) * (1.0 - (1.0 - s * s).sqrt()))
    }

    pub fn derivative(&self, rho: f64) -> Result<f64> {
        let s = self.mean_curvature * rho / self.n_dim as f64;
        if s.abs() >= 1.0 {
            return Err(Error::OutOfDomain { x: rho, y: 0.0 });
        }
        Ok(s / (1.0 - s * s).sqrt())
    }

    /// Hessian entry u_ρρ at the center, H/n in every direction.
    pub fn center_curvature(&self) -> f64 {
        self.mean_curvature / self.n_dim as f64
    }
}

/// Radial solution of Δv = H on the ball of radius R with v_ρ + αv = 0 on the boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialPoisson {
    pub n_dim: usize,
    pub mean_curvature: f64,
    pub center_value: f64,
}

impl RadialPoisson {
    pub fn robin(n_dim: usize, mean_curvature: f64, alpha: f64, radius: f64) -> Self {
        let n = n_dim as f64;
        let slope = mean_curvature * radius / n;
        let rise = mean_curvature * radius * radius / (2.0 * n);
        Self {
            n_dim,
            mean_curvature,
            center_value: -(slope / alpha + rise),
        }
    }

    pub fn value(&self, rho: f64) -> f64 {
        self.center_value + self.mean_curvature * rho * rho / (2.0 * self.n_dim as f64)
    }
}
