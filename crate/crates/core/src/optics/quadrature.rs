//! Composite Gauss–Legendre rule in `cos θ` for integrals over the unit
//! sphere of azimuthally symmetric functions.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::Serialize;

use super::OpticsError;

pub const DEFAULT_ORDER: usize = 64;

/// `order` Gauss–Legendre nodes on each of `panels` equal slices of
/// `cos θ ∈ [−1, 1]`; the azimuth contributes a factor 2π.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Quadrature {
    pub order: usize,
    pub panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            order: DEFAULT_ORDER,
            panels: 1,
        }
    }
}

/// One node of the sphere rule: polar angle and solid-angle weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereNode {
    pub cos_theta: f64,
    pub weight: f64,
    pub panel: usize,
}

impl Quadrature {
    pub fn new(order: usize, panels: usize) -> Result<Self, OpticsError> {
        let q = Self { order, panels };
        q.validate()?;
        Ok(q)
    }

    pub fn with_order(order: usize) -> Result<Self, OpticsError> {
        Self::new(order, 1)
    }

    pub fn validate(&self) -> Result<(), OpticsError> {
        if self.order < 2 {
            return Err(OpticsError::Quadrature(format!(
                "order {} must be at least 2",
                self.order
            )));
        }
        if self.panels == 0 {
            return Err(OpticsError::Quadrature("panels must be at least 1".into()));
        }
        Ok(())
    }

    /// Nodes ordered by panel, forward panel (`cos θ` near 1) first.
    pub fn nodes(&self) -> Result<Vec<SphereNode>, OpticsError> {
        self.validate()?;
        let rule = GaussLegendre::new(NonZeroUsize::new(self.order).expect("order >= 2"));
        let width = 2.0 / self.panels as f64;
        let mut out = Vec::with_capacity(self.order * self.panels);
        for p in 0..self.panels {
            let hi = 1.0 - p as f64 * width;
            let lo = hi - width;
            let (mid, half) = (0.5 * (hi + lo), 0.5 * (hi - lo));
            for (x, w) in rule.nodes().zip(rule.weights()) {
                out.push(SphereNode {
                    cos_theta: mid + half * x,
                    weight: std::f64::consts::TAU * half * w,
                    panel: p,
                });
            }
        }
        Ok(out)
    }

    /// `∫ dΩ f(cos θ)` split per panel.
    pub fn panel_integrals<F>(&self, mut f: F) -> Result<Vec<f64>, OpticsError>
    where
        F: FnMut(f64) -> Result<f64, OpticsError>,
    {
        let mut sums = vec![0.0; self.panels];
        for node in self.nodes()? {
            sums[node.panel] += node.weight * f(node.cos_theta)?;
        }
        Ok(sums)
    }

    /// `∫ dΩ f(cos θ)`
    pub fn integrate<F>(&self, f: F) -> Result<f64, OpticsError>
    where
        F: FnMut(f64) -> Result<f64, OpticsError>,
    {
        Ok(self.panel_integrals(f)?.iter().sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn weights_cover_the_sphere() {
        for (order, panels) in [(2, 1), (7, 3), (64, 1), (32, 8)] {
            let q = Quadrature::new(order, panels).unwrap();
            let total: f64 = q.nodes().unwrap().iter().map(|n| n.weight).sum();
            assert!((total - 4.0 * PI).abs() < 1e-12, "{order}x{panels}");
        }
    }

    #[test]
    fn polynomial_in_cos_theta_is_exact() {
        // ∫ dΩ cos²θ = 4π/3
        let q = Quadrature::with_order(4).unwrap();
        let v = q.integrate(|mu| Ok(mu * mu)).unwrap();
        assert!((v - 4.0 * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn panels_partition_the_integral() {
        let q = Quadrature::new(8, 5).unwrap();
        let parts = q.panel_integrals(|mu| Ok((3.0 * mu).exp())).unwrap();
        assert_eq!(parts.len(), 5);
        // ∫ dΩ e^{3μ} = 2π (e³ − e⁻³)/3
        let exact = 2.0 * PI * (3f64.exp() - (-3f64).exp()) / 3.0;
        assert!((parts.iter().sum::<f64>() - exact).abs() < 1e-10 * exact);
        assert!(parts.windows(2).all(|w| w[0] > w[1]), "forward panel first");
    }

    #[test]
    fn rejects_low_order() {
        assert!(Quadrature::with_order(1).is_err());
        assert!(Quadrature::new(4, 0).is_err());
    }
}
