use crate::{Error, Result};

use super::bl::BoundaryLayerConstants;
use super::cell::PermeabilityTensor;

/// Closed-form solution of the effective slip problem for the unit shear
/// channel, plus the Darcy pressure in the porous part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveSolution {
    pub epsilon: f64,
    pub c1bl: f64,
    pub cwbl: f64,
    pub k: [[f64; 2]; 2],
}

impl EffectiveSolution {
    pub fn new(epsilon: f64, c1bl: f64, cwbl: f64, k: [[f64; 2]; 2]) -> Result<Self> {
        if !(c1bl.is_finite() && cwbl.is_finite()) {
            return Err(Error::Invalid("boundary-layer constants must be finite".into()));
        }
        if !(k[1][1] > 0.0) {
            return Err(Error::Invalid(format!("K22 must be positive, got {}", k[1][1])));
        }
        if !(epsilon >= 0.0) || 1.0 - epsilon * c1bl <= 0.0 {
            return Err(Error::Invalid(format!("inadmissible epsilon {epsilon}")));
        }
        Ok(Self {
            epsilon,
            c1bl,
            cwbl,
            k,
        })
    }

    fn d(&self) -> f64 {
        1.0 - self.epsilon * self.c1bl
    }

    /// `u₁(x₂) = (1−x₂)/2 · (x₂(1−εC₁) − εC₁)/(1−εC₁)`
    pub fn u1(&self, x2: f64) -> f64 {
        let ec = self.epsilon * self.c1bl;
        0.5 * (1.0 - x2) * (x2 * (1.0 - ec) - ec) / self.d()
    }

    pub fn du1(&self, x2: f64) -> f64 {
        let ec = self.epsilon * self.c1bl;
        // d/dx of (1−x)(x(1−ec) − ec)/2 divided by (1−ec)
        0.5 * ((1.0 - ec) * (1.0 - 2.0 * x2) + ec) / self.d()
    }

    /// Shear `σ₁₂ = du₁/dx₂` at the interface.
    pub fn sigma0(&self) -> f64 {
        0.5 / self.d()
    }

    /// `∫₀¹ u₁`
    pub fn mass_flow(&self) -> f64 {
        let ec = self.epsilon * self.c1bl;
        (1.0 - 4.0 * ec) / (12.0 * self.d())
    }

    /// Free-fluid pressure.
    pub fn p_free(&self, _x2: f64) -> f64 {
        0.0
    }

    /// Darcy pressure `Cω/2 + (K₁₂/K₂₂) x₂`, truncated at O(ε).
    pub fn p_darcy(&self, x2: f64) -> f64 {
        0.5 * self.cwbl + self.k[0][1] / self.k[1][1] * x2
    }

    /// Darcy pressure with the full interface value `Cω σ(0)`.
    pub fn p_darcy_full(&self, x2: f64) -> f64 {
        self.cwbl * self.sigma0() + self.k[0][1] / self.k[1][1] * x2
    }
}

pub fn effective_solution(
    epsilon: f64,
    constants: &BoundaryLayerConstants,
    k: &PermeabilityTensor,
) -> Result<EffectiveSolution> {
    EffectiveSolution::new(epsilon, constants.c1bl, constants.cwbl, k.k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_matches_difference_quotient() {
        let e = EffectiveSolution::new(0.1, -0.27, -0.24, [[0.016, 0.003], [0.003, 0.016]]).unwrap();
        for x in [0.0, 0.3, 0.9] {
            let h = 1e-6;
            let fd = (e.u1(x + h) - e.u1(x - h)) / (2.0 * h);
            assert!((fd - e.du1(x)).abs() < 1e-8);
        }
        assert!((e.du1(0.0) - e.sigma0()).abs() < 1e-15);
    }
}
