//! Parameter types shared by every module.

use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};

/// Ambient market constants: order flow, book depth, volatility and the time grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarketParams {
    /// `A`: market orders per unit time at zero premium.
    pub order_flow_scale: f64,
    /// `k`: exponential decay of fill intensity per price unit of premium.
    pub book_decay: f64,
    /// `sigma`: price units per sqrt(unit time).
    pub volatility: f64,
    /// `T`: trading horizon.
    pub horizon: f64,
    /// `dt`: simulation step.
    pub step: f64,
}

impl Default for MarketParams {
    fn default() -> Self {
        Self {
            order_flow_scale: 140.0,
            book_decay: 1.5,
            volatility: 2.0,
            horizon: 1.0,
            step: 0.005,
        }
    }
}

impl MarketParams {
    /// Checks the invariants and returns the number of steps `N = T / dt`.
    ///
    /// `A = 0` and `sigma = 0` are accepted so that degenerate markets (no
    /// fills, no noise) can be simulated.
    pub fn validate(&self) -> Result<usize> {
        require_non_negative("order_flow_scale", self.order_flow_scale)?;
        require_positive("book_decay", self.book_decay)?;
        require_non_negative("volatility", self.volatility)?;
        require_positive("horizon", self.horizon)?;
        require_positive("step", self.step)?;
        if self.step > self.horizon {
            return Err(Error::InvalidParameter {
                name: "step",
                reason: format!("step {} exceeds horizon {}", self.step, self.horizon),
            });
        }
        let ratio = self.horizon / self.step;
        let steps = ratio.round();
        if steps < 1.0 || (steps * self.step - self.horizon).abs() > 1e-12 * self.horizon {
            return Err(Error::GridMismatch {
                horizon: self.horizon,
                step: self.step,
                steps: ratio,
            });
        }
        Ok(steps as usize)
    }

    /// Number of steps; panics on an invalid grid, call [`validate`](Self::validate) first.
    pub fn steps(&self) -> usize {
        self.validate().expect("invalid market grid")
    }

    /// Time of grid point `n`.
    #[inline]
    pub fn time_at(&self, n: usize) -> f64 {
        n as f64 * self.step
    }
}

/// Performativity speed `xi = epsilon - 1 > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Xi(f64);

impl Xi {
    pub fn new(value: f64) -> Result<Self> {
        require_positive("xi", value).map(Self)
    }

    /// Builds from the raw performative sensitivity `epsilon` of the general process.
    pub fn from_sensitivity(epsilon: f64) -> Result<Self> {
        Self::new(epsilon - 1.0)
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Xi {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Xi> for f64 {
    fn from(x: Xi) -> f64 {
        x.0
    }
}

/// Exponential-utility risk aversion `gamma > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Gamma(f64);

impl Gamma {
    pub fn new(value: f64) -> Result<Self> {
        require_positive("gamma", value).map(Self)
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Gamma {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Gamma> for f64 {
    fn from(g: Gamma) -> f64 {
        g.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_200_steps() {
        assert_eq!(MarketParams::default().validate().unwrap(), 200);
    }

    #[test]
    fn rejects_non_integer_grid() {
        let p = MarketParams {
            step: 0.003,
            ..MarketParams::default()
        };
        assert!(matches!(p.validate(), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn rejects_step_longer_than_horizon() {
        let p = MarketParams {
            step: 2.0,
            ..MarketParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn xi_and_gamma_must_be_positive() {
        assert!(Xi::new(0.0).is_err());
        assert!(Xi::new(-1.0).is_err());
        assert!(Gamma::new(f64::NAN).is_err());
        assert_eq!(Xi::from_sensitivity(6.0).unwrap().get(), 5.0);
        assert!(Xi::from_sensitivity(1.0).is_err());
    }
}
