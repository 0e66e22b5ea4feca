//! Performative mid-price dynamics.
//!
//! The mid-price follows `ds = (r(t) - epsilon s) dt + sigma dW`. With the
//! prevailing quotes centred on `r = s + g(t)` this becomes a mean-reverting
//! process `ds = (g(t) - xi s) dt + sigma dW` with `xi = epsilon - 1`. When the
//! prevailing strategy is the inventory model, `g(u) = -gamma sigma^2 q (T - u)`.
//!
//! Everything here is a pure function of explicit state and an explicit noise
//! draw; the closed loop that feeds inventory back into the drift is driven by
//! an [`InventoryDriver`].

use serde::Serialize;

use crate::error::{require_positive, Result};
use crate::params::MarketParams;

/// Inventory-model drift adjustment `g = -gamma sigma^2 q tau`.
#[inline]
pub fn as_impact(gamma: f64, sigma: f64, q: f64, tau: f64) -> f64 {
    -gamma * sigma * sigma * q * tau
}

/// `(1 - e^{-xi tau}) / xi`, the integral of `e^{-xi v}` over `[0, tau]`.
#[inline]
pub fn decay_integral(xi: f64, tau: f64) -> f64 {
    -(-xi * tau).exp_m1() / xi
}

/// `Delta_xi(tau) = (1 / xi^2) [1 - e^{-xi tau} (1 + xi tau)]`, the integral of
/// `v e^{-xi v}` over `[0, tau]`. Weights the driver inventory's pull on the
/// terminal price.
pub fn delta_xi(xi: f64, tau: f64) -> f64 {
    let x = xi * tau;
    if x < 0.1 {
        // 1 - e^{-x}(1+x) cancels badly for small x; sum
        // tau^2 * sum_{m>=2} (-1)^m (m-1) x^{m-2} / m! instead.
        let mut term = 0.5; // (m-1)/m! at m = 2
        let mut sum = 0.0;
        let mut power = 1.0;
        for m in 2..20u32 {
            let mf = f64::from(m);
            if m > 2 {
                term *= mf - 1.0;
                term /= (mf - 2.0) * mf;
            }
            let signed = if m % 2 == 0 { term } else { -term };
            sum += signed * power;
            power *= x;
        }
        tau * tau * sum
    } else {
        let value = (1.0 - (-x).exp() * (1.0 + x)) / (xi * xi);
        value.max(0.0)
    }
}

/// `E_xi(tau) = (1 / 2xi) (1 - e^{-2 xi tau})`, the integral of `e^{-2 xi v}`
/// over `[0, tau]`. Equal to the terminal variance per unit `sigma^2`.
#[inline]
pub fn e_xi(xi: f64, tau: f64) -> f64 {
    decay_integral(2.0 * xi, tau)
}

/// Gaussian law of `s(t + tau)` given `s(t)` and a frozen driver inventory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionLaw {
    pub mean: f64,
    pub variance: f64,
    pub horizon: f64,
}

impl TransitionLaw {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Closed-form transition moments for a constant driver inventory `q`:
/// mean `e^{-xi tau} s - gamma sigma^2 q Delta_xi`, variance `sigma^2 E_xi`.
pub fn transition_law(s: f64, q: f64, xi: f64, gamma: f64, sigma: f64, tau: f64) -> TransitionLaw {
    TransitionLaw {
        mean: (-xi * tau).exp() * s - gamma * sigma * sigma * q * delta_xi(xi, tau),
        variance: sigma * sigma * e_xi(xi, tau),
        horizon: tau,
    }
}

/// State of one simulated path on the discrete grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathState {
    pub step: usize,
    pub time: f64,
    pub mid: f64,
    pub driver_inventory: i64,
}

impl PathState {
    pub fn initial(mid: f64) -> Self {
        Self {
            step: 0,
            time: 0.0,
            mid,
            driver_inventory: 0,
        }
    }
}

/// Discretisation used to advance the mid-price by one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stepper {
    /// `s + [g(t_n) - xi s] dt + sigma sqrt(dt) Z`.
    #[default]
    Euler,
    /// Exact Gaussian transition over the step with the inventory frozen.
    Exact,
}

/// The performative price process on a fixed grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceProcess {
    pub xi: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub horizon: f64,
    pub step: f64,
    pub steps: usize,
    /// Scales the driver's impact term; 1 reproduces the plain model.
    pub impact_multiplier: f64,
    pub stepper: Stepper,
}

impl PriceProcess {
    pub fn new(market: &MarketParams, xi: f64, gamma: f64) -> Result<Self> {
        let steps = market.validate()?;
        Ok(Self {
            xi: require_positive("xi", xi)?,
            gamma: require_positive("gamma", gamma)?,
            sigma: market.volatility,
            horizon: market.horizon,
            step: market.step,
            steps,
            impact_multiplier: 1.0,
            stepper: Stepper::Euler,
        })
    }

    pub fn with_impact_multiplier(mut self, multiplier: f64) -> Result<Self> {
        self.impact_multiplier = require_positive("impact_multiplier", multiplier)?;
        Ok(self)
    }

    pub fn with_stepper(mut self, stepper: Stepper) -> Self {
        self.stepper = stepper;
        self
    }

    /// Driver inventory as seen by the drift, after the impact multiplier.
    #[inline]
    pub fn effective_inventory(&self, q: i64) -> f64 {
        self.impact_multiplier * q as f64
    }

    /// `g(t)` for the given driver inventory.
    #[inline]
    pub fn impact(&self, q: i64, time: f64) -> f64 {
        as_impact(
            self.gamma,
            self.sigma,
            self.effective_inventory(q),
            self.horizon - time,
        )
    }

    /// Deterministic part of the one-step update (noise term zeroed).
    pub fn deterministic_step(&self, state: &PathState) -> f64 {
        let q = self.effective_inventory(state.driver_inventory);
        match self.stepper {
            Stepper::Euler => {
                let drift = as_impact(self.gamma, self.sigma, q, self.horizon - state.time)
                    - self.xi * state.mid;
                state.mid + drift * self.step
            }
            Stepper::Exact => {
                // \int_{t_n}^{t_n+dt} e^{-xi (t_n + dt - u)} (T - u) du, split as
                // (T - t_{n+1}) (1 - e^{-xi dt}) / xi + Delta_xi(dt).
                let remaining = (self.horizon - state.time - self.step).max(0.0);
                let weight =
                    remaining * decay_integral(self.xi, self.step) + delta_xi(self.xi, self.step);
                (-self.xi * self.step).exp() * state.mid
                    - self.gamma * self.sigma * self.sigma * q * weight
            }
        }
    }

    /// Standard deviation multiplying the standard-normal draw in one step.
    pub fn noise_scale(&self) -> f64 {
        match self.stepper {
            Stepper::Euler => self.sigma * self.step.sqrt(),
            Stepper::Exact => self.sigma * e_xi(self.xi, self.step).sqrt(),
        }
    }

    fn advance(&self, state: &PathState, deterministic: f64, z: f64) -> PathState {
        let step = state.step + 1;
        PathState {
            step,
            time: step as f64 * self.step,
            mid: deterministic + self.noise_scale() * z,
            driver_inventory: state.driver_inventory,
        }
    }

    /// One Euler-Maruyama step; the driver inventory is left unchanged.
    pub fn euler_step(&self, state: &PathState, z: f64) -> PathState {
        let p = self.with_stepper(Stepper::Euler);
        p.advance(state, p.deterministic_step(state), z)
    }

    /// One exact-transition step with the driver inventory frozen over the step.
    pub fn exact_step(&self, state: &PathState, z: f64) -> PathState {
        let p = self.with_stepper(Stepper::Exact);
        p.advance(state, p.deterministic_step(state), z)
    }

    /// One step with the configured stepper.
    pub fn step_with(&self, state: &PathState, z: f64) -> PathState {
        self.advance(state, self.deterministic_step(state), z)
    }

    /// Closed-form law of `s(T)` from `state` with its inventory held constant.
    pub fn transition_law(&self, state: &PathState) -> TransitionLaw {
        transition_law(
            state.mid,
            self.effective_inventory(state.driver_inventory),
            self.xi,
            self.gamma,
            self.sigma,
            self.horizon - state.time,
        )
    }
}

/// Supplies standard-normal draws for the price noise.
pub trait NoiseSource {
    fn next_normal(&mut self) -> f64;
}

/// Noise stream that is identically zero.
#[derive(Debug, Default, Clone, Copy)]
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn next_normal(&mut self) -> f64 {
        0.0
    }
}

/// Whatever sets the inventory that enters the drift.
///
/// `advance` is called once per step with the state at `t_n` (before the price
/// moves) and returns the driver inventory that holds from `t_{n+1}` on.
pub trait InventoryDriver {
    fn advance(&mut self, state: &PathState) -> i64;
}

impl<F> InventoryDriver for F
where
    F: FnMut(&PathState) -> i64,
{
    fn advance(&mut self, state: &PathState) -> i64 {
        self(state)
    }
}

/// A driver whose inventory never changes.
#[derive(Debug, Clone, Copy)]
pub struct ConstantInventory(pub i64);

impl InventoryDriver for ConstantInventory {
    fn advance(&mut self, _state: &PathState) -> i64 {
        self.0
    }
}

/// The price-formation series of one path.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PathDecomposition {
    pub times: Vec<f64>,
    /// `g(t_n)` with the driver inventory in force at `t_n`.
    pub impact_series: Vec<f64>,
    /// `s_n` with the step's noise removed (`s_0` at `n = 0`).
    pub deterministic_series: Vec<f64>,
    pub full_series: Vec<f64>,
    pub driver_inventory: Vec<i64>,
}

impl PathDecomposition {
    pub fn len(&self) -> usize {
        self.full_series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.full_series.is_empty()
    }

    pub fn terminal_price(&self) -> f64 {
        *self.full_series.last().expect("empty path")
    }
}

/// Runs the closed loop from `s0`: at each step the driver reacts to the
/// current state, the price moves with the inventory in force at `t_n`, then
/// the driver's new inventory takes effect.
pub fn simulate_price_path<D, N>(
    process: &PriceProcess,
    s0: f64,
    driver: &mut D,
    noise: &mut N,
) -> PathDecomposition
where
    D: InventoryDriver + ?Sized,
    N: NoiseSource + ?Sized,
{
    let n = process.steps;
    let mut out = PathDecomposition {
        times: Vec::with_capacity(n + 1),
        impact_series: Vec::with_capacity(n + 1),
        deterministic_series: Vec::with_capacity(n + 1),
        full_series: Vec::with_capacity(n + 1),
        driver_inventory: Vec::with_capacity(n + 1),
    };
    let mut state = PathState::initial(s0);
    let record = |out: &mut PathDecomposition, state: &PathState, deterministic: f64| {
        out.times.push(state.time);
        out.impact_series
            .push(process.impact(state.driver_inventory, state.time));
        out.deterministic_series.push(deterministic);
        out.full_series.push(state.mid);
        out.driver_inventory.push(state.driver_inventory);
    };
    record(&mut out, &state, s0);
    for _ in 0..n {
        let next_inventory = driver.advance(&state);
        let deterministic = process.deterministic_step(&state);
        let z = noise.next_normal();
        let mut next = process.advance(&state, deterministic, z);
        next.driver_inventory = next_inventory;
        record(&mut out, &next, deterministic);
        state = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn process(xi: f64) -> PriceProcess {
        PriceProcess::new(&MarketParams::default(), xi, 0.5).unwrap()
    }

    #[test]
    fn impact_examples() {
        assert_eq!(as_impact(0.5, 2.0, 0.0, 1.0), 0.0);
        assert!((as_impact(0.5, 2.0, 2.0, 1.0) + 4.0).abs() < 1e-15);
        assert!((as_impact(0.5, 2.0, -2.0, 1.0) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn delta_and_e_values() {
        assert_eq!(delta_xi(1.0, 0.0), 0.0);
        assert!((delta_xi(1.0, 1.0) - (1.0 - 2.0 * (-1.0f64).exp())).abs() < 1e-15);
        assert!((delta_xi(1.0, 1.0) - 0.264241).abs() < 1e-6);
        let expected = 0.0025 - 21.0 * (-20.0f64).exp() / 400.0;
        assert!((delta_xi(20.0, 1.0) - expected).abs() < 1e-15);
        assert_eq!(e_xi(1.0, 0.0), 0.0);
        assert!((e_xi(1.0, 1.0) - 0.432332).abs() < 1e-6);
        assert!((e_xi(5.0, 1.0) - 0.0999955).abs() < 1e-7);
    }

    #[test]
    fn delta_series_branch_is_continuous() {
        // truncated series at tau = 1, accurate to about 1e-8 for x <= 0.1
        for xi in [0.05, 0.0999, 0.1, 0.1001, 1e-6, 1e-3] {
            let x: f64 = xi;
            let series = 0.5 - x / 3.0 + x * x / 8.0 - x.powi(3) / 30.0 + x.powi(4) / 144.0;
            assert!((delta_xi(xi, 1.0) - series).abs() < 1e-7, "xi={xi}");
        }
        let below = delta_xi(0.1 - 1e-12, 1.0);
        let above = delta_xi(0.1 + 1e-12, 1.0);
        assert!((below - above).abs() < 1e-12);
    }

    #[test]
    fn transition_examples() {
        let law = transition_law(10.0, 0.0, 1.0, 0.5, 2.0, 0.0);
        assert_eq!(law.mean, 10.0);
        assert_eq!(law.variance, 0.0);
        let law = transition_law(10.0, 0.0, 1.0, 0.5, 2.0, 1.0);
        assert!((law.mean - 3.678794).abs() < 1e-6);
        assert!((law.variance - 1.729329).abs() < 1e-6);
        let law = transition_law(0.0, 2.0, 1.0, 0.5, 2.0, 1.0);
        assert!((law.mean + 1.056964).abs() < 1e-6);
    }

    #[test]
    fn euler_step_examples() {
        let p = process(1.0);
        let s = PathState::initial(10.0);
        assert!((p.euler_step(&s, 0.0).mid - 9.95).abs() < 1e-12);
        assert_eq!(p.euler_step(&PathState::initial(0.0), 0.0).mid, 0.0);
        let s = PathState {
            driver_inventory: 2,
            ..PathState::initial(0.0)
        };
        let next = p.euler_step(&s, 1.0);
        assert!((next.mid - (-0.02 + 2.0 * 0.005f64.sqrt())).abs() < 1e-12);
        assert!((next.mid - 0.121421).abs() < 1e-6);
        assert_eq!(next.driver_inventory, 2);
        assert_eq!(next.step, 1);
        assert_eq!(next.time, 0.005);
    }

    #[test]
    fn exact_step_examples() {
        let p = process(1.0);
        let next = p.exact_step(&PathState::initial(10.0), 0.0);
        assert!((next.mid - 10.0 * (-0.005f64).exp()).abs() < 1e-12);
        assert_eq!(p.exact_step(&PathState::initial(0.0), 0.0).mid, 0.0);
    }

    #[test]
    fn exact_minus_euler_is_second_order() {
        let state = PathState {
            driver_inventory: 3,
            ..PathState::initial(4.0)
        };
        let mut ratios = Vec::new();
        for dt in [1e-2, 1e-3, 1e-4] {
            let market = MarketParams {
                step: dt,
                ..MarketParams::default()
            };
            let p = PriceProcess::new(&market, 2.0, 0.5).unwrap();
            let gap = (p.exact_step(&state, 0.0).mid - p.euler_step(&state, 0.0).mid).abs();
            ratios.push(gap / (dt * dt));
        }
        // gap / dt^2 settles to a constant
        assert!((ratios[1] / ratios[2] - 1.0).abs() < 0.05, "{ratios:?}");
        assert!((ratios[0] / ratios[1] - 1.0).abs() < 0.2, "{ratios:?}");
    }

    #[test]
    fn noiseless_zero_impact_path_decays_exponentially() {
        let p = process(3.0);
        let path = simulate_price_path(&p, 5.0, &mut ConstantInventory(0), &mut ZeroNoise);
        assert_eq!(path.len(), 201);
        for (n, s) in path.full_series.iter().enumerate() {
            let expected = 5.0 * (1.0 - 3.0 * 0.005f64).powi(n as i32);
            assert!((s - expected).abs() < 1e-12);
        }
        assert_eq!(path.full_series, path.deterministic_series);
        assert!(path.impact_series.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn exact_stepper_decay_matches_exponential() {
        let p = process(3.0).with_stepper(Stepper::Exact);
        let path = simulate_price_path(&p, 5.0, &mut ConstantInventory(0), &mut ZeroNoise);
        let expected = 5.0 * (-3.0f64).exp();
        assert!((path.terminal_price() - expected).abs() < 1e-12);
    }

    #[test]
    fn exact_stepper_hits_constant_inventory_mean_without_noise() {
        let p = process(2.0).with_stepper(Stepper::Exact);
        let mut driver = ConstantInventory(3);
        // driver inventory at t_0 is 0; start the path with q already in force
        let mut state = PathState {
            driver_inventory: 3,
            ..PathState::initial(1.5)
        };
        let law = p.transition_law(&state);
        for _ in 0..p.steps {
            let q = driver.advance(&state);
            state = p.exact_step(&state, 0.0);
            state.driver_inventory = q;
        }
        assert!((state.mid - law.mean).abs() < 1e-10);
    }

    #[test]
    fn impact_multiplier_scales_drift() {
        let p = process(1.0).with_impact_multiplier(10.0).unwrap();
        assert!((p.impact(2, 0.0) + 40.0).abs() < 1e-12);
        assert!(process(1.0).with_impact_multiplier(0.0).is_err());
    }
}
