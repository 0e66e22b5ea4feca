//! Quote decisions for the four strategies, the critical-threshold analysis
//! of the performative agent, and the closed-form exponential-utility value
//! function.
//!
//! All functions are pure. Inventories are taken as `f64` so that an
//! amplified driver impact (`multiplier * q`) can be passed through unchanged.

use serde::{Deserialize, Serialize};

use crate::dynamics::{delta_xi, e_xi, transition_law};
use crate::error::{Error, Result};

/// One step's quotes. Premia are offsets from the mid-price: the ask is at
/// `s + ask_premium`, the bid at `s - bid_premium`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuoteDecision {
    pub reservation: f64,
    pub ask_premium: f64,
    pub bid_premium: f64,
    pub spread: f64,
}

impl QuoteDecision {
    /// Quotes of total width `spread` centred on `reservation`.
    pub fn centred(mid: f64, reservation: f64, spread: f64) -> Self {
        let skew = reservation - mid;
        let half = 0.5 * spread;
        Self {
            reservation,
            ask_premium: half + skew,
            bid_premium: half - skew,
            spread,
        }
    }

    pub fn ask_price(&self, mid: f64) -> f64 {
        mid + self.ask_premium
    }

    pub fn bid_price(&self, mid: f64) -> f64 {
        mid - self.bid_premium
    }
}

/// `(1/gamma) ln(1 + gamma/k)`: the half-spread shared by every strategy.
#[inline]
pub fn base_half_spread(gamma: f64, k: f64) -> f64 {
    (gamma / k).ln_1p() / gamma
}

/// Inventory-model quotes: `r = s - gamma q sigma^2 tau` and
/// `spread = (2/gamma) ln(1 + gamma/k) + gamma sigma^2 tau`.
pub fn as_quotes(s: f64, q: f64, gamma: f64, sigma: f64, k: f64, tau: f64) -> QuoteDecision {
    let var_rate = gamma * sigma * sigma;
    let reservation = s - var_rate * q * tau;
    let spread = 2.0 * base_half_spread(gamma, k) + var_rate * tau;
    QuoteDecision::centred(s, reservation, spread)
}

/// Quotes symmetric around the mid with the shared base spread only.
pub fn symmetric_quotes(s: f64, gamma: f64, k: f64) -> QuoteDecision {
    QuoteDecision::centred(s, s, 2.0 * base_half_spread(gamma, k))
}

/// Coefficients of the quadratic-in-inventory ansatz
/// `theta = theta0 + q_perf theta1 + q_perf^2 theta2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HjbCoefficients {
    /// Expected terminal price `E[s(T)]` under the performative process.
    pub theta1: f64,
    /// `(gamma sigma^2 / 4 xi)(e^{-2 xi tau} - 1)`, never positive.
    pub theta2: f64,
}

pub fn hjb_coefficients(
    s: f64,
    q: f64,
    xi: f64,
    gamma: f64,
    sigma: f64,
    tau: f64,
) -> HjbCoefficients {
    HjbCoefficients {
        theta1: transition_law(s, q, xi, gamma, sigma, tau).mean,
        theta2: gamma * sigma * sigma / (4.0 * xi) * (-2.0 * xi * tau).exp_m1(),
    }
}

/// Multipliers on the three terms of the performative reservation price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaParams {
    /// Scales the decayed mid-price `e^{-xi tau} s`.
    pub price: f64,
    /// Scales the driver-inventory term `q Delta_xi`.
    pub driver: f64,
    /// Scales the own-inventory term `q_perf E_xi`.
    pub own: f64,
}

impl ThetaParams {
    pub const IDENTITY: ThetaParams = ThetaParams {
        price: 1.0,
        driver: 1.0,
        own: 1.0,
    };

    pub fn new(price: f64, driver: f64, own: f64) -> Self {
        Self { price, driver, own }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.price, self.driver, self.own]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl Default for ThetaParams {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// Performative-aware quotes:
/// `r = e^{-xi tau} s - gamma sigma^2 (q Delta_xi + q_perf E_xi)` and
/// `spread = (2/gamma) ln(1 + gamma/k) + gamma sigma^2 E_xi`.
#[allow(clippy::too_many_arguments)]
pub fn performative_quotes(
    s: f64,
    q: f64,
    q_perf: f64,
    xi: f64,
    gamma: f64,
    sigma: f64,
    k: f64,
    tau: f64,
) -> QuoteDecision {
    theta_quotes(
        s,
        q,
        q_perf,
        xi,
        gamma,
        sigma,
        k,
        tau,
        ThetaParams::IDENTITY,
    )
}

/// Performative quotes with each reservation term scaled by `theta`; the
/// spread is the performative one. Identity multipliers reproduce
/// [`performative_quotes`] bit for bit.
#[allow(clippy::too_many_arguments)]
pub fn theta_quotes(
    s: f64,
    q: f64,
    q_perf: f64,
    xi: f64,
    gamma: f64,
    sigma: f64,
    k: f64,
    tau: f64,
    theta: ThetaParams,
) -> QuoteDecision {
    let var_rate = gamma * sigma * sigma;
    let own_weight = e_xi(xi, tau);
    let decayed = (-xi * tau).exp() * s;
    let reservation = theta.price * decayed
        - var_rate * (theta.driver * (q * delta_xi(xi, tau)) + theta.own * (q_perf * own_weight));
    let spread = 2.0 * base_half_spread(gamma, k) + var_rate * own_weight;
    QuoteDecision::centred(s, reservation, spread)
}

/// How the performative agent's stance relates to the inventory-model driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    AlignedBuy,
    AlignedSell,
    ArbitrageBuy,
    ArbitrageSell,
}

/// Critical own-inventory thresholds at which the performative agent flips
/// between buying and selling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdReport {
    /// `h(s,t) = -s (1 - e^{-xi tau}) / (gamma sigma^2 E_xi)`.
    pub h: f64,
    /// `h - |q| Delta_xi / E_xi`.
    pub lower: f64,
    /// `h + |q| Delta_xi / E_xi`.
    pub upper: f64,
    /// The own inventory where `r_perf = s`: `h - q Delta_xi / E_xi`.
    pub switch_point: f64,
    /// `q Delta_xi + q_perf E_xi`; positive means the agent sells for any `s >= 0`.
    pub pressure: f64,
    /// `r_perf - s`.
    pub reservation_skew: f64,
    pub regime: Regime,
}

/// Threshold analysis for own inventory `q_perf` given the driver's `q`.
///
/// Ties count as aligned: an indifferent performative agent (`r_perf = s`)
/// takes the driver's side, and a flat driver (`q = 0`) takes the agent's.
pub fn critical_thresholds(
    s: f64,
    q: f64,
    q_perf: f64,
    xi: f64,
    gamma: f64,
    sigma: f64,
    tau: f64,
) -> Result<ThresholdReport> {
    let own_weight = e_xi(xi, tau);
    if !(tau > 0.0 && own_weight > 0.0) {
        return Err(Error::DegenerateHorizon);
    }
    let var_rate = gamma * sigma * sigma;
    let driver_weight = delta_xi(xi, tau);
    let h = s * (-xi * tau).exp_m1() / (var_rate * own_weight);
    let offset = q.abs() * driver_weight / own_weight;
    let pressure = q * driver_weight + q_perf * own_weight;
    let reservation = (-xi * tau).exp() * s - var_rate * pressure;
    let reservation_skew = reservation - s;

    // +1 buy, -1 sell, 0 indifferent
    let perf_side = sign(reservation_skew);
    let driver_side = -sign(q);
    let regime = match (perf_side, driver_side) {
        (0, 0) | (1, 0) | (0, 1) | (1, 1) => Regime::AlignedBuy,
        (-1, 0) | (0, -1) | (-1, -1) => Regime::AlignedSell,
        (1, -1) => Regime::ArbitrageBuy,
        _ => Regime::ArbitrageSell,
    };
    Ok(ThresholdReport {
        h,
        lower: h - offset,
        upper: h + offset,
        switch_point: h - q * driver_weight / own_weight,
        pressure,
        reservation_skew,
        regime,
    })
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// `ln(-u)` for the performative agent's value function `u`.
#[allow(clippy::too_many_arguments)]
pub fn log_neg_value_function(
    x: f64,
    s: f64,
    q_perf: f64,
    q: f64,
    xi: f64,
    gamma: f64,
    sigma: f64,
    tau: f64,
) -> f64 {
    let expected_terminal = transition_law(s, q, xi, gamma, sigma, tau).mean;
    -gamma * x - gamma * q_perf * expected_terminal
        + 0.5 * gamma * gamma * q_perf * q_perf * sigma * sigma * e_xi(xi, tau)
}

/// Value function `u = -exp(-gamma x) exp(-gamma q_perf mu) exp(gamma^2 q_perf^2 sigma^2 E_xi / 2)`
/// where `mu` is the expected terminal price.
///
/// Evaluated through [`log_neg_value_function`]; saturates to `-inf` when the
/// exponent overflows and to `-0.0` when it underflows.
#[allow(clippy::too_many_arguments)]
pub fn value_function(
    x: f64,
    s: f64,
    q_perf: f64,
    q: f64,
    xi: f64,
    gamma: f64,
    sigma: f64,
    tau: f64,
) -> f64 {
    -log_neg_value_function(x, s, q_perf, q, xi, gamma, sigma, tau).exp()
}

/// Gap between the exact order-arrival term and its first-order expansion,
/// `A/(k+gamma) [e^{-k da} + e^{-k db} - (2 - k (da + db))]`.
///
/// Non-negative by convexity of the exponential, which is why the linearised
/// quotes only give a sub-solution of the control problem.
pub fn linearised_arrival_gap(decision: &QuoteDecision, a: f64, k: f64, gamma: f64) -> f64 {
    let exact = (-k * decision.ask_premium).exp() + (-k * decision.bid_premium).exp();
    let linear = 2.0 - k * (decision.ask_premium + decision.bid_premium);
    a / (k + gamma) * (exact - linear)
}

#[cfg(test)]
mod tests {
    use super::*;

    const G: f64 = 0.5;
    const SIG: f64 = 2.0;
    const K: f64 = 1.5;

    fn midpoint_ok(d: &QuoteDecision, s: f64) -> bool {
        (d.reservation - (s + 0.5 * (d.ask_premium - d.bid_premium))).abs()
            <= 1e-12 * (1.0 + d.reservation.abs())
            && (d.spread - (d.ask_premium + d.bid_premium)).abs() <= 1e-12 * (1.0 + d.spread)
    }

    #[test]
    fn as_quotes_examples() {
        let d = as_quotes(7.0, 0.0, G, SIG, K, 0.0);
        assert_eq!(d.reservation, 7.0);
        assert!((d.spread - 4.0 * (4.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!((d.spread - 1.150728).abs() < 1e-6);
        assert!((d.ask_premium - 0.575364).abs() < 1e-6);
        assert_eq!(d.ask_premium, d.bid_premium);

        let d = as_quotes(100.0, 2.0, G, SIG, K, 1.0);
        assert!((d.reservation - 96.0).abs() < 1e-12);
        assert!(midpoint_ok(&d, 100.0));

        let long = as_quotes(3.0, 4.0, G, SIG, K, 0.6);
        let short = as_quotes(3.0, -4.0, G, SIG, K, 0.6);
        assert_eq!(long.ask_premium, short.bid_premium);
        assert_eq!(long.bid_premium, short.ask_premium);
    }

    #[test]
    fn symmetric_quotes_examples() {
        let d = symmetric_quotes(12.5, G, K);
        assert_eq!(d.reservation, 12.5);
        assert!((d.ask_premium - 2.0 * (4.0f64 / 3.0).ln()).abs() < 1e-12);
        assert_eq!(d.ask_premium, d.bid_premium);
        assert_eq!(d.spread, as_quotes(12.5, 0.0, G, SIG, K, 0.0).spread);
    }

    #[test]
    fn hjb_coefficients_examples() {
        let c = hjb_coefficients(4.0, 3.0, 1.0, G, SIG, 0.0);
        assert_eq!(c.theta1, 4.0);
        assert_eq!(c.theta2, 0.0);
        let c = hjb_coefficients(4.0, 3.0, 1.0, G, SIG, 1.0);
        assert!((c.theta2 - 0.5 * ((-2.0f64).exp() - 1.0)).abs() < 1e-15);
        assert!((c.theta2 + 0.432332).abs() < 1e-6);
    }

    #[test]
    fn performative_quotes_examples() {
        let d = performative_quotes(5.0, 0.0, 0.0, 2.0, G, SIG, K, 0.0);
        assert_eq!(d.reservation, 5.0);
        assert!((d.spread - 2.0 / G * (1.0 + G / K).ln()).abs() < 1e-15);

        let d = performative_quotes(10.0, 0.0, 0.0, 20.0, G, SIG, K, 1.0);
        assert!((d.reservation - 10.0 * (-20.0f64).exp()).abs() < 1e-20);
        assert!((d.reservation - 2.06e-8).abs() < 1e-10);
        assert!((d.spread - 1.200728).abs() < 1e-6);

        for tau in [0.25, 0.5, 1.0] {
            let perf = performative_quotes(0.0, 0.0, 0.0, 1e-6, G, SIG, K, tau).spread;
            let as_spread = as_quotes(0.0, 0.0, G, SIG, K, tau).spread;
            assert!((perf - as_spread).abs() <= 1e-5);
        }
    }

    #[test]
    fn performative_reservation_matches_hjb_route() {
        let (s, q, qp, xi, tau) = (3.2, -2.0, 5.0, 1.7, 0.4);
        let c = hjb_coefficients(s, q, xi, G, SIG, tau);
        let d = performative_quotes(s, q, qp, xi, G, SIG, K, tau);
        assert!((d.reservation - (c.theta1 + 2.0 * qp * c.theta2)).abs() < 1e-12);
        assert!((d.spread - (2.0 * base_half_spread(G, K) - 2.0 * c.theta2)).abs() < 1e-12);
        let half = base_half_spread(G, K) - c.theta2;
        assert!((d.ask_premium - (half + (c.theta1 - s + 2.0 * qp * c.theta2))).abs() < 1e-12);
    }

    #[test]
    fn theta_quotes_examples() {
        let args = (1.3, 3.0, -2.0, 4.0, G, SIG, K, 0.7);
        let base = performative_quotes(
            args.0, args.1, args.2, args.3, args.4, args.5, args.6, args.7,
        );
        let id = theta_quotes(
            args.0,
            args.1,
            args.2,
            args.3,
            args.4,
            args.5,
            args.6,
            args.7,
            ThetaParams::IDENTITY,
        );
        assert_eq!(base, id);

        let zero = theta_quotes(
            9.0,
            3.0,
            -2.0,
            4.0,
            G,
            SIG,
            K,
            0.7,
            ThetaParams::new(0.0, 0.0, 0.0),
        );
        assert_eq!(zero.reservation, 0.0);
        assert_eq!(zero.spread, base.spread);

        let doubled = theta_quotes(
            args.0,
            args.1,
            args.2,
            args.3,
            args.4,
            args.5,
            args.6,
            args.7,
            ThetaParams::new(1.0, 2.0, 1.0),
        );
        let shift = -G * SIG * SIG * delta_xi(4.0, 0.7) * 3.0;
        assert!((doubled.reservation - base.reservation - shift).abs() < 1e-12);
    }

    #[test]
    fn threshold_examples() {
        let r = critical_thresholds(0.0, 0.0, 0.0, 2.0, G, SIG, 0.5).unwrap();
        assert_eq!((r.h, r.lower, r.upper), (0.0, 0.0, 0.0));

        let r = critical_thresholds(3.0, 0.0, 0.0, 2.0, G, SIG, 0.5).unwrap();
        assert!(r.h < 0.0);
        assert_eq!(r.lower, r.h);
        assert_eq!(r.upper, r.h);

        assert_eq!(
            critical_thresholds(1.0, 1.0, 1.0, 2.0, G, SIG, 0.0),
            Err(Error::DegenerateHorizon)
        );
    }

    #[test]
    fn threshold_switch_point_separates_buy_and_sell() {
        let (s, q, xi, tau) = (1.5, -3.0, 2.0, 0.6);
        let r = critical_thresholds(s, q, 0.0, xi, G, SIG, tau).unwrap();
        assert!((r.switch_point - r.upper).abs() < 1e-12); // q < 0 picks the upper threshold
        let below = performative_quotes(s, q, r.switch_point - 0.5, xi, G, SIG, K, tau);
        let above = performative_quotes(s, q, r.switch_point + 0.5, xi, G, SIG, K, tau);
        assert!(below.reservation > s);
        assert!(above.reservation < s);
    }

    #[test]
    fn regimes() {
        // driver long (sells), agent with large negative inventory buys
        let r = critical_thresholds(0.0, 2.0, -30.0, 2.0, G, SIG, 0.6).unwrap();
        assert_eq!(r.regime, Regime::ArbitrageBuy);
        // both long: both sell
        let r = critical_thresholds(0.0, 2.0, 3.0, 2.0, G, SIG, 0.6).unwrap();
        assert_eq!(r.regime, Regime::AlignedSell);
        // driver short (buys), agent holding inventory sells into the rise
        let r = critical_thresholds(0.0, -2.0, 30.0, 2.0, G, SIG, 0.6).unwrap();
        assert_eq!(r.regime, Regime::ArbitrageSell);
        let r = critical_thresholds(0.0, -2.0, -1.0, 2.0, G, SIG, 0.6).unwrap();
        assert_eq!(r.regime, Regime::AlignedBuy);
    }

    #[test]
    fn value_function_examples() {
        let u = value_function(2.0, 5.0, 0.0, 3.0, 1.0, G, SIG, 1.0);
        assert!((u + (-G * 2.0f64).exp()).abs() < 1e-15);

        let u = value_function(2.0, 5.0, 3.0, 1.0, 1.0, G, SIG, 0.0);
        assert!((u + (-G * (2.0 + 3.0 * 5.0f64)).exp()).abs() < 1e-15);

        let u = value_function(0.0, 1.0, 1.0, 0.0, 1.0, G, SIG, 1.0);
        let expected = -(-0.5 * (-1.0f64).exp() + 0.25 * (1.0 - (-2.0f64).exp())).exp();
        assert!((u - expected).abs() < 1e-14);
        // hand-rounded reference value
        assert!((u + 1.032750).abs() < 5e-6);
    }

    #[test]
    fn value_function_saturates() {
        assert_eq!(
            value_function(-2000.0, 0.0, 0.0, 0.0, 1.0, G, SIG, 1.0),
            f64::NEG_INFINITY
        );
        let tiny = value_function(4000.0, 0.0, 0.0, 0.0, 1.0, G, SIG, 1.0);
        assert!(tiny == 0.0 && tiny.is_sign_negative());
        assert!(
            (log_neg_value_function(4000.0, 0.0, 0.0, 0.0, 1.0, G, SIG, 1.0) + 2000.0).abs() < 1e-9
        );
    }
}
