//! Probabilistic fills against exponential order-arrival intensities and the
//! per-agent cash/inventory ledger.

use serde::{Deserialize, Serialize};

use crate::strategies::QuoteDecision;

/// How an intensity `lambda = A e^{-k delta}` becomes a per-step fill probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FillRule {
    /// `min(1, lambda dt)`.
    #[default]
    LinearProb,
    /// `1 - exp(-lambda dt)`, the probability of at least one Poisson arrival.
    ExponentialProb,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FillModel {
    pub order_flow_scale: f64,
    pub book_decay: f64,
    pub step: f64,
    pub rule: FillRule,
}

impl FillModel {
    pub fn probability(&self, premium: f64) -> f64 {
        fill_probability(
            premium,
            self.order_flow_scale,
            self.book_decay,
            self.step,
            self.rule,
        )
    }
}

/// Probability that a quote `premium` away from the mid fills within one step.
/// Non-positive premia are clamped to zero (they are market orders upstream).
pub fn fill_probability(premium: f64, a: f64, k: f64, dt: f64, rule: FillRule) -> f64 {
    let intensity = a * (-k * premium.max(0.0)).exp();
    let p = match rule {
        FillRule::LinearProb => (intensity * dt).min(1.0),
        FillRule::ExponentialProb => -(-intensity * dt).exp_m1(),
    };
    p.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// The agent sold at its ask.
    Ask,
    /// The agent bought at its bid.
    Bid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fill {
    pub step: usize,
    pub side: Side,
    pub price: f64,
    /// Price minus mid for an ask, mid minus price for a bid; zero for market orders.
    pub premium: f64,
    pub market_order: bool,
}

/// Cash, inventory and trade history of one agent.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct AgentLedger {
    pub cash: f64,
    pub inventory: i64,
    pub initial_inventory: i64,
    pub fills: Vec<Fill>,
    pub pnl_series: Vec<f64>,
    /// When false, `fills` is left empty (sweeps only need the totals).
    #[serde(skip)]
    pub keep_history: bool,
}

impl AgentLedger {
    pub fn new(initial_inventory: i64) -> Self {
        Self {
            inventory: initial_inventory,
            initial_inventory,
            keep_history: true,
            ..Self::default()
        }
    }

    pub fn without_history(mut self) -> Self {
        self.keep_history = false;
        self
    }

    pub fn mark_to_market(&self, mid: f64) -> f64 {
        mark_to_market(self.cash, self.inventory, mid)
    }

    /// Appends `x + q s` to the PnL series.
    pub fn record_mark(&mut self, mid: f64) -> f64 {
        let pnl = self.mark_to_market(mid);
        if self.keep_history {
            self.pnl_series.push(pnl);
        }
        pnl
    }

    fn execute(&mut self, step: usize, side: Side, mid: f64, premium: f64) {
        let market_order = premium <= 0.0;
        let premium = premium.max(0.0);
        let price = match side {
            Side::Ask => {
                self.cash += mid + premium;
                self.inventory -= 1;
                mid + premium
            }
            Side::Bid => {
                self.cash -= mid - premium;
                self.inventory += 1;
                mid - premium
            }
        };
        if self.keep_history {
            self.fills.push(Fill {
                step,
                side,
                price,
                premium,
                market_order,
            });
        }
    }

    /// Applies one step of fills for `decision` quoted around `mid`.
    ///
    /// A non-positive premium is a market order executed at the mid with
    /// certainty; otherwise the side fills when its uniform falls below the
    /// fill probability. Ask is processed before bid; the two commute.
    pub fn step_fills(
        &mut self,
        step: usize,
        decision: &QuoteDecision,
        mid: f64,
        uniforms: [f64; 2],
        model: &FillModel,
    ) -> StepFills {
        let ask =
            decision.ask_premium <= 0.0 || uniforms[0] < model.probability(decision.ask_premium);
        if ask {
            self.execute(step, Side::Ask, mid, decision.ask_premium);
        }
        let bid =
            decision.bid_premium <= 0.0 || uniforms[1] < model.probability(decision.bid_premium);
        if bid {
            self.execute(step, Side::Bid, mid, decision.bid_premium);
        }
        StepFills { ask, bid }
    }

    pub fn bid_fill_count(&self) -> usize {
        self.fills.iter().filter(|f| f.side == Side::Bid).count()
    }

    pub fn ask_fill_count(&self) -> usize {
        self.fills.iter().filter(|f| f.side == Side::Ask).count()
    }

    /// Cash rebuilt from the fill list.
    pub fn replay_cash(&self) -> f64 {
        self.fills
            .iter()
            .map(|f| match f.side {
                Side::Ask => f.price,
                Side::Bid => -f.price,
            })
            .sum()
    }
}

/// Which sides filled during a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepFills {
    pub ask: bool,
    pub bid: bool,
}

/// `x + q s`.
#[inline]
pub fn mark_to_market(cash: f64, inventory: i64, mid: f64) -> f64 {
    cash + inventory as f64 * mid
}

/// Replays a fixed premium schedule against a price series and fill uniforms,
/// returning the terminal mark-to-market PnL. `prices` has one more entry than
/// `decisions`: fills at step `n` execute around `prices[n]`.
pub fn replay_terminal_pnl(
    decisions: &[QuoteDecision],
    prices: &[f64],
    uniforms: &[[f64; 2]],
    model: &FillModel,
) -> f64 {
    assert_eq!(prices.len(), decisions.len() + 1);
    assert_eq!(uniforms.len(), decisions.len());
    let mut ledger = AgentLedger::new(0).without_history();
    for (n, (d, u)) in decisions.iter().zip(uniforms).enumerate() {
        ledger.step_fills(n, d, prices[n], *u, model);
    }
    ledger.mark_to_market(*prices.last().expect("non-empty price series"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(rule: FillRule) -> FillModel {
        FillModel {
            order_flow_scale: 140.0,
            book_decay: 1.5,
            step: 0.005,
            rule,
        }
    }

    fn decision(ask: f64, bid: f64) -> QuoteDecision {
        QuoteDecision {
            reservation: 0.5 * (ask - bid),
            ask_premium: ask,
            bid_premium: bid,
            spread: ask + bid,
        }
    }

    #[test]
    fn probability_examples() {
        assert!(fill_probability(1e6, 140.0, 1.5, 0.005, FillRule::LinearProb) < 1e-300);
        assert!(
            (fill_probability(0.0, 140.0, 1.5, 0.005, FillRule::LinearProb) - 0.7).abs() < 1e-12
        );
        let p = fill_probability(1.0, 140.0, 1.5, 0.005, FillRule::LinearProb);
        assert!((p - 0.7 * (-1.5f64).exp()).abs() < 1e-12);
        // hand-rounded reference value
        assert!((p - 0.156193).abs() < 5e-6);
        assert_eq!(
            fill_probability(0.0, 1e6, 1.5, 0.005, FillRule::LinearProb),
            1.0
        );
        let e = fill_probability(0.0, 140.0, 1.5, 0.005, FillRule::ExponentialProb);
        assert!((e - (1.0 - (-0.7f64).exp())).abs() < 1e-12);
        assert_eq!(
            fill_probability(-3.0, 140.0, 1.5, 0.005, FillRule::LinearProb),
            fill_probability(0.0, 140.0, 1.5, 0.005, FillRule::LinearProb)
        );
    }

    #[test]
    fn no_fill_leaves_ledger_unchanged() {
        let mut l = AgentLedger::new(0);
        let f = l.step_fills(
            0,
            &decision(20.0, 20.0),
            10.0,
            [0.999_999, 0.999_999],
            &model(FillRule::LinearProb),
        );
        assert_eq!(f, StepFills::default());
        assert_eq!(l, AgentLedger::new(0));
    }

    #[test]
    fn negative_premium_is_market_order_at_mid() {
        let mut l = AgentLedger::new(0);
        let f = l.step_fills(
            3,
            &decision(-0.1, 1.1),
            10.0,
            [0.999_999, 0.999_999],
            &model(FillRule::LinearProb),
        );
        assert!(f.ask && !f.bid);
        assert_eq!(l.cash, 10.0);
        assert_eq!(l.inventory, -1);
        assert!(l.fills[0].market_order);
        assert_eq!(l.fills[0].price, 10.0);
    }

    #[test]
    fn double_fill() {
        let mut l = AgentLedger::new(0);
        let f = l.step_fills(
            0,
            &decision(0.5, 0.5),
            10.0,
            [0.0, 0.0],
            &model(FillRule::LinearProb),
        );
        assert!(f.ask && f.bid);
        assert!((l.cash - 1.0).abs() < 1e-12);
        assert_eq!(l.inventory, 0);
    }

    #[test]
    fn mark_examples() {
        assert_eq!(mark_to_market(0.0, 0, 3.0), 0.0);
        assert_eq!(mark_to_market(50.0, -2, 10.0), 30.0);
        let mut l = AgentLedger::new(0);
        l.step_fills(
            0,
            &decision(0.5, 50.0),
            10.0,
            [0.0, 0.999],
            &model(FillRule::LinearProb),
        );
        assert!((l.mark_to_market(10.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ask_and_bid_updates_commute() {
        // applying the same step with sides swapped gives the same totals
        let m = model(FillRule::LinearProb);
        let mut a = AgentLedger::new(2);
        a.step_fills(0, &decision(0.3, 0.4), 5.0, [0.1, 0.2], &m);
        let mut b = AgentLedger::new(2);
        b.step_fills(0, &decision(0.3, 1e9), 5.0, [0.1, 0.2], &m);
        b.step_fills(0, &decision(1e9, 0.4), 5.0, [0.1, 0.2], &m);
        assert_eq!(a.inventory, b.inventory);
        assert!((a.cash - b.cash).abs() < 1e-12);
    }

    #[test]
    fn replay_reconstructs_cash_and_inventory() {
        let m = model(FillRule::LinearProb);
        let mut l = AgentLedger::new(1);
        let mut prices = vec![0.0];
        for n in 0..200 {
            let s = (n as f64 * 0.37).sin() * 3.0;
            prices.push(s);
            let u = [
                ((n * 7919) % 1000) as f64 / 1000.0,
                ((n * 104_729) % 1000) as f64 / 1000.0,
            ];
            l.step_fills(n, &decision(0.4 - 0.002 * n as f64, 0.6), s, u, &m);
            l.record_mark(s);
        }
        assert!((l.replay_cash() - l.cash).abs() < 1e-9);
        assert_eq!(
            l.inventory,
            l.initial_inventory + l.bid_fill_count() as i64 - l.ask_fill_count() as i64
        );
        assert_eq!(l.pnl_series.len(), 200);
    }
}
