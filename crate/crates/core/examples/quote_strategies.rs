//! Quotes of the four strategies at one market state, followed by the
//! performative agent's buy/sell thresholds in its own inventory.
//!
//! ```text
//! cargo run --example quote_strategies -- [mid] [driver_q] [own_q] [xi] [tau]
//! ```

use performative_mm::strategies::{
    as_quotes, critical_thresholds, performative_quotes, symmetric_quotes, theta_quotes,
    QuoteDecision, ThetaParams,
};

fn show(name: &str, mid: f64, d: &QuoteDecision) {
    println!(
        "{name:>13} {:>10.4} {:>10.4} {:>10.4} {:>8.4}",
        d.reservation,
        d.bid_price(mid),
        d.ask_price(mid),
        d.spread
    );
}

fn main() -> performative_mm::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("number"))
        .collect();
    let arg = |i: usize, default: f64| args.get(i).copied().unwrap_or(default);
    let (s, q, q_perf, xi, tau) = (
        arg(0, 2.0),
        arg(1, 3.0),
        arg(2, -1.0),
        arg(3, 5.0),
        arg(4, 0.6),
    );
    let (gamma, sigma, k) = (0.5, 2.0, 1.5);

    println!("mid {s}, driver q {q}, own q {q_perf}, xi {xi}, tau {tau}");
    println!(
        "{:>13} {:>10} {:>10} {:>10} {:>8}",
        "strategy", "r", "bid", "ask", "spread"
    );
    show("as", s, &as_quotes(s, q_perf, gamma, sigma, k, tau));
    show("symmetric", s, &symmetric_quotes(s, gamma, k));
    show(
        "performative",
        s,
        &performative_quotes(s, q, q_perf, xi, gamma, sigma, k, tau),
    );
    let theta = ThetaParams::new(0.8, 1.5, 0.5);
    show(
        "theta",
        s,
        &theta_quotes(s, q, q_perf, xi, gamma, sigma, k, tau, theta),
    );

    let t = critical_thresholds(s, q, q_perf, xi, gamma, sigma, tau)?;
    println!();
    println!(
        "h = {:.4}, thresholds [{:.4}, {:.4}], switch at {:.4}",
        t.h, t.lower, t.upper, t.switch_point
    );
    println!(
        "regime {:?}, reservation skew {:.4}",
        t.regime, t.reservation_skew
    );
    for own in -4..=4 {
        let r = critical_thresholds(s, q, f64::from(own), xi, gamma, sigma, tau)?;
        println!("  own q {own:>3}: {:?}", r.regime);
    }
    Ok(())
}
