//! Builds one price path step by step and prints its three components: the
//! driver's impact term, the noise-free step, and the realised mid-price.
//!
//! ```text
//! cargo run --release --example price_formation -- [xi] [impact_multiplier]
//! ```

use performative_mm::harness::{decompose_run, CellConfig, StrategyKind};
use performative_mm::MarketParams;

fn main() -> performative_mm::Result<()> {
    let mut args = std::env::args().skip(1);
    let xi: f64 = args.next().map_or(10.0, |a| a.parse().expect("xi"));
    let multiplier: f64 = args
        .next()
        .map_or(10.0, |a| a.parse().expect("impact multiplier"));

    let mut cell =
        CellConfig::new(MarketParams::default(), 0.5, xi).with_strategies(&[StrategyKind::As]);
    cell.impact_multiplier = multiplier;
    let trace = decompose_run(&cell, 20_250_101)?;
    let d = &trace.decomposition;

    println!("xi = {xi}, impact x{multiplier}");
    println!(
        "{:>6} {:>10} {:>14} {:>10} {:>6}",
        "t", "impact", "deterministic", "mid", "q"
    );
    for n in (0..d.len()).step_by(10) {
        println!(
            "{:>6.3} {:>10.4} {:>14.4} {:>10.4} {:>6}",
            d.times[n],
            d.impact_series[n] + 0.0,
            d.deterministic_series[n],
            d.full_series[n],
            d.driver_inventory[n]
        );
    }
    Ok(())
}
