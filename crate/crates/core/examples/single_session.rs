//! One trading session at one cell: mid-price, the driver's and the
//! performative agent's quotes, inventories and running PnL.
//!
//! ```text
//! cargo run --release --example single_session -- [xi] [seed]
//! ```

use performative_mm::harness::{decompose_run, CellConfig, StrategyKind};
use performative_mm::MarketParams;

fn main() -> performative_mm::Result<()> {
    let mut args = std::env::args().skip(1);
    let xi: f64 = args.next().map_or(10.0, |a| a.parse().expect("xi"));
    let seed: u64 = args.next().map_or(7, |a| a.parse().expect("seed"));

    let cell = CellConfig::new(MarketParams::default(), 0.5, xi)
        .with_strategies(&[StrategyKind::As, StrategyKind::Performative]);
    let trace = decompose_run(&cell, seed)?;
    let perf = trace
        .agent(StrategyKind::Performative)
        .expect("performative agent");
    let mids = &trace.decomposition.full_series;

    println!(
        "{:>5} {:>9} | {:>9} {:>9} {:>4} {:>8} | {:>9} {:>9} {:>4} {:>8}",
        "step", "mid", "as bid", "as ask", "q", "pnl", "perf bid", "perf ask", "q", "pnl"
    );
    for n in (0..mids.len() - 1).step_by(8) {
        let a = &trace.driver.decisions[n];
        let p = &perf.decisions[n];
        println!(
            "{:>5} {:>9.4} | {:>9.4} {:>9.4} {:>4} {:>8.3} | {:>9.4} {:>9.4} {:>4} {:>8.3}",
            n,
            mids[n],
            a.bid_price(mids[n]),
            a.ask_price(mids[n]),
            trace.driver.inventory[n],
            trace.driver.pnl[n],
            p.bid_price(mids[n]),
            p.ask_price(mids[n]),
            perf.inventory[n],
            perf.pnl[n]
        );
    }
    let last = mids.len() - 1;
    println!(
        "terminal: as pnl {:.3} (q {}), performative pnl {:.3} (q {})",
        trace.driver.pnl[last], trace.driver.inventory[last], perf.pnl[last], perf.inventory[last]
    );
    Ok(())
}
