//! Tunes the theta multipliers at one risk aversion over the xi grid and
//! compares held-out PnL against the analytic performative strategy.
//!
//! ```text
//! cargo run --release --example tune_thetas -- [gamma] [budget] [thetas.csv]
//! ```

use std::time::Instant;

use performative_mm::harness::{log_grid, CellConfig};
use performative_mm::tuner::{tune_grid, TuneConfig};
use performative_mm::MarketParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let gamma: f64 = args.next().map_or(Ok(0.5), |a| a.parse())?;
    let budget: usize = args.next().map_or(Ok(100), |a| a.parse())?;
    let out = args.next();

    let config = TuneConfig {
        budget,
        ..TuneConfig::default()
    };
    let base = CellConfig::new(MarketParams::default(), gamma, 1.0);
    let cells: Vec<(f64, f64)> = log_grid(0.3, 20.0, 20)
        .into_iter()
        .map(|xi| (gamma, xi))
        .collect();

    let started = Instant::now();
    let (table, reports) = tune_grid(&config, &base, &cells)?;

    println!(
        "{:>8} {:>7} {:>7} {:>7} {:>10} {:>10} {:>8}",
        "xi", "theta0", "theta1", "theta2", "test", "identity", "gain/se"
    );
    for ((_, xi), r) in cells.iter().zip(&reports) {
        let t = &r.test_summary;
        let i = &r.identity_test_summary;
        let se = (t.std_error().powi(2) + i.std_error().powi(2)).sqrt();
        println!(
            "{:>8.4} {:>7.3} {:>7.3} {:>7.3} {:>10.3} {:>10.3} {:>8.2}",
            xi,
            r.best.price,
            r.best.driver,
            r.best.own,
            t.mean_pnl,
            i.mean_pnl,
            (t.mean_pnl - i.mean_pnl) / se
        );
    }
    println!("elapsed {:.1}s", started.elapsed().as_secs_f64());

    if let Some(path) = out {
        table.write_csv(std::fs::File::create(&path)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
