//! Sweeps the four strategies over the xi grid at one risk aversion and
//! prints mean PnL, PnL dispersion, Sharpe ratio and terminal inventory.
//!
//! ```text
//! cargo run --release --example table_one -- [gamma] [paths]
//! ```

use std::time::Instant;

use performative_mm::harness::{run_sweep, ExperimentConfig, StrategyKind};

fn main() -> performative_mm::Result<()> {
    let mut args = std::env::args().skip(1);
    let gamma: f64 = args.next().map_or(0.5, |a| a.parse().expect("gamma"));
    let paths: usize = args.next().map_or(1000, |a| a.parse().expect("paths"));

    let config = ExperimentConfig {
        gammas: vec![gamma],
        paths_per_cell: paths,
        strategies: vec![
            StrategyKind::As,
            StrategyKind::Symmetric,
            StrategyKind::Performative,
        ],
        ..ExperimentConfig::default()
    };
    let started = Instant::now();
    let records = run_sweep(&config)?;

    println!("gamma = {gamma}, {paths} paths per cell");
    println!(
        "{:>8} {:>13} {:>10} {:>10} {:>8} {:>10}",
        "xi", "strategy", "mean", "std", "sharpe", "term_inv"
    );
    for r in &records {
        println!(
            "{:>8.4} {:>13} {:>10.3} {:>10.3} {:>8.3} {:>10.3}",
            r.xi,
            r.strategy.label(),
            r.mean_pnl,
            r.std_pnl,
            r.sharpe.unwrap_or(f64::NAN),
            r.mean_terminal_inventory
        );
    }
    println!("elapsed {:.2}s", started.elapsed().as_secs_f64());
    Ok(())
}
