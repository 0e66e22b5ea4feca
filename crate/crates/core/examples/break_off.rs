//! Locates the xi beyond which the performative strategy out-earns the
//! symmetric benchmark, for each risk aversion.
//!
//! ```text
//! cargo run --release --example break_off -- [paths]
//! ```

use performative_mm::harness::{run_sweep, ExperimentConfig, StrategyKind, SweepRecord};

fn curve(records: &[SweepRecord], gamma: f64, kind: StrategyKind) -> Vec<(f64, f64)> {
    records
        .iter()
        .filter(|r| r.gamma == gamma && r.strategy == kind)
        .map(|r| (r.xi, r.mean_pnl))
        .collect()
}

fn main() -> performative_mm::Result<()> {
    let paths: usize = std::env::args()
        .nth(1)
        .map_or(1000, |a| a.parse().expect("paths"));
    let config = ExperimentConfig {
        paths_per_cell: paths,
        strategies: vec![StrategyKind::Symmetric, StrategyKind::Performative],
        ..ExperimentConfig::default()
    };
    let records = run_sweep(&config)?;

    for &gamma in &config.gammas {
        let perf = curve(&records, gamma, StrategyKind::Performative);
        let sym = curve(&records, gamma, StrategyKind::Symmetric);
        let above: Vec<bool> = perf.iter().zip(&sym).map(|(p, s)| p.1 > s.1).collect();
        let first = (0..above.len()).find(|&i| above[i..].iter().all(|a| *a));
        match first {
            Some(0) => println!("gamma {gamma}: performative ahead on the whole grid"),
            Some(i) => println!(
                "gamma {gamma}: break-off between xi = {:.3} and {:.3}",
                perf[i - 1].0,
                perf[i].0
            ),
            None => println!("gamma {gamma}: no break-off on the grid"),
        }
        for ((xi, p), (_, s)) in perf.iter().zip(&sym) {
            println!("  xi {xi:>8.4}  performative {p:>8.3}  symmetric {s:>8.3}");
        }
    }
    Ok(())
}
