use serde::Serialize;

use crate::error::{Error, Result};

/// Neumaier-compensated sum; the result depends only on the input order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean and sample (n - 1) standard deviation. A single sample has std 0.
pub fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    Ok((mean, (ss / (n - 1.0)).sqrt()))
}

/// Terminal statistics of one strategy over a set of paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean_pnl: f64,
    pub std_pnl: f64,
    /// `mean / std` with zero risk-free rate; absent for a single path or zero dispersion.
    pub sharpe: Option<f64>,
    pub mean_terminal_inventory: f64,
    pub std_terminal_inventory: f64,
    pub count: usize,
}

impl Summary {
    /// Standard error of the mean PnL.
    pub fn std_error(&self) -> f64 {
        self.std_pnl / (self.count as f64).sqrt()
    }
}

/// Summarises `(terminal pnl, terminal inventory)` samples.
pub fn aggregate(samples: &[(f64, i64)]) -> Result<Summary> {
    let pnl: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let inv: Vec<f64> = samples.iter().map(|s| s.1 as f64).collect();
    let (mean_pnl, std_pnl) = mean_std(&pnl)?;
    let (mean_inv, std_inv) = mean_std(&inv)?;
    let sharpe = (samples.len() > 1 && std_pnl > 0.0).then(|| mean_pnl / std_pnl);
    Ok(Summary {
        mean_pnl,
        std_pnl,
        sharpe,
        mean_terminal_inventory: mean_inv,
        std_terminal_inventory: std_inv,
        count: samples.len(),
    })
}
