//! Derivative-free tuning of the theta-enhanced strategy's multipliers.
//!
//! The search first spreads candidates over the box with a Halton sequence,
//! then polishes the incumbent with a box-clamped Nelder-Mead simplex. The
//! identity multipliers are always evaluated first and kept unless something
//! strictly better is found, so the result never loses to the analytic
//! performative strategy on the training paths.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{aggregate, run_paths, CellConfig, StrategyKind, Summary};
use crate::strategies::ThetaParams;

/// What the tuner maximises over the training paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    #[default]
    MeanPnl,
    Sharpe,
    /// Certainty equivalent `-(1/gamma) ln mean(exp(-gamma PnL))`, computed in
    /// log space.
    MeanUtility,
}

/// Per-component search bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Default for SearchBox {
    fn default() -> Self {
        Self {
            lo: [0.0; 3],
            hi: [2.0; 3],
        }
    }
}

impl SearchBox {
    pub fn width(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }

    pub fn clamp(&self, x: [f64; 3]) -> [f64; 3] {
        let mut out = x;
        for i in 0..3 {
            out[i] = x[i].clamp(self.lo[i], self.hi[i]);
        }
        out
    }

    pub fn contains(&self, x: [f64; 3]) -> bool {
        (0..3).all(|i| x[i] >= self.lo[i] && x[i] <= self.hi[i])
    }

    fn scale_unit(&self, u: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = self.lo[i] + u[i] * self.width(i);
        }
        out
    }
}

/// A set of simulation paths: indices `0..paths` under `master_seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedSet {
    pub master_seed: u64,
    pub paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuneConfig {
    pub search_box: SearchBox,
    pub budget: usize,
    pub train_paths: usize,
    pub test_paths: usize,
    pub train_seed: u64,
    pub test_seed: u64,
    pub objective: Objective,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            search_box: SearchBox::default(),
            budget: 100,
            train_paths: 1000,
            test_paths: 1000,
            train_seed: 1_000_003,
            test_seed: 2_000_003,
            objective: Objective::MeanPnl,
        }
    }
}

impl TuneConfig {
    pub fn validate(&self) -> Result<()> {
        let b = &self.search_box;
        for i in 0..3 {
            if !(b.lo[i] <= 1.0 && 1.0 <= b.hi[i]) || !b.lo[i].is_finite() || !b.hi[i].is_finite() {
                return Err(Error::InvalidParameter {
                    name: "search_box",
                    reason: format!(
                        "component {i} must satisfy lo <= 1 <= hi, got [{}, {}]",
                        b.lo[i], b.hi[i]
                    ),
                });
            }
        }
        if self.budget == 0 {
            return Err(Error::InvalidParameter {
                name: "budget",
                reason: "must be at least 1".into(),
            });
        }
        if self.train_paths == 0 || self.test_paths == 0 {
            return Err(Error::InvalidParameter {
                name: "train_paths",
                reason: "train_paths and test_paths must be at least 1".into(),
            });
        }
        if self.train_seed == self.test_seed {
            return Err(Error::InvalidParameter {
                name: "test_seed",
                reason: "train and test seeds must differ".into(),
            });
        }
        Ok(())
    }

    pub fn train_set(&self) -> SeedSet {
        SeedSet {
            master_seed: self.train_seed,
            paths: self.train_paths,
        }
    }

    pub fn test_set(&self) -> SeedSet {
        SeedSet {
            master_seed: self.test_seed,
            paths: self.test_paths,
        }
    }
}

fn objective_value(objective: Objective, gamma: f64, pnl: &[f64], summary: &Summary) -> f64 {
    match objective {
        Objective::MeanPnl => summary.mean_pnl,
        Objective::Sharpe => summary.sharpe.unwrap_or(0.0),
        Objective::MeanUtility => {
            let exps: Vec<f64> = pnl.iter().map(|p| -gamma * p).collect();
            let max = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = exps.iter().map(|e| (e - max).exp()).sum();
            let log_mean = max + (sum / pnl.len() as f64).ln();
            -log_mean / gamma
        }
    }
}

/// Theta-strategy terminal statistics over a seed set.
pub fn evaluate_summary(
    theta: ThetaParams,
    cell: &CellConfig,
    seeds: &SeedSet,
) -> Result<(Summary, Vec<f64>)> {
    let cell = cell
        .clone()
        .with_strategies(&[StrategyKind::Theta])
        .with_theta(theta);
    let outcomes = run_paths(&cell, seeds.master_seed, seeds.paths)?;
    let samples: Vec<(f64, i64)> = outcomes
        .iter()
        .map(|o| {
            let a = o.get(StrategyKind::Theta).expect("theta agent");
            (a.pnl, a.inventory)
        })
        .collect();
    let pnl = samples.iter().map(|s| s.0).collect();
    Ok((aggregate(&samples)?, pnl))
}

/// Objective of the theta strategy with multipliers `theta` over `seeds`.
pub fn evaluate_candidate(
    theta: ThetaParams,
    cell: &CellConfig,
    seeds: &SeedSet,
    objective: Objective,
) -> Result<f64> {
    let (summary, pnl) = evaluate_summary(theta, cell, seeds)?;
    Ok(objective_value(objective, cell.gamma, &pnl, &summary))
}

/// Outcome of tuning one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneReport {
    pub best: ThetaParams,
    pub train_objective: f64,
    pub test_objective: f64,
    pub identity_train_objective: f64,
    pub identity_test_objective: f64,
    pub test_summary: Summary,
    pub identity_test_summary: Summary,
    pub evaluations: usize,
    /// The local polish was cut short by the budget rather than converging.
    pub budget_exhausted: bool,
    /// Master seeds consumed while searching, one entry per evaluation.
    pub search_seed_log: Vec<u64>,
}

/// Halton point `index` (1-based) in bases 2, 3, 5.
pub fn halton(index: u64) -> [f64; 3] {
    fn radical_inverse(mut i: u64, base: u64) -> f64 {
        let mut f = 1.0;
        let mut r = 0.0;
        let b = base as f64;
        while i > 0 {
            f /= b;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    }
    [
        radical_inverse(index, 2),
        radical_inverse(index, 3),
        radical_inverse(index, 5),
    ]
}

struct Search<'a> {
    cell: &'a CellConfig,
    seeds: SeedSet,
    objective: Objective,
    budget: usize,
    evaluations: usize,
    log: Vec<u64>,
    best: [f64; 3],
    best_value: f64,
}

impl Search<'_> {
    fn remaining(&self) -> usize {
        self.budget - self.evaluations
    }

    fn eval(&mut self, x: [f64; 3]) -> Result<f64> {
        self.evaluations += 1;
        self.log.push(self.seeds.master_seed);
        let v = evaluate_candidate(
            ThetaParams::from_array(x),
            self.cell,
            &self.seeds,
            self.objective,
        )?;
        if v > self.best_value {
            self.best_value = v;
            self.best = x;
        }
        Ok(v)
    }
}

/// Box-clamped Nelder-Mead maximisation from `start`. Returns true when the
/// budget ran out before the simplex collapsed.
fn polish(
    search: &mut Search<'_>,
    bounds: &SearchBox,
    start: [f64; 3],
    start_value: f64,
) -> Result<bool> {
    const TOL: f64 = 1e-4;
    if search.remaining() == 0 {
        return Ok(true);
    }
    let mut simplex: Vec<([f64; 3], f64)> = vec![(start, start_value)];
    for i in 0..3 {
        if search.remaining() == 0 {
            return Ok(true);
        }
        let step = 0.1 * bounds.width(i);
        let mut v = start;
        v[i] = if v[i] + step <= bounds.hi[i] {
            v[i] + step
        } else {
            v[i] - step
        };
        let f = search.eval(v)?;
        simplex.push((v, f));
    }
    let width: f64 = (0..3)
        .map(|i| bounds.width(i))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);

    loop {
        // best first
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let diameter = simplex
            .iter()
            .skip(1)
            .map(|(v, _)| {
                (0..3)
                    .map(|i| (v[i] - simplex[0].0[i]).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < TOL * width {
            return Ok(false);
        }
        if search.remaining() == 0 {
            return Ok(true);
        }
        let mut centroid = [0.0; 3];
        for (v, _) in &simplex[..3] {
            for i in 0..3 {
                centroid[i] += v[i] / 3.0;
            }
        }
        let worst = simplex[3];
        let towards = |t: f64| {
            let mut p = [0.0; 3];
            for i in 0..3 {
                p[i] = centroid[i] + t * (worst.0[i] - centroid[i]);
            }
            bounds.clamp(p)
        };
        let reflected = towards(-1.0);
        let fr = search.eval(reflected)?;
        if fr > simplex[0].1 {
            if search.remaining() == 0 {
                simplex[3] = (reflected, fr);
                continue;
            }
            let expanded = towards(-2.0);
            let fe = search.eval(expanded)?;
            simplex[3] = if fe > fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr > simplex[2].1 {
            simplex[3] = (reflected, fr);
        } else {
            if search.remaining() == 0 {
                return Ok(true);
            }
            let contracted = if fr > worst.1 {
                towards(-0.5)
            } else {
                towards(0.5)
            };
            let fc = search.eval(contracted)?;
            if fc > worst.1.max(fr) {
                simplex[3] = (contracted, fc);
            } else {
                for j in 1..4 {
                    if search.remaining() == 0 {
                        return Ok(true);
                    }
                    let (best, other) = (simplex[0].0, simplex[j].0);
                    let p: [f64; 3] = std::array::from_fn(|i| best[i] + 0.5 * (other[i] - best[i]));
                    let f = search.eval(p)?;
                    simplex[j] = (p, f);
                }
            }
        }
    }
}

/// Tunes the theta multipliers for one cell and scores the result on the
/// held-out seeds.
pub fn tune(config: &TuneConfig, cell: &CellConfig) -> Result<TuneReport> {
    config.validate()?;
    cell.validate()?;
    let bounds = config.search_box;
    let identity = ThetaParams::IDENTITY.to_array();
    let mut search = Search {
        cell,
        seeds: config.train_set(),
        objective: config.objective,
        budget: config.budget,
        evaluations: 0,
        log: Vec::new(),
        best: identity,
        best_value: f64::NEG_INFINITY,
    };
    let identity_train = search.eval(identity)?;

    let explore = config.budget.div_ceil(2);
    let mut index = 1u64;
    while search.evaluations < explore {
        let x = bounds.scale_unit(halton(index));
        index += 1;
        search.eval(x)?;
    }

    let (start, start_value) = (search.best, search.best_value);
    let budget_exhausted = polish(&mut search, &bounds, start, start_value)?;

    let best = ThetaParams::from_array(search.best);
    let test = config.test_set();
    let (test_summary, test_pnl) = evaluate_summary(best, cell, &test)?;
    let (identity_summary, identity_pnl) = evaluate_summary(ThetaParams::IDENTITY, cell, &test)?;
    Ok(TuneReport {
        best,
        train_objective: search.best_value,
        test_objective: objective_value(config.objective, cell.gamma, &test_pnl, &test_summary),
        identity_train_objective: identity_train,
        identity_test_objective: objective_value(
            config.objective,
            cell.gamma,
            &identity_pnl,
            &identity_summary,
        ),
        test_summary,
        identity_test_summary: identity_summary,
        evaluations: search.evaluations,
        budget_exhausted,
        search_seed_log: search.log,
    })
}

/// One tuned cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaRow {
    pub gamma: f64,
    pub xi: f64,
    pub theta0: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub train_objective: f64,
    pub test_objective: f64,
}

impl ThetaRow {
    pub fn theta(&self) -> ThetaParams {
        ThetaParams::new(self.theta0, self.theta1, self.theta2)
    }

    pub fn from_report(gamma: f64, xi: f64, report: &TuneReport) -> Self {
        Self {
            gamma,
            xi,
            theta0: report.best.price,
            theta1: report.best.driver,
            theta2: report.best.own,
            train_objective: report.train_objective,
            test_objective: report.test_objective,
        }
    }
}

/// Tuned multipliers per `(gamma, xi)`; the `thetas.csv` file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ThetaTable {
    pub rows: Vec<ThetaRow>,
}

pub const THETA_COLUMNS: [&str; 7] = [
    "gamma",
    "xi",
    "theta0",
    "theta1",
    "theta2",
    "train_objective",
    "test_objective",
];

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

impl ThetaTable {
    pub fn lookup(&self, gamma: f64, xi: f64) -> Option<ThetaParams> {
        self.rows
            .iter()
            .find(|r| same(r.gamma, gamma) && same(r.xi, xi))
            .map(ThetaRow::theta)
    }

    /// Writes the table. Grid coordinates and multipliers keep full precision
    /// so that the file can be fed back into a sweep; objectives use six
    /// significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(THETA_COLUMNS)?;
        for r in &self.rows {
            w.write_record([
                r.gamma.to_string(),
                r.xi.to_string(),
                r.theta0.to_string(),
                r.theta1.to_string(),
                r.theta2.to_string(),
                crate::cli::output::sig6(r.train_objective),
                crate::cli::output::sig6(r.test_objective),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> std::result::Result<Self, csv::Error> {
        let mut r = csv::Reader::from_reader(reader);
        let rows = r
            .deserialize()
            .collect::<std::result::Result<Vec<ThetaRow>, _>>()?;
        Ok(Self { rows })
    }
}

/// Tunes every `(gamma, xi)` cell independently.
pub fn tune_grid(
    config: &TuneConfig,
    base: &CellConfig,
    cells: &[(f64, f64)],
) -> Result<(ThetaTable, Vec<TuneReport>)> {
    let mut table = ThetaTable::default();
    let mut reports = Vec::with_capacity(cells.len());
    for &(gamma, xi) in cells {
        let mut cell = base.clone();
        cell.gamma = gamma;
        cell.xi = xi;
        let report = tune(config, &cell)?;
        table.rows.push(ThetaRow::from_report(gamma, xi, &report));
        reports.push(report);
    }
    Ok((table, reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::MarketParams;

    fn small_config(budget: usize) -> TuneConfig {
        TuneConfig {
            budget,
            train_paths: 40,
            test_paths: 40,
            ..TuneConfig::default()
        }
    }

    fn cell() -> CellConfig {
        CellConfig::new(MarketParams::default(), 0.5, 5.0)
    }

    #[test]
    fn halton_points_are_in_unit_cube_and_distinct() {
        assert_eq!(halton(1), [0.5, 1.0 / 3.0, 0.2]);
        let pts: Vec<_> = (1..50).map(halton).collect();
        assert!(pts.iter().all(|p| p.iter().all(|v| (0.0..1.0).contains(v))));
        for i in 0..pts.len() {
            for j in 0..i {
                assert_ne!(pts[i], pts[j]);
            }
        }
    }

    #[test]
    fn validation() {
        let mut c = TuneConfig::default();
        assert!(c.validate().is_ok());
        c.search_box.lo[1] = 1.5;
        assert!(c.validate().is_err());
        let c = TuneConfig {
            budget: 0,
            ..TuneConfig::default()
        };
        assert!(c.validate().is_err());
        let c = TuneConfig {
            test_seed: 1_000_003,
            ..TuneConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn identity_candidate_equals_performative() {
        let seeds = SeedSet {
            master_seed: 4,
            paths: 30,
        };
        let theta =
            evaluate_candidate(ThetaParams::IDENTITY, &cell(), &seeds, Objective::MeanPnl).unwrap();
        let perf = crate::harness::run_cell(
            &cell().with_strategies(&[StrategyKind::Performative]),
            4,
            30,
        )
        .unwrap();
        assert_eq!(theta, perf[0].1.mean_pnl);
    }

    #[test]
    fn degenerate_market_objective_is_zero() {
        let market = MarketParams {
            volatility: 0.0,
            order_flow_scale: 0.0,
            ..MarketParams::default()
        };
        let c = CellConfig::new(market, 0.5, 5.0);
        let seeds = SeedSet {
            master_seed: 1,
            paths: 5,
        };
        for theta in [ThetaParams::IDENTITY, ThetaParams::new(0.0, 2.0, 0.3)] {
            for obj in [
                Objective::MeanPnl,
                Objective::Sharpe,
                Objective::MeanUtility,
            ] {
                assert_eq!(evaluate_candidate(theta, &c, &seeds, obj).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn budget_one_returns_identity() {
        let r = tune(&small_config(1), &cell()).unwrap();
        assert_eq!(r.best, ThetaParams::IDENTITY);
        assert_eq!(r.evaluations, 1);
        assert!(r.budget_exhausted);
        assert_eq!(r.train_objective, r.identity_train_objective);
    }

    #[test]
    fn tuning_never_loses_to_identity_and_is_reproducible() {
        let cfg = small_config(16);
        let a = tune(&cfg, &cell()).unwrap();
        let b = tune(&cfg, &cell()).unwrap();
        assert_eq!(a, b);
        assert!(a.train_objective >= a.identity_train_objective);
        assert!(a.evaluations <= 16);
        assert!(SearchBox::default().contains(a.best.to_array()));
        assert!(a.search_seed_log.iter().all(|s| *s == cfg.train_seed));
        assert_eq!(a.search_seed_log.len(), a.evaluations);
    }

    #[test]
    fn theta_table_round_trip_and_lookup() {
        let table = ThetaTable {
            rows: vec![ThetaRow {
                gamma: 0.5,
                xi: 0.3,
                theta0: 0.123_456_789_012,
                theta1: 1.0,
                theta2: 0.25,
                train_objective: 70.123_456,
                test_objective: 69.9,
            }],
        };
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("gamma,xi,theta0,theta1,theta2,train_objective,test_objective\n"));
        let back = ThetaTable::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.lookup(0.5, 0.3).unwrap(), table.rows[0].theta());
        assert!(back.lookup(0.5, 0.31).is_none());
    }
}
