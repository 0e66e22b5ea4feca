//! Closed-loop experiments.
//!
//! On every path one inventory-model driver quotes, trades, and its inventory
//! feeds the price drift. Shadow agents (symmetric, performative, theta) quote
//! against the same price path with their own fill draws and never move the
//! price. Price noise is shared by all agents on a path.
//!
//! Seeding: the price noise of path `i` comes from
//! `(master_seed, i, Price)` and each agent's fill uniforms from
//! `(master_seed, i, Fills(slot))` (see [`crate::rng`]).

pub mod aggregate;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    simulate_price_path, NoiseSource, PathDecomposition, PriceProcess, Stepper, ZeroNoise,
};
use crate::error::{require_positive, Error, Result};
use crate::execution::{AgentLedger, FillModel, FillRule};
use crate::params::MarketParams;
use crate::rng::{FillStream, NormalStream};
use crate::strategies::{
    as_quotes, performative_quotes, symmetric_quotes, theta_quotes, QuoteDecision, ThetaParams,
};
use crate::tuner::ThetaTable;

pub use aggregate::{aggregate, compensated_sum, mean_std, Summary};

/// The four quoting strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    As,
    Symmetric,
    Performative,
    Theta,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::As,
        StrategyKind::Symmetric,
        StrategyKind::Performative,
        StrategyKind::Theta,
    ];

    pub fn label(self) -> &'static str {
        match self {
            StrategyKind::As => "as",
            StrategyKind::Symmetric => "symmetric",
            StrategyKind::Performative => "performative",
            StrategyKind::Theta => "theta",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.label() == label)
    }

    /// Fill substream slot. The theta agent shares the performative slot so
    /// that the two are compared under common fill draws.
    pub fn fill_slot(self, driver: bool) -> u32 {
        match (self, driver) {
            (StrategyKind::As, true) => 0,
            (StrategyKind::As, false) => 1,
            (StrategyKind::Symmetric, _) => 2,
            (StrategyKind::Performative, _) | (StrategyKind::Theta, _) => 3,
        }
    }
}

/// Everything needed to simulate one `(gamma, xi)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellConfig {
    pub market: MarketParams,
    pub gamma: f64,
    pub xi: f64,
    pub strategies: Vec<StrategyKind>,
    pub theta: ThetaParams,
    pub impact_multiplier: f64,
    pub initial_price: f64,
    pub fill_rule: FillRule,
    pub stepper: Stepper,
    /// Report the inventory-model row from an independent shadow agent
    /// instead of the driver's own ledger.
    pub as_shadow: bool,
    pub zero_noise: bool,
}

impl CellConfig {
    pub fn new(market: MarketParams, gamma: f64, xi: f64) -> Self {
        Self {
            market,
            gamma,
            xi,
            strategies: StrategyKind::ALL.to_vec(),
            theta: ThetaParams::IDENTITY,
            impact_multiplier: 1.0,
            initial_price: 0.0,
            fill_rule: FillRule::default(),
            stepper: Stepper::default(),
            as_shadow: false,
            zero_noise: false,
        }
    }

    pub fn with_strategies(mut self, strategies: &[StrategyKind]) -> Self {
        self.strategies = strategies.to_vec();
        self
    }

    pub fn with_theta(mut self, theta: ThetaParams) -> Self {
        self.theta = theta;
        self
    }

    pub fn process(&self) -> Result<PriceProcess> {
        Ok(PriceProcess::new(&self.market, self.xi, self.gamma)?
            .with_impact_multiplier(self.impact_multiplier)?
            .with_stepper(self.stepper))
    }

    pub fn validate(&self) -> Result<()> {
        self.process()?;
        if !self.initial_price.is_finite() {
            return Err(Error::InvalidParameter {
                name: "initial_price",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }

    pub fn fill_model(&self) -> FillModel {
        FillModel {
            order_flow_scale: self.market.order_flow_scale,
            book_decay: self.market.book_decay,
            step: self.market.step,
            rule: self.fill_rule,
        }
    }
}

/// Terminal state of one agent on one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgentOutcome {
    pub pnl: f64,
    pub inventory: i64,
}

/// Per-step trace of one agent, kept only when requested.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct AgentTrace {
    pub decisions: Vec<QuoteDecision>,
    pub inventory: Vec<i64>,
    /// Mark-to-market PnL at each grid point `0..=N`.
    pub pnl: Vec<f64>,
}

/// Result of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome {
    /// One entry per configured strategy, in configuration order.
    pub outcomes: Vec<(StrategyKind, AgentOutcome)>,
    pub driver: AgentOutcome,
    pub decomposition: Option<PathDecomposition>,
    pub traces: Vec<(StrategyKind, AgentTrace)>,
    pub driver_trace: Option<AgentTrace>,
}

impl PathOutcome {
    pub fn get(&self, kind: StrategyKind) -> Option<AgentOutcome> {
        self.outcomes
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, o)| *o)
    }
}

struct Agent {
    kind: StrategyKind,
    ledger: AgentLedger,
    fills: FillStream,
    trace: Option<AgentTrace>,
}

impl Agent {
    fn new(kind: StrategyKind, driver: bool, seed: u64, path: u64, detail: bool) -> Self {
        Self {
            kind,
            ledger: AgentLedger::new(0).without_history(),
            fills: FillStream::new(seed, path, kind.fill_slot(driver)),
            trace: detail.then(AgentTrace::default),
        }
    }

    fn quote(&self, cell: &CellConfig, mid: f64, driver_q: f64, tau: f64) -> QuoteDecision {
        let m = &cell.market;
        let (g, sig, k, xi) = (cell.gamma, m.volatility, m.book_decay, cell.xi);
        let own = self.ledger.inventory as f64;
        match self.kind {
            StrategyKind::As => as_quotes(mid, own, g, sig, k, tau),
            StrategyKind::Symmetric => symmetric_quotes(mid, g, k),
            StrategyKind::Performative => {
                performative_quotes(mid, driver_q, own, xi, g, sig, k, tau)
            }
            StrategyKind::Theta => theta_quotes(mid, driver_q, own, xi, g, sig, k, tau, cell.theta),
        }
    }

    fn act(
        &mut self,
        cell: &CellConfig,
        model: &FillModel,
        step: usize,
        mid: f64,
        driver_q: f64,
        tau: f64,
    ) {
        let decision = self.quote(cell, mid, driver_q, tau);
        if let Some(t) = self.trace.as_mut() {
            t.decisions.push(decision);
            t.inventory.push(self.ledger.inventory);
            t.pnl.push(self.ledger.mark_to_market(mid));
        }
        let u = self.fills.next_pair();
        self.ledger.step_fills(step, &decision, mid, u, model);
    }

    fn finish(mut self, mid: f64) -> (StrategyKind, AgentOutcome, Option<AgentTrace>) {
        if let Some(t) = self.trace.as_mut() {
            t.inventory.push(self.ledger.inventory);
            t.pnl.push(self.ledger.mark_to_market(mid));
        }
        let outcome = AgentOutcome {
            pnl: self.ledger.mark_to_market(mid),
            inventory: self.ledger.inventory,
        };
        (self.kind, outcome, self.trace)
    }
}

/// Simulates path `path_index` of a cell. With `detail`, the decomposition
/// series and per-agent traces are kept as well.
pub fn run_path(
    cell: &CellConfig,
    master_seed: u64,
    path_index: u64,
    detail: bool,
) -> Result<PathOutcome> {
    let process = cell.process()?;
    let model = cell.fill_model();
    let mut driver = Agent::new(StrategyKind::As, true, master_seed, path_index, detail);
    let mut shadows: Vec<Agent> = cell
        .strategies
        .iter()
        .filter(|k| **k != StrategyKind::As || cell.as_shadow)
        .map(|k| Agent::new(*k, false, master_seed, path_index, detail))
        .collect();

    let mut loop_body = |state: &crate::dynamics::PathState| -> i64 {
        let tau = process.horizon - state.time;
        let driver_q = process.effective_inventory(state.driver_inventory);
        for agent in shadows.iter_mut() {
            agent.act(cell, &model, state.step, state.mid, driver_q, tau);
        }
        driver.act(cell, &model, state.step, state.mid, driver_q, tau);
        driver.ledger.inventory
    };
    let decomposition = if cell.zero_noise {
        simulate_price_path(&process, cell.initial_price, &mut loop_body, &mut ZeroNoise)
    } else {
        let mut noise = NormalStream::new(master_seed, path_index);
        simulate_price_path(
            &process,
            cell.initial_price,
            &mut loop_body,
            &mut noise as &mut dyn NoiseSource,
        )
    };
    let terminal = decomposition.terminal_price();

    let (_, driver_outcome, driver_trace) = driver.finish(terminal);
    let mut finished: Vec<_> = shadows.into_iter().map(|a| a.finish(terminal)).collect();
    let mut outcomes = Vec::with_capacity(cell.strategies.len());
    let mut traces = Vec::new();
    for kind in &cell.strategies {
        if *kind == StrategyKind::As && !cell.as_shadow {
            outcomes.push((*kind, driver_outcome));
            if let Some(t) = &driver_trace {
                traces.push((*kind, t.clone()));
            }
            continue;
        }
        let idx = finished
            .iter()
            .position(|(k, _, _)| k == kind)
            .expect("agent per strategy");
        let (k, o, t) = finished.swap_remove(idx);
        outcomes.push((k, o));
        if let Some(t) = t {
            traces.push((k, t));
        }
    }
    Ok(PathOutcome {
        outcomes,
        driver: driver_outcome,
        decomposition: detail.then_some(decomposition),
        traces,
        driver_trace,
    })
}

/// Runs `paths` paths of a cell (in parallel on the current rayon pool) and
/// returns their outcomes in path order.
pub fn run_paths(cell: &CellConfig, master_seed: u64, paths: usize) -> Result<Vec<PathOutcome>> {
    cell.validate()?;
    (0..paths as u64)
        .into_par_iter()
        .map(|i| run_path(cell, master_seed, i, false))
        .collect()
}

/// Per-strategy summaries over `paths` paths of one cell.
pub fn run_cell(
    cell: &CellConfig,
    master_seed: u64,
    paths: usize,
) -> Result<Vec<(StrategyKind, Summary)>> {
    let outcomes = run_paths(cell, master_seed, paths)?;
    cell.strategies
        .iter()
        .map(|kind| {
            let samples: Vec<(f64, i64)> = outcomes
                .iter()
                .map(|o| {
                    let a = o.get(*kind).expect("strategy present");
                    (a.pnl, a.inventory)
                })
                .collect();
            Ok((*kind, aggregate(&samples)?))
        })
        .collect()
}

/// Where the theta strategy gets its multipliers.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaSource {
    Fixed(ThetaParams),
    Table(ThetaTable),
}

impl Default for ThetaSource {
    fn default() -> Self {
        ThetaSource::Fixed(ThetaParams::IDENTITY)
    }
}

impl ThetaSource {
    pub fn lookup(&self, gamma: f64, xi: f64) -> Result<ThetaParams> {
        match self {
            ThetaSource::Fixed(t) => Ok(*t),
            ThetaSource::Table(table) => table
                .lookup(gamma, xi)
                .ok_or(Error::MissingTheta { gamma, xi }),
        }
    }
}

/// A full sweep over `(gamma, xi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub market: MarketParams,
    pub gammas: Vec<f64>,
    pub xis: Vec<f64>,
    pub paths_per_cell: usize,
    pub master_seed: u64,
    pub strategies: Vec<StrategyKind>,
    pub theta: ThetaSource,
    pub impact_multiplier: f64,
    pub initial_price: f64,
    pub fill_rule: FillRule,
    pub stepper: Stepper,
    pub as_shadow: bool,
}

/// `count` points from `lo` to `hi` inclusive, log-spaced.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| {
                    if i == count - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// `count` points from `lo` to `hi` inclusive, evenly spaced.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            market: MarketParams::default(),
            gammas: vec![0.1, 0.5, 0.8],
            xis: log_grid(0.3, 20.0, 20),
            paths_per_cell: 1000,
            master_seed: 20_250_101,
            strategies: StrategyKind::ALL.to_vec(),
            theta: ThetaSource::default(),
            impact_multiplier: 1.0,
            initial_price: 0.0,
            fill_rule: FillRule::default(),
            stepper: Stepper::default(),
            as_shadow: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.market.validate()?;
        if self.paths_per_cell == 0 {
            return Err(Error::InvalidParameter {
                name: "paths_per_cell",
                reason: "must be at least 1".into(),
            });
        }
        if self.gammas.is_empty() {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: "list is empty".into(),
            });
        }
        if self.xis.is_empty() {
            return Err(Error::InvalidParameter {
                name: "xi",
                reason: "list is empty".into(),
            });
        }
        if self.strategies.is_empty() {
            return Err(Error::InvalidParameter {
                name: "strategies",
                reason: "list is empty".into(),
            });
        }
        for g in &self.gammas {
            require_positive("gamma", *g)?;
        }
        for x in &self.xis {
            require_positive("xi", *x)?;
        }
        require_positive("impact_multiplier", self.impact_multiplier)?;
        if self.strategies.contains(&StrategyKind::Theta) {
            for g in &self.gammas {
                for x in &self.xis {
                    self.theta.lookup(*g, *x)?;
                }
            }
        }
        Ok(())
    }

    pub fn cell(&self, gamma: f64, xi: f64) -> Result<CellConfig> {
        let theta = if self.strategies.contains(&StrategyKind::Theta) {
            self.theta.lookup(gamma, xi)?
        } else {
            ThetaParams::IDENTITY
        };
        Ok(CellConfig {
            market: self.market,
            gamma,
            xi,
            strategies: self.strategies.clone(),
            theta,
            impact_multiplier: self.impact_multiplier,
            initial_price: self.initial_price,
            fill_rule: self.fill_rule,
            stepper: self.stepper,
            as_shadow: self.as_shadow,
            zero_noise: false,
        })
    }

    /// All `(gamma, xi)` cells, gamma-major.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.gammas
            .iter()
            .flat_map(move |g| self.xis.iter().map(move |x| (*g, *x)))
    }
}

/// Aggregated metrics of one `(strategy, gamma, xi)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub strategy: StrategyKind,
    pub gamma: f64,
    pub xi: f64,
    pub mean_pnl: f64,
    pub std_pnl: f64,
    pub sharpe: Option<f64>,
    pub mean_terminal_inventory: f64,
    pub std_terminal_inventory: f64,
    pub paths: usize,
    pub master_seed: u64,
}

impl SweepRecord {
    fn from_summary(
        strategy: StrategyKind,
        gamma: f64,
        xi: f64,
        s: &Summary,
        master_seed: u64,
    ) -> Self {
        Self {
            strategy,
            gamma,
            xi,
            mean_pnl: s.mean_pnl,
            std_pnl: s.std_pnl,
            sharpe: s.sharpe,
            mean_terminal_inventory: s.mean_terminal_inventory,
            std_terminal_inventory: s.std_terminal_inventory,
            paths: s.count,
            master_seed,
        }
    }

    pub fn std_error(&self) -> f64 {
        self.std_pnl / (self.paths as f64).sqrt()
    }
}

/// One record per `(gamma, xi, strategy)`, gamma-major then xi then strategy.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    let mut records = Vec::new();
    for (gamma, xi) in config.cells() {
        let cell = config.cell(gamma, xi)?;
        for (kind, summary) in run_cell(&cell, config.master_seed, config.paths_per_cell)? {
            records.push(SweepRecord::from_summary(
                kind,
                gamma,
                xi,
                &summary,
                config.master_seed,
            ));
        }
    }
    Ok(records)
}

/// Single-path session: decomposition series plus quotes, inventories and
/// PnL of every agent.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionTrace {
    pub decomposition: PathDecomposition,
    pub driver: AgentTrace,
    pub agents: Vec<(StrategyKind, AgentTrace)>,
}

impl SessionTrace {
    pub fn agent(&self, kind: StrategyKind) -> Option<&AgentTrace> {
        self.agents.iter().find(|(k, _)| *k == kind).map(|(_, t)| t)
    }
}

/// Runs path 0 of `cell` under `seed` with full tracing.
pub fn decompose_run(cell: &CellConfig, seed: u64) -> Result<SessionTrace> {
    cell.validate()?;
    let out = run_path(cell, seed, 0, true)?;
    Ok(SessionTrace {
        decomposition: out.decomposition.expect("detail requested"),
        driver: out.driver_trace.expect("detail requested"),
        agents: out.traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(xi: f64) -> CellConfig {
        CellConfig::new(MarketParams::default(), 0.5, xi)
    }

    #[test]
    fn degenerate_market_yields_zero() {
        let market = MarketParams {
            volatility: 0.0,
            order_flow_scale: 0.0,
            ..MarketParams::default()
        };
        let c = CellConfig::new(market, 0.5, 5.0);
        let out = run_path(&c, 1, 0, false).unwrap();
        for (_, o) in &out.outcomes {
            assert_eq!(o.pnl, 0.0);
            assert_eq!(o.inventory, 0);
        }
    }

    #[test]
    fn run_path_is_deterministic() {
        let c = cell(5.0);
        assert_eq!(
            run_path(&c, 9, 4, true).unwrap(),
            run_path(&c, 9, 4, true).unwrap()
        );
    }

    #[test]
    fn shadow_agents_do_not_move_price_or_driver() {
        let full = run_path(&cell(5.0), 3, 2, true).unwrap();
        let alone = run_path(&cell(5.0).with_strategies(&[StrategyKind::As]), 3, 2, true).unwrap();
        assert_eq!(full.decomposition, alone.decomposition);
        assert_eq!(full.driver, alone.driver);
        assert_eq!(full.driver_trace, alone.driver_trace);
    }

    #[test]
    fn identity_theta_matches_performative_exactly() {
        let out = run_path(&cell(2.0), 5, 0, false).unwrap();
        assert_eq!(
            out.get(StrategyKind::Theta),
            out.get(StrategyKind::Performative)
        );
    }

    #[test]
    fn as_shadow_flag_uses_independent_agent() {
        let mut c = cell(5.0);
        c.as_shadow = true;
        let out = run_path(&c, 3, 0, false).unwrap();
        let driver_row = run_path(&cell(5.0), 3, 0, false).unwrap();
        assert_eq!(out.driver, driver_row.driver);
        assert_ne!(out.get(StrategyKind::As), Some(out.driver));
    }

    #[test]
    fn grids() {
        let g = log_grid(0.3, 20.0, 20);
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 0.3);
        assert_eq!(g[19], 20.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        let l = linear_grid(0.3, 20.0, 20);
        assert!((l[1] - l[0] - (19.7 / 19.0)).abs() < 1e-12);
    }

    #[test]
    fn single_path_sweep_has_no_sharpe() {
        let cfg = ExperimentConfig {
            gammas: vec![0.5],
            xis: vec![5.0],
            paths_per_cell: 1,
            ..ExperimentConfig::default()
        };
        let recs = run_sweep(&cfg).unwrap();
        assert_eq!(recs.len(), 4);
        assert!(recs
            .iter()
            .all(|r| r.sharpe.is_none() && r.std_pnl == 0.0 && r.paths == 1));
    }

    #[test]
    fn decomposition_lengths_and_zero_noise() {
        let mut c = cell(10.0);
        c.zero_noise = true;
        let s = decompose_run(&c, 1).unwrap();
        assert_eq!(s.decomposition.len(), 201);
        assert_eq!(
            s.decomposition.full_series,
            s.decomposition.deterministic_series
        );
        assert_eq!(s.driver.pnl.len(), 201);
        assert_eq!(s.driver.decisions.len(), 200);
        assert_eq!(
            s.agent(StrategyKind::Performative).unwrap().inventory.len(),
            201
        );
    }
}
