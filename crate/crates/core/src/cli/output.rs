//! Flat-file outputs: CSV tables, the run manifest, and atomic publication.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::harness::{SessionTrace, StrategyKind, SweepRecord};

pub type BoxResult<T> = std::result::Result<T, Box<dyn std::error::Error + Send + Sync>>;

pub const SCHEMA_VERSION: &str = "perfmm-csv/1";

pub const SWEEP_COLUMNS: [&str; 10] = [
    "strategy",
    "gamma",
    "xi",
    "mean_pnl",
    "std_pnl",
    "sharpe",
    "mean_term_inv",
    "std_term_inv",
    "paths",
    "seed",
];

pub const DECOMPOSE_COLUMNS: [&str; 4] = ["t", "impact", "deterministic", "mid_price"];

pub const SESSION_COLUMNS: [&str; 13] = [
    "step",
    "t",
    "mid_price",
    "as_reservation",
    "as_ask",
    "as_bid",
    "as_inventory",
    "as_pnl",
    "perf_reservation",
    "perf_ask",
    "perf_bid",
    "perf_inventory",
    "perf_pnl",
];

/// Formats `x` with six significant digits, like C's `%.6g`.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let s = if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // rounding may carry into a new digit (e.g. 999999.5), which is fine
        trim_zeros(&s)
    } else {
        let s = format!("{x:.5e}");
        match s.split_once('e') {
            Some((m, e)) => format!("{}e{}", trim_zeros(m), e),
            None => s,
        }
    };
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// One parsed `sweep.csv` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub strategy: String,
    pub gamma: f64,
    pub xi: f64,
    pub mean_pnl: f64,
    pub std_pnl: f64,
    pub sharpe: Option<f64>,
    pub mean_term_inv: f64,
    pub std_term_inv: f64,
    pub paths: usize,
    pub seed: u64,
}

impl SweepRow {
    pub fn std_error(&self) -> f64 {
        self.std_pnl / (self.paths as f64).sqrt()
    }
}

pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SWEEP_COLUMNS)?;
    for r in records {
        w.write_record([
            r.strategy.label().to_string(),
            sig6(r.gamma),
            sig6(r.xi),
            sig6(r.mean_pnl),
            sig6(r.std_pnl),
            r.sharpe.map(sig6).unwrap_or_default(),
            sig6(r.mean_terminal_inventory),
            sig6(r.std_terminal_inventory),
            r.paths.to_string(),
            r.master_seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: std::io::Read>(reader: R) -> csv::Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize().collect()
}

pub fn write_decompose_csv<W: Write>(trace: &SessionTrace, writer: W) -> csv::Result<()> {
    let d = &trace.decomposition;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(DECOMPOSE_COLUMNS)?;
    for n in 0..d.len() {
        w.write_record([
            sig6(d.times[n]),
            sig6(d.impact_series[n]),
            sig6(d.deterministic_series[n]),
            sig6(d.full_series[n]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_session_csv<W: Write>(trace: &SessionTrace, writer: W) -> csv::Result<()> {
    let d = &trace.decomposition;
    let perf = trace.agent(StrategyKind::Performative);
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SESSION_COLUMNS)?;
    for n in 0..d.len() {
        let mid = d.full_series[n];
        let mut row = vec![n.to_string(), sig6(d.times[n]), sig6(mid)];
        for agent in [Some(&trace.driver), perf] {
            match agent {
                Some(a) => {
                    match a.decisions.get(n) {
                        Some(q) => {
                            row.push(sig6(q.reservation));
                            row.push(sig6(q.ask_price(mid)));
                            row.push(sig6(q.bid_price(mid)));
                        }
                        None => row.extend([String::new(), String::new(), String::new()]),
                    }
                    row.push(a.inventory[n].to_string());
                    row.push(sig6(a.pnl[n]));
                }
                None => row.extend(std::iter::repeat_n(String::new(), 5)),
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: String,
    pub tool_version: String,
    pub command: String,
    pub master_seed: Option<u64>,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub duration_seconds: f64,
}

/// Stages files in the output directory under temporary names and publishes
/// them with renames; the manifest goes last. Dropping an uncommitted batch
/// removes whatever it staged.
pub struct OutputBatch {
    dir: PathBuf,
    staged: Vec<(PathBuf, PathBuf)>,
    committed: bool,
}

impl OutputBatch {
    /// Creates `dir` if needed and removes a stale manifest so that its
    /// presence only ever marks a completed run.
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        let manifest = dir.join("manifest.json");
        if manifest.exists() {
            fs::remove_file(&manifest)?;
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            staged: Vec::new(),
            committed: false,
        })
    }

    pub fn stage<F>(&mut self, name: &str, write: F) -> BoxResult<()>
    where
        F: FnOnce(&mut fs::File) -> BoxResult<()>,
    {
        let final_path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        let mut file = fs::File::create(&tmp)?;
        self.staged.push((tmp.clone(), final_path));
        write(&mut file)?;
        file.sync_all()?;
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        self.staged
            .iter()
            .map(|(_, p)| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect()
    }

    /// Renames every staged file into place, then writes the manifest.
    pub fn commit(mut self, manifest: &RunManifest) -> BoxResult<()> {
        for (tmp, path) in &self.staged {
            fs::rename(tmp, path)?;
        }
        self.committed = true;
        let tmp = self.dir.join(".manifest.json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(manifest)?)?;
        fs::rename(&tmp, self.dir.join("manifest.json"))?;
        Ok(())
    }
}

impl Drop for OutputBatch {
    fn drop(&mut self) {
        if !self.committed {
            for (tmp, _) in &self.staged {
                let _ = fs::remove_file(tmp);
            }
        }
    }
}
