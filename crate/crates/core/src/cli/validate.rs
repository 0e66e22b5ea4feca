//! Re-checks the strategy ordering properties against a `sweep.csv`.
//!
//! Ordering checks read the gamma = 0.5 rows; the inventory check reads all rows.

use std::collections::BTreeMap;

use super::output::SweepRow;

/// Ordering properties are stated for this risk aversion only.
pub const ORDERING_GAMMA: f64 = 0.5;
/// Performative-over-inventory ordering is checked from this xi upwards.
pub const ORDERING_MIN_XI: f64 = 5.0;
/// Significance margin, in combined standard errors.
pub const SIGMA_MARGIN: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    Fail(String),
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub verdict: Verdict,
}

impl PropertyResult {
    pub fn passed(&self) -> bool {
        !matches!(self.verdict, Verdict::Fail(_))
    }
}

type CellKey = (u64, u64);

fn key(row: &SweepRow) -> CellKey {
    (row.gamma.to_bits(), row.xi.to_bits())
}

struct Cells<'a> {
    cells: BTreeMap<CellKey, Vec<&'a SweepRow>>,
}

impl<'a> Cells<'a> {
    fn new(rows: &'a [SweepRow]) -> Self {
        let mut cells: BTreeMap<CellKey, Vec<&SweepRow>> = BTreeMap::new();
        for r in rows {
            cells.entry(key(r)).or_default().push(r);
        }
        Self { cells }
    }

    fn pairs(&self, a: &str, b: &str) -> Vec<(&'a SweepRow, &'a SweepRow)> {
        self.cells
            .values()
            .filter(|rows| rows[0].gamma == ORDERING_GAMMA)
            .filter_map(|rows| {
                let x = rows.iter().find(|r| r.strategy == a)?;
                let y = rows.iter().find(|r| r.strategy == b)?;
                Some((*x, *y))
            })
            .collect()
    }
}

fn combined_se(a: &SweepRow, b: &SweepRow) -> f64 {
    (a.std_error().powi(2) + b.std_error().powi(2)).sqrt()
}

fn cell_name(r: &SweepRow) -> String {
    format!("gamma={} xi={}", r.gamma, r.xi)
}

fn check<'a, I, F>(name: &'static str, items: I, missing: &str, mut ok: F) -> PropertyResult
where
    I: IntoIterator<Item = (&'a SweepRow, &'a SweepRow)>,
    F: FnMut(&SweepRow, &SweepRow) -> Option<String>,
{
    let mut seen = 0;
    let mut failures = Vec::new();
    for (a, b) in items {
        seen += 1;
        if let Some(msg) = ok(a, b) {
            failures.push(format!("{}: {msg}", cell_name(a)));
        }
    }
    let verdict = if seen == 0 {
        Verdict::Skipped(missing.to_string())
    } else if failures.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail(failures.join("; "))
    };
    PropertyResult { name, verdict }
}

/// Runs every property over the rows of a sweep.
pub fn validate_rows(rows: &[SweepRow]) -> Vec<PropertyResult> {
    let cells = Cells::new(rows);
    let single_path = rows.iter().any(|r| r.paths < 2);
    let mut out = Vec::new();

    let perf_vs_as: Vec<_> = cells
        .pairs("performative", "as")
        .into_iter()
        .filter(|(p, _)| p.xi >= ORDERING_MIN_XI)
        .collect();
    out.push(check(
        "performative-mean-pnl-above-as",
        perf_vs_as.clone(),
        "no performative/as rows with gamma = 0.5 and xi >= 5",
        |p, a| {
            let margin = SIGMA_MARGIN * combined_se(p, a);
            (p.mean_pnl - a.mean_pnl < margin || p.mean_pnl <= a.mean_pnl).then(|| {
                format!(
                    "performative {} vs as {} (margin {margin:.4})",
                    p.mean_pnl, a.mean_pnl
                )
            })
        },
    ));

    let notice = "single-path sweep: dispersion-based checks need at least 2 paths per cell";
    if single_path {
        for name in [
            "performative-std-below-symmetric",
            "terminal-inventory-near-zero",
            "performative-sharpe-above-as",
        ] {
            out.push(PropertyResult {
                name,
                verdict: Verdict::Skipped(notice.into()),
            });
        }
        return out;
    }

    out.push(check(
        "performative-std-below-symmetric",
        cells.pairs("performative", "symmetric"),
        "no performative/symmetric rows with gamma = 0.5",
        |p, s| (p.std_pnl >= s.std_pnl).then(|| format!("std {} >= {}", p.std_pnl, s.std_pnl)),
    ));

    out.push(check(
        "terminal-inventory-near-zero",
        rows.iter().map(|r| (r, r)),
        "no rows",
        |r, _| {
            let bound = SIGMA_MARGIN * r.std_term_inv / (r.paths as f64).sqrt();
            (r.mean_term_inv.abs() > bound).then(|| {
                format!(
                    "{} mean inventory {} outside +-{bound:.4}",
                    r.strategy, r.mean_term_inv
                )
            })
        },
    ));

    out.push(check(
        "performative-sharpe-above-as",
        perf_vs_as,
        "no performative/as rows with gamma = 0.5 and xi >= 5",
        |p, a| match (p.sharpe, a.sharpe) {
            (Some(sp), Some(sa)) if sp > sa => None,
            (Some(sp), Some(sa)) => Some(format!("sharpe {sp} <= {sa}")),
            _ => Some("sharpe missing".into()),
        },
    ));
    out
}
