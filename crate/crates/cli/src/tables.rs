use std::io::Write;

use anyhow::Context as _;
use fair_assort::experiment::{averages, CellResult, PolicyOutcome};

#[derive(Clone, Copy)]
pub enum Table {
    /// Revenue as a fraction of the relaxation bound.
    Revenue,
    /// Ratio of smallest to largest expected sales.
    Balance,
}

impl Table {
    fn metric(self) -> fn(&PolicyOutcome) -> f64 {
        match self {
            Table::Revenue => |o| o.normalized_revenue,
            Table::Balance => |o| o.minmax_ratio,
        }
    }
}

const HEADER: [&str; 9] = ["T", "P0", "gamma", "alpha", "cbar", "K", "pol", "hr1", "hr2"];

/// One row per cell followed by a row of column averages.
pub fn write_table<W: Write>(out: W, cells: &[CellResult], table: Table) -> anyhow::Result<()> {
    let metric = table.metric();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for c in cells {
        w.write_record([
            c.cell.horizon.to_string(),
            c.cell.p0.to_string(),
            c.cell.gamma.to_string(),
            c.cell.alpha.to_string(),
            c.cbar.to_string(),
            c.k.to_string(),
            format!("{:.4}", metric(&c.policy)),
            format!("{:.4}", metric(&c.heuristic1)),
            format!("{:.4}", metric(&c.heuristic2)),
        ])?;
    }
    let avg = averages(cells, metric);
    let mut last = vec!["average".to_string()];
    last.extend(std::iter::repeat(String::new()).take(5));
    last.extend(avg.iter().map(|x| format!("{x:.4}")));
    w.write_record(&last)?;
    w.flush().context("writing CSV")?;
    Ok(())
}
