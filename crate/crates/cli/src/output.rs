//! CSV and JSON writers. Column order is fixed by the `HEADER` constants of
//! each table.

use std::io::Write;

use serde::Serialize;
use serde_json::json;

use crate::complexity::{self, ComplexityRow};
use crate::solve::{self, SolveReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

fn csv_table<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn json_value<W: Write, T: Serialize>(mut out: W, value: &T) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn write_complexity<W: Write>(out: W, rows: &[ComplexityRow], format: Format) -> anyhow::Result<()> {
    match format {
        Format::Csv => csv_table(out, &complexity::HEADER, rows.iter().map(ComplexityRow::cells)),
        Format::Json => json_value(out, &json!({ "rows": rows })),
    }
}

/// JSON carries the per-run traces next to the aggregated rows. Wall-clock
/// fields of the traces are zeroed unless `wall_clock` is set.
pub fn write_solve<W: Write>(out: W, report: &SolveReport, format: Format, wall_clock: bool) -> anyhow::Result<()> {
    match format {
        Format::Csv => csv_table(out, &solve::HEADER, report.rows.iter().map(|r| r.cells())),
        Format::Json => {
            let mut report = report.clone();
            if !wall_clock {
                for run in &mut report.runs {
                    if let Some(t) = &mut run.trace {
                        for it in &mut t.iterations {
                            it.time = it.time.without_wall_clock();
                        }
                    }
                }
            }
            json_value(out, &report)
        }
    }
}
