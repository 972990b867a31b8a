//! Writing reports to disk as JSON, CSV and SVG.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use super::svg::{line_chart, Series};
use crate::model::FleetSchedule;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

/// A rectangular table with a header row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Fixed six-decimal formatting with negative zero folded into zero, so
/// output is byte-stable across runs.
pub fn num(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub trait Report {
    /// File stem of the main JSON and CSV outputs.
    fn stem(&self) -> &str;
    fn json(&self) -> serde_json::Value;
    fn table(&self) -> Table;
    /// Additional `(file stem, table)` pairs.
    fn extra_tables(&self) -> Vec<(String, Table)> {
        Vec::new()
    }
    /// `(file name, SVG text)` pairs.
    fn charts(&self) -> Vec<(String, String)> {
        Vec::new()
    }
    /// Notes on defaulted inputs, repeated in the JSON header.
    fn assumptions(&self) -> &[String];
}

#[derive(Serialize)]
struct Envelope<'a> {
    generator: String,
    assumptions: &'a [String],
    report: serde_json::Value,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_table(path: &Path, t: &Table) -> Result<(), ReportError> {
    let csv_err = |source| ReportError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(&t.header).map_err(csv_err)?;
    for row in &t.rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes `<stem>.json`, `<stem>.csv`, any extra tables and charts into
/// `dir`, creating it if needed. Returns the written paths in order.
pub fn write_report(r: &dyn Report, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, ReportError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();

    let json_path = dir.join(format!("{}.json", r.stem()));
    let env = Envelope {
        generator: format!("evsched {}", env!("CARGO_PKG_VERSION")),
        assumptions: r.assumptions(),
        report: r.json(),
    };
    let text = serde_json::to_string_pretty(&env).expect("report values serialize");
    fs::write(&json_path, text + "\n").map_err(io_err(&json_path))?;
    written.push(json_path);

    let csv_path = dir.join(format!("{}.csv", r.stem()));
    write_table(&csv_path, &r.table())?;
    written.push(csv_path);

    for (stem, t) in r.extra_tables() {
        let p = dir.join(format!("{stem}.csv"));
        write_table(&p, &t)?;
        written.push(p);
    }
    for (name, svg) in r.charts() {
        let p = dir.join(name);
        fs::write(&p, svg).map_err(io_err(&p))?;
        written.push(p);
    }
    Ok(written)
}

impl Report for FleetSchedule {
    fn stem(&self) -> &str {
        "schedule"
    }

    fn json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("schedule serializes")
    }

    fn table(&self) -> Table {
        let mut t = Table::new(&["vehicle", "step", "e_sch", "e_dch", "e_fch", "soe", "c_deg"]);
        for v in &self.vehicles {
            for i in 0..self.step_count {
                t.push(vec![
                    v.vehicle_id.clone(),
                    i.to_string(),
                    num(v.e_sch[i]),
                    num(v.e_dch[i]),
                    num(v.e_fch[i]),
                    num(v.soe[i]),
                    num(v.c_deg[i]),
                ]);
            }
        }
        t
    }

    fn extra_tables(&self) -> Vec<(String, Table)> {
        let mut costs = Table::new(&[
            "vehicle",
            "energy",
            "grid_fee",
            "cp_fee",
            "degradation",
            "v2g_revenue",
            "total",
            "full_cost",
        ]);
        let rows = self
            .vehicles
            .iter()
            .map(|v| (v.vehicle_id.as_str(), &v.costs))
            .chain(std::iter::once(("fleet", &self.costs)));
        for (id, c) in rows {
            costs.push(vec![
                id.to_string(),
                num(c.energy),
                num(c.grid_fee),
                num(c.cp_fee),
                num(c.degradation),
                num(c.v2g_revenue),
                num(c.total),
                num(c.full_cost),
            ]);
        }
        let mut out = vec![("costs".to_string(), costs)];
        if !self.sessions.is_empty() {
            let mut t = Table::new(&[
                "vehicle",
                "cp",
                "arrive_step",
                "depart_step",
                "arrival_soe",
                "floor",
                "imposed_floor",
                "departure_soe",
                "objective",
            ]);
            for s in &self.sessions {
                t.push(vec![
                    s.vehicle_id.clone(),
                    s.cp_id.clone(),
                    s.arrive_step.to_string(),
                    s.depart_step.to_string(),
                    num(s.arrival_soe_kwh),
                    num(s.floor_kwh),
                    num(s.imposed_floor_kwh),
                    num(s.departure_soe_kwh),
                    num(s.objective_eur),
                ]);
            }
            out.push(("sessions".to_string(), t));
        }
        out
    }

    fn charts(&self) -> Vec<(String, String)> {
        let soe: Vec<Series> = self
            .vehicles
            .iter()
            .map(|v| Series::new(v.vehicle_id.clone(), v.soe.clone()))
            .collect();
        let mut out = vec![(
            "soe.svg".to_string(),
            line_chart(
                &format!("{} state of energy", self.model),
                "step",
                "kWh",
                &soe,
            ),
        )];
        for v in &self.vehicles {
            let flows = [
                Series::new("slow charge", v.e_sch.clone()),
                Series::new("discharge", v.e_dch.clone()),
                Series::new("fast charge", v.e_fch.clone()),
            ];
            out.push((
                format!("power_{}.svg", v.vehicle_id),
                line_chart(
                    &format!("{} energy flows, {}", self.model, v.vehicle_id),
                    "step",
                    "kWh per step",
                    &flows,
                ),
            ));
        }
        out
    }

    fn assumptions(&self) -> &[String] {
        &self.assumptions
    }
}
