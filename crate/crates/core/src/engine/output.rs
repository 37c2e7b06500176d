//! Stable file formats: metrics JSON, one-row-per-run CSV, and the aligned
//! text table rendered from a sweep CSV.

use serde::{Deserialize, Serialize};

use super::metrics::{Metrics, RunStatus};

/// Pretty-printed metrics JSON with a trailing newline.
pub fn metrics_json(metrics: &Metrics) -> String {
    let mut s = serde_json::to_string_pretty(metrics).expect("metrics serialize");
    s.push('\n');
    s
}

/// One CSV row. Column order is the field order and is part of the format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub value: String,
    pub status: String,
    pub arch: String,
    pub arbiter: String,
    pub n_cores: Option<u32>,
    pub n_banks: Option<u32>,
    pub cycles: Option<u64>,
    pub retired: Option<u64>,
    pub stall_cycles: Option<u64>,
    pub grants: Option<u64>,
    pub conflict_cycles: Option<u64>,
    pub grants_per_cycle: Option<f64>,
    pub mean_access_latency: Option<f64>,
    pub miss_rate: Option<f64>,
    pub work_units: Option<u64>,
    pub throughput_per_kcycle: Option<f64>,
    pub fairness: Option<f64>,
    pub nic_injected: Option<u64>,
    pub nic_dropped: Option<u64>,
    pub nic_achieved_rate: Option<f64>,
    pub verified: Option<bool>,
    pub error: String,
}

pub const CSV_HEADER: &str = "value,status,arch,arbiter,n_cores,n_banks,cycles,retired,stall_cycles,grants,conflict_cycles,grants_per_cycle,mean_access_latency,miss_rate,work_units,throughput_per_kcycle,fairness,nic_injected,nic_dropped,nic_achieved_rate,verified,error";

impl RunRow {
    pub fn from_result(value: &str, result: &Result<Metrics, String>) -> Self {
        match result {
            Ok(m) => RunRow {
                value: value.to_string(),
                status: match m.status {
                    RunStatus::Completed => "completed".into(),
                    RunStatus::BudgetExceeded => "budget_exceeded".into(),
                },
                arch: m.arch.clone(),
                arbiter: m.arbiter.clone(),
                n_cores: Some(m.n_cores),
                n_banks: Some(m.n_banks),
                cycles: Some(m.cycles),
                retired: Some(m.retired),
                stall_cycles: Some(m.stall_cycles),
                grants: Some(m.grants),
                conflict_cycles: Some(m.conflict_cycles),
                grants_per_cycle: Some(m.grants_per_cycle),
                mean_access_latency: Some(m.memory.mean_access_latency),
                miss_rate: m.cache.as_ref().map(|c| c.miss_rate),
                work_units: Some(m.workload.work_units),
                throughput_per_kcycle: Some(m.workload.throughput_per_kcycle),
                fairness: Some(m.fairness),
                nic_injected: Some(m.nic.injected),
                nic_dropped: Some(m.nic.dropped),
                nic_achieved_rate: Some(m.nic.achieved_rate),
                verified: m.workload.verified,
                error: String::new(),
            },
            Err(e) => RunRow {
                value: value.to_string(),
                status: "error".into(),
                arch: String::new(),
                arbiter: String::new(),
                n_cores: None,
                n_banks: None,
                cycles: None,
                retired: None,
                stall_cycles: None,
                grants: None,
                conflict_cycles: None,
                grants_per_cycle: None,
                mean_access_latency: None,
                miss_rate: None,
                work_units: None,
                throughput_per_kcycle: None,
                fairness: None,
                nic_injected: None,
                nic_dropped: None,
                nic_achieved_rate: None,
                verified: None,
                error: e.clone(),
            },
        }
    }
}

/// Serializes rows under the fixed header.
pub fn rows_csv(rows: &[RunRow]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("csv row");
    }
    let body = String::from_utf8(w.into_inner().expect("csv flush")).expect("utf8 csv");
    format!("{CSV_HEADER}\n{body}")
}

pub fn read_rows(csv_text: &str) -> Result<Vec<RunRow>, csv::Error> {
    csv::Reader::from_reader(csv_text.as_bytes()).deserialize().collect()
}

/// Renders CSV text as a whitespace-aligned table.
pub fn render_table(csv_text: &str) -> Result<String, csv::Error> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(csv_text.as_bytes());
    let records: Vec<Vec<String>> = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()?;
    let cols = records.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0; cols];
    for rec in &records {
        for (i, cell) in rec.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    for rec in &records {
        let line: Vec<String> = rec.iter().enumerate().map(|(i, c)| format!("{c:<w$}", w = widths[i])).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_row_fields() {
        let row = RunRow::from_result("x", &Err("boom".into()));
        let text = rows_csv(std::slice::from_ref(&row));
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(read_rows(&text).unwrap(), vec![row]);
        assert_eq!(CSV_HEADER.split(',').count(), 22);
    }

    #[test]
    fn table_alignment() {
        let t = render_table("a,bb\nccc,d\n").unwrap();
        assert_eq!(t, "a    bb\nccc  d\n");
    }
}
