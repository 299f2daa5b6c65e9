//! CSV and plot-data writers. Output is a pure function of the table, so
//! reruns with the same inputs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::engine::ScenarioResult;
use crate::params::{dr_profile, DrAlias, Region};

use super::{ExperimentError, SweepTable};

pub const ROW_HEADER: &str =
    "devices,dr,payload,offered_pkts_h,decoded_pkts_h,goodput_B_h,loss_header,loss_payload,loss_collision,seed";

pub const AGGREGATE_HEADER: &str =
    "dr,payload,devices,replications,offered_pkts_h,generated_pkts_h,decoded_pkts_h,goodput_B_h,goodput_std,decode_ratio";

/// One CSV line in [`ROW_HEADER`] order, without the trailing newline.
pub fn result_row(r: &ScenarioResult, dr: DrAlias, payload_bytes: u32) -> String {
    format!(
        "{},{},{},{:.3},{:.3},{:.3},{},{},{},{}",
        r.devices,
        dr,
        payload_bytes,
        r.offered_load_packets_per_hour,
        r.throughput_packets_per_hour,
        r.goodput_bytes_per_hour,
        r.losses.header,
        r.losses.payload,
        r.losses.collision,
        r.master_seed
    )
}

pub fn rows_csv(table: &SweepTable) -> String {
    let mut out = String::from(ROW_HEADER);
    out.push('\n');
    for row in &table.rows {
        out.push_str(&result_row(&row.result, row.dr, row.payload_bytes));
        out.push('\n');
    }
    out
}

pub fn aggregate_csv(table: &SweepTable) -> String {
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for a in &table.aggregate {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.3},{:.3},{:.3},{:.3},{:.3},{:.6}",
            a.dr,
            a.payload_bytes,
            a.devices,
            a.replications,
            a.offered_load,
            a.generated_per_hour,
            a.decoded_per_hour,
            a.goodput_mean,
            a.goodput_std,
            a.decode_ratio
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotAxis {
    Devices,
    OfferedLoad,
}

/// `series,x,y,stddev` rows with axis hints as `#` comments.
pub fn plot_data(table: &SweepTable, axis: PlotAxis) -> String {
    let mut out = String::new();
    let x_label = match axis {
        PlotAxis::Devices => "end-devices",
        PlotAxis::OfferedLoad => "generated packets per hour",
    };
    let _ = writeln!(out, "# region: {}", table.region);
    let _ = writeln!(out, "# x: {x_label} (log scale)");
    let _ = writeln!(out, "# y: goodput, bytes per hour (log scale)");
    out.push_str("series,x,y,stddev\n");
    for a in &table.aggregate {
        let x = match axis {
            PlotAxis::Devices => f64::from(a.devices),
            PlotAxis::OfferedLoad => a.offered_load,
        };
        let _ = writeln!(
            out,
            "{}-{}B,{:.3},{:.3},{:.3}",
            a.dr, a.payload_bytes, x, a.goodput_mean, a.goodput_std
        );
    }
    out
}

/// Writes the sweep CSVs and plot data into `dir`.
pub fn emit(table: &SweepTable, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    if table.is_empty() {
        return Err(ExperimentError::EmptyTable);
    }
    fs::create_dir_all(dir)?;
    let files = [
        ("sweep_rows.csv", rows_csv(table)),
        ("sweep_aggregate.csv", aggregate_csv(table)),
        ("plot_goodput_vs_devices.dat", plot_data(table, PlotAxis::Devices)),
        ("plot_goodput_vs_load.dat", plot_data(table, PlotAxis::OfferedLoad)),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

/// Data rates shown in the per-device rate comparison.
pub const RATE_TABLE_DRS: [u8; 4] = [0, 5, 8, 9];

/// `dr,pkt_per_hour` for one payload size over [`RATE_TABLE_DRS`].
pub fn rate_table(region: Region, payload_bytes: u32) -> Result<String, ExperimentError> {
    let mut out = String::from("# x: data rate\n# y: packets per hour per end-device (log scale)\n");
    out.push_str("dr,pkt_per_hour\n");
    for dr in RATE_TABLE_DRS {
        let p = dr_profile(region, DrAlias(dr))?;
        let _ = writeln!(out, "{},{:.1}", p.alias, p.max_packet_rate(payload_bytes)?);
    }
    Ok(out)
}

/// Writes `rates_{payload}B.csv` for each payload.
pub fn emit_rate_tables(region: Region, payloads: &[u32], dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    if payloads.is_empty() {
        return Err(ExperimentError::EmptyTable);
    }
    let bodies = payloads
        .iter()
        .map(|&p| rate_table(region, p).map(|b| (p, b)))
        .collect::<Result<Vec<_>, _>>()?;
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (payload, body) in bodies {
        let path = dir.join(format!("rates_{payload}B.csv"));
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}
