//! Experiment campaigns: device-count sweeps, goodput peaks, LoRa versus
//! LoRa-E crossover loads and multi-channel capacity extrapolation.

pub mod config;
pub mod output;

use std::io;

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{self, EngineError, Scenario, ScenarioResult};
use crate::params::{dr_profile, DataRateProfile, DrAlias, Family, ParamError, Region};

pub use config::{parse_config, parse_device_counts, ConfigError, ConfigFile};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
    #[error("{query}: no crossover in the swept range (LoRa {lora}, LoRa-E {lorae})")]
    NoCrossover {
        query: String,
        lora: CurveEnds,
        lorae: CurveEnds,
    },
    #[error("nothing to write: the table is empty")]
    EmptyTable,
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

/// First and last point of a curve, for error reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveEnds {
    pub first: (f64, f64),
    pub last: (f64, f64),
}

impl std::fmt::Display for CurveEnds {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{:.0} pkt/h -> {:.0} B/h .. {:.0} pkt/h -> {:.0} B/h",
            self.first.0, self.first.1, self.last.0, self.last.1
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub region: Region,
    pub drs: Vec<DrAlias>,
    pub payloads: Vec<u32>,
    pub device_counts: Vec<u32>,
    pub horizon_ms: u64,
    pub replications: u32,
    pub master_seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::InvalidSpec(m.to_string()));
        if self.replications == 0 {
            return bad("replications must be at least 1");
        }
        if self.device_counts.is_empty() || self.device_counts.contains(&0) {
            return bad("device counts must be non-empty and positive");
        }
        if self.drs.is_empty() || self.payloads.is_empty() {
            return bad("at least one data rate and one payload are required");
        }
        if self.horizon_ms == 0 {
            return bad("horizon must be positive");
        }
        for &dr in &self.drs {
            let p = dr_profile(self.region, dr)?;
            for &payload in &self.payloads {
                p.check_payload(payload)?;
            }
        }
        Ok(())
    }
}

/// Seed of one sweep point, independent of the order points are run in.
pub fn run_seed(master: u64, dr: DrAlias, payload: u32, devices: u32, replication: u32) -> u64 {
    let mut h = master;
    for v in [u64::from(dr.0), u64::from(payload), u64::from(devices), u64::from(replication)] {
        h = splitmix64(h ^ v.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub dr: DrAlias,
    pub payload_bytes: u32,
    pub devices: u32,
    pub replication: u32,
    pub seed: u64,
    pub result: ScenarioResult,
}

/// Replication means of one `(dr, payload, devices)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatePoint {
    pub dr: DrAlias,
    pub payload_bytes: u32,
    pub devices: u32,
    pub replications: u32,
    pub offered_load: f64,
    pub generated_per_hour: f64,
    pub decoded_per_hour: f64,
    pub goodput_mean: f64,
    /// Sample standard deviation over replications; zero for one run.
    pub goodput_std: f64,
    pub decode_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub region: Region,
    pub rows: Vec<SweepRow>,
    pub aggregate: Vec<AggregatePoint>,
}

impl SweepTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Aggregate points of one series, ordered by device count.
    pub fn series(&self, dr: DrAlias, payload_bytes: u32) -> Vec<&AggregatePoint> {
        self.aggregate
            .iter()
            .filter(|a| a.dr == dr && a.payload_bytes == payload_bytes)
            .collect()
    }

    /// Goodput against offered load for one series.
    pub fn curve(&self, dr: DrAlias, payload_bytes: u32) -> Vec<CurvePoint> {
        self.series(dr, payload_bytes)
            .into_iter()
            .map(|a| CurvePoint {
                devices: a.devices,
                load: a.offered_load,
                goodput: a.goodput_mean,
            })
            .collect()
    }

    pub fn series_keys(&self) -> Vec<(DrAlias, u32)> {
        let mut keys: Vec<_> = self.aggregate.iter().map(|a| (a.dr, a.payload_bytes)).collect();
        keys.dedup();
        keys
    }
}

/// Runs every `(dr, payload, devices, replication)` point.
///
/// Points run in parallel; rows come back sorted by that key.
pub fn sweep(spec: &SweepSpec) -> Result<SweepTable, ExperimentError> {
    spec.validate()?;
    let mut drs = spec.drs.clone();
    drs.sort();
    drs.dedup();
    let mut payloads = spec.payloads.clone();
    payloads.sort();
    payloads.dedup();
    let mut counts = spec.device_counts.clone();
    counts.sort();
    counts.dedup();

    let mut jobs = Vec::new();
    for &dr in &drs {
        let profile = dr_profile(spec.region, dr)?;
        for &payload in &payloads {
            for &devices in &counts {
                for rep in 0..spec.replications {
                    jobs.push((profile, payload, devices, rep));
                }
            }
        }
    }

    let rows = jobs
        .into_par_iter()
        .map(|(profile, payload, devices, rep)| {
            let seed = run_seed(spec.master_seed, profile.alias, payload, devices, rep);
            let scenario = Scenario::uniform(profile, payload, devices, spec.horizon_ms, seed)?;
            Ok(SweepRow {
                dr: profile.alias,
                payload_bytes: payload,
                devices,
                replication: rep,
                seed,
                result: engine::run(&scenario)?,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;

    let aggregate = aggregate_rows(&rows);
    Ok(SweepTable {
        region: spec.region,
        rows,
        aggregate,
    })
}

fn aggregate_rows(rows: &[SweepRow]) -> Vec<AggregatePoint> {
    let mut out = Vec::new();
    for group in rows.chunk_by(|a, b| (a.dr, a.payload_bytes, a.devices) == (b.dr, b.payload_bytes, b.devices)) {
        let n = group.len() as f64;
        let mean = |f: &dyn Fn(&ScenarioResult) -> f64| group.iter().map(|r| f(&r.result)).sum::<f64>() / n;
        let goodput_mean = mean(&|r| r.goodput_bytes_per_hour);
        let goodput_std = if group.len() > 1 {
            let ss: f64 = group
                .iter()
                .map(|r| (r.result.goodput_bytes_per_hour - goodput_mean).powi(2))
                .sum();
            (ss / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let first = &group[0];
        out.push(AggregatePoint {
            dr: first.dr,
            payload_bytes: first.payload_bytes,
            devices: first.devices,
            replications: group.len() as u32,
            offered_load: first.result.offered_load_packets_per_hour,
            generated_per_hour: mean(&|r| r.generated_packets_per_hour),
            decoded_per_hour: mean(&|r| r.throughput_packets_per_hour),
            goodput_mean,
            goodput_std,
            decode_ratio: mean(&|r| r.decode_ratio()),
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub devices: u32,
    /// Offered load in packets per hour.
    pub load: f64,
    pub goodput: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Best sweep point.
    pub at: CurvePoint,
    /// Vertex of the parabola through the best point and its neighbours,
    /// in log-load; equals `at.load` on the curve ends.
    pub refined_load: f64,
    pub refined_devices: f64,
}

/// Goodput maximum of a curve sorted by load.
pub fn find_peak(curve: &[CurvePoint]) -> Option<Peak> {
    let (i, at) = curve
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.goodput.total_cmp(&b.1.goodput))?;
    let mut peak = Peak {
        at: *at,
        refined_load: at.load,
        refined_devices: f64::from(at.devices),
    };
    if i == 0 || i + 1 == curve.len() {
        return Some(peak);
    }
    let (a, b, c) = (curve[i - 1], curve[i], curve[i + 1]);
    let (xa, xb, xc) = (a.load.ln(), b.load.ln(), c.load.ln());
    let num = (xb - xa).powi(2) * (b.goodput - c.goodput) - (xb - xc).powi(2) * (b.goodput - a.goodput);
    let den = (xb - xa) * (b.goodput - c.goodput) - (xb - xc) * (b.goodput - a.goodput);
    if den.abs() > f64::EPSILON {
        let x = (xb - 0.5 * num / den).clamp(xa, xc);
        peak.refined_load = x.exp();
        peak.refined_devices = peak.refined_load / (b.load / f64::from(b.devices));
    }
    Some(peak)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossoverQuery {
    pub region: Region,
    pub lora_dr: DrAlias,
    pub lorae_dr: DrAlias,
    pub payload_bytes: u32,
}

impl CrossoverQuery {
    pub fn validate(&self) -> Result<(DataRateProfile, DataRateProfile), ExperimentError> {
        let lora = dr_profile(self.region, self.lora_dr)?;
        let lorae = dr_profile(self.region, self.lorae_dr)?;
        if lora.family != Family::Lora || lorae.family != Family::LoraE {
            return Err(ExperimentError::InvalidSpec(format!(
                "crossover needs a LoRa and a LoRa-E data rate, got {} and {}",
                self.lora_dr, self.lorae_dr
            )));
        }
        lora.check_payload(self.payload_bytes)?;
        lorae.check_payload(self.payload_bytes)?;
        Ok((lora, lorae))
    }
}

impl std::fmt::Display for CrossoverQuery {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} vs {} at {} B", self.lorae_dr, self.lora_dr, self.payload_bytes)
    }
}

fn interpolate(curve: &[CurvePoint], load: f64) -> f64 {
    let i = curve.partition_point(|p| p.load < load);
    if i == 0 {
        return curve[0].goodput;
    }
    if i == curve.len() {
        return curve[i - 1].goodput;
    }
    let (a, b) = (curve[i - 1], curve[i]);
    a.goodput + (b.goodput - a.goodput) * (load - a.load) / (b.load - a.load)
}

/// Smallest offered load at which LoRa-E goodput rises above LoRa goodput.
///
/// Both curves are linearly interpolated onto the union of their load
/// points inside the common load range. The crossing must be a sign change
/// of `lorae - lora` from non-positive to positive; a LoRa-E curve that is
/// already ahead at the lowest common load has no crossover.
pub fn find_crossover(
    q: &CrossoverQuery,
    lora: &[CurvePoint],
    lorae: &[CurvePoint],
) -> Result<f64, ExperimentError> {
    let ends = |c: &[CurvePoint]| CurveEnds {
        first: c.first().map_or((0.0, 0.0), |p| (p.load, p.goodput)),
        last: c.last().map_or((0.0, 0.0), |p| (p.load, p.goodput)),
    };
    let not_found = || ExperimentError::NoCrossover {
        query: q.to_string(),
        lora: ends(lora),
        lorae: ends(lorae),
    };
    if lora.len() < 2 || lorae.len() < 2 {
        return Err(not_found());
    }
    let lo = lora[0].load.max(lorae[0].load);
    let hi = lora[lora.len() - 1].load.min(lorae[lorae.len() - 1].load);
    if lo >= hi {
        return Err(not_found());
    }
    let mut loads: Vec<f64> = lora
        .iter()
        .chain(lorae)
        .map(|p| p.load)
        .filter(|&l| l > lo && l < hi)
        .chain([lo, hi])
        .collect();
    loads.sort_by(f64::total_cmp);
    loads.dedup();

    let diff = |l: f64| interpolate(lorae, l) - interpolate(lora, l);
    let mut prev = (loads[0], diff(loads[0]));
    if prev.1 > 0.0 {
        return Err(not_found());
    }
    for &l in &loads[1..] {
        let d = diff(l);
        if d > 0.0 {
            // Both curves are piecewise linear between consecutive loads.
            let (l0, d0) = prev;
            return Ok(l0 + (l - l0) * (-d0) / (d - d0));
        }
        prev = (l, d);
    }
    Err(not_found())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capacity {
    pub per_channel_peak_load: f64,
    pub channels: u32,
    pub data_rates: u32,
    pub total_load: f64,
}

/// Network-wide offered load at peak efficiency.
///
/// LoRa-E multiplies the per-channel peak by the OCW channels of its data
/// rate; legacy LoRa by its 125 kHz channels and the six DR0..DR5 networks
/// that can share them.
pub fn aggregate_capacity(profile: &DataRateProfile, per_channel_peak_load: f64) -> Capacity {
    let (channels, data_rates) = match profile.family {
        Family::LoraE => (profile.num_channels, 1),
        Family::Lora => (profile.region.lora_channels(), 6),
    };
    Capacity {
        per_channel_peak_load,
        channels,
        data_rates,
        total_load: per_channel_peak_load * f64::from(channels) * f64::from(data_rates),
    }
}

/// `n` log-spaced integers from `lo` to `hi`, deduplicated.
pub fn log_spaced(lo: u32, hi: u32, n: u32) -> Vec<u32> {
    if n <= 1 || lo >= hi {
        return vec![lo.max(1)];
    }
    let (a, b) = (f64::from(lo.max(1)).ln(), f64::from(hi).ln());
    let mut v: Vec<u32> = (0..n)
        .map(|i| (a + (b - a) * f64::from(i) / f64::from(n - 1)).exp().round() as u32)
        .collect();
    v.dedup();
    v
}

/// Device counts of `lorae` that offer the same loads as `lora_counts`
/// devices of `lora` would.
pub fn matched_device_counts(
    lora: &DataRateProfile,
    lorae: &DataRateProfile,
    payload_bytes: u32,
    lora_counts: &[u32],
) -> Result<Vec<u32>, ParamError> {
    let ratio = lora.max_packet_rate(payload_bytes)? / lorae.max_packet_rate(payload_bytes)?;
    let mut v: Vec<u32> = lora_counts
        .iter()
        .map(|&n| ((f64::from(n) * ratio).round() as u32).max(1))
        .collect();
    v.sort();
    v.dedup();
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(drs: &[u8], counts: &[u32]) -> SweepSpec {
        SweepSpec {
            region: Region::Eu868,
            drs: drs.iter().map(|&d| DrAlias(d)).collect(),
            payloads: vec![10],
            device_counts: counts.to_vec(),
            horizon_ms: 600_000,
            replications: 3,
            master_seed: 11,
        }
    }

    fn pt(load: f64, goodput: f64) -> CurvePoint {
        CurvePoint { devices: load as u32, load, goodput }
    }

    #[test]
    fn sweep_is_deterministic_and_sorted() {
        let s = spec(&[8, 0], &[20, 5]);
        let a = sweep(&s).unwrap();
        let b = sweep(&s).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 2 * 2 * 3);
        assert_eq!(a.aggregate.len(), 4);
        let keys: Vec<_> = a.rows.iter().map(|r| (r.dr, r.devices, r.replication)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(a.aggregate.iter().all(|p| p.replications == 3));
    }

    #[test]
    fn invalid_specs() {
        let mut s = spec(&[8], &[10]);
        s.replications = 0;
        assert!(matches!(sweep(&s), Err(ExperimentError::InvalidSpec(_))));
        let s = spec(&[8], &[]);
        assert!(matches!(sweep(&s), Err(ExperimentError::InvalidSpec(_))));
        let s = spec(&[7], &[10]);
        assert!(matches!(sweep(&s), Err(ExperimentError::Param(_))));
        let mut s = spec(&[8], &[10]);
        s.payloads = vec![100];
        assert!(matches!(sweep(&s), Err(ExperimentError::Param(ParamError::Oversize { .. }))));
    }

    #[test]
    fn seeds_differ_per_point() {
        let a = run_seed(1, DrAlias(8), 10, 100, 0);
        assert_ne!(a, run_seed(1, DrAlias(8), 10, 100, 1));
        assert_ne!(a, run_seed(1, DrAlias(9), 10, 100, 0));
        assert_ne!(a, run_seed(2, DrAlias(8), 10, 100, 0));
        assert_eq!(a, run_seed(1, DrAlias(8), 10, 100, 0));
    }

    #[test]
    fn crossover_interpolates() {
        let q = CrossoverQuery { region: Region::Eu868, lora_dr: DrAlias(0), lorae_dr: DrAlias(8), payload_bytes: 10 };
        let lora = [pt(100.0, 1000.0), pt(200.0, 1800.0), pt(400.0, 2000.0)];
        let lorae = [pt(100.0, 800.0), pt(300.0, 2100.0), pt(400.0, 2400.0)];
        // At 200: lorae 1450 vs 1800; at 300: 2100 vs 1900.
        let x = find_crossover(&q, &lora, &lorae).unwrap();
        let d200 = 1450.0 - 1800.0;
        let d300 = 2100.0 - 1900.0;
        let expected = 200.0 + 100.0 * (-d200) / (d300 - d200);
        assert!((x - expected).abs() < 1e-9);
    }

    #[test]
    fn crossover_not_found() {
        let q = CrossoverQuery { region: Region::Eu868, lora_dr: DrAlias(0), lorae_dr: DrAlias(8), payload_bytes: 10 };
        let lora = [pt(100.0, 1000.0), pt(400.0, 2000.0)];
        let ahead = [pt(100.0, 1100.0), pt(400.0, 3000.0)];
        assert!(matches!(find_crossover(&q, &lora, &ahead), Err(ExperimentError::NoCrossover { .. })));
        let behind = [pt(100.0, 900.0), pt(400.0, 1000.0)];
        assert!(matches!(find_crossover(&q, &lora, &behind), Err(ExperimentError::NoCrossover { .. })));
        let disjoint = [pt(500.0, 900.0), pt(900.0, 1000.0)];
        assert!(find_crossover(&q, &lora, &disjoint).is_err());
    }

    #[test]
    fn crossover_query_families() {
        let q = CrossoverQuery { region: Region::Eu868, lora_dr: DrAlias(8), lorae_dr: DrAlias(0), payload_bytes: 10 };
        assert!(q.validate().is_err());
    }

    #[test]
    fn peak_refinement() {
        // Symmetric parabola in log-load with its vertex at ln(200).
        let f = |l: f64| 1000.0 - (l.ln() - 200f64.ln()).powi(2);
        let curve: Vec<_> = [100.0, 180.0, 300.0, 600.0].iter().map(|&l| pt(l, f(l))).collect();
        let p = find_peak(&curve).unwrap();
        assert_eq!(p.at.load, 180.0);
        assert!((p.refined_load - 200.0).abs() < 1e-6);
        assert!(find_peak(&[]).is_none());
    }

    #[test]
    fn capacity_arithmetic() {
        let dr0 = dr_profile(Region::Eu868, DrAlias(0)).unwrap();
        assert_eq!(aggregate_capacity(&dr0, 2000.0).total_load, 96_000.0);
        let dr8 = dr_profile(Region::Eu868, DrAlias(8)).unwrap();
        assert_eq!(aggregate_capacity(&dr8, 500_000.0).total_load, 3_500_000.0);
        let dr9 = dr_profile(Region::Eu868, DrAlias(9)).unwrap();
        assert_eq!(aggregate_capacity(&dr9, 370_000.0).total_load, 1_480_000.0);
    }

    #[test]
    fn log_grid() {
        let v = log_spaced(10, 1000, 3);
        assert_eq!(v, [10, 100, 1000]);
        assert_eq!(log_spaced(1, 3, 10), [1, 2, 3]);
        assert_eq!(log_spaced(5, 5, 4), [5]);
    }
}
