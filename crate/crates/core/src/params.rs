//! Regional channel plans, data-rate profiles and airtime models.
//!
//! Everything in here is a pure function over constant tables. LoRa-E
//! airtime is built from a fixed 233 ms header replica and 50 ms payload
//! fragments; legacy LoRa airtime follows the usual Semtech symbol count.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Duration of one LoRa-E header replica.
pub const HEADER_DURATION_MS: u64 = 233;
/// Duration of one LoRa-E payload fragment.
pub const FRAGMENT_DURATION_MS: u64 = 50;
/// Width of one OBW sub-carrier.
pub const OBW_BANDWIDTH_HZ: u32 = 488;
/// Width of a legacy LoRa channel.
pub const LORA_BANDWIDTH_HZ: u32 = 125_000;

/// Trellis termination bits appended to the payload before encoding.
pub const TAIL_BITS: u32 = 6;
/// Coded bits carried by one payload fragment.
pub const CODED_BITS_PER_FRAGMENT: u32 = 23;

const MS_PER_HOUR: f64 = 3_600_000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("data rate {alias} is not defined for region {region}")]
    UnknownDataRate { region: Region, alias: DrAlias },
    #[error("unrecognised data rate alias {0:?}")]
    BadAlias(String),
    #[error("unrecognised region {0:?}")]
    BadRegion(String),
    #[error("payload of {payload} B exceeds the {max} B limit of {alias}")]
    Oversize { alias: DrAlias, payload: u32, max: u32 },
    #[error("payload must be at least one byte")]
    EmptyPayload,
    #[error("{alias} is a {actual} data rate, expected {expected}")]
    WrongFamily {
        alias: DrAlias,
        actual: Family,
        expected: Family,
    },
    #[error("time on air must be positive, got {0} ms")]
    NonPositiveAirtime(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Eu868,
    Us915,
}

impl Region {
    /// Per-device, per-channel airtime fraction.
    ///
    /// FCC rules cap dwell time rather than duty cycle; US traffic uses the
    /// same 1% budget so the two regions load the channel comparably.
    pub fn duty_cycle(self) -> f64 {
        match self {
            Region::Eu868 => 0.01,
            Region::Us915 => 0.01,
        }
    }

    pub fn min_hop_separation_hz(self) -> u32 {
        match self {
            Region::Eu868 => 3_900,
            Region::Us915 => 25_400,
        }
    }

    /// Number of 125 kHz channels a legacy LoRa network spreads over.
    pub fn lora_channels(self) -> u32 {
        match self {
            Region::Eu868 => 8,
            Region::Us915 => 8,
        }
    }

    pub fn data_rates(self) -> &'static [DrAlias] {
        const EU: [DrAlias; 10] = [
            DrAlias(0),
            DrAlias(1),
            DrAlias(2),
            DrAlias(3),
            DrAlias(4),
            DrAlias(5),
            DrAlias(8),
            DrAlias(9),
            DrAlias(10),
            DrAlias(11),
        ];
        const US: [DrAlias; 2] = [DrAlias(5), DrAlias(6)];
        match self {
            Region::Eu868 => &EU,
            Region::Us915 => &US,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::Eu868 => "EU868",
            Region::Us915 => "US915",
        })
    }
}

impl FromStr for Region {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "EU868" | "EU" => Ok(Region::Eu868),
            "US915" | "US" => Ok(Region::Us915),
            _ => Err(ParamError::BadRegion(s.to_string())),
        }
    }
}

/// A data-rate alias such as `DR8`. Meaning depends on the region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DrAlias(pub u8);

impl fmt::Display for DrAlias {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DR{}", self.0)
    }
}

impl FromStr for DrAlias {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let digits = t
            .strip_prefix("DR")
            .or_else(|| t.strip_prefix("dr"))
            .unwrap_or(t);
        if digits.is_empty() || digits.len() > 2 || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ParamError::BadAlias(s.to_string()));
        }
        digits
            .parse::<u8>()
            .map(DrAlias)
            .map_err(|_| ParamError::BadAlias(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Lora,
    LoraE,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Lora => "LoRa",
            Family::LoraE => "LoRa-E",
        })
    }
}

/// Information bits per coded bit, as a reduced fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CodingRate {
    pub num: u32,
    pub den: u32,
}

impl CodingRate {
    pub const ONE_THIRD: CodingRate = CodingRate { num: 1, den: 3 };
    pub const TWO_THIRDS: CodingRate = CodingRate { num: 2, den: 3 };
    pub const FOUR_FIFTHS: CodingRate = CodingRate { num: 4, den: 5 };

    pub fn as_f64(self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }

    /// `ceil(rate * n)` in exact integer arithmetic.
    pub fn ceil_of(self, n: u32) -> u32 {
        (self.num * n).div_ceil(self.den)
    }
}

impl fmt::Display for CodingRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Channelisation of one LoRa-E operating channel (OCW).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionalPlan {
    pub region: Region,
    pub ocw_bandwidth_hz: u32,
    pub obw_bandwidth_hz: u32,
    pub min_hop_separation_hz: u32,
    pub num_ocw_channels: u32,
    pub num_grids: u32,
    pub carriers_per_grid: u32,
    pub total_carriers: u32,
}

impl RegionalPlan {
    /// Derives the grid layout from the channel width and hop distance.
    pub fn new(region: Region, ocw_bandwidth_hz: u32, num_ocw_channels: u32) -> Self {
        let obw = OBW_BANDWIDTH_HZ;
        let sep = region.min_hop_separation_hz();
        let total_carriers = ocw_bandwidth_hz / obw;
        // round(sep / obw)
        let num_grids = (2 * sep + obw) / (2 * obw);
        RegionalPlan {
            region,
            ocw_bandwidth_hz,
            obw_bandwidth_hz: obw,
            min_hop_separation_hz: sep,
            num_ocw_channels,
            num_grids,
            carriers_per_grid: total_carriers / num_grids,
            total_carriers,
        }
    }

    pub fn duty_cycle(&self) -> f64 {
        self.region.duty_cycle()
    }

    /// Sub-carriers addressable through `(grid, slot)` pairs.
    pub fn usable_carriers(&self) -> u32 {
        self.num_grids * self.carriers_per_grid
    }

    pub fn max_packet_rate(&self, toa_ms: f64) -> Result<f64, ParamError> {
        max_packet_rate(self.duty_cycle(), toa_ms)
    }
}

/// One data-rate configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataRateProfile {
    pub region: Region,
    pub alias: DrAlias,
    pub family: Family,
    pub coding_rate: CodingRate,
    /// Zero for legacy LoRa.
    pub header_replicas: u32,
    pub phy_bit_rate_bps: u32,
    pub header_duration_ms: u64,
    pub fragment_duration_ms: u64,
    pub max_payload_bytes: u32,
    pub lora_spreading_factor: Option<u8>,
    pub lora_bandwidth_hz: Option<u32>,
    /// OCW width for LoRa-E profiles.
    pub ocw_bandwidth_hz: Option<u32>,
    /// Channels available to this data rate in the region.
    pub num_channels: u32,
}

impl DataRateProfile {
    fn lora(alias: u8, sf: u8, max_payload_bytes: u32) -> Self {
        // SF * BW / 2^SF * 4/5, truncated.
        let bit_rate = u32::from(sf) * LORA_BANDWIDTH_HZ * 4 / (5 << sf);
        DataRateProfile {
            region: Region::Eu868,
            alias: DrAlias(alias),
            family: Family::Lora,
            coding_rate: CodingRate::FOUR_FIFTHS,
            header_replicas: 0,
            phy_bit_rate_bps: bit_rate,
            header_duration_ms: 0,
            fragment_duration_ms: 0,
            max_payload_bytes,
            lora_spreading_factor: Some(sf),
            lora_bandwidth_hz: Some(LORA_BANDWIDTH_HZ),
            ocw_bandwidth_hz: None,
            num_channels: Region::Eu868.lora_channels(),
        }
    }

    fn lorae(
        region: Region,
        alias: u8,
        coding_rate: CodingRate,
        ocw_bandwidth_hz: u32,
        max_payload_bytes: u32,
        num_channels: u32,
    ) -> Self {
        let robust = coding_rate == CodingRate::ONE_THIRD;
        DataRateProfile {
            region,
            alias: DrAlias(alias),
            family: Family::LoraE,
            coding_rate,
            header_replicas: if robust { 3 } else { 2 },
            phy_bit_rate_bps: if robust { 162 } else { 325 },
            header_duration_ms: HEADER_DURATION_MS,
            fragment_duration_ms: FRAGMENT_DURATION_MS,
            max_payload_bytes,
            lora_spreading_factor: None,
            lora_bandwidth_hz: None,
            ocw_bandwidth_hz: Some(ocw_bandwidth_hz),
            num_channels,
        }
    }

    pub fn is_lorae(&self) -> bool {
        self.family == Family::LoraE
    }

    /// Channel plan of a LoRa-E profile; `None` for legacy LoRa.
    pub fn plan(&self) -> Option<RegionalPlan> {
        self.ocw_bandwidth_hz
            .map(|ocw| RegionalPlan::new(self.region, ocw, self.num_channels))
    }

    pub fn check_payload(&self, payload_bytes: u32) -> Result<(), ParamError> {
        if payload_bytes == 0 {
            return Err(ParamError::EmptyPayload);
        }
        if payload_bytes > self.max_payload_bytes {
            return Err(ParamError::Oversize {
                alias: self.alias,
                payload: payload_bytes,
                max: self.max_payload_bytes,
            });
        }
        Ok(())
    }

    fn expect_family(&self, expected: Family) -> Result<(), ParamError> {
        if self.family != expected {
            return Err(ParamError::WrongFamily {
                alias: self.alias,
                actual: self.family,
                expected,
            });
        }
        Ok(())
    }

    /// Scheduled airtime in whole milliseconds.
    pub fn time_on_air_ms(&self, payload_bytes: u32) -> Result<u64, ParamError> {
        match self.family {
            Family::Lora => lora_time_on_air(self, payload_bytes),
            Family::LoraE => lorae_time_on_air(self, payload_bytes),
        }
    }

    /// Unrounded airtime; used for rates.
    pub fn exact_time_on_air_ms(&self, payload_bytes: u32) -> Result<f64, ParamError> {
        match self.family {
            Family::Lora => lora_airtime_exact_ms(self, payload_bytes),
            Family::LoraE => lorae_time_on_air(self, payload_bytes).map(|t| t as f64),
        }
    }

    /// Duty-cycle limited packets per hour for one device.
    pub fn max_packet_rate(&self, payload_bytes: u32) -> Result<f64, ParamError> {
        max_packet_rate(
            self.region.duty_cycle(),
            self.exact_time_on_air_ms(payload_bytes)?,
        )
    }
}

/// Looks up a data-rate profile.
pub fn dr_profile(region: Region, alias: DrAlias) -> Result<DataRateProfile, ParamError> {
    use CodingRate as Cr;
    let p = match (region, alias.0) {
        (Region::Eu868, 0) => DataRateProfile::lora(0, 12, 51),
        (Region::Eu868, 1) => DataRateProfile::lora(1, 11, 51),
        (Region::Eu868, 2) => DataRateProfile::lora(2, 10, 51),
        (Region::Eu868, 3) => DataRateProfile::lora(3, 9, 115),
        (Region::Eu868, 4) => DataRateProfile::lora(4, 8, 222),
        (Region::Eu868, 5) => DataRateProfile::lora(5, 7, 222),
        (Region::Eu868, 8) => DataRateProfile::lorae(region, 8, Cr::ONE_THIRD, 137_000, 58, 7),
        (Region::Eu868, 9) => DataRateProfile::lorae(region, 9, Cr::TWO_THIRDS, 137_000, 123, 4),
        (Region::Eu868, 10) => DataRateProfile::lorae(region, 10, Cr::ONE_THIRD, 336_000, 58, 7),
        (Region::Eu868, 11) => DataRateProfile::lorae(region, 11, Cr::TWO_THIRDS, 336_000, 123, 4),
        (Region::Us915, 5) => DataRateProfile::lorae(region, 5, Cr::ONE_THIRD, 1_523_000, 125, 8),
        (Region::Us915, 6) => DataRateProfile::lorae(region, 6, Cr::TWO_THIRDS, 1_523_000, 125, 8),
        _ => return Err(ParamError::UnknownDataRate { region, alias }),
    };
    Ok(p)
}

/// Number of 50 ms payload fragments for a LoRa-E packet.
///
/// The payload plus trellis tail is expanded by the inverse coding rate and
/// packed [`CODED_BITS_PER_FRAGMENT`] coded bits per fragment.
pub fn lorae_fragment_count(profile: &DataRateProfile, payload_bytes: u32) -> Result<u32, ParamError> {
    profile.expect_family(Family::LoraE)?;
    profile.check_payload(payload_bytes)?;
    let info_bits = payload_bytes * 8 + TAIL_BITS;
    let CodingRate { num, den } = profile.coding_rate;
    Ok((info_bits * den).div_ceil(num * CODED_BITS_PER_FRAGMENT))
}

/// LoRa-E airtime: header replicas followed by back-to-back fragments.
pub fn lorae_time_on_air(profile: &DataRateProfile, payload_bytes: u32) -> Result<u64, ParamError> {
    let fragments = lorae_fragment_count(profile, payload_bytes)?;
    Ok(u64::from(profile.header_replicas) * profile.header_duration_ms
        + u64::from(fragments) * profile.fragment_duration_ms)
}

/// Legacy LoRa airtime rounded up to whole milliseconds.
pub fn lora_time_on_air(profile: &DataRateProfile, payload_bytes: u32) -> Result<u64, ParamError> {
    lora_airtime_exact_ms(profile, payload_bytes).map(|t| t.ceil() as u64)
}

/// Legacy LoRa airtime: 8-symbol preamble, explicit header, CRC on, CR 4/5,
/// low data rate optimisation at SF11 and SF12 on 125 kHz.
pub fn lora_airtime_exact_ms(profile: &DataRateProfile, payload_bytes: u32) -> Result<f64, ParamError> {
    profile.expect_family(Family::Lora)?;
    profile.check_payload(payload_bytes)?;
    let sf = i64::from(profile.lora_spreading_factor.unwrap_or(12));
    let bw = f64::from(profile.lora_bandwidth_hz.unwrap_or(LORA_BANDWIDTH_HZ));
    let symbol_ms = (1u64 << sf) as f64 / bw * 1000.0;
    let ldro = i64::from(symbol_ms > 16.0);
    let (preamble, crc, implicit, cr) = (8.0, 1, 0, 1);

    let num = 8 * i64::from(payload_bytes) - 4 * sf + 28 + 16 * crc - 20 * implicit;
    let den = 4 * (sf - 2 * ldro);
    let blocks = if num > 0 { (num + den - 1) / den } else { 0 };
    let payload_symbols = 8 + blocks * (cr + 4);

    Ok((preamble + 4.25 + payload_symbols as f64) * symbol_ms)
}

/// Largest mean packet rate (per hour) that keeps airtime within `duty_cycle`.
pub fn max_packet_rate(duty_cycle: f64, toa_ms: f64) -> Result<f64, ParamError> {
    if !(toa_ms > 0.0) || !toa_ms.is_finite() {
        return Err(ParamError::NonPositiveAirtime(toa_ms));
    }
    Ok(duty_cycle * MS_PER_HOUR / toa_ms)
}

/// One published table cell next to what the model computes for it.
#[derive(Debug, Clone, PartialEq)]
pub struct ProvenanceRow {
    pub region: Region,
    pub alias: DrAlias,
    pub parameter: &'static str,
    pub table_value: String,
    pub model_value: String,
}

struct TableColumn {
    region: Region,
    alias: u8,
    channels: &'static str,
    ocw_khz: &'static str,
    carriers: &'static str,
    usable: &'static str,
    coding_rate: &'static str,
    bit_rate: &'static str,
    max_payload: &'static str,
    max_fragments: &'static str,
    replicas: &'static str,
    toa: &'static str,
}

const TABLE: [TableColumn; 6] = [
    TableColumn {
        region: Region::Eu868,
        alias: 8,
        channels: "7",
        ocw_khz: "137",
        carriers: "280 (8x35)",
        usable: "35",
        coding_rate: "1/3",
        bit_rate: "162",
        max_payload: "58",
        max_fragments: "61",
        replicas: "3",
        toa: "0.70 + 3.06",
    },
    TableColumn {
        region: Region::Eu868,
        alias: 9,
        channels: "4",
        ocw_khz: "137",
        carriers: "280 (8x35)",
        usable: "35",
        coding_rate: "2/3",
        bit_rate: "325",
        max_payload: "123",
        max_fragments: "64",
        replicas: "2",
        toa: "0.47 + 3.19",
    },
    TableColumn {
        region: Region::Eu868,
        alias: 10,
        channels: "7",
        ocw_khz: "336",
        carriers: "688 (8x86)",
        usable: "86",
        coding_rate: "1/3",
        bit_rate: "162",
        max_payload: "58",
        max_fragments: "61",
        replicas: "3",
        toa: "0.70 + 3.06",
    },
    TableColumn {
        region: Region::Eu868,
        alias: 11,
        channels: "4",
        ocw_khz: "336",
        carriers: "688 (8x86)",
        usable: "86",
        coding_rate: "2/3",
        bit_rate: "325",
        max_payload: "123",
        max_fragments: "64",
        replicas: "2",
        toa: "0.47 + 3.19",
    },
    TableColumn {
        region: Region::Us915,
        alias: 5,
        channels: "8",
        ocw_khz: "1523",
        carriers: "3120 (52x60)",
        usable: "60",
        coding_rate: "1/3",
        bit_rate: "162",
        max_payload: "125",
        max_fragments: "130",
        replicas: "3",
        toa: "0.70 + 6.48",
    },
    TableColumn {
        region: Region::Us915,
        alias: 6,
        channels: "8",
        ocw_khz: "1523",
        carriers: "3120 (52x60)",
        usable: "60",
        coding_rate: "2/3",
        bit_rate: "325",
        max_payload: "125",
        max_fragments: "65",
        replicas: "2",
        toa: "0.47 + 3.24",
    },
];

/// Published LoRa-E table values paired with the model's numbers.
pub fn provenance_table() -> Vec<ProvenanceRow> {
    let mut rows = Vec::new();
    for col in &TABLE {
        let p = dr_profile(col.region, DrAlias(col.alias)).expect("table column is defined");
        let plan = p.plan().expect("table columns are LoRa-E");
        let max = p.max_payload_bytes;
        let frags = lorae_fragment_count(&p, max).expect("max payload is valid");
        let header_s = (u64::from(p.header_replicas) * p.header_duration_ms) as f64 / 1000.0;
        let payload_s = (u64::from(frags) * p.fragment_duration_ms) as f64 / 1000.0;
        let cells: [(&'static str, &str, String); 13] = [
            ("num_channels", col.channels, plan.num_ocw_channels.to_string()),
            ("ocw_khz", col.ocw_khz, format!("{}", plan.ocw_bandwidth_hz / 1000)),
            ("obw_hz", "488", plan.obw_bandwidth_hz.to_string()),
            (
                "min_hop_separation_khz",
                if col.region == Region::Eu868 { "3.9" } else { "25.4" },
                format!("{}", f64::from(plan.min_hop_separation_hz) / 1000.0),
            ),
            (
                "carriers_available",
                col.carriers,
                format!("{} ({}x{})", plan.total_carriers, plan.num_grids, plan.carriers_per_grid),
            ),
            ("carriers_usable", col.usable, plan.carriers_per_grid.to_string()),
            ("coding_rate", col.coding_rate, p.coding_rate.to_string()),
            ("phy_bit_rate_bps", col.bit_rate, p.phy_bit_rate_bps.to_string()),
            ("max_payload_bytes", col.max_payload, max.to_string()),
            ("max_payload_fragments", col.max_fragments, frags.to_string()),
            ("header_replicas", col.replicas, p.header_replicas.to_string()),
            ("header_duration_s", "0.233", format!("{:.3}", p.header_duration_ms as f64 / 1000.0)),
            ("time_on_air_s", col.toa, format!("{header_s:.3} + {payload_s:.2}")),
        ];
        for (parameter, table_value, model_value) in cells {
            rows.push(ProvenanceRow {
                region: col.region,
                alias: p.alias,
                parameter,
                table_value: table_value.to_string(),
                model_value,
            });
        }
    }
    rows
}

/// Renders the provenance table as CSV.
pub fn provenance_csv() -> String {
    let mut out = String::from("region,dr,parameter,table_value,model_value\n");
    for r in provenance_table() {
        out.push_str(&format!(
            "{},{},{},\"{}\",\"{}\"\n",
            r.region, r.alias, r.parameter, r.table_value, r.model_value
        ));
    }
    out
}
