//! Packet placement, collision detection and decoding.
//!
//! Time is in integer milliseconds and frequency in OBW sub-carriers. Two
//! emissions collide iff they occupy the same carrier during intersecting
//! half-open intervals; any such intersection destroys both. A legacy LoRa
//! packet occupies its whole channel, so all LoRa packets of a scenario
//! share one carrier token regardless of spreading factor.

use rand::Rng;
use thiserror::Error;

use crate::hopping::{hop_slots, CarrierId, HoppingSeed};
use crate::params::{DataRateProfile, Family, ParamError, RegionalPlan};
use crate::traffic::{generate_schedule, DeviceConfig, StreamSeed};

/// Four simulated hours.
pub const DEFAULT_HORIZON_MS: u64 = 4 * 3_600_000;

const MS_PER_HOUR: f64 = 3_600_000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("scenario mixes LoRa and LoRa-E devices")]
    MixedFamilies,
    #[error("scenario mixes regions or operating channel widths")]
    MixedPlans,
    #[error("horizon must be positive")]
    EmptyHorizon,
    #[error("grid {grid} is outside the {num_grids}-grid plan")]
    GridRange { grid: u16, num_grids: u32 },
    #[error(transparent)]
    Param(#[from] ParamError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Carrier {
    Sub(CarrierId),
    /// A whole 125 kHz LoRa channel.
    LoraChannel(u16),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EmissionKind {
    HeaderReplica(u8),
    Fragment(u16),
    LoraPacket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PacketId(pub u32);

/// One contiguous occupation of a carrier over `[t_start_ms, t_end_ms)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emission {
    pub carrier: Carrier,
    pub t_start_ms: u64,
    pub t_end_ms: u64,
    pub kind: EmissionKind,
    pub owner: PacketId,
    pub collided: bool,
}

impl Emission {
    pub fn overlaps(&self, other: &Emission) -> bool {
        self.carrier == other.carrier
            && self.t_start_ms < other.t_end_ms
            && other.t_start_ms < self.t_end_ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Decoded,
    LostHeader,
    LostPayload,
    LostCollision,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionAttempt {
    pub packet_id: PacketId,
    pub device_id: u32,
    pub profile: DataRateProfile,
    pub payload_bytes: u32,
    pub start_ms: u64,
    /// Ignored for legacy LoRa.
    pub grid: u16,
    pub seed: HoppingSeed,
    pub outcome: Option<Outcome>,
}

impl TransmissionAttempt {
    fn plan(&self) -> Option<RegionalPlan> {
        self.profile.plan()
    }
}

/// Appends the emissions of `attempt` to `out`.
pub fn emit_into(attempt: &TransmissionAttempt, out: &mut Vec<Emission>) -> Result<(), EngineError> {
    let p = &attempt.profile;
    let owner = attempt.packet_id;
    match p.family {
        Family::Lora => {
            let toa = p.time_on_air_ms(attempt.payload_bytes)?;
            out.push(Emission {
                carrier: Carrier::LoraChannel(0),
                t_start_ms: attempt.start_ms,
                t_end_ms: attempt.start_ms + toa,
                kind: EmissionKind::LoraPacket,
                owner,
                collided: false,
            });
        }
        Family::LoraE => {
            let plan = attempt.plan().expect("LoRa-E profile has a plan");
            if u32::from(attempt.grid) >= plan.num_grids {
                return Err(EngineError::GridRange {
                    grid: attempt.grid,
                    num_grids: plan.num_grids,
                });
            }
            let fragments = crate::params::lorae_fragment_count(p, attempt.payload_bytes)?;
            let replicas = p.header_replicas;
            let mut t = attempt.start_ms;
            for (k, slot) in hop_slots(attempt.seed, replicas + fragments, plan.carriers_per_grid).enumerate() {
                let k = k as u32;
                let (kind, len) = if k < replicas {
                    (EmissionKind::HeaderReplica(k as u8), p.header_duration_ms)
                } else {
                    (EmissionKind::Fragment((k - replicas) as u16), p.fragment_duration_ms)
                };
                out.push(Emission {
                    carrier: Carrier::Sub(CarrierId {
                        ocw_channel: 0,
                        grid: attempt.grid,
                        slot,
                    }),
                    t_start_ms: t,
                    t_end_ms: t + len,
                    kind,
                    owner,
                    collided: false,
                });
                t += len;
            }
        }
    }
    Ok(())
}

/// Emissions of one attempt in transmission order.
pub fn enumerate_emissions(attempt: &TransmissionAttempt) -> Result<Vec<Emission>, EngineError> {
    let mut out = Vec::new();
    emit_into(attempt, &mut out)?;
    Ok(out)
}

/// Recomputes every `collided` flag.
///
/// The slice is reordered by carrier, then start time, then owner. Each
/// carrier is swept once in start order while tracking the emission that
/// reaches furthest; an emission starting before that end overlaps it.
pub fn detect_collisions(emissions: &mut [Emission]) {
    emissions.sort_unstable_by_key(|e| (e.carrier, e.t_start_ms, e.owner, e.kind));
    for e in emissions.iter_mut() {
        e.collided = false;
    }
    let mut group_start = 0;
    while group_start < emissions.len() {
        let carrier = emissions[group_start].carrier;
        let mut group_end = group_start + 1;
        while group_end < emissions.len() && emissions[group_end].carrier == carrier {
            group_end += 1;
        }
        sweep_carrier(&mut emissions[group_start..group_end]);
        group_start = group_end;
    }
}

fn sweep_carrier(group: &mut [Emission]) {
    let mut reach = 0;
    for i in 1..group.len() {
        if group[i].t_start_ms < group[reach].t_end_ms {
            group[i].collided = true;
            group[reach].collided = true;
        }
        if group[i].t_end_ms > group[reach].t_end_ms {
            reach = i;
        }
    }
}

/// Surviving pieces of one packet.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Reception {
    pub headers_total: u32,
    pub headers_clean: u32,
    pub fragments_total: u32,
    pub fragments_clean: u32,
    /// Legacy LoRa: the single emission was not hit.
    pub lora_clean: bool,
}

impl Reception {
    pub fn record(&mut self, e: &Emission) {
        let clean = !e.collided;
        match e.kind {
            EmissionKind::HeaderReplica(_) => {
                self.headers_total += 1;
                self.headers_clean += u32::from(clean);
            }
            EmissionKind::Fragment(_) => {
                self.fragments_total += 1;
                self.fragments_clean += u32::from(clean);
            }
            EmissionKind::LoraPacket => self.lora_clean = clean,
        }
    }

    pub fn from_emissions<'a>(emissions: impl IntoIterator<Item = &'a Emission>) -> Self {
        let mut r = Reception::default();
        for e in emissions {
            r.record(e);
        }
        r
    }
}

/// Decoding rule.
///
/// LoRa-E needs one clean header replica and at least
/// `ceil(coding_rate * fragments)` clean fragments.
pub fn adjudicate(profile: &DataRateProfile, rx: &Reception) -> Outcome {
    match profile.family {
        Family::Lora if rx.lora_clean => Outcome::Decoded,
        Family::Lora => Outcome::LostCollision,
        Family::LoraE => {
            if rx.headers_clean == 0 {
                Outcome::LostHeader
            } else if rx.fragments_clean < profile.coding_rate.ceil_of(rx.fragments_total) {
                Outcome::LostPayload
            } else {
                Outcome::Decoded
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub devices: Vec<DeviceConfig>,
    pub horizon_ms: u64,
    pub master_seed: u64,
}

impl Scenario {
    /// `count` identical devices with ids `0..count`.
    pub fn uniform(
        profile: DataRateProfile,
        payload_bytes: u32,
        count: u32,
        horizon_ms: u64,
        master_seed: u64,
    ) -> Result<Self, EngineError> {
        let devices = (0..count)
            .map(|id| DeviceConfig::new(id, profile, payload_bytes))
            .collect::<Result<_, _>>()?;
        Ok(Scenario {
            devices,
            horizon_ms,
            master_seed,
        })
    }

    fn validate(&self) -> Result<(), EngineError> {
        if self.horizon_ms == 0 {
            return Err(EngineError::EmptyHorizon);
        }
        let Some(first) = self.devices.first() else {
            return Ok(());
        };
        for d in &self.devices {
            if d.profile.family != first.profile.family {
                return Err(EngineError::MixedFamilies);
            }
            if d.profile.region != first.profile.region
                || d.profile.ocw_bandwidth_hz != first.profile.ocw_bandwidth_hz
            {
                return Err(EngineError::MixedPlans);
            }
            d.profile.check_payload(d.payload_bytes)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LossBreakdown {
    pub header: u64,
    pub payload: u64,
    pub collision: u64,
}

impl LossBreakdown {
    pub fn total(&self) -> u64 {
        self.header + self.payload + self.collision
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub devices: u32,
    pub horizon_ms: u64,
    pub master_seed: u64,
    pub generated_packets: u64,
    pub decoded_packets: u64,
    pub decoded_bytes: u64,
    pub losses: LossBreakdown,
    /// Sum of the devices' duty-cycle limited rates.
    pub offered_load_packets_per_hour: f64,
    pub generated_packets_per_hour: f64,
    pub throughput_packets_per_hour: f64,
    pub goodput_bytes_per_hour: f64,
}

impl ScenarioResult {
    pub fn decode_ratio(&self) -> f64 {
        if self.generated_packets == 0 {
            1.0
        } else {
            self.decoded_packets as f64 / self.generated_packets as f64
        }
    }
}

/// Simulates one scenario.
///
/// Deterministic in the scenario: device `i` draws arrivals from stream
/// `2i` and its hopping seed plus per-packet grids from stream `2i + 1` of
/// the master seed.
pub fn run(scenario: &Scenario) -> Result<ScenarioResult, EngineError> {
    scenario.validate()?;
    let horizon = scenario.horizon_ms;
    let per_hour = MS_PER_HOUR / horizon as f64;

    let mut owners: Vec<u32> = Vec::new();
    let mut emissions: Vec<Emission> = Vec::new();
    let mut offered = 0.0;

    for (index, dev) in scenario.devices.iter().enumerate() {
        offered += dev.max_packet_rate();
        let schedule = generate_schedule(dev, horizon, StreamSeed::arrivals(scenario.master_seed, dev.device_id));
        let mut radio = StreamSeed::radio(scenario.master_seed, dev.device_id).rng();
        let seed = HoppingSeed::new(radio.gen_range(0..u32::from(crate::hopping::SEED_COUNT)))
            .expect("drawn within range");
        let num_grids = dev.profile.plan().map_or(1, |p| p.num_grids);

        for &start_ms in &schedule.start_times {
            let grid = radio.gen_range(0..num_grids) as u16;
            let attempt = TransmissionAttempt {
                packet_id: PacketId(owners.len() as u32),
                device_id: dev.device_id,
                profile: dev.profile,
                payload_bytes: dev.payload_bytes,
                start_ms,
                grid,
                seed,
                outcome: None,
            };
            emit_into(&attempt, &mut emissions)?;
            owners.push(index as u32);
        }
    }

    detect_collisions(&mut emissions);

    let mut rx = vec![Reception::default(); owners.len()];
    for e in &emissions {
        rx[e.owner.0 as usize].record(e);
    }
    drop(emissions);

    let mut decoded = 0u64;
    let mut decoded_bytes = 0u64;
    let mut losses = LossBreakdown::default();
    for (packet, r) in rx.iter().enumerate() {
        let dev = &scenario.devices[owners[packet] as usize];
        match adjudicate(&dev.profile, r) {
            Outcome::Decoded => {
                decoded += 1;
                decoded_bytes += u64::from(dev.payload_bytes);
            }
            Outcome::LostHeader => losses.header += 1,
            Outcome::LostPayload => losses.payload += 1,
            Outcome::LostCollision => losses.collision += 1,
        }
    }

    let generated = owners.len() as u64;
    Ok(ScenarioResult {
        devices: scenario.devices.len() as u32,
        horizon_ms: horizon,
        master_seed: scenario.master_seed,
        generated_packets: generated,
        decoded_packets: decoded,
        decoded_bytes,
        losses,
        offered_load_packets_per_hour: offered,
        generated_packets_per_hour: generated as f64 * per_hour,
        throughput_packets_per_hour: decoded as f64 * per_hour,
        goodput_bytes_per_hour: decoded_bytes as f64 * per_hour,
    })
}
