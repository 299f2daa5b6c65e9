//! Duty-cycle limited Poisson arrivals.
//!
//! Every device draws its own ChaCha8 stream: the generator is seeded with
//! the scenario master seed and the stream number is chosen per device and
//! purpose (see [`StreamSeed::arrivals`] and [`StreamSeed::radio`]). Adding
//! devices never shifts the draws of existing ones.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::params::{DataRateProfile, ParamError};

/// Identifies one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamSeed {
    pub master: u64,
    pub stream: u64,
}

impl StreamSeed {
    pub fn arrivals(master: u64, device_id: u32) -> Self {
        StreamSeed {
            master,
            stream: u64::from(device_id) * 2,
        }
    }

    /// Stream for hopping seed and per-packet grid choices.
    pub fn radio(master: u64, device_id: u32) -> Self {
        StreamSeed {
            master,
            stream: u64::from(device_id) * 2 + 1,
        }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceConfig {
    pub device_id: u32,
    pub profile: DataRateProfile,
    pub payload_bytes: u32,
}

impl DeviceConfig {
    pub fn new(device_id: u32, profile: DataRateProfile, payload_bytes: u32) -> Result<Self, ParamError> {
        profile.check_payload(payload_bytes)?;
        Ok(DeviceConfig {
            device_id,
            profile,
            payload_bytes,
        })
    }

    pub fn time_on_air_ms(&self) -> u64 {
        self.profile
            .time_on_air_ms(self.payload_bytes)
            .expect("payload checked at construction")
    }

    /// Mean gap between packets that saturates the duty cycle.
    pub fn mean_interarrival_ms(&self) -> f64 {
        let toa = self
            .profile
            .exact_time_on_air_ms(self.payload_bytes)
            .expect("payload checked at construction");
        toa / self.profile.region.duty_cycle()
    }

    pub fn max_packet_rate(&self) -> f64 {
        self.profile
            .max_packet_rate(self.payload_bytes)
            .expect("payload checked at construction")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrivalSchedule {
    pub device_id: u32,
    pub start_times: Vec<u64>,
}

/// Exponential gap with the given mean, rounded up to a whole millisecond.
pub fn next_interarrival<R: Rng + ?Sized>(rng: &mut R, mean_ms: f64) -> u64 {
    let x: f64 = Exp1.sample(rng);
    ((x * mean_ms).ceil() as u64).max(1)
}

/// Poisson arrivals on `[0, horizon_ms)`.
pub fn generate_schedule(cfg: &DeviceConfig, horizon_ms: u64, seed: StreamSeed) -> ArrivalSchedule {
    let mean = cfg.mean_interarrival_ms();
    let mut rng = seed.rng();
    let mut start_times = Vec::with_capacity((horizon_ms as f64 / mean * 1.2) as usize + 4);
    let mut t = next_interarrival(&mut rng, mean);
    while t < horizon_ms {
        start_times.push(t);
        t += next_interarrival(&mut rng, mean);
    }
    ArrivalSchedule {
        device_id: cfg.device_id,
        start_times,
    }
}
