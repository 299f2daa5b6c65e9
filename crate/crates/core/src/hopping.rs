//! LoRa-E frequency hopping.
//!
//! A device carries a 9-bit hopping seed. Hop `k` of a packet lands on slot
//! `hash(seed + k * 2^16) mod carriers_per_grid` of the grid the packet was
//! started on. Slots are `min_hop_separation_hz` apart inside a grid and the
//! grids themselves are interleaved at OBW pitch.

use std::fmt;

use thiserror::Error;

use crate::params::RegionalPlan;

/// Multipliers of the hop hash. Shift amounts are 16/15/16.
///
/// Selected from odd 32-bit candidates so that slots drawn over the whole
/// seed space stay within 5% of the uniform count on every grid size.
pub const HASH_MUL_1: u32 = 0x9e12_0a4d;
pub const HASH_MUL_2: u32 = 0x1777_b3e5;

pub const SEED_BITS: u32 = 9;
pub const SEED_COUNT: u16 = 1 << SEED_BITS;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HoppingError {
    #[error("hopping seed {0} does not fit in 9 bits")]
    SeedRange(u32),
    #[error("carrier {carrier} lies outside the channel plan")]
    OutOfPlan { carrier: CarrierId },
    #[error("carrier {carrier} at {frequency_hz} Hz falls outside the operating channel")]
    OutOfBand { carrier: CarrierId, frequency_hz: f64 },
    #[error("grid {grid} is not below {num_grids}")]
    GridRange { grid: u32, num_grids: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HoppingSeed(u16);

impl HoppingSeed {
    pub fn new(value: u32) -> Result<Self, HoppingError> {
        if value >= u32::from(SEED_COUNT) {
            return Err(HoppingError::SeedRange(value));
        }
        Ok(HoppingSeed(value as u16))
    }

    pub fn value(self) -> u16 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = HoppingSeed> {
        (0..SEED_COUNT).map(HoppingSeed)
    }
}

/// One physical OBW sub-carrier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CarrierId {
    pub ocw_channel: u16,
    pub grid: u16,
    pub slot: u16,
}

impl fmt::Display for CarrierId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.ocw_channel, self.grid, self.slot)
    }
}

/// 32-bit hash of hop `hop_index` for `seed`.
pub fn hop_hash(seed: HoppingSeed, hop_index: u32) -> u32 {
    let mut h = u32::from(seed.0).wrapping_add(hop_index.wrapping_mul(1 << 16));
    h ^= h >> 16;
    h = h.wrapping_mul(HASH_MUL_1);
    h ^= h >> 15;
    h = h.wrapping_mul(HASH_MUL_2);
    h ^= h >> 16;
    h
}

/// Slot indices of the first `n_hops` hops, before grid placement.
///
/// A hop that would repeat the previous slot moves one slot up so that
/// consecutive hops always honour the minimum separation.
pub fn hop_slots(seed: HoppingSeed, n_hops: u32, carriers_per_grid: u32) -> impl Iterator<Item = u16> {
    let mut prev: Option<u32> = None;
    (0..n_hops).map(move |k| {
        let mut slot = hop_hash(seed, k) % carriers_per_grid;
        if prev == Some(slot) {
            slot = (slot + 1) % carriers_per_grid;
        }
        prev = Some(slot);
        slot as u16
    })
}

/// Hopping sequence of a packet started on `grid` in OCW channel 0.
pub fn hopping_sequence(
    seed: HoppingSeed,
    grid: u32,
    n_hops: u32,
    plan: &RegionalPlan,
) -> Result<Vec<CarrierId>, HoppingError> {
    hopping_sequence_on(seed, 0, grid, n_hops, plan)
}

pub fn hopping_sequence_on(
    seed: HoppingSeed,
    ocw_channel: u16,
    grid: u32,
    n_hops: u32,
    plan: &RegionalPlan,
) -> Result<Vec<CarrierId>, HoppingError> {
    if grid >= plan.num_grids {
        return Err(HoppingError::GridRange {
            grid,
            num_grids: plan.num_grids,
        });
    }
    Ok(hop_slots(seed, n_hops, plan.carriers_per_grid)
        .map(|slot| CarrierId {
            ocw_channel,
            grid: grid as u16,
            slot,
        })
        .collect())
}

/// Centre frequency of a sub-carrier.
///
/// The grid layout is centred on `channel_center_hz`; slot `s` of grid `g`
/// sits `g * obw + s * min_hop_separation` above the lowest carrier.
pub fn carrier_frequency(
    plan: &RegionalPlan,
    channel_center_hz: f64,
    c: CarrierId,
) -> Result<f64, HoppingError> {
    if u32::from(c.grid) >= plan.num_grids
        || u32::from(c.slot) >= plan.carriers_per_grid
        || u32::from(c.ocw_channel) >= plan.num_ocw_channels.max(1)
    {
        return Err(HoppingError::OutOfPlan { carrier: c });
    }
    let obw = f64::from(plan.obw_bandwidth_hz);
    let sep = f64::from(plan.min_hop_separation_hz);
    let span = f64::from(plan.carriers_per_grid - 1) * sep + f64::from(plan.num_grids - 1) * obw;
    let base = channel_center_hz - span / 2.0;
    let f = base + f64::from(c.grid) * obw + f64::from(c.slot) * sep;

    // Half an OBW of slack at each edge.
    let limit = f64::from(plan.ocw_bandwidth_hz) / 2.0 + obw / 2.0;
    if (f - channel_center_hz).abs() > limit {
        return Err(HoppingError::OutOfBand {
            carrier: c,
            frequency_hz: f,
        });
    }
    Ok(f)
}

/// Golden sequence files: `#` comments, then one `channel,grid,slot` per line.
pub mod golden {
    use super::CarrierId;
    use thiserror::Error;

    #[derive(Debug, Error, Clone, PartialEq, Eq)]
    pub enum GoldenError {
        #[error("line {line}: expected `channel,grid,slot`")]
        Shape { line: usize },
        #[error("line {line}: {field:?} is not a valid index")]
        Field { line: usize, field: String },
    }

    pub fn parse(text: &str) -> Result<Vec<CarrierId>, GoldenError> {
        let mut out = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let [ch, grid, slot] = fields[..] else {
                return Err(GoldenError::Shape { line: i + 1 });
            };
            let num = |f: &str| {
                f.parse::<u16>().map_err(|_| GoldenError::Field {
                    line: i + 1,
                    field: f.to_string(),
                })
            };
            out.push(CarrierId {
                ocw_channel: num(ch)?,
                grid: num(grid)?,
                slot: num(slot)?,
            });
        }
        Ok(out)
    }

    pub fn render(header: &str, carriers: &[CarrierId]) -> String {
        let mut out = String::new();
        for l in header.lines() {
            out.push_str("# ");
            out.push_str(l);
            out.push('\n');
        }
        for c in carriers {
            out.push_str(&c.to_string());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{dr_profile, DrAlias, Region};

    fn eu_plan() -> RegionalPlan {
        dr_profile(Region::Eu868, DrAlias(8)).unwrap().plan().unwrap()
    }

    fn us_plan() -> RegionalPlan {
        dr_profile(Region::Us915, DrAlias(5)).unwrap().plan().unwrap()
    }

    #[test]
    fn seed_range() {
        assert!(HoppingSeed::new(511).is_ok());
        assert_eq!(HoppingSeed::new(512), Err(HoppingError::SeedRange(512)));
        assert_eq!(HoppingSeed::all().count(), 512);
    }

    #[test]
    fn hash_is_deterministic() {
        for s in HoppingSeed::all().step_by(7) {
            for k in 0..70 {
                assert_eq!(hop_hash(s, k), hop_hash(s, k));
            }
        }
    }

    #[test]
    fn sequence_confined_to_grid() {
        let plan = eu_plan();
        let seq = hopping_sequence(HoppingSeed::new(42).unwrap(), 5, 40, &plan).unwrap();
        assert_eq!(seq.len(), 40);
        assert!(seq.iter().all(|c| c.grid == 5 && c.ocw_channel == 0));
        assert!(seq.iter().all(|c| u32::from(c.slot) < plan.carriers_per_grid));
        assert!(hopping_sequence(HoppingSeed::new(42).unwrap(), 8, 4, &plan).is_err());
    }

    #[test]
    fn consecutive_slots_differ_exhaustively() {
        for cpg in [35, 86, 60] {
            for s in HoppingSeed::all() {
                let slots: Vec<u16> = hop_slots(s, 64, cpg).collect();
                assert!(slots.windows(2).all(|w| w[0] != w[1]), "seed {} cpg {cpg}", s.value());
            }
        }
    }

    #[test]
    fn adjacent_grids_are_one_obw_apart() {
        let plan = eu_plan();
        let a = CarrierId { ocw_channel: 0, grid: 2, slot: 9 };
        let b = CarrierId { grid: 3, ..a };
        let fa = carrier_frequency(&plan, 868_100_000.0, a).unwrap();
        let fb = carrier_frequency(&plan, 868_100_000.0, b).unwrap();
        assert_eq!(fb - fa, 488.0);
    }

    #[test]
    fn hop_distance_meets_regulation() {
        for (plan, min) in [(eu_plan(), 3_900.0), (us_plan(), 25_400.0)] {
            for s in HoppingSeed::all() {
                for grid in [0, plan.num_grids - 1] {
                    let seq = hopping_sequence(s, grid, 66, &plan).unwrap();
                    let freqs: Vec<f64> = seq
                        .iter()
                        .map(|&c| carrier_frequency(&plan, 903_000_000.0, c).unwrap())
                        .collect();
                    assert!(freqs.windows(2).all(|w| (w[1] - w[0]).abs() >= min));
                }
            }
        }
    }

    #[test]
    fn every_carrier_is_in_band() {
        for plan in [eu_plan(), us_plan(), dr_profile(Region::Eu868, DrAlias(10)).unwrap().plan().unwrap()] {
            for grid in 0..plan.num_grids as u16 {
                for slot in 0..plan.carriers_per_grid as u16 {
                    let c = CarrierId { ocw_channel: 0, grid, slot };
                    assert!(carrier_frequency(&plan, 0.0, c).is_ok(), "{c}");
                }
            }
            let over = CarrierId { ocw_channel: 0, grid: 0, slot: plan.carriers_per_grid as u16 };
            assert_eq!(
                carrier_frequency(&plan, 0.0, over),
                Err(HoppingError::OutOfPlan { carrier: over })
            );
        }
    }

    #[test]
    fn golden_parse_errors() {
        assert_eq!(golden::parse("# c\n\n0,1,2\n").unwrap().len(), 1);
        assert_eq!(golden::parse("0,1"), Err(golden::GoldenError::Shape { line: 1 }));
        assert!(matches!(golden::parse("0,1,x"), Err(golden::GoldenError::Field { .. })));
        assert!(matches!(golden::parse("0,1,70000"), Err(golden::GoldenError::Field { .. })));
    }
}
