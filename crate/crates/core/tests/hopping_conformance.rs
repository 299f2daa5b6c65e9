use std::collections::HashSet;

use lorae_sim::hopping::{self, carrier_frequency, golden, hop_hash, hop_slots, hopping_sequence, HoppingSeed};
use lorae_sim::params::{dr_profile, lorae_fragment_count, DrAlias, Region, RegionalPlan};

const HOP_HASH: &str = include_str!("golden/hop_hash.txt");
const SEQ_EU: &str = include_str!("golden/seq_eu_dr8_seed17_grid3.txt");
const SEQ_US: &str = include_str!("golden/seq_us_dr6_seed300_grid51.txt");

fn plan(region: Region, dr: u8) -> RegionalPlan {
    dr_profile(region, DrAlias(dr)).unwrap().plan().unwrap()
}

fn max_relative_deviation(counts: &[u64]) -> f64 {
    let expected = counts.iter().sum::<u64>() as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&c| (c as f64 - expected).abs() / expected)
        .fold(0.0, f64::max)
}

#[test]
fn hash_matches_reference_values() {
    let mut n = 0;
    for line in HOP_HASH.lines().filter(|l| !l.starts_with('#')) {
        let f: Vec<&str> = line.split_whitespace().collect();
        let seed = HoppingSeed::new(f[0].parse().unwrap()).unwrap();
        let hop: u32 = f[1].parse().unwrap();
        let want = u32::from_str_radix(f[2], 16).unwrap();
        assert_eq!(hop_hash(seed, hop), want, "seed {} hop {hop}", seed.value());
        n += 1;
    }
    assert_eq!(n, 30);
}

#[test]
fn eu_sequence_matches_golden() {
    let p = dr_profile(Region::Eu868, DrAlias(8)).unwrap();
    let n_hops = p.header_replicas + lorae_fragment_count(&p, 10).unwrap();
    assert_eq!(n_hops, 15);
    let seq = hopping_sequence(HoppingSeed::new(17).unwrap(), 3, n_hops, &p.plan().unwrap()).unwrap();
    assert_eq!(seq, golden::parse(SEQ_EU).unwrap());
}

#[test]
fn us_sequence_matches_golden() {
    let p = dr_profile(Region::Us915, DrAlias(6)).unwrap();
    let n_hops = p.header_replicas + lorae_fragment_count(&p, 125).unwrap();
    let seq = hopping_sequence(HoppingSeed::new(300).unwrap(), 51, n_hops, &p.plan().unwrap()).unwrap();
    assert_eq!(seq, golden::parse(SEQ_US).unwrap());
}

#[test]
fn golden_round_trip() {
    let seq = golden::parse(SEQ_EU).unwrap();
    let text = golden::render("EU868 DR8 10 B: 3 header replicas + 12 fragments\nseed 17, grid 3", &seq);
    assert_eq!(text, SEQ_EU);
}

#[test]
fn raw_hash_uniform_mod_35() {
    let mut counts = [0u64; 35];
    for s in HoppingSeed::all() {
        for k in 0..64 {
            counts[(hop_hash(s, k) % 35) as usize] += 1;
        }
    }
    let dev = max_relative_deviation(&counts);
    assert!(dev <= 0.05, "max deviation {dev:.4}");
}

#[test]
fn slot_usage_uniform_on_every_grid_size() {
    for (per_grid, hops) in [(35, 64), (35, 1024), (86, 1024), (60, 1024)] {
        let mut counts = vec![0u64; per_grid as usize];
        for s in HoppingSeed::all() {
            for slot in hop_slots(s, hops, per_grid) {
                counts[slot as usize] += 1;
            }
        }
        let dev = max_relative_deviation(&counts);
        assert!(dev <= 0.05, "{per_grid} slots, {hops} hops: {dev:.4}");
    }
}

#[test]
fn distinct_seed_grid_pairs_give_distinct_sequences() {
    for (p, n_hops) in [(plan(Region::Eu868, 8), 15), (plan(Region::Us915, 6), 8)] {
        let mut seen: HashSet<Vec<_>> = HashSet::new();
        for s in HoppingSeed::all() {
            for grid in 0..p.num_grids {
                seen.insert(hopping_sequence(s, grid, n_hops, &p).unwrap());
            }
        }
        assert_eq!(seen.len() as u32, u32::from(hopping::SEED_COUNT) * p.num_grids);
    }
}

#[test]
fn consecutive_hops_respect_minimum_separation() {
    for (region, dr) in [(Region::Eu868, 8), (Region::Eu868, 9), (Region::Eu868, 10), (Region::Us915, 5), (Region::Us915, 6)] {
        let prof = dr_profile(region, DrAlias(dr)).unwrap();
        let p = prof.plan().unwrap();
        let n_hops = prof.header_replicas + lorae_fragment_count(&prof, prof.max_payload_bytes).unwrap();
        let min = f64::from(p.min_hop_separation_hz);
        for s in HoppingSeed::all() {
            for grid in 0..p.num_grids {
                let seq = hopping_sequence(s, grid, n_hops, &p).unwrap();
                let mut prev: Option<f64> = None;
                for c in seq {
                    let f = carrier_frequency(&p, 868_100_000.0, c).unwrap();
                    if let Some(q) = prev {
                        assert!((f - q).abs() >= min, "{region} {} seed {} grid {grid}", prof.alias, s.value());
                    }
                    prev = Some(f);
                }
            }
        }
    }
}
