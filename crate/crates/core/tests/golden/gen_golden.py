#!/usr/bin/env python3
"""Reference hop hash and hopping sequences for the conformance tests.

Written against the algorithm description, not the Rust code:
    word = seed + hop * 2**16 (mod 2**32)
    h ^= h >> 16; h *= 0x9e120a4d; h ^= h >> 15; h *= 0x1777b3e5; h ^= h >> 16
    slot = h % carriers_per_grid, bumped by one (mod n) when equal to the previous slot
"""

MASK = 0xFFFFFFFF


def hop_hash(seed, hop):
    h = (seed + hop * 65536) & MASK
    h ^= h >> 16
    h = (h * 0x9E120A4D) & MASK
    h ^= h >> 15
    h = (h * 0x1777B3E5) & MASK
    h ^= h >> 16
    return h


def sequence(seed, n_hops, per_grid):
    out, prev = [], None
    for k in range(n_hops):
        s = hop_hash(seed, k) % per_grid
        if s == prev:
            s = (s + 1) % per_grid
        out.append(s)
        prev = s
    return out


def write_sequence(path, header, seed, grid, n_hops, per_grid):
    with open(path, "w") as f:
        for line in header:
            f.write(f"# {line}\n")
        for slot in sequence(seed, n_hops, per_grid):
            f.write(f"0,{grid},{slot}\n")


with open("hop_hash.txt", "w") as f:
    f.write("# seed hop hash\n")
    for seed in (0, 1, 17, 255, 511):
        for hop in (0, 1, 2, 63, 64, 65535):
            f.write(f"{seed} {hop} {hop_hash(seed, hop):08x}\n")

write_sequence("seq_eu_dr8_seed17_grid3.txt",
               ["EU868 DR8 10 B: 3 header replicas + 12 fragments", "seed 17, grid 3"],
               17, 3, 15, 35)
write_sequence("seq_us_dr6_seed300_grid51.txt",
               ["US915 DR6 125 B: 2 header replicas + 66 fragments", "seed 300, grid 51"],
               300, 51, 68, 60)
