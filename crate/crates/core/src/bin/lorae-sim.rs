use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lorae_sim::engine::DEFAULT_HORIZON_MS;
use lorae_sim::experiments::{
    aggregate_capacity, find_crossover, find_peak, log_spaced, matched_device_counts, output, parse_config,
    parse_device_counts, sweep, ConfigFile, CrossoverQuery, ExperimentError, SweepSpec,
};
use lorae_sim::params::{self, dr_profile, DrAlias, Family, Region};

#[derive(Parser)]
#[command(name = "lorae-sim", version, about = "LoRa / LoRa-E uplink capacity simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the LoRa-E parameter table next to the model's values (CSV).
    Params,
    /// Airtime and duty-cycle limited packet rate.
    Toa {
        #[arg(long, default_value = "EU868")]
        region: Region,
        /// Comma-separated data rates; defaults to DR0, DR5, DR8, DR9.
        #[arg(long, value_delimiter = ',')]
        dr: Vec<DrAlias>,
        #[arg(long, value_delimiter = ',', default_value = "10,50")]
        payload: Vec<u32>,
        /// Also write `rates_<payload>B.csv` files here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Goodput versus device count.
    Sweep(SweepArgs),
    /// Load at which LoRa-E goodput overtakes LoRa.
    Crossover {
        #[command(flatten)]
        common: RunArgs,
        #[arg(long, default_value = "DR0")]
        lora_dr: DrAlias,
        #[arg(long, default_value = "DR8")]
        lorae_dr: DrAlias,
        #[arg(long, default_value_t = 10)]
        payload: u32,
        /// LoRa device counts; LoRa-E counts are matched to the same loads.
        #[arg(long, default_value = "log:2:400:40")]
        devices: String,
    },
    /// Network capacity from the per-channel goodput peak.
    Capacity {
        #[command(flatten)]
        common: RunArgs,
        #[arg(long, default_value = "DR8")]
        dr: DrAlias,
        #[arg(long, default_value_t = 10)]
        payload: u32,
        /// Defaults to a log grid around the expected peak.
        #[arg(long)]
        devices: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    region: Option<Region>,
    #[arg(long)]
    horizon_ms: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<u32>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: RunArgs,
    #[arg(long, value_delimiter = ',')]
    dr: Vec<DrAlias>,
    #[arg(long, value_delimiter = ',')]
    payload: Vec<u32>,
    /// e.g. `1..200:5`, `log:1000:30000:16`, `50,100`.
    #[arg(long)]
    devices: Option<String>,
}

struct Resolved {
    file: ConfigFile,
    region: Region,
    horizon_ms: u64,
    seed: u64,
    replications: u32,
    output: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> Result<Resolved, ExperimentError> {
        let file = match &self.config {
            Some(path) => parse_config(&fs::read_to_string(path)?)?,
            None => ConfigFile::default(),
        };
        Ok(Resolved {
            region: self.region.or(file.region).unwrap_or(Region::Eu868),
            horizon_ms: self.horizon_ms.or(file.horizon_ms).unwrap_or(DEFAULT_HORIZON_MS),
            seed: self.seed.or(file.seed).unwrap_or(1),
            replications: self.replications.or(file.replications).unwrap_or(3),
            output: self.output.clone().or_else(|| file.output.clone()),
            file,
        })
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<(), ExperimentError> {
    match cli.command {
        Command::Params => {
            print!("{}", params::provenance_csv());
        }
        Command::Toa {
            region,
            dr,
            payload,
            output,
        } => {
            let drs = if dr.is_empty() {
                output::RATE_TABLE_DRS.iter().map(|&d| DrAlias(d)).collect()
            } else {
                dr
            };
            println!("dr,payload,toa_ms,pkt_per_hour");
            for d in &drs {
                let p = dr_profile(region, *d)?;
                for &b in &payload {
                    println!("{},{},{:.3},{:.1}", d, b, p.exact_time_on_air_ms(b)?, p.max_packet_rate(b)?);
                }
            }
            if let Some(dir) = output {
                for f in output::emit_rate_tables(region, &payload, &dir)? {
                    eprintln!("wrote {}", f.display());
                }
            }
        }
        Command::Sweep(args) => {
            let r = args.common.resolve()?;
            let drs = pick(args.dr, r.file.drs.clone()).unwrap_or_else(|| vec![DrAlias(8)]);
            let payloads = pick(args.payload, r.file.payloads.clone()).unwrap_or_else(|| vec![10]);
            let device_counts = match args.devices {
                Some(s) => parse_device_counts(&s)?,
                None => r.file.device_counts.clone().unwrap_or_else(|| log_spaced(1, 30_000, 25)),
            };
            let spec = SweepSpec {
                region: r.region,
                drs,
                payloads,
                device_counts,
                horizon_ms: r.horizon_ms,
                replications: r.replications,
                master_seed: r.seed,
            };
            let table = sweep(&spec)?;
            match r.output {
                Some(dir) => {
                    for f in output::emit(&table, &dir)? {
                        eprintln!("wrote {}", f.display());
                    }
                }
                None => print!("{}", output::aggregate_csv(&table)),
            }
        }
        Command::Crossover {
            common,
            lora_dr,
            lorae_dr,
            payload,
            devices,
        } => {
            let r = common.resolve()?;
            let q = CrossoverQuery {
                region: r.region,
                lora_dr,
                lorae_dr,
                payload_bytes: payload,
            };
            let (lora, lorae) = q.validate()?;
            let lora_counts = parse_device_counts(&devices)?;
            let lorae_counts = matched_device_counts(&lora, &lorae, payload, &lora_counts)?;
            let run = |dr, counts| {
                sweep(&SweepSpec {
                    region: r.region,
                    drs: vec![dr],
                    payloads: vec![payload],
                    device_counts: counts,
                    horizon_ms: r.horizon_ms,
                    replications: r.replications,
                    master_seed: r.seed,
                })
            };
            let lora_table = run(lora_dr, lora_counts)?;
            let lorae_table = run(lorae_dr, lorae_counts)?;
            if let Some(dir) = &r.output {
                output::emit(&lora_table, &dir.join(lora_dr.to_string()))?;
                output::emit(&lorae_table, &dir.join(lorae_dr.to_string()))?;
            }
            let x = find_crossover(&q, &lora_table.curve(lora_dr, payload), &lorae_table.curve(lorae_dr, payload))?;
            println!("query,crossover_pkts_h");
            println!("{q},{x:.0}");
        }
        Command::Capacity {
            common,
            dr,
            payload,
            devices,
        } => {
            let r = common.resolve()?;
            let profile = dr_profile(r.region, dr)?;
            let counts = match devices {
                Some(s) => parse_device_counts(&s)?,
                None => match profile.family {
                    Family::Lora => (20..=100).step_by(5).collect(),
                    Family::LoraE => log_spaced(2_000, 40_000, 24),
                },
            };
            let table = sweep(&SweepSpec {
                region: r.region,
                drs: vec![dr],
                payloads: vec![payload],
                device_counts: counts,
                horizon_ms: r.horizon_ms,
                replications: r.replications,
                master_seed: r.seed,
            })?;
            if let Some(dir) = &r.output {
                output::emit(&table, dir)?;
            }
            let peak = find_peak(&table.curve(dr, payload)).ok_or(ExperimentError::EmptyTable)?;
            let cap = aggregate_capacity(&profile, peak.refined_load);
            println!("dr,payload,peak_devices,per_channel_pkts_h,channels,data_rates,total_pkts_h");
            println!(
                "{},{},{:.0},{:.0},{},{},{:.0}",
                dr, payload, peak.refined_devices, cap.per_channel_peak_load, cap.channels, cap.data_rates, cap.total_load
            );
        }
    }
    Ok(())
}

fn pick<T>(flag: Vec<T>, file: Option<Vec<T>>) -> Option<Vec<T>> {
    if flag.is_empty() {
        file
    } else {
        Some(flag)
    }
}
