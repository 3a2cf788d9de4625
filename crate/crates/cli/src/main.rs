use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use oran_slice::experiment::{gnuplot_script, run_experiment, write_aggregate_csv, write_raw_csv, ExperimentSpec};
use oran_slice::io::{write_json, ScenarioFile};
use oran_slice::oracle::{
    brute_force_mapping, exhaustive_placement, write_reports_csv, OracleMode, OracleReport, DEFAULT_POWER_GRID,
};
use oran_slice::placement::{admitted_ratio, cost_psi, place};
use oran_slice::power::write_trace_csv;
use oran_slice::{
    generate_scenario, map_slices_to_services, solve_joint, ChannelSet, Error, GeneratorConfig, JointSolution,
    MappingAs, Placement, PlacementWeights, PowerOptions, Radio, RankingWeights, Result,
};

/// Admission weight used by `place --single-dc` unless `--nu` is given.
const SINGLE_DC_NU: f64 = 1e6;

#[derive(Parser)]
#[command(name = "oran-slice", version, about = "Slice mapping, power allocation and VNF placement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random scenario and write it as JSON.
    Generate {
        /// Generator settings (JSON); missing fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Map slices to services and allocate powers.
    Solve {
        scenario: PathBuf,
        /// Solver options (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the Dinkelbach trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Compare against the exhaustive search.
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Place the slices of a mapping on data centers.
    Place {
        scenario: PathBuf,
        /// JSON holding a mapping, either `{"a": ...}` or a `solve` result.
        /// Without it the greedy mapping is computed first.
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Host every slice on a single DC.
        #[arg(long)]
        single_dc: bool,
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run a sweep and write mean and stddev per point as CSV.
    Experiment {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replace the seed list with `0..N`.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Admission weight in the placement cost (default: the scenario's,
    /// or 1e6 with `--single-dc`).
    #[arg(long)]
    nu: Option<f64>,
    /// Placement weights as `wM,wS,wC`.
    #[arg(long, value_parser = parse_weights)]
    weights: Option<PlacementWeights>,
    /// Bits per packet.
    #[arg(long)]
    packet_size: Option<f64>,
}

fn parse_weights(text: &str) -> std::result::Result<PlacementWeights, String> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    let [w_m, w_s, w_c] = parts[..] else {
        return Err(format!("expected three comma-separated weights, got {}", parts.len()));
    };
    let w = PlacementWeights { w_m, w_s, w_c };
    w.check().map_err(|e| e.to_string())?;
    Ok(w)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn load_scenario(path: &Path, common: &Common) -> Result<ScenarioFile> {
    let mut file = ScenarioFile::read(path)?;
    let params = &mut file.scenario.params;
    if let Some(nu) = common.nu {
        params.nu = nu;
    }
    if let Some(l) = common.packet_size {
        params.packet_size_bits = l;
    }
    file.check()?;
    Ok(file)
}

fn read_mapping(path: &Path) -> Result<MappingAs> {
    let mut value: serde_json::Value = read_json(path)?;
    if let Some(inner) = value.get_mut("mapping") {
        value = inner.take();
    }
    Ok(serde_json::from_value(value)?)
}

fn digest(path: &Path) -> Result<String> {
    Ok(format!("{:x}", Sha256::digest(fs::read(path)?)))
}

fn cmd_generate(config: Option<&Path>, seed: u64, out: &Path) -> Result<()> {
    let cfg: GeneratorConfig = match config {
        Some(p) => read_json(p)?,
        None => GeneratorConfig::default(),
    };
    let sc = generate_scenario(&cfg, seed)?;
    let ch = ChannelSet::generate(&sc, &cfg.channel, seed);
    ScenarioFile::new(sc, ch, cfg.channel, Some(seed)).write(out)?;
    println!("sha256 {}  {}", digest(out)?, out.display());
    Ok(())
}

#[derive(Serialize)]
struct SolveReport<'a> {
    #[serde(flatten)]
    solution: &'a JointSolution,
    oracle: Option<OracleReport>,
}

fn cmd_solve(
    path: &Path,
    config: Option<&Path>,
    out: Option<&Path>,
    trace: Option<&Path>,
    oracle: bool,
    common: &Common,
) -> Result<()> {
    let file = load_scenario(path, common)?;
    let opts: PowerOptions = match config {
        Some(p) => read_json(p)?,
        None => PowerOptions::default(),
    };
    let (sc, ch) = (&file.scenario, &file.channels);
    let sol = solve_joint(sc, ch, &opts)?;
    println!(
        "eta={:.6e} r_tot={:.6e} p_tot={:.6e} iterations={} converged={} feasible={} violated={:?}",
        sol.eta, sol.r_tot, sol.p_tot, sol.iterations, sol.converged, sol.feasible, sol.violated
    );
    for w in &sol.warnings {
        eprintln!("warning: {w}");
    }
    let report = if oracle {
        let start = Instant::now();
        match brute_force_mapping(sc, ch, DEFAULT_POWER_GRID)? {
            Some(o) => {
                let r = OracleReport::new(path.display().to_string(), o.eta, sol.eta, start.elapsed().as_secs_f64());
                println!("oracle_eta={:.6e} gap={:.6}", r.oracle, r.gap);
                Some(r)
            }
            None => {
                println!("oracle: no feasible point on the grid");
                None
            }
        }
    } else {
        None
    };
    if let Some(t) = trace {
        write_trace_csv(&sol.trace, fs::File::create(t)?)?;
    }
    if let Some(o) = out {
        write_json(&SolveReport { solution: &sol, oracle: report }, o)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PlaceReport<'a> {
    mapping: &'a MappingAs,
    #[serde(flatten)]
    placement: &'a Placement,
    phi_tot: f64,
    psi_tot: f64,
    admitted_ratio: f64,
    oracle: Option<OracleReport>,
}

fn cmd_place(
    path: &Path,
    mapping: Option<&Path>,
    out: Option<&Path>,
    single_dc: bool,
    oracle: bool,
    common: &Common,
) -> Result<()> {
    let mut file = load_scenario(path, common)?;
    if single_dc && common.nu.is_none() {
        file.scenario.params.nu = SINGLE_DC_NU;
    }
    let sc = &file.scenario;
    let weights = common.weights.unwrap_or_default();
    let a = match mapping {
        Some(p) => read_mapping(p)?,
        None => {
            let radio = Radio::new(sc, &file.channels)?;
            map_slices_to_services(&radio, &RankingWeights::default())?.mapping
        }
    };
    a.check(sc)?;
    let pl = place(sc, &a, &weights, single_dc)?;
    let (phi, psi) = cost_psi(sc, &a, &pl, &weights);
    let ratio = admitted_ratio(&pl, single_dc);
    println!(
        "admitted={}/{} admitted_ratio={ratio:.6} phi_tot={phi:.6e} psi_tot={psi:.6e}",
        pl.n_admitted(),
        pl.active.iter().filter(|&&x| x).count()
    );
    // Single-DC runs compare admitted ratios, multi-DC runs compare φ with
    // every active slice admitted.
    let report = if oracle {
        let start = Instant::now();
        let mode = if single_dc {
            OracleMode::SingleDc
        } else {
            OracleMode::MultiDc { strict: true }
        };
        exhaustive_placement(sc, &a, &weights, mode)?.map(|o| {
            let (best, ours) = if single_dc {
                (admitted_ratio(&o.placement, true), ratio)
            } else {
                (o.phi, phi)
            };
            OracleReport::new(path.display().to_string(), best, ours, start.elapsed().as_secs_f64())
        })
    } else {
        None
    };
    if let Some(r) = &report {
        write_reports_csv(std::slice::from_ref(r), std::io::stdout().lock())?;
    }
    if let Some(o) = out {
        let body = PlaceReport {
            mapping: &a,
            placement: &pl,
            phi_tot: phi,
            psi_tot: psi,
            admitted_ratio: ratio,
            oracle: report,
        };
        write_json(&body, o)?;
    }
    Ok(())
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}{suffix}"))
}

fn cmd_experiment(path: &Path, out: &Path, seed: Option<u64>, common: &Common) -> Result<()> {
    let mut spec: ExperimentSpec = read_json(path)?;
    if let Some(n) = seed {
        spec.seeds = (0..n).collect();
    }
    if let Some(nu) = common.nu {
        spec.nu = Some(nu);
    }
    if let Some(w) = common.weights {
        spec.weights = w;
    }
    if let Some(l) = common.packet_size {
        spec.generator.params.packet_size_bits = l;
    }
    let result = run_experiment(&spec)?;
    write_aggregate_csv(&result.aggregate, fs::File::create(out)?)?;
    let raw = sibling(out, ".raw.csv");
    write_raw_csv(&result.raw, fs::File::create(&raw)?)?;
    if spec.plot {
        let name = out.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        fs::write(sibling(out, ".gp"), gnuplot_script(&spec, &name))?;
    }
    let failed: usize = result.aggregate.iter().map(|r| r.n_failed).sum();
    let trend = result.aggregate.iter().filter_map(|r| r.trend_ok).all(|t| t);
    println!(
        "points={} failed={failed} trend_ok={trend} out={}",
        result.raw.len(),
        out.display()
    );
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig { .. }
        | Error::DimensionMismatch(_)
        | Error::UnknownExpression(_)
        | Error::Json(_)
        | Error::Io(_)
        | Error::Csv(_) => 2,
        Error::Infeasible { .. }
        | Error::InfeasibleDelay { .. }
        | Error::UnstableQueue { .. }
        | Error::SingularChannel { .. }
        | Error::DegenerateCoefficient { .. } => 3,
        Error::TooLarge(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate { config, seed, out } => cmd_generate(config.as_deref(), *seed, out),
        Command::Solve {
            scenario,
            config,
            out,
            trace,
            oracle,
            common,
        } => cmd_solve(scenario, config.as_deref(), out.as_deref(), trace.as_deref(), *oracle, common),
        Command::Place {
            scenario,
            mapping,
            out,
            single_dc,
            oracle,
            common,
        } => cmd_place(scenario, mapping.as_deref(), out.as_deref(), *single_dc, *oracle, common),
        Command::Experiment {
            spec,
            out,
            seed,
            common,
        } => cmd_experiment(spec, out, *seed, common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
