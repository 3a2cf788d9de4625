//! Monte-Carlo sweeps: energy efficiency against mean UE count, admitted
//! slice ratio against slice count, and normalized DC power against slice
//! count.
//!
//! Every point `(group, x, seed)` is independent; points run on a rayon
//! pool and results keep the sweep's enumeration order, so output bytes
//! depend only on the spec.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{self, relative_gap, OracleMode};
use crate::placement::{capacity_power, cost_psi, normalized_resource_consumption, place, PlacementWeights};
use crate::power::{solve_joint, PowerOptions};
use crate::radio::{ChannelSet, MappingAs};
use crate::scenario::{generate_scenario, GeneratorConfig, Scenario};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "ORAN_SLICE_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// `x` = mean UEs per service, group = number of services.
    EeVsMeanUes,
    /// `x` = number of slices, group = number of DCs; single-DC placement.
    AdmittedVsSlices,
    /// `x` = number of slices, group = number of DCs; split placement.
    ConsumptionVsSlices,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::EeVsMeanUes => "ee_vs_mean_ues",
            ExperimentKind::AdmittedVsSlices => "admitted_vs_slices",
            ExperimentKind::ConsumptionVsSlices => "consumption_vs_slices",
        }
    }

    fn labels(self) -> (&'static str, &'static str, &'static str) {
        match self {
            ExperimentKind::EeVsMeanUes => ("mean_ues", "n_services", "energy efficiency (bit/J)"),
            ExperimentKind::AdmittedVsSlices => ("n_slices", "n_dcs", "admitted ratio"),
            ExperimentKind::ConsumptionVsSlices => ("n_slices", "n_dcs", "normalized consumption"),
        }
    }

    /// Direction the mean curve is expected to follow in `x`.
    pub fn expected_trend(self) -> Option<Trend> {
        match self {
            ExperimentKind::EeVsMeanUes => Some(Trend::Nondecreasing),
            ExperimentKind::AdmittedVsSlices => Some(Trend::Nonincreasing),
            ExperimentKind::ConsumptionVsSlices => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Nondecreasing,
    Nonincreasing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub x_values: Vec<f64>,
    pub groups: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub solver: PowerOptions,
    #[serde(default)]
    pub weights: PlacementWeights,
    /// Admission weight; defaults to 0 for consumption runs and 1e6 for
    /// admission runs.
    #[serde(default)]
    pub nu: Option<f64>,
    /// Compare every point against the brute-force references.
    #[serde(default)]
    pub oracle: bool,
    /// Emit a gnuplot script next to the CSV.
    #[serde(default)]
    pub plot: bool,
}

impl ExperimentSpec {
    pub fn check(&self) -> Result<()> {
        if self.x_values.is_empty() {
            return Err(Error::config("x_values", "sweep is empty"));
        }
        if self.groups.is_empty() {
            return Err(Error::config("groups", "sweep is empty"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "no seeds given"));
        }
        if self.x_values.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("x_values", "must be finite"));
        }
        if self.kind != ExperimentKind::EeVsMeanUes && self.x_values.iter().any(|&x| x < 1.0 || x.fract() != 0.0) {
            return Err(Error::config("x_values", "slice counts must be positive integers"));
        }
        if self.groups.contains(&0) {
            return Err(Error::config("groups", "must be at least 1"));
        }
        self.weights.check()?;
        self.solver.check()?;
        for &g in &self.groups {
            for &x in &self.x_values {
                self.config_for(g, x).check()?;
            }
        }
        Ok(())
    }

    pub fn nu(&self) -> f64 {
        self.nu.unwrap_or(match self.kind {
            ExperimentKind::AdmittedVsSlices => 1e6,
            _ => 0.0,
        })
    }

    /// Generator settings of one sweep point.
    pub fn config_for(&self, group: usize, x: f64) -> GeneratorConfig {
        let mut cfg = self.generator.clone();
        match self.kind {
            ExperimentKind::EeVsMeanUes => {
                cfg.n_services = group;
                cfg.mean_ues = x;
            }
            ExperimentKind::AdmittedVsSlices | ExperimentKind::ConsumptionVsSlices => {
                cfg.n_dcs = group;
                cfg.n_slices = x as usize;
                cfg.params.nu = self.nu();
            }
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub kind: String,
    pub group: usize,
    pub x: f64,
    pub seed: u64,
    /// Plotted metric; empty when the point failed.
    pub value: Option<f64>,
    pub status: String,
    pub admitted_ratio: Option<f64>,
    pub phi_tot: Option<f64>,
    pub psi_tot: Option<f64>,
    pub oracle: Option<f64>,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub kind: String,
    pub group: usize,
    pub x: f64,
    /// Points that produced a value.
    pub n: usize,
    pub n_failed: usize,
    pub mean: Option<f64>,
    pub stddev: Option<f64>,
    /// Whether this group's mean curve follows the expected trend, up to
    /// one inversion within one standard deviation.
    pub trend_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub raw: Vec<RawRow>,
    pub aggregate: Vec<AggregateRow>,
}

/// Mapping used by the placement sweeps: slice `s` serves service `s mod V`.
pub fn round_robin_mapping(sc: &Scenario) -> MappingAs {
    let mut a = MappingAs::zeros(sc.n_services(), sc.n_slices());
    for s in 0..sc.n_slices() {
        a.set(s % sc.n_services(), s, true);
    }
    a
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(text) = std::env::var(THREADS_ENV) {
        let n: usize = text
            .trim()
            .parse()
            .map_err(|_| Error::config(THREADS_ENV, format!("not a thread count: {text:?}")))?;
        if n == 0 {
            return Err(Error::config(THREADS_ENV, "must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::config(THREADS_ENV, e.to_string()))
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.check()?;
    let points: Vec<(usize, f64, u64)> = spec
        .groups
        .iter()
        .flat_map(|&g| spec.x_values.iter().flat_map(move |&x| spec.seeds.iter().map(move |&s| (g, x, s))))
        .collect();
    let pool = worker_pool()?;
    let raw: Vec<RawRow> = pool.install(|| {
        points
            .par_iter()
            .map(|&(g, x, seed)| run_point(spec, g, x, seed))
            .collect::<Result<Vec<_>>>()
    })?;
    let aggregate = aggregate(spec, &raw);
    Ok(ExperimentResult { raw, aggregate })
}

fn run_point(spec: &ExperimentSpec, group: usize, x: f64, seed: u64) -> Result<RawRow> {
    let cfg = spec.config_for(group, x);
    let sc = generate_scenario(&cfg, seed)?;
    let mut row = RawRow {
        kind: spec.kind.name().to_string(),
        group,
        x,
        seed,
        value: None,
        status: "ok".to_string(),
        admitted_ratio: None,
        phi_tot: None,
        psi_tot: None,
        oracle: None,
        gap: None,
    };
    match spec.kind {
        ExperimentKind::EeVsMeanUes => {
            let ch = ChannelSet::generate(&sc, &cfg.channel, seed);
            match solve_joint(&sc, &ch, &spec.solver) {
                Ok(sol) => {
                    row.value = Some(sol.eta);
                    if !sol.feasible {
                        row.status = "infeasible_power".into();
                    } else if !sol.converged {
                        row.status = "not_converged".into();
                    }
                    if spec.oracle {
                        match oracle::brute_force_mapping(&sc, &ch, oracle::DEFAULT_POWER_GRID) {
                            Ok(Some(o)) => {
                                row.oracle = Some(o.eta);
                                row.gap = Some(relative_gap(o.eta, sol.eta));
                            }
                            Ok(None) | Err(Error::TooLarge(_)) => {}
                            Err(e) => return Err(e),
                        }
                    }
                }
                Err(Error::Infeasible { .. }) => row.status = "no_mapping".into(),
                Err(Error::InfeasibleDelay { .. }) | Err(Error::UnstableQueue { .. }) => {
                    row.status = "delay".into()
                }
                Err(e) => return Err(e),
            }
        }
        ExperimentKind::AdmittedVsSlices | ExperimentKind::ConsumptionVsSlices => {
            let a = round_robin_mapping(&sc);
            let single = spec.kind == ExperimentKind::AdmittedVsSlices;
            let pl = place(&sc, &a, &spec.weights, single)?;
            let (phi, psi) = cost_psi(&sc, &a, &pl, &spec.weights);
            let ratio = crate::placement::admitted_ratio(&pl, single);
            row.admitted_ratio = Some(ratio);
            row.phi_tot = Some(phi);
            row.psi_tot = Some(psi);
            let mode = if single {
                OracleMode::SingleDc
            } else {
                OracleMode::MultiDc { strict: true }
            };
            let reference = if spec.oracle {
                match oracle::exhaustive_placement(&sc, &a, &spec.weights, mode) {
                    Ok(Some(o)) => Some(o),
                    Ok(None) | Err(Error::TooLarge(_)) => None,
                    Err(e) => return Err(e),
                }
            } else {
                None
            };
            if single {
                row.value = Some(ratio);
                if let Some(o) = reference {
                    let oracle_ratio = crate::placement::admitted_ratio(&o.placement, true);
                    row.oracle = Some(oracle_ratio);
                    row.gap = Some(relative_gap(oracle_ratio, ratio));
                }
            } else {
                match reference {
                    Some(o) => {
                        row.value = Some(normalized_resource_consumption(phi, o.phi));
                        row.oracle = Some(o.phi);
                        row.gap = Some(relative_gap(o.phi, phi));
                        row.status = "vs_oracle".into();
                    }
                    None => {
                        row.value = Some(normalized_resource_consumption(phi, capacity_power(&sc, &spec.weights)));
                        row.status = "vs_capacity".into();
                    }
                }
            }
        }
    }
    Ok(row)
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Some((mean, var.sqrt()))
}

/// Checks `means` against `trend`, tolerating at most one step the wrong
/// way whose size stays within the larger of the two standard deviations.
pub fn trend_holds(means: &[f64], stddevs: &[f64], trend: Trend) -> bool {
    let mut inversions = 0;
    for k in 1..means.len() {
        let step = means[k] - means[k - 1];
        let wrong = match trend {
            Trend::Nondecreasing => -step,
            Trend::Nonincreasing => step,
        };
        if wrong > 0.0 {
            inversions += 1;
            if inversions > 1 || wrong > stddevs[k].max(stddevs[k - 1]) {
                return false;
            }
        }
    }
    true
}

fn aggregate(spec: &ExperimentSpec, raw: &[RawRow]) -> Vec<AggregateRow> {
    let mut out = Vec::new();
    for &g in &spec.groups {
        let mut rows = Vec::new();
        for &x in &spec.x_values {
            let pts: Vec<&RawRow> = raw.iter().filter(|r| r.group == g && r.x == x).collect();
            let values: Vec<f64> = pts.iter().filter_map(|r| r.value).collect();
            let stats = mean_std(&values);
            rows.push(AggregateRow {
                kind: spec.kind.name().to_string(),
                group: g,
                x,
                n: values.len(),
                n_failed: pts.len() - values.len(),
                mean: stats.map(|s| s.0),
                stddev: stats.map(|s| s.1),
                trend_ok: None,
            });
        }
        if let Some(trend) = spec.kind.expected_trend() {
            let ok = rows.iter().all(|r| r.mean.is_some()) && {
                let means: Vec<f64> = rows.iter().map(|r| r.mean.unwrap()).collect();
                let sds: Vec<f64> = rows.iter().map(|r| r.stddev.unwrap()).collect();
                trend_holds(&means, &sds, trend)
            };
            for r in &mut rows {
                r.trend_ok = Some(ok);
            }
        }
        out.extend(rows);
    }
    out
}

fn write_csv<T: Serialize, W: Write>(rows: &[T], mut out: W) -> Result<()> {
    writeln!(out, "# schema=1")?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], out: W) -> Result<()> {
    write_csv(rows, out)
}

pub fn write_raw_csv<W: Write>(rows: &[RawRow], out: W) -> Result<()> {
    write_csv(rows, out)
}

/// Gnuplot script drawing mean ± stddev per group from the aggregate CSV.
pub fn gnuplot_script(spec: &ExperimentSpec, csv_name: &str) -> String {
    let (xl, gl, yl) = spec.kind.labels();
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set datafile commentschars '#'");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set xlabel '{xl}'");
    let _ = writeln!(s, "set ylabel '{yl}'");
    let _ = writeln!(s, "set terminal pngcairo size 800,600");
    let _ = writeln!(s, "set output '{}.png'", csv_name.trim_end_matches(".csv"));
    let plots: Vec<String> = spec
        .groups
        .iter()
        .map(|g| {
            format!(
                "'{csv_name}' using ($2=={g} ? $3 : 1/0):6:7 with yerrorlines title '{gl} = {g}'"
            )
        })
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind) -> ExperimentSpec {
        ExperimentSpec {
            kind,
            x_values: vec![2.0, 4.0],
            groups: vec![2],
            seeds: vec![1, 2],
            generator: GeneratorConfig::default(),
            solver: PowerOptions::default(),
            weights: PlacementWeights::default(),
            nu: None,
            oracle: false,
            plot: false,
        }
    }

    #[test]
    fn trend_rule() {
        assert!(trend_holds(&[1.0, 2.0, 3.0], &[0.0; 3], Trend::Nondecreasing));
        assert!(trend_holds(&[1.0, 2.0, 1.9, 3.0], &[0.2; 4], Trend::Nondecreasing));
        assert!(!trend_holds(&[1.0, 2.0, 1.0, 3.0], &[0.2; 4], Trend::Nondecreasing));
        assert!(!trend_holds(&[3.0, 2.9, 3.0, 2.9], &[1.0; 4], Trend::Nondecreasing));
        assert!(trend_holds(&[3.0, 2.0, 2.0], &[0.0; 3], Trend::Nonincreasing));
    }

    #[test]
    fn stats() {
        assert_eq!(mean_std(&[]), None);
        assert_eq!(mean_std(&[2.0]), Some((2.0, 0.0)));
        let (m, s) = mean_std(&[1.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn empty_seeds_are_rejected() {
        let mut spec = small(ExperimentKind::AdmittedVsSlices);
        spec.seeds.clear();
        assert!(matches!(spec.check(), Err(Error::InvalidConfig { .. })));
    }

    #[test]
    fn unknown_kind_fails_to_parse() {
        let text = r#"{"kind": "bogus", "x_values": [1], "groups": [1], "seeds": [1]}"#;
        assert!(serde_json::from_str::<ExperimentSpec>(text).is_err());
    }

    #[test]
    fn placement_sweep_rows_are_ordered_and_reproducible() {
        let spec = small(ExperimentKind::AdmittedVsSlices);
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a, b);
        let keys: Vec<(f64, u64)> = a.raw.iter().map(|r| (r.x, r.seed)).collect();
        assert_eq!(keys, vec![(2.0, 1), (2.0, 2), (4.0, 1), (4.0, 2)]);
        assert_eq!(a.aggregate.len(), 2);
        assert!(a.raw.iter().all(|r| r.value.is_some()));
    }

    #[test]
    fn csv_has_schema_line_and_script_references_it() {
        let spec = small(ExperimentKind::ConsumptionVsSlices);
        let res = run_experiment(&spec).unwrap();
        let mut buf = Vec::new();
        write_aggregate_csv(&res.aggregate, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# schema=1\nkind,group,x,n,n_failed,mean,stddev,trend_ok\n"));
        assert!(gnuplot_script(&spec, "out.csv").contains("'out.csv'"));
    }
}
