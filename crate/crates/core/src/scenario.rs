//! Problem instances: services and their UEs, slices built from RUs, PRBs and
//! VNFs, data centers, and the system-wide parameters.
//!
//! Units used throughout the crate: powers in W, rates in bits/s, fronthaul
//! capacity in bits/s/Hz, delays in s, memory in GB, storage in TB, CPU in GHz.

use std::collections::HashSet;
use std::fmt;
use std::ops::{Add, AddAssign, Sub, SubAssign};

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::placement::PlacementWeights;
use crate::rng::stream;

/// Converts a dBm figure to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// System bandwidth `B` in Hz.
    pub bandwidth_hz: f64,
    /// Noise power spectral density `N0` in W/Hz.
    pub noise_psd: f64,
    /// Per-RU transmit power cap in W.
    pub p_max: f64,
    /// Minimum per-UE rate in bits/s.
    pub r_min: f64,
    /// Fronthaul capacity cap per RU in bits/s/Hz.
    pub c_max: f64,
    /// Per-slice delay budget in s.
    pub d_max: f64,
    /// Service rate of one DU-layer VNF, packets/s.
    pub mu1: f64,
    /// Service rate of one CU-layer VNF, packets/s.
    pub mu2: f64,
    /// Weight of the admission credit in the placement cost.
    pub nu: f64,
    /// Quantization-noise variance assigned to generated RUs, W.
    pub sigma_q_default: f64,
    /// Bits per packet, converting rates (bits/s) to packet rates.
    #[serde(default = "one")]
    pub packet_size_bits: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for SystemParams {
    fn default() -> Self {
        let bandwidth_hz = 120e3;
        let p_max = dbm_to_watts(40.0);
        Self {
            bandwidth_hz,
            noise_psd: dbm_to_watts(-174.0),
            p_max,
            // 10 bits/s/Hz over the system bandwidth.
            r_min: 10.0 * bandwidth_hz,
            c_max: 200.0,
            d_max: 300e-6,
            mu1: 2e4,
            mu2: 2e4,
            nu: 0.0,
            sigma_q_default: 1e-6 * p_max,
            packet_size_bits: 1.0,
        }
    }
}

impl SystemParams {
    /// Thermal noise power `B·N0`.
    pub fn noise_power(&self) -> f64 {
        self.bandwidth_hz * self.noise_psd
    }

    fn violations(&self, out: &mut Vec<Violation>) {
        let positive = [
            ("bandwidth_hz", self.bandwidth_hz),
            ("noise_psd", self.noise_psd),
            ("p_max", self.p_max),
            ("r_min", self.r_min),
            ("c_max", self.c_max),
            ("d_max", self.d_max),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("sigma_q_default", self.sigma_q_default),
            ("packet_size_bits", self.packet_size_bits),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                out.push(Violation::new("params", format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            out.push(Violation::new("params", format!("nu must be nonnegative, got {}", self.nu)));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A (memory, storage, CPU) triple in GB, TB and GHz.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Resources {
    pub memory_gb: f64,
    pub storage_tb: f64,
    pub cpu_ghz: f64,
}

pub type VnfRequirement = Resources;

impl Resources {
    pub const ZERO: Resources = Resources::new(0.0, 0.0, 0.0);

    pub const fn new(memory_gb: f64, storage_tb: f64, cpu_ghz: f64) -> Self {
        Self {
            memory_gb,
            storage_tb,
            cpu_ghz,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.memory_gb, self.storage_tb, self.cpu_ghz]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(f(self.memory_gb), f(self.storage_tb), f(self.cpu_ghz))
    }

    pub fn zip_with(self, other: Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::new(
            f(self.memory_gb, other.memory_gb),
            f(self.storage_tb, other.storage_tb),
            f(self.cpu_ghz, other.cpu_ghz),
        )
    }

    /// Componentwise `self <= other + tol`.
    pub fn fits_within(&self, other: &Resources, tol: f64) -> bool {
        self.memory_gb <= other.memory_gb + tol
            && self.storage_tb <= other.storage_tb + tol
            && self.cpu_ghz <= other.cpu_ghz + tol
    }

    pub fn min_component(&self) -> f64 {
        self.memory_gb.min(self.storage_tb).min(self.cpu_ghz)
    }

    pub fn max_component(&self) -> f64 {
        self.memory_gb.max(self.storage_tb).max(self.cpu_ghz)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_component().abs() <= tol && self.min_component().abs() <= tol
    }
}

impl Add for Resources {
    type Output = Resources;
    fn add(self, rhs: Resources) -> Resources {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl AddAssign for Resources {
    fn add_assign(&mut self, rhs: Resources) {
        *self = *self + rhs;
    }
}

impl Sub for Resources {
    type Output = Resources;
    fn sub(self, rhs: Resources) -> Resources {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl SubAssign for Resources {
    fn sub_assign(&mut self, rhs: Resources) {
        *self = *self - rhs;
    }
}

impl std::iter::Sum for Resources {
    fn sum<I: Iterator<Item = Resources>>(iter: I) -> Resources {
        iter.fold(Resources::ZERO, Add::add)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserEquipment {
    pub id: usize,
    /// Poisson packet arrival rate, packets/s.
    pub arrival_rate: f64,
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Service {
    pub id: usize,
    pub ues: Vec<UserEquipment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioUnit {
    pub id: usize,
    pub position: Point,
    /// Quantization-noise variance of the compressed fronthaul signal, W.
    pub sigma_q2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub id: usize,
    pub ru_ids: Vec<usize>,
    pub prb_ids: Vec<usize>,
    /// VNFs in the DU layer.
    pub m_du: usize,
    /// VNFs in the CU layer.
    pub m_cu: usize,
    pub vnf_demands: Vec<VnfRequirement>,
}

impl Slice {
    pub fn n_rus(&self) -> usize {
        self.ru_ids.len()
    }

    pub fn n_prbs(&self) -> usize {
        self.prb_ids.len()
    }

    pub fn n_vnfs(&self) -> usize {
        self.m_du + self.m_cu
    }

    /// Total demand over all VNFs of the slice.
    pub fn total_demand(&self) -> Resources {
        self.vnf_demands.iter().copied().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataCenter {
    pub id: usize,
    #[serde(flatten)]
    pub capacity: Resources,
    /// Power drawn by the DC once it hosts anything, W.
    pub phi_idle: f64,
    /// Power per unit of weighted demand hosted, W.
    pub phi_per_unit: f64,
}

/// Binary PRB tensor `ζ`, stored sparsely: `zeta[ue][slice]` lists the PRBs
/// of that slice the UE may use. UEs are indexed by their flat position
/// (services in order, then UEs within the service).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PrbAssignment {
    pub zeta: Vec<Vec<Vec<usize>>>,
}

impl PrbAssignment {
    pub fn prbs(&self, ue: usize, slice: usize) -> &[usize] {
        &self.zeta[ue][slice]
    }

    pub fn contains(&self, ue: usize, prb: usize, slice: usize) -> bool {
        self.zeta[ue][slice].contains(&prb)
    }

    /// `Σ_k ζ[ue_a, k, slice]·ζ[ue_b, k, slice]`.
    pub fn overlap(&self, ue_a: usize, ue_b: usize, slice: usize) -> usize {
        let a = &self.zeta[ue_a][slice];
        let b = &self.zeta[ue_b][slice];
        a.iter().filter(|k| b.contains(k)).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub params: SystemParams,
    pub services: Vec<Service>,
    pub radio_units: Vec<RadioUnit>,
    pub n_prbs: usize,
    pub slices: Vec<Slice>,
    pub prb_assignment: PrbAssignment,
    pub dcs: Vec<DataCenter>,
}

impl Scenario {
    pub fn n_services(&self) -> usize {
        self.services.len()
    }

    pub fn n_slices(&self) -> usize {
        self.slices.len()
    }

    pub fn n_dcs(&self) -> usize {
        self.dcs.len()
    }

    pub fn n_ues(&self) -> usize {
        self.services.iter().map(|s| s.ues.len()).sum()
    }

    /// Flat index of the first UE of every service.
    pub fn ue_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.services.len());
        let mut acc = 0;
        for svc in &self.services {
            offsets.push(acc);
            acc += svc.ues.len();
        }
        offsets
    }

    /// `(service, ue)` pairs in flat order.
    pub fn ue_pairs(&self) -> Vec<(usize, usize)> {
        self.services
            .iter()
            .enumerate()
            .flat_map(|(v, svc)| (0..svc.ues.len()).map(move |i| (v, i)))
            .collect()
    }

    pub fn sigma_q2(&self, slice: usize, j: usize) -> f64 {
        self.radio_units[self.slices[slice].ru_ids[j]].sigma_q2
    }
}

/// One broken invariant, naming the entity it concerns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub entity: String,
    pub message: String,
}

impl Violation {
    fn new(entity: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            entity: entity.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.message)
    }
}

/// Checks every structural invariant of the scenario. Returns an empty list
/// when the scenario is well formed.
pub fn validate(sc: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    sc.params.violations(&mut out);

    for (v, svc) in sc.services.iter().enumerate() {
        let entity = format!("service {v}");
        if svc.id != v {
            out.push(Violation::new(&entity, format!("id {} is not dense", svc.id)));
        }
        if svc.ues.is_empty() {
            out.push(Violation::new(&entity, "has no UEs"));
        }
        let mut seen = HashSet::new();
        for ue in &svc.ues {
            if !seen.insert(ue.id) {
                out.push(Violation::new(&entity, format!("duplicate UE id {}", ue.id)));
            }
            if !(ue.arrival_rate >= 0.0 && ue.arrival_rate.is_finite()) {
                out.push(Violation::new(
                    format!("service {v} UE {}", ue.id),
                    format!("arrival rate {} is negative", ue.arrival_rate),
                ));
            }
        }
    }

    for (r, ru) in sc.radio_units.iter().enumerate() {
        let entity = format!("RU {r}");
        if ru.id != r {
            out.push(Violation::new(&entity, format!("id {} is not dense", ru.id)));
        }
        if !(ru.sigma_q2 > 0.0 && ru.sigma_q2.is_finite()) {
            out.push(Violation::new(&entity, format!("sigma_q2 {} must be positive", ru.sigma_q2)));
        }
    }

    for (s, slice) in sc.slices.iter().enumerate() {
        let entity = format!("slice {s}");
        if slice.id != s {
            out.push(Violation::new(&entity, format!("id {} is not dense", slice.id)));
        }
        for (name, count) in [
            ("ru_ids", slice.ru_ids.len()),
            ("prb_ids", slice.prb_ids.len()),
            ("m_du", slice.m_du),
            ("m_cu", slice.m_cu),
        ] {
            if count == 0 {
                out.push(Violation::new(&entity, format!("{name} must be at least 1")));
            }
        }
        if slice.vnf_demands.len() != slice.n_vnfs() {
            out.push(Violation::new(
                &entity,
                format!(
                    "has {} VNF demands for m_du + m_cu = {}",
                    slice.vnf_demands.len(),
                    slice.n_vnfs()
                ),
            ));
        }
        if let Some(&bad) = slice.ru_ids.iter().find(|&&r| r >= sc.radio_units.len()) {
            out.push(Violation::new(&entity, format!("references unknown RU {bad}")));
        }
        if let Some(&bad) = slice.prb_ids.iter().find(|&&k| k >= sc.n_prbs) {
            out.push(Violation::new(&entity, format!("references unknown PRB {bad}")));
        }
        if slice.ru_ids.iter().collect::<HashSet<_>>().len() != slice.ru_ids.len() {
            out.push(Violation::new(&entity, "lists an RU twice"));
        }
        if slice.prb_ids.iter().collect::<HashSet<_>>().len() != slice.prb_ids.len() {
            out.push(Violation::new(&entity, "lists a PRB twice"));
        }
        if slice
            .vnf_demands
            .iter()
            .any(|d| !(d.min_component() >= 0.0 && d.max_component().is_finite()))
        {
            out.push(Violation::new(&entity, "has a negative VNF demand"));
        }
    }

    let zeta = &sc.prb_assignment.zeta;
    if zeta.len() != sc.n_ues() {
        out.push(Violation::new(
            "prb_assignment",
            format!("covers {} UEs, scenario has {}", zeta.len(), sc.n_ues()),
        ));
    } else {
        for (u, (v, i)) in sc.ue_pairs().into_iter().enumerate() {
            if zeta[u].len() != sc.n_slices() {
                out.push(Violation::new(
                    format!("prb_assignment service {v} UE {i}"),
                    format!("covers {} slices, scenario has {}", zeta[u].len(), sc.n_slices()),
                ));
                continue;
            }
            for (s, prbs) in zeta[u].iter().enumerate() {
                for k in prbs {
                    if !sc.slices[s].prb_ids.contains(k) {
                        out.push(Violation::new(
                            format!("prb_assignment service {v} UE {i}"),
                            format!("PRB {k} is not owned by slice {s}"),
                        ));
                    }
                }
            }
        }
    }

    for (d, dc) in sc.dcs.iter().enumerate() {
        let entity = format!("DC {d}");
        if dc.id != d {
            out.push(Violation::new(&entity, format!("id {} is not dense", dc.id)));
        }
        if !(dc.capacity.min_component() >= 0.0) {
            out.push(Violation::new(&entity, "has a negative capacity"));
        }
        if !(dc.phi_idle >= 0.0 && dc.phi_per_unit >= 0.0) {
            out.push(Violation::new(&entity, "has a negative power coefficient"));
        }
    }
    out
}

/// Log-distance path loss with Rayleigh fading.
///
/// Not part of the modeled system: the gain scale is normalized so that a
/// zero-forcing beamformer keeps per-RU powers on the same scale as `P_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    /// Power gain at the reference distance.
    pub reference_gain: f64,
    pub reference_distance_m: f64,
    pub exponent: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self {
            reference_gain: 100.0,
            reference_distance_m: 10.0,
            exponent: 3.5,
        }
    }
}

impl ChannelModel {
    /// Mean power gain at distance `d` (clamped to the reference distance).
    pub fn path_gain(&self, d: f64) -> f64 {
        let ratio = d.max(self.reference_distance_m) / self.reference_distance_m;
        self.reference_gain * ratio.powf(-self.exponent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub params: SystemParams,
    pub n_services: usize,
    /// `E[U_v]`; each service draws `1 + Poisson(mean_ues - 1)` UEs.
    pub mean_ues: f64,
    pub n_slices: usize,
    pub n_radio_units: usize,
    pub rus_per_slice: usize,
    pub n_prbs: usize,
    pub prbs_per_slice: usize,
    /// Inclusive range for the VNF count of each layer.
    pub vnfs_per_layer: (usize, usize),
    pub n_dcs: usize,
    /// Side of the square deployment area, m.
    pub region_m: f64,
    pub mean_arrival_rate: f64,
    pub slice_demand_mean: Resources,
    /// Relative half-width of the uniform draw around the mean.
    pub slice_demand_spread: f64,
    pub dc_capacity_mean: Resources,
    pub dc_capacity_spread: f64,
    /// Idle power per unit of weighted DC capacity, W.
    pub dc_idle_power_per_unit: f64,
    /// Power per unit of weighted demand hosted, W.
    pub dc_power_per_unit: f64,
    pub channel: ChannelModel,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            params: SystemParams::default(),
            n_services: 3,
            mean_ues: 4.0,
            n_slices: 4,
            n_radio_units: 24,
            rus_per_slice: 12,
            n_prbs: 24,
            prbs_per_slice: 6,
            vnfs_per_layer: (1, 3),
            n_dcs: 2,
            region_m: 100.0,
            mean_arrival_rate: 50.0,
            slice_demand_mean: Resources::new(100.0, 10.0, 32.0),
            slice_demand_spread: 0.2,
            dc_capacity_mean: Resources::new(1000.0, 100.0, 320.0),
            dc_capacity_spread: 0.2,
            dc_idle_power_per_unit: 0.005,
            dc_power_per_unit: 0.01,
            channel: ChannelModel::default(),
        }
    }
}

impl GeneratorConfig {
    pub fn check(&self) -> Result<()> {
        let counts = [
            ("n_services", self.n_services),
            ("n_slices", self.n_slices),
            ("n_dcs", self.n_dcs),
            ("n_radio_units", self.n_radio_units),
            ("rus_per_slice", self.rus_per_slice),
            ("n_prbs", self.n_prbs),
            ("prbs_per_slice", self.prbs_per_slice),
        ];
        for (field, value) in counts {
            if value == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        if self.rus_per_slice > self.n_radio_units {
            return Err(Error::config("rus_per_slice", "exceeds n_radio_units"));
        }
        if self.prbs_per_slice > self.n_prbs {
            return Err(Error::config("prbs_per_slice", "exceeds n_prbs"));
        }
        let (lo, hi) = self.vnfs_per_layer;
        if lo == 0 || hi < lo {
            return Err(Error::config("vnfs_per_layer", "needs 1 <= min <= max"));
        }
        if !(self.mean_ues >= 1.0) {
            return Err(Error::config("mean_ues", "must be at least 1"));
        }
        for (field, value) in [
            ("region_m", self.region_m),
            ("slice_demand_spread", 1.0 - self.slice_demand_spread),
            ("dc_capacity_spread", 1.0 - self.dc_capacity_spread),
        ] {
            if !(value > 0.0) {
                return Err(Error::config(field, "out of range"));
            }
        }
        if self.slice_demand_spread < 0.0 || self.dc_capacity_spread < 0.0 {
            return Err(Error::config("spread", "must be nonnegative"));
        }
        if !(self.mean_arrival_rate >= 0.0) {
            return Err(Error::config("mean_arrival_rate", "must be nonnegative"));
        }
        let mut violations = Vec::new();
        self.params.violations(&mut violations);
        if let Some(v) = violations.first() {
            return Err(Error::config("params", v.message.clone()));
        }
        Ok(())
    }
}

// RNG stream families; entity `i` of a family always draws from the same
// stream, so growing one count leaves every other entity unchanged.
pub(crate) const STREAM_SERVICE: u64 = 1;
pub(crate) const STREAM_RU: u64 = 2;
pub(crate) const STREAM_SLICE: u64 = 3;
pub(crate) const STREAM_DC: u64 = 4;
pub(crate) const STREAM_CHANNEL: u64 = 5;

fn spread_draw(rng: &mut ChaCha8Rng, mean: f64, spread: f64) -> f64 {
    if spread == 0.0 {
        mean
    } else {
        mean * (1.0 + spread * rng.random_range(-1.0..=1.0))
    }
}

fn spread_resources(rng: &mut ChaCha8Rng, mean: Resources, spread: f64) -> Resources {
    Resources::new(
        spread_draw(rng, mean.memory_gb, spread),
        spread_draw(rng, mean.storage_tb, spread),
        spread_draw(rng, mean.cpu_ghz, spread),
    )
}

fn random_point(rng: &mut ChaCha8Rng, side: f64) -> Point {
    Point {
        x: rng.random_range(0.0..side),
        y: rng.random_range(0.0..side),
    }
}

/// Draws a scenario. A pure function of `(config, seed)`.
pub fn generate_scenario(config: &GeneratorConfig, seed: u64) -> Result<Scenario> {
    config.check()?;
    let params = config.params;

    let services: Vec<Service> = (0..config.n_services)
        .map(|v| {
            let mut rng = stream(seed, STREAM_SERVICE, v as u64);
            let extra = if config.mean_ues > 1.0 {
                let poisson = Poisson::new(config.mean_ues - 1.0).expect("positive mean");
                poisson.sample(&mut rng) as usize
            } else {
                0
            };
            let ues = (0..1 + extra)
                .map(|i| UserEquipment {
                    id: i,
                    arrival_rate: 2.0 * config.mean_arrival_rate * rng.random::<f64>(),
                    position: random_point(&mut rng, config.region_m),
                })
                .collect();
            Service { id: v, ues }
        })
        .collect();

    let radio_units: Vec<RadioUnit> = (0..config.n_radio_units)
        .map(|r| {
            let mut rng = stream(seed, STREAM_RU, r as u64);
            RadioUnit {
                id: r,
                position: random_point(&mut rng, config.region_m),
                sigma_q2: params.sigma_q_default,
            }
        })
        .collect();

    let slices: Vec<Slice> = (0..config.n_slices)
        .map(|s| {
            let mut rng = stream(seed, STREAM_SLICE, s as u64);
            let mut ru_ids = sample(&mut rng, config.n_radio_units, config.rus_per_slice).into_vec();
            ru_ids.sort_unstable();
            let mut prb_ids = sample(&mut rng, config.n_prbs, config.prbs_per_slice).into_vec();
            prb_ids.sort_unstable();
            let (lo, hi) = config.vnfs_per_layer;
            let m_du = rng.random_range(lo..=hi);
            let m_cu = rng.random_range(lo..=hi);
            let total = spread_resources(&mut rng, config.slice_demand_mean, config.slice_demand_spread);
            let n = (m_du + m_cu) as f64;
            let per_vnf = total.map(|x| x / n);
            Slice {
                id: s,
                ru_ids,
                prb_ids,
                m_du,
                m_cu,
                vnf_demands: vec![per_vnf; m_du + m_cu],
            }
        })
        .collect();

    let weights = PlacementWeights::default();
    let dcs = (0..config.n_dcs)
        .map(|d| {
            let mut rng = stream(seed, STREAM_DC, d as u64);
            let capacity = spread_resources(&mut rng, config.dc_capacity_mean, config.dc_capacity_spread);
            DataCenter {
                id: d,
                capacity,
                phi_idle: config.dc_idle_power_per_unit * weights.weigh(&capacity),
                phi_per_unit: config.dc_power_per_unit,
            }
        })
        .collect();

    let prb_assignment = partition_prbs(&services, &slices);

    Ok(Scenario {
        params,
        services,
        radio_units,
        n_prbs: config.n_prbs,
        slices,
        prb_assignment,
        dcs,
    })
}

/// Splits each slice's PRBs among services round-robin; UEs of one service
/// share its PRBs. Services only collide when a slice has fewer PRBs than
/// there are services.
pub fn partition_prbs(services: &[Service], slices: &[Slice]) -> PrbAssignment {
    let n_services = services.len();
    let mut zeta = Vec::new();
    for (v, svc) in services.iter().enumerate() {
        let per_slice: Vec<Vec<usize>> = slices
            .iter()
            .map(|slice| {
                let k = slice.prb_ids.len();
                if k >= n_services {
                    slice
                        .prb_ids
                        .iter()
                        .enumerate()
                        .filter(|(idx, _)| idx % n_services == v)
                        .map(|(_, &prb)| prb)
                        .collect()
                } else {
                    vec![slice.prb_ids[v % k]]
                }
            })
            .collect();
        for _ in &svc.ues {
            zeta.push(per_slice.clone());
        }
    }
    PrbAssignment { zeta }
}
