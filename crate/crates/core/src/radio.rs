//! Zero-forcing beamforming, interference, rates, RU powers, fronthaul load
//! and energy efficiency of a mapped and powered instance.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::scenario::{ChannelModel, Scenario, STREAM_CHANNEL};

/// Largest condition number of `H^H H` accepted by the beamformer.
pub const DEFAULT_CONDITION_CAP: f64 = 1e8;

/// Complex channel gain between every RU and every UE, indexed
/// `h[ru][ue]` with UEs in flat order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    pub h: Vec<Vec<Complex64>>,
}

impl ChannelSet {
    /// Draws `sqrt(PL(d))·g` with `g ~ CN(0, 1)` for every RU/UE pair.
    /// A pure function of `(scenario geometry, model, seed)`.
    pub fn generate(sc: &Scenario, model: &ChannelModel, seed: u64) -> Self {
        let n_rus = sc.radio_units.len();
        let mut h = vec![Vec::with_capacity(sc.n_ues()); n_rus];
        for (v, svc) in sc.services.iter().enumerate() {
            for (i, ue) in svc.ues.iter().enumerate() {
                let mut rng = stream(seed, STREAM_CHANNEL, ((v as u64) << 16) | i as u64);
                for (r, ru) in sc.radio_units.iter().enumerate() {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    let gain = model.path_gain(ru.position.distance(&ue.position)).sqrt();
                    h[r].push(Complex64::new(re, im) * (gain * std::f64::consts::FRAC_1_SQRT_2));
                }
            }
        }
        Self { h }
    }

    pub fn from_fn(sc: &Scenario, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let n = sc.n_ues();
        let h = (0..sc.radio_units.len())
            .map(|r| (0..n).map(|u| f(r, u)).collect())
            .collect();
        Self { h }
    }

    pub fn get(&self, ru: usize, ue: usize) -> Complex64 {
        self.h[ru][ue]
    }

    /// `H_{R_s, U_v}`: rows are the slice's RUs, columns the service's UEs.
    pub fn block(&self, sc: &Scenario, slice: usize, service: usize) -> DMatrix<Complex64> {
        let rus = &sc.slices[slice].ru_ids;
        let offset = sc.ue_offsets()[service];
        let n_ues = sc.services[service].ues.len();
        DMatrix::from_fn(rus.len(), n_ues, |j, i| self.h[rus[j]][offset + i])
    }

    pub fn check(&self, sc: &Scenario) -> Result<()> {
        if self.h.len() != sc.radio_units.len() {
            return Err(Error::DimensionMismatch(format!(
                "channel set covers {} RUs, scenario has {}",
                self.h.len(),
                sc.radio_units.len()
            )));
        }
        let n = sc.n_ues();
        for (r, row) in self.h.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "channel row of RU {r} covers {} UEs, scenario has {n}",
                    row.len()
                )));
            }
            if row.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::config(format!("channels[{r}]"), "non-finite entry"));
            }
        }
        Ok(())
    }
}

/// `H^H H` is singular or too badly conditioned to invert.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singular {
    pub condition: f64,
}

/// `W = H (H^H H)^{-1}` with the default condition cap.
pub fn zf_beamformer(h: &DMatrix<Complex64>) -> std::result::Result<DMatrix<Complex64>, Singular> {
    zf_beamformer_capped(h, DEFAULT_CONDITION_CAP)
}

pub fn zf_beamformer_capped(
    h: &DMatrix<Complex64>,
    cap: f64,
) -> std::result::Result<DMatrix<Complex64>, Singular> {
    let (r, u) = h.shape();
    if u == 0 || r < u {
        return Err(Singular {
            condition: f64::INFINITY,
        });
    }
    let hh = h.adjoint();
    let gram = &hh * h;
    let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, 0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= cap) {
        return Err(Singular { condition });
    }
    let chol = Cholesky::new(gram).ok_or(Singular { condition })?;
    let mut w = chol.solve(&hh).adjoint();
    // One step of refinement: with E = I - H^H W, W(I + E) leaves a residual of E^2.
    let e = DMatrix::<Complex64>::identity(u, u) - &hh * &w;
    w += &w * e;
    Ok(w)
}

/// Zero-forcing beamformers per (slice, service); `None` marks pairs that
/// cannot be served (fewer RUs than UEs, or a near-singular channel).
#[derive(Debug, Clone)]
pub struct Beamformers {
    pub w: Vec<Vec<Option<DMatrix<Complex64>>>>,
    pub condition: Vec<Vec<f64>>,
}

impl Beamformers {
    pub fn compute(sc: &Scenario, ch: &ChannelSet, cap: f64) -> Self {
        let mut w = Vec::with_capacity(sc.n_slices());
        let mut condition = Vec::with_capacity(sc.n_slices());
        for s in 0..sc.n_slices() {
            let mut row = Vec::with_capacity(sc.n_services());
            let mut cond_row = Vec::with_capacity(sc.n_services());
            for v in 0..sc.n_services() {
                match zf_beamformer_capped(&ch.block(sc, s, v), cap) {
                    Ok(m) => {
                        row.push(Some(m));
                        cond_row.push(f64::NAN);
                    }
                    Err(e) => {
                        row.push(None);
                        cond_row.push(e.condition);
                    }
                }
            }
            w.push(row);
            condition.push(cond_row);
        }
        Self { w, condition }
    }

    pub fn get(&self, slice: usize, service: usize) -> Option<&DMatrix<Complex64>> {
        self.w[slice][service].as_ref()
    }

    pub fn require(&self, slice: usize, service: usize) -> Result<&DMatrix<Complex64>> {
        self.get(slice, service).ok_or(Error::SingularChannel {
            slice,
            service,
            condition: self.condition[slice][service],
        })
    }
}

/// Binary service-to-slice matrix `a[v][s]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingAs {
    pub a: Vec<Vec<u8>>,
}

impl MappingAs {
    pub fn zeros(n_services: usize, n_slices: usize) -> Self {
        Self {
            a: vec![vec![0; n_slices]; n_services],
        }
    }

    /// Mapping whose bit `v·S + s` of `bits` is `a[v][s]`.
    pub fn from_bits(n_services: usize, n_slices: usize, bits: u64) -> Self {
        let mut m = Self::zeros(n_services, n_slices);
        for v in 0..n_services {
            for s in 0..n_slices {
                m.a[v][s] = ((bits >> (v * n_slices + s)) & 1) as u8;
            }
        }
        m
    }

    pub fn n_services(&self) -> usize {
        self.a.len()
    }

    pub fn n_slices(&self) -> usize {
        self.a.first().map_or(0, Vec::len)
    }

    pub fn get(&self, v: usize, s: usize) -> bool {
        self.a[v][s] == 1
    }

    pub fn set(&mut self, v: usize, s: usize, on: bool) {
        self.a[v][s] = on as u8;
    }

    pub fn is_covered(&self, v: usize) -> bool {
        self.a[v].contains(&1)
    }

    pub fn uncovered(&self) -> Vec<usize> {
        (0..self.n_services()).filter(|&v| !self.is_covered(v)).collect()
    }

    /// Number of services mapped to slice `s`.
    pub fn services_on(&self, s: usize) -> usize {
        self.a.iter().filter(|row| row[s] == 1).count()
    }

    pub fn is_slice_active(&self, s: usize) -> bool {
        self.services_on(s) > 0
    }

    pub fn check(&self, sc: &Scenario) -> Result<()> {
        if self.a.len() != sc.n_services() || self.a.iter().any(|r| r.len() != sc.n_slices()) {
            return Err(Error::DimensionMismatch(format!(
                "mapping must be {}x{}",
                sc.n_services(),
                sc.n_slices()
            )));
        }
        if self.a.iter().flatten().any(|&x| x > 1) {
            return Err(Error::config("mapping", "entries must be 0 or 1"));
        }
        Ok(())
    }
}

/// Transmit power per UE, `p[v][i]` in W.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub p: Vec<Vec<f64>>,
}

impl PowerAllocation {
    pub fn uniform(sc: &Scenario, value: f64) -> Self {
        Self {
            p: sc.services.iter().map(|s| vec![value; s.ues.len()]).collect(),
        }
    }

    pub fn from_flat(sc: &Scenario, flat: &[f64]) -> Self {
        let mut it = flat.iter().copied();
        Self {
            p: sc
                .services
                .iter()
                .map(|s| it.by_ref().take(s.ues.len()).collect())
                .collect(),
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.p.iter().flatten().copied().collect()
    }

    pub fn check(&self, sc: &Scenario) -> Result<()> {
        if self.p.len() != sc.n_services()
            || self.p.iter().zip(&sc.services).any(|(p, s)| p.len() != s.ues.len())
        {
            return Err(Error::DimensionMismatch("power allocation does not match the UE layout".into()));
        }
        if self.p.iter().flatten().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::config("power", "entries must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// `B·log2(1 + ρ)`.
pub fn achievable_rate(rho: f64, bandwidth: f64) -> f64 {
    bandwidth * rho.ln_1p() / std::f64::consts::LN_2
}

/// Sum rate over sum RU power, with both totals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEfficiency {
    pub eta: f64,
    pub r_tot: f64,
    pub p_tot: f64,
}

/// Scenario, channels and beamformers, with the gains every radio quantity
/// needs precomputed.
#[derive(Debug, Clone)]
pub struct Radio<'a> {
    pub sc: &'a Scenario,
    pub ch: &'a ChannelSet,
    pub bf: Beamformers,
    offsets: Vec<usize>,
    /// Service of each flat UE index.
    service_of: Vec<usize>,
    /// `|h_{R_s,u}^H w_{R_s,u}|^2` per slice and UE.
    direct: Vec<Vec<f64>>,
    /// `|h_{R_s,u}^H w_{R_s,l}|^2` per slice, indexed `(u, l)`.
    cross: Vec<DMatrix<f64>>,
    /// `|W_{s,v(u)}[j, i(u)]|^2` per slice, indexed `(j, u)`.
    wgain: Vec<DMatrix<f64>>,
    /// `Σ_j σ_q^2 |h_{r(s,j),u}|^2` per slice and UE.
    quant: Vec<Vec<f64>>,
    /// Shared PRBs of two UEs within a slice, indexed `(u, l)`.
    overlap: Vec<DMatrix<f64>>,
}

impl<'a> Radio<'a> {
    pub fn new(sc: &'a Scenario, ch: &'a ChannelSet) -> Result<Self> {
        Self::with_cap(sc, ch, DEFAULT_CONDITION_CAP)
    }

    pub fn with_cap(sc: &'a Scenario, ch: &'a ChannelSet, cap: f64) -> Result<Self> {
        ch.check(sc)?;
        let bf = Beamformers::compute(sc, ch, cap);
        Ok(Self::with_beamformers(sc, ch, bf))
    }

    pub fn with_beamformers(sc: &'a Scenario, ch: &'a ChannelSet, bf: Beamformers) -> Self {
        let n = sc.n_ues();
        let offsets = sc.ue_offsets();
        let service_of: Vec<usize> = sc.ue_pairs().into_iter().map(|(v, _)| v).collect();
        let mut direct = Vec::with_capacity(sc.n_slices());
        let mut cross = Vec::with_capacity(sc.n_slices());
        let mut wgain = Vec::with_capacity(sc.n_slices());
        let mut quant = Vec::with_capacity(sc.n_slices());
        let mut overlap = Vec::with_capacity(sc.n_slices());
        for (s, slice) in sc.slices.iter().enumerate() {
            let rus = &slice.ru_ids;
            let mut d = vec![0.0; n];
            let mut c = DMatrix::zeros(n, n);
            let mut g = DMatrix::zeros(rus.len(), n);
            for (y, svc) in sc.services.iter().enumerate() {
                let Some(w) = bf.get(s, y) else { continue };
                for l in 0..svc.ues.len() {
                    let col = offsets[y] + l;
                    for j in 0..rus.len() {
                        g[(j, col)] = w[(j, l)].norm_sqr();
                    }
                    for u in 0..n {
                        let inner: Complex64 = (0..rus.len()).map(|j| ch.h[rus[j]][u].conj() * w[(j, l)]).sum();
                        c[(u, col)] = inner.norm_sqr();
                    }
                    d[col] = c[(col, col)];
                }
            }
            let q = (0..n)
                .map(|u| {
                    rus.iter()
                        .map(|&r| sc.radio_units[r].sigma_q2 * ch.h[r][u].norm_sqr())
                        .sum()
                })
                .collect();
            let zeta = &sc.prb_assignment;
            let o = DMatrix::from_fn(n, n, |u, l| zeta.overlap(u, l, s) as f64);
            direct.push(d);
            cross.push(c);
            wgain.push(g);
            quant.push(q);
            overlap.push(o);
        }
        Self {
            sc,
            ch,
            bf,
            offsets,
            service_of,
            direct,
            cross,
            wgain,
            quant,
            overlap,
        }
    }

    pub fn n_ues(&self) -> usize {
        self.service_of.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn service_of(&self, ue: usize) -> usize {
        self.service_of[ue]
    }

    /// Flat index of UE `i` of service `v`.
    pub fn ue_index(&self, v: usize, i: usize) -> usize {
        self.offsets[v] + i
    }

    /// `|h^H w|^2` of a UE in a slice (zero when the pair has no beamformer).
    pub fn direct_gain(&self, slice: usize, ue: usize) -> f64 {
        self.direct[slice][ue]
    }

    /// `|W[j, ue]|^2` in slice `s`.
    pub fn beam_gain(&self, slice: usize, j: usize, ue: usize) -> f64 {
        self.wgain[slice][(j, ue)]
    }

    /// Checks dimensions and that every mapped pair has a beamformer.
    pub fn check_mapping(&self, a: &MappingAs) -> Result<()> {
        a.check(self.sc)?;
        for v in 0..a.n_services() {
            for s in 0..a.n_slices() {
                if a.get(v, s) {
                    self.bf.require(s, v)?;
                }
            }
        }
        Ok(())
    }

    fn check_power(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.n_ues() {
            return Err(Error::DimensionMismatch(format!(
                "{} powers for {} UEs",
                p.len(),
                self.n_ues()
            )));
        }
        Ok(())
    }

    /// `𝔴_u = Σ_s a_{v,s} |h^H w|^2`.
    pub fn signal_gain(&self, a: &MappingAs, ue: usize) -> f64 {
        let v = self.service_of[ue];
        (0..self.sc.n_slices())
            .filter(|&s| a.get(v, s))
            .map(|s| self.direct[s][ue])
            .sum()
    }

    fn interference_with(&self, a: &MappingAs, power: impl Fn(usize) -> f64) -> Vec<f64> {
        let n = self.n_ues();
        (0..n)
            .map(|u| {
                let v = self.service_of[u];
                let mut total = 0.0;
                for s in 0..self.sc.n_slices() {
                    let cross = &self.cross[s];
                    let overlap = &self.overlap[s];
                    for l in (0..n).filter(|&l| l != u) {
                        // Same-service interferers are gated by the UE's own
                        // mapping, the others by their service's mapping; both
                        // reduce to the interferer's service.
                        if a.get(self.service_of[l], s) && overlap[(u, l)] > 0.0 {
                            total += cross[(u, l)] * overlap[(u, l)] * power(l);
                        }
                    }
                    if a.get(v, s) {
                        total += self.quant[s][u];
                    }
                }
                total
            })
            .collect()
    }

    /// `Ī` per UE: the interference with every interfering power at `P_max`.
    pub fn interference_upper_bound(&self, a: &MappingAs) -> Result<Vec<f64>> {
        a.check(self.sc)?;
        let p_max = self.sc.params.p_max;
        Ok(self.interference_with(a, |_| p_max))
    }

    /// Interference per UE under the actual powers.
    pub fn exact_interference(&self, a: &MappingAs, p: &PowerAllocation) -> Result<Vec<f64>> {
        a.check(self.sc)?;
        let flat = p.flat();
        self.check_power(&flat)?;
        Ok(self.interference_with(a, |l| flat[l]))
    }

    pub(crate) fn ibar_unchecked(&self, a: &MappingAs) -> Vec<f64> {
        let p_max = self.sc.params.p_max;
        self.interference_with(a, |_| p_max)
    }

    /// `ρ = p·𝔴 / (B·N0 + Ī)`.
    pub fn snr(&self, a: &MappingAs, p: &PowerAllocation, ue: usize, ibar: f64) -> f64 {
        let v = self.service_of[ue];
        let power = p.p[v][ue - self.offsets[v]];
        self.snr_flat(a, power, ue, ibar)
    }

    pub(crate) fn snr_flat(&self, a: &MappingAs, power: f64, ue: usize, ibar: f64) -> f64 {
        power * self.signal_gain(a, ue) / (self.sc.params.noise_power() + ibar)
    }

    /// Per-UE rates under the given interference values.
    pub fn rates(&self, a: &MappingAs, p: &PowerAllocation, interference: &[f64]) -> Vec<f64> {
        self.rates_flat(a, &p.flat(), interference)
    }

    pub(crate) fn rates_flat(&self, a: &MappingAs, p: &[f64], interference: &[f64]) -> Vec<f64> {
        let b = self.sc.params.bandwidth_hz;
        (0..self.n_ues())
            .map(|u| achievable_rate(self.snr_flat(a, p[u], u, interference[u]), b))
            .collect()
    }

    /// Beamformed signal power leaving RU `j` of slice `s`, excluding
    /// quantization noise.
    pub(crate) fn ru_signal_flat(&self, a: &MappingAs, p: &[f64], s: usize, j: usize) -> f64 {
        let g = &self.wgain[s];
        (0..self.n_ues())
            .filter(|&u| a.get(self.service_of[u], s))
            .map(|u| g[(j, u)] * p[u])
            .sum()
    }

    /// `p̄_{s,j}`.
    pub fn ru_power(&self, a: &MappingAs, p: &PowerAllocation, s: usize, j: usize) -> f64 {
        self.ru_signal_flat(a, &p.flat(), s, j) + self.sc.sigma_q2(s, j)
    }

    /// `p̄` for every RU of every slice, `[s][j]`.
    pub fn ru_powers(&self, a: &MappingAs, p: &PowerAllocation) -> Vec<Vec<f64>> {
        self.ru_powers_flat(a, &p.flat())
    }

    pub(crate) fn ru_powers_flat(&self, a: &MappingAs, p: &[f64]) -> Vec<Vec<f64>> {
        (0..self.sc.n_slices())
            .map(|s| {
                (0..self.sc.slices[s].n_rus())
                    .map(|j| self.ru_signal_flat(a, p, s, j) + self.sc.sigma_q2(s, j))
                    .collect()
            })
            .collect()
    }

    /// `C_{s,j} = log2(1 + signal / σ_q^2)` in bits/s/Hz.
    pub fn fronthaul_rate(&self, a: &MappingAs, p: &PowerAllocation, s: usize, j: usize) -> f64 {
        fronthaul_from_signal(self.ru_signal_flat(a, &p.flat(), s, j), self.sc.sigma_q2(s, j))
    }

    /// Sum rate (under `Ī`) over the power of every RU in every slice.
    pub fn energy_efficiency(&self, a: &MappingAs, p: &PowerAllocation) -> Result<EnergyEfficiency> {
        self.check_mapping(a)?;
        let flat = p.flat();
        self.check_power(&flat)?;
        let ibar = self.ibar_unchecked(a);
        Ok(self.energy_efficiency_flat(a, &flat, &ibar))
    }

    pub(crate) fn energy_efficiency_flat(&self, a: &MappingAs, p: &[f64], ibar: &[f64]) -> EnergyEfficiency {
        let r_tot: f64 = self.rates_flat(a, p, ibar).iter().sum();
        let p_tot: f64 = self.ru_powers_flat(a, p).iter().flatten().sum();
        EnergyEfficiency {
            eta: r_tot / p_tot,
            r_tot,
            p_tot,
        }
    }
}

pub fn fronthaul_from_signal(signal: f64, sigma_q2: f64) -> f64 {
    (signal / sigma_q2).ln_1p() / std::f64::consts::LN_2
}
