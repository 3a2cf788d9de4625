//! Exhaustive mapping search with a power grid.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linalg::zf_gauss_jordan;
use super::summation::interference_bound;
use crate::error::{Error, Result};
use crate::radio::{ChannelSet, MappingAs, PowerAllocation};
use crate::scenario::Scenario;

/// Default number of grid points per power axis.
pub const DEFAULT_POWER_GRID: usize = 64;
/// Largest `V·S` searched.
pub const MAX_PAIRS: usize = 12;
/// Largest UE count searched.
pub const MAX_UES: usize = 4;
/// Relative slack on every constraint, matching the solver's check.
pub const ORACLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingOracle {
    pub mapping: MappingAs,
    pub power: PowerAllocation,
    pub eta: f64,
    pub r_tot: f64,
    pub p_tot: f64,
    /// Mappings that passed the coverage test and were grid-searched.
    pub mappings_searched: usize,
}

struct Instance<'a> {
    sc: &'a Scenario,
    ch: &'a ChannelSet,
    w: Vec<Vec<Option<DMatrix<Complex64>>>>,
    grid_n: usize,
}

struct Candidate {
    eta: f64,
    r_tot: f64,
    p_tot: f64,
    p: Vec<f64>,
}

/// Searches every mapping that gives each service a slice with a usable
/// zero-forcing beamformer, and for each the grid `{k·P_max/n : k = 1..n}`
/// on every UE power. Returns the feasible point of largest `η`, or `None`
/// when no grid point of any mapping is feasible.
pub fn brute_force_mapping(sc: &Scenario, ch: &ChannelSet, grid_n: usize) -> Result<Option<MappingOracle>> {
    let (n_v, n_s) = (sc.services.len(), sc.slices.len());
    let n_ues: usize = sc.services.iter().map(|s| s.ues.len()).sum();
    if n_v * n_s > MAX_PAIRS || n_ues > MAX_UES {
        return Err(Error::TooLarge(format!(
            "{n_v} services x {n_s} slices with {n_ues} UEs (limits: {MAX_PAIRS} pairs, {MAX_UES} UEs)"
        )));
    }
    if grid_n == 0 {
        return Err(Error::config("power_grid_n", "must be at least 1"));
    }
    let w: Vec<Vec<Option<DMatrix<Complex64>>>> = (0..n_s)
        .map(|s| {
            (0..n_v)
                .map(|v| {
                    let rus = &sc.slices[s].ru_ids;
                    let offset: usize = sc.services[..v].iter().map(|x| x.ues.len()).sum();
                    let h = DMatrix::from_fn(rus.len(), sc.services[v].ues.len(), |j, i| ch.h[rus[j]][offset + i]);
                    zf_gauss_jordan(&h)
                })
                .collect()
        })
        .collect();
    let inst = Instance { sc, ch, w, grid_n };

    let mappings: Vec<u64> = (0..1u64 << (n_v * n_s))
        .filter(|&bits| {
            (0..n_v).all(|v| (0..n_s).any(|s| bits >> (v * n_s + s) & 1 == 1))
                && (0..n_v).all(|v| (0..n_s).all(|s| bits >> (v * n_s + s) & 1 == 0 || inst.w[s][v].is_some()))
        })
        .collect();
    let searched = mappings.len();
    let best = mappings
        .par_iter()
        .filter_map(|&bits| {
            let a = MappingAs::from_bits(n_v, n_s, bits);
            inst.search(&a).map(|c| (bits, c))
        })
        .reduce_with(|x, y| {
            if y.1.eta > x.1.eta || (y.1.eta == x.1.eta && y.0 < x.0) {
                y
            } else {
                x
            }
        });
    Ok(best.map(|(bits, c)| MappingOracle {
        mapping: MappingAs::from_bits(n_v, n_s, bits),
        power: PowerAllocation::from_flat(sc, &c.p),
        eta: c.eta,
        r_tot: c.r_tot,
        p_tot: c.p_tot,
        mappings_searched: searched,
    }))
}

impl Instance<'_> {
    fn search(&self, a: &MappingAs) -> Option<Candidate> {
        let sc = self.sc;
        let prm = &sc.params;
        let pairs: Vec<(usize, usize)> = sc
            .services
            .iter()
            .enumerate()
            .flat_map(|(v, svc)| (0..svc.ues.len()).map(move |i| (v, i)))
            .collect();
        let n = pairs.len();
        let ibar = interference_bound(sc, a, self.ch, &self.w);
        let noise = prm.bandwidth_hz * prm.noise_psd;

        let mut gain = vec![0.0; n];
        for (u, &(v, i)) in pairs.iter().enumerate() {
            for s in 0..sc.slices.len() {
                if a.a[v][s] == 1 {
                    let wv = self.w[s][v].as_ref().expect("mapped pairs have beamformers");
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, &r) in sc.slices[s].ru_ids.iter().enumerate() {
                        acc += self.ch.h[r][u].conj() * wv[(j, i)];
                    }
                    gain[u] += acc.norm_sqr();
                }
            }
        }

        // RU rows: (sigma, coefficient per UE).
        let mut rus: Vec<(f64, Vec<f64>)> = Vec::new();
        for s in 0..sc.slices.len() {
            for (j, &r) in sc.slices[s].ru_ids.iter().enumerate() {
                let mut coef = vec![0.0; n];
                for (u, &(v, i)) in pairs.iter().enumerate() {
                    if a.a[v][s] == 1 {
                        coef[u] = self.w[s][v].as_ref().unwrap()[(j, i)].norm_sqr();
                    }
                }
                rus.push((sc.radio_units[r].sigma_q2, coef));
            }
        }

        let rate = |u: usize, p: f64| prm.bandwidth_hz * (1.0 + p * gain[u] / (noise + ibar[u])).log2();
        let levels: Vec<Vec<f64>> = (0..n)
            .map(|u| {
                (1..=self.grid_n)
                    .map(|k| prm.p_max * k as f64 / self.grid_n as f64)
                    .filter(|&p| rate(u, p) >= prm.r_min * (1.0 - ORACLE_TOL))
                    .collect()
            })
            .collect();
        if levels.iter().any(|l| l.is_empty()) {
            return None;
        }

        let mut best: Option<Candidate> = None;
        let mut p = vec![0.0; n];
        let mut loads: Vec<f64> = rus.iter().map(|(q, _)| *q).collect();
        self.descend(a, 0, &levels, &rus, &pairs, &rate, &mut p, &mut loads, &mut best);
        best
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        a: &MappingAs,
        u: usize,
        levels: &[Vec<f64>],
        rus: &[(f64, Vec<f64>)],
        pairs: &[(usize, usize)],
        rate: &dyn Fn(usize, f64) -> f64,
        p: &mut Vec<f64>,
        loads: &mut Vec<f64>,
        best: &mut Option<Candidate>,
    ) {
        let prm = &self.sc.params;
        if u == levels.len() {
            self.evaluate(a, rus, pairs, rate, p, loads, best);
            return;
        }
        for &level in &levels[u] {
            let over = rus
                .iter()
                .zip(loads.iter())
                .any(|((_, c), l)| l + c[u] * level > prm.p_max * (1.0 + ORACLE_TOL));
            if over {
                // Loads grow with the level, so higher levels fail too.
                break;
            }
            for ((_, c), l) in rus.iter().zip(loads.iter_mut()) {
                *l += c[u] * level;
            }
            p[u] = level;
            self.descend(a, u + 1, levels, rus, pairs, rate, p, loads, best);
            for ((_, c), l) in rus.iter().zip(loads.iter_mut()) {
                *l -= c[u] * level;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn evaluate(
        &self,
        a: &MappingAs,
        rus: &[(f64, Vec<f64>)],
        pairs: &[(usize, usize)],
        rate: &dyn Fn(usize, f64) -> f64,
        p: &[f64],
        loads: &[f64],
        best: &mut Option<Candidate>,
    ) {
        let sc = self.sc;
        let prm = &sc.params;
        for ((sigma, _), load) in rus.iter().zip(loads) {
            if ((load - sigma) / sigma).ln_1p() / std::f64::consts::LN_2 > prm.c_max * (1.0 + ORACLE_TOL) {
                return;
            }
        }
        let rates: Vec<f64> = (0..p.len()).map(|u| rate(u, p[u])).collect();
        for s in 0..sc.slices.len() {
            let mapped: Vec<usize> = (0..pairs.len()).filter(|&u| a.a[pairs[u].0][s] == 1).collect();
            if mapped.is_empty() {
                continue;
            }
            let alpha: f64 = mapped.iter().map(|&u| sc.services[pairs[u].0].ues[pairs[u].1].arrival_rate).sum();
            let sl = &sc.slices[s];
            let in_du = alpha / sl.m_du as f64;
            let in_cu = alpha / sl.m_cu as f64;
            let out = mapped.iter().map(|&u| rates[u]).sum::<f64>() / prm.packet_size_bits;
            if !(in_du < prm.mu1 && in_cu < prm.mu2 && alpha < out) {
                return;
            }
            let delay = 1.0 / (prm.mu1 - in_du) + 1.0 / (prm.mu2 - in_cu) + 1.0 / (out - alpha);
            if delay > prm.d_max * (1.0 + ORACLE_TOL) {
                return;
            }
        }
        let r_tot: f64 = rates.iter().sum();
        let p_tot: f64 = loads.iter().sum();
        let eta = r_tot / p_tot;
        if best.as_ref().is_none_or(|b| eta > b.eta) {
            *best = Some(Candidate {
                eta,
                r_tot,
                p_tot,
                p: p.to_vec(),
            });
        }
    }
}
