//! Greedy slice-to-service mapping.
//!
//! Services are ranked by UE count and load, slices by a weighted size
//! score. Each ranked slice takes the first ranked, not yet covered service
//! that keeps the whole system feasible with every mapped UE at `P_max`.
//! Services still uncovered after that pass get a second chance on any slice.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{check_flat, FeasibilityReport};
use crate::radio::{MappingAs, Radio};
use crate::scenario::Scenario;

/// Relative tolerance of the feasibility test used while mapping.
pub const MAPPING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingWeights {
    pub w_prb: f64,
    pub w_ru: f64,
    pub w_vnf: f64,
}

impl Default for RankingWeights {
    fn default() -> Self {
        Self {
            w_prb: 1.0,
            w_ru: 1.0,
            w_vnf: 1.0,
        }
    }
}

impl RankingWeights {
    pub fn check(&self) -> Result<()> {
        let w = [self.w_prb, self.w_ru, self.w_vnf];
        if w.iter().any(|x| !(*x >= 0.0 && x.is_finite())) || w.iter().all(|&x| x == 0.0) {
            return Err(Error::config("ranking weights", "must be nonnegative and not all zero"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedLists {
    pub service_order: Vec<usize>,
    pub slice_order: Vec<usize>,
    pub weights: RankingWeights,
}

/// Services by `(U_v, Σλ)` descending, ties by lower id.
pub fn rank_services(sc: &Scenario) -> Vec<usize> {
    let key = |v: usize| {
        let svc = &sc.services[v];
        (svc.ues.len(), svc.ues.iter().map(|u| u.arrival_rate).sum::<f64>())
    };
    let mut order: Vec<usize> = (0..sc.n_services()).collect();
    order.sort_by(|&x, &y| {
        let (ux, lx) = key(x);
        let (uy, ly) = key(y);
        uy.cmp(&ux)
            .then(ly.partial_cmp(&lx).unwrap_or(Ordering::Equal))
            .then(x.cmp(&y))
    });
    order
}

pub fn slice_score(sc: &Scenario, s: usize, w: &RankingWeights) -> f64 {
    let slice = &sc.slices[s];
    w.w_prb * slice.n_prbs() as f64 + w.w_ru * slice.n_rus() as f64 + w.w_vnf * slice.n_vnfs() as f64
}

/// Slices by weighted PRB, RU and VNF counts, descending; ties by lower id.
pub fn rank_slices(sc: &Scenario, w: &RankingWeights) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sc.n_slices()).collect();
    order.sort_by(|&x, &y| {
        slice_score(sc, y, w)
            .partial_cmp(&slice_score(sc, x, w))
            .unwrap_or(Ordering::Equal)
            .then(x.cmp(&y))
    });
    order
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingOutcome {
    pub mapping: MappingAs,
    pub ranked: RankedLists,
    /// Services left with no slice.
    pub uncovered: Vec<usize>,
    /// `(service, slice)` pairs accepted by the second pass.
    pub second_pass: Vec<(usize, usize)>,
}

/// Feasibility of `a` with every UE of a mapped service at `P_max`.
pub fn check_at_p_max(radio: &Radio, a: &MappingAs) -> FeasibilityReport {
    let p = p_max_powers(radio, a);
    let ibar = radio.ibar_unchecked(a);
    check_flat(radio, a, &p, &ibar, MAPPING_TOL)
}

pub(crate) fn p_max_powers(radio: &Radio, a: &MappingAs) -> Vec<f64> {
    let p_max = radio.sc.params.p_max;
    (0..radio.n_ues())
        .map(|u| if a.is_covered(radio.service_of(u)) { p_max } else { 0.0 })
        .collect()
}

pub fn map_slices_to_services(radio: &Radio, weights: &RankingWeights) -> Result<MappingOutcome> {
    weights.check()?;
    let sc = radio.sc;
    let service_order = rank_services(sc);
    let slice_order = rank_slices(sc, weights);
    let mut a = MappingAs::zeros(sc.n_services(), sc.n_slices());

    let try_pair = |a: &mut MappingAs, v: usize, s: usize| -> bool {
        if radio.bf.get(s, v).is_none() {
            return false;
        }
        a.set(v, s, true);
        if check_at_p_max(radio, a).is_feasible() {
            true
        } else {
            a.set(v, s, false);
            false
        }
    };

    for &s in &slice_order {
        for &v in &service_order {
            if a.is_covered(v) {
                continue;
            }
            if try_pair(&mut a, v, s) {
                break;
            }
        }
    }

    let mut second_pass = Vec::new();
    for &v in &service_order {
        if a.is_covered(v) {
            continue;
        }
        for &s in &slice_order {
            if try_pair(&mut a, v, s) {
                second_pass.push((v, s));
                break;
            }
        }
    }

    let uncovered = a.uncovered();
    Ok(MappingOutcome {
        mapping: a,
        ranked: RankedLists {
            service_order,
            slice_order,
            weights: *weights,
        },
        uncovered,
        second_pass,
    })
}
