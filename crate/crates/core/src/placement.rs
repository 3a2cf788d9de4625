//! Placement of slice VNF bundles onto data centers.
//!
//! Phase 1 packs whole slices first-fit decreasing by weighted demand onto
//! DCs ordered by weighted capacity. Phase 2 splits leftover slices across
//! several DCs resource by resource. Phase 3 moves slices and whole DC
//! contents towards smaller DCs when that does not raise the power cost.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radio::MappingAs;
use crate::scenario::{DataCenter, Resources, Scenario};

/// Slack allowed on residual capacities.
pub const CAPACITY_TOL: f64 = 1e-9;

/// Weights turning (GB, TB, GHz) into one scalar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementWeights {
    pub w_m: f64,
    pub w_s: f64,
    pub w_c: f64,
}

impl Default for PlacementWeights {
    fn default() -> Self {
        Self {
            w_m: 1.0,
            w_s: 100.0,
            w_c: 320.0,
        }
    }
}

impl PlacementWeights {
    pub fn check(&self) -> Result<()> {
        let w = [self.w_m, self.w_s, self.w_c];
        if w.iter().any(|x| !(*x >= 0.0 && x.is_finite())) || w.iter().all(|&x| x == 0.0) {
            return Err(Error::config("placement weights", "must be nonnegative and not all zero"));
        }
        Ok(())
    }

    pub fn weigh(&self, r: &Resources) -> f64 {
        self.w_m * r.memory_gb + self.w_s * r.storage_tb + self.w_c * r.cpu_ghz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceDemand {
    pub totals: Resources,
    pub weighted: f64,
}

impl SliceDemand {
    pub fn of(sc: &Scenario, s: usize, weights: &PlacementWeights) -> Self {
        let totals = sc.slices[s].total_demand();
        Self {
            totals,
            weighted: weights.weigh(&totals),
        }
    }
}

pub fn weighted_demand(demand: &Resources, weights: &PlacementWeights) -> f64 {
    weights.weigh(demand)
}

pub fn weighted_capacity(dc: &DataCenter, weights: &PlacementWeights) -> f64 {
    weights.weigh(&dc.capacity)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    /// `y[s][d]`: DC `d` hosts part or all of slice `s`.
    pub y: Vec<Vec<u8>>,
    /// Resources of slice `s` hosted on DC `d`.
    pub shares: Vec<Vec<Resources>>,
    pub residual: Vec<Resources>,
    /// Slice is fully hosted.
    pub admitted: Vec<bool>,
    /// Slice serves at least one service and so needs hosting.
    pub active: Vec<bool>,
}

impl Placement {
    pub fn empty(sc: &Scenario, a: &MappingAs) -> Self {
        let (n_s, n_d) = (sc.n_slices(), sc.n_dcs());
        Self {
            y: vec![vec![0; n_d]; n_s],
            shares: vec![vec![Resources::ZERO; n_d]; n_s],
            residual: sc.dcs.iter().map(|dc| dc.capacity).collect(),
            admitted: vec![false; n_s],
            active: (0..n_s).map(|s| a.is_slice_active(s)).collect(),
        }
    }

    pub fn dcs_of(&self, s: usize) -> Vec<usize> {
        (0..self.y[s].len()).filter(|&d| self.y[s][d] == 1).collect()
    }

    pub fn is_dc_used(&self, d: usize) -> bool {
        self.y.iter().any(|row| row[d] == 1)
    }

    pub fn n_admitted(&self) -> usize {
        self.admitted.iter().filter(|&&x| x).count()
    }

    fn assign(&mut self, s: usize, d: usize, share: Resources) {
        self.y[s][d] = 1;
        self.shares[s][d] += share;
        self.residual[d] -= share;
    }

    fn release(&mut self, s: usize, d: usize) {
        self.residual[d] += self.shares[s][d];
        self.shares[s][d] = Resources::ZERO;
        self.y[s][d] = 0;
    }
}

/// `(φ_tot, ψ_tot)`. Each used DC costs its idle power once plus its
/// per-unit power times the weighted resources it hosts; `ψ` subtracts
/// `ν` for every (slice, DC, mapped service) triple.
pub fn cost_psi(sc: &Scenario, a: &MappingAs, placement: &Placement, weights: &PlacementWeights) -> (f64, f64) {
    let mut phi = 0.0;
    for (d, dc) in sc.dcs.iter().enumerate() {
        if placement.is_dc_used(d) {
            phi += dc.phi_idle;
        }
        phi += dc.phi_per_unit * placement.shares.iter().map(|row| weights.weigh(&row[d])).sum::<f64>();
    }
    let credit: f64 = placement
        .y
        .iter()
        .enumerate()
        .map(|(s, row)| row.iter().map(|&y| y as f64).sum::<f64>() * a.services_on(s) as f64)
        .sum();
    (phi, phi - sc.params.nu * credit)
}

fn descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&x, &y| values[y].partial_cmp(&values[x]).unwrap_or(Ordering::Equal).then(x.cmp(&y)));
    order
}

/// Runs the three phases. In single-DC mode no slice is split.
pub fn place(sc: &Scenario, a: &MappingAs, weights: &PlacementWeights, single_dc: bool) -> Result<Placement> {
    weights.check()?;
    a.check(sc)?;
    let demand: Vec<SliceDemand> = (0..sc.n_slices()).map(|s| SliceDemand::of(sc, s, weights)).collect();
    let tau: Vec<f64> = sc.dcs.iter().map(|dc| weighted_capacity(dc, weights)).collect();
    let slice_order: Vec<usize> = descending(&demand.iter().map(|d| d.weighted).collect::<Vec<_>>())
        .into_iter()
        .filter(|&s| a.is_slice_active(s))
        .collect();
    let dc_order = descending(&tau);
    let mut pl = Placement::empty(sc, a);

    // Phase 1: whole slices, first fit.
    for &s in &slice_order {
        if let Some(&d) = dc_order
            .iter()
            .find(|&&d| demand[s].totals.fits_within(&pl.residual[d], CAPACITY_TOL))
        {
            pl.assign(s, d, demand[s].totals);
            pl.admitted[s] = true;
        }
    }

    // Phase 2: split the rest resource-wise.
    if !single_dc {
        let leftover: Vec<usize> = slice_order.iter().copied().filter(|&s| !pl.admitted[s]).collect();
        for s in leftover {
            let mut remaining = demand[s].totals;
            let mut used = Vec::new();
            for &d in &dc_order {
                if remaining.is_zero(CAPACITY_TOL) {
                    break;
                }
                let take = remaining.zip_with(pl.residual[d], |need, have| need.min(have.max(0.0)));
                if take.max_component() > CAPACITY_TOL {
                    pl.assign(s, d, take);
                    remaining -= take;
                    used.push(d);
                }
            }
            if remaining.is_zero(CAPACITY_TOL) {
                pl.admitted[s] = true;
            } else {
                for d in used {
                    pl.release(s, d);
                }
            }
        }
    }

    remap(sc, a, weights, &demand, &tau, &slice_order, &mut pl);
    Ok(pl)
}

/// Phase 3. A slice wholly on one DC moves to the smallest DC below it
/// that can hold it, if `φ` does not rise; then a DC whose slices all fit
/// in an unused smaller DC hands them over under the same rule.
fn remap(
    sc: &Scenario,
    a: &MappingAs,
    weights: &PlacementWeights,
    demand: &[SliceDemand],
    tau: &[f64],
    slice_order: &[usize],
    pl: &mut Placement,
) {
    let mut ascending: Vec<usize> = descending(tau);
    ascending.reverse();
    let phi = |pl: &Placement| cost_psi(sc, a, pl, weights).0;

    for &s in slice_order {
        let on = pl.dcs_of(s);
        if on.len() != 1 {
            continue;
        }
        let d = on[0];
        let target = ascending
            .iter()
            .copied()
            .find(|&e| tau[e] < tau[d] && demand[s].totals.fits_within(&pl.residual[e], CAPACITY_TOL));
        if let Some(e) = target {
            let before = phi(pl);
            pl.release(s, d);
            pl.assign(s, e, demand[s].totals);
            if phi(pl) > before {
                pl.release(s, e);
                pl.assign(s, d, demand[s].totals);
            }
        }
    }

    for &d in ascending.iter().rev() {
        let hosted: Vec<usize> = (0..pl.y.len()).filter(|&s| pl.y[s][d] == 1).collect();
        if hosted.is_empty() || hosted.iter().any(|&s| pl.dcs_of(s).len() != 1) {
            continue;
        }
        let load: Resources = hosted.iter().map(|&s| demand[s].totals).sum();
        let target = ascending
            .iter()
            .copied()
            .find(|&e| tau[e] < tau[d] && !pl.is_dc_used(e) && load.fits_within(&pl.residual[e], CAPACITY_TOL));
        if let Some(e) = target {
            let before = phi(pl);
            for &s in &hosted {
                pl.release(s, d);
                pl.assign(s, e, demand[s].totals);
            }
            if phi(pl) > before {
                for &s in &hosted {
                    pl.release(s, e);
                    pl.assign(s, d, demand[s].totals);
                }
            }
        }
    }
}

/// Fraction of active slices that are fully hosted; in single-DC mode a
/// slice only counts when it sits on exactly one DC. With no active slice
/// the ratio is 1.
pub fn admitted_ratio(placement: &Placement, single_dc: bool) -> f64 {
    let active: Vec<usize> = (0..placement.active.len()).filter(|&s| placement.active[s]).collect();
    if active.is_empty() {
        return 1.0;
    }
    let ok = active
        .iter()
        .filter(|&&s| placement.admitted[s] && (!single_dc || placement.dcs_of(s).len() == 1))
        .count();
    ok as f64 / active.len() as f64
}

/// Power of every DC running at full capacity, the large-scale reference
/// for normalized consumption.
pub fn capacity_power(sc: &Scenario, weights: &PlacementWeights) -> f64 {
    sc.dcs
        .iter()
        .map(|dc| dc.phi_idle + dc.phi_per_unit * weighted_capacity(dc, weights))
        .sum()
}

/// `φ_heuristic / φ_reference`; 0 when nothing is placed.
pub fn normalized_resource_consumption(phi: f64, reference_phi: f64) -> f64 {
    if phi == 0.0 {
        0.0
    } else {
        phi / reference_phi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit;

    fn mean_instance(n_slices: usize) -> (Scenario, MappingAs) {
        let spec: Vec<(&[usize], &[usize])> = (0..n_slices).map(|_| (&[0][..], &[0][..])).collect();
        let sc = testkit::scenario(&[1], &spec, 1, 1);
        let mut a = MappingAs::zeros(1, n_slices);
        for s in 0..n_slices {
            a.set(0, s, true);
        }
        (sc, a)
    }

    #[test]
    fn weighted_demand_examples() {
        let w = PlacementWeights::default();
        assert_eq!(weighted_demand(&Resources::new(100.0, 10.0, 32.0), &w), 11340.0);
        let mem = PlacementWeights {
            w_m: 1.0,
            w_s: 0.0,
            w_c: 0.0,
        };
        assert_eq!(weighted_demand(&Resources::new(7.0, 10.0, 32.0), &mem), 7.0);
        assert_eq!(weighted_demand(&Resources::ZERO, &w), 0.0);
    }

    #[test]
    fn bad_weights_are_rejected() {
        let w = PlacementWeights {
            w_m: -1.0,
            w_s: 1.0,
            w_c: 1.0,
        };
        assert!(w.check().is_err());
    }

    #[test]
    fn cost_examples() {
        let (mut sc, a) = mean_instance(1);
        let none = MappingAs::zeros(1, 1);
        let empty = Placement::empty(&sc, &none);
        assert_eq!(cost_psi(&sc, &none, &empty, &PlacementWeights::default()), (0.0, 0.0));

        sc.dcs[0].phi_idle = 5.0;
        sc.dcs[0].phi_per_unit = 1.0;
        sc.slices[0].vnf_demands = vec![Resources::new(10.0, 0.0, 0.0)];
        let mem = PlacementWeights {
            w_m: 1.0,
            w_s: 0.0,
            w_c: 0.0,
        };
        let pl = place(&sc, &a, &mem, true).unwrap();
        assert_eq!(cost_psi(&sc, &a, &pl, &mem), (15.0, 15.0));
        sc.params.nu = 100.0;
        assert_eq!(cost_psi(&sc, &a, &pl, &mem), (15.0, -85.0));
    }

    #[test]
    fn ten_mean_slices_fill_one_dc() {
        let (sc, a) = mean_instance(10);
        let pl = place(&sc, &a, &PlacementWeights::default(), true).unwrap();
        assert!(pl.admitted.iter().all(|&x| x));
        assert_eq!(pl.residual[0], Resources::ZERO);
        assert_eq!(admitted_ratio(&pl, true), 1.0);
    }

    #[test]
    fn eleventh_slice_is_rejected() {
        let (sc, a) = mean_instance(11);
        let pl = place(&sc, &a, &PlacementWeights::default(), true).unwrap();
        assert_eq!(pl.n_admitted(), 10);
        assert!(!pl.admitted[10]);
        assert!((admitted_ratio(&pl, true) - 10.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn inactive_slices_are_ignored() {
        let (sc, mut a) = mean_instance(3);
        a.set(0, 1, false);
        let pl = place(&sc, &a, &PlacementWeights::default(), true).unwrap();
        assert_eq!(pl.dcs_of(1), Vec::<usize>::new());
        assert_eq!(admitted_ratio(&pl, true), 1.0);
        let none = MappingAs::zeros(1, 3);
        let empty = place(&sc, &none, &PlacementWeights::default(), true).unwrap();
        assert_eq!(cost_psi(&sc, &none, &empty, &PlacementWeights::default()).0, 0.0);
        assert_eq!(normalized_resource_consumption(0.0, 10.0), 0.0);
    }

    #[test]
    fn none_admitted_gives_zero_ratio() {
        let (mut sc, a) = mean_instance(2);
        sc.dcs[0].capacity = Resources::new(1.0, 1.0, 1.0);
        let pl = place(&sc, &a, &PlacementWeights::default(), false).unwrap();
        assert_eq!(admitted_ratio(&pl, false), 0.0);
        assert_eq!(pl.residual[0], sc.dcs[0].capacity);
    }

    #[test]
    fn split_covers_demand_resource_wise() {
        // Two DCs each holding 60% of one slice.
        let (mut sc, a) = mean_instance(1);
        let dc = sc.dcs[0].clone();
        sc.dcs = vec![dc.clone(), DataCenter { id: 1, ..dc }];
        for d in &mut sc.dcs {
            d.capacity = Resources::new(60.0, 6.0, 19.2);
        }
        let pl = place(&sc, &a, &PlacementWeights::default(), false).unwrap();
        assert!(pl.admitted[0]);
        assert_eq!(pl.dcs_of(0), vec![0, 1]);
        let covered: Resources = pl.shares[0].iter().copied().sum();
        assert!((covered - sc.slices[0].total_demand()).is_zero(1e-9));
        assert!(pl.residual.iter().all(|r| r.min_component() >= -CAPACITY_TOL));
        assert_eq!(admitted_ratio(&pl, true), 0.0);

        let single = place(&sc, &a, &PlacementWeights::default(), true).unwrap();
        assert!(!single.admitted[0]);
        assert_eq!(single.residual, vec![sc.dcs[0].capacity; 2]);
    }

    #[test]
    fn remap_moves_slice_to_smaller_dc() {
        let (mut sc, a) = mean_instance(1);
        let dc = sc.dcs[0].clone();
        let small = DataCenter {
            id: 1,
            capacity: Resources::new(200.0, 20.0, 64.0),
            phi_idle: 1.0,
            ..dc.clone()
        };
        sc.dcs = vec![dc, small];
        let pl = place(&sc, &a, &PlacementWeights::default(), true).unwrap();
        assert_eq!(pl.dcs_of(0), vec![1]);
    }

    #[test]
    fn remap_never_raises_cost() {
        // A smaller DC with a higher idle cost is not worth moving to.
        let (mut sc, a) = mean_instance(1);
        let dc = sc.dcs[0].clone();
        let small = DataCenter {
            id: 1,
            capacity: Resources::new(200.0, 20.0, 64.0),
            phi_idle: 50.0,
            ..dc.clone()
        };
        sc.dcs = vec![dc, small];
        let pl = place(&sc, &a, &PlacementWeights::default(), true).unwrap();
        assert_eq!(pl.dcs_of(0), vec![0]);
    }

    #[test]
    fn placement_is_deterministic() {
        let (sc, a) = mean_instance(7);
        let w = PlacementWeights::default();
        assert_eq!(place(&sc, &a, &w, false).unwrap(), place(&sc, &a, &w, false).unwrap());
    }
}
