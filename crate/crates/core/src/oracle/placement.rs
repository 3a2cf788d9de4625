//! Exhaustive placement search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::placement::{Placement, PlacementWeights};
use crate::radio::MappingAs;
use crate::scenario::{Resources, Scenario};

pub const MAX_SLICES: usize = 10;
pub const MAX_DCS: usize = 5;
const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    /// Every admitted slice sits wholly on one DC.
    SingleDc,
    /// Slices may be split across DCs; with `strict`, every active slice
    /// must be admitted.
    MultiDc { strict: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementOracle {
    pub placement: Placement,
    pub phi: f64,
    pub psi: f64,
}

fn weigh(w: &PlacementWeights, r: &Resources) -> f64 {
    w.w_m * r.memory_gb + w.w_s * r.storage_tb + w.w_c * r.cpu_ghz
}

fn demand(sc: &Scenario, s: usize) -> [f64; 3] {
    let mut out = [0.0; 3];
    for f in &sc.slices[s].vnf_demands {
        out[0] += f.memory_gb;
        out[1] += f.storage_tb;
        out[2] += f.cpu_ghz;
    }
    out
}

fn services_on(a: &MappingAs, s: usize) -> f64 {
    (0..a.a.len()).map(|v| a.a[v][s] as f64).sum()
}

fn guard(sc: &Scenario) -> Result<()> {
    if sc.slices.len() > MAX_SLICES || sc.dcs.len() > MAX_DCS {
        return Err(Error::TooLarge(format!(
            "{} slices x {} DCs (limits: {MAX_SLICES} slices, {MAX_DCS} DCs)",
            sc.slices.len(),
            sc.dcs.len()
        )));
    }
    Ok(())
}

/// Placement minimizing `ψ_tot` over every admissible `y`. Returns `None`
/// when no placement meets the mode's admission rule (only possible in
/// strict mode).
pub fn exhaustive_placement(
    sc: &Scenario,
    a: &MappingAs,
    weights: &PlacementWeights,
    mode: OracleMode,
) -> Result<Option<PlacementOracle>> {
    guard(sc)?;
    weights.check()?;
    a.check(sc)?;
    Ok(match mode {
        OracleMode::SingleDc => Some(single_dc(sc, a, weights)),
        OracleMode::MultiDc { strict } => multi_dc(sc, a, weights, strict),
    })
}

struct Dfs<'a> {
    sc: &'a Scenario,
    active: Vec<usize>,
    need: Vec<[f64; 3]>,
    cost: Vec<f64>,
    credit: Vec<f64>,
    residual: Vec<[f64; 3]>,
    used: Vec<usize>,
    choice: Vec<Option<usize>>,
    best: Option<(f64, Vec<Option<usize>>)>,
}

impl Dfs<'_> {
    fn run(&mut self, k: usize, psi: f64) {
        let nu = self.sc.params.nu;
        // Every remaining slice admitted at no power is the best case.
        let bound: f64 = self.active[k..].iter().map(|&s| -nu * self.credit[s]).sum();
        if let Some((b, _)) = &self.best {
            if psi + bound >= *b - TOL * b.abs().max(1.0) {
                return;
            }
        }
        if k == self.active.len() {
            self.best = Some((psi, self.choice.clone()));
            return;
        }
        let s = self.active[k];
        // Lexicographic order on y: unplaced first, then the last DC first.
        self.choice[s] = None;
        self.run(k + 1, psi);
        for d in (0..self.sc.dcs.len()).rev() {
            if (0..3).any(|r| self.need[s][r] > self.residual[d][r] + TOL) {
                continue;
            }
            let dc = &self.sc.dcs[d];
            let idle = if self.used[d] == 0 { dc.phi_idle } else { 0.0 };
            for r in 0..3 {
                self.residual[d][r] -= self.need[s][r];
            }
            self.used[d] += 1;
            self.choice[s] = Some(d);
            let step = idle + dc.phi_per_unit * self.cost[s] - nu * self.credit[s];
            self.run(k + 1, psi + step);
            self.used[d] -= 1;
            for r in 0..3 {
                self.residual[d][r] += self.need[s][r];
            }
        }
        self.choice[s] = None;
    }
}

fn single_dc(sc: &Scenario, a: &MappingAs, w: &PlacementWeights) -> PlacementOracle {
    let n_s = sc.slices.len();
    let need: Vec<[f64; 3]> = (0..n_s).map(|s| demand(sc, s)).collect();
    let mut dfs = Dfs {
        sc,
        active: (0..n_s).filter(|&s| services_on(a, s) > 0.0).collect(),
        cost: need.iter().map(|d| weigh(w, &Resources::from_array(*d))).collect(),
        credit: (0..n_s).map(|s| services_on(a, s)).collect(),
        need,
        residual: sc.dcs.iter().map(|d| d.capacity.to_array()).collect(),
        used: vec![0; sc.dcs.len()],
        choice: vec![None; n_s],
        best: None,
    };
    dfs.run(0, 0.0);
    let (_, choice) = dfs.best.expect("placing nothing is always possible");
    let mut shares = vec![vec![[0.0; 3]; sc.dcs.len()]; n_s];
    for s in 0..n_s {
        if let Some(d) = choice[s] {
            shares[s][d] = dfs.need[s];
        }
    }
    realize(sc, a, w, shares)
}

fn multi_dc(sc: &Scenario, a: &MappingAs, w: &PlacementWeights, strict: bool) -> Option<PlacementOracle> {
    let n_s = sc.slices.len();
    let n_d = sc.dcs.len();
    let active: Vec<usize> = (0..n_s).filter(|&s| services_on(a, s) > 0.0).collect();
    let need: Vec<[f64; 3]> = (0..n_s).map(|s| demand(sc, s)).collect();
    let mut best: Option<PlacementOracle> = None;
    let subsets: Vec<u32> = if strict {
        vec![(1u32 << active.len()) - 1]
    } else {
        (0..1u32 << active.len()).collect()
    };
    for admitted_bits in subsets {
        let admitted: Vec<usize> = (0..active.len())
            .filter(|&k| admitted_bits >> k & 1 == 1)
            .map(|k| active[k])
            .collect();
        let total: [f64; 3] = std::array::from_fn(|r| admitted.iter().map(|&s| need[s][r]).sum());
        for dc_bits in 0..1u32 << n_d {
            let mut open: Vec<usize> = (0..n_d).filter(|&d| dc_bits >> d & 1 == 1).collect();
            if admitted.is_empty() != open.is_empty() {
                continue;
            }
            let fits = (0..3).all(|r| total[r] <= open.iter().map(|&d| sc.dcs[d].capacity.to_array()[r]).sum::<f64>() + TOL);
            if !fits {
                continue;
            }
            // Cheapest DCs absorb each resource first; slices fill in id order.
            open.sort_by(|&x, &y| sc.dcs[x].phi_per_unit.total_cmp(&sc.dcs[y].phi_per_unit).then(x.cmp(&y)));
            let mut shares = vec![vec![[0.0; 3]; n_d]; n_s];
            for r in 0..3 {
                let mut left: Vec<f64> = open.iter().map(|&d| sc.dcs[d].capacity.to_array()[r]).collect();
                let mut k = 0;
                for &s in &admitted {
                    let mut rest = need[s][r];
                    while rest > TOL && k < open.len() {
                        let take = rest.min(left[k]);
                        shares[s][open[k]][r] += take;
                        left[k] -= take;
                        rest -= take;
                        if left[k] <= TOL {
                            k += 1;
                        }
                    }
                }
            }
            let cand = realize(sc, a, w, shares);
            if best.as_ref().is_none_or(|b| cand.psi < b.psi - TOL * b.psi.abs().max(1.0)) {
                best = Some(cand);
            }
        }
    }
    best
}

fn realize(sc: &Scenario, a: &MappingAs, w: &PlacementWeights, shares: Vec<Vec<[f64; 3]>>) -> PlacementOracle {
    let n_s = sc.slices.len();
    let n_d = sc.dcs.len();
    let y: Vec<Vec<u8>> = shares
        .iter()
        .map(|row| row.iter().map(|x| x.iter().any(|&v| v > TOL) as u8).collect())
        .collect();
    let mut phi = 0.0;
    let mut credit = 0.0;
    for d in 0..n_d {
        if (0..n_s).any(|s| y[s][d] == 1) {
            phi += sc.dcs[d].phi_idle;
        }
        for s in 0..n_s {
            phi += sc.dcs[d].phi_per_unit * weigh(w, &Resources::from_array(shares[s][d]));
            credit += y[s][d] as f64 * services_on(a, s);
        }
    }
    let residual = (0..n_d)
        .map(|d| {
            let mut r = sc.dcs[d].capacity.to_array();
            for row in &shares {
                for k in 0..3 {
                    r[k] -= row[d][k];
                }
            }
            Resources::from_array(r)
        })
        .collect();
    let admitted = (0..n_s)
        .map(|s| {
            let need = demand(sc, s);
            let got: [f64; 3] = std::array::from_fn(|k| shares[s].iter().map(|x| x[k]).sum());
            services_on(a, s) > 0.0 && (0..3).all(|k| got[k] >= need[k] - TOL)
        })
        .collect();
    PlacementOracle {
        placement: Placement {
            y,
            shares: shares.into_iter().map(|row| row.into_iter().map(Resources::from_array).collect()).collect(),
            residual,
            admitted,
            active: (0..n_s).map(|s| services_on(a, s) > 0.0).collect(),
        },
        phi,
        psi: phi - sc.params.nu * credit,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit;

    fn one_slice() -> (Scenario, MappingAs) {
        let sc = testkit::scenario(&[1], &[(&[0], &[0])], 1, 1);
        (sc, MappingAs { a: vec![vec![1]] })
    }

    #[test]
    fn single_slice_single_dc() {
        let (mut sc, a) = one_slice();
        sc.params.nu = 1e6;
        let out = exhaustive_placement(&sc, &a, &PlacementWeights::default(), OracleMode::SingleDc)
            .unwrap()
            .unwrap();
        assert_eq!(out.placement.y, vec![vec![1]]);
        let strict = exhaustive_placement(&sc, &a, &PlacementWeights::default(), OracleMode::MultiDc { strict: true })
            .unwrap()
            .unwrap();
        assert_eq!(strict.placement.y, vec![vec![1]]);
    }

    #[test]
    fn short_capacity_is_infeasible() {
        let (mut sc, a) = one_slice();
        sc.dcs[0].capacity.cpu_ghz = 31.0;
        let strict = exhaustive_placement(&sc, &a, &PlacementWeights::default(), OracleMode::MultiDc { strict: true });
        assert!(strict.unwrap().is_none());
        sc.params.nu = 1e6;
        let single = exhaustive_placement(&sc, &a, &PlacementWeights::default(), OracleMode::SingleDc)
            .unwrap()
            .unwrap();
        assert_eq!(single.placement.y, vec![vec![0]]);
    }

    #[test]
    fn guard() {
        let spec: Vec<(&[usize], &[usize])> = (0..11).map(|_| (&[0][..], &[0][..])).collect();
        let sc = testkit::scenario(&[1], &spec, 1, 1);
        let a = MappingAs::zeros(1, 11);
        assert!(matches!(
            exhaustive_placement(&sc, &a, &PlacementWeights::default(), OracleMode::SingleDc),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn zero_nu_places_nothing_when_allowed() {
        let (sc, a) = one_slice();
        let out = exhaustive_placement(&sc, &a, &PlacementWeights::default(), OracleMode::MultiDc { strict: false })
            .unwrap()
            .unwrap();
        assert_eq!(out.phi, 0.0);
    }
}
