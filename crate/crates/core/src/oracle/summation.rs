//! Interference, RU power and energy efficiency re-evaluated with index
//! loops that follow the summation bounds term by term.

#![allow(clippy::needless_range_loop)]

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::radio::{ChannelSet, MappingAs, PowerAllocation};
use crate::scenario::Scenario;

/// Beamformers indexed `[slice][service]`.
pub type BeamformerTable = [Vec<Option<DMatrix<Complex64>>>];

/// `|h_{R_s,u}^H w|^2` where `w` is column `col` of `bf`.
fn beam(sc: &Scenario, ch: &ChannelSet, s: usize, u: usize, bf: &DMatrix<Complex64>, col: usize) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, &r) in sc.slices[s].ru_ids.iter().enumerate() {
        acc += ch.h[r][u].conj() * bf[(j, col)];
    }
    acc.norm_sqr()
}

fn flat_index(sc: &Scenario, v: usize, i: usize) -> usize {
    let mut idx = 0;
    for y in 0..v {
        idx += sc.services[y].ues.len();
    }
    idx + i
}

pub(crate) fn interference_bound(sc: &Scenario, a: &MappingAs, ch: &ChannelSet, w: &BeamformerTable) -> Vec<f64> {
    let mut out = Vec::new();
    for v in 0..sc.services.len() {
        for i in 0..sc.services[v].ues.len() {
            let u = flat_index(sc, v, i);
            let mut total = 0.0;
            for s in 0..sc.slices.len() {
                for y in 0..sc.services.len() {
                    if a.a[y][s] == 0 {
                        continue;
                    }
                    let Some(wy) = &w[s][y] else { continue };
                    for l in 0..sc.services[y].ues.len() {
                        if y == v && l == i {
                            continue;
                        }
                        let ul = flat_index(sc, y, l);
                        let mut shared = 0.0;
                        for n in 0..sc.n_prbs {
                            let zu = sc.prb_assignment.zeta[u][s].contains(&n) as u8 as f64;
                            let zl = sc.prb_assignment.zeta[ul][s].contains(&n) as u8 as f64;
                            shared += zu * zl;
                        }
                        total += shared * beam(sc, ch, s, u, wy, l) * sc.params.p_max;
                    }
                }
                if a.a[v][s] == 1 {
                    for &r in &sc.slices[s].ru_ids {
                        total += sc.radio_units[r].sigma_q2 * ch.h[r][u].norm_sqr();
                    }
                }
            }
            out.push(total);
        }
    }
    out
}

fn ru_power(sc: &Scenario, a: &MappingAs, w: &BeamformerTable, p: &PowerAllocation) -> Vec<f64> {
    let mut out = Vec::new();
    for s in 0..sc.slices.len() {
        for (j, &r) in sc.slices[s].ru_ids.iter().enumerate() {
            let mut total = sc.radio_units[r].sigma_q2;
            for y in 0..sc.services.len() {
                if a.a[y][s] == 0 {
                    continue;
                }
                let Some(wy) = &w[s][y] else { continue };
                for l in 0..sc.services[y].ues.len() {
                    total += wy[(j, l)].norm_sqr() * p.p[y][l];
                }
            }
            out.push(total);
        }
    }
    out
}

fn energy_efficiency(sc: &Scenario, a: &MappingAs, ch: &ChannelSet, w: &BeamformerTable, p: &PowerAllocation) -> f64 {
    let ibar = interference_bound(sc, a, ch, w);
    let noise = sc.params.bandwidth_hz * sc.params.noise_psd;
    let mut rate = 0.0;
    for v in 0..sc.services.len() {
        for i in 0..sc.services[v].ues.len() {
            let u = flat_index(sc, v, i);
            let mut gain = 0.0;
            for s in 0..sc.slices.len() {
                if a.a[v][s] == 1 {
                    if let Some(wv) = &w[s][v] {
                        gain += beam(sc, ch, s, u, wv, i);
                    }
                }
            }
            let snr = p.p[v][i] * gain / (noise + ibar[u]);
            rate += sc.params.bandwidth_hz * (1.0 + snr).log2();
        }
    }
    let power: f64 = ru_power(sc, a, w, p).iter().sum();
    rate / power
}

/// Evaluates `expression`:
/// - `interference`: `Ī` per UE in flat order;
/// - `ru_power`: `p̄` per RU, slices in order;
/// - `ee`: a single `η`.
pub fn summation_oracle(
    expression: &str,
    sc: &Scenario,
    a: &MappingAs,
    ch: &ChannelSet,
    w: &BeamformerTable,
    p: &PowerAllocation,
) -> Result<Vec<f64>> {
    match expression {
        "interference" => Ok(interference_bound(sc, a, ch, w)),
        "ru_power" => Ok(ru_power(sc, a, w, p)),
        "ee" => Ok(vec![energy_efficiency(sc, a, ch, w, p)]),
        other => Err(Error::UnknownExpression(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::Radio;
    use crate::testkit;

    #[test]
    fn zero_power_leaves_quantization_noise() {
        let (sc, ch) = testkit::random_instance(2, 2, 2, 4);
        let radio = Radio::new(&sc, &ch).unwrap();
        let a = testkit::feasible_diagonal(&radio);
        let p = PowerAllocation::uniform(&sc, 0.0);
        let out = summation_oracle("ru_power", &sc, &a, &ch, &radio.bf.w, &p).unwrap();
        let expect: Vec<f64> = sc.slices.iter().flat_map(|s| s.ru_ids.iter().map(|&r| sc.radio_units[r].sigma_q2)).collect();
        assert_eq!(out, expect);
    }

    #[test]
    fn disjoint_prbs_leave_only_quantization() {
        let sc = testkit::scenario(&[1, 1], &[(&[0, 1], &[0, 1])], 2, 2);
        let ch = ChannelSet::from_fn(&sc, |r, u| Complex64::new(1.0 + r as f64, 0.5 * u as f64));
        let radio = Radio::new(&sc, &ch).unwrap();
        let a = MappingAs { a: vec![vec![1], vec![1]] };
        let p = PowerAllocation::uniform(&sc, 1.0);
        let out = summation_oracle("interference", &sc, &a, &ch, &radio.bf.w, &p).unwrap();
        for (u, value) in out.iter().enumerate() {
            let q: f64 = (0..2).map(|r| sc.radio_units[r].sigma_q2 * ch.h[r][u].norm_sqr()).sum();
            assert!((value - q).abs() <= 1e-15 * q);
        }
    }

    #[test]
    fn unknown_expression() {
        let sc = testkit::scenario(&[1], &[(&[0], &[0])], 1, 1);
        let ch = ChannelSet::from_fn(&sc, |_, _| Complex64::new(1.0, 0.0));
        let a = MappingAs::zeros(1, 1);
        let p = PowerAllocation::uniform(&sc, 0.0);
        assert!(matches!(
            summation_oracle("rate", &sc, &a, &ch, &[vec![None]], &p),
            Err(Error::UnknownExpression(_))
        ));
    }
}
