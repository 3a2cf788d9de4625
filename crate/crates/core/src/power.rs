//! Energy-efficient power allocation.
//!
//! For a fixed mapping, the ratio `R_tot / P_tot` is maximized with
//! Dinkelbach's parametric method: each outer step maximizes
//! `R_tot(P) - η·P_tot(P)` by alternating the closed-form per-UE power with
//! projected subgradient steps on the RU multipliers, then sets
//! `η ← R_tot / P_tot`. Rates use the interference upper bound, so the
//! objective is separable and concave in the UE powers.

use std::f64::consts::LN_2;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{check_flat, ConstraintKind, FeasibilityReport};
use crate::queueing::{layer_delays, slice_arrival_rate};
use crate::radio::{ChannelSet, EnergyEfficiency, MappingAs, PowerAllocation, Radio};
use crate::scenario::Scenario;
use crate::slicing::{map_slices_to_services, RankingWeights};

/// How the power price `𝔵` of a UE collects RU terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XiMode {
    /// Every slice with a beamformer for the UE's service, mapped or not.
    #[default]
    AsWritten,
    /// Only slices the UE's service is mapped to; the exact derivative of
    /// the RU power terms.
    Gated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerOptions {
    /// Initial subgradient step, in units of each multiplier's natural scale.
    pub s0: f64,
    pub max_iters: usize,
    /// Multiplier movement below which the subgradient loop stops.
    pub tol: f64,
    /// Dinkelbach stops once `F ≤ eps_eta · R_tot`.
    pub eps_eta: f64,
    pub i_max: usize,
    pub xi_mode: XiMode,
    pub ranking: RankingWeights,
    /// Relative tolerance when checking the returned powers.
    pub constraint_tol: f64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            s0: 0.1,
            max_iters: 5000,
            tol: 1e-6,
            eps_eta: 1e-6,
            i_max: 50,
            xi_mode: XiMode::AsWritten,
            ranking: RankingWeights::default(),
            constraint_tol: 1e-6,
        }
    }
}

impl PowerOptions {
    pub fn check(&self) -> Result<()> {
        if !(self.s0 > 0.0) {
            return Err(Error::config("s0", "must be positive"));
        }
        if self.max_iters == 0 || self.i_max == 0 {
            return Err(Error::config("iterations", "caps must be at least 1"));
        }
        if !(self.tol > 0.0 && self.eps_eta > 0.0 && self.constraint_tol >= 0.0) {
            return Err(Error::config("tolerances", "must be positive"));
        }
        self.ranking.check()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    /// Minimum rate, per flat UE.
    pub lambda_ue: Vec<f64>,
    /// RU power cap, `[s][j]`.
    pub mu_ru: Vec<Vec<f64>>,
    /// Fronthaul cap, `[s][j]`.
    pub xi_ru: Vec<Vec<f64>>,
    /// Delay budget, per flat UE.
    pub kappa_ue: Vec<f64>,
}

impl Multipliers {
    pub fn zeros(sc: &Scenario) -> Self {
        let per_ru: Vec<Vec<f64>> = sc.slices.iter().map(|s| vec![0.0; s.n_rus()]).collect();
        Self {
            lambda_ue: vec![0.0; sc.n_ues()],
            mu_ru: per_ru.clone(),
            xi_ru: per_ru,
            kappa_ue: vec![0.0; sc.n_ues()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    pub eta: f64,
    pub p: PowerAllocation,
    pub mults: Multipliers,
    pub iter: usize,
    pub f_value: f64,
}

/// `𝔇_s = 1/(D^max - d1 - d2) + α_s` for every active slice, in packets/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayLinearization {
    pub dfrak: Vec<Option<f64>>,
}

/// Smallest delay slack `D^max - d1 - d2` accepted, s.
pub const MIN_DELAY_GAP: f64 = 1e-9;

pub fn delay_linearization(sc: &Scenario, a: &MappingAs) -> Result<DelayLinearization> {
    let p = &sc.params;
    let mut dfrak = vec![None; sc.n_slices()];
    for (s, slot) in dfrak.iter_mut().enumerate() {
        if !a.is_slice_active(s) {
            continue;
        }
        let alpha = slice_arrival_rate(sc, a, s);
        let (d1, d2) = layer_delays(alpha, &sc.slices[s], p.mu1, p.mu2).map_err(|e| match e {
            Error::UnstableQueue { layer, .. } => Error::UnstableQueue { layer, slice: Some(s) },
            other => other,
        })?;
        let gap = p.d_max - d1 - d2;
        if !(gap >= MIN_DELAY_GAP) {
            return Err(Error::InfeasibleDelay { slice: s, gap });
        }
        *slot = Some(1.0 / gap + alpha);
    }
    Ok(DelayLinearization { dfrak })
}

/// RU power at which the fronthaul reaches `C^max`: `σ_q^2 · 2^{C^max}`.
pub fn fronthaul_power_cap(sigma_q2: f64, c_max: f64) -> f64 {
    sigma_q2 * c_max.exp2()
}

/// `[(𝔶𝔴 - 𝔵𝔷) / (𝔵𝔴)]⁺`.
pub fn closed_form_scalar(y: f64, w: f64, x: f64, z: f64) -> f64 {
    ((y * w - x * z) / (x * w)).max(0.0)
}

/// RU index `(s, j)` flattened over all slices.
fn ru_index(sc: &Scenario) -> Vec<(usize, usize)> {
    sc.slices
        .iter()
        .enumerate()
        .flat_map(|(s, slice)| (0..slice.n_rus()).map(move |j| (s, j)))
        .collect()
}

/// `(flat RU, |w|^2)` pairs entering the price `𝔵` of each UE.
fn price_terms(radio: &Radio, a: &MappingAs, mode: XiMode) -> Vec<Vec<(usize, f64)>> {
    let sc = radio.sc;
    let rus = ru_index(sc);
    (0..radio.n_ues())
        .map(|u| {
            let v = radio.service_of(u);
            rus.iter()
                .enumerate()
                .filter(|(_, &(s, _))| match mode {
                    XiMode::Gated => a.get(v, s),
                    XiMode::AsWritten => radio.bf.get(s, v).is_some(),
                })
                .map(|(k, &(s, j))| (k, radio.beam_gain(s, j, u)))
                .filter(|&(_, g)| g > 0.0)
                .collect()
        })
        .collect()
}

fn price(terms: &[(usize, f64)], mu: &[f64], xi: &[f64], eta: f64) -> f64 {
    terms.iter().map(|&(k, g)| (mu[k] + xi[k] + eta) * g).sum()
}

fn flatten(m: &[Vec<f64>]) -> Vec<f64> {
    m.iter().flatten().copied().collect()
}

fn unflatten(sc: &Scenario, flat: &[f64]) -> Vec<Vec<f64>> {
    let mut it = flat.iter().copied();
    sc.slices.iter().map(|s| it.by_ref().take(s.n_rus()).collect()).collect()
}

/// Optimal UE powers of the Lagrangian for fixed multipliers and `η`.
/// UEs of unmapped services get zero power.
pub fn closed_form_power(
    state: &SolverState,
    radio: &Radio,
    a: &MappingAs,
    ibar: &[f64],
    mode: XiMode,
) -> Result<PowerAllocation> {
    let sc = radio.sc;
    let b = sc.params.bandwidth_hz;
    let terms = price_terms(radio, a, mode);
    let mu = flatten(&state.mults.mu_ru);
    let xi = flatten(&state.mults.xi_ru);
    let pairs = sc.ue_pairs();
    let mut p = vec![0.0; radio.n_ues()];
    for u in 0..radio.n_ues() {
        let (v, i) = pairs[u];
        if !a.is_covered(v) {
            continue;
        }
        let w = radio.signal_gain(a, u);
        let x = price(&terms[u], &mu, &xi, state.eta);
        if !(w > 0.0 && x > 0.0) {
            return Err(Error::DegenerateCoefficient { service: v, ue: i });
        }
        let y = (state.mults.lambda_ue[u] + state.mults.kappa_ue[u] + 1.0) * b / LN_2;
        let z = sc.params.noise_power() + ibar[u];
        p[u] = closed_form_scalar(y, w, x, z);
    }
    Ok(PowerAllocation::from_flat(sc, &p))
}

/// `R_tot(P) - η·P_tot(P)` under the interference upper bound.
pub fn dinkelbach_f(radio: &Radio, a: &MappingAs, p: &PowerAllocation, eta: f64) -> Result<f64> {
    let ee = radio.energy_efficiency(a, p)?;
    Ok(ee.r_tot - eta * ee.p_tot)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgradientOutcome {
    pub power: PowerAllocation,
    pub mults: Multipliers,
    pub iterations: usize,
    /// Multipliers settled and a feasible iterate was found.
    pub converged: bool,
    /// Constraint check of the returned powers.
    pub report: FeasibilityReport,
    /// `R_tot - η·P_tot` at the returned powers.
    pub objective: f64,
}

struct UeTerms {
    active: bool,
    w: f64,
    z: f64,
    /// Smallest power meeting the rate floor.
    p_req: f64,
    /// The floor comes from the delay budget rather than the minimum rate.
    delay_bound: bool,
}

/// Maximizes `R_tot - η·P_tot` over `0 ≤ p ≤ P_max` subject to the RU
/// power, fronthaul, minimum-rate and linearized delay constraints.
///
/// Rate and delay multipliers act on a single UE each and are set exactly
/// at every step; RU multipliers follow projected subgradient steps
/// `s0/√t`. Every iterate is also pulled back into the RU caps by scaling
/// the offending UEs, and the best feasible point seen is returned.
pub fn subgradient_solve(
    radio: &Radio,
    a: &MappingAs,
    ibar: &[f64],
    eta: f64,
    opts: &PowerOptions,
) -> Result<SubgradientOutcome> {
    opts.check()?;
    radio.check_mapping(a)?;
    let sc = radio.sc;
    let params = &sc.params;
    let b = params.bandwidth_hz;
    let y0 = b / LN_2;
    let n = radio.n_ues();
    let lin = delay_linearization(sc, a)?;
    let pairs = sc.ue_pairs();

    let mut ues = Vec::with_capacity(n);
    for (u, &(v, i)) in pairs.iter().enumerate() {
        if !a.is_covered(v) {
            ues.push(UeTerms {
                active: false,
                w: 0.0,
                z: 0.0,
                p_req: 0.0,
                delay_bound: false,
            });
            continue;
        }
        let w = radio.signal_gain(a, u);
        if !(w > 0.0) {
            return Err(Error::DegenerateCoefficient { service: v, ue: i });
        }
        let z = params.noise_power() + ibar[u];
        let delay_floor = (0..sc.n_slices())
            .filter(|&s| a.get(v, s))
            .filter_map(|s| lin.dfrak[s])
            .fold(0.0, f64::max)
            * params.packet_size_bits;
        let floor = params.r_min.max(delay_floor);
        ues.push(UeTerms {
            active: true,
            w,
            z,
            p_req: ((floor / b).exp2() - 1.0) * z / w,
            delay_bound: delay_floor > params.r_min,
        });
    }

    let rus = ru_index(sc);
    let terms = price_terms(radio, a, opts.xi_mode);
    // RU power is always the mapped load, whatever the price mode.
    let load: Vec<Vec<(usize, f64)>> = price_terms(radio, a, XiMode::Gated);
    let sigma: Vec<f64> = rus.iter().map(|&(s, j)| sc.sigma_q2(s, j)).collect();
    let cap_f: Vec<f64> = sigma.iter().map(|&q| fronthaul_power_cap(q, params.c_max)).collect();
    let scale_mu = eta + y0 / params.p_max;
    let scale_xi: Vec<f64> = cap_f.iter().map(|&c| eta + y0 / c).collect();

    let mut mu = vec![0.0; rus.len()];
    let mut xi = vec![0.0; rus.len()];
    let mut lambda = vec![0.0; n];
    let mut kappa = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut converged = false;
    let mut iterations = 0;

    let ru_loads = |p: &[f64]| -> Vec<f64> {
        let mut out = sigma.clone();
        for u in 0..n {
            for &(k, g) in &load[u] {
                out[k] += g * p[u];
            }
        }
        out
    };
    let objective = |p: &[f64], loads: &[f64]| -> f64 {
        let r: f64 = (0..n)
            .filter(|&u| ues[u].active)
            .map(|u| y0 * (p[u] * ues[u].w / ues[u].z).ln_1p())
            .sum();
        r - eta * loads.iter().sum::<f64>()
    };
    let limit = |k: usize| params.p_max.min(cap_f[k]);
    let within = |loads: &[f64]| loads.iter().enumerate().all(|(k, &l)| l <= limit(k) * (1.0 + opts.constraint_tol));

    for t in 1..=opts.max_iters {
        iterations = t;
        for u in 0..n {
            let ue = &ues[u];
            lambda[u] = 0.0;
            kappa[u] = 0.0;
            if !ue.active {
                p[u] = 0.0;
                continue;
            }
            let x = price(&terms[u], &mu, &xi, eta);
            let free = if x > 0.0 { y0 / x - ue.z / ue.w } else { f64::INFINITY };
            if free < ue.p_req && x > 0.0 {
                let m = (x * (ue.p_req + ue.z / ue.w) / y0 - 1.0).max(0.0);
                if ue.delay_bound {
                    kappa[u] = m;
                } else {
                    lambda[u] = m;
                }
            }
            p[u] = free.max(ue.p_req).min(params.p_max);
        }

        let loads = ru_loads(&p);
        let rates_ok = ues.iter().all(|ue| !ue.active || ue.p_req <= params.p_max);

        // Primal recovery: shrink UEs feeding an overloaded RU.
        let mut candidate = p.clone();
        if !within(&loads) {
            for u in 0..n {
                let factor = load[u]
                    .iter()
                    .map(|&(k, _)| ((limit(k) - sigma[k]) / (loads[k] - sigma[k])).min(1.0))
                    .fold(1.0, f64::min);
                candidate[u] *= factor.max(0.0);
            }
        }
        let cand_loads = ru_loads(&candidate);
        let cand_ok = rates_ok
            && within(&cand_loads)
            && (0..n).all(|u| !ues[u].active || candidate[u] >= ues[u].p_req * (1.0 - opts.constraint_tol));
        if cand_ok {
            let obj = objective(&candidate, &cand_loads);
            if best.as_ref().is_none_or(|(b, _)| obj > *b) {
                best = Some((obj, candidate));
            }
        }

        let step = opts.s0 / (t as f64).sqrt();
        let mut movement: f64 = 0.0;
        for k in 0..rus.len() {
            let new_mu = (mu[k] + step * scale_mu * (loads[k] - params.p_max) / params.p_max).max(0.0);
            let new_xi = (xi[k] + step * scale_xi[k] * (loads[k] - cap_f[k]) / cap_f[k]).max(0.0);
            movement = movement
                .max((new_mu - mu[k]).abs() / scale_mu)
                .max((new_xi - xi[k]).abs() / scale_xi[k]);
            mu[k] = new_mu;
            xi[k] = new_xi;
        }
        if movement < opts.tol {
            converged = best.is_some();
            break;
        }
    }

    // Primal: best feasible iterate. Dual: the final multipliers.
    let (objective_value, p_out) = best.unwrap_or_else(|| (objective(&p, &ru_loads(&p)), p.clone()));
    let mults = Multipliers {
        lambda_ue: lambda,
        mu_ru: unflatten(sc, &mu),
        xi_ru: unflatten(sc, &xi),
        kappa_ue: kappa,
    };
    let report = check_flat(radio, a, &p_out, ibar, opts.constraint_tol);
    Ok(SubgradientOutcome {
        power: PowerAllocation::from_flat(sc, &p_out),
        mults,
        iterations,
        converged: converged && report.is_feasible(),
        report,
        objective: objective_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub eta: f64,
    pub f_value: f64,
    pub max_violation: f64,
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut out = out;
    writeln!(out, "# schema=1")?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSolution {
    pub mapping: MappingAs,
    pub power: PowerAllocation,
    pub mults: Multipliers,
    /// `R_tot / P_tot` at the returned powers.
    pub eta: f64,
    pub r_tot: f64,
    pub p_tot: f64,
    /// `F` of the last Dinkelbach step, the stopping statistic.
    pub f_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub feasible: bool,
    pub violated: Vec<ConstraintKind>,
    pub trace: Vec<TraceRow>,
    pub warnings: Vec<String>,
}

/// Joint mapping and power allocation.
///
/// The mapping is evaluated at `η = 0` and `P = P_max`, so it is the same
/// in every outer iteration and is computed once.
pub fn solve_joint(sc: &Scenario, ch: &ChannelSet, opts: &PowerOptions) -> Result<JointSolution> {
    opts.check()?;
    let radio = Radio::new(sc, ch)?;
    solve_with_radio(&radio, opts)
}

pub fn solve_with_radio(radio: &Radio, opts: &PowerOptions) -> Result<JointSolution> {
    let outcome = map_slices_to_services(radio, &opts.ranking)?;
    if !outcome.uncovered.is_empty() {
        return Err(Error::Infeasible {
            uncovered: outcome.uncovered,
        });
    }
    solve_power(radio, &outcome.mapping, opts)
}

/// Dinkelbach iterations for a fixed mapping.
pub fn solve_power(radio: &Radio, a: &MappingAs, opts: &PowerOptions) -> Result<JointSolution> {
    opts.check()?;
    radio.check_mapping(a)?;
    let ibar = radio.ibar_unchecked(a);
    let mut eta = 0.0;
    let mut trace = Vec::new();
    let mut accepted: Option<(SubgradientOutcome, EnergyEfficiency)> = None;
    let mut converged = false;
    let mut f_value = f64::NAN;
    let mut iterations = 0;

    for it in 1..=opts.i_max {
        iterations = it;
        let sub = subgradient_solve(radio, a, &ibar, eta, opts)?;
        let ee = radio.energy_efficiency_flat(a, &sub.power.flat(), &ibar);
        let f = ee.r_tot - eta * ee.p_tot;
        trace.push(TraceRow {
            iteration: it,
            eta,
            f_value: f,
            max_violation: sub.report.max_relative(),
        });
        if f < 0.0 && accepted.is_some() {
            // The inner solve did not beat the previous powers, which score
            // exactly zero at the current η.
            f_value = 0.0;
            converged = true;
            break;
        }
        let small = f <= opts.eps_eta * ee.r_tot;
        f_value = f;
        eta = ee.eta;
        accepted = Some((sub, ee));
        if small {
            converged = true;
            break;
        }
    }

    let (sub, ee) = accepted.expect("at least one iteration");
    let mut warnings = Vec::new();
    let loads = radio.ru_powers(a, &sub.power);
    for (s, row) in sub.mults.mu_ru.iter().enumerate() {
        for (j, &m) in row.iter().enumerate() {
            if m > 0.0 && loads[s][j] < radio.sc.params.p_max * (1.0 - 1e-3) {
                warnings.push(format!("mu of RU {j} in slice {s} is positive on a slack cap"));
            }
        }
    }
    Ok(JointSolution {
        mapping: a.clone(),
        power: sub.power,
        mults: sub.mults,
        eta: ee.eta,
        r_tot: ee.r_tot,
        p_tot: ee.p_tot,
        f_value,
        iterations,
        converged: converged && sub.converged,
        feasible: sub.report.is_feasible(),
        violated: sub.report.kinds(),
        trace,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit;
    use num_complex::Complex64;

    /// One UE on one RU; the beam gain `|w|^2` is `1/h^2`.
    fn one_ue(h: f64) -> (Scenario, ChannelSet) {
        let sc = testkit::scenario(&[1], &[(&[0], &[0])], 1, 1);
        let ch = ChannelSet::from_fn(&sc, |_, _| Complex64::new(h, 0.0));
        (sc, ch)
    }

    fn mapped(n_services: usize, n_slices: usize) -> MappingAs {
        let mut a = MappingAs::zeros(n_services, n_slices);
        a.set(0, 0, true);
        a
    }

    #[test]
    fn linearization_example() {
        let mut sc = testkit::scenario(&[1], &[(&[0], &[0])], 1, 1);
        sc.services[0].ues[0].arrival_rate = 0.0;
        sc.params.d_max = 0.4;
        sc.params.mu1 = 10.0;
        sc.params.mu2 = 10.0;
        let lin = delay_linearization(&sc, &mapped(1, 1)).unwrap();
        assert!((lin.dfrak[0].unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn linearization_pole_and_unmapped_slices() {
        let mut sc = testkit::scenario(&[1], &[(&[0], &[0]), (&[0], &[0])], 1, 1);
        sc.services[0].ues[0].arrival_rate = 0.0;
        sc.params.mu1 = 10.0;
        sc.params.mu2 = 10.0;
        sc.params.d_max = 0.2 + 1e-10;
        match delay_linearization(&sc, &mapped(1, 2)) {
            Err(Error::InfeasibleDelay { slice: 0, .. }) => {}
            other => panic!("{other:?}"),
        }
        sc.params.d_max = 0.2 + 1e-6;
        let lin = delay_linearization(&sc, &mapped(1, 2)).unwrap();
        assert!(lin.dfrak[0].unwrap() > 9e5);
        assert_eq!(lin.dfrak[1], None);
    }

    #[test]
    fn fronthaul_cap_conversion() {
        assert_eq!(fronthaul_power_cap(1.0, 3.0), 8.0);
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(closed_form_scalar(2.0, 1.0, 1.0, 1.0), 1.0);
        // A large price drives the bracket negative.
        assert_eq!(closed_form_scalar(1.0, 1.0, 1e9, 1.0), 0.0);
    }

    #[test]
    fn closed_form_clamps_for_large_eta() {
        let (sc, ch) = one_ue(1.0);
        let radio = Radio::new(&sc, &ch).unwrap();
        let a = mapped(1, 1);
        let ibar = radio.interference_upper_bound(&a).unwrap();
        let state = SolverState {
            eta: 1e30,
            p: PowerAllocation::uniform(&sc, 0.0),
            mults: Multipliers::zeros(&sc),
            iter: 0,
            f_value: 0.0,
        };
        let p = closed_form_power(&state, &radio, &a, &ibar, XiMode::Gated).unwrap();
        assert_eq!(p.p[0][0], 0.0);
    }

    #[test]
    fn closed_form_rejects_zero_price() {
        let (sc, ch) = one_ue(1.0);
        let radio = Radio::new(&sc, &ch).unwrap();
        let a = mapped(1, 1);
        let ibar = radio.interference_upper_bound(&a).unwrap();
        let state = SolverState {
            eta: 0.0,
            p: PowerAllocation::uniform(&sc, 0.0),
            mults: Multipliers::zeros(&sc),
            iter: 0,
            f_value: 0.0,
        };
        assert!(matches!(
            closed_form_power(&state, &radio, &a, &ibar, XiMode::Gated),
            Err(Error::DegenerateCoefficient { service: 0, ue: 0 })
        ));
    }

    #[test]
    fn closed_form_is_stationary_point() {
        let (sc, ch) = one_ue(0.8);
        let radio = Radio::new(&sc, &ch).unwrap();
        let a = mapped(1, 1);
        let ibar = radio.interference_upper_bound(&a).unwrap();
        let eta = 3e4;
        let state = SolverState {
            eta,
            p: PowerAllocation::uniform(&sc, 0.0),
            mults: Multipliers::zeros(&sc),
            iter: 0,
            f_value: 0.0,
        };
        let p = closed_form_power(&state, &radio, &a, &ibar, XiMode::Gated).unwrap().p[0][0];
        let b = sc.params.bandwidth_hz;
        let w = radio.signal_gain(&a, 0);
        let z = sc.params.noise_power() + ibar[0];
        let x = radio.beam_gain(0, 0, 0);
        let g = |q: f64| b * (q * w / z).ln_1p() / LN_2 - eta * x * q;
        let n = 200_000;
        let grid_best = (0..=n)
            .map(|k| 10.0 * k as f64 / n as f64)
            .max_by(|a, b| g(*a).total_cmp(&g(*b)))
            .unwrap();
        assert!(p > 0.0);
        assert!((p - grid_best).abs() <= 10.0 / n as f64, "{p} vs {grid_best}");
        assert!(g(p) >= g(grid_best) - 1e-9 * g(p).abs());
    }

    #[test]
    fn ru_cap_binds_at_zero_eta() {
        // |w|^2 = 4: the RU cap stops the power at (P_max - σ^2)/4 < P_max.
        let (sc, ch) = one_ue(0.5);
        let radio = Radio::new(&sc, &ch).unwrap();
        let a = mapped(1, 1);
        let ibar = radio.interference_upper_bound(&a).unwrap();
        let opts = PowerOptions::default();
        let out = subgradient_solve(&radio, &a, &ibar, 0.0, &opts).unwrap();
        let p = out.power.p[0][0];
        let p_max = sc.params.p_max;
        let cap = (p_max - sc.radio_units[0].sigma_q2) / 4.0;
        assert!(p <= cap * (1.0 + 1e-6));
        // The rate is increasing, so the grid optimum is the largest
        // feasible grid point.
        let n = 10_000;
        let grid_best = (0..=n).map(|k| p_max * k as f64 / n as f64).filter(|&q| q <= cap).fold(0.0, f64::max);
        assert!(p >= grid_best * (1.0 - 1e-6), "{p} vs {grid_best}");
        assert!(out.mults.mu_ru[0][0] > 0.0);
        assert!(out.report.is_feasible());
    }

    #[test]
    fn unreachable_rate_is_reported() {
        let (mut sc, ch) = one_ue(1.0);
        sc.params.r_min = 1e3 * sc.params.bandwidth_hz;
        let radio = Radio::new(&sc, &ch).unwrap();
        let a = mapped(1, 1);
        let ibar = radio.interference_upper_bound(&a).unwrap();
        let out = subgradient_solve(&radio, &a, &ibar, 0.0, &PowerOptions::default()).unwrap();
        assert!(!out.converged);
        assert!(out.report.kinds().contains(&ConstraintKind::MinRate));
    }

    #[test]
    fn dinkelbach_f_examples() {
        let (sc, ch) = testkit::random_instance(1, 2, 1, 6);
        let radio = Radio::new(&sc, &ch).unwrap();
        let a = mapped(1, 1);
        let p = PowerAllocation::uniform(&sc, 0.3);
        let ee = radio.energy_efficiency(&a, &p).unwrap();
        let f0 = dinkelbach_f(&radio, &a, &p, 0.0).unwrap();
        assert!((f0 - ee.r_tot).abs() < 1e-9 * ee.r_tot && f0 >= 0.0);
        let root = dinkelbach_f(&radio, &a, &p, ee.eta).unwrap();
        assert!(root.abs() < 1e-9 * ee.r_tot);
        let fs: Vec<f64> = [0.5, 1.0, 2.0]
            .iter()
            .map(|k| dinkelbach_f(&radio, &a, &p, k * ee.eta).unwrap())
            .collect();
        assert!(fs[0] > fs[1] && fs[1] > fs[2]);
    }

    #[test]
    fn one_by_one_instance_converges() {
        let (sc, ch) = one_ue(2.0);
        let sol = solve_joint(&sc, &ch, &PowerOptions::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.eta > 0.0);
        assert!(sol.f_value.abs() < 1e-6 * sol.r_tot);
        assert!(sol.trace.windows(2).all(|w| w[1].eta >= w[0].eta));
    }

    #[test]
    fn single_outer_iteration() {
        let (sc, ch) = testkit::random_instance(1, 2, 1, 8);
        let opts = PowerOptions {
            i_max: 1,
            ..Default::default()
        };
        let sol = solve_joint(&sc, &ch, &opts).unwrap();
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.trace.len(), 1);
        // η = 0 in the first step, so F = R_tot > 0 and the run is not done.
        assert!(!sol.converged);
    }

    #[test]
    fn uncovered_services_are_an_error() {
        let (mut sc, ch) = one_ue(1.0);
        sc.params.r_min = 1e3 * sc.params.bandwidth_hz;
        match solve_joint(&sc, &ch, &PowerOptions::default()) {
            Err(Error::Infeasible { uncovered }) => assert_eq!(uncovered, vec![0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trace_csv_has_schema_line() {
        let rows = [TraceRow {
            iteration: 1,
            eta: 0.0,
            f_value: 2.0,
            max_violation: 0.0,
        }];
        let mut buf = Vec::new();
        write_trace_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# schema=1\niteration,eta,f_value,max_violation\n1,0.0,2.0,0.0\n"));
    }
}
