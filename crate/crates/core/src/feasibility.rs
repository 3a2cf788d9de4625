//! Constraint checks for a mapped and powered instance: RU power cap,
//! nonnegative powers, minimum rate, fronthaul cap and slice delay budget.
//! Rates are evaluated under the interference upper bound.

use serde::{Deserialize, Serialize};

use crate::queueing::slice_delay;
use crate::radio::{fronthaul_from_signal, MappingAs, PowerAllocation, Radio};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    RuPower,
    Nonnegative,
    MinRate,
    Fronthaul,
    Delay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintViolation {
    pub kind: ConstraintKind,
    /// `(slice, ru)` for RU constraints, `(slice, 0)` for delay,
    /// `(service, ue)` for UE constraints.
    pub at: (usize, usize),
    pub value: f64,
    pub limit: f64,
}

impl ConstraintViolation {
    /// Violation amount relative to the limit (absolute when the limit is 0).
    pub fn relative(&self) -> f64 {
        let gap = match self.kind {
            ConstraintKind::MinRate | ConstraintKind::Nonnegative => self.limit - self.value,
            _ => self.value - self.limit,
        };
        if self.limit != 0.0 {
            gap / self.limit.abs()
        } else {
            gap
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<ConstraintViolation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn max_relative(&self) -> f64 {
        self.violations.iter().map(|v| v.relative()).fold(0.0, f64::max)
    }

    pub fn kinds(&self) -> Vec<ConstraintKind> {
        let mut kinds: Vec<_> = self.violations.iter().map(|v| v.kind).collect();
        kinds.dedup();
        kinds
    }
}

/// Checks every constraint with relative tolerance `tol`. The minimum rate
/// and delay budget apply to UEs of mapped services and to active slices.
pub fn check(radio: &Radio, a: &MappingAs, p: &PowerAllocation, tol: f64) -> FeasibilityReport {
    let ibar = radio.ibar_unchecked(a);
    check_flat(radio, a, &p.flat(), &ibar, tol)
}

pub(crate) fn check_flat(radio: &Radio, a: &MappingAs, p: &[f64], ibar: &[f64], tol: f64) -> FeasibilityReport {
    let sc = radio.sc;
    let params = &sc.params;
    let mut violations = Vec::new();

    for (s, slice) in sc.slices.iter().enumerate() {
        for j in 0..slice.n_rus() {
            let sigma = sc.sigma_q2(s, j);
            let signal = radio.ru_signal_flat(a, p, s, j);
            let power = signal + sigma;
            if power > params.p_max * (1.0 + tol) {
                violations.push(ConstraintViolation {
                    kind: ConstraintKind::RuPower,
                    at: (s, j),
                    value: power,
                    limit: params.p_max,
                });
            }
            let c = fronthaul_from_signal(signal, sigma);
            if c > params.c_max * (1.0 + tol) {
                violations.push(ConstraintViolation {
                    kind: ConstraintKind::Fronthaul,
                    at: (s, j),
                    value: c,
                    limit: params.c_max,
                });
            }
        }
    }

    let rates = radio.rates_flat(a, p, ibar);
    for (u, (v, i)) in sc.ue_pairs().into_iter().enumerate() {
        if !(p[u] >= 0.0) {
            violations.push(ConstraintViolation {
                kind: ConstraintKind::Nonnegative,
                at: (v, i),
                value: p[u],
                limit: 0.0,
            });
        }
        if a.is_covered(v) && rates[u] < params.r_min * (1.0 - tol) {
            violations.push(ConstraintViolation {
                kind: ConstraintKind::MinRate,
                at: (v, i),
                value: rates[u],
                limit: params.r_min,
            });
        }
    }

    for s in (0..sc.n_slices()).filter(|&s| a.is_slice_active(s)) {
        let total = slice_delay(sc, a, &rates, s).map_or(f64::INFINITY, |d| d.total);
        if total > params.d_max * (1.0 + tol) {
            violations.push(ConstraintViolation {
                kind: ConstraintKind::Delay,
                at: (s, 0),
                value: total,
                limit: params.d_max,
            });
        }
    }

    violations.sort_by_key(|v| v.kind as u8);
    FeasibilityReport { violations }
}
