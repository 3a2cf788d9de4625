//! Per-slice arrival rates and the DU, CU and transmission M/M/1 delays.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radio::MappingAs;
use crate::scenario::{Scenario, Slice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QueueLayer {
    Du,
    Cu,
    Transmission,
}

impl fmt::Display for QueueLayer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QueueLayer::Du => "DU",
            QueueLayer::Cu => "CU",
            QueueLayer::Transmission => "transmission",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceDelay {
    pub d1: f64,
    pub d2: f64,
    pub dtr: f64,
    pub total: f64,
    /// Packets/s entering the slice.
    pub alpha: f64,
    /// Bits/s delivered by the slice.
    pub r_tot_s: f64,
}

/// `α_s`: arrival rate of every UE of every service mapped to slice `s`.
/// The same rate feeds both VNF layers.
pub fn slice_arrival_rate(sc: &Scenario, a: &MappingAs, s: usize) -> f64 {
    sc.services
        .iter()
        .enumerate()
        .filter(|(v, _)| a.get(*v, s))
        .flat_map(|(_, svc)| svc.ues.iter().map(|ue| ue.arrival_rate))
        .sum()
}

fn mm1(mu: f64, lambda: f64, layer: QueueLayer) -> Result<f64> {
    if mu > lambda {
        Ok(1.0 / (mu - lambda))
    } else {
        Err(Error::UnstableQueue { layer, slice: None })
    }
}

/// DU and CU delays of a slice whose load balancers split `alpha` evenly
/// over the layer's VNFs.
pub fn layer_delays(alpha: f64, slice: &Slice, mu1: f64, mu2: f64) -> Result<(f64, f64)> {
    let d1 = mm1(mu1, alpha / slice.m_du as f64, QueueLayer::Du)?;
    let d2 = mm1(mu2, alpha / slice.m_cu as f64, QueueLayer::Cu)?;
    Ok((d1, d2))
}

/// `1 / (R_tot - α)`, both in packets/s.
pub fn transmission_delay(r_tot: f64, alpha: f64) -> Result<f64> {
    mm1(r_tot, alpha, QueueLayer::Transmission)
}

/// `R_tot_s`: summed rate of every UE of the services mapped to `s`.
/// `rates` is indexed by flat UE position.
pub fn slice_rate(sc: &Scenario, a: &MappingAs, rates: &[f64], s: usize) -> f64 {
    sc.ue_pairs()
        .into_iter()
        .zip(rates)
        .filter(|((v, _), _)| a.get(*v, s))
        .map(|(_, r)| r)
        .sum()
}

/// Total mean delay of slice `s`; rates are converted to packets/s with the
/// configured packet size.
pub fn slice_delay(sc: &Scenario, a: &MappingAs, rates: &[f64], s: usize) -> Result<SliceDelay> {
    let p = &sc.params;
    let alpha = slice_arrival_rate(sc, a, s);
    let with_slice = |e: Error| match e {
        Error::UnstableQueue { layer, .. } => Error::UnstableQueue { layer, slice: Some(s) },
        other => other,
    };
    let (d1, d2) = layer_delays(alpha, &sc.slices[s], p.mu1, p.mu2).map_err(with_slice)?;
    let r_tot_s = slice_rate(sc, a, rates, s);
    let dtr = transmission_delay(r_tot_s / p.packet_size_bits, alpha).map_err(with_slice)?;
    Ok(SliceDelay {
        d1,
        d2,
        dtr,
        total: d1 + d2 + dtr,
        alpha,
        r_tot_s,
    })
}
