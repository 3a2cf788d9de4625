//! Small hand-built and random instances shared by the test suites.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::radio::{ChannelSet, MappingAs, Radio};
use crate::scenario::{
    generate_scenario, partition_prbs, DataCenter, GeneratorConfig, Point, RadioUnit, Resources,
    Scenario, Service, Slice, SystemParams, UserEquipment,
};

pub fn random_complex_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Scenario with default parameters, services holding `ue_counts[v]` UEs
/// (arrival rate 1 each), and slices given as `(ru_ids, prb_ids)` with one
/// VNF per layer. The PRB tensor follows the generator's partition.
pub fn scenario(ue_counts: &[usize], slices: &[(&[usize], &[usize])], n_rus: usize, n_prbs: usize) -> Scenario {
    let params = SystemParams::default();
    let services: Vec<Service> = ue_counts
        .iter()
        .enumerate()
        .map(|(v, &n)| Service {
            id: v,
            ues: (0..n)
                .map(|i| UserEquipment {
                    id: i,
                    arrival_rate: 1.0,
                    position: Point::default(),
                })
                .collect(),
        })
        .collect();
    let slices: Vec<Slice> = slices
        .iter()
        .enumerate()
        .map(|(s, (rus, prbs))| Slice {
            id: s,
            ru_ids: rus.to_vec(),
            prb_ids: prbs.to_vec(),
            m_du: 1,
            m_cu: 1,
            vnf_demands: vec![Resources::new(50.0, 5.0, 16.0); 2],
        })
        .collect();
    let radio_units = (0..n_rus)
        .map(|r| RadioUnit {
            id: r,
            position: Point::default(),
            sigma_q2: params.sigma_q_default,
        })
        .collect();
    let prb_assignment = partition_prbs(&services, &slices);
    Scenario {
        params,
        services,
        radio_units,
        n_prbs,
        slices,
        prb_assignment,
        dcs: vec![DataCenter {
            id: 0,
            capacity: Resources::new(1000.0, 100.0, 320.0),
            phi_idle: 5.0,
            phi_per_unit: 0.01,
        }],
    }
}

/// Generated instance with exactly `ues_per_service` UEs in every service.
pub fn random_instance(
    n_services: usize,
    ues_per_service: usize,
    n_slices: usize,
    seed: u64,
) -> (Scenario, ChannelSet) {
    let cfg = GeneratorConfig {
        n_services,
        mean_ues: ues_per_service as f64,
        n_slices,
        n_radio_units: 8,
        rus_per_slice: 4.max(ues_per_service),
        n_prbs: 8,
        prbs_per_slice: 4,
        ..Default::default()
    };
    let mut sc = generate_scenario(&cfg, seed).expect("valid config");
    for svc in &mut sc.services {
        while svc.ues.len() < ues_per_service {
            let mut ue = svc.ues[0].clone();
            ue.id = svc.ues.len();
            ue.position.x = (ue.position.x + 13.0 * ue.id as f64) % cfg.region_m;
            svc.ues.push(ue);
        }
        svc.ues.truncate(ues_per_service);
    }
    sc.prb_assignment = partition_prbs(&sc.services, &sc.slices);
    let ch = ChannelSet::generate(&sc, &cfg.channel, seed);
    (sc, ch)
}

/// Maps service `v` to the first slice at or after `v mod S` that has a
/// beamformer for it.
pub fn feasible_diagonal(radio: &Radio) -> MappingAs {
    let n_s = radio.sc.n_slices();
    let mut a = MappingAs::zeros(radio.sc.n_services(), n_s);
    for v in 0..radio.sc.n_services() {
        if let Some(s) = (0..n_s).map(|k| (v + k) % n_s).find(|&s| radio.bf.get(s, v).is_some()) {
            a.set(v, s, true);
        }
    }
    a
}
