//! Event-by-event M/M/1 simulation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};

/// Fewest arrivals accepted by [`mm1_simulate`].
pub const MIN_ARRIVALS: usize = 100_000;

/// Mean sojourn time of `n_arrivals` customers of a FIFO M/M/1 queue that
/// starts empty, from Lindley's recursion on waiting times.
pub fn mm1_simulate(lambda: f64, mu: f64, n_arrivals: usize, seed: u64) -> Result<f64> {
    if !(lambda > 0.0 && mu > lambda && mu.is_finite()) {
        return Err(Error::config("mm1", format!("need 0 < lambda < mu, got lambda={lambda}, mu={mu}")));
    }
    if n_arrivals < MIN_ARRIVALS {
        return Err(Error::config("n_arrivals", format!("must be at least {MIN_ARRIVALS}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inter = Exp::new(lambda).expect("positive rate");
    let service = Exp::new(mu).expect("positive rate");
    let mut wait = 0.0;
    let mut total = 0.0;
    for _ in 0..n_arrivals {
        let s: f64 = service.sample(&mut rng);
        total += wait + s;
        let gap: f64 = inter.sample(&mut rng);
        wait = (wait + s - gap).max(0.0);
    }
    Ok(total / n_arrivals as f64)
}
