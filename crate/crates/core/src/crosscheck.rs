//! Engine against oracle: passage-time samples from both simulators and a
//! two-sample KS comparison.

use crate::env::{EnvConfig, RadiusLaw};
use crate::error::Result;
use crate::geom::Point;
use crate::oracle::{oracle_passage, passage_box};
use crate::passage::{passage_sample, replication_seed};
use crate::stats::{ks_two_sample, TestResult};

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub dim: usize,
    pub law: RadiusLaw,
    /// Rate used by the engine side.
    pub engine_rate: f64,
    /// Rate used by the oracle side; differs only in power self-tests.
    pub oracle_rate: f64,
    pub distance: f64,
    pub delta: f64,
    /// Oracle box margin around the segment from the seed to the target.
    pub margin: f64,
}

impl Scenario {
    pub fn standard(distance: f64) -> Self {
        Scenario {
            dim: 2,
            law: RadiusLaw::Dirac { r: 1.0 },
            engine_rate: 1.0,
            oracle_rate: 1.0,
            distance,
            delta: 1.0e-3,
            margin: 30.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub censored: (usize, usize),
    pub ks: TestResult,
}

pub fn engine_sample(sc: &Scenario, rate: f64, reps: usize, seed: u64, stream: u64) -> Result<(Vec<f64>, usize)> {
    let cfg = EnvConfig::new(sc.dim, rate, seed, sc.law);
    let res = passage_sample(&cfg, sc.distance, reps, sc.delta, stream)?;
    let kept: Vec<f64> = res.iter().filter(|r| !r.censored).map(|r| r.t).collect();
    Ok((kept.clone(), res.len() - kept.len()))
}

pub fn oracle_sample(sc: &Scenario, rate: f64, reps: usize, seed: u64) -> Result<(Vec<f64>, usize)> {
    let x = Point::origin(sc.dim);
    let y = Point::on_axis(sc.dim, sc.distance);
    let bounds = passage_box(&x, &y, sc.margin);
    let mut kept = Vec::with_capacity(reps);
    let mut censored = 0;
    for r in 0..reps as u64 {
        match oracle_passage(rate, sc.law, &x, &y, bounds.clone(), sc.delta, replication_seed(seed, 0x0c1e, r))? {
            Some(t) => kept.push(t),
            None => censored += 1,
        }
    }
    Ok((kept, censored))
}

/// Engine (rate `engine_rate`) against oracle (rate `oracle_rate`).
pub fn compare_with_engine(sc: &Scenario, reps: usize, seed: u64) -> Result<Comparison> {
    let (a, ca) = engine_sample(sc, sc.engine_rate, reps, seed, 0)?;
    let (b, cb) = oracle_sample(sc, sc.oracle_rate, reps, seed ^ 0x5eed)?;
    let ks = ks_two_sample(&a, &b)?;
    Ok(Comparison {
        first: a,
        second: b,
        censored: (ca, cb),
        ks,
    })
}

/// Engine against itself on unrelated environments.
pub fn compare_engine_with_itself(sc: &Scenario, reps: usize, seed: u64) -> Result<Comparison> {
    let (a, ca) = engine_sample(sc, sc.engine_rate, reps, seed, 0)?;
    let (b, cb) = engine_sample(sc, sc.engine_rate, reps, seed, 1)?;
    let ks = ks_two_sample(&a, &b)?;
    Ok(Comparison {
        first: a,
        second: b,
        censored: (ca, cb),
        ks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_passage_agrees() {
        let sc = Scenario::standard(2.0);
        let c = compare_with_engine(&sc, 300, 11).unwrap();
        assert_eq!(c.censored, (0, 0));
        assert!(c.ks.p_value > 0.001, "p = {}", c.ks.p_value);
    }

    #[test]
    fn mismatched_rates_separate() {
        let mut sc = Scenario::standard(2.0);
        sc.oracle_rate = 2.0;
        let c = compare_with_engine(&sc, 300, 12).unwrap();
        assert!(c.ks.p_value < 1e-6, "p = {}", c.ks.p_value);
    }
}
