//! Direct simulator used to cross-check the engine in distribution.
//!
//! A homogeneous Poisson stream on box × absolute time is generated in time
//! order; a proposal is kept iff its location is infected at that moment.
//! Outbursts thus occur at rate `λ|S_t|` at uniform locations of `S_t`, and
//! memorylessness makes the rejection exact. No relative clocks and no shared
//! scheduling with the engine.

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::env::{PointKey, RadiusLaw};
use crate::error::{GrowthError, Result};
use crate::geom::{ball_fully_covered, AxisBox, Ball, Point};
use crate::history::{Classification, History, InfectionType};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct OracleConfig<T> {
    pub rate: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub law: RadiusLaw,
    pub seeds: Vec<(Ball<T>, InfectionType)>,
    /// Growth must stay inside this box; leaving it censors the run.
    pub bounds: AxisBox<T>,
    pub seed: u64,
}

impl<T: Real> OracleConfig<T> {
    /// One type at rate `rate` from the given seeds.
    pub fn one_type(rate: f64, law: RadiusLaw, seeds: Vec<Ball<T>>, bounds: AxisBox<T>, seed: u64) -> Self {
        OracleConfig {
            rate,
            lambda1: rate,
            lambda2: rate,
            law,
            seeds: seeds.into_iter().map(|b| (b, InfectionType::One)).collect(),
            bounds,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.law.validate()?;
        if !(self.rate > 0.0) || !self.rate.is_finite() {
            return Err(GrowthError::Config(format!("rate must be positive, got {}", self.rate)));
        }
        for l in [self.lambda1, self.lambda2] {
            if !(l >= 0.0 && l <= self.rate) {
                return Err(GrowthError::Config(format!("type rate {l} outside [0, {}]", self.rate)));
            }
        }
        if let Some((b, _)) = self.seeds.iter().find(|(b, _)| !inside(&self.bounds, b)) {
            return Err(GrowthError::Config(format!(
                "seed centred at {:?} leaves the bounding box",
                b.center.to_f64()
            )));
        }
        Ok(())
    }
}

fn inside<T: Real>(bounds: &AxisBox<T>, b: &Ball<T>) -> bool {
    let bb = b.bbox();
    bounds.contains(bb.low.coords()) && bounds.contains(bb.high.coords())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleStop {
    Predicate,
    MaxEvents,
    MaxTime,
    /// An outburst reached outside the box.
    Escaped,
}

#[derive(Clone, Debug)]
pub struct OracleRun<T> {
    pub history: History<T>,
    pub stop: OracleStop,
    pub proposals: u64,
    pub thinned: u64,
}

impl<T> OracleRun<T> {
    pub fn censored(&self) -> bool {
        self.stop != OracleStop::Predicate
    }
}

/// Runs until `stop(history, index of new ball)` returns true or a limit is
/// hit. Events are keyed by their acceptance ordinal.
pub fn oracle_run<T: Real>(
    cfg: &OracleConfig<T>,
    mut stop: impl FnMut(&History<T>, usize) -> bool,
    max_events: usize,
    max_time: T,
) -> Result<OracleRun<T>> {
    cfg.validate()?;
    let mut h = History::new(&cfg.seeds, T::one())?;
    let mut run = |h: &mut History<T>| -> Result<(OracleStop, u64, u64)> {
        let dim = h.dim();
        let lo: Vec<f64> = cfg.bounds.low.to_f64();
        let hi: Vec<f64> = cfg.bounds.high.to_f64();
        let volume: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
        let gap = Exp::new(cfg.rate * volume).map_err(|e| GrowthError::Config(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let keep = [cfg.lambda1 / cfg.rate, cfg.lambda2 / cfg.rate];
        let mut t = 0.0f64;
        let (mut proposals, mut thinned, mut accepted) = (0u64, 0u64, 0u32);
        loop {
            t += gap.sample(&mut rng);
            let x: Point<T> = Point::new((0..dim).map(|i| T::of(rng.gen_range(lo[i]..hi[i]))));
            let u: f64 = rng.sample(Open01);
            let v: f64 = rng.gen();
            proposals += 1;
            let now = T::of(t);
            if now > max_time {
                h.set_clock(max_time);
                return Ok((OracleStop::MaxTime, proposals, thinned));
            }
            let Classification::Infected { kind, .. } = h.classify(x.coords(), now) else {
                continue;
            };
            if v >= keep[kind.index()] {
                thinned += 1;
                continue;
            }
            let ball = Ball::new(x, T::of(cfg.law.quantile(u)));
            if !inside(&cfg.bounds, &ball) {
                h.set_clock(now);
                return Ok((OracleStop::Escaped, proposals, thinned));
            }
            let key = PointKey {
                cell: Default::default(),
                slab: 0,
                ordinal: accepted,
            };
            accepted += 1;
            let idx = h.push_event(ball, now, kind, key);
            if stop(h, idx) {
                return Ok((OracleStop::Predicate, proposals, thinned));
            }
            if accepted as usize >= max_events {
                return Ok((OracleStop::MaxEvents, proposals, thinned));
            }
        }
    };
    let (stop, proposals, thinned) = run(&mut h)?;
    Ok(OracleRun {
        history: h,
        stop,
        proposals,
        thinned,
    })
}

/// Oracle passage time from `B(x,1)` to `B(y,1)`; `None` when censored.
pub fn oracle_passage<T: Real>(
    rate: f64,
    law: RadiusLaw,
    x: &Point<T>,
    y: &Point<T>,
    bounds: AxisBox<T>,
    delta: T,
    seed: u64,
) -> Result<Option<T>> {
    let target = Ball::unit(y.clone());
    if ball_fully_covered(&target, &[Ball::unit(x.clone())][..], delta).is_covered() {
        return Ok(Some(T::zero()));
    }
    let cfg = OracleConfig::one_type(rate, law, vec![Ball::unit(x.clone())], bounds, seed);
    let out = oracle_run(
        &cfg,
        |h, i| {
            h.balls()[i].ball.intersects(&target) && ball_fully_covered(&target, h.index(), delta).is_covered()
        },
        10_000_000,
        T::of(1.0e4),
    )?;
    Ok(if out.censored() {
        None
    } else {
        Some(out.history.clock())
    })
}

/// Box around the segment from `x` to `y` with `margin` on every side.
pub fn passage_box<T: Real>(x: &Point<T>, y: &Point<T>, margin: T) -> AxisBox<T> {
    let low = Point::new(x.coords().iter().zip(y.coords()).map(|(&a, &b)| a.min(b) - margin));
    let high = Point::new(x.coords().iter().zip(y.coords()).map(|(&a, &b)| a.max(b) + margin));
    AxisBox { low, high }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_one_sample;

    fn unit_box(half: f64) -> AxisBox<f64> {
        AxisBox::cube(&[0.0, 0.0], half)
    }

    #[test]
    fn no_engine_dependency() {
        let src = include_str!("oracle.rs");
        let needle = concat!("crate::", "engine");
        assert!(!src.contains(needle));
        let passage = concat!("crate::", "passage");
        assert!(!src.contains(passage));
    }

    #[test]
    fn first_event_time_and_location() {
        let law = RadiusLaw::Dirac { r: 1.0 };
        let mut times = Vec::new();
        let mut r2 = Vec::new();
        for s in 0..3000 {
            let cfg = OracleConfig::one_type(1.0, law, vec![Ball::unit(Point::origin(2))], unit_box(3.0), s);
            let out = oracle_run(&cfg, |_, _| true, 10, 100.0).unwrap();
            assert_eq!(out.stop, OracleStop::Predicate);
            let e = &out.history.events()[0];
            times.push(e.birth);
            r2.push(e.ball.center.dist2(&Point::origin(2)));
        }
        let pi = std::f64::consts::PI;
        assert!(ks_one_sample(&times, |t| 1.0 - (-pi * t).exp()).unwrap().p_value > 0.001);
        assert!(ks_one_sample(&r2, |v| v.clamp(0.0, 1.0)).unwrap().p_value > 0.001);
    }

    #[test]
    fn symmetric_first_type() {
        let law = RadiusLaw::Dirac { r: 0.5 };
        let n = 2000;
        let mut ones = 0;
        for s in 0..n {
            let cfg = OracleConfig {
                rate: 1.0,
                lambda1: 1.0,
                lambda2: 1.0,
                law,
                seeds: vec![
                    (Ball::unit(Point::origin(2)), InfectionType::One),
                    (Ball::unit(Point::on_axis(2, 2.0)), InfectionType::Two),
                ],
                bounds: AxisBox::new(Point::new([-3.0, -3.0]), Point::new([5.0, 3.0])).unwrap(),
                seed: s,
            };
            let out = oracle_run(&cfg, |_, _| true, 10, 100.0).unwrap();
            if out.history.events()[0].kind == InfectionType::One {
                ones += 1;
            }
        }
        let p = ones as f64 / n as f64;
        let se = (0.25 / n as f64).sqrt();
        assert!((p - 0.5).abs() < 3.0 * se, "p = {p}");
    }

    #[test]
    fn escape_is_censored() {
        let cfg = OracleConfig::one_type(1.0, RadiusLaw::Dirac { r: 1.0 }, vec![Ball::unit(Point::origin(2))], unit_box(1.5), 3);
        let out = oracle_run(&cfg, |_, _| false, 1000, 100.0).unwrap();
        assert_eq!(out.stop, OracleStop::Escaped);
        assert!(out.censored());
    }

    #[test]
    fn seed_outside_box_rejected() {
        let cfg = OracleConfig::one_type(1.0, RadiusLaw::Dirac { r: 1.0 }, vec![Ball::unit(Point::origin(2))], unit_box(0.5), 3);
        assert!(oracle_run(&cfg, |_, _| true, 1, 1.0).is_err());
    }

    #[test]
    fn identity_passage() {
        let p = Point::origin(2);
        let t = oracle_passage(1.0, RadiusLaw::Dirac { r: 1.0 }, &p, &p, unit_box(4.0), 1e-3, 0).unwrap();
        assert_eq!(t, Some(0.0));
    }
}
