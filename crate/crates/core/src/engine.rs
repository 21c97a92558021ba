//! Event-driven growth on a marked Poisson environment.
//!
//! A point `(x, delay, ρ)` of the environment fires at `τ(x) + delay`, where
//! `τ(x)` is the time `x` became infected, and throws a ball of radius `ρ`
//! carrying the type of `x`. Delays are relative to each location's own
//! infection time, so two runs on the same environment share outbursts
//! pathwise; this is what makes passage times subadditive.
//!
//! Environment blocks are generated lazily. Each touched cell remembers the
//! first time a ball reached it (`τ_first`) and how many slabs it has drawn;
//! a sentinel queued at `τ_first + next_slab·h` pulls the next slab before any
//! of its points could be due. Points whose location is still uninfected are
//! parked on their cell and re-examined only when a new ball reaches the cell.
//!
//! Unequal intensities are realized by thinning: a firing of type `i` is kept
//! when the point's thinning uniform is below `λ_i / λ`.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rustc_hash::FxHashMap;

use crate::env::{Environment, MarkedPoint, PointKey};
use crate::error::{GrowthError, Result};
use crate::geom::{cell_of, for_each_cell, AxisBox, Ball, CellKey, Point};
use crate::history::{Classification, History, InfectionType};
use crate::scalar::{Ordered, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct Budget<T> {
    pub max_events: usize,
    pub max_time: T,
    /// Censor once a ball reaches farther than this from the seed centroid.
    pub max_reach: Option<T>,
}

impl<T: Real> Budget<T> {
    pub fn new(max_events: usize, max_time: T) -> Self {
        Budget {
            max_events,
            max_time,
            max_reach: None,
        }
    }

    pub fn with_reach(mut self, reach: T) -> Self {
        self.max_reach = Some(reach);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.max_time >= T::zero()) || !self.max_time.is_finite() {
            return Err(GrowthError::Config(format!(
                "time budget must be finite and non-negative, got {}",
                self.max_time
            )));
        }
        Ok(())
    }
}

impl<T: Real> Default for Budget<T> {
    fn default() -> Self {
        Budget::new(5_000_000, T::of(1.0e4))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StopReason {
    Predicate,
    MaxEvents,
    MaxTime,
    SpatialCap,
}

impl StopReason {
    pub fn is_censored(self) -> bool {
        self != StopReason::Predicate
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Predicate => "stopped",
            StopReason::MaxEvents => "max-events",
            StopReason::MaxTime => "max-time",
            StopReason::SpatialCap => "spatial-cap",
        }
    }
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Stopping predicate, consulted after the seeds are laid and after every
/// appended ball.
pub trait Observer<T: Real> {
    fn on_start(&mut self, _history: &History<T>) -> Control {
        Control::Continue
    }

    /// `index` is the position of the ball just appended.
    fn on_event(&mut self, history: &History<T>, index: usize) -> Control;
}

impl<T: Real, F: FnMut(&History<T>, usize) -> Control> Observer<T> for F {
    fn on_event(&mut self, history: &History<T>, index: usize) -> Control {
        self(history, index)
    }
}

/// Runs until a budget runs out.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeverStop;

impl<T: Real> Observer<T> for NeverStop {
    fn on_event(&mut self, _: &History<T>, _: usize) -> Control {
        Control::Continue
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunAudit {
    /// Firings reached, per type (kept or thinned).
    pub fired: [u64; 2],
    /// Firings discarded by rate thinning, per type.
    pub thinned: [u64; 2],
    pub appended: u64,
    pub redundant: u64,
    pub slabs: u64,
    pub points: u64,
    pub cells: usize,
}

#[derive(Clone, Debug)]
pub struct RunOutput<T> {
    pub history: History<T>,
    pub stop: StopReason,
    pub audit: RunAudit,
}

impl<T> RunOutput<T> {
    pub fn censored(&self) -> bool {
        self.stop.is_censored()
    }
}

#[derive(Clone, Debug)]
enum Job {
    Extend(u32),
    Fire(u32),
}

#[derive(Clone, Debug)]
struct Entry<T> {
    time: Ordered<T>,
    // sentinels first, then lower type tag, then provenance
    rank: u8,
    key: PointKey,
    job: Job,
}

impl<T: Real> Entry<T> {
    fn order(&self, other: &Self) -> Ordering {
        self.time
            .cmp(&other.time)
            .then(self.rank.cmp(&other.rank))
            .then_with(|| self.key.cmp(&other.key))
    }
}

impl<T: Real> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.order(other) == Ordering::Equal
    }
}

impl<T: Real> Eq for Entry<T> {}

impl<T: Real> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.order(other))
    }
}

impl<T: Real> Ord for Entry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order(other)
    }
}

struct Cell<T> {
    key: CellKey,
    tau_first: T,
    next_slab: u32,
    parked: Vec<u32>,
}

struct Engine<'e, T: Real, E: ?Sized> {
    env: &'e E,
    history: History<T>,
    keep: [f64; 2],
    cells: Vec<Cell<T>>,
    cell_ids: FxHashMap<CellKey, u32>,
    points: Vec<MarkedPoint<T>>,
    kinds: Vec<Option<InfectionType>>,
    queue: BinaryHeap<Reverse<Entry<T>>>,
    audit: RunAudit,
    edge: T,
    height: T,
}

impl<'e, T: Real, E: Environment<T> + ?Sized> Engine<'e, T, E> {
    fn reach(&mut self, ball_index: usize) {
        let g = &self.history.balls()[ball_index];
        let ball = g.ball.clone();
        let birth = g.birth;
        let kind = g.kind;
        let bb = ball.bbox();
        let lo = cell_of(bb.low.coords(), self.edge);
        let hi = cell_of(bb.high.coords(), self.edge);
        let mut touched: Vec<CellKey> = Vec::new();
        let edge = self.edge;
        for_each_cell(&lo, &hi, |k| {
            let low: Point<T> = Point::new(k.iter().map(|&c| T::of(c as f64) * edge));
            let high: Point<T> = Point::new(k.iter().map(|&c| T::of(c as f64 + 1.0) * edge));
            if (AxisBox { low, high }).intersects_ball(&ball) {
                touched.push(k.clone());
            }
        });
        for key in touched {
            match self.cell_ids.get(&key) {
                None => {
                    let id = self.cells.len() as u32;
                    self.cell_ids.insert(key.clone(), id);
                    self.queue.push(Reverse(Entry {
                        time: Ordered(birth),
                        rank: 0,
                        key: PointKey {
                            cell: key.clone(),
                            slab: 0,
                            ordinal: 0,
                        },
                        job: Job::Extend(id),
                    }));
                    self.cells.push(Cell {
                        key,
                        tau_first: birth,
                        next_slab: 0,
                        parked: Vec::new(),
                    });
                }
                Some(&id) => {
                    let cell = &mut self.cells[id as usize];
                    let mut i = 0;
                    while i < cell.parked.len() {
                        let p = cell.parked[i];
                        let pt = &self.points[p as usize];
                        if ball.contains(pt.location.coords()) {
                            cell.parked.swap_remove(i);
                            let fire = birth + pt.delay;
                            self.kinds[p as usize] = Some(kind);
                            self.queue.push(Reverse(Entry {
                                time: Ordered(fire),
                                rank: kind.tag(),
                                key: pt.key.clone(),
                                job: Job::Fire(p),
                            }));
                        } else {
                            i += 1;
                        }
                    }
                }
            }
        }
        self.audit.cells = self.cells.len();
    }

    fn extend(&mut self, id: u32, now: T) {
        let cell = &self.cells[id as usize];
        let slab = cell.next_slab;
        let fresh = self.env.points_in(&cell.key, slab);
        self.audit.slabs += 1;
        self.audit.points += fresh.len() as u64;
        for pt in fresh {
            let p = self.points.len() as u32;
            match self.history.classify(pt.location.coords(), now) {
                Classification::Infected { kind, tau } => {
                    let fire = (tau + pt.delay).max(now);
                    self.queue.push(Reverse(Entry {
                        time: Ordered(fire),
                        rank: kind.tag(),
                        key: pt.key.clone(),
                        job: Job::Fire(p),
                    }));
                    self.kinds.push(Some(kind));
                }
                Classification::Uninfected => {
                    self.cells[id as usize].parked.push(p);
                    self.kinds.push(None);
                }
            }
            self.points.push(pt);
        }
        let cell = &mut self.cells[id as usize];
        cell.next_slab += 1;
        let due = cell.tau_first + T::of_usize(cell.next_slab as usize) * self.height;
        self.queue.push(Reverse(Entry {
            time: Ordered(due),
            rank: 0,
            key: PointKey {
                cell: cell.key.clone(),
                slab: cell.next_slab,
                ordinal: 0,
            },
            job: Job::Extend(id),
        }));
    }
}

/// Grows the process from `seeds` until `observer` stops it or `budget`
/// runs out (a censored result, not an error).
///
/// Type `i` outbursts occur at rate `lambda_i` per unit volume of its region;
/// both rates must not exceed the environment rate.
pub fn run<T, E, O>(
    env: &E,
    seeds: &[(Ball<T>, InfectionType)],
    lambda1: f64,
    lambda2: f64,
    observer: &mut O,
    budget: &Budget<T>,
) -> Result<RunOutput<T>>
where
    T: Real,
    E: Environment<T> + ?Sized,
    O: Observer<T> + ?Sized,
{
    budget.validate()?;
    let rate = env.rate();
    for (name, l) in [("lambda1", lambda1), ("lambda2", lambda2)] {
        if !(l >= 0.0) || l > rate {
            return Err(GrowthError::Config(format!(
                "{name} = {l} must lie in [0, environment rate {rate}]"
            )));
        }
    }
    if let Some((b, _)) = seeds.iter().find(|(b, _)| b.dim() != env.dim()) {
        return Err(GrowthError::Dimension {
            expected: env.dim(),
            got: b.dim(),
        });
    }
    let edge = env.cell_edge();
    let history = History::new(seeds, edge)?;
    let centroid = {
        let n = T::of_usize(seeds.len());
        let mut c = Point::origin(env.dim());
        for (b, _) in seeds {
            for (acc, &v) in c.coords_mut().iter_mut().zip(b.center.coords()) {
                *acc = *acc + v / n;
            }
        }
        c
    };
    let mut eng = Engine {
        env,
        history,
        keep: [lambda1 / rate, lambda2 / rate],
        cells: Vec::new(),
        cell_ids: FxHashMap::default(),
        points: Vec::new(),
        kinds: Vec::new(),
        queue: BinaryHeap::new(),
        audit: RunAudit::default(),
        edge,
        height: env.slab_height(),
    };
    for i in 0..eng.history.len() {
        eng.reach(i);
    }
    let finish = |eng: Engine<'_, T, E>, stop| RunOutput {
        history: eng.history,
        stop,
        audit: eng.audit,
    };
    if observer.on_start(&eng.history) == Control::Stop {
        return Ok(finish(eng, StopReason::Predicate));
    }
    if budget.max_events == 0 {
        return Ok(finish(eng, StopReason::MaxEvents));
    }
    loop {
        let Some(Reverse(entry)) = eng.queue.pop() else {
            // nothing left anywhere: the process is frozen for good
            eng.history.set_clock(budget.max_time);
            return Ok(finish(eng, StopReason::MaxTime));
        };
        let now = entry.time.0;
        if now > budget.max_time {
            eng.history.set_clock(budget.max_time);
            return Ok(finish(eng, StopReason::MaxTime));
        }
        match entry.job {
            Job::Extend(id) => eng.extend(id, now),
            Job::Fire(p) => {
                let kind = eng.kinds[p as usize].expect("scheduled points are infected");
                eng.audit.fired[kind.index()] += 1;
                let pt = &eng.points[p as usize];
                if pt.thinning >= eng.keep[kind.index()] {
                    eng.audit.thinned[kind.index()] += 1;
                    continue;
                }
                let ball = Ball::new(pt.location.clone(), pt.radius);
                if let Some(reach) = budget.max_reach {
                    if ball.center.dist(&centroid) + ball.radius > reach {
                        eng.history.set_clock(now);
                        return Ok(finish(eng, StopReason::SpatialCap));
                    }
                }
                let key = pt.key.clone();
                let idx = eng.history.push_event(ball, now, kind, key);
                eng.audit.appended += 1;
                if eng.history.balls()[idx].redundant {
                    eng.audit.redundant += 1;
                }
                eng.reach(idx);
                if observer.on_event(&eng.history, idx) == Control::Stop {
                    return Ok(finish(eng, StopReason::Predicate));
                }
                if eng.audit.appended as usize >= budget.max_events {
                    return Ok(finish(eng, StopReason::MaxEvents));
                }
            }
        }
    }
}

/// One-type run: every seed is type 1 and outbursts occur at the
/// environment rate.
pub fn run_one_type<T, E, O>(
    env: &E,
    seeds: &[Ball<T>],
    observer: &mut O,
    budget: &Budget<T>,
) -> Result<RunOutput<T>>
where
    T: Real,
    E: Environment<T> + ?Sized,
    O: Observer<T> + ?Sized,
{
    let typed: Vec<(Ball<T>, InfectionType)> =
        seeds.iter().map(|b| (b.clone(), InfectionType::One)).collect();
    let rate = env.rate();
    run(env, &typed, rate, rate, observer, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvConfig, ListEnv, PoissonEnv, RadiusLaw};
    use crate::stats::ks_one_sample;

    fn unit_seed() -> Vec<Ball<f64>> {
        vec![Ball::unit(Point::origin(2))]
    }

    #[test]
    fn empty_environment_keeps_seeds_only() {
        let env = ListEnv::<f64>::empty(2, 1.0);
        let out = run_one_type(&env, &unit_seed(), &mut NeverStop, &Budget::new(100, 5.0)).unwrap();
        assert_eq!(out.stop, StopReason::MaxTime);
        assert!(out.censored());
        assert_eq!(out.history.len(), 1);
        assert_eq!(out.history.clock(), 5.0);
        assert_eq!(out.audit.points, 0);
    }

    #[test]
    fn single_point_single_event() {
        let mut env = ListEnv::<f64>::empty(2, 1.0);
        let key = env.push(Point::new([0.25, 0.1]), 0.3, 0.5);
        let out = run_one_type(&env, &unit_seed(), &mut NeverStop, &Budget::new(100, 10.0)).unwrap();
        assert_eq!(out.history.events().len(), 1);
        let e = &out.history.events()[0];
        assert_eq!(e.birth, 0.3);
        assert_eq!(e.ball.radius, 0.5);
        assert_eq!(e.kind, InfectionType::One);
        assert_eq!(e.provenance, crate::history::Provenance::Point(key));
    }

    #[test]
    fn parked_point_fires_after_its_location_is_reached() {
        // second point sits outside the seed and only counts once the first
        // outburst covers it; its delay runs from that moment
        let mut env = ListEnv::<f64>::empty(2, 1.0);
        env.push(Point::new([0.9, 0.0]), 0.5, 1.0);
        env.push(Point::new([1.7, 0.0]), 0.2, 0.4);
        let out = run_one_type(&env, &unit_seed(), &mut NeverStop, &Budget::new(100, 10.0)).unwrap();
        let births: Vec<f64> = out.history.events().iter().map(|e| e.birth).collect();
        assert_eq!(births.len(), 2);
        assert_eq!(births[0], 0.5);
        assert!((births[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn thinning_drops_the_slow_type() {
        let mut env = ListEnv::<f64>::empty(2, 2.0);
        env.push_with_thinning(Point::new([0.1, 0.0]), 0.3, 0.5, 0.7);
        env.push_with_thinning(Point::new([4.1, 0.0]), 0.4, 0.5, 0.7);
        let seeds = vec![
            (Ball::unit(Point::origin(2)), InfectionType::One),
            (Ball::unit(Point::on_axis(2, 4.0)), InfectionType::Two),
        ];
        // type 1 keeps with probability 1/2, type 2 always
        let out = run(&env, &seeds, 1.0, 2.0, &mut NeverStop, &Budget::new(100, 10.0)).unwrap();
        assert_eq!(out.history.events().len(), 1);
        assert_eq!(out.history.events()[0].kind, InfectionType::Two);
        assert_eq!(out.audit.thinned, [1, 0]);
    }

    #[test]
    fn rates_above_environment_rejected() {
        let env = ListEnv::<f64>::empty(2, 1.0);
        let seeds = vec![(Ball::unit(Point::origin(2)), InfectionType::One)];
        assert!(run(&env, &seeds, 1.5, 1.0, &mut NeverStop, &Budget::new(1, 1.0)).is_err());
        let bad = vec![
            (Ball::unit(Point::origin(2)), InfectionType::One),
            (Ball::unit(Point::on_axis(2, 1.0)), InfectionType::Two),
        ];
        assert!(run(&env, &bad, 1.0, 1.0, &mut NeverStop, &Budget::new(1, 1.0)).is_err());
    }

    fn poisson(seed: u64, law: RadiusLaw) -> PoissonEnv {
        PoissonEnv::new(EnvConfig::new(2, 1.0, seed, law)).unwrap()
    }

    #[test]
    fn run_is_deterministic() {
        let law = RadiusLaw::UniformHalfOpen { a: 0.0, b: 1.0 };
        let a = run_one_type(&poisson(5, law), &unit_seed(), &mut NeverStop, &Budget::new(400, 50.0)).unwrap();
        let b = run_one_type(&poisson(5, law), &unit_seed(), &mut NeverStop, &Budget::new(400, 50.0)).unwrap();
        assert_eq!(a.history.balls(), b.history.balls());
        assert_eq!(a.audit, b.audit);
    }

    #[test]
    fn outbursts_come_from_their_own_type() {
        let env = poisson(6, RadiusLaw::UniformHalfOpen { a: 0.0, b: 1.0 });
        let seeds = vec![
            (Ball::unit(Point::origin(2)), InfectionType::One),
            (Ball::unit(Point::on_axis(2, 3.0)), InfectionType::Two),
        ];
        let out = run(&env, &seeds, 1.0, 1.0, &mut NeverStop, &Budget::new(1500, 100.0)).unwrap();
        let h = &out.history;
        assert_eq!(out.audit.thinned, [0, 0]);
        for (i, g) in h.balls().iter().enumerate().skip(h.seeds().len()) {
            let c = h.region_before(i);
            let _ = c;
            let at = h.classify(g.ball.center.coords(), g.birth);
            assert_eq!(at.kind(), Some(g.kind), "ball {i}");
            assert!(at.tau().unwrap() <= g.birth);
        }
        // births never decrease
        assert!(h.balls().windows(2).all(|w| w[0].birth <= w[1].birth));
    }

    #[test]
    fn types_never_flip() {
        let env = poisson(7, RadiusLaw::UniformHalfOpen { a: 0.0, b: 1.0 });
        let seeds = vec![
            (Ball::unit(Point::origin(2)), InfectionType::One),
            (Ball::unit(Point::on_axis(2, 3.0)), InfectionType::Two),
        ];
        let out = run(&env, &seeds, 1.0, 1.0, &mut NeverStop, &Budget::new(1000, 100.0)).unwrap();
        let h = &out.history;
        let end = h.clock();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
        use rand::Rng;
        for _ in 0..500 {
            let x = [rng.gen_range(-6.0..9.0), rng.gen_range(-6.0..6.0)];
            let s = rng.gen_range(0.0..end);
            let early = h.classify(&x, s);
            if early.is_infected() {
                assert_eq!(h.classify(&x, end), early);
            }
        }
    }

    #[test]
    fn one_type_equals_single_type_two_type() {
        let env = poisson(8, RadiusLaw::Dirac { r: 1.0 });
        let a = run_one_type(&env, &unit_seed(), &mut NeverStop, &Budget::new(300, 50.0)).unwrap();
        let seeds = vec![(Ball::unit(Point::origin(2)), InfectionType::One)];
        let b = run(&env, &seeds, 1.0, 0.0, &mut NeverStop, &Budget::new(300, 50.0)).unwrap();
        assert_eq!(a.history.balls(), b.history.balls());
    }

    #[test]
    fn first_event_is_exponential_with_rate_pi() {
        let law = RadiusLaw::UniformHalfOpen { a: 0.0, b: 1.0 };
        let times: Vec<f64> = (0..2000)
            .map(|s| {
                let out = run_one_type(&poisson(s, law), &unit_seed(), &mut NeverStop, &Budget::new(1, 100.0)).unwrap();
                out.history.events()[0].birth
            })
            .collect();
        let pi = std::f64::consts::PI;
        let r = ks_one_sample(&times, |t| 1.0 - (-pi * t).exp()).unwrap();
        assert!(r.p_value > 0.001, "p = {}", r.p_value);
    }

    #[test]
    fn spatial_cap_censors() {
        let env = poisson(9, RadiusLaw::Dirac { r: 1.0 });
        let out = run_one_type(&env, &unit_seed(), &mut NeverStop, &Budget::new(100_000, 1e3).with_reach(4.0)).unwrap();
        assert_eq!(out.stop, StopReason::SpatialCap);
        for g in out.history.balls() {
            assert!(g.ball.center.dist(&Point::origin(2)) + g.ball.radius <= 4.0);
        }
    }

    #[test]
    fn works_in_f32_and_three_dimensions() {
        let env = PoissonEnv::new(EnvConfig::new(3, 1.0, 4, RadiusLaw::Dirac { r: 1.0 })).unwrap();
        let seeds = vec![Ball::<f32>::unit(Point::origin(3))];
        let out = run_one_type(&env, &seeds, &mut NeverStop, &Budget::new(200, 50.0)).unwrap();
        assert_eq!(out.history.events().len(), 200);
        let seeds64 = vec![Ball::<f64>::unit(Point::origin(3))];
        let out64 = run_one_type(&env, &seeds64, &mut NeverStop, &Budget::new(200, 50.0)).unwrap();
        // same environment, same first outburst up to single precision
        let (a, b) = (&out.history.events()[0], &out64.history.events()[0]);
        assert_eq!(a.provenance, b.provenance);
        assert!((a.birth as f64 - b.birth).abs() < 1e-5);
    }
}
