//! Two-type competition: exits of the balls `B_k` centred between the seeds,
//! frozen-type certification, and Monte Carlo coexistence estimates.

use crate::engine::{run, Budget, Control, Observer, StopReason};
use crate::env::{EnvConfig, Environment, PoissonEnv, RadiusLaw};
use crate::error::{GrowthError, Result};
use crate::geom::{find_exposed_point, find_uncovered, AxisBox, Ball, Coverage, Point, SearchDomain};
use crate::history::{History, InfectionType};
use crate::scalar::Real;
use crate::stats::{wilson_interval, MeanSe, ProportionInterval};

#[derive(Clone, Debug)]
pub struct CompeteConfig<T> {
    pub env: EnvConfig,
    pub lambda1: f64,
    pub lambda2: f64,
    pub seeds: Vec<(Ball<T>, InfectionType)>,
    /// Common centre of the exit balls `B_k`.
    pub center: Point<T>,
    pub ks: Vec<T>,
    pub delta: T,
    pub budget: Budget<T>,
}

impl<T: Real> CompeteConfig<T> {
    /// Type 1 at the origin, type 2 at `n·e₁`, exit balls centred at `n·e₁/2`.
    pub fn two_seeds(env: EnvConfig, lambda1: f64, lambda2: f64, n: T, ks: Vec<T>) -> Self {
        let d = env.dim;
        let reach = ks.last().copied().unwrap_or(T::one()) * T::of(4.0) + n;
        CompeteConfig {
            env,
            lambda1,
            lambda2,
            seeds: vec![
                (Ball::unit(Point::origin(d)), InfectionType::One),
                (Ball::unit(Point::on_axis(d, n)), InfectionType::Two),
            ],
            center: Point::on_axis(d, n / T::of(2.0)),
            ks,
            delta: T::of(1.0e-3),
            budget: Budget::new(50_000_000, T::of(1.0e4)).with_reach(reach),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        if self.ks.is_empty() || self.ks.windows(2).any(|w| !(w[0] < w[1])) || !(self.ks[0] > T::zero()) {
            return Err(GrowthError::Config("k grid must be positive and strictly increasing".into()));
        }
        if !(self.delta > T::zero()) {
            return Err(GrowthError::Config("delta must be positive".into()));
        }
        if self.center.dim() != self.env.dim {
            return Err(GrowthError::Dimension {
                expected: self.env.dim,
                got: self.center.dim(),
            });
        }
        // disjointness and dimensions of the seeds
        History::new(&self.seeds, T::of(self.env.cell_edge))?;
        Ok(())
    }

    pub fn exit_ball(&self, k: usize) -> Ball<T> {
        Ball::new(self.center.clone(), self.ks[k])
    }
}

/// Sound certificate that type `kind` can never infect anything again: every
/// point within `radius_bound` of each of its balls is already infected.
///
/// Dilating the type's balls rather than its first-cover region checks a
/// superset, so the answer may come later than strictly necessary but is
/// never wrong.
pub fn frozen_check<T: Real>(h: &History<T>, kind: InfectionType, law: &RadiusLaw, delta: T) -> Result<bool> {
    let bound = reach_of(law)?;
    Ok(h
        .balls()
        .iter()
        .filter(|g| g.kind == kind)
        .all(|g| find_uncovered(&SearchDomain::ball(g.ball.dilated(bound)), h.index(), delta).is_covered()))
}

fn reach_of<T: Real>(law: &RadiusLaw) -> Result<T> {
    let r = law.radius_bound();
    if !r.is_finite() {
        return Err(GrowthError::Unsupported(format!(
            "frozen certification needs bounded radii, {law} is unbounded"
        )));
    }
    Ok(T::of(r))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KOutcome {
    Coexist,
    Type1Only,
    Type2Only,
    Censored,
}

impl KOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            KOutcome::Coexist => "coexist",
            KOutcome::Type1Only => "type1-only",
            KOutcome::Type2Only => "type2-only",
            KOutcome::Censored => "censored",
        }
    }
}

impl std::fmt::Display for KOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Freeze<T> {
    pub time: T,
    /// Number of balls in the history when the certificate was issued.
    pub at_len: usize,
}

#[derive(Clone, Debug)]
pub struct CompeteOutcome<T> {
    pub ks: Vec<T>,
    /// Exit time of `B_k` per type and `k`.
    pub exits: [Vec<Option<T>>; 2],
    pub frozen: [Option<Freeze<T>>; 2],
    pub stop: StopReason,
    pub events: usize,
}

impl<T: Real> CompeteOutcome<T> {
    pub fn censored(&self) -> bool {
        self.stop.is_censored()
    }

    pub fn exited(&self, kind: InfectionType, k: usize) -> bool {
        self.exits[kind.index()][k].is_some()
    }

    pub fn outcome(&self, k: usize) -> KOutcome {
        let e1 = self.exited(InfectionType::One, k);
        let e2 = self.exited(InfectionType::Two, k);
        if e1 && e2 {
            return KOutcome::Coexist;
        }
        // a frozen type that has not exited yet never will
        let f1 = self.frozen[0].is_some() && !e1;
        let f2 = self.frozen[1].is_some() && !e2;
        match (f1, f2) {
            (false, true) if e1 => KOutcome::Type1Only,
            (true, false) if e2 => KOutcome::Type2Only,
            _ => KOutcome::Censored,
        }
    }

    pub fn outcomes(&self) -> Vec<KOutcome> {
        (0..self.ks.len()).map(|k| self.outcome(k)).collect()
    }
}

struct Pending<T> {
    ball: Ball<T>,
    witness: Option<AxisBox<T>>,
}

struct CompeteObserver<'c, T> {
    cfg: &'c CompeteConfig<T>,
    bound: Option<T>,
    exits: [Vec<Option<T>>; 2],
    frozen: [Option<Freeze<T>>; 2],
    // dilated balls of each type not yet certified covered
    pending: [Vec<Pending<T>>; 2],
}

impl<'c, T: Real> CompeteObserver<'c, T> {
    fn new(cfg: &'c CompeteConfig<T>) -> Self {
        let nk = cfg.ks.len();
        CompeteObserver {
            cfg,
            bound: reach_of(&cfg.env.law).ok(),
            exits: [vec![None; nk], vec![None; nk]],
            frozen: [None, None],
            pending: [Vec::new(), Vec::new()],
        }
    }

    fn record_exits(&mut self, h: &History<T>, index: usize) {
        let g = &h.balls()[index];
        let i = g.kind.index();
        let before = h.region_before(index);
        for k in 0..self.cfg.ks.len() {
            if self.exits[i][k].is_some() {
                continue;
            }
            let bk = self.cfg.exit_ball(k);
            if bk.contains_ball(&g.ball) {
                break;
            }
            let domain = SearchDomain::ball(g.ball.clone()).excluding(bk);
            if find_exposed_point(&domain, &before, self.cfg.delta).is_none() {
                // smaller masks for larger k cannot do better
                break;
            }
            // exiting B_k exits every smaller ball too
            for e in self.exits[i][..=k].iter_mut().filter(|e| e.is_none()) {
                *e = Some(g.birth);
            }
        }
    }

    fn last_exited(&self, kind: InfectionType) -> bool {
        self.exits[kind.index()].last().is_some_and(|e| e.is_some())
    }

    // Brings the certificate of `kind` up to date; only called once the other
    // type has left the outermost ball.
    fn update_frozen(&mut self, h: &History<T>, new_ball: Option<&Ball<T>>) {
        if self.bound.is_none() {
            return;
        }
        for kind in InfectionType::BOTH {
            let i = kind.index();
            if self.frozen[i].is_some() || self.last_exited(kind) || !self.last_exited(kind.other()) {
                continue;
            }
            let delta = self.cfg.delta;
            let mut open = std::mem::take(&mut self.pending[i]);
            open.retain_mut(|p| {
                if let (Some(b), Some(cell)) = (new_ball, &p.witness) {
                    if !cell.intersects_ball(b) {
                        return true;
                    }
                }
                match find_uncovered(&SearchDomain::ball(p.ball.clone()), h.index(), delta) {
                    Coverage::Covered => false,
                    Coverage::Witness(w) => {
                        p.witness = Some(w.cell);
                        true
                    }
                }
            });
            if open.is_empty() {
                self.frozen[i] = Some(Freeze {
                    time: h.clock(),
                    at_len: h.len(),
                });
            }
            self.pending[i] = open;
        }
    }

    fn push_pending(&mut self, h: &History<T>, index: usize) {
        if let Some(bound) = self.bound {
            let g = &h.balls()[index];
            self.pending[g.kind.index()].push(Pending {
                ball: g.ball.dilated(bound),
                witness: None,
            });
        }
    }

    fn decided(&self) -> bool {
        let e1 = self.last_exited(InfectionType::One);
        let e2 = self.last_exited(InfectionType::Two);
        (e1 && e2) || (e1 && self.frozen[1].is_some()) || (e2 && self.frozen[0].is_some())
    }

    fn verdict(&self) -> Control {
        if self.decided() {
            Control::Stop
        } else {
            Control::Continue
        }
    }
}

impl<T: Real> Observer<T> for CompeteObserver<'_, T> {
    fn on_start(&mut self, h: &History<T>) -> Control {
        for i in 0..h.len() {
            self.record_exits(h, i);
            self.push_pending(h, i);
        }
        self.update_frozen(h, None);
        self.verdict()
    }

    fn on_event(&mut self, h: &History<T>, index: usize) -> Control {
        self.record_exits(h, index);
        self.push_pending(h, index);
        let b = h.balls()[index].ball.clone();
        self.update_frozen(h, Some(&b));
        self.verdict()
    }
}

/// Runs one competition and returns the outcome together with its history.
pub fn run_compete_with_history<T, E>(env: &E, cfg: &CompeteConfig<T>) -> Result<(CompeteOutcome<T>, History<T>)>
where
    T: Real,
    E: Environment<T> + ?Sized,
{
    cfg.validate()?;
    let mut obs = CompeteObserver::new(cfg);
    let out = run(env, &cfg.seeds, cfg.lambda1, cfg.lambda2, &mut obs, &cfg.budget)?;
    let outcome = CompeteOutcome {
        ks: cfg.ks.clone(),
        exits: obs.exits,
        frozen: obs.frozen,
        stop: out.stop,
        events: out.history.events().len(),
    };
    Ok((outcome, out.history))
}

pub fn run_compete<T, E>(env: &E, cfg: &CompeteConfig<T>) -> Result<CompeteOutcome<T>>
where
    T: Real,
    E: Environment<T> + ?Sized,
{
    Ok(run_compete_with_history(env, cfg)?.0)
}

/// Every ball of a frozen type born after its certificate adds nothing new.
pub fn frozen_sound<T: Real>(h: &History<T>, outcome: &CompeteOutcome<T>, delta: T) -> bool {
    InfectionType::BOTH.iter().all(|&kind| {
        let Some(f) = outcome.frozen[kind.index()] else { return true };
        let before = h.region_before(f.at_len);
        h.balls()[f.at_len..]
            .iter()
            .filter(|g| g.kind == kind)
            .all(|g| find_exposed_point(&SearchDomain::ball(g.ball.clone()), &before, delta).is_none())
    })
}

/// Seed of replication `rep`.
pub fn compete_seed(seed: u64, rep: u64) -> u64 {
    seed ^ rep
}

pub fn replicate(cfg: &CompeteConfig<f64>, rep: u64) -> Result<CompeteOutcome<f64>> {
    let env = PoissonEnv::new(cfg.env.with_seed(compete_seed(cfg.env.seed, rep)))?;
    run_compete(&env, cfg)
}

#[derive(Clone, Debug)]
pub struct CoexistRow {
    pub k: f64,
    pub coexist: u64,
    pub censored: u64,
    pub trials: u64,
    /// Censored runs counted as not coexisting.
    pub pessimistic: ProportionInterval,
    /// Censored runs counted as coexisting.
    pub optimistic: ProportionInterval,
}

impl CoexistRow {
    /// Point estimate over resolved runs.
    pub fn estimate(&self) -> f64 {
        let resolved = self.trials - self.censored;
        if resolved == 0 {
            f64::NAN
        } else {
            self.coexist as f64 / resolved as f64
        }
    }
}

pub fn coexistence_table(outcomes: &[CompeteOutcome<f64>], confidence: f64) -> Result<Vec<CoexistRow>> {
    let Some(first) = outcomes.first() else {
        return Err(GrowthError::Parameter("no replications".into()));
    };
    let trials = outcomes.len() as u64;
    (0..first.ks.len())
        .map(|k| {
            let coexist = outcomes.iter().filter(|o| o.outcome(k) == KOutcome::Coexist).count() as u64;
            let censored = outcomes.iter().filter(|o| o.outcome(k) == KOutcome::Censored).count() as u64;
            Ok(CoexistRow {
                k: first.ks[k],
                coexist,
                censored,
                trials,
                pessimistic: wilson_interval(coexist, trials, confidence)?,
                optimistic: wilson_interval(coexist + censored, trials, confidence)?,
            })
        })
        .collect()
}

pub fn estimate_coexistence(cfg: &CompeteConfig<f64>, reps: usize, confidence: f64) -> Result<Vec<CoexistRow>> {
    if reps < 100 {
        return Err(GrowthError::Parameter(format!("need at least 100 replications, got {reps}")));
    }
    let outcomes = (0..reps as u64).map(|r| replicate(cfg, r)).collect::<Result<Vec<_>>>()?;
    coexistence_table(&outcomes, confidence)
}

/// Paired difference of the exit indicators of `B_k` (type 1 minus type 2).
pub fn exit_asymmetry(outcomes: &[CompeteOutcome<f64>], k: usize) -> MeanSe {
    let d: Vec<f64> = outcomes
        .iter()
        .map(|o| o.exited(InfectionType::One, k) as u8 as f64 - o.exited(InfectionType::Two, k) as u8 as f64)
        .collect();
    MeanSe::of(&d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ListEnv;

    fn law() -> RadiusLaw {
        RadiusLaw::UniformHalfOpen { a: 0.0, b: 1.0 }
    }

    fn cfg(ks: Vec<f64>) -> CompeteConfig<f64> {
        let mut c = CompeteConfig::two_seeds(EnvConfig::new(2, 1.0, 0, law()), 1.0, 1.0, 8.0, ks);
        c.budget = Budget::new(100_000, 200.0).with_reach(80.0);
        c
    }

    #[test]
    fn empty_environment_never_exits() {
        let env = ListEnv::<f64>::empty(2, 1.0);
        let o = run_compete(&env, &cfg(vec![5.0, 10.0])).unwrap();
        assert!(o.censored());
        assert!(o.exits.iter().flatten().all(|e| e.is_none()));
        assert_eq!(o.outcomes(), vec![KOutcome::Censored; 2]);
    }

    #[test]
    fn single_outburst_exit() {
        // B_5 is centred at (4,0); a type-1 ball at (−0.5,0) of radius 1
        // pokes past x = −1 into untouched ground
        let mut env = ListEnv::<f64>::empty(2, 1.0);
        env.push(Point::new([-0.5, 0.0]), 0.4, 1.0);
        let o = run_compete(&env, &cfg(vec![5.0, 10.0])).unwrap();
        assert_eq!(o.exits[0], vec![Some(0.4), None]);
        assert_eq!(o.exits[1], vec![None, None]);
    }

    #[test]
    fn frozen_check_examples() {
        let dirac = RadiusLaw::Dirac { r: 1.0 };
        let seeds = vec![(Ball::unit(Point::origin(2)), InfectionType::One)];
        let mut h = History::new(&seeds, 1.0).unwrap();
        // nothing around the seed is infected yet
        assert!(!frozen_check(&h, InfectionType::One, &dirac, 1e-3).unwrap());
        let key = crate::env::PointKey {
            cell: [0, 0].into_iter().collect(),
            slab: 0,
            ordinal: 0,
        };
        h.push_event(Ball::new(Point::origin(2), 3.0), 0.5, InfectionType::Two, key);
        assert!(frozen_check(&h, InfectionType::One, &dirac, 1e-3).unwrap());
        assert!(!frozen_check(&h, InfectionType::Two, &dirac, 1e-3).unwrap());
        assert!(matches!(
            frozen_check(&h, InfectionType::One, &RadiusLaw::Exponential { beta: 1.0 }, 1e-3),
            Err(GrowthError::Unsupported(_))
        ));
    }

    #[test]
    fn outcomes_resolve_and_are_monotone() {
        for s in 0..6 {
            let mut c = cfg(vec![3.0, 5.0, 7.0]);
            c.env.seed = s;
            let env = PoissonEnv::new(c.env.clone()).unwrap();
            let (o, h) = run_compete_with_history(&env, &c).unwrap();
            assert!(!o.censored(), "seed {s} censored: {:?}", o.stop);
            let coexist: Vec<bool> = o.outcomes().iter().map(|&x| x == KOutcome::Coexist).collect();
            assert!(coexist.windows(2).all(|w| w[0] >= w[1]), "seed {s}: {coexist:?}");
            for i in 0..2 {
                let times: Vec<f64> = o.exits[i].iter().flatten().copied().collect();
                assert!(times.windows(2).all(|w| w[0] <= w[1]));
            }
            assert!(frozen_sound(&h, &o, c.delta));
        }
    }

    #[test]
    fn table_needs_enough_replications() {
        assert!(estimate_coexistence(&cfg(vec![5.0]), 10, 0.95).is_err());
    }

    #[test]
    fn bad_grid_rejected() {
        let env = ListEnv::<f64>::empty(2, 1.0);
        assert!(run_compete(&env, &cfg(vec![5.0, 5.0])).is_err());
        assert!(run_compete(&env, &cfg(vec![])).is_err());
    }
}
