//! Passage times `T_{x,y}`: the time at which `B(y,1)` is fully infected in a
//! one-type process started from `B(x,1)`, plus the experiments built on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{run_one_type, Budget, Control, Observer, StopReason};
use crate::env::{EnvConfig, Environment, PoissonEnv};
use crate::error::{GrowthError, Result};
use crate::geom::{find_uncovered, sample_in_ball, AxisBox, Ball, Coverage, Point, SearchDomain};
use crate::history::{History, Provenance};
use crate::scalar::Real;
use crate::stats::{MeanSe, TestResult};

pub const DEFAULT_DELTA: f64 = 1.0e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct PassageResult<T> {
    pub t: T,
    /// Outbursts appended up to and including the covering one.
    pub events_used: usize,
    pub delta: T,
    pub censored: bool,
    pub stop: StopReason,
}

#[derive(Clone, Debug)]
struct Target<T> {
    ball: Ball<T>,
    hit: Option<(T, usize)>,
    // cell of the last witness; the verdict can only change once a new ball
    // reaches it
    witness: Option<AxisBox<T>>,
}

/// Watches several unit-ball targets at once.
#[derive(Clone, Debug)]
pub struct PassageObserver<T> {
    targets: Vec<Target<T>>,
    delta: T,
    /// Full coverage searches performed.
    pub searches: u64,
}

impl<T: Real> PassageObserver<T> {
    pub fn new(targets: impl IntoIterator<Item = Ball<T>>, delta: T) -> Self {
        PassageObserver {
            targets: targets
                .into_iter()
                .map(|ball| Target {
                    ball,
                    hit: None,
                    witness: None,
                })
                .collect(),
            delta,
            searches: 0,
        }
    }

    /// `(time, events used)` per target, `None` if never covered.
    pub fn hits(&self) -> Vec<Option<(T, usize)>> {
        self.targets.iter().map(|t| t.hit).collect()
    }

    fn check(&mut self, h: &History<T>, new_ball: Option<&Ball<T>>, birth: T) {
        let used = h.events().len();
        for tg in self.targets.iter_mut().filter(|t| t.hit.is_none()) {
            if let Some(b) = new_ball {
                if !tg.ball.intersects(b) {
                    continue;
                }
                if let Some(cell) = &tg.witness {
                    if !cell.intersects_ball(b) {
                        continue;
                    }
                }
            }
            self.searches += 1;
            match find_uncovered(&SearchDomain::ball(tg.ball.clone()), h.index(), self.delta) {
                Coverage::Covered => tg.hit = Some((birth, used)),
                Coverage::Witness(w) => tg.witness = Some(w.cell),
            }
        }
    }

    fn done(&self) -> bool {
        self.targets.iter().all(|t| t.hit.is_some())
    }
}

impl<T: Real> Observer<T> for PassageObserver<T> {
    fn on_start(&mut self, h: &History<T>) -> Control {
        self.check(h, None, T::zero());
        if self.done() {
            Control::Stop
        } else {
            Control::Continue
        }
    }

    fn on_event(&mut self, h: &History<T>, index: usize) -> Control {
        let g = &h.balls()[index];
        let (ball, birth) = (g.ball.clone(), g.birth);
        self.check(h, Some(&ball), birth);
        if self.done() {
            Control::Stop
        } else {
            Control::Continue
        }
    }
}

fn validate_delta<T: Real>(delta: T) -> Result<()> {
    if !(delta > T::zero()) || !delta.is_finite() {
        return Err(GrowthError::Parameter(format!("delta must be positive, got {delta}")));
    }
    Ok(())
}

/// Passage times from `B(x,1)` to each `B(y,1)` in one run.
pub fn passage_times<T, E>(
    env: &E,
    x: &Point<T>,
    ys: &[Point<T>],
    delta: T,
    budget: &Budget<T>,
) -> Result<(Vec<PassageResult<T>>, History<T>)>
where
    T: Real,
    E: Environment<T> + ?Sized,
{
    validate_delta(delta)?;
    let mut obs = PassageObserver::new(ys.iter().map(|y| Ball::unit(y.clone())), delta);
    let out = run_one_type(env, &[Ball::unit(x.clone())], &mut obs, budget)?;
    let results = obs
        .hits()
        .into_iter()
        .map(|hit| match hit {
            Some((t, events_used)) => PassageResult {
                t,
                events_used,
                delta,
                censored: false,
                stop: out.stop,
            },
            None => PassageResult {
                t: out.history.clock(),
                events_used: out.history.events().len(),
                delta,
                censored: true,
                stop: out.stop,
            },
        })
        .collect();
    Ok((results, out.history))
}

pub fn passage_time<T, E>(
    env: &E,
    x: &Point<T>,
    y: &Point<T>,
    delta: T,
    budget: &Budget<T>,
) -> Result<PassageResult<T>>
where
    T: Real,
    E: Environment<T> + ?Sized,
{
    let (mut r, _) = passage_times(env, x, std::slice::from_ref(y), delta, budget)?;
    Ok(r.pop().expect("one target"))
}

/// Budget sized for a passage over distance `dist`.
pub fn passage_budget<T: Real>(dist: f64) -> Budget<T> {
    Budget::new(20_000_000, T::of(200.0 + 50.0 * dist)).with_reach(T::of(4.0 * dist + 20.0))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InclusionAudit {
    pub events_checked: usize,
    pub event_failures: usize,
    pub probes: usize,
    pub probe_failures: usize,
}

impl InclusionAudit {
    pub fn clean(&self) -> bool {
        self.event_failures == 0 && self.probe_failures == 0
    }
}

#[derive(Clone, Debug)]
pub struct Triple<T> {
    pub txy: T,
    pub txz: T,
    pub tzy: T,
    pub censored: bool,
    /// Allowed excess of `txy` over `txz + tzy` due to the coverage tolerance.
    pub slack: T,
    pub audit: InclusionAudit,
}

impl<T: Real> Triple<T> {
    pub fn violation(&self) -> bool {
        !self.censored && self.txy > self.txz + self.tzy + self.slack
    }
}

fn time_tol<T: Real>(t: T) -> T {
    T::of(1.0e-9) * (T::one() + t.abs())
}

/// `T_{x,y}`, `T_{x,z}`, `T_{z,y}` on one shared environment, with an audit
/// of the pathwise inclusion of the `z`-started process, shifted by
/// `T_{x,z}`, in the `x`-started one.
pub fn coupled_triple<T, E>(
    env: &E,
    x: &Point<T>,
    z: &Point<T>,
    y: &Point<T>,
    delta: T,
    budget: &Budget<T>,
    probes: usize,
    probe_seed: u64,
) -> Result<Triple<T>>
where
    T: Real,
    E: Environment<T> + ?Sized,
{
    validate_delta(delta)?;
    let (zr, zh) = passage_times(env, z, std::slice::from_ref(y), delta, budget)?;
    let tzy = zr[0].clone();
    let mut obs = PassageObserver::new([Ball::unit(z.clone()), Ball::unit(y.clone())], delta);
    let mut horizon = None;
    if !tzy.censored {
        // hit time of B(z,1) is unknown up front; keep going until the x-run
        // clock passes every shifted z-run event
        horizon = Some(tzy.t);
    }
    let xs = [Ball::unit(x.clone())];
    let mut shifted = ShiftedStop {
        inner: &mut obs,
        extra: horizon,
    };
    let xo = run_one_type(env, &xs, &mut shifted, budget)?;
    let hits = obs.hits();
    let (txz, txy) = match (hits[0], hits[1]) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => {
            return Ok(Triple {
                txy: xo.history.clock(),
                txz: xo.history.clock(),
                tzy: tzy.t,
                censored: true,
                slack: T::zero(),
                audit: InclusionAudit::default(),
            })
        }
    };
    if tzy.censored {
        return Ok(Triple {
            txy,
            txz,
            tzy: tzy.t,
            censored: true,
            slack: T::zero(),
            audit: InclusionAudit::default(),
        });
    }
    let xh = &xo.history;
    let mut audit = InclusionAudit::default();
    // every z-run outburst must occur in the x-run no later than shifted
    let mut x_birth = rustc_hash::FxHashMap::default();
    for g in xh.events() {
        if let Provenance::Point(k) = &g.provenance {
            x_birth.insert(k.clone(), g.birth);
        }
    }
    for g in zh.events() {
        let Provenance::Point(k) = &g.provenance else { continue };
        let due = txz + g.birth;
        audit.events_checked += 1;
        match x_birth.get(k) {
            Some(&b) if b <= due + time_tol(due) => {}
            _ => audit.event_failures += 1,
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(probe_seed);
    let zb = zh.balls();
    for _ in 0..probes {
        let t = T::of(rng.gen::<f64>()) * tzy.t;
        let alive = zh.count_at(t);
        let g = &zb[rng.gen_range(0..alive)];
        let p = sample_in_ball(&g.ball, &mut rng);
        audit.probes += 1;
        let due = txz + t;
        if !xh.classify(p.coords(), due + time_tol(due)).is_infected() {
            audit.probe_failures += 1;
        }
    }
    let span = x.dist(z) + z.dist(y);
    let total = txz + tzy.t;
    let speed = if span > T::zero() && total > T::zero() {
        span / total
    } else {
        T::one()
    };
    Ok(Triple {
        txy,
        txz,
        tzy: tzy.t,
        censored: false,
        slack: T::of(10.0) * delta / speed,
        audit,
    })
}

// Runs `inner` and additionally waits until an outburst born after the hit
// time of the first target plus `extra`.
struct ShiftedStop<'a, T> {
    inner: &'a mut PassageObserver<T>,
    extra: Option<T>,
}

impl<T: Real> Observer<T> for ShiftedStop<'_, T> {
    fn on_start(&mut self, h: &History<T>) -> Control {
        self.inner.check(h, None, T::zero());
        self.decide(T::zero())
    }


    fn on_event(&mut self, h: &History<T>, index: usize) -> Control {
        let g = &h.balls()[index];
        let (ball, birth) = (g.ball.clone(), g.birth);
        self.inner.check(h, Some(&ball), birth);
        self.decide(birth)
    }
}

impl<T: Real> ShiftedStop<'_, T> {
    fn decide(&self, birth: T) -> Control {
        if !self.inner.done() {
            return Control::Continue;
        }
        match (self.extra, self.inner.targets[0].hit) {
            (Some(extra), Some((t0, _))) if birth <= t0 + extra => Control::Continue,
            _ => Control::Stop,
        }
    }
}

/// Seed of replication `rep` in stream `stream`, so different sweeps of one
/// experiment use unrelated environments.
pub fn replication_seed(seed: u64, stream: u64, rep: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(rep.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Passage samples `T_{0, n·e₁}` for replications `0..reps`, in order.
pub fn passage_sample(
    cfg: &EnvConfig,
    n: f64,
    reps: usize,
    delta: f64,
    stream: u64,
) -> Result<Vec<PassageResult<f64>>> {
    let x = Point::origin(cfg.dim);
    let y = Point::on_axis(cfg.dim, n);
    let budget = passage_budget(n);
    (0..reps as u64)
        .map(|r| {
            let env = PoissonEnv::new(cfg.with_seed(replication_seed(cfg.seed, stream, r)))?;
            passage_time(&env, &x, &y, delta, &budget)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct MuRow {
    pub n: f64,
    pub per_unit: MeanSe,
    pub censored: usize,
    pub interval: (f64, f64),
}

#[derive(Clone, Debug)]
pub struct MuEstimate {
    pub rows: Vec<MuRow>,
    pub mu_hat: f64,
    pub confidence: f64,
    /// Successive-n intervals all overlap.
    pub overlapping: bool,
    /// More than 5% of some n's replications were censored.
    pub unreliable: bool,
}

/// Builds the estimate from per-n samples of `T_{0,n·e₁}`.
pub fn mu_from_samples(
    rate: f64,
    samples: &[(f64, Vec<PassageResult<f64>>)],
    confidence: f64,
) -> Result<MuEstimate> {
    if samples.len() < 2 {
        return Err(GrowthError::Parameter("need at least two separations".into()));
    }
    let mut rows = Vec::new();
    let mut unreliable = false;
    for (n, res) in samples {
        if res.len() < 30 {
            return Err(GrowthError::Parameter(format!(
                "need at least 30 replications per separation, got {}",
                res.len()
            )));
        }
        let kept: Vec<f64> = res.iter().filter(|r| !r.censored).map(|r| r.t / n).collect();
        let censored = res.len() - kept.len();
        unreliable |= censored as f64 > 0.05 * res.len() as f64;
        if kept.len() < 2 {
            return Err(GrowthError::Parameter(format!("all replications censored at n = {n}")));
        }
        let per_unit = MeanSe::of(&kept);
        let interval = per_unit.interval(confidence)?;
        rows.push(MuRow {
            n: *n,
            per_unit,
            censored,
            interval,
        });
    }
    let overlapping = rows
        .windows(2)
        .all(|w| w[0].interval.0 <= w[1].interval.1 && w[1].interval.0 <= w[0].interval.1);
    let largest = rows
        .iter()
        .max_by(|a, b| a.n.total_cmp(&b.n))
        .expect("nonempty");
    Ok(MuEstimate {
        mu_hat: rate * largest.per_unit.mean,
        rows,
        confidence,
        overlapping,
        unreliable,
    })
}

pub fn estimate_mu(
    cfg: &EnvConfig,
    ns: &[f64],
    reps: usize,
    confidence: f64,
    delta: f64,
) -> Result<MuEstimate> {
    if ns.len() < 2 {
        return Err(GrowthError::Parameter("need at least two separations".into()));
    }
    if reps < 30 {
        return Err(GrowthError::Parameter(format!(
            "need at least 30 replications per separation, got {reps}"
        )));
    }
    let samples = ns
        .iter()
        .enumerate()
        .map(|(i, &n)| Ok((n, passage_sample(cfg, n, reps, delta, i as u64)?)))
        .collect::<Result<Vec<_>>>()?;
    mu_from_samples(cfg.rate, &samples, confidence)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiffConfig {
    pub n: u32,
    pub ms: Vec<u32>,
    pub epsilon: f64,
    pub reps: usize,
}

impl DiffConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.ms.is_empty() || self.ms.contains(&0) {
            return Err(GrowthError::Parameter("n and every m must be positive".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(GrowthError::Parameter(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if self.reps < 2 {
            return Err(GrowthError::Parameter("need at least two replications".into()));
        }
        Ok(())
    }
}

/// One replication of the difference experiment for a given `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffReplication {
    pub m: u32,
    pub seed: u64,
    /// `T_{n·e₁, −m·e₁}`
    pub from_n: f64,
    /// `T_{0, −m·e₁}`
    pub from_origin: f64,
    pub censored: bool,
}

#[derive(Clone, Debug)]
pub struct DiffRow {
    pub m: u32,
    pub difference: MeanSe,
    pub censored: usize,
}

/// One replication: both passage times on the same environment.
pub fn diff_replication(cfg: &EnvConfig, n: u32, m: u32, rep: u64, delta: f64) -> Result<DiffReplication> {
    let seed = replication_seed(cfg.seed, m as u64, rep);
    let env = PoissonEnv::new(cfg.with_seed(seed))?;
    let target = Point::on_axis(cfg.dim, -(m as f64));
    let budget = passage_budget((n + m) as f64);
    let a = passage_time(&env, &Point::on_axis(cfg.dim, n as f64), &target, delta, &budget)?;
    let b = passage_time(&env, &Point::origin(cfg.dim), &target, delta, &budget)?;
    Ok(DiffReplication {
        m,
        seed,
        from_n: a.t,
        from_origin: b.t,
        censored: a.censored || b.censored,
    })
}

pub fn diff_rows(reps: &[DiffReplication], ms: &[u32]) -> Vec<DiffRow> {
    ms.iter()
        .map(|&m| {
            let of_m: Vec<&DiffReplication> = reps.iter().filter(|r| r.m == m).collect();
            let d: Vec<f64> = of_m
                .iter()
                .filter(|r| !r.censored)
                .map(|r| r.from_n - r.from_origin)
                .collect();
            DiffRow {
                m,
                difference: MeanSe::of(&d),
                censored: of_m.len() - d.len(),
            }
        })
        .collect()
}

/// Whether some `m` has a difference at least `(1−ε)·n·μ̂` at the given
/// one-sided confidence: `mean + z·se ≥ (1−ε)·n·μ̂ / λ`.
pub fn diff_meets_bound(rows: &[DiffRow], n: u32, mu_hat: f64, rate: f64, epsilon: f64, confidence: f64) -> bool {
    let z = crate::stats::normal_quantile(confidence);
    let goal = (1.0 - epsilon) * n as f64 * mu_hat / rate;
    rows.iter()
        .any(|r| r.difference.n > 1 && r.difference.mean + z * r.difference.se >= goal)
}

/// Telescoping check: per replication, `T_{0,kn}` against the sum of the
/// increments `T_{0,in} − T_{0,(i−1)n}`, all read from one run with targets
/// `i·n·e₁`. Returns `(total estimate, increment sum)`.
pub fn telescoping(cfg: &EnvConfig, n: u32, k: u32, reps: usize, delta: f64) -> Result<(f64, f64)> {
    if k == 0 || n == 0 {
        return Err(GrowthError::Parameter("n and k must be positive".into()));
    }
    let targets: Vec<Point<f64>> = (1..=k).map(|i| Point::on_axis(cfg.dim, (i * n) as f64)).collect();
    let budget = passage_budget((k * n) as f64);
    let mut rows = Vec::new();
    for r in 0..reps as u64 {
        let env = PoissonEnv::new(cfg.with_seed(replication_seed(cfg.seed, 0x7e1e, r)))?;
        let (res, _) = passage_times(&env, &Point::origin(cfg.dim), &targets, delta, &budget)?;
        if res.iter().all(|p| !p.censored) {
            rows.push(res.iter().map(|p| p.t).collect::<Vec<f64>>());
        }
    }
    if rows.is_empty() {
        return Err(GrowthError::Parameter("every telescoping replication was censored".into()));
    }
    Ok(telescoping_from(&rows))
}

/// Total estimator and increment sum from per-replication cumulative times
/// `T_{0,n}, T_{0,2n}, …`.
pub fn telescoping_from(rows: &[Vec<f64>]) -> (f64, f64) {
    let r = rows.len() as f64;
    let k = rows[0].len();
    let total = rows.iter().map(|t| t[k - 1]).sum::<f64>() / r;
    let mut sum = 0.0;
    for i in 0..k {
        let inc = rows
            .iter()
            .map(|t| t[i] - if i == 0 { 0.0 } else { t[i - 1] })
            .sum::<f64>()
            / r;
        sum += inc;
    }
    (total, sum)
}

/// Two-sample KS between `T_{n·e₁, −m·e₁}` and `T_{0,(n+m)·e₁}` on
/// independent environments.
pub fn translation_check(cfg: &EnvConfig, n: u32, m: u32, reps: usize, delta: f64) -> Result<(TestResult, usize)> {
    let d = cfg.dim;
    let budget = passage_budget((n + m) as f64);
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut censored = 0;
    for r in 0..reps as u64 {
        let e1 = PoissonEnv::new(cfg.with_seed(replication_seed(cfg.seed, 0xa, r)))?;
        let e2 = PoissonEnv::new(cfg.with_seed(replication_seed(cfg.seed, 0xb, r)))?;
        let p = passage_time(&e1, &Point::on_axis(d, n as f64), &Point::on_axis(d, -(m as f64)), delta, &budget)?;
        let q = passage_time(&e2, &Point::origin(d), &Point::on_axis(d, (n + m) as f64), delta, &budget)?;
        for (res, out) in [(p, &mut a), (q, &mut b)] {
            if res.censored {
                censored += 1;
            } else {
                out.push(res.t);
            }
        }
    }
    Ok((crate::stats::ks_two_sample(&a, &b)?, censored))
}
