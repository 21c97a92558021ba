//! Marked Poisson environment on space × relative time.
//!
//! Space is tiled by cubes of edge `cell_edge`, relative time by slabs of
//! height `slab_height`. The points of one (cell, slab) block are a pure
//! function of `(seed, cell, slab)`: a ChaCha8 key is derived from the triple,
//! stream 0 yields the Poisson count, and stream `i + 1` yields the attributes
//! of the `i`-th point. Two simulations sharing a config therefore see the
//! same points wherever their queries overlap, regardless of query order.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Open01, Poisson};
use rustc_hash::FxHashMap;

use crate::error::{GrowthError, Result};
use crate::geom::{cell_of, CellKey, Point};
use crate::scalar::Real;

/// Outburst radius distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadiusLaw {
    Dirac { r: f64 },
    /// Uniform on `(a, b]`.
    UniformHalfOpen { a: f64, b: f64 },
    Exponential { beta: f64 },
    /// Exponential with rate `beta` conditioned on `R ≤ cap`.
    TruncatedExponential { beta: f64, cap: f64 },
}

/// Analytic properties of a radius law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LawReport {
    /// `E[exp(θR)] < ∞` for some `θ > 0`.
    pub eq1_satisfied: bool,
    /// `P(R ≤ ε) > 0` for every `ε > 0`.
    pub small_support: bool,
    /// Supremum of the support (`f64::INFINITY` when unbounded).
    pub radius_bound: f64,
    /// Supremum of the `θ` with a finite exponential moment.
    pub moment_abscissa: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(GrowthError::Parameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl RadiusLaw {
    pub fn validate(&self) -> Result<LawReport> {
        match *self {
            RadiusLaw::Dirac { r } => {
                positive("r", r)?;
                Ok(LawReport {
                    eq1_satisfied: true,
                    small_support: false,
                    radius_bound: r,
                    moment_abscissa: f64::INFINITY,
                })
            }
            RadiusLaw::UniformHalfOpen { a, b } => {
                if !(a >= 0.0 && a.is_finite()) {
                    return Err(GrowthError::Parameter(format!(
                        "a must be non-negative, got {a}"
                    )));
                }
                positive("b", b)?;
                if !(b > a) {
                    return Err(GrowthError::Parameter(format!(
                        "b must exceed a, got a = {a}, b = {b}"
                    )));
                }
                Ok(LawReport {
                    eq1_satisfied: true,
                    small_support: a == 0.0,
                    radius_bound: b,
                    moment_abscissa: f64::INFINITY,
                })
            }
            RadiusLaw::Exponential { beta } => {
                positive("beta", beta)?;
                Ok(LawReport {
                    eq1_satisfied: true,
                    small_support: true,
                    radius_bound: f64::INFINITY,
                    moment_abscissa: beta,
                })
            }
            RadiusLaw::TruncatedExponential { beta, cap } => {
                positive("beta", beta)?;
                positive("cap", cap)?;
                Ok(LawReport {
                    eq1_satisfied: true,
                    small_support: true,
                    radius_bound: cap,
                    moment_abscissa: f64::INFINITY,
                })
            }
        }
    }

    /// Supremum of the support.
    pub fn radius_bound(&self) -> f64 {
        match *self {
            RadiusLaw::Dirac { r } => r,
            RadiusLaw::UniformHalfOpen { b, .. } => b,
            RadiusLaw::Exponential { .. } => f64::INFINITY,
            RadiusLaw::TruncatedExponential { cap, .. } => cap,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            RadiusLaw::Dirac { r } => r,
            RadiusLaw::UniformHalfOpen { a, b } => 0.5 * (a + b),
            RadiusLaw::Exponential { beta } => 1.0 / beta,
            RadiusLaw::TruncatedExponential { beta, cap } => {
                let tail = (-beta * cap).exp();
                1.0 / beta - cap * tail / (1.0 - tail)
            }
        }
    }

    /// Inverse-CDF draw from `u ∈ (0, 1)`; always strictly positive.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            RadiusLaw::Dirac { r } => r,
            RadiusLaw::UniformHalfOpen { a, b } => b - u * (b - a),
            RadiusLaw::Exponential { beta } => -(u.ln()) / beta,
            RadiusLaw::TruncatedExponential { beta, cap } => {
                let mass = -(-beta * cap).exp_m1();
                -(-u * mass).ln_1p() / beta
            }
        }
    }

    pub fn cdf(&self, r: f64) -> f64 {
        match *self {
            RadiusLaw::Dirac { r: at } => (r >= at) as u8 as f64,
            RadiusLaw::UniformHalfOpen { a, b } => ((r - a) / (b - a)).clamp(0.0, 1.0),
            RadiusLaw::Exponential { beta } => {
                if r <= 0.0 {
                    0.0
                } else {
                    -(-beta * r).exp_m1()
                }
            }
            RadiusLaw::TruncatedExponential { beta, cap } => {
                if r <= 0.0 {
                    0.0
                } else if r >= cap {
                    1.0
                } else {
                    (-beta * r).exp_m1() / (-beta * cap).exp_m1()
                }
            }
        }
    }
}

impl fmt::Display for RadiusLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            RadiusLaw::Dirac { r } => write!(f, "dirac(r={r})"),
            RadiusLaw::UniformHalfOpen { a, b } => write!(f, "uniform(a={a},b={b})"),
            RadiusLaw::Exponential { beta } => write!(f, "exponential(beta={beta})"),
            RadiusLaw::TruncatedExponential { beta, cap } => {
                write!(f, "truncexp(beta={beta},cap={cap})")
            }
        }
    }
}

pub fn validate_law(law: &RadiusLaw) -> Result<LawReport> {
    law.validate()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvConfig {
    pub dim: usize,
    /// Space-time intensity of the environment.
    pub rate: f64,
    pub seed: u64,
    pub cell_edge: f64,
    pub slab_height: f64,
    pub law: RadiusLaw,
}

impl EnvConfig {
    pub fn new(dim: usize, rate: f64, seed: u64, law: RadiusLaw) -> Self {
        EnvConfig {
            dim,
            rate,
            seed,
            cell_edge: 1.0,
            slab_height: 1.0,
            law,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        EnvConfig {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<LawReport> {
        if self.dim == 0 {
            return Err(GrowthError::Parameter("dimension must be at least 1".into()));
        }
        positive("rate", self.rate)?;
        positive("cell edge", self.cell_edge)?;
        positive("slab height", self.slab_height)?;
        self.law.validate()
    }
}

/// Identifies a point of the environment.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointKey {
    pub cell: CellKey,
    pub slab: u32,
    pub ordinal: u32,
}

impl fmt::Display for PointKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.cell.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "@{}#{}", self.slab, self.ordinal)
    }
}

impl std::str::FromStr for PointKey {
    type Err = GrowthError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || GrowthError::Parameter(format!("malformed point key {s:?}"));
        let (cell, rest) = s.split_once('@').ok_or_else(bad)?;
        let (slab, ordinal) = rest.split_once('#').ok_or_else(bad)?;
        let cell = cell
            .split('/')
            .map(|c| c.parse::<i32>().map_err(|_| bad()))
            .collect::<Result<CellKey>>()?;
        Ok(PointKey {
            cell,
            slab: slab.parse().map_err(|_| bad())?,
            ordinal: ordinal.parse().map_err(|_| bad())?,
        })
    }
}

/// One space × relative-time Poisson point with its radius mark.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkedPoint<T> {
    pub location: Point<T>,
    /// Time after the location's infection at which the outburst fires.
    pub delay: T,
    pub radius: T,
    /// Uniform on `[0, 1)`, consumed by rate thinning.
    pub thinning: f64,
    pub key: PointKey,
}

/// Source of marked points, queried block by block.
pub trait Environment<T: Real>: Sync {
    fn dim(&self) -> usize;

    /// Space-time intensity; the maximal outburst rate any type may use.
    fn rate(&self) -> f64;

    fn cell_edge(&self) -> T;

    fn slab_height(&self) -> T;

    /// Points of `cell × [slab·h, (slab+1)·h)`, ordered by ordinal.
    fn points_in(&self, cell: &[i32], slab: u32) -> Vec<MarkedPoint<T>>;
}

const fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// ChaCha8 key for one (seed, cell, slab) block.
pub fn block_key(seed: u64, cell: &[i32], slab: u32) -> [u8; 32] {
    let mut h = splitmix64(seed ^ 0x6a09_e667_f3bc_c908);
    h = splitmix64(h ^ cell.len() as u64);
    for &c in cell {
        h = splitmix64(h ^ (c as u32 as u64));
    }
    h = splitmix64(h ^ ((slab as u64) << 32 | 0x5bd1));
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        h = splitmix64(h);
        chunk.copy_from_slice(&h.to_le_bytes());
    }
    key
}

/// The homogeneous marked Poisson environment of an [`EnvConfig`].
#[derive(Clone, Debug)]
pub struct PoissonEnv {
    cfg: EnvConfig,
    count: Poisson<f64>,
}

impl PoissonEnv {
    pub fn new(cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        let mean = cfg.rate * cfg.cell_edge.powi(cfg.dim as i32) * cfg.slab_height;
        let count = Poisson::new(mean)
            .map_err(|e| GrowthError::Parameter(format!("poisson mean {mean}: {e}")))?;
        Ok(PoissonEnv { cfg, count })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    /// Expected number of points per block.
    pub fn block_mean(&self) -> f64 {
        self.cfg.rate * self.cfg.cell_edge.powi(self.cfg.dim as i32) * self.cfg.slab_height
    }

    pub fn count_in(&self, cell: &[i32], slab: u32) -> u32 {
        let mut rng = ChaCha8Rng::from_seed(block_key(self.cfg.seed, cell, slab));
        self.count.sample(&mut rng) as u32
    }
}

fn inside_cell(lo: f64, u: f64, edge: f64) -> f64 {
    let v = lo + u * edge;
    // rounding may land on the upper face, which belongs to the next cell
    if v >= lo + edge {
        (lo + edge).next_down()
    } else {
        v
    }
}

impl<T: Real> Environment<T> for PoissonEnv {
    fn dim(&self) -> usize {
        self.cfg.dim
    }

    fn rate(&self) -> f64 {
        self.cfg.rate
    }

    fn cell_edge(&self) -> T {
        T::of(self.cfg.cell_edge)
    }

    fn slab_height(&self) -> T {
        T::of(self.cfg.slab_height)
    }

    fn points_in(&self, cell: &[i32], slab: u32) -> Vec<MarkedPoint<T>> {
        let mut rng = ChaCha8Rng::from_seed(block_key(self.cfg.seed, cell, slab));
        let n = self.count.sample(&mut rng) as u32;
        let edge = self.cfg.cell_edge;
        let h = self.cfg.slab_height;
        (0..n)
            .map(|ordinal| {
                rng.set_stream(ordinal as u64 + 1);
                rng.set_word_pos(0);
                let location = Point::new(
                    cell.iter()
                        .map(|&k| T::of(inside_cell(k as f64 * edge, rng.gen(), edge))),
                );
                let delay = T::of(inside_cell(slab as f64 * h, rng.gen(), h));
                let u: f64 = Open01.sample(&mut rng);
                let radius = T::of(self.cfg.law.quantile(u));
                let thinning: f64 = rng.gen();
                MarkedPoint {
                    location,
                    delay,
                    radius,
                    thinning,
                    key: PointKey {
                        cell: cell.iter().copied().collect(),
                        slab,
                        ordinal,
                    },
                }
            })
            .collect()
    }
}

/// Environment holding an explicit list of points; used to build
/// deterministic scenarios and test doubles.
#[derive(Clone, Debug)]
pub struct ListEnv<T> {
    dim: usize,
    rate: f64,
    edge: T,
    height: T,
    blocks: FxHashMap<(CellKey, u32), Vec<MarkedPoint<T>>>,
}

impl<T: Real> ListEnv<T> {
    pub fn empty(dim: usize, rate: f64) -> Self {
        ListEnv {
            dim,
            rate,
            edge: T::one(),
            height: T::one(),
            blocks: FxHashMap::default(),
        }
    }

    /// Adds a point that is never thinned; returns its key.
    pub fn push(&mut self, location: Point<T>, delay: T, radius: T) -> PointKey {
        self.push_with_thinning(location, delay, radius, 0.0)
    }

    pub fn push_with_thinning(
        &mut self,
        location: Point<T>,
        delay: T,
        radius: T,
        thinning: f64,
    ) -> PointKey {
        assert_eq!(location.dim(), self.dim, "point dimension");
        assert!(delay >= T::zero() && radius > T::zero());
        let cell = cell_of(location.coords(), self.edge);
        let slab = (delay / self.height).floor().as_f64() as u32;
        let block = self.blocks.entry((cell.clone(), slab)).or_default();
        let key = PointKey {
            cell,
            slab,
            ordinal: block.len() as u32,
        };
        block.push(MarkedPoint {
            location,
            delay,
            radius,
            thinning,
            key: key.clone(),
        });
        key
    }
}

impl<T: Real> Environment<T> for ListEnv<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn rate(&self) -> f64 {
        self.rate
    }

    fn cell_edge(&self) -> T {
        self.edge
    }

    fn slab_height(&self) -> T {
        self.height
    }

    fn points_in(&self, cell: &[i32], slab: u32) -> Vec<MarkedPoint<T>> {
        self.blocks
            .get(&(cell.iter().copied().collect(), slab))
            .cloned()
            .unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{chi_square_gof, ks_one_sample};

    fn unit_cfg(seed: u64) -> EnvConfig {
        EnvConfig::new(2, 1.0, seed, RadiusLaw::UniformHalfOpen { a: 0.0, b: 1.0 })
    }

    #[test]
    fn law_reports() {
        let r = validate_law(&RadiusLaw::Dirac { r: 1.0 }).unwrap();
        assert!(r.eq1_satisfied && !r.small_support);
        assert_eq!(r.radius_bound, 1.0);

        let r = validate_law(&RadiusLaw::UniformHalfOpen { a: 0.0, b: 1.0 }).unwrap();
        assert!(r.eq1_satisfied && r.small_support);
        assert_eq!(r.radius_bound, 1.0);

        let r = validate_law(&RadiusLaw::UniformHalfOpen { a: 0.3, b: 1.0 }).unwrap();
        assert!(!r.small_support);

        let r = validate_law(&RadiusLaw::Exponential { beta: 2.0 }).unwrap();
        assert!(r.eq1_satisfied && r.small_support);
        assert!(r.radius_bound.is_infinite());
        assert_eq!(r.moment_abscissa, 2.0);

        let r = validate_law(&RadiusLaw::TruncatedExponential { beta: 1.0, cap: 2.0 }).unwrap();
        assert!(r.small_support);
        assert_eq!(r.radius_bound, 2.0);
    }

    #[test]
    fn exponential_moment_by_quadrature() {
        // E[e^{θR}] for Exponential(2) is 2 / (2 - θ) below the abscissa
        let beta = 2.0;
        for theta in [0.5, 1.0, 1.9] {
            let n = 400_000;
            let upper = 40.0 / (beta - theta);
            let dx = upper / n as f64;
            let integral: f64 = (0..n)
                .map(|i| {
                    let x = (i as f64 + 0.5) * dx;
                    beta * (-(beta - theta) * x).exp() * dx
                })
                .sum();
            assert!((integral - beta / (beta - theta)).abs() < 1e-3 * beta / (beta - theta));
        }
    }

    #[test]
    fn bad_parameters_rejected() {
        assert!(validate_law(&RadiusLaw::Dirac { r: 0.0 }).is_err());
        assert!(validate_law(&RadiusLaw::Dirac { r: -1.0 }).is_err());
        assert!(validate_law(&RadiusLaw::UniformHalfOpen { a: 1.0, b: 1.0 }).is_err());
        assert!(validate_law(&RadiusLaw::UniformHalfOpen { a: -0.1, b: 1.0 }).is_err());
        assert!(validate_law(&RadiusLaw::Exponential { beta: 0.0 }).is_err());
        assert!(validate_law(&RadiusLaw::TruncatedExponential { beta: 1.0, cap: 0.0 }).is_err());
        let mut cfg = unit_cfg(0);
        cfg.rate = 0.0;
        assert!(PoissonEnv::new(cfg).is_err());
    }

    #[test]
    fn quantiles_stay_in_support() {
        let laws = [
            RadiusLaw::Dirac { r: 1.0 },
            RadiusLaw::UniformHalfOpen { a: 0.0, b: 1.0 },
            RadiusLaw::Exponential { beta: 1.0 },
            RadiusLaw::TruncatedExponential { beta: 1.0, cap: 1.5 },
        ];
        for law in laws {
            for u in [1e-300, 1e-9, 0.3, 0.999_999, 1.0 - f64::EPSILON] {
                let r = law.quantile(u);
                assert!(r > 0.0 && r <= law.radius_bound(), "{law} at {u}: {r}");
            }
        }
    }

    #[test]
    fn dirac_marks_everywhere() {
        let env = PoissonEnv::new(EnvConfig::new(2, 3.0, 9, RadiusLaw::Dirac { r: 1.0 })).unwrap();
        for cx in -3..3 {
            for slab in 0..3 {
                let pts: Vec<MarkedPoint<f64>> = env.points_in(&[cx, 2], slab);
                assert!(pts.iter().all(|p| p.radius == 1.0));
            }
        }
    }

    #[test]
    fn blocks_are_reproducible_and_local() {
        let env = PoissonEnv::new(unit_cfg(42)).unwrap();
        let a: Vec<MarkedPoint<f64>> = env.points_in(&[1, -2], 3);
        // unrelated queries in between do not disturb the block
        for k in 0..20 {
            let _: Vec<MarkedPoint<f64>> = env.points_in(&[k, k], 0);
        }
        let b: Vec<MarkedPoint<f64>> = env.points_in(&[1, -2], 3);
        assert_eq!(a, b);
        let other = PoissonEnv::new(unit_cfg(43)).unwrap();
        let c: Vec<MarkedPoint<f64>> = other.points_in(&[1, -2], 3);
        assert_ne!(a, c);
    }

    #[test]
    fn points_lie_in_their_block() {
        let mut cfg = unit_cfg(5);
        cfg.cell_edge = 0.7;
        cfg.slab_height = 0.4;
        cfg.rate = 20.0;
        let env = PoissonEnv::new(cfg).unwrap();
        let mut keys = std::collections::HashSet::new();
        for cx in -2..2 {
            for cy in -2..2 {
                for slab in 0..4 {
                    let pts: Vec<MarkedPoint<f64>> = env.points_in(&[cx, cy], slab);
                    for p in pts {
                        assert_eq!(cell_of(p.location.coords(), 0.7).as_slice(), &[cx, cy]);
                        assert!(p.delay >= slab as f64 * 0.4 && p.delay < (slab + 1) as f64 * 0.4);
                        assert!(p.radius > 0.0 && p.radius <= 1.0);
                        assert!(keys.insert(p.key));
                    }
                }
            }
        }
    }

    #[test]
    fn block_counts_are_poisson() {
        let env = PoissonEnv::new(unit_cfg(7)).unwrap();
        let n = 100_000;
        let counts: Vec<f64> = (0..n)
            .map(|i| env.count_in(&[i % 317 - 158, i / 317], (i % 5) as u32) as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        // mean 1, standard error sqrt(1/n)
        assert!((mean - 1.0).abs() < 3.0 * (1.0 / n as f64).sqrt(), "mean {mean}");
        // the sample variance of Poisson(1) has variance (μ + 2μ²)/n ≈ 3/n
        assert!((var - 1.0).abs() < 3.0 * (3.0 / n as f64).sqrt(), "var {var}");
    }

    #[test]
    fn block_counts_fit_poisson_law() {
        let env = PoissonEnv::new(unit_cfg(8)).unwrap();
        let n = 10_000;
        let mut observed = [0.0f64; 6];
        for i in 0..n {
            let c = env.count_in(&[i, -i], 0) as usize;
            observed[c.min(5)] += 1.0;
        }
        let mut expected = [0.0f64; 6];
        let mut tail = 1.0;
        let mut pk = (-1.0f64).exp();
        for (k, e) in expected.iter_mut().enumerate().take(5) {
            *e = pk * n as f64;
            tail -= pk;
            pk /= (k + 1) as f64;
        }
        expected[5] = tail * n as f64;
        let test = chi_square_gof(&observed, &expected, 0).unwrap();
        assert!(test.p_value > 0.001, "chi-square p = {}", test.p_value);
    }

    #[test]
    fn locations_are_uniform() {
        let env = PoissonEnv::new(unit_cfg(9)).unwrap();
        let mut xs = Vec::new();
        let mut delays = Vec::new();
        let mut i = 0;
        while xs.len() < 20_000 {
            let pts: Vec<MarkedPoint<f64>> = env.points_in(&[i, 0], 0);
            for p in pts {
                xs.push(p.location[0] - i as f64);
                xs.push(p.location[1]);
                delays.push(p.delay);
            }
            i += 1;
        }
        let uniform = |x: f64| x.clamp(0.0, 1.0);
        assert!(ks_one_sample(&xs, uniform).unwrap().p_value > 0.001);
        assert!(ks_one_sample(&delays, uniform).unwrap().p_value > 0.001);
    }

    #[test]
    fn radii_follow_law() {
        let law = RadiusLaw::TruncatedExponential { beta: 1.5, cap: 2.0 };
        let env = PoissonEnv::new(EnvConfig::new(2, 5.0, 10, law)).unwrap();
        let mut radii = Vec::new();
        let mut i = 0;
        while radii.len() < 5_000 {
            let pts: Vec<MarkedPoint<f64>> = env.points_in(&[0, i], 1);
            radii.extend(pts.iter().map(|p| p.radius));
            i += 1;
        }
        assert!(ks_one_sample(&radii, |r| law.cdf(r)).unwrap().p_value > 0.001);
    }

    #[test]
    fn key_text_round_trip() {
        let k = PointKey {
            cell: [3, -7, 0].into_iter().collect(),
            slab: 12,
            ordinal: 4,
        };
        assert_eq!(k.to_string().parse::<PointKey>().unwrap(), k);
        assert!("nonsense".parse::<PointKey>().is_err());
    }

    #[test]
    fn list_env_blocks() {
        let mut env = ListEnv::<f64>::empty(2, 1.0);
        let k = env.push(Point::new([0.5, -0.5]), 1.3, 0.5);
        assert_eq!(k.cell.as_slice(), &[0, -1]);
        assert_eq!(k.slab, 1);
        assert_eq!(env.points_in(&[0, -1], 1).len(), 1);
        assert!(env.points_in(&[0, -1], 0).is_empty());
    }
}
