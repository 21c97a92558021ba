//! Points, closed balls, axis boxes and coverage of unions of balls.
//!
//! Coverage is decided by hierarchical subdivision of the search domain: a
//! cube is dropped when it misses the domain, accepted when it sits inside a
//! single ball of the region, and split otherwise until its edge is at most
//! `delta`. A `Covered` verdict is therefore exact, while an uncovered verdict
//! may be spurious within a `delta`-neighborhood of ball boundaries. All
//! membership tests compare squared distances.

use std::ops::Index;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, WeightedIndex};
use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::error::GrowthError;
use crate::scalar::Real;

pub type Coords<T> = SmallVec<[T; 4]>;

/// Integer grid coordinates of a cell.
pub type CellKey = SmallVec<[i32; 4]>;

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Point<T>(Coords<T>);

impl<T: Real> Point<T> {
    pub fn new(coords: impl IntoIterator<Item = T>) -> Self {
        Point(coords.into_iter().collect())
    }

    pub fn origin(dim: usize) -> Self {
        Point(smallvec::smallvec![T::zero(); dim])
    }

    /// `(v, 0, ..., 0)` in `dim` dimensions.
    pub fn on_axis(dim: usize, v: T) -> Self {
        let mut p = Self::origin(dim);
        p.0[0] = v;
        p
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[T] {
        &self.0
    }

    pub fn coords_mut(&mut self) -> &mut [T] {
        &mut self.0
    }

    pub fn dist2(&self, other: &Point<T>) -> T {
        dist2(&self.0, &other.0)
    }

    pub fn dist(&self, other: &Point<T>) -> T {
        self.dist2(other).sqrt()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|v| v.as_f64()).collect()
    }
}

impl<T> Index<usize> for Point<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T: Real> From<Vec<T>> for Point<T> {
    fn from(v: Vec<T>) -> Self {
        Point(v.into_iter().collect())
    }
}

pub(crate) fn dist2<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
}

/// Volume of the unit ball in `dim` dimensions.
pub fn unit_ball_volume(dim: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_d = V_{d-2} * 2π / d
    let mut v = if dim % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if dim % 2 == 0 { 2 } else { 3 };
    while k <= dim {
        v *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    v
}

/// Closed ball.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball<T> {
    pub center: Point<T>,
    pub radius: T,
}

impl<T: Real> Ball<T> {
    pub fn new(center: Point<T>, radius: T) -> Self {
        debug_assert!(radius > T::zero(), "ball radius must be positive");
        Ball { center, radius }
    }

    pub fn try_new(center: Point<T>, radius: T) -> Result<Self, GrowthError> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(GrowthError::Parameter(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Ball { center, radius })
    }

    pub fn unit(center: Point<T>) -> Self {
        Ball::new(center, T::one())
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn contains(&self, x: &[T]) -> bool {
        dist2(&self.center.0, x) <= self.radius * self.radius
    }

    /// `other ⊆ self`.
    pub fn contains_ball(&self, other: &Ball<T>) -> bool {
        if other.radius > self.radius {
            return false;
        }
        let slack = self.radius - other.radius;
        self.center.dist2(&other.center) <= slack * slack
    }

    pub fn intersects(&self, other: &Ball<T>) -> bool {
        let reach = self.radius + other.radius;
        self.center.dist2(&other.center) <= reach * reach
    }

    pub fn bbox(&self) -> AxisBox<T> {
        AxisBox {
            low: Point(self.center.0.iter().map(|&c| c - self.radius).collect()),
            high: Point(self.center.0.iter().map(|&c| c + self.radius).collect()),
        }
    }

    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.radius.as_f64().powi(self.dim() as i32)
    }

    /// Same center, radius grown by `by`.
    pub fn dilated(&self, by: T) -> Ball<T> {
        Ball::new(self.center.clone(), self.radius + by)
    }
}

/// Closed-ball membership on squared distances.
pub fn contains_point<T: Real>(b: &Ball<T>, x: &Point<T>) -> bool {
    b.contains(x.coords())
}

#[derive(Clone, Debug, PartialEq)]
pub struct AxisBox<T> {
    pub low: Point<T>,
    pub high: Point<T>,
}

impl<T: Real> AxisBox<T> {
    pub fn new(low: Point<T>, high: Point<T>) -> Result<Self, GrowthError> {
        if low.dim() != high.dim() {
            return Err(GrowthError::Dimension {
                expected: low.dim(),
                got: high.dim(),
            });
        }
        if low.0.iter().zip(&high.0).any(|(l, h)| !(l <= h)) {
            return Err(GrowthError::Parameter(
                "box low corner must not exceed high corner".into(),
            ));
        }
        Ok(AxisBox { low, high })
    }

    pub fn cube(center: &[T], half: T) -> Self {
        AxisBox {
            low: Point(center.iter().map(|&c| c - half).collect()),
            high: Point(center.iter().map(|&c| c + half).collect()),
        }
    }

    pub fn dim(&self) -> usize {
        self.low.dim()
    }

    pub fn intersect(&self, other: &AxisBox<T>) -> Option<AxisBox<T>> {
        let mut low = Coords::with_capacity(self.dim());
        let mut high = Coords::with_capacity(self.dim());
        for i in 0..self.dim() {
            let l = self.low.0[i].max(other.low.0[i]);
            let h = self.high.0[i].min(other.high.0[i]);
            if l > h {
                return None;
            }
            low.push(l);
            high.push(h);
        }
        Some(AxisBox {
            low: Point(low),
            high: Point(high),
        })
    }

    pub fn contains(&self, x: &[T]) -> bool {
        (0..self.dim()).all(|i| self.low.0[i] <= x[i] && x[i] <= self.high.0[i])
    }

    /// Squared distance from `p` to the nearest point of the box.
    pub fn min_dist2(&self, p: &[T]) -> T {
        let mut acc = T::zero();
        for i in 0..self.dim() {
            let v = p[i];
            let d = if v < self.low.0[i] {
                self.low.0[i] - v
            } else if v > self.high.0[i] {
                v - self.high.0[i]
            } else {
                T::zero()
            };
            acc = acc + d * d;
        }
        acc
    }

    /// Squared distance from `p` to the farthest corner of the box.
    pub fn max_dist2(&self, p: &[T]) -> T {
        let mut acc = T::zero();
        for i in 0..self.dim() {
            let d = (p[i] - self.low.0[i]).abs().max((self.high.0[i] - p[i]).abs());
            acc = acc + d * d;
        }
        acc
    }

    pub fn center(&self) -> Point<T> {
        let two = T::one() + T::one();
        Point(
            self.low
                .0
                .iter()
                .zip(&self.high.0)
                .map(|(&l, &h)| (l + h) / two)
                .collect(),
        )
    }

    pub fn clamp(&self, p: &[T]) -> Point<T> {
        Point(
            (0..self.dim())
                .map(|i| p[i].max(self.low.0[i]).min(self.high.0[i]))
                .collect(),
        )
    }

    pub fn farthest_corner(&self, p: &[T]) -> Point<T> {
        Point(
            (0..self.dim())
                .map(|i| {
                    if (p[i] - self.low.0[i]).abs() >= (self.high.0[i] - p[i]).abs() {
                        self.low.0[i]
                    } else {
                        self.high.0[i]
                    }
                })
                .collect(),
        )
    }

    pub fn max_half_extent(&self) -> T {
        let two = T::one() + T::one();
        (0..self.dim())
            .map(|i| (self.high.0[i] - self.low.0[i]) / two)
            .fold(T::zero(), T::max)
    }

    pub fn intersects_ball(&self, b: &Ball<T>) -> bool {
        self.min_dist2(b.center.coords()) <= b.radius * b.radius
    }
}

/// A collection of balls that can report which ones may touch a box.
pub trait BallSet<T: Real> {
    fn ball(&self, id: u32) -> &Ball<T>;

    /// Appends ascending, duplicate-free ids of every ball that may intersect
    /// `region`; extra ids are allowed.
    fn candidates(&self, region: &AxisBox<T>, out: &mut Vec<u32>);
}

impl<T: Real> BallSet<T> for [Ball<T>] {
    fn ball(&self, id: u32) -> &Ball<T> {
        &self[id as usize]
    }

    fn candidates(&self, region: &AxisBox<T>, out: &mut Vec<u32>) {
        out.extend(
            self.iter()
                .enumerate()
                .filter(|(_, b)| region.intersects_ball(b))
                .map(|(i, _)| i as u32),
        );
    }
}

impl<T: Real> BallSet<T> for Vec<Ball<T>> {
    fn ball(&self, id: u32) -> &Ball<T> {
        &self[id as usize]
    }

    fn candidates(&self, region: &AxisBox<T>, out: &mut Vec<u32>) {
        self.as_slice().candidates(region, out)
    }
}

/// Calls `f` for every integer cell key in the inclusive range `lo..=hi`.
pub fn for_each_cell(lo: &[i32], hi: &[i32], mut f: impl FnMut(&CellKey)) {
    if lo.iter().zip(hi).any(|(l, h)| l > h) {
        return;
    }
    let mut key: CellKey = lo.iter().copied().collect();
    loop {
        f(&key);
        let mut axis = 0;
        loop {
            if axis == key.len() {
                return;
            }
            if key[axis] < hi[axis] {
                key[axis] += 1;
                break;
            }
            key[axis] = lo[axis];
            axis += 1;
        }
    }
}

pub fn cell_coord<T: Real>(v: T, edge: T) -> i32 {
    (v / edge).floor().as_f64() as i32
}

pub fn cell_of<T: Real>(p: &[T], edge: T) -> CellKey {
    p.iter().map(|&v| cell_coord(v, edge)).collect()
}

/// Uniform grid over balls; each ball is listed in every cell its bounding
/// box overlaps, in insertion order.
#[derive(Clone, Debug)]
pub struct BallIndex<T> {
    edge: T,
    balls: Vec<Ball<T>>,
    grid: FxHashMap<CellKey, Vec<u32>>,
}

impl<T: Real> BallIndex<T> {
    pub fn new(edge: T) -> Self {
        BallIndex {
            edge,
            balls: Vec::new(),
            grid: FxHashMap::default(),
        }
    }

    pub fn edge(&self) -> T {
        self.edge
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn balls(&self) -> &[Ball<T>] {
        &self.balls
    }

    pub fn push(&mut self, ball: Ball<T>) -> u32 {
        let id = self.balls.len() as u32;
        let bb = ball.bbox();
        let lo = cell_of(bb.low.coords(), self.edge);
        let hi = cell_of(bb.high.coords(), self.edge);
        let grid = &mut self.grid;
        for_each_cell(&lo, &hi, |k| grid.entry(k.clone()).or_default().push(id));
        self.balls.push(ball);
        id
    }

    /// Ids listed in the cell containing `p`, in insertion order.
    pub fn at_point(&self, p: &[T]) -> &[u32] {
        self.grid
            .get(&cell_of(p, self.edge))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// View of the first `len` balls.
    pub fn prefix(&self, len: usize) -> IndexPrefix<'_, T> {
        IndexPrefix { index: self, len }
    }

    fn collect(&self, region: &AxisBox<T>, len: usize, out: &mut Vec<u32>) {
        let start = out.len();
        let lo = cell_of(region.low.coords(), self.edge);
        let hi = cell_of(region.high.coords(), self.edge);
        for_each_cell(&lo, &hi, |k| {
            if let Some(ids) = self.grid.get(k) {
                out.extend(ids.iter().copied().filter(|&id| (id as usize) < len));
            }
        });
        out[start..].sort_unstable();
        let mut w = start;
        for r in start..out.len() {
            if w == start || out[r] != out[w - 1] {
                out[w] = out[r];
                w += 1;
            }
        }
        out.truncate(w);
    }
}

impl<T: Real> BallSet<T> for BallIndex<T> {
    fn ball(&self, id: u32) -> &Ball<T> {
        &self.balls[id as usize]
    }

    fn candidates(&self, region: &AxisBox<T>, out: &mut Vec<u32>) {
        self.collect(region, self.balls.len(), out)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IndexPrefix<'a, T> {
    index: &'a BallIndex<T>,
    len: usize,
}

impl<T: Real> BallSet<T> for IndexPrefix<'_, T> {
    fn ball(&self, id: u32) -> &Ball<T> {
        &self.index.balls[id as usize]
    }

    fn candidates(&self, region: &AxisBox<T>, out: &mut Vec<u32>) {
        self.index.collect(region, self.len, out)
    }
}

/// Where to look for uncovered points: a box, optionally intersected with a
/// ball mask and with an excluded closed ball removed.
#[derive(Clone, Debug)]
pub struct SearchDomain<T> {
    pub bounds: AxisBox<T>,
    pub include: Option<Ball<T>>,
    pub exclude: Option<Ball<T>>,
}

impl<T: Real> SearchDomain<T> {
    pub fn from_box(bounds: AxisBox<T>) -> Self {
        SearchDomain {
            bounds,
            include: None,
            exclude: None,
        }
    }

    pub fn ball(mask: Ball<T>) -> Self {
        SearchDomain {
            bounds: mask.bbox(),
            include: Some(mask),
            exclude: None,
        }
    }

    pub fn excluding(mut self, hole: Ball<T>) -> Self {
        self.exclude = Some(hole);
        self
    }

    pub fn contains(&self, x: &[T]) -> bool {
        self.bounds.contains(x)
            && self.include.as_ref().map_or(true, |b| b.contains(x))
            && self.exclude.as_ref().map_or(true, |b| !b.contains(x))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Witness<T> {
    pub point: Point<T>,
    /// Leaf cell (clipped to the search bounds) the point was taken from.
    pub cell: AxisBox<T>,
    /// The point itself lies in the domain and in no region ball.
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Coverage<T> {
    Covered,
    Witness(Witness<T>),
}

impl<T> Coverage<T> {
    pub fn is_covered(&self) -> bool {
        matches!(self, Coverage::Covered)
    }

    pub fn witness(&self) -> Option<&Witness<T>> {
        match self {
            Coverage::Covered => None,
            Coverage::Witness(w) => Some(w),
        }
    }
}

struct Search<'a, T, S: ?Sized> {
    domain: &'a SearchDomain<T>,
    set: &'a S,
    delta: T,
    arena: Vec<u32>,
    // first leaf that no single ball contains but whose probes were covered
    ambiguous: Option<Witness<T>>,
}

impl<T: Real, S: BallSet<T> + ?Sized> Search<'_, T, S> {
    fn run(&mut self) -> Option<Witness<T>> {
        let root = match &self.domain.include {
            Some(m) => self.domain.bounds.intersect(&m.bbox())?,
            None => self.domain.bounds.clone(),
        };
        self.set.candidates(&root, &mut self.arena);
        if let Some(m) = &self.domain.include {
            // a single ball swallowing the whole mask settles everything
            if self
                .arena
                .iter()
                .any(|&id| self.set.ball(id).contains_ball(m))
            {
                return None;
            }
        }
        let center = root.center();
        let half = root.max_half_extent().max(self.delta / T::of(4.0));
        let n = self.arena.len();
        self.visit(center.coords(), half, 0, n)
    }

    fn visit(&mut self, center: &[T], half: T, cs: usize, ce: usize) -> Option<Witness<T>> {
        let cell = AxisBox::cube(center, half).intersect(&self.domain.bounds)?;
        if let Some(m) = &self.domain.include {
            if cell.min_dist2(m.center.coords()) > m.radius * m.radius {
                return None;
            }
        }
        if let Some(e) = &self.domain.exclude {
            if cell.max_dist2(e.center.coords()) <= e.radius * e.radius {
                return None;
            }
        }
        let start = self.arena.len();
        for i in cs..ce {
            let id = self.arena[i];
            let b = self.set.ball(id);
            let r2 = b.radius * b.radius;
            if cell.min_dist2(b.center.coords()) > r2 {
                continue;
            }
            let inside = cell.max_dist2(b.center.coords()) <= r2
                || self
                    .domain
                    .include
                    .as_ref()
                    .is_some_and(|m| b.contains_ball(m));
            if inside {
                self.arena.truncate(start);
                return None;
            }
            self.arena.push(id);
        }
        let end = self.arena.len();
        let two = T::one() + T::one();
        if self.domain.contains(center)
            && !self.arena[start..end]
                .iter()
                .any(|&id| self.set.ball(id).contains(center))
        {
            self.arena.truncate(start);
            return Some(Witness {
                point: Point(center.iter().copied().collect()),
                cell,
                exact: true,
            });
        }
        let found = if two * half <= self.delta {
            self.leaf(&cell, start, end)
        } else {
            let d = center.len();
            let q = half / two;
            let mut child: Coords<T> = center.iter().copied().collect();
            let mut found = None;
            for mask in 0u32..(1u32 << d) {
                for (axis, c) in child.iter_mut().enumerate() {
                    *c = if mask & (1 << axis) == 0 {
                        center[axis] - q
                    } else {
                        center[axis] + q
                    };
                }
                if let Some(w) = self.visit(&child, q, start, end) {
                    found = Some(w);
                    break;
                }
            }
            found
        };
        self.arena.truncate(start);
        found
    }

    fn leaf(&mut self, cell: &AxisBox<T>, cs: usize, ce: usize) -> Option<Witness<T>> {
        let mut probes: SmallVec<[Point<T>; 3]> = SmallVec::new();
        probes.push(cell.center());
        if let Some(m) = &self.domain.include {
            probes.push(cell.clamp(m.center.coords()));
        }
        if let Some(e) = &self.domain.exclude {
            probes.push(cell.farthest_corner(e.center.coords()));
        }
        let mut fallback: Option<&Point<T>> = None;
        for p in &probes {
            if !self.domain.contains(p.coords()) {
                continue;
            }
            fallback.get_or_insert(p);
            let covered = self.arena[cs..ce]
                .iter()
                .any(|&id| self.set.ball(id).contains(p.coords()));
            if !covered {
                return Some(Witness {
                    point: p.clone(),
                    cell: cell.clone(),
                    exact: true,
                });
            }
        }
        if self.ambiguous.is_none() {
            self.ambiguous = Some(Witness {
                point: fallback.unwrap_or(probes.get(1).unwrap_or(&probes[0])).clone(),
                cell: cell.clone(),
                exact: false,
            });
        }
        None
    }
}

/// Returns an exact witness if one is found, otherwise the first ambiguous leaf.
fn search<T: Real, S: BallSet<T> + ?Sized>(
    domain: &SearchDomain<T>,
    region: &S,
    delta: T,
) -> Option<Witness<T>> {
    assert!(delta > T::zero(), "coverage resolution must be positive");
    let mut s = Search {
        domain,
        set: region,
        delta,
        arena: Vec::with_capacity(64),
        ambiguous: None,
    };
    s.run().or(s.ambiguous)
}

/// Subdivision coverage test of `domain` by the union of `region`.
///
/// Reports a point of the domain outside every region ball when the search
/// meets one (`exact`), otherwise the first leaf cell (edge ≤ `delta`) that no
/// single region ball contains.
pub fn find_uncovered<T: Real, S: BallSet<T> + ?Sized>(
    domain: &SearchDomain<T>,
    region: &S,
    delta: T,
) -> Coverage<T> {
    match search(domain, region, delta) {
        None => Coverage::Covered,
        Some(w) => Coverage::Witness(w),
    }
}

/// Like [`find_uncovered`] but only reports points verified to be outside
/// every region ball; ambiguous leaves are skipped.
pub fn find_exposed_point<T: Real, S: BallSet<T> + ?Sized>(
    domain: &SearchDomain<T>,
    region: &S,
    delta: T,
) -> Option<Point<T>> {
    search(domain, region, delta)
        .filter(|w| w.exact)
        .map(|w| w.point)
}

pub fn ball_fully_covered<T: Real, S: BallSet<T> + ?Sized>(
    target: &Ball<T>,
    region: &S,
    delta: T,
) -> Coverage<T> {
    find_uncovered(&SearchDomain::ball(target.clone()), region, delta)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VolumeEstimate {
    pub estimate: f64,
    pub standard_error: f64,
}

/// Uniform point in `b`.
pub fn sample_in_ball<T: Real, R: Rng + ?Sized>(b: &Ball<T>, rng: &mut R) -> Point<T> {
    let d = b.dim();
    let mut dir: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = b.radius.as_f64() * rng.gen::<f64>().powf(1.0 / d as f64) / norm;
    for v in &mut dir {
        *v *= scale;
    }
    Point(
        b.center
            .0
            .iter()
            .zip(dir)
            .map(|(&c, v)| c + T::of(v))
            .collect(),
    )
}

/// Unbiased Monte Carlo estimate of the volume of a union of balls.
///
/// Draws a ball proportionally to its volume, a uniform point in it, and
/// weights the point by one over the number of balls containing it.
pub fn volume_estimate<T: Real, R: Rng + ?Sized>(
    region: &[Ball<T>],
    samples: usize,
    rng: &mut R,
) -> Result<VolumeEstimate, GrowthError> {
    if region.is_empty() || samples == 0 {
        return Err(GrowthError::Parameter(
            "volume estimate needs a nonempty region and at least one sample".into(),
        ));
    }
    let volumes: Vec<f64> = region.iter().map(Ball::volume).collect();
    let total: f64 = volumes.iter().sum();
    let pick = WeightedIndex::new(&volumes)
        .map_err(|e| GrowthError::Parameter(format!("ball volumes: {e}")))?;
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for _ in 0..samples {
        let b = &region[pick.sample(rng)];
        let p = sample_in_ball(b, rng);
        let hits = region.iter().filter(|b| b.contains(p.coords())).count().max(1);
        let w = total / hits as f64;
        sum += w;
        sum2 += w * w;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = if samples > 1 {
        ((sum2 - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(VolumeEstimate {
        estimate: mean,
        standard_error: (var / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p2(x: f64, y: f64) -> Point<f64> {
        Point::new([x, y])
    }

    #[test]
    fn closed_ball_membership() {
        let b = Ball::new(Point::origin(3), 1.0);
        assert!(contains_point(&b, &Point::on_axis(3, 0.5)));
        assert!(contains_point(&b, &Point::on_axis(3, 1.0)));
        assert!(!contains_point(&b, &Point::on_axis(3, 1.0 + 1e-7)));
    }

    #[test]
    fn unit_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-12);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn identical_ball_is_covered() {
        let b = Ball::unit(Point::origin(2));
        assert!(ball_fully_covered(&b, &vec![b.clone()], 1e-3).is_covered());
    }

    #[test]
    fn farthest_point_bound() {
        let mask = Ball::unit(p2(0.5, 0.0));
        let region = vec![Ball::new(p2(0.0, 0.0), 1.6)];
        assert!(ball_fully_covered(&mask, &region, 1e-3).is_covered());
    }

    #[test]
    fn gap_between_tangent_disks() {
        let mask = Ball::new(p2(1.0, 0.0), 0.5);
        let region = vec![Ball::unit(p2(0.0, 0.0)), Ball::unit(p2(2.0, 0.0))];
        let w = match ball_fully_covered(&mask, &region, 1e-3) {
            Coverage::Witness(w) => w,
            Coverage::Covered => panic!("gap must be found"),
        };
        assert!(mask.contains(w.point.coords()));
        assert!(w.exact);
        assert!(region.iter().all(|b| !b.contains(w.point.coords())));
        // brute-force oracle: uncovered grid points off the axis near x = 1
        let mut uncovered = 0;
        let n = 200;
        for i in 0..=n {
            for j in 0..=n {
                let x = 0.5 + i as f64 / n as f64;
                let y = -0.5 + j as f64 / n as f64;
                let p = [x, y];
                if mask.contains(&p) && region.iter().all(|b| !b.contains(&p)) {
                    uncovered += 1;
                    assert!((x - 1.0).abs() < 0.5);
                }
            }
        }
        assert!(uncovered > 0);
    }

    #[test]
    fn empty_region_gives_exact_witness() {
        let mask = Ball::unit(p2(0.0, 0.0));
        let w = ball_fully_covered(&mask, &Vec::<Ball<f64>>::new(), 1e-3);
        assert!(w.witness().unwrap().exact);
    }

    #[test]
    fn exclusion_hole_is_ignored() {
        // ball B(0,2) minus B(0,1.5) covered by an annulus-sized ring of balls? use a
        // single ball that covers everything outside the hole
        let domain = SearchDomain::ball(Ball::new(p2(0.0, 0.0), 2.0))
            .excluding(Ball::new(p2(0.0, 0.0), 1.5));
        let region = vec![Ball::new(p2(0.0, 0.0), 2.0)];
        assert!(find_exposed_point(&domain, &region, 1e-3).is_none());
        // region covering only the hole leaves the ring exposed
        let region = vec![Ball::new(p2(0.0, 0.0), 1.6)];
        let p = find_exposed_point(&domain, &region, 1e-3).unwrap();
        let r = p.dist(&Point::origin(2));
        assert!(r > 1.6 && r <= 2.0);
    }

    #[test]
    fn box_search_without_mask() {
        let bx = AxisBox::new(p2(-0.5, -0.5), p2(0.5, 0.5)).unwrap();
        let region = vec![Ball::unit(p2(0.0, 0.0))];
        assert!(find_uncovered(&SearchDomain::from_box(bx.clone()), &region, 1e-3).is_covered());
        let region = vec![Ball::new(p2(0.0, 0.0), 0.7)];
        assert!(!find_uncovered(&SearchDomain::from_box(bx), &region, 1e-3).is_covered());
    }

    #[test]
    fn index_matches_slice() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut idx = BallIndex::new(1.0);
        let mut v = Vec::new();
        for _ in 0..200 {
            let b = Ball::new(
                p2(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)),
                rng.gen_range(0.05..1.5),
            );
            idx.push(b.clone());
            v.push(b);
        }
        for _ in 0..50 {
            let mask = Ball::new(p2(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)), 0.8);
            assert_eq!(
                ball_fully_covered(&mask, &idx, 1e-2).is_covered(),
                ball_fully_covered(&mask, &v, 1e-2).is_covered()
            );
        }
        let q = [0.3, -0.2];
        let direct: Vec<u32> = v
            .iter()
            .enumerate()
            .filter(|(_, b)| b.contains(&q))
            .map(|(i, _)| i as u32)
            .collect();
        let via: Vec<u32> = idx
            .at_point(&q)
            .iter()
            .copied()
            .filter(|&i| v[i as usize].contains(&q))
            .collect();
        assert_eq!(direct, via);
    }

    #[test]
    fn volume_single_tangent_and_lens() {
        use std::f64::consts::PI;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let one = vec![Ball::unit(p2(0.0, 0.0))];
        let e = volume_estimate(&one, 20_000, &mut rng).unwrap();
        assert!((e.estimate - PI).abs() <= 3.0 * e.standard_error + 1e-12);

        let tangent = vec![Ball::unit(p2(0.0, 0.0)), Ball::unit(p2(2.0, 0.0))];
        let e = volume_estimate(&tangent, 20_000, &mut rng).unwrap();
        assert!((e.estimate - 2.0 * PI).abs() <= 3.0 * e.standard_error + 1e-9);

        // lens of two unit disks at distance 1: 2 r^2 acos(d/2r) - (d/2) sqrt(4r^2 - d^2)
        let lens = 2.0 * (0.5f64).acos() - 0.5 * (3.0f64).sqrt();
        let truth = 2.0 * PI - lens;
        let overlap = vec![Ball::unit(p2(0.0, 0.0)), Ball::unit(p2(1.0, 0.0))];
        let e = volume_estimate(&overlap, 40_000, &mut rng).unwrap();
        assert!(
            (e.estimate - truth).abs() <= 3.0 * e.standard_error,
            "{} vs {truth} ± {}",
            e.estimate,
            e.standard_error
        );
    }

    #[test]
    fn volume_estimator_is_unbiased_over_repeats() {
        use std::f64::consts::PI;
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let tangent = vec![Ball::unit(p2(0.0, 0.0)), Ball::unit(p2(2.0, 0.0))];
        let reps = 200;
        let ests: Vec<f64> = (0..reps)
            .map(|_| volume_estimate(&tangent, 200, &mut rng).unwrap().estimate)
            .collect();
        let mean = ests.iter().sum::<f64>() / reps as f64;
        let var = ests.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
        let se = (var / reps as f64).sqrt();
        assert!((mean - 2.0 * PI).abs() <= 3.0 * se + 1e-9);
    }

    fn random_region() -> impl Strategy<Value = (Vec<(f64, f64, f64)>, (f64, f64, f64))> {
        (
            prop::collection::vec((-1.5f64..1.5, -1.5f64..1.5, 0.2f64..1.2), 1..8),
            (-0.5f64..0.5, -0.5f64..0.5, 0.2f64..0.8),
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn covered_verdict_survives_dense_grid((balls, mask) in random_region()) {
            let delta = 0.02;
            let region: Vec<Ball<f64>> = balls.iter().map(|&(x, y, r)| Ball::new(p2(x, y), r)).collect();
            let target = Ball::new(p2(mask.0, mask.1), mask.2);
            match ball_fully_covered(&target, &region, delta) {
                Coverage::Covered => {
                    let step = delta / 4.0;
                    let n = (2.0 * mask.2 / step).ceil() as i32;
                    for i in 0..=n {
                        for j in 0..=n {
                            let p = [mask.0 - mask.2 + i as f64 * step, mask.1 - mask.2 + j as f64 * step];
                            if target.contains(&p) {
                                prop_assert!(region.iter().any(|b| b.contains(&p)));
                            }
                        }
                    }
                }
                Coverage::Witness(w) => {
                    prop_assert!(target.contains(w.point.coords()));
                    if w.exact {
                        prop_assert!(region.iter().all(|b| !b.contains(w.point.coords())));
                    } else {
                        // ambiguous leaf: small and inside no single ball
                        let edge = w.cell.high[0] - w.cell.low[0];
                        prop_assert!(edge <= delta);
                        for b in &region {
                            prop_assert!(w.cell.max_dist2(b.center.coords()) > b.radius * b.radius);
                        }
                    }
                }
            }
        }

        #[test]
        fn adding_a_ball_keeps_coverage((balls, mask) in random_region(), extra in (-1.5f64..1.5, -1.5f64..1.5, 0.1f64..1.0)) {
            let mut region: Vec<Ball<f64>> = balls.iter().map(|&(x, y, r)| Ball::new(p2(x, y), r)).collect();
            let target = Ball::new(p2(mask.0, mask.1), mask.2);
            let before = ball_fully_covered(&target, &region, 0.02).is_covered();
            region.push(Ball::new(p2(extra.0, extra.1), extra.2));
            let after = ball_fully_covered(&target, &region, 0.02).is_covered();
            prop_assert!(!before || after);
        }
    }
}
