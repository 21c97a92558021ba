//! Chronological, type-tagged ball history with first-cover semantics.
//!
//! A point's type and infection time are those of the earliest ball covering
//! it. Balls are stored in append order, which is also birth order (ties are
//! broken by type tag, then provenance), so the earliest covering ball is the
//! first one found in index order.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::env::PointKey;
use crate::error::{GrowthError, Result};
use crate::geom::{Ball, BallIndex, BallSet, IndexPrefix, Point};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InfectionType {
    One = 1,
    Two = 2,
}

impl InfectionType {
    pub const BOTH: [InfectionType; 2] = [InfectionType::One, InfectionType::Two];

    pub fn tag(self) -> u8 {
        self as u8
    }

    /// 0 for type 1, 1 for type 2.
    pub fn index(self) -> usize {
        self as usize - 1
    }

    pub fn other(self) -> Self {
        match self {
            InfectionType::One => InfectionType::Two,
            InfectionType::Two => InfectionType::One,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            1 => Ok(InfectionType::One),
            2 => Ok(InfectionType::Two),
            _ => Err(GrowthError::Parameter(format!("infection type must be 1 or 2, got {tag}"))),
        }
    }
}

impl fmt::Display for InfectionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag())
    }
}

/// Where a ball came from.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Provenance {
    /// Initial set, numbered in the order given by the caller.
    Seed(u32),
    Point(PointKey),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Seed(i) => write!(f, "seed:{i}"),
            Provenance::Point(k) => write!(f, "pt:{k}"),
        }
    }
}

impl FromStr for Provenance {
    type Err = GrowthError;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(i) = s.strip_prefix("seed:") {
            return i
                .parse()
                .map(Provenance::Seed)
                .map_err(|_| GrowthError::Parameter(format!("malformed provenance {s:?}")));
        }
        match s.strip_prefix("pt:") {
            Some(k) => Ok(Provenance::Point(k.parse()?)),
            None => Err(GrowthError::Parameter(format!("malformed provenance {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthBall<T> {
    pub ball: Ball<T>,
    pub birth: T,
    pub kind: InfectionType,
    pub provenance: Provenance,
    /// Certified to add nothing: some single earlier ball already contains it.
    pub redundant: bool,
}

impl<T: Real> GrowthBall<T> {
    pub fn is_seed(&self) -> bool {
        matches!(self.provenance, Provenance::Seed(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Classification<T> {
    Uninfected,
    Infected { kind: InfectionType, tau: T },
}

impl<T: Copy> Classification<T> {
    pub fn is_infected(&self) -> bool {
        matches!(self, Classification::Infected { .. })
    }

    pub fn kind(&self) -> Option<InfectionType> {
        match self {
            Classification::Uninfected => None,
            Classification::Infected { kind, .. } => Some(*kind),
        }
    }

    pub fn tau(&self) -> Option<T> {
        match self {
            Classification::Uninfected => None,
            Classification::Infected { tau, .. } => Some(*tau),
        }
    }
}

/// Seeds followed by outburst balls in birth order.
#[derive(Clone, Debug)]
pub struct History<T> {
    dim: usize,
    seed_count: usize,
    balls: Vec<GrowthBall<T>>,
    index: BallIndex<T>,
    clock: T,
}

impl<T: Real> History<T> {
    /// Seeds are reordered by type tag (stable), matching the tie-break used
    /// for simultaneous births. Interiors of seeds with different types must
    /// be disjoint.
    pub fn new(seeds: &[(Ball<T>, InfectionType)], index_edge: T) -> Result<Self> {
        let first = seeds
            .first()
            .ok_or_else(|| GrowthError::Config("at least one seed ball is required".into()))?;
        let dim = first.0.dim();
        for (b, _) in seeds {
            if b.dim() != dim {
                return Err(GrowthError::Dimension {
                    expected: dim,
                    got: b.dim(),
                });
            }
            if !(b.radius > T::zero()) {
                return Err(GrowthError::Config("seed radius must be positive".into()));
            }
        }
        for (i, (a, ta)) in seeds.iter().enumerate() {
            for (b, tb) in &seeds[i + 1..] {
                let reach = a.radius + b.radius;
                if ta != tb && a.center.dist2(&b.center) < reach * reach {
                    return Err(GrowthError::Config(format!(
                        "seeds of types {ta} and {tb} overlap: centers {:?} and {:?}",
                        a.center.to_f64(),
                        b.center.to_f64()
                    )));
                }
            }
        }
        let mut order: Vec<usize> = (0..seeds.len()).collect();
        order.sort_by_key(|&i| seeds[i].1);
        let mut h = History {
            dim,
            seed_count: seeds.len(),
            balls: Vec::with_capacity(seeds.len()),
            index: BallIndex::new(index_edge),
            clock: T::zero(),
        };
        for i in order {
            let (ball, kind) = &seeds[i];
            h.index.push(ball.clone());
            h.balls.push(GrowthBall {
                ball: ball.clone(),
                birth: T::zero(),
                kind: *kind,
                provenance: Provenance::Seed(i as u32),
                redundant: false,
            });
        }
        Ok(h)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seeds(&self) -> &[GrowthBall<T>] {
        &self.balls[..self.seed_count]
    }

    pub fn events(&self) -> &[GrowthBall<T>] {
        &self.balls[self.seed_count..]
    }

    pub fn balls(&self) -> &[GrowthBall<T>] {
        &self.balls
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn clock(&self) -> T {
        self.clock
    }

    pub fn set_clock(&mut self, t: T) {
        if t > self.clock {
            self.clock = t;
        }
    }

    pub fn index(&self) -> &BallIndex<T> {
        &self.index
    }

    /// All balls appended before position `len`.
    pub fn region_before(&self, len: usize) -> IndexPrefix<'_, T> {
        self.index.prefix(len)
    }

    /// Number of balls born at or before `t`.
    pub fn count_at(&self, t: T) -> usize {
        self.balls.partition_point(|b| b.birth <= t)
    }

    /// Region infected at time `t`.
    pub fn region_at(&self, t: T) -> IndexPrefix<'_, T> {
        self.index.prefix(self.count_at(t))
    }

    /// Appends an outburst; births must not decrease.
    pub fn push_event(
        &mut self,
        ball: Ball<T>,
        birth: T,
        kind: InfectionType,
        key: PointKey,
    ) -> usize {
        let last = self.balls.last().map_or(T::zero(), |b| b.birth);
        assert!(birth >= last, "event births must not decrease");
        let redundant = self.single_cover(&ball);
        self.index.push(ball.clone());
        self.balls.push(GrowthBall {
            ball,
            birth,
            kind,
            provenance: Provenance::Point(key),
            redundant,
        });
        self.set_clock(birth);
        self.balls.len() - 1
    }

    fn single_cover(&self, ball: &Ball<T>) -> bool {
        let mut ids = Vec::new();
        self.index.candidates(&ball.bbox(), &mut ids);
        ids.iter().any(|&id| self.index.ball(id).contains_ball(ball))
    }

    /// Type and infection time of `x` as of time `t`.
    pub fn classify(&self, x: &[T], t: T) -> Classification<T> {
        for &id in self.index.at_point(x) {
            let g = &self.balls[id as usize];
            if g.ball.contains(x) {
                return if g.birth <= t {
                    Classification::Infected {
                        kind: g.kind,
                        tau: g.birth,
                    }
                } else {
                    Classification::Uninfected
                };
            }
        }
        Classification::Uninfected
    }

    /// Position of the earliest ball covering `x`, ignoring time.
    pub fn first_cover(&self, x: &[T]) -> Option<usize> {
        self.index
            .at_point(x)
            .iter()
            .map(|&id| id as usize)
            .find(|&id| self.balls[id].ball.contains(x))
    }

    /// Writes the event log: one CSV row per ball with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "birth".to_string(),
            "type".into(),
            "radius".into(),
            "provenance".into(),
            "redundant".into(),
        ];
        header.extend((1..=self.dim).map(|i| format!("x{i}")));
        w.write_record(&header)?;
        for g in &self.balls {
            let mut row = vec![
                fmt_real(g.birth),
                g.kind.to_string(),
                fmt_real(g.ball.radius),
                g.provenance.to_string(),
                (g.redundant as u8).to_string(),
            ];
            row.extend(g.ball.center.coords().iter().map(|&c| fmt_real(c)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads an event log written by [`History::write_csv`].
    pub fn read_csv<R: Read>(input: R, index_edge: T) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let dim = r.headers()?.len().saturating_sub(5);
        if dim == 0 {
            return Err(GrowthError::Parameter("event log has no coordinate columns".into()));
        }
        let mut seeds = Vec::new();
        let mut events = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<T> {
                rec[i]
                    .parse::<f64>()
                    .map(T::of)
                    .map_err(|_| GrowthError::Parameter(format!("bad number {:?}", &rec[i])))
            };
            let birth = num(0)?;
            let kind = InfectionType::from_tag(
                rec[1]
                    .parse()
                    .map_err(|_| GrowthError::Parameter(format!("bad type {:?}", &rec[1])))?,
            )?;
            let radius = num(2)?;
            let provenance: Provenance = rec[3].parse()?;
            let center = Point::new((5..5 + dim).map(num).collect::<Result<Vec<T>>>()?);
            let ball = Ball::try_new(center, radius)?;
            match provenance {
                Provenance::Seed(i) => seeds.push((i, ball, kind)),
                Provenance::Point(k) => events.push((ball, birth, kind, k)),
            }
        }
        seeds.sort_by_key(|s| s.0);
        let seed_list: Vec<(Ball<T>, InfectionType)> =
            seeds.into_iter().map(|(_, b, k)| (b, k)).collect();
        let mut h = History::new(&seed_list, index_edge)?;
        for (ball, birth, kind, key) in events {
            h.push_event(ball, birth, kind, key);
        }
        Ok(h)
    }
}

/// Free-function form of [`History::classify`].
pub fn classify_point<T: Real>(h: &History<T>, x: &Point<T>, t: T) -> Classification<T> {
    h.classify(x.coords(), t)
}

/// Float text with 17 significant digits, enough for an exact round trip.
pub fn fmt_real<T: Real>(v: T) -> String {
    format!("{:.16e}", v.as_f64())
}
