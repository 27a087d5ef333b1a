//! Model dynamical systems: maps, metrics, invariant-measure samplers and
//! orbit/itinerary generation.

mod orbit;
mod symbolic;

pub use orbit::{CoordMetric, OrbitBuffer, MAX_ORBIT_LEN};
pub(crate) use orbit::{coord_dist, Repr as OrbitRepr};
pub use symbolic::SymbolicWord;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Iterations discarded when realizing an absolutely continuous invariant
/// measure by pushing forward a uniform draw.
const ACIM_BURN_IN: usize = 1024;

/// A point of the phase space: real coordinates in [0,1)^d, or a finite
/// window of a one-sided symbol sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Point {
    Coords(Vec<f64>),
    Symbols(Vec<u8>),
}

impl Point {
    pub fn scalar(x: f64) -> Self {
        Point::Coords(vec![x])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum IntervalMap {
    Tent,
    Logistic4,
    PiecewiseLinear { slopes: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MapKind {
    FullShift { symbols: u16 },
    CircleExpanding { degree: u32 },
    TorusConformal { degree: u32, dim: usize },
    Interval { map: IntervalMap },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MeasureKind {
    Lebesgue,
    Bernoulli { probs: Vec<f64> },
    AbsolutelyContinuousEmpirical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub kind: MeasureKind,
    pub seed: u64,
}

/// Closed-form reference values, in nats, when the (system, measure) pair
/// has them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analytic {
    pub entropy: f64,
    pub lyapunov_min: f64,
    pub lyapunov_max: f64,
    pub dimension: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub kind: MapKind,
    pub measure: MeasureSpec,
    pub analytic: Option<Analytic>,
}

/// Itinerary of an orbit under the canonical partition, with a diagnostic
/// count of exact partition-boundary hits (coded into the right interval).
#[derive(Clone, Debug, PartialEq)]
pub struct Itinerary {
    pub word: SymbolicWord,
    pub boundary_hits: usize,
}

fn validate_bernoulli(probs: &[f64], symbols: u16) -> Result<()> {
    if probs.len() != symbols as usize {
        return Err(Error::Incompatible(format!(
            "Bernoulli vector of length {} on a {symbols}-symbol shift",
            probs.len()
        )));
    }
    for &p in probs {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Parameter(format!(
                "Bernoulli entries must lie in (0,1), got {p}"
            )));
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::Parameter(format!(
            "Bernoulli vector sums to {sum}, expected 1 within 1e-12"
        )));
    }
    Ok(())
}

impl SystemSpec {
    /// Full shift on `symbols` symbols with a Bernoulli measure.
    pub fn full_shift(probs: Vec<f64>, seed: u64) -> Result<Self> {
        let symbols = probs.len() as u16;
        validate_bernoulli(&probs, symbols)?;
        let entropy: f64 = -probs.iter().map(|p| p * p.ln()).sum::<f64>();
        // The metric d(x,y) = 2^{-t} scales by exactly 2 under the shift.
        let lyap = 2.0f64.ln();
        let analytic = Analytic {
            entropy,
            lyapunov_min: lyap,
            lyapunov_max: lyap,
            dimension: entropy / lyap,
        };
        Self::new(
            MapKind::FullShift { symbols },
            MeasureSpec {
                kind: MeasureKind::Bernoulli { probs },
                seed,
            },
            Some(analytic),
        )
    }

    /// x -> m*x mod 1 on the circle with Lebesgue measure.
    pub fn circle(degree: u32, seed: u64) -> Result<Self> {
        if degree < 2 {
            return Err(Error::Parameter(format!(
                "circle map degree must be at least 2, got {degree}"
            )));
        }
        let lyap = f64::from(degree).ln();
        let analytic = Analytic {
            entropy: lyap,
            lyapunov_min: lyap,
            lyapunov_max: lyap,
            dimension: 1.0,
        };
        Self::new(
            MapKind::CircleExpanding { degree },
            MeasureSpec {
                kind: MeasureKind::Lebesgue,
                seed,
            },
            Some(analytic),
        )
    }

    /// Conformal expanding torus endomorphism, degree m per axis, with
    /// Lebesgue measure and the sup-of-arc-lengths metric.
    pub fn torus(degree: u32, dim: usize, seed: u64) -> Result<Self> {
        if degree < 2 || dim == 0 {
            return Err(Error::Parameter(format!(
                "torus map needs degree >= 2 and dim >= 1, got ({degree},{dim})"
            )));
        }
        let lyap = f64::from(degree).ln();
        let analytic = Analytic {
            entropy: dim as f64 * lyap,
            lyapunov_min: lyap,
            lyapunov_max: lyap,
            dimension: dim as f64,
        };
        Self::new(
            MapKind::TorusConformal { degree, dim },
            MeasureSpec {
                kind: MeasureKind::Lebesgue,
                seed,
            },
            Some(analytic),
        )
    }

    /// Interval map with its natural absolutely continuous invariant measure.
    pub fn interval(map: IntervalMap, seed: u64) -> Result<Self> {
        let (analytic, measure_kind) = match &map {
            IntervalMap::Tent => {
                let l2 = 2.0f64.ln();
                (
                    Some(Analytic {
                        entropy: l2,
                        lyapunov_min: l2,
                        lyapunov_max: l2,
                        dimension: 1.0,
                    }),
                    MeasureKind::Lebesgue,
                )
            }
            IntervalMap::Logistic4 => {
                let l2 = 2.0f64.ln();
                (
                    Some(Analytic {
                        entropy: l2,
                        lyapunov_min: l2,
                        lyapunov_max: l2,
                        dimension: 1.0,
                    }),
                    MeasureKind::AbsolutelyContinuousEmpirical,
                )
            }
            IntervalMap::PiecewiseLinear { slopes } => {
                if slopes.len() < 2 {
                    return Err(Error::Parameter(
                        "piecewise-linear map needs at least 2 branches".into(),
                    ));
                }
                for &s in slopes {
                    if !(s > 1.0) {
                        return Err(Error::Parameter(format!(
                            "piecewise-linear slopes must exceed 1, got {s}"
                        )));
                    }
                }
                let widths: f64 = slopes.iter().map(|s| 1.0 / s).sum();
                if (widths - 1.0).abs() > 1e-9 {
                    return Err(Error::Parameter(format!(
                        "branch widths sum to {widths}, expected 1"
                    )));
                }
                // Lebesgue is invariant; entropy = Lyapunov = sum w_i log s_i.
                let h: f64 = slopes.iter().map(|s| s.ln() / s).sum();
                let lmin = slopes.iter().cloned().fold(f64::INFINITY, f64::min).ln();
                let lmax = slopes.iter().cloned().fold(0.0f64, f64::max).ln();
                (
                    Some(Analytic {
                        entropy: h,
                        lyapunov_min: lmin,
                        lyapunov_max: lmax,
                        dimension: 1.0,
                    }),
                    MeasureKind::Lebesgue,
                )
            }
        };
        Self::new(
            MapKind::Interval { map },
            MeasureSpec {
                kind: measure_kind,
                seed,
            },
            analytic,
        )
    }

    pub fn new(kind: MapKind, measure: MeasureSpec, analytic: Option<Analytic>) -> Result<Self> {
        // Compatibility: Bernoulli only on shifts, geometric measures only on
        // coordinate systems.
        match (&kind, &measure.kind) {
            (MapKind::FullShift { symbols }, MeasureKind::Bernoulli { probs }) => {
                validate_bernoulli(probs, *symbols)?;
            }
            (MapKind::FullShift { .. }, _) => {
                return Err(Error::Incompatible(
                    "full shift requires a Bernoulli measure".into(),
                ))
            }
            (_, MeasureKind::Bernoulli { .. }) => {
                return Err(Error::Incompatible(
                    "Bernoulli measure requires a full shift".into(),
                ))
            }
            _ => {}
        }
        if let Some(a) = &analytic {
            if a.lyapunov_min > 0.0 && Self::kind_is_conformal(&kind) {
                let expected = a.entropy / a.lyapunov_max;
                if (a.dimension - expected).abs() > 1e-12 * (1.0 + expected.abs()) {
                    return Err(Error::Parameter(format!(
                        "analytic dimension {} inconsistent with entropy/lyapunov = {expected}",
                        a.dimension
                    )));
                }
            }
        }
        Ok(Self {
            kind,
            measure,
            analytic,
        })
    }

    fn kind_is_conformal(kind: &MapKind) -> bool {
        matches!(
            kind,
            MapKind::FullShift { .. } | MapKind::CircleExpanding { .. } | MapKind::TorusConformal { .. }
        )
    }

    /// Number of cells in the canonical generating partition.
    pub fn alphabet(&self) -> u16 {
        match &self.kind {
            MapKind::FullShift { symbols } => *symbols,
            MapKind::CircleExpanding { degree } => *degree as u16,
            MapKind::TorusConformal { degree, dim } => (*degree as u64).pow(*dim as u32) as u16,
            MapKind::Interval { map } => match map {
                IntervalMap::Tent | IntervalMap::Logistic4 => 2,
                IntervalMap::PiecewiseLinear { slopes } => slopes.len() as u16,
            },
        }
    }

    fn coord_dim(&self) -> Option<usize> {
        match &self.kind {
            MapKind::FullShift { .. } => None,
            MapKind::CircleExpanding { .. } | MapKind::Interval { .. } => Some(1),
            MapKind::TorusConformal { dim, .. } => Some(*dim),
        }
    }

    fn coord_metric(&self) -> CoordMetric {
        match &self.kind {
            MapKind::Interval { .. } => CoordMetric::Abs,
            _ => CoordMetric::CirclePerAxis,
        }
    }

    fn check_coord(&self, x: &[f64]) -> Result<()> {
        let dim = self.coord_dim().ok_or_else(|| {
            Error::Domain("coordinate point on a symbolic system".into())
        })?;
        if x.len() != dim {
            return Err(Error::Domain(format!(
                "point has {} coordinates, expected {dim}",
                x.len()
            )));
        }
        let closed = matches!(self.kind, MapKind::Interval { .. });
        for &c in x {
            let ok = c.is_finite() && c >= 0.0 && if closed { c <= 1.0 } else { c < 1.0 };
            if !ok {
                return Err(Error::Domain(format!("coordinate {c} outside phase space")));
            }
        }
        Ok(())
    }

    fn apply_coord(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            MapKind::CircleExpanding { degree } => {
                let m = f64::from(*degree);
                out[0] = frac(m * x[0]);
            }
            MapKind::TorusConformal { degree, .. } => {
                let m = f64::from(*degree);
                for (o, &c) in out.iter_mut().zip(x) {
                    *o = frac(m * c);
                }
            }
            MapKind::Interval { map } => {
                out[0] = match map {
                    IntervalMap::Tent => 1.0 - (1.0 - 2.0 * x[0]).abs(),
                    IntervalMap::Logistic4 => 4.0 * x[0] * (1.0 - x[0]),
                    IntervalMap::PiecewiseLinear { slopes } => {
                        let (i, a) = pwl_branch(slopes, x[0]);
                        (slopes[i] * (x[0] - a)).clamp(0.0, 1.0)
                    }
                };
            }
            MapKind::FullShift { .. } => unreachable!("coordinate map on a shift"),
        }
    }

    /// f^n(x); f^0(x) = x.
    pub fn iterate(&self, x: &Point, n: usize) -> Result<Point> {
        match (x, &self.kind) {
            (Point::Symbols(w), MapKind::FullShift { symbols }) => {
                if w.iter().any(|&s| u16::from(s) >= *symbols) {
                    return Err(Error::Domain("symbol outside the shift alphabet".into()));
                }
                if n >= w.len() {
                    return Err(Error::WindowExhausted(format!(
                        "shifting a {}-symbol window by {n}",
                        w.len()
                    )));
                }
                Ok(Point::Symbols(w[n..].to_vec()))
            }
            (Point::Symbols(_), _) => Err(Error::Domain(
                "symbolic point on a coordinate system".into(),
            )),
            (Point::Coords(c), _) => {
                self.check_coord(c)?;
                let mut cur = c.clone();
                let mut next = vec![0.0; cur.len()];
                for _ in 0..n {
                    self.apply_coord(&cur, &mut next);
                    std::mem::swap(&mut cur, &mut next);
                }
                Ok(Point::Coords(cur))
            }
        }
    }

    /// The finite forward orbit of x0, points[j] = f^j(x0).
    pub fn orbit(&self, x0: &Point, len: usize) -> Result<OrbitBuffer> {
        if len < 2 {
            return Err(Error::Parameter("orbit length must be at least 2".into()));
        }
        if len > MAX_ORBIT_LEN {
            return Err(Error::Resource(format!(
                "orbit length {len} exceeds maximum {MAX_ORBIT_LEN}"
            )));
        }
        match (x0, &self.kind) {
            (Point::Symbols(w), MapKind::FullShift { symbols }) => {
                if w.iter().any(|&s| u16::from(s) >= *symbols) {
                    return Err(Error::Domain("symbol outside the shift alphabet".into()));
                }
                OrbitBuffer::from_symbols(w.clone(), len)
            }
            (Point::Symbols(_), _) => Err(Error::Domain(
                "symbolic point on a coordinate system".into(),
            )),
            (Point::Coords(_), MapKind::FullShift { .. }) => Err(Error::Domain(
                "coordinate point on a symbolic system".into(),
            )),
            (Point::Coords(c), MapKind::CircleExpanding { degree }) => {
                self.check_coord(c)?;
                let data = expanding_digit_orbit(c[0], *degree, len, self.measure.seed, 0);
                OrbitBuffer::from_coords(1, CoordMetric::CirclePerAxis, data)
            }
            (Point::Coords(c), MapKind::TorusConformal { degree, dim }) => {
                self.check_coord(c)?;
                let cols: Vec<Vec<f64>> = (0..*dim)
                    .map(|k| {
                        expanding_digit_orbit(c[k], *degree, len, self.measure.seed, k as u64)
                    })
                    .collect();
                let mut data = Vec::with_capacity(dim * len);
                for j in 0..len {
                    for col in &cols {
                        data.push(col[j]);
                    }
                }
                OrbitBuffer::from_coords(*dim, CoordMetric::CirclePerAxis, data)
            }
            (Point::Coords(c), MapKind::Interval { .. }) => {
                self.check_coord(c)?;
                let dim = c.len();
                let mut data = Vec::with_capacity(dim * len);
                data.extend_from_slice(c);
                let mut cur = c.clone();
                let mut next = vec![0.0; dim];
                for _ in 1..len {
                    self.apply_coord(&cur, &mut next);
                    data.extend_from_slice(&next);
                    std::mem::swap(&mut cur, &mut next);
                }
                OrbitBuffer::from_coords(dim, self.coord_metric(), data)
            }
        }
    }

    /// Distance in the system metric.
    pub fn distance(&self, a: &Point, b: &Point) -> Result<f64> {
        match (a, b) {
            (Point::Coords(x), Point::Coords(y)) => {
                self.check_coord(x)?;
                self.check_coord(y)?;
                Ok(orbit::coord_dist(x, y, self.coord_metric()))
            }
            (Point::Symbols(x), Point::Symbols(y)) => {
                let common = x.len().min(y.len());
                for t in 0..common {
                    if x[t] != y[t] {
                        return Ok(0.5f64.powi(t as i32));
                    }
                }
                if x.len() == y.len() {
                    Ok(0.0)
                } else {
                    Err(Error::WindowExhausted(
                        "symbol windows agree over their common length".into(),
                    ))
                }
            }
            _ => Err(Error::Domain("points from different phase spaces".into())),
        }
    }

    /// `count` i.i.d. draws from the invariant measure, deterministic in the
    /// measure seed. Shift samples are symbol windows of length `word_len`.
    pub fn sample_typical(&self, count: usize, word_len: usize) -> Result<Vec<Point>> {
        (0..count)
            .map(|i| self.sample_one(i as u64, word_len))
            .collect()
    }

    fn sample_one(&self, index: u64, word_len: usize) -> Result<Point> {
        let mut rng = stream_rng(self.measure.seed, index);
        match (&self.measure.kind, &self.kind) {
            (MeasureKind::Bernoulli { probs }, MapKind::FullShift { .. }) => {
                if word_len == 0 {
                    return Err(Error::Parameter("shift samples need a positive word length".into()));
                }
                let mut w = Vec::with_capacity(word_len);
                for _ in 0..word_len {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut sym = probs.len() - 1;
                    for (s, &p) in probs.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            sym = s;
                            break;
                        }
                    }
                    w.push(sym as u8);
                }
                Ok(Point::Symbols(w))
            }
            (MeasureKind::Lebesgue, _) => {
                let dim = self.coord_dim().ok_or_else(|| {
                    Error::Incompatible("Lebesgue measure on a symbolic system".into())
                })?;
                Ok(Point::Coords((0..dim).map(|_| rng.random::<f64>()).collect()))
            }
            (MeasureKind::AbsolutelyContinuousEmpirical, _) => {
                let dim = self.coord_dim().ok_or_else(|| {
                    Error::Incompatible("a.c. empirical measure on a symbolic system".into())
                })?;
                let x = Point::Coords((0..dim).map(|_| rng.random::<f64>()).collect());
                self.iterate(&x, ACIM_BURN_IN)
            }
            (MeasureKind::Bernoulli { .. }, _) => Err(Error::Incompatible(
                "Bernoulli measure requires a full shift".into(),
            )),
        }
    }

    /// Canonical-partition cell index of a coordinate point, plus whether it
    /// sits exactly on a cell boundary (coded into the right cell).
    fn partition_index_coord(&self, x: &[f64]) -> (u16, bool) {
        match &self.kind {
            MapKind::CircleExpanding { degree } => {
                let m = f64::from(*degree);
                cell_index(x[0], m)
            }
            MapKind::TorusConformal { degree, .. } => {
                let m = f64::from(*degree);
                let mut idx = 0u64;
                let mut boundary = false;
                for &c in x.iter().rev() {
                    let (i, b) = cell_index(c, m);
                    idx = idx * u64::from(*degree) + u64::from(i);
                    boundary |= b;
                }
                (idx as u16, boundary)
            }
            MapKind::Interval { map } => match map {
                IntervalMap::Tent | IntervalMap::Logistic4 => {
                    let b = x[0] == 0.5;
                    (u16::from(x[0] >= 0.5), b)
                }
                IntervalMap::PiecewiseLinear { slopes } => {
                    let (i, a) = pwl_branch(slopes, x[0]);
                    (i as u16, x[0] == a && i > 0)
                }
            },
            MapKind::FullShift { .. } => unreachable!(),
        }
    }

    /// Itinerary of x under the canonical generating partition: w_j is the
    /// cell index of f^j(x), length `len`.
    pub fn itinerary(&self, x: &Point, len: usize) -> Result<Itinerary> {
        if len == 0 {
            return Err(Error::Parameter("itinerary length must be positive".into()));
        }
        match (x, &self.kind) {
            (Point::Symbols(w), MapKind::FullShift { symbols }) => {
                if w.len() < len {
                    return Err(Error::WindowExhausted(format!(
                        "itinerary of length {len} from a {}-symbol window",
                        w.len()
                    )));
                }
                Ok(Itinerary {
                    word: SymbolicWord::new(w[..len].to_vec(), *symbols)?,
                    boundary_hits: 0,
                })
            }
            (
                Point::Coords(c),
                MapKind::CircleExpanding { .. } | MapKind::TorusConformal { .. },
            ) => {
                // Read cells off the digit-stream orbit: naive coordinate
                // iteration of an expanding map loses a digit of precision
                // per step and the symbols go wrong past ~53 of them.
                self.check_coord(c)?;
                let orb = self.orbit(x, len.max(2))?;
                let OrbitRepr::Coords { dim, data, .. } = &orb.repr else {
                    unreachable!("coordinate orbit has coordinate repr");
                };
                let mut word = Vec::with_capacity(len);
                let mut boundary_hits = 0usize;
                for j in 0..len {
                    let (idx, boundary) =
                        self.partition_index_coord(&data[j * dim..(j + 1) * dim]);
                    word.push(idx as u8);
                    if boundary {
                        boundary_hits += 1;
                    }
                }
                Ok(Itinerary {
                    word: SymbolicWord::new(word, self.alphabet())?,
                    boundary_hits,
                })
            }
            (Point::Coords(c), _) => {
                self.check_coord(c)?;
                let mut cur = c.clone();
                let mut next = vec![0.0; cur.len()];
                let mut word = Vec::with_capacity(len);
                let mut boundary_hits = 0usize;
                for j in 0..len {
                    let (idx, boundary) = self.partition_index_coord(&cur);
                    word.push(idx as u8);
                    if boundary {
                        boundary_hits += 1;
                    }
                    if j + 1 < len {
                        self.apply_coord(&cur, &mut next);
                        std::mem::swap(&mut cur, &mut next);
                    }
                }
                Ok(Itinerary {
                    word: SymbolicWord::new(word, self.alphabet())?,
                    boundary_hits,
                })
            }
            (Point::Symbols(_), _) => Err(Error::Domain(
                "symbolic point on a coordinate system".into(),
            )),
        }
    }

    /// Canonical-partition cell index of the j-th orbit point.
    pub fn cell_of_orbit_point(&self, orb: &OrbitBuffer, j: usize) -> Result<u16> {
        if j >= orb.len() {
            return Err(Error::IndexOutOfRange(format!(
                "orbit index {j} out of 0..{}",
                orb.len()
            )));
        }
        match &orb.repr {
            OrbitRepr::Shift { symbols } => Ok(u16::from(symbols[j])),
            OrbitRepr::Coords { dim, data, .. } => {
                Ok(self.partition_index_coord(&data[j * dim..(j + 1) * dim]).0)
            }
        }
    }

    /// |f'| at the j-th orbit point of a one-dimensional or conformal map.
    /// Returns None at points within 1e-12 of the critical set.
    pub fn derivative_modulus(&self, orb: &OrbitBuffer, j: usize) -> Result<Option<f64>> {
        let x = orb.coord0(j)?;
        match &self.kind {
            MapKind::CircleExpanding { degree } | MapKind::TorusConformal { degree, .. } => {
                Ok(Some(f64::from(*degree)))
            }
            MapKind::Interval { map } => Ok(match map {
                IntervalMap::Tent => {
                    if (x - 0.5).abs() <= 1e-12 {
                        None
                    } else {
                        Some(2.0)
                    }
                }
                IntervalMap::Logistic4 => {
                    if (x - 0.5).abs() <= 1e-12 {
                        None
                    } else {
                        Some((4.0 - 8.0 * x).abs())
                    }
                }
                IntervalMap::PiecewiseLinear { slopes } => {
                    let (i, _) = pwl_branch(slopes, x);
                    Some(slopes[i])
                }
            }),
            MapKind::FullShift { .. } => Err(Error::Domain(
                "derivative of a symbolic system".into(),
            )),
        }
    }
}

/// Forward orbit of t -> m*t (mod 1) generated from the base-m digit
/// expansion of the seed. Naive f64 iteration sheds log2(m) bits of
/// precision per step and drives every dyadic onto the fixed point at 0;
/// instead the 53 bits of x0 supply the leading digits exactly and the
/// expansion is continued by a ChaCha stream keyed on those bits. Each point
/// is read off a sliding integer window of digits, so the result is the
/// exact orbit (rounded per point) of a typical real agreeing with x0 to f64
/// resolution, at full precision for any orbit length.
fn expanding_digit_orbit(x0: f64, degree: u32, len: usize, seed: u64, axis: u64) -> Vec<f64> {
    const FRAC_BITS: u32 = 53;
    const MASK: u64 = (1 << FRAC_BITS) - 1;
    let m = u64::from(degree);
    let lg = f64::from(degree).log2();
    // Digits kept per point; the truncated tail is below one ulp.
    let window = (55.0 / lg).ceil() as usize;
    let mut a = ((x0 * (MASK + 1) as f64) as u64) & MASK;
    // An exactly-zero seed is the fixed point and stays put.
    let mut exact_left = if a == 0 {
        usize::MAX
    } else {
        (f64::from(FRAC_BITS) / lg) as usize
    };
    let mut rng = stream_rng(seed ^ 0x6f_7262_6974, a ^ axis.rotate_left(32));
    let mut next_digit = move || -> u64 {
        if exact_left > 0 {
            exact_left = exact_left.saturating_sub(1);
            let prod = u128::from(a) * u128::from(m);
            a = (prod as u64) & MASK;
            (prod >> FRAC_BITS) as u64
        } else {
            rng.random_range(0..m)
        }
    };
    let modulus = u128::from(m).pow(window as u32 - 1);
    let inv_scale = 1.0 / (modulus * u128::from(m)) as f64;
    let mut v: u128 = 0;
    for _ in 0..window {
        v = v * u128::from(m) + u128::from(next_digit());
    }
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        data.push(v as f64 * inv_scale);
        v = (v % modulus) * u128::from(m) + u128::from(next_digit());
    }
    data
}

fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    // Guard against f == 1.0 after rounding.
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Half-open cell [i/m, (i+1)/m) containing x, and whether x is exactly a
/// cell endpoint other than 0.
fn cell_index(x: f64, m: f64) -> (u16, bool) {
    let scaled = m * x;
    let mut i = scaled.floor();
    if i >= m {
        i = m - 1.0;
    }
    (i as u16, scaled == i && x > 0.0)
}

/// Branch index and left endpoint of the piecewise-linear branch containing x.
fn pwl_branch(slopes: &[f64], x: f64) -> (usize, f64) {
    let mut a = 0.0;
    for (i, &s) in slopes.iter().enumerate() {
        let next = a + 1.0 / s;
        if x < next || i == slopes.len() - 1 {
            return (i, a);
        }
        a = next;
    }
    unreachable!()
}

/// Identifier of the deterministic generator family used by samplers.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Seedable, splittable counter-based generator: one ChaCha8 stream per
/// sample index, derived from the base seed by a SplitMix64 mix so distinct
/// indices get decorrelated streams.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(split_seed(seed, index))
}

/// SplitMix64 finalizer over (seed, index).
pub fn split_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn iterate_circle_examples() {
        let sys = SystemSpec::circle(2, 1).unwrap();
        let y = sys.iterate(&Point::scalar(0.3), 1).unwrap();
        assert_eq!(y, Point::scalar(0.6));
        let y0 = sys.iterate(&Point::scalar(0.3), 0).unwrap();
        assert_eq!(y0, Point::scalar(0.3));
    }

    #[test]
    fn iterate_shift_period_two() {
        let sys = SystemSpec::full_shift(vec![0.5, 0.5], 1).unwrap();
        let w: Vec<u8> = (0..10).map(|i| (i % 2) as u8).collect();
        let y = sys.iterate(&Point::Symbols(w.clone()), 2).unwrap();
        match y {
            Point::Symbols(v) => assert_eq!(v, w[2..].to_vec()),
            _ => panic!("expected symbols"),
        }
    }

    #[test]
    fn orbit_examples() {
        let sys = SystemSpec::circle(3, 1).unwrap();
        let orb = sys.orbit(&Point::scalar(0.1), 3).unwrap();
        let pts: Vec<f64> = (0..3)
            .map(|j| match orb.point(j).unwrap() {
                Point::Coords(c) => c[0],
                _ => unreachable!(),
            })
            .collect();
        assert!(close(pts[0], 0.1, 1e-15));
        assert!(close(pts[1], 0.3, 1e-15));
        assert!(close(pts[2], 0.9, 1e-15));

        // A dyadic seed hugs the fixed point while its 53 bits last, then
        // escapes along a typical continuation instead of freezing at 0.
        let sys2 = SystemSpec::circle(2, 1).unwrap();
        let orb2 = sys2.orbit(&Point::scalar(0.5), 200).unwrap();
        let coord = |j: usize| match orb2.point(j).unwrap() {
            Point::Coords(c) => c[0],
            _ => unreachable!(),
        };
        assert!(coord(1) < 1e-12);
        assert!(coord(2) < 1e-12);
        assert!((60..200).any(|j| coord(j) > 0.01));
    }

    #[test]
    fn long_orbits_keep_resolution() {
        // The naive f64 iteration of the doubling map hits exactly 0 within
        // ~53 steps; the digit-stream orbit must stay equidistributed.
        let sys = SystemSpec::circle(2, 17).unwrap();
        let p = sys.sample_typical(1, 0).unwrap().remove(0);
        let orb = sys.orbit(&p, 100_000).unwrap();
        let mut tiny = 0usize;
        let mut quarter = 0usize;
        for j in 0..orb.len() {
            let Point::Coords(c) = orb.point(j).unwrap() else { unreachable!() };
            if c[0] < 1e-3 {
                tiny += 1;
            }
            if c[0] < 0.25 {
                quarter += 1;
            }
        }
        let tiny_frac = tiny as f64 / 1e5;
        assert!(tiny_frac > 0.0 && tiny_frac < 0.02, "fraction below 1e-3: {tiny_frac}");
        let quarter_frac = quarter as f64 / 1e5;
        assert!((quarter_frac - 0.25).abs() < 0.02, "fraction below 1/4: {quarter_frac}");
    }

    #[test]
    fn itinerary_circle_oracle() {
        // Oracle: index = floor(m * f^j(x)). 0.3 -> 0.6 -> 0.2 gives 0,1,0.
        let sys = SystemSpec::circle(2, 1).unwrap();
        let it = sys.itinerary(&Point::scalar(0.3), 3).unwrap();
        assert_eq!(it.word.symbols(), &[0, 1, 0]);
        assert_eq!(it.boundary_hits, 0);
    }

    #[test]
    fn itinerary_boundary_codes_right() {
        let sys = SystemSpec::circle(2, 1).unwrap();
        let it = sys.itinerary(&Point::scalar(0.5), 1).unwrap();
        assert_eq!(it.word.symbols(), &[1]);
        assert_eq!(it.boundary_hits, 1);
    }

    #[test]
    fn itinerary_shift_is_the_sequence() {
        let sys = SystemSpec::full_shift(vec![0.5, 0.5], 1).unwrap();
        let it = sys
            .itinerary(&Point::Symbols(vec![0, 1, 1, 0, 1]), 3)
            .unwrap();
        assert_eq!(it.word.symbols(), &[0, 1, 1]);
    }

    #[test]
    fn itinerary_conjugacy_with_shift() {
        // Itinerary of f(x) is the left shift of the itinerary of x.
        let sys = SystemSpec::circle(2, 7).unwrap();
        let pts = sys.sample_typical(20, 0).unwrap();
        for p in &pts {
            let it = sys.itinerary(p, 31).unwrap();
            let fp = sys.iterate(p, 1).unwrap();
            let it_f = sys.itinerary(&fp, 30).unwrap();
            assert_eq!(&it.word.symbols()[1..], it_f.word.symbols());
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let sys = SystemSpec::circle(2, 99).unwrap();
        let a = sys.sample_typical(3, 0).unwrap();
        let b = sys.sample_typical(3, 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        for p in &a {
            match p {
                Point::Coords(c) => assert!(c[0] >= 0.0 && c[0] < 1.0),
                _ => panic!(),
            }
        }
    }

    #[test]
    fn degenerate_bernoulli_rejected() {
        assert!(SystemSpec::full_shift(vec![1.0, 0.0], 1).is_err());
        assert!(SystemSpec::full_shift(vec![0.6, 0.6], 1).is_err());
    }

    #[test]
    fn bernoulli_law_of_large_numbers() {
        let sys = SystemSpec::full_shift(vec![0.5, 0.5], 42).unwrap();
        let pts = sys.sample_typical(1, 100_000).unwrap();
        let Point::Symbols(w) = &pts[0] else { panic!() };
        let ones = w.iter().filter(|&&s| s == 1).count() as f64;
        let freq = ones / w.len() as f64;
        assert!(close(freq, 0.5, 0.01), "empirical frequency {freq}");
    }

    #[test]
    fn shift_metric_is_ultrametric() {
        let sys = SystemSpec::full_shift(vec![0.3, 0.7], 5).unwrap();
        let pts = sys.sample_typical(30, 64).unwrap();
        for tri in pts.chunks_exact(3) {
            let d = |a: &Point, b: &Point| sys.distance(a, b).unwrap();
            let (dxz, dxy, dyz) = (d(&tri[0], &tri[2]), d(&tri[0], &tri[1]), d(&tri[1], &tri[2]));
            assert!(dxz <= dxy.max(dyz) + 1e-15);
        }
    }

    #[test]
    fn circle_expansion_sandwich() {
        // lambda = Lambda = m for pairs closer than 1/(2m).
        for m in [2u32, 3, 5] {
            let sys = SystemSpec::circle(m, 3).unwrap();
            let pts = sys.sample_typical(40, 0).unwrap();
            for pair in pts.chunks_exact(2) {
                let d = sys.distance(&pair[0], &pair[1]).unwrap();
                if d >= 1.0 / (2.0 * f64::from(m)) || d == 0.0 {
                    continue;
                }
                let fa = sys.iterate(&pair[0], 1).unwrap();
                let fb = sys.iterate(&pair[1], 1).unwrap();
                let df = sys.distance(&fa, &fb).unwrap();
                assert!(close(df, f64::from(m) * d, 1e-12));
            }
        }
    }

    #[test]
    fn analytic_consistency_checked() {
        let sys = SystemSpec::torus(3, 2, 1).unwrap();
        let a = sys.analytic.unwrap();
        assert!(close(a.entropy, 2.0 * 3.0f64.ln(), 1e-15));
        assert!(close(a.dimension, 2.0, 1e-15));

        let bad = SystemSpec::new(
            MapKind::CircleExpanding { degree: 2 },
            MeasureSpec {
                kind: MeasureKind::Lebesgue,
                seed: 1,
            },
            Some(Analytic {
                entropy: 2.0f64.ln(),
                lyapunov_min: 2.0f64.ln(),
                lyapunov_max: 2.0f64.ln(),
                dimension: 1.5,
            }),
        );
        assert!(bad.is_err());
    }

    #[test]
    fn orbit_points_recompute_under_iterate() {
        let sys = SystemSpec::interval(IntervalMap::Logistic4, 11).unwrap();
        let x0 = sys.sample_typical(1, 0).unwrap().remove(0);
        let orb = sys.orbit(&x0, 50).unwrap();
        for j in [0usize, 7, 23, 49] {
            let direct = sys.iterate(&x0, j).unwrap();
            assert_eq!(orb.point(j).unwrap(), direct);
        }
    }

    #[test]
    fn interval_domain_checks() {
        let sys = SystemSpec::interval(IntervalMap::Tent, 1).unwrap();
        assert!(sys.iterate(&Point::scalar(1.5), 1).is_err());
        assert!(sys.iterate(&Point::scalar(1.0), 1).is_ok());
        let circle = SystemSpec::circle(2, 1).unwrap();
        assert!(circle.iterate(&Point::scalar(1.0), 1).is_err());
    }

    #[test]
    fn piecewise_linear_analytic() {
        let sys = SystemSpec::interval(
            IntervalMap::PiecewiseLinear {
                slopes: vec![2.0, 4.0, 4.0],
            },
            1,
        )
        .unwrap();
        let a = sys.analytic.unwrap();
        let expect = 0.5 * 2.0f64.ln() + 0.5 * 4.0f64.ln();
        assert!(close(a.entropy, expect, 1e-15));
    }
}
