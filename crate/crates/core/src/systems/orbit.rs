use crate::error::{Error, Result};
use crate::systems::Point;

/// Hard cap on orbit length; beyond this the linear-scan kernels stop being
/// desk-scale anyway.
pub const MAX_ORBIT_LEN: usize = 1 << 27;

/// Per-coordinate metric used for orbits stored as real coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoordMetric {
    /// Arc length on R/Z per axis, sup over axes.
    CirclePerAxis,
    /// Absolute value per axis, sup over axes.
    Abs,
}

#[derive(Clone, Debug)]
pub(crate) enum Repr {
    Coords {
        dim: usize,
        metric: CoordMetric,
        /// Row-major: coordinates of f^j(x0) start at j*dim.
        data: Vec<f64>,
    },
    Shift {
        /// One symbol sequence; orbit point j is its suffix starting at j.
        /// Entries beyond `len` are the lookahead window.
        symbols: Vec<u8>,
    },
}

/// A finite forward trajectory of one seed point. Immutable after
/// construction; the substrate for every return-time scan.
#[derive(Clone, Debug)]
pub struct OrbitBuffer {
    pub(crate) repr: Repr,
    len: usize,
}

impl OrbitBuffer {
    pub(crate) fn from_coords(dim: usize, metric: CoordMetric, data: Vec<f64>) -> Result<Self> {
        let len = data.len() / dim;
        if len < 2 {
            return Err(Error::Parameter("orbit length must be at least 2".into()));
        }
        Ok(Self {
            repr: Repr::Coords { dim, metric, data },
            len,
        })
    }

    pub(crate) fn from_symbols(symbols: Vec<u8>, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::Parameter("orbit length must be at least 2".into()));
        }
        if symbols.len() < len {
            return Err(Error::Parameter(format!(
                "symbol sequence of length {} cannot carry an orbit of length {len}",
                symbols.len()
            )));
        }
        Ok(Self {
            repr: Repr::Shift { symbols },
            len,
        })
    }

    /// Orbit length L.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The underlying symbol sequence, including the lookahead window.
    pub fn symbols(&self) -> Option<&[u8]> {
        match &self.repr {
            Repr::Shift { symbols } => Some(symbols),
            Repr::Coords { .. } => None,
        }
    }

    /// The j-th orbit point as an owned `Point`.
    pub fn point(&self, j: usize) -> Result<Point> {
        if j >= self.len {
            return Err(Error::IndexOutOfRange(format!(
                "orbit index {j} out of 0..{}",
                self.len
            )));
        }
        match &self.repr {
            Repr::Coords { dim, data, .. } => {
                Ok(Point::Coords(data[j * dim..(j + 1) * dim].to_vec()))
            }
            Repr::Shift { symbols } => Ok(Point::Symbols(symbols[j..].to_vec())),
        }
    }

    /// The seed point x0.
    pub fn seed_point(&self) -> Point {
        self.point(0).expect("orbit is nonempty")
    }

    /// First coordinate of the j-th point, for coordinate potentials.
    pub(crate) fn coord0(&self, j: usize) -> Result<f64> {
        match &self.repr {
            Repr::Coords { dim, data, .. } => Ok(data[j * dim]),
            Repr::Shift { .. } => Err(Error::Incompatible(
                "coordinate potential on a shift orbit".into(),
            )),
        }
    }

    /// Smallest t >= 0 such that 2^{-t} < eps; the number of leading symbols
    /// two shift points must share to be eps-close.
    pub fn shift_agreement_depth(eps: f64) -> Result<usize> {
        if !(eps > 0.0) {
            return Err(Error::Parameter(format!("radius must be positive, got {eps}")));
        }
        let mut t = 0usize;
        let mut d = 1.0f64;
        while d >= eps {
            d /= 2.0;
            t += 1;
            if t > 64 {
                return Err(Error::Parameter(format!(
                    "radius {eps} below resolvable symbolic scale"
                )));
            }
        }
        Ok(t)
    }

    /// d(points[i], points[j]) < eps, strict. For shift orbits the test is
    /// exact symbol agreement; running out of window symbols before the
    /// comparison is decided is a hard error rather than a silent guess.
    pub fn dist_lt(&self, i: usize, j: usize, eps: f64) -> Result<bool> {
        if i >= self.len || j >= self.len {
            return Err(Error::IndexOutOfRange(format!(
                "orbit indices ({i},{j}) out of 0..{}",
                self.len
            )));
        }
        match &self.repr {
            Repr::Coords { dim, metric, data } => {
                Ok(coord_dist(&data[i * dim..(i + 1) * dim], &data[j * dim..(j + 1) * dim], *metric) < eps)
            }
            Repr::Shift { symbols } => {
                let depth = Self::shift_agreement_depth(eps)?;
                shift_agrees(symbols, i, j, depth)
            }
        }
    }

    /// d(self.points[i], other.points[j]) < eps across two orbits of the
    /// same phase space.
    pub fn cross_dist_lt(&self, i: usize, other: &OrbitBuffer, j: usize, eps: f64) -> Result<bool> {
        if i >= self.len || j >= other.len {
            return Err(Error::IndexOutOfRange(format!(
                "orbit indices ({i},{j}) out of ({},{})",
                self.len, other.len
            )));
        }
        match (&self.repr, &other.repr) {
            (
                Repr::Coords { dim, metric, data },
                Repr::Coords {
                    dim: dim2,
                    metric: metric2,
                    data: data2,
                },
            ) if dim == dim2 && metric == metric2 => Ok(coord_dist(
                &data[i * dim..(i + 1) * dim],
                &data2[j * dim2..(j + 1) * dim2],
                *metric,
            ) < eps),
            (Repr::Shift { symbols }, Repr::Shift { symbols: symbols2 }) => {
                let depth = Self::shift_agreement_depth(eps)?;
                for t in 0..depth {
                    let (a, b) = (i + t, j + t);
                    if a >= symbols.len() || b >= symbols2.len() {
                        return Err(Error::WindowExhausted(
                            "cross-orbit comparison ran out of window".into(),
                        ));
                    }
                    if symbols[a] != symbols2[b] {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            _ => Err(Error::Domain("orbits from different phase spaces".into())),
        }
    }

    /// For a strictly decreasing radius ladder, count orbit points within
    /// each radius of `center`, returning (counts, points scanned). Shift
    /// orbits only scan positions whose window can resolve the smallest
    /// radius.
    pub fn count_within(&self, center: &Point, radii: &[f64]) -> Result<(Vec<u64>, u64)> {
        if radii.is_empty() {
            return Err(Error::Parameter("empty radius ladder".into()));
        }
        if radii.iter().any(|&r| !(r > 0.0)) || radii.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::Parameter(
                "radius ladder must be positive and strictly decreasing".into(),
            ));
        }
        let mut counts = vec![0u64; radii.len()];
        match (&self.repr, center) {
            (Repr::Coords { dim, metric, data }, Point::Coords(c)) => {
                if c.len() != *dim {
                    return Err(Error::Domain("center dimension mismatch".into()));
                }
                for j in 0..self.len {
                    let d = coord_dist(&data[j * dim..(j + 1) * dim], c, *metric);
                    let mut level = 0;
                    while level < radii.len() && d < radii[level] {
                        counts[level] += 1;
                        level += 1;
                    }
                }
                Ok((counts, self.len as u64))
            }
            (Repr::Shift { symbols }, Point::Symbols(w)) => {
                let depths: Vec<usize> = radii
                    .iter()
                    .map(|&r| Self::shift_agreement_depth(r))
                    .collect::<Result<_>>()?;
                let depth_max = *depths.last().unwrap();
                if w.len() < depth_max {
                    return Err(Error::WindowExhausted(format!(
                        "center word of length {} cannot resolve radius {}",
                        w.len(),
                        radii.last().unwrap()
                    )));
                }
                let scan = self.len.min(symbols.len().saturating_sub(depth_max));
                if scan == 0 {
                    return Err(Error::WindowExhausted(
                        "orbit window too short for the smallest radius".into(),
                    ));
                }
                for j in 0..scan {
                    let mut lcp = 0usize;
                    while lcp < depth_max && symbols[j + lcp] == w[lcp] {
                        lcp += 1;
                    }
                    let mut level = 0;
                    while level < radii.len() && depths[level] <= lcp {
                        counts[level] += 1;
                        level += 1;
                    }
                }
                Ok((counts, scan as u64))
            }
            _ => Err(Error::Domain("center from a different phase space".into())),
        }
    }

    /// Exact distance between orbit points; for shift orbits errors out when
    /// the window cannot decide.
    pub fn dist(&self, i: usize, j: usize) -> Result<f64> {
        if i >= self.len || j >= self.len {
            return Err(Error::IndexOutOfRange(format!(
                "orbit indices ({i},{j}) out of 0..{}",
                self.len
            )));
        }
        match &self.repr {
            Repr::Coords { dim, metric, data } => Ok(coord_dist(
                &data[i * dim..(i + 1) * dim],
                &data[j * dim..(j + 1) * dim],
                *metric,
            )),
            Repr::Shift { symbols } => {
                if i == j {
                    return Ok(0.0);
                }
                let avail = symbols.len() - i.max(j);
                for t in 0..avail {
                    if symbols[i + t] != symbols[j + t] {
                        return Ok(0.5f64.powi(t as i32));
                    }
                }
                Err(Error::WindowExhausted(format!(
                    "points {i} and {j} agree over the whole available window"
                )))
            }
        }
    }
}

pub(crate) fn coord_dist(a: &[f64], b: &[f64], metric: CoordMetric) -> f64 {
    let mut d = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let raw = (x - y).abs();
        let axis = match metric {
            CoordMetric::CirclePerAxis => raw.min(1.0 - raw),
            CoordMetric::Abs => raw,
        };
        if axis > d {
            d = axis;
        }
    }
    d
}

/// Do the suffixes at i and j agree on their first `depth` symbols?
/// Errors if the window ends before a mismatch decides the answer.
pub(crate) fn shift_agrees(symbols: &[u8], i: usize, j: usize, depth: usize) -> Result<bool> {
    if i == j {
        return Ok(true);
    }
    for t in 0..depth {
        let (a, b) = (i + t, j + t);
        if a >= symbols.len() || b >= symbols.len() {
            return Err(Error::WindowExhausted(format!(
                "need symbol at index {} but window ends at {}",
                a.max(b),
                symbols.len()
            )));
        }
        if symbols[a] != symbols[b] {
            return Ok(false);
        }
    }
    Ok(true)
}
