//! Raw recurrence observables: dynamical-ball membership, return times
//! R_n(x,eps), minimal return times S_n(x,eps), metric-ball return times,
//! partition return times and cylinder covering counts.

mod cover;
mod grid;
mod period;

pub use cover::{
    cylinder_cover_count, katok_ball_cover, katok_cylinder_count, CoverLemmaParams, TestPartition,
};
pub use grid::{compute_grid, write_grids_csv, ReturnTimeGrid, GRID_CSV_HEADER};
pub use period::{min_return_prefix_profile, min_return_time_symbolic, z_array};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::{OrbitBuffer, SymbolicWord};

/// Depth and radius of a dynamical ball B(x,n,eps).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallParams {
    pub n: usize,
    pub eps: f64,
}

impl BallParams {
    pub fn new(n: usize, eps: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("ball depth must be at least 1".into()));
        }
        if !(eps > 0.0) {
            return Err(Error::Parameter(format!(
                "ball radius must be positive, got {eps}"
            )));
        }
        Ok(Self { n, eps })
    }
}

/// A return-time observation: either a witnessed time or censoring at the
/// scan bound (no return seen while scanning `bound` candidate times).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Obs {
    Observed(u64),
    Censored { bound: u64 },
}

impl Obs {
    pub fn observed(self) -> Option<u64> {
        match self {
            Obs::Observed(v) => Some(v),
            Obs::Censored { .. } => None,
        }
    }

    pub fn is_censored(self) -> bool {
        matches!(self, Obs::Censored { .. })
    }
}

/// Is orbit point j in the dynamical ball of depth n and radius eps around
/// orbit point i? Strict inequality throughout.
pub fn dyn_ball_contains(orb: &OrbitBuffer, i: usize, j: usize, p: &BallParams) -> Result<bool> {
    if i + p.n > orb.len() || j + p.n > orb.len() {
        return Err(Error::IndexOutOfRange(format!(
            "ball of depth {} at indices ({i},{j}) exceeds orbit length {}",
            p.n,
            orb.len()
        )));
    }
    for t in 0..p.n {
        if !orb.dist_lt(i + t, j + t, p.eps)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Length of the longest match of the orbit segment starting at `i` against
/// the segment starting at 0, capped at `n_max`: the largest m such that
/// d(points[i+t], points[t]) < eps for all t < m.
#[inline]
fn match_len_coords(
    data: &[f64],
    dim: usize,
    metric: crate::systems::CoordMetric,
    i: usize,
    eps: f64,
    n_max: usize,
) -> usize {
    use crate::systems::CoordMetric;
    let mut t = 0;
    if dim == 1 {
        // Hot path: scalar systems.
        match metric {
            CoordMetric::CirclePerAxis => {
                while t < n_max {
                    let raw = (data[i + t] - data[t]).abs();
                    if raw.min(1.0 - raw) >= eps {
                        break;
                    }
                    t += 1;
                }
            }
            CoordMetric::Abs => {
                while t < n_max {
                    if (data[i + t] - data[t]).abs() >= eps {
                        break;
                    }
                    t += 1;
                }
            }
        }
        return t;
    }
    while t < n_max {
        let a = &data[(i + t) * dim..(i + t + 1) * dim];
        let b = &data[t * dim..(t + 1) * dim];
        if crate::systems::coord_dist(a, b, metric) >= eps {
            break;
        }
        t += 1;
    }
    t
}

/// One pass over the orbit producing, for every depth in `n_ladder`, the
/// first return time R_n (first i >= 1 whose match length reaches n) and the
/// empirical minimal return S_n (smallest gap between any two ball
/// witnesses). No per-depth rescan; the inner match walk stops at the first
/// mismatch.
pub(crate) fn scan_returns(
    orb: &OrbitBuffer,
    eps: f64,
    n_ladder: &[usize],
) -> Result<(Vec<Obs>, Vec<Obs>)> {
    if n_ladder.is_empty() {
        return Err(Error::Parameter("empty depth ladder".into()));
    }
    if n_ladder[0] == 0 || n_ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter(
            "depth ladder must be strictly increasing and positive".into(),
        ));
    }
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("radius must be positive, got {eps}")));
    }
    let n_max = *n_ladder.last().unwrap();
    let len = orb.len();
    if len <= n_max {
        return Err(Error::IndexOutOfRange(format!(
            "orbit of length {len} cannot resolve depth {n_max}"
        )));
    }
    let bound = len - n_max;

    use crate::systems::OrbitRepr as Repr;
    match &orb.repr {
        Repr::Coords { dim, metric, data } => Ok(scan_impl(bound, n_ladder, |i| {
            match_len_coords(data, *dim, *metric, i, eps, n_max)
        })),
        Repr::Shift { symbols } => {
            let depth = OrbitBuffer::shift_agreement_depth(eps)?;
            if depth == 0 {
                // Radius exceeds the space diameter: every pair matches.
                return Ok(scan_impl(bound, n_ladder, |_| n_max));
            }
            // Agreement on m symbols pairwise over n steps means agreement
            // on n - 1 + m leading symbols.
            let need = len + depth - 1;
            if symbols.len() < need {
                return Err(Error::WindowExhausted(format!(
                    "scan needs {need} symbols, window has {}",
                    symbols.len()
                )));
            }
            let cap = n_max + depth - 1;
            Ok(scan_impl(bound, n_ladder, |i| {
                let mut agree = 0usize;
                while agree < cap && symbols[i + agree] == symbols[agree] {
                    agree += 1;
                }
                if agree >= depth {
                    (agree - depth + 1).min(n_max)
                } else {
                    0
                }
            }))
        }
    }
}

fn scan_impl<F: FnMut(usize) -> usize>(
    bound: usize,
    n_ladder: &[usize],
    mut match_len: F,
) -> (Vec<Obs>, Vec<Obs>) {
    let levels = n_ladder.len();
    let mut r = vec![Obs::Censored { bound: bound as u64 }; levels];
    let mut s = vec![Obs::Censored { bound: bound as u64 }; levels];
    // i = 0 always witnesses every level: d(x,x) = 0.
    let mut last = vec![0u64; levels];
    let mut min_gap = vec![u64::MAX; levels];
    let mut r_next = 0usize; // first ladder level with R still unassigned

    for i in 1..=bound {
        let ml = match_len(i);
        if ml < n_ladder[0] {
            continue;
        }
        while r_next < levels && n_ladder[r_next] <= ml {
            r[r_next] = Obs::Observed(i as u64);
            r_next += 1;
        }
        let mut j = 0;
        while j < levels && n_ladder[j] <= ml {
            let gap = i as u64 - last[j];
            if gap < min_gap[j] {
                min_gap[j] = gap;
            }
            last[j] = i as u64;
            j += 1;
        }
    }
    for j in 0..levels {
        if min_gap[j] != u64::MAX {
            s[j] = Obs::Observed(min_gap[j]);
        }
    }
    (r, s)
}

/// R_n(x, eps) for n = 1..=n_max in one scan.
pub fn return_time_profile(orb: &OrbitBuffer, eps: f64, n_max: usize) -> Result<Vec<Obs>> {
    let ladder: Vec<usize> = (1..=n_max).collect();
    scan_returns(orb, eps, &ladder).map(|(r, _)| r)
}

/// Observable upper bound on S_n(x, eps): the smallest gap between two orbit
/// indices whose dynamical balls coincide with the seed's. The true infimum
/// ranges over the whole ball, so this observes an upper bound only.
pub fn min_return_time_empirical(orb: &OrbitBuffer, p: &BallParams) -> Result<Obs> {
    let (_, s) = scan_returns(orb, p.eps, &[p.n])?;
    Ok(s[0])
}

/// First k >= 1 with d(points[k], points[0]) < r.
pub fn ball_return_time(orb: &OrbitBuffer, r: f64) -> Result<Obs> {
    Ok(ball_return_times(orb, &[r])?.remove(0))
}

/// Metric-ball return times for a decreasing radius ladder, one orbit pass.
pub fn ball_return_times(orb: &OrbitBuffer, radii: &[f64]) -> Result<Vec<Obs>> {
    check_radii(radii)?;
    let len = orb.len();
    let bound = (len - 1) as u64;
    let mut out = vec![Obs::Censored { bound }; radii.len()];
    let mut next = 0usize; // radii sorted decreasing; level fills largest-first
    for k in 1..len {
        while next < radii.len() && orb.dist_lt(k, 0, radii[next])? {
            out[next] = Obs::Observed(k as u64);
            next += 1;
        }
        if next == radii.len() {
            break;
        }
    }
    Ok(out)
}

/// S(B(x,r)) observed along the orbit: smallest gap between two orbit
/// points inside the metric ball around the seed.
pub fn ball_min_return_empirical(orb: &OrbitBuffer, r: f64) -> Result<Obs> {
    Ok(ball_min_returns(orb, &[r])?.remove(0))
}

/// Empirical minimal returns to metric balls for a decreasing radius ladder.
pub fn ball_min_returns(orb: &OrbitBuffer, radii: &[f64]) -> Result<Vec<Obs>> {
    check_radii(radii)?;
    let len = orb.len();
    let bound = (len - 1) as u64;
    let levels = radii.len();
    let mut last = vec![0u64; levels];
    let mut min_gap = vec![u64::MAX; levels];
    for k in 1..len {
        // Nested balls: membership at a smaller radius implies the larger.
        let mut level = 0;
        while level < levels && orb.dist_lt(k, 0, radii[level])? {
            let gap = k as u64 - last[level];
            if gap < min_gap[level] {
                min_gap[level] = gap;
            }
            last[level] = k as u64;
            level += 1;
        }
    }
    Ok(min_gap
        .into_iter()
        .map(|g| {
            if g == u64::MAX {
                Obs::Censored { bound }
            } else {
                Obs::Observed(g)
            }
        })
        .collect())
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::Parameter("empty radius ladder".into()));
    }
    if radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Parameter("radii must be positive".into()));
    }
    if radii.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::Parameter("radius ladder must be strictly decreasing".into()));
    }
    Ok(())
}

/// Return time of an itinerary to its own length-n cylinder: the first
/// k >= 1 with w_{k..k+n-1} = w_{0..n-1}, by a linear-time Z-scan.
pub fn partition_return_time(w: &SymbolicWord, n: usize) -> Result<Obs> {
    let profile = partition_return_profile(w, &[n])?;
    Ok(profile[0])
}

/// Partition return times for several depths in one linear pass.
pub fn partition_return_profile(w: &SymbolicWord, n_ladder: &[usize]) -> Result<Vec<Obs>> {
    if n_ladder.is_empty() || n_ladder[0] == 0 || n_ladder.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::Parameter(
            "depth ladder must be strictly increasing and positive".into(),
        ));
    }
    let n_max = *n_ladder.last().unwrap();
    if w.len() < n_max + 1 {
        return Err(Error::IndexOutOfRange(format!(
            "itinerary of length {} cannot resolve depth {n_max}",
            w.len()
        )));
    }
    let z = z_array(w.symbols());
    let len = w.len();
    let mut out: Vec<Obs> = n_ladder
        .iter()
        .map(|&n| Obs::Censored {
            bound: (len - n) as u64,
        })
        .collect();
    let mut next = 0usize;
    for k in 1..len {
        let reach = z[k].min((len - k) as u32) as usize;
        while next < n_ladder.len() && n_ladder[next] <= reach {
            out[next] = Obs::Observed(k as u64);
            next += 1;
        }
        if next == n_ladder.len() {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{Point, SystemSpec};

    fn shift_orbit(pattern: &[u8], total: usize, len: usize) -> OrbitBuffer {
        let sys = SystemSpec::full_shift(vec![0.5, 0.5], 1).unwrap();
        let w: Vec<u8> = (0..total).map(|i| pattern[i % pattern.len()]).collect();
        sys.orbit(&Point::Symbols(w), len).unwrap()
    }

    #[test]
    fn dyn_ball_contains_examples() {
        let orb = shift_orbit(&[0, 1], 64, 32);
        let p = BallParams::new(5, 0.5).unwrap();
        assert!(dyn_ball_contains(&orb, 3, 3, &p).unwrap());
        assert!(dyn_ball_contains(&orb, 0, 2, &p).unwrap());
        assert!(!dyn_ball_contains(&orb, 0, 1, &p).unwrap());

        // Strictness: d(0.125, 0.25) = 0.125 is not < 0.125. Dyadic points
        // keep the comparison exact on the piecewise-linear doubling branch.
        let sys = SystemSpec::interval(
            crate::systems::IntervalMap::PiecewiseLinear { slopes: vec![2.0, 2.0] },
            1,
        )
        .unwrap();
        let orb2 = sys.orbit(&Point::scalar(0.125), 8).unwrap();
        let p2 = BallParams::new(1, 0.125).unwrap();
        assert!(!dyn_ball_contains(&orb2, 0, 1, &p2).unwrap());
    }

    #[test]
    fn profile_fixed_point_and_periodic() {
        let orb = shift_orbit(&[0], 64, 32);
        let r = return_time_profile(&orb, 0.5, 5).unwrap();
        assert!(r.iter().all(|o| *o == Obs::Observed(1)));

        let orb2 = shift_orbit(&[0, 1], 64, 32);
        let r2 = return_time_profile(&orb2, 0.5, 5).unwrap();
        assert!(r2.iter().all(|o| *o == Obs::Observed(2)));
    }

    #[test]
    fn profile_matches_string_oracle() {
        // R_n at eps = 2^{-m} is the first reoccurrence of the length-(n+m)
        // prefix. Brute-force string scan is the oracle.
        let sys = SystemSpec::full_shift(vec![0.5, 0.5], 77).unwrap();
        let pts = sys.sample_typical(20, 400).unwrap();
        let (n_max, m) = (8usize, 3usize);
        for p in pts {
            let Point::Symbols(w) = &p else { panic!() };
            let orb_len = w.len() - (n_max + m);
            let orb = sys.orbit(&p, orb_len).unwrap();
            let prof = return_time_profile(&orb, 0.5f64.powi(m as i32), n_max).unwrap();
            for n in 1..=n_max {
                let pat = &w[..n + m];
                let mut oracle = None;
                for k in 1..=(orb_len - n_max) {
                    if &w[k..k + n + m] == pat {
                        oracle = Some(k as u64);
                        break;
                    }
                }
                match (oracle, prof[n - 1]) {
                    (Some(k), Obs::Observed(got)) => assert_eq!(k, got),
                    (None, Obs::Censored { .. }) => {}
                    other => panic!("mismatch at n={n}: {other:?}"),
                }
            }
        }
    }

    #[test]
    fn min_return_empirical_examples() {
        let orb = shift_orbit(&[0, 1], 64, 32);
        let p = BallParams::new(6, 0.5).unwrap();
        assert_eq!(min_return_time_empirical(&orb, &p).unwrap(), Obs::Observed(2));

        // eps above the diameter: the ball is the whole space.
        let p_all = BallParams::new(1, 2.0).unwrap();
        assert_eq!(
            min_return_time_empirical(&orb, &p_all).unwrap(),
            Obs::Observed(1)
        );
    }

    #[test]
    fn min_return_empirical_matches_symbolic_oracle() {
        // At eps = 1 (agreement depth 1) with depth n = 4, the seed word 0011
        // in an orbit where only the seed witnesses the ball returns its
        // minimal period.
        let sys = SystemSpec::full_shift(vec![0.5, 0.5], 1).unwrap();
        let mut w = vec![0, 0, 1, 1];
        w.extend_from_slice(&[0, 0, 1, 1]);
        w.extend(std::iter::repeat_n(0u8, 8));
        let orb = sys.orbit(&Point::Symbols(w), 12).unwrap();
        let p = BallParams::new(4, 1.0).unwrap();
        let emp = min_return_time_empirical(&orb, &p).unwrap();
        let word = SymbolicWord::new(vec![0, 0, 1, 1], 2).unwrap();
        assert_eq!(emp, Obs::Observed(min_return_time_symbolic(&word).unwrap() as u64));
    }

    #[test]
    fn ball_return_examples() {
        let sys = SystemSpec::circle(2, 1).unwrap();
        let orb = sys.orbit(&Point::scalar(0.1), 64).unwrap();
        // f(0.1) = 0.2, d(0.2, 0.1) = 0.1 < 0.25.
        assert_eq!(ball_return_time(&orb, 0.25).unwrap(), Obs::Observed(1));
        assert_eq!(ball_return_time(&orb, 2.0).unwrap(), Obs::Observed(1));

        let fix = shift_orbit(&[1], 32, 16);
        assert_eq!(ball_return_time(&fix, 0.01).unwrap(), Obs::Observed(1));
    }

    #[test]
    fn ball_min_return_examples() {
        let per2 = shift_orbit(&[0, 1], 64, 32);
        assert_eq!(
            ball_min_return_empirical(&per2, 0.001).unwrap(),
            Obs::Observed(2)
        );
        let fix = shift_orbit(&[1], 32, 16);
        assert_eq!(ball_min_return_empirical(&fix, 0.5).unwrap(), Obs::Observed(1));
    }

    #[test]
    fn ball_min_return_below_ball_return() {
        let sys = SystemSpec::circle(3, 5).unwrap();
        for p in sys.sample_typical(10, 0).unwrap() {
            let orb = sys.orbit(&p, 3000).unwrap();
            for r in [0.2, 0.1, 0.05] {
                let rt = ball_return_time(&orb, r).unwrap();
                let st = ball_min_return_empirical(&orb, r).unwrap();
                if let (Obs::Observed(rv), Obs::Observed(sv)) = (rt, st) {
                    assert!(sv <= rv);
                }
            }
        }
    }

    #[test]
    fn partition_return_examples() {
        let w = SymbolicWord::binary("01010101010").unwrap();
        assert_eq!(partition_return_time(&w, 3).unwrap(), Obs::Observed(2));

        // Prefix 00 of 0010000: next occurrence starts at index 3.
        let w2 = SymbolicWord::binary("0010000").unwrap();
        assert_eq!(partition_return_time(&w2, 2).unwrap(), Obs::Observed(3));

        let w3 = SymbolicWord::binary("0111111").unwrap();
        assert!(partition_return_time(&w3, 1).unwrap().is_censored());
    }

    #[test]
    fn censored_records_scan_bound() {
        let w = SymbolicWord::binary("0111111").unwrap();
        match partition_return_time(&w, 1).unwrap() {
            Obs::Censored { bound } => assert_eq!(bound, 6),
            _ => panic!(),
        }
        let orb = shift_orbit(&[0, 0, 1, 0, 1, 1, 1, 0], 40, 20);
        let prof = return_time_profile(&orb, 0.5f64.powi(6), 12).unwrap();
        for o in prof {
            if let Obs::Censored { bound } = o {
                assert_eq!(bound, (20 - 12) as u64);
            }
        }
    }

    #[test]
    fn eps_larger_than_diameter_returns_one() {
        let orb = shift_orbit(&[0, 0, 1, 0, 1, 1], 64, 32);
        let prof = return_time_profile(&orb, 2.0, 6).unwrap();
        assert!(prof.iter().all(|o| *o == Obs::Observed(1)));
    }
}
